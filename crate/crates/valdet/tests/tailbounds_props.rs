use proptest::prelude::*;
use rug::Rational;
use valdet::arith::ValidatedReal;
use valdet::determinant::{build_series, WeightPlan};
use valdet::periodic::build_primitive_table;
use valdet::systems::load_system;
use valdet::tailbounds::{
    build_certificate, coefficient_bound, elementary_symmetric, euler_bound, t_sequence, ParamBox,
};

const P: u32 = 192;

fn vr(x: f64) -> ValidatedReal {
    ValidatedReal::from_f64(P, x)
}

fn cantor_coefficient(t: f64, n: usize) -> f64 {
    let x = 2.0 * 3f64.powf(-t);
    let q: f64 = 1.0 / 3.0;
    let prod: f64 = (1..=n).map(|i| 1.0 - q.powi(i as i32)).product();
    (-x).powi(n as i32) * q.powi((n * (n - 1) / 2) as i32) / prod
}

#[test]
fn cantor_bounds_dominate_exact_coefficients() {
    let sys = load_system("system=cantor").unwrap();
    for t in [0.3, 0.6309, 1.0] {
        let plan = WeightPlan::dimension(vr(t));
        let cert = build_certificate(&sys, &plan, &ParamBox::real(vr(t)), None, 4, 48, P).unwrap();
        for n in 5..=48 {
            let b = coefficient_bound(&cert, n);
            assert!(b.hi().to_f64() >= cantor_coefficient(t, n).abs(), "t = {t}, n = {n}");
        }
        assert!(cert.gamma_max().is_finite());
    }
}

#[test]
fn lanford_bounds_dominate_computed_coefficients() {
    let sys = load_system("system=lanford").unwrap();
    let plan = WeightPlan::mixing(P);
    let table = build_primitive_table(&sys, 12, P, None).unwrap();
    let series = build_series(&table, &plan, 12).unwrap();
    let cert = build_certificate(&sys, &plan, &ParamBox::real(plan.base_t.clone()), None, 6, 64, P).unwrap();
    for n in 7..=12 {
        assert!(coefficient_bound(&cert, n).hi() >= &series.a[n - 1].mag(), "n = {n}");
    }
}

#[test]
fn parameter_box_bounds_cover_interior_points() {
    let sys = load_system("system=cantor").unwrap();
    let t0 = 0.63;
    let h = Rational::from((1, 16));
    let plan = WeightPlan::dimension(vr(t0));
    let cert = build_certificate(&sys, &plan, &ParamBox::around(vr(t0), h), None, 4, 40, P).unwrap();
    for s in [-0.0625, -0.03, 0.0, 0.05, 0.0625] {
        for n in 5..=20 {
            assert!(coefficient_bound(&cert, n).hi().to_f64() >= cantor_coefficient(t0 + s, n).abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_functions_match_subset_sums(ts in prop::collection::vec(0.0f64..2.0, 1..9)) {
        let l = ts.len();
        let seq: Vec<ValidatedReal> = ts.iter().map(|&t| vr(t)).collect();
        let (b, eps4) = elementary_symmetric(&seq, l);
        let mut brute = vec![0.0f64; l + 1];
        for mask in 0u32..(1 << l) {
            let prod: f64 = (0..l).filter(|i| mask >> i & 1 == 1).map(|i| ts[i]).product();
            brute[mask.count_ones() as usize] += prod;
        }
        for k in 0..=l {
            prop_assert!((b[k].mid_f64() - brute[k]).abs() <= 1e-12 * brute[k].max(1.0));
        }
        prop_assert!(eps4.hi().to_f64() < 1e-40);
    }

    #[test]
    fn symmetric_functions_below_euler_bound(c in 0.1f64..3.0, r in 0.05f64..0.9, l in 2usize..30) {
        // with t_m = C r^m the sums are dominated termwise
        let seq: Vec<ValidatedReal> = (1..=l).map(|m| vr(c).mul(&vr(r).powi(m as i32).unwrap())).collect();
        let (b, _) = elementary_symmetric(&seq, l);
        for (k, bk) in b.iter().enumerate().skip(1) {
            prop_assert!(bk.hi() <= euler_bound(&vr(c), &vr(r), k).hi());
        }
    }

    #[test]
    fn t_sequence_is_nonincreasing(
        beta in prop::collection::vec(0.0f64..1.0, 4..24),
        eps2 in 0.0f64..1e-3,
        eps3 in 0.0f64..1e-6,
    ) {
        let l = beta.len();
        let bv: Vec<ValidatedReal> = beta.iter().map(|&b| vr(b)).collect();
        let t = t_sequence(&bv, &vr(eps2), &vr(eps3), &vr(0.5), &vr(1.0), l, l + 8);
        prop_assert_eq!(t.len(), l + 8);
        for m in 1..l {
            prop_assert!(t[m].lo() <= t[m - 1].hi());
        }
        for m in l + 1..l + 8 {
            prop_assert!(t[m].hi() <= t[m - 1].hi());
        }
    }
}
