use proptest::prelude::*;
use rug::Float;
use valdet::arith::{ValidatedComplex, ValidatedReal};

fn iv(prec: u32, a: f64, b: f64) -> ValidatedReal {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    ValidatedReal::new(Float::with_val(prec, lo), Float::with_val(prec, hi))
}

fn binary_ops() -> Vec<(&'static str, fn(&ValidatedReal, &ValidatedReal) -> Option<ValidatedReal>)> {
    vec![
        ("add", |a, b| Some(a.add(b))),
        ("sub", |a, b| Some(a.sub(b))),
        ("mul", |a, b| Some(a.mul(b))),
        ("div", |a, b| a.div(b).ok()),
        ("pow", |a, b| a.pow_real(b).ok()),
    ]
}

fn unary_ops() -> Vec<(&'static str, fn(&ValidatedReal) -> Option<ValidatedReal>)> {
    vec![
        ("exp", |a| Some(a.exp())),
        ("log", |a| a.log().ok()),
        ("sqrt", |a| a.sqrt().ok()),
        ("sin", |a| Some(a.sin())),
        ("cos", |a| Some(a.cos())),
        ("atan", |a| Some(a.atan())),
        ("sqr", |a| Some(a.sqr())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inclusion_monotone(a in -5.0f64..5.0, da in 0.0f64..1.0, b in -5.0f64..5.0, db in 0.0f64..1.0,
                          s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let p = 128;
        let outer_a = iv(p, a, a + da);
        let outer_b = iv(p, b, b + db);
        let inner_a = iv(p, a + s * da * 0.5, a + da * (0.5 + 0.5 * s));
        let inner_b = iv(p, b + t * db * 0.5, b + db * (0.5 + 0.5 * t));
        for (name, op) in binary_ops() {
            if let (Some(o), Some(i)) = (op(&outer_a, &outer_b), op(&inner_a, &inner_b)) {
                prop_assert!(o.contains_interval(&i), "{name}: {o:?} ⊉ {i:?}");
            }
        }
        for (name, op) in unary_ops() {
            if let (Some(o), Some(i)) = (op(&outer_a), op(&inner_a)) {
                prop_assert!(o.contains_interval(&i), "{name}: {o:?} ⊉ {i:?}");
            }
        }
    }

    #[test]
    fn low_precision_contains_high(a in -20.0f64..20.0, b in -20.0f64..20.0) {
        for (name, op) in binary_ops() {
            let lo = op(&iv(64, a, a), &iv(64, b, b));
            let hi = op(&iv(256, a, a), &iv(256, b, b));
            if let (Some(l), Some(h)) = (lo, hi) {
                prop_assert!(l.contains_interval(&h), "{name}");
            }
        }
        for (name, op) in unary_ops() {
            if let (Some(l), Some(h)) = (op(&iv(64, a, a)), op(&iv(256, a, a))) {
                prop_assert!(l.contains_interval(&h), "{name}");
            }
        }
    }

    #[test]
    fn width_shrinks_with_precision(a in 0.1f64..10.0, b in 0.1f64..3.0) {
        let widths: Vec<f64> = [64u32, 128, 256]
            .iter()
            .map(|&p| {
                let x = ValidatedReal::from_f64(p, a).div(&ValidatedReal::from_int(p, 3)).unwrap();
                x.pow_real(&ValidatedReal::from_f64(p, b)).unwrap().width().to_f64()
                    / a.powf(b).max(1e-300)
            })
            .collect();
        prop_assert!(widths[0] < 1e-16);
        prop_assert!(widths[1] <= widths[0] * 2f64.powi(-60) + 1e-300);
        prop_assert!(widths[2] <= widths[1] * 2f64.powi(-120) + 1e-300);
    }

    #[test]
    fn complex_mul_contains_points(ar in -3.0f64..3.0, ai in -3.0f64..3.0, br in -3.0f64..3.0, bi in -3.0f64..3.0) {
        let a = ValidatedComplex::from_f64(128, ar, ai);
        let b = ValidatedComplex::from_f64(128, br, bi);
        let prod = a.mul(&b);
        let hi = ValidatedComplex::from_f64(512, ar, ai).mul(&ValidatedComplex::from_f64(512, br, bi));
        prop_assert!(prod.contains(&hi));
        if b.norm_sqr().is_positive() {
            let q = prod.div(&b).unwrap();
            prop_assert!(q.contains(&a));
        }
    }
}
