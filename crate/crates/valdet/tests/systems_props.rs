use std::sync::OnceLock;

use proptest::prelude::*;
use rug::{Float, Rational};
use valdet::arith::{ValidatedComplex, ValidatedReal};
use valdet::systems::{builtin_config, load_system, SystemSpec};

const P: u32 = 256;

fn builtins() -> &'static [SystemSpec] {
    static SYSTEMS: OnceLock<Vec<SystemSpec>> = OnceLock::new();
    SYSTEMS.get_or_init(|| {
        [
            "e2",
            "lanford",
            "doubling",
            "cantor",
            "doubling_eps:0.05",
            "cf_digits:1,2,3",
        ]
        .iter()
        .map(|n| load_system(&builtin_config(n).unwrap()).unwrap())
        .collect()
    })
}

fn fragment_point(sys: &SystemSpec, s: f64) -> ValidatedReal {
    let (a, b) = &sys.real_fragment;
    let x = a.clone() + Rational::from(b - a) * Rational::from_f64(s).unwrap();
    ValidatedReal::from_rational(P, &x)
}

#[test]
fn builtin_images_stay_in_disc() {
    for sys in builtins() {
        let disc = &sys.discs[0];
        for k in 0..64 {
            let z = disc.boundary_point(P, &Rational::from((k, 64)), &Rational::from(1));
            for (i, b) in sys.branches.iter().enumerate() {
                let w = b.eval(&z).unwrap();
                assert!(disc.contains(&w), "{} branch {i} leaves the disc", sys.name);
                assert!(!b.derivative(&z).unwrap().contains_zero());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_inverts_branch(s in 0.0f64..1.0, which in 0usize..6) {
        let sys = &builtins()[which];
        let x = fragment_point(sys, s);
        for b in &sys.branches {
            let y = b.eval_real(&x).unwrap();
            let back = b.forward_real(&y).unwrap();
            prop_assert!(back.inflate(&Float::with_val(P, 1e-60)).contains_interval(&x));
        }
    }

    #[test]
    fn chain_rule_matches_difference_quotient(s in 0.05f64..0.95, which in 0usize..6, i in 0usize..2, j in 0usize..2) {
        let sys = &builtins()[which];
        let (bi, bj) = (&sys.branches[i], &sys.branches[j]);
        let x = fragment_point(sys, s);
        let y = bj.eval_real(&x).unwrap();
        let chain = bi.derivative_real(&y).unwrap().mul(&bj.derivative_real(&x).unwrap());
        // central difference of the composition with h = 2^-80
        let h = ValidatedReal::one(P).mul_2exp(-80);
        let comp = |t: &ValidatedReal| bi.eval_real(&bj.eval_real(t).unwrap()).unwrap();
        let dq = comp(&x.add(&h)).sub(&comp(&x.sub(&h))).div(&h.mul_2exp(1)).unwrap();
        prop_assert!((dq.mid_f64() - chain.mid_f64()).abs() < 1e-20, "{} vs {}", dq.mid_f64(), chain.mid_f64());
    }

    #[test]
    fn complex_and_real_branches_agree(s in 0.0f64..1.0, which in 0usize..6) {
        let sys = &builtins()[which];
        let x = fragment_point(sys, s);
        for b in &sys.branches {
            let zr = b.eval(&ValidatedComplex::real(x.clone())).unwrap();
            prop_assert!(zr.re.overlaps(&b.eval_real(&x).unwrap()));
            prop_assert!(zr.im.contains_f64(0.0) || zr.im.mag() < 1e-60);
        }
    }
}
