//! Periodic points of `f_c(z) = z² + c` for small `|c|`.
//!
//! Cycles are labelled by binary Lyndon words `p` of length `d`, whose value
//! `θ = p / (2^d − 1)` is the external angle of one cycle point. Seeds come
//! from backward iteration along the angle-doubling orbit, followed by Newton
//! polishing and a complex Krawczyk certificate per cycle. Completeness for
//! each period is proved by pairwise disjointness of all enclosures: together
//! with the attracting fixed point this exhibits `2ⁿ` distinct roots of the
//! degree-`2ⁿ` polynomial `f_cⁿ(z) − z`.

use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Float, Rational};

use super::{OrbitSource, OrbitTerm, PeriodicError, TraceConvention, Word};
use crate::arith::{ValidatedComplex, ValidatedReal};

#[derive(Clone, Debug)]
pub struct JuliaCycle {
    pub word: Word,
    pub point: ValidatedComplex,
    /// Enclosures of the whole cycle `z, f(z), …, f^{d−1}(z)`.
    pub orbit: Vec<ValidatedComplex>,
    /// Multiplier `(f^d)'(z) = Π 2 f^j(z)`.
    pub multiplier: ValidatedComplex,
}

/// Repelling cycles of `f_c` up to a maximal period.
#[derive(Clone, Debug)]
pub struct JuliaTable {
    pub c: (Rational, Rational),
    pub max_period: usize,
    pub cycles: Vec<Vec<JuliaCycle>>,
    pub attracting: ValidatedComplex,
    pub precision: u32,
}

fn cval(prec: u32, c: &(Rational, Rational)) -> ValidatedComplex {
    ValidatedComplex::new(
        ValidatedReal::from_rational(prec, &c.0),
        ValidatedReal::from_rational(prec, &c.1),
    )
}

fn point(z: (Float, Float)) -> ValidatedComplex {
    ValidatedComplex::new(ValidatedReal::point(z.0), ValidatedReal::point(z.1))
}

/// `(f^d(z), (f^d)'(z))` in interval arithmetic, with the intermediate orbit.
fn iterate(z: &ValidatedComplex, c: &ValidatedComplex, d: usize) -> (Vec<ValidatedComplex>, ValidatedComplex) {
    let mut orbit = Vec::with_capacity(d + 1);
    let mut w = z.clone();
    let mut der = ValidatedComplex::one(z.precision());
    orbit.push(w.clone());
    let two = ValidatedReal::from_int(z.precision(), 2);
    for _ in 0..d {
        der = der.mul(&w.scale(&two));
        w = w.sqr().add(c);
        orbit.push(w.clone());
    }
    (orbit, der)
}

/// Binary Lyndon words of length `1..=n`, lexicographic.
fn binary_lyndon(n_max: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut w: Vec<u16> = vec![0];
    loop {
        out.push(Word(w.clone()));
        let m = w.len();
        while w.len() < n_max {
            let c = w[w.len() - m];
            w.push(c);
        }
        while w.last() == Some(&1) {
            w.pop();
        }
        match w.last_mut() {
            None => break,
            Some(l) => *l = 1,
        }
    }
    out
}

fn seed(word: &Word, c: Complex64) -> Complex64 {
    let d = word.len();
    let m: u64 = (1u64 << d) - 1;
    let v = word.0.iter().fold(0u64, |a, &b| (a << 1) | b as u64) % m.max(1);
    // angles of the cycle points: 2^j v / m
    let angles: Vec<f64> = (0..d)
        .map(|j| (((v as u128) << j) % m.max(1) as u128) as f64 / m as f64)
        .collect();
    let target: Vec<Complex64> = angles
        .iter()
        .map(|a| Complex64::from_polar(1.0, std::f64::consts::TAU * a))
        .collect();
    let mut z = target.clone();
    for _ in 0..80 {
        for j in (0..d).rev() {
            let next = z[(j + 1) % d];
            let s = (next - c).sqrt();
            z[j] = if (s - target[j]).norm() <= (-s - target[j]).norm() {
                s
            } else {
                -s
            };
        }
    }
    z[0]
}

/// Newton from `z`, then a Krawczyk certificate for a unique root of
/// `f^d(z) − z` near the limit. Returns the box and its orbit data.
fn certify(
    z: (Float, Float),
    cv: &ValidatedComplex,
    d: usize,
    prec: u32,
) -> Option<(ValidatedComplex, Vec<ValidatedComplex>, ValidatedComplex)> {
    let mut z = z;
    let one = ValidatedComplex::one(prec);
    let tol = Float::with_val(prec, Float::i_exp(1, 8 - prec as i32));
    let mut converged = false;
    let mut last = Float::with_val(prec, 1);
    for _ in 0..(prec as usize / 4 + 16) {
        let zp = point(z.clone());
        let (orb, der) = iterate(&zp, cv, d);
        let f = orb[d].sub(&zp);
        let step = f.div(&der.sub(&one)).ok()?;
        let (sr, si) = step.mid();
        z.0 -= &sr;
        z.1 -= &si;
        last = Float::with_val(prec, sr.abs_ref()).max(&Float::with_val(prec, si.abs_ref()));
        if !last.is_finite() {
            return None;
        }
        if last <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    // K(X) = m − Y F(m) + (1 − Y F'(X))(X − m) ⊂ int X
    let m = point(z);
    let (orb, der) = iterate(&m, cv, d);
    let fm = orb[d].sub(&m);
    let y = point(one.div(&der.sub(&one)).ok()?.mid());
    let mut r = Float::with_val(prec, &last * 16u32) + Float::with_val(prec, Float::i_exp(1, 24 - prec as i32));
    for _ in 0..10 {
        let xbox = m.inflate(&r);
        let (_, dx) = iterate(&xbox, cv, d);
        let k = m
            .sub(&y.mul(&fm))
            .add(&one.sub(&y.mul(&dx.sub(&one))).mul(&xbox.sub(&m)));
        if xbox.strictly_contains(&k) {
            let (mut orbit, multiplier) = iterate(&k, cv, d);
            orbit.truncate(d);
            return Some((k, orbit, multiplier));
        }
        r *= 8u32;
    }
    None
}

fn solve_cycle(word: &Word, c: &(Rational, Rational), prec: u32) -> Result<JuliaCycle, PeriodicError> {
    let s = seed(word, Complex64::new(c.0.to_f64(), c.1.to_f64()));
    let z = (Float::with_val(prec, s.re), Float::with_val(prec, s.im));
    let (point, orbit, multiplier) =
        certify(z, &cval(prec, c), word.len(), prec).ok_or_else(|| PeriodicError::NoConvergence(word.clone()))?;
    Ok(JuliaCycle {
        word: word.clone(),
        point,
        orbit,
        multiplier,
    })
}

/// Attracting fixed point near `(1 − √(1 − 4c))/2`.
fn attracting_point(c: &(Rational, Rational), prec: u32) -> Result<ValidatedComplex, PeriodicError> {
    let cc = Complex64::new(c.0.to_f64(), c.1.to_f64());
    let z0 = (1.0 - (1.0 - 4.0 * cc).sqrt()) / 2.0;
    let z = (Float::with_val(prec, z0.re), Float::with_val(prec, z0.im));
    certify(z, &cval(prec, c), 1, prec)
        .map(|(b, _, _)| b)
        .ok_or(PeriodicError::NoConvergence(Word(vec![])))
}

fn boxes_disjoint(all: &mut [(Float, Float, Float, Float)]) -> bool {
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if all[j].0 > all[i].1 {
                break;
            }
            let (a, b) = (&all[i], &all[j]);
            if !(a.3 < b.2 || b.3 < a.2) {
                return false;
            }
        }
    }
    true
}

/// Enumerates and certifies all periodic points of periods `1..=n_max`.
pub fn julia_table(c: &(Rational, Rational), n_max: usize, prec: u32) -> Result<JuliaTable, PeriodicError> {
    let words: Vec<Word> = binary_lyndon(n_max)
        .into_iter()
        // (1) is the same fixed point as (0): angle 1 ≡ 0
        .filter(|w| w.0 != [1])
        .collect();
    let solved: Vec<Result<JuliaCycle, PeriodicError>> =
        words.par_iter().map(|w| solve_cycle(w, c, prec)).collect();
    let attracting = attracting_point(c, prec)?;
    let mut cycles = vec![Vec::new(); n_max];
    let mut failed = vec![0usize; n_max];
    for (w, s) in words.iter().zip(solved) {
        match s {
            Ok(cy) => cycles[w.len() - 1].push(cy),
            Err(_) => failed[w.len() - 1] += w.len(),
        }
    }
    // completeness per period: distinct enclosures of the 2^n roots
    for n in 1..=n_max {
        let mut boxes = vec![(
            attracting.re.lo().clone(),
            attracting.re.hi().clone(),
            attracting.im.lo().clone(),
            attracting.im.hi().clone(),
        )];
        for d in (1..=n).filter(|d| n % d == 0) {
            for cy in &cycles[d - 1] {
                for p in &cy.orbit {
                    boxes.push((p.re.lo().clone(), p.re.hi().clone(), p.im.lo().clone(), p.im.hi().clone()));
                }
            }
        }
        let expected = 1usize << n;
        if boxes.len() != expected || !boxes_disjoint(&mut boxes) {
            return Err(PeriodicError::RootEnumerationIncomplete {
                period: n,
                found: boxes.len(),
                expected,
            });
        }
    }
    Ok(JuliaTable {
        c: c.clone(),
        max_period: n_max,
        cycles,
        attracting,
        precision: prec,
    })
}

impl OrbitSource for JuliaTable {
    fn max_period(&self) -> usize {
        self.max_period
    }

    fn precision(&self) -> u32 {
        self.precision
    }

    fn convention(&self) -> TraceConvention {
        TraceConvention::CircleGeometric
    }

    /// Weight `|Λ|^{-s}` enters through `log|λ| = −k log|Λ_p|`; the
    /// denominator of the two-real-dimensional trace is `|1 − 1/Λ|²`.
    fn terms(&self, n: usize) -> Vec<OrbitTerm> {
        let p = self.precision;
        let mut out = Vec::new();
        for d in (1..=n).filter(|d| n % d == 0) {
            let k = n / d;
            for cy in &self.cycles[d - 1] {
                let la = cy.multiplier.abs().log().unwrap().mul_int(k as i64).neg();
                let inv = ValidatedComplex::one(p).div(&cy.multiplier).unwrap();
                let mut lk = ValidatedComplex::one(p);
                for _ in 0..k {
                    lk = lk.mul(&inv);
                }
                out.push(OrbitTerm {
                    multiplicity: d as u32,
                    log_abs: la,
                    denom: ValidatedComplex::one(p).sub(&lk).norm_sqr(),
                    birkhoff: None,
                });
            }
        }
        out
    }

    fn eps1(&self) -> ValidatedReal {
        let mut m = Float::with_val(self.precision, 0);
        for cy in self.cycles.iter().flatten() {
            let w = cy.multiplier.width();
            if w > m {
                m = w;
            }
        }
        ValidatedReal::point(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_multipliers() {
        let t = julia_table(&(Rational::new(), Rational::new()), 6, 128).unwrap();
        for cy in t.cycles.iter().flatten() {
            let m = cy.multiplier.abs();
            assert!(m.contains_f64((1u64 << cy.word.len()) as f64), "{}", cy.word);
        }
        // 2^6 − 1 repelling points of period dividing 6
        let n: usize = t.terms(6).iter().map(|t| t.multiplicity as usize).sum();
        assert_eq!(n, 63);
    }

    #[test]
    fn small_c_complete() {
        let c = (Rational::from((1, 10)), Rational::from((1, 50)));
        let t = julia_table(&c, 8, 128).unwrap();
        assert_eq!(t.cycles[7].len(), 30);
        assert!(t.attracting.mag() < 0.2);
    }
}
