//! Periodic orbits as verified fixed points of branch compositions.
//!
//! Two representations are provided. [`OrbitTable`] stores one record per
//! admissible word, exactly as the word-indexed trace sums read them.
//! [`PrimitiveTable`] stores one orbit per rotation class (Lyndon word) and
//! expands repetitions on demand; the pipelines use it since it solves about
//! `1/n` as many fixed points.

mod cache;
pub mod julia;

use std::fmt;

use rayon::prelude::*;
use rug::{Float, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{ValidatedComplex, ValidatedReal};
use crate::systems::{SystemError, SystemSpec};

pub use julia::{julia_table, JuliaTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeriodicError {
    #[error("fixed point iteration did not converge for word {0}")]
    NoConvergence(Word),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("periodic point enumeration incomplete at period {period}: found {found}, expected {expected}")]
    RootEnumerationIncomplete {
        period: usize,
        found: usize,
        expected: usize,
    },
}

/// A finite sequence of branch indices (0-based internally, printed 1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word repeated `k` times.
    pub fn power(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }

    /// Letters as 1-based indices, matching the usual `(i_1, …, i_n)` notation.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&l| l as usize + 1).collect()
    }

    fn is_constant(&self, letter: u16) -> bool {
        self.0.iter().all(|&l| l == letter)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Which words enter the trace sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceConvention {
    /// Every admissible word contributes.
    Word,
    /// Circle lifts: the all-last-letter word duplicates the all-first one
    /// (`0 ≡ 1`) and is skipped.
    CircleGeometric,
}

impl TraceConvention {
    pub fn for_system(sys: &SystemSpec) -> Self {
        if sys.circle || sys.is_julia() {
            TraceConvention::CircleGeometric
        } else {
            TraceConvention::Word
        }
    }

    fn skips(&self, w: &Word, k: usize) -> bool {
        *self == TraceConvention::CircleGeometric && w.is_constant(k as u16 - 1)
    }
}

/// Real observable `g(x) = Σ c_k x^k` for Birkhoff sums along orbits.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable(pub Vec<Rational>);

impl Observable {
    pub fn constant(c: Rational) -> Self {
        Observable(vec![c])
    }

    pub fn identity() -> Self {
        Observable(vec![Rational::new(), Rational::from(1)])
    }

    pub fn eval(&self, x: &ValidatedReal) -> ValidatedReal {
        let p = x.precision();
        let mut acc = ValidatedReal::zero(p);
        for c in self.0.iter().rev() {
            acc = acc.mul(x).add(&ValidatedReal::from_rational(p, c));
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }
}

/// One periodic orbit: the fixed point of `ψ_{i_1} ∘ ⋯ ∘ ψ_{i_n}`.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub word: Word,
    pub fixed_point: ValidatedComplex,
    /// `(ψ_w)'` at the fixed point, i.e. `1/(Tⁿ)'`.
    pub orbit_derivative: ValidatedComplex,
    /// `log|T'|` at each orbit point, when requested.
    pub orbit_log_weights: Option<Vec<ValidatedReal>>,
}

/// One rotation class of periodic words, solved once.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveOrbit {
    pub word: Word,
    pub point: ValidatedReal,
    /// Composed contraction derivative `λ = (ψ_w)'(x_w)`, signed.
    pub lambda: ValidatedReal,
    /// Birkhoff sum of the observable over the orbit.
    pub birkhoff: Option<ValidatedReal>,
}

/// Everything a trace term needs from one periodic word.
#[derive(Clone, Debug)]
pub struct OrbitTerm {
    pub multiplicity: u32,
    /// `log|λ|` of the word's composed contraction derivative.
    pub log_abs: ValidatedReal,
    /// Denominator `1 − λ` (or `|1 − λ|²` for two-real-dimensional orbits).
    pub denom: ValidatedReal,
    pub birkhoff: Option<ValidatedReal>,
}

/// Source of per-period trace terms in a fixed summation order.
pub trait OrbitSource: Sync {
    fn max_period(&self) -> usize;
    fn precision(&self) -> u32;
    fn convention(&self) -> TraceConvention;
    fn terms(&self, n: usize) -> Vec<OrbitTerm>;
    /// Largest enclosure width entering any term.
    fn eps1(&self) -> ValidatedReal;
}

/// All admissible words of length `n` in lexicographic order.
pub fn enumerate_words(system: &SystemSpec, n: usize) -> Vec<Word> {
    let k = system.branch_count();
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    fn rec(sys: &SystemSpec, k: usize, pos: usize, cur: &mut Vec<u16>, out: &mut Vec<Word>) {
        let n = cur.len();
        if pos == n {
            if sys.admissible(cur[n - 1] as usize, cur[0] as usize) {
                out.push(Word(cur.clone()));
            }
            return;
        }
        for l in 0..k {
            if pos > 0 && !sys.admissible(cur[pos - 1] as usize, l) {
                continue;
            }
            cur[pos] = l as u16;
            rec(sys, k, pos + 1, cur, out);
        }
    }
    if n > 0 {
        rec(system, k, 0, &mut cur, &mut out);
    }
    out
}

/// Lyndon words of length `1..=n_max` over `k` letters, lexicographic order
/// (Duval's algorithm), restricted to cyclically admissible ones.
pub fn lyndon_words(system: &SystemSpec, n_max: usize) -> Vec<Word> {
    let k = system.branch_count() as u16;
    let mut out = Vec::new();
    if n_max == 0 || k == 0 {
        return out;
    }
    let mut w: Vec<u16> = vec![0];
    loop {
        let cyc_ok = w
            .iter()
            .zip(w.iter().cycle().skip(1))
            .all(|(&a, &b)| system.admissible(a as usize, b as usize));
        if cyc_ok {
            out.push(Word(w.clone()));
        }
        let m = w.len();
        while w.len() < n_max {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == k - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            None => break,
            Some(l) => *l += 1,
        }
    }
    out
}

fn rat(prec: u32, r: &Rational) -> Float {
    Float::with_val(prec, r)
}

/// Composition `ψ_w` and its derivative at a point, non-rigorously.
fn compose_point(sys: &SystemSpec, w: &Word, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut y = x.clone();
    let mut d = Float::with_val(p, 1);
    for &l in w.0.iter().rev() {
        let (v, dv) = sys.branches[l as usize].eval_point(&y);
        d *= dv;
        y = v;
    }
    (y, d)
}

/// Interval orbit of `X` under the word: the points `p_n = X`, `p_{j-1} =
/// ψ_{w_j}(p_j)`, together with the enclosure of `(ψ_w)'` over `X`.
fn compose_interval(
    sys: &SystemSpec,
    w: &Word,
    x: &ValidatedReal,
) -> Result<(Vec<ValidatedReal>, ValidatedReal), SystemError> {
    let mut pts = Vec::with_capacity(w.len() + 1);
    let mut y = x.clone();
    let mut d = ValidatedReal::one(x.precision());
    pts.push(y.clone());
    for &l in w.0.iter().rev() {
        let b = &sys.branches[l as usize];
        d = d.mul(&b.derivative_real(&y)?);
        y = b.eval_real(&y)?;
        pts.push(y.clone());
    }
    Ok((pts, d))
}

/// Newton-iteration budget: enough to gain `prec` bits from a contraction
/// of ratio at worst one half per step, plus slack.
fn budget(prec: u32) -> usize {
    (prec as usize) / 4 + 16
}

/// Verified fixed point of the word's composition, with orbit derivative and
/// optional Birkhoff sum.
pub fn solve_orbit(
    sys: &SystemSpec,
    w: &Word,
    prec: u32,
    obs: Option<&Observable>,
) -> Result<PrimitiveOrbit, PeriodicError> {
    let fail = || PeriodicError::NoConvergence(w.clone());
    let (a, b) = &sys.real_fragment;
    let start: Rational = Rational::from(a + b) / 2;

    // coarse contraction iterates, then Newton at the working precision
    let mut x = rat(64, &start);
    for _ in 0..8 {
        x = compose_point(sys, w, &x).0;
        if !x.is_finite() {
            return Err(fail());
        }
    }
    let mut x = Float::with_val(prec, &x);
    let tol = Float::with_val(prec, Float::i_exp(1, 6 - prec as i32));
    let mut last_step = Float::with_val(prec, 1);
    let mut converged = false;
    for _ in 0..budget(prec) {
        let (v, d) = compose_point(sys, w, &x);
        let g = Float::with_val(prec, &v - &x);
        let gp = d - 1u32;
        let step = g / gp;
        if !step.is_finite() {
            return Err(fail());
        }
        x -= &step;
        last_step = step.abs();
        if last_step <= Float::with_val(prec, &tol * Float::with_val(prec, x.abs_ref()).max(&Float::with_val(prec, 1))) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(fail());
    }

    // interval Newton: N(X) = m − F(m)/F'(X) ⊂ int X certifies a unique root
    let m = ValidatedReal::point(x.clone());
    let mut delta = Float::with_val(prec, &last_step * 16u32) + Float::with_val(prec, Float::i_exp(1, 16 - prec as i32));
    for _ in 0..12 {
        let xbox = m.inflate(&delta);
        let cert = (|| -> Result<Option<ValidatedReal>, SystemError> {
            let (pm, _) = compose_interval(sys, w, &m)?;
            let fm = pm.last().unwrap().sub(&m);
            let (_, dx) = compose_interval(sys, w, &xbox)?;
            let fp = dx.add_int(-1);
            let nx = match fm.div(&fp) {
                Ok(q) => m.sub(&q),
                Err(_) => return Ok(None),
            };
            Ok(if nx.strictly_inside(&xbox) { Some(nx) } else { None })
        })();
        match cert {
            Ok(Some(point)) => {
                let (pts, lambda) = compose_interval(sys, w, &point)?;
                let birkhoff = obs.map(|g| {
                    pts[..w.len()]
                        .iter()
                        .fold(ValidatedReal::zero(prec), |acc, p| acc.add(&g.eval(p)))
                });
                return Ok(PrimitiveOrbit {
                    word: w.clone(),
                    point,
                    lambda,
                    birkhoff,
                });
            }
            Ok(None) | Err(SystemError::OutsideDomain) => delta *= 8u32,
            Err(e) => return Err(e.into()),
        }
    }
    Err(fail())
}

/// `fixed_point`: the verified orbit record of a single word.
pub fn fixed_point(system: &SystemSpec, w: &Word, prec: u32) -> Result<OrbitRecord, PeriodicError> {
    let o = solve_orbit(system, w, prec, None)?;
    let (pts, _) = compose_interval(system, w, &o.point)?;
    let logs = pts[..w.len()]
        .iter()
        .zip(w.0.iter().rev())
        .map(|(p, &l)| {
            // log|T'| at ψ_l(p) equals −log|ψ_l'(p)|
            let d = system.branches[l as usize].derivative_real(p)?;
            d.abs().log().map(|v| v.neg()).map_err(|_| SystemError::OutsideDomain)
        })
        .collect::<Result<Vec<_>, SystemError>>()?;
    Ok(OrbitRecord {
        word: o.word,
        fixed_point: ValidatedComplex::real(o.point),
        orbit_derivative: ValidatedComplex::real(o.lambda),
        orbit_log_weights: Some(logs),
    })
}

fn real_term(lambda: &ValidatedReal, birkhoff: Option<ValidatedReal>, mult: u32) -> OrbitTerm {
    let log_abs = lambda
        .abs()
        .log()
        .unwrap_or_else(|_| ValidatedReal::symmetric(&Float::with_val(lambda.precision(), f64::INFINITY)));
    OrbitTerm {
        multiplicity: mult,
        log_abs,
        denom: ValidatedReal::one(lambda.precision()).sub(lambda),
        birkhoff,
    }
}

fn max_width<'a>(prec: u32, it: impl Iterator<Item = &'a ValidatedReal>) -> ValidatedReal {
    let mut m = Float::with_val(prec, 0);
    for v in it {
        let w = v.width();
        if w > m {
            m = w;
        }
    }
    ValidatedReal::point(m)
}

/// Materialized table with one record per admissible word.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub max_period: usize,
    pub records: Vec<Vec<OrbitRecord>>,
    pub eps1: ValidatedReal,
    pub convention: TraceConvention,
    pub precision: u32,
    branch_count: usize,
}

/// `build_orbit_table`: all words of periods `1..=n_max`.
pub fn build_orbit_table(system: &SystemSpec, n_max: usize, prec: u32) -> Result<OrbitTable, PeriodicError> {
    let mut records = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let words = enumerate_words(system, n);
        let recs = words
            .par_iter()
            .map(|w| fixed_point(system, w, prec))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(recs);
    }
    let eps1 = max_width(
        prec,
        records
            .iter()
            .flatten()
            .flat_map(|r| [&r.orbit_derivative.re, &r.fixed_point.re]),
    );
    Ok(OrbitTable {
        max_period: n_max,
        records,
        eps1,
        convention: TraceConvention::for_system(system),
        precision: prec,
        branch_count: system.branch_count(),
    })
}

impl OrbitTable {
    pub fn total_records(&self) -> usize {
        self.records.iter().map(|r| r.len()).sum()
    }
}

impl OrbitSource for OrbitTable {
    fn max_period(&self) -> usize {
        self.max_period
    }

    fn precision(&self) -> u32 {
        self.precision
    }

    fn convention(&self) -> TraceConvention {
        self.convention
    }

    fn terms(&self, n: usize) -> Vec<OrbitTerm> {
        self.records[n - 1]
            .iter()
            .filter(|r| !self.convention.skips(&r.word, self.branch_count))
            .map(|r| real_term(&r.orbit_derivative.re, None, 1))
            .collect()
    }

    fn eps1(&self) -> ValidatedReal {
        self.eps1.clone()
    }
}

/// Rotation-class table: one solved orbit per Lyndon word.
#[derive(Clone, Debug)]
pub struct PrimitiveTable {
    pub max_period: usize,
    /// `orbits[d-1]` holds the primitive orbits of length `d`.
    pub orbits: Vec<Vec<PrimitiveOrbit>>,
    pub convention: TraceConvention,
    pub precision: u32,
    pub observable: Option<Observable>,
    branch_count: usize,
}

/// Solves every primitive orbit up to `n_max`, in parallel with an ordered
/// collect so the result does not depend on the thread count.
pub fn build_primitive_table(
    system: &SystemSpec,
    n_max: usize,
    prec: u32,
    obs: Option<&Observable>,
) -> Result<PrimitiveTable, PeriodicError> {
    let key = cache::key(system, n_max, prec, obs);
    if let Some(orbits) = cache::load(&key, n_max) {
        return Ok(PrimitiveTable {
            max_period: n_max,
            orbits,
            convention: TraceConvention::for_system(system),
            precision: prec,
            observable: obs.cloned(),
            branch_count: system.branch_count(),
        });
    }
    let words = lyndon_words(system, n_max);
    let solved = words
        .par_iter()
        .map(|w| solve_orbit(system, w, prec, obs))
        .collect::<Result<Vec<_>, _>>()?;
    let mut orbits = vec![Vec::new(); n_max];
    for o in solved {
        orbits[o.word.len() - 1].push(o);
    }
    cache::store(&key, &orbits);
    Ok(PrimitiveTable {
        max_period: n_max,
        orbits,
        convention: TraceConvention::for_system(system),
        precision: prec,
        observable: obs.cloned(),
        branch_count: system.branch_count(),
    })
}

impl PrimitiveTable {
    pub fn distinct_orbits(&self) -> usize {
        self.orbits.iter().map(|o| o.len()).sum()
    }

    /// Number of words of length `n` represented (before any skip rule).
    pub fn word_count(&self, n: usize) -> usize {
        (1..=n)
            .filter(|d| n % d == 0)
            .map(|d| d * self.orbits[d - 1].len())
            .sum()
    }
}

impl OrbitSource for PrimitiveTable {
    fn max_period(&self) -> usize {
        self.max_period
    }

    fn precision(&self) -> u32 {
        self.precision
    }

    fn convention(&self) -> TraceConvention {
        self.convention
    }

    fn terms(&self, n: usize) -> Vec<OrbitTerm> {
        let mut out = Vec::new();
        for d in (1..=n).filter(|d| n % d == 0) {
            let k = n / d;
            for o in &self.orbits[d - 1] {
                if self.convention.skips(&o.word, self.branch_count) {
                    continue;
                }
                let lambda = o.lambda.powi(k as i32).unwrap();
                let g = o.birkhoff.as_ref().map(|g| g.mul_int(k as i64));
                out.push(real_term(&lambda, g, d as u32));
            }
        }
        out
    }

    fn eps1(&self) -> ValidatedReal {
        max_width(
            self.precision,
            self.orbits.iter().flatten().flat_map(|o| [&o.lambda, &o.point]),
        )
    }
}

/// Materialized terms of another source, with exactly equal terms merged
/// into one term of summed multiplicity. Repeated trace sums over the same
/// orbits (parameter scans, root bisection) then skip the power expansion.
pub struct TermCache {
    terms: Vec<Vec<OrbitTerm>>,
    precision: u32,
    convention: TraceConvention,
    eps1: ValidatedReal,
}

fn term_key(t: &OrbitTerm) -> [&Float; 6] {
    let (b0, b1) = match &t.birkhoff {
        Some(b) => (b.lo(), b.hi()),
        None => (t.log_abs.lo(), t.log_abs.lo()),
    };
    [t.log_abs.lo(), t.log_abs.hi(), t.denom.lo(), t.denom.hi(), b0, b1]
}

impl TermCache {
    pub fn new(src: &dyn OrbitSource) -> Self {
        let terms = (1..=src.max_period())
            .map(|n| {
                let mut v = src.terms(n);
                v.sort_by(|a, b| {
                    term_key(a)
                        .iter()
                        .zip(term_key(b).iter())
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.birkhoff.is_some().cmp(&b.birkhoff.is_some()))
                });
                let mut merged: Vec<OrbitTerm> = Vec::with_capacity(v.len());
                for t in v {
                    match merged.last_mut() {
                        Some(m)
                            if m.birkhoff.is_some() == t.birkhoff.is_some()
                                && term_key(m) == term_key(&t) =>
                        {
                            m.multiplicity += t.multiplicity
                        }
                        _ => merged.push(t),
                    }
                }
                merged
            })
            .collect();
        TermCache {
            terms,
            precision: src.precision(),
            convention: src.convention(),
            eps1: src.eps1(),
        }
    }
}

impl OrbitSource for TermCache {
    fn max_period(&self) -> usize {
        self.terms.len()
    }

    fn precision(&self) -> u32 {
        self.precision
    }

    fn convention(&self) -> TraceConvention {
        self.convention
    }

    fn terms(&self, n: usize) -> Vec<OrbitTerm> {
        self.terms[n - 1].clone()
    }

    fn eps1(&self) -> ValidatedReal {
        self.eps1.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::load_system;

    const P: u32 = 256;

    fn w(l: &[u16]) -> Word {
        Word(l.to_vec())
    }

    #[test]
    fn words_full_shift() {
        let sys = load_system("system=e2").unwrap();
        assert_eq!(enumerate_words(&sys, 1), vec![w(&[0]), w(&[1])]);
        assert_eq!(
            enumerate_words(&sys, 2),
            vec![w(&[0, 0]), w(&[0, 1]), w(&[1, 0]), w(&[1, 1])]
        );
    }

    #[test]
    fn words_markov() {
        let sys = load_system("system=e2\nmarkov.row.1=1,1\nmarkov.row.2=1,0").unwrap();
        assert_eq!(enumerate_words(&sys, 2), vec![w(&[0, 0]), w(&[0, 1]), w(&[1, 0])]);
        assert_eq!(enumerate_words(&sys, 1), vec![w(&[0])]);
    }

    #[test]
    fn lyndon_counts() {
        let sys = load_system("system=e2").unwrap();
        let ly = lyndon_words(&sys, 6);
        let count = |d: usize| ly.iter().filter(|w| w.len() == d).count();
        assert_eq!((1..=6).map(count).collect::<Vec<_>>(), vec![2, 1, 2, 3, 6, 9]);
        assert_eq!(ly[0], w(&[0]));
        assert_eq!(ly[1], w(&[0, 0, 0, 0, 0, 1]));
    }

    #[test]
    fn golden_fixed_point() {
        let sys = load_system("system=e2").unwrap();
        let r = fixed_point(&sys, &w(&[0]), P).unwrap();
        let g = ValidatedReal::from_int(P, 5).sqrt().unwrap().add_int(-1).mul_2exp(-1);
        assert!(r.fixed_point.re.overlaps(&g));
        assert!(r.fixed_point.re.width() < 1e-70);
        assert!((r.orbit_derivative.re.mid_f64() + 0.3819660112501051).abs() < 1e-15);
    }

    #[test]
    fn cantor_fixed_point_exact() {
        let sys = load_system("system=cantor").unwrap();
        let r = fixed_point(&sys, &w(&[1]), P).unwrap();
        assert!(r.fixed_point.re.contains_f64(1.0));
        assert!(r.orbit_derivative.re.contains_rational(&Rational::from((1, 3))));
    }

    #[test]
    fn square_word_has_squared_derivative() {
        let sys = load_system("system=lanford").unwrap();
        let a = fixed_point(&sys, &w(&[0, 1]), P).unwrap();
        let b = fixed_point(&sys, &w(&[0, 1, 0, 1]), P).unwrap();
        assert!(a.orbit_derivative.re.sqr().overlaps(&b.orbit_derivative.re));
        assert!(a.fixed_point.re.overlaps(&b.fixed_point.re));
    }

    #[test]
    fn table_counts_and_eps1() {
        let sys = load_system("system=e2").unwrap();
        let t = build_orbit_table(&sys, 3, P).unwrap();
        assert_eq!(t.total_records(), 14);
        assert!(t.eps1.hi().to_f64() < 1e-60);
    }

    #[test]
    fn doubling_table_word_convention() {
        let sys = load_system("system=doubling").unwrap();
        let t = build_orbit_table(&sys, 5, P).unwrap();
        let counts: Vec<usize> = t.records.iter().map(|r| r.len()).collect();
        assert_eq!(counts, vec![2, 4, 8, 16, 32]);
        // geometric count skips the duplicate of 0 ≡ 1
        assert_eq!(t.terms(5).len(), 31);
    }

    #[test]
    fn primitive_terms_match_table() {
        let sys = load_system("system=lanford").unwrap();
        let t = build_orbit_table(&sys, 6, P).unwrap();
        let pt = build_primitive_table(&sys, 6, P, None).unwrap();
        for n in 1..=6 {
            let direct = t.terms(n);
            let prim = pt.terms(n);
            assert_eq!(direct.len(), 1 << n);
            assert_eq!(prim.iter().map(|t| t.multiplicity as usize).sum::<usize>(), 1 << n);
            let sum = |ts: &[OrbitTerm]| {
                ts.iter().fold(ValidatedReal::zero(P), |a, t| {
                    a.add(&t.log_abs.exp().div(&t.denom).unwrap().mul_int(t.multiplicity as i64))
                })
            };
            assert!(sum(&direct).overlaps(&sum(&prim)), "n={n}");
        }
    }
}
