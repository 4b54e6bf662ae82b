//! Analytic expanding systems given by their inverse branches.

mod branch;
mod config;

pub use branch::{Branch, BranchKind};
pub use config::{builtin_config, load_system, parse_config};

use rug::{Float, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{ValidatedComplex, ValidatedReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("branch {branch} image is not strictly inside disc {target}")]
    DiscNotInvariant { branch: usize, target: usize },
    #[error("expansion fails for branch {branch}: |psi'| >= 1 on the real fragment")]
    ExpansionViolation { branch: usize },
    #[error("point outside the analyticity domain of the branch")]
    OutsideDomain,
}

/// Closed disc `B(center, radius)` with a real centre.
#[derive(Clone, Debug, PartialEq)]
pub struct Disc {
    pub center: Rational,
    pub radius: Rational,
}

impl Disc {
    pub fn new(center: Rational, radius: Rational) -> Self {
        Disc { center, radius }
    }

    pub fn center_complex(&self, prec: u32) -> ValidatedComplex {
        ValidatedComplex::real(ValidatedReal::from_rational(prec, &self.center))
    }

    pub fn radius_real(&self, prec: u32) -> ValidatedReal {
        ValidatedReal::from_rational(prec, &self.radius)
    }

    /// Whether every point of the box lies in the closed disc.
    pub fn contains(&self, z: &ValidatedComplex) -> bool {
        let p = z.precision();
        let d = z.sub(&self.center_complex(p)).norm_sqr();
        let r2 = self.radius_real(p).sqr();
        d.hi() <= r2.lo()
    }

    /// Rectangle enclosing the boundary arc with angles in `[a, b]` (turns),
    /// scaled to radius `rho · r`.
    pub fn arc_box(&self, prec: u32, a: &Rational, b: &Rational, rho: &Rational) -> ValidatedComplex {
        let two_pi = ValidatedReal::pi(prec).mul_2exp(1);
        let phi = ValidatedReal::from_rational(prec, a)
            .hull(&ValidatedReal::from_rational(prec, b))
            .mul(&two_pi);
        let r = ValidatedReal::from_rational(prec, &(self.radius.clone() * rho));
        ValidatedComplex::new(phi.cos().mul(&r), phi.sin().mul(&r)).add(&self.center_complex(prec))
    }

    /// Point `c + ρ r e^{2πiφ}` for `φ` a rational number of turns.
    pub fn boundary_point(&self, prec: u32, phi: &Rational, rho: &Rational) -> ValidatedComplex {
        let two_pi = ValidatedReal::pi(prec).mul_2exp(1);
        let ang = ValidatedReal::from_rational(prec, phi).mul(&two_pi);
        let r = ValidatedReal::from_rational(prec, &(self.radius.clone() * rho));
        ValidatedComplex::new(ang.cos().mul(&r), ang.sin().mul(&r)).add(&self.center_complex(prec))
    }
}

/// Symbolic tags declaring the potential pair `(g₀, g)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTag {
    NegLogDeriv,
    NegTLogDeriv,
    Zero,
    CustomSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFamily {
    pub g0: WeightTag,
    pub g: WeightTag,
}

impl Default for WeightFamily {
    fn default() -> Self {
        WeightFamily {
            g0: WeightTag::NegTLogDeriv,
            g: WeightTag::NegLogDeriv,
        }
    }
}

/// An analytic expanding map presented by inverse branches and discs.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub name: String,
    pub branches: Vec<Branch>,
    pub discs: Vec<Disc>,
    pub bernoulli: bool,
    /// Branches are lifts of a circle map; `0 ≡ 1` is identified.
    pub circle: bool,
    pub weight_family: WeightFamily,
    pub markov: Option<Vec<Vec<u8>>>,
    /// Parameter of `z² + c` for the quadratic Julia family.
    pub julia: Option<(Rational, Rational)>,
    /// Sign of `ψ_j'` on the real line, per branch.
    pub orientation: Vec<i32>,
    /// Invariant real interval containing the attractor.
    pub real_fragment: (Rational, Rational),
    /// Canonical description used for cache keys.
    pub canonical: String,
}

impl SystemSpec {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn is_julia(&self) -> bool {
        self.julia.is_some()
    }

    /// Transition `i → j` is admissible (always true without a Markov matrix).
    pub fn admissible(&self, i: usize, j: usize) -> bool {
        match &self.markov {
            None => true,
            Some(m) => m[i][j] != 0,
        }
    }

    /// Runs the load-time checks: disc invariance and real expansion.
    pub fn validate(&mut self) -> Result<(), SystemError> {
        if self.is_julia() {
            return Ok(());
        }
        let k = self.branches.len();
        if k == 0 {
            return Err(SystemError::ParseError("system has no branches".into()));
        }
        if let Some(m) = &self.markov {
            if m.len() != k || m.iter().any(|r| r.len() != k) {
                return Err(SystemError::ParseError("markov matrix must be square with one row per branch".into()));
            }
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.domain >= self.discs.len() || b.target >= self.discs.len() {
                return Err(SystemError::ParseError(format!("branch {i} refers to a missing disc")));
            }
            let ratio = image_ratio(self, i, 128).map_err(|_| SystemError::DiscNotInvariant {
                branch: i,
                target: b.target,
            })?;
            if ratio.hi() >= &1 {
                return Err(SystemError::DiscNotInvariant {
                    branch: i,
                    target: b.target,
                });
            }
        }
        self.real_fragment = invariant_interval(self)?;
        self.orientation = Vec::with_capacity(k);
        let prec = 128;
        let (a, b) = &self.real_fragment;
        let pieces = 64;
        for (i, br) in self.branches.iter().enumerate() {
            let mut sign = 0;
            for s in 0..pieces {
                let lo = a.clone() + (b.clone() - a) * Rational::from((s, pieces));
                let hi = a.clone() + (b.clone() - a) * Rational::from((s + 1, pieces));
                let x = ValidatedReal::from_rational(prec, &lo).hull(&ValidatedReal::from_rational(prec, &hi));
                let d = br
                    .derivative_real(&x)
                    .map_err(|_| SystemError::ExpansionViolation { branch: i })?;
                if d.mag() >= 1 || d.contains_zero() {
                    return Err(SystemError::ExpansionViolation { branch: i });
                }
                let sg = d.certain_sign();
                if sign != 0 && sg != sign {
                    return Err(SystemError::ExpansionViolation { branch: i });
                }
                sign = sg;
            }
            self.orientation.push(sign);
        }
        Ok(())
    }
}

/// Upper enclosure of `sup_{|z-c_i|=r_i} |ψ(z) - c_j| / r_j` for branch `idx`.
pub fn image_ratio(sys: &SystemSpec, idx: usize, prec: u32) -> Result<ValidatedReal, SystemError> {
    let br = &sys.branches[idx];
    let dom = &sys.discs[br.domain];
    let tgt = &sys.discs[br.target];
    if let Some(res) = br.image_disc(&dom.center, &dom.radius) {
        let (c, r) = res?;
        let dist = Rational::from((c - &tgt.center).abs_ref());
        let ratio = (dist + r) / &tgt.radius;
        return Ok(ValidatedReal::from_rational(prec, &ratio));
    }
    arc_sup(
        |z| {
            let w = br.eval(z)?;
            Ok(w.sub(&tgt.center_complex(prec)).abs())
        },
        dom,
        prec,
        &Rational::from(1),
    )
    .map(|s| s.div(&tgt.radius_real(prec)).unwrap())
}

/// Rigorous upper bound (returned as `[lower, upper]`) of `sup f` over the
/// circle of radius `rho · r`, by adaptive arc subdivision.
pub fn arc_sup<F>(f: F, disc: &Disc, prec: u32, rho: &Rational) -> Result<ValidatedReal, SystemError>
where
    F: Fn(&ValidatedComplex) -> Result<ValidatedReal, SystemError>,
{
    let init = 64i64;
    let mut arcs: Vec<(Rational, Rational)> = (0..init)
        .map(|k| (Rational::from((k, init)), Rational::from((k + 1, init))))
        .collect();
    let mut best_lo = Float::with_val(prec, 0);
    // largest upper bound among arcs that were not refined further
    let mut settled = Float::with_val(prec, 0);
    let rounds = 14;
    for round in 0..rounds {
        let mut evals = Vec::with_capacity(arcs.len());
        let last = round + 1 == rounds || arcs.len() * 2 > 1 << 14;
        for (a, b) in &arcs {
            let m: Rational = Rational::from(a + b) / 2;
            let pv = f(&disc.boundary_point(prec, &m, rho))?;
            if pv.lo() > &best_lo {
                best_lo = pv.lo().clone();
            }
            // a box that cannot be evaluated is split; treated as +inf meanwhile
            match f(&disc.arc_box(prec, a, b, rho)) {
                Ok(v) => evals.push(Some(v.hi().clone())),
                Err(e) if last => return Err(e),
                Err(_) => evals.push(None),
            }
        }
        let cut = Float::with_val(prec, &best_lo * (1.0 + 1e-7)) + 1e-30;
        let mut next = Vec::new();
        for ((a, b), hi) in arcs.iter().zip(evals) {
            let split = match &hi {
                None => true,
                Some(h) => !last && *h > cut,
            };
            let hi = hi.unwrap_or_else(|| Float::with_val(prec, 0));
            if split {
                let m: Rational = Rational::from(a + b) / 2;
                next.push((a.clone(), m.clone()));
                next.push((m, b.clone()));
            } else if hi > settled {
                settled = hi;
            }
        }
        if next.is_empty() {
            break;
        }
        arcs = next;
    }
    let lo = if best_lo <= settled { best_lo } else { settled.clone() };
    Ok(ValidatedReal::new(lo, settled))
}

/// Shrinks the real diameter of the domain disc to an interval invariant
/// under all branches.
fn invariant_interval(sys: &SystemSpec) -> Result<(Rational, Rational), SystemError> {
    let prec = 128;
    let d = &sys.discs[0];
    let mut lo = d.center.clone() - &d.radius;
    let mut hi = d.center.clone() + &d.radius;
    for _ in 0..60 {
        let x = ValidatedReal::from_rational(prec, &lo).hull(&ValidatedReal::from_rational(prec, &hi));
        let mut img: Option<ValidatedReal> = None;
        for b in &sys.branches {
            let y = b.eval_real(&x)?;
            img = Some(match img {
                None => y,
                Some(h) => h.hull(&y),
            });
        }
        let img = img.unwrap();
        let nlo = Rational::from(img.lo().to_rational().unwrap_or_default()).max(lo.clone());
        let nhi = Rational::from(img.hi().to_rational().unwrap_or_default()).min(hi.clone());
        if nlo >= nhi || (nlo == lo && nhi == hi) {
            break;
        }
        // round outward to a short dyadic so the rationals stay small
        lo = dyadic_floor(&nlo, 40);
        hi = dyadic_ceil(&nhi, 40);
    }
    Ok((lo, hi))
}

fn dyadic_floor(x: &Rational, bits: u32) -> Rational {
    let scale = rug::Integer::from(1) << bits;
    let v = (x.clone() * &scale).floor();
    v / Rational::from(scale)
}

fn dyadic_ceil(x: &Rational, bits: u32) -> Rational {
    let scale = rug::Integer::from(1) << bits;
    let v = (x.clone() * &scale).ceil();
    v / Rational::from(scale)
}

/// `branch_eval`: enclosure of `ψ(z)` for `z` inside the branch's domain disc.
pub fn branch_eval(sys: &SystemSpec, b: usize, z: &ValidatedComplex) -> Result<ValidatedComplex, SystemError> {
    let br = &sys.branches[b];
    if !sys.discs[br.domain].contains(z) {
        return Err(SystemError::OutsideDomain);
    }
    br.eval(z)
}

/// `branch_derivative`: enclosure of `ψ'(z)` for `z` inside the domain disc.
pub fn branch_derivative(
    sys: &SystemSpec,
    b: usize,
    z: &ValidatedComplex,
) -> Result<ValidatedComplex, SystemError> {
    let br = &sys.branches[b];
    if !sys.discs[br.domain].contains(z) {
        return Err(SystemError::OutsideDomain);
    }
    br.derivative(z)
}
