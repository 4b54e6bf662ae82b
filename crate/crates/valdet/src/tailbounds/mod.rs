//! Rigorous bounds on the determinant coefficients beyond the truncation.
//!
//! The transfer operator `L f(z) = Σ_j w_j(z) f(ψ_j(z))` acts on the Hardy
//! space of a disc `B(c, r)` with orthonormal monomials `q_k = ((z − c)/r)^k`.
//! Singular values obey `σ_m ≤ (Σ_{k ≥ m−1} ‖L q_k‖²)^{1/2}`, and
//! `|a_n| ≤ e_n(σ_1, σ_2, …)`. The norms `β_k = ‖L q_k‖²` are computed by a
//! certified trapezoid rule for `k < L`; beyond `L` the geometric bound
//! `‖L q_k‖ ≤ W θ^k` with `W = sup Σ_j |w_j|` takes over.
//!
//! Certificates hold uniformly for the parameter `t` in a complex box, which
//! gives Cauchy bounds for the `t`-derivatives of the coefficients.

use rayon::prelude::*;
use rug::{Float, Rational};
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{ValidatedComplex, ValidatedReal};
use crate::determinant::{interval_json, CoefficientSeries, PlanMode, WeightPlan};
use crate::periodic::Observable;
use crate::systems::{image_ratio, Disc, SystemError, SystemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("contraction ratio is not below 1 (disc {disc})")]
    DiscNotInvariant { disc: usize },
    #[error("quadrature for beta_k needs more than {panels} nodes")]
    QuadratureBudgetExceeded { panels: usize },
    #[error("theta^L C = {0} is not below 1; the certificate is vacuous")]
    CertificateVacuous(f64),
    #[error("|z| theta^L C >= 1: z lies outside the certified radius")]
    RadiusExceeded,
    #[error("tail certificates need a single shared disc (Bernoulli systems)")]
    Unsupported,
    #[error(transparent)]
    System(#[from] SystemError),
}

/// How θ was formed from the per-disc ratios Θ_i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioRule {
    Bernoulli,
    /// `θ = max_i Θ_i^{1/K}`.
    KthRoot(usize),
}

impl RatioRule {
    fn label(&self) -> String {
        match self {
            RatioRule::Bernoulli => "bernoulli_max".into(),
            RatioRule::KthRoot(k) => format!("kth_root_k{k}"),
        }
    }
}

/// `contraction_ratio` together with the rule used.
pub fn contraction_ratio_rule(system: &SystemSpec, prec: u32) -> Result<(ValidatedReal, RatioRule), TailError> {
    let k = system.discs.len();
    let mut per_disc: Vec<Option<ValidatedReal>> = vec![None; k];
    for (i, b) in system.branches.iter().enumerate() {
        let r = image_ratio(system, i, prec)?;
        let e = &mut per_disc[b.target];
        *e = Some(match e.take() {
            None => r,
            Some(m) => m.max(&r),
        });
    }
    let one = ValidatedReal::one(prec);
    for (i, th) in per_disc.iter().enumerate() {
        if let Some(th) = th {
            if !th.certainly_lt(&one) {
                return Err(TailError::DiscNotInvariant { disc: i });
            }
        }
    }
    let thetas: Vec<ValidatedReal> = per_disc.into_iter().flatten().collect();
    let (rule, vals): (RatioRule, Vec<ValidatedReal>) = if system.bernoulli || k == 1 {
        (RatioRule::Bernoulli, thetas)
    } else {
        let inv_k = ValidatedReal::from_ratio(prec, 1, k as i64);
        (
            RatioRule::KthRoot(k),
            thetas.iter().map(|t| t.pow_real(&inv_k).unwrap()).collect(),
        )
    };
    let theta = vals.iter().skip(1).fold(vals[0].clone(), |a, b| a.max(b));
    Ok((theta, rule))
}

/// `contraction_ratio`: rigorous enclosure of θ.
pub fn contraction_ratio(system: &SystemSpec, prec: u32) -> Result<ValidatedReal, TailError> {
    contraction_ratio_rule(system, prec).map(|(t, _)| t)
}

/// Parameter region: real range `t` widened by `h` in every complex
/// direction. Cauchy derivative bounds use the radius `h`.
#[derive(Clone, Debug)]
pub struct ParamBox {
    pub t: ValidatedReal,
    pub h: Rational,
}

impl ParamBox {
    pub fn real(t: ValidatedReal) -> Self {
        ParamBox { t, h: Rational::new() }
    }

    pub fn around(t0: ValidatedReal, h: Rational) -> Self {
        ParamBox { t: t0, h }
    }

    fn complex(&self) -> ValidatedComplex {
        let p = self.t.precision();
        let hv = Float::with_val(p, &self.h);
        ValidatedComplex::new(self.t.inflate(&hv), ValidatedReal::symmetric(&hv))
    }
}

fn poly_complex(g: &Observable, z: &ValidatedComplex) -> ValidatedComplex {
    let p = z.precision();
    let mut acc = ValidatedComplex::zero(p);
    for c in g.0.iter().rev() {
        acc = acc.mul(z).add_real(&ValidatedReal::from_rational(p, c));
    }
    acc
}

/// Weight `w_j(z)` and normalized image `u_j(z) = (ψ_j(z) − c)/r` over the
/// parameter box.
fn weight_and_image(
    sys: &SystemSpec,
    j: usize,
    z: &ValidatedComplex,
    mode: &PlanMode,
    tbox: &ValidatedComplex,
    obs: Option<&Observable>,
) -> Result<(ValidatedComplex, ValidatedComplex), SystemError> {
    let p = z.precision();
    let b = &sys.branches[j];
    let disc = &sys.discs[b.target];
    let psi = b.eval(z)?;
    let lg = b.log_derivative(z)?;
    let one = ValidatedComplex::one(p);
    let expo = match mode {
        PlanMode::Dimension => tbox.mul(&lg),
        PlanMode::Lyapunov => one.add(tbox).mul(&lg),
        PlanMode::Mixing => lg,
        PlanMode::Custom => {
            let g = obs.ok_or(SystemError::OutsideDomain)?;
            lg.sub(&tbox.mul(&poly_complex(g, &psi)))
        }
        PlanMode::Variance { center } => one.add(tbox).mul(&lg).add(&tbox.scale(center)),
    };
    let u = psi
        .sub(&disc.center_complex(p))
        .scale(&disc.radius_real(p).recip().unwrap());
    Ok((expo.exp(), u))
}

/// Upper bounds on `sup |w_j|` and `sup |u_j|` over the circle of radius
/// `ρ r`, one pair per branch, by interval evaluation on arcs.
fn circle_bounds(
    sys: &SystemSpec,
    mode: &PlanMode,
    tbox: &ValidatedComplex,
    obs: Option<&Observable>,
    rho: &Rational,
    prec: u32,
) -> Result<Vec<(Float, Float)>, SystemError> {
    let disc = &sys.discs[0];
    let arcs = 256i64;
    let mut out = vec![(Float::with_val(prec, 0), Float::with_val(prec, 0)); sys.branch_count()];
    let mut stack: Vec<(Rational, Rational, u32)> = (0..arcs)
        .map(|k| (Rational::from((k, arcs)), Rational::from((k + 1, arcs)), 0))
        .collect();
    while let Some((a, b, depth)) = stack.pop() {
        let z = disc.arc_box(prec, &a, &b, rho);
        let evals: Result<Vec<_>, _> = (0..sys.branch_count())
            .map(|j| weight_and_image(sys, j, &z, mode, tbox, obs))
            .collect();
        match evals {
            Ok(v) => {
                for (j, (w, u)) in v.iter().enumerate() {
                    let (wm, um) = (w.mag(), u.mag());
                    if wm > out[j].0 {
                        out[j].0 = wm;
                    }
                    if um > out[j].1 {
                        out[j].1 = um;
                    }
                }
            }
            Err(e) if depth >= 6 => return Err(e),
            Err(_) => {
                let m: Rational = Rational::from(&a + &b) / 2;
                stack.push((a, m.clone(), depth + 1));
                stack.push((m, b, depth + 1));
            }
        }
    }
    Ok(out)
}

/// Trapezoid panel counts tried, and the annulus ratios for the error bound.
const MAX_PANELS: usize = 1 << 15;
const RHOS: [(i64, i64); 5] = [(21, 20), (51, 50), (11, 10), (101, 100), (6, 5)];

/// Certified trapezoid enclosures of `β_k = ‖L q_k‖²` for `k = 0..L−1`,
/// with the uniform quadrature error `ε₃`.
pub fn basis_image_norms(
    system: &SystemSpec,
    plan: &WeightPlan,
    pbox: &ParamBox,
    obs: Option<&Observable>,
    l: usize,
    target: &ValidatedReal,
) -> Result<(Vec<ValidatedReal>, ValidatedReal), TailError> {
    if system.discs.len() != 1 {
        return Err(TailError::Unsupported);
    }
    let prec = target.precision();
    let tbox = pbox.complex();
    let kb = system.branch_count();
    // error ≤ 2 M_k² / (ρ^P − 1) with M_k = Σ_j W_j U_j^k on the ρ-circle
    let mut best: Option<(usize, ValidatedReal, ValidatedReal)> = None;
    for (num, den) in RHOS {
        let rho = Rational::from((num, den));
        let Ok(bounds) = circle_bounds(system, &plan.mode, &tbox, obs, &rho, prec) else {
            continue;
        };
        let mut m = ValidatedReal::zero(prec);
        for (w, u) in &bounds {
            let u1 = ValidatedReal::point(u.clone()).max(&ValidatedReal::one(prec));
            m = m.add(&ValidatedReal::point(w.clone()).mul(&u1.powi(l as i32 - 1).unwrap()));
        }
        let two_m2 = m.sqr().mul_int(2);
        let rho_v = ValidatedReal::from_rational(prec, &rho);
        let need = two_m2.div(target).unwrap().add_int(1).log().unwrap().div(&rho_v.log().unwrap()).unwrap();
        let need = need.hi().to_f64();
        if !need.is_finite() {
            continue;
        }
        let mut panels = 16usize;
        while (panels as f64) < need {
            panels *= 2;
        }
        if panels > MAX_PANELS {
            continue;
        }
        let err = two_m2.div(&rho_v.powi(panels as i32).unwrap().add_int(-1)).unwrap();
        if best.as_ref().map_or(true, |b| panels < b.0) {
            best = Some((panels, err, m));
        }
    }
    let (panels, err, _) = best.ok_or(TailError::QuadratureBudgetExceeded { panels: MAX_PANELS })?;
    let disc = &system.discs[0];
    let chunks = 64usize;
    let per = panels.div_ceil(chunks);
    let one = Rational::from(1);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|ch| -> Result<Vec<ValidatedReal>, SystemError> {
            let mut acc = vec![ValidatedReal::zero(prec); l];
            for i in ch * per..((ch + 1) * per).min(panels) {
                let z = disc.boundary_point(prec, &Rational::from((i as i64, panels as i64)), &one);
                let wu = (0..kb)
                    .map(|j| weight_and_image(system, j, &z, &plan.mode, &tbox, obs))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut pw: Vec<ValidatedComplex> = wu.iter().map(|(w, _)| w.clone()).collect();
                for slot in acc.iter_mut() {
                    let mut f = ValidatedComplex::zero(prec);
                    for (j, (_, u)) in wu.iter().enumerate() {
                        f = f.add(&pw[j]);
                        pw[j] = pw[j].mul(u);
                    }
                    *slot = slot.add(&f.norm_sqr());
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut beta = vec![ValidatedReal::zero(prec); l];
    for part in &partial {
        for (b, v) in beta.iter_mut().zip(part) {
            *b = b.add(v);
        }
    }
    let beta = beta
        .into_iter()
        .map(|b| {
            let v = b.div_int(panels as i64);
            // quadrature error, plus the fact that β_k ≥ 0
            let lo = Float::with_val(prec, v.lo() - err.hi()).max(&Float::with_val(prec, 0));
            ValidatedReal::new(lo, Float::with_val(prec, v.hi()))
        })
        .collect();
    Ok((beta, ValidatedReal::point(err.hi().clone())))
}

/// `tail_eps2` in the displayed geometric form `Cθ^L/(1−θ)`.
pub fn tail_eps2(theta: &ValidatedReal, c: &ValidatedReal, l: usize) -> ValidatedReal {
    let one = ValidatedReal::one(theta.precision());
    c.mul(&theta.powi(l as i32).unwrap())
        .div(&one.sub(theta))
        .expect("theta < 1")
}

/// `t_sequence`: `t_m = (Σ_{k=m−1}^{L−1} β_k + (L−m+1) ε₃ + ε₂)^{1/2}` for
/// `m = 1..=L` (β indexed from `k = 0`), then `C θ^m` up to `horizon`.
pub fn t_sequence(
    beta: &[ValidatedReal],
    eps2: &ValidatedReal,
    eps3: &ValidatedReal,
    theta: &ValidatedReal,
    c: &ValidatedReal,
    l: usize,
    horizon: usize,
) -> Vec<ValidatedReal> {
    let p = eps2.precision();
    let mut out = vec![ValidatedReal::zero(p); l];
    let mut tail = eps2.clone();
    for m in (1..=l).rev() {
        tail = tail.add(&beta[m - 1]);
        let s = tail.add(&eps3.mul_int((l - m + 1) as i64));
        out[m - 1] = s.max(&ValidatedReal::zero(p)).sqrt().unwrap();
    }
    for m in l + 1..=horizon {
        out.push(c.mul(&theta.powi(m as i32).unwrap()));
    }
    out
}

/// `elementary_symmetric`: `B_k = e_k(t_1, …, t_L)` for `k = 0..=L` via the
/// product `Π (1 + t_m x)`, with `ε₄` the largest enclosure width.
pub fn elementary_symmetric(t_seq: &[ValidatedReal], l: usize) -> (Vec<ValidatedReal>, ValidatedReal) {
    let p = t_seq.first().map(|t| t.precision()).unwrap_or(crate::arith::MIN_PRECISION);
    let mut b = vec![ValidatedReal::zero(p); l + 1];
    b[0] = ValidatedReal::one(p);
    for (m, t) in t_seq.iter().take(l).enumerate() {
        for k in (1..=(m + 1).min(l)).rev() {
            b[k] = b[k].add(&b[k - 1].mul(t));
        }
    }
    let mut eps = Float::with_val(p, 0);
    for v in &b {
        let w = v.width();
        if w > eps {
            eps = w;
        }
    }
    (b, ValidatedReal::point(eps))
}

/// `c = 1/Π_{j≥1}(1 − θ^j)`: finite product plus a bound on the log-tail.
pub fn euler_constant(theta: &ValidatedReal) -> ValidatedReal {
    let p = theta.precision();
    let one = ValidatedReal::one(p);
    let th = ValidatedReal::point(theta.hi().clone());
    let mut prod = one.clone();
    let mut pw = one.clone();
    let mut j = 0;
    loop {
        j += 1;
        pw = pw.mul(&th);
        prod = prod.mul(&one.sub(&pw));
        if pw.hi().get_exp().unwrap_or(i32::MIN) < -(p as i32) - 8 || j > 100_000 {
            break;
        }
    }
    // −Σ_{j>J} log(1 − θ^j) ≤ θ^{J+1} / ((1 − θ)(1 − θ^{J+1}))
    let next = pw.mul(&th);
    let tail = next.div(&one.sub(&th).mul(&one.sub(&next))).unwrap();
    let c = prod.recip().unwrap();
    ValidatedReal::new(c.lo().clone(), c.mul(&tail.exp()).hi().clone())
}

/// `euler_bound`: `Cⁿ r^{n(n+1)/2} / Π_{j=1}^n (1 − r^j)`.
pub fn euler_bound(c: &ValidatedReal, r: &ValidatedReal, n: usize) -> ValidatedReal {
    let p = c.precision();
    let one = ValidatedReal::one(p);
    let mut den = one.clone();
    let mut pw = one.clone();
    for _ in 0..n {
        pw = pw.mul(r);
        den = den.mul(&one.sub(&pw));
    }
    let e = (n * (n + 1) / 2) as i32;
    c.powi(n as i32)
        .unwrap()
        .mul(&r.powi(e).unwrap())
        .div(&den)
        .expect("0 < r < 1")
}

/// Everything needed to bound `|a_n|` for `n > N`.
#[derive(Clone, Debug)]
pub struct TailCertificate {
    /// Disc on which the operator was bounded.
    pub disc: Disc,
    pub theta: ValidatedReal,
    pub rule: RatioRule,
    /// Constant with `t_m ≤ C θ^m` for `m > L`.
    pub c: ValidatedReal,
    /// `sup Σ_j |w_j|` on the boundary circle.
    pub w: ValidatedReal,
    pub n: usize,
    pub l: usize,
    pub beta: Vec<ValidatedReal>,
    pub eps2: ValidatedReal,
    pub eps3: ValidatedReal,
    pub eps4: ValidatedReal,
    pub t_seq: Vec<ValidatedReal>,
    /// `B_0 = 1, B_1, …, B_L`.
    pub b: Vec<ValidatedReal>,
    pub euler_c: ValidatedReal,
    /// `q = θ^L C`.
    pub q: ValidatedReal,
    /// `γ_n` for `N < n ≤ L` (index `n − N − 1`).
    pub gamma: Vec<ValidatedReal>,
    pub xi: ValidatedReal,
    pub param: ParamBox,
    pub plan: String,
    pub eps1: Option<ValidatedReal>,
}

/// `(θ, C)` on the system's own disc, with `C = W/(θ √(1 − θ²))` so that
/// the `m`-th singular value is at most `C θ^m`.
pub fn geometric_constants(
    system: &SystemSpec,
    plan: &WeightPlan,
    pbox: &ParamBox,
    obs: Option<&Observable>,
    prec: u32,
) -> Result<(ValidatedReal, ValidatedReal), TailError> {
    if system.discs.len() != 1 {
        return Err(TailError::Unsupported);
    }
    let theta = contraction_ratio(system, prec)?;
    let th = ValidatedReal::point(theta.hi().clone());
    let wb = circle_bounds(system, &plan.mode, &pbox.complex(), obs, &Rational::from(1), prec)?;
    let w = wb
        .iter()
        .fold(ValidatedReal::zero(prec), |a, (wj, _)| a.add(&ValidatedReal::point(wj.clone())));
    let one = ValidatedReal::one(prec);
    let c = w.div(&th.mul(&one.sub(&th.sqr()).sqrt().unwrap())).unwrap();
    Ok((theta, c))
}

/// Picks the disc for the certificate. The determinant does not depend on
/// the disc, so any disc mapped strictly into itself by every branch will do;
/// a coarse search over discs around the attractor minimizes the estimated
/// size of `e_{N+1}`. The system disc is kept if nothing beats it.
pub fn certificate_disc(
    system: &SystemSpec,
    plan: &WeightPlan,
    pbox: &ParamBox,
    obs: Option<&Observable>,
    n: usize,
    prec: u32,
) -> SystemSpec {
    let lp = crate::arith::MIN_PRECISION;
    let t_mid = ValidatedComplex::real(ValidatedReal::point(pbox.t.mid()).with_precision(lp));
    let m = (n + 1) as f64;
    let score = |disc: &Disc| -> Option<f64> {
        let mut trial = system.clone();
        trial.discs = vec![disc.clone()];
        let samples = 64i64;
        let (mut th, mut w) = (0f64, 0f64);
        for s in 0..samples {
            let z = disc.boundary_point(lp, &Rational::from((s, samples)), &Rational::from(1));
            let mut ws = 0f64;
            for j in 0..trial.branch_count() {
                let (wj, uj) = weight_and_image(&trial, j, &z, &plan.mode, &t_mid, obs).ok()?;
                ws += wj.mag().to_f64();
                th = th.max(uj.mag().to_f64());
            }
            w = w.max(ws);
        }
        if !(th < 0.95) || !(w > 0.0) {
            return None;
        }
        let c = w / (th * (1.0 - th * th).sqrt());
        Some(m * c.ln() + m * (m + 1.0) / 2.0 * th.ln())
    };
    let Some(base) = system.discs.first() else {
        return system.clone();
    };
    if system.discs.len() != 1 || system.is_julia() {
        return system.clone();
    }
    let (a, b) = system.real_fragment.clone();
    let w = Rational::from(&b - &a).max(Rational::from((1, 20)));
    let mut cands: Vec<(f64, Disc)> = Vec::new();
    if let Some(s) = score(base) {
        cands.push((s, base.clone()));
    }
    for i in -8i64..=16 {
        let c = a.clone() + Rational::from(&b - &a) * Rational::from((i, 8));
        let mut r = w.clone() * Rational::from((3, 5));
        for _ in 0..21 {
            let d = Disc::new(c.clone(), r.clone());
            if let Some(s) = score(&d) {
                cands.push((s, d));
            }
            r *= Rational::from((5, 4));
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (_, d) in cands {
        let mut trial = system.clone();
        trial.discs = vec![d.clone()];
        if contraction_ratio(&trial, prec).is_ok() {
            return trial;
        }
    }
    system.clone()
}

/// Default bound order `L = max(4N, 200)`.
pub fn default_bound_order(n: usize) -> usize {
    (4 * n).max(200)
}

/// Builds the certificate for a Bernoulli system over a parameter box.
pub fn build_certificate(
    system: &SystemSpec,
    plan: &WeightPlan,
    pbox: &ParamBox,
    obs: Option<&Observable>,
    n: usize,
    l: usize,
    prec: u32,
) -> Result<TailCertificate, TailError> {
    assert!(l > n, "bound order L must exceed N");
    if system.discs.len() != 1 {
        return Err(TailError::Unsupported);
    }
    let optimized = certificate_disc(system, plan, pbox, obs, n, prec);
    let system = &optimized;
    let (theta, rule) = contraction_ratio_rule(system, prec)?;
    let th = ValidatedReal::point(theta.hi().clone());
    let one = ValidatedReal::one(prec);
    let tbox = pbox.complex();
    let wb = circle_bounds(system, &plan.mode, &tbox, obs, &Rational::from(1), prec)?;
    let w = wb
        .iter()
        .fold(ValidatedReal::zero(prec), |a, (wj, _)| a.add(&ValidatedReal::point(wj.clone())));
    let one_m_th2 = one.sub(&th.sqr());
    let th_2l = th.powi(2 * l as i32).unwrap();
    let eps2 = w.sqr().mul(&th_2l).div(&one_m_th2).unwrap();
    let c = w.div(&th.mul(&one_m_th2.sqrt().unwrap())).unwrap();
    let (beta, eps3) = basis_image_norms(system, plan, pbox, obs, l, &th_2l)?;
    let t_seq = t_sequence(&beta, &eps2, &eps3, &th, &c, l, l);
    let (b, eps4) = elementary_symmetric(&t_seq, l);
    let euler_c = euler_constant(&th);
    let q = th.powi(l as i32).unwrap().mul(&c);
    if !q.certainly_lt(&one) {
        return Err(TailError::CertificateVacuous(q.hi().to_f64()));
    }
    let bhi: Vec<ValidatedReal> = b.iter().map(|v| ValidatedReal::point(v.hi().clone())).collect();
    let qh = ValidatedReal::point(q.hi().clone());
    let mut qpow = vec![one.clone()];
    for k in 1..=l {
        qpow.push(qpow[k - 1].mul(&qh));
    }
    let gamma: Vec<ValidatedReal> = (n + 1..=l)
        .map(|m| {
            let s = (0..=m).fold(ValidatedReal::zero(prec), |a, k| a.add(&bhi[k].mul(&qpow[m - k])));
            euler_c.mul(&s)
        })
        .collect();
    let qinv = qh.recip().unwrap();
    let mut xi_s = ValidatedReal::zero(prec);
    let mut qi = one.clone();
    for bk in &bhi {
        xi_s = xi_s.add(&bk.mul(&qi));
        qi = qi.mul(&qinv);
    }
    let xi = euler_c.mul(&xi_s);
    Ok(TailCertificate {
        disc: system.discs[0].clone(),
        theta,
        rule,
        c,
        w,
        n,
        l,
        beta,
        eps2,
        eps3,
        eps4,
        t_seq,
        b,
        euler_c,
        q,
        gamma,
        xi,
        param: pbox.clone(),
        plan: plan.name().to_string(),
        eps1: None,
    })
}

/// `coefficient_bound`: upper bound on `|a_n(t)|` over the parameter box.
pub fn coefficient_bound(cert: &TailCertificate, n: usize) -> ValidatedReal {
    assert!(n > cert.n, "bounds cover n > N only");
    if n <= cert.l {
        cert.gamma[n - cert.n - 1].clone()
    } else {
        let qh = ValidatedReal::point(cert.q.hi().clone());
        cert.xi.mul(&qh.powi(n as i32).unwrap())
    }
}

/// Upper bound on `Σ_{n>N} n^{(j)} |a_n| x^{n−j}` (falling factorial
/// `n^{(j)}`), scaled by `m!/h^m` for the `m`-th `t`-derivative.
pub fn tail_remainder(cert: &TailCertificate, x: &ValidatedReal, j: u32, m: u32) -> Result<ValidatedReal, TailError> {
    let p = x.precision();
    let xh = ValidatedReal::point(x.abs().hi().clone());
    let one = ValidatedReal::one(p);
    let qh = ValidatedReal::point(cert.q.hi().clone());
    let u = xh.mul(&qh);
    let ff = |n: usize| -> i64 { (0..j as i64).map(|i| n as i64 - i).product::<i64>().max(0) };
    let mut s = ValidatedReal::zero(p);
    for (i, g) in cert.gamma.iter().enumerate() {
        let n = cert.n + 1 + i;
        if n < j as usize {
            continue;
        }
        s = s.add(&g.mul(&xh.powi((n - j as usize) as i32).unwrap()).mul_int(ff(n)));
    }
    // n > L: ξ qʲ Σ_{n≥L+1} n^{(j)} u^{n−j} ≤ first term / (1 − ratio)
    let n0 = cert.l + 1;
    let ratio = u.mul(&ValidatedReal::from_ratio(p, n0 as i64 + 1, (n0 as i64 + 1 - j as i64).max(1)));
    if !ratio.certainly_lt(&one) {
        return Err(TailError::RadiusExceeded);
    }
    let first = u.powi((n0 - j as usize) as i32).unwrap().mul_int(ff(n0));
    let tail = cert
        .xi
        .mul(&qh.powi(j as i32).unwrap())
        .mul(&first)
        .div(&one.sub(&ratio))
        .unwrap();
    s = s.add(&tail);
    if m > 0 {
        if cert.param.h == 0 {
            return Err(TailError::Unsupported);
        }
        let h = ValidatedReal::from_rational(p, &cert.param.h);
        let fact = (1..=m as i64).product::<i64>();
        s = s.mul_int(fact).div(&h.powi(m as i32).unwrap()).unwrap();
    }
    Ok(ValidatedReal::new(Float::with_val(p, 0), s.hi().clone()))
}

/// `determinant_remainder`: `R ≥ |d(z,t) − d_N(z,t)|` over the parameter box.
pub fn determinant_remainder(
    cert: &TailCertificate,
    series: &CoefficientSeries,
    z: &ValidatedComplex,
) -> Result<ValidatedReal, TailError> {
    assert_eq!(cert.n, series.order, "certificate and series orders differ");
    tail_remainder(cert, &z.abs(), 0, 0)
}

impl TailCertificate {
    pub fn gamma_max(&self) -> ValidatedReal {
        let p = self.theta.precision();
        self.gamma
            .iter()
            .fold(ValidatedReal::zero(p), |a, g| a.max(g))
    }

    /// Radius below which the remainder series converges.
    pub fn certified_radius(&self) -> f64 {
        1.0 / self.q.hi().to_f64()
    }

    pub fn to_json(&self) -> Value {
        let d = 12;
        let e1 = self
            .eps1
            .as_ref()
            .map(|e| interval_json(e, d))
            .unwrap_or(Value::Null);
        json!({
            "theta": interval_json(&self.theta, d),
            "theta_rule": self.rule.label(),
            "disc": { "center": self.disc.center.to_f64(), "radius": self.disc.radius.to_f64() },
            "C": interval_json(&self.c, d),
            "W": interval_json(&self.w, d),
            "N": self.n,
            "L": self.l,
            "eps": [e1, interval_json(&self.eps2, d), interval_json(&self.eps3, d), interval_json(&self.eps4, d)],
            "gamma_max": interval_json(&self.gamma_max(), d),
            "xi": interval_json(&self.xi, d),
            "q": interval_json(&self.q, d),
            "plan": self.plan,
            "param_box": {
                "t": interval_json(&self.param.t, d),
                "h": self.param.h.to_f64(),
            },
            "index_note": "||L q_k||^2 <= (W theta^k)^2; t_m sums beta_k from k = m-1",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{load_system, Branch, Disc};

    const P: u32 = 256;

    fn iv(x: f64) -> ValidatedReal {
        ValidatedReal::from_f64(P, x)
    }

    #[test]
    fn e2_theta() {
        let sys = load_system("system=e2").unwrap();
        let th = contraction_ratio(&sys, P).unwrap();
        assert!(th.contains_rational(&Rational::from((2, 3))));
    }

    #[test]
    fn cantor_theta_formula() {
        let sys = load_system("system=cantor").unwrap();
        let th = contraction_ratio(&sys, P).unwrap();
        // images B(1/6, 1/3) and B(5/6, 1/3) inside B(1/2, 1)
        assert!(th.contains_rational(&Rational::from((2, 3))));
    }

    #[test]
    fn single_halving_map() {
        let mut sys = load_system("system=cantor").unwrap();
        sys.branches = vec![Branch::affine(Rational::from((1, 2)), Rational::new())];
        sys.discs = vec![Disc::new(Rational::new(), Rational::from(1))];
        sys.real_fragment = (Rational::from(-1), Rational::from(1));
        let th = contraction_ratio(&sys, P).unwrap();
        assert!(th.contains_f64(0.5) && th.width() == 0.0);
        // L q_k = (z/2)^k: β_k = 4^{-k}
        let plan = WeightPlan::mixing(P);
        let target = ValidatedReal::from_f64(P, 1e-40);
        let pb = ParamBox::real(ValidatedReal::zero(P));
        let (beta, _) = basis_image_norms(&sys, &plan, &pb, None, 6, &target).unwrap();
        for (k, b) in beta.iter().enumerate() {
            // mixing weight is ψ' = 1/2
            let exact = 0.25f64.powi(k as i32) * 0.25;
            assert!((b.mid_f64() - exact).abs() < 1e-30, "k={k}");
        }
    }

    #[test]
    fn eps2_examples() {
        let v = tail_eps2(&iv(0.5), &iv(1.0), 10);
        assert!(v.contains_f64(2f64.powi(-9)));
        let v = tail_eps2(&ValidatedReal::from_ratio(P, 2, 3), &iv(2.0), 0);
        assert!(v.contains_f64(6.0));
    }

    #[test]
    fn t_sequence_cases() {
        let z = ValidatedReal::zero(P);
        let t = t_sequence(&vec![z.clone(); 5], &z, &z, &iv(0.5), &iv(1.0), 5, 5);
        assert!(t.iter().all(|v| v.contains_f64(0.0)));
        // geometric β_k = 4^{-k} with exact tail: t_m² = Σ_{k≥m−1} 4^{-k}
        let l = 40;
        let beta: Vec<_> = (0..l).map(|k| iv(0.25f64.powi(k as i32))).collect();
        let eps2 = ValidatedReal::from_f64(P, 0.25f64.powi(l as i32) * 4.0 / 3.0);
        let t = t_sequence(&beta, &eps2, &z, &iv(0.5), &iv(1.0), l, l);
        for m in 1..=10 {
            let exact = (0.25f64.powi(m as i32 - 1) * 4.0 / 3.0).sqrt();
            assert!((t[m - 1].mid_f64() - exact).abs() < 1e-14 * exact);
        }
        assert!(t.windows(2).all(|w| w[1].hi() <= w[0].hi()));
    }

    #[test]
    fn elementary_symmetric_small() {
        let t = vec![iv(0.5), iv(0.25), iv(0.125)];
        let (b, eps4) = elementary_symmetric(&t, 3);
        assert!(b[1].contains_f64(0.875));
        assert!(b[2].contains_f64(0.21875));
        assert!(b[3].contains_f64(0.015625));
        assert!(eps4.hi().to_f64() < 1e-70);
        let (b, _) = elementary_symmetric(&vec![ValidatedReal::zero(P); 4], 4);
        assert!(b[1..].iter().all(|v| v.contains_f64(0.0)));
    }

    #[test]
    fn euler_bound_examples() {
        let h = ValidatedReal::from_ratio(P, 1, 2);
        assert!(euler_bound(&iv(1.0), &h, 1).contains_f64(1.0));
        assert!(euler_bound(&iv(1.0), &h, 2).overlaps(&ValidatedReal::from_ratio(P, 1, 3)));
        assert!(euler_bound(&iv(1.0), &h, 3).overlaps(&ValidatedReal::from_ratio(P, 1, 21)));
    }

    #[test]
    fn euler_constant_half() {
        // Π (1 − 2^{-j}) = 0.288788095086602421...
        let c = euler_constant(&ValidatedReal::from_ratio(P, 1, 2));
        assert!(c.contains_f64(1.0 / 0.2887880950866024) || (c.mid_f64() - 3.462746619455064).abs() < 1e-13);
        assert!(c.width() < 1e-60);
    }
}
