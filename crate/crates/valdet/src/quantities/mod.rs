//! Dynamical quantities from coefficient series and tail certificates.
//!
//! Every quantity is read off the determinant `d(z, t)` near its leading zero
//! `z = 1`: implicit differentiation of `d(z(t), t) = 0` expresses integrals
//! and the variance through the sums `A … E`, and the dimension and decay
//! rates are zeros in `t` or `z`.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::arith::{float_to_decimal, ValidatedReal};
use crate::determinant::{
    build_series, evaluate_real, output_digits, CoefficientSeries, DeterminantError, QuantitySums, Which,
    WeightPlan,
};
use crate::periodic::{
    build_primitive_table, julia::julia_table, Observable, OrbitSource, PeriodicError, TermCache,
    TraceConvention,
};
use crate::systems::{SystemError, SystemSpec};
use crate::tailbounds::{build_certificate, default_bound_order, tail_remainder, ParamBox, TailCertificate, TailError};

#[derive(Debug, Clone, Error)]
pub enum QuantityError {
    #[error("denominator interval contains zero")]
    DenominatorContainsZero,
    #[error("bracket endpoints do not have certified opposite signs")]
    NoSignChange,
    #[error("enclosures too wide to refine the bracket to the target width")]
    PrecisionExhausted(Box<RootBracket>),
    #[error("no second real zero within the scanned region")]
    NoSecondZero,
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error(transparent)]
    Determinant(#[from] DeterminantError),
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A quantity with its enclosure. When `uncertified` is false the true value
/// lies in `[lower, upper]`.
#[derive(Clone, Debug)]
pub struct CertifiedValue {
    pub name: String,
    pub estimate: Float,
    pub lower: Float,
    pub upper: Float,
    pub order_n: usize,
    pub certificate: Option<Value>,
    pub uncertified: bool,
    /// Quantity-specific fields (heuristic error, alternative formulas,
    /// reason a certification attempt failed).
    pub extra: Map<String, Value>,
}

impl CertifiedValue {
    fn new(name: &str, estimate: Float, enclosure: &ValidatedReal, order_n: usize) -> Self {
        let p = estimate.prec();
        let lower = Float::with_val(p, enclosure.lo()).min(&estimate);
        let upper = Float::with_val(p, enclosure.hi()).max(&estimate);
        CertifiedValue {
            name: name.to_string(),
            estimate,
            lower,
            upper,
            order_n,
            certificate: None,
            uncertified: true,
            extra: Map::new(),
        }
    }

    pub fn interval(&self) -> ValidatedReal {
        ValidatedReal::new(self.lower.clone(), self.upper.clone())
    }

    pub fn width(&self) -> f64 {
        Float::with_val(self.upper.prec(), &self.upper - &self.lower).to_f64()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lower <= x && self.upper >= x
    }

    fn note(&mut self, key: &str, v: Value) {
        self.extra.insert(key.to_string(), v);
    }

    /// Result record; decimals carry `precision·log₁₀2 − 5` digits.
    pub fn to_json(&self, system: &str, runtime_seconds: Option<f64>) -> Value {
        let d = output_digits(self.estimate.prec());
        let mut m = Map::new();
        m.insert("quantity".into(), json!(self.name));
        m.insert("system".into(), json!(system));
        m.insert("N".into(), json!(self.order_n));
        m.insert("estimate".into(), json!(float_to_decimal(&self.estimate, d, Round::Nearest)));
        m.insert("lower".into(), json!(float_to_decimal(&self.lower, d, Round::Down)));
        m.insert("upper".into(), json!(float_to_decimal(&self.upper, d, Round::Up)));
        m.insert("uncertified".into(), json!(self.uncertified));
        m.insert("certificate".into(), self.certificate.clone().unwrap_or(Value::Null));
        if let Some(t) = runtime_seconds {
            m.insert("runtime_seconds".into(), json!(t));
        }
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

/// A certified sign change of a real function on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct RootBracket {
    pub lo: Float,
    pub hi: Float,
    pub f_lo: ValidatedReal,
    pub f_hi: ValidatedReal,
    /// Slack added to each enclosure before testing its sign.
    pub margin: Float,
}

impl RootBracket {
    pub fn width(&self) -> Float {
        Float::with_val(self.lo.prec(), &self.hi - &self.lo)
    }

    pub fn as_interval(&self) -> ValidatedReal {
        ValidatedReal::new(self.lo.clone(), self.hi.clone())
    }
}

type ScalarFn<'a> = dyn Fn(&Float) -> Result<ValidatedReal, QuantityError> + 'a;

fn signs_differ(a: &ValidatedReal, b: &ValidatedReal) -> bool {
    let (sa, sb) = (a.certain_sign(), b.certain_sign());
    sa != 0 && sb != 0 && sa != sb
}

/// `validated_root`: dyadic bisection keeping a certified sign change.
/// `f` must return enclosures that already include any truncation error;
/// `margin` is added on both sides before a sign is accepted.
pub fn validated_root(
    f: &ScalarFn<'_>,
    lo: &Float,
    hi: &Float,
    target_width: &Float,
    margin: &Float,
) -> Result<RootBracket, QuantityError> {
    let eval = |x: &Float| -> Result<ValidatedReal, QuantityError> { Ok(f(x)?.inflate(margin)) };
    let (f_lo, f_hi) = (eval(lo)?, eval(hi)?);
    if !signs_differ(&f_lo, &f_hi) {
        return Err(QuantityError::NoSignChange);
    }
    let s_lo = f_lo.certain_sign();
    let mut b = RootBracket {
        lo: lo.clone(),
        hi: hi.clone(),
        f_lo,
        f_hi,
        margin: margin.clone(),
    };
    let p = lo.prec();
    while b.width() > *target_width {
        let mid = Float::with_val(p, &b.lo + &b.hi) / 2u32;
        if mid <= b.lo || mid >= b.hi {
            break;
        }
        let fm = eval(&mid)?;
        match fm.certain_sign() {
            0 => {
                // an undecided midpoint may sit on the root: try the bracket
                // of half the width centred there
                let q = Float::with_val(p, &b.hi - &b.lo) / 4u32;
                let (a, c) = (Float::with_val(p, &mid - &q), Float::with_val(p, &mid + &q));
                let (fa, fc) = (eval(&a)?, eval(&c)?);
                if fa.certain_sign() != s_lo || !signs_differ(&fa, &fc) {
                    return Err(QuantityError::PrecisionExhausted(Box::new(b)));
                }
                b.lo = a;
                b.hi = c;
                b.f_lo = fa;
                b.f_hi = fc;
            }
            s if s == s_lo => {
                b.lo = mid;
                b.f_lo = fm;
            }
            _ => {
                b.hi = mid;
                b.f_hi = fm;
            }
        }
    }
    Ok(b)
}

/// Bisection on midpoint signs only; no certification.
fn heuristic_root(f: &ScalarFn<'_>, lo: &Float, hi: &Float) -> Result<Float, QuantityError> {
    let p = lo.prec();
    let sign = |x: &Float| -> Result<i32, QuantityError> {
        let m = f(x)?.mid();
        Ok(if m.is_zero() { 0 } else if m.is_sign_negative() { -1 } else { 1 })
    };
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let sa = sign(&a)?;
    let sb = sign(&b)?;
    if sa == 0 {
        return Ok(a);
    }
    if sb == 0 {
        return Ok(b);
    }
    if sa == sb {
        return Err(QuantityError::NoSignChange);
    }
    for _ in 0..p + 8 {
        let mid = Float::with_val(p, &a + &b) / 2u32;
        if mid <= a || mid >= b {
            break;
        }
        match sign(&mid)? {
            0 => return Ok(mid),
            s if s == sa => a = mid,
            _ => b = mid,
        }
    }
    Ok(Float::with_val(p, &a + &b) / 2u32)
}

/// Knobs shared by the pipelines.
#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub precision: u32,
    /// Bound order `L`; defaults to `max(4N, 200)`.
    pub bound_order: Option<usize>,
    /// Cauchy radius for derivative tails.
    pub h: Rational,
    /// Parameter bracket for dimension roots.
    pub bracket: Option<(Rational, Rational)>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            precision: 256,
            bound_order: None,
            h: Rational::from((1, 8)),
            bracket: None,
        }
    }
}

impl PipelineOptions {
    fn l(&self, n: usize) -> usize {
        self.bound_order.unwrap_or_else(|| default_bound_order(n)).max(n + 1)
    }
}

/// Tail enclosures `[−R, R]` for the sums `A … E` at `z = 1`.
fn sum_tails(cert: &TailCertificate, prec: u32) -> Result<QuantitySums, TailError> {
    let one = ValidatedReal::one(prec);
    let r = |j: u32, m: u32| -> Result<ValidatedReal, TailError> {
        Ok(ValidatedReal::symmetric(tail_remainder(cert, &one, j, m)?.hi()))
    };
    Ok(QuantitySums {
        a: r(1, 0)?,
        b: r(2, 0)?,
        c: r(0, 1)?,
        d: r(1, 1)?,
        e: r(0, 2)?,
    })
}

fn widen(s: &QuantitySums, t: &QuantitySums) -> QuantitySums {
    QuantitySums {
        a: s.a.add(&t.a),
        b: s.b.add(&t.b),
        c: s.c.add(&t.c),
        d: s.d.add(&t.d),
        e: s.e.add(&t.e),
    }
}

fn neg_quotient(c: &ValidatedReal, a: &ValidatedReal) -> Result<ValidatedReal, QuantityError> {
    if a.contains_zero() {
        return Err(QuantityError::DenominatorContainsZero);
    }
    Ok(c.div(a).map_err(|_| QuantityError::DenominatorContainsZero)?.neg())
}

fn ratio_value(name: &str, series: &CoefficientSeries, cert: Option<&TailCertificate>) -> Result<CertifiedValue, QuantityError> {
    let s = &series.sums;
    let est = neg_quotient(&s.c, &s.a)?;
    let mut v = match cert {
        Some(cert) => {
            let full = widen(s, &sum_tails(cert, est.precision())?);
            let mut v = CertifiedValue::new(name, est.mid(), &neg_quotient(&full.c, &full.a)?, series.order);
            v.uncertified = false;
            v.certificate = Some(cert.to_json());
            v
        }
        None => CertifiedValue::new(name, est.mid(), &est, series.order),
    };
    v.note("convention", json!(series.convention));
    Ok(v)
}

/// `lyapunov_exponent`: `−C/A` from a Lyapunov-plan series.
pub fn lyapunov_exponent(series: &CoefficientSeries, cert: Option<&TailCertificate>) -> Result<CertifiedValue, QuantityError> {
    ratio_value("lyapunov", series, cert)
}

/// `gibbs_integral`: `∫ g dμ = −C/A` from a custom-plan series.
pub fn gibbs_integral(series: &CoefficientSeries, cert: Option<&TailCertificate>) -> Result<CertifiedValue, QuantityError> {
    ratio_value("integral", series, cert)
}

/// The displayed variance expression
/// `(C/A)² + (1/A)(B(C/A)² − 2DB(C/A) + E)` and the implicit-differentiation
/// form with `−2D(C/A)` in the cross term.
fn variance_forms(s: &QuantitySums) -> Result<(ValidatedReal, ValidatedReal), QuantityError> {
    if s.a.contains_zero() {
        return Err(QuantityError::DenominatorContainsZero);
    }
    let r = s.c.div(&s.a).map_err(|_| QuantityError::DenominatorContainsZero)?;
    let inv_a = s.a.recip().map_err(|_| QuantityError::DenominatorContainsZero)?;
    let r2 = r.sqr();
    let verbatim = r2.add(&inv_a.mul(&s.b.mul(&r2).sub(&s.d.mul(&s.b).mul(&r).mul_2exp(1)).add(&s.e)));
    let implicit = r2.add(&inv_a.mul(&s.b.mul(&r2).sub(&s.d.mul(&r).mul_2exp(1)).add(&s.e)));
    Ok((verbatim, implicit))
}

/// `variance`: the displayed formula is the estimate; the reported interval
/// is the hull of both forms (with tails when certified), and the implicit
/// form is recorded as `variance_implicit`.
pub fn variance(series: &CoefficientSeries, cert: Option<&TailCertificate>) -> Result<CertifiedValue, QuantityError> {
    let (v_est, phi_est) = variance_forms(&series.sums)?;
    let digits = output_digits(v_est.precision());
    let (enc, certified) = match cert {
        Some(cert) => {
            let full = widen(&series.sums, &sum_tails(cert, v_est.precision())?);
            let (v, phi) = variance_forms(&full)?;
            (v.hull(&phi), true)
        }
        None => (v_est.hull(&phi_est), false),
    };
    let mut out = CertifiedValue::new("variance", v_est.mid(), &enc, series.order);
    out.uncertified = !certified;
    out.certificate = cert.map(|c| c.to_json());
    out.note("variance_implicit", json!(float_to_decimal(&phi_est.mid(), digits, Round::Nearest)));
    out.note("convention", json!(series.convention));
    Ok(out)
}

fn primitive_source(
    system: &SystemSpec,
    n: usize,
    prec: u32,
    obs: Option<&Observable>,
    word_convention: bool,
) -> Result<TermCache, QuantityError> {
    let mut table = build_primitive_table(system, n, prec, obs)?;
    if word_convention {
        table.convention = TraceConvention::Word;
    }
    Ok(TermCache::new(&table))
}

fn certificate_or_note(
    system: &SystemSpec,
    plan: &WeightPlan,
    pbox: &ParamBox,
    obs: Option<&Observable>,
    n: usize,
    opts: &PipelineOptions,
) -> Result<TailCertificate, String> {
    if system.is_julia() {
        return Err("no tail certificate for the Julia presentation".into());
    }
    build_certificate(system, plan, pbox, obs, n, opts.l(n), opts.precision).map_err(|e| e.to_string())
}

/// Shared driver for `−C/A`-type quantities and the variance.
fn integral_pipeline(
    system: &SystemSpec,
    plan: &WeightPlan,
    obs: Option<&Observable>,
    n: usize,
    validate: bool,
    opts: &PipelineOptions,
    finish: fn(&CoefficientSeries, Option<&TailCertificate>) -> Result<CertifiedValue, QuantityError>,
) -> Result<CertifiedValue, QuantityError> {
    let src = primitive_source(system, n, opts.precision, obs, validate)?;
    let series = build_series(&src, plan, n)?;
    if !validate {
        return finish(&series, None);
    }
    let pbox = ParamBox::around(plan.base_t.clone(), opts.h.clone());
    match certificate_or_note(system, plan, &pbox, obs, n, opts) {
        Ok(mut cert) => match {
            cert.eps1 = Some(series.eps1.clone());
            finish(&series, Some(&cert))
        } {
            Ok(v) => Ok(v),
            Err(e) => {
                let mut v = finish(&series, None)?;
                v.note("certification_error", json!(e.to_string()));
                Ok(v)
            }
        },
        Err(msg) => {
            let mut v = finish(&series, None)?;
            v.note("certification_error", json!(msg));
            Ok(v)
        }
    }
}

/// Lyapunov exponent of the SRB measure.
pub fn lyapunov_pipeline(system: &SystemSpec, n: usize, validate: bool, opts: &PipelineOptions) -> Result<CertifiedValue, QuantityError> {
    let plan = WeightPlan::lyapunov(opts.precision);
    integral_pipeline(system, &plan, None, n, validate, opts, lyapunov_exponent)
}

/// `∫ g dμ` for the SRB measure and a polynomial observable.
pub fn integral_pipeline_for(
    system: &SystemSpec,
    g: &Observable,
    n: usize,
    validate: bool,
    opts: &PipelineOptions,
) -> Result<CertifiedValue, QuantityError> {
    let plan = WeightPlan::custom(opts.precision);
    integral_pipeline(system, &plan, Some(g), n, validate, opts, gibbs_integral)
}

/// Variance of `log|T'|`, centered by a first Lyapunov estimate.
pub fn variance_pipeline(system: &SystemSpec, n: usize, validate: bool, opts: &PipelineOptions) -> Result<CertifiedValue, QuantityError> {
    let src = primitive_source(system, n, opts.precision, None, validate)?;
    let lyap = build_series(&src, &WeightPlan::lyapunov(opts.precision), n)?;
    let m = neg_quotient(&lyap.sums.c, &lyap.sums.a)?;
    let plan = WeightPlan::variance(ValidatedReal::point(m.mid()));
    let series = build_series(&src, &plan, n)?;
    let mut v = if validate {
        let pbox = ParamBox::around(plan.base_t.clone(), opts.h.clone());
        let cert = certificate_or_note(system, &plan, &pbox, None, n, opts).map(|mut c| {
            c.eps1 = Some(series.eps1.clone());
            c
        });
        match cert.map(|c| variance(&series, Some(&c))) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => {
                let mut v = variance(&series, None)?;
                v.note("certification_error", json!(e.to_string()));
                v
            }
            Err(msg) => {
                let mut v = variance(&series, None)?;
                v.note("certification_error", json!(msg));
                v
            }
        }
    } else {
        variance(&series, None)?
    };
    v.note("center", json!(float_to_decimal(&m.mid(), output_digits(opts.precision), Round::Nearest)));
    Ok(v)
}

fn dimension_value(src: &dyn OrbitSource, order: usize, t: &Float) -> Result<ValidatedReal, QuantityError> {
    let p = src.precision();
    let series = build_series(src, &WeightPlan::dimension(ValidatedReal::point(t.clone())), order)?;
    Ok(evaluate_real(&series, &ValidatedReal::one(p), Which::Value))
}

fn float_of(q: &Rational, prec: u32) -> Float {
    Float::with_val(prec, q)
}

/// Root of `t ↦ d_N(1, t)` on the bracket by midpoint bisection, together
/// with the order `N − 1` root for the heuristic error.
fn heuristic_dimension(src: &dyn OrbitSource, n: usize, lo: &Float, hi: &Float) -> Result<(Float, Option<Float>), QuantityError> {
    let t_n = heuristic_root(&|t| dimension_value(src, n, t), lo, hi)?;
    let t_prev = if n > 1 {
        heuristic_root(&|t| dimension_value(src, n - 1, t), lo, hi).ok()
    } else {
        None
    };
    Ok((t_n, t_prev))
}

/// `hausdorff_dimension`: zero of `t ↦ d(1, t)`.
///
/// Without validation the order-`N` root is returned with
/// `heuristic_error = |t_N − t_{N−1}|`. With validation a tail certificate is
/// built over a dyadic sub-cell of the bracket around the heuristic root and
/// the cell is bisected on certified signs, so the final interval is always
/// a dyadic cell of the initial bracket.
pub fn hausdorff_dimension(system: &SystemSpec, n: usize, validate: bool, opts: &PipelineOptions) -> Result<CertifiedValue, QuantityError> {
    let p = opts.precision;
    let src = primitive_source(system, n, p, None, validate)?;
    let (blo, bhi) = opts
        .bracket
        .clone()
        .unwrap_or((Rational::from(0), Rational::from(2)));
    let (lo, hi) = (float_of(&blo, p), float_of(&bhi, p));
    let (t_n, t_prev) = heuristic_dimension(&src, n, &lo, &hi)?;
    let err = t_prev
        .as_ref()
        .map(|tp| Float::with_val(p, &t_n - tp).abs())
        .unwrap_or_else(|| Float::with_val(p, 0));
    let digits = output_digits(p);
    let point = ValidatedReal::point(t_n.clone());
    let mut v = CertifiedValue::new("dimension", t_n.clone(), &point.inflate(&err), n);
    v.note("heuristic_error", json!(float_to_decimal(&err, 6, Round::Up)));
    v.note(
        "bracket",
        json!([float_to_decimal(&lo, digits, Round::Down), float_to_decimal(&hi, digits, Round::Up)]),
    );
    if !validate {
        return Ok(v);
    }
    match certify_dimension(system, &src, n, opts, (&blo, &bhi), &t_n, &err) {
        Ok((rb, cert)) => {
            let mut c = CertifiedValue::new("dimension", t_n.clone(), &rb.as_interval(), n);
            c.uncertified = false;
            c.certificate = Some(cert.to_json());
            c.extra = v.extra;
            if !rb.as_interval().contains(&t_n) {
                c.note("heuristic_outside_certified", json!(true));
            }
            Ok(c)
        }
        Err(e) => {
            v.note("certification_error", json!(e.to_string()));
            Ok(v)
        }
    }
}

fn certify_dimension(
    system: &SystemSpec,
    src: &dyn OrbitSource,
    n: usize,
    opts: &PipelineOptions,
    (blo, bhi): (&Rational, &Rational),
    t_n: &Float,
    err: &Float,
) -> Result<(RootBracket, TailCertificate), QuantityError> {
    let p = opts.precision;
    let w = Rational::from(bhi - blo);
    let floor_w = Float::with_val(p, 2).pow(-(p as i32) / 2);
    let want = Float::with_val(p, err * 64u32).max(&floor_w);
    let ratio = Float::with_val(p, &w) / &want;
    let mut level = if ratio > 1 { ratio.log2().to_f64().floor() as i64 } else { 0 };
    level = level.clamp(0, p as i64 - 16);
    let target = {
        let d = output_digits(p) as i32;
        Float::with_val(p, 10).pow(-d)
    };
    let t_rel = Rational::from((Float::with_val(p, t_n - float_of(blo, p)) / float_of(&w, p)).to_rational().unwrap());
    loop {
        let cells = Integer::from(1) << level as u32;
        let idx = Integer::from((t_rel.clone() * &cells).floor_ref()).clamp(&Integer::from(0), &(cells.clone() - 1u32));
        let s = w.clone() / Rational::from(&cells);
        let a = blo.clone() + s.clone() * Rational::from(&idx);
        let b = a.clone() + &s;
        let tbox = ValidatedReal::from_rational(p, &a).hull(&ValidatedReal::from_rational(p, &b));
        let pbox = ParamBox::around(tbox, s.clone() / 8);
        let plan = WeightPlan::dimension(ValidatedReal::point(float_of(&a, p)));
        let attempt = build_certificate(system, &plan, &pbox, None, n, opts.l(n), p)
            .map_err(QuantityError::from)
            .and_then(|cert| {
                let r = tail_remainder(&cert, &ValidatedReal::one(p), 0, 0)?;
                let margin = Float::with_val(p, r.hi() * 2u32);
                let mut cert = cert;
                cert.eps1 = Some(src.eps1());
                let f = |t: &Float| dimension_value(src, n, t);
                match validated_root(&f, &float_of(&a, p), &float_of(&b, p), &target, &margin) {
                    Ok(rb) => Ok((rb, cert)),
                    Err(QuantityError::PrecisionExhausted(rb)) => Ok((*rb, cert)),
                    Err(e) => Err(e),
                }
            });
        match attempt {
            Ok(res) => return Ok(res),
            Err(e) if level == 0 => return Err(e),
            Err(_) => {}
        }
        level = (level - 4).max(0);
    }
}

/// Real zeros of the truncated determinant, in increasing modulus.
pub fn determinant_zeros(
    system: &SystemSpec,
    plan: &WeightPlan,
    n: usize,
    count: usize,
    validate: bool,
    opts: &PipelineOptions,
) -> Result<Vec<CertifiedValue>, QuantityError> {
    let p = opts.precision;
    let src: Box<dyn OrbitSource> = if system.is_julia() {
        let c = system.julia.clone().expect("julia parameter");
        Box::new(TermCache::new(&julia_table(&c, n, p)?))
    } else {
        Box::new(primitive_source(system, n, p, None, false)?)
    };
    let series = build_series(src.as_ref(), plan, n)?;
    let word_series = src.convention() == TraceConvention::Word;
    let cert = if validate && word_series {
        let pbox = ParamBox::real(plan.base_t.clone());
        Some(certificate_or_note(system, plan, &pbox, None, n, opts))
    } else {
        None
    };
    let mut out = real_zeros(&series, count)
        .into_iter()
        .map(|(x, enc)| CertifiedValue::new("zero", x, &enc, n))
        .collect::<Vec<_>>();
    for (i, z) in out.iter_mut().enumerate() {
        z.note("index", json!(i + 1));
        z.note("convention", json!(series.convention));
        match &cert {
            None if validate => {
                z.note("certification_error", json!("circle-geometric series has no tail certificate"));
            }
            None => {}
            Some(Err(msg)) => z.note("certification_error", json!(msg)),
            Some(Ok(cert)) => match certify_zero(&series, cert, &z.estimate) {
                Ok(rb) => {
                    z.lower = rb.lo.min(&z.estimate);
                    z.upper = rb.hi.max(&z.estimate);
                    z.uncertified = false;
                    z.certificate = Some(cert.to_json());
                }
                Err(e) => z.note("certification_error", json!(e.to_string())),
            },
        }
    }
    Ok(out)
}

/// Sign scan of `d_N` on `±[10⁻², 10⁸]` (geometric grid) followed by
/// midpoint bisection of each certain sign change.
fn real_zeros(series: &CoefficientSeries, count: usize) -> Vec<(Float, ValidatedReal)> {
    let p = series.eps1.precision();
    let f = |x: &Float| -> Result<ValidatedReal, QuantityError> {
        Ok(evaluate_real(series, &ValidatedReal::point(x.clone()), Which::Value))
    };
    let step = 1.0005f64;
    let (x0, x1) = (1e-2f64, 1e8f64);
    let steps = ((x1 / x0).ln() / step.ln()).ceil() as usize;
    let mut found: Vec<(Float, ValidatedReal)> = Vec::new();
    for sign in [1.0f64, -1.0] {
        let mut prev: Option<(Float, bool)> = None;
        for k in 0..=steps {
            let x = Float::with_val(p, sign * x0 * step.powi(k as i32));
            // enclosures straddling zero carry no sign; rounding noise in
            // vanishing coefficients must not produce spurious zeros
            let v = f(&x).unwrap();
            if v.contains_zero() {
                continue;
            }
            let neg = v.is_negative();
            if let Some((px, pneg)) = &prev {
                if *pneg != neg {
                    let (a, b) = if sign > 0.0 { (px.clone(), x.clone()) } else { (x.clone(), px.clone()) };
                    if let Ok(r) = heuristic_root(&f, &a, &b) {
                        let enc = ValidatedReal::new(a, b);
                        found.push((r, enc));
                    }
                }
            }
            prev = Some((x, neg));
        }
    }
    found.sort_by(|a, b| a.0.clone().abs().total_cmp(&b.0.clone().abs()));
    found.truncate(count);
    found
        .into_iter()
        .map(|(r, _)| {
            let e = ValidatedReal::point(r.clone());
            (r, e)
        })
        .collect()
}

/// Searches for a certified sign change of `d_N ± 2R` around `x`.
fn certify_zero(series: &CoefficientSeries, cert: &TailCertificate, x: &Float) -> Result<RootBracket, QuantityError> {
    let p = x.prec();
    let f = |t: &Float| -> Result<ValidatedReal, QuantityError> {
        let xv = ValidatedReal::point(t.clone());
        let r = tail_remainder(cert, &xv, 0, 0)?;
        Ok(evaluate_real(series, &xv, Which::Value).inflate(&Float::with_val(p, r.hi() * 2u32)))
    };
    let zero = Float::with_val(p, 0);
    let mut j = p as i32 - 24;
    while j >= 4 {
        let d = Float::with_val(p, x.clone().abs() * Float::with_val(p, 2).pow(-j));
        let a = Float::with_val(p, x - &d);
        let b = Float::with_val(p, x + &d);
        if let Ok(rb) = validated_root(&f, &a, &b, &Float::with_val(p, &d * 2u32), &zero) {
            return Ok(rb);
        }
        j -= 8;
    }
    Err(QuantityError::NoSignChange)
}

/// `mixing_rate`: `λ₁ = 1/|z₂|` with `z₂` the second real zero of the
/// mixing-plan determinant.
pub fn mixing_rate(system: &SystemSpec, n: usize, validate: bool, opts: &PipelineOptions) -> Result<CertifiedValue, QuantityError> {
    let plan = WeightPlan::mixing(opts.precision);
    let zeros = determinant_zeros(system, &plan, n, 2, validate, opts)?;
    let z2 = zeros.get(1).ok_or(QuantityError::NoSecondZero)?;
    let enc = z2.interval().abs().recip().map_err(|_| QuantityError::DenominatorContainsZero)?;
    let est = Float::with_val(opts.precision, z2.estimate.clone().abs().recip());
    let mut v = CertifiedValue::new("mixing_rate", est, &enc, n);
    v.uncertified = z2.uncertified;
    v.certificate = z2.certificate.clone();
    v.extra = z2.extra.clone();
    v.extra.remove("index");
    let d = output_digits(opts.precision);
    v.note("zero", json!(float_to_decimal(&z2.estimate, d, Round::Nearest)));
    Ok(v)
}

/// `julia_dimension`: zero in `s` of the dimension determinant of `z² + c`
/// at `z = 1`. Always uncertified.
pub fn julia_dimension(c: &(Rational, Rational), n: usize, opts: &PipelineOptions) -> Result<CertifiedValue, QuantityError> {
    let p = opts.precision;
    let table = TermCache::new(&julia_table(c, n, p)?);
    let (blo, bhi) = opts
        .bracket
        .clone()
        .unwrap_or((Rational::from((1, 2)), Rational::from((3, 2))));
    let (lo, hi) = (float_of(&blo, p), float_of(&bhi, p));
    let (t_n, t_prev) = heuristic_dimension(&table, n, &lo, &hi)?;
    let err = t_prev
        .map(|tp| Float::with_val(p, &t_n - &tp).abs())
        .unwrap_or_else(|| Float::with_val(p, 0));
    let mut v = CertifiedValue::new("julia_dimension", t_n.clone(), &ValidatedReal::point(t_n).inflate(&err), n);
    v.note("heuristic_error", json!(float_to_decimal(&err, 6, Round::Up)));
    v.note("c", json!([c.0.to_f64(), c.1.to_f64()]));
    Ok(v)
}
