//! Trace sums, determinant coefficients and truncated evaluation.
//!
//! A period-`n` trace term is `exp(α + tφ) / D` where `D` is the stored
//! denominator and `(α, φ)` depend on the [`WeightPlan`] through
//! `ℓ = log|λ|` (λ the composed contraction derivative) and the Birkhoff sum
//! `G` of the observable.
//!
//! | mode      | α       | φ          |
//! |-----------|---------|------------|
//! | dimension | 0       | ℓ          |
//! | lyapunov  | ℓ       | ℓ          |
//! | mixing    | ℓ       | 0          |
//! | custom    | ℓ       | −G         |
//! | variance  | ℓ       | ℓ + n·m    |
//!
//! Dimension uses `|(Tⁿ)'|^{−t}`; the others are normalized by `g₀ = −log|T'|`
//! so the leading zero sits at `z = 1` when `t = 0`.

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{ValidatedComplex, ValidatedReal};
use crate::periodic::{OrbitSource, OrbitTerm, TraceConvention};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeterminantError {
    #[error("denominator 1 - 1/(T^n)' contains zero at period {period}")]
    DegenerateDenominator { period: usize },
    #[error("custom plan needs Birkhoff sums but the orbit table carries none")]
    MissingObservable,
    #[error("period {0} exceeds the orbit table")]
    PeriodOutOfRange(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Dimension,
    Lyapunov,
    Mixing,
    Custom,
    /// Centered `log|T'| − m` with the centering constant `m`.
    Variance {
        #[serde(skip)]
        center: ValidatedReal,
    },
}

/// Weight family `(g₀, g)` and the parameter at which it is expanded.
#[derive(Clone, Debug)]
pub struct WeightPlan {
    pub mode: PlanMode,
    pub base_t: ValidatedReal,
    /// Produce second `t`-derivatives.
    pub second: bool,
}

impl WeightPlan {
    pub fn dimension(t: ValidatedReal) -> Self {
        WeightPlan {
            mode: PlanMode::Dimension,
            base_t: t,
            second: false,
        }
    }

    pub fn lyapunov(prec: u32) -> Self {
        WeightPlan {
            mode: PlanMode::Lyapunov,
            base_t: ValidatedReal::zero(prec),
            second: false,
        }
    }

    pub fn mixing(prec: u32) -> Self {
        WeightPlan {
            mode: PlanMode::Mixing,
            base_t: ValidatedReal::zero(prec),
            second: false,
        }
    }

    pub fn custom(prec: u32) -> Self {
        WeightPlan {
            mode: PlanMode::Custom,
            base_t: ValidatedReal::zero(prec),
            second: false,
        }
    }

    pub fn variance(center: ValidatedReal) -> Self {
        let p = center.precision();
        WeightPlan {
            mode: PlanMode::Variance { center },
            base_t: ValidatedReal::zero(p),
            second: true,
        }
    }

    pub fn at(&self, t: ValidatedReal) -> Self {
        WeightPlan {
            base_t: t,
            ..self.clone()
        }
    }

    pub fn name(&self) -> &'static str {
        match self.mode {
            PlanMode::Dimension => "dimension",
            PlanMode::Lyapunov => "lyapunov",
            PlanMode::Mixing => "mixing",
            PlanMode::Custom => "custom",
            PlanMode::Variance { .. } => "variance",
        }
    }

    /// `(α, φ)` for one term of period `n`.
    pub fn exponents(&self, term: &OrbitTerm, n: usize) -> Result<(ValidatedReal, ValidatedReal), DeterminantError> {
        let l = &term.log_abs;
        let p = l.precision();
        Ok(match &self.mode {
            PlanMode::Dimension => (ValidatedReal::zero(p), l.clone()),
            PlanMode::Lyapunov => (l.clone(), l.clone()),
            PlanMode::Mixing => (l.clone(), ValidatedReal::zero(p)),
            PlanMode::Custom => {
                let g = term.birkhoff.as_ref().ok_or(DeterminantError::MissingObservable)?;
                (l.clone(), g.neg())
            }
            PlanMode::Variance { center } => (l.clone(), l.add(&center.mul_int(n as i64))),
        })
    }
}

/// Period-`n` trace and its first two `t`-derivatives at `base_t`.
#[derive(Clone, Debug)]
pub struct TraceVector {
    pub n: usize,
    pub tr: ValidatedReal,
    pub tr_dt: ValidatedReal,
    pub tr_dtt: ValidatedReal,
}

/// `trace_sum`: interval sum over all period-`n` orbit terms, folded in the
/// table's fixed order.
pub fn trace_sum(table: &dyn OrbitSource, plan: &WeightPlan, n: usize) -> Result<TraceVector, DeterminantError> {
    if n == 0 || n > table.max_period() {
        return Err(DeterminantError::PeriodOutOfRange(n));
    }
    let terms = table.terms(n);
    let contribs = terms
        .par_iter()
        .map(|term| {
            if term.denom.contains_zero() {
                return Err(DeterminantError::DegenerateDenominator { period: n });
            }
            let (alpha, phi) = plan.exponents(term, n)?;
            let v = alpha
                .add(&plan.base_t.mul(&phi))
                .exp()
                .div(&term.denom)
                .map_err(|_| DeterminantError::DegenerateDenominator { period: n })?
                .mul_int(term.multiplicity as i64);
            let dv = v.mul(&phi);
            let ddv = if plan.second { dv.mul(&phi) } else { ValidatedReal::zero(v.precision()) };
            Ok((v, dv, ddv))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let p = table.precision();
    let (mut tr, mut tr_dt, mut tr_dtt) = (ValidatedReal::zero(p), ValidatedReal::zero(p), ValidatedReal::zero(p));
    for (v, dv, ddv) in &contribs {
        tr = tr.add(v);
        tr_dt = tr_dt.add(dv);
        tr_dtt = tr_dtt.add(ddv);
    }
    Ok(TraceVector { n, tr, tr_dt, tr_dtt })
}

/// All traces `1..=n_max`.
pub fn traces(table: &dyn OrbitSource, plan: &WeightPlan, n_max: usize) -> Result<Vec<TraceVector>, DeterminantError> {
    (1..=n_max).map(|n| trace_sum(table, plan, n)).collect()
}

/// Coefficients `a_n, a_n', a_n''` of `d(z, t) = 1 + Σ a_n zⁿ`.
#[derive(Clone, Debug)]
pub struct CoefficientSeries {
    pub order: usize,
    pub a: Vec<ValidatedReal>,
    pub a_dt: Vec<ValidatedReal>,
    pub a_dtt: Vec<ValidatedReal>,
    pub eps1: ValidatedReal,
    pub sums: QuantitySums,
    pub convention: TraceConvention,
    pub plan: String,
}

/// The finite sums `A_N … E_N` entering the quantity formulas.
#[derive(Clone, Debug)]
pub struct QuantitySums {
    /// `Σ n a_n`
    pub a: ValidatedReal,
    /// `Σ n(n−1) a_n`
    pub b: ValidatedReal,
    /// `Σ a_n'`
    pub c: ValidatedReal,
    /// `Σ n a_n'`
    pub d: ValidatedReal,
    /// `Σ a_n''`
    pub e: ValidatedReal,
}

/// `coefficients_from_traces`: `a_n = −(1/n) Σ_{k=1}^n tr_k a_{n−k}`, `a₀ = 1`,
/// differentiated term by term in `t`.
pub fn coefficients_from_traces(traces: &[TraceVector], order: usize) -> CoefficientSeries {
    assert!(traces.len() >= order, "traces must cover 1..=N");
    let p = traces.first().map(|t| t.tr.precision()).unwrap_or(crate::arith::MIN_PRECISION);
    let mut a = vec![ValidatedReal::one(p)];
    let mut a1 = vec![ValidatedReal::zero(p)];
    let mut a2 = vec![ValidatedReal::zero(p)];
    for n in 1..=order {
        let (mut s, mut s1, mut s2) = (ValidatedReal::zero(p), ValidatedReal::zero(p), ValidatedReal::zero(p));
        for k in 1..=n {
            let t = &traces[k - 1];
            s = s.add(&t.tr.mul(&a[n - k]));
            s1 = s1.add(&t.tr_dt.mul(&a[n - k])).add(&t.tr.mul(&a1[n - k]));
            s2 = s2
                .add(&t.tr_dtt.mul(&a[n - k]))
                .add(&t.tr_dt.mul(&a1[n - k]).mul_2exp(1))
                .add(&t.tr.mul(&a2[n - k]));
        }
        let n_i = n as i64;
        a.push(s.div_int(n_i).neg());
        a1.push(s1.div_int(n_i).neg());
        a2.push(s2.div_int(n_i).neg());
    }
    a.remove(0);
    a1.remove(0);
    a2.remove(0);
    let mut eps = Float::with_val(p, 0);
    for v in a.iter().chain(&a1).chain(&a2) {
        let w = v.width();
        if w > eps {
            eps = w;
        }
    }
    let mut series = CoefficientSeries {
        order,
        a,
        a_dt: a1,
        a_dtt: a2,
        eps1: ValidatedReal::point(eps),
        sums: QuantitySums {
            a: ValidatedReal::zero(p),
            b: ValidatedReal::zero(p),
            c: ValidatedReal::zero(p),
            d: ValidatedReal::zero(p),
            e: ValidatedReal::zero(p),
        },
        convention: TraceConvention::Word,
        plan: String::new(),
    };
    series.sums = quantity_sums(&series);
    series
}

/// Orbits → traces → coefficients in one call.
pub fn build_series(
    table: &dyn OrbitSource,
    plan: &WeightPlan,
    order: usize,
) -> Result<CoefficientSeries, DeterminantError> {
    let tv = traces(table, plan, order)?;
    let mut s = coefficients_from_traces(&tv, order);
    s.convention = table.convention();
    s.plan = plan.name().to_string();
    Ok(s)
}

/// Requested partial derivative of the truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Value,
    Dz,
    Dt,
    Dtt,
}

fn coeff_list(series: &CoefficientSeries, which: Which) -> Vec<ValidatedReal> {
    let p = series.eps1.precision();
    // index i holds the coefficient of z^i
    let mut c = Vec::with_capacity(series.order + 1);
    match which {
        Which::Value => {
            c.push(ValidatedReal::one(p));
            c.extend(series.a.iter().cloned());
        }
        Which::Dz => {
            for (i, a) in series.a.iter().enumerate() {
                c.push(a.mul_int(i as i64 + 1));
            }
        }
        Which::Dt => {
            c.push(ValidatedReal::zero(p));
            c.extend(series.a_dt.iter().cloned());
        }
        Which::Dtt => {
            c.push(ValidatedReal::zero(p));
            c.extend(series.a_dtt.iter().cloned());
        }
    }
    c
}

/// `evaluate_truncated`: Horner evaluation of `d_N` or a partial derivative
/// at complex `z`, without tail correction.
pub fn evaluate_truncated(series: &CoefficientSeries, z: &ValidatedComplex, which: Which) -> ValidatedComplex {
    let c = coeff_list(series, which);
    let p = z.precision();
    let mut acc = ValidatedComplex::zero(p);
    for a in c.iter().rev() {
        acc = acc.mul(z).add_real(a);
    }
    acc
}

/// Real-argument Horner evaluation.
pub fn evaluate_real(series: &CoefficientSeries, x: &ValidatedReal, which: Which) -> ValidatedReal {
    let c = coeff_list(series, which);
    let mut acc = ValidatedReal::zero(x.precision());
    for a in c.iter().rev() {
        acc = acc.mul(x).add(a);
    }
    acc
}

/// `quantity_sums`: `(A_N, B_N, C_N, D_N, E_N)`.
pub fn quantity_sums(series: &CoefficientSeries) -> QuantitySums {
    let p = series.eps1.precision();
    let z = || ValidatedReal::zero(p);
    let (mut a, mut b, mut c, mut d, mut e) = (z(), z(), z(), z(), z());
    for n in 1..=series.order {
        let ni = n as i64;
        let an = &series.a[n - 1];
        let an1 = &series.a_dt[n - 1];
        a = a.add(&an.mul_int(ni));
        b = b.add(&an.mul_int(ni * (ni - 1)));
        c = c.add(an1);
        d = d.add(&an1.mul_int(ni));
        e = e.add(&series.a_dtt[n - 1]);
    }
    QuantitySums { a, b, c, d, e }
}

/// Number of decimal digits honestly supported by `prec` bits.
pub fn output_digits(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2 - 5.0).max(5.0) as usize
}

pub fn interval_json(v: &ValidatedReal, digits: usize) -> Value {
    let (lo, hi) = v.to_decimal_pair(digits);
    json!([lo, hi])
}

impl CoefficientSeries {
    pub fn to_json(&self) -> Value {
        let digits = output_digits(self.eps1.precision()) + 5;
        let list = |v: &[ValidatedReal]| Value::Array(v.iter().map(|x| interval_json(x, digits)).collect());
        json!({
            "N": self.order,
            "a": list(&self.a),
            "a_dt": list(&self.a_dt),
            "a_dtt": list(&self.a_dtt),
            "eps1": interval_json(&self.eps1, 6),
            "convention": self.convention,
            "plan": self.plan,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::{build_orbit_table, build_primitive_table};
    use crate::systems::load_system;

    const P: u32 = 256;

    fn tv(p: u32, tr: &[f64]) -> Vec<TraceVector> {
        tr.iter()
            .enumerate()
            .map(|(i, &t)| TraceVector {
                n: i + 1,
                tr: ValidatedReal::from_f64(p, t),
                tr_dt: ValidatedReal::zero(p),
                tr_dtt: ValidatedReal::zero(p),
            })
            .collect()
    }

    #[test]
    fn first_two_coefficients() {
        let s = coefficients_from_traces(&tv(P, &[0.75, 0.5]), 2);
        assert!(s.a[0].contains_f64(-0.75));
        assert!(s.a[1].contains_f64((0.75 * 0.75 - 0.5) / 2.0));
    }

    #[test]
    fn doubling_traces_and_series() {
        let sys = load_system("system=doubling").unwrap();
        let t = build_orbit_table(&sys, 5, P).unwrap();
        let plan = WeightPlan::dimension(ValidatedReal::zero(P));
        let ln2 = ValidatedReal::ln2(P);
        for n in 1..=5 {
            let v = trace_sum(&t, &plan, n).unwrap();
            let two_n = ValidatedReal::from_int(P, 1 << n);
            assert!(v.tr.overlaps(&two_n));
            assert!(v.tr_dt.overlaps(&two_n.mul(&ln2).mul_int(-(n as i64))));
        }
        let s = build_series(&t, &plan, 5).unwrap();
        assert!(s.a[0].contains_f64(-2.0));
        for n in 2..=5 {
            assert!(s.a[n - 1].contains_f64(0.0) && s.a[n - 1].width() < 1e-60);
        }
        assert!(s.sums.a.contains_f64(-2.0));
        assert!(s.sums.c.overlaps(&ln2.mul_int(2)));
        let half = ValidatedComplex::from_f64(P, 0.5, 0.0);
        assert!(evaluate_truncated(&s, &half, Which::Value).contains_zero());
        let zero = ValidatedComplex::zero(P);
        assert!(evaluate_truncated(&s, &zero, Which::Value).re.contains_f64(1.0));
    }

    #[test]
    fn doubling_mixing_is_one_minus_z() {
        let sys = load_system("system=doubling").unwrap();
        let t = build_primitive_table(&sys, 6, P, None).unwrap();
        let s = build_series(&t, &WeightPlan::mixing(P), 6).unwrap();
        assert!(s.a[0].contains_f64(-1.0));
        assert!(s.a[1..].iter().all(|a| a.contains_f64(0.0)));
    }

    #[test]
    fn cantor_single_period_trace() {
        let sys = load_system("system=cantor").unwrap();
        let t = build_orbit_table(&sys, 1, P).unwrap();
        let tt = ValidatedReal::from_ratio(P, 3, 10);
        let v = trace_sum(&t, &WeightPlan::dimension(tt.clone()), 1).unwrap();
        let expect = ValidatedReal::from_int(P, 3).pow_real(&ValidatedReal::one(P).sub(&tt)).unwrap();
        assert!(v.tr.overlaps(&expect));
    }

    #[test]
    fn zero_series_has_zero_sums() {
        let p = 128;
        let traces: Vec<TraceVector> = tv(p, &[0.0, 0.0, 0.0]);
        let s = coefficients_from_traces(&traces, 3);
        for v in [&s.sums.a, &s.sums.b, &s.sums.c, &s.sums.d, &s.sums.e] {
            assert!(v.contains_f64(0.0) && v.width() == 0.0);
        }
    }

    #[test]
    fn json_shape() {
        let s = coefficients_from_traces(&tv(128, &[1.0, 1.0]), 2);
        let j = s.to_json();
        assert_eq!(j["N"], 2);
        assert_eq!(j["a"].as_array().unwrap().len(), 2);
        assert!(j["eps1"][0].is_string());
    }
}
