use rug::{Float, Rational};

use crate::arith::{ValidatedComplex, ValidatedReal};

use super::SystemError;

/// Analytic inverse branch of an expanding map.
#[derive(Clone, Debug, PartialEq)]
pub enum BranchKind {
    /// `(a z + b) / (c z + d)`
    Moebius {
        a: Rational,
        b: Rational,
        c: Rational,
        d: Rational,
    },
    /// `slope · z + offset`
    Affine { slope: Rational, offset: Rational },
    /// Root of `T(x) = z + shift` for a quadratic forward map
    /// `T(x) = c0 + c1 x + c2 x²`, picking `(-c1 + sign·√Δ) / (2 c2)`.
    PolyInverse {
        coeffs: Vec<Rational>,
        shift: Rational,
        sign: i32,
    },
    /// Root of `2x + eps·sin(2πx) = z + shift`, enclosed by a Krawczyk step.
    ImplicitSine { eps: Rational, shift: Rational },
}

/// A contraction `ψ` from disc `domain` into disc `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub kind: BranchKind,
    pub domain: usize,
    pub target: usize,
}

fn q(prec: u32, r: &Rational) -> ValidatedReal {
    ValidatedReal::from_rational(prec, r)
}

fn qc(prec: u32, r: &Rational) -> ValidatedComplex {
    ValidatedComplex::real(q(prec, r))
}

fn fq(prec: u32, r: &Rational) -> Float {
    Float::with_val(prec, r)
}

impl Branch {
    pub fn new(kind: BranchKind) -> Self {
        Branch {
            kind,
            domain: 0,
            target: 0,
        }
    }

    pub fn moebius(a: i64, b: i64, c: i64, d: i64) -> Self {
        Branch::new(BranchKind::Moebius {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        })
    }

    pub fn affine(slope: Rational, offset: Rational) -> Self {
        Branch::new(BranchKind::Affine { slope, offset })
    }

    /// Enclosure of `ψ(z)` for any `z` where the branch is analytic.
    pub fn eval(&self, z: &ValidatedComplex) -> Result<ValidatedComplex, SystemError> {
        let p = z.precision();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let num = z.scale(&q(p, a)).add(&qc(p, b));
                let den = z.scale(&q(p, c)).add(&qc(p, d));
                num.div(&den).map_err(|_| SystemError::OutsideDomain)
            }
            BranchKind::Affine { slope, offset } => Ok(z.scale(&q(p, slope)).add(&qc(p, offset))),
            BranchKind::PolyInverse {
                coeffs,
                shift,
                sign,
            } => {
                let (c1, c2) = (q(p, &coeffs[1]), q(p, &coeffs[2]));
                let s = quad_sqrt(coeffs, shift, z)?;
                let s = if *sign < 0 { s.neg() } else { s };
                s.add_real(&c1.neg())
                    .div(&ValidatedComplex::real(c2.mul_2exp(1)))
                    .map_err(|_| SystemError::OutsideDomain)
            }
            BranchKind::ImplicitSine { eps, shift } => {
                sine_krawczyk(eps, shift, z).map(|(x, _)| x)
            }
        }
    }

    /// Enclosure of `ψ'(z)`.
    pub fn derivative(&self, z: &ValidatedComplex) -> Result<ValidatedComplex, SystemError> {
        let p = z.precision();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let det = q(p, &(a.clone() * d - b.clone() * c));
                let den = z.scale(&q(p, c)).add(&qc(p, d));
                ValidatedComplex::real(det)
                    .div(&den.sqr())
                    .map_err(|_| SystemError::OutsideDomain)
            }
            BranchKind::Affine { slope, .. } => Ok(qc(p, slope)),
            BranchKind::PolyInverse {
                coeffs,
                shift,
                sign,
            } => {
                let s = quad_sqrt(coeffs, shift, z)?;
                let one = ValidatedComplex::one(p);
                let r = one.div(&s).map_err(|_| SystemError::OutsideDomain)?;
                Ok(if *sign < 0 { r.neg() } else { r })
            }
            BranchKind::ImplicitSine { eps, shift } => {
                let (x, _) = sine_krawczyk(eps, shift, z)?;
                let tp = sine_forward_derivative(eps, &x);
                ValidatedComplex::one(p)
                    .div(&tp)
                    .map_err(|_| SystemError::OutsideDomain)
            }
        }
    }

    /// Principal logarithm of `σψ'(z)`, with `σ = ±1` the sign of `ψ'` on
    /// the real line, so that `(σψ')^s = exp(s · Log σψ')` is analytic.
    pub fn log_derivative(&self, z: &ValidatedComplex) -> Result<ValidatedComplex, SystemError> {
        let p = z.precision();
        let bad = |_| SystemError::OutsideDomain;
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let det = a.clone() * d - b.clone() * c;
                if *c == 0 {
                    let v = q(p, &(det / Rational::from(d * d))).abs().log().map_err(bad)?;
                    return Ok(ValidatedComplex::real(v));
                }
                let mut den = z.scale(&q(p, c)).add(&qc(p, d));
                if den.re.is_negative() {
                    den = den.neg();
                } else if !den.re.is_positive() {
                    return Err(SystemError::OutsideDomain);
                }
                let ld = q(p, &det).abs().log().map_err(bad)?;
                Ok(den.log().map_err(bad)?.scale(&ValidatedReal::from_int(p, -2)).add_real(&ld))
            }
            BranchKind::Affine { slope, .. } => Ok(ValidatedComplex::real(q(p, slope).abs().log().map_err(bad)?)),
            BranchKind::PolyInverse { coeffs, shift, .. } => {
                let s = quad_sqrt(coeffs, shift, z)?;
                Ok(s.log().map_err(bad)?.neg())
            }
            BranchKind::ImplicitSine { eps, shift } => {
                let (x, _) = sine_krawczyk(eps, shift, z)?;
                Ok(sine_forward_derivative(eps, &x).log().map_err(bad)?.neg())
            }
        }
    }

    /// Real-interval enclosure of `ψ(x)`.
    pub fn eval_real(&self, x: &ValidatedReal) -> Result<ValidatedReal, SystemError> {
        let p = x.precision();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                // monotone on intervals avoiding the pole: use endpoint images
                let den = x.mul(&q(p, c)).add(&q(p, d));
                if den.contains_zero() {
                    return Err(SystemError::OutsideDomain);
                }
                let f = |t: &ValidatedReal| -> ValidatedReal {
                    let num = t.mul(&q(p, a)).add(&q(p, b));
                    num.div(&t.mul(&q(p, c)).add(&q(p, d))).unwrap()
                };
                let lo = f(&ValidatedReal::point(x.lo().clone()));
                let hi = f(&ValidatedReal::point(x.hi().clone()));
                Ok(lo.hull(&hi))
            }
            BranchKind::Affine { slope, offset } => Ok(x.mul(&q(p, slope)).add(&q(p, offset))),
            BranchKind::PolyInverse {
                coeffs,
                shift,
                sign,
            } => {
                let f = |t: &ValidatedReal| -> Result<ValidatedReal, SystemError> {
                    let disc = quad_disc_real(coeffs, shift, t);
                    let s = disc.sqrt().map_err(|_| SystemError::OutsideDomain)?;
                    if !disc.is_positive() {
                        return Err(SystemError::OutsideDomain);
                    }
                    let s = if *sign < 0 { s.neg() } else { s };
                    s.sub(&q(p, &coeffs[1]))
                        .div(&q(p, &coeffs[2]).mul_2exp(1))
                        .map_err(|_| SystemError::OutsideDomain)
                };
                // monotone: the derivative never vanishes where Δ > 0
                f(x)?;
                let lo = f(&ValidatedReal::point(x.lo().clone()))?;
                let hi = f(&ValidatedReal::point(x.hi().clone()))?;
                Ok(lo.hull(&hi))
            }
            BranchKind::ImplicitSine { .. } => {
                // increasing on the real line since T' ≥ 2 - 2π|eps| > 0
                let a = self.eval(&ValidatedComplex::real(ValidatedReal::point(x.lo().clone())))?;
                let b = self.eval(&ValidatedComplex::real(ValidatedReal::point(x.hi().clone())))?;
                Ok(a.re.hull(&b.re))
            }
        }
    }

    /// Real-interval enclosure of `ψ'(x)`.
    pub fn derivative_real(&self, x: &ValidatedReal) -> Result<ValidatedReal, SystemError> {
        let p = x.precision();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let det = q(p, &(a.clone() * d - b.clone() * c));
                let den = x.mul(&q(p, c)).add(&q(p, d));
                det.div(&den.sqr()).map_err(|_| SystemError::OutsideDomain)
            }
            BranchKind::Affine { slope, .. } => Ok(q(p, slope)),
            BranchKind::PolyInverse {
                coeffs,
                shift,
                sign,
            } => {
                let disc = quad_disc_real(coeffs, shift, x);
                if !disc.is_positive() {
                    return Err(SystemError::OutsideDomain);
                }
                let r = disc.sqrt().unwrap().recip().unwrap();
                Ok(if *sign < 0 { r.neg() } else { r })
            }
            BranchKind::ImplicitSine { eps, .. } => {
                let y = self.eval_real(x)?;
                let two_pi = ValidatedReal::pi(p).mul_2exp(1);
                let tp = two_pi
                    .mul(&y)
                    .cos()
                    .mul(&q(p, eps).mul(&two_pi))
                    .add_int(2);
                tp.recip().map_err(|_| SystemError::OutsideDomain)
            }
        }
    }

    /// Forward map `T` on the image of this branch: `T(ψ(x)) = x`.
    pub fn forward_real(&self, y: &ValidatedReal) -> Result<ValidatedReal, SystemError> {
        let p = y.precision();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let num = y.mul(&q(p, d)).sub(&q(p, b));
                let den = q(p, a).sub(&y.mul(&q(p, c)));
                num.div(&den).map_err(|_| SystemError::OutsideDomain)
            }
            BranchKind::Affine { slope, offset } => y
                .sub(&q(p, offset))
                .div(&q(p, slope))
                .map_err(|_| SystemError::OutsideDomain),
            BranchKind::PolyInverse { coeffs, shift, .. } => {
                let mut acc = ValidatedReal::zero(p);
                for c in coeffs.iter().rev() {
                    acc = acc.mul(y).add(&q(p, c));
                }
                Ok(acc.sub(&q(p, shift)))
            }
            BranchKind::ImplicitSine { eps, shift } => {
                let two_pi = ValidatedReal::pi(p).mul_2exp(1);
                Ok(y.mul_2exp(1)
                    .add(&q(p, eps).mul(&two_pi.mul(y).sin()))
                    .sub(&q(p, shift)))
            }
        }
    }

    /// Non-rigorous point evaluation `(ψ(x), ψ'(x))` at the precision of `x`.
    pub fn eval_point(&self, x: &Float) -> (Float, Float) {
        let p = x.prec();
        match &self.kind {
            BranchKind::Moebius { a, b, c, d } => {
                let den = Float::with_val(p, x * fq(p, c)) + fq(p, d);
                let num = Float::with_val(p, x * fq(p, a)) + fq(p, b);
                let det = fq(p, &(a.clone() * d - b.clone() * c));
                let v = Float::with_val(p, &num / &den);
                let dv = det / Float::with_val(p, den.square_ref());
                (v, dv)
            }
            BranchKind::Affine { slope, offset } => {
                let s = fq(p, slope);
                (Float::with_val(p, x * &s) + fq(p, offset), s)
            }
            BranchKind::PolyInverse {
                coeffs,
                shift,
                sign,
            } => {
                let (c0, c1, c2) = (fq(p, &coeffs[0]), fq(p, &coeffs[1]), fq(p, &coeffs[2]));
                let y = Float::with_val(p, x + fq(p, shift));
                let disc = Float::with_val(p, c1.square_ref())
                    - Float::with_val(p, &c2 * 4u32) * (c0 - y);
                let mut s = disc.sqrt();
                if *sign < 0 {
                    s = -s;
                }
                let v = (Float::with_val(p, &s - &c1)) / (c2 * 2u32);
                let dv = Float::with_val(p, s.recip_ref());
                (v, dv)
            }
            BranchKind::ImplicitSine { eps, shift } => {
                let e = fq(p, eps);
                let y = Float::with_val(p, x + fq(p, shift));
                let two_pi = Float::with_val(p, rug::float::Constant::Pi) * 2u32;
                let mut t = Float::with_val(p, &y / 2u32);
                let tol = Float::with_val(p, Float::i_exp(1, 4 - p as i32));
                for _ in 0..200 {
                    let arg = Float::with_val(p, &t * &two_pi);
                    let (s, c) = arg.sin_cos(Float::new(p));
                    let f = Float::with_val(p, &t * 2u32) + Float::with_val(p, &e * &s) - &y;
                    let fp = Float::with_val(p, &e * &two_pi) * c + 2u32;
                    let step = f / &fp;
                    t -= &step;
                    if step.abs() <= Float::with_val(p, &tol * Float::with_val(p, t.abs_ref()).max(&Float::with_val(p, 1))) {
                        break;
                    }
                }
                let arg = Float::with_val(p, &t * &two_pi);
                let fp = Float::with_val(p, &e * &two_pi) * arg.cos() + 2u32;
                (t, fp.recip())
            }
        }
    }

    /// Exact image disc `(center, radius)` of the real-centred disc `B(c, r)`,
    /// available for Möbius and affine branches.
    pub fn image_disc(&self, c: &Rational, r: &Rational) -> Option<Result<(Rational, Rational), SystemError>> {
        match &self.kind {
            BranchKind::Affine { slope, offset } => {
                let center = slope.clone() * c + offset;
                let radius = Rational::from(slope.abs_ref()) * r;
                Some(Ok((center, radius)))
            }
            BranchKind::Moebius { a, b, c: cc, d } => {
                if *cc == 0 {
                    if *d == 0 {
                        return Some(Err(SystemError::OutsideDomain));
                    }
                    let slope = a.clone() / d;
                    let center = slope.clone() * c + Rational::from(b / d);
                    return Some(Ok((center, Rational::from(slope.abs_ref()) * r)));
                }
                // ψ(z) = a/c - k / (z + d/c), k = (ad - bc)/c²
                let m = c.clone() + Rational::from(d / cc);
                let dd = m.clone() * &m - Rational::from(r * r);
                if dd <= 0 {
                    return Some(Err(SystemError::OutsideDomain));
                }
                let k = (a.clone() * d - b.clone() * cc) / Rational::from(cc * cc);
                let center = Rational::from(a / cc) - k.clone() * m / &dd;
                let radius = Rational::from(k.abs_ref()) * r / dd;
                Some(Ok((center, radius)))
            }
            _ => None,
        }
    }
}

fn quad_disc_real(coeffs: &[Rational], shift: &Rational, x: &ValidatedReal) -> ValidatedReal {
    let p = x.precision();
    let (c0, c1, c2) = (q(p, &coeffs[0]), q(p, &coeffs[1]), q(p, &coeffs[2]));
    let y = x.add(&q(p, shift));
    c1.sqr().sub(&c2.mul_int(4).mul(&c0.sub(&y)))
}

/// Principal `√Δ(z)` with `Δ = c1² - 4 c2 (c0 - z - shift)`; requires `Re Δ > 0`.
fn quad_sqrt(
    coeffs: &[Rational],
    shift: &Rational,
    z: &ValidatedComplex,
) -> Result<ValidatedComplex, SystemError> {
    let p = z.precision();
    let (c0, c1, c2) = (q(p, &coeffs[0]), q(p, &coeffs[1]), q(p, &coeffs[2]));
    let y = z.add_real(&q(p, shift));
    let disc = y
        .neg()
        .add_real(&c0)
        .scale(&c2.mul_int(4))
        .neg()
        .add_real(&c1.sqr());
    if !disc.re.is_positive() {
        return Err(SystemError::OutsideDomain);
    }
    disc.sqrt().map_err(|_| SystemError::OutsideDomain)
}

fn sine_forward_derivative(eps: &Rational, x: &ValidatedComplex) -> ValidatedComplex {
    let p = x.precision();
    let two_pi = ValidatedReal::pi(p).mul_2exp(1);
    x.scale(&two_pi)
        .cos()
        .scale(&q(p, eps).mul(&two_pi))
        .add_real(&ValidatedReal::from_int(p, 2))
}

/// Krawczyk enclosure of the unique root of `2x + eps sin(2πx) = z + shift`
/// for every `z` in the box. Returns the root box and the verified box.
fn sine_krawczyk(
    eps: &Rational,
    shift: &Rational,
    z: &ValidatedComplex,
) -> Result<(ValidatedComplex, ValidatedComplex), SystemError> {
    let p = z.precision();
    let two_pi = ValidatedReal::pi(p).mul_2exp(1);
    let e = q(p, eps);
    let y = z.add_real(&q(p, shift));
    // point Newton from the midpoint in complex floats
    let (yr, yi) = y.mid();
    let (mut tr, mut ti) = (Float::with_val(p, &yr / 2u32), Float::with_val(p, &yi / 2u32));
    for _ in 0..100 {
        let x = ValidatedComplex::new(ValidatedReal::point(tr.clone()), ValidatedReal::point(ti.clone()));
        let f = x
            .mul_2exp_c(1)
            .add(&x.scale(&two_pi).sin().scale(&e))
            .sub(&ValidatedComplex::new(
                ValidatedReal::point(yr.clone()),
                ValidatedReal::point(yi.clone()),
            ));
        let fp = sine_forward_derivative(eps, &x);
        let step = match f.div(&fp) {
            Ok(s) => s,
            Err(_) => return Err(SystemError::OutsideDomain),
        };
        let (sr, si) = step.mid();
        tr -= &sr;
        ti -= &si;
        let sz = Float::with_val(p, sr.abs_ref()) + Float::with_val(p, si.abs_ref());
        if sz.is_zero() || sz.get_exp().unwrap_or(0) < -(p as i32) + 8 {
            break;
        }
    }
    let xt = ValidatedComplex::new(ValidatedReal::point(tr), ValidatedReal::point(ti));
    let fpt = sine_forward_derivative(eps, &xt);
    let yinv = ValidatedComplex::one(p)
        .div(&fpt)
        .map_err(|_| SystemError::OutsideDomain)?;
    let yinv = ValidatedComplex::new(
        ValidatedReal::point(yinv.re.mid()),
        ValidatedReal::point(yinv.im.mid()),
    );
    let fx = xt
        .mul_2exp_c(1)
        .add(&xt.scale(&two_pi).sin().scale(&e))
        .sub(&y);
    let base = xt.sub(&yinv.mul(&fx));
    // radius guess from the size of the residual plus the width of z
    let mut r = Float::with_val(p, fx.mag()) * Float::with_val(p, yinv.mag()) * 2u32;
    let zw = Float::with_val(p, y.width());
    r += zw;
    let floor = Float::with_val(p, Float::i_exp(1, 16 - p as i32));
    if r < floor {
        r = floor;
    }
    for _ in 0..40 {
        let xbox = xt.inflate(&r);
        let tp = sine_forward_derivative(eps, &xbox);
        let m = ValidatedComplex::one(p).sub(&yinv.mul(&tp));
        let k = base.add(&m.mul(&xbox.sub(&xt)));
        if xbox.strictly_contains(&k) {
            return Ok((k, xbox));
        }
        r *= 2u32;
        if r > 1 {
            break;
        }
    }
    Err(SystemError::OutsideDomain)
}

trait Mul2Exp {
    fn mul_2exp_c(&self, k: i32) -> Self;
}

impl Mul2Exp for ValidatedComplex {
    fn mul_2exp_c(&self, k: i32) -> Self {
        ValidatedComplex::new(self.re.mul_2exp(k), self.im.mul_2exp(k))
    }
}
