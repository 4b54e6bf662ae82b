use std::fmt;

use rug::Float;

use super::{ArithError, ValidatedReal};

/// Axis-aligned rectangle `re × im` enclosing a complex value.
#[derive(Clone, PartialEq)]
pub struct ValidatedComplex {
    pub re: ValidatedReal,
    pub im: ValidatedReal,
}

impl ValidatedComplex {
    pub fn new(re: ValidatedReal, im: ValidatedReal) -> Self {
        ValidatedComplex { re, im }
    }

    pub fn real(re: ValidatedReal) -> Self {
        let p = re.precision();
        ValidatedComplex {
            re,
            im: ValidatedReal::zero(p),
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::real(ValidatedReal::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Self::real(ValidatedReal::one(prec))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        ValidatedComplex {
            re: ValidatedReal::from_f64(prec, re),
            im: ValidatedReal::from_f64(prec, im),
        }
    }

    pub fn precision(&self) -> u32 {
        self.re.precision().max(self.im.precision())
    }

    pub fn is_real(&self) -> bool {
        self.im.lo().is_zero() && self.im.hi().is_zero()
    }

    pub fn conj(&self) -> Self {
        ValidatedComplex {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    pub fn neg(&self) -> Self {
        ValidatedComplex {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn add(&self, b: &ValidatedComplex) -> Self {
        ValidatedComplex {
            re: self.re.add(&b.re),
            im: self.im.add(&b.im),
        }
    }

    pub fn sub(&self, b: &ValidatedComplex) -> Self {
        ValidatedComplex {
            re: self.re.sub(&b.re),
            im: self.im.sub(&b.im),
        }
    }

    pub fn add_real(&self, b: &ValidatedReal) -> Self {
        ValidatedComplex {
            re: self.re.add(b),
            im: self.im.clone(),
        }
    }

    pub fn scale(&self, b: &ValidatedReal) -> Self {
        ValidatedComplex {
            re: self.re.mul(b),
            im: self.im.mul(b),
        }
    }

    pub fn mul(&self, b: &ValidatedComplex) -> Self {
        if b.is_real() {
            return self.scale(&b.re);
        }
        if self.is_real() {
            return b.scale(&self.re);
        }
        ValidatedComplex {
            re: self.re.mul(&b.re).sub(&self.im.mul(&b.im)),
            im: self.re.mul(&b.im).add(&self.im.mul(&b.re)),
        }
    }

    pub fn sqr(&self) -> Self {
        if self.is_real() {
            return Self::real(self.re.sqr());
        }
        ValidatedComplex {
            re: self.re.sqr().sub(&self.im.sqr()),
            im: self.re.mul(&self.im).mul_2exp(1),
        }
    }

    /// `|z|²` as an interval.
    pub fn norm_sqr(&self) -> ValidatedReal {
        self.re.sqr().add(&self.im.sqr())
    }

    pub fn abs(&self) -> ValidatedReal {
        if self.is_real() {
            return self.re.abs();
        }
        self.norm_sqr()
            .sqrt()
            .expect("a sum of squares is nonnegative")
    }

    /// Upper bound of `|z|` over the rectangle.
    pub fn mag(&self) -> Float {
        self.abs().hi().clone()
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        if self.is_real() {
            return Ok(Self::real(self.re.recip()?));
        }
        let d = self.norm_sqr();
        if d.contains_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(ValidatedComplex {
            re: self.re.div(&d)?,
            im: self.im.neg().div(&d)?,
        })
    }

    pub fn div(&self, b: &ValidatedComplex) -> Result<Self, ArithError> {
        if b.is_real() {
            return Ok(ValidatedComplex {
                re: self.re.div(&b.re)?,
                im: self.im.div(&b.re)?,
            });
        }
        let d = b.norm_sqr();
        if d.contains_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let num = self.mul(&b.conj());
        Ok(ValidatedComplex {
            re: num.re.div(&d)?,
            im: num.im.div(&d)?,
        })
    }

    pub fn exp(&self) -> Self {
        if self.is_real() {
            return Self::real(self.re.exp());
        }
        let m = self.re.exp();
        ValidatedComplex {
            re: m.mul(&self.im.cos()),
            im: m.mul(&self.im.sin()),
        }
    }

    /// Enclosure of `Arg z` on the principal branch. Fails if the rectangle
    /// meets the cut `(-∞, 0]`.
    pub fn arg(&self) -> Result<ValidatedReal, ArithError> {
        let p = self.precision();
        if self.im.contains_zero() {
            if self.re.is_positive() {
                if self.is_real() {
                    return Ok(ValidatedReal::zero(p));
                }
            } else {
                return Err(ArithError::BranchCut);
            }
        }
        let xs = [self.re.lo(), self.re.hi()];
        let ys = [self.im.lo(), self.im.hi()];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for y in ys {
            for x in xs {
                let a = super::real::down(p, y.atan2_ref(x));
                let b = super::real::up(p, y.atan2_ref(x));
                lo = Some(match lo {
                    Some(l) if l <= a => l,
                    _ => a,
                });
                hi = Some(match hi {
                    Some(h) if h >= b => h,
                    _ => b,
                });
            }
        }
        Ok(ValidatedReal::new(lo.unwrap(), hi.unwrap()))
    }

    /// Principal logarithm.
    pub fn log(&self) -> Result<Self, ArithError> {
        if self.is_real() {
            return Ok(Self::real(self.re.log()?));
        }
        let arg = self.arg()?;
        let re = self.norm_sqr().log()?.mul_2exp(-1);
        Ok(ValidatedComplex { re, im: arg })
    }

    /// Principal `z^t` for a real interval exponent.
    pub fn pow_real(&self, t: &ValidatedReal) -> Result<Self, ArithError> {
        Ok(self.log()?.scale(t).exp())
    }

    pub fn pow(&self, t: &ValidatedComplex) -> Result<Self, ArithError> {
        Ok(self.log()?.mul(t).exp())
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Self, ArithError> {
        if self.is_real() && self.re.is_nonnegative() {
            return Ok(Self::real(self.re.sqrt()?));
        }
        if self.re.is_positive() {
            // s = sqrt((|w| + Re w)/2), sqrt(w) = s + i Im w / (2 s)
            let m = self.abs();
            let s = m.add(&self.re).mul_2exp(-1).sqrt()?;
            let im = self.im.div(&s.mul_2exp(1))?;
            return Ok(ValidatedComplex { re: s, im });
        }
        Ok(self.log()?.scale(&ValidatedReal::from_ratio(self.precision(), 1, 2)).exp())
    }

    pub fn sin(&self) -> Self {
        // sin(x+iy) = sin x cosh y + i cos x sinh y
        if self.is_real() {
            return Self::real(self.re.sin());
        }
        let (ch, sh) = cosh_sinh(&self.im);
        ValidatedComplex {
            re: self.re.sin().mul(&ch),
            im: self.re.cos().mul(&sh),
        }
    }

    pub fn cos(&self) -> Self {
        // cos(x+iy) = cos x cosh y - i sin x sinh y
        if self.is_real() {
            return Self::real(self.re.cos());
        }
        let (ch, sh) = cosh_sinh(&self.im);
        ValidatedComplex {
            re: self.re.cos().mul(&ch),
            im: self.re.sin().mul(&sh).neg(),
        }
    }

    pub fn hull(&self, b: &ValidatedComplex) -> Self {
        ValidatedComplex {
            re: self.re.hull(&b.re),
            im: self.im.hull(&b.im),
        }
    }

    pub fn intersect(&self, b: &ValidatedComplex) -> Option<Self> {
        Some(ValidatedComplex {
            re: self.re.intersect(&b.re)?,
            im: self.im.intersect(&b.im)?,
        })
    }

    pub fn contains(&self, b: &ValidatedComplex) -> bool {
        self.re.contains_interval(&b.re) && self.im.contains_interval(&b.im)
    }

    pub fn strictly_contains(&self, b: &ValidatedComplex) -> bool {
        b.re.strictly_inside(&self.re) && b.im.strictly_inside(&self.im)
    }

    pub fn overlaps(&self, b: &ValidatedComplex) -> bool {
        self.re.overlaps(&b.re) && self.im.overlaps(&b.im)
    }

    pub fn mid(&self) -> (Float, Float) {
        (self.re.mid(), self.im.mid())
    }

    /// Largest of the two side lengths.
    pub fn width(&self) -> Float {
        let a = self.re.width();
        let b = self.im.width();
        if a >= b {
            a
        } else {
            b
        }
    }

    pub fn inflate(&self, r: &Float) -> Self {
        ValidatedComplex {
            re: self.re.inflate(r),
            im: self.im.inflate(r),
        }
    }
}

fn cosh_sinh(y: &ValidatedReal) -> (ValidatedReal, ValidatedReal) {
    let e = y.exp();
    let ei = y.neg().exp();
    let ch = e.add(&ei).mul_2exp(-1);
    let sh = e.sub(&ei).mul_2exp(-1);
    // cosh ≥ 1
    let one = ValidatedReal::one(y.precision());
    (ch.max(&one), sh)
}

impl fmt::Debug for ValidatedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + i{:?}", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 200;

    fn c(re: f64, im: f64) -> ValidatedComplex {
        ValidatedComplex::from_f64(P, re, im)
    }

    fn close(z: &ValidatedComplex, re: f64, im: f64) -> bool {
        (z.re.mid_f64() - re).abs() < 1e-12 && (z.im.mid_f64() - im).abs() < 1e-12
    }

    #[test]
    fn field_ops() {
        let a = c(1.0, 2.0);
        let b = c(-0.5, 0.25);
        assert!(close(&a.mul(&b), -1.0, -0.75));
        let q = a.div(&b).unwrap();
        assert!(close(&q.mul(&b), 1.0, 2.0));
        assert!(c(0.0, 0.0).recip().is_err());
    }

    #[test]
    fn exp_log_round_trip() {
        let z = c(0.3, -1.1);
        let w = z.log().unwrap().exp();
        assert!(w.overlaps(&z));
        assert!(close(&c(0.0, std::f64::consts::PI / 2.0).exp(), 0.0, 1.0));
    }

    #[test]
    fn log_cut_is_rejected() {
        assert!(c(-1.0, 0.0).log().is_err());
        let r = ValidatedComplex::new(
            ValidatedReal::from_f64(P, -1.0),
            ValidatedReal::from_f64(P, -0.1).hull(&ValidatedReal::from_f64(P, 0.1)),
        );
        assert!(r.arg().is_err());
    }

    #[test]
    fn sqrt_principal() {
        let s = c(3.0, 4.0).sqrt().unwrap();
        assert!(close(&s, 2.0, 1.0));
        let s = c(-4.0, 1e-30).sqrt().unwrap();
        assert!((s.im.mid_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trig_complex() {
        let z = c(0.4, 0.3);
        let s = z.sin();
        let co = z.cos();
        let one = s.sqr().add(&co.sqr());
        assert!(one.re.contains_f64(1.0));
        assert!(one.im.contains_f64(0.0));
    }

    #[test]
    fn pow_real_matches_square() {
        let z = c(0.7, 0.2);
        let p = z.pow_real(&ValidatedReal::from_int(P, 2)).unwrap();
        assert!(p.overlaps(&z.sqr()));
    }
}
