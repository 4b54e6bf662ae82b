use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::{Constant, Round};
use rug::ops::{AssignRound, Pow};
use rug::{Float, Integer, Rational};

use super::ArithError;

/// Smallest precision accepted for interval endpoints.
pub const MIN_PRECISION: u32 = 64;

/// Closed interval `[lo, hi]` of MPFR floats. Every operation rounds outward,
/// so the result contains the exact image of its inputs.
#[derive(Clone, PartialEq)]
pub struct ValidatedReal {
    lo: Float,
    hi: Float,
}

pub(crate) fn down<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

pub(crate) fn up<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

fn fmin(a: Float, b: Float) -> Float {
    if a <= b {
        a
    } else {
        b
    }
}

fn fmax(a: Float, b: Float) -> Float {
    if a >= b {
        a
    } else {
        b
    }
}

impl ValidatedReal {
    /// Builds `[lo, hi]`; panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        ValidatedReal { lo, hi }
    }

    pub fn try_new(lo: Float, hi: Float) -> Result<Self, ArithError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(ArithError::InvalidInterval);
        }
        Ok(ValidatedReal { lo, hi })
    }

    pub fn point(x: Float) -> Self {
        ValidatedReal { lo: x.clone(), hi: x }
    }

    pub fn zero(prec: u32) -> Self {
        Self::point(Float::with_val(prec, 0))
    }

    pub fn one(prec: u32) -> Self {
        Self::point(Float::with_val(prec, 1))
    }

    pub fn from_int(prec: u32, v: i64) -> Self {
        ValidatedReal {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    /// Enclosure of an `f64` value (exact, since `f64` fits in 64 bits).
    pub fn from_f64(prec: u32, v: f64) -> Self {
        ValidatedReal {
            lo: down(prec, v),
            hi: up(prec, v),
        }
    }

    pub fn from_rational(prec: u32, q: &Rational) -> Self {
        ValidatedReal {
            lo: down(prec, q),
            hi: up(prec, q),
        }
    }

    pub fn from_ratio(prec: u32, num: i64, den: i64) -> Self {
        Self::from_rational(prec, &Rational::from((num, den)))
    }

    /// Parses a decimal literal and encloses its exact value.
    pub fn from_decimal(prec: u32, s: &str) -> Result<Self, ArithError> {
        let q = parse_decimal_rational(s)?;
        Ok(Self::from_rational(prec, &q))
    }

    pub fn hull_of(a: &Float, b: &Float) -> Self {
        if a <= b {
            ValidatedReal::new(a.clone(), b.clone())
        } else {
            ValidatedReal::new(b.clone(), a.clone())
        }
    }

    pub fn pi(prec: u32) -> Self {
        ValidatedReal {
            lo: down(prec, Constant::Pi),
            hi: up(prec, Constant::Pi),
        }
    }

    pub fn ln2(prec: u32) -> Self {
        ValidatedReal {
            lo: down(prec, Constant::Log2),
            hi: up(prec, Constant::Log2),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn precision(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// Same interval re-rounded outward to `prec` bits.
    pub fn with_precision(&self, prec: u32) -> Self {
        ValidatedReal {
            lo: down(prec, &self.lo),
            hi: up(prec, &self.hi),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn mid(&self) -> Float {
        let p = self.precision();
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2;
        m
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        up(self.precision(), &self.hi - &self.lo)
    }

    /// Upper bound on the radius around the midpoint.
    pub fn rad(&self) -> Float {
        let m = self.mid();
        let p = self.precision();
        fmax(up(p, &self.hi - &m), up(p, &m - &self.lo))
    }

    /// Upper bound of `|x|` over the interval.
    pub fn mag(&self) -> Float {
        let a = Float::with_val(self.lo.prec(), self.lo.abs_ref());
        let b = Float::with_val(self.hi.prec(), self.hi.abs_ref());
        fmax(a, b)
    }

    /// Lower bound of `|x|` over the interval.
    pub fn mig(&self) -> Float {
        if self.contains_zero() {
            Float::with_val(self.precision(), 0)
        } else {
            let a = Float::with_val(self.lo.prec(), self.lo.abs_ref());
            let b = Float::with_val(self.hi.prec(), self.hi.abs_ref());
            fmin(a, b)
        }
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo <= *q && self.hi >= *q
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// `other ⊆ self`
    pub fn contains_interval(&self, other: &ValidatedReal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `self` lies strictly inside `other`.
    pub fn strictly_inside(&self, other: &ValidatedReal) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn overlaps(&self, other: &ValidatedReal) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0
    }

    /// -1, +1 when the sign is certain; 0 otherwise.
    pub fn certain_sign(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }

    /// `self < other` holds for every pair of points.
    pub fn certainly_lt(&self, other: &ValidatedReal) -> bool {
        self.hi < other.lo
    }

    pub fn hull(&self, other: &ValidatedReal) -> Self {
        ValidatedReal {
            lo: fmin(self.lo.clone(), other.lo.clone()),
            hi: fmax(self.hi.clone(), other.hi.clone()),
        }
    }

    pub fn intersect(&self, other: &ValidatedReal) -> Option<Self> {
        let lo = fmax(self.lo.clone(), other.lo.clone());
        let hi = fmin(self.hi.clone(), other.hi.clone());
        if lo <= hi {
            Some(ValidatedReal { lo, hi })
        } else {
            None
        }
    }

    /// `[lo - r, hi + r]` for `r ≥ 0`.
    pub fn inflate(&self, r: &Float) -> Self {
        let p = self.precision();
        ValidatedReal {
            lo: down(p, &self.lo - r),
            hi: up(p, &self.hi + r),
        }
    }

    /// `[-r, r]`
    pub fn symmetric(r: &Float) -> Self {
        let p = r.prec();
        let a = Float::with_val(p, r.abs_ref());
        ValidatedReal {
            lo: Float::with_val(p, -&a),
            hi: a,
        }
    }

    pub fn neg(&self) -> Self {
        ValidatedReal {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
        }
    }

    pub fn add(&self, b: &ValidatedReal) -> Self {
        let p = self.precision().max(b.precision());
        ValidatedReal {
            lo: down(p, &self.lo + &b.lo),
            hi: up(p, &self.hi + &b.hi),
        }
    }

    pub fn sub(&self, b: &ValidatedReal) -> Self {
        let p = self.precision().max(b.precision());
        ValidatedReal {
            lo: down(p, &self.lo - &b.hi),
            hi: up(p, &self.hi - &b.lo),
        }
    }

    pub fn add_int(&self, k: i64) -> Self {
        let p = self.precision();
        ValidatedReal {
            lo: down(p, &self.lo + k),
            hi: up(p, &self.hi + k),
        }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        let p = self.precision();
        let a = down(p, &self.lo * k);
        let b = down(p, &self.hi * k);
        let c = up(p, &self.lo * k);
        let d = up(p, &self.hi * k);
        ValidatedReal {
            lo: fmin(a, b),
            hi: fmax(c, d),
        }
    }

    /// Multiply by `2^k` (exact).
    pub fn mul_2exp(&self, k: i32) -> Self {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        if k >= 0 {
            lo <<= k as u32;
            hi <<= k as u32;
        } else {
            lo >>= (-k) as u32;
            hi >>= (-k) as u32;
        }
        ValidatedReal { lo, hi }
    }

    /// Interval product with sign-case dispatch.
    pub fn mul(&self, b: &ValidatedReal) -> Self {
        let p = self.precision().max(b.precision());
        let (a0, a1, b0, b1) = (&self.lo, &self.hi, &b.lo, &b.hi);
        if *a0 >= 0 {
            if *b0 >= 0 {
                return ValidatedReal {
                    lo: down(p, a0 * b0),
                    hi: up(p, a1 * b1),
                };
            }
            if *b1 <= 0 {
                return ValidatedReal {
                    lo: down(p, a1 * b0),
                    hi: up(p, a0 * b1),
                };
            }
            return ValidatedReal {
                lo: down(p, a1 * b0),
                hi: up(p, a1 * b1),
            };
        }
        if *a1 <= 0 {
            if *b0 >= 0 {
                return ValidatedReal {
                    lo: down(p, a0 * b1),
                    hi: up(p, a1 * b0),
                };
            }
            if *b1 <= 0 {
                return ValidatedReal {
                    lo: down(p, a1 * b1),
                    hi: up(p, a0 * b0),
                };
            }
            return ValidatedReal {
                lo: down(p, a0 * b1),
                hi: up(p, a0 * b0),
            };
        }
        if *b0 >= 0 {
            return ValidatedReal {
                lo: down(p, a0 * b1),
                hi: up(p, a1 * b1),
            };
        }
        if *b1 <= 0 {
            return ValidatedReal {
                lo: down(p, a1 * b0),
                hi: up(p, a0 * b0),
            };
        }
        ValidatedReal {
            lo: fmin(down(p, a0 * b1), down(p, a1 * b0)),
            hi: fmax(up(p, a0 * b0), up(p, a1 * b1)),
        }
    }

    pub fn sqr(&self) -> Self {
        let p = self.precision();
        if self.lo >= 0 {
            ValidatedReal {
                lo: down(p, self.lo.square_ref()),
                hi: up(p, self.hi.square_ref()),
            }
        } else if self.hi <= 0 {
            ValidatedReal {
                lo: down(p, self.hi.square_ref()),
                hi: up(p, self.lo.square_ref()),
            }
        } else {
            let m = self.mag();
            ValidatedReal {
                lo: Float::with_val(p, 0),
                hi: up(p, m.square_ref()),
            }
        }
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        if self.contains_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let p = self.precision();
        Ok(ValidatedReal {
            lo: down(p, self.hi.recip_ref()),
            hi: up(p, self.lo.recip_ref()),
        })
    }

    pub fn div(&self, b: &ValidatedReal) -> Result<Self, ArithError> {
        if b.contains_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let p = self.precision().max(b.precision());
        let (a0, a1, b0, b1) = (&self.lo, &self.hi, &b.lo, &b.hi);
        let r = if *b0 > 0 {
            if *a0 >= 0 {
                (down(p, a0 / b1), up(p, a1 / b0))
            } else if *a1 <= 0 {
                (down(p, a0 / b0), up(p, a1 / b1))
            } else {
                (down(p, a0 / b0), up(p, a1 / b0))
            }
        } else if *a0 >= 0 {
            (down(p, a1 / b1), up(p, a0 / b0))
        } else if *a1 <= 0 {
            (down(p, a1 / b0), up(p, a0 / b1))
        } else {
            (down(p, a1 / b1), up(p, a0 / b1))
        };
        Ok(ValidatedReal { lo: r.0, hi: r.1 })
    }

    pub fn div_int(&self, k: i64) -> Self {
        assert!(k != 0);
        let p = self.precision();
        let a = down(p, &self.lo / k);
        let b = down(p, &self.hi / k);
        let c = up(p, &self.lo / k);
        let d = up(p, &self.hi / k);
        ValidatedReal {
            lo: fmin(a, b),
            hi: fmax(c, d),
        }
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            ValidatedReal {
                lo: Float::with_val(self.precision(), 0),
                hi: self.mag(),
            }
        }
    }

    pub fn max(&self, b: &ValidatedReal) -> Self {
        ValidatedReal {
            lo: fmax(self.lo.clone(), b.lo.clone()),
            hi: fmax(self.hi.clone(), b.hi.clone()),
        }
    }

    pub fn min(&self, b: &ValidatedReal) -> Self {
        ValidatedReal {
            lo: fmin(self.lo.clone(), b.lo.clone()),
            hi: fmin(self.hi.clone(), b.hi.clone()),
        }
    }

    pub fn sqrt(&self) -> Result<Self, ArithError> {
        if self.hi < 0 {
            return Err(ArithError::NonPositiveArgument);
        }
        let p = self.precision();
        let lo = if self.lo <= 0 {
            Float::with_val(p, 0)
        } else {
            down(p, self.lo.sqrt_ref())
        };
        Ok(ValidatedReal {
            lo,
            hi: up(p, self.hi.sqrt_ref()),
        })
    }

    pub fn exp(&self) -> Self {
        let p = self.precision();
        ValidatedReal {
            lo: down(p, self.lo.exp_ref()),
            hi: up(p, self.hi.exp_ref()),
        }
    }

    pub fn log(&self) -> Result<Self, ArithError> {
        if self.lo <= 0 {
            return Err(ArithError::NonPositiveArgument);
        }
        let p = self.precision();
        Ok(ValidatedReal {
            lo: down(p, self.lo.ln_ref()),
            hi: up(p, self.hi.ln_ref()),
        })
    }

    /// `exp(t · log a)` for `a > 0`.
    pub fn pow_real(&self, t: &ValidatedReal) -> Result<Self, ArithError> {
        Ok(t.mul(&self.log()?).exp())
    }

    pub fn powi(&self, n: i32) -> Result<Self, ArithError> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = ValidatedReal::one(self.precision());
        let mut base = self.clone();
        let mut e = n as u32;
        // squaring keeps sign information correct only per power: use sqr for even steps
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        if n % 2 == 0 && !result.is_nonnegative() {
            result.lo = Float::with_val(result.precision(), 0);
        }
        Ok(result)
    }

    pub fn cos(&self) -> Self {
        let p = self.precision();
        let pi = ValidatedReal::pi(p);
        let one = ValidatedReal::one(p);
        let span = self.width();
        let two_pi = pi.mul_2exp(1);
        if span >= *two_pi.lo() || !self.is_finite() {
            return one.neg().hull(&one);
        }
        let c_lo = ValidatedReal {
            lo: down(p, self.lo.cos_ref()),
            hi: up(p, self.lo.cos_ref()),
        };
        let c_hi = ValidatedReal {
            lo: down(p, self.hi.cos_ref()),
            hi: up(p, self.hi.cos_ref()),
        };
        let mut r = c_lo.hull(&c_hi);
        // extrema of cos sit at k·π; include every k that may lie in [lo, hi]
        let a = ValidatedReal::point(self.lo.clone()).div(&pi).unwrap();
        let b = ValidatedReal::point(self.hi.clone()).div(&pi).unwrap();
        let k0 = a.lo().clone().ceil();
        let k1 = b.hi().clone().floor();
        let mut k = k0;
        while k <= k1 {
            let ki = k.to_integer().unwrap_or_else(|| Integer::from(0));
            if ki.is_even() {
                r = r.hull(&one);
            } else {
                r = r.hull(&one.neg());
            }
            k += 1;
        }
        clamp_unit(r)
    }

    pub fn sin(&self) -> Self {
        let p = self.precision();
        let half_pi = ValidatedReal::pi(p).mul_2exp(-1);
        self.sub(&half_pi).cos()
    }

    pub fn atan(&self) -> Self {
        let p = self.precision();
        ValidatedReal {
            lo: down(p, self.lo.atan_ref()),
            hi: up(p, self.hi.atan_ref()),
        }
    }

    /// Decimal rendering `[lo, hi]` with `digits` significant digits, rounded outward.
    pub fn to_decimal_pair(&self, digits: usize) -> (String, String) {
        (
            float_to_decimal(&self.lo, digits, Round::Down),
            float_to_decimal(&self.hi, digits, Round::Up),
        )
    }
}

fn clamp_unit(r: ValidatedReal) -> ValidatedReal {
    let p = r.precision();
    let lo = if r.lo < -1 { Float::with_val(p, -1) } else { r.lo };
    let hi = if r.hi > 1 { Float::with_val(p, 1) } else { r.hi };
    ValidatedReal { lo, hi }
}

/// Decimal string for a float, rounded in the given direction.
pub fn float_to_decimal(x: &Float, digits: usize, round: Round) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x.is_sign_negative() {
            "-inf".to_string()
        } else {
            "inf".to_string()
        };
    }
    let s = x.to_string_radix_round(10, Some(digits.max(1)), round);
    normalize_decimal(&s)
}

/// Turns MPFR's `d.ddde±x` layout into a conventional decimal string.
fn normalize_decimal(s: &str) -> String {
    let (mant, exp) = match s.find('e') {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().unwrap_or(0)),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant),
    };
    let (ip, fp) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let digits: String = format!("{ip}{fp}");
    let point = ip.len() as i64 + exp;
    let out = if exp.abs() > 40 {
        let fp = fp.trim_end_matches('0');
        let e = exp;
        if fp.is_empty() {
            format!("{ip}e{e}")
        } else {
            format!("{ip}.{fp}e{e}")
        }
    } else if point <= 0 {
        let zeros = "0".repeat((-point) as usize);
        let d = digits.trim_end_matches('0');
        format!("0.{zeros}{d}")
    } else if point as usize >= digits.len() {
        let zeros = "0".repeat(point as usize - digits.len());
        format!("{digits}{zeros}")
    } else {
        let (a, b) = digits.split_at(point as usize);
        let b = b.trim_end_matches('0');
        if b.is_empty() {
            a.to_string()
        } else {
            format!("{a}.{b}")
        }
    };
    if neg {
        format!("-{out}")
    } else {
        out
    }
}

/// Exact rational value of a decimal literal such as `-0.125`, `3/4` or `1e-3`.
pub fn parse_decimal_rational(s: &str) -> Result<Rational, ArithError> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal_rational(n)?;
        let d = parse_decimal_rational(d)?;
        if d == 0 {
            return Err(ArithError::Parse(s.to_string()));
        }
        return Ok(n / d);
    }
    let bad = || ArithError::Parse(s.to_string());
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let num = Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
        .map_err(|_| bad())?;
    let e = exp as i64 - fp.len() as i64;
    let ten = Integer::from(10);
    let mut q = Rational::from(num);
    if e >= 0 {
        q *= Rational::from(ten.pow(e as u32));
    } else {
        q /= Rational::from(ten.pow((-e) as u32));
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

impl fmt::Debug for ValidatedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_decimal_pair(20);
        write!(f, "[{a}, {b}]")
    }
}

impl fmt::Display for ValidatedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Add for &ValidatedReal {
    type Output = ValidatedReal;
    fn add(self, rhs: &ValidatedReal) -> ValidatedReal {
        ValidatedReal::add(self, rhs)
    }
}

impl Sub for &ValidatedReal {
    type Output = ValidatedReal;
    fn sub(self, rhs: &ValidatedReal) -> ValidatedReal {
        ValidatedReal::sub(self, rhs)
    }
}

impl Mul for &ValidatedReal {
    type Output = ValidatedReal;
    fn mul(self, rhs: &ValidatedReal) -> ValidatedReal {
        ValidatedReal::mul(self, rhs)
    }
}

impl Neg for &ValidatedReal {
    type Output = ValidatedReal;
    fn neg(self) -> ValidatedReal {
        ValidatedReal::neg(self)
    }
}

/// Interval product (free-function form).
pub fn iv_mul(a: &ValidatedReal, b: &ValidatedReal) -> ValidatedReal {
    a.mul(b)
}

/// Interval logarithm; fails unless `a.lo > 0`.
pub fn iv_log(a: &ValidatedReal) -> Result<ValidatedReal, ArithError> {
    a.log()
}

/// `a^t = exp(t log a)` over interval arguments.
pub fn iv_pow_real(a: &ValidatedReal, t: &ValidatedReal) -> Result<ValidatedReal, ArithError> {
    a.pow_real(t)
}
