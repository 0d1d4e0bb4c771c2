//! Arbitrary-precision binary bounds with caller-chosen rounding.
//!
//! Every operation takes the rounding direction as an argument, so there is no
//! global rounding-mode state that could leak between threads. Results are
//! produced at the larger of the operand precisions; within a run all bounds
//! share one precision.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Round, Special};
use rug::ops::{AssignRound, NegAssign};
use rug::{Assign, Float, Integer};
use serde::{Serialize, Serializer};

use super::PrecisionError;

/// Significand width in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_BITS: u32 = 2;
    pub const MAX_BITS: u32 = 1 << 20;

    pub fn new(bits: u32) -> Result<Self, PrecisionError> {
        if (Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            Ok(Precision(bits))
        } else {
            Err(PrecisionError::InvalidPrecision(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Precision {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.0)
    }
}

/// Rounding direction for a single operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Toward −∞.
    Down,
    /// Toward +∞.
    Up,
    Nearest,
    TowardZero,
}

impl Rounding {
    pub fn name(self) -> &'static str {
        match self {
            Rounding::Down => "down",
            Rounding::Up => "up",
            Rounding::Nearest => "nearest",
            Rounding::TowardZero => "toward_zero",
        }
    }
}

impl From<Rounding> for Round {
    fn from(r: Rounding) -> Round {
        match r {
            Rounding::Down => Round::Down,
            Rounding::Up => Round::Up,
            Rounding::Nearest => Round::Nearest,
            Rounding::TowardZero => Round::Zero,
        }
    }
}

/// A binary floating-point number of fixed precision; may be ±∞.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct MPBound(Float);

impl MPBound {
    pub fn zero(prec: Precision) -> Self {
        MPBound(Float::new(prec.bits()))
    }

    pub fn infinity(prec: Precision, negative: bool) -> Self {
        let special = if negative { Special::NegInfinity } else { Special::Infinity };
        MPBound(Float::with_val(prec.bits(), special))
    }

    pub fn from_i64(value: i64, prec: Precision, rnd: Rounding) -> Self {
        MPBound(Float::with_val_round(prec.bits(), value, rnd.into()).0)
    }

    pub fn from_f64(value: f64, prec: Precision, rnd: Rounding) -> Result<Self, PrecisionError> {
        if value.is_nan() {
            return Err(PrecisionError::NotANumber);
        }
        Ok(MPBound(Float::with_val_round(prec.bits(), value, rnd.into()).0))
    }

    /// Parses a decimal literal (`1.4`, `1e-3`) or a hex-float (`0x1.8p+0`),
    /// rounding in the given direction to `prec` bits.
    pub fn parse(text: &str, prec: Precision, rnd: Rounding) -> Result<Self, PrecisionError> {
        let t = text.trim();
        let unsigned = t.trim_start_matches(['-', '+']);
        if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
            let exact = parse_hex_exact(t)?;
            return Ok(MPBound(Float::with_val_round(prec.bits(), &exact, rnd.into()).0));
        }
        let incomplete =
            Float::parse(t).map_err(|e| PrecisionError::Parse(format!("{t:?}: {e}")))?;
        let value = Float::with_val_round(prec.bits(), incomplete, rnd.into()).0;
        if value.is_nan() {
            return Err(PrecisionError::NotANumber);
        }
        Ok(MPBound(value))
    }

    pub fn prec(&self) -> Precision {
        Precision(self.0.prec())
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_nan(&self) -> bool {
        self.0.is_nan()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    /// Sign of the value, treating ±0 as zero. `None` for NaN.
    pub fn signum(&self) -> Option<Ordering> {
        self.0.cmp0()
    }

    pub fn to_f64(&self, rnd: Rounding) -> f64 {
        self.0.to_f64_round(rnd.into())
    }

    /// Re-rounds to another precision.
    pub fn round_to(&self, prec: Precision, rnd: Rounding) -> Self {
        MPBound(Float::with_val_round(prec.bits(), &self.0, rnd.into()).0)
    }

    pub fn add(&self, rhs: &MPBound, rnd: Rounding) -> Self {
        let prec = self.0.prec().max(rhs.0.prec());
        let v = Float::with_val_round(prec, &self.0 + &rhs.0, rnd.into()).0;
        MPBound(v).nan_to_bound(rnd)
    }

    pub fn sub(&self, rhs: &MPBound, rnd: Rounding) -> Self {
        let prec = self.0.prec().max(rhs.0.prec());
        let v = Float::with_val_round(prec, &self.0 - &rhs.0, rnd.into()).0;
        MPBound(v).nan_to_bound(rnd)
    }

    /// Product; `0 · ∞` is taken as 0 (infinite endpoints stand for unbounded
    /// reals, never for an actual infinity).
    pub fn mul(&self, rhs: &MPBound, rnd: Rounding) -> Self {
        let prec = self.0.prec().max(rhs.0.prec());
        if self.0.is_zero() || rhs.0.is_zero() {
            return MPBound(Float::new(prec));
        }
        MPBound(Float::with_val_round(prec, &self.0 * &rhs.0, rnd.into()).0)
    }

    pub fn div(&self, rhs: &MPBound, rnd: Rounding) -> Result<Self, PrecisionError> {
        if rhs.0.is_zero() {
            return Err(PrecisionError::DivisionByZero);
        }
        let prec = self.0.prec().max(rhs.0.prec());
        let v = Float::with_val_round(prec, &self.0 / &rhs.0, rnd.into()).0;
        Ok(MPBound(v).nan_to_bound(rnd))
    }

    pub fn sqr(&self, rnd: Rounding) -> Self {
        MPBound(Float::with_val_round(self.0.prec(), self.0.square_ref(), rnd.into()).0)
    }

    pub fn sqrt(&self, rnd: Rounding) -> Result<Self, PrecisionError> {
        if self.0.is_nan() || self.0.cmp0() == Some(Ordering::Less) {
            return Err(PrecisionError::NegativeSqrt);
        }
        Ok(MPBound(Float::with_val_round(self.0.prec(), self.0.sqrt_ref(), rnd.into()).0))
    }

    /// Upper bound on √x.
    pub fn sqrt_up(&self) -> Result<Self, PrecisionError> {
        self.sqrt(Rounding::Up)
    }

    pub fn neg(&self) -> Self {
        let mut v = self.0.clone();
        v.neg_assign();
        MPBound(v)
    }

    /// Exact multiplication by 2^k.
    pub fn mul_pow2(&self, k: i32) -> Self {
        let mut v = self.0.clone();
        v <<= k;
        MPBound(v)
    }

    /// Round-to-nearest of `(lo + hi) / 2` at the larger operand precision.
    pub fn midpoint(lo: &MPBound, hi: &MPBound) -> Self {
        let mut m = lo.add(hi, Rounding::Nearest);
        m.0 >>= 1;
        m
    }

    /// Unit in the last place for finite non-zero values; `None` otherwise.
    pub fn ulp(&self) -> Option<Self> {
        let exp = self.0.get_exp()?;
        let prec = self.0.prec();
        let mut u = Float::with_val(prec, 1);
        u <<= exp - prec as i32;
        Some(MPBound(u))
    }

    pub fn min<'a>(a: &'a MPBound, b: &'a MPBound) -> &'a MPBound {
        if b.0 < a.0 {
            b
        } else {
            a
        }
    }

    pub fn max<'a>(a: &'a MPBound, b: &'a MPBound) -> &'a MPBound {
        if b.0 > a.0 {
            b
        } else {
            a
        }
    }

    /// Lowercase hexadecimal floating-point text (`0x1.8p+0`, `-0x1p-3`,
    /// `0x0p+0`, `inf`). Round-trips bit-exactly through [`MPBound::from_hex`].
    pub fn to_hex(&self) -> String {
        if self.0.is_nan() {
            return "nan".to_string();
        }
        let sign = if self.0.is_sign_negative() { "-" } else { "" };
        if self.0.is_infinite() {
            return format!("{sign}inf");
        }
        let Some((mut m, mut e)) = self.0.to_integer_exp() else {
            return format!("{sign}0x0p+0");
        };
        if m.cmp0() == Ordering::Equal {
            return format!("{sign}0x0p+0");
        }
        m.abs_mut();
        let tz = m.find_one(0).unwrap_or(0);
        m >>= tz;
        e += tz as i32;
        let bits = m.significant_bits();
        let exp = e + bits as i32 - 1;
        let frac_bits = bits - 1;
        if frac_bits == 0 {
            return format!("{sign}0x1p{exp:+}");
        }
        let pad = (4 - frac_bits % 4) % 4;
        let mut frac = m - (Integer::from(1) << frac_bits);
        frac <<= pad;
        let digits = ((frac_bits + pad) / 4) as usize;
        let hex = frac.to_string_radix(16);
        format!("{sign}0x1.{hex:0>digits$}p{exp:+}")
    }

    /// Parses hex-float text into a bound of precision `prec`. Fails if the
    /// value is not exactly representable at that precision.
    pub fn from_hex(text: &str, prec: Precision) -> Result<Self, PrecisionError> {
        let exact = parse_hex_exact(text.trim())?;
        let (value, ord) = Float::with_val_round(prec.bits(), &exact, Round::Nearest);
        if ord != Ordering::Equal {
            return Err(PrecisionError::Inexact { text: text.to_string(), prec: prec.bits() });
        }
        Ok(MPBound(value))
    }

    /// Decimal text with exactly `digits` fractional digits, rounded in the
    /// given direction (so a `Down` rendering is a valid lower bound).
    pub fn to_decimal(&self, digits: u32, rnd: Rounding) -> String {
        if self.0.is_nan() {
            return "nan".to_string();
        }
        if self.0.is_infinite() {
            return if self.0.is_sign_negative() { "-inf".into() } else { "inf".into() };
        }
        let scale = Integer::from(Integer::u_pow_u(10, digits));
        // p-bit times a (digits·log2 10)-bit integer is exact at this precision
        let work = self.0.prec() + 4 * digits + 8;
        let mut scaled = Float::with_val(work, &self.0);
        scaled *= &scale;
        let q = match rnd {
            Rounding::Down => scaled.floor(),
            Rounding::Up => scaled.ceil(),
            Rounding::Nearest => scaled.round_even(),
            Rounding::TowardZero => scaled.trunc(),
        };
        let mut q = q.to_integer().expect("finite value");
        let negative = q.cmp0() == Ordering::Less;
        q.abs_mut();
        let (int_part, frac_part) = q.div_rem(scale);
        let sign = if negative { "-" } else { "" };
        if digits == 0 {
            return format!("{sign}{int_part}");
        }
        let w = digits as usize;
        format!("{sign}{int_part}.{:0>w$}", frac_part.to_string())
    }

    pub(crate) fn as_float(&self) -> &Float {
        &self.0
    }

    pub(crate) fn from_float(f: Float) -> Self {
        MPBound(f)
    }

    /// Directed operations never yield NaN: an undefined lower bound becomes
    /// −∞ and an undefined upper bound +∞.
    fn nan_to_bound(mut self, rnd: Rounding) -> Self {
        if self.0.is_nan() {
            match rnd {
                Rounding::Down => self.0.assign(Special::NegInfinity),
                Rounding::Up => self.0.assign(Special::Infinity),
                _ => {}
            }
        }
        self
    }
}

/// Exact value of a hex-float literal, carried at exactly the precision its
/// mantissa needs.
fn parse_hex_exact(text: &str) -> Result<Float, PrecisionError> {
    let bad = || PrecisionError::Parse(format!("malformed hex float {text:?}"));
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    if body.eq_ignore_ascii_case("inf") || body.eq_ignore_ascii_case("infinity") {
        let special = if negative { Special::NegInfinity } else { Special::Infinity };
        return Ok(Float::with_val(Precision::MIN_BITS, special));
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(bad)?;
    let (mant, exp) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, "0"),
    };
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_digits, frac_digits) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int_digits.is_empty() && frac_digits.is_empty() {
        return Err(bad());
    }
    let all = format!("{int_digits}{frac_digits}");
    if !all.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad());
    }
    let mut m = Integer::from_str_radix(&all, 16).map_err(|_| bad())?;
    let shift = exp - 4 * frac_digits.len() as i64;
    let shift = i32::try_from(shift).map_err(|_| bad())?;
    if negative {
        m = -m;
    }
    let bits = m.significant_bits().max(Precision::MIN_BITS);
    let mut v = Float::with_val(bits, &m);
    v <<= shift;
    if negative && v.is_zero() {
        v.assign_round(-0.0f64, Round::Nearest);
    }
    Ok(v)
}

/// Serialized as hex-float text.
impl Serialize for MPBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl fmt::Debug for MPBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Display for MPBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(12, Rounding::Nearest))
    }
}
