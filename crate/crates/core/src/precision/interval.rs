use std::cmp::Ordering;

use super::{MPBound, Precision, PrecisionError, Rounding};

/// Closed interval `[lo, hi]` with `lo <= hi`.
///
/// All operations round the lower end toward −∞ and the upper end toward +∞,
/// so the result encloses every real result of the operation on members of
/// the operands.
#[derive(Clone, Debug, PartialEq)]
pub struct MPInterval {
    lo: MPBound,
    hi: MPBound,
}

/// Rigorous two-sided bound on a non-negative quantity.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct WidthBounds {
    pub lower: MPBound,
    pub upper: MPBound,
}

impl WidthBounds {
    pub fn zero(prec: Precision) -> Self {
        WidthBounds { lower: MPBound::zero(prec), upper: MPBound::zero(prec) }
    }
}

impl MPInterval {
    pub fn new(lo: MPBound, hi: MPBound) -> Result<Self, PrecisionError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(PrecisionError::NotANumber);
        }
        if lo > hi {
            return Err(PrecisionError::InvalidInterval);
        }
        Ok(MPInterval { lo, hi })
    }

    pub fn thin(x: MPBound) -> Self {
        MPInterval { hi: x.clone(), lo: x }
    }

    /// Enclosure of an integer.
    pub fn from_i64(v: i64, prec: Precision) -> Self {
        MPInterval {
            lo: MPBound::from_i64(v, prec, Rounding::Down),
            hi: MPBound::from_i64(v, prec, Rounding::Up),
        }
    }

    /// Enclosure of a decimal literal.
    pub fn parse(text: &str, prec: Precision) -> Result<Self, PrecisionError> {
        Ok(MPInterval {
            lo: MPBound::parse(text, prec, Rounding::Down)?,
            hi: MPBound::parse(text, prec, Rounding::Up)?,
        })
    }

    pub(crate) fn from_ordered(lo: MPBound, hi: MPBound) -> Self {
        debug_assert!(lo <= hi);
        MPInterval { lo, hi }
    }

    pub fn lo(&self) -> &MPBound {
        &self.lo
    }

    pub fn hi(&self) -> &MPBound {
        &self.hi
    }

    pub fn into_bounds(self) -> (MPBound, MPBound) {
        (self.lo, self.hi)
    }

    pub fn is_thin(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: &MPBound) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.signum() != Some(Ordering::Greater) && self.hi.signum() != Some(Ordering::Less)
    }

    pub fn is_subset_of(&self, other: &MPInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `Some(Greater)` if every member is positive, `Some(Less)` if every
    /// member is negative, `None` if the interval contains zero.
    pub fn strict_sign(&self) -> Option<Ordering> {
        if self.lo.signum() == Some(Ordering::Greater) {
            Some(Ordering::Greater)
        } else if self.hi.signum() == Some(Ordering::Less) {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn add(&self, rhs: &MPInterval) -> MPInterval {
        MPInterval {
            lo: self.lo.add(&rhs.lo, Rounding::Down),
            hi: self.hi.add(&rhs.hi, Rounding::Up),
        }
    }

    pub fn sub(&self, rhs: &MPInterval) -> MPInterval {
        MPInterval {
            lo: self.lo.sub(&rhs.hi, Rounding::Down),
            hi: self.hi.sub(&rhs.lo, Rounding::Up),
        }
    }

    pub fn neg(&self) -> MPInterval {
        MPInterval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn mul(&self, rhs: &MPInterval) -> MPInterval {
        let (a, b, c, d) = (&self.lo, &self.hi, &rhs.lo, &rhs.hi);
        let lows = [a.mul(c, Rounding::Down), a.mul(d, Rounding::Down), b.mul(c, Rounding::Down), b.mul(d, Rounding::Down)];
        let highs = [a.mul(c, Rounding::Up), a.mul(d, Rounding::Up), b.mul(c, Rounding::Up), b.mul(d, Rounding::Up)];
        let lo = lows.iter().fold(&lows[0], |m, x| MPBound::min(m, x)).clone();
        let hi = highs.iter().fold(&highs[0], |m, x| MPBound::max(m, x)).clone();
        MPInterval { lo, hi }
    }

    /// Square; the lower end is 0 when the interval contains 0.
    pub fn sqr(&self) -> MPInterval {
        if self.lo.signum() != Some(Ordering::Less) {
            MPInterval { lo: self.lo.sqr(Rounding::Down), hi: self.hi.sqr(Rounding::Up) }
        } else if self.hi.signum() != Some(Ordering::Greater) {
            MPInterval { lo: self.hi.sqr(Rounding::Down), hi: self.lo.sqr(Rounding::Up) }
        } else {
            let a = self.lo.sqr(Rounding::Up);
            let b = self.hi.sqr(Rounding::Up);
            let prec = self.lo.prec().max(self.hi.prec());
            MPInterval { lo: MPBound::zero(prec), hi: MPBound::max(&a, &b).clone() }
        }
    }

    /// Multiplication by the exact constant 2^k.
    pub fn mul_pow2(&self, k: i32) -> MPInterval {
        MPInterval { lo: self.lo.mul_pow2(k), hi: self.hi.mul_pow2(k) }
    }

    pub fn hull(&self, rhs: &MPInterval) -> MPInterval {
        MPInterval {
            lo: MPBound::min(&self.lo, &rhs.lo).clone(),
            hi: MPBound::max(&self.hi, &rhs.hi).clone(),
        }
    }

    /// Lower and upper bound on `hi - lo`.
    pub fn width_bounds(&self) -> Result<WidthBounds, PrecisionError> {
        if !self.is_finite() {
            return Err(PrecisionError::NonFinite);
        }
        let lower = self.hi.sub(&self.lo, Rounding::Down);
        debug_assert!(lower.signum() != Some(Ordering::Less));
        Ok(WidthBounds { lower, upper: self.hi.sub(&self.lo, Rounding::Up) })
    }
}

/// Sums width bounds: lowers rounded down, uppers rounded up, in iteration
/// order. The result is carried at precision `prec`.
pub fn sum_measure<'a, I>(widths: I, prec: Precision) -> WidthBounds
where
    I: IntoIterator<Item = &'a WidthBounds>,
{
    use rug::ops::AddAssignRound;
    use rug::float::Round;
    let mut lower = MPBound::zero(prec).as_float().clone();
    let mut upper = lower.clone();
    for w in widths {
        lower.add_assign_round(w.lower.as_float(), Round::Down);
        upper.add_assign_round(w.upper.as_float(), Round::Up);
    }
    WidthBounds { lower: MPBound::from_float(lower), upper: MPBound::from_float(upper) }
}
