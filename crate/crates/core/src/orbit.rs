//! Certified iteration of the critical orbit `c_n(a)` of `f_a(x) = a - x²`
//! over a parameter segment.
//!
//! `c_0(a) = a` and `c_{n+1}(a) = a - c_n(a)²`. Alongside the two endpoint
//! orbits we carry an enclosure of the parameter derivative
//! `c_{n+1}'(a) = 1 - 2 c_n(a) c_n'(a)` over the whole segment. While that
//! enclosure excludes zero, `c_n` is monotone on the segment and the image
//! `ω_n` is exactly the interval spanned by the endpoint values.

use std::cmp::Ordering;

use rug::float::Round;
use rug::ops::AssignRound;
use rug::{Assign, Float};
use thiserror::Error;

use crate::precision::{MPBound, MPInterval, Precision, PrecisionError, Rounding, WidthBounds};

/// Parameter subinterval with exactly representable endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSegment {
    lo: MPBound,
    hi: MPBound,
    /// Number of iterates proven to avoid Δ before the segment was queued.
    certified_iter: u32,
}

impl ParamSegment {
    pub fn new(lo: MPBound, hi: MPBound, certified_iter: u32) -> Result<Self, PrecisionError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(PrecisionError::NonFinite);
        }
        if lo >= hi {
            return Err(PrecisionError::InvalidInterval);
        }
        Ok(ParamSegment { lo, hi, certified_iter })
    }

    /// Degenerate segment `[a, a]`, for evaluating the orbit of one parameter
    /// with the segment machinery.
    pub fn thin(a: MPBound) -> Result<Self, PrecisionError> {
        if !a.is_finite() {
            return Err(PrecisionError::NonFinite);
        }
        Ok(ParamSegment { lo: a.clone(), hi: a, certified_iter: 0 })
    }

    pub fn is_thin(&self) -> bool {
        self.lo == self.hi
    }

    pub fn lo(&self) -> &MPBound {
        &self.lo
    }

    pub fn hi(&self) -> &MPBound {
        &self.hi
    }

    pub fn certified_iter(&self) -> u32 {
        self.certified_iter
    }

    pub fn with_certified_iter(mut self, n: u32) -> Self {
        self.certified_iter = n;
        self
    }

    pub fn prec(&self) -> Precision {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn as_interval(&self) -> MPInterval {
        MPInterval::new(self.lo.clone(), self.hi.clone()).expect("lo <= hi")
    }

    pub fn width(&self) -> WidthBounds {
        self.as_interval().width_bounds().expect("finite endpoints")
    }

    /// Splits at the round-to-nearest midpoint. `None` when no representable
    /// point lies strictly inside.
    pub fn split_half(&self) -> Option<(ParamSegment, ParamSegment)> {
        let mid = MPBound::midpoint(&self.lo, &self.hi);
        if !(self.lo < mid && mid < self.hi) {
            return None;
        }
        let left = ParamSegment { lo: self.lo.clone(), hi: mid.clone(), certified_iter: self.certified_iter };
        let right = ParamSegment { lo: mid, hi: self.hi.clone(), certified_iter: self.certified_iter };
        Some((left, right))
    }
}

/// The open critical neighbourhood `Δ = (-δ, δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalNeighbourhood {
    delta: MPBound,
    neg_delta: MPBound,
    sqrt_delta_up: MPBound,
    loss_threshold: MPBound,
}

impl CriticalNeighbourhood {
    pub fn new(delta: MPBound) -> Result<Self, PrecisionError> {
        if !delta.is_finite() || delta.signum() != Some(Ordering::Greater) {
            return Err(PrecisionError::InvalidInterval);
        }
        let ten = MPBound::from_i64(10, delta.prec(), Rounding::Nearest);
        Ok(CriticalNeighbourhood {
            neg_delta: delta.neg(),
            sqrt_delta_up: delta.sqrt_up()?,
            loss_threshold: delta.div(&ten, Rounding::Nearest)?,
            delta,
        })
    }

    pub fn delta(&self) -> &MPBound {
        &self.delta
    }

    /// Upper bound on √δ, the escape width.
    pub fn sqrt_delta_up(&self) -> &MPBound {
        &self.sqrt_delta_up
    }

    /// Endpoint enclosures wider than this (δ/10) count as precision loss.
    pub fn loss_threshold(&self) -> &MPBound {
        &self.loss_threshold
    }

    /// Where an enclosure lies relative to Δ. Ties count as outside because Δ
    /// is open.
    pub fn side_of(&self, x: &MPInterval) -> DeltaSide {
        if x.lo() >= &self.delta {
            DeltaSide::Above
        } else if x.hi() <= &self.neg_delta {
            DeltaSide::Below
        } else {
            DeltaSide::Unresolved
        }
    }

    pub fn hit(&self, state: &OrbitState) -> DeltaHit {
        match self.side_of(&state.hull) {
            DeltaSide::Unresolved => DeltaHit::Hit,
            _ => DeltaHit::Disjoint,
        }
    }

    pub(crate) fn delta_float(&self) -> &Float {
        self.delta.as_float()
    }

    pub(crate) fn neg_delta_float(&self) -> &Float {
        self.neg_delta.as_float()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaSide {
    /// Every point is `>= δ`.
    Above,
    /// Every point is `<= -δ`.
    Below,
    /// Not provably outside Δ.
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaHit {
    Disjoint,
    Hit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

impl Orientation {
    pub fn sign(self) -> i32 {
        match self {
            Orientation::Increasing => 1,
            Orientation::Decreasing => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    /// The derivative enclosure at `iterate` contains zero.
    #[error("cannot prove constant sign of the derivative at iterate {iterate}")]
    MonotonicityFailure { iterate: u32 },
    /// Enclosures grew too wide (or overflowed) at `iterate`.
    #[error("loss of precision at iterate {iterate}")]
    PrecisionLoss { iterate: u32 },
}

impl StepError {
    pub fn iterate(&self) -> u32 {
        match *self {
            StepError::MonotonicityFailure { iterate } | StepError::PrecisionLoss { iterate } => iterate,
        }
    }
}

/// Certified state of the critical orbit over one segment at iterate `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitState {
    segment: ParamSegment,
    n: u32,
    e_lo: MPInterval,
    e_hi: MPInterval,
    deriv: MPInterval,
    orientation: Orientation,
    hull: MPInterval,
}

impl OrbitState {
    /// State at `n = 0`, where `c_0(a) = a`.
    pub fn init(segment: &ParamSegment) -> OrbitState {
        let prec = segment.prec();
        OrbitState {
            e_lo: MPInterval::thin(segment.lo.clone()),
            e_hi: MPInterval::thin(segment.hi.clone()),
            deriv: MPInterval::from_i64(1, prec),
            orientation: Orientation::Increasing,
            hull: segment.as_interval(),
            segment: segment.clone(),
            n: 0,
        }
    }

    /// Advances one iterate.
    pub fn step(&self, nb: &CriticalNeighbourhood) -> Result<OrbitState, StepError> {
        let next = self.n + 1;
        let loss = StepError::PrecisionLoss { iterate: next };
        let a_lo = MPInterval::thin(self.segment.lo.clone());
        let a_hi = MPInterval::thin(self.segment.hi.clone());
        let e_lo = a_lo.sub(&self.e_lo.sqr());
        let e_hi = a_hi.sub(&self.e_hi.sqr());
        if !e_lo.is_finite() || !e_hi.is_finite() {
            return Err(loss);
        }
        let thr = nb.loss_threshold();
        for e in [&e_lo, &e_hi] {
            let w = e.width_bounds().map_err(|_| loss)?;
            if &w.upper > thr {
                return Err(loss);
            }
        }
        // c_{n+1}' = 1 - 2 c_n c_n' over the whole segment
        let prec = self.segment.prec();
        let deriv = MPInterval::from_i64(1, prec).sub(&self.hull.mul(&self.deriv).mul_pow2(1));
        if !deriv.is_finite() {
            return Err(loss);
        }
        let orientation = match deriv.strict_sign() {
            Some(Ordering::Greater) => Orientation::Increasing,
            Some(_) => Orientation::Decreasing,
            None => return Err(StepError::MonotonicityFailure { iterate: next }),
        };
        let hull = e_lo.hull(&e_hi);
        let state = OrbitState { segment: self.segment.clone(), n: next, e_lo, e_hi, deriv, orientation, hull };
        if !self.segment.is_thin() && state.monotone_width().lower.signum() != Some(Ordering::Greater) {
            return Err(loss);
        }
        Ok(state)
    }

    pub fn segment(&self) -> &ParamSegment {
        &self.segment
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Enclosure of `c_n(segment.lo)`.
    pub fn e_lo(&self) -> &MPInterval {
        &self.e_lo
    }

    /// Enclosure of `c_n(segment.hi)`.
    pub fn e_hi(&self) -> &MPInterval {
        &self.e_hi
    }

    /// Enclosure of `c_n'` over the segment.
    pub fn deriv(&self) -> &MPInterval {
        &self.deriv
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Enclosure of `ω_n`.
    pub fn hull(&self) -> &MPInterval {
        &self.hull
    }

    /// Bounds on `|ω_n| = |c_n(hi) - c_n(lo)|`. The lower bound is the
    /// smallest separation the endpoint enclosures allow; it is non-positive
    /// only if they overlap.
    pub fn monotone_width(&self) -> WidthBounds {
        let lower = match self.orientation {
            Orientation::Increasing => self.e_hi.lo().sub(self.e_lo.hi(), Rounding::Down),
            Orientation::Decreasing => self.e_lo.lo().sub(self.e_hi.hi(), Rounding::Down),
        };
        let upper = self.hull.hi().sub(self.hull.lo(), Rounding::Up);
        WidthBounds { lower, upper }
    }

    /// Escape condition at this iterate, assuming all earlier iterates were
    /// disjoint from Δ: `n >= n0` and `|ω_n| >= √δ`.
    pub fn escape_check(&self, nb: &CriticalNeighbourhood, n0: u32) -> bool {
        if self.n < n0 {
            return false;
        }
        let w = self.monotone_width();
        w.lower.signum() == Some(Ordering::Greater) && &w.lower >= nb.sqrt_delta_up()
    }

    /// Enclosure of the orbit at an endpoint, by orientation: the endpoint
    /// where `c_n` is smaller first.
    pub fn ordered_endpoint_enclosures(&self) -> (&MPInterval, &MPInterval) {
        match self.orientation {
            Orientation::Increasing => (&self.e_lo, &self.e_hi),
            Orientation::Decreasing => (&self.e_hi, &self.e_lo),
        }
    }
}

/// Evaluates enclosures of `c_n(a)` for a single exact parameter, reusing
/// scratch storage between calls.
pub struct ThinOrbit {
    lo: Float,
    hi: Float,
    sq_lo: Float,
    sq_hi: Float,
}

impl ThinOrbit {
    pub fn new(prec: Precision) -> Self {
        let z = Float::new(prec.bits());
        ThinOrbit { lo: z.clone(), hi: z.clone(), sq_lo: z.clone(), sq_hi: z }
    }

    /// Enclosure of `c_n(a)`, or `None` if it became non-finite.
    pub fn enclose(&mut self, a: &MPBound, n: u32) -> Option<MPInterval> {
        self.iterate(a, n)?;
        Some(MPInterval::from_ordered(MPBound::from_float(self.lo.clone()), MPBound::from_float(self.hi.clone())))
    }

    /// Position of `c_n(a)` relative to Δ. Unresolved if the enclosure
    /// straddles a boundary or became non-finite.
    pub fn side(&mut self, a: &MPBound, n: u32, nb: &CriticalNeighbourhood) -> DeltaSide {
        if self.iterate(a, n).is_none() {
            return DeltaSide::Unresolved;
        }
        if &self.lo >= nb.delta_float() {
            DeltaSide::Above
        } else if &self.hi <= nb.neg_delta_float() {
            DeltaSide::Below
        } else {
            DeltaSide::Unresolved
        }
    }

    pub(crate) fn bounds(&mut self, a: &MPBound, n: u32) -> Option<(&Float, &Float)> {
        self.iterate(a, n)?;
        Some((&self.lo, &self.hi))
    }

    fn iterate(&mut self, a: &MPBound, n: u32) -> Option<()> {
        let a = a.as_float();
        self.lo.assign(a);
        self.hi.assign(a);
        for _ in 0..n {
            if self.lo.cmp0() != Some(Ordering::Less) {
                self.sq_lo.assign_round(self.lo.square_ref(), Round::Down);
                self.sq_hi.assign_round(self.hi.square_ref(), Round::Up);
            } else if self.hi.cmp0() != Some(Ordering::Greater) {
                self.sq_lo.assign_round(self.hi.square_ref(), Round::Down);
                self.sq_hi.assign_round(self.lo.square_ref(), Round::Up);
            } else {
                self.sq_lo.assign_round(self.lo.square_ref(), Round::Up);
                self.sq_hi.assign_round(self.hi.square_ref(), Round::Up);
                if self.sq_lo > self.sq_hi {
                    std::mem::swap(&mut self.sq_lo, &mut self.sq_hi);
                }
                self.sq_lo.assign(0);
            }
            self.lo.assign_round(a - &self.sq_hi, Round::Down);
            self.hi.assign_round(a - &self.sq_lo, Round::Up);
            if !self.lo.is_finite() || !self.hi.is_finite() {
                return None;
            }
        }
        Some(())
    }
}

/// Enclosure of `c_n(a)` for one exact parameter value.
pub fn thin_orbit(a: &MPBound, n: u32) -> Option<MPInterval> {
    ThinOrbit::new(a.prec()).enclose(a, n)
}
