//! Removing the Δ-preimage from a segment whose iterate hits Δ.
//!
//! On a monotone segment the set `{a : c_N(a) ∈ Δ}` is an interval. Each of
//! its two boundaries is located by bisection on thin-parameter enclosures of
//! `c_N`; the cut points are the last midpoints proven to map outside Δ, so
//! the side pieces are certified and the excluded middle is an outer
//! enclosure of the preimage.

use rug::Float;

use crate::orbit::{CriticalNeighbourhood, DeltaSide, OrbitState, ParamSegment, ThinOrbit};
use crate::precision::MPBound;

#[derive(Clone, Debug, PartialEq)]
pub struct ChopResult {
    pub left: Option<ParamSegment>,
    pub excluded: ParamSegment,
    pub right: Option<ParamSegment>,
}

/// Relation of an enclosure to a threshold `t` (either `δ` or `−δ`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Relation {
    /// Provably on the same side of `t` as the kept piece.
    Kept,
    /// Provably on the other side.
    Crossed,
    /// Straddles `t` or is not finite.
    Unknown,
}

struct Boundary<'a> {
    nb: &'a CriticalNeighbourhood,
    n: u32,
    side: DeltaSide,
}

impl Boundary<'_> {
    fn relation(&self, eval: &mut ThinOrbit, a: &MPBound) -> Relation {
        let Some((lo, hi)) = eval.bounds(a, self.n) else {
            return Relation::Unknown;
        };
        classify(lo, hi, self.side, self.nb)
    }
}

fn classify(lo: &Float, hi: &Float, side: DeltaSide, nb: &CriticalNeighbourhood) -> Relation {
    match side {
        DeltaSide::Above => {
            let t = nb.delta_float();
            if lo >= t {
                Relation::Kept
            } else if hi < t {
                Relation::Crossed
            } else {
                Relation::Unknown
            }
        }
        DeltaSide::Below => {
            let t = nb.neg_delta_float();
            if hi <= t {
                Relation::Kept
            } else if lo > t {
                Relation::Crossed
            } else {
                Relation::Unknown
            }
        }
        DeltaSide::Unresolved => Relation::Unknown,
    }
}

/// Bisects between `kept` (maps to `side` of Δ) and `other` for at most
/// `steps` midpoint evaluations. Returns the final kept point.
fn refine(b: &Boundary<'_>, eval: &mut ThinOrbit, kept: &MPBound, other: &MPBound, steps: u32) -> MPBound {
    let mut kept = kept.clone();
    let mut other = other.clone();
    for _ in 0..steps {
        let mid = if kept < other { MPBound::midpoint(&kept, &other) } else { MPBound::midpoint(&other, &kept) };
        if mid == kept || mid == other {
            break;
        }
        match b.relation(eval, &mid) {
            Relation::Kept => kept = mid,
            Relation::Crossed => other = mid,
            Relation::Unknown => break,
        }
    }
    kept
}

/// Splits the segment of a state whose hull meets Δ into an optional left
/// piece, the excluded middle, and an optional right piece. `steps` bounds
/// the midpoint evaluations per boundary. Side pieces carry
/// `certified_iter = state.n()`.
pub fn chop_at_delta(state: &OrbitState, nb: &CriticalNeighbourhood, steps: u32) -> ChopResult {
    let seg = state.segment();
    let n = state.n();
    let mut eval = ThinOrbit::new(seg.prec());
    let lo_side = nb.side_of(state.e_lo());
    let hi_side = nb.side_of(state.e_hi());

    let cut = |side: DeltaSide, kept: &MPBound, other: &MPBound, eval: &mut ThinOrbit| -> Option<MPBound> {
        if side == DeltaSide::Unresolved {
            return None;
        }
        let b = Boundary { nb, n, side };
        let point = refine(&b, eval, kept, other, steps);
        // one more evaluation certifies the piece that ends at the cut
        (b.relation(eval, &point) == Relation::Kept).then_some(point)
    };
    let mut left_cut = cut(lo_side, seg.lo(), seg.hi(), &mut eval);
    let mut right_cut = cut(hi_side, seg.hi(), seg.lo(), &mut eval);
    if let (Some(l), Some(r)) = (&left_cut, &right_cut) {
        if l >= r {
            // only possible if the hull did not actually meet Δ
            debug_assert!(false, "chop_at_delta called on a disjoint state");
            left_cut = None;
            right_cut = None;
        }
    }

    let piece = |lo: &MPBound, hi: &MPBound, certified: u32| ParamSegment::new(lo.clone(), hi.clone(), certified).ok();
    let left = left_cut.as_ref().and_then(|c| piece(seg.lo(), c, n));
    let right = right_cut.as_ref().and_then(|c| piece(c, seg.hi(), n));
    let ex_lo = if left.is_some() { left_cut.as_ref().unwrap() } else { seg.lo() };
    let ex_hi = if right.is_some() { right_cut.as_ref().unwrap() } else { seg.hi() };
    let excluded = piece(ex_lo, ex_hi, n.saturating_sub(1)).expect("cut points are ordered");
    ChopResult { left, excluded, right }
}
