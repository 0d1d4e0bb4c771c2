//! Aggregates over completed survey or run outputs. Every measure is a
//! rigorous `(lower, upper)` pair summed in record order.

use serde::Serialize;

use crate::config::ConfigError;
use crate::engine::{ClassifiedSegment, RunResult, Verdict};
use crate::orbit::ParamSegment;
use crate::precision::{sum_measure, MPBound, MPInterval, Precision, Rounding, WidthBounds};
use crate::survey::SurveyRecord;

/// Common view of survey records and classified run segments.
pub trait HitData {
    fn segment(&self) -> &ParamSegment;
    /// First hit (survey) or escape time (run).
    fn iterations(&self) -> Option<u32>;
    fn width_at_hit(&self) -> Option<&WidthBounds>;
}

impl HitData for SurveyRecord {
    fn segment(&self) -> &ParamSegment {
        &self.segment
    }

    fn iterations(&self) -> Option<u32> {
        self.first_hit
    }

    fn width_at_hit(&self) -> Option<&WidthBounds> {
        self.width_at_hit.as_ref()
    }
}

impl HitData for ClassifiedSegment {
    fn segment(&self) -> &ParamSegment {
        &self.segment
    }

    fn iterations(&self) -> Option<u32> {
        self.escape_time
    }

    fn width_at_hit(&self) -> Option<&WidthBounds> {
        self.width_at_escape.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub threshold: T,
    pub count: u64,
    pub measure: WidthBounds,
}

pub type MeasureCurve<T> = Vec<CurvePoint<T>>;

fn measure_where<R: HitData>(records: &[R], prec: Precision, keep: impl Fn(&R) -> bool) -> (u64, WidthBounds) {
    let widths: Vec<WidthBounds> = records.iter().filter(|r| keep(r)).map(|r| r.segment().width()).collect();
    (widths.len() as u64, sum_measure(&widths, prec))
}

/// Measure of records with `iterations() ≥ N`, for each `N`.
pub fn measure_at_least_n<R: HitData>(
    records: &[R],
    ns: impl IntoIterator<Item = u32>,
    prec: Precision,
) -> MeasureCurve<u32> {
    ns.into_iter()
        .map(|n| {
            let (count, measure) = measure_where(records, prec, |r| r.iterations().is_some_and(|k| k >= n));
            CurvePoint { threshold: n, count, measure }
        })
        .collect()
}

/// Measure of records whose width at the hit is provably at least `t`.
pub fn measure_width_at_least<R: HitData>(records: &[R], thresholds: &[MPBound], prec: Precision) -> MeasureCurve<MPBound> {
    thresholds
        .iter()
        .map(|t| {
            let (count, measure) = measure_where(records, prec, |r| r.width_at_hit().is_some_and(|w| &w.lower >= t));
            CurvePoint { threshold: t.clone(), count, measure }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slot {
    pub lo: MPBound,
    pub hi: MPBound,
    pub count: u64,
    pub measure: WidthBounds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthHistogram {
    pub slots: Vec<Slot>,
}

/// `slot_count + 1` log-uniform boundaries `lo·(hi/lo)^(k/slot_count)`,
/// rounded to nearest; the end points are exact.
pub fn slot_boundaries(lo: &MPBound, hi: &MPBound, slot_count: u32, prec: Precision) -> Vec<MPBound> {
    let work = Precision::new(prec.bits() + 64).expect("valid precision");
    let ln = |x: &MPBound| x.round_to(work, Rounding::Nearest).as_float().clone().ln();
    let (ln_lo, ln_hi) = (ln(lo), ln(hi));
    let mut out = vec![lo.clone()];
    for k in 1..slot_count {
        let t = (ln_hi.clone() - &ln_lo) * k / slot_count + &ln_lo;
        out.push(MPBound::from_float(t.exp()).round_to(prec, Rounding::Nearest));
    }
    out.push(hi.clone());
    out
}

/// Buckets `segments` by width into `slot_count` log-uniform slots spanning
/// `[lo, hi]`. Bucket `k` holds widths in `[b_k, b_{k+1})`; widths outside
/// the span are clamped into the first or last slot.
pub fn width_slots<'a>(
    segments: impl IntoIterator<Item = &'a ParamSegment>,
    lo: &MPBound,
    hi: &MPBound,
    slot_count: u32,
    prec: Precision,
) -> WidthHistogram {
    assert!(slot_count > 0);
    let bounds = slot_boundaries(lo, hi, slot_count, prec);
    let mut widths: Vec<Vec<WidthBounds>> = vec![Vec::new(); slot_count as usize];
    for seg in segments {
        let w = seg.width();
        // first boundary above w, minus one
        let k = bounds[1..].partition_point(|b| b <= &w.lower).min(slot_count as usize - 1);
        widths[k].push(w);
    }
    let slots = widths
        .iter()
        .enumerate()
        .map(|(k, ws)| Slot {
            lo: bounds[k].clone(),
            hi: bounds[k + 1].clone(),
            count: ws.len() as u64,
            measure: sum_measure(ws, prec),
        })
        .collect();
    WidthHistogram { slots }
}

/// Width slots of the ESCAPED segments of a run over `[w·|Ω|, |Ω|]`.
pub fn run_width_slots(result: &RunResult, slot_count: u32) -> WidthHistogram {
    let ctx = result.config.validate().expect("config of a completed run");
    let omega = ctx.omega.width().upper;
    width_slots(escaped(&result.classified), &ctx.min_width, &omega, slot_count, result.prec)
}

fn escaped(classified: &[ClassifiedSegment]) -> impl Iterator<Item = &ParamSegment> {
    classified.iter().filter(|c| c.verdict == Verdict::Escaped).map(|c| &c.segment)
}

/// ESCAPED measure inside `[lo, hi]`, clipping segments that straddle it.
pub fn escaped_measure_within(classified: &[ClassifiedSegment], lo: &MPBound, hi: &MPBound, prec: Precision) -> WidthBounds {
    let widths: Vec<WidthBounds> = escaped(classified)
        .filter_map(|s| {
            let a = MPBound::max(s.lo(), lo);
            let b = MPBound::min(s.hi(), hi);
            (a < b).then(|| MPInterval::new(a.clone(), b.clone()).and_then(|i| i.width_bounds()).expect("finite"))
        })
        .collect();
    sum_measure(&widths, prec)
}

/// Pie slice for widths in `[10^lo_exp, 10^hi_exp)`; `None` means 0 or ∞.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieSlice {
    pub lo_exp: Option<i32>,
    pub hi_exp: Option<i32>,
    pub count: u64,
    pub measure: WidthBounds,
}

impl PieSlice {
    pub fn label(&self) -> String {
        match (self.lo_exp, self.hi_exp) {
            (Some(l), Some(h)) => format!("[1e{l}, 1e{h})"),
            (None, Some(h)) => format!("< 1e{h}"),
            (Some(l), None) => format!(">= 1e{l}"),
            (None, None) => "all".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubrangeSummary {
    pub range_lo: MPBound,
    pub range_hi: MPBound,
    pub escaped: WidthBounds,
    pub escaped_count: u64,
    /// `(lower, upper)` bounds on 100·ESCAPED/|Ω_i|.
    pub mu_percent: (MPBound, MPBound),
    /// Widest first.
    pub slices: Vec<PieSlice>,
}

pub const PIE_MIN_EXP: i32 = -10;
pub const PIE_MAX_EXP: i32 = -1;
pub const PIE_MERGE_SHARE: f64 = 0.02;

/// Decade slices `≥ 10⁻¹`, `[10⁻², 10⁻¹)`, …, `[10⁻¹⁰, 10⁻⁹)`, `< 10⁻¹⁰`,
/// widest first, with the trailing run of slices under 2% of the total
/// joined to the last slice at or above 2%.
pub fn decade_pie<'a>(segments: impl IntoIterator<Item = &'a ParamSegment>, prec: Precision) -> Vec<PieSlice> {
    let edges: Vec<MPBound> = (PIE_MIN_EXP..=PIE_MAX_EXP)
        .rev()
        .map(|e| MPBound::parse(&format!("1e{e}"), prec, Rounding::Nearest).expect("literal"))
        .collect();
    // slot 0 is >= 1e-1, slot k is [edges[k], edges[k-1]), the last is < 1e-10
    let mut widths: Vec<Vec<WidthBounds>> = vec![Vec::new(); edges.len() + 1];
    for seg in segments {
        let w = seg.width();
        let k = edges.partition_point(|e| e > &w.lower);
        widths[k].push(w);
    }
    let exp_of = |k: usize| -> Option<i32> { (k < edges.len()).then(|| PIE_MAX_EXP - k as i32) };
    let mut slices: Vec<PieSlice> = widths
        .iter()
        .enumerate()
        .map(|(k, ws)| PieSlice {
            lo_exp: exp_of(k),
            hi_exp: if k == 0 { None } else { exp_of(k - 1) },
            count: ws.len() as u64,
            measure: sum_measure(ws, prec),
        })
        .collect();
    let total = sum_measure(slices.iter().map(|s| &s.measure), prec).lower.to_f64(Rounding::Nearest);
    if total > 0.0 {
        let share = |s: &PieSlice| s.measure.lower.to_f64(Rounding::Nearest) / total;
        let mut keep = slices.len();
        while keep > 1 && share(&slices[keep - 1]) < PIE_MERGE_SHARE {
            keep -= 1;
        }
        if keep < slices.len() {
            let tail: Vec<PieSlice> = slices.drain(keep..).collect();
            let last = slices.last_mut().expect("nonempty");
            let parts: Vec<WidthBounds> = std::iter::once(last.measure.clone()).chain(tail.iter().map(|s| s.measure.clone())).collect();
            last.measure = sum_measure(&parts, prec);
            last.count += tail.iter().map(|s| s.count).sum::<u64>();
            last.lo_exp = None;
        }
    }
    slices
}

/// Percentages and pies for one completed run per sub-range. All runs must
/// share every setting except Ω.
pub fn subrange_summary(results: &[RunResult]) -> Result<Vec<SubrangeSummary>, ConfigError> {
    if let Some(first) = results.first() {
        if let Some(bad) = results.iter().find(|r| !first.config.same_except_omega(&r.config)) {
            return Err(ConfigError::Mismatch(format!(
                "run over [{}, {}] differs from the first run in more than omega",
                bad.config.omega_lo, bad.config.omega_hi
            )));
        }
    }
    results
        .iter()
        .map(|r| {
            let ctx = r.config.validate()?;
            Ok(summarize_range(&r.classified, ctx.omega.lo(), ctx.omega.hi(), r.prec))
        })
        .collect()
}

/// Summary of the ESCAPED segments inside `[lo, hi]`. Segments are counted
/// in the pie only if they lie entirely inside the range.
pub fn summarize_range(classified: &[ClassifiedSegment], lo: &MPBound, hi: &MPBound, prec: Precision) -> SubrangeSummary {
    let escaped_m = escaped_measure_within(classified, lo, hi, prec);
    let inside: Vec<&ParamSegment> = escaped(classified).filter(|s| s.lo() >= lo && s.hi() <= hi).collect();
    let range = MPInterval::new(lo.clone(), hi.clone()).and_then(|i| i.width_bounds()).expect("finite range");
    let hundred = MPBound::from_i64(100, prec, Rounding::Nearest);
    let pct = |m: &MPBound, w: &MPBound, rnd: Rounding| m.mul(&hundred, rnd).div(w, rnd).expect("nonzero range");
    let mu = (pct(&escaped_m.lower, &range.upper, Rounding::Down), pct(&escaped_m.upper, &range.lower, Rounding::Up));
    SubrangeSummary {
        range_lo: lo.clone(),
        range_hi: hi.clone(),
        escaped_count: inside.len() as u64,
        escaped: escaped_m,
        mu_percent: mu,
        slices: decade_pie(inside, prec),
    }
}

/// The six sub-ranges `[1.4 + k/10, 1.5 + k/10]` of Ω.
pub fn default_ranges() -> Vec<(String, String)> {
    (0..6).map(|k| (format!("1.{}", 4 + k), if k == 5 { "2".to_string() } else { format!("1.{}", 5 + k) })).collect()
}
