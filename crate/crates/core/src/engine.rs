//! The escape-time engine: a FIFO queue of parameter segments, each iterated
//! from scratch until its orbit hits Δ, fails to stay monotone, loses
//! precision or exceeds the iterate cap.
//!
//! Segments that hit Δ early or too narrow are chopped (see [`crate::chop`])
//! and the side pieces requeued; segments whose monotonicity cannot be
//! certified are halved. Every output segment receives exactly one
//! [`Verdict`] and the outputs tile Ω exactly.
//!
//! Processing a segment is a pure function of the segment and the
//! configuration. Work is dispatched in batches whose results are applied in
//! queue order, so the output is bit-identical for any thread count.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::chop::chop_at_delta;
use crate::config::{ConfigError, EffectiveValues, Resolved, RunConfig};
use crate::exec::Executor;
use crate::orbit::{DeltaHit, OrbitState, ParamSegment, StepError};
use crate::precision::{sum_measure, MPBound, Precision, Rounding, WidthBounds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Escape time at least N₀ certified.
    Escaped,
    /// Chopped side piece narrower than w·|Ω|.
    TooSmall,
    /// Iterated past N_max without hitting Δ.
    MaxIter,
    /// Enclosures too wide to continue, at minimal width or indivisible.
    PrecisionLoss,
    /// Derivative sign not certified, at minimal width.
    NoSignMinWidth,
    /// Outer enclosure of a Δ-preimage.
    DeltaExcluded,
    /// Still queued when the run stopped early.
    QueueLeftover,
}

impl Verdict {
    pub const ALL: [Verdict; 7] = [
        Verdict::Escaped,
        Verdict::TooSmall,
        Verdict::MaxIter,
        Verdict::PrecisionLoss,
        Verdict::NoSignMinWidth,
        Verdict::DeltaExcluded,
        Verdict::QueueLeftover,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Escaped => "ESCAPED",
            Verdict::TooSmall => "TOO_SMALL",
            Verdict::MaxIter => "MAX_ITER",
            Verdict::PrecisionLoss => "PRECISION_LOSS",
            Verdict::NoSignMinWidth => "NO_SIGN_MIN_WIDTH",
            Verdict::DeltaExcluded => "DELTA_EXCLUDED",
            Verdict::QueueLeftover => "QUEUE_LEFTOVER",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown verdict {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedSegment {
    pub segment: ParamSegment,
    pub verdict: Verdict,
    /// `ESCAPED` only.
    pub escape_time: Option<u32>,
    /// `ESCAPED` only: bounds on `|ω_N|` at the escape time.
    pub width_at_escape: Option<WidthBounds>,
    /// Iterate of the Δ encounter (or failure) that produced this verdict.
    pub hit_iter: Option<u32>,
}

impl ClassifiedSegment {
    fn new(segment: ParamSegment, verdict: Verdict, hit_iter: Option<u32>) -> Self {
        ClassifiedSegment { segment, verdict, escape_time: None, width_at_escape: None, hit_iter }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    IterationCap,
    QueueCap,
    MinIterReached,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerdictTotal {
    pub verdict: Verdict,
    pub count: u64,
    pub measure: WidthBounds,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: RunConfig,
    pub effective: EffectiveValues,
    pub prec: Precision,
    /// Sorted by lower endpoint.
    pub classified: Vec<ClassifiedSegment>,
    /// One entry per verdict, in [`Verdict::ALL`] order.
    pub totals: Vec<VerdictTotal>,
    pub processed: u64,
    pub max_queue_depth: usize,
    pub stop: StopReason,
    pub wallclock_secs: f64,
}

impl RunResult {
    pub fn total(&self, verdict: Verdict) -> &VerdictTotal {
        self.totals.iter().find(|t| t.verdict == verdict).expect("all verdicts present")
    }

    pub fn escaped_measure(&self) -> &WidthBounds {
        &self.total(Verdict::Escaped).measure
    }

    pub fn count(&self, verdict: Verdict) -> u64 {
        self.total(verdict).count
    }
}

/// Per-verdict counts and measures, summed in the order given.
pub fn verdict_totals(classified: &[ClassifiedSegment], prec: Precision) -> Vec<VerdictTotal> {
    Verdict::ALL
        .iter()
        .map(|&v| {
            let widths: Vec<WidthBounds> =
                classified.iter().filter(|c| c.verdict == v).map(|c| c.segment.width()).collect();
            VerdictTotal { verdict: v, count: widths.len() as u64, measure: sum_measure(&widths, prec) }
        })
        .collect()
}

/// `u` segments tiling `omega`, with endpoints `lo + k·|Ω|/u` rounded to
/// nearest at the precision of `omega`.
pub fn seed_queue(omega: &ParamSegment, u: u64) -> Result<Vec<ParamSegment>, ConfigError> {
    let prec = omega.prec();
    let work = Precision::new(prec.bits() + 64).expect("valid precision");
    let lo = omega.lo().round_to(work, Rounding::Nearest);
    let width = omega.hi().round_to(work, Rounding::Nearest).sub(&lo, Rounding::Nearest);
    let count = MPBound::from_i64(u as i64, work, Rounding::Nearest);
    let mut points = Vec::with_capacity(u as usize + 1);
    points.push(omega.lo().clone());
    for k in 1..u {
        let kk = MPBound::from_i64(k as i64, work, Rounding::Nearest);
        let off = width.mul(&kk, Rounding::Nearest).div(&count, Rounding::Nearest).expect("u > 0");
        points.push(lo.add(&off, Rounding::Nearest).round_to(prec, Rounding::Nearest));
    }
    points.push(omega.hi().clone());
    points
        .windows(2)
        .map(|w| ParamSegment::new(w[0].clone(), w[1].clone(), 0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| ConfigError::Invalid {
            field: "subdiv",
            value: u.to_string(),
            reason: format!("too fine for {} bits", prec.bits()),
        })
}

/// Result of processing one dequeued segment.
#[derive(Debug, Default)]
pub struct Outcome {
    pub finished: Vec<ClassifiedSegment>,
    pub requeue: Vec<ParamSegment>,
}

impl Outcome {
    fn finish(&mut self, c: ClassifiedSegment) {
        self.finished.push(c);
    }

    /// Requeues `piece` unless it is narrower than the minimal width, in
    /// which case it is classified as `small`.
    fn keep_or(&mut self, piece: ParamSegment, ctx: &Resolved, small: Verdict, hit_iter: u32) {
        if piece.width().upper < ctx.min_width {
            self.finish(ClassifiedSegment::new(piece, small, Some(hit_iter)));
        } else {
            self.requeue.push(piece);
        }
    }
}

/// Processes one segment: rebuilds its orbit from `n = 0` and applies the
/// first of the Δ-hit, monotonicity, precision and iterate-cap rules.
pub fn process_segment(seg: &ParamSegment, ctx: &Resolved) -> Outcome {
    let cfg = &ctx.config;
    let nb = &ctx.nb;
    let mut out = Outcome::default();
    let mut state = OrbitState::init(seg);
    loop {
        let n = state.n();
        if nb.hit(&state) == DeltaHit::Hit {
            if state.escape_check(nb, cfg.n0) {
                out.finish(ClassifiedSegment {
                    segment: seg.clone().with_certified_iter(n.saturating_sub(1)),
                    verdict: Verdict::Escaped,
                    escape_time: Some(n),
                    width_at_escape: Some(state.monotone_width()),
                    hit_iter: Some(n),
                });
                return out;
            }
            let chop = chop_at_delta(&state, nb, cfg.bisect_steps);
            if let Some(left) = chop.left {
                out.keep_or(left, ctx, Verdict::TooSmall, n);
            }
            out.finish(ClassifiedSegment::new(chop.excluded, Verdict::DeltaExcluded, Some(n)));
            if let Some(right) = chop.right {
                out.keep_or(right, ctx, Verdict::TooSmall, n);
            }
            return out;
        }
        if n >= cfg.n_max {
            out.finish(ClassifiedSegment::new(seg.clone().with_certified_iter(n), Verdict::MaxIter, None));
            return out;
        }
        match state.step(nb) {
            Ok(next) => state = next,
            Err(err) => {
                let small = match err {
                    StepError::MonotonicityFailure { .. } => Verdict::NoSignMinWidth,
                    StepError::PrecisionLoss { .. } => Verdict::PrecisionLoss,
                };
                let at = err.iterate();
                match seg.split_half() {
                    Some((a, b)) => {
                        out.keep_or(a.with_certified_iter(n), ctx, small, at);
                        out.keep_or(b.with_certified_iter(n), ctx, small, at);
                    }
                    None => out.finish(ClassifiedSegment::new(
                        seg.clone().with_certified_iter(n),
                        Verdict::PrecisionLoss,
                        Some(at),
                    )),
                }
                return out;
            }
        }
    }
}

/// Runs the full escape-time algorithm.
pub fn run_escape(config: &RunConfig) -> Result<RunResult, ConfigError> {
    let ctx = config.validate()?;
    let seeds = seed_queue(&ctx.omega, config.subdivisions)?;
    Ok(run_queue(&ctx, seeds))
}

const LOG_EVERY: u64 = 250_000;

fn run_queue(ctx: &Resolved, seeds: Vec<ParamSegment>) -> RunResult {
    let start = Instant::now();
    let cfg = &ctx.config;
    let exec = Executor::new(cfg.threads);
    let batch_size = 64 * exec.threads();
    let n_min = cfg.n_min;
    let below = |s: &ParamSegment| n_min.is_some_and(|m| s.certified_iter() < m);

    let mut queue: VecDeque<ParamSegment> = seeds.into();
    let mut below_min = queue.iter().filter(|s| below(s)).count();
    let mut finished: Vec<ClassifiedSegment> = Vec::new();
    let mut processed = 0u64;
    let mut max_depth = queue.len();
    let mut next_log = LOG_EVERY;

    let should_stop = |len: usize, below_min: usize| -> Option<StopReason> {
        if cfg.queue_cap.is_some_and(|cap| len > cap) {
            Some(StopReason::QueueCap)
        } else if n_min.is_some() && below_min == 0 {
            Some(StopReason::MinIterReached)
        } else {
            None
        }
    };

    let (stop, leftover) = loop {
        if queue.is_empty() {
            break (StopReason::Completed, Vec::new());
        }
        let budget = cfg.i_max.map_or(u64::MAX, |m| m.saturating_sub(processed));
        if budget == 0 {
            break (StopReason::IterationCap, queue.drain(..).collect());
        }
        let k = queue.len().min(batch_size).min(usize::try_from(budget).unwrap_or(usize::MAX));
        let batch: Vec<ParamSegment> = queue.drain(..k).collect();
        let outcomes = exec.map(&batch, |s| process_segment(s, ctx));
        // Apply in queue order; `len` is the queue length a sequential run
        // would see before dequeuing batch[i].
        let mut len = queue.len() + batch.len();
        let mut stopped = None;
        for (i, (seg, out)) in batch.iter().zip(outcomes).enumerate() {
            if let Some(reason) = should_stop(len, below_min) {
                stopped = Some((reason, i));
                break;
            }
            len -= 1;
            below_min -= usize::from(below(seg));
            processed += 1;
            finished.extend(out.finished);
            for piece in out.requeue {
                below_min += usize::from(below(&piece));
                queue.push_back(piece);
                len += 1;
            }
            max_depth = max_depth.max(len);
        }
        if let Some((reason, i)) = stopped {
            let mut rest: Vec<ParamSegment> = batch[i..].to_vec();
            rest.extend(queue.drain(..));
            break (reason, rest);
        }
        if processed >= next_log {
            log::info!("processed {processed} segments, queue {}, finished {}", queue.len(), finished.len());
            next_log += LOG_EVERY;
        }
    };
    finished.extend(leftover.into_iter().map(|s| ClassifiedSegment::new(s, Verdict::QueueLeftover, None)));
    finished.sort_by(|a, b| a.segment.lo().partial_cmp(b.segment.lo()).expect("finite endpoints"));
    let totals = verdict_totals(&finished, ctx.prec);
    RunResult {
        config: cfg.clone(),
        effective: ctx.effective(),
        prec: ctx.prec,
        classified: finished,
        totals,
        processed,
        max_queue_depth: max_depth,
        stop,
        wallclock_secs: start.elapsed().as_secs_f64(),
    }
}
