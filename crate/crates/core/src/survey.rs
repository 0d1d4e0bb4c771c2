//! First-encounter survey: iterate each segment of a uniform subdivision of
//! Ω until its orbit first meets Δ, without chopping. Also the bisection-step
//! study, which reruns the escape engine for a range of `s`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::config::{ConfigError, Literal, Resolved, RunConfig};
use crate::engine::{run_escape, seed_queue, Verdict};
use crate::exec::Executor;
use crate::orbit::{CriticalNeighbourhood, DeltaHit, OrbitState, ParamSegment, StepError};
use crate::precision::WidthBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SurveyOutcome {
    Hit,
    /// Derivative sign could not be certified.
    Problem,
    /// Enclosures became too wide before any hit.
    PrecisionLoss,
    /// Still disjoint from Δ at iterate N_max.
    Exhausted,
}

impl SurveyOutcome {
    pub const ALL: [SurveyOutcome; 4] =
        [SurveyOutcome::Hit, SurveyOutcome::Problem, SurveyOutcome::PrecisionLoss, SurveyOutcome::Exhausted];

    pub fn as_str(self) -> &'static str {
        match self {
            SurveyOutcome::Hit => "HIT",
            SurveyOutcome::Problem => "PROBLEM",
            SurveyOutcome::PrecisionLoss => "PRECISION_LOSS",
            SurveyOutcome::Exhausted => "EXHAUSTED",
        }
    }
}

impl fmt::Display for SurveyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurveyOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SurveyOutcome::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown outcome {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyRecord {
    pub segment: ParamSegment,
    pub outcome: SurveyOutcome,
    /// `HIT` only.
    pub first_hit: Option<u32>,
    /// `HIT` only: bounds on `|ω_N|` at the first hit.
    pub width_at_hit: Option<WidthBounds>,
    /// `PROBLEM` and `PRECISION_LOSS`: the iterate that could not be computed.
    pub problem_iter: Option<u32>,
}

impl SurveyRecord {
    pub fn count_of(records: &[SurveyRecord], outcome: SurveyOutcome) -> usize {
        records.iter().filter(|r| r.outcome == outcome).count()
    }
}

/// Survey defaults: u = 600, N_max = 100 and 200-bit arithmetic.
pub fn survey_config() -> RunConfig {
    RunConfig { n_max: 100, precision: 200, subdivisions: 600, ..RunConfig::default() }
}

/// Iterates one segment to its first encounter with Δ.
pub fn survey_segment(seg: &ParamSegment, nb: &CriticalNeighbourhood, n_max: u32) -> SurveyRecord {
    let record = |outcome, first_hit, width_at_hit, problem_iter| SurveyRecord {
        segment: seg.clone(),
        outcome,
        first_hit,
        width_at_hit,
        problem_iter,
    };
    let mut state = OrbitState::init(seg);
    loop {
        let n = state.n();
        if nb.hit(&state) == DeltaHit::Hit {
            return record(SurveyOutcome::Hit, Some(n), Some(state.monotone_width()), None);
        }
        if n >= n_max {
            return record(SurveyOutcome::Exhausted, None, None, None);
        }
        match state.step(nb) {
            Ok(next) => state = next,
            Err(e @ StepError::MonotonicityFailure { .. }) => {
                return record(SurveyOutcome::Problem, None, None, Some(e.iterate()))
            }
            Err(e @ StepError::PrecisionLoss { .. }) => {
                return record(SurveyOutcome::PrecisionLoss, None, None, Some(e.iterate()))
            }
        }
    }
}

/// One record per seeded segment, in parameter order.
pub fn run_survey(config: &RunConfig) -> Result<Vec<SurveyRecord>, ConfigError> {
    let ctx: Resolved = config.validate()?;
    let seeds = seed_queue(&ctx.omega, config.subdivisions)?;
    let exec = Executor::new(config.threads);
    Ok(exec.map(&seeds, |s| survey_segment(s, &ctx.nb, config.n_max)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectStudyRow {
    pub s: u32,
    pub excluded: WidthBounds,
    pub wallclock_secs: f64,
}

/// The study configuration: 10⁵ processed segments from u = 10,
/// N₀ = N_max = 100, w = 10⁻¹⁰, 1000-bit arithmetic.
pub fn bisect_study_config() -> RunConfig {
    RunConfig {
        i_max: Some(100_000),
        subdivisions: 10,
        n0: 100,
        n_max: 100,
        min_width_frac: Literal::new("1e-10").expect("literal"),
        precision: 1000,
        ..RunConfig::default()
    }
}

/// Runs the escape engine once per `s` and records the excluded measure.
pub fn run_bisect_study(config: &RunConfig, steps: &[u32]) -> Result<Vec<BisectStudyRow>, ConfigError> {
    steps
        .iter()
        .map(|&s| {
            let start = Instant::now();
            let result = run_escape(&RunConfig { bisect_steps: s, ..config.clone() })?;
            let excluded = result.total(Verdict::DeltaExcluded).measure.clone();
            log::info!("bisect study s = {s}: excluded {}", excluded.lower);
            Ok(BisectStudyRow { s, excluded, wallclock_secs: start.elapsed().as_secs_f64() })
        })
        .collect()
}
