//! Run configuration shared by the escape engine, the survey and the
//! bisection-step study.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::orbit::{CriticalNeighbourhood, ParamSegment};
use crate::precision::{MPBound, Precision, PrecisionError, Rounding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid value {value:?} for {field}: {reason}")]
    Invalid { field: &'static str, value: String, reason: String },
    #[error("{0}")]
    Mismatch(String),
}

impl ConfigError {
    fn invalid(field: &'static str, value: impl fmt::Display, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field, value: value.to_string(), reason: reason.into() }
    }
}

/// A real-valued setting as written by the user (decimal or hex-float). It is
/// materialised at the run precision, rounded toward zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal(String);

impl Literal {
    pub fn new(text: &str) -> Result<Self, PrecisionError> {
        let text = text.trim();
        let probe = MPBound::parse(text, Precision::new(64)?, Rounding::TowardZero)?;
        if !probe.is_finite() {
            return Err(PrecisionError::NonFinite);
        }
        Ok(Literal(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn resolve(&self, prec: Precision) -> MPBound {
        MPBound::parse(&self.0, prec, Rounding::TowardZero).expect("validated at construction")
    }

    pub fn to_f64(&self) -> f64 {
        self.resolve(Precision::new(64).unwrap()).to_f64(Rounding::Nearest)
    }
}

impl FromStr for Literal {
    type Err = PrecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Literal::new(s)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

fn lit(s: &str) -> Literal {
    Literal::new(s).expect("valid literal")
}

/// All tunables of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    /// Parameter window Ω.
    pub omega_lo: Literal,
    pub omega_hi: Literal,
    /// Radius of the critical neighbourhood Δ = (−δ, δ).
    pub delta: Literal,
    /// Minimal escape time N₀.
    pub n0: u32,
    /// Iterate cap N_max.
    pub n_max: u32,
    /// Stop once every queued segment has been iterated this many times.
    pub n_min: Option<u32>,
    /// Initial uniform subdivision count u. Seed boundaries are permanent
    /// cuts, so the default of 1 starts from Ω whole.
    pub subdivisions: u64,
    /// Minimal segment width as a fraction w of |Ω|.
    pub min_width_frac: Literal,
    /// Bisection steps s per Δ-preimage boundary.
    pub bisect_steps: u32,
    /// Significand bits p.
    pub precision: u32,
    /// Cap on processed segments.
    pub i_max: Option<u64>,
    /// Cap on queue length.
    pub queue_cap: Option<usize>,
    /// Worker threads; never changes results.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega_lo: lit("1.4"),
            omega_hi: lit("2"),
            delta: lit("1e-3"),
            n0: 25,
            n_max: 200,
            n_min: None,
            subdivisions: 1,
            min_width_frac: lit("1e-10"),
            bisect_steps: 40,
            precision: 250,
            i_max: None,
            queue_cap: None,
            threads: 1,
        }
    }
}

/// A validated configuration with every real setting materialised at the run
/// precision.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub prec: Precision,
    pub omega: ParamSegment,
    pub nb: CriticalNeighbourhood,
    /// w·|Ω|; pieces narrower than this are not requeued.
    pub min_width: MPBound,
}

impl RunConfig {
    pub fn validate(&self) -> Result<Resolved, ConfigError> {
        if self.precision < 53 {
            return Err(ConfigError::invalid("precision", self.precision, "must be at least 53 bits"));
        }
        let prec = Precision::new(self.precision)
            .map_err(|e| ConfigError::invalid("precision", self.precision, e.to_string()))?;
        let delta = self.delta.resolve(prec);
        if delta.signum() != Some(std::cmp::Ordering::Greater) {
            return Err(ConfigError::invalid("delta", &self.delta, "must be positive"));
        }
        if self.n0 == 0 || self.n0 > self.n_max {
            return Err(ConfigError::invalid("n0", self.n0, format!("must satisfy 0 < n0 <= nmax ({})", self.n_max)));
        }
        let w = self.min_width_frac.resolve(prec);
        let one = MPBound::from_i64(1, prec, Rounding::Nearest);
        if w.signum() != Some(std::cmp::Ordering::Greater) || w >= one {
            return Err(ConfigError::invalid("min-width-frac", &self.min_width_frac, "must lie in (0, 1)"));
        }
        if self.bisect_steps == 0 {
            return Err(ConfigError::invalid("bisect-steps", self.bisect_steps, "must be at least 1"));
        }
        if self.subdivisions == 0 {
            return Err(ConfigError::invalid("subdiv", self.subdivisions, "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(ConfigError::invalid("threads", self.threads, "must be at least 1"));
        }
        if self.queue_cap == Some(0) {
            return Err(ConfigError::invalid("queue-cap", 0, "must be at least 1"));
        }
        let omega = ParamSegment::new(self.omega_lo.resolve(prec), self.omega_hi.resolve(prec), 0)
            .map_err(|_| {
                ConfigError::invalid("omega", format!("{} {}", self.omega_lo, self.omega_hi), "need lo < hi")
            })?;
        let nb = CriticalNeighbourhood::new(delta)
            .map_err(|e| ConfigError::invalid("delta", &self.delta, e.to_string()))?;
        let min_width = w.mul(&omega.width().upper, Rounding::Nearest);
        Ok(Resolved { config: self.clone(), prec, omega, nb, min_width })
    }

    /// True if the two configurations differ only in Ω and thread count.
    pub fn same_except_omega(&self, other: &RunConfig) -> bool {
        let mut a = self.clone();
        a.omega_lo = other.omega_lo.clone();
        a.omega_hi = other.omega_hi.clone();
        a.threads = other.threads;
        &a == other
    }
}

/// Effective binary values of the real-valued settings, for the run summary.
#[derive(Clone, Debug, Serialize)]
pub struct EffectiveValues {
    pub omega_lo_hex: String,
    pub omega_hi_hex: String,
    pub delta_hex: String,
    pub delta_rounding: &'static str,
    pub sqrt_delta_up_hex: String,
    pub min_width_hex: String,
}

impl Resolved {
    pub fn effective(&self) -> EffectiveValues {
        EffectiveValues {
            omega_lo_hex: self.omega.lo().to_hex(),
            omega_hi_hex: self.omega.hi().to_hex(),
            delta_hex: self.nb.delta().to_hex(),
            delta_rounding: Rounding::TowardZero.name(),
            sqrt_delta_up_hex: self.nb.sqrt_delta_up().to_hex(),
            min_width_hex: self.min_width.to_hex(),
        }
    }
}
