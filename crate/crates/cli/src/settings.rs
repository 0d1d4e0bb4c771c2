//! Layering of run settings: subcommand defaults, then the config file, then
//! flags.

use std::fmt;
use std::path::Path;

use clap::Args;
use escape_core::config::{Literal, RunConfig};

/// A user mistake in settings; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// Parameter window Ω
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub omega: Option<Vec<Literal>>,
    /// Radius δ of the critical neighbourhood
    #[arg(long)]
    pub delta: Option<Literal>,
    /// Minimal escape time N₀
    #[arg(long)]
    pub n0: Option<u32>,
    /// Iterate cap N_max
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Stop once every queued segment has been iterated N_min times
    #[arg(long)]
    pub nmin: Option<u32>,
    /// Initial uniform subdivision count u
    #[arg(long)]
    pub subdiv: Option<u64>,
    /// Minimal segment width w as a fraction of |Ω|
    #[arg(long = "min-width-frac")]
    pub min_width_frac: Option<Literal>,
    /// Bisection steps s per preimage boundary
    #[arg(long = "bisect-steps")]
    pub bisect_steps: Option<u32>,
    /// Significand bits p
    #[arg(long)]
    pub precision: Option<u32>,
    /// Cap on processed segments
    #[arg(long)]
    pub imax: Option<u64>,
    /// Cap on queue length
    #[arg(long = "queue-cap")]
    pub queue_cap: Option<usize>,
    /// Worker threads (results do not depend on this)
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| format!("invalid value {value:?} for {key}: {e}"))
}

impl RunFlags {
    /// Sets one `key = value` pair, keys as the long flag names.
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "omega" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(format!("omega needs two values, got {value:?}"));
                }
                self.omega = Some(vec![parse(key, parts[0])?, parse(key, parts[1])?]);
            }
            "delta" => self.delta = Some(parse(key, value)?),
            "n0" => self.n0 = Some(parse(key, value)?),
            "nmax" => self.nmax = Some(parse(key, value)?),
            "nmin" => self.nmin = Some(parse(key, value)?),
            "subdiv" => self.subdiv = Some(parse(key, value)?),
            "min-width-frac" => self.min_width_frac = Some(parse(key, value)?),
            "bisect-steps" => self.bisect_steps = Some(parse(key, value)?),
            "precision" => self.precision = Some(parse(key, value)?),
            "imax" => self.imax = Some(parse(key, value)?),
            "queue-cap" => self.queue_cap = Some(parse(key, value)?),
            "threads" => self.threads = Some(parse(key, value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<RunFlags, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
        let mut flags = RunFlags::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| UsageError(format!("{}:{}: {msg}", path.display(), i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            flags.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(flags)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: &RunFlags) -> RunFlags {
        RunFlags {
            omega: over.omega.clone().or(self.omega),
            delta: over.delta.clone().or(self.delta),
            n0: over.n0.or(self.n0),
            nmax: over.nmax.or(self.nmax),
            nmin: over.nmin.or(self.nmin),
            subdiv: over.subdiv.or(self.subdiv),
            min_width_frac: over.min_width_frac.clone().or(self.min_width_frac),
            bisect_steps: over.bisect_steps.or(self.bisect_steps),
            precision: over.precision.or(self.precision),
            imax: over.imax.or(self.imax),
            queue_cap: over.queue_cap.or(self.queue_cap),
            threads: over.threads.or(self.threads),
        }
    }

    pub fn apply(&self, mut cfg: RunConfig) -> RunConfig {
        if let Some([lo, hi]) = self.omega.as_deref() {
            cfg.omega_lo = lo.clone();
            cfg.omega_hi = hi.clone();
        }
        if let Some(v) = &self.delta {
            cfg.delta = v.clone();
        }
        if let Some(v) = &self.min_width_frac {
            cfg.min_width_frac = v.clone();
        }
        cfg.n0 = self.n0.unwrap_or(cfg.n0);
        cfg.n_max = self.nmax.unwrap_or(cfg.n_max);
        cfg.n_min = self.nmin.or(cfg.n_min);
        cfg.subdivisions = self.subdiv.unwrap_or(cfg.subdivisions);
        cfg.bisect_steps = self.bisect_steps.unwrap_or(cfg.bisect_steps);
        cfg.precision = self.precision.unwrap_or(cfg.precision);
        cfg.i_max = self.imax.or(cfg.i_max);
        cfg.queue_cap = self.queue_cap.or(cfg.queue_cap);
        cfg.threads = self.threads.unwrap_or(cfg.threads);
        cfg
    }
}

/// Builds the run configuration from `defaults`, an optional config file and
/// the command-line flags, in increasing priority.
pub fn resolve(defaults: RunConfig, file: Option<&Path>, flags: &RunFlags) -> Result<RunConfig, UsageError> {
    let base = match file {
        Some(path) => RunFlags::from_file(path)?,
        None => RunFlags::default(),
    };
    Ok(base.overlay(flags).apply(defaults))
}
