use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use escape_core::analytics::{self, default_ranges, measure_at_least_n, measure_width_at_least, summarize_range};
use escape_core::config::{ConfigError, Literal, RunConfig};
use escape_core::engine::{run_escape, verdict_totals, ClassifiedSegment};
use escape_core::io::{self, Format};
use escape_core::precision::{MPBound, Precision, Rounding};
use escape_core::survey::{bisect_study_config, run_bisect_study, run_survey, survey_config};

mod settings;

use settings::{RunFlags, UsageError};

#[derive(Parser, Debug)]
#[command(name = "escapetime", version, about = "Rigorous escape-time computations for the quadratic family")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[command(flatten)]
    run: RunFlags,
    /// Flat `key = value` file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Format of record files
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the escape-time algorithm
    Escape(Common),
    /// First-encounter survey of a uniform subdivision (defaults: subdiv 600, nmax 100, precision 200)
    Survey(Common),
    /// Excluded measure and runtime against the number of bisection steps
    BisectStudy {
        #[command(flatten)]
        common: Common,
        /// Bisection step counts, as a list (10,20,30) or a range (10..60)
        #[arg(long, default_value = "10..60")]
        steps: String,
    },
    /// Analytics over a results or survey file
    Report {
        #[command(flatten)]
        common: Common,
        /// Results or survey file(s); segments are combined
        #[arg(long = "in", required = true)]
        input: Vec<PathBuf>,
        #[arg(long = "histogram-slots", default_value_t = 80)]
        histogram_slots: u32,
        /// Sub-ranges `lo:hi,lo:hi,...`, or `sixths` for the six tenths of [1.4, 2]
        #[arg(long)]
        ranges: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err.downcast_ref::<UsageError>().is_some() || err.downcast_ref::<ConfigError>().is_some();
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn config_for(defaults: RunConfig, common: &Common) -> Result<RunConfig> {
    let cfg = settings::resolve(defaults, common.config.as_deref(), &common.run)?;
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Escape(common) => escape(&common),
        Command::Survey(common) => survey(&common),
        Command::BisectStudy { common, steps } => bisect_study(&common, &steps),
        Command::Report { common, input, histogram_slots, ranges } => {
            report(&common, &input, histogram_slots, ranges.as_deref())
        }
    }
}

fn escape(common: &Common) -> Result<()> {
    let cfg = config_for(RunConfig::default(), common)?;
    log::info!("escape run over [{}, {}], w = {}", cfg.omega_lo, cfg.omega_hi, cfg.min_width_frac);
    let result = run_escape(&cfg)?;
    let name = format!("results.{}", common.format.extension());
    let mut w = create(&common.out, &name)?;
    io::write_results(&mut w, &result.classified, common.format)?;
    finish(w)?;
    let mut w = create(&common.out, "summary.json")?;
    io::write_json(&mut w, &io::summary_json(&result))?;
    finish(w)?;
    log::info!(
        "{} segments, ESCAPED measure >= {} ({:.1} s)",
        result.classified.len(),
        io::down(&result.escaped_measure().lower),
        result.wallclock_secs
    );
    Ok(())
}

fn survey(common: &Common) -> Result<()> {
    let cfg = config_for(survey_config(), common)?;
    let start = Instant::now();
    let records = run_survey(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let name = format!("survey.{}", common.format.extension());
    let mut w = create(&common.out, &name)?;
    io::write_survey(&mut w, &records, common.format)?;
    finish(w)?;
    let mut w = create(&common.out, "survey_summary.json")?;
    io::write_json(&mut w, &io::survey_summary_json(&cfg, &records, elapsed))?;
    finish(w)?;
    log::info!("{} survey records ({elapsed:.1} s)", records.len());
    Ok(())
}

fn parse_steps(text: &str) -> Result<Vec<u32>> {
    let bad = || UsageError(format!("invalid value {text:?} for --steps"));
    let steps: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if steps.is_empty() || steps.contains(&0) {
        return Err(bad().into());
    }
    Ok(steps)
}

fn bisect_study(common: &Common, steps: &str) -> Result<()> {
    let steps = parse_steps(steps)?;
    let cfg = config_for(bisect_study_config(), common)?;
    let rows = run_bisect_study(&cfg, &steps)?;
    let name = format!("study.{}", common.format.extension());
    let mut w = create(&common.out, &name)?;
    io::write_study(&mut w, &rows, common.format)?;
    finish(w)
}

fn parse_ranges(text: &str) -> Result<Vec<(Literal, Literal)>> {
    let pairs: Vec<(String, String)> = if text == "sixths" {
        default_ranges()
    } else {
        text.split(',')
            .map(|r| {
                r.split_once(':')
                    .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                    .ok_or_else(|| UsageError(format!("invalid range {r:?} for --ranges (expected lo:hi)")))
            })
            .collect::<Result<_, _>>()?
    };
    pairs
        .into_iter()
        .map(|(a, b)| {
            let lit = |s: &str| s.parse::<Literal>().map_err(|e| UsageError(format!("invalid value {s:?} for --ranges: {e}")));
            Ok((lit(&a)?, lit(&b)?))
        })
        .collect()
}

enum Input {
    Results(Vec<ClassifiedSegment>),
    Survey(Vec<escape_core::survey::SurveyRecord>),
}

fn read_input(paths: &[PathBuf], prec: Precision) -> Result<Input> {
    let mut results = Vec::new();
    let mut surveys = Vec::new();
    for path in paths {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut reader = BufReader::new(file);
        let mut head = String::new();
        std::io::BufRead::read_line(&mut reader, &mut head)?;
        let file = File::open(path)?;
        let ctx = || format!("cannot read {}", path.display());
        if head.starts_with("verdict,") {
            results.extend(io::read_results(BufReader::new(file), prec).with_context(ctx)?);
        } else if head.starts_with("lo_hex,") {
            surveys.extend(io::read_survey(BufReader::new(file), prec).with_context(ctx)?);
        } else {
            return Err(anyhow!("{}: not a results or survey CSV file", path.display()));
        }
    }
    let by_lo = |a: &MPBound, b: &MPBound| a.partial_cmp(b).expect("finite endpoints");
    match (results.is_empty(), surveys.is_empty()) {
        (_, true) => {
            results.sort_by(|a, b| by_lo(a.segment.lo(), b.segment.lo()));
            Ok(Input::Results(results))
        }
        (true, false) => {
            surveys.sort_by(|a, b| by_lo(a.segment.lo(), b.segment.lo()));
            Ok(Input::Survey(surveys))
        }
        (false, false) => Err(UsageError("cannot mix results and survey files".into()).into()),
    }
}

fn report(common: &Common, input: &[PathBuf], slots: u32, ranges: Option<&str>) -> Result<()> {
    if slots == 0 {
        return Err(UsageError("--histogram-slots must be at least 1".into()).into());
    }
    let ranges = ranges.map(parse_ranges).transpose()?;
    let cfg = config_for(RunConfig::default(), common)?;
    let ctx = cfg.validate()?;
    let prec = ctx.prec;
    let out = &common.out;
    match read_input(input, prec)? {
        Input::Results(classified) => {
            let curve = measure_at_least_n(&classified, 0..=cfg.n_max, prec);
            let mut w = create(out, "curve_n.csv")?;
            io::write_curve(&mut w, &curve, |n| n.to_string())?;
            finish(w)?;
            let escaped = classified.iter().filter(|c| c.verdict == escape_core::engine::Verdict::Escaped);
            let omega = ctx.omega.width().upper;
            let hist =
                analytics::width_slots(escaped.map(|c| &c.segment), &ctx.min_width, &omega, slots, prec);
            let mut w = create(out, "histogram.csv")?;
            io::write_histogram(&mut w, &hist)?;
            finish(w)?;
            let mut w = create(out, "report.json")?;
            let totals = verdict_totals(&classified, prec);
            io::write_json(&mut w, &io::report_json(classified.len(), &totals))?;
            finish(w)?;
            if let Some(ranges) = ranges {
                let summaries: Vec<_> = ranges
                    .iter()
                    .map(|(lo, hi)| summarize_range(&classified, &lo.resolve(prec), &hi.resolve(prec), prec))
                    .collect();
                let mut w = create(out, "ranges.json")?;
                io::write_json(&mut w, &io::subrange_json(&summaries))?;
                finish(w)?;
            }
            log::info!("report over {} classified segments", classified.len());
        }
        Input::Survey(records) => {
            let curve = measure_at_least_n(&records, 0..=cfg.n_max, prec);
            let mut w = create(out, "curve_n.csv")?;
            io::write_curve(&mut w, &curve, |n| n.to_string())?;
            finish(w)?;
            let thresholds: Vec<MPBound> =
                (0..=80).map(|k| MPBound::parse(&format!("{}e-2", 5 * k), prec, Rounding::Nearest)).collect::<Result<_, _>>()?;
            let curve = measure_width_at_least(&records, &thresholds, prec);
            let mut w = create(out, "curve_width.csv")?;
            io::write_curve(&mut w, &curve, |t| format!("{t}"))?;
            finish(w)?;
            if ranges.is_some() {
                log::warn!("--ranges ignored for survey input");
            }
            log::info!("report over {} survey records", records.len());
        }
    }
    Ok(())
}
