//! CSV and JSON serialization. Endpoints are written as hex floats and read
//! back bit-exactly; measures are 12-digit decimals rounded outward.

use std::io::{Read, Write};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analytics::{CurvePoint, SubrangeSummary, WidthHistogram};
use crate::config::RunConfig;
use crate::engine::{ClassifiedSegment, RunResult, Verdict, VerdictTotal};
use crate::orbit::ParamSegment;
use crate::precision::{sum_measure, MPBound, Precision, Rounding, WidthBounds};
use crate::survey::{BisectStudyRow, SurveyOutcome, SurveyRecord};

pub const DECIMAL_DIGITS: u32 = 12;

pub const RESULTS_HEADER: [&str; 8] = [
    "verdict",
    "lo_hex",
    "hi_hex",
    "width_dec_lower",
    "certifiedIter",
    "escapeTime",
    "widthAtEscape_dec_lower",
    "hitIter",
];

pub const SURVEY_HEADER: [&str; 7] = [
    "lo_hex",
    "hi_hex",
    "outcome",
    "firstHit",
    "widthAtHit_dec_lower",
    "widthAtHit_dec_upper",
    "problemIter",
];

pub const STUDY_HEADER: [&str; 4] = ["s", "excluded_dec_lower", "excluded_dec_upper", "wallclock_seconds"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {msg}")]
    Format { line: u64, msg: String },
}

pub fn down(x: &MPBound) -> String {
    x.to_decimal(DECIMAL_DIGITS, Rounding::Down)
}

pub fn up(x: &MPBound) -> String {
    x.to_decimal(DECIMAL_DIGITS, Rounding::Up)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Output format of record files. JSON files hold an array of objects keyed
/// by the CSV column names, with the same text values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

fn write_table<W: Write, const K: usize>(
    mut out: W,
    header: [&str; K],
    rows: impl Iterator<Item = [String; K]>,
    format: Format,
) -> Result<(), IoError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let items: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .map(|row| header.iter().zip(row).map(|(h, v)| (h.to_string(), serde_json::Value::String(v))).collect())
                .collect();
            serde_json::to_writer_pretty(&mut out, &items)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_results<W: Write>(out: W, classified: &[ClassifiedSegment], format: Format) -> Result<(), IoError> {
    let rows = classified.iter().map(|c| {
        [
            c.verdict.as_str().to_string(),
            c.segment.lo().to_hex(),
            c.segment.hi().to_hex(),
            down(&c.segment.width().lower),
            c.segment.certified_iter().to_string(),
            opt(c.escape_time),
            c.width_at_escape.as_ref().map(|wb| down(&wb.lower)).unwrap_or_default(),
            opt(c.hit_iter),
        ]
    });
    write_table(out, RESULTS_HEADER, rows, format)
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
    index: Vec<usize>,
}

impl<R: Read> Rows<R> {
    fn new(input: R, header: &[&str]) -> Result<Self, IoError> {
        let mut reader = csv::Reader::from_reader(input);
        let found = reader.headers()?.clone();
        let index = header
            .iter()
            .map(|h| {
                found.iter().position(|f| f == *h).ok_or_else(|| IoError::Format { line: 1, msg: format!("missing column {h}") })
            })
            .collect::<Result<_, _>>()?;
        Ok(Rows { reader, index })
    }

    fn for_each(mut self, mut f: impl FnMut(&Field<'_>) -> Result<(), String>) -> Result<(), IoError> {
        for rec in self.reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            f(&Field { rec: &rec, index: &self.index }).map_err(|msg| IoError::Format { line, msg })?;
        }
        Ok(())
    }
}

struct Field<'a> {
    rec: &'a csv::StringRecord,
    index: &'a [usize],
}

impl Field<'_> {
    fn get(&self, col: usize) -> &str {
        self.rec.get(self.index[col]).unwrap_or("")
    }

    fn hex(&self, col: usize, prec: Precision) -> Result<MPBound, String> {
        MPBound::from_hex(self.get(col), prec).map_err(|e| e.to_string())
    }

    fn opt_u32(&self, col: usize) -> Result<Option<u32>, String> {
        let s = self.get(col);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|e| format!("bad integer {s:?}: {e}"))
    }

    fn dec(&self, col: usize, prec: Precision, rnd: Rounding) -> Result<Option<MPBound>, String> {
        let s = self.get(col);
        if s.is_empty() {
            return Ok(None);
        }
        MPBound::parse(s, prec, rnd).map(Some).map_err(|e| e.to_string())
    }

    fn segment(&self, lo: usize, hi: usize, certified: u32, prec: Precision) -> Result<ParamSegment, String> {
        ParamSegment::new(self.hex(lo, prec)?, self.hex(hi, prec)?, certified).map_err(|e| e.to_string())
    }
}

/// Reads a results file at precision `prec`. Widths at escape are only
/// available as 12-digit lower bounds, so both of their bounds are set to
/// that value.
pub fn read_results<R: Read>(input: R, prec: Precision) -> Result<Vec<ClassifiedSegment>, IoError> {
    let mut out = Vec::new();
    Rows::new(input, &RESULTS_HEADER)?.for_each(|f| {
        let verdict: Verdict = f.get(0).parse()?;
        let certified = f.opt_u32(4)?.ok_or("missing certifiedIter")?;
        let width_at_escape = f.dec(6, prec, Rounding::Down)?.map(|w| WidthBounds { lower: w.clone(), upper: w });
        out.push(ClassifiedSegment {
            segment: f.segment(1, 2, certified, prec)?,
            verdict,
            escape_time: f.opt_u32(5)?,
            width_at_escape,
            hit_iter: f.opt_u32(7)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_survey<W: Write>(out: W, records: &[SurveyRecord], format: Format) -> Result<(), IoError> {
    let rows = records.iter().map(|r| {
        let (wl, wu) = r.width_at_hit.as_ref().map(|wb| (down(&wb.lower), up(&wb.upper))).unwrap_or_default();
        [
            r.segment.lo().to_hex(),
            r.segment.hi().to_hex(),
            r.outcome.as_str().to_string(),
            opt(r.first_hit),
            wl,
            wu,
            opt(r.problem_iter),
        ]
    });
    write_table(out, SURVEY_HEADER, rows, format)
}

/// Reads a survey file; widths at the hit come back as the outward-rounded
/// decimal bounds.
pub fn read_survey<R: Read>(input: R, prec: Precision) -> Result<Vec<SurveyRecord>, IoError> {
    let mut out = Vec::new();
    Rows::new(input, &SURVEY_HEADER)?.for_each(|f| {
        let outcome: SurveyOutcome = f.get(2).parse()?;
        let width_at_hit = match (f.dec(4, prec, Rounding::Down)?, f.dec(5, prec, Rounding::Up)?) {
            (Some(lower), Some(upper)) => Some(WidthBounds { lower, upper }),
            (None, None) => None,
            _ => return Err("half of a width pair".into()),
        };
        out.push(SurveyRecord {
            segment: f.segment(0, 1, 0, prec)?,
            outcome,
            first_hit: f.opt_u32(3)?,
            width_at_hit,
            problem_iter: f.opt_u32(6)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_study<W: Write>(out: W, rows: &[BisectStudyRow], format: Format) -> Result<(), IoError> {
    let rows = rows.iter().map(|r| {
        [r.s.to_string(), down(&r.excluded.lower), up(&r.excluded.upper), format!("{:.6}", r.wallclock_secs)]
    });
    write_table(out, STUDY_HEADER, rows, format)
}

/// Curve CSV: `threshold, count, measure_dec_lower, measure_dec_upper`.
pub fn write_curve<W: Write, T>(out: W, curve: &[CurvePoint<T>], threshold: impl Fn(&T) -> String) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "count", "measure_dec_lower", "measure_dec_upper"])?;
    for p in curve {
        w.write_record([threshold(&p.threshold), p.count.to_string(), down(&p.measure.lower), up(&p.measure.upper)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(out: W, hist: &WidthHistogram) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "lo_hex", "hi_hex", "lo_dec", "count", "measure_dec_lower", "measure_dec_upper"])?;
    for (k, s) in hist.slots.iter().enumerate() {
        w.write_record([
            k.to_string(),
            s.lo.to_hex(),
            s.hi.to_hex(),
            format!("{:.6e}", s.lo.to_f64(Rounding::Nearest)),
            s.count.to_string(),
            down(&s.measure.lower),
            up(&s.measure.upper),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn measure_json(m: &WidthBounds) -> serde_json::Value {
    json!({ "lower": down(&m.lower), "lower_rounding": "down", "upper": up(&m.upper), "upper_rounding": "up" })
}

/// Run summary: effective configuration, per-verdict counts and measures,
/// counters and wallclock.
pub fn summary_json(result: &RunResult) -> serde_json::Value {
    json!({
        "config": result.config,
        "threads": result.config.threads,
        "effective": result.effective,
        "stop_reason": result.stop,
        "segments": result.classified.len(),
        "processed": result.processed,
        "max_queue_depth": result.max_queue_depth,
        "verdicts": totals_json(&result.totals),
        "wallclock_seconds": result.wallclock_secs,
    })
}

/// Per-verdict counts and measures.
pub fn totals_json(totals: &[VerdictTotal]) -> serde_json::Value {
    let verdicts: Vec<_> = totals
        .iter()
        .map(|t| json!({ "verdict": t.verdict.as_str(), "count": t.count, "measure": measure_json(&t.measure) }))
        .collect();
    json!(verdicts)
}

/// Totals of a report over a results file.
pub fn report_json(segments: usize, totals: &[VerdictTotal]) -> serde_json::Value {
    json!({ "segments": segments, "verdicts": totals_json(totals) })
}

/// Survey summary: effective configuration and per-outcome counts and
/// measures.
pub fn survey_summary_json(config: &RunConfig, records: &[SurveyRecord], wallclock_secs: f64) -> serde_json::Value {
    let effective = config.validate().map(|c| c.effective()).ok();
    let prec = Precision::new(config.precision).expect("validated precision");
    let outcomes: Vec<_> = SurveyOutcome::ALL
        .iter()
        .map(|&o| {
            let widths: Vec<WidthBounds> =
                records.iter().filter(|r| r.outcome == o).map(|r| r.segment.width()).collect();
            json!({ "outcome": o.as_str(), "count": widths.len(), "measure": measure_json(&sum_measure(&widths, prec)) })
        })
        .collect();
    json!({
        "config": config,
        "threads": config.threads,
        "effective": effective,
        "records": records.len(),
        "outcomes": outcomes,
        "wallclock_seconds": wallclock_secs,
    })
}

pub fn subrange_json(summaries: &[SubrangeSummary]) -> serde_json::Value {
    let items: Vec<_> = summaries
        .iter()
        .map(|s| {
            let slices: Vec<_> = s
                .slices
                .iter()
                .map(|p| json!({ "widths": p.label(), "count": p.count, "measure": measure_json(&p.measure) }))
                .collect();
            json!({
                "range": [s.range_lo.to_hex(), s.range_hi.to_hex()],
                "range_dec": [format!("{}", s.range_lo), format!("{}", s.range_hi)],
                "escaped_count": s.escaped_count,
                "escaped_measure": measure_json(&s.escaped),
                "mu_percent": { "lower": down(&s.mu_percent.0), "upper": up(&s.mu_percent.1) },
                "slices": slices,
            })
        })
        .collect();
    json!(items)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
