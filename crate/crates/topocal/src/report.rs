//! Verification report types and artifact I/O: report JSON and CSV,
//! prediction CSV, fitted-model JSON and pretest-decision CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::censored_logistic::CensoredLogisticParams;
use crate::data::{LeadTime, MonthRef};
use crate::pipeline::{FittedModel, PredictedPair, PretestRecord};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: bad prediction row: {message}")]
    BadRow { line: u64, message: String },
    #[error("bad header: {0}")]
    BadHeader(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub thresholds: Vec<f64>,
    pub pit_bins: usize,
    pub reference: ModelSummary,
    pub models: Vec<ModelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub pairs: usize,
    pub mean_crps: f64,
    /// Mean CRPS of the raw reference over this model's matched pairs.
    pub raw_mean_crps: f64,
    /// Fractional CRPS reduction against raw; `None` if the reference mean
    /// is degenerate.
    pub skill_vs_raw: Option<f64>,
    pub brier: Vec<BrierSummary>,
    pub pit_histogram: Vec<u64>,
    pub rank_histogram: Vec<u64>,
    pub monthly: Vec<MonthlyRow>,
    pub stations: Vec<StationRow>,
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrierSummary {
    pub threshold: f64,
    pub mean_brier: f64,
    pub raw_mean_brier: f64,
    pub skill_vs_raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRow {
    pub month: MonthRef,
    pub pairs: usize,
    pub mean_crps: f64,
    pub raw_mean_crps: f64,
    pub skill: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRow {
    pub station_id: String,
    pub pairs: usize,
    pub mean_crps: f64,
    pub raw_mean_crps: f64,
    pub skill: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub seed: u64,
    pub mean: f64,
    pub sd: f64,
    pub p05: f64,
    pub p95: f64,
}

/// Pretty-printed report JSON with a trailing newline; byte-stable for
/// identical inputs.
pub fn report_to_json(report: &VerificationReport) -> Result<String, ReportError> {
    let mut out = serde_json::to_string_pretty(report)?;
    out.push('\n');
    Ok(out)
}

pub fn write_report_json(report: &VerificationReport, path: &Path) -> Result<(), ReportError> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(report_to_json(report)?.as_bytes())?;
    file.flush()?;
    Ok(())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

fn fmt_skill_pct(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| (v * 100.0).to_string())
}

/// Flat CSV companions of the report: `summary.csv`, `brier.csv`,
/// `monthly_skill.csv` and `station_skill.csv`. Skill columns are percent.
pub fn write_report_csvs(report: &VerificationReport, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    let all: Vec<&ModelSummary> = std::iter::once(&report.reference)
        .chain(report.models.iter())
        .collect();

    let mut summary = BufWriter::new(File::create(dir.join("summary.csv"))?);
    writeln!(summary, "model,pairs,mean_crps,skill_vs_raw_pct")?;
    for m in &all {
        writeln!(
            summary,
            "{},{},{},{}",
            m.name,
            m.pairs,
            m.mean_crps,
            fmt_skill_pct(m.skill_vs_raw)
        )?;
    }
    summary.flush()?;

    let mut brier = BufWriter::new(File::create(dir.join("brier.csv"))?);
    writeln!(
        brier,
        "model,threshold_mm,mean_brier,raw_mean_brier,skill_vs_raw_pct"
    )?;
    for m in &all {
        for b in &m.brier {
            writeln!(
                brier,
                "{},{},{},{},{}",
                m.name,
                b.threshold,
                b.mean_brier,
                b.raw_mean_brier,
                fmt_skill_pct(b.skill_vs_raw)
            )?;
        }
    }
    brier.flush()?;

    let mut monthly = BufWriter::new(File::create(dir.join("monthly_skill.csv"))?);
    writeln!(
        monthly,
        "model,month,pairs,mean_crps,raw_mean_crps,skill_pct"
    )?;
    for m in &all {
        for row in &m.monthly {
            writeln!(
                monthly,
                "{},{},{},{},{},{}",
                m.name,
                row.month,
                row.pairs,
                row.mean_crps,
                row.raw_mean_crps,
                fmt_skill_pct(row.skill)
            )?;
        }
    }
    monthly.flush()?;

    let mut stations = BufWriter::new(File::create(dir.join("station_skill.csv"))?);
    writeln!(
        stations,
        "model,station_id,pairs,mean_crps,raw_mean_crps,skill_pct"
    )?;
    for m in &all {
        for row in &m.stations {
            writeln!(
                stations,
                "{},{},{},{},{},{}",
                m.name,
                row.station_id,
                row.pairs,
                row.mean_crps,
                row.raw_mean_crps,
                fmt_skill_pct(row.skill)
            )?;
        }
    }
    stations.flush()?;
    Ok(())
}

/// Write predictions in the interchange format:
/// `model,station_id,date,lead_time,obs,postprocessed,loc,scale,m01..mNN`.
/// `loc`/`scale` are empty for passthrough pairs and refer to the sqrt scale.
pub fn write_predictions_csv(
    predictions: &[PredictedPair],
    path: &Path,
) -> Result<(), ReportError> {
    let members = predictions.first().map_or(0, |p| p.members.len());
    let mut out = BufWriter::new(File::create(path)?);
    write!(
        out,
        "model,station_id,date,lead_time,obs,postprocessed,loc,scale"
    )?;
    for i in 1..=members {
        write!(out, ",m{i:02}")?;
    }
    writeln!(out)?;
    for p in predictions {
        let (loc, scale) = match &p.params {
            Some(params) => (params.location().to_string(), params.scale().to_string()),
            None => (String::new(), String::new()),
        };
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.model, p.station_id, p.date, p.lead_time, p.observation, p.postprocessed, loc, scale
        )?;
        for m in &p.members {
            write!(out, ",{m}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictedPair>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = reader.headers()?.clone();
    let fixed = [
        "model",
        "station_id",
        "date",
        "lead_time",
        "obs",
        "postprocessed",
        "loc",
        "scale",
    ];
    if header.len() < fixed.len() + 1 {
        return Err(ReportError::BadHeader(
            "prediction file has too few columns".into(),
        ));
    }
    for (i, name) in fixed.iter().enumerate() {
        if header[i].trim() != *name {
            return Err(ReportError::BadHeader(format!(
                "column {} must be '{name}', found '{}'",
                i + 1,
                &header[i]
            )));
        }
    }
    let member_count = header.len() - fixed.len();

    let mut predictions = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| ReportError::BadRow { line, message };
        if record.len() != fixed.len() + member_count {
            return Err(bad(format!(
                "expected {} members, found {}",
                member_count,
                record.len().saturating_sub(fixed.len())
            )));
        }
        let date = NaiveDate::parse_from_str(record[2].trim(), "%Y-%m-%d")
            .map_err(|e| bad(format!("bad date: {e}")))?;
        let lead_days: f64 = record[3]
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad lead_time: {e}")))?;
        let lead_time = LeadTime::from_days(lead_days).map_err(|e| bad(e.to_string()))?;
        let observation: f64 = record[4]
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad obs: {e}")))?;
        let postprocessed: bool = record[5]
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad postprocessed flag: {e}")))?;
        let params = if record[6].trim().is_empty() {
            None
        } else {
            let loc: f64 = record[6]
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad loc: {e}")))?;
            let scale: f64 = record[7]
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad scale: {e}")))?;
            Some(CensoredLogisticParams::new(loc, scale).map_err(|e| bad(e.to_string()))?)
        };
        let mut members = Vec::with_capacity(member_count);
        for idx in 0..member_count {
            members.push(
                record[fixed.len() + idx]
                    .trim()
                    .parse()
                    .map_err(|e| bad(format!("bad member: {e}")))?,
            );
        }
        predictions.push(PredictedPair {
            model: record[0].trim().to_string(),
            station_id: record[1].trim().to_string(),
            date,
            lead_time,
            observation,
            members,
            params,
            postprocessed,
        });
    }
    Ok(predictions)
}

pub fn write_models_json(models: &[FittedModel], path: &Path) -> Result<(), ReportError> {
    let mut out = serde_json::to_string_pretty(models)?;
    out.push('\n');
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(out.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn read_models_json(path: &Path) -> Result<Vec<FittedModel>, ReportError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Acceptance decisions as CSV, one row per pretested station-month.
pub fn write_pretest_csv(records: &[PretestRecord], path: &Path) -> Result<(), ReportError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "station_id,target_month,lead_time,pretest_variant,accepted,traintest_size,\
         traintest_mean_crps_model,traintest_mean_crps_raw,note"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.station_id,
            r.target_month,
            r.lead_time,
            r.pretest_variant,
            r.accepted,
            r.traintest_size,
            fmt_opt(r.traintest_mean_crps_model),
            fmt_opt(r.traintest_mean_crps_raw),
            r.note
                .as_deref()
                .map(|n| n.replace(',', ";"))
                .unwrap_or_default()
        )?;
    }
    out.flush()?;
    Ok(())
}
