//! Command-line interface: synthesize or ingest forecast datasets, fit the
//! postprocessing variants, apply stored coefficients, verify forecasts and
//! search the neighbor count.

mod config;
mod svg;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topocal::data::{ingest, write_forecasts_csv, write_stations_csv, LeadTime, MonthRef};
use topocal::fit::link;
use topocal::pipeline::{
    back_transform, run_variant, select_l, verify_run, BootstrapOptions, ModelVariant,
    PredictedPair, RunConfig, SamplingMode, SelectBase, VerifyOptions,
};
use topocal::pretest::PretestVariant;
use topocal::report::{
    read_models_json, read_predictions_csv, write_models_json, write_predictions_csv,
    write_pretest_csv, write_report_csvs, write_report_json, VerificationReport,
};
use topocal::scoring::Threshold;
use topocal::synth::{generate_synthetic, ObservationModel, Regime, SynthConfig};
use topocal::Dataset;

use config::ConfigMap;

#[derive(Parser)]
#[command(
    name = "topocal",
    version,
    about = "Topography-aware postprocessing of ensemble precipitation forecasts"
)]
struct Cli {
    /// Plain-text config file (key = value) supplying option defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a forecast/station file pair and report its contents.
    Ingest(IngestArgs),
    /// Generate a synthetic dataset with known truth.
    Synth(SynthArgs),
    /// Fit a model variant and emit predictive output.
    Fit(FitArgs),
    /// Apply stored coefficients to forecasts.
    Predict(PredictArgs),
    /// Score prediction files against observations and the raw ensemble.
    Verify(VerifyArgs),
    /// Grid-search the neighbor count (and pretest split).
    SelectL(SelectLArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Write canonical copies of both files here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// calibrated | biased | dem-bias | mixed
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    stations: Option<usize>,
    #[arg(long)]
    months: Option<usize>,
    /// First month, YYYY-MM.
    #[arg(long)]
    start: Option<String>,
    /// Ensemble size.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lead_time: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    /// raw | global | local | dem | dem-pt
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    lead_time: Option<f64>,
    /// Target months, YYYY-MM..YYYY-MM (inclusive).
    #[arg(long)]
    months: Option<String>,
    /// Neighbor count for the dem variants.
    #[arg(long)]
    l: Option<usize>,
    /// Pretest split 1 | 2 | 3.
    #[arg(long)]
    pretest: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    /// Predictive sample count per pair.
    #[arg(long)]
    samples: Option<usize>,
    /// Draw at equally spaced quantiles instead of at random.
    #[arg(long)]
    quantile_sampling: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// File with one training station id per line (area-covering split).
    #[arg(long)]
    train_stations: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    quantile_sampling: bool,
    /// Model column value in the output.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Prediction files; repeat for several models.
    #[arg(long = "predictions", num_args = 1..)]
    predictions: Vec<PathBuf>,
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Comma-separated exceedance thresholds in mm/day.
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pit_bins: Option<usize>,
    /// Bootstrap resample count for the mean CRPS (0 disables).
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    bootstrap_seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write SVG charts (monthly skill, PIT and rank histograms).
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct SelectLArgs {
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Grid as start:end:step (e.g. 10:80:10) or a comma list.
    #[arg(long)]
    grid: Option<String>,
    /// dem | dem-pt
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    lead_time: Option<f64>,
    /// Validation months, YYYY-MM..YYYY-MM.
    #[arg(long)]
    months: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the full search table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args, &config),
        Command::Synth(args) => cmd_synth(args, &config),
        Command::Fit(args) => cmd_fit(args, &config),
        Command::Predict(args) => cmd_predict(args, &config),
        Command::Verify(args) => cmd_verify(args, &config),
        Command::SelectL(args) => cmd_select_l(args, &config),
    }
}

fn load_dataset(
    forecasts: Option<PathBuf>,
    stations: Option<PathBuf>,
    config: &ConfigMap,
) -> Result<Dataset> {
    let forecasts: PathBuf = config.require(forecasts, "forecasts")?;
    let stations: PathBuf = config.require(stations, "stations")?;
    ingest(&forecasts, &stations)
        .with_context(|| format!("ingesting {} / {}", forecasts.display(), stations.display()))
}

fn parse_month_range(spec: &str) -> Result<Vec<MonthRef>> {
    let (from, to) = match spec.split_once("..") {
        Some(parts) => parts,
        None => (spec, spec),
    };
    let from = MonthRef::parse(from.trim())
        .with_context(|| format!("bad month '{from}', expected YYYY-MM"))?;
    let to = MonthRef::parse(to.trim())
        .with_context(|| format!("bad month '{to}', expected YYYY-MM"))?;
    let range = from.range_to(to);
    if range.is_empty() {
        bail!("empty month range '{spec}'");
    }
    Ok(range)
}

fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step): (usize, usize, usize) = (
                start.trim().parse()?,
                end.trim().parse()?,
                step.trim().parse()?,
            );
            if step == 0 || end < start {
                bail!("bad grid '{spec}', expected start:end:step");
            }
            (start..=end).step_by(step).collect()
        }
        _ => spec
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(anyhow::Error::from))
            .collect::<Result<Vec<usize>>>()?,
    };
    if grid.is_empty() {
        bail!("empty grid '{spec}'");
    }
    Ok(grid)
}

fn parse_thresholds(spec: &str) -> Result<Vec<Threshold>> {
    spec.split(',')
        .map(|v| {
            let value: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("bad threshold '{v}'"))?;
            Threshold::new(value).map_err(anyhow::Error::from)
        })
        .collect()
}

fn parse_variant(name: &str, l: Option<usize>, pretest: Option<u8>) -> Result<ModelVariant> {
    let neighbor = || l.ok_or_else(|| anyhow::anyhow!("--l is required for the '{name}' variant"));
    Ok(match name {
        "raw" => ModelVariant::Raw,
        "global" => ModelVariant::Global,
        "local" => ModelVariant::Local,
        "dem" => ModelVariant::Dem { l: neighbor()? },
        "dem-pt" => {
            let index = pretest.unwrap_or(3);
            let pretest = PretestVariant::from_index(index)
                .ok_or_else(|| anyhow::anyhow!("--pretest must be 1, 2 or 3, got {index}"))?;
            ModelVariant::DemPretest {
                l: neighbor()?,
                pretest,
            }
        }
        other => bail!("unknown variant '{other}' (raw | global | local | dem | dem-pt)"),
    })
}

fn cmd_ingest(args: IngestArgs, config: &ConfigMap) -> Result<()> {
    let dataset = load_dataset(args.forecasts, args.stations, config)?;
    println!(
        "ingested {} pairs at {} stations (K = {}, {} rows dropped for missing observations)",
        dataset.pairs().len(),
        dataset.stations().len(),
        dataset.ensemble_size(),
        dataset.dropped_missing(),
    );
    if let Some(dir) = args.out_dir {
        std::fs::create_dir_all(&dir)?;
        write_forecasts_csv(&dataset, &dir.join("forecasts.csv"))?;
        write_stations_csv(&dataset, &dir.join("stations.csv"))?;
        println!("canonical copies written to {}", dir.display());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, config: &ConfigMap) -> Result<()> {
    let regime_name: String = config.resolve(args.regime, "regime", "calibrated".to_string())?;
    let regime = match regime_name.as_str() {
        "calibrated" => Regime::Calibrated,
        "biased" => Regime::Biased { shift: 1.0 },
        "dem-bias" => Regime::DemBias { slope_per_km: 1.0 },
        "mixed" => Regime::Mixed { shift: 1.0 },
        other => bail!("unknown regime '{other}' (calibrated | biased | dem-bias | mixed)"),
    };
    let start_spec: String = config.resolve(args.start, "start", "2016-01".to_string())?;
    let start =
        MonthRef::parse(&start_spec).with_context(|| format!("bad start month '{start_spec}'"))?;
    let synth_config = SynthConfig {
        stations: config.resolve(args.stations, "stations_count", 30)?,
        start,
        months: config.resolve(args.months, "months_count", 24)?,
        ensemble_size: config.resolve(args.k, "k", 21)?,
        lead_time: LeadTime::from_days(config.resolve(args.lead_time, "lead_time", 1.0)?)?,
        regime,
        observation: ObservationModel::ExchangeableDraw,
        ..SynthConfig::default()
    };
    let seed: u64 = config.resolve(args.seed, "seed", 0)?;
    let synth = generate_synthetic(&synth_config, seed)?;

    let dir: PathBuf = config.require(args.out_dir, "out_dir")?;
    std::fs::create_dir_all(&dir)?;
    write_forecasts_csv(&synth.dataset, &dir.join("forecasts.csv"))?;
    write_stations_csv(&synth.dataset, &dir.join("stations.csv"))?;
    println!(
        "synthesized {} pairs at {} stations ({regime_name}, seed {seed}) into {}",
        synth.dataset.pairs().len(),
        synth.dataset.stations().len(),
        dir.display(),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn build_run_config(
    variant: ModelVariant,
    lead_time: f64,
    months: &str,
    seed: u64,
    samples: usize,
    quantile: bool,
    workers: Option<usize>,
    train_stations: Option<BTreeSet<String>>,
) -> Result<RunConfig> {
    Ok(RunConfig {
        n_samples: samples,
        sampling: if quantile {
            SamplingMode::QuantileGrid
        } else {
            SamplingMode::Random
        },
        workers,
        train_stations,
        ..RunConfig::new(
            variant,
            LeadTime::from_days(lead_time)?,
            parse_month_range(months)?,
            seed,
        )
    })
}

fn cmd_fit(args: FitArgs, config: &ConfigMap) -> Result<()> {
    let dataset = load_dataset(args.forecasts, args.stations, config)?;
    let variant_name: String = config.require(args.variant, "variant")?;
    let l = config.resolve_opt(args.l, "l")?;
    let pretest = config.resolve_opt(args.pretest, "pretest")?;
    let variant = parse_variant(&variant_name, l, pretest)?;

    let train_stations =
        match config.resolve_opt::<PathBuf>(args.train_stations, "train_stations")? {
            None => None,
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect(),
                )
            }
        };

    let run_config = build_run_config(
        variant,
        config.resolve(args.lead_time, "lead_time", 1.0)?,
        &config.require::<String>(args.months, "months")?,
        config.resolve(args.seed, "seed", 0)?,
        config.resolve(args.samples, "samples", 21)?,
        args.quantile_sampling || config.get("quantile_sampling") == Some("true"),
        config.resolve_opt(args.workers, "workers")?,
        train_stations,
    )?;

    let output = run_variant(&dataset, &run_config)?;

    let dir: PathBuf = config.require(args.out_dir, "out_dir")?;
    std::fs::create_dir_all(&dir)?;
    write_predictions_csv(&output.predictions, &dir.join("predictions.csv"))?;
    if !output.models.is_empty() {
        write_models_json(&output.models, &dir.join("models.json"))?;
    }
    if !output.pretest.is_empty() {
        write_pretest_csv(&output.pretest, &dir.join("pretest_decisions.csv"))?;
    }
    println!(
        "fit '{variant_name}': {} predictions, {} models, {} pretest decisions, {} failed station-months",
        output.predictions.len(),
        output.models.len(),
        output.pretest.len(),
        output.failures.len(),
    );
    for failure in &output.failures {
        eprintln!(
            "  failed: {} {} -> {}",
            failure.station_id, failure.target_month, failure.error
        );
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs, config: &ConfigMap) -> Result<()> {
    use rand::SeedableRng;
    let dataset = load_dataset(args.forecasts, args.stations, config)?;
    let models_path: PathBuf = config.require(args.models, "models")?;
    let models = read_models_json(&models_path)?;
    let samples: usize = config.resolve(args.samples, "samples", 21)?;
    let seed: u64 = config.resolve(args.seed, "seed", 0)?;
    let name: String = config.resolve(args.name, "name", "model".to_string())?;
    let sampling = if args.quantile_sampling || config.get("quantile_sampling") == Some("true") {
        SamplingMode::QuantileGrid
    } else {
        SamplingMode::Random
    };

    // accepted models by (station, month, lead); station "global" is the
    // fallback for sites without their own fit
    let mut by_key = std::collections::BTreeMap::new();
    for model in models.iter().filter(|m| m.meta.accepted) {
        by_key.insert(
            (
                model.meta.station_id.clone(),
                model.meta.target_month,
                model.meta.lead_time,
            ),
            model,
        );
    }

    let sqrt = topocal::data::sqrt_transform(dataset.clone())?;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut predictions = Vec::new();
    let mut skipped = 0usize;
    for (orig, sq) in dataset.pairs().iter().zip(sqrt.pairs()) {
        let month = orig.month();
        let model = by_key
            .get(&(orig.station_id.clone(), month, orig.lead_time))
            .or_else(|| by_key.get(&("global".to_string(), month, orig.lead_time)));
        let Some(model) = model else {
            skipped += 1;
            continue;
        };
        let psi = topocal::fit::CoefficientVector::from_array(model.psi);
        let params = link(&psi, &sq.forecast)?;
        let members = back_transform(&params, &mut rng, samples, sampling);
        predictions.push(PredictedPair {
            model: name.clone(),
            station_id: orig.station_id.clone(),
            date: orig.date,
            lead_time: orig.lead_time,
            observation: orig.observation,
            members,
            params: Some(params),
            postprocessed: true,
        });
    }
    if predictions.is_empty() {
        bail!("no forecast rows matched the stored models");
    }

    let out: PathBuf = config.require(args.out, "out")?;
    write_predictions_csv(&predictions, &out)?;
    println!(
        "predicted {} pairs ({} rows had no matching model) into {}",
        predictions.len(),
        skipped,
        out.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs, config: &ConfigMap) -> Result<()> {
    if args.predictions.is_empty() {
        bail!("at least one --predictions file is required");
    }
    let dataset = load_dataset(args.forecasts, args.stations, config)?;

    let mut runs: Vec<(String, Vec<PredictedPair>)> = Vec::new();
    for path in &args.predictions {
        let predictions =
            read_predictions_csv(path).with_context(|| format!("reading {}", path.display()))?;
        if predictions.is_empty() {
            bail!("{} contains no predictions", path.display());
        }
        let name = predictions[0].model.clone();
        runs.push((name, predictions));
    }

    // raw reference restricted to the keys the models predict
    let keys: BTreeSet<(String, chrono::NaiveDate, LeadTime)> = runs
        .iter()
        .flat_map(|(_, predictions)| {
            predictions
                .iter()
                .map(|p| (p.station_id.clone(), p.date, p.lead_time))
        })
        .collect();
    let reference: Vec<PredictedPair> = dataset
        .pairs()
        .iter()
        .filter(|p| keys.contains(&(p.station_id.clone(), p.date, p.lead_time)))
        .map(|p| PredictedPair {
            model: "raw".to_string(),
            station_id: p.station_id.clone(),
            date: p.date,
            lead_time: p.lead_time,
            observation: p.observation,
            members: p.forecast.members().to_vec(),
            params: None,
            postprocessed: false,
        })
        .collect();

    let threshold_spec: String =
        config.resolve(args.thresholds, "thresholds", "0.1,5,20".to_string())?;
    let thresholds = parse_thresholds(&threshold_spec)?;
    let resamples: usize = config.resolve(args.bootstrap, "bootstrap", 0)?;
    let options = VerifyOptions {
        seed: config.resolve(args.seed, "seed", 0)?,
        pit_bins: config.resolve(args.pit_bins, "pit_bins", 20)?,
        bootstrap: (resamples > 0).then(|| BootstrapOptions {
            resamples,
            seed: config
                .resolve(args.bootstrap_seed, "bootstrap_seed", 0)
                .unwrap_or(0),
        }),
    };

    let borrowed: Vec<(&str, &[PredictedPair])> = runs
        .iter()
        .map(|(name, predictions)| (name.as_str(), predictions.as_slice()))
        .collect();
    let report = verify_run(&borrowed, &reference, &thresholds, &options)?;

    print_verify_summary(&report);

    if let Some(dir) = config.resolve_opt::<PathBuf>(args.out_dir, "out_dir")? {
        std::fs::create_dir_all(&dir)?;
        write_report_json(&report, &dir.join("report.json"))?;
        write_report_csvs(&report, &dir)?;
        if args.plots || config.get("plots") == Some("true") {
            write_plots(&report, &dir)?;
        }
        println!("report written to {}", dir.display());
    }
    Ok(())
}

fn print_verify_summary(report: &VerificationReport) {
    let pct = |v: Option<f64>| match v {
        Some(s) => format!("{:+.2}%", s * 100.0),
        None => "n/a".to_string(),
    };
    println!("model      pairs   mean CRPS   skill vs raw");
    println!(
        "{:<10} {:>6}   {:>9.4}   {:>12}",
        report.reference.name, report.reference.pairs, report.reference.mean_crps, "-"
    );
    for model in &report.models {
        println!(
            "{:<10} {:>6}   {:>9.4}   {:>12}",
            model.name,
            model.pairs,
            model.mean_crps,
            pct(model.skill_vs_raw)
        );
    }
    for model in &report.models {
        for brier in &model.brier {
            println!(
                "  {} Brier @ {} mm/d: {:.5} (raw {:.5}, skill {})",
                model.name,
                brier.threshold,
                brier.mean_brier,
                brier.raw_mean_brier,
                pct(brier.skill_vs_raw)
            );
        }
    }
}

fn write_plots(report: &VerificationReport, dir: &Path) -> Result<()> {
    // shared month axis across models
    let mut months: BTreeSet<MonthRef> = BTreeSet::new();
    for model in std::iter::once(&report.reference).chain(&report.models) {
        months.extend(model.monthly.iter().map(|row| row.month));
    }
    let months: Vec<MonthRef> = months.into_iter().collect();
    let labels: Vec<String> = months.iter().map(|m| m.to_string()).collect();
    let series: Vec<(String, Vec<Option<f64>>)> = report
        .models
        .iter()
        .map(|model| {
            let by_month: std::collections::BTreeMap<MonthRef, Option<f64>> = model
                .monthly
                .iter()
                .map(|row| (row.month, row.skill))
                .collect();
            let points = months
                .iter()
                .map(|m| by_month.get(m).copied().flatten().map(|s| s * 100.0))
                .collect();
            (model.name.clone(), points)
        })
        .collect();
    std::fs::write(
        dir.join("monthly_skill.svg"),
        svg::line_chart("monthly CRPS skill vs raw (%)", &labels, &series),
    )?;

    for model in std::iter::once(&report.reference).chain(&report.models) {
        std::fs::write(
            dir.join(format!("pit_{}.svg", model.name)),
            svg::bar_chart(
                &format!("PIT histogram: {}", model.name),
                &model.pit_histogram,
            ),
        )?;
        std::fs::write(
            dir.join(format!("rank_{}.svg", model.name)),
            svg::bar_chart(
                &format!("rank histogram: {}", model.name),
                &model.rank_histogram,
            ),
        )?;
    }
    Ok(())
}

fn cmd_select_l(args: SelectLArgs, config: &ConfigMap) -> Result<()> {
    let dataset = load_dataset(args.forecasts, args.stations, config)?;
    let grid_spec: String = config.resolve(args.grid, "grid", "10:80:10".to_string())?;
    let grid = parse_grid(&grid_spec)?;
    let variant_name: String = config.resolve(args.variant, "variant", "dem".to_string())?;
    let base = match variant_name.as_str() {
        "dem" => SelectBase::Dem,
        "dem-pt" => SelectBase::DemPretest,
        other => bail!("unknown search variant '{other}' (dem | dem-pt)"),
    };
    let months_spec: String = config.require(args.months, "months")?;
    let months = parse_month_range(&months_spec)?;
    let run_config = build_run_config(
        ModelVariant::Dem { l: grid[0] },
        config.resolve(args.lead_time, "lead_time", 1.0)?,
        &months_spec,
        config.resolve(args.seed, "seed", 0)?,
        config.resolve(args.samples, "samples", 21)?,
        config.get("quantile_sampling") == Some("true"),
        config.resolve_opt(args.workers, "workers")?,
        None,
    )?;

    let selection = select_l(&dataset, &grid, base, &months, &run_config)?;
    println!("    L  pretest   mean CRPS  pairs  failures");
    for point in &selection.evaluated {
        println!(
            "{:>5}  {:>7}   {:>9.4}  {:>5}  {:>8}",
            point.l,
            point
                .pretest_variant
                .map_or("-".to_string(), |v| v.to_string()),
            point.mean_crps,
            point.pairs,
            point.failures
        );
    }
    println!(
        "selected L = {}{} with mean CRPS {:.4}",
        selection.l,
        selection
            .pretest
            .map_or(String::new(), |v| format!(", pretest {}", v.index())),
        selection.mean_crps
    );
    if let Some(out) = args.out {
        let mut json = serde_json::to_string_pretty(&selection)?;
        json.push('\n');
        std::fs::write(&out, json)?;
        println!("search table written to {}", out.display());
    }
    Ok(())
}
