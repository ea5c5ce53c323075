use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gbart::data::{fmt_f64, read_table, save_dataset, Schema};
use gbart::engine::{
    combine_draws, heldout_metrics, lpml, predict, read_pointwise_csv, run_chains, survival_curve, write_pointwise_csv,
    write_trace_csv, Draw, SamplerConfig,
};
use gbart::forest_io::{check_model, load_forests, save_forests};
use gbart::simulate::{simulate, Scenario, ScenarioKind, Truth};
use gbart::{Dataset, ModelSpec, Scaling, ScalingMethod};

const CONFIG_FILE: &str = "config.txt";
const SCALING_FILE: &str = "scaling.csv";
const TRACE_FILE: &str = "trace.csv";
const FORESTS_FILE: &str = "forests.txt";
const POINTWISE_FILE: &str = "pointwise_loglik.csv";

#[derive(Parser)]
#[command(name = "gbart", version, about = "Generalized BART fit by reversible-jump MCMC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Friedman-function dataset.
    Simulate(SimulateArgs),
    /// Fit a model and write its trace and posterior forests.
    Fit(FitArgs),
    /// Posterior predictions at new covariate rows.
    Predict(PredictArgs),
    /// Held-out metrics per kept draw, and LPML.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: ScenarioKind,
    /// Rows (defaults to the scenario's size).
    #[arg(long)]
    n: Option<usize>,
    /// Covariates (defaults to the scenario's size).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    model: Option<ModelSpec>,
    #[arg(long)]
    data: PathBuf,
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "minmax")]
    scaling: ScalingMethod,
    #[arg(long)]
    num_trees: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any config key, as KEY=VALUE; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    forest_dir: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Expected model; an error if the saved forests were fit with another.
    #[arg(long)]
    model: Option<ModelSpec>,
    /// Comma-separated times for survival curves.
    #[arg(long)]
    survival_grid: Option<String>,
    /// Where survival curves go (default: survival.csv next to --out).
    #[arg(long)]
    survival_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    trace_dir: PathBuf,
    #[arg(long)]
    heldout: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut scenario = Scenario::new(a.scenario, a.seed);
    scenario = scenario.with_size(a.n.unwrap_or(scenario.n), a.p.unwrap_or(scenario.p));
    let (data, truth) = simulate(&scenario)?;
    save_dataset(&a.out, &data)?;
    if let Some(path) = a.truth {
        let mut out = create(&path)?;
        truth.write(&mut out)?;
        out.flush()?;
    }
    println!("wrote {} rows with {} covariates to {}", data.n(), data.p(), a.out.display());
    Ok(())
}

fn fit_config(a: &FitArgs) -> Result<SamplerConfig> {
    let mut config = match &a.config {
        Some(path) => SamplerConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => SamplerConfig::default(),
    };
    if let Some(model) = a.model {
        if model.name() != config.model.name() {
            config.model = model;
        }
    }
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            config.set(k, &v)?;
        }
        Ok(())
    };
    set("num_trees", a.num_trees.map(|v| v.to_string()))?;
    set("iterations", a.iterations.map(|v| v.to_string()))?;
    set("burn_in", a.burn_in.map(|v| v.to_string()))?;
    set("thin", a.thin.map(|v| v.to_string()))?;
    set("chains", a.chains.map(|v| v.to_string()))?;
    set("seed", a.seed.map(|v| v.to_string()))?;
    for kv in &a.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got '{kv}'");
        };
        config.set(k.trim(), v)?;
    }
    config.validate()?;
    Ok(config)
}

fn schema_for(model: &ModelSpec) -> Schema {
    if model.is_survival() {
        Schema::SURVIVAL
    } else {
        Schema::TRAINING
    }
}

fn read_csv(path: &Path, schema: Schema) -> Result<gbart::data::RawTable> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(read_table(file, schema).with_context(|| format!("reading {}", path.display()))?)
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let config = fit_config(&a)?;
    let data = read_csv(&a.data, schema_for(&config.model))?.into_dataset(a.scaling)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let dir = &a.out_dir;
    config.save(&dir.join(CONFIG_FILE))?;
    data.scaling().expect("loaded data is scaled").save(&dir.join(SCALING_FILE))?;

    let traces = run_chains(&config, &data)?;
    let mut out = create(&dir.join(TRACE_FILE))?;
    write_trace_csv(&mut out, &traces)?;
    out.flush()?;
    let draws = combine_draws(&traces);
    let saved: Vec<_> = draws.iter().map(|d| d.to_saved(config.model)).collect();
    save_forests(&dir.join(FORESTS_FILE), &saved)?;
    let mut out = create(&dir.join(POINTWISE_FILE))?;
    write_pointwise_csv(&mut out, &draws)?;
    out.flush()?;

    println!("model {} with {} trees, {} kept draws", config.model, config.num_trees, draws.len());
    for t in &traces {
        let m = &t.stats.moves;
        println!(
            "chain {}: acceptance birth {:.3}, death {:.3}, change {:.3}",
            t.chain,
            m.birth.rate(),
            m.death.rate(),
            m.change.rate()
        );
    }
    let matrix: Vec<Vec<f64>> = draws.iter().map(|d| d.pointwise_loglik.clone()).collect();
    println!("LPML {:.4}", lpml(&matrix)?.lpml);
    println!("wrote {}", dir.display());
    Ok(())
}

struct SavedFit {
    config: SamplerConfig,
    scaling: Scaling,
    draws: Vec<Draw>,
}

fn load_fit(dir: &Path, expected: Option<ModelSpec>) -> Result<SavedFit> {
    let config = SamplerConfig::load(&dir.join(CONFIG_FILE)).with_context(|| format!("reading {}/{CONFIG_FILE}", dir.display()))?;
    let scaling = Scaling::load(&dir.join(SCALING_FILE)).with_context(|| format!("reading {}/{SCALING_FILE}", dir.display()))?;
    let saved = load_forests(&dir.join(FORESTS_FILE)).with_context(|| format!("reading {}/{FORESTS_FILE}", dir.display()))?;
    check_model(&saved, &config.model)?;
    if let Some(model) = expected {
        check_model(&saved, &model)?;
    }
    let draws = saved
        .iter()
        .map(|s| Draw::from_saved(s, config.fd_delta))
        .collect::<gbart::Result<Vec<_>>>()?;
    Ok(SavedFit { config, scaling, draws })
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().with_context(|| format!("invalid survival time '{t}'"))?;
            if !(v >= 0.0 && v.is_finite()) {
                bail!("survival times must be non-negative, got {v}");
            }
            Ok(v)
        })
        .collect()
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let fit = load_fit(&a.forest_dir, a.model)?;
    let query = read_csv(&a.data, Schema::QUERY)?.scale_with(&fit.scaling)?;
    let summary = predict(&fit.draws, &query)?;
    let mut out = create(&a.out)?;
    writeln!(out, "row,lambda_mean,lambda_lower,lambda_upper,mean,mean_lower,mean_upper")?;
    for (i, p) in summary.points.iter().enumerate() {
        let cells = [p.lambda.mean, p.lambda.lower, p.lambda.upper, p.transformed.mean, p.transformed.lower, p.transformed.upper];
        let cells: Vec<String> = cells.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{},{}", i + 1, cells.join(","))?;
    }
    out.flush()?;
    if let Some(grid) = &a.survival_grid {
        let grid = parse_grid(grid)?;
        let path = a
            .survival_out
            .clone()
            .unwrap_or_else(|| a.out.with_file_name("survival.csv"));
        let mut out = create(&path)?;
        writeln!(out, "row,t,survival_mean,survival_lower,survival_upper")?;
        for i in 0..query.n() {
            let curve = survival_curve(&fit.draws, query.row(i), &grid)?;
            for (t, b) in curve.times.iter().zip(&curve.bands) {
                writeln!(out, "{},{},{},{},{}", i + 1, fmt_f64(*t), fmt_f64(b.mean), fmt_f64(b.lower), fmt_f64(b.upper))?;
            }
        }
        out.flush()?;
        println!("wrote survival curves to {}", path.display());
    }
    println!("wrote {} predictions from {} draws to {}", query.n(), fit.draws.len(), a.out.display());
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<()> {
    let fit = load_fit(&a.trace_dir, None)?;
    let text = std::fs::read_to_string(a.trace_dir.join(POINTWISE_FILE))
        .with_context(|| format!("reading {}/{POINTWISE_FILE}", a.trace_dir.display()))?;
    let l = lpml(&read_pointwise_csv(&text)?)?;
    println!("LPML {:.4}", l.lpml);

    let Some(heldout_path) = a.heldout else {
        if a.truth.is_some() {
            bail!("--truth needs --heldout");
        }
        return Ok(());
    };
    let heldout: Dataset = read_csv(&heldout_path, schema_for(&fit.config.model))?.scale_with(&fit.scaling)?;
    let truth = match &a.truth {
        Some(path) => Some(Truth::read(&std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?),
        None => None,
    };
    let metrics = heldout_metrics(&fit.draws, &heldout, truth.as_ref())?;
    let out_path = a.out.unwrap_or_else(|| a.trace_dir.join("metrics.csv"));
    let mut out = create(&out_path)?;
    writeln!(out, "chain,iteration,mse,heldout_loglik,rmse_lambda,rmse_mean")?;
    for m in &metrics {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            m.chain,
            m.iteration,
            opt(m.mse),
            fmt_f64(m.log_likelihood),
            opt(m.rmse_lambda),
            opt(m.rmse_mean)
        )?;
    }
    out.flush()?;
    let avg = |f: &dyn Fn(&gbart::engine::DrawMetrics) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = metrics.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    if let Some(v) = avg(&|m| m.mse) {
        println!("mean held-out MSE {v:.4}");
    }
    if let Some(v) = avg(&|m| Some(m.log_likelihood)) {
        println!("mean held-out log-likelihood {v:.4}");
    }
    if let Some(v) = avg(&|m| m.rmse_mean) {
        println!("mean RMSE against the true mean {v:.4}");
    }
    println!("wrote {} rows to {}", metrics.len(), out_path.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}
