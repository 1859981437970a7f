use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use jumplab_core::calibrate::BootstrapConfig;
use jumplab_core::harness::{
    bh_select, evaluate, ingest_csv_days, ingest_day_csv, run_experiment_with_workers, write_outputs,
    ExperimentConfig, LmCalibration, MethodOutcome, MethodSpec, Session, Tuning,
};
use jumplab_core::simulate::{simulate_day, JumpSpec, NoiseSpec, SimulationSpec};
use jumplab_core::{MarkLaw, Method, Observed};

#[derive(Parser)]
#[command(name = "jumplab", version, about = "Jump tests for high-frequency price paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Heston days and dump them as CSV.
    Simulate(SimulateArgs),
    /// Run one or more tests on a single day of prices.
    Test(TestArgs),
    /// Run a Monte Carlo table from a JSON config.
    Experiment(ExperimentArgs),
    /// Split a price file into days and write one report per day.
    Ingest(IngestArgs),
    /// Benjamini–Hochberg selection over a directory of day reports.
    Select(SelectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    None,
    Gaussian,
    T8,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of independent samples to write.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Trading days per sample.
    #[arg(long, default_value_t = 1)]
    days: usize,
    /// Dense jump intensity θ.
    #[arg(long, conflicts_with = "lambda")]
    theta: Option<f64>,
    /// Sparse jump rate λ per day.
    #[arg(long)]
    lambda: Option<f64>,
    /// Variance of the centered normal jump marks.
    #[arg(long)]
    mark_variance: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseKind,
    #[arg(long, default_value_t = 0.005)]
    q: f64,
    #[arg(long, env = "JUMPLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// Methods: aj, lm, cc, pa (alias ajj), la, ccn. Repeat or comma-separate.
    #[arg(long = "method", value_delimiter = ',', default_value = "cc")]
    methods: Vec<String>,
    /// Block size for AJ and CC.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Power for AJ and CC.
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Use the Gumbel limit for LM instead of the bootstrap.
    #[arg(long)]
    asymptotic_lm: bool,
    #[arg(long, default_value_t = 199)]
    b1: usize,
    #[arg(long, default_value_t = 99)]
    b2: usize,
    #[arg(long, env = "JUMPLAB_SEED", default_value_t = 0)]
    seed: u64,
}

impl MethodArgs {
    fn specs(&self) -> Result<Vec<MethodSpec>> {
        self.methods
            .iter()
            .map(|m| {
                let method: Method = m.parse()?;
                Ok(match method {
                    Method::Aj | Method::Cc => MethodSpec { method, k: Some(self.k), p: Some(self.p) },
                    _ => MethodSpec::new(method),
                })
            })
            .collect()
    }

    fn tuning(&self) -> Tuning {
        Tuning {
            lm_calibration: if self.asymptotic_lm { LmCalibration::Asymptotic } else { LmCalibration::Bootstrap },
            ..Tuning::default()
        }
    }

    fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig { b1: self.b1, b2: self.b2, alpha: self.level, seed: self.seed }
    }

    fn run(&self, path: &Observed) -> Result<Vec<MethodOutcome>> {
        Ok(evaluate(path, &self.specs()?, &self.tuning(), &self.bootstrap(), self.seed)?)
    }
}

#[derive(Args)]
struct TestArgs {
    /// CSV with header `timestamp,price`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    methods: MethodArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output; the sidecar JSON is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `base_seed` from the config.
    #[arg(long, env = "JUMPLAB_SEED")]
    seed: Option<u64>,
    /// Overrides `replications` from the config.
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "JUMPLAB_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving one `<date>.json` report per day.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    methods: MethodArgs,
}

#[derive(Args)]
struct SelectArgs {
    /// Directory of day reports written by `ingest`.
    #[arg(long)]
    dir: PathBuf,
    /// Report label to select on, e.g. `CC-2` or `LM`.
    #[arg(long, default_value = "CC-2")]
    method: String,
    /// False-discovery-rate level.
    #[arg(long, default_value_t = 0.2)]
    q: f64,
}

fn outcome_json(outcomes: &[MethodOutcome], level: f64) -> serde_json::Value {
    outcomes
        .iter()
        .map(|o| {
            let mut v = serde_json::to_value(&o.report).expect("report serializes");
            v["label"] = json!(o.label);
            v["reject"] = json!(o.rejects(level));
            v
        })
        .collect()
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mark = |default: f64| MarkLaw::centered_normal(args.mark_variance.unwrap_or(default));
    let jumps = match (args.theta, args.lambda) {
        (Some(theta), _) => JumpSpec::Dense { theta, mark: mark(1.0) },
        (None, Some(lambda)) => JumpSpec::Sparse { lambda, mark: mark(0.05) },
        _ => JumpSpec::None,
    };
    let noise = match args.noise {
        NoiseKind::None => NoiseSpec::None,
        NoiseKind::Gaussian => NoiseSpec::Gaussian { q: args.q },
        NoiseKind::T8 => NoiseSpec::StudentT8 { q: args.q },
    };
    let spec = SimulationSpec { jumps, noise, ..SimulationSpec::one_second(args.days) };
    fs::create_dir_all(&args.out_dir)?;
    for i in 0..args.count {
        let seed = jumplab_core::rng::derive(args.seed, i as u64);
        let day = simulate_day(&spec, seed)?;
        let file = args.out_dir.join(format!("sample_{i:04}.csv"));
        day.write_csv(fs::File::create(&file)?)?;
        let meta = json!({ "seed": seed, "spec": spec, "jumps": day.jumps });
        fs::write(file.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
    }
    println!("{}", json!({ "written": args.count, "out_dir": args.out_dir }));
    Ok(())
}

fn test(args: &TestArgs) -> Result<()> {
    let path = ingest_day_csv(&args.input, &Session::default())
        .with_context(|| format!("reading {}", args.input.display()))?;
    let observed = Observed::from(path);
    let outcomes = args.methods.run(&observed)?;
    let out = json!({
        "input": args.input,
        "n": observed.n(),
        "delta": observed.delta(),
        "level": args.methods.level,
        "reports": outcome_json(&outcomes, args.methods.level),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing experiment config")?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = run_experiment_with_workers(&cfg, workers)?;
    let sidecar = write_outputs(&result, &cfg, &args.out)?;
    println!("{}", json!({ "rows": result.rows.len(), "csv": args.out, "sidecar": sidecar }));
    Ok(())
}

fn ingest(args: &IngestArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir)?;
    let mut summary = Vec::new();
    for (date, day) in ingest_csv_days(&args.input, &Session::default())? {
        let entry = match day {
            Ok(path) => {
                let observed = Observed::from(path);
                match args.methods.run(&observed) {
                    Ok(outcomes) => {
                        let report = json!({
                            "date": date.to_string(),
                            "n": observed.n(),
                            "level": args.methods.level,
                            "reports": outcome_json(&outcomes, args.methods.level),
                        });
                        let file = args.out_dir.join(format!("{date}.json"));
                        fs::write(&file, serde_json::to_string_pretty(&report)?)?;
                        json!({ "date": date.to_string(), "status": "ok" })
                    }
                    Err(e) => json!({ "date": date.to_string(), "status": "error", "error": e.to_string() }),
                }
            }
            Err(e) => json!({ "date": date.to_string(), "status": "skipped", "error": e.to_string() }),
        };
        summary.push(entry);
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn read_reports(dir: &Path, method: &str) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    for file in files {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file)?)
            .with_context(|| format!("parsing {}", file.display()))?;
        let Some(reports) = v["reports"].as_array() else { continue };
        let hit = reports.iter().find(|r| r["label"].as_str().is_some_and(|l| l.eq_ignore_ascii_case(method)));
        if let Some(p) = hit.and_then(|r| r["pvalue"].as_f64()) {
            let name = v["date"].as_str().map(str::to_owned).unwrap_or_else(|| file.display().to_string());
            rows.push((name, p));
        }
    }
    Ok(rows)
}

fn select(args: &SelectArgs) -> Result<()> {
    if !(args.q > 0.0 && args.q < 1.0) {
        bail!("q must lie in (0,1)");
    }
    let rows = read_reports(&args.dir, &args.method)?;
    if rows.is_empty() {
        bail!("no reports with method {} in {}", args.method, args.dir.display());
    }
    let pvalues: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let chosen = bh_select(&pvalues, args.q);
    let selected: Vec<_> = chosen.iter().map(|&i| json!({ "day": rows[i].0, "pvalue": rows[i].1 })).collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "method": args.method,
            "q": args.q,
            "days": rows.len(),
            "selected": selected,
        }))?
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Test(a) => test(a),
        Command::Experiment(a) => experiment(a),
        Command::Ingest(a) => ingest(a),
        Command::Select(a) => select(a),
    }
}
