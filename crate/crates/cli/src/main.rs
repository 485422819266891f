use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use std::{fs, io};

use anyhow::Context as _;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use ppc_core::experiments::{
    run_experiment, write_experiment, ConfigError, ExperimentConfig, ExperimentResult, Manifest, EXPERIMENTS,
};
use ppc_core::theory::run_all_checks;

/// Environment variable that overrides the default output directory.
const OUT_ENV: &str = "PPC_OUT_DIR";
const DEFAULT_OUT: &str = "results";

#[derive(Parser, Debug)]
#[command(name = "ppc", version, about = "Penalized predictive control experiments and theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment (exp1..exp6), every experiment (all), or the theory checks (checks).
    Run(RunArgs),
    /// Print the effective configuration as `key = value` lines.
    ShowConfig(ConfigArgs),
    /// Parse and validate a configuration file.
    ValidateConfig {
        /// Flat `key = value` file; `#` starts a comment.
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// exp1..exp6, all, or checks.
    target: Option<String>,
    /// Same as the positional target.
    #[arg(long, conflicts_with = "target")]
    experiment: Option<String>,
    /// Output directory [default: $PPC_OUT_DIR or ./results].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Configuration file applied on top of the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the reference protocol (T=1000, five seeds) instead of desk scale.
    #[arg(long)]
    paper_scale: bool,
    /// Override any key (repeatable), e.g. `--set planner.inner_steps=80`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Episode horizon.
    #[arg(long = "T", value_name = "STEPS")]
    horizon: Option<u64>,
    /// Seed count, or an explicit comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    /// First seed when --seeds is a count.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feasibility samples per step.
    #[arg(long = "N", value_name = "SAMPLES")]
    samples: Option<usize>,
    /// Comma-separated controller labels to run (the oracle always runs).
    #[arg(long)]
    controllers: Option<String>,
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
struct ConfigFailure(String);

impl ConfigArgs {
    /// Defaults, then the file, then `--set`, then the dedicated flags.
    fn resolve(&self) -> Result<ExperimentConfig, ConfigFailure> {
        let mut cfg = if self.paper_scale { ExperimentConfig::paper_scale() } else { ExperimentConfig::default() };
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        let flag = |e: ConfigError| ConfigFailure(format!("command line: {e}"));
        for kv in &self.overrides {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| ConfigFailure(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v).map_err(flag)?;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(s) = &self.seeds {
            if s.contains(',') {
                cfg.set("seeds", s).map_err(flag)?;
            } else {
                let n: u64 = s.trim().parse().map_err(|_| ConfigFailure(format!("--seeds: `{s}` is not a count")))?;
                cfg.seeds = (self.seed..self.seed + n).collect();
            }
        }
        if let Some(n) = self.samples {
            cfg.set("samples_per_step", &n.to_string()).map_err(flag)?;
        }
        if let Some(c) = &self.controllers {
            cfg.set("controllers", c).map_err(flag)?;
        }
        cfg.validate().map_err(flag)?;
        Ok(cfg)
    }
}

fn apply_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<(), ConfigFailure> {
    let text = fs::read_to_string(path).map_err(|e| ConfigFailure(format!("{}: {e}", path.display())))?;
    cfg.apply_text(&text).map_err(|(line, e)| ConfigFailure(format!("{}:{line}: {e}", path.display())))
}

enum Target {
    Experiments(Vec<u8>),
    Checks,
}

fn parse_target(name: &str) -> Result<Target, ConfigFailure> {
    match name {
        "checks" => Ok(Target::Checks),
        "all" => Ok(Target::Experiments(EXPERIMENTS.to_vec())),
        _ => name
            .strip_prefix("exp")
            .and_then(|n| n.parse().ok())
            .filter(|id| EXPERIMENTS.contains(id))
            .map(|id| Target::Experiments(vec![id]))
            .ok_or_else(|| ConfigFailure(format!("unknown target `{name}` (expected exp1..exp6, all or checks)"))),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// One stdout line per experiment: mean safety and normalized cost per
/// controller, averaged over seeds and sweep values.
fn summary_line(result: &ExperimentResult, elapsed: f64) -> String {
    let mut line = format!("exp{} episodes={} time={elapsed:.1}s", result.id, result.episodes.len());
    let rows = result.aggregate();
    let mut labels: Vec<&str> = Vec::new();
    for a in rows.iter().filter(|a| a.controller != "oracle") {
        if !labels.contains(&a.controller.as_str()) {
            labels.push(&a.controller);
        }
    }
    for label in labels {
        let group: Vec<_> = rows.iter().filter(|a| a.controller == label).collect();
        let n = group.len() as f64;
        let safety = group.iter().map(|a| a.safety_mean).sum::<f64>() / n;
        let cost = group.iter().map(|a| a.cost_mean).sum::<f64>() / n;
        line.push_str(&format!(" {label}:safety={safety:.3},cost={cost:.3}"));
    }
    if let Some(fit) = result.rate_fit {
        line.push_str(&format!(" rate_exponent={:.3}", fit.exponent));
    }
    if let Some(r) = result.drift_correlation {
        line.push_str(&format!(" drift_correlation={r:.3}"));
    }
    line
}

fn run_experiments(ids: &[u8], cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut manifest = Manifest { status: "running".into(), experiments: ids.to_vec(), config: cfg.clone() };
    manifest.write(out).with_context(|| format!("writing manifest to {}", out.display()))?;
    for &id in ids {
        eprintln!("exp{id}: {} seeds, T={}", cfg.seeds.len(), cfg.horizon);
        let start = Instant::now();
        let result = run_experiment(id, cfg).expect("target ids are validated");
        write_experiment(&result, out).with_context(|| format!("writing exp{id} results"))?;
        println!("{}", summary_line(&result, start.elapsed().as_secs_f64()));
    }
    manifest.status = "complete".into();
    manifest.write(out)?;
    eprintln!("results in {}", out.display());
    Ok(())
}

/// Returns whether every check passed.
fn run_checks(cfg: &ExperimentConfig, out: &Path) -> io::Result<bool> {
    let manifest = Manifest { status: "checks".into(), experiments: Vec::new(), config: cfg.clone() };
    manifest.write(out)?;
    let seed = cfg.seeds[0];
    let entries = run_all_checks(seed);
    let records: Vec<String> = entries.iter().map(|e| e.to_record()).collect();
    for r in records.iter().filter(|r| !r.starts_with("ok")) {
        eprintln!("{r}");
    }
    fs::write(out.join("checks.txt"), records.join("\n") + "\n")?;
    let passed = entries.iter().filter(|e| e.ok()).count();
    println!("checks passed={passed}/{} seed={seed}", entries.len());
    Ok(passed == entries.len())
}

fn run(args: RunArgs) -> Result<ExitCode, ConfigFailure> {
    let name = args.target.or(args.experiment).ok_or_else(|| ConfigFailure("missing run target".into()))?;
    let target = parse_target(&name)?;
    let cfg = args.config.resolve()?;
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ConfigFailure(format!("--jobs: {e}")))?;
    }
    let out = out_dir(args.out);
    let outcome = match target {
        Target::Experiments(ids) => run_experiments(&ids, &cfg, &out).map(|()| true),
        Target::Checks => run_checks(&cfg, &out).map_err(anyhow::Error::from),
    };
    Ok(match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    })
}

fn main() -> ExitCode {
    let defaults: String = ExperimentConfig::default().to_text().lines().map(|l| format!("  {l}\n")).collect();
    let matches = Cli::command().after_long_help(format!("Desk-scale defaults:\n{defaults}")).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ShowConfig(args) => args.resolve().map(|cfg| {
            print!("{}", cfg.to_text());
            ExitCode::SUCCESS
        }),
        Command::ValidateConfig { file } => {
            let mut cfg = ExperimentConfig::default();
            apply_file(&mut cfg, &file)
                .and_then(|()| cfg.validate().map_err(|e| ConfigFailure(format!("{}: {e}", file.display()))))
                .map(|()| {
                    println!("{}: ok (config_hash {})", file.display(), cfg.hash());
                    ExitCode::SUCCESS
                })
        }
    };
    result.unwrap_or_else(|ConfigFailure(msg)| {
        eprintln!("config error: {msg}");
        ExitCode::from(2)
    })
}
