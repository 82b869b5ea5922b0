//! `negsel`: partition a property, label sub-requirements, generate NSA
//! detectors, score them and plot the result.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use log::info;
use negsel_core::harness::{
    label_ground_truth, read_json, read_subrequirements, render_region_map, validate_detectors, write_json,
    write_subrequirements_csv, write_subrequirements_json, ExperimentConfig, GroundTruth, Label, PropertySpec,
};
use negsel_core::model::load_nnet;
use negsel_core::nsa::{generate_detectors, DetectorRecord, NsaParams};
use negsel_core::verifier::{solve_query_file, Backend, ExternalAdapterConfig};

#[derive(Parser, Debug)]
#[command(name = "negsel", version, about = "Negative selection over verified sub-requirements")]
struct Cli {
    /// Master seed (NSA draws, falsification samples).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for labeling.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Verification backend: builtin, sampler or external.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    /// Per-query verification timeout in seconds.
    #[arg(long = "timeout-s", global = true)]
    timeout_s: Option<f64>,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// External verifier executable, for `--backend external`.
    #[arg(long, global = true)]
    adapter: Option<PathBuf>,
    /// Argument passed to the adapter before the query and verdict paths.
    #[arg(long = "adapter-arg", global = true, allow_hyphen_values = true)]
    adapter_args: Vec<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Split a property's input box into sub-requirements.
    Partition {
        #[arg(long)]
        property: PathBuf,
        /// Overrides the property's sub-interval count.
        #[arg(long)]
        n: Option<usize>,
        /// JSON output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Verify every sub-requirement against every network.
    Label {
        /// Defaults to `<output_dir>/ground_truth.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate detectors from a labeled pool.
    Nsa {
        /// Ground truth: pool = all cells, self = the SAFE ones.
        #[arg(long, conflicts_with_all = ["pool", "self_set"])]
        ground_truth: Option<PathBuf>,
        /// Sub-requirements file used as the candidate pool.
        #[arg(long, requires = "self_set")]
        pool: Option<PathBuf>,
        /// Sub-requirements file of known-safe cells.
        #[arg(long = "self", requires = "pool")]
        self_set: Option<PathBuf>,
        #[arg(long)]
        detectors: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        max_attempts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a detector file against ground truth.
    Validate {
        #[arg(long)]
        detectors: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
    },
    /// Partition, label, sweep NSA and write every report.
    Experiment,
    /// Render the ground truth as an SVG region map.
    Plot {
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long)]
        detectors: Option<PathBuf>,
        /// Two dimension indices, e.g. `0,2`.
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1])]
        dims: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a network's dimensions and normalization constants.
    Inspect { file: PathBuf },
    /// Answer an external-verifier query file with the builtin verifier.
    Solve { query: PathBuf, verdict: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(usage) = e.downcast_ref::<clap::Error>() {
                let _ = usage.print();
                return ExitCode::from(1);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Cmd::Partition { property, n, out, csv } => partition(property, *n, out.as_deref(), csv.as_deref()),
        Cmd::Label { out } => {
            let cfg = load_config(cli)?;
            let gt = label_ground_truth(&cfg)?;
            let path = out.clone().unwrap_or_else(|| cfg.output_dir.join("ground_truth.json"));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            write_json(&path, &gt)?;
            println!(
                "{} sub-requirements: {} safe, {} unsafe, {} unknown -> {}",
                gt.entries.len(),
                gt.count(Label::Safe),
                gt.count(Label::Unsafe),
                gt.count(Label::Unknown),
                path.display()
            );
            Ok(())
        }
        Cmd::Nsa {
            ground_truth,
            pool,
            self_set,
            detectors,
            radius,
            max_attempts,
            out,
        } => {
            let (pool, selfs) = match (ground_truth, pool, self_set) {
                (Some(gt), _, _) => {
                    let gt: GroundTruth = read_json(gt)?;
                    (gt.cells()?, gt.safe_cells()?)
                }
                (None, Some(p), Some(s)) => (read_subrequirements(p)?, read_subrequirements(s)?),
                _ => {
                    return Err(Cli::command()
                        .error(ErrorKind::MissingRequiredArgument, "nsa needs --ground-truth or --pool with --self")
                        .into())
                }
            };
            let mut params = NsaParams::new(*radius, *detectors, cli.seed.unwrap_or(0));
            if let Some(m) = max_attempts {
                params.max_attempts = *m;
            }
            let ds = generate_detectors(&pool, &selfs, &params)?;
            info!("{} detectors after {} attempts", ds.len(), ds.attempts_used);
            emit(out.as_deref(), &ds.to_record())
        }
        Cmd::Validate { detectors, ground_truth } => {
            let rec: DetectorRecord = read_json(detectors)?;
            let gt: GroundTruth = read_json(ground_truth)?;
            let c = validate_detectors(&rec.detector_ids, &gt)?;
            let v = serde_json::json!({
                "tp": c.tp,
                "fp": c.fp,
                "unknown": c.unknown,
                "precision": c.precision(),
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(())
        }
        Cmd::Experiment => {
            let cfg = load_config(cli)?;
            let out = cfg.run_and_write()?;
            let s = out.report.ground_truth;
            println!(
                "ground truth: {} safe, {} unsafe, {} unknown of {}",
                s.safe, s.unsafe_, s.unknown, s.total
            );
            for a in &out.report.aggregates {
                let p = a.mean_precision.map_or("-".to_string(), |p| format!("{p:.3}"));
                println!(
                    "N={:<4} r_s={:<8} reps={} mean tp={:.2} mean fp={:.2} precision={p}",
                    a.detector_size, a.radius, a.repetitions, a.mean_tp, a.mean_fp
                );
            }
            println!("reports written to {}", cfg.output_dir.display());
            Ok(())
        }
        Cmd::Plot {
            ground_truth,
            detectors,
            dims,
            out,
        } => {
            if dims.len() != 2 {
                return Err(Cli::command()
                    .error(ErrorKind::WrongNumberOfValues, "--dims takes two indices, e.g. 0,2")
                    .into());
            }
            let gt: GroundTruth = read_json(ground_truth)?;
            let ids = match detectors {
                Some(p) => read_json::<DetectorRecord>(p)?.detector_ids,
                None => vec![],
            };
            let svg = render_region_map(&gt, &ids, [dims[0], dims[1]])?;
            std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Cmd::Inspect { file } => inspect(file),
        Cmd::Solve { query, verdict } => {
            let v = solve_query_file(query, verdict)?;
            info!("{:?} after {} nodes", v.status, v.stats.nodes);
            Ok(())
        }
    }
}

fn emit<S: serde::Serialize>(out: Option<&Path>, value: &S) -> Result<()> {
    match out {
        Some(p) => Ok(write_json(p, value)?),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn partition(property: &Path, n: Option<usize>, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let mut spec = PropertySpec::load(property)?;
    if let Some(n) = n {
        spec.n = n;
    }
    let cells = spec.cells()?;
    match out {
        Some(p) => write_subrequirements_json(p, &cells)?,
        None => emit(None, &negsel_core::harness::SubRequirementFile::new(cells.clone()))?,
    }
    if let Some(p) = csv {
        write_subrequirements_csv(p, &cells)?;
    }
    info!("{} sub-requirements", cells.len());
    Ok(())
}

/// Loads `--config` and applies the global overrides.
fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else {
        return Err(Cli::command()
            .error(ErrorKind::MissingRequiredArgument, "this command needs --config <FILE>")
            .into());
    };
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.nsa.master_seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.worker_count = w;
    }
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    if let Some(t) = cli.timeout_s {
        cfg.timeout_s = t;
    }
    if let Some(program) = &cli.adapter {
        cfg.external = Some(ExternalAdapterConfig {
            program: program.clone(),
            args: cli.adapter_args.clone(),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn inspect(file: &Path) -> Result<()> {
    let net = load_nnet::<f64>(file)?;
    let n = net.normalization();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
    let sizes = net.layer_sizes();
    if sizes.len() < 2 {
        bail!("network has no layers");
    }
    println!("file:          {}", file.display());
    println!("inputs:        {}", net.input_dim());
    println!("outputs:       {}", net.output_dim());
    println!("layers:        {}", net.layers().len());
    let sizes_txt = sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    println!("layer sizes:   {sizes_txt}");
    println!("hidden relus:  {}", net.hidden_neurons());
    println!("input mins:    {}", fmt(&n.input_mins));
    println!("input maxes:   {}", fmt(&n.input_maxes));
    println!("means:         {}", fmt(&n.means));
    println!("ranges:        {}", fmt(&n.ranges));
    Ok(())
}
