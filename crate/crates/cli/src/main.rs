use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mrta_core::bench::{
    compare, evaluate, generate_dataset, ArrivalDist, DatasetSpec, ExperimentConfig, ExperimentReport, NamedDataset,
    PolicyKind,
};
use mrta_core::domain::{load_dataset, save_dataset, WorldConfig};
use mrta_core::policy::{load_checkpoint, save_checkpoint, write_curve, Trainer};

#[derive(Parser)]
#[command(name = "mrta", version, about = "Multi-robot task allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Policy {
    Mrtagent,
    Bfo,
    Fifo,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic task dataset.
    Generate {
        #[arg(long, value_enum)]
        dist: Dist,
        #[arg(long, default_value_t = 505)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Self-play training of the Planner and Executor.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Learning-curve CSV; defaults to the checkpoint path with a `.curve.csv` suffix.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run a policy over datasets and write per-episode results.
    Evaluate {
        #[arg(long, value_enum)]
        policy: Policy,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Glob of dataset files.
        #[arg(long)]
        data: String,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// World parameters; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Take the most likely action instead of sampling.
        #[arg(long)]
        greedy: bool,
    },
    /// Cost orderings and win counts across evaluation CSVs.
    Compare {
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_datasets(pattern: &str) -> Result<Vec<NamedDataset>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .with_context(|| format!("bad glob {pattern:?}"))?
        .collect::<std::result::Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no dataset files match {pattern:?}");
    }
    paths
        .iter()
        .map(|p| {
            let tasks = load_dataset(p).with_context(|| format!("reading {}", p.display()))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(NamedDataset { name, tasks })
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { dist, n, seed, out } => {
            let arrival = match dist {
                Dist::Gaussian => ArrivalDist::GAUSSIAN,
                Dist::Uniform => ArrivalDist::UNIFORM,
            };
            let tasks = generate_dataset(&DatasetSpec::new(n, arrival, seed))?;
            save_dataset(&out, &tasks)?;
        }
        Command::Train { config, out, curve } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            let outcome = Trainer::new(cfg.world, cfg.train)?.run()?;
            save_checkpoint(&out, &outcome.planner, &outcome.executor)?;
            let curve = curve.unwrap_or_else(|| {
                let mut s = out.clone().into_os_string();
                s.push(".curve.csv");
                s.into()
            });
            let mut w = create(&curve)?;
            write_curve(&mut w, &outcome.curve)?;
            w.flush()?;
            log::info!("wrote {} and {}", out.display(), curve.display());
        }
        Command::Evaluate { policy, ckpt, data, seeds, out, config, greedy } => {
            let world = match &config {
                Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?.world,
                None => WorldConfig::default(),
            };
            let kind = match (policy, ckpt) {
                (Policy::Mrtagent, Some(path)) => {
                    let (planner, executor) =
                        load_checkpoint(&path).with_context(|| format!("loading {}", path.display()))?;
                    PolicyKind::MrtAgent { planner, executor, greedy }
                }
                (Policy::Mrtagent, None) => bail!("--policy mrtagent requires --ckpt"),
                (_, Some(_)) => bail!("--ckpt only applies to --policy mrtagent"),
                (Policy::Bfo, None) => PolicyKind::Bfo,
                (Policy::Fifo, None) => PolicyKind::Fifo,
            };
            if greedy && policy != Policy::Mrtagent {
                bail!("--greedy only applies to --policy mrtagent");
            }
            let datasets = load_datasets(&data)?;
            let report = evaluate(&kind, &datasets, &world, &seeds)?;
            let mut w = create(&out)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            print!("{}", report.table());
            eprintln!("evaluated {} episodes in {:.2?}", report.runs.len(), report.runtime);
        }
        Command::Compare { inputs } => {
            let reports = inputs
                .iter()
                .map(|p| ExperimentReport::load_csv(p).with_context(|| format!("reading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let merged = ExperimentReport::merge(reports);
            print!("{}", merged.table());
            print!("{}", compare(&merged)?.summary());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
