use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use privgnn::accountant::{
    conversion_table, pate_budget_with, pate_curve, privgnn_budget_with, privgnn_curve, AccountantOptions, Conversion,
    PrivacyParams,
};
use privgnn::config::{RunConfig, SyntheticConfig};
use privgnn::dataset::save_dataset;
use privgnn::exec::{Executor, JobOrder};
use privgnn::gnn::ModelKind;
use privgnn::harness::{
    compare_to_reference, compare_with_accountant, generate_sbm, read_sweep_csv, run_sweep, write_comparison_csv,
    write_sweep_csv, SweepSpec,
};
use privgnn::pipeline::{
    pate_run, privgnn_run, run_baseline, Baseline, ExperimentReport, PateConfig, PrivateGraph, PublicData, RunOptions,
    TABLE_HEADER,
};

#[derive(Parser)]
#[command(name = "privgnn", version, about = "Private GNN release workbench")]
struct Cli {
    /// Run independent jobs on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Privacy budget for a parameter tuple.
    Account(AccountArgs),
    /// Run a pipeline on a configured dataset.
    Run {
        #[command(subcommand)]
        what: RunCommand,
    },
    /// Write a synthetic SBM dataset directory.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write one CSV row per cell.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare budgets with the published reference values.
    Compare {
        /// Sweep CSV to compare; without it the accountant is evaluated directly.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mechanism {
    Privgnn,
    Pate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConversionArg {
    Lemma,
    Shifted,
}

#[derive(Args)]
struct AccountArgs {
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    queries: u64,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum, default_value = "privgnn")]
    mechanism: Mechanism,
    #[arg(long, default_value_t = 32)]
    alpha_max: u32,
    /// Defaults to `shifted` for privgnn and `lemma` for pate.
    #[arg(long, value_enum)]
    conversion: Option<ConversionArg>,
    /// Also write the per-order table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RunCommand {
    Privgnn {
        #[arg(long)]
        config: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    Pate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        teachers: usize,
        #[arg(long, value_enum, default_value = "gnn")]
        kind: KindArg,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    Baseline {
        #[arg(long, value_enum)]
        which: WhichArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gnn,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    B1,
    B2,
}

fn account(args: &AccountArgs) -> Result<()> {
    let conversion = match (args.conversion, args.mechanism) {
        (Some(ConversionArg::Lemma), _) | (None, Mechanism::Pate) => Conversion::Lemma,
        (Some(ConversionArg::Shifted), _) | (None, Mechanism::Privgnn) => Conversion::Shifted,
    };
    let options = AccountantOptions {
        alpha_max: args.alpha_max,
        conversion,
    };
    let (curve, line) = match args.mechanism {
        Mechanism::Privgnn => {
            let params = PrivacyParams::new(args.gamma, args.lambda, args.queries, args.delta)?;
            let b = privgnn_budget_with(&params, &options)?;
            let line = format!(
                "mechanism=privgnn gamma={} lambda={} queries={} delta={} epsilon={} alpha={} crude={}",
                args.gamma, args.lambda, args.queries, args.delta, b.tight.epsilon, b.tight.optimal_order, b.crude
            );
            (privgnn_curve(&params, &options)?, line)
        }
        Mechanism::Pate => {
            let g = pate_budget_with(args.lambda, args.queries, args.delta, &options)?;
            let line = format!(
                "mechanism=pate lambda={} queries={} delta={} epsilon={} alpha={} crude=none",
                args.lambda, args.queries, args.delta, g.epsilon, g.optimal_order
            );
            (pate_curve(args.lambda, args.queries, &options)?, line)
        }
    };
    println!("{line}");
    if let Some(path) = &args.table {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        for row in conversion_table(&curve, args.delta, conversion)? {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn emit(report: &ExperimentReport, json: Option<&Path>) -> Result<()> {
    print!("{}", report.to_record());
    println!("{TABLE_HEADER}");
    println!("{}", report.table_row());
    if let Some(path) = json {
        std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    }
    Ok(())
}

fn load(config: &Path) -> Result<(RunConfig, PrivateGraph, PublicData)> {
    let (cfg, dataset) = RunConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let public = PublicData::from_dataset(&dataset);
    let private = PrivateGraph::new(dataset.private)?;
    Ok((cfg, private, public))
}

fn run(what: &RunCommand, options: RunOptions) -> Result<()> {
    match what {
        RunCommand::Privgnn { config, report } => {
            let (cfg, private, public) = load(config)?;
            let out = privgnn_run(&private, &public, &cfg.privgnn, options)?;
            emit(&out.report, report.as_deref())
        }
        RunCommand::Pate {
            config,
            teachers,
            kind,
            report,
        } => {
            let (cfg, private, public) = load(config)?;
            let kind = match kind {
                KindArg::Gnn => ModelKind::Gnn,
                KindArg::Mlp => ModelKind::Mlp,
            };
            let pate = PateConfig::from_privgnn(&cfg.privgnn, *teachers, kind);
            let out = pate_run(&private, &public, &pate, options)?;
            emit(&out.report, report.as_deref())
        }
        RunCommand::Baseline { which, config, report } => {
            let (cfg, private, public) = load(config)?;
            let which = match which {
                WhichArg::B1 => Baseline::B1,
                WhichArg::B2 => Baseline::B2,
            };
            let out = run_baseline(which, &private, &public, &cfg.privgnn.student, cfg.privgnn.master_seed)?;
            emit(&out.report, report.as_deref())
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let executor = if cli.sequential {
        Executor::Sequential
    } else {
        Executor::Parallel
    };
    let options = RunOptions {
        executor,
        order: JobOrder::Forward,
    };
    match &cli.command {
        Command::Account(args) => account(args),
        Command::Run { what } => run(what, options),
        Command::GenSynthetic { spec, out } => {
            let cfg = SyntheticConfig::from_toml_str(&std::fs::read_to_string(spec)?)?;
            let dataset = generate_sbm(&cfg.sbm, cfg.seed)?;
            save_dataset(&dataset, out)?;
            println!(
                "wrote {} private and {} public nodes to {}",
                dataset.private.num_nodes(),
                dataset.public.num_nodes(),
                out.display()
            );
            Ok(())
        }
        Command::Sweep { spec, out } => {
            let sweep = SweepSpec::load(spec).with_context(|| format!("loading {}", spec.display()))?;
            let dataset = match &sweep.dataset {
                Some(src) if !sweep.budget_only => Some(src.materialize(spec.parent())?),
                None if !sweep.budget_only => bail!("sweep spec has no [dataset] and budget_only is false"),
                _ => None,
            };
            let rows = run_sweep(&sweep, dataset.as_ref(), executor)?;
            write_sweep_csv(&rows, BufWriter::new(File::create(out)?))?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("wrote {} rows ({failed} failed) to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Compare { report, out } => {
            let rows = match report {
                Some(path) => {
                    let sweep =
                        read_sweep_csv(File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
                    let cmp = compare_to_reference(&sweep)?;
                    for m in &cmp.missing {
                        eprintln!(
                            "missing: source={} gamma={} lambda={} queries={} delta={}",
                            m.source, m.gamma, m.lambda, m.num_queries, m.delta
                        );
                    }
                    cmp.rows
                }
                None => compare_with_accountant(&AccountantOptions::default())?,
            };
            match out {
                Some(path) => write_comparison_csv(&rows, BufWriter::new(File::create(path)?))?,
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    write_comparison_csv(&rows, &mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(())
        }
    }
}
