use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmsm_moo_cli::commands::{self, compare_dir, predict_plot_dir};
use pmsm_moo_cli::{CampaignConfig, CliError, Mode, Suite, Variant};

#[derive(Parser)]
#[command(name = "pmsm-moo", version, about = "Classical and surrogate-assisted multi-objective design of a double-V PMSM")]
struct Cli {
    /// Campaign config (TOML).
    #[arg(short, long, global = true, default_value = "campaign.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config.
    Run,
    /// Sample designs and write the reference dataset.
    Dataset,
    /// Train the surrogate on the dataset.
    Train,
    /// Run the optimizer with the reference model or the surrogate.
    Optimize {
        #[arg(value_enum)]
        variant: VariantArg,
    },
    /// Compare the final fronts of two result bundles.
    Compare {
        /// Defaults to the classical bundle.
        #[arg(long)]
        a: Option<PathBuf>,
        /// Defaults to the hybrid bundle.
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate a surrogate front with the reference model.
    PredictPlot {
        /// Defaults to the hybrid bundle.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the optimizer on an analytic test problem.
    Benchmark {
        /// Overrides `benchmark.suite`.
        #[arg(long, value_enum)]
        suite: Option<SuiteArg>,
    },
    /// Dataset, training, all optimization runs, comparisons and the
    /// prediction plot.
    Campaign,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Classical,
    Hybrid,
    Factor2,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Classical => Variant::Classical,
            VariantArg::Hybrid => Variant::Hybrid,
            VariantArg::Factor2 => Variant::Factor2,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SuiteArg {
    Zdt1,
    Zdt2,
    ConstrainedDemo,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Zdt1 => Suite::Zdt1,
            SuiteArg::Zdt2 => Suite::Zdt2,
            SuiteArg::ConstrainedDemo => Suite::ConstrainedDemo,
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    match writeln!(std::io::stdout(), "{s}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = CampaignConfig::load(&cli.config)?;
    let command = match cli.command {
        Command::Run => match cfg.mode {
            None => return Err(CliError::Config("`run` needs `mode` in the config".into())),
            Some(Mode::Dataset) => Command::Dataset,
            Some(Mode::Train) => Command::Train,
            Some(Mode::OptimizeClassical) => Command::Optimize { variant: VariantArg::Classical },
            Some(Mode::OptimizeHybrid) => Command::Optimize { variant: VariantArg::Hybrid },
            Some(Mode::OptimizeFactor2) => Command::Optimize { variant: VariantArg::Factor2 },
            Some(Mode::Compare) => Command::Compare { a: None, b: None, out: None },
            Some(Mode::PredictPlot) => Command::PredictPlot { bundle: None, out: None },
            Some(Mode::Benchmark) => Command::Benchmark { suite: None },
            Some(Mode::Campaign) => Command::Campaign,
        },
        other => other,
    };
    match command {
        Command::Run => unreachable!("resolved above"),
        Command::Dataset => print_json(&commands::cmd_dataset(&cfg)?),
        Command::Train => {
            let r = commands::cmd_train(&cfg)?;
            print_json(&serde_json::json!({
                "n_train": r.n_train,
                "n_validation": r.n_validation,
                "n_test": r.n_test,
                "epochs_run": r.training.epochs_run,
                "best_epoch": r.training.best_epoch,
                "validation": r.validation,
                "test": r.test,
            }))
        }
        Command::Optimize { variant } => print_json(&commands::cmd_optimize(&cfg, variant.into())?),
        Command::Compare { a, b, out } => {
            let a = a.unwrap_or_else(|| cfg.bundle_dir(Variant::Classical));
            let b = b.unwrap_or_else(|| cfg.bundle_dir(Variant::Hybrid));
            let out = out.unwrap_or_else(|| compare_dir(&cfg, Variant::Hybrid));
            print_json(&commands::cmd_compare(&cfg, &a, &b, &out)?)
        }
        Command::PredictPlot { bundle, out } => {
            let bundle = bundle.unwrap_or_else(|| cfg.bundle_dir(Variant::Hybrid));
            let out = out.unwrap_or_else(|| predict_plot_dir(&cfg));
            print_json(&commands::cmd_predict_plot(&cfg, &bundle, &out)?)
        }
        Command::Benchmark { suite } => {
            let suite = suite.map(Suite::from).unwrap_or(cfg.benchmark.suite);
            print_json(&commands::cmd_benchmark(&cfg, suite)?)
        }
        Command::Campaign => {
            let s = commands::cmd_campaign(&cfg, &|step| eprintln!("[campaign] {step}"))?;
            print_json(&serde_json::json!({
                "dataset_rows": s.dataset.rows,
                "test": s.training.test,
                "runs": s.runs.iter().map(|r| serde_json::json!({
                    "variant": r.variant,
                    "evaluations": r.evaluations,
                    "generations": r.generations,
                    "converged": r.converged,
                })).collect::<Vec<_>>(),
                "comparisons": s.comparisons,
                "prediction": s.prediction,
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
