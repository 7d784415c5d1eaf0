//! Command-line front end: decomposition previews, synthetic datasets,
//! splitting, training, evaluation and the three-domain comparison.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use wavefp_core::data::Split;
use wavefp_core::image::DomainKind;
use wavefp_core::wavelet::{BoundaryMode, Wavelet};

pub use commands::Reporter;
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wavefp_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input or configuration, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_user_error() => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wavefp", version, about = "Wavelet-domain detection of up-sampling fingerprints")]
pub struct Cli {
    /// TOML run configuration; absent keys take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the sub-band mosaic of an image as PNG.
    Decompose {
        input: PathBuf,
        #[arg(long, default_value = "haar")]
        wavelet: Wavelet,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        #[arg(long, default_value = "symmetric")]
        mode: BoundaryMode,
        /// Output PNG; defaults to `<out>/<stem>_<wavelet>.png`.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a balanced synthetic dataset with a manifest.
    Synth {
        /// Images per class; defaults to `n_per_class`.
        #[arg(long, short)]
        n: Option<usize>,
    },
    /// Assign train/val/test splits to a manifest.
    Split {
        manifest: PathBuf,
        /// Where to write the annotated manifest; defaults to in place.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Train one model and write its weights and history.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        domain: Option<DomainKind>,
    },
    /// Evaluate saved weights on one split.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        domain: Option<DomainKind>,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
    },
    /// Train spatial, Haar and db2 models on one split and tabulate them.
    Compare {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        _ => Err(format!("unknown split `{s}` (train, val, test)")),
    }
}

/// File configuration with global and per-command flags applied.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    match &cli.command {
        Some(Command::Train { manifest, domain }) | Some(Command::Eval { manifest, domain, .. }) => {
            if let Some(m) = manifest {
                cfg.manifest = Some(m.clone());
            }
            if let Some(d) = domain {
                cfg.domain = *d;
            }
        }
        Some(Command::Compare { manifest: Some(m) }) => cfg.manifest = Some(m.clone()),
        _ => {}
    }
    Ok(cfg)
}

/// Runs the parsed command line; the returned text goes to standard output.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = effective_config(&cli)?;
    if cli.print_config {
        return Ok(cfg.to_toml());
    }
    let rep = Reporter { quiet: cli.quiet };
    let Some(command) = cli.command else {
        return Err(CliError::Usage("no command given (see --help)".into()));
    };
    cfg.finalize()?;
    match command {
        Command::Decompose {
            input,
            wavelet,
            levels,
            mode,
            output,
        } => {
            let output = output.unwrap_or_else(|| {
                let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
                cfg.output_dir.join(format!("{stem}_{}.png", wavelet.name()))
            });
            let written = commands::cmd_decompose(&input, wavelet, levels, mode, &output)?;
            Ok(written.iter().map(|p| format!("{}\n", p.display())).collect())
        }
        Command::Synth { n } => {
            let n = n.unwrap_or(cfg.n_per_class);
            let path = commands::cmd_synth(&cfg, n, &cfg.output_dir)?;
            Ok(format!("{} images, manifest {}\n", 2 * n, path.display()))
        }
        Command::Split { manifest, output } => {
            let output = output.unwrap_or_else(|| manifest.clone());
            let [tr, va, te] = commands::cmd_split(&cfg, &manifest, &output)?;
            Ok(format!("train {tr}, val {va}, test {te} -> {}\n", output.display()))
        }
        Command::Train { .. } => {
            let out = commands::cmd_train(&cfg, rep)?;
            Ok(format!(
                "best epoch {} (val loss {:.6})\nweights {}\nhistory {}\n",
                out.best_epoch,
                out.best_val_loss,
                out.weights.display(),
                out.history.display()
            ))
        }
        Command::Eval { weights, split, .. } => {
            let report = commands::cmd_eval(&cfg, &weights, split)?;
            Ok(format!("{}\n", report.to_json()))
        }
        Command::Compare { .. } => {
            let cmp = commands::cmd_compare(&cfg, rep)?;
            Ok(cmp.to_text())
        }
    }
}
