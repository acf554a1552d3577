//! Command-line parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::error;

use crate::config::{ChannelName, Mode, Overrides, RunConfig};
use crate::run::run;
use crate::tools::{build_references, synth_corpus, SynthOptions};

/// Exit status when every image was processed.
pub const EXIT_OK: i32 = 0;
/// Exit status when at least one image failed.
pub const EXIT_PARTIAL: i32 = 1;
/// Exit status when the run could not start or finish.
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sgrif", version, about = "Decloud retinal fundus images and score the results")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restore every image with the structure-preserving filters.
    Decloud(RunArgs),
    /// Restore every image with the guided-image-filter baseline.
    Gif(RunArgs),
    /// Contrast metrics of every image as is.
    Metrics(RunArgs),
    /// Metrics of original, baseline and structure-preserving restorations.
    Compare(RunArgs),
    /// Estimate cup-to-disc ratios of disc crops against a reference set.
    Cdr(RunArgs),
    /// Write a synthetic clouded corpus.
    Synth(SynthArgs),
    /// Build a reference set from disc crops with known CDRs.
    BuildRefs(RefsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Structure-transfer weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Dark-channel window side (odd).
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Lower bound on the transmission.
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Guided-filter window half-size.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Guided-filter regularization.
    #[arg(long)]
    pub gif_eps: Option<f64>,
    /// Channel the metrics read: red, green, blue or luminance.
    #[arg(long)]
    pub channel: Option<ChannelName>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Reference-set directory (cdr).
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// Ground-truth `id,cdr` table (cdr).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Leave wall-time fields empty so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            input: self.input.clone(),
            output: self.output.clone(),
            lambda: self.lambda,
            kappa: self.kappa,
            t_min: self.tmin,
            workers: self.workers,
            radius: self.radius,
            gif_eps: self.gif_eps,
            channel: self.channel,
            bins: self.bins,
            blocks: self.blocks,
            references: self.references.clone(),
            truth: self.truth.clone(),
            no_timing: self.no_timing,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.4)]
    pub t_lo: f64,
    #[arg(long, default_value_t = 0.8)]
    pub t_hi: f64,
    /// Write disc crops instead of whole images.
    #[arg(long)]
    pub crop: bool,
}

#[derive(Debug, Args)]
pub struct RefsArgs {
    /// Directory of disc crops.
    #[arg(long)]
    pub input: PathBuf,
    /// `id,cdr` table for the crops.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Feature raster side.
    #[arg(long, default_value_t = 16)]
    pub side: usize,
}

/// Runs a parsed command and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let (mode, args) = match cli.command {
        Command::Decloud(a) => (Mode::Decloud, a),
        Command::Gif(a) => (Mode::Gif, a),
        Command::Metrics(a) => (Mode::Metrics, a),
        Command::Compare(a) => (Mode::Compare, a),
        Command::Cdr(a) => (Mode::Cdr, a),
        Command::Synth(a) => {
            let opts = SynthOptions {
                count: a.count,
                size: a.size,
                seed: a.seed,
                t_range: (a.t_lo, a.t_hi),
                crop: a.crop,
                ..SynthOptions::default()
            };
            return report_fatal(synth_corpus(&a.output, &opts).map(|_| EXIT_OK));
        }
        Command::BuildRefs(a) => {
            return report_fatal(build_references(&a.input, &a.truth, a.side, &a.output).map(|n| {
                log::info!("{n} references written to {}", a.output.display());
                EXIT_OK
            }));
        }
    };
    let outcome = RunConfig::resolve(args.config.as_deref(), mode, &args.overrides())
        .and_then(|cfg| run(&cfg))
        .map(|summary| {
            if summary.exit_code() != 0 {
                error!("{} of {} images failed", summary.failures.len(), summary.failures.len() + summary.processed);
                EXIT_PARTIAL
            } else {
                EXIT_OK
            }
        });
    report_fatal(outcome)
}

fn report_fatal(outcome: Result<i32, crate::error::CliError>) -> i32 {
    outcome.unwrap_or_else(|e| {
        error!("{e}");
        eprintln!("sgrif: {e}");
        EXIT_FATAL
    })
}
