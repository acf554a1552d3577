//! Run configuration: a JSON file, overridden field by field from flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sgrif::decloud::DecloudParams;
use sgrif::fgs::{EdgeSmoothParams, StructureTransferParams};
use sgrif::gif::GifParams;
use sgrif::metrics::MetricOptions;
use sgrif::raster::Channel;
use sgrif::sdc::SdcParams;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Decloud,
    Gif,
    Metrics,
    Cdr,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Decloud => "decloud",
            Mode::Gif => "gif",
            Mode::Metrics => "metrics",
            Mode::Cdr => "cdr",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecloudConfig {
    pub kappa: usize,
    pub lambda: f64,
    pub passes: usize,
    pub gamma: f64,
    pub theta: f64,
    pub eps: f64,
    pub t_min: f64,
    pub alpha: f64,
}

impl Default for DecloudConfig {
    fn default() -> Self {
        DecloudConfig::from(&DecloudParams::<f64>::default())
    }
}

impl From<&DecloudParams<f64>> for DecloudConfig {
    fn from(p: &DecloudParams<f64>) -> Self {
        DecloudConfig {
            kappa: p.kappa,
            lambda: p.structure.lambda,
            passes: p.structure.passes,
            gamma: p.edge.gamma,
            theta: p.edge.theta,
            eps: p.edge.eps,
            t_min: p.t_min,
            alpha: p.alpha,
        }
    }
}

impl DecloudConfig {
    pub fn params(&self) -> DecloudParams<f64> {
        DecloudParams {
            kappa: self.kappa,
            structure: StructureTransferParams {
                lambda: self.lambda,
                passes: self.passes,
            },
            edge: EdgeSmoothParams {
                gamma: self.gamma,
                theta: self.theta,
                eps: self.eps,
                passes: self.passes,
            },
            t_min: self.t_min,
            alpha: self.alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GifConfig {
    pub radius: usize,
    pub eps: f64,
}

impl Default for GifConfig {
    fn default() -> Self {
        let p = GifParams::<f64>::default();
        GifConfig {
            radius: p.radius,
            eps: p.eps,
        }
    }
}

impl GifConfig {
    pub fn params(&self) -> GifParams<f64> {
        GifParams {
            radius: self.radius,
            eps: self.eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelName {
    Red,
    Green,
    Blue,
    Luminance,
}

impl ChannelName {
    pub fn channel(self) -> Channel {
        match self {
            ChannelName::Red => Channel::Red,
            ChannelName::Green => Channel::Green,
            ChannelName::Blue => Channel::Blue,
            ChannelName::Luminance => Channel::Luminance,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelName::Red => "red",
            ChannelName::Green => "green",
            ChannelName::Blue => "blue",
            ChannelName::Luminance => "luminance",
        }
    }
}

impl std::str::FromStr for ChannelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "red" => Ok(ChannelName::Red),
            "green" => Ok(ChannelName::Green),
            "blue" => Ok(ChannelName::Blue),
            "luminance" | "luma" => Ok(ChannelName::Luminance),
            other => Err(format!("unknown channel `{other}` (red, green, blue, luminance)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub bins: usize,
    pub blocks: usize,
    pub channel: ChannelName,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let o = MetricOptions::default();
        MetricsConfig {
            bins: o.bins,
            blocks: o.blocks,
            channel: ChannelName::Green,
        }
    }
}

impl MetricsConfig {
    pub fn options(&self) -> MetricOptions {
        MetricOptions {
            bins: self.bins,
            blocks: self.blocks,
            channel: self.channel.channel(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdcConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Side of the square feature raster.
    pub side: usize,
}

impl Default for SdcConfig {
    fn default() -> Self {
        let p = SdcParams::<f64>::default();
        SdcConfig {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            max_iter: p.max_iter,
            tol: p.tol,
            side: 16,
        }
    }
}

impl SdcConfig {
    pub fn params(&self) -> SdcParams<f64> {
        SdcParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub decloud: DecloudConfig,
    pub gif: GifConfig,
    pub metrics: MetricsConfig,
    pub sdc: SdcConfig,
    /// Reference-set directory for `cdr`.
    pub references: Option<PathBuf>,
    /// `id,cdr` table of ground-truth CDRs for `cdr`.
    pub truth: Option<PathBuf>,
    pub workers: usize,
    /// Record wall times; off makes every report byte-reproducible.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output: None,
            mode: None,
            decloud: DecloudConfig::default(),
            gif: GifConfig::default(),
            metrics: MetricsConfig::default(),
            sdc: SdcConfig::default(),
            references: None,
            truth: None,
            workers: 1,
            timing: true,
        }
    }
}

/// Flag values that replace config-file fields when present.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub kappa: Option<usize>,
    pub t_min: Option<f64>,
    pub workers: Option<usize>,
    pub radius: Option<usize>,
    pub gif_eps: Option<f64>,
    pub channel: Option<ChannelName>,
    pub bins: Option<usize>,
    pub blocks: Option<usize>,
    pub references: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub no_timing: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `path` if given (defaults otherwise) and applies the overrides.
    pub fn resolve(path: Option<&Path>, mode: Mode, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        cfg.mode = Some(mode);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        if o.input.is_some() {
            self.input = o.input.clone();
        }
        if o.output.is_some() {
            self.output = o.output.clone();
        }
        if o.references.is_some() {
            self.references = o.references.clone();
        }
        if o.truth.is_some() {
            self.truth = o.truth.clone();
        }
        set(&mut self.decloud.lambda, &o.lambda);
        set(&mut self.decloud.kappa, &o.kappa);
        set(&mut self.decloud.t_min, &o.t_min);
        set(&mut self.workers, &o.workers);
        set(&mut self.gif.radius, &o.radius);
        set(&mut self.gif.eps, &o.gif_eps);
        set(&mut self.metrics.channel, &o.channel);
        set(&mut self.metrics.bins, &o.bins);
        set(&mut self.metrics.blocks, &o.blocks);
        if o.no_timing {
            self.timing = false;
        }
    }

    /// Checks every field against the invariants of the module that uses it.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match &self.input {
            None => return bad("no input directory (set `input` or pass --input)".into()),
            Some(p) if !p.is_dir() => return bad(format!("input directory {} does not exist", p.display())),
            _ => {}
        }
        if self.output.is_none() && self.mode != Some(Mode::Metrics) {
            return bad("no output directory (set `output` or pass --output)".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        self.decloud.params().validate().map_err(|e| CliError::Config(format!("decloud: {e}")))?;
        self.gif.params().validate().map_err(|e| CliError::Config(format!("gif: {e}")))?;
        self.sdc.params().validate().map_err(|e| CliError::Config(format!("sdc: {e}")))?;
        if self.sdc.side == 0 {
            return bad("sdc: side must be >= 1".into());
        }
        if self.metrics.bins < 4 {
            return bad(format!("metrics: bins must be >= 4, got {}", self.metrics.bins));
        }
        if self.metrics.blocks == 0 {
            return bad("metrics: blocks must be >= 1".into());
        }
        if self.mode == Some(Mode::Cdr) && self.references.is_none() {
            return bad("cdr needs a reference set (set `references` or pass --references)".into());
        }
        Ok(())
    }

    /// Digest of everything that affects report contents. Paths and the
    /// worker count are left out: they do not change the numbers.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.input = None;
        canonical.output = None;
        canonical.references = None;
        canonical.truth = None;
        canonical.workers = 1;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
