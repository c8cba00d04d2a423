use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fibremem::{CapacityKind, SymbolModel};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "fibremem", version, about = "Memory channels of optical fibres: spectra, capacities and sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transmissivities of n uses next to the symbol sampled at 2 pi j / n
    Spectrum(Opts),
    /// Asymptotic capacity per channel use
    Capacity(Opts),
    /// Capacity and positivity status over a (lambda, mu) grid
    Region(Opts),
    /// Finite-M network convergence or spectral tail convergence
    Converge(Opts),
    /// Propagate a Gaussian state through n uses of the channel
    Simulate(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Dim,
    Lim,
}

impl From<ModelArg> for SymbolModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dim => SymbolModel::Dim,
            ModelArg::Lim => SymbolModel::Lim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Q,
    Q2,
    K,
}

impl From<KindArg> for CapacityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Q => CapacityKind::Q,
            KindArg::Q2 => CapacityKind::Q2,
            KindArg::K => CapacityKind::K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FiniteM,
    Tail,
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// `--config` file, then to the built-in default.
#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Mean thermal photon number of the environment
    #[arg(long)]
    pub nu: Option<f64>,
    /// Transversal attenuation factor
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Number of channel uses
    #[arg(long)]
    pub n: Option<usize>,
    /// Segments of the finite network
    #[arg(long)]
    pub m_steps: Option<usize>,
    /// Grid `start:stop:steps` used for both lambda and mu
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub mu_grid: Option<String>,
    /// Absolute tolerance in bits per use
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Comma-separated segment counts, e.g. 10,100,1000
    #[arg(long, value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
    /// Comma-separated sizes, e.g. 4,10,60
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Gaussian state JSON file
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// JSON file with defaults for any of the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConfigFile {
    lambda: Option<f64>,
    mu: Option<f64>,
    nu: Option<f64>,
    gamma: Option<f64>,
    model: Option<ModelArg>,
    kind: Option<KindArg>,
    n: Option<usize>,
    #[serde(alias = "m_steps")]
    m_steps: Option<usize>,
    grid: Option<String>,
    #[serde(alias = "lambda_grid")]
    lambda_grid: Option<String>,
    #[serde(alias = "mu_grid")]
    mu_grid: Option<String>,
    tol: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    mode: Option<Mode>,
    #[serde(alias = "m_list")]
    m_list: Option<Vec<usize>>,
    #[serde(alias = "n_list")]
    n_list: Option<Vec<usize>>,
    state: Option<PathBuf>,
}

impl Opts {
    /// Fills unset flags from the config file, if any.
    pub fn merged(self) -> anyhow::Result<Opts> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
        let c: ConfigFile =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative paths inside the config are resolved against its directory
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        Ok(Opts {
            lambda: self.lambda.or(c.lambda),
            mu: self.mu.or(c.mu),
            nu: self.nu.or(c.nu),
            gamma: self.gamma.or(c.gamma),
            model: self.model.or(c.model),
            kind: self.kind.or(c.kind),
            n: self.n.or(c.n),
            m_steps: self.m_steps.or(c.m_steps),
            grid: self.grid.or(c.grid),
            lambda_grid: self.lambda_grid.or(c.lambda_grid),
            mu_grid: self.mu_grid.or(c.mu_grid),
            tol: self.tol.or(c.tol),
            format: self.format.or(c.format),
            out: self.out.or(c.out.map(rel)),
            mode: self.mode.or(c.mode),
            m_list: self.m_list.or(c.m_list),
            n_list: self.n_list.or(c.n_list),
            state: self.state.or(c.state.map(rel)),
            config: self.config,
        })
    }

    pub fn lambda(&self) -> anyhow::Result<f64> {
        self.lambda.context("--lambda is required")
    }

    pub fn mu(&self) -> anyhow::Result<f64> {
        self.mu.context("--mu is required")
    }

    pub fn n(&self) -> anyhow::Result<usize> {
        self.n.context("--n is required")
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(0.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    pub fn model(&self) -> SymbolModel {
        self.model.unwrap_or(ModelArg::Dim).into()
    }

    pub fn kind(&self) -> CapacityKind {
        self.kind.unwrap_or(KindArg::K).into()
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

/// Inclusive grid `start:stop:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn parse(s: &str) -> anyhow::Result<Grid> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("grid must look like start:stop:steps, got {s:?}");
        }
        let start: f64 = parts[0].trim().parse().with_context(|| format!("bad grid start in {s:?}"))?;
        let stop: f64 = parts[1].trim().parse().with_context(|| format!("bad grid stop in {s:?}"))?;
        let steps: usize = parts[2].trim().parse().with_context(|| format!("bad grid steps in {s:?}"))?;
        if steps == 0 {
            bail!("grid steps must be >= 1");
        }
        if !(start.is_finite() && stop.is_finite()) || start > stop {
            bail!("grid needs finite start <= stop, got {s:?}");
        }
        if steps == 1 && start != stop {
            bail!("a single-step grid needs start == stop, got {s:?}");
        }
        Ok(Grid { start, stop, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (k as f64 / last)
                }
            })
            .collect()
    }
}
