//! Command-line flags and their validated form.

use std::fmt;

use clap::{Args, ValueEnum};

use lienard_core::expr::{Interval, ParseError};
use lienard_core::transform::{InputError, LienardInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Rule-base integration and canonical forms first, sampling as fallback.
    SymbolicFirst,
    /// `M` and `Φ` by quadrature, decisions by sampling.
    NumericOnly,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SymbolicFirst => "symbolic-first",
            Mode::NumericOnly => "numeric-only",
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Coefficient of x'^2, in x.
    #[arg(long, required_unless_present = "batch", allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Force term, in x.
    #[arg(long, required_unless_present = "batch", allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Sampling domain `lo:hi`.
    #[arg(long, default_value = "1:2", allow_hyphen_values = true)]
    pub domain: String,
    #[arg(long, value_enum, default_value_t = Mode::SymbolicFirst)]
    pub mode: Mode,
    /// Integrate the equation and report every residual check.
    #[arg(long)]
    pub verify: bool,
    /// Sample points per numeric decision (at least 16).
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_constancy: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_transform: f64,
    /// Machine-readable report.
    #[arg(long)]
    pub json: bool,
    /// Newline-delimited `f ; g` file; writes one JSON report per line.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["f", "g"])]
    pub batch: Option<String>,
}

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub constancy: f64,
    pub residual: f64,
    pub transform: f64,
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct Config {
    pub f_text: String,
    pub g_text: String,
    pub input: LienardInput,
    pub mode: Mode,
    pub verify: bool,
    pub samples: usize,
    pub tolerances: Tolerances,
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Input { text: String, error: InputError },
    Domain(String),
    Samples(usize),
    Tolerance { name: &'static str, value: f64 },
    BatchLine(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Input { error, .. } => write!(f, "{error}"),
            ConfigError::Domain(d) => write!(f, "domain `{d}` is not `lo:hi` with finite lo < hi"),
            ConfigError::Samples(n) => write!(f, "--samples must be at least {MIN_SAMPLES}, got {n}"),
            ConfigError::Tolerance { name, value } => write!(f, "--{name} must be positive, got {value}"),
            ConfigError::BatchLine(l) => write!(f, "expected `f ; g`, found `{l}`"),
        }
    }
}

impl ConfigError {
    /// The offending text and the character offset to point at.
    pub fn location(&self) -> Option<(&str, usize)> {
        let ConfigError::Input { text, error } = self else {
            return None;
        };
        let position = match error {
            InputError::F(e) | InputError::G(e) => match e {
                ParseError::Syntax { position, .. } | ParseError::UnknownSymbol { position, .. } => *position,
            },
            InputError::ForeignVariable { name, .. } => text.find(name.as_str())?,
        };
        Some((text, position))
    }
}

fn parse_domain(text: &str) -> Result<Interval, ConfigError> {
    let bad = || ConfigError::Domain(text.to_string());
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Interval::new(lo, hi).ok_or_else(bad)
}

impl Config {
    pub fn from_args(args: &ClassifyArgs) -> Result<Self, ConfigError> {
        let f = args.f.clone().unwrap_or_default();
        let g = args.g.clone().unwrap_or_default();
        Self::build(args, f, g)
    }

    pub fn from_batch_line(args: &ClassifyArgs, line: &str) -> Result<Self, ConfigError> {
        let (f, g) = line.split_once(';').ok_or_else(|| ConfigError::BatchLine(line.to_string()))?;
        Self::build(args, f.trim().to_string(), g.trim().to_string())
    }

    fn build(args: &ClassifyArgs, f_text: String, g_text: String) -> Result<Self, ConfigError> {
        let domain = parse_domain(&args.domain)?;
        if args.samples < MIN_SAMPLES {
            return Err(ConfigError::Samples(args.samples));
        }
        let tolerances = Tolerances {
            constancy: args.tol_constancy,
            residual: args.tol_residual,
            transform: args.tol_transform,
        };
        for (name, value) in [
            ("tol-constancy", tolerances.constancy),
            ("tol-residual", tolerances.residual),
            ("tol-transform", tolerances.transform),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Tolerance { name, value });
            }
        }
        let input = LienardInput::parse(&f_text, &g_text, domain).map_err(|error| {
            let text = match &error {
                InputError::F(_) | InputError::ForeignVariable { which: "f", .. } => f_text.clone(),
                _ => g_text.clone(),
            };
            ConfigError::Input { text, error }
        })?;
        Ok(Config {
            f_text,
            g_text,
            input,
            mode: args.mode,
            verify: args.verify,
            samples: args.samples,
            tolerances,
            json: args.json,
        })
    }
}
