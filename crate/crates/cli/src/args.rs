use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bubblekit_core::verify::Tolerances;
use clap::{Parser, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Constants,
    Vortex,
    Predict,
    Sweep,
    Verify,
}

/// Bubble calculus, Kirchhoff-Routh equilibria and blow-up rate predictions
/// for the Nirenberg problem on half-spheres.
#[derive(Debug, Parser)]
#[command(name = "bubblekit", version, about, allow_negative_numbers = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Dimension of the half-sphere.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of vortices.
    #[arg(long)]
    pub m: Option<usize>,
    /// JSON file holding the symmetric matrix `Q` as an array of rows.
    #[arg(long = "Q", value_name = "PATH")]
    pub q: Option<PathBuf>,
    /// Scenario JSON for `predict`/`sweep`, run configuration for `verify`.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "eps_list")]
    pub eps: Option<f64>,
    #[arg(long = "eps-list", value_delimiter = ',', value_name = "CSV")]
    pub eps_list: Option<Vec<f64>>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quadrature tolerance of the constants.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_path: Option<PathBuf>,
}

/// Optional file passed to `verify --config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let mut tolerances = Tolerances::default();
        let mut seed = cli.seed.unwrap_or(0);
        if cli.command == Command::Verify {
            if let Some(path) = &cli.config {
                let file: RunFile = load_json(path)?;
                for (name, value) in &file.tolerances {
                    tolerances
                        .set(name, *value)
                        .map_err(|e| Failure::Config(format!("{}: at `tolerances.{name}`: {e}", path.display())))?;
                }
                if cli.seed.is_none() {
                    seed = file.seed.unwrap_or(0);
                }
            }
        }
        if let Some(t) = cli.tol {
            tolerances.set("quadrature", t).map_err(|e| Failure::Config(format!("--tol: {e}")))?;
        }
        Ok(Self { command: cli.command, seed, tolerances, output_path: cli.out.clone() })
    }
}

/// Reads a JSON file, reporting the path of the offending key on failure.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Failure::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

pub fn require<T: Copy>(value: Option<T>, flag: &str, command: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Config(format!("`{command}` needs --{flag}")))
}
