use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use osbop::samples::{dataset_4_2, food_matrix};
use osbop::{build_matrix, parse_preflib, read_matrix, PairOrderMatrix};
use serde::Serialize;

use crate::error::CliError;

/// Where the pair order matrix comes from. Exactly one source is required.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Matrix CSV: item count on the first line, then one row per line.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// PrefLib election file in any of the ordinal formats.
    #[arg(long, value_name = "FILE")]
    pub preflib: Option<PathBuf>,
    /// Built-in matrix: `4-2` or `food`.
    #[arg(long, value_name = "NAME")]
    pub dataset: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct InputInfo {
    pub kind: &'static str,
    pub source: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voters: Option<u64>,
}

pub struct LoadedInput {
    pub info: InputInfo,
    pub matrix: PairOrderMatrix,
}

pub const BUILTIN_DATASETS: [&str; 2] = ["4-2", "food"];

pub fn builtin(name: &str) -> Option<PairOrderMatrix> {
    match name {
        "4-2" => Some(dataset_4_2()),
        "food" => Some(food_matrix()),
        _ => None,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_preflib(path: &Path) -> Result<LoadedInput, CliError> {
    let profile =
        parse_preflib(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for key in &profile.ignored_metadata {
        log::warn!("{}: ignoring metadata line {key:?}", path.display());
    }
    let matrix = build_matrix(&profile).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(LoadedInput {
        info: InputInfo {
            kind: "preflib",
            source: path.display().to_string(),
            n: matrix.n(),
            voters: Some(profile.total_voters()),
        },
        matrix,
    })
}

impl InputArgs {
    pub fn load(&self) -> Result<LoadedInput, CliError> {
        if let Some(path) = &self.input {
            let matrix =
                read_matrix(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            return Ok(LoadedInput {
                info: InputInfo {
                    kind: "csv",
                    source: path.display().to_string(),
                    n: matrix.n(),
                    voters: None,
                },
                matrix,
            });
        }
        if let Some(path) = &self.preflib {
            return load_preflib(path);
        }
        let name = self.dataset.as_deref().unwrap_or_default();
        let matrix = builtin(name).ok_or_else(|| {
            CliError::Input(format!("unknown dataset {name:?}; built-in datasets are {BUILTIN_DATASETS:?}"))
        })?;
        Ok(LoadedInput {
            info: InputInfo { kind: "dataset", source: name.to_string(), n: matrix.n(), voters: None },
            matrix,
        })
    }
}
