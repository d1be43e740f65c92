//! Result files. Everything is written to a temporary sibling first and
//! renamed into place, so a failed run never leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qgame::sa_engine::{LoggedPoint, RunTotals};
use qgame::verify::{EpsilonCertificate, ValueEstimate};
use qgame::BehavioralStrategy;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// `p_<signal>_<action>` for every coordinate of the strategy.
pub fn strategy_columns(signals: usize, actions: usize) -> Vec<String> {
    (0..signals).flat_map(|s| (0..actions).map(move |a| format!("p_{s}_{a}"))).collect()
}

/// Shortest decimal that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn trajectory_csv(points: &[LoggedPoint], signals: usize, actions: usize) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_string()];
    header.extend(strategy_columns(signals, actions));
    w.write_record(&header)?;
    for pt in points {
        let mut row = vec![pt.iteration.to_string()];
        row.extend(pt.strategy.flatten().into_iter().map(fmt_f64));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    pub estimate: ValueEstimate,
    pub certificate: EpsilonCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub final_strategy: BehavioralStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub totals: Option<RunTotals>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
}

impl Summary {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

pub fn output_path(dir: &Path, prefix: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}_{suffix}"))
}
