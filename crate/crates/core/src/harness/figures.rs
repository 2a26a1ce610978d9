//! Figure reproduction.
//!
//! | name    | files                                | content                                   |
//! |---------|--------------------------------------|-------------------------------------------|
//! | `fig5a` | `fig5a.csv`                          | Fisher information vs Q, nearest neighbor |
//! | `fig5b` | `fig5b.csv`                          | Fisher information vs Q~, geometric graph |
//! | `fig6`  | `fig6_variance.csv`, `fig6_trace.csv`| variance over one period, filtered path   |
//! | `fig7a` | `fig7a.csv`                          | average variance vs Q, nearest neighbor   |
//! | `fig7b` | `fig7b.csv`                          | average variance vs Q~, geometric graph   |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::run::run;
use super::table::ResultTable;
use crate::error::{Error, Result};

pub const FIGURES: &[&str] = &["fig5a", "fig5b", "fig6", "fig7a", "fig7b"];

/// Connectivity sweep shared by the Fisher information and average variance
/// figures.
pub const Q_SWEEP: &str = "1, 2, 3, 5, 8, 12, 20, 30";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `N = 2000`, 50 trials.
    Desk,
    /// `N = 10^4`, 100 trials.
    Full,
}

impl Scale {
    pub fn n_nodes(&self) -> usize {
        match self {
            Scale::Desk => 2000,
            Scale::Full => 10_000,
        }
    }

    pub fn trials(&self) -> usize {
        match self {
            Scale::Desk => 50,
            Scale::Full => 100,
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale `{s}` (desk|full)"))),
        }
    }
}

fn config(pairs: &[(&str, String)]) -> Result<ExperimentConfig> {
    ExperimentConfig::from_pairs(pairs.iter().map(|(k, v)| (*k, v.clone())))
}

fn concat(tables: Vec<ResultTable>) -> ResultTable {
    let mut iter = tables.into_iter();
    let mut first = iter.next().expect("at least one table");
    for t in iter {
        first.rows.extend(t.rows);
    }
    first
}

fn snapshot_figure(kind: &str, sweep_key: &str, scale: Scale, seed: u64) -> Result<ResultTable> {
    let tables = ["1", "2"]
        .into_iter()
        .map(|sigma2| {
            run(&config(&[
                ("kind", kind.into()),
                ("n_nodes", scale.n_nodes().to_string()),
                (sweep_key, Q_SWEEP.into()),
                ("energy", "0.7".into()),
                ("sigma2", sigma2.into()),
                ("trials", scale.trials().to_string()),
                ("seed", seed.to_string()),
            ])?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(concat(tables))
}

fn avar_figure(topology: &str, sweep_key: &str, scale: Scale, seed: u64) -> Result<ResultTable> {
    run(&config(&[
        ("kind", "ou-avar".into()),
        ("topology", topology.into()),
        ("n_nodes", scale.n_nodes().to_string()),
        (sweep_key, Q_SWEEP.into()),
        ("power", "1.4".into()),
        ("periods", "0.7, 0.4, 0.1".into()),
        ("trials", scale.trials().to_string()),
        ("seed", seed.to_string()),
    ])?)
}

/// Computes the tables of one figure, keyed by output file name.
pub fn figure_tables(name: &str, scale: Scale, seed: u64) -> Result<Vec<(String, ResultTable)>> {
    let one = |file: &str, t: ResultTable| Ok(vec![(file.to_string(), t)]);
    match name {
        "fig5a" => one("fig5a.csv", snapshot_figure("snapshot-nn", "q", scale, seed)?),
        "fig5b" => one(
            "fig5b.csv",
            snapshot_figure("snapshot-rgg", "expected_neighbors", scale, seed)?,
        ),
        "fig6" => {
            let common = [
                ("cp_over_eta2", "2.5".to_string()),
                ("periods", "0.1, 0.75, 1.5, 3".to_string()),
                ("seed", seed.to_string()),
            ];
            let mut variance = vec![("kind", "ou-variance".to_string()), ("n_points", "301".into())];
            variance.extend(common.iter().cloned());
            let mut trace = vec![
                ("kind", "ou-trace".to_string()),
                ("t_obs", "30".into()),
                ("m", "1600".into()),
            ];
            trace.extend(common.iter().cloned());
            Ok(vec![
                ("fig6_variance.csv".into(), run(&config(&variance)?)?),
                ("fig6_trace.csv".into(), run(&config(&trace)?)?),
            ])
        }
        "fig7a" => one("fig7a.csv", avar_figure("nn", "q", scale, seed)?),
        "fig7b" => one("fig7b.csv", avar_figure("rgg", "expected_neighbors", scale, seed)?),
        _ => Err(Error::Config(format!(
            "unknown figure `{name}` (expected one of {})",
            FIGURES.join(", ")
        ))),
    }
}

/// Computes a figure and writes its CSV files into `out_dir`.
pub fn reproduce_figure(name: &str, scale: Scale, out_dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (file, table) in figure_tables(name, scale, seed)? {
        let path = out_dir.join(file);
        table.write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_figure_is_a_config_error() {
        assert!(figure_tables("fig9", Scale::Desk, 0).unwrap_err().is_config_error());
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn fig6_has_reference_line() {
        let tables = figure_tables("fig6", Scale::Desk, 1).unwrap();
        assert_eq!(tables.len(), 2);
        let var = &tables[0].1;
        assert_eq!(var.rows.len(), 4 * 301 + 2);
        let v = var.values("var");
        assert!((v[v.len() - 1] - 0.408_248_290_463_863).abs() < 1e-12);
        assert_eq!(tables[1].1.rows.len(), 4 * 1600);
    }
}
