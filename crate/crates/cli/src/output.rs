use std::io::Write;
use std::path::Path;

use serde::Serialize;
use syncflow::analysis::{DiagnosticsSeries, SweepTable};
use syncflow::{CheckReport, Trajectory};

use crate::error::{CliError, Result};

/// 17 significant digits, enough for an exact round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(node_count: usize, dim: usize, diag: &DiagnosticsSeries) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for i in 0..node_count {
        for k in 0..dim {
            header.push(format!("x_{i}_{k}"));
        }
    }
    header.push("diameter".into());
    if diag.v.is_some() {
        header.push("V".into());
    }
    if diag.theta.is_some() {
        header.push("theta".into());
    }
    header
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, diag: &DiagnosticsSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(traj.node_count, traj.dimension, diag))?;
    for (k, s) in traj.samples.iter().enumerate() {
        let mut row = Vec::with_capacity(s.x.len() + 4);
        row.push(fmt_f64(s.t));
        row.extend(s.x.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(diag.diameter[k]));
        if let Some(v) = &diag.v {
            row.push(fmt_f64(v[k]));
        }
        if let Some(theta) = &diag.theta {
            row.push(fmt_f64(theta[k]));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io("writing trajectory", e))?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K", "epsilon_estimate", "error"])?;
    for row in &table.rows {
        let est = row.epsilon_estimate.map_or_else(String::new, fmt_f64);
        w.write_record([fmt_f64(row.gain), est, row.error.clone().unwrap_or_default()])?;
    }
    w.flush().map_err(|e| CliError::io("writing sweep table", e))?;
    Ok(())
}

/// A gnuplot script: node states on top, diameter (log scale) below.
pub fn plot_script(node_count: usize, dim: usize, id: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("# syncflow plot for scenario {id}\n"));
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 1000,800\n");
    s.push_str(&format!("set output '{id}.png'\n"));
    s.push_str("set multiplot layout 2,1\n");
    s.push_str("set xlabel 't'\nset ylabel 'x'\n");
    let cols: Vec<String> = (0..node_count * dim)
        .map(|c| format!("'trajectory.csv' using 1:{} with lines", c + 2))
        .collect();
    s.push_str(&format!("plot {}\n", cols.join(", \\\n     ")));
    s.push_str("set logscale y\nset ylabel 'diameter'\n");
    s.push_str(&format!(
        "plot 'trajectory.csv' using 1:{} with lines\n",
        node_count * dim + 2
    ));
    s.push_str("unset multiplot\n");
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    /// "pass", "check_failure" or "numerical_error".
    pub status: String,
    pub gain: f64,
    pub gains: Vec<f64>,
    pub samples: usize,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
