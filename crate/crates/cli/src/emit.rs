//! Artifact files: report.json, trajectory.json, convergence.csv and
//! timeseries.csv.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::run::{RunReport, TrajectoryArtifact};

pub const CONVERGENCE_HEADER: [&str; 10] = [
    "iter",
    "cost_linear",
    "cost_nonlinear",
    "rho",
    "eta",
    "lambda",
    "accepted",
    "solve_ms",
    "discretize_ms",
    "formulate_ms",
];

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(dir.join(name))
}

/// Writes the four artifacts into `dir`, creating it if needed.
pub fn emit(report: &RunReport, artifact: &TrajectoryArtifact, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    let mut written = vec![write_json(dir, "report.json", report)?, write_json(dir, "trajectory.json", artifact)?];

    let mut csv = csv::Writer::from_writer(create(dir, "convergence.csv")?);
    csv.write_record(CONVERGENCE_HEADER)?;
    for r in &report.iterations {
        csv.write_record([
            r.iter.to_string(),
            r.cost_linear.to_string(),
            r.cost_nonlinear.to_string(),
            r.rho.map(|v| v.to_string()).unwrap_or_default(),
            r.eta.to_string(),
            r.lambda.to_string(),
            r.accepted.to_string(),
            r.timing.solve_ms.to_string(),
            r.timing.discretize_ms.to_string(),
            r.timing.formulate_ms.to_string(),
        ])?;
    }
    csv.flush()?;
    written.push(dir.join("convergence.csv"));

    let mut csv = csv::Writer::from_writer(create(dir, "timeseries.csv")?);
    let header = std::iter::once("t".to_string()).chain(artifact.state_names.iter().cloned()).chain(artifact.input_names.iter().cloned());
    csv.write_record(header)?;
    for k in 0..artifact.t.len() {
        let row = std::iter::once(artifact.time[k]).chain(artifact.x[k].iter().copied()).chain(artifact.u[k].iter().copied());
        csv.write_record(row.map(|v| v.to_string()))?;
    }
    csv.flush()?;
    written.push(dir.join("timeseries.csv"));
    Ok(written)
}
