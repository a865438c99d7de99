use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{ClusterBatch, SweepResult};
use crate::error::{Error, Result};
use crate::integrators::{ADAM_COMPOSITION, RNG_ALGORITHM};

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// `axis1,axis2,mean_iters,converged_frac,n_ics`, row-major.
pub fn write_sweep_csv<W: Write>(w: W, res: &SweepResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["axis1", "axis2", "mean_iters", "converged_frac", "n_ics"])?;
    for c in &res.cells {
        out.write_record([
            fmt(c.axis1),
            fmt(c.axis2),
            fmt(c.mean_iters),
            fmt(c.converged_frac),
            c.n_ics.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// `run,seed,init_energy,final_energy,min_energy,success`, by run index.
pub fn write_cluster_csv<W: Write>(w: W, batch: &ClusterBatch) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "run",
        "seed",
        "init_energy",
        "final_energy",
        "min_energy",
        "success",
    ])?;
    for r in &batch.runs {
        out.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            fmt(r.init_energy),
            fmt(r.final_energy),
            fmt(r.min_energy),
            r.success.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Sidecar written next to every output file.
///
/// `args` holds the effective command-line settings; feeding the file back
/// through `--config` reproduces the run.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub args: BTreeMap<String, String>,
    pub spec: serde_json::Value,
    pub rng: &'static str,
    pub adam_composition: &'static str,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Metadata {
    pub fn new(subcommand: &str, args: BTreeMap<String, String>, spec: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            args,
            spec,
            rng: RNG_ALGORITHM,
            adam_composition: ADAM_COMPOSITION,
            notes: Vec::new(),
            summary: None,
        }
    }
}
