//! Cosine alignment, per-step trace rows, run summaries and their CSV/JSON
//! files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::estimators::{Direction, DirectionSource, DirectionalEstimate};
use crate::optimizers::OptimizerConfig;
use crate::problems::{Minibatch, Objective};

pub const CSV_HEADER: &str = "step,forward_passes,train_loss,eval_loss,cos_sim,wall_ms";

/// `aᵀb / (‖a‖‖b‖)`, or `None` when either norm is zero or the lengths differ.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 || !(aa.is_finite() && bb.is_finite()) {
        return None;
    }
    Some((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

/// Dense `coefficient · direction`. Diagnostics only.
pub fn materialize_estimate(est: &DirectionalEstimate<'_>, source: &dyn DirectionSource, dim: usize) -> Vec<f64> {
    let z = match est.direction {
        Direction::Seed(seed) => source.materialize(seed, dim),
        Direction::Vector(v) => v.to_vec(),
    };
    z.into_iter().map(|x| est.coefficient * x).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub forward_passes: u64,
    pub train_loss: f64,
    pub eval_loss: Option<f64>,
    pub cos_sim: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub train_loss: f64,
    pub eval_loss: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub config: OptimizerConfig,
    pub master_seed: u64,
    pub steps: u64,
    pub total_forward_passes: u64,
    pub initial_train_loss: f64,
    /// Full training-split loss at the final parameters.
    pub final_train_loss: f64,
    pub final_eval_loss: f64,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl RunSummary {
    pub fn new(problem: &str, config: &OptimizerConfig) -> Self {
        Self {
            problem: problem.to_string(),
            config: config.clone(),
            master_seed: config.master_seed.0,
            steps: 0,
            total_forward_passes: 0,
            initial_train_loss: f64::NAN,
            final_train_loss: f64::NAN,
            final_eval_loss: f64::NAN,
            checkpoints: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub(crate) fn finish(&mut self, problem: &dyn Objective, theta: &[f64]) {
        self.final_train_loss = problem.loss(theta, &Minibatch::full());
        self.final_eval_loss = problem.eval_loss(theta);
    }
}

fn fmt_float(x: f64) -> String {
    // 17 significant digits round-trip every finite f64.
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Writes the header and one line per row.
pub fn write_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ZoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv_to(rows, &mut out).map_err(|e| ZoError::io(path, e))?;
    out.flush().map_err(|e| ZoError::io(path, e))
}

pub fn write_csv_to<W: Write>(rows: &[TraceRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            r.forward_passes,
            fmt_float(r.train_loss),
            fmt_opt(r.eval_loss),
            fmt_opt(r.cos_sim),
            r.wall_ms
        )?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let file = File::open(path).map_err(|e| ZoError::io(path, e))?;
    read_csv_from(file).map_err(|message| ZoError::Format { path: path.to_path_buf(), message })
}

pub fn read_csv_from<R: std::io::Read>(input: R) -> std::result::Result<Vec<TraceRow>, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| e.to_string())?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(format!("unexpected header {:?}", header));
    }
    let opt = |s: &str| -> std::result::Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(|e| e.to_string())?;
        let int = |i: usize| rec[i].parse::<u64>().map_err(|e| format!("{:?}: {e}", &rec[i]));
        rows.push(TraceRow {
            step: int(0)?,
            forward_passes: int(1)?,
            train_loss: rec[2].parse().map_err(|e| format!("{:?}: {e}", &rec[2]))?,
            eval_loss: opt(&rec[3])?,
            cos_sim: opt(&rec[4])?,
            wall_ms: int(5)?,
        });
    }
    Ok(rows)
}

/// Pretty JSON with object keys sorted at every level, newline-terminated.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's default map is a BTreeMap, so going through Value sorts keys.
    let v = serde_json::to_value(value).map_err(|e| ZoError::config(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| ZoError::config(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_sorted_json(value)?;
    std::fs::write(path, text).map_err(|e| ZoError::io(path, e))
}
