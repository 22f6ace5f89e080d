//! Metrics, the two evaluation protocols (input-space vs. functional),
//! and comparison-report generation.
//!
//! Metrics are reported in raw units (HRC for the functional protocol,
//! raw feature units for the input-space protocol) so numbers are
//! comparable across models; normalized losses live in loss curves only.

use serde::{Deserialize, Serialize};

use crate::baselines::Forest;
use crate::data::{Dataset, Scaler};
use crate::error::{Error, Result};
use crate::nncore::{Matrix, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    InputSpace,
    Functional,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::InputSpace => write!(f, "input_space"),
            Protocol::Functional => write!(f, "functional"),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input_space" | "input-space" => Ok(Protocol::InputSpace),
            "functional" => Ok(Protocol::Functional),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSet {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
    pub n: usize,
    pub protocol: Protocol,
    pub split: Split,
}

/// Coefficient of determination: `1 - SS_res / SS_tot`.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || truth.len() < 2 {
        return Err(Error::dim(
            "r2",
            "two vectors of equal length >= 2".to_string(),
            format!("{} vs {}", pred.len(), truth.len()),
        ));
    }
    let mean: f64 = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|&t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Invariant(
            "r2 undefined: truth has zero variance".into(),
        ));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn mse_mae(pred: &[f64], truth: &[f64]) -> (f64, f64) {
    let n = pred.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    for (&p, &t) in pred.iter().zip(truth) {
        se += (p - t) * (p - t);
        ae += (p - t).abs();
    }
    (se / n, ae / n)
}

/// Scalar-series metrics over matched prediction and truth vectors.
pub fn metrics_1d(pred: &[f64], truth: &[f64], protocol: Protocol, split: Split) -> Result<MetricSet> {
    let (mse, mae) = mse_mae(pred, truth);
    Ok(MetricSet {
        mse,
        mae,
        r2: r2(pred, truth)?,
        n: truth.len(),
        protocol,
        split,
    })
}

/// Multi-output metrics: MSE/MAE over all entries, R2 as the uniform
/// average of the per-column scores.
pub fn metrics_multi(pred: &Matrix, truth: &Matrix, protocol: Protocol, split: Split) -> Result<MetricSet> {
    if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
        return Err(Error::dim(
            "metrics_multi",
            format!("{}x{}", truth.rows(), truth.cols()),
            format!("{}x{}", pred.rows(), pred.cols()),
        ));
    }
    let (mse, mae) = mse_mae(pred.values(), truth.values());
    let mut r2_sum = 0.0;
    for c in 0..truth.cols() {
        let pc: Vec<f64> = (0..pred.rows()).map(|i| pred.get(i, c)).collect();
        let tc: Vec<f64> = (0..truth.rows()).map(|i| truth.get(i, c)).collect();
        r2_sum += r2(&pc, &tc)?;
    }
    Ok(MetricSet {
        mse,
        mae,
        r2: r2_sum / truth.cols() as f64,
        n: truth.rows(),
        protocol,
        split,
    })
}

/// An inverse model maps normalized targets (batch x 1) to predicted
/// normalized feature rows (batch x 13).
pub trait InverseModel {
    fn predict_norm(&self, targets_norm: &Matrix) -> Result<Matrix>;
}

/// Any 1-input MLP (Student, direct-inverse baseline) whose sigmoid or
/// linear output already lives in normalized feature space.
impl InverseModel for Mlp {
    fn predict_norm(&self, targets_norm: &Matrix) -> Result<Matrix> {
        self.predict(targets_norm)
    }
}

/// TD3 actor wrapper: the actor emits actions in [-1, 1]^13 which the
/// environment maps affinely onto the normalized feature box [0, 1]^13.
/// With the scaled-sigmoid head those two maps cancel, so the actor's
/// sigmoid output is the normalized prediction directly.
pub struct ActorInverse<'a>(pub &'a Mlp);

impl InverseModel for ActorInverse<'_> {
    fn predict_norm(&self, targets_norm: &Matrix) -> Result<Matrix> {
        self.0.predict(targets_norm)
    }
}

/// Regression-forest wrapper: the forest works in raw units on both ends.
pub struct ForestInverse<'a> {
    pub forest: &'a Forest,
    pub scaler: &'a Scaler,
}

impl InverseModel for ForestInverse<'_> {
    fn predict_norm(&self, targets_norm: &Matrix) -> Result<Matrix> {
        let raw_targets = self
            .scaler
            .inverse_transform_targets(targets_norm.values());
        let raw_pred = self.forest.predict_batch(&raw_targets)?;
        self.scaler.transform_features(&raw_pred)
    }
}

/// Functional protocol: push predicted inputs through the Teacher and
/// compare the resulting hardness to the target, in raw HRC units.
pub fn functional_eval(
    model: &dyn InverseModel,
    teacher: &Mlp,
    scaler: &Scaler,
    targets_norm: &Matrix,
    split: Split,
) -> Result<MetricSet> {
    let x_hat = model.predict_norm(targets_norm)?;
    let y_hat = teacher.predict(&x_hat)?;
    let pred_raw = scaler.inverse_transform_targets(y_hat.values());
    let truth_raw = scaler.inverse_transform_targets(targets_norm.values());
    metrics_1d(&pred_raw, &truth_raw, Protocol::Functional, split)
}

/// Input-space protocol: compare predicted inputs to the dataset's ground
/// truth inputs, raw units, averaged over the 13 features.
pub fn input_space_eval(
    model: &dyn InverseModel,
    raw: &Dataset,
    scaler: &Scaler,
    split: Split,
) -> Result<MetricSet> {
    if raw.normalized {
        return Err(Error::Invariant("input_space_eval expects raw data".into()));
    }
    let targets_norm = Matrix::column(&scaler.transform_targets(&raw.targets))?;
    let x_hat_norm = model.predict_norm(&targets_norm)?;
    let x_hat_raw = scaler.inverse_transform_features(&x_hat_norm)?;
    metrics_multi(&x_hat_raw, &raw.features, Protocol::InputSpace, split)
}

// ---------------------------------------------------------------------------
// Comparison report

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub protocol: Protocol,
    pub split: Split,
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_CSV_HEADER: &str = "model,protocol,split,mse,mae,r2,wall_time_s,seed";

/// Rows sorted ascending by MSE; ties broken by model name.
pub fn build_report(mut rows: Vec<ReportRow>) -> Result<ComparisonReport> {
    if rows.is_empty() {
        return Err(Error::Invariant("report needs at least one row".into()));
    }
    rows.sort_by(|a, b| {
        a.mse
            .partial_cmp(&b.mse)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(ComparisonReport { rows })
}

impl ComparisonReport {
    pub fn to_csv(&self, config_digest: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(d) = config_digest {
            out.push_str(&format!("# config_digest={d}\n"));
        }
        out.push_str(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.model, r.protocol, r.split, r.mse, r.mae, r.r2, r.wall_time_s, r.seed
            ));
        }
        out
    }

    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>12} {:>10} {:>8} {:>14} {:<12} {:<6}\n",
            "Model", "MSE", "MAE", "R2", "Train time [s]", "Protocol", "Split"
        ));
        out.push_str(&"-".repeat(84));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:>12.4} {:>10.4} {:>8.4} {:>14.1} {:<12} {:<6}\n",
                r.model, r.mse, r.mae, r.r2, r.wall_time_s, r.protocol.to_string(), r.split.to_string()
            ));
        }
        out
    }

    /// Parses rows from a report-format CSV (skipping `#` comments).
    pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("model,") {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() < 8 {
                return Err(Error::Config(format!("bad report row: {line:?}")));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Config(format!("bad {what} in report row: {s:?}")))
            };
            rows.push(ReportRow {
                model: cells[0].to_string(),
                protocol: cells[1].parse()?,
                split: match cells[2] {
                    "train" => Split::Train,
                    "test" => Split::Test,
                    other => return Err(Error::Config(format!("unknown split {other:?}"))),
                },
                mse: parse(cells[3], "mse")?,
                mae: parse(cells[4], "mae")?,
                r2: parse(cells[5], "r2")?,
                wall_time_s: parse(cells[6], "wall_time_s")?,
                seed: cells[7]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed in report row: {:?}", cells[7])))?,
                config_digest: cells.get(8).unwrap_or(&"").to_string(),
            });
        }
        Ok(rows)
    }
}
