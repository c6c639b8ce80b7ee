//! Neural estimate of the control limits from model parameters.
//!
//! A parameter sweep is solved exactly to build a dataset of
//! `(R, λ1, λ2, μ1, μ2) -> (D(0), ..., D(N1))` rows, and a single hidden
//! layer network (tanh hidden units, linear outputs) is fit to it by
//! full-batch gradient descent with momentum and early stopping.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelParams};
use crate::solver::{solve, SolveOptions};

/// Number of input features: `(R, λ1, λ2, μ1, μ2)`.
pub const FEATURES: usize = 5;
pub const FEATURE_NAMES: [&str; FEATURES] = ["R", "lambda1", "lambda2", "mu1", "mu2"];

pub type Features = [f64; FEATURES];

pub fn features_of(p: &ModelParams) -> Features {
    [p.reward, p.lambda1, p.lambda2, p.mu1, p.mu2]
}

pub fn with_features(base: &ModelParams, f: &Features) -> ModelParams {
    ModelParams {
        reward: f[0],
        lambda1: f[1],
        lambda2: f[2],
        mu1: f[3],
        mu2: f[4],
        ..*base
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub values_reward: Vec<f64>,
    pub values_lambda2: Vec<f64>,
    pub values_mu2: Vec<f64>,
    pub base: ModelParams,
}

impl SweepSpec {
    /// `R ∈ 1..=8`, `λ2 ∈ 1..=5`, `μ2 ∈ {8, 10, 12, 14, 16}` around `base`.
    pub fn reference_grid(base: ModelParams) -> Self {
        SweepSpec {
            values_reward: (1..=8).map(f64::from).collect(),
            values_lambda2: (1..=5).map(f64::from).collect(),
            values_mu2: vec![8.0, 10.0, 12.0, 14.0, 16.0],
            base,
        }
    }

    pub fn len(&self) -> usize {
        self.values_reward.len() * self.values_lambda2.len() * self.values_mu2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter sets in lexicographic `(R, λ2, μ2)` order.
    pub fn points(&self) -> Vec<ModelParams> {
        let mut out = Vec::with_capacity(self.len());
        for &reward in &self.values_reward {
            for &lambda2 in &self.values_lambda2 {
                for &mu2 in &self.values_mu2 {
                    out.push(ModelParams {
                        reward,
                        lambda2,
                        mu2,
                        ..self.base
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub features: Features,
    /// Thresholds `D(0..=N1)`, `-1` for reject-all rows.
    pub labels: Vec<i64>,
}

/// Per-column min/max scaling onto `[-1, 1]`; constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaling {
    pub fn fit<'a>(columns: usize, rows: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut min = vec![f64::INFINITY; columns];
        let mut max = vec![f64::NEG_INFINITY; columns];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Scaling { min, max }
    }

    pub fn normalize(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            2.0 * (v - self.min[j]) / range - 1.0
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            self.min[j] + (v + 1.0) * range / 2.0
        } else {
            self.min[j]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub label_count: usize,
    pub feature_scaling: Scaling,
    pub label_scaling: Scaling,
}

impl Dataset {
    pub fn from_rows(rows: Vec<DatasetRow>) -> Result<Self> {
        let label_count = rows.first().map_or(0, |r| r.labels.len());
        if label_count == 0 {
            return Err(Error::Config("dataset needs at least one row with labels".into()));
        }
        if rows.iter().any(|r| r.labels.len() != label_count) {
            return Err(Error::Config("dataset rows have unequal label counts".into()));
        }
        let feature_scaling = Scaling::fit(FEATURES, rows.iter().map(|r| &r.features[..]));
        let labels: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.labels.iter().map(|&l| l as f64).collect())
            .collect();
        let label_scaling = Scaling::fit(label_count, labels.iter().map(Vec::as_slice));
        Ok(Dataset {
            rows,
            label_count,
            feature_scaling,
            label_scaling,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        header.extend((0..self.label_count).map(|i| format!("D{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.features.iter().map(|v| v.to_string()).collect();
            rec.extend(row.labels.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() <= FEATURES
            || header.iter().take(FEATURES).ne(FEATURE_NAMES.iter().copied())
        {
            return Err(Error::Config(format!("unexpected dataset header {header:?}")));
        }
        let label_count = header.len() - FEATURES;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad dataset cell {:?}: {e}", &rec[i])))
            };
            let mut features = [0.0; FEATURES];
            for (j, f) in features.iter_mut().enumerate() {
                *f = parse(j)?;
            }
            let labels = (0..label_count)
                .map(|k| {
                    rec[FEATURES + k]
                        .trim()
                        .parse::<i64>()
                        .map_err(|e| Error::Config(format!("bad label {:?}: {e}", &rec[FEATURES + k])))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(DatasetRow { features, labels });
        }
        Dataset::from_rows(rows)
    }
}

/// Solve every point of the sweep and record its thresholds.
pub fn build_dataset(sweep: &SweepSpec, opts: &SolveOptions) -> Result<Dataset> {
    if sweep.is_empty() {
        return Err(Error::Config("sweep lists must be non-empty".into()));
    }
    let rows = sweep
        .points()
        .into_par_iter()
        .map(|p| {
            let tag = |e: Error| Error::Sweep {
                reward: p.reward,
                lambda2: p.lambda2,
                mu2: p.mu2,
                source: Box::new(e),
            };
            let model = Model::new(p).map_err(tag)?;
            let report = solve(&model, opts).map_err(tag)?;
            Ok(DatasetRow {
                features: features_of(&p),
                labels: report.policy.levels(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_rows(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

/// Fully connected `inputs -> hidden (tanh) -> outputs (linear)` network.
///
/// Weights are stored row-major: `w1[h * inputs + i]`, `w2[o * hidden + h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub feature_scaling: Scaling,
    pub label_scaling: Scaling,
}

impl Mlp {
    /// Xavier-uniform weights, zero biases, identity scaling.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let mut draw = |fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..limit)).collect()
        };
        let w1 = draw(inputs, hidden, inputs * hidden);
        let w2 = draw(hidden, outputs, hidden * outputs);
        let identity = |n: usize| Scaling {
            min: vec![-1.0; n],
            max: vec![1.0; n],
        };
        Mlp {
            inputs,
            hidden,
            outputs,
            activation: Activation::Tanh,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; outputs],
            feature_scaling: identity(inputs),
            label_scaling: identity(outputs),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in the flat order `w1, b1, w2, b2`.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    fn hidden_activations(&self, x: &[f64], out: &mut [f64]) {
        for (h, a) in out.iter_mut().enumerate() {
            let row = &self.w1[h * self.inputs..(h + 1) * self.inputs];
            let z: f64 = self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *a = z.tanh();
        }
    }

    /// Forward pass on already-normalized inputs.
    pub fn forward_normalized(&self, x: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut a);
        (0..self.outputs)
            .map(|o| {
                let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
                self.b2[o] + row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    pub fn normalize_features(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .enumerate()
            .map(|(j, &v)| self.feature_scaling.normalize(j, v))
            .collect()
    }

    /// Real-valued threshold estimates in label units.
    pub fn predict_raw(&self, f: &Features) -> Vec<f64> {
        let y = self.forward_normalized(&self.normalize_features(f));
        y.iter()
            .enumerate()
            .map(|(o, &v)| self.label_scaling.denormalize(o, v))
            .collect()
    }

    /// Rounded thresholds, clamped at the reject-all sentinel `-1`.
    pub fn predict(&self, f: &Features) -> Vec<i64> {
        self.predict_raw(f)
            .into_iter()
            .map(|v| (v.round() as i64).max(-1))
            .collect()
    }

    /// Mean squared error over all samples and outputs, with its gradient in
    /// flat parameter order.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let (ni, nh, no) = (self.inputs, self.hidden, self.outputs);
        let mut gw1 = vec![0.0; ni * nh];
        let mut gb1 = vec![0.0; nh];
        let mut gw2 = vec![0.0; nh * no];
        let mut gb2 = vec![0.0; no];
        let scale = 1.0 / (xs.len() * no) as f64;
        let mut loss = 0.0;
        let mut a = vec![0.0; nh];
        let mut delta_hidden = vec![0.0; nh];
        for (x, y) in xs.iter().zip(ys) {
            self.hidden_activations(x, &mut a);
            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for o in 0..no {
                let row = &self.w2[o * nh..(o + 1) * nh];
                let out = self.b2[o] + row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
                let err = out - y[o];
                loss += err * err;
                let g = 2.0 * err * scale;
                gb2[o] += g;
                for h in 0..nh {
                    gw2[o * nh + h] += g * a[h];
                    delta_hidden[h] += g * row[h];
                }
            }
            for h in 0..nh {
                let d = delta_hidden[h] * (1.0 - a[h] * a[h]);
                gb1[h] += d;
                for i in 0..ni {
                    gw1[h * ni + i] += d * x[i];
                }
            }
        }
        let mut grad = gw1;
        grad.extend(gb1);
        grad.extend(gw2);
        grad.extend(gb2);
        (loss * scale, grad)
    }

    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let out = self.forward_normalized(x);
            total += out.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        }
        total / (xs.len() * self.outputs) as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mlp: Mlp = serde_json::from_str(text)?;
        let ok = mlp.w1.len() == mlp.inputs * mlp.hidden
            && mlp.b1.len() == mlp.hidden
            && mlp.w2.len() == mlp.hidden * mlp.outputs
            && mlp.b2.len() == mlp.outputs
            && mlp.feature_scaling.min.len() == mlp.inputs
            && mlp.label_scaling.min.len() == mlp.outputs
            && mlp.hidden >= 1;
        if !ok {
            return Err(Error::Config("model document has inconsistent shapes".into()));
        }
        if mlp.params().any(|v| !v.is_finite()) {
            return Err(Error::Config("model document has non-finite weights".into()));
        }
        Ok(mlp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 30,
            epochs: 30_000,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 7,
            validation_fraction: 0.15,
            test_fraction: 0.15,
            patience: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    /// RMSE of the validation split in threshold units (unrounded outputs).
    pub validation_rmse: Option<f64>,
    pub test_rmse: Option<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
}

struct Split {
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    raw: Vec<DatasetRow>,
}

fn rmse_in_label_units(mlp: &Mlp, rows: &[DatasetRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for r in rows {
        for (p, &l) in mlp.predict_raw(&r.features).iter().zip(&r.labels) {
            total += (p - l as f64).powi(2);
            n += 1;
        }
    }
    Some((total / n as f64).sqrt())
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    if dataset.len() < 10 {
        return Err(Error::Config(format!(
            "training needs at least 10 rows, dataset has {}",
            dataset.len()
        )));
    }
    if cfg.hidden == 0 {
        return Err(Error::Config("hidden layer must have at least one unit".into()));
    }
    let fractions_ok = (0.0..1.0).contains(&cfg.validation_fraction)
        && (0.0..1.0).contains(&cfg.test_fraction)
        && cfg.validation_fraction + cfg.test_fraction < 1.0;
    if !fractions_ok {
        return Err(Error::Config("validation and test fractions must leave training rows".into()));
    }

    // Canonical order first, so the split depends only on the seed and the row set.
    let mut rows = dataset.rows.clone();
    rows.sort_by(|a, b| {
        a.features
            .iter()
            .zip(&b.features)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.labels.cmp(&b.labels))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rows.shuffle(&mut rng);

    let n = rows.len();
    let n_val = (n as f64 * cfg.validation_fraction).round() as usize;
    let n_test = (n as f64 * cfg.test_fraction).round() as usize;
    let n_train = n - n_val - n_test;

    let mut mlp = Mlp::new(FEATURES, cfg.hidden, dataset.label_count, &mut rng);
    mlp.feature_scaling = dataset.feature_scaling.clone();
    mlp.label_scaling = dataset.label_scaling.clone();

    let encode = |rows: &[DatasetRow]| Split {
        xs: rows.iter().map(|r| mlp.normalize_features(&r.features)).collect(),
        ys: rows
            .iter()
            .map(|r| {
                r.labels
                    .iter()
                    .enumerate()
                    .map(|(o, &l)| dataset.label_scaling.normalize(o, l as f64))
                    .collect()
            })
            .collect(),
        raw: rows.to_vec(),
    };
    let train_set = encode(&rows[..n_train]);
    let val_set = encode(&rows[n_train..n_train + n_val]);
    let test_set = encode(&rows[n_train + n_val..]);

    let mut velocity = vec![0.0; mlp.param_count()];
    let mut best = mlp.clone();
    let mut best_score = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        let (train_loss, grad) = mlp.loss_and_gradient(&train_set.xs, &train_set.ys);
        if !train_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let score = if val_set.xs.is_empty() {
            train_loss
        } else {
            mlp.loss(&val_set.xs, &val_set.ys)
        };
        if !score.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        if score < best_score {
            best_score = score;
            best_epoch = epoch;
            best.clone_from(&mlp);
        } else if cfg.patience.is_some_and(|p| epoch - best_epoch > p) {
            break;
        }
        for ((p, v), g) in mlp.params_mut().zip(velocity.iter_mut()).zip(&grad) {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *p += *v;
        }
        epochs_run = epoch + 1;
    }
    if best.params().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { epoch: epochs_run });
    }

    let report = TrainReport {
        train_loss: best.loss(&train_set.xs, &train_set.ys),
        validation_loss: (!val_set.xs.is_empty()).then(|| best.loss(&val_set.xs, &val_set.ys)),
        validation_rmse: rmse_in_label_units(&best, &val_set.raw),
        test_rmse: rmse_in_label_units(&best, &test_set.raw),
        best_epoch,
        epochs_run,
        train_rows: n_train,
        validation_rows: n_val,
        test_rows: n - n_train - n_val,
    };
    Ok((best, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub features: Features,
    pub real: Vec<i64>,
    pub predicted: Vec<i64>,
    pub abs_error: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Mean absolute error over every `(point, n1)` entry; `None` for an empty table.
    pub mae: Option<f64>,
    pub max_abs_error: Option<i64>,
}

pub fn evaluate_estimator(
    mlp: &Mlp,
    base: &ModelParams,
    points: &[Features],
    opts: &SolveOptions,
) -> Result<ComparisonTable> {
    let rows = points
        .par_iter()
        .map(|f| {
            let model = Model::new(with_features(base, f))?;
            let real = solve(&model, opts)?.policy.levels();
            let predicted = mlp.predict(f);
            let abs_error = real.iter().zip(&predicted).map(|(r, p)| (r - p).abs()).collect();
            Ok(ComparisonRow {
                features: *f,
                real,
                predicted,
                abs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<i64> = rows.iter().flat_map(|r| r.abs_error.iter().copied()).collect();
    let mae = (!errors.is_empty()).then(|| errors.iter().sum::<i64>() as f64 / errors.len() as f64);
    let max_abs_error = errors.iter().copied().max();
    Ok(ComparisonTable {
        rows,
        mae,
        max_abs_error,
    })
}
