//! Two-phase training: supervised Teacher fitting, then Student fitting
//! against the frozen Teacher with the loss taken on the Teacher's output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Scaler, N_FEATURES};
use crate::error::{Error, Result};
use crate::nncore::{adam_step, mse, AdamState, Matrix, Mlp, ModelDoc, OutputMode};

pub const DEFAULT_HIDDEN_WIDTH: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Epochs for supervised training; total steps for Student training.
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Curve recording cadence, in epochs (or steps for the Student).
    pub eval_every: usize,
    pub hidden_width: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // epochs == 0 is allowed and returns the initialization untouched
        if self.batch_size == 0 || self.eval_every == 0 || self.hidden_width == 0 || self.lr <= 0.0 {
            return Err(Error::Config(
                "TrainConfig fields must all be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn teacher_default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            eval_every: 1,
            hidden_width: DEFAULT_HIDDEN_WIDTH,
        }
    }

    pub fn student_default() -> Self {
        TrainConfig {
            epochs: 15_000,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            eval_every: 100,
            hidden_width: DEFAULT_HIDDEN_WIDTH,
        }
    }

    pub fn direct_inverse_default() -> Self {
        TrainConfig {
            epochs: 1000,
            ..TrainConfig::teacher_default()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LossCurve {
    pub points: Vec<CurvePoint>,
}

impl LossCurve {
    pub fn final_val_loss(&self) -> Option<f64> {
        self.points.last().map(|p| p.val_loss)
    }

    /// CSV body: `epoch,train_loss,val_loss`, with an optional digest comment.
    pub fn to_csv(&self, config_digest: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(d) = config_digest {
            out.push_str(&format!("# config_digest={d}\n"));
        }
        out.push_str("epoch,train_loss,val_loss\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.epoch, p.train_loss, p.val_loss));
        }
        out
    }
}

fn gather_rows(m: &Matrix, ids: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(ids.len(), m.cols());
    for (k, &i) in ids.iter().enumerate() {
        out.row_mut(k).copy_from_slice(m.row(i));
    }
    out
}

fn shuffled_indices(n: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Minibatch MSE training of `net` on (x, y) with Adam; validation loss
/// is the full-batch MSE on (x_val, y_val). Aborts on non-finite loss.
pub fn train_supervised(
    net: &mut Mlp,
    x: &Matrix,
    y: &Matrix,
    x_val: &Matrix,
    y_val: &Matrix,
    cfg: &TrainConfig,
) -> Result<LossCurve> {
    cfg.validate()?;
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::dim("train_supervised", format!("{n} targets"), format!("{}", y.rows())));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net, cfg.lr);
    let mut curve = LossCurve::default();

    for epoch in 1..=cfg.epochs {
        let idx = shuffled_indices(n, &mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in idx.chunks(cfg.batch_size) {
            let xb = gather_rows(x, chunk);
            let yb = gather_rows(y, chunk);
            let (pred, cache) = net.forward(&xb)?;
            let (loss, grad) = mse(&pred, &yb)?;
            if !loss.is_finite() {
                return Err(Error::non_finite(format!(
                    "train_supervised loss at epoch {epoch}, batch {batches}"
                )));
            }
            let tape = net.backward(&cache, &grad)?;
            adam_step(net, &tape, &mut adam)?;
            epoch_loss += loss;
            batches += 1;
        }
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let val_pred = net.predict(x_val)?;
            let (val_loss, _) = mse(&val_pred, y_val)?;
            if !val_loss.is_finite() {
                return Err(Error::non_finite(format!(
                    "train_supervised val loss at epoch {epoch}"
                )));
            }
            curve.points.push(CurvePoint {
                epoch,
                train_loss: epoch_loss / batches.max(1) as f64,
                val_loss,
            });
        }
    }
    Ok(curve)
}

fn targets_as_matrix(t: &[f64]) -> Matrix {
    Matrix::column(t).expect("finite targets")
}

/// Supervised Teacher training on normalized data (13 features -> hardness).
pub fn train_teacher(train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, LossCurve)> {
    if !train.normalized || !val.normalized {
        return Err(Error::Invariant("train_teacher expects normalized datasets".into()));
    }
    let mut net = Mlp::init(N_FEATURES, cfg.hidden_width, 1, OutputMode::Linear, cfg.seed);
    let curve = train_supervised(
        &mut net,
        &train.features,
        &targets_as_matrix(&train.targets),
        &val.features,
        &targets_as_matrix(&val.targets),
        cfg,
    )?;
    Ok((net, curve))
}

/// Fixed validation grid for the Student: evenly spaced targets in [0, 1].
pub fn student_validation_targets(n: usize) -> Matrix {
    let mut out = Matrix::zeros(n, 1);
    for i in 0..n {
        out.set(i, 0, i as f64 / (n - 1).max(1) as f64);
    }
    out
}

pub const STUDENT_VAL_GRID: usize = 256;

/// Student training against a frozen Teacher. Per step: sample a batch of
/// normalized targets, push them through Student then Teacher, take the MSE
/// between the Teacher's output and the targets, and backpropagate through
/// the Teacher's input gradient into the Student. Only Student parameters
/// move; the Teacher digest is checked before and after.
pub fn train_student(teacher: &Mlp, scaler: &Scaler, cfg: &TrainConfig) -> Result<(Mlp, LossCurve)> {
    cfg.validate()?;
    let digest_before = teacher.param_digest();
    let out_width = teacher.in_width();
    let mut student = Mlp::init(
        teacher.out_width(),
        cfg.hidden_width,
        out_width,
        OutputMode::Sigmoid,
        cfg.seed,
    );
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = AdamState::new(&student, cfg.lr);
    let mut curve = LossCurve::default();
    let val_targets = student_validation_targets(STUDENT_VAL_GRID);

    let mut window_loss = 0.0;
    let mut window_n = 0usize;
    for step in 1..=cfg.epochs {
        let y = scaler.sample_targets(cfg.batch_size, &mut rng);
        let (x_hat, s_cache) = student.forward(&y)?;
        let (y_hat, t_cache) = teacher.forward(&x_hat)?;
        let (loss, dl_dyhat) = mse(&y_hat, &y)?;
        if !loss.is_finite() {
            return Err(Error::non_finite(format!("train_student loss at step {step}")));
        }
        let teacher_tape = teacher.backward(&t_cache, &dl_dyhat)?;
        let student_tape = student.backward(&s_cache, &teacher_tape.input_grad)?;
        adam_step(&mut student, &student_tape, &mut adam)?;
        window_loss += loss;
        window_n += 1;

        if step % cfg.eval_every == 0 || step == cfg.epochs {
            let x_val = student.predict(&val_targets)?;
            let y_val = teacher.predict(&x_val)?;
            let (val_loss, _) = mse(&y_val, &val_targets)?;
            if !val_loss.is_finite() {
                return Err(Error::non_finite(format!(
                    "train_student val loss at step {step}"
                )));
            }
            curve.points.push(CurvePoint {
                epoch: step,
                train_loss: window_loss / window_n as f64,
                val_loss,
            });
            window_loss = 0.0;
            window_n = 0;
        }
    }

    if teacher.param_digest() != digest_before {
        return Err(Error::Invariant(
            "teacher parameters changed during student training".into(),
        ));
    }
    Ok((student, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};

    fn quick_cfg(epochs: usize, hidden: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 32,
            lr: 1e-2,
            seed,
            eval_every: 10.min(epochs.max(1)),
            hidden_width: hidden,
        }
    }

    /// Hardness as an exact linear function of the features.
    fn linear_dataset(n: usize, seed: u64) -> (Dataset, Dataset) {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..N_FEATURES).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: f64 = row.iter().enumerate().map(|(i, v)| (i as f64 * 0.1 - 0.5) * v).sum();
            rows.push(row);
            targets.push(0.5 + 0.2 * y);
        }
        let k = (n * 4 / 5).max(1);
        let mk = |lo: usize, hi: usize| Dataset {
            features: Matrix::from_rows(&rows[lo..hi]).unwrap(),
            targets: targets[lo..hi].to_vec(),
            normalized: true,
        };
        (mk(0, k), mk(k.min(n - 1), n))
    }

    fn identity_teacher() -> Mlp {
        let mut net = Mlp::zeros(1, 1, 1, OutputMode::Linear);
        net.input_proj.weight.set(0, 0, 1.0);
        net.head.weight.set(0, 0, 1.0);
        net
    }

    #[test]
    fn teacher_fits_exact_linear_map() {
        let (train, val) = linear_dataset(400, 1);
        let cfg = quick_cfg(500, 64, 2);
        let (_, curve) = train_teacher(&train, &val, &cfg).unwrap();
        let last = curve.points.last().unwrap();
        assert!(last.train_loss < 5e-4, "train loss {}", last.train_loss);
    }

    #[test]
    fn teacher_memorizes_single_sample() {
        let (train, _) = linear_dataset(1, 3);
        let cfg = quick_cfg(300, 16, 4);
        let (net, _) = train_teacher(&train, &train, &cfg).unwrap();
        let pred = net.predict(&train.features).unwrap();
        assert!((pred.get(0, 0) - train.targets[0]).abs() < 1e-2);
    }

    #[test]
    fn teacher_rejects_raw_data() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 10,
            seed: 1,
            noise_std: 0.1,
        })
        .unwrap();
        assert!(train_teacher(&ds, &ds, &quick_cfg(1, 8, 1)).is_err());
    }

    #[test]
    fn student_learns_identity_through_identity_teacher() {
        let teacher = identity_teacher();
        let scaler = unit_scaler();
        let mut cfg = quick_cfg(2000, 16, 5);
        cfg.eval_every = 100;
        let (student, curve) = train_student(&teacher, &scaler, &cfg).unwrap();
        let last = curve.points.last().unwrap();
        assert!(last.val_loss < 1e-3, "val loss {}", last.val_loss);
        // student(y) ~= y on [0,1]
        let grid = student_validation_targets(11);
        let out = student.predict(&grid).unwrap();
        for i in 1..10 {
            assert!((out.get(i, 0) - grid.get(i, 0)).abs() < 0.1);
        }
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let teacher = identity_teacher();
        let scaler = unit_scaler();
        let cfg = quick_cfg(0, 8, 6);
        let (student, curve) = train_student(&teacher, &scaler, &cfg).unwrap();
        let fresh = Mlp::init(1, 8, 1, OutputMode::Sigmoid, 6);
        assert_eq!(student.param_digest(), fresh.param_digest());
        assert!(curve.points.is_empty());
    }

    #[test]
    fn teacher_digest_unchanged_by_student_training() {
        let (train, val) = linear_dataset(100, 7);
        let (teacher, _) = train_teacher(&train, &val, &quick_cfg(20, 16, 8)).unwrap();
        let digest = teacher.param_digest();
        let (_, _) = train_student(&teacher, &unit_scaler(), &quick_cfg(200, 16, 9)).unwrap();
        assert_eq!(teacher.param_digest(), digest);
    }

    #[test]
    fn pair_json_round_trip() {
        let teacher = identity_teacher();
        let scaler = unit_scaler();
        let (student, curve) = train_student(&teacher, &scaler, &quick_cfg(50, 8, 10)).unwrap();
        let pair = TrainedPair {
            teacher_param_digest: teacher.param_digest(),
            teacher,
            student,
            scaler,
            teacher_curve: LossCurve::default(),
            student_curve: curve,
            config_digest: "d".into(),
        };
        let json = pair.to_json().unwrap();
        let back = TrainedPair::from_json(&json).unwrap();
        assert_eq!(back.teacher.param_digest(), pair.teacher_param_digest);
        assert_eq!(back.student.param_digest(), pair.student.param_digest());
    }

    #[test]
    fn tampered_pair_fails_digest_check() {
        let teacher = identity_teacher();
        let pair = TrainedPair {
            teacher_param_digest: teacher.param_digest(),
            teacher: teacher.clone(),
            student: teacher.clone(),
            scaler: unit_scaler(),
            teacher_curve: LossCurve::default(),
            student_curve: LossCurve::default(),
            config_digest: "d".into(),
        };
        let mut doc = pair.to_doc();
        doc.teacher.layers[0].weight[0][0] = 2.0;
        assert!(TrainedPair::from_doc(doc).is_err());
    }

    fn unit_scaler() -> Scaler {
        Scaler {
            feature_min: vec![0.0; N_FEATURES],
            feature_max: vec![1.0; N_FEATURES],
            target_min: 0.0,
            target_max: 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// TrainedPair persistence

pub const PAIR_SCHEMA_VERSION: u32 = 1;

/// Frozen Teacher plus trained Student, their scaler, loss curves, and
/// the Teacher parameter digest taken at freeze time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedPairDoc {
    pub schema_version: u32,
    pub config_digest: String,
    pub teacher_param_digest: String,
    pub teacher: ModelDoc,
    pub student: ModelDoc,
    pub scaler: Scaler,
    pub teacher_curve: LossCurve,
    pub student_curve: LossCurve,
}

pub struct TrainedPair {
    pub teacher: Mlp,
    pub student: Mlp,
    pub scaler: Scaler,
    pub teacher_curve: LossCurve,
    pub student_curve: LossCurve,
    pub teacher_param_digest: String,
    pub config_digest: String,
}

impl TrainedPair {
    pub fn to_doc(&self) -> TrainedPairDoc {
        TrainedPairDoc {
            schema_version: PAIR_SCHEMA_VERSION,
            config_digest: self.config_digest.clone(),
            teacher_param_digest: self.teacher_param_digest.clone(),
            teacher: self.teacher.to_doc(),
            student: self.student.to_doc(),
            scaler: self.scaler.clone(),
            teacher_curve: self.teacher_curve.clone(),
            student_curve: self.student_curve.clone(),
        }
    }

    pub fn from_doc(doc: TrainedPairDoc) -> Result<Self> {
        if doc.schema_version != PAIR_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported pair schema_version {}",
                doc.schema_version
            )));
        }
        let teacher = Mlp::from_doc(&doc.teacher)?;
        if teacher.param_digest() != doc.teacher_param_digest {
            return Err(Error::Invariant(
                "stored teacher does not match its frozen digest".into(),
            ));
        }
        Ok(TrainedPair {
            teacher,
            student: Mlp::from_doc(&doc.student)?,
            scaler: doc.scaler,
            teacher_curve: doc.teacher_curve,
            student_curve: doc.student_curve,
            teacher_param_digest: doc.teacher_param_digest,
            config_digest: doc.config_digest,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        TrainedPair::from_doc(serde_json::from_str(json)?)
    }
}
