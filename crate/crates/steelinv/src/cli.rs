//! Experiment driver: dataset synthesis/ingestion, training of all four
//! models, evaluation, and report generation, with one master seed
//! deriving every sub-seed by documented offsets.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{fit_forest, train_direct_inverse, Forest, ForestParams};
use crate::data::{load_csv, save_csv, split, synth_generate, Dataset, Scaler, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::{
    build_report, functional_eval, input_space_eval, ActorInverse, ComparisonReport,
    ForestInverse, InverseModel, MetricSet, Protocol, ReportRow, Split,
};
use crate::nncore::{Matrix, Mlp, ModelDoc};
use crate::rl::{reward_curve_csv, td3_train, Td3Config};
use crate::training::{
    train_student, train_teacher, LossCurve, TrainConfig, TrainedPair,
};

/// Sub-seed offsets from the master seed.
pub const SEED_OFFSET_TEACHER: u64 = 1;
pub const SEED_OFFSET_STUDENT: u64 = 2;
pub const SEED_OFFSET_RF: u64 = 3;
pub const SEED_OFFSET_MLP_INV: u64 = 4;
pub const SEED_OFFSET_TD3: u64 = 5;
pub const SEED_OFFSET_DATA: u64 = 6;

// ---------------------------------------------------------------------------
// Run configuration (TOML file, flags override)

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub hidden_width: usize,
}

impl From<TrainConfig> for TrainSection {
    fn from(c: TrainConfig) -> Self {
        TrainSection {
            epochs: c.epochs,
            batch_size: c.batch_size,
            lr: c.lr,
            eval_every: c.eval_every,
            hidden_width: c.hidden_width,
        }
    }
}

impl TrainSection {
    fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed,
            eval_every: self.eval_every,
            hidden_width: self.hidden_width,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainConfig::teacher_default().into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_samples: usize,
    pub noise_std: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            n_samples: 5000,
            noise_std: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestSection {
    fn default() -> Self {
        let p = ForestParams::default();
        ForestSection {
            n_trees: p.n_trees,
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
            features_per_split: p.features_per_split,
            bootstrap: p.bootstrap,
        }
    }
}

impl ForestSection {
    fn to_params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            features_per_split: self.features_per_split,
            bootstrap: self.bootstrap,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Section {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub batch: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub buffer_capacity: usize,
    pub actor_hidden: usize,
    pub critic_hidden: usize,
}

impl Default for Td3Section {
    fn default() -> Self {
        let c = Td3Config::default();
        Td3Section {
            total_steps: c.total_steps,
            warmup_steps: c.warmup_steps,
            batch: c.batch,
            actor_lr: c.actor_lr,
            critic_lr: c.critic_lr,
            tau: c.tau,
            policy_delay: c.policy_delay,
            exploration_noise_std: c.exploration_noise_std,
            target_noise_std: c.target_noise_std,
            target_noise_clip: c.target_noise_clip,
            buffer_capacity: c.buffer_capacity,
            actor_hidden: c.actor_hidden,
            critic_hidden: c.critic_hidden,
        }
    }
}

impl Td3Section {
    fn to_config(&self, seed: u64) -> Td3Config {
        Td3Config {
            total_steps: self.total_steps,
            warmup_steps: self.warmup_steps,
            batch: self.batch,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            tau: self.tau,
            policy_delay: self.policy_delay,
            exploration_noise_std: self.exploration_noise_std,
            target_noise_std: self.target_noise_std,
            target_noise_clip: self.target_noise_clip,
            buffer_capacity: self.buffer_capacity,
            actor_hidden: self.actor_hidden,
            critic_hidden: self.critic_hidden,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub test_fraction: f64,
    pub synth: SynthSection,
    pub teacher: TrainSection,
    pub student: TrainSection,
    pub direct_inverse: TrainSection,
    pub forest: ForestSection,
    pub td3: Td3Section,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            test_fraction: 0.2,
            synth: SynthSection::default(),
            teacher: TrainConfig::teacher_default().into(),
            student: TrainConfig::student_default().into(),
            direct_inverse: TrainConfig::direct_inverse_default().into(),
            forest: ForestSection::default(),
            td3: Td3Section::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::io(p.display().to_string(), e))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_samples: self.synth.n_samples,
            seed: self.seed.wrapping_add(SEED_OFFSET_DATA),
            noise_std: self.synth.noise_std,
        }
    }

    pub fn teacher_config(&self) -> TrainConfig {
        self.teacher.to_config(self.seed.wrapping_add(SEED_OFFSET_TEACHER))
    }

    pub fn student_config(&self) -> TrainConfig {
        self.student.to_config(self.seed.wrapping_add(SEED_OFFSET_STUDENT))
    }

    pub fn direct_inverse_config(&self) -> TrainConfig {
        self.direct_inverse
            .to_config(self.seed.wrapping_add(SEED_OFFSET_MLP_INV))
    }

    pub fn forest_params(&self) -> ForestParams {
        self.forest.to_params(self.seed.wrapping_add(SEED_OFFSET_RF))
    }

    pub fn td3_config(&self) -> Td3Config {
        self.td3.to_config(self.seed.wrapping_add(SEED_OFFSET_TD3))
    }
}

// ---------------------------------------------------------------------------
// Artifact documents

pub const TEACHER_SCHEMA_VERSION: u32 = 1;

/// Teacher artifact: model, the scaler fitted on its training split, and
/// its loss curve, so downstream stages can consume one file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherDoc {
    pub schema_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub model: ModelDoc,
    pub scaler: Scaler,
    pub curve: LossCurve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestDoc {
    pub schema_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub forest: Forest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorDoc {
    pub schema_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub model: ModelDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectInverseDoc {
    pub schema_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub model: ModelDoc,
    pub curve: LossCurve,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(doc)?)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// `foo.json -> foo_curve.csv` and friends.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn metric_rows_csv(rows: &[ReportRow], digest: &str) -> String {
    let mut out = format!("# config_digest={digest}\n");
    out.push_str(crate::eval::REPORT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.model, r.protocol, r.split, r.mse, r.mae, r.r2, r.wall_time_s, r.seed
        ));
    }
    out
}

fn row(model: &str, m: &MetricSet, wall: f64, seed: u64, digest: &str) -> ReportRow {
    ReportRow {
        model: model.to_string(),
        protocol: m.protocol,
        split: m.split,
        mse: m.mse,
        mae: m.mae,
        r2: m.r2,
        wall_time_s: wall,
        seed,
        config_digest: digest.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Parser)]
#[command(name = "steelinv", version, about = "Teacher-Student inverse modeling for steel tempering hardness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic many-to-one benchmark as CSV.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the forward Teacher surrogate.
    TrainTeacher {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the inverse Student against a frozen Teacher.
    TrainStudent {
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the regression-forest baseline and evaluate it.
    BaselineRf {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Teacher artifact; enables the functional protocol rows.
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the direct-inverse MLP baseline and evaluate it.
    BaselineMlp {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the TD3 agent against a frozen Teacher.
    TrainTd3 {
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained pair on a dataset under one protocol.
    Evaluate {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect metric CSVs from a run directory into a comparison report.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_teacher(path: &Path) -> Result<(Mlp, Scaler, LossCurve)> {
    let doc: TeacherDoc = read_json(path)?;
    if doc.schema_version != TEACHER_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported teacher schema_version {}",
            doc.schema_version
        )));
    }
    Ok((Mlp::from_doc(&doc.model)?, doc.scaler, doc.curve))
}

fn prepared_splits(data: &Path, cfg: &RunConfig) -> Result<(Dataset, Dataset, Scaler, Dataset, Dataset)> {
    let raw = load_csv(data)?;
    let (train_raw, test_raw) = split(&raw, cfg.test_fraction, cfg.seed.wrapping_add(SEED_OFFSET_DATA))?;
    let scaler = Scaler::fit(&train_raw)?;
    let train = scaler.transform_dataset(&train_raw)?;
    let test = scaler.transform_dataset(&test_raw)?;
    Ok((train, test, scaler, train_raw, test_raw))
}

fn eval_inverse_both(
    model: &dyn InverseModel,
    teacher: Option<&Mlp>,
    scaler: &Scaler,
    train_raw: &Dataset,
    test_raw: &Dataset,
) -> Result<Vec<MetricSet>> {
    let mut out = vec![
        input_space_eval(model, train_raw, scaler, Split::Train)?,
        input_space_eval(model, test_raw, scaler, Split::Test)?,
    ];
    if let Some(t) = teacher {
        let train_targets = Matrix::column(&scaler.transform_targets(&train_raw.targets))?;
        let test_targets = Matrix::column(&scaler.transform_targets(&test_raw.targets))?;
        out.push(functional_eval(model, t, scaler, &train_targets, Split::Train)?);
        out.push(functional_eval(model, t, scaler, &test_targets, Split::Test)?);
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            n,
            noise_std,
            seed,
            config,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = n {
                cfg.synth.n_samples = n;
            }
            if let Some(ns) = noise_std {
                cfg.synth.noise_std = ns;
            }
            let ds = synth_generate(&cfg.synth_config())?;
            save_csv(&ds, &out, Some(&cfg.digest()))?;
            println!("wrote {} rows to {}", ds.len(), out.display());
        }

        Command::TrainTeacher {
            data,
            config,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let digest = cfg.digest();
            let (train, test, scaler, _, _) = prepared_splits(&data, &cfg)?;
            let started = Instant::now();
            let (model, curve) = train_teacher(&train, &test, &cfg.teacher_config())?;
            let wall = started.elapsed().as_secs_f64();
            let doc = TeacherDoc {
                schema_version: TEACHER_SCHEMA_VERSION,
                config_digest: digest.clone(),
                seed: cfg.seed,
                model: model.to_doc(),
                scaler,
                curve: curve.clone(),
            };
            write_json(&out, &doc)?;
            write_text(&sibling(&out, "_curve.csv"), &curve.to_csv(Some(&digest)))?;
            println!(
                "teacher trained in {wall:.1}s, final val loss {:.6}",
                curve.final_val_loss().unwrap_or(f64::NAN)
            );
        }

        Command::TrainStudent {
            teacher,
            config,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let digest = cfg.digest();
            let (teacher_model, scaler, teacher_curve) = load_teacher(&teacher)?;
            let started = Instant::now();
            let (student, curve) = train_student(&teacher_model, &scaler, &cfg.student_config())?;
            let wall = started.elapsed().as_secs_f64();
            let pair = TrainedPair {
                teacher_param_digest: teacher_model.param_digest(),
                teacher: teacher_model,
                student,
                scaler,
                teacher_curve,
                student_curve: curve.clone(),
                config_digest: digest.clone(),
            };
            write_json(&out, &pair.to_doc())?;
            write_text(&sibling(&out, "_curve.csv"), &curve.to_csv(Some(&digest)))?;
            println!(
                "student trained in {wall:.1}s, final val loss {:.6}",
                curve.final_val_loss().unwrap_or(f64::NAN)
            );
        }

        Command::BaselineRf {
            data,
            config,
            seed,
            teacher,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let digest = cfg.digest();
            let (_, _, scaler, train_raw, test_raw) = prepared_splits(&data, &cfg)?;
            let teacher_model = teacher.map(|p| load_teacher(&p)).transpose()?.map(|t| t.0);
            let started = Instant::now();
            let forest = fit_forest(&train_raw.targets, &train_raw.features, &cfg.forest_params())?;
            let wall = started.elapsed().as_secs_f64();
            let doc = ForestDoc {
                schema_version: 1,
                config_digest: digest.clone(),
                seed: cfg.seed,
                forest,
            };
            write_json(&out, &doc)?;
            let model = ForestInverse {
                forest: &doc.forest,
                scaler: &scaler,
            };
            let metrics = eval_inverse_both(&model, teacher_model.as_ref(), &scaler, &train_raw, &test_raw)?;
            let rows: Vec<ReportRow> = metrics
                .iter()
                .map(|m| row("random_forest", m, wall, cfg.seed, &digest))
                .collect();
            write_text(&sibling(&out, "_metrics.csv"), &metric_rows_csv(&rows, &digest))?;
            println!("forest fitted in {wall:.1}s");
        }

        Command::BaselineMlp {
            data,
            config,
            seed,
            teacher,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let digest = cfg.digest();
            let (train, test, scaler, train_raw, test_raw) = prepared_splits(&data, &cfg)?;
            let teacher_model = teacher.map(|p| load_teacher(&p)).transpose()?.map(|t| t.0);
            let started = Instant::now();
            let (model, curve) = train_direct_inverse(&train, &test, &cfg.direct_inverse_config())?;
            let wall = started.elapsed().as_secs_f64();
            let doc = DirectInverseDoc {
                schema_version: 1,
                config_digest: digest.clone(),
                seed: cfg.seed,
                model: model.to_doc(),
                curve: curve.clone(),
            };
            write_json(&out, &doc)?;
            write_text(&sibling(&out, "_curve.csv"), &curve.to_csv(Some(&digest)))?;
            let metrics = eval_inverse_both(&model, teacher_model.as_ref(), &scaler, &train_raw, &test_raw)?;
            let rows: Vec<ReportRow> = metrics
                .iter()
                .map(|m| row("direct_mlp", m, wall, cfg.seed, &digest))
                .collect();
            write_text(&sibling(&out, "_metrics.csv"), &metric_rows_csv(&rows, &digest))?;
            println!("direct-inverse MLP trained in {wall:.1}s");
        }

        Command::TrainTd3 {
            teacher,
            config,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let digest = cfg.digest();
            let (teacher_model, scaler, _) = load_teacher(&teacher)?;
            let started = Instant::now();
            let (actor, curve) = td3_train(&teacher_model, &cfg.td3_config())?;
            let wall = started.elapsed().as_secs_f64();
            let doc = ActorDoc {
                schema_version: 1,
                config_digest: digest.clone(),
                seed: cfg.seed,
                model: actor.to_doc(),
            };
            write_json(&out, &doc)?;
            write_text(&sibling(&out, "_reward_curve.csv"), &reward_curve_csv(&curve, Some(&digest)))?;
            // functional metrics on a fresh deterministic target grid
            let targets = crate::training::student_validation_targets(1000);
            let m = functional_eval(&ActorInverse(&actor), &teacher_model, &scaler, &targets, Split::Test)?;
            let rows = vec![row("td3", &m, wall, cfg.seed, &digest)];
            write_text(&sibling(&out, "_metrics.csv"), &metric_rows_csv(&rows, &digest))?;
            println!("td3 trained in {wall:.1}s, functional test MSE {:.4}", m.mse);
        }

        Command::Evaluate {
            pair,
            data,
            protocol,
            out,
        } => {
            let protocol: Protocol = protocol.parse()?;
            let pair = TrainedPair::from_json(&read_text(&pair)?)?;
            let raw = load_csv(&data)?;
            let m = match protocol {
                Protocol::Functional => {
                    let targets = Matrix::column(&pair.scaler.transform_targets(&raw.targets))?;
                    functional_eval(&pair.student, &pair.teacher, &pair.scaler, &targets, Split::Test)?
                }
                Protocol::InputSpace => {
                    input_space_eval(&pair.student, &raw, &pair.scaler, Split::Test)?
                }
            };
            let rows = vec![row("teacher_student", &m, 0.0, 0, &pair.config_digest)];
            write_text(&out, &metric_rows_csv(&rows, &pair.config_digest))?;
            println!(
                "teacher_student {protocol}: mse {:.4} mae {:.4} r2 {:.4}",
                m.mse, m.mae, m.r2
            );
        }

        Command::Report { runs, out } => {
            let out_dir = out.unwrap_or_else(|| runs.clone());
            let mut rows = Vec::new();
            let mut curve_files = Vec::new();
            let entries = std::fs::read_dir(&runs)
                .map_err(|e| Error::io(runs.display().to_string(), e))?;
            let mut names: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            names.sort();
            for path in names {
                let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                    continue;
                };
                if name.ends_with("_metrics.csv") {
                    rows.extend(ComparisonReport::parse_csv(&read_text(&path)?)?);
                } else if name.ends_with("_curve.csv") {
                    curve_files.push(path.clone());
                }
            }
            if rows.is_empty() {
                return Err(Error::Config(format!(
                    "no *_metrics.csv files found under {}",
                    runs.display()
                )));
            }
            let report = build_report(rows)?;
            write_text(&out_dir.join("report.csv"), &report.to_csv(None))?;
            write_text(&out_dir.join("report.txt"), &report.to_text_table())?;
            write_text(&out_dir.join("plots.gp"), &plot_script(&curve_files))?;
            println!("{}", report.to_text_table());
        }
    }
    Ok(())
}

/// gnuplot script rendering every discovered loss/reward curve.
fn plot_script(curves: &[PathBuf]) -> String {
    let mut out = String::new();
    out.push_str("set datafile separator \",\"\n");
    out.push_str("set datafile commentschars \"#\"\n");
    out.push_str("set terminal svg size 800,500\n");
    for path in curves {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
        let reward = name.ends_with("_reward_curve");
        out.push_str(&format!("set output \"{name}.svg\"\n"));
        if reward {
            out.push_str(&format!(
                "set title \"{name}\"\nset xlabel \"step\"\nset ylabel \"reward\"\n\
                 plot \"{}\" using 1:2 with lines title \"raw\", \
                 \"{}\" using 1:3 with lines title \"smoothed\"\n",
                path.display(),
                path.display()
            ));
        } else {
            out.push_str(&format!(
                "set title \"{name}\"\nset xlabel \"epoch\"\nset ylabel \"loss\"\nset logscale y\n\
                 plot \"{}\" using 1:2 with lines title \"train\", \
                 \"{}\" using 1:3 with lines title \"val\"\nunset logscale y\n",
                path.display(),
                path.display()
            ));
        }
    }
    out
}

/// Process exit code policy: 0 success, 1 runtime failure, 2 usage/config.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Ingestion { .. } | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}
