//! Tabular ingestion for the 13-feature steel schema, invertible
//! min-max normalization, seeded splits, target sampling, and a
//! synthetic generator that is many-to-one by construction.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::Matrix;

pub const N_FEATURES: usize = 13;

/// Ordered feature names: two tempering process parameters followed by
/// eleven elemental percentages.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "tempering_time_s",
    "tempering_temp_C",
    "C",
    "Mn",
    "P",
    "S",
    "Si",
    "Ni",
    "Cr",
    "Mo",
    "V",
    "Al",
    "Cu",
];

pub const TARGET_NAME: &str = "hardness_HRC";

/// Index of the first composition column within `FEATURE_NAMES`.
pub const COMPOSITION_START: usize = 2;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub normalized: bool,
}

impl Dataset {
    pub fn new_raw(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        let ds = Dataset {
            features,
            targets,
            normalized: false,
        };
        ds.validate_raw()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn validate_raw(&self) -> Result<()> {
        if self.features.rows() == 0 {
            return Err(Error::Invariant("empty dataset".into()));
        }
        if self.features.cols() != N_FEATURES || self.features.rows() != self.targets.len() {
            return Err(Error::dim(
                "Dataset",
                format!("{}x{N_FEATURES} features", self.targets.len()),
                format!("{}x{}", self.features.rows(), self.features.cols()),
            ));
        }
        self.features.check_finite("Dataset features")?;
        for (i, row) in (0..self.features.rows()).map(|i| (i, self.features.row(i))) {
            if row[0] <= 0.0 {
                return Err(Error::Ingestion {
                    row: i,
                    column: FEATURE_NAMES[0].into(),
                    message: format!("tempering time must be > 0, got {}", row[0]),
                });
            }
            for c in COMPOSITION_START..N_FEATURES {
                if row[c] < 0.0 {
                    return Err(Error::Ingestion {
                        row: i,
                        column: FEATURE_NAMES[c].into(),
                        message: format!("composition must be >= 0, got {}", row[c]),
                    });
                }
            }
        }
        for (i, &t) in self.targets.iter().enumerate() {
            if !t.is_finite() || !(0.0..=70.0).contains(&t) {
                return Err(Error::Ingestion {
                    row: i,
                    column: TARGET_NAME.into(),
                    message: format!("hardness must lie in [0, 70] HRC, got {t}"),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scaler

/// Per-column min-max scaler fitted on the training split only.
/// Columns with `max == min` transform to the constant 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.5
    }
}

fn unscale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        min + v * (max - min)
    } else {
        min
    }
}

impl Scaler {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.normalized {
            return Err(Error::Invariant("Scaler::fit expects raw data".into()));
        }
        let mut feature_min = vec![f64::INFINITY; N_FEATURES];
        let mut feature_max = vec![f64::NEG_INFINITY; N_FEATURES];
        for i in 0..train.len() {
            for (c, &v) in train.features.row(i).iter().enumerate() {
                feature_min[c] = feature_min[c].min(v);
                feature_max[c] = feature_max[c].max(v);
            }
        }
        let target_min = train.targets.iter().cloned().fold(f64::INFINITY, f64::min);
        let target_max = train
            .targets
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Scaler {
            feature_min,
            feature_max,
            target_min,
            target_max,
        })
    }

    pub fn transform_features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != N_FEATURES {
            return Err(Error::dim(
                "Scaler::transform_features",
                format!("{N_FEATURES} cols"),
                format!("{}", x.cols()),
            ));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = scale(*v, self.feature_min[c], self.feature_max[c]);
            }
        }
        Ok(out)
    }

    pub fn inverse_transform_features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != N_FEATURES {
            return Err(Error::dim(
                "Scaler::inverse_transform_features",
                format!("{N_FEATURES} cols"),
                format!("{}", x.cols()),
            ));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (c, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = unscale(*v, self.feature_min[c], self.feature_max[c]);
            }
        }
        Ok(out)
    }

    pub fn transform_targets(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .map(|&v| scale(v, self.target_min, self.target_max))
            .collect()
    }

    pub fn inverse_transform_targets(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .map(|&v| unscale(v, self.target_min, self.target_max))
            .collect()
    }

    pub fn transform_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.normalized {
            return Err(Error::Invariant("dataset already normalized".into()));
        }
        Ok(Dataset {
            features: self.transform_features(&ds.features)?,
            targets: self.transform_targets(&ds.targets),
            normalized: true,
        })
    }

    /// Uniform samples over the normalized target range `[0, 1]`,
    /// shaped batch x 1, deterministic per RNG stream state.
    pub fn sample_targets(&self, batch: usize, rng: &mut ChaCha12Rng) -> Matrix {
        let mut out = Matrix::zeros(batch, 1);
        for i in 0..batch {
            out.set(i, 0, rng.random_range(0.0..1.0));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Synthetic generator

/// Tempering temperature range, °C.
pub const TEMP_RANGE: (f64, f64) = (200.0, 700.0);
/// log10 of tempering time in seconds (time is log-uniform over 1e3..1e5 s).
pub const LOG_TIME_RANGE: (f64, f64) = (3.0, 5.0);

/// Uniform sampling ranges per element, schema order C..Cu.
pub const COMPOSITION_RANGES: [(f64, f64); 11] = [
    (0.20, 0.60),   // C
    (0.30, 1.00),   // Mn
    (0.005, 0.040), // P
    (0.005, 0.040), // S
    (0.15, 0.40),   // Si
    (0.0, 2.0),     // Ni
    (0.0, 1.5),     // Cr
    (0.0, 0.5),     // Mo
    (0.0, 0.3),     // V
    (0.01, 0.06),   // Al
    (0.0, 0.5),     // Cu
];

/// Linear hardness contribution per unit of element above its range midpoint.
pub const COMPOSITION_COEFFS: [f64; 11] = [
    15.0,  // C
    3.0,   // Mn
    20.0,  // P
    -10.0, // S
    4.0,   // Si
    1.0,   // Ni
    2.0,   // Cr
    4.0,   // Mo
    6.0,   // V
    -5.0,  // Al
    1.0,   // Cu
];

/// Tempering-parameter bounds implied by `TEMP_RANGE` and `LOG_TIME_RANGE`.
pub const HJ_MIN: f64 = 10.88245;
pub const HJ_MAX: f64 = 24.32875;

pub const HARDNESS_MIN: f64 = 20.0;
pub const HARDNESS_MAX: f64 = 65.0;

/// Hollomon-Jaffe-style tempering parameter, computed from the stored
/// row representation so it can be recomputed bit-exactly from a CSV.
pub fn hj_param(temp_c: f64, time_s: f64) -> f64 {
    (temp_c + 273.15) * (20.0 + time_s.log10()) / 1000.0
}

/// The generator quantizes the tempering parameter to a 1e-4 grid; the
/// hardness map depends on (temperature, time) only through this value,
/// which makes the map exactly many-to-one and lets tests group rows by
/// bit-equal keys.
pub fn quantize_hj(p: f64) -> f64 {
    (p * 1e4).round() / 1e4
}

fn hardness_from(pq: f64, composition: &[f64]) -> f64 {
    let base = HARDNESS_MAX - 28.0 * (pq - HJ_MIN) / (HJ_MAX - HJ_MIN);
    let mut comp_effect = 0.0;
    for (i, &x) in composition.iter().enumerate() {
        let (lo, hi) = COMPOSITION_RANGES[i];
        comp_effect += COMPOSITION_COEFFS[i] * (x - 0.5 * (lo + hi));
    }
    base + comp_effect
}

/// Noiseless hardness of a raw feature row, as the generator computes it.
pub fn synth_hardness(row: &[f64]) -> f64 {
    let pq = quantize_hj(hj_param(row[1], row[0]));
    (hardness_from(pq, &row[COMPOSITION_START..])).clamp(HARDNESS_MIN, HARDNESS_MAX)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Gaussian noise added to hardness, in HRC units.
    pub noise_std: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_samples: 5000,
            seed: 42,
            noise_std: 0.5,
        }
    }
}

/// Generates the synthetic benchmark. Rows come in pairs: every odd row
/// shares its quantized tempering parameter and composition with the row
/// before it while differing in (temperature, time), so the many-to-one
/// structure is present by construction, not just statistically.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.n_samples == 0 {
        return Err(Error::Config("n_samples must be >= 1".into()));
    }
    if cfg.noise_std < 0.0 {
        return Err(Error::Config("noise_std must be >= 0".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_std)
        .map_err(|e| Error::Config(format!("noise_std: {e}")))?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_samples);
    let mut targets = Vec::with_capacity(cfg.n_samples);

    let mut i = 0;
    while i < cfg.n_samples {
        // Fresh row.
        let temp = rng.random_range(TEMP_RANGE.0..TEMP_RANGE.1);
        let w = rng.random_range(LOG_TIME_RANGE.0..LOG_TIME_RANGE.1);
        let time = 10f64.powf(w);
        let comp: Vec<f64> = COMPOSITION_RANGES
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        let mut row = vec![time, temp];
        row.extend_from_slice(&comp);
        let pq = quantize_hj(hj_param(temp, time));
        let clean = hardness_from(pq, &comp);
        let eps = if cfg.noise_std > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        rows.push(row);
        targets.push((clean + eps).clamp(HARDNESS_MIN, HARDNESS_MAX));
        i += 1;

        if i >= cfg.n_samples {
            break;
        }

        // Sibling row: same quantized tempering parameter and composition,
        // different (temperature, time). The recomputed quantized parameter
        // must round-trip bit-exactly, so resample until it does.
        let t_lo = (1000.0 * pq / (20.0 + LOG_TIME_RANGE.1) - 273.15).max(TEMP_RANGE.0);
        let t_hi = (1000.0 * pq / (20.0 + LOG_TIME_RANGE.0) - 273.15).min(TEMP_RANGE.1);
        let mut placed = false;
        for _ in 0..1000 {
            let temp2 = rng.random_range(t_lo..t_hi);
            let w2 = 1000.0 * pq / (temp2 + 273.15) - 20.0;
            let time2 = 10f64.powf(w2);
            if time2 <= 0.0 || !time2.is_finite() {
                continue;
            }
            if quantize_hj(hj_param(temp2, time2)) != pq {
                continue;
            }
            let mut row2 = vec![time2, temp2];
            row2.extend_from_slice(&comp);
            let eps2 = if cfg.noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            rows.push(row2);
            targets.push((clean + eps2).clamp(HARDNESS_MIN, HARDNESS_MAX));
            i += 1;
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Invariant(
                "synth_generate: could not place a tempering-parameter sibling".into(),
            ));
        }
    }

    Dataset::new_raw(Matrix::from_rows(&rows)?, targets)
}

// ---------------------------------------------------------------------------
// Split

/// Seeded shuffle then partition into (train, test).
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction <= 0.0 {
        return Err(Error::Config(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.len();
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let take = |ids: &[usize]| -> Result<Dataset> {
        let rows: Vec<Vec<f64>> = ids.iter().map(|&i| ds.features.row(i).to_vec()).collect();
        let targets: Vec<f64> = ids.iter().map(|&i| ds.targets[i]).collect();
        Ok(Dataset {
            features: Matrix::from_rows(&rows)?,
            targets,
            normalized: ds.normalized,
        })
    };
    let test = take(&idx[..n_test])?;
    let train = take(&idx[n_test..])?;
    Ok((train, test))
}

// ---------------------------------------------------------------------------
// CSV

/// Writes the dataset in the canonical CSV layout. `digest` lines are
/// prepended as `#`-comments when given.
pub fn save_csv(ds: &Dataset, path: &Path, config_digest: Option<&str>) -> Result<()> {
    let mut out = String::new();
    if let Some(d) = config_digest {
        out.push_str(&format!("# config_digest={d}\n"));
    }
    out.push_str(&FEATURE_NAMES.join(","));
    out.push(',');
    out.push_str(TARGET_NAME);
    out.push('\n');
    for i in 0..ds.len() {
        let row = ds.features.row(i);
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", ds.targets[i]));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Loads a raw dataset from CSV. The header must match the canonical
/// schema (case-insensitive); `#` lines are skipped.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Invariant("empty dataset".into()))?;
    let expected: Vec<String> = FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once(TARGET_NAME.to_string()))
        .collect();
    let got: Vec<&str> = header.split(',').map(|s| s.trim()).collect();
    if got.len() != expected.len() {
        return Err(Error::Ingestion {
            row: 1,
            column: "header".into(),
            message: format!("expected {} columns, got {}", expected.len(), got.len()),
        });
    }
    for (e, g) in expected.iter().zip(&got) {
        if !e.eq_ignore_ascii_case(g) {
            return Err(Error::Ingestion {
                row: 1,
                column: e.clone(),
                message: format!("header column mismatch: expected {e}, got {g}"),
            });
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    for (line_idx, line) in lines {
        let cells: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if cells.len() != expected.len() {
            return Err(Error::Ingestion {
                row: line_idx + 1,
                column: "row".into(),
                message: format!("expected {} cells, got {}", expected.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(N_FEATURES);
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Ingestion {
                row: line_idx + 1,
                column: expected[c].clone(),
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion {
                    row: line_idx + 1,
                    column: expected[c].clone(),
                    message: "non-finite value".into(),
                });
            }
            if c < N_FEATURES {
                row.push(v);
            } else {
                targets.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Invariant("empty dataset".into()));
    }
    Dataset::new_raw(Matrix::from_rows(&rows)?, targets)
}

// ---------------------------------------------------------------------------
// Many-to-one structure

/// Groups rows by bit-equal (quantized tempering parameter, composition).
/// Keys are the `to_bits` images so grouping is exact.
pub fn group_by_hj_and_composition(ds: &Dataset) -> HashMap<Vec<u64>, Vec<usize>> {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..ds.len() {
        let row = ds.features.row(i);
        let pq = quantize_hj(hj_param(row[1], row[0]));
        let mut key = vec![pq.to_bits()];
        key.extend(row[COMPOSITION_START..].iter().map(|v| v.to_bits()));
        groups.entry(key).or_default().push(i);
    }
    groups
}

/// E[Var(X|Y)]: the minimum input-space MSE (averaged over the 13
/// features, raw units) achievable by any deterministic inverse model.
/// Meaningful on noiseless data, where equal targets identify a group.
pub fn conditional_variance_floor(ds: &Dataset) -> f64 {
    let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, &t) in ds.targets.iter().enumerate() {
        groups.entry(t.to_bits()).or_default().push(i);
    }
    let mut total = 0.0;
    for ids in groups.values() {
        let n = ids.len() as f64;
        for c in 0..N_FEATURES {
            let mean: f64 = ids.iter().map(|&i| ds.features.get(i, c)).sum::<f64>() / n;
            let var: f64 = ids
                .iter()
                .map(|&i| {
                    let d = ds.features.get(i, c) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            total += var * n;
        }
    }
    total / (ds.len() as f64 * N_FEATURES as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tiny_csv(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("ds.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{}", FEATURE_NAMES.join(",") + "," + TARGET_NAME).unwrap();
        write!(f, "{body}").unwrap();
        path
    }

    const ROW_A: &str = "5000,400,0.3,0.5,0.01,0.01,0.2,0.5,0.4,0.1,0.05,0.02,0.1,45.0\n";
    const ROW_B: &str = "20000,350,0.4,0.6,0.02,0.02,0.3,0.6,0.5,0.2,0.10,0.03,0.2,50.0\n";

    #[test]
    fn load_well_formed_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = tiny_csv(dir.path(), &format!("{ROW_A}{ROW_B}"));
        let ds = load_csv(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.targets, vec![45.0, 50.0]);
        assert!(!ds.normalized);
    }

    #[test]
    fn header_only_file_is_empty_dataset_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = tiny_csv(dir.path(), "");
        let err = load_csv(&path).unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        // rows 2..=4 fine, row 5 has "abc" in the Mn column
        let bad = ROW_A.replace("0.5,", "abc,");
        let path = tiny_csv(dir.path(), &format!("{ROW_A}{ROW_B}{ROW_A}{bad}"));
        let err = load_csv(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 5") && msg.contains("Mn"), "{msg}");
    }

    #[test]
    fn missing_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        std::fs::write(&path, "tempering_time_s,hardness_HRC\n100,45\n").unwrap();
        assert!(load_csv(&path).is_err());
    }

    #[test]
    fn header_match_is_case_insensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let header = (FEATURE_NAMES.join(",") + "," + TARGET_NAME).to_uppercase();
        std::fs::write(&path, format!("{header}\n{ROW_A}")).unwrap();
        assert_eq!(load_csv(&path).unwrap().len(), 1);
    }

    #[test]
    fn out_of_range_hardness_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = tiny_csv(dir.path(), &ROW_A.replace("45.0", "90.0"));
        let err = load_csv(&path).unwrap_err();
        assert!(err.to_string().contains(TARGET_NAME), "{err}");
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 20,
            seed: 5,
            noise_std: 0.3,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        save_csv(&ds, &path, Some("abc")).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(ds.features.values(), back.features.values());
        assert_eq!(ds.targets, back.targets);
    }

    #[test]
    fn synth_same_seed_is_bit_identical() {
        let cfg = SynthConfig {
            n_samples: 100,
            seed: 9,
            noise_std: 0.5,
        };
        let a = synth_generate(&cfg).unwrap();
        let b = synth_generate(&cfg).unwrap();
        assert_eq!(a.features.values(), b.features.values());
        assert_eq!(a.targets, b.targets);
    }

    #[test]
    fn synth_targets_stay_in_declared_range() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 5000,
            seed: 42,
            noise_std: 0.5,
        })
        .unwrap();
        assert!(ds
            .targets
            .iter()
            .all(|&t| (HARDNESS_MIN..=HARDNESS_MAX).contains(&t)));
    }

    #[test]
    fn noiseless_siblings_share_hardness_with_distinct_process_params() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 200,
            seed: 3,
            noise_std: 0.0,
        })
        .unwrap();
        let groups = group_by_hj_and_composition(&ds);
        let mut multi = 0;
        for ids in groups.values().filter(|ids| ids.len() > 1) {
            multi += 1;
            let t0 = ds.targets[ids[0]];
            for &i in ids {
                assert_eq!(ds.targets[i], t0, "hardness differs within a group");
            }
            // (temperature, time) must differ within the group
            let p0 = (ds.features.get(ids[0], 0), ds.features.get(ids[0], 1));
            assert!(ids[1..]
                .iter()
                .any(|&i| (ds.features.get(i, 0), ds.features.get(i, 1)) != p0));
        }
        assert_eq!(multi, 100, "every pair should form a group");
    }

    #[test]
    fn conditional_floor_is_positive_on_noiseless_pairs() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 400,
            seed: 8,
            noise_std: 0.0,
        })
        .unwrap();
        assert!(conditional_variance_floor(&ds) > 0.0);
    }

    #[test]
    fn scaler_examples() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut r = vec![1000.0 + 100.0 * i as f64, 300.0 + 10.0 * i as f64];
                r.extend(vec![3.2; 11]); // constant composition columns
                r
            })
            .collect();
        let ds = Dataset::new_raw(Matrix::from_rows(&rows).unwrap(), vec![30.0, 40.0, 50.0, 60.0]).unwrap();
        let scaler = Scaler::fit(&ds).unwrap();
        let norm = scaler.transform_features(&ds.features).unwrap();
        // min -> 0, max -> 1
        assert_eq!(norm.get(0, 0), 0.0);
        assert_eq!(norm.get(3, 0), 1.0);
        // degenerate columns -> 0.5
        for i in 0..4 {
            assert_eq!(norm.get(i, 5), 0.5);
        }
        // degenerate round trip returns the constant
        let back = scaler.inverse_transform_features(&norm).unwrap();
        assert_eq!(back.get(2, 5), 3.2);
    }

    #[test]
    fn split_sizes_and_exhaustiveness() {
        let ds = synth_generate(&SynthConfig {
            n_samples: 10,
            seed: 1,
            noise_std: 0.1,
        })
        .unwrap();
        let (train, test) = split(&ds, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));

        let (train2, test2) = split(&ds, 0.2, 7).unwrap();
        assert_eq!(train.targets, train2.targets);
        assert_eq!(test.targets, test2.targets);

        let mut all: Vec<u64> = train
            .targets
            .iter()
            .chain(&test.targets)
            .map(|t| t.to_bits())
            .collect();
        let mut orig: Vec<u64> = ds.targets.iter().map(|t| t.to_bits()).collect();
        all.sort_unstable();
        orig.sort_unstable();
        assert_eq!(all, orig);

        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn sample_targets_uniform_in_unit_interval() {
        use rand::SeedableRng;
        let ds = synth_generate(&SynthConfig {
            n_samples: 50,
            seed: 2,
            noise_std: 0.5,
        })
        .unwrap();
        let scaler = Scaler::fit(&ds).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let batch = scaler.sample_targets(4, &mut rng);
        assert_eq!(batch.rows(), 4);
        assert!(batch.values().iter().all(|&v| (0.0..1.0).contains(&v)));

        let mut rng2 = ChaCha12Rng::seed_from_u64(10);
        let batch2 = scaler.sample_targets(4, &mut rng2);
        assert_eq!(batch.values(), batch2.values());

        let mut rng3 = ChaCha12Rng::seed_from_u64(11);
        let big = scaler.sample_targets(10_000, &mut rng3);
        let mean: f64 = big.values().iter().sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }
}
