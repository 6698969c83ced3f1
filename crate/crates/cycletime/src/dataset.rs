//! Dataset handling: the canonical CSV schema, min-max normalization to
//! [-1, 1], deterministic train/validation/test splitting, and a seeded
//! synthetic data generator for the moulding process.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input column names, in canonical CSV order.
pub const INPUT_COLUMNS: [&str; 3] = ["mould_temp", "injection_pressure", "switchover_pressure"];

/// Target column name.
pub const TARGET_COLUMN: &str = "cycle_time";

/// Sampling range for mould temperature in degrees Celsius.
pub const MOULD_TEMP_RANGE: (f64, f64) = (20.0, 80.0);

/// Sampling range for injection pressure in bar.
pub const INJECTION_PRESSURE_RANGE: (f64, f64) = (500.0, 1500.0);

/// Sampling range for switch-over pressure in bar.
pub const SWITCHOVER_PRESSURE_RANGE: (f64, f64) = (300.0, 900.0);

/// Formats a float with 17 significant digits, enough to round-trip `f64`
/// exactly. All CSV output in the crate goes through this.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A tabular regression dataset: fixed-width input rows and one target per
/// row. Every stored value is finite; constructors reject anything else.
#[derive(Debug, Clone)]
pub struct Dataset {
    input_dim: usize,
    input_names: Vec<String>,
    target_name: String,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    /// Empty dataset with the given column names.
    pub fn empty(input_names: Vec<String>, target_name: String) -> Self {
        Dataset {
            input_dim: input_names.len(),
            input_names,
            target_name,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    fn default_names(input_dim: usize) -> (Vec<String>, String) {
        let names = (1..=input_dim).map(|i| format!("x{i}")).collect();
        (names, "y".to_string())
    }

    /// Builds a dataset from input rows and targets, using generic column
    /// names. Rows must be non-empty, rectangular, and finite.
    pub fn from_rows(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: targets.len(),
            });
        }
        let input_dim = inputs[0].len();
        if input_dim == 0 {
            return Err(Error::EmptyInput);
        }
        let (input_names, target_name) = Self::default_names(input_dim);
        let mut d = Dataset::empty(input_names, target_name);
        for (row_idx, (row, &target)) in inputs.iter().zip(&targets).enumerate() {
            if row.len() != input_dim {
                return Err(Error::LengthMismatch {
                    left: input_dim,
                    right: row.len(),
                });
            }
            d.push_row(row, target).map_err(|_| Error::NonFinite { row: row_idx })?;
        }
        Ok(d)
    }

    /// Appends one row; fails if any value is non-finite or the width is off.
    pub fn push_row(&mut self, row: &[f64], target: f64) -> Result<()> {
        if row.len() != self.input_dim {
            return Err(Error::LengthMismatch {
                left: self.input_dim,
                right: row.len(),
            });
        }
        if !target.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: self.len() });
        }
        self.inputs.extend_from_slice(row);
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    #[inline]
    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    #[inline]
    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |i| (self.input_row(i), self.targets[i]))
    }

    /// Per-column (min, max) over the inputs, plus the target column.
    fn column_extents(&self) -> (Vec<(f64, f64)>, (f64, f64)) {
        let mut input_ext = vec![(f64::INFINITY, f64::NEG_INFINITY); self.input_dim];
        for i in 0..self.len() {
            for (ext, &v) in input_ext.iter_mut().zip(self.input_row(i)) {
                ext.0 = ext.0.min(v);
                ext.1 = ext.1.max(v);
            }
        }
        let mut tmin = f64::INFINITY;
        let mut tmax = f64::NEG_INFINITY;
        for &t in &self.targets {
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        (input_ext, (tmin, tmax))
    }
}

/// Affine map that takes each raw column onto [-1, 1] and back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

impl NormParams {
    /// Parameters that make normalization the identity map (up to float
    /// rounding), for models that already work in normalized units.
    pub fn identity(input_dim: usize) -> Self {
        NormParams {
            input_min: vec![-1.0; input_dim],
            input_max: vec![1.0; input_dim],
            target_min: -1.0,
            target_max: 1.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_min.len()
    }

    #[inline]
    fn map(v: f64, min: f64, max: f64) -> f64 {
        2.0 * (v - min) / (max - min) - 1.0
    }

    #[inline]
    fn unmap(v: f64, min: f64, max: f64) -> f64 {
        (v + 1.0) / 2.0 * (max - min) + min
    }

    pub fn normalize_input_into(&self, raw: &[f64], out: &mut [f64]) {
        for i in 0..raw.len() {
            out[i] = Self::map(raw[i], self.input_min[i], self.input_max[i]);
        }
    }

    pub fn normalize_input(&self, raw: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; raw.len()];
        self.normalize_input_into(raw, &mut out);
        out
    }

    pub fn normalize_target(&self, raw: f64) -> f64 {
        Self::map(raw, self.target_min, self.target_max)
    }

    pub fn denormalize_target(&self, normalized: f64) -> f64 {
        Self::unmap(normalized, self.target_min, self.target_max)
    }

    /// Half-width of the raw target range; squares of normalized errors scale
    /// by the square of this to become squared seconds.
    pub fn target_scale(&self) -> f64 {
        (self.target_max - self.target_min) / 2.0
    }
}

/// Maps every column of `d` onto [-1, 1] and returns the mapped dataset with
/// the parameters needed to undo the mapping. Constant columns are rejected
/// because their map is undefined.
pub fn normalize(d: &Dataset) -> Result<(Dataset, NormParams)> {
    if d.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (input_ext, (tmin, tmax)) = d.column_extents();
    for (name, &(lo, hi)) in d.input_names().iter().zip(&input_ext) {
        if !(hi > lo) {
            return Err(Error::ConstantColumn(name.clone()));
        }
    }
    if !(tmax > tmin) {
        return Err(Error::ConstantColumn(d.target_name().to_string()));
    }
    let params = NormParams {
        input_min: input_ext.iter().map(|e| e.0).collect(),
        input_max: input_ext.iter().map(|e| e.1).collect(),
        target_min: tmin,
        target_max: tmax,
    };
    let mut out = Dataset::empty(d.input_names().to_vec(), d.target_name().to_string());
    let mut buf = vec![0.0; d.input_dim()];
    for (row, target) in d.rows() {
        params.normalize_input_into(row, &mut buf);
        out.push_row(&buf, params.normalize_target(target))?;
    }
    Ok((out, params))
}

/// How to carve a dataset into train/validation/test partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    /// Fractions that must sum to 1; partition sizes are rounded.
    Ratios { train: f64, validation: f64, test: f64 },
    /// Exact row counts that must sum to the dataset length.
    Counts { train: usize, validation: usize, test: usize },
}

/// A dataset carved into the three training partitions.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub seed: u64,
}

/// Shuffles row indices with a seeded generator and deals them out into the
/// three partitions. The same seed always produces the same partition.
pub fn split(d: &Dataset, spec: &SplitSpec, seed: u64) -> Result<SplitDataset> {
    if d.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = d.len();
    let (n_train, n_val) = match *spec {
        SplitSpec::Ratios { train, validation, test } => {
            if train <= 0.0 || validation <= 0.0 || test <= 0.0 {
                return Err(Error::InvalidArgument(
                    "split ratios must all be positive".to_string(),
                ));
            }
            let sum = train + validation + test;
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::BadRatios { sum });
            }
            let n_train = ((n as f64) * train).round() as usize;
            let n_val = (((n as f64) * validation).round() as usize).min(n - n_train.min(n));
            (n_train.min(n), n_val)
        }
        SplitSpec::Counts { train, validation, test } => {
            let requested = train + validation + test;
            if requested != n {
                return Err(Error::BadCounts {
                    requested,
                    available: n,
                });
            }
            (train, validation)
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let make = |idx: &[usize]| -> Result<Dataset> {
        let mut part = Dataset::empty(d.input_names().to_vec(), d.target_name().to_string());
        for &i in idx {
            part.push_row(d.input_row(i), d.target(i))?;
        }
        Ok(part)
    };
    Ok(SplitDataset {
        train: make(&order[..n_train])?,
        validation: make(&order[n_train..n_train + n_val])?,
        test: make(&order[n_train + n_val..])?,
        seed,
    })
}

/// Noise-free response surface behind the synthetic generator, in seconds.
///
/// The shape is fixed: a quadratic trend in each scaled input plus pairwise
/// and three-way interactions, a cubic pressure term, and fifth-order
/// ripple terms in temperature and injection pressure. The ripples give the
/// surface enough independent curvature directions that model capacity
/// matters: narrow networks run out of units before tracking them all.
/// Changing the coefficients invalidates any stored dataset, so treat them
/// as frozen.
pub fn synthetic_cycle_time(
    mould_temp: f64,
    injection_pressure: f64,
    switchover_pressure: f64,
) -> f64 {
    let t = (mould_temp - 50.0) / 30.0;
    let pi = (injection_pressure - 1000.0) / 500.0;
    let ps = (switchover_pressure - 600.0) / 300.0;
    let ripple7 = |x: f64| 64.0 * x.powi(7) - 112.0 * x.powi(5) + 56.0 * x.powi(3) - 7.0 * x;
    let ripple5 = |x: f64| 16.0 * x.powi(5) - 20.0 * x.powi(3) + 5.0 * x;
    let wave = |x: f64| 4.0 * x.powi(3) - 3.0 * x;
    25.0 + 4.0 * t - 3.0 * pi - 2.0 * ps
        + 2.2 * t * t - 1.1 * pi * pi + 0.9 * ps * ps
        - 1.3 * t * pi + 0.8 * t * ps + 1.6 * pi * ps
        + 1.2 * t * pi * ps + 0.9 * pi * pi * pi - 0.7 * t * t * pi
        + 0.55 * ripple7(t) + 0.55 * ripple7(pi) + 0.45 * ripple5(ps)
        + 0.5 * wave(t) * wave(pi) + 0.3 * wave(pi) * wave(ps)
}

/// Draws `n` process settings uniformly from the documented ranges and
/// evaluates [`synthetic_cycle_time`] plus Gaussian noise of the given
/// standard deviation. Fully determined by `seed`; the input draws do not
/// depend on `noise_sd`, so the same seed yields the same settings at any
/// noise level.
pub fn generate_synthetic(n: usize, seed: u64, noise_sd: f64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 rows, requested {n}"
        )));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise standard deviation must be finite and non-negative, got {noise_sd}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Dataset::empty(
        INPUT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        TARGET_COLUMN.to_string(),
    );
    for _ in 0..n {
        let t = rng.random_range(MOULD_TEMP_RANGE.0..MOULD_TEMP_RANGE.1);
        let pi = rng.random_range(INJECTION_PRESSURE_RANGE.0..INJECTION_PRESSURE_RANGE.1);
        let ps = rng.random_range(SWITCHOVER_PRESSURE_RANGE.0..SWITCHOVER_PRESSURE_RANGE.1);
        let eps: f64 = rng.sample(StandardNormal);
        let y = synthetic_cycle_time(t, pi, ps) + noise_sd * eps;
        d.push_row(&[t, pi, ps], y)?;
    }
    Ok(d)
}

/// Loads a dataset in the canonical CSV schema. The header must match
/// `mould_temp,injection_pressure,switchover_pressure,cycle_time` exactly,
/// and every value must parse as a finite number.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = INPUT_COLUMNS
        .iter()
        .copied()
        .chain(std::iter::once(TARGET_COLUMN))
        .collect();
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Schema(format!(
            "expected header {expected:?}, found {found:?}"
        )));
    }
    let mut d = Dataset::empty(
        INPUT_COLUMNS.iter().map(|s| s.to_string()).collect(),
        TARGET_COLUMN.to_string(),
    );
    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        // Row numbers are 1-based and count the header, matching editors.
        let row = rec_idx + 2;
        if record.len() != expected.len() {
            return Err(Error::Schema(format!(
                "row {row}: expected {} fields, found {}",
                expected.len(),
                record.len()
            )));
        }
        let mut values = [0.0; 4];
        for (idx, (col, slot)) in expected.iter().zip(values.iter_mut()).enumerate() {
            let raw = record.get(idx).unwrap_or("");
            let parsed: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                row,
                column: col.to_string(),
                value: raw.to_string(),
            })?;
            if !parsed.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: col.to_string(),
                    value: raw.to_string(),
                });
            }
            *slot = parsed;
        }
        d.push_row(&values[..3], values[3])?;
    }
    if d.is_empty() {
        return Err(Error::Schema("file contains no data rows".to_string()));
    }
    Ok(d)
}

/// Writes a dataset in the canonical CSV schema with lossless float
/// formatting.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let header: Vec<&str> = d
        .input_names()
        .iter()
        .map(|s| s.as_str())
        .chain(std::iter::once(d.target_name()))
        .collect();
    writer.write_record(&header)?;
    for (row, target) in d.rows() {
        let mut record: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        record.push(format_float(target));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset() -> Dataset {
        Dataset::from_rows(
            vec![
                vec![0.0, 10.0],
                vec![5.0, 20.0],
                vec![10.0, 40.0],
                vec![2.5, 30.0],
            ],
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap()
    }

    #[test]
    fn normalization_maps_extremes_to_unit_interval() {
        let (norm, params) = normalize(&toy_dataset()).unwrap();
        assert_eq!(norm.input_row(0), &[-1.0, -1.0]);
        assert_eq!(norm.input_row(2), &[1.0, 1.0]);
        assert_eq!(norm.target(0), -1.0);
        assert_eq!(norm.target(3), 1.0);
        assert_eq!(params.input_min, vec![0.0, 10.0]);
        assert_eq!(params.input_max, vec![10.0, 40.0]);
    }

    #[test]
    fn normalization_round_trips_targets() {
        let d = toy_dataset();
        let (norm, params) = normalize(&d).unwrap();
        for i in 0..d.len() {
            let back = params.denormalize_target(norm.target(i));
            assert!((back - d.target(i)).abs() <= 1e-12 * d.target(i).abs().max(1.0));
        }
    }

    #[test]
    fn normalization_rejects_constant_columns() {
        let d = Dataset::from_rows(
            vec![vec![1.0, 3.0], vec![1.0, 4.0]],
            vec![0.0, 1.0],
        )
        .unwrap();
        match normalize(&d) {
            Err(Error::ConstantColumn(name)) => assert_eq!(name, "x1"),
            other => panic!("expected constant column error, got {other:?}"),
        }
    }

    #[test]
    fn identity_norm_params_are_a_passthrough() {
        let p = NormParams::identity(2);
        let mapped = p.normalize_input(&[0.3, -0.7]);
        assert!((mapped[0] - 0.3).abs() < 1e-15);
        assert!((mapped[1] + 0.7).abs() < 1e-15);
        assert!((p.normalize_target(0.25) - 0.25).abs() < 1e-15);
        assert!((p.denormalize_target(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ratio_split_produces_documented_partition_sizes() {
        let d = generate_synthetic(600, 3, 0.0).unwrap();
        let spec = SplitSpec::Ratios {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
        };
        let s = split(&d, &spec, 42).unwrap();
        assert_eq!(s.train.len(), 420);
        assert_eq!(s.validation.len(), 90);
        assert_eq!(s.test.len(), 90);
    }

    #[test]
    fn split_partitions_cover_the_dataset_exactly_once() {
        let d = generate_synthetic(50, 9, 0.1).unwrap();
        let s = split(
            &d,
            &SplitSpec::Counts {
                train: 30,
                validation: 10,
                test: 10,
            },
            7,
        )
        .unwrap();
        let mut seen: Vec<f64> = s
            .train
            .targets()
            .iter()
            .chain(s.validation.targets())
            .chain(s.test.targets())
            .copied()
            .collect();
        let mut original = d.targets().to_vec();
        seen.sort_by(f64::total_cmp);
        original.sort_by(f64::total_cmp);
        assert_eq!(seen, original);
    }

    #[test]
    fn split_is_deterministic_per_seed_and_varies_across_seeds() {
        let d = generate_synthetic(60, 1, 0.1).unwrap();
        let spec = SplitSpec::Ratios {
            train: 0.5,
            validation: 0.25,
            test: 0.25,
        };
        let a = split(&d, &spec, 11).unwrap();
        let b = split(&d, &spec, 11).unwrap();
        let c = split(&d, &spec, 12).unwrap();
        assert_eq!(a.train.targets(), b.train.targets());
        assert_ne!(a.train.targets(), c.train.targets());
    }

    #[test]
    fn split_validates_ratios_and_counts() {
        let d = toy_dataset();
        let bad = SplitSpec::Ratios {
            train: 0.7,
            validation: 0.2,
            test: 0.2,
        };
        assert!(matches!(split(&d, &bad, 0), Err(Error::BadRatios { .. })));
        let bad_counts = SplitSpec::Counts {
            train: 2,
            validation: 1,
            test: 5,
        };
        assert!(matches!(
            split(&d, &bad_counts, 0),
            Err(Error::BadCounts { .. })
        ));
    }

    #[test]
    fn generator_is_deterministic_and_respects_ranges() {
        let a = generate_synthetic(100, 5, 0.1).unwrap();
        let b = generate_synthetic(100, 5, 0.1).unwrap();
        assert_eq!(a.targets(), b.targets());
        for (row, _) in a.rows() {
            assert!(row[0] >= MOULD_TEMP_RANGE.0 && row[0] < MOULD_TEMP_RANGE.1);
            assert!(row[1] >= INJECTION_PRESSURE_RANGE.0 && row[1] < INJECTION_PRESSURE_RANGE.1);
            assert!(row[2] >= SWITCHOVER_PRESSURE_RANGE.0 && row[2] < SWITCHOVER_PRESSURE_RANGE.1);
        }
    }

    #[test]
    fn zero_noise_targets_equal_the_response_surface_exactly() {
        let d = generate_synthetic(50, 8, 0.0).unwrap();
        for (row, target) in d.rows() {
            assert_eq!(target, synthetic_cycle_time(row[0], row[1], row[2]));
        }
    }

    #[test]
    fn noise_level_changes_targets_but_not_inputs() {
        let clean = generate_synthetic(40, 13, 0.0).unwrap();
        let noisy = generate_synthetic(40, 13, 0.5).unwrap();
        for i in 0..clean.len() {
            assert_eq!(clean.input_row(i), noisy.input_row(i));
        }
        assert_ne!(clean.targets(), noisy.targets());
    }

    #[test]
    fn generator_rejects_tiny_or_invalid_requests() {
        assert!(matches!(
            generate_synthetic(5, 0, 0.1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_synthetic(100, 0, -0.5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let d = generate_synthetic(25, 21, 0.2).unwrap();
        write_csv(&d, &path).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(loaded.len(), d.len());
        for i in 0..d.len() {
            assert_eq!(loaded.input_row(i), d.input_row(i));
            assert_eq!(loaded.target(i), d.target(i));
        }
    }

    #[test]
    fn csv_loader_validates_header_and_values() {
        let dir = tempfile::tempdir().unwrap();

        let bad_header = dir.path().join("bad_header.csv");
        std::fs::write(&bad_header, "a,b,c,d\n1,2,3,4\n").unwrap();
        assert!(matches!(load_csv(&bad_header), Err(Error::Schema(_))));

        let bad_value = dir.path().join("bad_value.csv");
        std::fs::write(
            &bad_value,
            "mould_temp,injection_pressure,switchover_pressure,cycle_time\n50,1000,oops,30\n",
        )
        .unwrap();
        match load_csv(&bad_value) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "switchover_pressure");
                assert_eq!(value, "oops");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let non_finite = dir.path().join("nan.csv");
        std::fs::write(
            &non_finite,
            "mould_temp,injection_pressure,switchover_pressure,cycle_time\n50,1000,600,NaN\n",
        )
        .unwrap();
        assert!(matches!(load_csv(&non_finite), Err(Error::Parse { .. })));
    }
}
