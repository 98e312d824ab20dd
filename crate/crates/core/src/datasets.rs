//! Tabular data: CSV ingestion, preparation for the RX feature map, synthetic
//! noisy/redundant augmentation, and planted-signal generators.
//!
//! Prepared features are min-max scaled into `[0, π]` using statistics from
//! the training split only, so that each feature spans the full `|0⟩ → |1⟩`
//! range of its qubit. Test rows are clamped into the same interval.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};

const IRIS_CSV: &str = include_str!("../assets/iris.csv");
const WINE_CSV: &str = include_str!("../assets/wine.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Noise,
    Redundant { source: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub target_name: String,
    pub targets: Vec<String>,
    pub provenance: Vec<Provenance>,
    /// Ground-truth importance per feature for generated datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_truth: Option<Vec<f64>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Keep the listed feature columns in the given order. Provenance sources
    /// and planted truth are carried along.
    pub fn select_features(&self, idx: &[usize]) -> Result<RawTable> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: bad,
            });
        }
        let provenance = idx
            .iter()
            .map(|&j| match &self.provenance[j] {
                Provenance::Redundant { source } => match idx.iter().position(|&k| k == *source) {
                    Some(new) => Ok(Provenance::Redundant { source: new }),
                    None => Err(Error::InvalidConfig(format!(
                        "column {j} is redundant with column {source}, which is not selected"
                    ))),
                },
                other => Ok(other.clone()),
            })
            .collect::<Result<_>>()?;
        Ok(RawTable {
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            features: self.features.select_columns(idx),
            target_name: self.target_name.clone(),
            targets: self.targets.clone(),
            provenance,
            planted_truth: self.planted_truth.as_ref().map(|t| idx.iter().map(|&j| t[j]).collect()),
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> RawTable {
        RawTable {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(idx),
            target_name: self.target_name.clone(),
            targets: idx.iter().map(|&i| self.targets[i].clone()).collect(),
            provenance: self.provenance.clone(),
            planted_truth: self.planted_truth.clone(),
        }
    }
}

/// Read a comma-separated file with a header row; every column other than
/// `target_column` must be numeric.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(file, target_column)
}

pub fn parse_csv<R: Read>(reader: R, target_column: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Data("missing header row".into()));
    }
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::Data(format!("target column '{target_column}' not found in header")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut targets = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // data rows are numbered from 1; the header is line 1 of the file
        let row = r + 1;
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "row {row} has {} fields, expected {}",
                rec.len(),
                headers.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == target_idx {
                targets.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("row {row}, column '{}': '{cell}' is not a number", headers[c]))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "row {row}, column '{}': non-finite value '{cell}'",
                    headers[c]
                )));
            }
            data.push(v);
        }
    }
    if targets.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let n_features = feature_names.len();
    Ok(RawTable {
        provenance: vec![Provenance::Original; n_features],
        features: Matrix::from_vec(targets.len(), n_features, data)?,
        feature_names,
        target_name: target_column.to_string(),
        targets,
        planted_truth: None,
    })
}

/// Datasets shipped with the crate: `iris` and `wine`, target column `target`.
pub fn bundled(name: &str) -> Option<RawTable> {
    let text = match name.to_ascii_lowercase().as_str() {
        "iris" => IRIS_CSV,
        "wine" => WINE_CSV,
        _ => return None,
    };
    Some(parse_csv(text.as_bytes(), "target").expect("bundled dataset parses"))
}

/// Per-feature min-max map into `[0, π]`, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &Matrix) -> Self {
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for row in x.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    /// Constant training columns map to 0; everything is clamped to `[0, π]`.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span > 0.0 {
                    ((*v - self.min[j]) / span * PI).clamp(0.0, PI)
                } else {
                    0.0
                };
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub x_train: Matrix,
    pub x_test: Matrix,
    pub y_train: Vec<usize>,
    pub y_test: Vec<usize>,
    pub feature_labels: Vec<String>,
    pub class_labels: Vec<String>,
    pub scaler: MinMaxScaler,
    pub provenance: Vec<Provenance>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_truth: Option<Vec<f64>>,
    pub seed: u64,
}

impl PreparedDataset {
    pub fn n_features(&self) -> usize {
        self.x_train.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }
}

/// Distinct target values in label order: numeric order when every value
/// parses as a number, lexicographic otherwise.
pub fn class_order(targets: &[String]) -> Vec<String> {
    let distinct: BTreeSet<&String> = targets.iter().collect();
    let mut classes: Vec<String> = distinct.into_iter().cloned().collect();
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    if let Some(vals) = numeric {
        let mut pairs: Vec<(f64, String)> = vals.into_iter().zip(classes).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        classes = pairs.into_iter().map(|(_, c)| c).collect();
    }
    classes
}

pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

/// Encode labels, split stratified by class, and scale features into `[0, π]`.
pub fn prepare_data(t: &RawTable, test_fraction: f64, seed: u64) -> Result<PreparedDataset> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    if t.n_features() == 0 {
        return Err(Error::Data("table has no feature columns".into()));
    }
    let classes = class_order(&t.targets);
    if classes.len() < 2 {
        return Err(Error::Data("target has a single class".into()));
    }
    let y: Vec<usize> = t
        .targets
        .iter()
        .map(|v| classes.iter().position(|c| c == v).expect("class present"))
        .collect();

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (k, name) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        if members.len() < 2 {
            return Err(Error::Data(format!(
                "class '{name}' has {} row(s); at least 2 are needed for a stratified split",
                members.len()
            )));
        }
        members.shuffle(&mut stream(seed, &[tag::SPLIT, k as u64]));
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).clamp(1, members.len() - 1);
        test_idx.extend_from_slice(&members[..n_test]);
        train_idx.extend_from_slice(&members[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let raw_train = t.features.select_rows(&train_idx);
    let raw_test = t.features.select_rows(&test_idx);
    let scaler = MinMaxScaler::fit(&raw_train);
    Ok(PreparedDataset {
        x_train: scaler.transform(&raw_train),
        x_test: scaler.transform(&raw_test),
        y_train: train_idx.iter().map(|&i| y[i]).collect(),
        y_test: test_idx.iter().map(|&i| y[i]).collect(),
        feature_labels: t.feature_names.clone(),
        class_labels: classes,
        scaler,
        provenance: t.provenance.clone(),
        train_indices: train_idx,
        test_indices: test_idx,
        planted_truth: t.planted_truth.clone(),
        seed,
    })
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Append `n_noise` standard-normal columns and `n_redundant` noisy copies of
/// randomly chosen original columns (Gaussian jitter with σ = 0.1 × the
/// source column's standard deviation).
pub fn augment_noisy(t: &RawTable, n_noise: usize, n_redundant: usize, seed: u64) -> Result<RawTable> {
    let originals: Vec<usize> = (0..t.n_features())
        .filter(|&j| t.provenance[j] == Provenance::Original)
        .collect();
    if n_redundant > 0 && originals.is_empty() {
        return Err(Error::InvalidConfig("redundant columns need at least one original feature".into()));
    }
    let n = t.n_rows();
    let mut rng = stream(seed, &[tag::AUGMENT]);
    let mut extra = Matrix::zeros(n, n_noise + n_redundant);
    let mut names = t.feature_names.clone();
    let mut provenance = t.provenance.clone();

    for i in 0..n_noise {
        for r in 0..n {
            extra.set(r, i, StandardNormal.sample(&mut rng));
        }
        names.push(format!("noise_{i}"));
        provenance.push(Provenance::Noise);
    }
    for i in 0..n_redundant {
        let src = originals[rng.random_range(0..originals.len())];
        let col = t.features.column(src);
        let sigma = 0.1 * population_std(&col);
        let jitter = Normal::new(0.0, sigma).map_err(|e| Error::Numerical(e.to_string()))?;
        for (r, v) in col.iter().enumerate() {
            extra.set(r, n_noise + i, v + jitter.sample(&mut rng));
        }
        names.push(format!("redundant_{i}_of_{}", t.feature_names[src]));
        provenance.push(Provenance::Redundant { source: src });
    }

    let planted_truth = t
        .planted_truth
        .as_ref()
        .map(|truth| truth.iter().cloned().chain(std::iter::repeat_n(0.0, n_noise + n_redundant)).collect());
    Ok(RawTable {
        feature_names: names,
        features: t.features.hstack(&extra)?,
        target_name: t.target_name.clone(),
        targets: t.targets.clone(),
        provenance,
        planted_truth,
    })
}

/// Replace a numeric target with `above_median` / `at_or_below_median`.
pub fn binarize_target_at_median(t: &RawTable) -> Result<RawTable> {
    let vals: Vec<f64> = t
        .targets
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.parse::<f64>()
                .map_err(|_| Error::Data(format!("row {}: target '{v}' is not numeric", i + 1)))
        })
        .collect::<Result<_>>()?;
    let med = median(&vals);
    let mut out = t.clone();
    out.targets = vals
        .iter()
        .map(|&v| if v > med { "above_median" } else { "at_or_below_median" }.to_string())
        .collect();
    Ok(out)
}

/// Stratified subsample to at most `max_rows` rows, original order kept.
pub fn stratified_subsample(t: &RawTable, max_rows: usize, seed: u64) -> RawTable {
    if t.n_rows() <= max_rows {
        return t.clone();
    }
    let classes = class_order(&t.targets);
    let frac = max_rows as f64 / t.n_rows() as f64;
    let mut keep = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..t.n_rows()).filter(|&i| &t.targets[i] == c).collect();
        members.shuffle(&mut stream(seed, &[tag::SPLIT, 1000 + k as u64]));
        let take = ((members.len() as f64 * frac).floor() as usize).max(2.min(members.len()));
        keep.extend_from_slice(&members[..take]);
    }
    keep.sort_unstable();
    keep.truncate(max_rows.max(keep.len().min(max_rows)));
    t.select_rows(&keep)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedRule {
    /// Label is whether the sum of the informative columns exceeds its median.
    Threshold,
    /// Label is the sign of a weighted sum with descending weights.
    Linear,
    /// Label is the XOR of the signs of exactly two informative columns.
    Xor,
}

impl FromStr for PlantedRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "threshold" => Ok(PlantedRule::Threshold),
            "linear" => Ok(PlantedRule::Linear),
            "xor" => Ok(PlantedRule::Xor),
            other => Err(Error::InvalidConfig(format!(
                "unknown planted rule '{other}'; expected threshold, linear or xor"
            ))),
        }
    }
}

/// Synthetic table whose informative columns (`informative_*`, placed first)
/// determine the label; `noise_*` columns are independent standard normals.
/// The ground truth is stored in `planted_truth`.
pub fn make_planted(n_rows: usize, n_informative: usize, n_noise: usize, rule: PlantedRule, seed: u64) -> Result<RawTable> {
    if n_informative == 0 {
        return Err(Error::InvalidConfig("planted data needs at least one informative feature".into()));
    }
    if rule == PlantedRule::Xor && n_informative != 2 {
        return Err(Error::InvalidConfig("the xor rule needs exactly two informative features".into()));
    }
    if n_rows < 4 {
        return Err(Error::InvalidConfig("planted data needs at least four rows".into()));
    }
    let d = n_informative + n_noise;
    let mut rng = stream(seed, &[tag::PLANTED]);
    let mut x = Matrix::zeros(n_rows, d);
    for r in 0..n_rows {
        for c in 0..d {
            x.set(r, c, StandardNormal.sample(&mut rng));
        }
    }
    let weights: Vec<f64> = match rule {
        PlantedRule::Linear => (0..n_informative)
            .map(|i| (n_informative - i) as f64 / n_informative as f64)
            .collect(),
        _ => vec![1.0; n_informative],
    };
    let labels: Vec<bool> = match rule {
        PlantedRule::Threshold => {
            let s: Vec<f64> = x.row_iter().map(|r| r[..n_informative].iter().sum()).collect();
            let med = median(&s);
            s.iter().map(|&v| v > med).collect()
        }
        PlantedRule::Linear => x
            .row_iter()
            .map(|r| r.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() > 0.0)
            .collect(),
        PlantedRule::Xor => x.row_iter().map(|r| (r[0] > 0.0) != (r[1] > 0.0)).collect(),
    };

    let mut names: Vec<String> = (0..n_informative).map(|i| format!("informative_{i}")).collect();
    names.extend((0..n_noise).map(|i| format!("noise_{i}")));
    let mut provenance = vec![Provenance::Original; n_informative];
    provenance.extend(std::iter::repeat_n(Provenance::Noise, n_noise));
    let mut truth = weights;
    truth.extend(std::iter::repeat_n(0.0, n_noise));
    Ok(RawTable {
        feature_names: names,
        features: x,
        target_name: "label".into(),
        targets: labels.iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect(),
        provenance,
        planted_truth: Some(truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> Result<RawTable> {
        parse_csv(csv.as_bytes(), "label")
    }

    #[test]
    fn load_small_csv() {
        let t = table("a,b,label\n1,2,x\n3,4.5,y\n").unwrap();
        assert_eq!(t.n_features(), 2);
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.features.row(1), &[3.0, 4.5]);
        assert_eq!(t.targets, vec!["x", "y"]);
    }

    #[test]
    fn csv_errors() {
        let err = table("a,b,class\n1,2,x\n").unwrap_err().to_string();
        assert!(err.contains("'label'"), "{err}");
        let err = table("a,b,label\n1,2,x\n1,NaN,y\n").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        let err = table("a,b,label\n1,2,x\n1,2\n").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        let err = table("a,b,label\n1,abc,x\n").unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("'b'"), "{err}");
        assert!(load_csv("/nonexistent/file.csv", "label").is_err());
    }

    #[test]
    fn bundled_assets() {
        let iris = bundled("iris").unwrap();
        assert_eq!((iris.n_rows(), iris.n_features()), (150, 4));
        let wine = bundled("wine").unwrap();
        assert_eq!((wine.n_rows(), wine.n_features()), (178, 13));
        assert!(bundled("mnist").is_none());
    }

    #[test]
    fn scaling_rules() {
        let raw = Matrix::from_rows(&[[2.0, 7.0], [6.0, 7.0]]).unwrap();
        let s = MinMaxScaler::fit(&raw);
        let out = s.transform(&Matrix::from_rows(&[[4.0, 7.0], [1.0, 9.0], [10.0, 3.0]]).unwrap());
        assert!((out.get(0, 0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(out.get(0, 1), 0.0);
        assert_eq!(out.get(1, 0), 0.0);
        assert_eq!(out.get(2, 0), PI);
    }

    #[test]
    fn prepare_is_stratified_and_deterministic() {
        let iris = bundled("iris").unwrap();
        let a = prepare_data(&iris, 0.3, 7).unwrap();
        let b = prepare_data(&iris, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_labels, vec!["setosa", "versicolor", "virginica"]);
        for k in 0..3 {
            let n_test = a.y_test.iter().filter(|&&c| c == k).count();
            assert!((n_test as i64 - 15).abs() <= 1);
        }
        for v in a.x_train.as_slice() {
            assert!((0.0..=PI).contains(v));
        }
        let c = prepare_data(&iris, 0.3, 8).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn scaler_ignores_test_rows() {
        let iris = bundled("iris").unwrap();
        let p = prepare_data(&iris, 0.3, 1).unwrap();
        let refit = MinMaxScaler::fit(&iris.features.select_rows(&p.train_indices));
        assert_eq!(refit, p.scaler);
    }

    #[test]
    fn prepare_errors() {
        let one_class = table("a,label\n1,x\n2,x\n3,x\n").unwrap();
        assert!(prepare_data(&one_class, 0.3, 0).is_err());
        let singleton = table("a,label\n1,x\n2,x\n3,y\n").unwrap();
        let err = prepare_data(&singleton, 0.3, 0).unwrap_err().to_string();
        assert!(err.contains("'y'"), "{err}");
    }

    #[test]
    fn numeric_class_order() {
        let t: Vec<String> = ["10", "2", "1", "2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(class_order(&t), vec!["1", "2", "10"]);
    }

    #[test]
    fn augmentation_appends_tagged_columns() {
        let iris = bundled("iris").unwrap();
        let aug = augment_noisy(&iris, 2, 2, 3).unwrap();
        assert_eq!(aug.n_features(), 8);
        for r in 0..iris.n_rows() {
            assert_eq!(&aug.features.row(r)[..4], iris.features.row(r));
        }
        assert_eq!(&aug.provenance[4..6], &[Provenance::Noise, Provenance::Noise]);
        assert!(matches!(aug.provenance[6], Provenance::Redundant { source } if source < 4));
        assert!(aug.feature_names[6].starts_with("redundant_0_of_"));
        assert_eq!(aug, augment_noisy(&iris, 2, 2, 3).unwrap());

        let no_features = RawTable {
            feature_names: vec![],
            features: Matrix::zeros(3, 0),
            target_name: "t".into(),
            targets: vec!["a".into(); 3],
            provenance: vec![],
            planted_truth: None,
        };
        assert!(augment_noisy(&no_features, 0, 1, 0).is_err());
        assert!(augment_noisy(&no_features, 1, 0, 0).is_ok());
    }

    #[test]
    fn planted_generators() {
        let t = make_planted(200, 1, 3, PlantedRule::Threshold, 0).unwrap();
        let ones = t.targets.iter().filter(|s| *s == "1").count();
        assert!((ones as f64 / 200.0 - 0.5).abs() <= 0.05);
        assert_eq!(t.planted_truth.as_ref().unwrap(), &vec![1.0, 0.0, 0.0, 0.0]);
        assert!(make_planted(100, 3, 2, PlantedRule::Xor, 0).is_err());
        assert!(make_planted(100, 0, 2, PlantedRule::Linear, 0).is_err());
        assert!("zigzag".parse::<PlantedRule>().is_err());
        let lin = make_planted(50, 3, 1, PlantedRule::Linear, 0).unwrap();
        let truth = lin.planted_truth.unwrap();
        assert!(truth[0] > truth[1] && truth[1] > truth[2] && truth[3] == 0.0);
    }

    #[test]
    fn feature_selection_remaps_sources() {
        let iris = bundled("iris").unwrap();
        let aug = augment_noisy(&iris, 1, 1, 0).unwrap();
        let Provenance::Redundant { source } = aug.provenance[5] else { panic!() };
        let order: Vec<usize> = (0..6).rev().collect();
        let rev = aug.select_features(&order).unwrap();
        assert_eq!(rev.provenance[0], Provenance::Redundant { source: 5 - source });
        assert!(aug.select_features(&[5]).is_err());
    }

    #[test]
    fn median_binarization_and_subsample() {
        let t = table("a,label\n1,1\n2,2\n3,3\n4,4\n").unwrap();
        let b = binarize_target_at_median(&t).unwrap();
        assert_eq!(b.targets[0], "at_or_below_median");
        assert_eq!(b.targets[3], "above_median");
        let big = make_planted(400, 1, 1, PlantedRule::Threshold, 0).unwrap();
        let small = stratified_subsample(&big, 100, 0);
        assert!(small.n_rows() <= 100 && small.n_rows() >= 98);
    }
}
