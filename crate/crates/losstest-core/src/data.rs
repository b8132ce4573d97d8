//! Datasets, feature subsets, and the train/eval split.
//!
//! A [`Dataset`] is an n×d feature matrix paired with labels. Labels are
//! either classification (±1) or regression (any finite real). Feature
//! subsets select a subvector x_S from each sample; the test statistics
//! compare estimators built on the full vector against estimators built
//! on the subvector.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngSpec;

/// Label semantics of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LabelKind {
    /// Labels are exactly −1 or +1.
    Classification,
    /// Labels are finite reals.
    Regression,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Classification => "classification",
            LabelKind::Regression => "regression",
        }
    }
}

/// Sign with the convention sgn(0) = +1.
pub fn sgn(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Immutable labelled sample set with a row-major n×d feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    d: usize,
    label_kind: LabelKind,
}

impl Dataset {
    /// Builds a dataset from a flat row-major feature buffer.
    ///
    /// Validates shape, finiteness of every value, and the ±1 label
    /// constraint for classification data.
    pub fn new(features: Vec<f64>, d: usize, labels: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if d == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        if features.len() != n * d {
            return Err(Error::ShapeMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        for (i, &y) in labels.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::InvalidData(format!("non-finite label at row {i}")));
            }
            if label_kind == LabelKind::Classification && y != 1.0 && y != -1.0 {
                return Err(Error::InvalidData(format!(
                    "classification label at row {i} is {y}, expected -1 or +1"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            d,
            label_kind,
        })
    }

    /// Builds a dataset from per-row feature vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::ShapeMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            flat.extend_from_slice(r);
        }
        Dataset::new(flat, d, labels, label_kind)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    /// Flat row-major feature buffer of length n·d.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// New dataset keeping only the columns in `subset`, same labels.
    pub fn project(&self, subset: &FeatureSubset) -> Result<Dataset> {
        subset.check_dim(self.d)?;
        let m = subset.len();
        let mut flat = Vec::with_capacity(self.n() * m);
        for i in 0..self.n() {
            let row = self.row(i);
            for &j in subset.indices() {
                flat.push(row[j]);
            }
        }
        Dataset::new(flat, m, self.labels.clone(), self.label_kind)
    }

    /// New dataset containing the given rows, in order.
    fn take_rows(&self, idx: &[usize]) -> Dataset {
        let mut flat = Vec::with_capacity(idx.len() * self.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            flat.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features: flat,
            labels,
            d: self.d,
            label_kind: self.label_kind,
        }
    }
}

// ---------------------------------------------------------------------------
// FeatureSubset
// ---------------------------------------------------------------------------

/// Strictly increasing set of 0-based feature column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct FeatureSubset {
    indices: Vec<usize>,
}

impl FeatureSubset {
    /// Indices must be nonempty and strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSubset(format!(
                    "indices must be strictly increasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(FeatureSubset { indices })
    }

    /// The full set {0, …, d−1}.
    pub fn full(d: usize) -> Result<Self> {
        FeatureSubset::new((0..d).collect())
    }

    /// All of {0, …, d−1} except `j` (the leave-one-covariate-out set).
    pub fn excluding(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::InvalidSubset(format!("index {j} out of range for d = {d}")));
        }
        FeatureSubset::new((0..d).filter(|&i| i != j).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty subsets
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Errors unless every index fits a d-column dataset.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let max = *self.indices.last().expect("subset is nonempty");
        if max >= d {
            return Err(Error::InvalidSubset(format!(
                "index {max} out of range for d = {d}"
            )));
        }
        Ok(())
    }

    /// Subvector x_S of a single sample, components in subset order.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.indices.iter().map(|&j| x[j]).collect())
    }
}

// ---------------------------------------------------------------------------
// SplitPair
// ---------------------------------------------------------------------------

/// The two halves of a sample: estimators are fit on `train` and the
/// statistic is averaged over `eval`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    train: Dataset,
    eval: Dataset,
}

impl SplitPair {
    pub fn new(train: Dataset, eval: Dataset) -> Result<Self> {
        if train.d() != eval.d() {
            return Err(Error::ShapeMismatch {
                expected: train.d(),
                got: eval.d(),
            });
        }
        if train.label_kind() != eval.label_kind() {
            return Err(Error::InvalidData("split halves have different label kinds".into()));
        }
        if train.n() != eval.n() {
            return Err(Error::ShapeMismatch {
                expected: train.n(),
                got: eval.n(),
            });
        }
        if train.n() < 2 {
            return Err(Error::TooFewSamples {
                n: train.n(),
                min: 2,
            });
        }
        Ok(SplitPair { train, eval })
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn eval(&self) -> &Dataset {
        &self.eval
    }

    /// Per-half sample count n.
    pub fn half_n(&self) -> usize {
        self.train.n()
    }
}

/// Splits a 2n (or 2n+1) sample into train/eval halves of n rows each.
///
/// Rows 0..n go to train and rows n..2n to eval; an odd final row is
/// dropped. When `shuffle` is given the rows are first permuted by a
/// Fisher–Yates pass driven by that seed, so the split is random but
/// reproducible.
pub fn split(data: &Dataset, shuffle: Option<&RngSpec>) -> Result<SplitPair> {
    if data.n() < 4 {
        return Err(Error::TooFewSamples { n: data.n(), min: 4 });
    }
    let half = data.n() / 2;
    let mut order: Vec<usize> = (0..data.n()).collect();
    if let Some(spec) = shuffle {
        let mut rng = spec.rng();
        for i in (1..order.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            order.swap(i, j);
        }
    }
    let train = data.take_rows(&order[..half]);
    let eval = data.take_rows(&order[half..2 * half]);
    SplitPair::new(train, eval)
}

// ---------------------------------------------------------------------------
