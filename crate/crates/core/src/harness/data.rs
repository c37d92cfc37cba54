use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const IRIS_CSV: &str = include_str!("../../data/iris_2class.csv");

/// SHA-256 of the bundled two-class Iris file.
pub const IRIS_SHA256: &str = "357ed817ad31289ea3a3e9985d5e57f5d38eec3deda5bbf4543e608655658e63";

/// Binary classification data with labels in `{+1, −1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub name: String,
    pub provenance: String,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, name: &str, provenance: &str) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::mismatch("label count", x.len(), y.len()));
        }
        if x.is_empty() {
            return Err(Error::Dataset("dataset is empty".into()));
        }
        let nf = x[0].len();
        if nf == 0 {
            return Err(Error::Dataset("examples have no features".into()));
        }
        for row in &x {
            if row.len() != nf {
                return Err(Error::mismatch("feature count", nf, row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset("non-finite feature value".into()));
            }
        }
        if let Some(bad) = y.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(Error::Dataset(format!("label {bad} is not +1 or -1")));
        }
        Ok(Self {
            x,
            y,
            name: name.to_string(),
            provenance: provenance.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x[0].len()
    }

    /// Column means and population standard deviations.
    pub fn column_stats(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        (0..self.n_features())
            .map(|j| {
                let mean = self.x.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = self.x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }

    /// Rescales every column to zero mean and unit variance using this
    /// dataset's own statistics. Constant columns are only centred.
    pub fn standardized(mut self) -> Self {
        let stats = self.column_stats();
        for row in &mut self.x {
            for (v, &(mean, std)) in row.iter_mut().zip(&stats) {
                *v = if std > 0.0 { (*v - mean) / std } else { *v - mean };
            }
        }
        self
    }

    /// Same examples in a seeded random order.
    pub fn shuffled(mut self, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng_from_seed(seed));
        self.x = idx.iter().map(|&i| self.x[i].clone()).collect();
        self.y = idx.iter().map(|&i| self.y[i]).collect();
        self
    }
}

fn parse_labelled_csv(text: &str, origin: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let malformed = |reason: String| Error::MalformedCsv {
        path: origin.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(malformed(format!("row {} has fewer than two columns", line + 1)));
        }
        let values = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(format!("row {}: {e}", line + 1)))?;
        let (label, features) = values.split_last().expect("at least two columns");
        y.push(*label);
        x.push(features.to_vec());
    }
    Ok((x, y))
}

/// The first two Iris classes (setosa = +1, versicolor = −1), standardized,
/// in file order.
pub fn load_iris() -> Result<Dataset> {
    let digest: String = Sha256::digest(IRIS_CSV.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    if digest != IRIS_SHA256 {
        return Err(Error::Dataset(format!(
            "bundled iris data checksum mismatch: {digest}"
        )));
    }
    let (x, y) = parse_labelled_csv(IRIS_CSV, Path::new("iris_2class.csv"))?;
    Ok(Dataset::new(
        x,
        y,
        "iris",
        "Fisher Iris, setosa vs versicolor, 4 features",
    )?
    .standardized())
}

/// Labelled CSV with a header row; the last column is the ±1 label.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let (x, y) = parse_labelled_csv(&text, path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Ok(Dataset::new(x, y, &name, &format!("loaded from {}", path.display()))?.standardized())
}

/// Two unit-covariance Gaussian blobs whose centres are `separation` apart,
/// balanced classes, standardized.
pub fn make_synthetic(n_features: usize, n: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Dataset(format!("need at least 2 examples, got {n}")));
    }
    if n_features < 1 {
        return Err(Error::Dataset("need at least one feature".into()));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::Dataset(format!("invalid separation {separation}")));
    }
    let mut rng = rng_from_seed(seed);
    let offset = separation / (2.0 * (n_features as f64).sqrt());
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let label = if k % 2 == 0 { 1.0 } else { -1.0 };
        let row = (0..n_features)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + label * offset
            })
            .collect();
        x.push(row);
        y.push(label);
    }
    Ok(Dataset::new(
        x,
        y,
        "synthetic",
        &format!("gaussian blobs, separation {separation}, seed {seed}"),
    )?
    .standardized())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DatasetSpec {
    Iris,
    Synthetic,
    Csv(PathBuf),
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iris" => Ok(DatasetSpec::Iris),
            "synthetic" => Ok(DatasetSpec::Synthetic),
            _ => match s.strip_prefix("csv:") {
                Some(p) if !p.is_empty() => Ok(DatasetSpec::Csv(PathBuf::from(p))),
                _ => Err(Error::InvalidConfig(format!(
                    "dataset must be iris, synthetic or csv:<path>, got {s:?}"
                ))),
            },
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Iris => f.write_str("iris"),
            DatasetSpec::Synthetic => f.write_str("synthetic"),
            DatasetSpec::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl TryFrom<String> for DatasetSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DatasetSpec> for String {
    fn from(d: DatasetSpec) -> String {
        d.to_string()
    }
}

/// `½(1 − y·f)`.
pub fn margin_loss(f_value: f64, y: f64) -> Result<f64> {
    if y != 1.0 && y != -1.0 {
        return Err(Error::InvalidArgument(format!("label {y} is not +1 or -1")));
    }
    Ok(0.5 * (1.0 - y * f_value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iris_shape_and_standardization() {
        let d = load_iris().unwrap();
        assert_eq!((d.len(), d.n_features()), (100, 4));
        assert_eq!(d.y.iter().filter(|l| **l == 1.0).count(), 50);
        for (mean, std) in d.column_stats() {
            assert!(mean.abs() < 1e-9);
            assert!((std - 1.0).abs() < 1e-9);
        }
        let a = load_iris().unwrap().shuffled(3);
        assert_eq!(a, load_iris().unwrap().shuffled(3));
        assert_ne!(a.y, d.y);
    }

    #[test]
    fn synthetic_contract() {
        let a = make_synthetic(10, 100, 2.0, 5).unwrap();
        assert_eq!(a, make_synthetic(10, 100, 2.0, 5).unwrap());
        assert_eq!((a.len(), a.n_features()), (100, 10));
        for (mean, std) in a.column_stats() {
            assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);
        }
        assert!(make_synthetic(10, 1, 2.0, 5).is_err());
        assert!(make_synthetic(0, 10, 2.0, 5).is_err());
    }

    #[test]
    fn uninformative_blobs() {
        // nearest-centroid rule fitted on one half, scored on the other
        let d = make_synthetic(3, 20000, 0.0, 9).unwrap();
        let (train, test) = d.x.split_at(10000);
        let centroid = |label: f64| -> Vec<f64> {
            let rows: Vec<&Vec<f64>> = train.iter().zip(&d.y).filter(|(_, y)| **y == label).map(|(r, _)| r).collect();
            (0..3).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
        };
        let (cp, cm) = (centroid(1.0), centroid(-1.0));
        let dist = |r: &[f64], c: &[f64]| r.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let hits = test
            .iter()
            .zip(&d.y[10000..])
            .filter(|(r, y)| (if dist(r, &cp) < dist(r, &cm) { 1.0 } else { -1.0 }) == **y)
            .count();
        let acc = hits as f64 / 10000.0;
        assert!((acc - 0.5).abs() < 0.03, "accuracy {acc}");
    }

    #[test]
    fn margin_loss_examples() {
        assert_eq!(margin_loss(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(margin_loss(-1.0, 1.0).unwrap(), 1.0);
        assert_eq!(margin_loss(0.0, -1.0).unwrap(), 0.5);
        assert!(margin_loss(0.0, 0.0).is_err());
    }

    #[test]
    fn dataset_spec_parsing() {
        assert_eq!("iris".parse::<DatasetSpec>().unwrap(), DatasetSpec::Iris);
        assert_eq!(
            "csv:/tmp/a.csv".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::Csv("/tmp/a.csv".into())
        );
        assert!("mnist".parse::<DatasetSpec>().is_err());
        assert!("csv:".parse::<DatasetSpec>().is_err());
    }
}
