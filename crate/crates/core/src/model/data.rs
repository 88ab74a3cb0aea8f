use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature rows and integer labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let d = Dataset {
            features,
            labels,
            classes,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDataset(m));
        if self.features.len() != self.labels.len() {
            return bad(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            ));
        }
        if self.classes < 2 {
            return bad("need at least 2 classes".into());
        }
        if let Some(w) = self.features.first().map(Vec::len) {
            if let Some(i) = self.features.iter().position(|r| r.len() != w) {
                return bad(format!("row {i} has {} features, expected {w}", self.features[i].len()));
            }
        }
        if let Some(l) = self.labels.iter().find(|&&l| l >= self.classes) {
            return bad(format!("label {l} outside [0, {})", self.classes));
        }
        if self.classes == 2 && !self.is_empty() && !(0..2).all(|c| self.labels.contains(&c)) {
            return bad("both classes must be present".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Writes a header `f0,…,f{w-1},label` followed by one row per sample.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = (0..self.width()).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, classes: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.clone();
        let width = header.len().saturating_sub(1);
        let expected = (0..width).map(|i| format!("f{i}")).chain(["label".to_string()]);
        if header.len() < 2 || !header.iter().eq(expected.collect::<Vec<_>>().iter().map(String::as_str)) {
            return Err(Error::InvalidDataset("header must be f0..f{w-1},label".into()));
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidDataset(format!("row {line}: `{s}`: {e}")))
            };
            let row = rec.iter().take(width).map(parse).collect::<Result<Vec<_>>>()?;
            let label = rec[width]
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidDataset(format!("row {line}: label: {e}")))?;
            features.push(row);
            labels.push(label);
        }
        Dataset::new(features, labels, classes)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidDataset(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Dataset,
    pub test: Dataset,
}

/// Two Gaussian clusters in a small raw space, pushed through a fixed
/// random linear map to the backbone width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub raw_dim: usize,
    pub width: usize,
    /// Distance between the two cluster means in units of the noise std.
    pub separation: f64,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            raw_dim: 8,
            width: super::BACKBONE_WIDTH,
            separation: 6.0,
            train: 89,
            test: 88,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn generate(&self) -> Result<DataSplit> {
        if self.raw_dim == 0 || self.width == 0 {
            return Err(Error::InvalidDataset("raw_dim and width must be >= 1".into()));
        }
        if self.train < 2 || self.test < 2 {
            return Err(Error::InvalidDataset("each split needs at least 2 samples".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::InvalidDataset("separation must be finite and >= 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

        let mut dir: Vec<f64> = (0..self.raw_dim).map(|_| normal(&mut rng)).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        dir.iter_mut().for_each(|v| *v *= 0.5 * self.separation / len);

        let scale = 1.0 / (self.raw_dim as f64).sqrt();
        let backbone: Vec<f64> = (0..self.width * self.raw_dim)
            .map(|_| normal(&mut rng) * scale)
            .collect();

        let sample = |count: usize, rng: &mut ChaCha8Rng| -> Result<Dataset> {
            let mut features = Vec::with_capacity(count);
            let mut labels = Vec::with_capacity(count);
            for i in 0..count {
                let label = i % 2;
                let sign = if label == 0 { -1.0 } else { 1.0 };
                let raw: Vec<f64> = dir.iter().map(|m| sign * m + normal(rng)).collect();
                let row = (0..self.width)
                    .map(|o| {
                        backbone[o * self.raw_dim..(o + 1) * self.raw_dim]
                            .iter()
                            .zip(&raw)
                            .map(|(w, r)| w * r)
                            .sum()
                    })
                    .collect();
                features.push(row);
                labels.push(label);
            }
            Dataset::new(features, labels, 2)
        };
        let train = sample(self.train, &mut rng)?;
        let test = sample(self.test, &mut rng)?;
        Ok(DataSplit { train, test })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shape_and_balance() {
        let split = SyntheticConfig::default().generate().unwrap();
        assert_eq!(split.train.len(), 89);
        assert_eq!(split.test.len(), 88);
        assert_eq!(split.train.width(), 512);
        assert_eq!(split.test.labels.iter().filter(|&&l| l == 1).count(), 44);
        assert_eq!(split, SyntheticConfig::default().generate().unwrap());
    }

    #[test]
    fn validation() {
        assert!(Dataset::new(vec![vec![0.0]], vec![0, 1], 2).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 0], 2).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 2], 2).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0, 1], 2).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("tensorhpo-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let cfg = SyntheticConfig {
            train: 4,
            test: 2,
            ..SyntheticConfig::default()
        };
        let split = cfg.generate().unwrap();
        split.train.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("f0,f1,"));
        assert!(text.lines().next().unwrap().ends_with(",f511,label"));
        assert_eq!(Dataset::read_csv(&path, 2).unwrap(), split.train);
        std::fs::write(&path, "a,b\n1,0\n").unwrap();
        assert!(Dataset::read_csv(&path, 2).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
