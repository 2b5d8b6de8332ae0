use crate::error::{FlError, Result};

/// Row-major feature matrix with integer labels, owned by one party.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDataset {
    owner: String,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl LocalDataset {
    pub fn new(owner: impl Into<String>, dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(FlError::FeatureWidth { expected: 1, got: 0 });
        }
        let rows = features.len() / dim;
        if features.len() % dim != 0 || rows != labels.len() {
            return Err(FlError::RowMismatch {
                rows,
                labels: labels.len(),
            });
        }
        Ok(Self {
            owner: owner.into(),
            dim,
            features,
            labels,
        })
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// Copies the given rows into a new dataset owned by `owner`.
    pub fn select(&self, owner: impl Into<String>, rows: &[usize]) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Self {
            owner: owner.into(),
            dim: self.dim,
            features,
            labels,
        }
    }

    /// Checks the dataset against a model's input width and class count.
    pub fn check_shape(&self, input_width: usize, classes: usize) -> Result<()> {
        if self.dim != input_width {
            return Err(FlError::FeatureWidth {
                expected: input_width,
                got: self.dim,
            });
        }
        if let Some((row, &label)) = self.labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(FlError::LabelOutOfRange { row, label, classes });
        }
        Ok(())
    }
}
