//! Sparse feature vectors shared by the classifiers.

use std::fmt;

/// A sparse real vector with strictly increasing indices below `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvalidSparse(pub String);

impl fmt::Display for InvalidSparse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid sparse vector: {}", self.0)
    }
}

impl std::error::Error for InvalidSparse {}

impl SparseVector {
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self, InvalidSparse> {
        if indices.len() != values.len() {
            return Err(InvalidSparse(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(InvalidSparse("indices not strictly increasing".into()));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(InvalidSparse(format!("index {last} out of range for dim {dim}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(InvalidSparse("non-finite value".into()));
        }
        Ok(Self { dim, indices, values })
    }

    /// Build from unordered `(index, value)` pairs, summing duplicates and
    /// dropping explicit zeros.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self, InvalidSparse> {
        pairs.sort_by_key(|p| p.0);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Self::new(dim, indices, values)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let (indices, vals) = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self { dim: values.len(), indices, values: vals }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, indices: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Dot product against a dense vector. Indices past its end count as zero.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .filter(|&(i, _)| i < dense.len())
            .map(|(i, v)| v * dense[i])
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() || j < other.indices.len() {
            let a = self.indices.get(i).copied().unwrap_or(usize::MAX);
            let b = other.indices.get(j).copied().unwrap_or(usize::MAX);
            let d = match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    i += 1;
                    self.values[i - 1]
                }
                std::cmp::Ordering::Greater => {
                    j += 1;
                    other.values[j - 1]
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    self.values[i - 1] - other.values[j - 1]
                }
            };
            acc += d * d;
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            let cell = prop_oneof![Just(0.0), -5.0f64..5.0];
            (prop::collection::vec(cell.clone(), n), prop::collection::vec(cell, n))
        })
    }

    #[test]
    fn rejects_unsorted_and_out_of_range() {
        assert!(SparseVector::new(3, vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseVector::new(3, vec![3], vec![1.0]).is_err());
        assert!(SparseVector::new(3, vec![0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn from_pairs_merges_duplicates() {
        let v = SparseVector::from_pairs(5, vec![(3, 1.0), (1, 2.0), (3, 0.5), (4, 0.0)]).unwrap();
        assert_eq!(v.indices(), &[1, 3]);
        assert_eq!(v.values(), &[2.0, 1.5]);
    }

    proptest! {
        #[test]
        fn sparse_ops_match_dense((a, b) in dense_strategy()) {
            let sa = SparseVector::from_dense(&a);
            let sb = SparseVector::from_dense(&b);
            let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            prop_assert!((sa.dot(&sb) - dot).abs() < 1e-9);
            prop_assert!((sa.squared_distance(&sb) - dist).abs() < 1e-9);
            prop_assert!((sa.dot_dense(&b) - dot).abs() < 1e-9);
        }
    }
}
