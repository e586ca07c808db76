//! Label-folded, bias-augmented training data.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Default bias augmentation constant.
pub const DEFAULT_B_CONST: f64 = 0.01;

/// Which class a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    Positive,
    Negative,
}

/// Training matrix whose column `i` is `y_i * [x_i; B]`.
///
/// Positive samples occupy indices `0..n_plus`, negatives follow. The
/// original input order is kept in `permutation` (`permutation[i]` is the
/// input position of internal sample `i`).
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    n_plus: usize,
    b_const: f64,
    permutation: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from raw samples and labels (`true` = positive).
    ///
    /// Samples are folded by label, augmented by `b_const` and reordered so
    /// that positives come first (stable within each class).
    pub fn from_samples(samples: &[Vec<f64>], labels: &[bool], b_const: f64) -> Self {
        assert_eq!(samples.len(), labels.len(), "one label per sample");
        let raw_dim = samples.iter().map(Vec::len).max().unwrap_or(0);
        let order: Vec<usize> = (0..samples.len())
            .filter(|&i| labels[i])
            .chain((0..samples.len()).filter(|&i| !labels[i]))
            .collect();
        let n_plus = labels.iter().filter(|&&l| l).count();
        let d = raw_dim + 1;
        let mut x = DMatrix::zeros(d, samples.len());
        for (col, &src) in order.iter().enumerate() {
            let y = if labels[src] { 1.0 } else { -1.0 };
            for (r, v) in samples[src].iter().enumerate() {
                x[(r, col)] = y * v;
            }
            x[(raw_dim, col)] = y * b_const;
        }
        Dataset {
            x,
            n_plus,
            b_const,
            permutation: order,
        }
    }

    /// Wraps an already folded and augmented matrix. Columns `0..n_plus` are
    /// taken to be positives.
    pub fn from_folded(x: DMatrix<f64>, n_plus: usize, b_const: f64) -> Self {
        assert!(n_plus <= x.ncols());
        let permutation = (0..x.ncols()).collect();
        Dataset {
            x,
            n_plus,
            b_const,
            permutation,
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n() - self.n_plus
    }

    /// Augmented dimension `d`.
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn feature_dim_raw(&self) -> usize {
        self.dim() - 1
    }

    pub fn b_const(&self) -> f64 {
        self.b_const
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn class(&self, i: usize) -> Class {
        if i < self.n_plus {
            Class::Positive
        } else {
            Class::Negative
        }
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.x.column(i).into_owned()
    }

    /// Upper box bound of sample `i` at the given costs.
    pub fn upper(&self, i: usize, c_plus: f64, c_minus: f64) -> f64 {
        match self.class(i) {
            Class::Positive => c_plus,
            Class::Negative => c_minus,
        }
    }

    /// Submatrix made of the listed columns.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.x.select_columns(idx)
    }

    /// Sum of the listed columns.
    pub fn column_sum(&self, idx: &[usize]) -> DVector<f64> {
        let mut s = DVector::zeros(self.dim());
        for &i in idx {
            s += self.x.column(i);
        }
        s
    }

    /// Raw (unfolded, unaugmented) features and label of sample `i`.
    pub fn raw_sample(&self, i: usize) -> (Vec<f64>, bool) {
        let positive = i < self.n_plus;
        let y = if positive { 1.0 } else { -1.0 };
        let col = self.x.column(i);
        let feats = (0..self.feature_dim_raw()).map(|r| y * col[r]).collect();
        (feats, positive)
    }

    /// Copy of the dataset with sample `i` appended again (same label).
    pub fn with_duplicate(&self, i: usize) -> Self {
        let mut samples = Vec::with_capacity(self.n() + 1);
        let mut labels = Vec::with_capacity(self.n() + 1);
        for k in 0..self.n() {
            let (f, l) = self.raw_sample(k);
            samples.push(f);
            labels.push(l);
        }
        let (f, l) = self.raw_sample(i);
        samples.push(f);
        labels.push(l);
        Dataset::from_samples(&samples, &labels, self.b_const)
    }
}

/// Two Gaussian classes in `dim` raw dimensions with means `+shift` and
/// `-shift` along every axis and unit variance.
pub fn gaussian_classes(
    n_plus: usize,
    n_minus: usize,
    dim: usize,
    shift: f64,
    b_const: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(n_plus + n_minus);
    let mut labels = Vec::with_capacity(n_plus + n_minus);
    for k in 0..n_plus + n_minus {
        let positive = k < n_plus;
        let mu = if positive { shift } else { -shift };
        samples.push((0..dim).map(|_| mu + normal.sample(&mut rng)).collect());
        labels.push(positive);
    }
    Dataset::from_samples(&samples, &labels, b_const)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_and_augmentation() {
        let d = Dataset::from_samples(&[vec![2.0], vec![2.0]], &[false, true], 0.01);
        assert_eq!(d.n_plus(), 1);
        assert_eq!(d.column(0).as_slice(), &[2.0, 0.01]);
        assert_eq!(d.column(1).as_slice(), &[-2.0, -0.01]);
        assert_eq!(d.permutation(), &[1, 0]);
        assert_eq!(d.raw_sample(1), (vec![2.0], false));
    }

    #[test]
    fn gaussian_is_reproducible() {
        let a = gaussian_classes(3, 4, 2, 1.0, 0.01, 7);
        let b = gaussian_classes(3, 4, 2, 1.0, 0.01, 7);
        assert_eq!(a.x(), b.x());
        assert_eq!(a.dim(), 3);
        assert_eq!(a.n_minus(), 4);
    }
}
