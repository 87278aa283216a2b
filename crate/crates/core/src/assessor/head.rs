//! Two-layer regression head: `ŝ = w₂ · relu(W₁ f + b₁) + b₂`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AssessorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionHead {
    /// `hidden × input`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

/// Activations kept from the forward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    pre_activation: Array2<f64>,
    hidden: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl RegressionHead {
    /// Input width `input_dim`, hidden width `max(1, input_dim / 2)`, weights
    /// drawn uniformly from `±1/√fan_in`.
    pub fn new(input_dim: usize, seed: u64) -> Self {
        assert!(input_dim > 0, "head input dimension must be positive");
        let hidden = (input_dim / 2).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1_bound = 1.0 / (input_dim as f64).sqrt();
        let b2_bound = 1.0 / (hidden as f64).sqrt();
        let mut uniform = |bound: f64| rng.random_range(-bound..bound);
        let w1 = Array2::from_shape_simple_fn((hidden, input_dim), || uniform(b1_bound));
        let b1 = Array1::from_shape_simple_fn(hidden, || uniform(b1_bound));
        let w2 = Array1::from_shape_simple_fn(hidden, || uniform(b2_bound));
        let b2 = uniform(b2_bound);
        Self { w1, b1, w2, b2 }
    }

    pub fn zeros(input_dim: usize) -> Self {
        let hidden = (input_dim / 2).max(1);
        Self {
            w1: Array2::zeros((hidden, input_dim)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<(), AssessorError> {
        if x.ncols() != self.input_dim() {
            return Err(AssessorError::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
                what: "regression head input",
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, AssessorError> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<(Array1<f64>, HeadCache), AssessorError> {
        self.check_input(&x)?;
        let pre_activation = x.dot(&self.w1.t()) + &self.b1;
        let hidden = pre_activation.mapv(|v| v.max(0.0));
        let scores = hidden.dot(&self.w2) + self.b2;
        Ok((scores, HeadCache { pre_activation, hidden }))
    }

    /// Gradients of the parameters and of the input given `d loss / d scores`.
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        cache: &HeadCache,
        d_scores: &Array1<f64>,
    ) -> (HeadGradients, Array2<f64>) {
        let d_scores_col = d_scores.view().insert_axis(Axis(1));
        let w2 = d_scores.dot(&cache.hidden);
        let b2 = d_scores.sum();
        let mut d_pre = d_scores_col.dot(&self.w2.view().insert_axis(Axis(0)));
        ndarray::Zip::from(&mut d_pre)
            .and(&cache.pre_activation)
            .for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        let w1 = d_pre.t().dot(&x);
        let b1 = d_pre.sum_axis(Axis(0));
        let d_x = d_pre.dot(&self.w1);
        (HeadGradients { w1, b1, w2, b2 }, d_x)
    }

    /// Parameter slices in a fixed order: `w1`, `b1`, `w2`, `b2`.
    pub fn parameter_slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            std::slice::from_mut(&mut self.b2),
        ]
    }
}

impl HeadGradients {
    /// Flattened in the order of [`RegressionHead::parameter_slices_mut`].
    pub fn into_groups(self) -> [Vec<f64>; 4] {
        [
            self.w1.into_iter().collect(),
            self.b1.to_vec(),
            self.w2.to_vec(),
            vec![self.b2],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hidden_width_halves_input() {
        let h = RegressionHead::new(512, 0);
        assert_eq!((h.input_dim(), h.hidden_dim()), (512, 256));
        assert_eq!(RegressionHead::new(1, 0).hidden_dim(), 1);
    }

    #[test]
    fn zero_head_scores_zero() {
        let h = RegressionHead::zeros(4);
        let s = h.forward(array![[1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 1.0]].view()).unwrap();
        assert_eq!(s, array![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward() {
        let h = RegressionHead {
            w1: array![[1.0, 0.0], [0.0, -1.0]],
            b1: array![0.5, 0.0],
            w2: array![2.0, 3.0],
            b2: 1.0,
        };
        // hidden = relu([1.5, -2]) = [1.5, 0] → 2·1.5 + 1
        let s = h.forward(array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(s, array![4.0]);
        assert!(h.forward(array![[1.0, 2.0, 3.0]].view()).is_err());
    }
}
