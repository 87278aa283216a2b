//! Rank and linear correlation between ground-truth and predicted scores.
//!
//! SRCC uses average ranks for tied values, which reduces to the closed-form
//! `1 - 6 Σd² / (N(N² - 1))` whenever neither vector contains ties. PLCC is
//! raw Pearson correlation with no nonlinear remapping.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("score vectors differ in length: {truth} truth vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("need at least 2 score pairs, got {0}")]
    TooFewPairs(usize),
    #[error("score vector contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("correlation undefined: {0} vector has zero variance")]
    ZeroVariance(&'static str),
    #[error("closed-form SRCC requires tie-free inputs; {0} vector has ties")]
    Ties(&'static str),
}

/// Validated pair of equal-length score vectors.
#[derive(Debug, Clone, Copy)]
pub struct ScorePairSet<'a> {
    truth: &'a [f64],
    predicted: &'a [f64],
}

impl<'a> ScorePairSet<'a> {
    pub fn new(truth: &'a [f64], predicted: &'a [f64]) -> Result<Self, MetricError> {
        if truth.len() != predicted.len() {
            return Err(MetricError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        if truth.len() < 2 {
            return Err(MetricError::TooFewPairs(truth.len()));
        }
        for (i, (t, p)) in truth.iter().zip(predicted).enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(MetricError::NonFinite(i));
            }
        }
        Ok(Self { truth, predicted })
    }

    pub fn truth(&self) -> &'a [f64] {
        self.truth
    }

    pub fn predicted(&self) -> &'a [f64] {
        self.predicted
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }
}

/// 1-based ranks, tied values sharing the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 {
        return Err(MetricError::ZeroVariance("truth"));
    }
    if var_b == 0.0 {
        return Err(MetricError::ZeroVariance("predicted"));
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn srcc(pairs: ScorePairSet<'_>) -> Result<f64, MetricError> {
    let rt = average_ranks(pairs.truth);
    let rp = average_ranks(pairs.predicted);
    pearson(&rt, &rp)
}

/// Spearman correlation from squared rank differences. Only defined when
/// neither vector has ties.
pub fn srcc_closed_form(pairs: ScorePairSet<'_>) -> Result<f64, MetricError> {
    if has_ties(pairs.truth) {
        return Err(MetricError::Ties("truth"));
    }
    if has_ties(pairs.predicted) {
        return Err(MetricError::Ties("predicted"));
    }
    let rt = average_ranks(pairs.truth);
    let rp = average_ranks(pairs.predicted);
    let sum_d2: f64 = rt.iter().zip(&rp).map(|(a, b)| (a - b) * (a - b)).sum();
    let n = pairs.len() as f64;
    Ok(1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0)))
}

/// Pearson linear correlation.
pub fn plcc(pairs: ScorePairSet<'_>) -> Result<f64, MetricError> {
    pearson(pairs.truth, pairs.predicted)
}

/// Both correlations in one call.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correlations {
    pub srcc: f64,
    pub plcc: f64,
}

pub fn correlations(truth: &[f64], predicted: &[f64]) -> Result<Correlations, MetricError> {
    let pairs = ScorePairSet::new(truth, predicted)?;
    Ok(Correlations {
        srcc: srcc(pairs)?,
        plcc: plcc(pairs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs<'a>(t: &'a [f64], p: &'a [f64]) -> ScorePairSet<'a> {
        ScorePairSet::new(t, p).unwrap()
    }

    #[test]
    fn srcc_examples() {
        assert!((srcc(pairs(&[1., 2., 3.], &[10., 20., 30.])).unwrap() - 1.0).abs() < 1e-12);
        assert!((srcc(pairs(&[1., 2., 3.], &[3., 2., 1.])).unwrap() + 1.0).abs() < 1e-12);
        // Σd² = 2, N = 3
        let r = srcc(pairs(&[1., 2., 3.], &[2., 1., 3.])).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        let r = srcc_closed_form(pairs(&[1., 2., 3.], &[2., 1., 3.])).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plcc_examples() {
        assert!((plcc(pairs(&[1., 2., 3.], &[2., 4., 6.])).unwrap() - 1.0).abs() < 1e-12);
        // 3 / sqrt(2 * 42/9)
        let expected = 3.0 / (2.0_f64 * 42.0 / 9.0).sqrt();
        let r = plcc(pairs(&[1., 2., 3.], &[1., 2., 4.])).unwrap();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.9820).abs() < 1e-4);
        assert!((plcc(pairs(&[1., 2., 3.], &[-1., -2., -3.])).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[5., 1., 5., 3.]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(
            srcc_closed_form(pairs(&[1., 1., 2.], &[1., 2., 3.])),
            Err(MetricError::Ties("truth"))
        );
        let r = srcc(pairs(&[1., 1., 2.], &[1., 2., 3.])).unwrap();
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn undefined_and_invalid_inputs() {
        assert_eq!(
            srcc(pairs(&[2., 2., 2.], &[1., 2., 3.])),
            Err(MetricError::ZeroVariance("truth"))
        );
        assert_eq!(
            plcc(pairs(&[1., 2., 3.], &[4., 4., 4.])),
            Err(MetricError::ZeroVariance("predicted"))
        );
        assert!(matches!(
            ScorePairSet::new(&[1., 2.], &[1.]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(ScorePairSet::new(&[1.], &[1.]).unwrap_err(), MetricError::TooFewPairs(1));
        assert_eq!(
            ScorePairSet::new(&[1., f64::NAN], &[1., 2.]).unwrap_err(),
            MetricError::NonFinite(1)
        );
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric((a, b) in vec_pair()) {
            let ab = pairs(&a, &b);
            let ba = pairs(&b, &a);
            if let (Ok(s1), Ok(s2)) = (srcc(ab), srcc(ba)) {
                prop_assert!((-1.0..=1.0).contains(&s1));
                prop_assert!((s1 - s2).abs() < 1e-12);
            }
            if let (Ok(p1), Ok(p2)) = (plcc(ab), plcc(ba)) {
                prop_assert!((-1.0..=1.0).contains(&p1));
                prop_assert!((p1 - p2).abs() < 1e-12);
            }
        }

        #[test]
        fn srcc_ignores_monotone_maps((a, b) in vec_pair()) {
            let mapped: Vec<f64> = b.iter().map(|x| (x / 50.0).exp() + 3.0).collect();
            if let Ok(s) = srcc(pairs(&a, &b)) {
                let t = srcc(pairs(&a, &mapped)).unwrap();
                prop_assert!((s - t).abs() < 1e-12);
            }
        }

        #[test]
        fn plcc_ignores_positive_affine_maps((a, b) in vec_pair(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let mapped: Vec<f64> = b.iter().map(|x| scale * x + shift).collect();
            if let Ok(p) = plcc(pairs(&a, &b)) {
                let q = plcc(pairs(&a, &mapped)).unwrap();
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
