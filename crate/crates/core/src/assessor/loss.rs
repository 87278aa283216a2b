//! Mean squared error objective.

use ndarray::Array1;

use super::AssessorError;

pub fn mse_loss(predicted: &[f64], labels: &[f64]) -> Result<f64, AssessorError> {
    check(predicted, labels)?;
    let sum: f64 = predicted.iter().zip(labels).map(|(p, l)| (p - l) * (p - l)).sum();
    Ok(sum / predicted.len() as f64)
}

/// `d loss / d predicted` for [`mse_loss`].
pub fn mse_gradient(predicted: &[f64], labels: &[f64]) -> Result<Array1<f64>, AssessorError> {
    check(predicted, labels)?;
    let n = predicted.len() as f64;
    Ok(predicted.iter().zip(labels).map(|(p, l)| 2.0 * (p - l) / n).collect())
}

fn check(predicted: &[f64], labels: &[f64]) -> Result<(), AssessorError> {
    if predicted.is_empty() {
        return Err(AssessorError::EmptyBatch);
    }
    if predicted.len() != labels.len() {
        return Err(AssessorError::BatchMismatch {
            generated: predicted.len(),
            reference: labels.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mse_loss(&[1.0, 2.5], &[1.0, 2.5]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        let labels = [0.3, 4.1, 2.2];
        let shifted: Vec<f64> = labels.iter().map(|l| l + 0.75).collect();
        assert!((mse_loss(&shifted, &labels).unwrap() - 0.5625).abs() < 1e-12);
        assert!(matches!(mse_loss(&[], &[]), Err(AssessorError::EmptyBatch)));
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let p = [1.0, -0.5, 2.0];
        let l = [0.5, 0.5, 0.5];
        let g = mse_gradient(&p, &l).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = p;
            let mut down = p;
            up[i] += h;
            down[i] -= h;
            let fd = (mse_loss(&up, &l).unwrap() - mse_loss(&down, &l).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
}
