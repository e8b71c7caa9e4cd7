//! Softmax cross-entropy over masked nodes.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Mean negative log-softmax of the true class over masked nodes, and
/// the gradient with respect to the logits (zero on unmasked rows).
/// Softmax is computed with max-subtraction.
pub fn cross_entropy<S: Scalar>(
    logits: &Matrix<S>,
    labels: &[Option<u32>],
    mask: &[bool],
) -> Result<(S, Matrix<S>)> {
    assert_eq!(logits.rows(), labels.len(), "cross_entropy: label count");
    assert_eq!(logits.rows(), mask.len(), "cross_entropy: mask length");
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::Graph("cross_entropy: empty mask".into()));
    }
    let inv_count = S::one() / S::from_usize(count);
    let classes = logits.cols();
    let mut loss = S::zero();
    let mut d_logits = Matrix::zeros(logits.rows(), classes);
    for v in 0..logits.rows() {
        if !mask[v] {
            continue;
        }
        let label = labels[v].ok_or_else(|| {
            Error::Graph(format!("cross_entropy: masked node {v} has no label"))
        })? as usize;
        if label >= classes {
            return Err(Error::Graph(format!(
                "cross_entropy: node {v} has label {label} but only {classes} logits"
            )));
        }
        let row = logits.row(v);
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let mut denom = S::zero();
        for &z in row {
            denom += (z - max).exp();
        }
        let log_denom = denom.ln();
        loss += -(row[label] - max - log_denom);
        let d_row: &mut [S] = d_logits.row_mut(v);
        for (c, &z) in row.iter().enumerate() {
            let p = (z - max).exp() / denom;
            d_row[c] = p * inv_count;
        }
        d_row[label] -= inv_count;
    }
    Ok((loss * inv_count, d_logits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, grads_close, init_params, Init, Rng};

    #[test]
    fn uniform_logits_give_ln_classes() {
        let logits = Matrix::from_rows(&[vec![0.25; 6], vec![-3.0; 6]]);
        let labels = vec![Some(2), Some(5)];
        let (loss, _) = cross_entropy(&logits, &labels, &[true, true]).unwrap();
        assert!((loss - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_logit_drives_loss_to_zero() {
        let mut row = vec![0.0; 6];
        row[3] = 50.0;
        let logits = Matrix::from_rows(&[row]);
        let (loss, _) = cross_entropy(&logits, &[Some(3)], &[true]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(6);
        let logits = init_params(&mut rng, 4, 6, Init::Uniform { bound: 2.0 });
        let labels = vec![Some(0), Some(3), Some(5), Some(1)];
        let mask = vec![true, false, true, true];
        let (_, analytic) = cross_entropy(&logits, &labels, &mask).unwrap();
        let fd = finite_diff_grad(
            |p: &[f64]| {
                let m = Matrix::from_vec(4, 6, p.to_vec());
                cross_entropy(&m, &labels, &mask).unwrap().0
            },
            logits.data(),
            1e-5,
        );
        for (a, f) in analytic.data().iter().zip(&fd) {
            assert!(grads_close(*a, *f, 1e-4, 1e-8), "{a} vs {f}");
        }
    }

    #[test]
    fn unmasked_rows_get_zero_gradient() {
        let logits = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]);
        let (_, d) = cross_entropy(&logits, &[Some(0), Some(1)], &[false, true]).unwrap();
        assert!(d.row(0).iter().all(|&v| v == 0.0));
        assert!(d.row(1).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn empty_mask_is_an_error() {
        let logits = Matrix::from_rows(&[vec![1.0, 2.0]]);
        assert!(cross_entropy(&logits, &[Some(0)], &[false]).is_err());
    }

    #[test]
    fn loss_is_invariant_to_constant_logit_shift() {
        let mut rng = Rng::new(12);
        let logits: Matrix<f64> = init_params(&mut rng, 3, 6, Init::Uniform { bound: 1.0 });
        let labels = vec![Some(1), Some(2), Some(0)];
        let mask = vec![true, true, true];
        let (loss, _) = cross_entropy(&logits, &labels, &mask).unwrap();
        let mut shifted = logits.clone();
        for r in 0..3 {
            for v in shifted.row_mut(r) {
                *v += 17.5;
            }
        }
        let (loss2, _) = cross_entropy(&shifted, &labels, &mask).unwrap();
        assert!((loss - loss2).abs() < 1e-10);
    }
}
