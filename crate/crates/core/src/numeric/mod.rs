//! Dense numeric kernel: matrices, seeded randomness, initializers,
//! activations, Adam and a central-difference gradient oracle.

mod activation;
mod adam;
mod matrix;
mod rng;

pub use activation::{sigmoid, ActivationKind};
pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use rng::RngState;

use crate::error::{Error, Result};

/// Glorot/Xavier uniform initialization: entries in `[-b, b]` with
/// `b = sqrt(6 / (rows + cols))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut RngState) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "glorot_uniform needs non-zero dimensions, got {rows}x{cols}"
        )));
    }
    let bound = glorot_bound(rows, cols);
    let data = (0..rows * cols)
        .map(|_| (2.0 * rng.next_f64() - 1.0) * bound)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Samples from `N(0, std^2)`, rejecting anything outside `±2·std`.
pub fn truncated_normal(len: usize, std: f64, rng: &mut RngState) -> Result<Vec<f64>> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::invalid(format!("truncated_normal std must be > 0, got {std}")));
    }
    let out = (0..len)
        .map(|_| loop {
            let z = rng.next_gaussian();
            if z.abs() <= 2.0 {
                break z * std;
            }
        })
        .collect();
    Ok(out)
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NumericFailure(format!(
                "objective is not finite around coordinate {i}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_square_bound_is_one() {
        let mut rng = RngState::new(7);
        let m = glorot_uniform(3, 3, &mut rng).unwrap();
        assert!(m.as_slice().iter().all(|x| x.abs() <= 1.0));
        assert_eq!(glorot_bound(3, 3), 1.0);
    }

    #[test]
    fn glorot_scalar_bound() {
        assert!((glorot_bound(1, 1) - 3f64.sqrt()).abs() < 1e-15);
        let mut rng = RngState::new(1);
        for _ in 0..200 {
            let m = glorot_uniform(1, 1, &mut rng).unwrap();
            assert!(m.get(0, 0).abs() <= 1.7321);
        }
    }

    #[test]
    fn glorot_rejects_zero_dims() {
        let mut rng = RngState::new(1);
        assert!(matches!(glorot_uniform(0, 3, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(glorot_uniform(3, 0, &mut rng).is_err());
    }

    #[test]
    fn glorot_is_deterministic() {
        let a = glorot_uniform(4, 9, &mut RngState::new(42)).unwrap();
        let b = glorot_uniform(4, 9, &mut RngState::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_normal_respects_two_sigma() {
        let mut rng = RngState::new(3);
        let v = truncated_normal(1000, 1e-3, &mut rng).unwrap();
        assert_eq!(v.len(), 1000);
        assert!(v.iter().all(|x| x.abs() <= 2e-3));
        assert!(truncated_normal(0, 1e-3, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn truncated_normal_rejects_bad_std() {
        let mut rng = RngState::new(3);
        assert!(truncated_normal(3, 0.0, &mut rng).is_err());
        assert!(truncated_normal(3, -1.0, &mut rng).is_err());
    }

    #[test]
    fn truncated_normal_is_deterministic() {
        let a = truncated_normal(50, 0.1, &mut RngState::new(9)).unwrap();
        let b = truncated_normal(50, 0.1, &mut RngState::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn finite_diff_square() {
        let g = finite_diff_gradient(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_constant_and_sigmoid() {
        let g = finite_diff_gradient(|_| 4.2, &[1.0, -2.0, 0.5], 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        let g = finite_diff_gradient(|x| ActivationKind::Sigmoid.apply(x[0]), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_reports_non_finite() {
        let r = finite_diff_gradient(|x| (x[0]).ln(), &[0.0], 1e-3);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
        assert!(finite_diff_gradient(|x| x[0], &[0.0], 0.0).is_err());
    }
}
