//! Exact batch GP regression.
//!
//! Used as the reference the online model is checked against. The posterior is
//! computed from a Cholesky factor of `K_XX + σ_n² I`; nothing is inverted
//! explicitly.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{gram_matrix, KernelParams};
use crate::linalg::{dot, Cholesky, Matrix};

#[derive(Debug, Clone)]
pub struct BatchGp {
    params: KernelParams,
    inputs: Matrix,
    targets: Vec<f64>,
    chol: Cholesky,
    /// `(K_XX + σ_n² I)⁻¹ y`
    weights: Vec<f64>,
}

impl BatchGp {
    pub fn fit(params: &KernelParams, inputs: &Matrix, targets: &[f64]) -> Result<Self> {
        params.validate()?;
        if inputs.rows() == 0 {
            return Err(Error::invalid("batch GP needs at least one training point"));
        }
        check_dim("training input width", params.dim(), inputs.cols())?;
        check_dim("training targets", inputs.rows(), targets.len())?;
        let mut k = gram_matrix(params, inputs)?;
        for i in 0..k.rows() {
            k[(i, i)] += params.sigma_n2;
        }
        let chol = Cholesky::factor(&k)?;
        let weights = chol.solve(targets);
        Ok(BatchGp {
            params: params.clone(),
            inputs: inputs.clone(),
            targets: targets.to_vec(),
            chol,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Posterior mean and variance of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim("test input", self.params.dim(), x.len())?;
        let k_star = self.params.vector_unchecked(&self.inputs, x);
        let mean = dot(&k_star, &self.weights);
        let v = self.chol.forward(&k_star);
        let var = self.params.eval_unchecked(x, x) - dot(&v, &v);
        Ok((mean, var.max(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_closed_form() {
        let p = KernelParams::new(1.0, 0.04, vec![0.5]).unwrap();
        let gp = BatchGp::fit(&p, &Matrix::from_rows(&[[0.2]]).unwrap(), &[1.0]).unwrap();
        let (m, v) = gp.predict(&[0.2]).unwrap();
        assert_relative_eq!(m, 1.0 / 1.04, epsilon = 1e-14);
        assert_relative_eq!(v, 1.0 - 1.0 / 1.04, epsilon = 1e-14);
        assert_relative_eq!(v, 0.038462, epsilon = 1e-6);
    }

    #[test]
    fn duplicates_are_fine_with_noise() {
        let p = KernelParams::new(1.0, 0.04, vec![0.5]).unwrap();
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let gp = BatchGp::fit(&p, &x, &[1.0, 1.2, 0.8]).unwrap();
        let (m, _) = gp.predict(&[1.0]).unwrap();
        assert!((m - 3.0 / 3.04).abs() < 1e-12);
    }

    #[test]
    fn thirty_random_points_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = KernelParams::new(1.0, 0.04, vec![0.5, 0.5, 0.2]).unwrap();
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gp = BatchGp::fit(&p, &Matrix::from_rows(&rows).unwrap(), &y).unwrap();
        for r in &rows {
            let (_, v) = gp.predict(r).unwrap();
            assert!(v <= 1.0 + 1e-10 && v >= 0.0);
        }
    }

    #[test]
    fn far_away_recovers_prior_and_training_points_are_more_certain() {
        let p = KernelParams::new(2.0, 0.04, vec![1.0]).unwrap();
        let gp = BatchGp::fit(&p, &Matrix::from_rows(&[[0.0], [1.0]]).unwrap(), &[1.0, -1.0]).unwrap();
        let (m, v) = gp.predict(&[100.0]).unwrap();
        assert!(m.abs() < 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        let (_, v_train) = gp.predict(&[0.0]).unwrap();
        assert!(v_train < v);
    }

    #[test]
    fn noise_free_limit_interpolates() {
        let p = KernelParams::new(1.0, 1e-10, vec![0.5]).unwrap();
        let xs = [[-1.0], [0.0], [1.3], [2.1]];
        let ys = [0.3, -0.2, 1.1, 0.4];
        let gp = BatchGp::fit(&p, &Matrix::from_rows(&xs).unwrap(), &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((gp.predict(x).unwrap().0 - y).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let p = KernelParams::new(1.0, 0.04, vec![0.5]).unwrap();
        assert!(BatchGp::fit(&p, &Matrix::empty_rows(1), &[]).is_err());
        assert!(BatchGp::fit(&p, &Matrix::from_rows(&[[0.0]]).unwrap(), &[1.0, 2.0]).is_err());
        let gp = BatchGp::fit(&p, &Matrix::from_rows(&[[0.0]]).unwrap(), &[1.0]).unwrap();
        assert!(gp.predict(&[0.0, 0.0]).is_err());
    }
}
