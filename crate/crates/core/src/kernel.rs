//! ARD Gaussian kernel.
//!
//! `k(x, x') = σ_s² · exp(−(x − x')ᵀ Λ (x − x') / 2)` with `Λ = diag(l_1, …, l_d)`.
//! The diagonal entries multiply the squared differences directly, so a larger
//! `l_i` means a *shorter* correlation length along dimension `i`.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    /// Signal variance σ_s².
    pub sigma_s2: f64,
    /// Observation noise variance σ_n². Never added by the kernel itself.
    pub sigma_n2: f64,
    /// Diagonal of Λ, one entry per input dimension.
    pub lengthscale_diag: Vec<f64>,
}

impl KernelParams {
    pub fn new(sigma_s2: f64, sigma_n2: f64, lengthscale_diag: Vec<f64>) -> Result<Self> {
        let p = KernelParams {
            sigma_s2,
            sigma_n2,
            lengthscale_diag,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s2 > 0.0) || !self.sigma_s2.is_finite() {
            return Err(Error::invalid("sigma_s2 must be positive and finite"));
        }
        if !(self.sigma_n2 >= 0.0) || !self.sigma_n2.is_finite() {
            return Err(Error::invalid("sigma_n2 must be non-negative and finite"));
        }
        if self.lengthscale_diag.is_empty() {
            return Err(Error::invalid("kernel needs at least one input dimension"));
        }
        if let Some(l) = self
            .lengthscale_diag
            .iter()
            .find(|l| !(**l > 0.0) || !l.is_finite())
        {
            return Err(Error::invalid(alloc::format!(
                "length-scale entry {l} is not positive"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lengthscale_diag.len()
    }

    /// Kernel value without dimension checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((a, b), l) in x.iter().zip(y).zip(&self.lengthscale_diag) {
            let d = a - b;
            acc += l * d * d;
        }
        self.sigma_s2 * libm::exp(-0.5 * acc)
    }

    pub(crate) fn vector_unchecked(&self, rows: &Matrix, x: &[f64]) -> Vec<f64> {
        rows.row_iter().map(|r| self.eval_unchecked(r, x)).collect()
    }
}

pub fn kernel_eval(params: &KernelParams, x: &[f64], x2: &[f64]) -> Result<f64> {
    check_dim("kernel input x", params.dim(), x.len())?;
    check_dim("kernel input x'", params.dim(), x2.len())?;
    Ok(params.eval_unchecked(x, x2))
}

/// `[k(X_1, x), …, k(X_t, x)]` for the rows of `rows`. An empty `rows` gives an
/// empty vector.
pub fn kernel_vector(params: &KernelParams, rows: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("kernel input x", params.dim(), x.len())?;
    if rows.rows() > 0 {
        check_dim("kernel rows", params.dim(), rows.cols())?;
    }
    Ok(params.vector_unchecked(rows, x))
}

/// Symmetric matrix of pairwise kernel values.
pub fn gram_matrix(params: &KernelParams, rows: &Matrix) -> Result<Matrix> {
    let t = rows.rows();
    if t == 0 {
        return Err(Error::invalid("gram matrix needs at least one row"));
    }
    check_dim("kernel rows", params.dim(), rows.cols())?;
    let mut k = Matrix::zeros(t, t);
    for i in 0..t {
        k[(i, i)] = params.eval_unchecked(rows.row(i), rows.row(i));
        for j in 0..i {
            let v = params.eval_unchecked(rows.row(i), rows.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}
