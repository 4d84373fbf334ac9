//! Sparse online Gaussian process with a bounded basis-vector set.
//!
//! The posterior after `t` observations is kept in the parametrisation
//!
//! ```text
//! mean(x)     = αᵀ k_BV(x)
//! var(x)      = k(x, x) + k_BV(x)ᵀ C k_BV(x)
//! ```
//!
//! where `k_BV(x)` is the kernel vector against the basis vectors. Alongside
//! `α` and `C` the model keeps `Q = K_BV⁻¹`, the inverse Gram matrix of the
//! basis, which is needed to measure how much a new input adds to the span of
//! the basis (its *novelty*) and to remove a basis vector again.
//!
//! Each observation `(x, y)` is absorbed with the Gaussian-likelihood
//! coefficients `q = (y − μ)/(σ_n² + σ_x²)` and `r = −1/(σ_n² + σ_x²)`:
//!
//! * if the novelty `γ` exceeds `eps_tol`, `x` joins the basis and `α`, `C`,
//!   `Q` each grow by one;
//! * otherwise `x` is projected onto the current basis and only `α` and `C`
//!   change.
//!
//! When a full update pushes the basis past `capacity`, one basis vector is
//! evicted according to the [`DeletionPolicy`]. Basis vectors are stored in
//! admission order; index 0 is always the oldest survivor.
//!
//! `Q` is never re-inverted: it is grown by a rank-one update and shrunk by
//! the matching downdate, both `O(m²)`.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelParams;
use crate::linalg::{dot, Matrix};

/// Below this `|Q(i,i)|` a deletion is refused.
pub const DELETION_PIVOT_FLOOR: f64 = 1e-12;

/// Which basis vector to evict once the basis is over capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeletionPolicy {
    /// Position-information scheme: evict the vector with the lowest score.
    Pis,
    /// Oldest-point scheme: always evict index 0.
    Ops,
    /// Forgetting scheme: evict the oldest vector when the admission counter
    /// is a multiple of `h`, otherwise behave like [`DeletionPolicy::Pis`].
    Fs { h: u64 },
}

impl DeletionPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeletionPolicy::Fs { h: 0 } => Err(Error::invalid("forgetting period h must be >= 1")),
            _ => Ok(()),
        }
    }
}

/// Score used by the information-based branch of PIS and FS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreRule {
    /// `|α(j)| / K(j,j)`
    #[default]
    Magnitude,
    /// `α(j) / K(j,j)` (evicts the most negative coefficient)
    Signed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SogpConfig {
    pub capacity: usize,
    pub eps_tol: f64,
    pub policy: DeletionPolicy,
    pub score: ScoreRule,
}

impl SogpConfig {
    pub fn new(capacity: usize, eps_tol: f64, policy: DeletionPolicy) -> Self {
        SogpConfig {
            capacity,
            eps_tol,
            policy,
            score: ScoreRule::Magnitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::invalid("basis capacity must be at least 1"));
        }
        if !(self.eps_tol >= 0.0) || !self.eps_tol.is_finite() {
            return Err(Error::invalid("eps_tol must be non-negative and finite"));
        }
        self.policy.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateBranch {
    /// The input was admitted to the basis.
    Full,
    /// The input was projected onto the existing basis.
    Reduced,
}

/// Why a basis vector was chosen for eviction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeletionRule {
    Oldest,
    LowestScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deletion {
    /// Position in the basis before removal.
    pub index: usize,
    pub rule: DeletionRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    pub branch: UpdateBranch,
    pub novelty: f64,
    pub deleted: Option<Deletion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SogpModel {
    params: KernelParams,
    config: SogpConfig,
    bv: Matrix,
    alpha: Vec<f64>,
    c: Matrix,
    q: Matrix,
    /// Gram matrix of the basis, kept alongside `q` to refine projections.
    gram: Matrix,
    n_added: u64,
}

impl SogpModel {
    pub fn new(params: KernelParams, config: SogpConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let d = params.dim();
        Ok(SogpModel {
            params,
            config,
            bv: Matrix::empty_rows(d),
            alpha: Vec::new(),
            c: Matrix::zeros(0, 0),
            q: Matrix::zeros(0, 0),
            gram: Matrix::zeros(0, 0),
            n_added: 0,
        })
    }

    /// Rebuilds a model from previously exported state.
    ///
    /// Checks shapes, symmetry of `C` and `Q` and the capacity bound. The
    /// inverse-Gram relation is not re-verified here; call
    /// [`SogpModel::inverse_gram_residual`] if the source is untrusted.
    pub fn from_parts(
        params: KernelParams,
        config: SogpConfig,
        bv: Matrix,
        alpha: Vec<f64>,
        c: Matrix,
        q: Matrix,
        n_added: u64,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let m = bv.rows();
        if m > 0 {
            check_dim("basis vector width", params.dim(), bv.cols())?;
        }
        check_dim("alpha", m, alpha.len())?;
        check_dim("C rows", m, c.rows())?;
        check_dim("C cols", m, c.cols())?;
        check_dim("Q rows", m, q.rows())?;
        check_dim("Q cols", m, q.cols())?;
        if m > config.capacity {
            return Err(Error::invalid("basis larger than capacity"));
        }
        if !c.is_symmetric() || !q.is_symmetric() {
            return Err(Error::invalid("C and Q must be symmetric"));
        }
        let bv = if m == 0 {
            Matrix::empty_rows(params.dim())
        } else {
            bv
        };
        let gram = if m == 0 {
            Matrix::zeros(0, 0)
        } else {
            crate::kernel::gram_matrix(&params, &bv)?
        };
        Ok(SogpModel {
            params,
            config,
            bv,
            alpha,
            c,
            q,
            gram,
            n_added,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn config(&self) -> &SogpConfig {
        &self.config
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Current basis size `m`.
    pub fn len(&self) -> usize {
        self.bv.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.bv.rows() == 0
    }

    /// Basis vectors, oldest first.
    pub fn basis(&self) -> &Matrix {
        &self.bv
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn covariance_correction(&self) -> &Matrix {
        &self.c
    }

    pub fn inverse_gram(&self) -> &Matrix {
        &self.q
    }

    /// Cumulative number of inputs ever admitted to the basis.
    pub fn n_added(&self) -> u64 {
        self.n_added
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        check_dim("model input", self.dim(), x.len())
    }

    /// Predictive mean and variance of the latent function, without clamping
    /// the variance.
    pub fn predict_unclamped(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_input(x)?;
        let k = self.params.vector_unchecked(&self.bv, x);
        let kxx = self.params.eval_unchecked(x, x);
        if k.is_empty() {
            return Ok((0.0, kxx));
        }
        Ok((dot(&self.alpha, &k), kxx + self.c.quad_form(&k)))
    }

    /// Predictive mean and variance; the variance is clamped at zero.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (mean, var) = self.predict_unclamped(x)?;
        Ok((mean, var.max(0.0)))
    }

    /// Squared residual of projecting `k(x, ·)` onto the span of the basis.
    pub fn novelty(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let k = self.params.vector_unchecked(&self.bv, x);
        let kxx = self.params.eval_unchecked(x, x);
        if k.is_empty() {
            return Ok(kxx);
        }
        Ok((kxx - dot(&k, &self.projection(&k))).max(0.0))
    }

    /// Coefficients `K_BV⁻¹ k` of the projection of `k` onto the basis: `Q k`
    /// followed by one step of iterative refinement against the stored Gram
    /// matrix. Without the refinement, rounding error already present in `Q`
    /// is amplified by roughly `|Qk| |k| / γ` on every basis addition.
    fn projection(&self, k: &[f64]) -> Vec<f64> {
        let mut e = self.q.mul_vec(k);
        let ke = self.gram.mul_vec(&e);
        let resid: Vec<f64> = k.iter().zip(&ke).map(|(a, b)| a - b).collect();
        for (ei, d) in e.iter_mut().zip(self.q.mul_vec(&resid)) {
            *ei += d;
        }
        e
    }

    /// First and second derivatives of the Gaussian log-likelihood with respect
    /// to the predictive mean at `x`.
    pub fn gaussian_qr(&self, x: &[f64], y: f64) -> Result<(f64, f64)> {
        let (mean, var) = self.predict(x)?;
        qr_from_moments(self.params.sigma_n2, mean, var, y)
    }

    /// Absorbs one observation. See the module docs for the two branches.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<UpdateReport> {
        self.check_input(x)?;
        if !y.is_finite() {
            return Err(Error::invalid("target must be finite"));
        }
        let k = self.params.vector_unchecked(&self.bv, x);
        let kxx = self.params.eval_unchecked(x, x);

        let ck = self.c.mul_vec(&k);
        let mean = dot(&self.alpha, &k);
        let var = (kxx + dot(&k, &ck)).max(0.0);
        let (q, r) = qr_from_moments(self.params.sigma_n2, mean, var, y)?;

        let e_hat = self.projection(&k);
        let gamma = (kxx - dot(&k, &e_hat)).max(0.0);

        if gamma > self.config.eps_tol {
            let mut s = ck;
            s.push(1.0);

            self.alpha.push(0.0);
            for (a, si) in self.alpha.iter_mut().zip(&s) {
                *a += q * si;
            }

            let mut c = self.c.grow_square();
            c.add_outer(r, &s, &s);
            c.symmetrize();
            self.c = c;

            let mut e_ext = e_hat;
            e_ext.push(-1.0);
            let mut qm = self.q.grow_square();
            qm.add_outer(1.0 / gamma, &e_ext, &e_ext);
            qm.symmetrize();
            self.q = qm;

            let mut g = self.gram.grow_square();
            let last = g.rows() - 1;
            for (j, &kj) in k.iter().enumerate() {
                g[(last, j)] = kj;
                g[(j, last)] = kj;
            }
            g[(last, last)] = kxx;
            self.gram = g;

            self.bv.push_row(x)?;
            self.n_added += 1;

            let deleted = if self.len() > self.config.capacity {
                let choice = self.select_deletion()?;
                self.delete_index(choice.index)?;
                Some(choice)
            } else {
                None
            };
            Ok(UpdateReport {
                branch: UpdateBranch::Full,
                novelty: gamma,
                deleted,
            })
        } else {
            let s: Vec<f64> = ck.iter().zip(&e_hat).map(|(a, b)| a + b).collect();
            for (a, si) in self.alpha.iter_mut().zip(&s) {
                *a += q * si;
            }
            self.c.add_outer(r, &s, &s);
            self.c.symmetrize();
            Ok(UpdateReport {
                branch: UpdateBranch::Reduced,
                novelty: gamma,
                deleted: None,
            })
        }
    }

    /// Information score of basis vector `j` under the configured rule.
    pub fn score(&self, j: usize) -> f64 {
        let row = self.bv.row(j);
        let kjj = self.params.eval_unchecked(row, row);
        match self.config.score {
            ScoreRule::Magnitude => self.alpha[j].abs() / kjj,
            ScoreRule::Signed => self.alpha[j] / kjj,
        }
    }

    fn argmin_score(&self) -> usize {
        // strict `<` keeps the smallest index on ties
        let mut best = 0;
        let mut best_score = self.score(0);
        for j in 1..self.len() {
            let s = self.score(j);
            if s < best_score {
                best = j;
                best_score = s;
            }
        }
        best
    }

    /// Basis vector the configured policy would evict now, and why.
    pub fn select_deletion(&self) -> Result<Deletion> {
        if self.is_empty() {
            return Err(Error::invalid("cannot select a deletion index in an empty basis"));
        }
        let oldest = Deletion {
            index: 0,
            rule: DeletionRule::Oldest,
        };
        let by_score = || Deletion {
            index: self.argmin_score(),
            rule: DeletionRule::LowestScore,
        };
        Ok(match self.config.policy {
            DeletionPolicy::Ops => oldest,
            DeletionPolicy::Pis => by_score(),
            DeletionPolicy::Fs { h } if self.n_added % h == 0 => oldest,
            DeletionPolicy::Fs { .. } => by_score(),
        })
    }

    pub fn select_deletion_index(&self) -> Result<usize> {
        self.select_deletion().map(|d| d.index)
    }

    /// Removes basis vector `i` and folds its contribution into the survivors.
    ///
    /// With `a = α(i)`, `c = C(i,i)`, `q = Q(i,i)` and `Q*`, `C*` the i-th
    /// columns without entry `i`:
    ///
    /// ```text
    /// α ← α_r − (a/q) Q*
    /// C ← C_r + (c/q²) Q* Q*ᵀ − (1/q)(Q* C*ᵀ + C* Q*ᵀ)
    /// Q ← Q_r − (1/q) Q* Q*ᵀ
    /// ```
    ///
    /// On error the model is left untouched.
    pub fn delete_index(&mut self, i: usize) -> Result<()> {
        let m = self.len();
        if i >= m {
            return Err(Error::invalid(alloc::format!(
                "deletion index {i} out of range for basis of size {m}"
            )));
        }
        let q_star = self.q[(i, i)];
        if !(q_star.abs() >= DELETION_PIVOT_FLOOR) {
            return Err(Error::degenerate(alloc::format!(
                "inverse-Gram pivot {q_star:e} at index {i} is too small"
            )));
        }
        let a_star = self.alpha[i];
        let c_star = self.c[(i, i)];
        let q_col: Vec<f64> = (0..m).filter(|&j| j != i).map(|j| self.q[(j, i)]).collect();
        let c_col: Vec<f64> = (0..m).filter(|&j| j != i).map(|j| self.c[(j, i)]).collect();

        let mut alpha: Vec<f64> = self
            .alpha
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &a)| a)
            .collect();
        let ratio = a_star / q_star;
        for (a, qj) in alpha.iter_mut().zip(&q_col) {
            *a -= ratio * qj;
        }

        let mut c = self.c.without_row_col(i);
        c.add_outer(c_star / (q_star * q_star), &q_col, &q_col);
        c.add_outer(-1.0 / q_star, &q_col, &c_col);
        c.add_outer(-1.0 / q_star, &c_col, &q_col);
        c.symmetrize();

        let mut q = self.q.without_row_col(i);
        q.add_outer(-1.0 / q_star, &q_col, &q_col);
        q.symmetrize();

        self.alpha = alpha;
        self.c = c;
        self.q = q;
        self.gram = self.gram.without_row_col(i);
        self.bv.remove_row(i);
        Ok(())
    }

    /// `‖Q · K_BV − I‖_∞`, or 0 for an empty basis.
    pub fn inverse_gram_residual(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let k = crate::kernel::gram_matrix(&self.params, &self.bv)
            .expect("basis rows match the kernel dimension");
        self.q.matmul(&k).distance_to_identity()
    }
}

fn qr_from_moments(sigma_n2: f64, mean: f64, var: f64, y: f64) -> Result<(f64, f64)> {
    let denom = sigma_n2 + var;
    if !(denom > 0.0) {
        return Err(Error::degenerate(
            "predictive variance plus noise is not positive",
        ));
    }
    Ok(((y - mean) / denom, -1.0 / denom))
}
