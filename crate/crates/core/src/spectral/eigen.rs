//! Smallest eigenpairs of symmetric operators whose spectrum lies in
//! `[0, upper]`, using only block applications of the operator.
//!
//! The iteration is Chebyshev-filtered subspace iteration: each step applies a
//! Chebyshev polynomial that is small on `[a, upper]` and grows fast below
//! `a`, where `a` is the largest current Ritz value, then re-orthonormalises
//! and performs a Rayleigh-Ritz projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `A X` for a block of column vectors.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    /// Upper end of an interval `[0, upper]` containing the spectrum.
    fn upper_bound(&self) -> f64;

    /// Optional vectors used to start the iteration.
    fn initial_guess(&self) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenConfig {
    /// Per-pair residual bound `||A v - lambda v||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest Chebyshev filter degree. The degree is raised, up to
    /// `max_degree`, until one filter amplifies the bottom of the spectrum by
    /// [`FILTER_GAIN`] relative to the damped interval.
    pub degree: usize,
    pub max_degree: usize,
    /// Extra block columns beyond the requested pairs.
    pub buffer: usize,
    /// Operators of at most this dimension are solved densely.
    pub dense_cutoff: usize,
    /// Fail with [`Error::NoConvergence`] instead of returning the current
    /// Ritz pairs when `max_iter` is reached.
    pub strict: bool,
    /// Stop early once no Ritz value moves by more than this between
    /// iterations (0 disables).
    pub stagnation: f64,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            degree: 8,
            max_degree: 1000,
            buffer: 8,
            dense_cutoff: 400,
            strict: true,
            stagnation: 0.0,
            seed: 0x11bd,
        }
    }
}

impl EigenConfig {
    /// Settings for eigenvalue curves. Only the values are needed, and a
    /// residual `r` bounds the error of each Ritz value by `r`; the values
    /// beyond the cluster count crowd near 1, where individual vectors
    /// converge slowly.
    pub fn sweep() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 100,
            strict: false,
            stagnation: 1e-9,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// One column per value.
    pub vectors: DMatrix<f64>,
    pub iterations: usize,
    /// Largest residual norm among the returned pairs.
    pub residual: f64,
    pub converged: bool,
}

/// The `k` smallest eigenpairs of a dense symmetric matrix.
pub fn dense_smallest(a: &DMatrix<f64>, k: usize) -> EigenPairs {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    idx.truncate(k);
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    EigenPairs {
        values,
        vectors,
        iterations: 0,
        residual: 0.0,
        converged: true,
    }
}

/// The `k` smallest eigenvalues of a dense symmetric matrix, without vectors.
pub fn dense_smallest_values(a: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.truncate(k);
    values
}

pub const FILTER_GAIN: f64 = 1e3;

/// Degree at which `T_d` reaches [`FILTER_GAIN`] at `lo`, for the damped
/// interval `[a, b]`.
fn filter_degree(config: &EigenConfig, lo: f64, a: f64, b: f64) -> usize {
    let x = 1.0 + 2.0 * (a - lo).max(0.0) / (b - a);
    let needed = if x > 1.0 {
        (FILTER_GAIN.acosh() / x.acosh()).ceil()
    } else {
        f64::INFINITY
    };
    (needed.min(config.max_degree as f64) as usize).max(config.degree)
}

pub fn smallest_eigenpairs(op: &dyn SymmetricOperator, k: usize, config: &EigenConfig) -> Result<EigenPairs> {
    let n = op.dim();
    let k = k.min(n);
    if n <= config.dense_cutoff || k + config.buffer >= n {
        let a = op.apply(&DMatrix::identity(n, n));
        return Ok(dense_smallest(&a, k));
    }
    let p = k + config.buffer;
    let upper = op.upper_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut v = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
    if let Some(guess) = op.initial_guess() {
        for c in 0..guess.ncols().min(p) {
            v.set_column(c, &guess.column(c));
        }
    }
    let mut v = orthonormalize(v);
    let mut prev: Option<Vec<f64>> = None;
    let mut iterations = 0;
    loop {
        // Rayleigh-Ritz
        let av = op.apply(&v);
        let h = v.transpose() * &av;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let z = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        v = &v * &z;
        let av = av * &z;
        let residual = (0..k)
            .map(|j| (av.column(j) - v.column(j) * theta[j]).norm())
            .fold(0.0, f64::max);
        let stagnated = config.stagnation > 0.0
            && prev.as_ref().is_some_and(|old| {
                old.iter().zip(&theta).take(k).all(|(a, b)| (a - b).abs() <= config.stagnation)
            });
        if residual <= config.tol || stagnated || iterations >= config.max_iter {
            let converged = residual <= config.tol;
            if !converged && config.strict {
                return Err(Error::NoConvergence { iterations, residual });
            }
            return Ok(EigenPairs {
                values: theta[..k].to_vec(),
                vectors: v.columns(0, k).into_owned(),
                iterations,
                residual,
                converged,
            });
        }
        prev = Some(theta.clone());
        let a = theta[p - 1].min(upper * (1.0 - 1e-3));
        let degree = filter_degree(config, theta[0], a, upper);
        v = orthonormalize(chebyshev_filter(op, &v, &av, degree, a, upper));
        iterations += 1;
    }
}

/// `T_deg((A - c) / e) V` with `[a, b] = [c - e, c + e]`; `av` is `A V`.
fn chebyshev_filter(op: &dyn SymmetricOperator, v: &DMatrix<f64>, av: &DMatrix<f64>, degree: usize, a: f64, b: f64) -> DMatrix<f64> {
    let e = (b - a) / 2.0;
    let c = (b + a) / 2.0;
    let mut y_prev = v.clone();
    let mut y = (av - v * c) / e;
    for _ in 1..degree {
        let ay = op.apply(&y);
        let y_next = (ay - &y * c) * (2.0 / e) - &y_prev;
        y_prev = y;
        y = y_next;
    }
    y
}

/// Orthonormal basis of the column span (thin QR), with each column scaled
/// first so that widely different filter gains do not swamp small columns.
fn orthonormalize(mut v: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    v.qr().q()
}

/// Dense matrix of an operator, one column per basis vector.
pub fn to_dense(op: &dyn SymmetricOperator) -> DMatrix<f64> {
    op.apply(&DMatrix::identity(op.dim(), op.dim()))
}

/// Residual norm `||A v - lambda v||` of one pair.
pub fn residual(op: &dyn SymmetricOperator, value: f64, vector: &DVector<f64>) -> f64 {
    let x = DMatrix::from_column_slice(vector.len(), 1, vector.as_slice());
    (op.apply(&x) - x * value).norm()
}

/// Dense symmetric matrix viewed as an operator.
pub struct DenseOperator {
    pub matrix: DMatrix<f64>,
    pub upper: f64,
}

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * x
    }

    fn upper_bound(&self) -> f64 {
        self.upper
    }
}
