//! The LLPD kernel matrix and its normalized Laplacian in compressed form.
//!
//! Points in one finest-scale component ("block") are at LLPD `t_1` from each
//! other and at identical LLPD from every other point, so the kernel matrix
//! `W` is constant on block pairs. Vectors that are constant on blocks are
//! stored with one entry per block.

use nalgebra::DMatrix;

use super::eigen::{smallest_eigenpairs, EigenConfig, EigenPairs, SymmetricOperator};
use crate::error::{invalid, Result};
use crate::llpd::{MultiscaleDendrogram, ScaleLadder};

/// Gaussian kernel `f(x) = exp(-x^2 / sigma^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    pub sigma: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("kernel scale must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (-(x * x) / (self.sigma * self.sigma)).exp()
    }
}

#[derive(Clone, Debug)]
pub struct LlpdLaplacianOperator {
    /// Block of every point.
    block_of: Vec<u32>,
    block_sizes: Vec<f64>,
    /// `parents[s][c]` links scale `s` to `s + 1`.
    parents: Vec<Vec<u32>>,
    counts: Vec<usize>,
    /// `kernel[s] = f(t_s)`.
    kernel: Vec<f64>,
    /// `f(t_s) - f(t_{s+1})`, with `f(t_{m+1}) = 0`.
    kernel_steps: Vec<f64>,
    degrees: Vec<f64>,
    /// `sqrt(n_b / d_b)` per block.
    scale: Vec<f64>,
}

impl LlpdLaplacianOperator {
    pub fn new(dendro: &MultiscaleDendrogram, ladder: &ScaleLadder, kernel: KernelConfig) -> Result<Self> {
        if dendro.scales() != ladder.len() {
            return Err(invalid("dendrogram and ladder have different scale counts"));
        }
        let m = dendro.scales();
        if dendro.component_count(m - 1) != 1 {
            return Err(invalid("the top scale must be a single component"));
        }
        let kvals: Vec<f64> = ladder.thresholds().iter().map(|&t| kernel.eval(t)).collect();
        let kernel_steps = (0..m)
            .map(|s| kvals[s] - kvals.get(s + 1).copied().unwrap_or(0.0))
            .collect();
        let mut op = Self {
            block_of: dendro.labels(0).to_vec(),
            block_sizes: dendro.sizes(0).iter().map(|&s| s as f64).collect(),
            parents: (0..m - 1).map(|s| dendro.parents(s).to_vec()).collect(),
            counts: dendro.component_counts(),
            kernel: kvals,
            kernel_steps,
            degrees: Vec::new(),
            scale: Vec::new(),
        };
        op.degrees = op.matvec(&vec![1.0; op.blocks()]);
        op.scale = op
            .block_sizes
            .iter()
            .zip(&op.degrees)
            .map(|(n, d)| (n / d).sqrt())
            .collect();
        Ok(op)
    }

    /// Number of blocks (finest-scale components).
    pub fn blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self) -> &[u32] {
        &self.block_of
    }

    pub fn block_sizes(&self) -> &[f64] {
        &self.block_sizes
    }

    /// Degree of every point in each block.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `f(t_s)` per scale.
    pub fn kernel_values(&self) -> &[f64] {
        &self.kernel
    }

    /// `W x` for a block-constant `x`, both given per block.
    ///
    /// Subtree sums `Sigma` are accumulated from the finest scale up; the
    /// product for block `b` is `sum_s f(t_s) (xi_b(s) - xi_b(s-1))` with
    /// `xi_b(s)` the sum over `b`'s ancestor at scale `s`. Summation by parts
    /// turns this into `sum_s (f(t_s) - f(t_{s+1})) xi_b(s)`, pushed down
    /// the tree in one pass.
    pub fn fast_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.blocks() {
            return Err(invalid(format!("expected {} block values, got {}", self.blocks(), x.len())));
        }
        Ok(self.matvec(x))
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.counts.len();
        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(m);
        sums.push(x.iter().zip(&self.block_sizes).map(|(x, n)| x * n).collect());
        for s in 0..m - 1 {
            let mut up = vec![0.0; self.counts[s + 1]];
            for (c, &v) in sums[s].iter().enumerate() {
                up[self.parents[s][c] as usize] += v;
            }
            sums.push(up);
        }
        let mut acc: Vec<f64> = sums[m - 1].iter().map(|v| v * self.kernel_steps[m - 1]).collect();
        for s in (0..m - 1).rev() {
            acc = sums[s]
                .iter()
                .enumerate()
                .map(|(c, v)| acc[self.parents[s][c] as usize] + self.kernel_steps[s] * v)
                .collect();
        }
        acc
    }

    /// [`Self::matvec`] for `cols` vectors stored row-major, one row per block.
    fn matvec_rows(&self, x: &[f64], cols: usize) -> Vec<f64> {
        let m = self.counts.len();
        let mut sums: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut first = x.to_vec();
        for (row, n) in first.chunks_exact_mut(cols).zip(&self.block_sizes) {
            row.iter_mut().for_each(|v| *v *= n);
        }
        sums.push(first);
        for s in 0..m - 1 {
            let mut up = vec![0.0; self.counts[s + 1] * cols];
            for (c, row) in sums[s].chunks_exact(cols).enumerate() {
                let p = self.parents[s][c] as usize;
                for (u, v) in up[p * cols..(p + 1) * cols].iter_mut().zip(row) {
                    *u += v;
                }
            }
            sums.push(up);
        }
        let top = self.kernel_steps[m - 1];
        let mut acc: Vec<f64> = sums[m - 1].iter().map(|v| v * top).collect();
        for s in (0..m - 1).rev() {
            let step = self.kernel_steps[s];
            let mut down = sums[s].clone();
            for (c, row) in down.chunks_exact_mut(cols).enumerate() {
                let p = self.parents[s][c] as usize;
                for (d, a) in row.iter_mut().zip(&acc[p * cols..(p + 1) * cols]) {
                    *d = a + step * *d;
                }
            }
            acc = down;
        }
        acc
    }

    /// `W x` for a full per-point vector that is constant on blocks.
    pub fn matvec_points(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(invalid(format!("expected {} values, got {}", self.n(), x.len())));
        }
        let mut compressed = vec![0.0; self.blocks()];
        for (i, &b) in self.block_of.iter().enumerate() {
            compressed[b as usize] = x[i];
        }
        let wx = self.matvec(&compressed);
        Ok(self.block_of.iter().map(|&b| wx[b as usize]).collect())
    }

    /// The `k` smallest eigenpairs of the full `n x n` normalized Laplacian.
    ///
    /// On block-constant vectors the Laplacian is the compressed operator
    /// below. Every vector that sums to zero within each block is an
    /// eigenvector with eigenvalue exactly 1, since such a vector is
    /// annihilated by `W`; those `n - nu_1` directions are merged in
    /// explicitly, with a Helmert basis inside each block.
    pub fn eigs(&self, k: usize, config: &EigenConfig) -> Result<Spectrum> {
        let k = k.min(self.n());
        let pairs = smallest_eigenpairs(self, k.min(self.blocks()), config)?;
        Ok(self.merge_unit_eigenspace(pairs, k))
    }

    fn merge_unit_eigenspace(&self, pairs: EigenPairs, k: usize) -> Spectrum {
        let n = self.n();
        let compressed_count = pairs.values.len();
        let from_compressed = pairs.values.iter().take_while(|&&v| v <= 1.0).count();
        let extra = n - self.blocks();
        let take_unit = k.saturating_sub(from_compressed).min(extra);
        let take_compressed = (k - take_unit).min(compressed_count);

        // points of each block, in index order
        let mut members = vec![Vec::new(); self.blocks()];
        for (i, &b) in self.block_of.iter().enumerate() {
            members[b as usize].push(i);
        }
        let mut columns: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for j in 0..take_compressed {
            let y = pairs.vectors.column(j);
            let v = self
                .block_of
                .iter()
                .map(|&b| y[b as usize] / self.block_sizes[b as usize].sqrt())
                .collect();
            columns.push((pairs.values[j], v));
        }
        'blocks: for block in &members {
            for r in 1..block.len() {
                if columns.len() >= take_compressed + take_unit {
                    break 'blocks;
                }
                let mut v = vec![0.0; n];
                let norm = ((r * (r + 1)) as f64).sqrt();
                for &i in &block[..r] {
                    v[i] = 1.0 / norm;
                }
                v[block[r]] = -(r as f64) / norm;
                columns.push((1.0, v));
            }
        }
        columns.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values = columns.iter().map(|c| c.0).collect();
        let vectors = DMatrix::from_fn(n, columns.len(), |r, c| columns[c].1[r]);
        Spectrum {
            values,
            vectors,
            converged: pairs.converged,
            residual: pairs.residual,
            iterations: pairs.iterations,
        }
    }

    /// Dense `n x n` kernel matrix, for checks on small inputs.
    pub fn dense_w(&self) -> DMatrix<f64> {
        // kernel between two blocks is f at their merge scale
        let n = self.n();
        let mut ancestors = vec![self.block_of.iter().map(|&b| b as usize).collect::<Vec<_>>()];
        for s in 0..self.parents.len() {
            let next = ancestors[s].iter().map(|&c| self.parents[s][c] as usize).collect();
            ancestors.push(next);
        }
        DMatrix::from_fn(n, n, |i, j| {
            let s = (0..ancestors.len()).find(|&s| ancestors[s][i] == ancestors[s][j]).expect("single top component");
            self.kernel[s]
        })
    }
}

/// The compressed normalized Laplacian `I - S^T D^-1/2 W D^-1/2 S` in
/// orthonormal block coordinates (`S` scales block indicators to unit norm).
impl SymmetricOperator for LlpdLaplacianOperator {
    fn dim(&self) -> usize {
        self.blocks()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (rows, cols) = x.shape();
        // row-major copy so that each tree step moves contiguous rows
        let mut buf = vec![0.0; rows * cols];
        for b in 0..rows {
            let f = self.scale[b] / self.block_sizes[b];
            for c in 0..cols {
                buf[b * cols + c] = x[(b, c)] * f;
            }
        }
        let wx = self.matvec_rows(&buf, cols);
        DMatrix::from_fn(rows, cols, |b, c| x[(b, c)] - self.scale[b] * wx[b * cols + c])
    }

    fn upper_bound(&self) -> f64 {
        2.0
    }

    fn initial_guess(&self) -> Option<DMatrix<f64>> {
        // D^{1/2} 1 spans the null space
        let v: Vec<f64> = self
            .block_sizes
            .iter()
            .zip(&self.degrees)
            .map(|(n, d)| (n * d).sqrt())
            .collect();
        Some(DMatrix::from_column_slice(v.len(), 1, &v))
    }
}

/// Eigenpairs of the full normalized Laplacian; vectors have one row per point.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

/// Dense normalized Laplacian `I - D^-1/2 W D^-1/2` of a kernel matrix.
pub fn dense_laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let inv_sqrt: Vec<f64> = w.row_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]
    })
}
