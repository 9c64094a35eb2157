//! Dense and block-sparse Cholesky for the symmetric normal equations.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeMap, BTreeSet};

/// Symmetric matrix of `n × n` square blocks of size `dof`; only blocks with
/// row ≤ column are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymmetric {
    dof: usize,
    n: usize,
    blocks: BTreeMap<(usize, usize), DMatrix<f64>>,
}

impl BlockSymmetric {
    pub fn new(dof: usize, n: usize) -> Self {
        Self {
            dof,
            n,
            blocks: BTreeMap::new(),
        }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn block_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dof * self.n
    }

    /// Number of stored (upper) blocks.
    pub fn nnz_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn add(&mut self, r: usize, c: usize, m: &DMatrix<f64>) {
        assert!(r <= c && c < self.n, "block ({r}, {c}) outside the upper triangle");
        let d = self.dof;
        *self.blocks.entry((r, c)).or_insert_with(|| DMatrix::zeros(d, d)) += m;
    }

    /// Block (r, c) of the full symmetric matrix.
    pub fn get(&self, r: usize, c: usize) -> Option<DMatrix<f64>> {
        if r <= c {
            self.blocks.get(&(r, c)).cloned()
        } else {
            self.blocks.get(&(c, r)).map(|m| m.transpose())
        }
    }

    pub fn add_diagonal(&mut self, lambda: f64) {
        let eye = DMatrix::identity(self.dof, self.dof) * lambda;
        for k in 0..self.n {
            self.add(k, k, &eye);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dof;
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for (&(r, c), m) in &self.blocks {
            out.view_mut((r * d, c * d), (d, d)).copy_from(m);
            if r != c {
                out.view_mut((c * d, r * d), (d, d)).copy_from(&m.transpose());
            }
        }
        out
    }

    fn neighbours(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.n];
        for &(r, c) in self.blocks.keys() {
            if r != c {
                adj[r].insert(c);
                adj[c].insert(r);
            }
        }
        adj
    }
}

/// In-place lower Cholesky factor; the strict upper triangle is zeroed.
fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
    for j in 0..n {
        for k in 0..j {
            let ljk = a[(j, k)];
            if ljk != 0.0 {
                for i in j..n {
                    a[(i, j)] -= a[(i, k)] * ljk;
                }
            }
        }
        let d = a[(j, j)];
        if !(d > f64::EPSILON * scale) || !d.is_finite() {
            return Err(Error::SolverFailure(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let s = d.sqrt();
        for i in j..n {
            a[(i, j)] /= s;
        }
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Solves L x = b in place.
fn forward(l: &DMatrix<f64>, x: &mut DVector<f64>) {
    for j in 0..l.nrows() {
        x[j] /= l[(j, j)];
        let xj = x[j];
        for i in j + 1..l.nrows() {
            x[i] -= l[(i, j)] * xj;
        }
    }
}

/// Solves Lᵀ x = b in place.
fn backward(l: &DMatrix<f64>, x: &mut DVector<f64>) {
    for j in (0..l.nrows()).rev() {
        let mut s = x[j];
        for i in j + 1..l.nrows() {
            s -= l[(i, j)] * x[i];
        }
        x[j] = s / l[(j, j)];
    }
}

/// Solves A x = b for symmetric positive definite A.
pub fn cholesky_solve(mut a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    cholesky_in_place(&mut a)?;
    let mut x = b.clone();
    forward(&a, &mut x);
    backward(&a, &mut x);
    Ok(x)
}

/// Block minimum-degree elimination order; ties go to the lowest block index.
/// Returns the order and, per eliminated block, its later neighbours (the block
/// pattern of that column of L).
fn minimum_degree(mut adj: Vec<BTreeSet<usize>>) -> (Vec<usize>, Vec<BTreeSet<usize>>) {
    let n = adj.len();
    let mut alive: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut pattern = vec![BTreeSet::new(); n];
    while let Some(&(deg, v)) = alive.iter().next() {
        alive.remove(&(deg, v));
        let nb = std::mem::take(&mut adj[v]);
        for &u in &nb {
            alive.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
            adj[u].extend(nb.iter().copied().filter(|&w| w != u));
            alive.insert((adj[u].len(), u));
        }
        pattern[v] = nb;
        order.push(v);
    }
    (order, pattern)
}

/// Block left-looking Cholesky factor L with P H Pᵀ = L Lᵀ.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    dof: usize,
    /// Elimination order: position k holds block `order[k]`.
    order: Vec<usize>,
    diag: Vec<DMatrix<f64>>,
    /// Column k: (row position, L block) for row positions below k.
    cols: Vec<Vec<(usize, DMatrix<f64>)>>,
}

impl SparseCholesky {
    pub fn factor(h: &BlockSymmetric) -> Result<Self> {
        let n = h.n;
        let d = h.dof;
        let (order, pattern) = minimum_degree(h.neighbours());
        let mut pos = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let col_rows: Vec<Vec<usize>> = order
            .iter()
            .map(|&v| {
                let mut r: Vec<usize> = pattern[v].iter().map(|&u| pos[u]).collect();
                r.sort_unstable();
                r
            })
            .collect();
        let mut rows = vec![Vec::new(); n];
        for (k, r) in col_rows.iter().enumerate() {
            for &i in r {
                rows[i].push(k);
            }
        }
        let mut lmap: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
        let mut diag = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = h.get(order[k], order[k]).unwrap_or_else(|| DMatrix::zeros(d, d));
            for &j in &rows[k] {
                let lkj = &lmap[&(k, j)];
                s -= lkj * lkj.transpose();
            }
            cholesky_in_place(&mut s).map_err(|e| match e {
                Error::SolverFailure(m) => Error::SolverFailure(format!("block {}: {m}", order[k])),
                other => other,
            })?;
            for &i in &col_rows[k] {
                let mut t = h.get(order[i], order[k]).unwrap_or_else(|| DMatrix::zeros(d, d));
                for &j in &rows[k] {
                    if let Some(lij) = lmap.get(&(i, j)) {
                        t -= lij * lmap[&(k, j)].transpose();
                    }
                }
                // L_ik = T L_kkᵀ⁻¹, solved row by row as L_kk x = tᵀ.
                let mut lik = DMatrix::zeros(d, d);
                for r in 0..d {
                    let mut x = t.row(r).transpose();
                    forward(&s, &mut x);
                    lik.set_row(r, &x.transpose());
                }
                lmap.insert((i, k), lik);
            }
            diag.push(s);
        }
        let mut cols = vec![Vec::new(); n];
        for ((i, k), m) in lmap {
            cols[k].push((i, m));
        }
        Ok(Self {
            dof: d,
            order,
            diag,
            cols,
        })
    }

    /// Stored off-diagonal blocks of L, a measure of fill.
    pub fn fill_blocks(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.dof;
        let n = self.order.len();
        if b.len() != d * n {
            return Err(Error::Domain(format!("right-hand side has length {}, expected {}", b.len(), d * n)));
        }
        let mut y: Vec<DVector<f64>> = self.order.iter().map(|&v| b.rows(v * d, d).into_owned()).collect();
        for k in 0..n {
            let mut yk = y[k].clone();
            forward(&self.diag[k], &mut yk);
            for (i, lik) in &self.cols[k] {
                y[*i] -= lik * &yk;
            }
            y[k] = yk;
        }
        for k in (0..n).rev() {
            let mut yk = y[k].clone();
            for (i, lik) in &self.cols[k] {
                yk -= lik.transpose() * &y[*i];
            }
            backward(&self.diag[k], &mut yk);
            y[k] = yk;
        }
        let mut x = DVector::zeros(d * n);
        for (k, &v) in self.order.iter().enumerate() {
            x.rows_mut(v * d, d).copy_from(&y[k]);
        }
        Ok(x)
    }
}
