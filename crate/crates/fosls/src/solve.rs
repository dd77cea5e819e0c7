//! Sparse symmetric linear algebra: LDLᵀ factorization with reverse
//! Cuthill-McKee preordering, a Jacobi-preconditioned conjugate gradient
//! fallback, and a Schur-complement solver for the constrained projection
//! saddle systems. Everything is deterministic: no hashing, no pivoting
//! heuristics, fixed traversal orders.

use crate::{FoslsError, Result};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Symmetric sparse matrix in compressed sparse column form.
///
/// The full pattern is stored; construction enforces exact symmetry by
/// scattering each off-diagonal triplet into both triangles with half
/// weight.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSym {
    /// Build from triplets, summing duplicates and symmetrizing.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseSym {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i == j {
                entries.push((j, i, v));
            } else {
                entries.push((j, i, 0.5 * v));
                entries.push((i, j, 0.5 * v));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for &(col, row, v) in &entries {
            if prev == Some((col, row)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(row);
                values.push(v);
                col_ptr[col + 1] = row_idx.len();
                prev = Some((col, row));
            }
        }
        for c in 0..n {
            if col_ptr[c + 1] < col_ptr[c] {
                col_ptr[c + 1] = col_ptr[c];
            }
        }
        SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for col in 0..self.n {
            let xc = x[col];
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                y[self.row_idx[p]] += self.values[p] * xc;
            }
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.matvec(x)).map(|(xi, yi)| xi * yi).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for col in 0..self.n {
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                if self.row_idx[p] == col {
                    d[col] = self.values[p];
                }
            }
        }
        d
    }

    /// Frobenius-norm relative asymmetry (0 for exactly stored symmetry).
    pub fn relative_asymmetry(&self) -> f64 {
        let mut map = std::collections::BTreeMap::new();
        for col in 0..self.n {
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                map.insert((self.row_idx[p], col), self.values[p]);
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (&(i, j), &v) in &map {
            let vt = map.get(&(j, i)).copied().unwrap_or(0.0);
            num += (v - vt) * (v - vt);
            den += v * v;
        }
        (num / den).sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for col in 0..self.n {
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                m[(self.row_idx[p], col)] = self.values[p];
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DirectCholesky,
    Pcg,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Relative residual tolerance, in (0, 1e-6].
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::DirectCholesky,
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph.
/// Returns `perm` with `perm[new] = old`.
fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for col in 0..n {
        for p in a.col_ptr[col]..a.col_ptr[col + 1] {
            let row = a.row_idx[p];
            if row != col {
                adj[col].push(row);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    while let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
        // one sweep towards a pseudo-peripheral start
        let mut start = seed;
        for _ in 0..2 {
            let far = bfs_last_level(&adj, &visited, start);
            let next = far.into_iter().min_by_key(|&i| (degree[i], i)).unwrap();
            if next == start {
                break;
            }
            start = next;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_last_level(adj: &[Vec<usize>], visited: &[bool], start: usize) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut level = vec![start];
    let mut last = level.clone();
    while !level.is_empty() {
        last = level.clone();
        let mut next = Vec::new();
        for &u in &level {
            for &v in &adj[u] {
                if !seen[v] && !visited[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        level = next;
    }
    last
}

/// LDLᵀ factorization of a sparse SPD matrix with RCM preordering
/// (up-looking factorization over the elimination tree).
pub struct LdlFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    pub fn new(a: &SparseSym) -> Result<LdlFactor> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // permuted upper-triangular part, columns sorted by row
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for col in 0..n {
            for p in a.col_ptr[col]..a.col_ptr[col + 1] {
                let (ir, jc) = (pinv[a.row_idx[p]], pinv[col]);
                if ir <= jc {
                    cols[jc].push((ir, a.values[p]));
                }
            }
        }
        for c in &mut cols {
            c.sort_unstable_by_key(|e| e.0);
        }

        // symbolic pass: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &(i0, _) in &cols[k] {
                let mut i = i0;
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let mut li = vec![0usize; lp[n]];
        let mut lx = vec![0.0f64; lp[n]];
        let mut d = vec![0.0f64; n];

        // numeric pass: compute row k of L via a sparse triangular solve
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lnz_used = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut path = Vec::with_capacity(n);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for &(i0, v) in &cols[k] {
                y[i0] += v;
                path.clear();
                let mut i = i0;
                while i < k && flag[i] != k {
                    path.push(i);
                    flag[i] = k;
                    i = parent[i];
                }
                for &node in path.iter().rev() {
                    top -= 1;
                    pattern[top] = node;
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let p_end = lp[i] + lnz_used[i];
                for p in lp[i]..p_end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p_end] = k;
                lx[p_end] = l_ki;
                lnz_used[i] += 1;
            }
            if d[k] <= 0.0 || !d[k].is_finite() {
                return Err(FoslsError::NotPositiveDefinite {
                    pivot: perm[k],
                    value: d[k],
                });
            }
        }

        Ok(LdlFactor {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve Ax = b for a symmetric positive definite matrix.
pub fn solve_spd(a: &SparseSym, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    assert_eq!(a.n, b.len());
    assert!(
        opts.tolerance > 0.0 && opts.tolerance <= 1e-6,
        "solver tolerance must lie in (0, 1e-6]"
    );
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; a.n]);
    }
    match opts.method {
        SolveMethod::DirectCholesky => {
            let factor = LdlFactor::new(a)?;
            let mut x = factor.solve(b);
            let residual_of = |x: &[f64]| -> Vec<f64> {
                a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
            };
            // one step of iterative refinement if needed
            let r = residual_of(&x);
            if norm(&r) / bnorm > opts.tolerance {
                let dx = factor.solve(&r);
                for i in 0..a.n {
                    x[i] += dx[i];
                }
            }
            let resid = norm(&residual_of(&x)) / bnorm;
            if resid > opts.tolerance {
                return Err(FoslsError::ToleranceNotMet {
                    residual: resid,
                    iterations: 1,
                });
            }
            Ok(x)
        }
        SolveMethod::Pcg => pcg(a, b, opts),
    }
}

fn pcg(a: &SparseSym, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    let n = a.n;
    let bnorm = norm(b);
    let minv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..opts.max_iterations {
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(FoslsError::NegativeCurvature(pap));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) / bnorm <= opts.tolerance {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FoslsError::ToleranceNotMet {
        residual: norm(&r) / bnorm,
        iterations: opts.max_iterations,
    })
}

/// Sparse constraint block stored by rows.
#[derive(Debug, Clone)]
pub struct ConstraintMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl ConstraintMat {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        ConstraintMat {
            n_rows,
            n_cols,
            rows: vec![Vec::new(); n_rows],
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.rows[row].push((col, value));
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, lambda: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                y[c] += v * lambda[r];
            }
        }
        y
    }
}

/// Solve the saddle system [M Bᵀ; B 0](x, λ) = (f, g) with M SPD, via the
/// dense Schur complement S = B M⁻¹ Bᵀ on the multiplier.
pub fn solve_saddle(
    m: &SparseSym,
    b: &ConstraintMat,
    rhs_primal: &[f64],
    rhs_constraint: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(m.n, b.n_cols);
    assert_eq!(rhs_primal.len(), m.n);
    assert_eq!(rhs_constraint.len(), b.n_rows);
    if b.n_rows == 0 {
        return Ok((solve_spd(m, rhs_primal, opts)?, Vec::new()));
    }
    let factor = LdlFactor::new(m)?;
    let nl = b.n_rows;
    let mut z_cols: Vec<Vec<f64>> = Vec::with_capacity(nl);
    for r in 0..nl {
        let mut e = vec![0.0; m.n];
        for &(c, v) in &b.rows[r] {
            e[c] += v;
        }
        z_cols.push(factor.solve(&e));
    }
    let mut s = DMatrix::<f64>::zeros(nl, nl);
    for r in 0..nl {
        for c in 0..nl {
            s[(r, c)] = b.rows[r].iter().map(|&(k, v)| v * z_cols[c][k]).sum();
        }
    }
    let s = (s.clone() + s.transpose()) * 0.5;
    let minv_f = factor.solve(rhs_primal);
    let mut rhs_schur = DVector::<f64>::from_vec(b.apply(&minv_f));
    for r in 0..nl {
        rhs_schur[r] -= rhs_constraint[r];
    }
    let chol = Cholesky::new(s).ok_or(FoslsError::RankDeficientConstraint {
        pivot: usize::MAX,
        value: f64::NAN,
    })?;
    let lambda = chol.solve(&rhs_schur);
    let bt_lambda = b.apply_transpose(lambda.as_slice());
    let mut mod_rhs = rhs_primal.to_vec();
    for i in 0..m.n {
        mod_rhs[i] -= bt_lambda[i];
    }
    let x = factor.solve(&mod_rhs);

    // verify both variational equations before returning; residuals are
    // scaled against cancellation-free absolute aggregates so that systems
    // whose exact values vanish are not flagged
    let mut r1 = m.matvec(&x);
    for i in 0..m.n {
        r1[i] += bt_lambda[i] - rhs_primal[i];
    }
    let mut m_abs_x = vec![0.0; m.n];
    for col in 0..m.n {
        for p in m.col_ptr[col]..m.col_ptr[col + 1] {
            m_abs_x[m.row_idx[p]] += (m.values[p] * x[col]).abs();
        }
    }
    let scale1 = norm(rhs_primal).max(norm(&m_abs_x)).max(1e-30);
    let r2: Vec<f64> = b
        .apply(&x)
        .iter()
        .zip(rhs_constraint)
        .map(|(bx, g)| bx - g)
        .collect();
    let bx_abs: Vec<f64> = b
        .rows
        .iter()
        .map(|row| row.iter().map(|&(c, v)| (v * x[c]).abs()).sum())
        .collect();
    let scale2 = norm(rhs_constraint).max(norm(&bx_abs)).max(1e-30);
    let resid = (norm(&r1) / scale1).max(norm(&r2) / scale2);
    if resid > 1e-11 {
        return Err(FoslsError::ToleranceNotMet {
            residual: resid,
            iterations: 1,
        });
    }
    Ok((x, lambda.as_slice().to_vec()))
}
