//! Sparse and banded symmetric solvers.

use nalgebra_sparse::CsrMatrix;

use crate::error::{Error, Result};

/// Symmetric band matrix stored by lower diagonals: `band[i][d] = A[i][i - d]`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    kd: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            band: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    #[inline]
    fn idx(&self, i: usize, d: usize) -> usize {
        i * (self.kd + 1) + d
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        if d > self.kd {
            0.0
        } else {
            self.band[self.idx(r, d)]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        assert!(d <= self.kd, "entry ({i}, {j}) outside band {}", self.kd);
        let k = self.idx(r, d);
        self.band[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, r - c);
        self.band[k] = v;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.band[self.idx(i, 0)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.band[self.idx(i, 0)] * x[i];
            for d in 1..=self.kd.min(i) {
                let a = self.band[self.idx(i, d)];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
        y
    }

    /// `alpha * self + beta * I`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.clone();
        for v in out.band.iter_mut() {
            *v *= alpha;
        }
        for i in 0..self.n {
            let k = out.idx(i, 0);
            out.band[k] += beta;
        }
        out
    }

    /// Replaces rows and columns of `fixed` nodes by the identity.
    pub fn with_identity_rows(&self, fixed: &[bool]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for d in 0..=self.kd.min(i) {
                let j = i - d;
                if fixed[i] || fixed[j] {
                    let k = out.idx(i, d);
                    out.band[k] = if d == 0 { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.n;
        let kd = self.kd;
        let mut l = self.band.clone();
        let w = kd + 1;
        for j in 0..n {
            // diagonal
            let mut s = l[j * w];
            for k in 1..=kd.min(j) {
                let v = l[j * w + k];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::SolverFailure {
                    iterations: j,
                    residual: s,
                });
            }
            let djj = s.sqrt();
            l[j * w] = djj;
            // column below the diagonal
            for i in (j + 1)..n.min(j + kd + 1) {
                let dij = i - j;
                let mut s = l[i * w + dij];
                for k in 1..=kd.min(j) {
                    let col = j - k;
                    if i - col > kd {
                        break;
                    }
                    s -= l[i * w + (i - col)] * l[j * w + k];
                }
                l[i * w + dij] = s / djj;
            }
        }
        Ok(BandedCholesky { n, kd, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    kd: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kd, w) = (self.n, self.kd, self.kd + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for d in 1..=kd.min(i) {
                s -= self.l[i * w + d] * y[i - d];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for d in 1..=kd.min(n - 1 - i) {
                s -= self.l[(i + d) * w + d] * y[i + d];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients on the rows not marked `fixed`, with a Jacobi
/// preconditioner. Entries of `x` at fixed rows are data and stay untouched;
/// `b` is read only at free rows.
pub fn pcg_masked(
    a: &CsrMatrix<f64>,
    b: &[f64],
    x: &mut [f64],
    fixed: &[bool],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let offs = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    let matvec = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = 0.0;
            for k in offs[i]..offs[i + 1] {
                s += vals[k] * v[cols[k]];
            }
            out[i] = s;
        }
    };
    let mut diag = vec![1.0; n];
    for i in 0..n {
        for k in offs[i]..offs[i + 1] {
            if cols[k] == i {
                diag[i] = vals[k];
            }
        }
    }

    let mut ax = vec![0.0; n];
    matvec(x, &mut ax);
    let mut r: Vec<f64> = (0..n)
        .map(|i| if fixed[i] { 0.0 } else { b[i] - ax[i] })
        .collect();
    // reference norm: right-hand side of the reduced system
    let mut x_free_zero = x.to_vec();
    for (i, v) in x_free_zero.iter_mut().enumerate() {
        if !fixed[i] {
            *v = 0.0;
        }
    }
    let mut a0 = vec![0.0; n];
    matvec(&x_free_zero, &mut a0);
    let rhs_norm = (0..n)
        .filter(|&i| !fixed[i])
        .map(|i| (b[i] - a0[i]).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    let mut z: Vec<f64> = (0..n)
        .map(|i| if fixed[i] { 0.0 } else { r[i] / diag[i] })
        .collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / rhs_norm;
    if res <= tol {
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: res,
        });
    }
    for it in 1..=max_iter {
        matvec(&p, &mut ap);
        for i in 0..n {
            if fixed[i] {
                ap[i] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / rhs_norm;
        if res <= tol {
            return Ok(SolveStats {
                iterations: it,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = if fixed[i] { 0.0 } else { r[i] / diag[i] };
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: res,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of [`solve_lower_bound`].
#[derive(Debug, Clone)]
pub struct BoundSolution {
    pub x: Vec<f64>,
    /// `M x - b`: nonnegative on the active set, zero elsewhere.
    pub multiplier: Vec<f64>,
    pub active: Vec<bool>,
    pub iterations: usize,
}

/// Minimizes `x'Mx/2 - b'x` subject to `x >= lower` at every row by a
/// primal-dual active-set iteration, starting from `active`.
pub fn solve_lower_bound(
    m: &SymBanded,
    b: &[f64],
    lower: f64,
    active: Option<&[bool]>,
) -> Result<BoundSolution> {
    let n = m.n();
    let diag = m.diag();
    let mut act: Vec<bool> = match active {
        Some(a) => a.to_vec(),
        None => vec![false; n],
    };
    const MAX_SWEEPS: usize = 60;
    for it in 1..=MAX_SWEEPS {
        let x = solve_with_fixed(m, b, &act, lower)?;
        let mx = m.mul_vec(&x);
        let mu: Vec<f64> = (0..n).map(|i| mx[i] - b[i]).collect();
        let next: Vec<bool> = (0..n)
            .map(|i| mu[i] - diag[i] * (x[i] - lower) > 1e-14 * diag[i])
            .collect();
        if next == act {
            let multiplier = (0..n).map(|i| if act[i] { mu[i] } else { 0.0 }).collect();
            return Ok(BoundSolution {
                x,
                multiplier,
                active: act,
                iterations: it,
            });
        }
        act = next;
    }
    projected_gauss_seidel(m, b, lower)
}

fn solve_with_fixed(m: &SymBanded, b: &[f64], fixed: &[bool], value: f64) -> Result<Vec<f64>> {
    let mut x = vec![value; m.n()];
    solve_dirichlet_banded(m, b, &mut x, fixed)?;
    Ok(x)
}

/// Direct solve of the rows not marked `fixed`, with `x` holding the
/// prescribed values at fixed rows on entry and the solution on exit.
pub fn solve_dirichlet_banded(m: &SymBanded, b: &[f64], x: &mut [f64], fixed: &[bool]) -> Result<()> {
    let n = m.n();
    let kd = m.bandwidth();
    let mut rhs = b.to_vec();
    for i in 0..n {
        if fixed[i] {
            rhs[i] = x[i];
            continue;
        }
        let lo = i.saturating_sub(kd);
        let hi = (i + kd).min(n - 1);
        for j in lo..=hi {
            if fixed[j] {
                rhs[i] -= m.get(i, j) * x[j];
            }
        }
    }
    let sol = m.with_identity_rows(fixed).cholesky()?.solve(&rhs);
    x.copy_from_slice(&sol);
    Ok(())
}

fn projected_gauss_seidel(m: &SymBanded, b: &[f64], lower: f64) -> Result<BoundSolution> {
    let n = m.n();
    let kd = m.bandwidth();
    let mut x = m.cholesky()?.solve(b);
    for v in x.iter_mut() {
        *v = v.max(lower);
    }
    for sweep in 1..=200_000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let lo = i.saturating_sub(kd);
            let hi = (i + kd).min(n - 1);
            let mut s = b[i];
            for j in lo..=hi {
                if j != i {
                    s -= m.get(i, j) * x[j];
                }
            }
            let xi = (s / m.get(i, i)).max(lower);
            change = change.max((xi - x[i]).abs());
            x[i] = xi;
        }
        if change < 1e-15 {
            let mx = m.mul_vec(&x);
            let active: Vec<bool> = x.iter().map(|&v| v <= lower).collect();
            let multiplier = (0..n)
                .map(|i| if active[i] { mx[i] - b[i] } else { 0.0 })
                .collect();
            return Ok(BoundSolution {
                x,
                multiplier,
                active,
                iterations: sweep,
            });
        }
    }
    Err(Error::SolverFailure {
        iterations: 200_000,
        residual: f64::NAN,
    })
}
