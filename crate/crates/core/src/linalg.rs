//! Sparse CSR matrices, ILU(0) factorization and Krylov solvers.
//!
//! Everything here is sequential and deterministic: identical inputs produce
//! bitwise identical iterates, which the run-reproducibility contract of the
//! CLI relies on.

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds a CSR matrix row by row. `rows[i]` holds `(col, value)` pairs,
    /// not necessarily sorted; duplicates are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
    }

    /// r = b - A x
    pub fn residual(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        self.mul_vec(x, r);
        for i in 0..self.n {
            r[i] = b[i] - r[i];
        }
    }
}

/// ILU(0): incomplete LU factorization on the sparsity pattern of `A`.
///
/// Stored in-place on a copy of the CSR data; `diag_ptr[i]` points at the
/// diagonal entry of row `i`. L has unit diagonal.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: Csr,
    diag_ptr: Vec<usize>,
}

impl Ilu0 {
    /// Factorizes `A`. `shift` is added to the diagonal of the working copy
    /// before factorization (used for singular Neumann operators, where the
    /// factors only serve as a preconditioner).
    pub fn new(a: &Csr, shift: f64) -> Self {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag_ptr = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                if lu.indices[k] == i {
                    diag_ptr[i] = k;
                    lu.data[k] += shift;
                }
            }
            assert!(diag_ptr[i] != usize::MAX, "missing diagonal in row {i}");
        }
        // IKJ variant restricted to the existing pattern.
        let mut colmap: Vec<usize> = vec![usize::MAX; n];
        for i in 0..n {
            let (rs, re) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in rs..re {
                colmap[lu.indices[k]] = k;
            }
            for k in rs..re {
                let j = lu.indices[k];
                if j >= i {
                    break;
                }
                let piv = lu.data[diag_ptr[j]];
                let lij = lu.data[k] / piv;
                lu.data[k] = lij;
                for kk in (diag_ptr[j] + 1)..lu.indptr[j + 1] {
                    let col = lu.indices[kk];
                    let pos = colmap[col];
                    if pos != usize::MAX && pos > k {
                        lu.data[pos] -= lij * lu.data[kk];
                    }
                }
            }
            for k in rs..re {
                colmap[lu.indices[k]] = usize::MAX;
            }
            // Zero pivots would poison the triangular solves.
            let d = lu.data[diag_ptr[i]];
            if d.abs() < 1e-300 {
                lu.data[diag_ptr[i]] = if d >= 0.0 { 1e-300 } else { -1e-300 };
            }
        }
        Ilu0 { lu, diag_ptr }
    }

    /// z = (LU)^{-1} r
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        // forward: L y = r (unit diagonal)
        for i in 0..n {
            let mut s = r[i];
            for k in self.lu.indptr[i]..self.diag_ptr[i] {
                s -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = s;
        }
        // backward: U z = y
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag_ptr[i] + 1)..self.lu.indptr[i + 1] {
                s -= self.lu.data[k] * z[self.lu.indices[k]];
            }
            z[i] = s / self.lu.data[self.diag_ptr[i]];
        }
    }
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub converged: bool,
    pub iterations: usize,
    /// Final relative residual ‖b − Ax‖ / ‖b‖ (true residual, recomputed).
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned BiCGStab. Solves A x = b in place starting from `x`.
///
/// Convergence is declared on the *true* residual (recomputed whenever the
/// recursive residual passes the tolerance). If the requested tolerance is
/// below the attainable floor, the best iterate seen is returned with
/// `converged = false`.
pub fn bicgstab(
    a: &Csr,
    prec: Option<&Ilu0>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return SolveStats {
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }
    let tol = rel_tol * bnorm;

    let mut r = vec![0.0; n];
    a.residual(b, x, &mut r);
    let mut best_x = x.to_vec();
    let mut best_res = norm(&r) / bnorm;
    if best_res <= rel_tol {
        return SolveStats {
            converged: true,
            iterations: 0,
            residual: best_res,
        };
    }

    let mut r0 = r.clone();
    let mut rho_prev: f64 = 1.0;
    let mut alpha: f64 = 1.0;
    let mut omega: f64 = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut it = 0usize;

    // checkpoint: recompute the true residual, track the best iterate and
    // restart the recurrence from the current x
    macro_rules! checkpoint {
        () => {{
            a.residual(b, x, &mut r);
            let res = norm(&r) / bnorm;
            if res < best_res {
                best_res = res;
                best_x.copy_from_slice(x);
            }
            if res <= rel_tol {
                return SolveStats {
                    converged: true,
                    iterations: it,
                    residual: res,
                };
            }
            r0.copy_from_slice(&r);
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.fill(0.0);
            p.fill(0.0);
            true
        }};
    }

    while it < max_iter {
        it += 1;
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 * bnorm * bnorm {
            checkpoint!();
            continue;
        }
        let beta = (rho_new / rho_prev) * (alpha / omega);
        rho_prev = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        match prec {
            Some(m) => m.apply(&p, &mut phat),
            None => phat.copy_from_slice(&p),
        }
        a.mul_vec(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.abs() < 1e-300 * bnorm * bnorm {
            checkpoint!();
            continue;
        }
        alpha = rho_new / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            checkpoint!();
            continue;
        }
        match prec {
            Some(m) => m.apply(&s, &mut shat),
            None => shat.copy_from_slice(&s),
        }
        a.mul_vec(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol || omega.abs() < 1e-300 || it % 500 == 0 {
            checkpoint!();
        }
    }
    x.copy_from_slice(&best_x);
    SolveStats {
        converged: false,
        iterations: max_iter,
        residual: best_res,
    }
}

/// Preconditioned conjugate gradient for SPD systems.
///
/// `deflate_constants = true` projects the constant vector out of the
/// right-hand side, iterates and solution, which handles the singular
/// Neumann-Poisson operator (nullspace = constants). Tracks the best
/// iterate and restarts the recurrence after every true-residual check, so
/// tolerances below the attainable floor degrade gracefully.
pub fn pcg(
    a: &Csr,
    prec: Option<&Ilu0>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    deflate_constants: bool,
) -> SolveStats {
    let n = a.n;
    let mut bb = b.to_vec();
    if deflate_constants {
        remove_mean(&mut bb);
        remove_mean(x);
    }
    let bnorm = norm(&bb);
    if bnorm == 0.0 {
        x.fill(0.0);
        return SolveStats {
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }
    let tol = rel_tol * bnorm;

    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut best_x = x.to_vec();
    let mut best_res = f64::INFINITY;
    let mut rz = 0.0;
    let mut it = 0usize;

    // recompute the true residual, track the best iterate, restart the
    // recurrence; returns true when converged
    let refresh = |x: &mut [f64],
                       r: &mut [f64],
                       z: &mut [f64],
                       p: &mut [f64],
                       rz: &mut f64,
                       best_x: &mut Vec<f64>,
                       best_res: &mut f64|
     -> bool {
        if deflate_constants {
            remove_mean(x);
        }
        a.residual(&bb, x, r);
        if deflate_constants {
            remove_mean(r);
        }
        let res = norm(r) / bnorm;
        if res < *best_res {
            *best_res = res;
            best_x.copy_from_slice(x);
        }
        if res <= rel_tol {
            return true;
        }
        match prec {
            Some(m) => m.apply(r, z),
            None => z.copy_from_slice(r),
        }
        if deflate_constants {
            remove_mean(z);
        }
        p.copy_from_slice(z);
        *rz = dot(r, z);
        false
    };

    if refresh(x, &mut r, &mut z, &mut p, &mut rz, &mut best_x, &mut best_res) {
        return SolveStats {
            converged: true,
            iterations: 0,
            residual: best_res,
        };
    }

    while it < max_iter {
        it += 1;
        a.mul_vec(&p, &mut ap);
        let denom = dot(&p, &ap);
        if denom <= 0.0 || !denom.is_finite() {
            if refresh(x, &mut r, &mut z, &mut p, &mut rz, &mut best_x, &mut best_res) {
                return SolveStats {
                    converged: true,
                    iterations: it,
                    residual: best_res,
                };
            }
            continue;
        }
        let alpha = rz / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol || it % 250 == 0 {
            if refresh(x, &mut r, &mut z, &mut p, &mut rz, &mut best_x, &mut best_res) {
                return SolveStats {
                    converged: true,
                    iterations: it,
                    residual: best_res,
                };
            }
            continue;
        }
        match prec {
            Some(m) => m.apply(&r, &mut z),
            None => z.copy_from_slice(&r),
        }
        if deflate_constants {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x.copy_from_slice(&best_x);
    if deflate_constants {
        remove_mean(x);
    }
    SolveStats {
        converged: false,
        iterations: max_iter,
        residual: best_res,
    }
}

pub fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian, n unknowns, spacing h = 1/(n+1).
    fn lap1d(n: usize) -> Csr {
        let h2 = ((n + 1) as f64).powi(2);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = vec![(i, 2.0 * h2)];
            if i > 0 {
                row.push((i - 1, -h2));
            }
            if i + 1 < n {
                row.push((i + 1, -h2));
            }
            rows.push(row);
        }
        Csr::from_rows(n, rows)
    }

    /// Nonsymmetric advection-diffusion matrix.
    fn advdiff1d(n: usize, pe: f64) -> Csr {
        let h = 1.0 / (n + 1) as f64;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = vec![(i, 2.0 / (h * h))];
            if i > 0 {
                row.push((i - 1, -1.0 / (h * h) - pe / (2.0 * h)));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0 / (h * h) + pe / (2.0 * h)));
            }
            rows.push(row);
        }
        Csr::from_rows(n, rows)
    }

    #[test]
    fn csr_matvec_sums_duplicates() {
        let a = Csr::from_rows(2, vec![vec![(0, 1.0), (0, 2.0), (1, 1.0)], vec![(1, 4.0)]]);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![4.0, 4.0]);
    }

    #[test]
    fn pcg_solves_poisson() {
        let n = 200;
        let a = lap1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut x = vec![0.0; n];
        let prec = Ilu0::new(&a, 0.0);
        let stats = pcg(&a, Some(&prec), &b, &mut x, 1e-12, 1000, false);
        assert!(stats.converged, "residual {}", stats.residual);
        let mut r = vec![0.0; n];
        a.residual(&b, &x, &mut r);
        let rel = norm(&r) / norm(&b);
        assert!(rel <= 1e-11, "rel residual {rel}");
    }

    #[test]
    fn bicgstab_solves_advection_diffusion() {
        let n = 300;
        let a = advdiff1d(n, 40.0);
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let prec = Ilu0::new(&a, 0.0);
        let stats = bicgstab(&a, Some(&prec), &b, &mut x, 1e-12, 2000, );
        assert!(stats.converged, "residual {}", stats.residual);
    }

    #[test]
    fn pcg_handles_singular_neumann() {
        // 1D Neumann Laplacian: singular, nullspace = constants.
        let n = 128;
        let h2 = 1.0;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            let mut diag = 0.0;
            if i > 0 {
                row.push((i - 1, -h2));
                diag += h2;
            }
            if i + 1 < n {
                row.push((i + 1, -h2));
                diag += h2;
            }
            row.push((i, diag));
            rows.push(row);
        }
        let a = Csr::from_rows(n, rows);
        // mean-zero rhs
        let mut b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.3).cos()).collect();
        remove_mean(&mut b);
        let mut x = vec![0.0; n];
        let prec = Ilu0::new(&a, 1e-10);
        let stats = pcg(&a, Some(&prec), &b, &mut x, 1e-12, 2000, true);
        assert!(stats.converged);
        // solution is mean-zero
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // For a tridiagonal matrix ILU(0) equals full LU, so one
        // preconditioner application solves the system.
        let n = 50;
        let a = lap1d(n);
        let prec = Ilu0::new(&a, 0.0);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let mut x = vec![0.0; n];
        prec.apply(&b, &mut x);
        let mut r = vec![0.0; n];
        a.residual(&b, &x, &mut r);
        assert!(norm(&r) / norm(&b) < 1e-12);
    }
}
