//! Locally optimal block preconditioned conjugate gradient (LOBPCG) for the
//! smallest eigenpairs of a symmetric operator.
//!
//! Each iteration performs a Rayleigh–Ritz projection onto `[X, W, P]`, where
//! `X` holds the current Ritz vectors, `W` the Jacobi-preconditioned residuals
//! of the still-active columns and `P` the previous search directions. `W` and
//! `P` are orthogonalized against `X` and orthonormalized with SVQB (Gram
//! matrix eigen-decomposition, dropping numerically dependent directions), so
//! the projected problem is always a standard symmetric eigenproblem.
//!
//! Columns whose residual already meets the tolerance are soft-locked: they
//! stay in `X` (and in the projection) but contribute no new search directions.
//!
//! The initial block is drawn from Xoshiro256++ seeded through SplitMix64,
//! with entries uniform on `[-1, 1)`. One step of the generator is
//!
//! ```text
//! out = rotl(s0 + s3, 23) + s0
//! t = s1 << 17
//! s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
//! ```

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::dense::symmetric_eigen;
use super::{EigError, SparseSym, SymOperator};

/// Relative eigenvalue threshold below which SVQB drops a direction.
const SVQB_DROP: f64 = 1e-10;
/// Recompute `A X` from scratch this often to stop drift in the recurrences.
const REFRESH_EVERY: usize = 20;

/// Eigenpairs returned by [`lobpcg`].
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`; orthonormal columns.
    pub eigenvectors: DMatrix<f64>,
    /// `‖A v - λ v‖` per pair, from a fresh application of `A`.
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
    /// Set when a non-positive diagonal forced the identity preconditioner.
    pub preconditioner_fallback: bool,
}

impl EigResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

#[derive(Debug, Clone)]
pub struct LobpcgOptions {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Optional starting vectors (`order × c`, `c ≤` block size). Missing
    /// columns are filled from the seeded generator.
    pub initial: Option<DMatrix<f64>>,
}

impl LobpcgOptions {
    pub fn new(k: usize, tol: f64, max_iter: usize, seed: u64) -> Self {
        Self { k, tol, max_iter, seed, initial: None }
    }

    pub fn with_initial(mut self, initial: DMatrix<f64>) -> Self {
        self.initial = Some(initial);
        self
    }
}

/// Block size used for `k` wanted pairs.
pub fn block_size(k: usize, order: usize) -> usize {
    (2 * k).min(k + 8).min(order)
}

/// The `k` smallest eigenpairs of `a`.
pub fn lobpcg(a: &SparseSym, k: usize, tol: f64, max_iter: usize, seed: u64) -> Result<EigResult, EigError> {
    lobpcg_with(a, &LobpcgOptions::new(k, tol, max_iter, seed))
}

pub fn lobpcg_with<A: SymOperator + ?Sized>(a: &A, opts: &LobpcgOptions) -> Result<EigResult, EigError> {
    let n = a.order();
    let k = opts.k;
    if k == 0 || k > n {
        return Err(EigError::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(EigError::InvalidArgument(format!("tol = {} must be positive", opts.tol)));
    }
    let m = block_size(k, n);

    let diag = a.diagonal();
    let fallback = diag.iter().any(|&d| !(d > 0.0));
    let inv_diag: Vec<f64> = if fallback { vec![1.0; n] } else { diag.iter().map(|d| 1.0 / d).collect() };

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed);
    let mut x = initial_block(n, m, opts.initial.as_ref(), &mut rng);
    let mut ax = apply_block(a, &x);
    let mut lambda = rayleigh_ritz_in_place(&mut x, &mut ax);
    let mut p: Option<DMatrix<f64>> = None;

    let mut iterations = 0;
    loop {
        let r = residual_block(&x, &ax, &lambda);
        let norms: Vec<f64> = (0..m).map(|j| r.column(j).norm()).collect();
        let conv: Vec<bool> = (0..m).map(|j| norms[j] <= opts.tol * (1.0 + lambda[j].abs())).collect();

        if conv[..k].iter().all(|&c| c) {
            // Confirm against a fresh product before accepting.
            let fresh = apply_block(a, &x);
            let r = residual_block(&x, &fresh, &lambda);
            if (0..k).all(|j| r.column(j).norm() <= opts.tol * (1.0 + lambda[j].abs())) {
                return Ok(finish(a, x, k, opts.tol, iterations, fallback));
            }
            ax = fresh;
            continue;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let active: Vec<usize> = (0..m).filter(|&j| !conv[j]).collect();
        let mut q0 = DMatrix::zeros(n, active.len() + p.as_ref().map_or(0, |_| active.len()));
        for (c, &j) in active.iter().enumerate() {
            let src = r.column(j);
            let mut dst = q0.column_mut(c);
            for i in 0..n {
                dst[i] = inv_diag[i] * src[i];
            }
        }
        if let Some(p) = &p {
            for (c, &j) in active.iter().enumerate() {
                q0.column_mut(active.len() + c).copy_from(&p.column(j));
            }
        }
        let mut q = q0;
        for _ in 0..2 {
            project_out(&x, &mut q);
            q = svqb(&q)?;
        }
        if q.ncols() == 0 {
            break;
        }
        let aq = apply_block(a, &q);

        let s = m + q.ncols();
        let mut g = DMatrix::zeros(s, s);
        let gxx = at_b(&x, &ax);
        let gxq = at_b(&x, &aq);
        let gqq = at_b(&q, &aq);
        g.view_mut((0, 0), (m, m)).copy_from(&gxx);
        g.view_mut((0, m), (m, q.ncols())).copy_from(&gxq);
        g.view_mut((m, 0), (q.ncols(), m)).copy_from(&gxq.transpose());
        g.view_mut((m, m), (q.ncols(), q.ncols())).copy_from(&gqq);
        let (theta, c) = small_eigen(&g, m)?;

        let cx = c.rows(0, m);
        let cq = c.rows(m, q.ncols());
        let pq = &q * cq;
        x = &x * cx + &pq;
        ax = &ax * cx + &aq * cq;
        p = Some(pq);
        lambda = theta;

        if iterations % REFRESH_EVERY == 0 {
            let defect = (at_b(&x, &x) - DMatrix::identity(m, m)).amax();
            if defect > 1e-11 {
                x = svqb(&x)?;
                if x.ncols() < m {
                    let extra = random_block(n, m - x.ncols(), &mut rng);
                    x = svqb(&hstack(&x, &extra))?;
                }
                ax = apply_block(a, &x);
                lambda = rayleigh_ritz_in_place(&mut x, &mut ax);
                p = None;
            } else {
                ax = apply_block(a, &x);
            }
        }
    }

    let result = finish(a, x, k, opts.tol, iterations, fallback);
    if result.all_converged() {
        Ok(result)
    } else {
        Err(EigError::NotConverged { result: Box::new(result) })
    }
}

fn initial_block(
    n: usize,
    m: usize,
    initial: Option<&DMatrix<f64>>,
    rng: &mut Xoshiro256PlusPlus,
) -> DMatrix<f64> {
    let mut x = random_block(n, m, rng);
    if let Some(init) = initial {
        assert_eq!(init.nrows(), n, "initial block has the wrong order");
        for j in 0..init.ncols().min(m) {
            x.column_mut(j).copy_from(&init.column(j));
        }
    }
    let mut q = svqb(&x).expect("dense eigensolve of a Gram matrix");
    while q.ncols() < m {
        let extra = random_block(n, m - q.ncols(), rng);
        let mut e = extra;
        project_out(&q, &mut e);
        let e = svqb(&e).expect("dense eigensolve of a Gram matrix");
        q = hstack(&q, &e);
    }
    q
}

fn random_block(n: usize, m: usize, rng: &mut Xoshiro256PlusPlus) -> DMatrix<f64> {
    // Column-major fill keeps the sequence independent of the storage order.
    let mut x = DMatrix::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            x[(i, j)] = 2.0 * rng.random::<f64>() - 1.0;
        }
    }
    x
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub(crate) fn apply_block<A: SymOperator + ?Sized>(a: &A, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut y = DMatrix::zeros(n, x.ncols());
    for j in 0..x.ncols() {
        let src = &x.as_slice()[j * n..(j + 1) * n];
        let dst = &mut y.as_mut_slice()[j * n..(j + 1) * n];
        a.apply(src, dst);
    }
    y
}

fn residual_block(x: &DMatrix<f64>, ax: &DMatrix<f64>, lambda: &[f64]) -> DMatrix<f64> {
    let mut r = ax.clone();
    for (j, &l) in lambda.iter().enumerate() {
        r.column_mut(j).axpy(-l, &x.column(j), 1.0);
    }
    r
}

/// `aᵀ b` through the blocked GEMM kernel; nalgebra's `tr_mul` computes
/// column dot products one at a time, which is several times slower for
/// tall blocks.
fn at_b(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, m, n) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(b.nrows(), k);
    let mut c = DMatrix::zeros(m, n);
    if k == 0 || m == 0 || n == 0 {
        return c;
    }
    // SAFETY: the strides describe `aᵀ` (m×k), `b` (k×n) and `c` (m×n) inside
    // their column-major buffers, whose lengths match the dimensions above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

fn project_out(x: &DMatrix<f64>, q: &mut DMatrix<f64>) {
    if q.ncols() == 0 {
        return;
    }
    let coeff = at_b(x, q);
    q.gemm(-1.0, x, &coeff, 1.0);
}

/// Orthonormalize the columns of `q`, dropping dependent directions.
fn svqb(q: &DMatrix<f64>) -> Result<DMatrix<f64>, EigError> {
    let c = q.ncols();
    if c == 0 {
        return Ok(q.clone());
    }
    let g = at_b(q, q);
    let scale: Vec<f64> = (0..c)
        .map(|i| if g[(i, i)] > 0.0 { 1.0 / g[(i, i)].sqrt() } else { 0.0 })
        .collect();
    let mut gs = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            gs[i * c + j] = scale[i] * g[(i, j)] * scale[j];
        }
    }
    let dec = symmetric_eigen(gs, c, true)?;
    let vecs = dec.vectors.expect("vectors requested");
    let top = dec.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..c).filter(|&j| top > 0.0 && dec.values[j] > SVQB_DROP * top).collect();
    let mut t = DMatrix::zeros(c, keep.len());
    for (col, &j) in keep.iter().enumerate() {
        let inv_sqrt = 1.0 / dec.values[j].sqrt();
        for i in 0..c {
            t[(i, col)] = scale[i] * vecs[j * c + i] * inv_sqrt;
        }
    }
    Ok(q * t)
}

/// Lowest `m` eigenpairs of the small symmetric matrix `g`.
fn small_eigen(g: &DMatrix<f64>, m: usize) -> Result<(Vec<f64>, DMatrix<f64>), EigError> {
    let s = g.nrows();
    let mut a = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            a[i * s + j] = 0.5 * (g[(i, j)] + g[(j, i)]);
        }
    }
    let dec = symmetric_eigen(a, s, true)?;
    let vecs = dec.vectors.expect("vectors requested");
    let m = m.min(s);
    let mut c = DMatrix::zeros(s, m);
    for j in 0..m {
        for i in 0..s {
            c[(i, j)] = vecs[j * s + i];
        }
    }
    Ok((dec.values[..m].to_vec(), c))
}

fn rayleigh_ritz_in_place(x: &mut DMatrix<f64>, ax: &mut DMatrix<f64>) -> Vec<f64> {
    let g = at_b(x, ax);
    let (theta, c) = small_eigen(&g, x.ncols()).expect("dense eigensolve of a projected matrix");
    *x = &*x * &c;
    *ax = &*ax * &c;
    theta
}

/// Final Rayleigh–Ritz on `X`, deterministic ordering and sign convention.
fn finish<A: SymOperator + ?Sized>(
    a: &A,
    mut x: DMatrix<f64>,
    k: usize,
    tol: f64,
    iterations: usize,
    fallback: bool,
) -> EigResult {
    let mut ax = apply_block(a, &x);
    let lambda = rayleigh_ritz_in_place(&mut x, &mut ax);
    let r = residual_block(&x, &ax, &lambda);
    let n = x.nrows();

    let lead: Vec<usize> = (0..k)
        .map(|j| {
            let col = x.column(j);
            let big = col.amax();
            (0..n).find(|&i| col[i].abs() >= 1e-6 * big).unwrap_or(0)
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]).then(lead[i].cmp(&lead[j])).then(i.cmp(&j)));

    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let sign = if x[(lead[src], src)] < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(dst).copy_from(&(x.column(src) * sign));
        values.push(lambda[src]);
        residuals.push(r.column(src).norm());
    }
    let converged = values.iter().zip(&residuals).map(|(l, r)| *r <= tol * (1.0 + l.abs())).collect();
    EigResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        converged,
        iterations,
        preconditioner_fallback: fallback,
    }
}
