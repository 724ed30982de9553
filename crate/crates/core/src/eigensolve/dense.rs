//! Dense symmetric eigen-decomposition: Householder reduction to tridiagonal
//! form followed by the implicit QL iteration with Wilkinson-type shifts.
//!
//! Used as the cross-check oracle for the iterative solver and for the small
//! Rayleigh–Ritz problems inside it.

use super::{EigError, SparseSym};

/// Default hard cap on the order accepted by [`dense_eig`].
pub const DENSE_ORDER_CAP: usize = 2000;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and, optionally, eigenvectors of a dense symmetric
/// matrix. `vectors[k * n + i]` is component `i` of eigenvector `k`.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

/// Full ascending spectrum of `a` through the dense path.
pub fn dense_eig(a: &SparseSym) -> Result<Vec<f64>, EigError> {
    dense_eig_capped(a, DENSE_ORDER_CAP)
}

pub fn dense_eig_capped(a: &SparseSym, cap: usize) -> Result<Vec<f64>, EigError> {
    if a.order() > cap {
        return Err(EigError::TooLarge { order: a.order(), cap });
    }
    let n = a.order();
    let d = symmetric_eigen(a.to_dense(), n, false)?;
    Ok(d.values)
}

/// Decompose the row-major symmetric matrix `a` (only the lower triangle is
/// read).
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize, want_vectors: bool) -> Result<DenseEigen, EigError> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(DenseEigen { values: vec![], vectors: want_vectors.then(Vec::new) });
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut a, n, &mut d, &mut e, want_vectors);
    implicit_ql(&mut d, &mut e, n, want_vectors.then_some(a.as_mut_slice()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for (k, &src) in order.iter().enumerate() {
            for i in 0..n {
                v[k * n + i] = a[i * n + src];
            }
        }
        v
    });
    Ok(DenseEigen { values, vectors })
}

/// Householder reduction. On exit `d` holds the diagonal, `e[1..]` the
/// sub-diagonal, and (when requested) `z` the accumulated orthogonal
/// transform, column `k` of which pairs with `d[k]`.
fn tridiagonalize(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], vectors: bool) {
    let at = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..i).map(|k| z[at(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = z[at(i, l)];
            } else {
                for k in 0..i {
                    z[at(i, k)] /= scale;
                    h += z[at(i, k)] * z[at(i, k)];
                }
                let mut f = z[at(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[at(i, l)] = f - g;
                f = 0.0;
                for j in 0..i {
                    if vectors {
                        z[at(j, i)] = z[at(i, j)] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[at(j, k)] * z[at(i, k)];
                    }
                    for k in j + 1..i {
                        g += z[at(k, j)] * z[at(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[at(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    let f = z[at(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[at(j, k)] -= f * e[k] + g * z[at(i, k)];
                    }
                }
            }
        } else {
            e[i] = z[at(i, l)];
        }
        d[i] = h;
    }
    if vectors {
        d[0] = 0.0;
    }
    e[0] = 0.0;
    for i in 0..n {
        if vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += z[at(i, k)] * z[at(k, j)];
                    }
                    for k in 0..i {
                        z[at(k, j)] -= g * z[at(k, i)];
                    }
                }
            }
            d[i] = z[at(i, i)];
            z[at(i, i)] = 1.0;
            for j in 0..i {
                z[at(j, i)] = 0.0;
                z[at(i, j)] = 0.0;
            }
        } else {
            d[i] = z[at(i, i)];
        }
    }
}

fn implicit_ql(d: &mut [f64], e: &mut [f64], n: usize, mut z: Option<&mut [f64]>) -> Result<(), EigError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(EigError::DenseNoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
