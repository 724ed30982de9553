//! Cross-section eigenproblems on a staircase finite-difference grid:
//! `E₁` for `−Δ` on `ω` and `λ₁(β)` for `−Δ − β²∂_τ²`, with
//! `∂_τ = t₂∂₁ − t₁∂₂` (in slice coordinates `t = (x₂, x₃)`).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigensolve::{lobpcg_with, CsrMatrix, EigError, EigResult, LobpcgOptions, SparseSym, SymBuilder};
use crate::geometry::CrossSection;

#[derive(Debug, thiserror::Error)]
pub enum XSectionError {
    #[error("no lattice node of spacing {h} lies inside the cross-section")]
    EmptyGrid { h: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Eig(#[from] EigError),
}

/// Uniform lattice nodes strictly inside `ω`, anchored at the bounding-box
/// minimum corner.
#[derive(Debug, Clone)]
pub struct TransverseGrid {
    pub h: f64,
    pub origin: [f64; 2],
    /// Lattice extent: nodes `origin + (i, j)·h` for `1 ≤ i ≤ nx`, `1 ≤ j ≤ ny`.
    pub nx: usize,
    pub ny: usize,
    /// Node index per lattice point `(i−1) + (j−1)·nx`, row-major.
    index: Vec<Option<usize>>,
    coords: Vec<[f64; 2]>,
    lattice: Vec<(usize, usize)>,
}

impl TransverseGrid {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn coord(&self, node: usize) -> [f64; 2] {
        self.coords[node]
    }

    /// Lattice position `(i, j)` of a node.
    pub fn lattice(&self, node: usize) -> (usize, usize) {
        self.lattice[node]
    }

    /// Node at lattice position `(i, j)`, if interior.
    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        if i < 1 || j < 1 || i as usize > self.nx || j as usize > self.ny {
            return None;
        }
        self.index[(i as usize - 1) + (j as usize - 1) * self.nx]
    }

    /// `(west, east, south, north)` neighbours; `None` outside the grid.
    pub fn neighbours(&self, node: usize) -> [Option<usize>; 4] {
        let (i, j) = self.lattice[node];
        let (i, j) = (i as isize, j as isize);
        [self.node_at(i - 1, j), self.node_at(i + 1, j), self.node_at(i, j - 1), self.node_at(i, j + 1)]
    }
}

pub fn build_grid(omega: &CrossSection, h: f64) -> Result<TransverseGrid, XSectionError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(XSectionError::InvalidArgument(format!("grid spacing must be positive, got {h}")));
    }
    let (lo, hi) = omega.bounding_box();
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    let mut index = vec![None; nx * ny];
    let mut coords = Vec::new();
    let mut lattice = Vec::new();
    for j in 1..=ny {
        for i in 1..=nx {
            let t = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            if omega.contains(t) {
                index[(i - 1) + (j - 1) * nx] = Some(coords.len());
                coords.push(t);
                lattice.push((i, j));
            }
        }
    }
    if coords.is_empty() {
        return Err(XSectionError::EmptyGrid { h });
    }
    Ok(TransverseGrid { h, origin: lo, nx, ny, index, coords, lattice })
}

/// Five-point Dirichlet Laplacian `(1/h²)·stencil` on the grid.
pub fn laplacian(grid: &TransverseGrid) -> SparseSym {
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut b = SymBuilder::new(n);
    for p in 0..n {
        b.add(p, p, 4.0 * inv_h2);
        for q in grid.neighbours(p).into_iter().flatten() {
            if q < p {
                b.add(p, q, -inv_h2);
            }
        }
    }
    b.build()
}

/// Centered-difference `∂_τ` with zero extension; the coordinate factors are
/// taken at the row node. East/west neighbours share `t₂` and north/south
/// neighbours share `t₁`, so the matrix is exactly antisymmetric.
pub fn angular_derivative(grid: &TransverseGrid) -> CsrMatrix {
    let n = grid.len();
    let inv_2h = 0.5 / grid.h;
    let rows = (0..n)
        .map(|p| {
            let [t1, t2] = grid.coord(p);
            let [w, e, s, nn] = grid.neighbours(p);
            let mut row = Vec::with_capacity(4);
            if let Some(q) = e {
                row.push((q, t2 * inv_2h));
            }
            if let Some(q) = w {
                row.push((q, -t2 * inv_2h));
            }
            if let Some(q) = nn {
                row.push((q, -t1 * inv_2h));
            }
            if let Some(q) = s {
                row.push((q, t1 * inv_2h));
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(n, rows)
}

/// `A(β) = A(0) + β²TᵀT` together with its ingredients.
#[derive(Debug, Clone)]
pub struct XSectionOperator {
    pub beta: f64,
    pub h: f64,
    pub matrix: SparseSym,
    pub laplacian: SparseSym,
    pub t: CsrMatrix,
    /// `TᵀT`.
    pub gram: SparseSym,
}

pub fn assemble_xsection(grid: &TransverseGrid, beta: f64) -> XSectionOperator {
    let lap = laplacian(grid);
    let t = angular_derivative(grid);
    let gram = t.transpose().mul(&t).to_sym().expect("a Gram matrix is symmetric");
    let matrix = if beta == 0.0 { lap.clone() } else { add_scaled(&lap, &gram, beta * beta) };
    XSectionOperator { beta, h: grid.h, matrix, laplacian: lap, t, gram }
}

/// `a + c·b`.
pub(crate) fn add_scaled(a: &SparseSym, b: &SparseSym, c: f64) -> SparseSym {
    let mut out = SymBuilder::new(a.order());
    for i in 0..a.order() {
        for (j, v) in a.row(i) {
            out.add(i, j, v);
        }
        for (j, v) in b.row(i) {
            out.add(i, j, c * v);
        }
    }
    out.build()
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossSectionSpectrum {
    pub beta: f64,
    pub h: f64,
    pub nodes: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
}

impl CrossSectionSpectrum {
    fn from_result(op: &XSectionOperator, r: EigResult) -> Self {
        Self {
            beta: op.beta,
            h: op.h,
            nodes: op.matrix.order(),
            eigenvalues: r.eigenvalues,
            residuals: r.residuals,
            converged: r.converged,
            iterations: r.iterations,
            eigenvectors: r.eigenvectors,
        }
    }
}

pub const DEFAULT_MAX_ITER: usize = 5000;

/// The `k` smallest eigenpairs of `A(β)`. On non-convergence the partial
/// spectrum is returned inside the error.
pub fn eigs_xsection(op: &XSectionOperator, k: usize, tol: f64, seed: u64) -> Result<CrossSectionSpectrum, XSectionError> {
    eigs_xsection_with(op, &LobpcgOptions::new(k, tol, DEFAULT_MAX_ITER, seed))
}

pub fn eigs_xsection_with(op: &XSectionOperator, opts: &LobpcgOptions) -> Result<CrossSectionSpectrum, XSectionError> {
    if opts.k > op.matrix.order() {
        return Err(XSectionError::InvalidArgument(format!(
            "k = {} exceeds the {} grid nodes",
            opts.k,
            op.matrix.order()
        )));
    }
    Ok(CrossSectionSpectrum::from_result(op, lobpcg_with(&op.matrix, opts)?))
}

/// First-order Richardson extrapolation from spacings `h` and `h/2`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    2.0 * fine - coarse
}

/// Lowest eigenvalue at spacings `h` and `h/2`, and its extrapolation.
pub fn extrapolated_ground(
    omega: &CrossSection,
    beta: f64,
    h: f64,
    tol: f64,
    seed: u64,
) -> Result<(f64, f64, f64), XSectionError> {
    let coarse = eigs_xsection(&assemble_xsection(&build_grid(omega, h)?, beta), 1, tol, seed)?.eigenvalues[0];
    let fine = eigs_xsection(&assemble_xsection(&build_grid(omega, 0.5 * h)?, beta), 1, tol, seed)?.eigenvalues[0];
    Ok((coarse, fine, richardson(coarse, fine)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::dense_eig;
    use std::f64::consts::PI;

    fn unit_square() -> CrossSection {
        CrossSection::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(build_grid(&unit_square(), 0.25).unwrap().len(), 9);
        // Every point of {−0.5, 0, 0.5}² lies inside the unit disc.
        let disc = CrossSection::disc([0.0, 0.0], 1.0).unwrap();
        let g = build_grid(&disc, 0.5).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.coords().iter().all(|&t| disc.contains(t)));
        let sliver = CrossSection::rectangle([0.0, 0.0], [1.0, 0.1]).unwrap();
        assert!(matches!(build_grid(&sliver, 0.25), Err(XSectionError::EmptyGrid { .. })));
    }

    #[test]
    fn single_node_stencil() {
        let g = build_grid(&unit_square(), 0.5).unwrap();
        assert_eq!(g.len(), 1);
        let op = assemble_xsection(&g, 0.0);
        assert_eq!(op.matrix.to_dense(), vec![16.0]);
    }

    #[test]
    fn t_is_exactly_antisymmetric() {
        let e = CrossSection::ellipse([0.3, -0.2], 1.0, 0.6).unwrap();
        let g = build_grid(&e, 0.1).unwrap();
        let t = angular_derivative(&g);
        let tt = t.transpose();
        for p in 0..g.len() {
            for (q, v) in t.row(p) {
                assert_eq!(tt.get(p, q), -v);
            }
        }
    }

    #[test]
    fn gram_difference_matches() {
        let g = build_grid(&CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap(), 0.125).unwrap();
        let op = assemble_xsection(&g, 1.7);
        let diff = add_scaled(&op.matrix, &op.laplacian, -1.0);
        for i in 0..diff.order() {
            for (j, v) in diff.row(i) {
                assert!((v - 1.7 * 1.7 * op.gram.get(i, j)).abs() < 1e-12);
            }
            for (j, v) in op.gram.row(i) {
                assert!((diff.get(i, j) - 1.7 * 1.7 * v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_gaussian_nearly_annihilated() {
        // A smooth radial function is rotation invariant, so ∂_τ of it
        // vanishes; the discrete operator reproduces this to O(h²).
        let disc = CrossSection::disc([0.0, 0.0], 1.0).unwrap();
        let sup = |h: f64| {
            let g = build_grid(&disc, h).unwrap();
            let v: Vec<f64> = g.coords().iter().map(|t| (-20.0 * (t[0] * t[0] + t[1] * t[1])).exp()).collect();
            let mut out = vec![0.0; g.len()];
            angular_derivative(&g).apply(&v, &mut out);
            out.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        };
        let (a, b) = (sup(1.0 / 16.0), sup(1.0 / 32.0));
        assert!(a < 0.05 && b < a / 3.0, "{a} {b}");
    }

    #[test]
    fn square_ground_state() {
        let g = build_grid(&unit_square(), 1.0 / 32.0).unwrap();
        let spec = eigs_xsection(&assemble_xsection(&g, 0.0), 3, 1e-9, 0).unwrap();
        // Discrete 5-point eigenvalues on a square are known in closed form.
        let lam = |k: f64, l: f64| {
            let h = 1.0 / 32.0;
            4.0 / (h * h) * ((k * PI * h / 2.0).sin().powi(2) + (l * PI * h / 2.0).sin().powi(2))
        };
        let want = [lam(1.0, 1.0), lam(1.0, 2.0), lam(2.0, 1.0)];
        for (got, want) in spec.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-7 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let e = CrossSection::ellipse([0.8, 0.1], 0.7, 0.4).unwrap();
        let g = build_grid(&e, 0.05).unwrap();
        let op = assemble_xsection(&g, 2.0);
        let dense = dense_eig(&op.matrix).unwrap();
        let it = eigs_xsection(&op, 4, 1e-10, 3).unwrap();
        for (a, b) in it.eigenvalues.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn k_beyond_nodes_rejected() {
        let g = build_grid(&unit_square(), 0.25).unwrap();
        assert!(eigs_xsection(&assemble_xsection(&g, 0.0), 10, 1e-8, 0).is_err());
    }
}
