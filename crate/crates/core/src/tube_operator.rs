//! Straight-gauge twisted Laplacian on the truncated tube `(−L, L) × ω`.
//!
//! Pulling the tube map back to the straight tube turns `∂₁` into the
//! covariant derivative `∂₁ − θ̇∂_τ`. The discrete quadratic form is a sum of
//! squares over longitudinal links `(i, i+1)` with `c = −θ̇(x_{i+½})/2`:
//!
//! `Q(ψ) = Σ ‖(ψᵢ₊₁ − ψᵢ)/h₁ + c·T(ψᵢ₊₁ + ψᵢ)‖² + Σ ψᵢᵀA⊥(0)ψᵢ`.
//!
//! Dirichlet ends keep the two ghost links to the zero slices beyond the
//! cuts; Neumann ends drop them. Unknowns are ordered slice-major:
//! `index = slice·N⊥ + node`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigensolve::{block_size, lobpcg_with, CsrMatrix, EigError, EigResult, LobpcgOptions, SparseSym, SymOperator};
use crate::geometry::{GeometrySummary, TwistProfile};
use crate::special::{bessel_j0, j0_first_zero};
use crate::xsection::{angular_derivative, assemble_xsection, eigs_xsection, laplacian, TransverseGrid, XSectionError};

/// Sign relating the covariant derivative to `θ̇∂_τ` for the tube map's
/// rotation orientation.
const GAUGE_SIGN: f64 = -1.0;

#[derive(Debug, thiserror::Error)]
pub enum TubeError {
    #[error("invalid longitudinal grid: {0}")]
    InvalidGrid(String),
    #[error("the trial vector vanishes on every interior node")]
    ZeroVector,
    #[error("the cross-section does not contain the origin")]
    NoInradius,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    XSection(#[from] XSectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EndCondition {
    Dirichlet,
    Neumann,
}

impl std::fmt::Display for EndCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        })
    }
}

/// Slices `x_j = −L + (j+1)·h₁`, `j = 0..N₁`, with `h₁ = 2L/(N₁+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongitudinalGrid {
    pub half_length: f64,
    pub slices: usize,
    pub h1: f64,
    pub ends: EndCondition,
}

impl LongitudinalGrid {
    pub fn new(half_length: f64, slices: usize, ends: EndCondition) -> Result<Self, TubeError> {
        if !(half_length > 0.0 && half_length.is_finite()) || slices == 0 {
            return Err(TubeError::InvalidGrid(format!("need L > 0 and N₁ ≥ 1, got L = {half_length}, N₁ = {slices}")));
        }
        Ok(Self { half_length, slices, h1: 2.0 * half_length / (slices + 1) as f64, ends })
    }

    /// Grid with spacing `h₁`, which must divide `2L`.
    pub fn with_spacing(half_length: f64, h1: f64, ends: EndCondition) -> Result<Self, TubeError> {
        if !(h1 > 0.0) {
            return Err(TubeError::InvalidGrid(format!("spacing must be positive, got {h1}")));
        }
        let cells = 2.0 * half_length / h1;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 2.0 {
            return Err(TubeError::InvalidGrid(format!("h₁ = {h1} does not divide 2L = {} into at least two cells", 2.0 * half_length)));
        }
        Self::new(half_length, rounded as usize - 1, ends)
    }

    pub fn coord(&self, slice: usize) -> f64 {
        -self.half_length + (slice + 1) as f64 * self.h1
    }

    /// Midpoint of link `l`, joining slices `l−1` and `l` (slices `−1` and
    /// `N₁` are the ghost planes at the cuts).
    pub fn link_midpoint(&self, link: usize) -> f64 {
        -self.half_length + (link as f64 + 0.5) * self.h1
    }

    pub fn link_active(&self, link: usize) -> bool {
        match self.ends {
            EndCondition::Dirichlet => link <= self.slices,
            EndCondition::Neumann => link >= 1 && link < self.slices,
        }
    }

    /// Eigenpairs of the 1D second-difference operator with these ends:
    /// `(value, mode)` for `k = 0, 1, …`.
    pub fn mode(&self, k: usize) -> (f64, Vec<f64>) {
        let n = self.slices;
        let scale = 4.0 / (self.h1 * self.h1);
        match self.ends {
            EndCondition::Dirichlet => {
                let a = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
                (scale * (0.5 * a).sin().powi(2), (0..n).map(|j| (a * (j + 1) as f64).sin()).collect())
            }
            EndCondition::Neumann => {
                let a = k as f64 * std::f64::consts::PI / n as f64;
                (scale * (0.5 * a).sin().powi(2), (0..n).map(|j| (a * (j as f64 + 0.5)).cos()).collect())
            }
        }
    }
}

/// Matrix-free form of the tube operator.
#[derive(Debug, Clone)]
pub struct TubeForm {
    pub lgrid: LongitudinalGrid,
    n_perp: usize,
    a_perp: SparseSym,
    t: CsrMatrix,
    t_transpose: CsrMatrix,
    gram_diag: Vec<f64>,
    /// `θ̇` at every link midpoint, ghosts included.
    pub link_rates: Vec<f64>,
    link_c: Vec<f64>,
}

pub fn tube_form(tgrid: &TransverseGrid, lgrid: &LongitudinalGrid, profile: &TwistProfile) -> TubeForm {
    let t = angular_derivative(tgrid);
    let t_transpose = t.transpose();
    let mut gram_diag = vec![0.0; tgrid.len()];
    for p in 0..t.nrows() {
        for (q, v) in t.row(p) {
            gram_diag[q] += v * v;
        }
    }
    let link_rates: Vec<f64> = (0..=lgrid.slices).map(|l| profile.rate(lgrid.link_midpoint(l))).collect();
    let link_c = link_rates.iter().map(|r| 0.5 * GAUGE_SIGN * r).collect();
    TubeForm { lgrid: *lgrid, n_perp: tgrid.len(), a_perp: laplacian(tgrid), t, t_transpose, gram_diag, link_rates, link_c }
}

impl TubeForm {
    pub fn n_perp(&self) -> usize {
        self.n_perp
    }

    /// `Q(ψ)` evaluated term by term from its definition.
    pub fn quadratic_form(&self, psi: &[f64]) -> f64 {
        let np = self.n_perp;
        let h1 = self.lgrid.h1;
        let zero = vec![0.0; np];
        let mut total = 0.0;
        let mut ax = vec![0.0; np];
        for i in 0..self.lgrid.slices {
            let s = &psi[i * np..(i + 1) * np];
            self.a_perp.apply(s, &mut ax);
            total += s.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>();
        }
        let mut tsum = vec![0.0; np];
        for l in (0..=self.lgrid.slices).filter(|&l| self.lgrid.link_active(l)) {
            let left = if l == 0 { &zero[..] } else { &psi[(l - 1) * np..l * np] };
            let right = if l == self.lgrid.slices { &zero[..] } else { &psi[l * np..(l + 1) * np] };
            let sum: Vec<f64> = left.iter().zip(right).map(|(a, b)| a + b).collect();
            self.t.apply(&sum, &mut tsum);
            let c = self.link_c[l];
            total += (0..np).map(|p| ((right[p] - left[p]) / h1 + c * tsum[p]).powi(2)).sum::<f64>();
        }
        total
    }

    /// Assemble the lower-triangle matrix.
    pub fn assemble(&self) -> SparseSym {
        let np = self.n_perp;
        let n1 = self.lgrid.slices;
        let inv_h1 = 1.0 / self.lgrid.h1;
        let inv_h1_sq = inv_h1 * inv_h1;
        let a_full = full_rows(&self.a_perp);
        let k_mat = combine(&[(&self.t, 1.0), (&self.t_transpose, -1.0)], np);
        let s_mat = combine(&[(&self.t, 1.0), (&self.t_transpose, 1.0)], np);
        let gram = self.t_transpose.mul(&self.t);

        let mut row_ptr = Vec::with_capacity(n1 * np + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for i in 0..n1 {
            let below = i * np;
            for p in 0..np {
                let row = below + p;
                entries.clear();
                // Coupling to slice i−1 through link i.
                if i >= 1 {
                    let c = self.link_c[i];
                    let base = below - np;
                    entries.push((base + p, -inv_h1_sq));
                    if c != 0.0 {
                        entries.extend(k_mat.row(p).map(|(q, v)| (base + q, c * inv_h1 * v)));
                        entries.extend(gram.row(p).map(|(q, v)| (base + q, c * c * v)));
                    }
                }
                // Diagonal block.
                entries.extend(a_full.row(p).filter(|&(q, _)| q <= p).map(|(q, v)| (below + q, v)));
                for (link, side) in [(i, 1.0), (i + 1, -1.0)] {
                    if !self.lgrid.link_active(link) {
                        continue;
                    }
                    let c = self.link_c[link];
                    entries.push((row, inv_h1_sq));
                    if c != 0.0 {
                        entries.extend(s_mat.row(p).filter(|&(q, _)| q <= p).map(|(q, v)| (below + q, side * c * inv_h1 * v)));
                        entries.extend(gram.row(p).filter(|&(q, _)| q <= p).map(|(q, v)| (below + q, c * c * v)));
                    }
                }
                entries.sort_by_key(|e| e.0);
                let mut last: Option<usize> = None;
                for &(col, v) in entries.iter() {
                    if last == Some(col) {
                        *values.last_mut().unwrap() += v;
                    } else {
                        col_idx.push(col);
                        values.push(v);
                        last = Some(col);
                    }
                }
                // Drop entries that summed to exact zero.
                let start = *row_ptr.last().unwrap();
                let mut w = start;
                for r in start..col_idx.len() {
                    if values[r] != 0.0 {
                        col_idx[w] = col_idx[r];
                        values[w] = values[r];
                        w += 1;
                    }
                }
                col_idx.truncate(w);
                values.truncate(w);
                row_ptr.push(w);
            }
        }
        SparseSym::from_lower_csr(n1 * np, row_ptr, col_idx, values).expect("tube assembly emits sorted lower rows")
    }
}

fn full_rows(a: &SparseSym) -> CsrMatrix {
    let mut rows = vec![Vec::new(); a.order()];
    for i in 0..a.order() {
        for (j, v) in a.row(i) {
            rows[i].push((j, v));
            if j != i {
                rows[j].push((i, v));
            }
        }
    }
    CsrMatrix::from_rows(a.order(), rows)
}

fn combine(terms: &[(&CsrMatrix, f64)], n: usize) -> CsrMatrix {
    let rows = (0..n)
        .map(|i| terms.iter().flat_map(|(m, s)| m.row(i).map(move |(j, v)| (j, s * v))).collect())
        .collect();
    CsrMatrix::from_rows(n, rows)
}

impl SymOperator for TubeForm {
    fn order(&self) -> usize {
        self.lgrid.slices * self.n_perp
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let np = self.n_perp;
        let n1 = self.lgrid.slices;
        let inv_h1 = 1.0 / self.lgrid.h1;
        for i in 0..n1 {
            self.a_perp.apply(&x[i * np..(i + 1) * np], &mut y[i * np..(i + 1) * np]);
        }
        let mut d = vec![0.0; np];
        let mut sum = vec![0.0; np];
        let mut tmp = vec![0.0; np];
        for l in 0..=n1 {
            if !self.lgrid.link_active(l) {
                continue;
            }
            let c = self.link_c[l];
            let has_left = l >= 1;
            let has_right = l < n1;
            for p in 0..np {
                let xl = if has_left { x[(l - 1) * np + p] } else { 0.0 };
                let xr = if has_right { x[l * np + p] } else { 0.0 };
                d[p] = (xr - xl) * inv_h1;
                sum[p] = xr + xl;
            }
            if c != 0.0 {
                self.t.apply(&sum, &mut tmp);
                for p in 0..np {
                    d[p] += c * tmp[p];
                }
                self.t_transpose.apply(&d, &mut tmp);
            }
            for p in 0..np {
                let shared = if c != 0.0 { c * tmp[p] } else { 0.0 };
                if has_right {
                    y[l * np + p] += d[p] * inv_h1 + shared;
                }
                if has_left {
                    y[(l - 1) * np + p] += -d[p] * inv_h1 + shared;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let np = self.n_perp;
        let inv_h1_sq = 1.0 / (self.lgrid.h1 * self.lgrid.h1);
        let a_diag = self.a_perp.diagonal();
        let mut out = Vec::with_capacity(self.order());
        for i in 0..self.lgrid.slices {
            let links: Vec<f64> = [i, i + 1].into_iter().filter(|&l| self.lgrid.link_active(l)).map(|l| self.link_c[l]).collect();
            for p in 0..np {
                out.push(a_diag[p] + links.iter().map(|c| inv_h1_sq + c * c * self.gram_diag[p]).sum::<f64>());
            }
        }
        out
    }
}

/// Assembled tube operator.
#[derive(Debug, Clone)]
pub struct TubeOperator {
    pub form: TubeForm,
    pub matrix: SparseSym,
}

pub fn assemble_tube(tgrid: &TransverseGrid, lgrid: &LongitudinalGrid, profile: &TwistProfile) -> TubeOperator {
    let form = tube_form(tgrid, lgrid, profile);
    let matrix = form.assemble();
    TubeOperator { form, matrix }
}

/// `vᵀHv / vᵀv`; an upper bound for the lowest eigenvalue of `H`.
pub fn rayleigh_quotient<A: SymOperator + ?Sized>(op: &A, v: &[f64]) -> Result<f64, TubeError> {
    if v.len() != op.order() {
        return Err(TubeError::InvalidArgument(format!("vector length {} ≠ order {}", v.len(), op.order())));
    }
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return Err(TubeError::ZeroVector);
    }
    let mut hv = vec![0.0; v.len()];
    op.apply(v, &mut hv);
    Ok(v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>() / vv)
}

/// `J₀(j₀₁|t|/r)·cos(πx₁/(2L))` on nodes with `|t| < r`, zero elsewhere.
pub fn trial_cylinder_mode(tgrid: &TransverseGrid, lgrid: &LongitudinalGrid, summary: &GeometrySummary) -> Result<Vec<f64>, TubeError> {
    let r = summary.inradius.filter(|_| summary.contains_origin).ok_or(TubeError::NoInradius)?;
    let j01 = j0_first_zero();
    let radial: Vec<f64> = tgrid
        .coords()
        .iter()
        .map(|t| {
            let rho = t[0].hypot(t[1]);
            if rho < r {
                bessel_j0(j01 * rho / r)
            } else {
                0.0
            }
        })
        .collect();
    let mut v = Vec::with_capacity(lgrid.slices * radial.len());
    for i in 0..lgrid.slices {
        let axial = (std::f64::consts::PI * lgrid.coord(i) / (2.0 * lgrid.half_length)).cos();
        v.extend(radial.iter().map(|f| f * axial));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct TubeSpectrum {
    pub half_length: f64,
    pub ends: EndCondition,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
}

impl TubeSpectrum {
    fn from_result(lgrid: &LongitudinalGrid, r: EigResult) -> Self {
        Self {
            half_length: lgrid.half_length,
            ends: lgrid.ends,
            eigenvalues: r.eigenvalues,
            residuals: r.residuals,
            converged: r.converged,
            iterations: r.iterations,
            eigenvectors: r.eigenvectors,
        }
    }
}

/// Lowest eigenpairs of the tube operator, matrix-free. On non-convergence
/// the partial spectrum travels inside [`EigError::NotConverged`].
pub fn eigs_tube(form: &TubeForm, opts: &LobpcgOptions) -> Result<TubeSpectrum, TubeError> {
    Ok(TubeSpectrum::from_result(&form.lgrid, lobpcg_with(form, opts)?))
}

/// Products `u_j ⊗ φ_l` of longitudinal modes and the given transverse
/// vectors (columns of `transverse`, eigenvalues `values`), the `count`
/// lowest by summed eigenvalue, normalized.
pub fn separable_guess(lgrid: &LongitudinalGrid, transverse: &DMatrix<f64>, values: &[f64], count: usize) -> DMatrix<f64> {
    let np = transverse.nrows();
    let m = transverse.ncols().min(values.len());
    let modes: Vec<(f64, Vec<f64>)> = (0..count.min(lgrid.slices)).map(|k| lgrid.mode(k)).collect();
    let mut pairs: Vec<(f64, usize, usize)> =
        modes.iter().enumerate().flat_map(|(j, (mu, _))| (0..m).map(move |l| (mu + values[l], j, l))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.truncate(count);
    let mut out = DMatrix::zeros(lgrid.slices * np, pairs.len());
    for (col, &(_, j, l)) in pairs.iter().enumerate() {
        let u = &modes[j].1;
        for (i, ui) in u.iter().enumerate() {
            for p in 0..np {
                out[(i * np + p, col)] = ui * transverse[(p, l)];
            }
        }
        let norm = out.column(col).norm();
        out.column_mut(col).scale_mut(1.0 / norm);
    }
    out
}

/// Starting block for the `k` lowest tube modes: [`separable_guess`] built
/// from cross-section modes of `A(θ̇(0))`, sized to the solver block.
pub fn reference_guess(
    tgrid: &TransverseGrid,
    lgrid: &LongitudinalGrid,
    profile: &TwistProfile,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<DMatrix<f64>, TubeError> {
    let m = block_size(k, lgrid.slices * tgrid.len());
    let xs = eigs_xsection(&assemble_xsection(tgrid, profile.rate(0.0)), m.min(tgrid.len()), tol, seed)?;
    Ok(separable_guess(lgrid, &xs.eigenvectors, &xs.eigenvalues, m))
}

/// Transfer slice-major vectors between longitudinal grids by linear
/// interpolation in `x₁`, taking the value zero on the cut planes and
/// beyond them.
pub fn prolong(v: &DMatrix<f64>, from: &LongitudinalGrid, to: &LongitudinalGrid) -> DMatrix<f64> {
    let np = v.nrows() / from.slices;
    let mut out = DMatrix::zeros(to.slices * np, v.ncols());
    for i in 0..to.slices {
        let s = (to.coord(i) + from.half_length) / from.h1 - 1.0;
        if s <= -1.0 || s >= from.slices as f64 {
            continue;
        }
        let lo = s.floor();
        let w = s - lo;
        let lo = lo as isize;
        for (slice, weight) in [(lo, 1.0 - w), (lo + 1, w)] {
            if weight == 0.0 || slice < 0 || slice >= from.slices as isize {
                continue;
            }
            let src = slice as usize * np;
            for c in 0..v.ncols() {
                for p in 0..np {
                    out[(i * np + p, c)] += weight * v[(src + p, c)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{dense_eig, lobpcg, SymBuilder};
    use crate::geometry::CrossSection;
    use crate::xsection::{assemble_xsection, build_grid, eigs_xsection};

    fn offset_square_grid(h: f64) -> TransverseGrid {
        build_grid(&CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap(), h).unwrap()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn spacing_constructor() {
        let g = LongitudinalGrid::with_spacing(16.0, 1.0 / 16.0, EndCondition::Dirichlet).unwrap();
        assert_eq!(g.slices, 511);
        assert_eq!(g.coord(255), 0.0);
        assert!(LongitudinalGrid::with_spacing(1.0, 0.3, EndCondition::Dirichlet).is_err());
    }

    #[test]
    fn matrix_free_matches_assembly_and_form() {
        let tg = offset_square_grid(0.25);
        for ends in [EndCondition::Dirichlet, EndCondition::Neumann] {
            let lg = LongitudinalGrid::new(2.0, 7, ends).unwrap();
            let op = assemble_tube(&tg, &lg, &TwistProfile::linear(1.3).unwrap());
            let n = op.matrix.order();
            let x = pseudo_random(n, 7);
            let (mut y1, mut y2) = (vec![0.0; n], vec![0.0; n]);
            op.matrix.apply(&x, &mut y1);
            op.form.apply(&x, &mut y2);
            for (a, b) in y1.iter().zip(&y2) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
            let xhx: f64 = x.iter().zip(&y1).map(|(a, b)| a * b).sum();
            let q = op.form.quadratic_form(&x);
            assert!((xhx - q).abs() < 1e-10 * q, "{xhx} vs {q}");
            let d = op.form.diagonal();
            for (i, di) in d.iter().enumerate() {
                assert!((op.matrix.get(i, i) - di).abs() < 1e-10 * di);
            }
        }
    }

    #[test]
    fn untwisted_is_exact_tensor_sum() {
        let tg = offset_square_grid(0.125);
        let np = tg.len();
        let lg = LongitudinalGrid::new(1.5, 5, EndCondition::Dirichlet).unwrap();
        let op = assemble_tube(&tg, &lg, &TwistProfile::constant(0.0).unwrap());
        let a = laplacian(&tg);
        let inv = 1.0 / (lg.h1 * lg.h1);
        let mut b = SymBuilder::new(lg.slices * np);
        for i in 0..lg.slices {
            for p in 0..np {
                b.add(i * np + p, i * np + p, 2.0 * inv);
                if i > 0 {
                    b.add(i * np + p, (i - 1) * np + p, -inv);
                }
                for (q, v) in a.row(p) {
                    b.add(i * np + p, i * np + q, v);
                }
            }
        }
        let want = b.build();
        assert_eq!(want.col_idx(), op.matrix.col_idx());
        assert!(want.max_abs_diff(&op.matrix).unwrap() < 1e-12);
    }

    #[test]
    fn separation_identity() {
        let tg = offset_square_grid(0.125);
        let lg = LongitudinalGrid::new(1.0, 9, EndCondition::Dirichlet).unwrap();
        let op = assemble_tube(&tg, &lg, &TwistProfile::constant(0.0).unwrap());
        let perp = dense_eig(&laplacian(&tg)).unwrap()[0];
        let full = dense_eig(&op.matrix).unwrap()[0];
        let want = lg.mode(0).0 + perp;
        assert!((full - want).abs() < 1e-9 * want);
    }

    #[test]
    fn neumann_ground_is_transverse_ground() {
        let tg = offset_square_grid(0.125);
        let lg = LongitudinalGrid::new(1.0, 9, EndCondition::Neumann).unwrap();
        let op = assemble_tube(&tg, &lg, &TwistProfile::constant(0.0).unwrap());
        let perp = dense_eig(&laplacian(&tg)).unwrap()[0];
        let full = dense_eig(&op.matrix).unwrap()[0];
        assert!((full - perp).abs() < 1e-9 * perp);
    }

    #[test]
    fn neumann_below_dirichlet() {
        let tg = offset_square_grid(0.125);
        let prof = TwistProfile::linear(2.0).unwrap();
        let d = assemble_tube(&tg, &LongitudinalGrid::new(1.5, 11, EndCondition::Dirichlet).unwrap(), &prof);
        let n = assemble_tube(&tg, &LongitudinalGrid::new(1.5, 11, EndCondition::Neumann).unwrap(), &prof);
        let (ld, ln) = (dense_eig(&d.matrix).unwrap(), dense_eig(&n.matrix).unwrap());
        for k in 0..6 {
            assert!(ln[k] <= ld[k] + 1e-9, "k={k}: {} > {}", ln[k], ld[k]);
        }
    }

    #[test]
    fn matrix_depends_only_on_rate() {
        let tg = offset_square_grid(0.25);
        let lg = LongitudinalGrid::new(1.0, 5, EndCondition::Dirichlet).unwrap();
        let p = TwistProfile::linear(1.0).unwrap();
        let a = assemble_tube(&tg, &lg, &p);
        let b = assemble_tube(&tg, &lg, &p.clone().with_phase(0.7));
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn centered_disc_constant_twist() {
        let disc = CrossSection::disc([0.0, 0.0], 1.0).unwrap();
        let tg = build_grid(&disc, 0.125).unwrap();
        let lg = LongitudinalGrid::new(1.0, 15, EndCondition::Dirichlet).unwrap();
        let op = assemble_tube(&tg, &lg, &TwistProfile::constant(2.0).unwrap());
        let e1 = eigs_xsection(&assemble_xsection(&tg, 0.0), 1, 1e-10, 0).unwrap().eigenvalues[0];
        let lam = lobpcg(&op.matrix, 1, 1e-9, 3000, 0).unwrap().eigenvalues[0];
        let want = lg.mode(0).0 + e1;
        assert!((lam - want).abs() < 0.02 * want, "{lam} vs {want}");
    }

    #[test]
    fn trial_mode_and_rayleigh_bound() {
        let e = CrossSection::ellipse([0.0, 0.0], 1.0, 0.5).unwrap();
        let tg = build_grid(&e, 0.125).unwrap();
        let lg = LongitudinalGrid::new(1.0, 7, EndCondition::Dirichlet).unwrap();
        let v = trial_cylinder_mode(&tg, &lg, &e.summary()).unwrap();
        let centre = tg.coords().iter().position(|t| t[0] == 0.0 && t[1] == 0.0).unwrap();
        assert_eq!(v[3 * tg.len() + centre], 1.0);
        let op = assemble_tube(&tg, &lg, &TwistProfile::linear(1.0).unwrap());
        let rq = rayleigh_quotient(&op.matrix, &v).unwrap();
        let lam = dense_eig(&op.matrix).unwrap()[0];
        assert!(lam <= rq);

        let off = CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap();
        assert!(matches!(trial_cylinder_mode(&tg, &lg, &off.summary()), Err(TubeError::NoInradius)));
        assert!(matches!(rayleigh_quotient(&op.matrix, &vec![0.0; v.len()]), Err(TubeError::ZeroVector)));
    }

    #[test]
    fn warm_starts_reach_the_same_pairs() {
        let tg = offset_square_grid(0.125);
        let prof = TwistProfile::constant(1.0).unwrap();
        let xs = eigs_xsection(&assemble_xsection(&tg, 1.0), 3, 1e-10, 0).unwrap();
        let small = LongitudinalGrid::with_spacing(1.0, 0.125, EndCondition::Dirichlet).unwrap();
        let big = LongitudinalGrid::with_spacing(2.0, 0.125, EndCondition::Dirichlet).unwrap();
        let cold = eigs_tube(&tube_form(&tg, &big, &prof), &LobpcgOptions::new(3, 1e-9, 4000, 0)).unwrap();
        let guess = separable_guess(&big, &xs.eigenvectors, &xs.eigenvalues, 6);
        let warm = eigs_tube(&tube_form(&tg, &big, &prof), &LobpcgOptions::new(3, 1e-9, 4000, 0).with_initial(guess)).unwrap();
        let prev = eigs_tube(&tube_form(&tg, &small, &prof), &LobpcgOptions::new(3, 1e-9, 4000, 0)).unwrap();
        let lifted = prolong(&prev.eigenvectors, &small, &big);
        let cont = eigs_tube(&tube_form(&tg, &big, &prof), &LobpcgOptions::new(3, 1e-9, 4000, 0).with_initial(lifted)).unwrap();
        for k in 0..3 {
            assert!((cold.eigenvalues[k] - warm.eigenvalues[k]).abs() < 1e-7 * cold.eigenvalues[k]);
            assert!((cold.eigenvalues[k] - cont.eigenvalues[k]).abs() < 1e-7 * cold.eigenvalues[k]);
        }
    }
}
