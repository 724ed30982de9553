//! Theorem-level certificates: the essential-spectrum window of a tube whose
//! cross-section contains the axis, the `n²/4` exterior bound for tubes
//! whose cross-section avoids a half-plane through the axis, Dirichlet/Neumann
//! eigenvalue brackets, and the twist-induced gap above `E₁`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::eigensolve::{EigError, LobpcgOptions};
use crate::geometry::{max_free_segment, CrossSection, GeometryError, GeometrySummary, ProfileKind, RaySampling, TwistProfile};
use crate::special::j0_first_zero;
use crate::tube_operator::{eigs_tube, prolong, reference_guess, tube_form, EndCondition, LongitudinalGrid, TubeError, TubeSpectrum};
use crate::xsection::{assemble_xsection, build_grid, eigs_xsection, TransverseGrid, XSectionError};

#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("the cross-section does not contain the origin")]
    NoOrigin,
    #[error("twist rate does not exceed the threshold: {0}")]
    NotDiverging(String),
    #[error("cross-section meets the half-plane t₁ ≤ 0 (margin {margin})")]
    HalfPlaneViolated { margin: f64 },
    #[error("half-length {half_length} is below s_n = {s_n}")]
    LengthBelowThreshold { half_length: f64, s_n: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    XSection(#[from] XSectionError),
    #[error(transparent)]
    Tube(#[from] TubeError),
}

impl From<EigError> for CertifyError {
    fn from(e: EigError) -> Self {
        Self::Tube(TubeError::Eig(e))
    }
}

pub const THM1_CLAIM: &str = "spectrum contains [mu1, infinity)";
pub const EXTERIOR_CAVEAT: &str =
    "lower brackets bound the continuum spectrum only together with the exterior estimate inf spec >= n^2/4, \
     which the ray sweep supports numerically but does not prove";

#[derive(Debug, Clone, Serialize)]
pub struct Thm1Window {
    pub r: f64,
    pub j01: f64,
    pub mu1: f64,
    pub claim: &'static str,
}

pub fn thm1_window(summary: &GeometrySummary) -> Result<Thm1Window, CertifyError> {
    let r = summary.inradius.filter(|_| summary.contains_origin).ok_or(CertifyError::NoOrigin)?;
    let j01 = j0_first_zero();
    Ok(Thm1Window { r, j01, mu1: (j01 / r).powi(2), claim: THM1_CLAIM })
}

/// Smallest `s ≥ 0` with `|θ̇(x)| > n` for every `|x| > s`.
pub fn find_sn(profile: &TwistProfile, n: u32, search_cap: f64) -> Result<f64, CertifyError> {
    if n == 0 {
        return Err(CertifyError::InvalidArgument("n must be at least 1".into()));
    }
    let nf = n as f64;
    let s = match &profile.kind {
        ProfileKind::Constant { beta } => {
            return Err(CertifyError::NotDiverging(format!("constant rate {beta} never grows past every n")));
        }
        ProfileKind::LinearRate { alpha } if *alpha == 0.0 => {
            return Err(CertifyError::NotDiverging("zero linear rate".into()));
        }
        ProfileKind::LinearRate { alpha } => nf / alpha.abs(),
        ProfileKind::PowerRate { alpha, p } => (nf / alpha).powf(1.0 / p),
        ProfileKind::TabulatedRate { samples, extrapolation_slope } => {
            if *extrapolation_slope == 0.0 {
                return Err(CertifyError::NotDiverging("tabulated rate extrapolates with zero slope".into()));
            }
            tabulated_threshold(profile, samples, nf)
        }
    };
    if s > search_cap {
        return Err(CertifyError::NotDiverging(format!("|rate| exceeds {n} only beyond {s}, past the search cap {search_cap}")));
    }
    Ok(s)
}

/// Farthest `|x|` with `|θ̇(x)| ≤ n` for a piecewise-linear rate with
/// sloped extrapolation, computed piece by piece.
fn tabulated_threshold(profile: &TwistProfile, samples: &[(f64, f64)], n: f64) -> f64 {
    let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
    // Extrapolated rays are linear, so they leave the band |rate| ≤ n within
    // a bounded distance; extend the outer pieces that far.
    let slope = match &profile.kind {
        ProfileKind::TabulatedRate { extrapolation_slope, .. } => extrapolation_slope.abs(),
        _ => unreachable!(),
    };
    let reach = |x: f64| (profile.rate(x).abs() + n) / slope;
    let mut knots = vec![first - reach(first)];
    knots.extend(samples.iter().map(|s| s.0));
    knots.push(last + reach(last));
    let mut far: f64 = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ra, rb) = (profile.rate(a), profile.rate(b));
        // Sub-interval of [a, b] where −n ≤ rate ≤ n.
        let (mut lo, mut hi) = (a, b);
        for bound in [n, -n] {
            if ra == rb {
                if (bound > 0.0 && ra > bound) || (bound < 0.0 && ra < bound) {
                    hi = lo - 1.0;
                }
                continue;
            }
            let cross = a + (bound - ra) * (b - a) / (rb - ra);
            let rising = rb > ra;
            // Keep the side where the rate is on the inner side of `bound`.
            if (bound > 0.0) == rising {
                hi = hi.min(cross);
            } else {
                lo = lo.max(cross);
            }
        }
        if lo <= hi {
            far = far.max(lo.abs()).max(hi.abs());
        }
    }
    far
}

#[derive(Debug, Clone, Serialize)]
pub struct EssentialBound {
    pub n: u32,
    pub s_n: f64,
    pub bound: f64,
    pub ray_verified: bool,
    pub max_observed_segment: f64,
    /// `2π/n`.
    pub segment_limit: f64,
    pub windows: [(f64, f64); 2],
    pub sampling: RaySampling,
    /// The rate diverges, so the argument applies for every `n` and the
    /// essential spectrum is empty.
    pub essential_spectrum_empty: bool,
}

/// The exterior bound `n²/4` with its sampled ray certificate.
pub fn essential_lower_bound(
    omega: &CrossSection,
    profile: &TwistProfile,
    n: u32,
    sampling: RaySampling,
    search_cap: f64,
) -> Result<EssentialBound, CertifyError> {
    let margin = omega.summary().half_plane_margin;
    if margin <= 0.0 {
        return Err(CertifyError::HalfPlaneViolated { margin });
    }
    let s_n = find_sn(profile, n, search_cap)?;
    let nf = n as f64;
    let right = (s_n + PI / nf, s_n + 3.0 * PI / nf);
    let left = (-right.1, -right.0);
    let observed = max_free_segment(omega, profile, right, sampling)?.max(max_free_segment(omega, profile, left, sampling)?);
    let limit = 2.0 * PI / nf;
    Ok(EssentialBound {
        n,
        s_n,
        bound: nf * nf / 4.0,
        ray_verified: observed <= limit,
        max_observed_segment: observed,
        segment_limit: limit,
        windows: [left, right],
        sampling,
        essential_spectrum_empty: profile.diverges(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    pub half_length: f64,
    pub h: f64,
    pub h1: f64,
    pub transverse_nodes: usize,
    pub slices: usize,
    pub profile: TwistProfile,
    pub essential: EssentialBound,
    pub brackets: Vec<Bracket>,
    pub lower_residuals: Vec<f64>,
    pub upper_residuals: Vec<f64>,
    pub caveat: &'static str,
    #[serde(skip)]
    pub upper_vectors: DMatrix<f64>,
    #[serde(skip)]
    pub grid: Option<LongitudinalGrid>,
}

/// Inputs of [`bracket_eigenvalues`].
#[derive(Debug, Clone)]
pub struct BracketRequest {
    pub h: f64,
    pub h1: f64,
    pub half_length: f64,
    pub n: u32,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub sampling: RaySampling,
    pub search_cap: f64,
    /// Dirichlet eigenvectors from a previous report on another half-length
    /// (same `h`, `h₁`), used as a starting block.
    pub warm_start: Option<(LongitudinalGrid, DMatrix<f64>)>,
}

/// Neumann-cut (lower) and Dirichlet-cut (upper) eigenvalues on `(−L, L)`.
pub fn bracket_eigenvalues(omega: &CrossSection, profile: &TwistProfile, req: &BracketRequest) -> Result<BracketReport, CertifyError> {
    let essential = essential_lower_bound(omega, profile, req.n, req.sampling, req.search_cap)?;
    if req.half_length < essential.s_n {
        return Err(CertifyError::LengthBelowThreshold { half_length: req.half_length, s_n: essential.s_n });
    }
    let tgrid = build_grid(omega, req.h)?;
    let dgrid = LongitudinalGrid::with_spacing(req.half_length, req.h1, EndCondition::Dirichlet)?;
    let ngrid = LongitudinalGrid { ends: EndCondition::Neumann, ..dgrid };
    if req.k == 0 || req.k > dgrid.slices * tgrid.len() {
        return Err(CertifyError::InvalidArgument(format!("K = {} out of range", req.k)));
    }
    let initial = match &req.warm_start {
        Some((grid, vectors)) => prolong(vectors, grid, &dgrid),
        None => reference_guess(&tgrid, &dgrid, profile, req.k, req.tol, req.seed)?,
    };
    let upper = solve(&tgrid, &dgrid, profile, req, initial)?;
    let lower = solve(&tgrid, &ngrid, profile, req, upper.eigenvectors.clone())?;
    let brackets = (0..req.k)
        .map(|k| Bracket {
            k: k + 1,
            lower: lower.eigenvalues[k],
            upper: upper.eigenvalues[k],
            valid: upper.eigenvalues[k] < essential.bound && req.half_length >= essential.s_n,
        })
        .collect();
    Ok(BracketReport {
        half_length: req.half_length,
        h: req.h,
        h1: req.h1,
        transverse_nodes: tgrid.len(),
        slices: dgrid.slices,
        profile: profile.clone(),
        essential,
        brackets,
        lower_residuals: lower.residuals,
        upper_residuals: upper.residuals,
        caveat: EXTERIOR_CAVEAT,
        upper_vectors: upper.eigenvectors,
        grid: Some(dgrid),
    })
}

fn solve(
    tgrid: &TransverseGrid,
    lgrid: &LongitudinalGrid,
    profile: &TwistProfile,
    req: &BracketRequest,
    initial: DMatrix<f64>,
) -> Result<TubeSpectrum, CertifyError> {
    let opts = LobpcgOptions::new(req.k, req.tol, req.max_iter, req.seed).with_initial(initial);
    Ok(eigs_tube(&tube_form(tgrid, lgrid, profile), &opts)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapPoint {
    pub half_length: f64,
    pub lambda1: f64,
    pub e1: f64,
    pub gap: f64,
}

/// `λ₁(L) − E₁` over a sweep of half-lengths (Dirichlet cuts), each solve
/// warm-started from the previous one.
#[allow(clippy::too_many_arguments)]
pub fn poincare_gap_probe(
    omega: &CrossSection,
    profile: &TwistProfile,
    half_lengths: &[f64],
    h: f64,
    h1: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Vec<GapPoint>, CertifyError> {
    let tgrid = build_grid(omega, h)?;
    let e1 = eigs_xsection(&assemble_xsection(&tgrid, 0.0), 1, tol, seed)?.eigenvalues[0];
    let mut prev: Option<(LongitudinalGrid, DMatrix<f64>)> = None;
    let mut out = Vec::with_capacity(half_lengths.len());
    for &l in half_lengths {
        let lgrid = LongitudinalGrid::with_spacing(l, h1, EndCondition::Dirichlet)?;
        let initial = match &prev {
            Some((g, v)) => prolong(v, g, &lgrid),
            None => reference_guess(&tgrid, &lgrid, profile, 1, tol, seed)?,
        };
        let opts = LobpcgOptions::new(1, tol, max_iter, seed).with_initial(initial);
        let spec = eigs_tube(&tube_form(&tgrid, &lgrid, profile), &opts)?;
        let lambda1 = spec.eigenvalues[0];
        out.push(GapPoint { half_length: l, lambda1, e1, gap: lambda1 - e1 });
        prev = Some((lgrid, spec.eigenvectors));
    }
    Ok(out)
}
