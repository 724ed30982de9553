//! Cross-sections, twist profiles, and the tube map
//! `𝓛(x) = (x₁, x₂cosθ(x₁) + x₃sinθ(x₁), −x₂sinθ(x₁) + x₃cosθ(x₁))`.
//!
//! In the counter-clockwise convention the map rotates each slice by `−θ`;
//! [`contains`] undoes it with `R(+θ)`.

mod cross_section;
mod profile;

pub use cross_section::{CrossSection, GeometrySummary};
pub use profile::{adaptive_simpson, ProfileKind, TwistProfile, ANGLE_QUADRATURE_TOL};

use serde::Serialize;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid cross-section: {0}")]
    InvalidShape(String),
    #[error("invalid twist profile: {0}")]
    InvalidProfile(String),
    #[error("point ({x1}, {y0}, {y1}) is not inside the tube")]
    NotInside { x1: f64, y0: f64, y1: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Counter-clockwise rotation of `t` by `phi`.
pub fn rotate(t: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * t[0] - s * t[1], s * t[0] + c * t[1]]
}

pub fn map_point(profile: &TwistProfile, x: [f64; 3]) -> [f64; 3] {
    let (s, c) = profile.angle(x[0]).sin_cos();
    [x[0], x[1] * c + x[2] * s, -x[1] * s + x[2] * c]
}

pub fn contains(omega: &CrossSection, profile: &TwistProfile, p: [f64; 3]) -> bool {
    omega.contains(rotate([p[1], p[2]], profile.angle(p[0])))
}

/// Ray-scan controls shared by the free-segment queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayParams {
    /// Absolute bisection tolerance on segment endpoints.
    pub tol: f64,
    /// Scan distance after which a direction is declared unbounded.
    pub horizon: f64,
}

impl Default for RayParams {
    fn default() -> Self {
        Self { tol: 1e-9, horizon: 1e4 }
    }
}

/// Longitudinal in-tube interval through a point; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeSegment {
    pub start: f64,
    pub end: f64,
}

impl FreeSegment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_bounded(&self) -> bool {
        self.start.is_finite() && self.end.is_finite()
    }
}

/// Maximal interval `I ∋ x₁` with `R(θ(s))·y ∈ ω` for all `s ∈ I`.
pub fn free_segment(
    omega: &CrossSection,
    profile: &TwistProfile,
    y: [f64; 2],
    x1: f64,
    params: RayParams,
) -> Result<FreeSegment, GeometryError> {
    if !(params.tol > 0.0 && params.horizon > 0.0) {
        return Err(GeometryError::InvalidArgument("ray tolerance and horizon must be positive".into()));
    }
    if !contains(omega, profile, [x1, y[0], y[1]]) {
        return Err(GeometryError::NotInside { x1, y0: y[0], y1: y[1] });
    }
    // The whole orbit of y under rotations stays inside: the ray never exits.
    let norm = y[0].hypot(y[1]);
    let summary = omega.summary();
    if profile.is_untwisted() || summary.inradius.is_some_and(|r| norm < r) {
        return Ok(FreeSegment { start: f64::NEG_INFINITY, end: f64::INFINITY });
    }
    Ok(FreeSegment {
        start: scan_exit(omega, profile, y, x1, -1.0, params),
        end: scan_exit(omega, profile, y, x1, 1.0, params),
    })
}

fn scan_exit(omega: &CrossSection, profile: &TwistProfile, y: [f64; 2], x1: f64, dir: f64, params: RayParams) -> f64 {
    let inside = |s: f64| omega.contains(rotate(y, profile.angle(s)));
    let theta0 = profile.angle(x1);
    let (mut lo_angle, mut hi_angle) = (theta0, theta0);
    let mut s = x1;
    loop {
        let probe = s + dir * 0.1;
        let bound = profile.rate_bound(s, probe);
        let step = if bound > 0.0 { 0.1f64.min(PI / (10.0 * bound)) } else { 0.1 };
        let next = s + dir * step;
        if !inside(next) {
            let (mut a, mut b) = (s, next);
            while (b - a).abs() > params.tol {
                let m = 0.5 * (a + b);
                if inside(m) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        s = next;
        let theta = profile.angle(s);
        lo_angle = lo_angle.min(theta);
        hi_angle = hi_angle.max(theta);
        if hi_angle - lo_angle >= TAU || (s - x1).abs() >= params.horizon {
            return dir * f64::INFINITY;
        }
    }
}

/// Interior sample points of `ω` on the lattice of the given spacing,
/// anchored half a cell inside the bounding box.
pub fn slice_samples(omega: &CrossSection, spacing: f64) -> Vec<[f64; 2]> {
    let (lo, hi) = omega.bounding_box();
    let nx = ((hi[0] - lo[0]) / spacing).floor().max(1.0) as usize;
    let ny = ((hi[1] - lo[1]) / spacing).floor().max(1.0) as usize;
    let ox = lo[0] + 0.5 * (hi[0] - lo[0] - (nx - 1) as f64 * spacing);
    let oy = lo[1] + 0.5 * (hi[1] - lo[1] - (ny - 1) as f64 * spacing);
    let mut pts = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let t = [ox + i as f64 * spacing, oy + j as f64 * spacing];
            if omega.contains(t) {
                pts.push(t);
            }
        }
    }
    pts
}

/// Slice samples paired with their ambient transverse positions at `x1`.
/// Samples pushed out of `ω` by rounding in the rotation round trip are
/// dropped.
fn ambient_samples<'a>(
    omega: &'a CrossSection,
    profile: &'a TwistProfile,
    pts: &'a [[f64; 2]],
    x1: f64,
) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + 'a {
    let phi = profile.angle(x1);
    pts.iter().map(move |&t| (t, rotate(t, -phi))).filter(move |(_, y)| contains(omega, profile, [x1, y[0], y[1]]))
}

/// Sampling layout for [`max_free_segment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaySampling {
    /// Lattice spacing of the transverse sample points.
    pub transverse_spacing: f64,
    /// Number of evenly spaced longitudinal stations (endpoints included).
    pub stations: usize,
    #[serde(flatten)]
    pub ray: RayParams,
}

impl Default for RaySampling {
    fn default() -> Self {
        Self { transverse_spacing: 0.05, stations: 9, ray: RayParams::default() }
    }
}

/// Largest free-segment length over rays through a deterministic sample of
/// slice points in `window`. Sampled, hence a lower estimate of the true
/// supremum.
pub fn max_free_segment(
    omega: &CrossSection,
    profile: &TwistProfile,
    window: (f64, f64),
    sampling: RaySampling,
) -> Result<f64, GeometryError> {
    let (a, b) = window;
    if !(b > a) {
        return Err(GeometryError::InvalidArgument(format!("empty window ({a}, {b})")));
    }
    if !(sampling.transverse_spacing > 0.0) || sampling.stations == 0 {
        return Err(GeometryError::InvalidArgument("ray sampling needs positive spacing and stations".into()));
    }
    let pts = slice_samples(omega, sampling.transverse_spacing);
    let mut best: f64 = 0.0;
    for k in 0..sampling.stations {
        let x1 = if sampling.stations == 1 { 0.5 * (a + b) } else { a + (b - a) * k as f64 / (sampling.stations - 1) as f64 };
        for (_, y) in ambient_samples(omega, profile, &pts, x1) {
            let seg = free_segment(omega, profile, y, x1, sampling.ray)?;
            best = best.max(seg.length());
            if best.is_infinite() {
                return Ok(best);
            }
        }
    }
    Ok(best)
}

/// For each station, an upper bound on `sup dist(x, ∂Ω)` over the slice:
/// each sampled point is charged the smaller of its in-slice boundary
/// distance and its distance to the nearer endpoint of its free segment,
/// both distances to genuine boundary points.
pub fn quasibounded_probe(
    omega: &CrossSection,
    profile: &TwistProfile,
    stations: &[f64],
    transverse_spacing: f64,
    params: RayParams,
) -> Result<Vec<f64>, GeometryError> {
    if !(transverse_spacing > 0.0) {
        return Err(GeometryError::InvalidArgument("transverse spacing must be positive".into()));
    }
    let pts = slice_samples(omega, transverse_spacing);
    stations
        .iter()
        .map(|&x1| {
            let mut best: f64 = 0.0;
            for (t, y) in ambient_samples(omega, profile, &pts, x1) {
                let seg = free_segment(omega, profile, y, x1, params)?;
                let along = (x1 - seg.start).min(seg.end - x1);
                best = best.max(omega.boundary_distance(t).min(along));
            }
            Ok(best)
        })
        .collect()
}

/// Central finite-difference Jacobian determinant of [`map_point`] at `x`.
pub fn jacobian_det(profile: &TwistProfile, x: [f64; 3], h: f64) -> Result<f64, GeometryError> {
    if !(h > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut j = [[0.0; 3]; 3];
    for col in 0..3 {
        let (mut xp, mut xm) = (x, x);
        xp[col] += h;
        xm[col] -= h;
        let (fp, fm) = (map_point(profile, xp), map_point(profile, xm));
        for row in 0..3 {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]))
}
