use serde::Serialize;

use super::GeometryError;

/// Absolute tolerance for the adaptive quadrature of tabulated rates.
pub const ANGLE_QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileKind {
    Constant { beta: f64 },
    /// `θ̇(x) = αx`
    LinearRate { alpha: f64 },
    /// `θ̇(x) = α·sign(x)·|x|^p`
    PowerRate { alpha: f64, p: f64 },
    /// Piecewise-linear rate through `samples`, extended past both ends with
    /// slope `extrapolation_slope`.
    TabulatedRate { samples: Vec<(f64, f64)>, extrapolation_slope: f64 },
}

/// Twist angle `θ` and rate `θ̇` along the longitudinal axis, with
/// `θ(x) = phase + ∫₀ˣ θ̇`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistProfile {
    pub kind: ProfileKind,
    pub phase: f64,
    #[serde(skip)]
    knot_angles: Vec<f64>,
}

impl TwistProfile {
    pub fn constant(beta: f64) -> Result<Self, GeometryError> {
        check_finite("beta", beta)?;
        Ok(Self::from_kind(ProfileKind::Constant { beta }))
    }

    pub fn linear(alpha: f64) -> Result<Self, GeometryError> {
        check_finite("alpha", alpha)?;
        Ok(Self::from_kind(ProfileKind::LinearRate { alpha }))
    }

    pub fn power(alpha: f64, p: f64) -> Result<Self, GeometryError> {
        if !(alpha > 0.0 && p > 0.0 && alpha.is_finite() && p.is_finite()) {
            return Err(GeometryError::InvalidProfile(format!("power rate needs alpha > 0 and p > 0, got ({alpha}, {p})")));
        }
        Ok(Self::from_kind(ProfileKind::PowerRate { alpha, p }))
    }

    pub fn tabulated(samples: Vec<(f64, f64)>, extrapolation_slope: f64) -> Result<Self, GeometryError> {
        if samples.len() < 2 {
            return Err(GeometryError::InvalidProfile("tabulated rate needs at least two samples".into()));
        }
        check_finite("extrapolation slope", extrapolation_slope)?;
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(GeometryError::InvalidProfile(format!(
                    "tabulated abscissae must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples.iter().any(|(x, r)| !x.is_finite() || !r.is_finite()) {
            return Err(GeometryError::InvalidProfile("tabulated samples must be finite".into()));
        }
        let mut profile = Self::from_kind(ProfileKind::TabulatedRate { samples, extrapolation_slope });
        profile.knot_angles = profile.tabulated_knot_angles();
        Ok(profile)
    }

    /// Parses a rate table: one `x rate` pair per line, `#` comments, and an
    /// `extrapolate = slope` line (slope 0 when absent).
    pub fn parse_table(text: &str) -> Result<Self, GeometryError> {
        let mut samples = Vec::new();
        let mut slope = 0.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| GeometryError::InvalidProfile(format!("rate table line {}: {what}: `{raw}`", lineno + 1));
            if let Some((key, value)) = line.split_once('=') {
                if key.trim() != "extrapolate" {
                    return Err(bad("unknown directive"));
                }
                slope = value.trim().parse().map_err(|_| bad("bad slope"))?;
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if fields.len() != 2 {
                return Err(bad("expected `x rate`"));
            }
            let x = fields[0].parse().map_err(|_| bad("bad abscissa"))?;
            let r = fields[1].parse().map_err(|_| bad("bad rate"))?;
            samples.push((x, r));
        }
        Self::tabulated(samples, slope)
    }

    fn from_kind(kind: ProfileKind) -> Self {
        Self { kind, phase: 0.0, knot_angles: Vec::new() }
    }

    /// Same rate, angle shifted by a global constant.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn rate(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { beta } => *beta,
            ProfileKind::LinearRate { alpha } => alpha * x,
            ProfileKind::PowerRate { alpha, p } => alpha * x.signum() * x.abs().powf(*p),
            ProfileKind::TabulatedRate { samples, extrapolation_slope } => {
                let (first, last) = (samples[0], samples[samples.len() - 1]);
                if x <= first.0 {
                    first.1 + extrapolation_slope * (x - first.0)
                } else if x >= last.0 {
                    last.1 + extrapolation_slope * (x - last.0)
                } else {
                    let j = samples.partition_point(|s| s.0 <= x) - 1;
                    let (a, b) = (samples[j], samples[j + 1]);
                    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
                }
            }
        }
    }

    pub fn angle(&self, x: f64) -> f64 {
        let base = match &self.kind {
            ProfileKind::Constant { beta } => beta * x,
            ProfileKind::LinearRate { alpha } => 0.5 * alpha * x * x,
            ProfileKind::PowerRate { alpha, p } => alpha * x.abs().powf(p + 1.0) / (p + 1.0),
            ProfileKind::TabulatedRate { samples, .. } => {
                // Cumulative angle at the nearest breakpoint at or below x (or
                // the first knot), then quadrature over the remainder.
                let j = samples.partition_point(|s| s.0 <= x).saturating_sub(1);
                let (x0, a0) = (samples[j].0, self.knot_angles[j]);
                a0 + adaptive_simpson(&|t| self.rate(t), x0, x, ANGLE_QUADRATURE_TOL)
            }
        };
        base + self.phase
    }

    /// True exactly when `|θ̇(x)| → ∞` as `|x| → ∞`.
    pub fn diverges(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant { .. } => false,
            ProfileKind::LinearRate { alpha } => *alpha != 0.0,
            ProfileKind::PowerRate { .. } => true,
            ProfileKind::TabulatedRate { extrapolation_slope, .. } => *extrapolation_slope != 0.0,
        }
    }

    /// `θ̇ ≡ 0`.
    pub fn is_untwisted(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant { beta } => *beta == 0.0,
            ProfileKind::LinearRate { alpha } => *alpha == 0.0,
            ProfileKind::PowerRate { .. } => false,
            ProfileKind::TabulatedRate { samples, extrapolation_slope } => {
                *extrapolation_slope == 0.0 && samples.iter().all(|s| s.1 == 0.0)
            }
        }
    }

    /// `sup |θ̇|` over `[a, b]` (order-insensitive).
    pub fn rate_bound(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let ends = self.rate(lo).abs().max(self.rate(hi).abs());
        match &self.kind {
            ProfileKind::Constant { beta } => beta.abs(),
            // Monotone in |x| on each side of the origin.
            ProfileKind::LinearRate { .. } | ProfileKind::PowerRate { .. } => ends,
            ProfileKind::TabulatedRate { samples, .. } => samples
                .iter()
                .filter(|s| s.0 > lo && s.0 < hi)
                .map(|s| s.1.abs())
                .fold(ends, f64::max),
        }
    }

    /// `inf |θ̇|` over `[a, b]` (order-insensitive).
    pub fn rate_floor(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let ends = self.rate(lo).abs().min(self.rate(hi).abs());
        match &self.kind {
            ProfileKind::Constant { beta } => beta.abs(),
            ProfileKind::LinearRate { .. } | ProfileKind::PowerRate { .. } => {
                if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    ends
                }
            }
            ProfileKind::TabulatedRate { samples, .. } => {
                let mut floor = samples.iter().filter(|s| s.0 > lo && s.0 < hi).map(|s| s.1.abs()).fold(ends, f64::min);
                // A sign change between consecutive breakpoints crosses zero.
                let mut pts: Vec<f64> = vec![lo];
                pts.extend(samples.iter().map(|s| s.0).filter(|&x| x > lo && x < hi));
                pts.push(hi);
                if pts.windows(2).any(|w| self.rate(w[0]) * self.rate(w[1]) < 0.0) {
                    floor = 0.0;
                }
                floor
            }
        }
    }

    fn tabulated_knot_angles(&self) -> Vec<f64> {
        let ProfileKind::TabulatedRate { samples, .. } = &self.kind else {
            return Vec::new();
        };
        let rate = |t: f64| self.rate(t);
        // Anchor at the knot nearest the origin from below (or the first).
        let anchor = samples.partition_point(|s| s.0 <= 0.0).saturating_sub(1);
        let mut angles = vec![0.0; samples.len()];
        angles[anchor] = adaptive_simpson(&rate, 0.0, samples[anchor].0, ANGLE_QUADRATURE_TOL);
        for j in anchor + 1..samples.len() {
            angles[j] = angles[j - 1] + adaptive_simpson(&rate, samples[j - 1].0, samples[j].0, ANGLE_QUADRATURE_TOL);
        }
        for j in (0..anchor).rev() {
            angles[j] = angles[j + 1] - adaptive_simpson(&rate, samples[j].0, samples[j + 1].0, ANGLE_QUADRATURE_TOL);
        }
        angles
    }
}

fn check_finite(name: &str, v: f64) -> Result<(), GeometryError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidProfile(format!("{name} must be finite, got {v}")))
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` (signed when `b < a`).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
