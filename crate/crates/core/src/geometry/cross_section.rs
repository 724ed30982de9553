use serde::Serialize;

use super::GeometryError;

/// Bounded planar cross-section `ω`.
///
/// Membership is for the open set (boundary points are outside) and all
/// distance queries are closed-form or bisection-exact, never sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrossSection {
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Rectangle { min: [f64; 2], max: [f64; 2] },
    /// Counter-clockwise simple polygon.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Origin-relative extents of a cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometrySummary {
    pub contains_origin: bool,
    /// `dist(0, ∂ω)` when `0 ∈ ω`.
    pub inradius: Option<f64>,
    /// `sup_{t∈ω} |t|`.
    pub circumradius: f64,
    /// `inf { t₁ : t ∈ closure(ω) }`.
    pub half_plane_margin: f64,
}

impl CrossSection {
    pub fn ellipse(center: [f64; 2], a: f64, b: f64) -> Result<Self, GeometryError> {
        if !(a > 0.0 && b > 0.0) || !finite2(center) || !a.is_finite() || !b.is_finite() {
            return Err(GeometryError::InvalidShape(format!("ellipse semi-axes must be positive, got ({a}, {b})")));
        }
        Ok(Self::Ellipse { center, semi_axes: [a, b] })
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Result<Self, GeometryError> {
        Self::ellipse(center, radius, radius)
    }

    pub fn rectangle(min: [f64; 2], max: [f64; 2]) -> Result<Self, GeometryError> {
        if !finite2(min) || !finite2(max) || !(max[0] > min[0] && max[1] > min[1]) {
            return Err(GeometryError::InvalidShape(format!(
                "rectangle max corner {max:?} must strictly dominate min corner {min:?}"
            )));
        }
        Ok(Self::Rectangle { min, max })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 || vertices.iter().any(|v| !finite2(*v)) {
            return Err(GeometryError::InvalidShape("polygon needs at least three finite vertices".into()));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(GeometryError::InvalidShape(
                "polygon vertices must be counter-clockwise (positive signed area)".into(),
            ));
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a == b {
                return Err(GeometryError::InvalidShape(format!("polygon edge {i} is degenerate")));
            }
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    if collinear_overlap(shared, p, q) {
                        return Err(GeometryError::InvalidShape(format!("polygon edges {i} and {j} fold back")));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::InvalidShape(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        Ok(Self::Polygon { vertices })
    }

    /// `[min, max]` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Self::Ellipse { center, semi_axes } => (
                [center[0] - semi_axes[0], center[1] - semi_axes[1]],
                [center[0] + semi_axes[0], center[1] + semi_axes[1]],
            ),
            Self::Rectangle { min, max } => (*min, *max),
            Self::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Open-set membership.
    pub fn contains(&self, t: [f64; 2]) -> bool {
        match self {
            Self::Ellipse { center, semi_axes } => {
                let u = (t[0] - center[0]) / semi_axes[0];
                let v = (t[1] - center[1]) / semi_axes[1];
                u * u + v * v < 1.0
            }
            Self::Rectangle { min, max } => t[0] > min[0] && t[0] < max[0] && t[1] > min[1] && t[1] < max[1],
            Self::Polygon { vertices } => {
                if polygon_boundary_distance(vertices, t) == 0.0 {
                    return false;
                }
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a[1] > t[1]) != (b[1] > t[1]) {
                        let x = a[0] + (t[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if t[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Euclidean distance from `t` to `∂ω` (for points on either side).
    pub fn boundary_distance(&self, t: [f64; 2]) -> f64 {
        match self {
            Self::Ellipse { center, semi_axes } => {
                ellipse_boundary_distance(semi_axes[0], semi_axes[1], t[0] - center[0], t[1] - center[1])
            }
            Self::Rectangle { min, max } => {
                let corners = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                polygon_boundary_distance(&corners, t)
            }
            Self::Polygon { vertices } => polygon_boundary_distance(vertices, t),
        }
    }

    /// Point on `∂ω` at parameter `s ∈ [0, 1)`: angle for ellipses,
    /// normalized arc length (counter-clockwise from the first vertex)
    /// otherwise.
    pub fn boundary_point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(1.0);
        match self {
            Self::Ellipse { center, semi_axes } => {
                let phi = std::f64::consts::TAU * s;
                [center[0] + semi_axes[0] * phi.cos(), center[1] + semi_axes[1] * phi.sin()]
            }
            Self::Rectangle { min, max } => {
                let corners = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                point_on_loop(&corners, s)
            }
            Self::Polygon { vertices } => point_on_loop(vertices, s),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Self::Ellipse { semi_axes, .. } => std::f64::consts::PI * semi_axes[0] * semi_axes[1],
            Self::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Self::Polygon { vertices } => signed_area(vertices),
        }
    }

    pub fn summary(&self) -> GeometrySummary {
        let contains_origin = self.contains([0.0, 0.0]);
        let inradius = contains_origin.then(|| self.boundary_distance([0.0, 0.0]));
        let (circumradius, half_plane_margin) = match self {
            Self::Ellipse { center, semi_axes } => {
                (ellipse_max_norm(*center, *semi_axes), center[0] - semi_axes[0])
            }
            Self::Rectangle { min, max } => {
                let r = [*min, [max[0], min[1]], *max, [min[0], max[1]]]
                    .iter()
                    .map(|c| c[0].hypot(c[1]))
                    .fold(0.0, f64::max);
                (r, min[0])
            }
            Self::Polygon { vertices } => (
                vertices.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max),
                vertices.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min),
            ),
        };
        GeometrySummary { contains_origin, inradius, circumradius, half_plane_margin }
    }
}

fn finite2(p: [f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    })
    .sum::<f64>()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Edges `shared→p` and `shared→q` are collinear and point the same way.
fn collinear_overlap(shared: [f64; 2], p: [f64; 2], q: [f64; 2]) -> bool {
    let u = [p[0] - shared[0], p[1] - shared[1]];
    let v = [q[0] - shared[0], q[1] - shared[1]];
    cross(shared, p, q) == 0.0 && u[0] * v[0] + u[1] * v[1] > 0.0
}

fn point_segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    (ap[0] - s * ab[0]).hypot(ap[1] - s * ab[1])
}

fn polygon_boundary_distance(v: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| point_segment_distance(v[i], v[(i + 1) % n], p)).fold(f64::INFINITY, f64::min)
}

fn point_on_loop(v: &[[f64; 2]], s: f64) -> [f64; 2] {
    let n = v.len();
    let lens: Vec<f64> = (0..n).map(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    })
    .collect();
    let mut target = s * lens.iter().sum::<f64>();
    for i in 0..n {
        if target <= lens[i] || i == n - 1 {
            let f = (target / lens[i]).min(1.0);
            let (a, b) = (v[i], v[(i + 1) % n]);
            return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
        }
        target -= lens[i];
    }
    unreachable!()
}

/// Distance from `(y0, y1)` (relative to the center) to the ellipse with
/// semi-axes `a` (along t₁) and `b`. Bisection on the Lagrange-multiplier
/// equation of the closest point, run to machine precision.
fn ellipse_boundary_distance(a: f64, b: f64, y0: f64, y1: f64) -> f64 {
    // Reduce to the first quadrant with e0 >= e1.
    let (e0, e1, z0, z1) = if a >= b { (a, b, y0.abs(), y1.abs()) } else { (b, a, y1.abs(), y0.abs()) };
    if z1 > 0.0 {
        if z0 > 0.0 {
            let u0 = z0 / e0;
            let u1 = z1 / e1;
            let g = u0 * u0 + u1 * u1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let s = ellipse_root(r0, u0, u1, g);
            let x0 = r0 * z0 / (s + r0);
            let x1 = z1 / (s + 1.0);
            (x0 - z0).hypot(x1 - z1)
        } else {
            (z1 - e1).abs()
        }
    } else {
        let numer = e0 * z0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde0 = numer / denom;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - z0).hypot(x1)
        } else {
            (z0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// `max_φ |c + (a cos φ, b sin φ)|`: dense scan followed by golden-section
/// refinement of the best bracket.
fn ellipse_max_norm(c: [f64; 2], ab: [f64; 2]) -> f64 {
    let f = |phi: f64| {
        let x = c[0] + ab[0] * phi.cos();
        let y = c[1] + ab[1] * phi.sin();
        x.hypot(y)
    };
    let samples = 4096;
    let step = std::f64::consts::TAU / samples as f64;
    let best = (0..samples).max_by(|&i, &j| f(i as f64 * step).total_cmp(&f(j as f64 * step))).unwrap();
    let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    f(0.5 * (lo + hi)).max(f(best as f64 * step))
}
