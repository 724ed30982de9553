use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use twistspec_core::certify::{essential_lower_bound, thm1_window, CertifyError};
use twistspec_core::eigensolve::{dense_eig, lobpcg, SymBuilder};
use twistspec_core::geometry::{
    contains, free_segment, jacobian_det, map_point, rotate, CrossSection, RayParams, RaySampling, TwistProfile,
};
use twistspec_core::tube_operator::{tube_form, EndCondition, LongitudinalGrid};
use twistspec_core::xsection::{assemble_xsection, build_grid};

/// Star-shaped polygon around `center`: sorted angles, radii in [0.4, 1].
fn star_polygon() -> impl Strategy<Value = CrossSection> {
    (prop::collection::vec((0.0..1.0f64, 0.4..1.0f64), 3..9), -1.5..1.5f64, -1.5..1.5f64).prop_filter_map(
        "degenerate polygon",
        |(mut spokes, cx, cy)| {
            spokes.sort_by(|a, b| a.0.total_cmp(&b.0));
            let vertices: Vec<[f64; 2]> = spokes
                .iter()
                .enumerate()
                .map(|(i, (u, r))| {
                    // One spoke per angular sector keeps the angles distinct.
                    let phi = TAU * (i as f64 + 0.9 * u) / spokes.len() as f64;
                    [cx + r * phi.cos(), cy + r * phi.sin()]
                })
                .collect();
            CrossSection::polygon(vertices).ok()
        },
    )
}

fn profile() -> impl Strategy<Value = TwistProfile> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(|b| TwistProfile::constant(b).unwrap()),
        (-2.0..2.0f64).prop_map(|a| TwistProfile::linear(a).unwrap()),
        (0.2..2.0f64, 0.5..3.0f64).prop_map(|(a, p)| TwistProfile::power(a, p).unwrap()),
        (-2.0..2.0f64, -2.0..2.0f64, 0.1..2.0f64).prop_map(|(r0, r1, s)| {
            TwistProfile::tabulated(vec![(-1.0, r0), (0.5, r1), (2.0, r0 + r1)], s).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twist_raises_cross_section_ground(omega in star_polygon(), b1 in 0.0..2.0f64, extra in 0.0..2.0f64) {
        let Ok(grid) = build_grid(&omega, 0.125) else { return Ok(()) };
        let b2 = b1 + extra;
        let l1 = dense_eig(&assemble_xsection(&grid, b1).matrix).unwrap()[0];
        let l2 = dense_eig(&assemble_xsection(&grid, -b2).matrix).unwrap()[0];
        prop_assert!(l2 >= l1 - 1e-9 * l1, "{l1} > {l2}");
    }

    #[test]
    fn lobpcg_commutes_with_shift(seed in 0u64..1000, n in 20usize..80) {
        let mut b = SymBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 3.0 + (i as f64 * 0.37 + seed as f64).sin());
            if i > 0 {
                b.add(i, i - 1, -1.0 + 0.5 * (seed as f64 + i as f64).cos());
            }
        }
        let a = b.build();
        let base = lobpcg(&a, 3, 1e-10, 5000, seed).unwrap();
        let shifted = lobpcg(&a.shifted(10.0), 3, 1e-10, 5000, seed).unwrap();
        for (x, y) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
            prop_assert!((y - x - 10.0).abs() <= 1e-8 * (1.0 + y.abs()), "{x} + 10 vs {y}");
        }
    }

    #[test]
    fn mapped_interior_points_are_inside(omega in star_polygon(), p in profile(), x1 in -5.0..5.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (lo, hi) = omega.bounding_box();
        let t = [lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1])];
        prop_assume!(omega.contains(t) && omega.boundary_distance(t) > 1e-12);
        let x = map_point(&p, [x1, t[0], t[1]]);
        prop_assert!(contains(&omega, &p, x));
    }

    #[test]
    fn free_segment_ignores_phase(alpha in 0.5..2.0f64, phase in -PI..PI, x1 in -3.0..3.0f64, u in 0.05..0.95f64, v in 0.05..0.95f64) {
        let omega = CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap();
        let p = TwistProfile::linear(alpha).unwrap();
        let t = [0.5 + u, -0.5 + v];
        let y = rotate(t, -p.angle(x1));
        let params = RayParams { tol: 1e-10, horizon: 100.0 };
        let base = free_segment(&omega, &p, y, x1, params).unwrap();
        let shifted_profile = p.clone().with_phase(phase);
        let shifted = free_segment(&omega, &shifted_profile, rotate(y, -phase), x1, params).unwrap();
        prop_assert!((base.length() - shifted.length()).abs() <= 1e-8, "{:?} vs {:?}", base, shifted);
    }

    #[test]
    fn tube_map_preserves_volume(p in profile(), x1 in -3.0..3.0f64, t2 in -1.0..1.0f64, t3 in -1.0..1.0f64) {
        let det = jacobian_det(&p, [x1, t2, t3], 1e-4).unwrap();
        prop_assert!((det - 1.0).abs() <= 1e-6, "{det}");
    }

    #[test]
    fn neumann_cuts_bracket_from_below(alpha in -2.0..2.0f64, slices in 3usize..9) {
        let omega = CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap();
        let tgrid = build_grid(&omega, 0.25).unwrap();
        let p = TwistProfile::linear(alpha).unwrap();
        let eig = |ends| {
            let lgrid = LongitudinalGrid::new(1.0, slices, ends).unwrap();
            dense_eig(&tube_form(&tgrid, &lgrid, &p).assemble()).unwrap()
        };
        let (d, n) = (eig(EndCondition::Dirichlet), eig(EndCondition::Neumann));
        for (lower, upper) in n.iter().zip(&d) {
            prop_assert!(lower <= &(upper + 1e-10 * upper.abs()), "{lower} > {upper}");
        }
    }

    #[test]
    fn theorem_hypotheses_exclude_each_other(omega in star_polygon(), alpha in 0.5..2.0f64) {
        let p = TwistProfile::linear(alpha).unwrap();
        if thm1_window(&omega.summary()).is_ok() {
            let r = essential_lower_bound(&omega, &p, 2, RaySampling::default(), 1e6);
            prop_assert!(matches!(r, Err(CertifyError::HalfPlaneViolated { .. })), "{r:?}");
        }
        if omega.summary().half_plane_margin > 0.0 {
            prop_assert!(matches!(thm1_window(&omega.summary()), Err(CertifyError::NoOrigin)));
        }
    }
}
