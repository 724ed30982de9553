//! Acceptance criteria 1–10, one PASS/FAIL line each. Run with
//! `cargo test -p twistspec-cli --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use twistspec_core::certify::{bracket_eigenvalues, essential_lower_bound, thm1_window, BracketReport, BracketRequest, CertifyError};
use twistspec_core::eigensolve::LobpcgOptions;
use twistspec_core::geometry::{jacobian_det, quasibounded_probe, CrossSection, RayParams, RaySampling, TwistProfile};
use twistspec_core::oracle::{bundled_cases, check_case, OracleSettings, OracleStatus, ORACLE_TOL};
use twistspec_core::special::j0_first_zero;
use twistspec_core::tube_operator::{
    eigs_tube, prolong, rayleigh_quotient, reference_guess, trial_cylinder_mode, tube_form, EndCondition, LongitudinalGrid,
    TubeSpectrum,
};
use twistspec_core::xsection::{assemble_xsection, build_grid, eigs_xsection, extrapolated_ground, TransverseGrid};

const SEED: u64 = 0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn offset_square() -> CrossSection {
    CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Dirichlet tube solve, starting from `warm` (prolonged) or a separable guess.
fn tube_solve(
    tgrid: &TransverseGrid,
    half_length: f64,
    h1: f64,
    profile: &TwistProfile,
    k: usize,
    tol: f64,
    warm: Option<&TubeSpectrum>,
    grid_of_warm: Option<&LongitudinalGrid>,
) -> (LongitudinalGrid, TubeSpectrum) {
    let lgrid = LongitudinalGrid::with_spacing(half_length, h1, EndCondition::Dirichlet).unwrap();
    let initial = match (warm, grid_of_warm) {
        (Some(s), Some(g)) => prolong(&s.eigenvectors, g, &lgrid),
        _ => reference_guess(tgrid, &lgrid, profile, k, tol, SEED).unwrap(),
    };
    let opts = LobpcgOptions::new(k, tol, 20_000, SEED).with_initial(initial);
    let spec = eigs_tube(&tube_form(tgrid, &lgrid, profile), &opts).unwrap();
    (lgrid, spec)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let square = CrossSection::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
    let exact = 2.0 * PI * PI;
    let (_, fine, extrap) = extrapolated_ground(&square, 0.0, 1.0 / 32.0, 1e-10, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (e_fine, e_ex) = (rel(fine, exact), rel(extrap, exact));
    verdict(
        e_fine <= 0.015 && e_ex <= 0.003 && secs < 30.0,
        format!("lambda1(h=1/64) = {fine:.6} (err {:.3}%), Richardson = {extrap:.6} (err {:.4}%), {secs:.1} s", 100.0 * e_fine, 100.0 * e_ex),
    )
}

fn criterion_2() -> Verdict {
    let disc = CrossSection::disc([0.0, 0.0], 1.0).unwrap();
    let grid = build_grid(&disc, 1.0 / 128.0).unwrap();
    let l: Vec<f64> =
        [0.0, 1.0, 3.0].iter().map(|&b| eigs_xsection(&assemble_xsection(&grid, b), 1, 1e-8, SEED).unwrap().eigenvalues[0]).collect();
    let j = j0_first_zero();
    let e1_err = rel(l[0], j * j);
    let spread = l.iter().map(|v| rel(*v, l[0])).fold(0.0, f64::max);
    verdict(
        spread <= 0.02 && e1_err <= 0.01,
        format!(
            "lambda1(beta=0,1,3) = {:.6}, {:.6}, {:.6} (max deviation {:.3}%), E1 vs j01^2 = {:.6}: {:.3}%",
            l[0],
            l[1],
            l[2],
            100.0 * spread,
            j * j,
            100.0 * e1_err
        ),
    )
}

fn criterion_3() -> Verdict {
    let tol = 1e-8;
    let grid = build_grid(&offset_square(), 1.0 / 64.0).unwrap();
    let e1 = eigs_xsection(&assemble_xsection(&grid, 0.0), 1, tol, SEED).unwrap().eigenvalues[0];
    let l1 = eigs_xsection(&assemble_xsection(&grid, 1.0), 1, tol, SEED).unwrap().eigenvalues[0];
    verdict(l1 - e1 > 1e3 * tol, format!("lambda1(1) - E1 = {:.6} > {:.0e}", l1 - e1, 1e3 * tol))
}

fn criterion_4() -> Verdict {
    let straight = TwistProfile::constant(0.0).unwrap();
    let combos = [
        (offset_square(), 1.0 / 8.0, 1.0 / 4.0, 2.0),
        (offset_square(), 1.0 / 16.0, 1.0 / 8.0, 1.0),
        (CrossSection::ellipse([0.3, 0.0], 1.0, 0.5).unwrap(), 1.0 / 8.0, 1.0 / 8.0, 1.5),
    ];
    let mut worst: f64 = 0.0;
    for (omega, h, h1, half) in combos {
        let tgrid = build_grid(&omega, h).unwrap();
        let e = eigs_xsection(&assemble_xsection(&tgrid, 0.0), 1, 1e-12, SEED).unwrap().eigenvalues[0];
        let (lgrid, spec) = tube_solve(&tgrid, half, h1, &straight, 1, 1e-12, None, None);
        let slices = lgrid.slices as f64;
        let stencil = 4.0 / (h1 * h1) * (PI / (2.0 * (slices + 1.0))).sin().powi(2);
        worst = worst.max(rel(spec.eigenvalues[0], stencil + e));
    }
    verdict(worst <= 1e-9, format!("max relative defect over 3 grids = {worst:.2e}"))
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let (h, h1, tol) = (1.0 / 32.0, 1.0 / 16.0, 1e-6);
    let omega = offset_square();
    let beta = TwistProfile::constant(1.0).unwrap();
    let tgrid = build_grid(&omega, h).unwrap();
    let threshold = eigs_xsection(&assemble_xsection(&tgrid, 1.0), 1, 1e-10, SEED).unwrap().eigenvalues[0];
    // Constant twist: the separable guess is closer than a prolonged shorter tube.
    let values: Vec<f64> =
        [4.0, 8.0, 16.0].iter().map(|&l| tube_solve(&tgrid, l, h1, &beta, 1, tol, None, None).1.eigenvalues[0]).collect();
    let secs = start.elapsed().as_secs_f64();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let err = rel(values[2], threshold);
    verdict(
        decreasing && err <= 0.02 && secs < 600.0,
        format!(
            "lambda1(L=4,8,16) = {:.6}, {:.6}, {:.6}; xsection lambda1(1) = {threshold:.6}; L=16 off by {:.3}%; {secs:.0} s",
            values[0],
            values[1],
            values[2],
            100.0 * err
        ),
    )
}

fn criterion_6() -> Verdict {
    // C is fixed before the run; the value implied by the data is reported.
    const C: f64 = 5.0;
    let (h, h1, tol) = (1.0 / 32.0, 1.0 / 16.0, 1e-6);
    let omega = CrossSection::ellipse([0.0, 0.0], 1.0, 0.5).unwrap();
    let profile = TwistProfile::linear(1.0).unwrap();
    let summary = omega.summary();
    let mu1 = thm1_window(&summary).unwrap().mu1;
    let tgrid = build_grid(&omega, h).unwrap();
    let mut pass = true;
    let mut parts = vec![format!("mu1 = {mu1:.6}, C = {C}")];
    let mut prev: Option<(LongitudinalGrid, TubeSpectrum)> = None;
    for l in [4.0, 8.0] {
        let (lgrid, spec) = tube_solve(&tgrid, l, h1, &profile, 1, tol, prev.as_ref().map(|p| &p.1), prev.as_ref().map(|p| &p.0));
        let form = tube_form(&tgrid, &lgrid, &profile);
        let trial = trial_cylinder_mode(&tgrid, &lgrid, &summary).unwrap();
        let rq = rayleigh_quotient(&form, &trial).unwrap();
        let base = mu1 + (PI / (2.0 * l)).powi(2);
        let observed_c = (rq - base) / (h + h1);
        let lambda1 = spec.eigenvalues[0];
        pass &= rq <= base + C * (h + h1) && lambda1 <= rq;
        parts.push(format!("L={l}: RQ = {rq:.6} vs bound {:.6} (observed C = {observed_c:.2}), lambda1 = {lambda1:.6}", base + C * (h + h1)));
        prev = Some((lgrid, spec));
    }
    verdict(pass, parts.join("; "))
}

fn bracket(l: f64, n: u32, warm: Option<&BracketReport>) -> BracketReport {
    let req = BracketRequest {
        h: 1.0 / 32.0,
        h1: 1.0 / 16.0,
        half_length: l,
        n,
        k: 5,
        tol: 1e-9,
        max_iter: 20_000,
        seed: SEED,
        sampling: RaySampling::default(),
        search_cap: 1e6,
        warm_start: warm.map(|r| (r.grid.unwrap(), r.upper_vectors.clone())),
    };
    bracket_eigenvalues(&offset_square(), &TwistProfile::linear(1.0).unwrap(), &req).unwrap()
}

fn widths(r: &BracketReport) -> Vec<f64> {
    r.brackets.iter().map(|b| b.upper - b.lower).collect()
}

fn criterion_7() -> Verdict {
    let tol = 1e-9;
    // Where the cut conditions still matter: L in {1.5, 2, 2.5} with n = 1.
    let mut chain: Vec<BracketReport> = Vec::new();
    for l in [1.5, 2.0, 2.5] {
        let r = bracket(l, 1, chain.last());
        chain.push(r);
    }
    let short_widths: Vec<Vec<f64>> = chain.iter().map(widths).collect();
    let strict_shrink = short_widths.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b < a));
    // L = 4 only carries converged modes forward; L = 2.5 is still a poor start for L = 8.
    let r4 = bracket(4.0, 1, chain.last());
    let r8 = bracket(8.0, 4, Some(&r4));
    let r16 = bracket(16.0, 4, Some(&r8));
    let upper8: Vec<f64> = r8.brackets.iter().map(|b| b.upper).collect();
    let upper16: Vec<f64> = r16.brackets.iter().map(|b| b.upper).collect();
    let drift = upper8.iter().zip(&upper16).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    let ordered = [&r8, &r16].iter().all(|r| r.brackets.iter().all(|b| b.lower <= b.upper + 2.0 * tol * (1.0 + b.upper)));
    let (w8, w16) = (widths(&r8), widths(&r16));
    let shrink = w8.iter().zip(&w16).zip(&upper16).all(|((a, b), u)| *b <= a.max(1e-9 * u));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    verdict(
        drift <= 0.005 && ordered && shrink && strict_shrink,
        format!(
            "lambda1..5(L=16) = [{}], max drift 8->16 = {:.2e}; widths L=8 [{}], L=16 [{}] (resolution floor 1e-9*lambda); \
             widths L=1.5,2,2.5: {}",
            upper16.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "),
            drift,
            fmt(&w8),
            fmt(&w16),
            short_widths.iter().map(|w| format!("[{}]", fmt(w))).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn criterion_8() -> Verdict {
    let linear = TwistProfile::linear(1.0).unwrap();
    let b = essential_lower_bound(&offset_square(), &linear, 4, RaySampling::default(), 1e6).unwrap();
    let cert = b.s_n == 4.0 && b.bound == 4.0 && b.ray_verified && b.max_observed_segment <= 2.0 * PI / 4.0;
    let ellipse = CrossSection::ellipse([0.0, 0.0], 1.0, 0.5).unwrap();
    let half_plane = matches!(
        essential_lower_bound(&ellipse, &linear, 4, RaySampling::default(), 1e6),
        Err(CertifyError::HalfPlaneViolated { .. })
    );
    let constant = matches!(
        essential_lower_bound(&offset_square(), &TwistProfile::constant(1.0).unwrap(), 4, RaySampling::default(), 1e6),
        Err(CertifyError::NotDiverging(_))
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("thm1.cfg");
    std::fs::write(&cfg, "[domain]\nshape = ellipse(0, 0, 1, 0.5)\nprofile = linear(1)\n[certify]\nn = 4\n").unwrap();
    let code = Command::new(env!("CARGO_BIN_EXE_twistspec"))
        .args(["certify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap()
        .status
        .code();
    verdict(
        cert && half_plane && constant && code == Some(3),
        format!(
            "s_4 = {}, bound = {}, ray_verified = {}, max segment {:.4} <= {:.4}; ellipse -> HalfPlaneViolated: {half_plane} (exit {code:?}); constant -> NotDiverging: {constant}",
            b.s_n, b.bound, b.ray_verified, b.max_observed_segment, 2.0 * PI / 4.0
        ),
    )
}

fn criterion_9() -> Verdict {
    let settings = OracleSettings { seed: SEED, ..OracleSettings::default() };
    let cases = bundled_cases();
    let rows: Vec<_> = cases.iter().map(|c| check_case(c, &settings, false)).collect();
    let all_pass = rows.iter().all(|r| r.status == OracleStatus::Pass);
    let worst = rows.iter().filter_map(|r| r.max_rel_err).fold(0.0, f64::max);
    let max_order = cases.iter().map(|c| c.matrix.order()).max().unwrap();
    let modules: std::collections::BTreeSet<&str> = cases.iter().map(|c| c.module).collect();
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("oracle.cfg");
        std::fs::write(&cfg, "[oracle]\nk = 4\n").unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_twistspec"))
            .args(["oracle", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap()
            .status;
        (status.success(), std::fs::read(dir.path().join("oracle.csv")).unwrap())
    };
    let (ok_a, a) = run("3");
    let (ok_b, b) = run("3");
    let identical = ok_a && ok_b && a == b;
    verdict(
        all_pass && cases.len() >= 10 && max_order <= 1500 && worst <= ORACLE_TOL && identical,
        format!(
            "{} operators (max order {max_order}, modules {:?}), worst relative error {worst:.2e}; two CLI runs byte-identical: {identical}",
            cases.len(),
            modules
        ),
    )
}

fn criterion_10() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);
    let families = [
        ("constant", TwistProfile::constant(1.3).unwrap()),
        ("linear", TwistProfile::linear(1.0).unwrap()),
        ("power", TwistProfile::power(2.0, 2.0).unwrap()),
        ("tabulated", TwistProfile::tabulated(vec![(-2.0, -1.0), (0.0, 0.5), (1.0, 2.0), (3.0, 2.5)], 1.0).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    for (_, p) in &families {
        for _ in 0..100 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            worst = worst.max((jacobian_det(p, x, 1e-4).unwrap() - 1.0).abs());
        }
    }
    let probe = quasibounded_probe(&offset_square(), &TwistProfile::linear(1.0).unwrap(), &[4.0, 8.0, 16.0, 32.0], 0.05, RayParams::default())
        .unwrap();
    let decay = probe.windows(2).all(|w| w[1] <= 0.8 * w[0]);
    verdict(
        worst <= 1e-6 && decay,
        format!(
            "max |det J - 1| over 4 x 100 points = {worst:.2e}; probe at x1 = 4, 8, 16, 32: {}",
            probe.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (n, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let v = run();
        println!("criterion {n:>2}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
