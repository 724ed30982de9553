//! Dense-versus-iterative cross-checks on a bundle of small operators.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::eigensolve::{dense_eig_capped, lobpcg, EigError, SparseSym, SymBuilder};
use crate::geometry::{CrossSection, TwistProfile};
use crate::tube_operator::{assemble_tube, EndCondition, LongitudinalGrid};
use crate::xsection::{assemble_xsection, build_grid};

/// Agreement required between the two eigenvalue paths, relative to `1 + |λ|`.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OracleCase {
    pub id: String,
    pub module: &'static str,
    pub matrix: SparseSym,
}

fn xsection_case(id: &str, omega: CrossSection, h: f64, beta: f64) -> OracleCase {
    let grid = build_grid(&omega, h).expect("bundled grids are nonempty");
    OracleCase { id: id.into(), module: "xsection", matrix: assemble_xsection(&grid, beta).matrix }
}

fn tube_case(id: &str, module: &'static str, profile: TwistProfile, ends: EndCondition) -> OracleCase {
    let omega = CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap();
    let tgrid = build_grid(&omega, 0.125).unwrap();
    let lgrid = LongitudinalGrid::new(2.0, 15, ends).unwrap();
    OracleCase { id: id.into(), module, matrix: assemble_tube(&tgrid, &lgrid, &profile).matrix }
}

/// Operators of order ≤ 1500 drawn from every module.
pub fn bundled_cases() -> Vec<OracleCase> {
    let mut stencil = SymBuilder::new(200);
    for i in 0..200 {
        stencil.add(i, i, 2.0);
        if i > 0 {
            stencil.add(i, i - 1, -1.0);
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    let n = 300;
    let mut random = SymBuilder::new(n);
    let mut row_sums = vec![0.0; n];
    for i in 0..n {
        for _ in 0..4 {
            let j = rng.random_range(0..n);
            if j != i {
                let v: f64 = rng.random_range(-1.0..1.0);
                random.add(i, j, v);
                row_sums[i] += v.abs();
                row_sums[j] += v.abs();
            }
        }
    }
    for (i, s) in row_sums.iter().enumerate() {
        random.add(i, i, s + 0.5 + rng.random::<f64>());
    }
    let table = TwistProfile::tabulated(vec![(-1.0, -2.0), (0.0, 0.5), (1.0, 1.0), (2.0, 3.0)], 1.5).unwrap();
    vec![
        OracleCase { id: "stencil-1d-200".into(), module: "eigensolve", matrix: stencil.build() },
        OracleCase { id: "random-spd-300".into(), module: "eigensolve", matrix: random.build() },
        xsection_case("square-beta0", CrossSection::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap(), 1.0 / 16.0, 0.0),
        xsection_case("disc-beta3", CrossSection::disc([0.0, 0.0], 1.0).unwrap(), 1.0 / 16.0, 3.0),
        xsection_case("offset-square-beta1", CrossSection::rectangle([0.5, -0.5], [1.5, 0.5]).unwrap(), 1.0 / 32.0, 1.0),
        xsection_case("offset-ellipse-beta2", CrossSection::ellipse([0.8, 0.2], 0.7, 0.4).unwrap(), 1.0 / 32.0, 2.0),
        xsection_case(
            "l-polygon-beta0.5",
            CrossSection::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap(),
            1.0 / 16.0,
            0.5,
        ),
        tube_case("tube-straight-dirichlet", "tube_operator", TwistProfile::constant(0.0).unwrap(), EndCondition::Dirichlet),
        tube_case("tube-constant-neumann", "tube_operator", TwistProfile::constant(1.0).unwrap(), EndCondition::Neumann),
        tube_case("tube-linear-dirichlet", "tube_operator", TwistProfile::linear(1.0).unwrap(), EndCondition::Dirichlet),
        tube_case("bracket-lower-linear", "certify", TwistProfile::linear(2.0).unwrap(), EndCondition::Neumann),
        tube_case("tube-tabulated-power", "geometry", table, EndCondition::Dirichlet),
        tube_case("tube-power-neumann", "geometry", TwistProfile::power(1.0, 1.5).unwrap(), EndCondition::Neumann),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    Pass,
    Fail,
    Asymmetric,
    TooLarge,
    NotConverged,
}

impl std::fmt::Display for OracleStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Asymmetric => "asymmetric",
            Self::TooLarge => "too_large",
            Self::NotConverged => "not_converged",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub id: String,
    pub module: String,
    pub order: usize,
    pub k: usize,
    pub status: OracleStatus,
    /// `max_j |λ_j(iterative) − λ_j(dense)| / (1 + |λ_j|)`.
    pub max_rel_err: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_cap: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { k: 4, tol: 1e-9, max_iter: 10_000, seed: 0, dense_cap: crate::eigensolve::DENSE_ORDER_CAP }
    }
}

/// Compare the `k` lowest eigenvalues from both paths. With
/// `inject_asymmetry`, one off-diagonal entry is perturbed on one side only
/// before the operator is rebuilt, which must be rejected.
pub fn check_case(case: &OracleCase, settings: &OracleSettings, inject_asymmetry: bool) -> OracleRow {
    let order = case.matrix.order();
    let k = settings.k.min(order);
    let row = |status, max_rel_err, detail: String| OracleRow {
        id: case.id.clone(),
        module: case.module.to_string(),
        order,
        k,
        status,
        max_rel_err,
        detail,
    };
    let matrix = if inject_asymmetry {
        let mut triplets = case.matrix.full_triplets();
        if let Some(t) = triplets.iter_mut().find(|t| t.0 < t.1) {
            t.2 += 1e-3 * (1.0 + t.2.abs());
        }
        match SparseSym::from_full_triplets(order, &triplets) {
            Ok(m) => m,
            Err(EigError::Asymmetric { row: r, col }) => {
                return row(OracleStatus::Asymmetric, None, format!("rejected: entry ({r}, {col}) differs from its mirror"))
            }
            Err(e) => return row(OracleStatus::Fail, None, e.to_string()),
        }
    } else {
        case.matrix.clone()
    };
    let dense = match dense_eig_capped(&matrix, settings.dense_cap) {
        Ok(d) => d,
        Err(e @ EigError::TooLarge { .. }) => return row(OracleStatus::TooLarge, None, e.to_string()),
        Err(e) => return row(OracleStatus::Fail, None, e.to_string()),
    };
    let it = match lobpcg(&matrix, k, settings.tol, settings.max_iter, settings.seed) {
        Ok(r) => r,
        Err(e @ EigError::NotConverged { .. }) => return row(OracleStatus::NotConverged, None, e.to_string()),
        Err(e) => return row(OracleStatus::Fail, None, e.to_string()),
    };
    let err = it.eigenvalues.iter().zip(&dense).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0, f64::max);
    let status = if err <= ORACLE_TOL { OracleStatus::Pass } else { OracleStatus::Fail };
    row(status, Some(err), format!("{} iterations", it.iterations))
}
