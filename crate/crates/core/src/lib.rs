//! Spectral computations for twisted tubes with arbitrary cross-sections.

pub mod certify;
pub mod eigensolve;
pub mod geometry;
pub mod oracle;
pub mod special;
pub mod tube_operator;
pub mod xsection;

pub use certify::{
    bracket_eigenvalues, essential_lower_bound, poincare_gap_probe, thm1_window, Bracket, BracketReport,
    BracketRequest, CertifyError, EssentialBound, GapPoint, Thm1Window,
};
pub use eigensolve::{lobpcg, lobpcg_with, EigError, EigResult, LobpcgOptions, SparseSym, SymOperator};
pub use geometry::{CrossSection, GeometryError, GeometrySummary, ProfileKind, RayParams, RaySampling, TwistProfile};
pub use oracle::{bundled_cases, check_case, OracleCase, OracleRow, OracleSettings, OracleStatus};
pub use tube_operator::{EndCondition, LongitudinalGrid, TubeError, TubeForm, TubeSpectrum};
pub use xsection::{CrossSectionSpectrum, TransverseGrid, XSectionError};
