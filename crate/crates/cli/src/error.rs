use twistspec_core::certify::CertifyError;
use twistspec_core::eigensolve::EigError;
use twistspec_core::geometry::GeometryError;
use twistspec_core::tube_operator::TubeError;
use twistspec_core::xsection::XSectionError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// 0 success, 1 non-convergence, 2 configuration, 3 hypothesis violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NotConverged(_) | Self::Runtime(_) => 1,
            Self::Config(_) | Self::Io(_) => 2,
            Self::Hypothesis(_) => 3,
        }
    }
}

impl From<EigError> for CliError {
    fn from(e: EigError) -> Self {
        match e {
            EigError::NotConverged { .. } => Self::NotConverged(e.to_string()),
            EigError::InvalidArgument(_) | EigError::TooLarge { .. } => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::NotInside { .. } => Self::Runtime(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<XSectionError> for CliError {
    fn from(e: XSectionError) -> Self {
        match e {
            XSectionError::Eig(inner) => inner.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<TubeError> for CliError {
    fn from(e: TubeError) -> Self {
        match e {
            TubeError::Eig(inner) => inner.into(),
            TubeError::XSection(inner) => inner.into(),
            TubeError::NoInradius => Self::Hypothesis(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::NoOrigin
            | CertifyError::NotDiverging(_)
            | CertifyError::HalfPlaneViolated { .. }
            | CertifyError::LengthBelowThreshold { .. } => Self::Hypothesis(e.to_string()),
            CertifyError::InvalidArgument(_) => Self::Config(e.to_string()),
            CertifyError::Geometry(inner) => inner.into(),
            CertifyError::XSection(inner) => inner.into(),
            CertifyError::Tube(inner) => inner.into(),
        }
    }
}
