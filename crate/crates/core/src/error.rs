use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvpError {
    #[error("non-power-of-two axis length {0}")]
    NonPowerOfTwo(usize),
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("bump {index} does not fit in the box with a 4-sigma margin")]
    SupportOverflow { index: usize },
    #[error("profile is in the {found} frame, expected {expected}")]
    FrameMismatch { expected: &'static str, found: &'static str },
    #[error("profile carries {value:.3e} at |v| = {v:.4}, the edge of the velocity box")]
    VSupportExceeded { v: f64, value: f64 },
    #[error("kernel is singular at r = 0 in d = {0}")]
    KernelSingular(usize),
    #[error("density mass {mass:.3e} in the boundary layer exceeds {tol:.1e}")]
    SupportMargin { mass: f64, tol: f64 },
    #[error("derivative order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
    #[error("profile reaches the velocity guard layer at t = {t}: max |value| = {value:.3e}")]
    PadGuard { t: f64, value: f64 },
    #[error("analyticity radius is negative ({0})")]
    RadiusExhausted(f64),
    #[error("nonpositive value {value} at t = {t} in a log-log fit")]
    LogDomain { t: f64, value: f64 },
    #[error("invalid fit window: {0}")]
    FitWindow(String),
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge (estimated error {error:.3e})")]
    Quadrature { error: f64 },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint payload has {found} bytes, header implies {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("memory estimate {estimate} bytes exceeds the ceiling {ceiling}")]
    MemoryCeiling { estimate: u64, ceiling: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SvpError {
    /// Stable machine-readable identifier.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonPowerOfTwo(_) => "non-power-of-two",
            Self::Dimension(_) => "dimension",
            Self::InvalidGrid(_) => "invalid_grid",
            Self::SupportOverflow { .. } => "support_overflow",
            Self::FrameMismatch { .. } => "frame_mismatch",
            Self::VSupportExceeded { .. } => "v_support_exceeded",
            Self::KernelSingular(_) => "kernel_singular",
            Self::SupportMargin { .. } => "support_margin",
            Self::OrderTooHigh(_) => "order_too_high",
            Self::PadGuard { .. } => "pad_guard",
            Self::RadiusExhausted(_) => "radius_exhausted",
            Self::LogDomain { .. } => "log_domain",
            Self::FitWindow(_) => "fit_window",
            Self::InsufficientSnapshots { .. } => "insufficient_snapshots",
            Self::Precondition(_) => "precondition",
            Self::Quadrature { .. } => "quadrature",
            Self::BadMagic => "bad_magic",
            Self::VersionMismatch { .. } => "version_mismatch",
            Self::LengthMismatch { .. } => "length_mismatch",
            Self::Config(_) => "config",
            Self::MemoryCeiling { .. } => "memory_ceiling",
            Self::Io(_) => "io",
        }
    }

    /// Validation problems map to exit code 2, everything else to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NonPowerOfTwo(_)
            | Self::Dimension(_)
            | Self::InvalidGrid(_)
            | Self::SupportOverflow { .. }
            | Self::FitWindow(_)
            | Self::Precondition(_)
            | Self::Config(_)
            | Self::MemoryCeiling { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, SvpError>;
