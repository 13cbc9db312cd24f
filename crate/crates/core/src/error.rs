use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arc count {0} is not a positive power of two")]
    ArcCount(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid kernel spec `{0}`: {1}")]
    KernelSpec(String, String),

    #[error("level j = {level} below mesh resolution at mesh 2^-{mesh}")]
    Unresolved { level: i32, mesh: u32 },

    #[error("mesh mismatch: 2^-{0} vs 2^-{1}")]
    MeshMismatch(u32, u32),

    #[error("cross-grid containment undefined")]
    CrossGrid,

    #[error("cube {0} cannot be placed on the lattice at mesh 2^-{1}")]
    OffLattice(String, u32),

    #[error("root level too fine, enlarge root_level (average {avg} > alpha {alpha} on {cube})")]
    RootTooFine { avg: f64, alpha: f64, cube: String },

    #[error("decomposition level must be positive, got {0}")]
    NonPositiveLevel(f64),

    #[error("empty level range [{0}, {1}]")]
    EmptyLevels(i32, i32),

    #[error("truncation below mesh scale: {0} < 4h")]
    BelowMesh(f64),

    #[error("increase arc_count for this (s,gamma): arc width {arc_width} exceeds separation {separation}")]
    UnresolvedNet { arc_width: f64, separation: f64 },

    #[error("layer/part mismatch: {0}")]
    LayerMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("kernel has no strength")]
    ZeroKernel,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
