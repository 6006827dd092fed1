use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("stage {stage} is out of range (parameters are defined for stages 0..{available})")]
    StageOutOfRange { stage: usize, available: usize },

    #[error("{what} has size {size}, above the limit of {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        size: String,
        limit: usize,
    },

    #[error("invalid stage {stage}: {reason}")]
    InvalidStage { stage: usize, reason: String },

    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("modulus {modulus} is above the dense histogram limit of {limit}")]
    ModulusTooLarge { modulus: u64, limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sequence term k_{index} = {value} does not divide its successor")]
    NotDivisibilityChain { index: usize, value: String },

    #[error("formula odometer needs a divergence annotation for {0}")]
    UndeclaredDivergence(String),

    #[error("cannot compare a supernatural number truncated at a finite depth")]
    TruncatedComparison,

    #[error("point is not coherent at coordinate {0}")]
    IncoherentPoint(usize),

    #[error("modulus {0} does not divide any available k_n")]
    ModulusNotInK(u64),

    #[error("probe {0} does not divide the target supernatural number")]
    ProbeNotInK(u64),

    #[error("measure ratio against an empty set")]
    EmptySet,

    #[error("no stage for approximating map {alpha} satisfies the window condition within depth {depth}")]
    CriterionUnmetAtDepth { alpha: usize, depth: usize },

    #[error("summability of the reciprocal sequence was not declared")]
    SummabilityUndeclared,

    #[error("the reciprocal sum of the sequence is declared divergent")]
    ReciprocalSumDiverges,

    #[error("k_{index} = {value} is too small; cutting parameter k_n - 1 must be at least 2")]
    CuttingTooSmall { index: usize, value: String },

    #[error("preset {preset} violates its declared identity at stage {stage}: {detail}")]
    IdentityMismatch {
        preset: &'static str,
        stage: usize,
        detail: String,
    },

    #[error("could not factor {0} over the trial-division bound")]
    FactorizationFailed(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("malformed supernatural number {0:?}")]
    ParseSupernatural(String),
}

pub(crate) fn size_limit(what: &'static str, size: impl ToString, limit: usize) -> Error {
    Error::SizeLimitExceeded {
        what,
        size: size.to_string(),
        limit,
    }
}
