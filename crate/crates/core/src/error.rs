use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector norm {0:e} is too small to normalize")]
    ZeroNorm(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("cardinality cap {k} outside 1..={max}")]
    CapOutOfRange { k: usize, max: usize },
    #[error("instance {rows}x{cols} too large for exhaustive search (max side 8)")]
    InstanceTooLarge { rows: usize, cols: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown feature id `{0}`")]
    UnknownFeature(String),
    #[error("document `{doc}`: gold pair ({s}, {v}) out of range for {n}x{m}")]
    GoldIndexOutOfRange { doc: String, s: usize, v: usize, n: usize, m: usize },
    #[error("document `{doc}`: duplicate gold pair ({s}, {v})")]
    DuplicateGold { doc: String, s: usize, v: usize },
    #[error("document `{0}` has no sentences or no images")]
    EmptyDocument(String),
    #[error("document `{doc}`: sentence {index} has neither tokens nor a feature id")]
    SentenceWithoutContent { doc: String, index: usize },
    #[error("document `{doc}`: sentence {index} has no {wanted}")]
    MissingSentenceInput { doc: String, index: usize, wanted: &'static str },
    #[error("corpus has {available} documents, {needed} required")]
    CorpusTooSmall { needed: usize, available: usize },
    #[error("gold set is {0}; document skipped")]
    Skip(SkipReason),
    #[error("input is constant after ranking")]
    ConstantInput,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("need more than {needed} observations, got {available}")]
    TooFewObservations { needed: usize, available: usize },
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),
    #[error("image `{0}` missing from label file")]
    MissingLabels(String),
    #[error("invalid label entry for image `{0}`")]
    InvalidLabels(String),
    #[error("forward cache does not match: {0}")]
    CacheMismatch(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NoGold,
    CompleteGold,
}

impl core::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl SkipReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkipReason::NoGold => "empty",
            SkipReason::CompleteGold => "complete",
        }
    }
}
