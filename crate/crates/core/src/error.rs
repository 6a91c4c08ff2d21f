use thiserror::Error;

/// Errors raised by the simulator and its building blocks.
///
/// The variant names double as the diagnostics printed by the CLI, so they
/// should stay stable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ZeroCrossGain: cross gain of receiver {rx} is zero")]
    ZeroCrossGain { rx: usize },
    #[error("NonPositivePower: power must be positive and finite, got {0}")]
    NonPositivePower(f64),
    #[error("OddKForFullModel: the full model needs an even number of users, got K={0}")]
    OddKForFullModel(usize),
    #[error("BadEpsilon: need 0 < epsilon < min(1, P), got epsilon={epsilon} with P={power}")]
    BadEpsilon { epsilon: f64, power: f64 },
    #[error("KTooSmall: K={k} but at least {min} users are required")]
    KTooSmall { k: usize, min: usize },
    #[error("GainCountMismatch: expected {expected} cross gains, got {found}")]
    GainCountMismatch { expected: usize, found: usize },
    #[error("LibraryTooSmall: D={0} files; at least 6 are required unless small libraries are explicitly allowed")]
    LibraryTooSmall(usize),
    #[error("BadDemand: {0}")]
    BadDemand(String),
    #[error("LengthMismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("BadLength: length {len} is not a positive multiple of {divisor}")]
    BadLength { len: usize, divisor: usize },
    #[error("TooManyWords: codebooks are capped at 2^20 words, asked for 2^{0}")]
    TooManyWords(usize),
    #[error("BadCodebook: {0}")]
    BadCodebook(String),
    #[error("WrongPartCount: expected {expected} parts, found {found}")]
    WrongPartCount { expected: usize, found: usize },
    #[error("DuplicateLabel: part {0} given twice")]
    DuplicateLabel(u8),
    #[error("PowerViolation: transmitter {tx} block power {measured} exceeds {limit}")]
    PowerViolation {
        tx: usize,
        measured: f64,
        limit: f64,
    },
    #[error("ConfigMismatch: {0}")]
    ConfigMismatch(String),
    #[error("KnowledgeViolation: transmitter {tx} does not know file {file}")]
    KnowledgeViolation { tx: usize, file: usize },
    #[error("TooFewParts: need {needed} coded parts, got {found}")]
    TooFewParts { needed: usize, found: usize },
    #[error("NotByteAligned: part length {0} bits is not a multiple of 8")]
    NotByteAligned(usize),
    #[error("BadCodeLength: MDS code length must be in 3..=256, got {0}")]
    BadCodeLength(usize),
    #[error("NegativeRatio: memory ratio must be non-negative, got {0}")]
    NegativeRatio(f64),
    #[error("BadParameter: {0}")]
    BadParameter(String),
    #[error("Parse: {0}")]
    Parse(String),
    #[error("Io: {0}")]
    Io(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short stable tag of the variant, without payload.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroCrossGain { .. } => "ZeroCrossGain",
            Error::NonPositivePower(_) => "NonPositivePower",
            Error::OddKForFullModel(_) => "OddKForFullModel",
            Error::BadEpsilon { .. } => "BadEpsilon",
            Error::KTooSmall { .. } => "KTooSmall",
            Error::GainCountMismatch { .. } => "GainCountMismatch",
            Error::LibraryTooSmall(_) => "LibraryTooSmall",
            Error::BadDemand(_) => "BadDemand",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::BadLength { .. } => "BadLength",
            Error::TooManyWords(_) => "TooManyWords",
            Error::BadCodebook(_) => "BadCodebook",
            Error::WrongPartCount { .. } => "WrongPartCount",
            Error::DuplicateLabel(_) => "DuplicateLabel",
            Error::PowerViolation { .. } => "PowerViolation",
            Error::ConfigMismatch(_) => "ConfigMismatch",
            Error::KnowledgeViolation { .. } => "KnowledgeViolation",
            Error::TooFewParts { .. } => "TooFewParts",
            Error::NotByteAligned(_) => "NotByteAligned",
            Error::BadCodeLength(_) => "BadCodeLength",
            Error::NegativeRatio(_) => "NegativeRatio",
            Error::BadParameter(_) => "BadParameter",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Trial { source, .. } => source.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
