use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category; maps onto process exit codes in the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Schema,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Schema => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument out of domain: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("type {type_id}: fraction nonconforming is undefined with zero inspected items")]
    UndefinedRatio { type_id: String },

    #[error("{context}: repaired count {repaired} exceeds inspected count {inspected}")]
    InconsistentCounts {
        context: String,
        inspected: u64,
        repaired: u64,
    },

    #[error("{context}: inspected count {inspected} exceeds total count {total}")]
    InspectedExceedsTotal {
        context: String,
        total: u64,
        inspected: u64,
    },

    #[error("duplicate type id `{0}`")]
    DuplicateLabel(String),

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("cluster count k={k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },

    #[error("cannot select top {requested} of {available} types")]
    InvalidTopN { requested: usize, available: usize },

    #[error("type `{0}` has no total count; cannot rank by business volume")]
    CannotRank(String),

    #[error("numerical integration did not converge: {0}")]
    Integration(String),

    #[error("{function}: iteration did not converge: {detail}")]
    NoConvergence {
        function: &'static str,
        detail: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: line {line}: {detail}")]
    BadValue {
        path: PathBuf,
        line: u64,
        detail: String,
    },

    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("unknown output format `{0}`")]
    UnknownFormat(String),

    #[error("no types left to analyze after filtering")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            UnknownFormat(_) | InvalidK { .. } | InvalidTopN { .. } => ErrorKind::Usage,
            Domain { .. } | Integration(_) | NoConvergence { .. } => ErrorKind::Numerical,
            Io { .. } | Serialize(_) => ErrorKind::Io,
            UndefinedRatio { .. }
            | InconsistentCounts { .. }
            | InspectedExceedsTotal { .. }
            | DuplicateLabel(_)
            | InvalidMatrix(_)
            | InconsistentInput(_)
            | CannotRank(_)
            | MissingColumn { .. }
            | BadValue { .. }
            | Csv { .. }
            | EmptyInput => ErrorKind::Schema,
        }
    }

    /// Module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            Domain { .. } | NoConvergence { .. } => "special_functions",
            UndefinedRatio { .. } => "posterior",
            InconsistentCounts { .. } | InspectedExceedsTotal { .. } => "ingest",
            DuplicateLabel(_) | Integration(_) => "divergence",
            InvalidMatrix(_) | InvalidK { .. } => "clustering",
            InconsistentInput(_) => "scoring",
            InvalidTopN { .. }
            | CannotRank(_)
            | MissingColumn { .. }
            | BadValue { .. }
            | Csv { .. } => "ingest",
            UnknownFormat(_) | Serialize(_) => "report",
            EmptyInput | Io { .. } => "pipeline",
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            Domain { .. } => "E101",
            NoConvergence { .. } => "E102",
            UndefinedRatio { .. } => "E201",
            InconsistentCounts { .. } => "E202",
            InspectedExceedsTotal { .. } => "E203",
            DuplicateLabel(_) => "E301",
            Integration(_) => "E302",
            InconsistentInput(_) => "E401",
            InvalidMatrix(_) => "E501",
            InvalidK { .. } => "E502",
            MissingColumn { .. } => "E601",
            BadValue { .. } => "E602",
            Csv { .. } => "E603",
            InvalidTopN { .. } => "E604",
            CannotRank(_) => "E605",
            UnknownFormat(_) => "E701",
            Serialize(_) => "E702",
            EmptyInput => "E801",
            Io { .. } => "E802",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}
