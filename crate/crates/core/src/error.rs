use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("lexicon line {line}: {reason}")]
    LexiconParse { line: usize, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },

    #[error("duplicate host_id {0} in occupancy table")]
    DuplicateHost(i64),

    #[error("no usable rows after cleaning")]
    NoUsableRows,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("underdetermined fit: {rows} rows for {params} parameters")]
    Underdetermined { rows: usize, params: usize },

    #[error("collinear design columns: {}", .0.join(", "))]
    Collinear(Vec<String>),

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyLexicon => "empty_lexicon",
            Error::LexiconParse { .. } => "lexicon_parse",
            Error::Schema(_) => "schema",
            Error::Row { .. } => "row",
            Error::DuplicateHost(_) => "duplicate_host",
            Error::NoUsableRows => "no_usable_rows",
            Error::Domain(_) => "domain",
            Error::UnknownFeature(_) => "unknown_feature",
            Error::DuplicateColumn(_) => "duplicate_column",
            Error::Empty(_) => "empty",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Underdetermined { .. } => "underdetermined",
            Error::Collinear(_) => "collinear",
            Error::DegenerateTarget(_) => "degenerate_target",
            Error::Degenerate(_) => "degenerate",
            Error::Model(_) => "model",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
