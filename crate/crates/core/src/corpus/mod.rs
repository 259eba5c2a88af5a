//! Level corpora: tile alphabets, parsing, one-hot encoding, and seeded
//! sampling / train-test splitting.

mod alphabet;
mod grid;
mod parse;
mod sample;

pub use alphabet::{Condensation, TileAlphabet, TileDef, TileGroup};
pub use grid::{one_hot_decode, one_hot_encode, LevelGrid, OneHotTensor};
pub use parse::{
    condense_tiles, load_corpus, parse_boxoban, parse_boxoban_grid, parse_mario, BOXOBAN_SIZE,
    MARIO_HEIGHT, MARIO_WIDTH,
};
pub use sample::{sample_even, split_train_test, CorpusSample};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown tile '{ch}' at line {line}, column {col}")]
    UnknownTile { ch: char, line: usize, col: usize },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("tile '{name}' has no entry in the condensation mapping")]
    UnmappedTile { name: String },
    #[error("generator '{generator}' holds {available} levels but the sample needs {needed}")]
    InsufficientLevels {
        generator: String,
        available: usize,
        needed: usize,
    },
    #[error("corpus has no generators")]
    EmptyCorpus,
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("levels are not uniformly sized: expected {expected:?}, found {found:?} in level '{id}'")]
    MixedDimensions {
        expected: (usize, usize),
        found: (usize, usize),
        id: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}
