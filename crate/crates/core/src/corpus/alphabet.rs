//! Tile alphabets: the ordered tile inventory of a game domain, the semantic
//! group of each tile, and optional condensation mappings between alphabets.
//!
//! The channel index of a tile in a one-hot encoding equals its position in
//! the alphabet's tile list. Alias characters let several glyphs resolve to
//! the same tile (Boxoban writes empty cells as either ' ' or '-') without
//! widening the channel count.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Semantic group of a tile, shared across game domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileGroup {
    Empty,
    Enemy,
    Solid,
    Pipe,
    Reward,
    Box,
    Goal,
    Player,
}

impl TileGroup {
    pub fn name(self) -> &'static str {
        match self {
            TileGroup::Empty => "empty",
            TileGroup::Enemy => "enemy",
            TileGroup::Solid => "solid",
            TileGroup::Pipe => "pipe",
            TileGroup::Reward => "reward",
            TileGroup::Box => "box",
            TileGroup::Goal => "goal",
            TileGroup::Player => "player",
        }
    }
}

/// One tile type: canonical character, name, semantic group, and alias
/// characters that parse to the same tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileDef {
    pub ch: char,
    pub name: String,
    pub group: TileGroup,
    pub aliases: Vec<char>,
}

/// Ordered tile inventory of a domain. The position of a tile in `tiles`
/// is its one-hot channel index.
#[derive(Debug, PartialEq, Eq)]
pub struct TileAlphabet {
    tiles: Vec<TileDef>,
    by_char: HashMap<char, usize>,
    by_name: HashMap<String, usize>,
    mapping: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct AlphabetFile {
    tiles: Vec<TileEntry>,
    groups: BTreeMap<String, TileGroup>,
    #[serde(default)]
    mapping: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct TileEntry {
    #[serde(rename = "char")]
    ch: char,
    name: String,
    #[serde(default)]
    aliases: Vec<char>,
}

impl TileAlphabet {
    /// Builds an alphabet from parts, enforcing unique characters and names
    /// and a total tile-to-group assignment.
    pub fn new(
        tiles: Vec<TileDef>,
        mapping: BTreeMap<String, String>,
    ) -> Result<Arc<Self>, CorpusError> {
        if tiles.is_empty() {
            return Err(CorpusError::InvalidAlphabet("no tiles declared".into()));
        }
        let mut by_char = HashMap::new();
        let mut by_name = HashMap::new();
        for (idx, tile) in tiles.iter().enumerate() {
            if by_name.insert(tile.name.clone(), idx).is_some() {
                return Err(CorpusError::InvalidAlphabet(format!(
                    "duplicate tile name '{}'",
                    tile.name
                )));
            }
            for &ch in std::iter::once(&tile.ch).chain(tile.aliases.iter()) {
                if by_char.insert(ch, idx).is_some() {
                    return Err(CorpusError::InvalidAlphabet(format!(
                        "duplicate tile character '{ch}'"
                    )));
                }
            }
        }
        Ok(Arc::new(Self {
            tiles,
            by_char,
            by_name,
            mapping,
        }))
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Arc<Self>, CorpusError> {
        let file: AlphabetFile = serde_json::from_str(text).map_err(|source| CorpusError::Json {
            path: origin.to_string(),
            source,
        })?;
        let mut tiles = Vec::with_capacity(file.tiles.len());
        for entry in file.tiles {
            let group = *file.groups.get(&entry.name).ok_or_else(|| {
                CorpusError::InvalidAlphabet(format!("tile '{}' has no group", entry.name))
            })?;
            tiles.push(TileDef {
                ch: entry.ch,
                name: entry.name,
                group,
                aliases: entry.aliases,
            });
        }
        Self::new(tiles, file.mapping)
    }

    pub fn from_file(path: &Path) -> Result<Arc<Self>, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// The 5-tile Boxoban alphabet (empty, wall, box, goal, player).
    pub fn boxoban() -> Arc<Self> {
        static ALPHABET: OnceLock<Arc<TileAlphabet>> = OnceLock::new();
        Arc::clone(ALPHABET.get_or_init(|| {
            Self::from_json(
                include_str!("../../data/boxoban_alphabet.json"),
                "builtin boxoban alphabet",
            )
            .expect("builtin boxoban alphabet is valid")
        }))
    }

    /// The 28-tile raw Mario alphabet, including its condensation mapping.
    pub fn mario_raw() -> Arc<Self> {
        static ALPHABET: OnceLock<Arc<TileAlphabet>> = OnceLock::new();
        Arc::clone(ALPHABET.get_or_init(|| {
            Self::from_json(
                include_str!("../../data/mario_raw_alphabet.json"),
                "builtin mario raw alphabet",
            )
            .expect("builtin mario raw alphabet is valid")
        }))
    }

    /// The 5-tile condensed Mario alphabet (empty, enemy, solid, pipe, reward).
    pub fn mario_condensed() -> Arc<Self> {
        static ALPHABET: OnceLock<Arc<TileAlphabet>> = OnceLock::new();
        Arc::clone(ALPHABET.get_or_init(|| {
            Self::from_json(
                include_str!("../../data/mario_condensed_alphabet.json"),
                "builtin mario condensed alphabet",
            )
            .expect("builtin mario condensed alphabet is valid")
        }))
    }

    /// Number of tiles, i.e. the one-hot channel count.
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tile(&self, index: usize) -> &TileDef {
        &self.tiles[index]
    }

    pub fn tiles(&self) -> &[TileDef] {
        &self.tiles
    }

    pub fn index_of_char(&self, ch: char) -> Option<usize> {
        self.by_char.get(&ch).copied()
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn group(&self, index: usize) -> TileGroup {
        self.tiles[index].group
    }

    pub fn has_group(&self, group: TileGroup) -> bool {
        self.tiles.iter().any(|t| t.group == group)
    }

    /// The set of groups present, sorted.
    pub fn group_set(&self) -> Vec<TileGroup> {
        let mut groups: Vec<TileGroup> = self.tiles.iter().map(|t| t.group).collect();
        groups.sort();
        groups.dedup();
        groups
    }

    /// Raw-tile-name to condensed-tile-name mapping carried by this alphabet.
    pub fn mapping(&self) -> &BTreeMap<String, String> {
        &self.mapping
    }
}

/// A condensation: the tile-name mapping plus the target alphabet it maps
/// into.
#[derive(Debug, Clone)]
pub struct Condensation {
    pub mapping: BTreeMap<String, String>,
    pub target: Arc<TileAlphabet>,
}

impl Condensation {
    /// Default Mario 28-to-5 condensation (spawn/finish/traversable to empty,
    /// enemies to enemy, blocks to solid, pipe glyphs to pipe, coin and
    /// question glyphs to reward).
    pub fn mario_default() -> Self {
        Self {
            mapping: TileAlphabet::mario_raw().mapping().clone(),
            target: TileAlphabet::mario_condensed(),
        }
    }

    /// Builds a condensation from a raw alphabet's embedded mapping and an
    /// explicit target alphabet.
    pub fn from_alphabets(raw: &TileAlphabet, target: Arc<TileAlphabet>) -> Self {
        Self {
            mapping: raw.mapping().clone(),
            target,
        }
    }
}
