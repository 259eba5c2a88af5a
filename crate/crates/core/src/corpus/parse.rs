//! Corpus text parsing and tile condensation.
//!
//! Boxoban corpora are multi-record text files: a header line starting with
//! ';' followed by exactly ten 10-character grid lines. Mario levels are one
//! per file, 16 lines of 100 characters over the raw 28-tile alphabet.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use super::{Condensation, CorpusError, LevelGrid, TileAlphabet};
use crate::metrics::Domain;

pub const BOXOBAN_SIZE: usize = 10;
pub const MARIO_HEIGHT: usize = 16;
pub const MARIO_WIDTH: usize = 100;

fn parse_row(
    line: &str,
    line_no: usize,
    width: usize,
    alphabet: &TileAlphabet,
) -> Result<Vec<u8>, CorpusError> {
    let mut row = Vec::with_capacity(width);
    for (col, ch) in line.chars().enumerate() {
        let idx = alphabet
            .index_of_char(ch)
            .ok_or(CorpusError::UnknownTile {
                ch,
                line: line_no,
                col: col + 1,
            })?;
        row.push(idx as u8);
    }
    if row.len() != width {
        return Err(CorpusError::MalformedRecord {
            line: line_no,
            reason: format!("expected width {width}, found {}", row.len()),
        });
    }
    Ok(row)
}

fn grid_from_rows(rows: Vec<Vec<u8>>) -> Array2<u8> {
    let height = rows.len();
    let width = rows[0].len();
    let flat: Vec<u8> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((height, width), flat).expect("rows share a width")
}

/// Parses a multi-record Boxoban corpus text. Each record is a ';'-prefixed
/// header line followed by exactly ten 10-character lines; blank lines
/// between records are skipped. Record order is preserved and each level id
/// is `<generator>/<header id>`.
pub fn parse_boxoban(
    text: &str,
    alphabet: &Arc<TileAlphabet>,
    generator: &str,
) -> Result<Vec<LevelGrid>, CorpusError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut levels = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim_end_matches('\r');
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        if !line.starts_with(';') {
            return Err(CorpusError::MalformedRecord {
                line: i + 1,
                reason: "expected a ';' header line".into(),
            });
        }
        let header_id = line[1..].trim().to_string();
        let mut rows = Vec::with_capacity(BOXOBAN_SIZE);
        for r in 0..BOXOBAN_SIZE {
            let line_no = i + 1 + r + 1;
            let row_line = lines.get(i + 1 + r).ok_or(CorpusError::MalformedRecord {
                line: line_no,
                reason: format!("record truncated after {r} of {BOXOBAN_SIZE} rows"),
            })?;
            rows.push(parse_row(
                row_line.trim_end_matches('\r'),
                line_no,
                BOXOBAN_SIZE,
                alphabet,
            )?);
        }
        let id = if header_id.is_empty() {
            format!("{generator}/{}", levels.len())
        } else {
            format!("{generator}/{header_id}")
        };
        levels.push(LevelGrid {
            cells: grid_from_rows(rows),
            alphabet: Arc::clone(alphabet),
            generator: generator.to_string(),
            id,
        });
        i += 1 + BOXOBAN_SIZE;
    }
    Ok(levels)
}

/// Parses exactly ten 10-character grid lines with no header, as written by
/// single-level tools.
pub fn parse_boxoban_grid(
    text: &str,
    alphabet: &Arc<TileAlphabet>,
) -> Result<LevelGrid, CorpusError> {
    // Lines of spaces are valid all-empty rows, so only zero-length lines
    // are dropped here.
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != BOXOBAN_SIZE {
        return Err(CorpusError::MalformedRecord {
            line: lines.len(),
            reason: format!("expected {BOXOBAN_SIZE} rows, found {}", lines.len()),
        });
    }
    let mut rows = Vec::with_capacity(BOXOBAN_SIZE);
    for (r, line) in lines.iter().enumerate() {
        rows.push(parse_row(line, r + 1, BOXOBAN_SIZE, alphabet)?);
    }
    Ok(LevelGrid {
        cells: grid_from_rows(rows),
        alphabet: Arc::clone(alphabet),
        generator: String::new(),
        id: String::new(),
    })
}

/// Parses a single Mario level: 16 lines of 100 characters over the raw
/// alphabet. Generator and id are left empty for the caller to fill.
pub fn parse_mario(text: &str, alphabet: &Arc<TileAlphabet>) -> Result<LevelGrid, CorpusError> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .collect();
    if lines.len() != MARIO_HEIGHT {
        return Err(CorpusError::MalformedRecord {
            line: lines.len(),
            reason: format!("expected {MARIO_HEIGHT} rows, found {}", lines.len()),
        });
    }
    let mut rows = Vec::with_capacity(MARIO_HEIGHT);
    for (r, line) in lines.iter().enumerate() {
        rows.push(parse_row(line, r + 1, MARIO_WIDTH, alphabet)?);
    }
    Ok(LevelGrid {
        cells: grid_from_rows(rows),
        alphabet: Arc::clone(alphabet),
        generator: String::new(),
        id: String::new(),
    })
}

/// Replaces every cell by its condensed tile. Dimensions, generator, and id
/// are preserved; the result indexes into the condensation's target alphabet.
pub fn condense_tiles(
    grid: &LevelGrid,
    condensation: &Condensation,
) -> Result<LevelGrid, CorpusError> {
    // Per-index lookup table from the name-level mapping.
    let mut index_map = Vec::with_capacity(grid.alphabet.len());
    for tile in grid.alphabet.tiles() {
        let target_name =
            condensation
                .mapping
                .get(&tile.name)
                .ok_or_else(|| CorpusError::UnmappedTile {
                    name: tile.name.clone(),
                })?;
        let target_idx = condensation.target.index_of_name(target_name).ok_or_else(|| {
            CorpusError::UnmappedTile {
                name: format!("{} -> {target_name} (absent from target alphabet)", tile.name),
            }
        })?;
        index_map.push(target_idx as u8);
    }
    Ok(LevelGrid {
        cells: grid.cells.mapv(|c| index_map[c as usize]),
        alphabet: Arc::clone(&condensation.target),
        generator: grid.generator.clone(),
        id: grid.id.clone(),
    })
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn text_files_sorted(dir: &Path) -> Result<Vec<std::path::PathBuf>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads a corpus from labelled paths. Each path may be a single text file or
/// a directory of `.txt` files (read in sorted order). Boxoban files hold
/// many records; Mario files hold one raw level each, condensed on load.
pub fn load_corpus(
    domain: Domain,
    sources: &BTreeMap<String, std::path::PathBuf>,
    alphabet: &Arc<TileAlphabet>,
    condensation: Option<&Condensation>,
) -> Result<BTreeMap<String, Vec<LevelGrid>>, CorpusError> {
    let mut corpus = BTreeMap::new();
    for (generator, path) in sources {
        let files = if path.is_dir() {
            text_files_sorted(path)?
        } else {
            vec![path.clone()]
        };
        let mut levels = Vec::new();
        for file in &files {
            let text = read_file(file)?;
            match domain {
                Domain::Boxoban => {
                    levels.extend(parse_boxoban(&text, alphabet, generator)?);
                }
                Domain::Mario => {
                    let mut grid = parse_mario(&text, alphabet)?;
                    grid.generator = generator.clone();
                    grid.id = format!(
                        "{generator}/{}",
                        file.file_stem().map_or_else(
                            || levels.len().to_string(),
                            |s| s.to_string_lossy().into_owned(),
                        )
                    );
                    if let Some(condensation) = condensation {
                        grid = condense_tiles(&grid, condensation)?;
                    }
                    levels.push(grid);
                }
            }
        }
        corpus.insert(generator.clone(), levels);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TileGroup;

    fn record(id: &str, rows: &[&str]) -> String {
        let mut s = format!("; {id}\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn walled_rows() -> Vec<String> {
        let mut rows = vec!["##########".to_string()];
        for _ in 0..8 {
            rows.push("#        #".to_string());
        }
        rows.push("##########".to_string());
        rows
    }

    #[test]
    fn parses_one_record() {
        let rows = walled_rows();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let text = record("0", &refs);
        let levels = parse_boxoban(&text, &TileAlphabet::boxoban(), "medium").unwrap();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].height(), 10);
        assert_eq!(levels[0].width(), 10);
        assert_eq!(levels[0].generator, "medium");
        assert_eq!(levels[0].id, "medium/0");
    }

    #[test]
    fn empty_text_yields_no_levels() {
        let levels = parse_boxoban("", &TileAlphabet::boxoban(), "medium").unwrap();
        assert!(levels.is_empty());
    }

    #[test]
    fn short_row_is_malformed() {
        let mut rows = walled_rows();
        rows[3] = "#       #".to_string(); // 9 characters
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let err = parse_boxoban(&record("0", &refs), &TileAlphabet::boxoban(), "m").unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));
    }

    #[test]
    fn unknown_tile_reports_position() {
        let mut rows = walled_rows();
        rows[2] = "#   z    #".to_string();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let err = parse_boxoban(&record("0", &refs), &TileAlphabet::boxoban(), "m").unwrap_err();
        match err {
            CorpusError::UnknownTile { ch, line, col } => {
                assert_eq!(ch, 'z');
                assert_eq!(line, 4); // header + two rows before it
                assert_eq!(col, 5);
            }
            other => panic!("expected UnknownTile, got {other:?}"),
        }
    }

    #[test]
    fn record_order_is_preserved() {
        let rows = walled_rows();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let text = format!("{}\n{}", record("7", &refs), record("3", &refs));
        let levels = parse_boxoban(&text, &TileAlphabet::boxoban(), "hard").unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].id, "hard/7");
        assert_eq!(levels[1].id, "hard/3");
    }

    #[test]
    fn mario_level_has_fixed_dimensions() {
        let line = "-".repeat(100);
        let text = vec![line.as_str(); 16].join("\n");
        let grid = parse_mario(&text, &TileAlphabet::mario_raw()).unwrap();
        assert_eq!(grid.height(), 16);
        assert_eq!(grid.width(), 100);
    }

    #[test]
    fn mario_wrong_line_count_is_malformed() {
        let line = "-".repeat(100);
        let text = vec![line.as_str(); 15].join("\n");
        let err = parse_mario(&text, &TileAlphabet::mario_raw()).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));
    }

    #[test]
    fn mario_unknown_tile_is_reported() {
        let mut lines = vec!["-".repeat(100); 16];
        lines[5].replace_range(10..11, "~");
        let text = lines.join("\n");
        let err = parse_mario(&text, &TileAlphabet::mario_raw()).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownTile { ch: '~', .. }));
    }

    #[test]
    fn spawn_and_finish_condense_to_empty() {
        let mut lines = vec!["-".repeat(100); 16];
        lines[0] = format!("M{}F", "-".repeat(98));
        let grid = parse_mario(&lines.join("\n"), &TileAlphabet::mario_raw()).unwrap();
        let condensed = condense_tiles(&grid, &Condensation::mario_default()).unwrap();
        assert_eq!(condensed.height(), 16);
        assert_eq!(condensed.width(), 100);
        for r in 0..16 {
            for c in 0..100 {
                assert_eq!(condensed.group_at(r, c), TileGroup::Empty);
            }
        }
    }

    #[test]
    fn identity_condensation_is_identity() {
        let condensed_alphabet = TileAlphabet::mario_condensed();
        let identity = Condensation {
            mapping: condensed_alphabet
                .tiles()
                .iter()
                .map(|t| (t.name.clone(), t.name.clone()))
                .collect(),
            target: Arc::clone(&condensed_alphabet),
        };
        let grid = LevelGrid {
            cells: Array2::from_shape_fn((4, 6), |(r, c)| ((r + c) % 5) as u8),
            alphabet: condensed_alphabet,
            generator: "g".into(),
            id: "x".into(),
        };
        let out = condense_tiles(&grid, &identity).unwrap();
        assert_eq!(out.cells, grid.cells);
    }

    #[test]
    fn missing_mapping_entry_is_unmapped_tile() {
        let mut condensation = Condensation::mario_default();
        condensation.mapping.remove("goomba");
        let mut lines = vec!["-".repeat(100); 16];
        lines[8].replace_range(0..1, "g");
        let grid = parse_mario(&lines.join("\n"), &TileAlphabet::mario_raw()).unwrap();
        let err = condense_tiles(&grid, &condensation).unwrap_err();
        assert!(matches!(err, CorpusError::UnmappedTile { name } if name == "goomba"));
    }
}
