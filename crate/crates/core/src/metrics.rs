//! Behavioural characteristics (BCs) of levels.
//!
//! Four per domain: Mario uses empty space, enemy count, linearity, and
//! density; Boxoban uses empty space, contiguity, adjusted contiguity, and
//! corridor count. All are pure functions of the tile grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LevelGrid, TileGroup};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
}

/// Game domain, which fixes the BC set and its order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Mario,
    Boxoban,
}

impl Domain {
    pub fn bc_names(self) -> [&'static str; 4] {
        match self {
            Domain::Mario => ["ES", "EC", "Lin", "Dens"],
            Domain::Boxoban => ["ES", "CS", "ACS", "CC"],
        }
    }

    fn expected_groups(self) -> &'static [TileGroup] {
        match self {
            Domain::Mario => &[
                TileGroup::Empty,
                TileGroup::Enemy,
                TileGroup::Solid,
                TileGroup::Pipe,
                TileGroup::Reward,
            ],
            Domain::Boxoban => &[
                TileGroup::Empty,
                TileGroup::Solid,
                TileGroup::Box,
                TileGroup::Goal,
                TileGroup::Player,
            ],
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Mario => write!(f, "mario"),
            Domain::Boxoban => write!(f, "boxoban"),
        }
    }
}

/// The ordered BC values of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct BCVector {
    pub domain: Domain,
    pub values: [f64; 4],
}

impl BCVector {
    pub fn names(&self) -> [&'static str; 4] {
        self.domain.bc_names()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names()
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }
}

/// Occupied groups for the structural Mario metrics.
const STRUCTURAL: [TileGroup; 3] = [TileGroup::Solid, TileGroup::Pipe, TileGroup::Reward];

fn count_group(grid: &LevelGrid, group: TileGroup) -> usize {
    grid.cells
        .iter()
        .filter(|&&c| grid.alphabet.group(c as usize) == group)
        .count()
}

/// Number of cells in the `empty` group.
pub fn empty_space(grid: &LevelGrid) -> usize {
    count_group(grid, TileGroup::Empty)
}

/// Number of cells in the `enemy` group. Requires an alphabet that has one.
pub fn enemy_count(grid: &LevelGrid) -> Result<usize, MetricsError> {
    if !grid.alphabet.has_group(TileGroup::Enemy) {
        return Err(MetricsError::DomainMismatch(
            "alphabet has no enemy group".into(),
        ));
    }
    Ok(count_group(grid, TileGroup::Enemy))
}

/// R-squared of an ordinary least-squares fit to per-column topmost
/// structural-tile heights, clamped to [0, 1]. Columns without structural
/// tiles are skipped; fewer than two usable columns or zero height variance
/// yield 1.
pub fn linearity(grid: &LevelGrid) -> f64 {
    let h = grid.height();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for col in 0..grid.width() {
        let top = (0..h).find(|&row| STRUCTURAL.contains(&grid.group_at(row, col)));
        if let Some(row) = top {
            xs.push(col as f64);
            ys.push((h - 1 - row) as f64); // altitude above the bottom row
        }
    }
    if xs.len() < 2 {
        return 1.0;
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if syy == 0.0 {
        return 1.0;
    }
    ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
}

/// Fraction of cells holding structural tiles (solid, pipe, or reward).
pub fn density(grid: &LevelGrid) -> f64 {
    let structural = grid
        .cells
        .iter()
        .filter(|&&c| STRUCTURAL.contains(&grid.alphabet.group(c as usize)))
        .count();
    structural as f64 / (grid.height() * grid.width()) as f64
}

fn is_solid(grid: &LevelGrid, row: usize, col: usize) -> bool {
    grid.group_at(row, col) == TileGroup::Solid
}

/// Number of solid cells with at least one 4-neighbour that is also solid.
/// Out-of-bounds cells are not neighbours.
pub fn contiguity(grid: &LevelGrid) -> usize {
    let (h, w) = (grid.height(), grid.width());
    let mut score = 0;
    for r in 0..h {
        for c in 0..w {
            if !is_solid(grid, r, c) {
                continue;
            }
            let adjacent = (r > 0 && is_solid(grid, r - 1, c))
                || (r + 1 < h && is_solid(grid, r + 1, c))
                || (c > 0 && is_solid(grid, r, c - 1))
                || (c + 1 < w && is_solid(grid, r, c + 1));
            if adjacent {
                score += 1;
            }
        }
    }
    score
}

/// Contiguity divided by the number of solid cells; 0 when there are none.
pub fn adjusted_contiguity(grid: &LevelGrid) -> f64 {
    let solid = count_group(grid, TileGroup::Solid);
    if solid == 0 {
        return 0.0;
    }
    contiguity(grid) as f64 / solid as f64
}

/// Number of non-solid cells open along exactly one axis. A move is open iff
/// the destination is in-bounds and not solid; grid borders are closed.
pub fn corridor_count(grid: &LevelGrid) -> usize {
    let (h, w) = (grid.height(), grid.width());
    let open = |r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && !is_solid(grid, r as usize, c as usize)
    };
    let mut count = 0;
    for r in 0..h as isize {
        for c in 0..w as isize {
            if is_solid(grid, r as usize, c as usize) {
                continue;
            }
            let ns = open(r - 1, c) || open(r + 1, c);
            let ew = open(r, c - 1) || open(r, c + 1);
            if ns != ew {
                count += 1;
            }
        }
    }
    count
}

/// Computes the domain's four BCs in their fixed order.
pub fn compute_bcs(grid: &LevelGrid, domain: Domain) -> Result<BCVector, MetricsError> {
    let groups = grid.alphabet.group_set();
    if groups != domain.expected_groups() {
        return Err(MetricsError::DomainMismatch(format!(
            "alphabet groups {groups:?} do not match the {domain} domain"
        )));
    }
    let values = match domain {
        Domain::Mario => [
            empty_space(grid) as f64,
            enemy_count(grid)? as f64,
            linearity(grid),
            density(grid),
        ],
        Domain::Boxoban => [
            empty_space(grid) as f64,
            contiguity(grid) as f64,
            adjusted_contiguity(grid),
            corridor_count(grid) as f64,
        ],
    };
    Ok(BCVector { domain, values })
}
