//! Parsed levels and their one-hot encodings.

use std::sync::Arc;

use ndarray::{Array2, Array3};

use super::{TileAlphabet, TileGroup};

/// A parsed level: a rectangular matrix of tile indices into its alphabet,
/// plus a generator label and corpus-unique id.
#[derive(Debug, Clone)]
pub struct LevelGrid {
    pub cells: Array2<u8>,
    pub alphabet: Arc<TileAlphabet>,
    pub generator: String,
    pub id: String,
}

impl LevelGrid {
    pub fn height(&self) -> usize {
        self.cells.nrows()
    }

    pub fn width(&self) -> usize {
        self.cells.ncols()
    }

    pub fn tile_index(&self, row: usize, col: usize) -> usize {
        self.cells[[row, col]] as usize
    }

    pub fn group_at(&self, row: usize, col: usize) -> TileGroup {
        self.alphabet.group(self.tile_index(row, col))
    }

    /// Renders the grid back to its character representation, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.height() * (self.width() + 1));
        for row in self.cells.rows() {
            for &cell in row {
                out.push(self.alphabet.tile(cell as usize).ch);
            }
            out.push('\n');
        }
        out
    }
}

/// One-hot encoding of a level: shape (height, width, channels) with exactly
/// one 1.0 per cell, channel index = tile index.
#[derive(Debug, Clone)]
pub struct OneHotTensor {
    pub data: Array3<f64>,
}

impl OneHotTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    /// Row-major flattening (row, column, channel), the layout fed to
    /// direct-PCA baselines.
    pub fn flatten(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }
}

/// Encodes a level into its one-hot tensor over the level's own alphabet.
pub fn one_hot_encode(grid: &LevelGrid) -> OneHotTensor {
    let (h, w) = (grid.height(), grid.width());
    let channels = grid.alphabet.len();
    let mut data = Array3::zeros((h, w, channels));
    for ((r, c), &cell) in grid.cells.indexed_iter() {
        data[[r, c, cell as usize]] = 1.0;
    }
    OneHotTensor { data }
}

/// Decodes a one-hot tensor back to tile indices by per-cell argmax.
pub fn one_hot_decode(tensor: &OneHotTensor) -> Array2<u8> {
    let (h, w, channels) = tensor.shape();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let mut best = 0usize;
        for k in 1..channels {
            if tensor.data[[r, c, k]] > tensor.data[[r, c, best]] {
                best = k;
            }
        }
        best as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn grid_from_cells(cells: Array2<u8>) -> LevelGrid {
        LevelGrid {
            cells,
            alphabet: TileAlphabet::boxoban(),
            generator: "test".into(),
            id: "t0".into(),
        }
    }

    #[test]
    fn boxoban_encoding_has_five_channels() {
        let grid = grid_from_cells(Array2::zeros((10, 10)));
        let tensor = one_hot_encode(&grid);
        assert_eq!(tensor.shape(), (10, 10, 5));
    }

    #[test]
    fn single_cell_sets_exactly_its_channel() {
        let grid = grid_from_cells(array![[2u8]]);
        let tensor = one_hot_encode(&grid);
        for k in 0..5 {
            let expected = if k == 2 { 1.0 } else { 0.0 };
            assert_eq!(tensor.data[[0, 0, k]], expected);
        }
    }

    #[test]
    fn flatten_is_row_major() {
        let grid = grid_from_cells(array![[0u8, 1u8]]);
        let flat = one_hot_encode(&grid).flatten();
        assert_eq!(flat.len(), 10);
        assert_eq!(flat[0], 1.0); // (0,0) channel 0
        assert_eq!(flat[5 + 1], 1.0); // (0,1) channel 1
    }
}
