//! Layer primitives: 3x3 same-padding stride-1 convolution, 2x2 stride-2
//! ceil-mode max pooling, and dense layers, each with an explicit backward
//! pass. Convolution is evaluated as an im2col matrix product.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Kernel offsets in (row, col) order; the im2col column block for offset k
/// covers channels [k * c, (k + 1) * c).
const OFFSETS: [(isize, isize); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Lays out every 3x3 input patch (zero padded) as one row.
pub(crate) fn im2col_3x3(input: &Array3<f64>) -> Array2<f64> {
    let (h, w, c) = input.dim();
    let mut cols = Array2::zeros((h * w, 9 * c));
    for r in 0..h {
        for col in 0..w {
            let row_idx = r * w + col;
            for (k, &(dr, dc)) in OFFSETS.iter().enumerate() {
                let rr = r as isize + dr;
                let cc = col as isize + dc;
                if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                    cols.slice_mut(s![row_idx, k * c..(k + 1) * c])
                        .assign(&input.slice(s![rr as usize, cc as usize, ..]));
                }
            }
        }
    }
    cols
}

/// Scatter-adds patch-layout gradients back onto the input grid.
fn col2im_3x3(dcols: &ArrayView2<f64>, h: usize, w: usize, c: usize) -> Array3<f64> {
    let mut dx = Array3::zeros((h, w, c));
    for r in 0..h {
        for col in 0..w {
            let row_idx = r * w + col;
            for (k, &(dr, dc)) in OFFSETS.iter().enumerate() {
                let rr = r as isize + dr;
                let cc = col as isize + dc;
                if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                    let mut target = dx.slice_mut(s![rr as usize, cc as usize, ..]);
                    target += &dcols.slice(s![row_idx, k * c..(k + 1) * c]);
                }
            }
        }
    }
    dx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub filters: usize,
    /// Shape (9 * in_channels, filters).
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ConvLayer {
    /// Forward pass returning the im2col matrix and the post-ReLU output in
    /// (rows = h * w, filters) layout, both needed by the backward pass.
    pub(crate) fn forward_cols(
        &self,
        input: &Array3<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>), NetError> {
        let (_, _, c) = input.dim();
        if c != self.in_channels {
            return Err(NetError::ChannelMismatch {
                expected: self.in_channels,
                found: c,
            });
        }
        let cols = im2col_3x3(input);
        let mut out = cols.dot(&self.weight);
        out += &self.bias;
        out.mapv_inplace(|v| v.max(0.0));
        Ok((cols, out))
    }

    /// Backward pass. `grad_out` is the loss gradient w.r.t. the post-ReLU
    /// output in (h * w, filters) layout; parameter gradients accumulate into
    /// `dw`/`db` and the input gradient is returned.
    pub(crate) fn backward_cols(
        &self,
        cols: &Array2<f64>,
        out: &Array2<f64>,
        grad_out: &Array2<f64>,
        spatial: (usize, usize),
        dw: &mut Array2<f64>,
        db: &mut Array1<f64>,
    ) -> Array3<f64> {
        let mut gated = grad_out.clone();
        Zip::from(&mut gated).and(out).for_each(|g, &o| {
            if o <= 0.0 {
                *g = 0.0;
            }
        });
        *db += &gated.sum_axis(Axis(0));
        general_mat_mul(1.0, &cols.t(), &gated, 1.0, dw);
        let dcols = gated.dot(&self.weight.t());
        col2im_3x3(&dcols.view(), spatial.0, spatial.1, self.in_channels)
    }
}

/// 3x3 stride-1 same-padding convolution with ReLU; spatial dimensions are
/// preserved and the channel count becomes the filter count.
pub fn conv_forward(layer: &ConvLayer, input: &Array3<f64>) -> Result<Array3<f64>, NetError> {
    let (h, w, _) = input.dim();
    let (_, out) = layer.forward_cols(input)?;
    Ok(out
        .into_shape_with_order((h, w, layer.filters))
        .expect("row count equals h * w"))
}

/// 2x2 stride-2 ceil-mode max pooling; trailing odd rows/columns pool over
/// the cells that exist, so a dimension of 1 stays 1. Returns the pooled
/// tensor and the flat (row * width + col) argmax per output cell.
pub(crate) fn maxpool_forward_argmax(input: &Array3<f64>) -> (Array3<f64>, Vec<u32>) {
    let (h, w, c) = input.dim();
    let oh = h.div_ceil(2);
    let ow = w.div_ceil(2);
    let mut out = Array3::zeros((oh, ow, c));
    let mut argmax = vec![0u32; oh * ow * c];
    for or in 0..oh {
        for oc in 0..ow {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0u32;
                for r in (2 * or)..(2 * or + 2).min(h) {
                    for col in (2 * oc)..(2 * oc + 2).min(w) {
                        let v = input[[r, col, ch]];
                        if v > best {
                            best = v;
                            arg = (r * w + col) as u32;
                        }
                    }
                }
                out[[or, oc, ch]] = best;
                argmax[(or * ow + oc) * c + ch] = arg;
            }
        }
    }
    (out, argmax)
}

/// Max pooling without the argmax record.
pub fn maxpool_forward(input: &Array3<f64>) -> Array3<f64> {
    maxpool_forward_argmax(input).0
}

/// Routes pooled gradients back to the recorded argmax positions.
pub(crate) fn maxpool_backward(
    grad_out: &Array3<f64>,
    argmax: &[u32],
    in_shape: (usize, usize, usize),
) -> Array3<f64> {
    let (_, w, _) = in_shape;
    let (oh, ow, c) = grad_out.dim();
    let mut dx = Array3::zeros(in_shape);
    for or in 0..oh {
        for oc in 0..ow {
            for ch in 0..c {
                let flat = argmax[(or * ow + oc) * c + ch] as usize;
                dx[[flat / w, flat % w, ch]] += grad_out[[or, oc, ch]];
            }
        }
    }
    dx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Shape (inputs, units).
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub(crate) fn forward_vec(&self, input: &Array1<f64>) -> Result<Array1<f64>, NetError> {
        if input.len() != self.weight.nrows() {
            return Err(NetError::ShapeMismatch(format!(
                "dense layer expects {} inputs, found {}",
                self.weight.nrows(),
                input.len()
            )));
        }
        let mut out = input.dot(&self.weight) + &self.bias;
        if self.activation == Activation::Relu {
            out.mapv_inplace(|v| v.max(0.0));
        }
        Ok(out)
    }

    pub(crate) fn backward_vec(
        &self,
        input: &Array1<f64>,
        out: &Array1<f64>,
        grad_out: &Array1<f64>,
        dw: &mut Array2<f64>,
        db: &mut Array1<f64>,
    ) -> Array1<f64> {
        let mut gated = grad_out.clone();
        if self.activation == Activation::Relu {
            Zip::from(&mut gated).and(out).for_each(|g, &o| {
                if o <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        *db += &gated;
        let x_col = input.view().insert_axis(Axis(1));
        let g_row = gated.view().insert_axis(Axis(0));
        general_mat_mul(1.0, &x_col, &g_row, 1.0, dw);
        self.weight.dot(&gated)
    }
}

/// Affine map plus activation: activation(W^T x + b).
pub fn dense_forward(layer: &DenseLayer, input: &Array1<f64>) -> Result<Array1<f64>, NetError> {
    layer.forward_vec(input)
}
