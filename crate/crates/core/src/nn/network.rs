//! Networks: architecture expansion, seeded initialization, cached forward
//! passes, and backpropagation.

use ndarray::{Array1, Array2, Array3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::layers::{
    maxpool_backward, maxpool_forward_argmax, Activation, ConvLayer, DenseLayer,
};
use super::train::TargetNormalizer;
use super::NetError;
use crate::seeding::{stream_rng, STREAM_INIT};

/// One layer of an architecture. Convolutions are fixed at 3x3 kernels,
/// stride 1, same padding, ReLU; pooling at 2x2, stride 2, ceil mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv { filters: usize },
    MaxPool,
    Flatten,
    Dense { units: usize, activation: Activation },
}

/// The two named architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Basic,
    Vgg16,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Basic => "basic",
            Architecture::Vgg16 => "vgg16",
        }
    }

    /// Expands to the layer stack, ending in a linear output layer of
    /// `output_count` units.
    pub fn layer_specs(self, output_count: usize) -> Vec<LayerSpec> {
        use LayerSpec::*;
        let relu_dense = |units| Dense {
            units,
            activation: Activation::Relu,
        };
        let mut specs = match self {
            Architecture::Basic => vec![
                Conv { filters: 32 },
                MaxPool,
                Conv { filters: 64 },
                MaxPool,
                Conv { filters: 64 },
                Flatten,
                relu_dense(64),
            ],
            Architecture::Vgg16 => vec![
                Conv { filters: 64 },
                Conv { filters: 64 },
                MaxPool,
                Conv { filters: 128 },
                Conv { filters: 128 },
                MaxPool,
                Conv { filters: 256 },
                Conv { filters: 256 },
                Conv { filters: 256 },
                MaxPool,
                Conv { filters: 512 },
                Conv { filters: 512 },
                Conv { filters: 512 },
                MaxPool,
                Conv { filters: 512 },
                Conv { filters: 512 },
                Conv { filters: 512 },
                MaxPool,
                Flatten,
                relu_dense(4096),
                relu_dense(4096),
                relu_dense(1000),
            ],
        };
        specs.push(Dense {
            units: output_count,
            activation: Activation::Linear,
        });
        specs
    }
}

/// Shape of the value flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Spatial(usize, usize, usize),
    Flat(usize),
}

/// Computes the output shape after each layer. Total for every valid spec
/// list; errors identify the offending layer.
pub fn layer_output_shapes(
    specs: &[LayerSpec],
    input_shape: (usize, usize, usize),
) -> Result<Vec<Shape>, NetError> {
    let (h, w, c) = input_shape;
    if h == 0 || w == 0 || c == 0 {
        return Err(NetError::ShapeUnderflow {
            layer: 0,
            detail: format!("input shape {input_shape:?} has a zero dimension"),
        });
    }
    let mut current = Shape::Spatial(h, w, c);
    let mut shapes = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        current = match (*spec, current) {
            (LayerSpec::Conv { filters }, Shape::Spatial(h, w, _)) => Shape::Spatial(h, w, filters),
            (LayerSpec::MaxPool, Shape::Spatial(h, w, c)) => {
                let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
                if oh == 0 || ow == 0 {
                    return Err(NetError::ShapeUnderflow {
                        layer: i,
                        detail: format!("pooling {h}x{w} underflows"),
                    });
                }
                Shape::Spatial(oh, ow, c)
            }
            (LayerSpec::Flatten, Shape::Spatial(h, w, c)) => Shape::Flat(h * w * c),
            (LayerSpec::Dense { units, .. }, Shape::Flat(_)) => Shape::Flat(units),
            (spec, shape) => {
                return Err(NetError::InvalidConfig(format!(
                    "layer {i} ({spec:?}) cannot follow a {shape:?} value"
                )))
            }
        };
        shapes.push(current);
    }
    Ok(shapes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) enum Layer {
    Conv(ConvLayer),
    MaxPool,
    Flatten,
    Dense(DenseLayer),
}

/// A trainable network: parameterized layers, Adam state, and the target
/// normalizer fitted during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub architecture: String,
    pub input_shape: (usize, usize, usize),
    pub(crate) layers: Vec<Layer>,
    pub(crate) adam: AdamState,
    pub normalizer: Option<TargetNormalizer>,
}

fn he_normal(
    rows: usize,
    cols: usize,
    fan_in: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Array2<f64> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    Array2::from_shape_fn((rows, cols), |_| normal.sample(rng))
}

impl Network {
    /// Instantiates a layer stack with fan-in-scaled normal weights and zero
    /// biases, drawn deterministically from `seed`.
    pub fn new(
        architecture: &str,
        specs: &[LayerSpec],
        input_shape: (usize, usize, usize),
        seed: u64,
    ) -> Result<Self, NetError> {
        let shapes = layer_output_shapes(specs, input_shape)?;
        let mut rng = stream_rng(seed, STREAM_INIT);
        let mut layers = Vec::with_capacity(specs.len());
        let mut current = Shape::Spatial(input_shape.0, input_shape.1, input_shape.2);
        for (spec, &next) in specs.iter().zip(&shapes) {
            let layer = match (*spec, current) {
                (LayerSpec::Conv { filters }, Shape::Spatial(_, _, c)) => {
                    let fan_in = 9 * c;
                    Layer::Conv(ConvLayer {
                        in_channels: c,
                        filters,
                        weight: he_normal(9 * c, filters, fan_in, &mut rng),
                        bias: Array1::zeros(filters),
                    })
                }
                (LayerSpec::MaxPool, _) => Layer::MaxPool,
                (LayerSpec::Flatten, _) => Layer::Flatten,
                (LayerSpec::Dense { units, activation }, Shape::Flat(n)) => {
                    Layer::Dense(DenseLayer {
                        weight: he_normal(n, units, n, &mut rng),
                        bias: Array1::zeros(units),
                        activation,
                    })
                }
                _ => unreachable!("layer_output_shapes validated the chain"),
            };
            layers.push(layer);
            current = next;
        }
        let adam = AdamState::for_layers(&layers);
        Ok(Self {
            architecture: architecture.to_string(),
            input_shape,
            layers,
            adam,
            normalizer: None,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Width of the output layer.
    pub fn output_count(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Dense(d)) => d.bias.len(),
            _ => 0,
        }
    }

    /// Parameters of layer `i`, if it has any.
    pub fn layer_params(&self, i: usize) -> Option<(&Array2<f64>, &Array1<f64>)> {
        match &self.layers[i] {
            Layer::Conv(l) => Some((&l.weight, &l.bias)),
            Layer::Dense(l) => Some((&l.weight, &l.bias)),
            _ => None,
        }
    }

    pub fn layer_params_mut(&mut self, i: usize) -> Option<(&mut Array2<f64>, &mut Array1<f64>)> {
        match &mut self.layers[i] {
            Layer::Conv(l) => Some((&mut l.weight, &mut l.bias)),
            Layer::Dense(l) => Some((&mut l.weight, &mut l.bias)),
            _ => None,
        }
    }

    pub fn parameter_count(&self) -> usize {
        (0..self.layers.len())
            .filter_map(|i| self.layer_params(i))
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    fn check_input(&self, input: &Array3<f64>) -> Result<(), NetError> {
        if input.dim() != self.input_shape {
            return Err(NetError::ShapeMismatch(format!(
                "network expects input shape {:?}, found {:?}",
                self.input_shape,
                input.dim()
            )));
        }
        Ok(())
    }

    fn run_layers(&self, input: &Array3<f64>, upto: usize) -> Result<Value, NetError> {
        self.check_input(input)?;
        let mut value = Value::Spatial(input.clone());
        for layer in &self.layers[..upto] {
            value = match (layer, value) {
                (Layer::Conv(conv), Value::Spatial(x)) => {
                    let (h, w, _) = x.dim();
                    let (_, out) = conv.forward_cols(&x)?;
                    Value::Spatial(
                        out.into_shape_with_order((h, w, conv.filters))
                            .expect("consistent size"),
                    )
                }
                (Layer::MaxPool, Value::Spatial(x)) => {
                    Value::Spatial(maxpool_forward_argmax(&x).0)
                }
                (Layer::Flatten, Value::Spatial(x)) => {
                    let len = x.len();
                    Value::Flat(
                        x.into_shape_with_order(len)
                            .expect("standard layout flattens in place"),
                    )
                }
                (Layer::Dense(dense), Value::Flat(x)) => Value::Flat(dense.forward_vec(&x)?),
                (layer, value) => {
                    return Err(NetError::ShapeMismatch(format!(
                        "{layer:?} cannot consume a {} value",
                        value.kind()
                    )))
                }
            };
        }
        Ok(value)
    }

    /// Full forward pass to the output vector.
    pub fn forward(&self, input: &Array3<f64>) -> Result<Array1<f64>, NetError> {
        match self.run_layers(input, self.layers.len())? {
            Value::Flat(v) => Ok(v),
            Value::Spatial(_) => Err(NetError::ShapeMismatch(
                "network does not end in a dense layer".into(),
            )),
        }
    }

    /// Post-activation output of the layer just before the output layer.
    pub fn penultimate_activation(&self, input: &Array3<f64>) -> Result<Array1<f64>, NetError> {
        if self.layers.len() < 2 {
            return Err(NetError::InvalidConfig(
                "network has no penultimate layer".into(),
            ));
        }
        match self.run_layers(input, self.layers.len() - 1)? {
            Value::Flat(v) => Ok(v),
            Value::Spatial(_) => Err(NetError::ShapeMismatch(
                "penultimate layer output is not a vector".into(),
            )),
        }
    }

    /// Forward pass that records everything the backward pass needs.
    pub fn forward_cached(&self, input: &Array3<f64>) -> Result<ForwardCache, NetError> {
        self.check_input(input)?;
        let mut entries = Vec::with_capacity(self.layers.len());
        let mut value = Value::Spatial(input.clone());
        for layer in &self.layers {
            value = match (layer, value) {
                (Layer::Conv(conv), Value::Spatial(x)) => {
                    let (h, w, c) = x.dim();
                    let (cols, out) = conv.forward_cols(&x)?;
                    let next = out
                        .clone()
                        .into_shape_with_order((h, w, conv.filters))
                        .expect("consistent size");
                    entries.push(CacheEntry::Conv {
                        cols,
                        out,
                        in_shape: (h, w, c),
                    });
                    Value::Spatial(next)
                }
                (Layer::MaxPool, Value::Spatial(x)) => {
                    let in_shape = x.dim();
                    let (out, argmax) = maxpool_forward_argmax(&x);
                    entries.push(CacheEntry::Pool { argmax, in_shape });
                    Value::Spatial(out)
                }
                (Layer::Flatten, Value::Spatial(x)) => {
                    let in_shape = x.dim();
                    let len = x.len();
                    entries.push(CacheEntry::Flatten { in_shape });
                    Value::Flat(x.into_shape_with_order(len).expect("standard layout"))
                }
                (Layer::Dense(dense), Value::Flat(x)) => {
                    let out = dense.forward_vec(&x)?;
                    entries.push(CacheEntry::Dense {
                        input: x,
                        out: out.clone(),
                    });
                    Value::Flat(out)
                }
                (layer, value) => {
                    return Err(NetError::ShapeMismatch(format!(
                        "{layer:?} cannot consume a {} value",
                        value.kind()
                    )))
                }
            };
        }
        match value {
            Value::Flat(output) => Ok(ForwardCache { entries, output }),
            Value::Spatial(_) => Err(NetError::ShapeMismatch(
                "network does not end in a dense layer".into(),
            )),
        }
    }

    /// Fresh zero gradients shaped like this network's parameters.
    pub fn zero_gradients(&self) -> Gradients {
        let entries = self
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Conv(l) => Some(GradEntry {
                    dw: Array2::zeros(l.weight.dim()),
                    db: Array1::zeros(l.bias.len()),
                }),
                Layer::Dense(l) => Some(GradEntry {
                    dw: Array2::zeros(l.weight.dim()),
                    db: Array1::zeros(l.bias.len()),
                }),
                _ => None,
            })
            .collect();
        Gradients { entries }
    }

    /// Backpropagates `grad_output` through the cached forward pass,
    /// accumulating parameter gradients into `grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_output: &Array1<f64>,
        grads: &mut Gradients,
    ) -> Result<(), NetError> {
        if cache.entries.len() != self.layers.len() {
            return Err(NetError::StaleCache(format!(
                "cache holds {} layers, network has {}",
                cache.entries.len(),
                self.layers.len()
            )));
        }
        if grads.entries.len() != self.layers.len() {
            return Err(NetError::ShapeMismatch(
                "gradient buffer does not match network".into(),
            ));
        }
        if grad_output.len() != cache.output.len() {
            return Err(NetError::ShapeMismatch(format!(
                "loss gradient has {} elements, output has {}",
                grad_output.len(),
                cache.output.len()
            )));
        }
        let mut grad = Value::Flat(grad_output.clone());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let entry = &cache.entries[i];
            grad = match (layer, entry, grad) {
                (Layer::Conv(conv), CacheEntry::Conv { cols, out, in_shape }, Value::Spatial(g)) => {
                    let (h, w, f) = g.dim();
                    if (h, w) != (in_shape.0, in_shape.1) || f != conv.filters {
                        return Err(NetError::StaleCache(format!(
                            "conv gradient shape {:?} does not match cache",
                            (h, w, f)
                        )));
                    }
                    let g2 = g
                        .into_shape_with_order((h * w, f))
                        .expect("standard layout");
                    let slot = grads.entries[i].as_mut().expect("conv layer has gradients");
                    let dx = conv.backward_cols(cols, out, &g2, (in_shape.0, in_shape.1), &mut slot.dw, &mut slot.db);
                    Value::Spatial(dx)
                }
                (Layer::MaxPool, CacheEntry::Pool { argmax, in_shape }, Value::Spatial(g)) => {
                    Value::Spatial(maxpool_backward(&g, argmax, *in_shape))
                }
                (Layer::Flatten, CacheEntry::Flatten { in_shape }, Value::Flat(g)) => {
                    Value::Spatial(
                        g.into_shape_with_order(*in_shape)
                            .map_err(|_| NetError::StaleCache("flatten shape mismatch".into()))?,
                    )
                }
                (Layer::Dense(dense), CacheEntry::Dense { input, out }, Value::Flat(g)) => {
                    let slot = grads.entries[i].as_mut().expect("dense layer has gradients");
                    Value::Flat(dense.backward_vec(input, out, &g, &mut slot.dw, &mut slot.db))
                }
                _ => {
                    return Err(NetError::StaleCache(
                        "cache entries do not line up with network layers".into(),
                    ))
                }
            };
        }
        Ok(())
    }

    /// Backward pass returning fresh gradients.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &Array1<f64>,
    ) -> Result<Gradients, NetError> {
        let mut grads = self.zero_gradients();
        self.backward_into(cache, grad_output, &mut grads)?;
        Ok(grads)
    }
}

pub(crate) enum Value {
    Spatial(Array3<f64>),
    Flat(Array1<f64>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Spatial(_) => "spatial",
            Value::Flat(_) => "flat",
        }
    }
}

/// Activations and index records from one forward pass, consumed by
/// [`Network::backward`].
pub struct ForwardCache {
    entries: Vec<CacheEntry>,
    pub output: Array1<f64>,
}

pub(crate) enum CacheEntry {
    Conv {
        cols: Array2<f64>,
        out: Array2<f64>,
        in_shape: (usize, usize, usize),
    },
    Pool {
        argmax: Vec<u32>,
        in_shape: (usize, usize, usize),
    },
    Flatten {
        in_shape: (usize, usize, usize),
    },
    Dense {
        input: Array1<f64>,
        out: Array1<f64>,
    },
}

/// Per-layer parameter gradients, shaped like the network's parameters.
#[derive(Debug)]
pub struct Gradients {
    pub(crate) entries: Vec<Option<GradEntry>>,
}

#[derive(Debug)]
pub(crate) struct GradEntry {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

impl Gradients {
    pub fn layer_grads(&self, i: usize) -> Option<(&Array2<f64>, &Array1<f64>)> {
        self.entries[i].as_ref().map(|g| (&g.dw, &g.db))
    }

    /// True when every gradient element is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|g| {
            g.dw.iter().all(|&v| v == 0.0) && g.db.iter().all(|&v| v == 0.0)
        })
    }
}
