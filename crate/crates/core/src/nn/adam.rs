//! Adam optimizer with bias correction.

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::network::{Gradients, Layer, Network};
use super::NetError;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct AdamSlot {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

/// Per-parameter first/second moment arrays plus the shared step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct AdamState {
    step: u64,
    slots: Vec<Option<AdamSlot>>,
}

impl AdamState {
    pub(crate) fn for_layers(layers: &[Layer]) -> Self {
        let slots = layers
            .iter()
            .map(|layer| match layer {
                Layer::Conv(l) => Some(AdamSlot {
                    m_w: Array2::zeros(l.weight.dim()),
                    v_w: Array2::zeros(l.weight.dim()),
                    m_b: Array1::zeros(l.bias.len()),
                    v_b: Array1::zeros(l.bias.len()),
                }),
                Layer::Dense(l) => Some(AdamSlot {
                    m_w: Array2::zeros(l.weight.dim()),
                    v_w: Array2::zeros(l.weight.dim()),
                    m_b: Array1::zeros(l.bias.len()),
                    v_b: Array1::zeros(l.bias.len()),
                }),
                _ => None,
            })
            .collect();
        Self { step: 0, slots }
    }

    pub(crate) fn step_count(&self) -> u64 {
        self.step
    }
}

fn update_matrix(
    param: &mut Array2<f64>,
    grad: &Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    lr: f64,
    corr1: f64,
    corr2: f64,
) {
    Zip::from(param)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        });
}

fn update_vector(
    param: &mut Array1<f64>,
    grad: &Array1<f64>,
    m: &mut Array1<f64>,
    v: &mut Array1<f64>,
    lr: f64,
    corr1: f64,
    corr2: f64,
) {
    Zip::from(param)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        });
}

/// One Adam update (beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8, bias
/// correction); increments the step counter.
pub fn adam_step(
    network: &mut Network,
    grads: &Gradients,
    learning_rate: f64,
) -> Result<(), NetError> {
    if grads.entries.len() != network.layers.len() {
        return Err(NetError::ShapeMismatch(
            "gradients do not match network layers".into(),
        ));
    }
    network.adam.step += 1;
    let t = network.adam.step;
    let corr1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let corr2 = 1.0 - ADAM_BETA2.powi(t as i32);
    for (i, layer) in network.layers.iter_mut().enumerate() {
        let Some(grad) = grads.entries[i].as_ref() else {
            continue;
        };
        let slot = network.adam.slots[i]
            .as_mut()
            .expect("optimizer state mirrors parameters");
        match layer {
            Layer::Conv(l) => {
                update_matrix(&mut l.weight, &grad.dw, &mut slot.m_w, &mut slot.v_w, learning_rate, corr1, corr2);
                update_vector(&mut l.bias, &grad.db, &mut slot.m_b, &mut slot.v_b, learning_rate, corr1, corr2);
            }
            Layer::Dense(l) => {
                update_matrix(&mut l.weight, &grad.dw, &mut slot.m_w, &mut slot.v_w, learning_rate, corr1, corr2);
                update_vector(&mut l.bias, &grad.db, &mut slot.m_b, &mut slot.v_b, learning_rate, corr1, corr2);
            }
            _ => unreachable!("gradient entries exist only for parameterized layers"),
        }
    }
    Ok(())
}
