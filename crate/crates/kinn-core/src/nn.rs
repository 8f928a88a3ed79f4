//! Dense feed-forward networks on a single scalar input, plus Adam.
//!
//! Weights are stored flat, layer by layer, each layer row-major with the
//! bias as a trailing column (the input is augmented with a constant 1).

use alloc::vec::Vec;
use alloc::{format, vec};

use rand::Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Tanh,
    Swish,
    Linear,
}

impl Activation {
    #[inline(always)]
    pub fn apply(self, x: Dual) -> Dual {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Swish => x.swish(),
            Activation::Linear => x,
        }
    }
}

/// Layer widths (input first) and one activation per non-input layer.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl NetSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>) -> NetSpec {
        assert!(widths.len() >= 2, "need at least input and output layers");
        assert_eq!(widths[0], 1, "input width is always 1 (time)");
        assert!(widths.iter().all(|&w| w > 0), "widths must be positive");
        assert_eq!(activations.len(), widths.len() - 1);
        assert_eq!(
            *activations.last().unwrap(),
            Activation::Linear,
            "output layer is affine-linear"
        );
        NetSpec {
            widths,
            activations,
        }
    }

    /// Three hidden layers with the standard tanh/swish/tanh stack.
    pub fn standard(hidden: [usize; 3], out: usize) -> NetSpec {
        NetSpec::new(
            vec![1, hidden[0], hidden[1], hidden[2], out],
            vec![
                Activation::Tanh,
                Activation::Swish,
                Activation::Tanh,
                Activation::Linear,
            ],
        )
    }

    /// Single swish hidden layer (the characteristic-time net).
    pub fn shallow(hidden: usize, out: usize) -> NetSpec {
        NetSpec::new(
            vec![1, hidden, out],
            vec![Activation::Swish, Activation::Linear],
        )
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// `(rows, cols)` of each layer's weight matrix, bias column excluded.
    pub fn layer_dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.widths.windows(2).map(|w| (w[1], w[0]))
    }

    /// Total number of weights including bias columns.
    pub fn n_weights(&self) -> usize {
        self.layer_dims().map(|(r, c)| r * (c + 1)).sum()
    }
}

/// Flat weight storage for one network.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeightTensor {
    pub spec: NetSpec,
    pub flat: Vec<f64>,
}

impl WeightTensor {
    pub fn zeros(spec: NetSpec) -> WeightTensor {
        let n = spec.n_weights();
        WeightTensor {
            spec,
            flat: vec![0.0; n],
        }
    }

    /// Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), biases at zero.
    pub fn glorot(spec: NetSpec, rng: &mut impl Rng) -> WeightTensor {
        let mut w = WeightTensor::zeros(spec);
        let mut offset = 0;
        let dims: Vec<(usize, usize)> = w.spec.layer_dims().collect();
        for (rows, cols) in dims {
            let limit = math::sqrt(6.0 / (rows + cols) as f64);
            for r in 0..rows {
                for c in 0..cols {
                    w.flat[offset + r * (cols + 1) + c] = rng.random_range(-limit..limit);
                }
            }
            offset += rows * (cols + 1);
        }
        w
    }

    pub fn from_flat(spec: NetSpec, flat: Vec<f64>) -> Result<WeightTensor, NnError> {
        if flat.len() != spec.n_weights() {
            return Err(NnError::ShapeMismatch {
                msg: format!("expected {} weights, got {}", spec.n_weights(), flat.len()),
            });
        }
        if let Some(i) = flat.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { index: i });
        }
        Ok(WeightTensor { spec, flat })
    }

    /// Nested per-layer rows, for readable checkpoints.
    pub fn layers(&self) -> Vec<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (rows, cols) in self.spec.layer_dims() {
            let mut layer = Vec::with_capacity(rows);
            for r in 0..rows {
                let start = offset + r * (cols + 1);
                layer.push(self.flat[start..start + cols + 1].to_vec());
            }
            out.push(layer);
            offset += rows * (cols + 1);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {msg}")]
    ShapeMismatch { msg: alloc::string::String },
    #[error("non-finite weight at flat index {index}")]
    NonFinite { index: usize },
}

/// Forward pass over dual numbers; feeding `Dual::time(t)` yields the exact
/// dy/dt in the tangent components.
pub fn forward_dual(spec: &NetSpec, flat: &[f64], input: Dual) -> Vec<Dual> {
    debug_assert_eq!(flat.len(), spec.n_weights());
    let mut cur = vec![input];
    let mut offset = 0;
    for (layer, (rows, cols)) in spec.layer_dims().enumerate() {
        let act = spec.activations[layer];
        let mut next = Vec::with_capacity(rows);
        for r in 0..rows {
            let base = offset + r * (cols + 1);
            let mut acc = Dual::constant(flat[base + cols]);
            for (c, x) in cur.iter().enumerate() {
                acc = acc + *x * flat[base + c];
            }
            next.push(act.apply(acc));
        }
        cur = next;
        offset += rows * (cols + 1);
    }
    cur
}

/// Plain forward evaluation `y(t)`.
pub fn forward(spec: &NetSpec, flat: &[f64], t: f64) -> Vec<f64> {
    forward_dual(spec, flat, Dual::constant(t))
        .into_iter()
        .map(|d| d.v)
        .collect()
}

/// Exact dy/dt via forward-mode differentiation of the recurrence.
pub fn time_derivative(spec: &NetSpec, flat: &[f64], t: f64) -> Vec<f64> {
    forward_dual(spec, flat, Dual::time(t))
        .into_iter()
        .map(|d| d.d)
        .collect()
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> AdamState {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// One bias-corrected update; deterministic.
    pub fn step(&mut self, weights: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(weights.len(), grad.len());
        debug_assert_eq!(weights.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - math::powi(self.beta1, self.step.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - math::powi(self.beta2, self.step.min(i32::MAX as u64) as i32);
        for i in 0..weights.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            weights[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_zero_output() {
        let spec = NetSpec::standard([4, 4, 4], 2);
        let w = WeightTensor::zeros(spec.clone());
        assert_eq!(forward(&spec, &w.flat, 1.3), vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_layer() {
        let spec = NetSpec::new(vec![1, 1], vec![Activation::Linear]);
        // weight 2, bias 3
        let flat = vec![2.0, 3.0];
        assert_eq!(forward(&spec, &flat, 1.0), vec![5.0]);
        assert_eq!(time_derivative(&spec, &flat, 7.0), vec![2.0]);
    }

    #[test]
    fn hand_computed_tanh_net() {
        // 1-2-1: h = tanh(w1 t + b1), y = w2 . h + b2
        let spec = NetSpec::new(vec![1, 2, 1], vec![Activation::Tanh, Activation::Linear]);
        let flat = vec![
            0.7, -0.2, // h0 row
            -1.1, 0.4, // h1 row
            0.5, -0.3, 0.9, // output row incl bias
        ];
        let t = 0.8;
        let h0 = math::tanh(0.7 * t - 0.2);
        let h1 = math::tanh(-1.1 * t + 0.4);
        let want = 0.5 * h0 - 0.3 * h1 + 0.9;
        let got = forward(&spec, &flat, t)[0];
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn time_derivative_matches_finite_difference() {
        let spec = NetSpec::new(
            vec![1, 5, 5, 5, 3],
            vec![
                Activation::Tanh,
                Activation::Swish,
                Activation::Tanh,
                Activation::Linear,
            ],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WeightTensor::glorot(spec.clone(), &mut rng);
        let t = 0.6;
        let h = 1e-5;
        let d = time_derivative(&spec, &w.flat, t);
        let hi = forward(&spec, &w.flat, t + h);
        let lo = forward(&spec, &w.flat, t - h);
        for i in 0..3 {
            let fd = (hi[i] - lo[i]) / (2.0 * h);
            let rel = (d[i] - fd).abs() / d[i].abs().max(1e-12);
            assert!(rel < 1e-6, "component {i}: {} vs {fd}", d[i]);
        }
    }

    #[test]
    fn constant_net_has_zero_time_derivative() {
        let spec = NetSpec::new(vec![1, 3, 2], vec![Activation::Tanh, Activation::Linear]);
        let mut w = WeightTensor::zeros(spec.clone());
        // biases only: output constant in t
        w.flat[1] = 0.3;
        w.flat[3] = -0.2;
        w.flat[5] = 0.7;
        let d = time_derivative(&spec, &w.flat, 2.2);
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut st = AdamState::new(3, 1e-3);
        let mut w = vec![1.0, -2.0, 0.5];
        st.step(&mut w, &[0.0, 0.0, 0.0]);
        assert_eq!(w, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn adam_first_step_magnitude_and_sign() {
        let mut st = AdamState::new(2, 1e-2);
        let mut w = vec![0.0, 0.0];
        let g = [3.0, -0.25];
        st.step(&mut w, &g);
        for (wi, gi) in w.iter().zip(&g) {
            // bias-corrected first step is lr * g/(|g| + eps') ~ lr * sign(g)
            assert!((wi.abs() - 1e-2).abs() < 1e-6, "|update| {}", wi.abs());
            assert_eq!(wi.signum(), -gi.signum());
        }
    }

    #[test]
    fn adam_converges_on_quadratic() {
        let mut st = AdamState::new(1, 1e-2);
        let mut w = vec![0.0];
        for _ in 0..10_000 {
            let g = 2.0 * (w[0] - 3.0);
            st.step(&mut w, &[g]);
        }
        assert!((w[0] - 3.0).abs() < 1e-3, "w = {}", w[0]);
    }

    #[test]
    fn glorot_is_seed_deterministic_and_bounded() {
        let spec = NetSpec::standard([5, 5, 5], 3);
        let a = WeightTensor::glorot(spec.clone(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = WeightTensor::glorot(spec.clone(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.flat, b.flat);
        let limit = math::sqrt(6.0 / 6.0) + 1e-12;
        assert!(a.flat.iter().all(|v| v.abs() <= limit));
    }
}
