//! Surrogate approximators: gas/coverage nets composed with the Dirichlet
//! boundary-condition operator, the learned characteristic time, hypersphere
//! normalization and (for semiquantitative data) learned signal scaling.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::ad::{GraphBuilder, NodeId};
use crate::dual::Dual;
use crate::math;
use crate::network::ReactionNetwork;
use crate::nn::{self, NetSpec, WeightTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ScalingMode {
    #[default]
    None,
    Learned,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SurrogateConfig {
    pub gas_spec: NetSpec,
    /// Coverage net; output width is the number of bound species in raw mode
    /// or one less (the hypersphere angles) under normalization.
    pub coverage_spec: Option<NetSpec>,
    /// Characteristic-time net feeding the BC operator.
    pub kappa_spec: Option<NetSpec>,
    pub use_bc_operator: bool,
    pub use_normalization: bool,
    pub scaling_mode: ScalingMode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurrogateError {
    #[error("config/params mismatch: {msg}")]
    Mismatch { msg: String },
}

impl SurrogateConfig {
    /// Forward-problem configuration: BC operator with a learned
    /// characteristic time, raw coverage outputs, no normalization.
    pub fn forward_for(
        network: &ReactionNetwork,
        hidden: [usize; 3],
        kappa_hidden: usize,
    ) -> SurrogateConfig {
        let p = network.n_bound();
        SurrogateConfig {
            gas_spec: NetSpec::standard(hidden, network.n_gas()),
            coverage_spec: (p > 0).then(|| NetSpec::standard(hidden, p)),
            kappa_spec: Some(NetSpec::shallow(kappa_hidden, 1)),
            use_bc_operator: true,
            use_normalization: false,
            scaling_mode: ScalingMode::None,
        }
    }

    /// Inverse-problem configuration: no BC operator (the observed data act
    /// as the anchoring), hypersphere normalization over the coverages.
    pub fn inverse_for(
        network: &ReactionNetwork,
        hidden: [usize; 3],
        learned_scaling: bool,
    ) -> SurrogateConfig {
        let p = network.n_bound();
        assert!(p == 0 || p >= 2, "normalization needs at least two coverages");
        SurrogateConfig {
            gas_spec: NetSpec::standard(hidden, network.n_gas()),
            coverage_spec: (p > 0).then(|| NetSpec::standard(hidden, p - 1)),
            kappa_spec: None,
            use_bc_operator: false,
            use_normalization: p > 0,
            scaling_mode: if learned_scaling && p > 0 {
                ScalingMode::Learned
            } else {
                ScalingMode::None
            },
        }
    }

    pub fn n_gas(&self) -> usize {
        self.gas_spec.output_width()
    }

    /// Number of coverage states the surrogate produces.
    pub fn n_coverage(&self) -> usize {
        match &self.coverage_spec {
            None => 0,
            Some(spec) => {
                if self.use_normalization {
                    spec.output_width() + 1
                } else {
                    spec.output_width()
                }
            }
        }
    }

    pub fn n_state(&self) -> usize {
        self.n_gas() + self.n_coverage()
    }

    pub fn n_params(&self) -> usize {
        let mut n = self.gas_spec.n_weights();
        if let Some(s) = &self.coverage_spec {
            n += s.n_weights();
        }
        if let Some(s) = &self.kappa_spec {
            n += s.n_weights();
        }
        if self.scaling_mode == ScalingMode::Learned {
            n += self.n_coverage();
        }
        n
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.use_bc_operator && self.kappa_spec.is_none() {
            return Err(SurrogateError::Mismatch {
                msg: "BC operator requires a characteristic-time net".into(),
            });
        }
        if self.use_bc_operator && self.use_normalization {
            return Err(SurrogateError::Mismatch {
                msg: "BC operator and normalization are mutually exclusive modes".into(),
            });
        }
        if self.use_normalization && self.coverage_spec.is_none() {
            return Err(SurrogateError::Mismatch {
                msg: "normalization requires a coverage net".into(),
            });
        }
        if self.scaling_mode == ScalingMode::Learned && self.coverage_spec.is_none() {
            return Err(SurrogateError::Mismatch {
                msg: "learned scaling requires coverage outputs".into(),
            });
        }
        Ok(())
    }
}

/// Weights of one surrogate plus optional log signal-scaling factors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SurrogateParams {
    pub gas_weights: WeightTensor,
    pub coverage_weights: Option<WeightTensor>,
    pub kappa_weights: Option<WeightTensor>,
    /// Log of the learned signal scale per coverage channel; positive scale
    /// by construction.
    pub ln_scaling: Option<Vec<f64>>,
}

impl SurrogateParams {
    /// Glorot-initialized nets, log-scalings at zero (unit scale).
    pub fn init(config: &SurrogateConfig, rng: &mut impl Rng) -> SurrogateParams {
        SurrogateParams {
            gas_weights: WeightTensor::glorot(config.gas_spec.clone(), rng),
            coverage_weights: config
                .coverage_spec
                .as_ref()
                .map(|s| WeightTensor::glorot(s.clone(), rng)),
            kappa_weights: config
                .kappa_spec
                .as_ref()
                .map(|s| WeightTensor::glorot(s.clone(), rng)),
            ln_scaling: (config.scaling_mode == ScalingMode::Learned)
                .then(|| vec![0.0; config.n_coverage()]),
        }
    }

    pub fn push_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.gas_weights.flat);
        if let Some(w) = &self.coverage_weights {
            out.extend_from_slice(&w.flat);
        }
        if let Some(w) = &self.kappa_weights {
            out.extend_from_slice(&w.flat);
        }
        if let Some(s) = &self.ln_scaling {
            out.extend_from_slice(s);
        }
    }

    pub fn from_flat(config: &SurrogateConfig, flat: &[f64]) -> Result<SurrogateParams, SurrogateError> {
        if flat.len() != config.n_params() {
            return Err(SurrogateError::Mismatch {
                msg: format!(
                    "expected {} parameters, got {}",
                    config.n_params(),
                    flat.len()
                ),
            });
        }
        let mut at = 0usize;
        let mut take = |n: usize| {
            let s = &flat[at..at + n];
            at += n;
            s.to_vec()
        };
        let gas_weights = WeightTensor {
            spec: config.gas_spec.clone(),
            flat: take(config.gas_spec.n_weights()),
        };
        let coverage_weights = config.coverage_spec.as_ref().map(|s| WeightTensor {
            spec: s.clone(),
            flat: take(s.n_weights()),
        });
        let kappa_weights = config.kappa_spec.as_ref().map(|s| WeightTensor {
            spec: s.clone(),
            flat: take(s.n_weights()),
        });
        let ln_scaling =
            (config.scaling_mode == ScalingMode::Learned).then(|| take(config.n_coverage()));
        Ok(SurrogateParams {
            gas_weights,
            coverage_weights,
            kappa_weights,
            ln_scaling,
        })
    }
}

/// Hypersphere projection of `p-1` angles onto the `p`-simplex:
/// non-negative coordinates that sum to one for any angles.
pub fn apply_normalization(angles: &[f64]) -> Vec<f64> {
    normalize_dual(&angles.iter().map(|&a| Dual::constant(a)).collect::<Vec<_>>())
        .into_iter()
        .map(|d| d.v)
        .collect()
}

pub(crate) fn normalize_dual(angles: &[Dual]) -> Vec<Dual> {
    let q = angles.len();
    let mut out = vec![Dual::ZERO; q + 1];
    let mut prefix = Dual::constant(1.0);
    for (i, &a) in angles.iter().enumerate() {
        let s = a.sin_sq();
        let next = prefix * s;
        out[i] = prefix - next;
        prefix = next;
    }
    out[q] = prefix;
    out
}

/// Characteristic time gain: kappa(t) = exp(u(t - t0)) > 0.
pub fn characteristic_time(spec: &NetSpec, weights: &[f64], t: f64, t0: f64) -> f64 {
    math::exp(nn::forward(spec, weights, t - t0)[0])
}

/// Dirichlet BC operator: x(t) = xhat tanh(kappa (t-t0)) + x0 (1 - tanh(...)).
/// Exact at t0 for any weights.
pub fn apply_dirichlet_bc(xhat: &[f64], x0: &[f64], kappa: f64, t: f64, t0: f64) -> Vec<f64> {
    let phi = math::tanh(kappa * (t - t0));
    xhat.iter()
        .zip(x0)
        .map(|(&xh, &a)| a + (xh - a) * phi)
        .collect()
}

/// Full surrogate state (gas block then coverages) with time derivatives.
pub fn evaluate_dual(
    config: &SurrogateConfig,
    params: &SurrogateParams,
    x0: &[f64],
    t0: f64,
    t: f64,
) -> Vec<Dual> {
    let tin = Dual::time(t);
    let mut state = nn::forward_dual(&config.gas_spec, &params.gas_weights.flat, tin);
    if let Some(cov_spec) = &config.coverage_spec {
        let cov_w = &params.coverage_weights.as_ref().expect("coverage weights").flat;
        let raw = nn::forward_dual(cov_spec, cov_w, tin);
        if config.use_normalization {
            state.extend(normalize_dual(&raw));
        } else {
            state.extend(raw);
        }
    }
    if config.use_bc_operator {
        let kap_spec = config.kappa_spec.as_ref().expect("kappa spec");
        let kap_w = &params.kappa_weights.as_ref().expect("kappa weights").flat;
        let u = nn::forward_dual(kap_spec, kap_w, Dual::time(t - t0))[0];
        let kappa = u.exp();
        let dt = t - t0;
        let z = Dual {
            v: kappa.v * dt,
            d: kappa.d * dt + kappa.v,
        };
        let phi = z.tanh();
        for (s, &a) in state.iter_mut().zip(x0) {
            let u = Dual { v: s.v - a, d: s.d };
            let p = u * phi;
            *s = Dual {
                v: a + p.v,
                d: p.d,
            };
        }
    }
    state
}

/// State values only.
pub fn evaluate(
    config: &SurrogateConfig,
    params: &SurrogateParams,
    x0: &[f64],
    t0: f64,
    t: f64,
) -> Vec<f64> {
    evaluate_dual(config, params, x0, t0, t)
        .into_iter()
        .map(|d| d.v)
        .collect()
}

/// State time derivatives only.
pub fn time_derivative(
    config: &SurrogateConfig,
    params: &SurrogateParams,
    x0: &[f64],
    t0: f64,
    t: f64,
) -> Vec<f64> {
    evaluate_dual(config, params, x0, t0, t)
        .into_iter()
        .map(|d| d.d)
        .collect()
}

/// Predicted semiquantitative signals: exp(ln_scaling) per coverage channel.
pub fn predicted_signals(params: &SurrogateParams, coverages: &[f64]) -> Option<Vec<f64>> {
    params.ln_scaling.as_ref().map(|ls| {
        ls.iter()
            .zip(coverages)
            .map(|(&l, &c)| math::exp(l) * c)
            .collect()
    })
}

/// State (and, in SQ modes, predicted signals) at `t`.
pub fn evaluate_with_signals(
    config: &SurrogateConfig,
    params: &SurrogateParams,
    x0: &[f64],
    t0: f64,
    t: f64,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let state = evaluate(config, params, x0, t0, t);
    let signals = predicted_signals(params, &state[config.n_gas()..]);
    (state, signals)
}

/// Parameter-block offsets of one surrogate inside a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub gas: usize,
    pub coverage: Option<usize>,
    pub kappa: Option<usize>,
    pub ln_scaling: Option<(usize, usize)>,
    pub start: usize,
    pub end: usize,
}

impl ParamLayout {
    pub fn for_config(config: &SurrogateConfig, start: usize) -> ParamLayout {
        let gas = start;
        let mut at = start + config.gas_spec.n_weights();
        let coverage = config.coverage_spec.as_ref().map(|s| {
            let o = at;
            at += s.n_weights();
            o
        });
        let kappa = config.kappa_spec.as_ref().map(|s| {
            let o = at;
            at += s.n_weights();
            o
        });
        let ln_scaling = (config.scaling_mode == ScalingMode::Learned).then(|| {
            let o = (at, config.n_coverage());
            at += config.n_coverage();
            o
        });
        ParamLayout {
            gas,
            coverage,
            kappa,
            ln_scaling,
            start,
            end: at,
        }
    }
}

/// Assemble the surrogate state subgraph; returns the full-state node.
pub fn build_state_node(
    b: &mut GraphBuilder,
    config: &SurrogateConfig,
    layout: &ParamLayout,
    x0: &[f64],
    t0: f64,
) -> NodeId {
    let t = b.time();
    let gas = b.ffnn(&config.gas_spec, layout.gas, t);
    let xhat = match &config.coverage_spec {
        None => gas,
        Some(cov_spec) => {
            let raw = b.ffnn(cov_spec, layout.coverage.expect("coverage offset"), t);
            let cov = if config.use_normalization {
                b.hypersphere(raw)
            } else {
                raw
            };
            b.concat(gas, cov)
        }
    };
    if config.use_bc_operator {
        let kap_spec = config.kappa_spec.as_ref().expect("kappa spec");
        let ts = b.time_shifted(t0);
        let u = b.ffnn(kap_spec, layout.kappa.expect("kappa offset"), ts);
        let kappa = b.exp(u);
        b.dirichlet_bc(xhat, kappa, x0.to_vec(), t0)
    } else {
        xhat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = core::f64::consts::PI;

    #[test]
    fn normalization_corners() {
        let all_zero = apply_normalization(&[0.0, 0.0, 0.0]);
        assert_eq!(all_zero, vec![1.0, 0.0, 0.0, 0.0]);
        let all_right = apply_normalization(&[PI / 2.0, PI / 2.0, PI / 2.0]);
        for (i, v) in all_right.iter().enumerate() {
            let want = if i == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-30, "{all_right:?}");
        }
        let half = apply_normalization(&[PI / 4.0]);
        assert!((half[0] - 0.5).abs() < 1e-12);
        assert!((half[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalization_sums_to_one_for_wild_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let angles: Vec<f64> = (0..6)
                .map(|_| rand::Rng::random_range(&mut rng, -1e4..1e4))
                .collect();
            let x = apply_normalization(&angles);
            let sum: f64 = x.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
            assert!(x.iter().all(|&v| (-1e-15..=1.0 + 1e-15).contains(&v)));
        }
    }

    #[test]
    fn characteristic_time_trivial_and_compositional() {
        let spec = NetSpec::shallow(3, 1);
        let zero = WeightTensor::zeros(spec.clone());
        assert_eq!(characteristic_time(&spec, &zero.flat, 2.0, 0.5), 1.0);

        // constant u = ln 2 via output bias
        let mut w = WeightTensor::zeros(spec.clone());
        let bias_idx = w.flat.len() - 1;
        w.flat[bias_idx] = math::ln(2.0);
        assert!((characteristic_time(&spec, &w.flat, 1.3, 0.0) - 2.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = WeightTensor::glorot(spec.clone(), &mut rng);
        let got = characteristic_time(&spec, &w.flat, 0.8, 0.1);
        let want = math::exp(nn::forward(&spec, &w.flat, 0.7)[0]);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn dirichlet_bc_is_exact_at_t0() {
        let x0 = [0.6, 0.4, 0.0];
        let xhat = [123.0, -7.0, 0.5];
        let x = apply_dirichlet_bc(&xhat, &x0, 42.0, 1.5, 1.5);
        assert_eq!(x, x0.to_vec());
    }

    #[test]
    fn dirichlet_bc_saturates() {
        let x0 = [0.0, 1.0];
        let xhat = [0.3, -0.2];
        // kappa (t - t0) = 20: tanh saturated
        let x = apply_dirichlet_bc(&xhat, &x0, 20.0, 1.0, 0.0);
        for (a, b) in x.iter().zip(&xhat) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + (b - 0.5f64).abs()));
        }
    }

    fn da_forward_setup() -> (SurrogateConfig, SurrogateParams, Vec<f64>) {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        let config = SurrogateConfig::forward_for(&net, [6, 6, 6], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = SurrogateParams::init(&config, &mut rng);
        let x0 = crate::corpus::initial_state(&net, crate::corpus::IC1);
        (config, params, x0)
    }

    #[test]
    fn surrogate_bc_exactness_over_random_weights() {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        let config = SurrogateConfig::forward_for(&net, [6, 6, 6], 3);
        let x0 = crate::corpus::initial_state(&net, crate::corpus::IC1);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = SurrogateParams::init(&config, &mut rng);
            let x = evaluate(&config, &params, &x0, 0.0, 0.0);
            for (a, b) in x.iter().zip(&x0) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn surrogate_derivative_matches_finite_differences() {
        let (config, params, x0) = da_forward_setup();
        let h = 1e-6;
        for &t in &[0.01, 0.3, 0.9] {
            let d = time_derivative(&config, &params, &x0, 0.0, t);
            let hi = evaluate(&config, &params, &x0, 0.0, t + h);
            let lo = evaluate(&config, &params, &x0, 0.0, t - h);
            for i in 0..d.len() {
                let fd = (hi[i] - lo[i]) / (2.0 * h);
                let rel = (d[i] - fd).abs() / d[i].abs().max(1e-8);
                assert!(rel < 1e-6, "t={t} i={i}: {} vs {fd}", d[i]);
            }
        }
    }

    #[test]
    fn derivative_at_t0_is_kappa_times_gap() {
        let (config, params, x0) = da_forward_setup();
        let d0 = time_derivative(&config, &params, &x0, 0.0, 0.0);
        let kap_spec = config.kappa_spec.as_ref().unwrap();
        let kappa = characteristic_time(kap_spec, &params.kappa_weights.as_ref().unwrap().flat, 0.0, 0.0);
        // raw net output (no BC), since x(t0) = x0 exactly
        let raw_cfg = SurrogateConfig {
            use_bc_operator: false,
            kappa_spec: None,
            ..config.clone()
        };
        let raw_params = SurrogateParams {
            kappa_weights: None,
            ..params.clone()
        };
        let xhat0 = evaluate(&raw_cfg, &raw_params, &x0, 0.0, 0.0);
        for i in 0..d0.len() {
            let want = kappa * (xhat0[i] - x0[i]);
            assert!(
                (d0[i] - want).abs() < 1e-10,
                "i={i}: {} vs {want}",
                d0[i]
            );
        }
    }

    #[test]
    fn inverse_config_coverages_sum_to_one() {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        let config = SurrogateConfig::inverse_for(&net, [6, 6, 6], true);
        config.validate().unwrap();
        let x0 = crate::corpus::initial_state(&net, crate::corpus::IC1);
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = SurrogateParams::init(&config, &mut rng);
            for &t in &[0.0, 0.1, 2.0] {
                let x = evaluate(&config, &params, &x0, 0.0, t);
                let cov: f64 = x[config.n_gas()..].iter().sum();
                assert!((cov - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn graph_state_matches_direct_evaluation() {
        let (config, params, x0) = da_forward_setup();
        let mut flat = Vec::new();
        params.push_flat(&mut flat);
        let layout = ParamLayout::for_config(&config, 0);
        assert_eq!(layout.end, flat.len());
        let mut b = GraphBuilder::new();
        let state = build_state_node(&mut b, &config, &layout, &x0, 0.0);
        let g = b.finish(state, flat.len());
        let mut ws = g.workspace();
        for &t in &[0.0, 0.05, 0.77] {
            g.forward(t, &flat, &mut ws);
            let direct = evaluate_dual(&config, &params, &x0, 0.0, t);
            for (a, b) in g.output_values(&ws).iter().zip(&direct) {
                assert!((a.v - b.v).abs() < 1e-14);
                assert!((a.d - b.d).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let (config, params, _) = da_forward_setup();
        let mut flat = Vec::new();
        params.push_flat(&mut flat);
        let back = SurrogateParams::from_flat(&config, &flat).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn learned_scaling_inverts_dataset_construction() {
        // exp(ln_scaling) = 1/true_scaling reproduces the scaled signals
        let coverages = [0.2, 0.3, 0.1, 0.4];
        let true_scaling = [0.05, 0.4, 1.7, 2.2];
        let params = SurrogateParams {
            gas_weights: WeightTensor::zeros(NetSpec::standard([2, 2, 2], 1)),
            coverage_weights: None,
            kappa_weights: None,
            ln_scaling: Some(true_scaling.iter().map(|s| -math::ln(*s)).collect()),
        };
        let signals = predicted_signals(&params, &coverages).unwrap();
        for ((sig, cov), sc) in signals.iter().zip(&coverages).zip(&true_scaling) {
            assert!((sig - cov / sc).abs() < 1e-12);
        }
    }
}
