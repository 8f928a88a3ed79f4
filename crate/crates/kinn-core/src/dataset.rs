//! Synthetic observation datasets for the Q / SQ / SQ+n scenarios.
//!
//! - Q: only unbound (gas) channels are observed, untouched.
//! - SQ: all channels; each bound channel is divided by its own temporal
//!   standard deviation, emulating an arbitrary calibration factor.
//! - SQ+n: SQ plus i.i.d. Gaussian white noise (sigma 0.025) on the observed
//!   channels.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinetics::KineticParameters;
use crate::math;
use crate::network::ReactionNetwork;
use crate::ode::{self, OdeError, Trajectory};

/// White-noise standard deviation for the SQ+n scenario.
pub const NOISE_SIGMA: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Scenario {
    #[cfg_attr(feature = "serde", serde(rename = "q"))]
    Q,
    #[cfg_attr(feature = "serde", serde(rename = "sq"))]
    Sq,
    #[cfg_attr(feature = "serde", serde(rename = "sqn"))]
    SqNoise,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Scenario> {
        match s {
            "q" | "Q" => Some(Scenario::Q),
            "sq" | "SQ" => Some(Scenario::Sq),
            "sqn" | "sq+n" | "SQ+n" | "SQN" => Some(Scenario::SqNoise),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::Q => "q",
            Scenario::Sq => "sq",
            Scenario::SqNoise => "sqn",
        }
    }
}

/// Which channels receive white noise in SQ+n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseTargets {
    #[default]
    All,
    Bound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Dataset {
    pub scenario: Scenario,
    pub t: Vec<f64>,
    /// One row per time point, one column per observed species.
    pub observed: Vec<Vec<f64>>,
    /// Species indices of the observed columns.
    pub observed_indices: Vec<usize>,
    /// Scale divisors applied to bound channels (SQ modes), in bound order.
    pub true_scaling: Vec<f64>,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("bound channel `{species}` has zero temporal variance; cannot emulate a calibration factor")]
    ZeroVarianceChannel { species: String },
    #[error("n_points must be at least 10, got {got}")]
    TooFewPoints { got: usize },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// `n` log-spaced points in `(t0, t_end]`, anchored at `t0 + 1e-4 (t_end-t0)`.
/// Denser near `t0`, mirroring where kinetic derivatives are largest.
pub fn log_grid(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    assert!(t_end > t0 && n >= 2);
    let span = t_end - t0;
    let lo = 1e-4 * span;
    let ratio = math::ln(span / lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                t_end
            } else {
                t0 + lo * math::exp(ratio * i as f64)
            }
        })
        .collect()
}

/// Observation grid: `t0` followed by the log-spaced points.
pub fn dataset_grid(t0: f64, t_end: f64, n_points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(n_points + 1);
    grid.push(t0);
    grid.extend(log_grid(t0, t_end, n_points));
    grid
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub n_points: usize,
    pub seed: u64,
    pub noise_targets: NoiseTargets,
    /// Time horizon; computed by `ode::choose_horizon` when absent.
    pub horizon: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            n_points: 100,
            seed: 0,
            noise_targets: NoiseTargets::All,
            horizon: None,
            rtol: ode::DEFAULT_RTOL,
            atol: ode::DEFAULT_ATOL,
        }
    }
}

/// Population standard deviation of a column.
fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    math::sqrt(var)
}

/// Integrate the reference trajectory and derive the scenario's dataset.
pub fn generate_dataset(
    network: &ReactionNetwork,
    params: &KineticParameters,
    x0: &[f64],
    scenario: Scenario,
    opts: &GenerateOptions,
) -> Result<(Trajectory, Dataset), DatasetError> {
    if opts.n_points < 10 {
        return Err(DatasetError::TooFewPoints { got: opts.n_points });
    }
    let t_end = match opts.horizon {
        Some(h) => h,
        None => ode::choose_horizon(network, params, x0)?,
    };
    let grid = dataset_grid(0.0, t_end, opts.n_points);
    let traj = ode::integrate_reference(network, params, x0, &grid, opts.rtol, opts.atol)?;
    let dataset = dataset_from_trajectory(network, &traj, scenario, opts)?;
    Ok((traj, dataset))
}

/// Build the observation dataset from an existing trajectory.
pub fn dataset_from_trajectory(
    network: &ReactionNetwork,
    traj: &Trajectory,
    scenario: Scenario,
    opts: &GenerateOptions,
) -> Result<Dataset, DatasetError> {
    let n_gas = network.n_gas();
    let observed_indices: Vec<usize> = match scenario {
        Scenario::Q => (0..n_gas).collect(),
        _ => (0..network.n_species()).collect(),
    };

    let mut observed: Vec<Vec<f64>> = traj
        .x
        .iter()
        .map(|row| observed_indices.iter().map(|&i| row[i]).collect())
        .collect();

    let mut true_scaling = Vec::new();
    if scenario != Scenario::Q {
        for i in network.bound_indices() {
            let col: Vec<f64> = traj.x.iter().map(|row| row[i]).collect();
            let sd = std_dev(&col);
            if sd < 1e-12 {
                return Err(DatasetError::ZeroVarianceChannel {
                    species: network.species[i].name.clone(),
                });
            }
            for row in observed.iter_mut() {
                row[i] /= sd;
            }
            true_scaling.push(sd);
        }
    }

    let noise_sigma = if scenario == Scenario::SqNoise {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let normal = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
        for row in observed.iter_mut() {
            for (c, value) in row.iter_mut().enumerate() {
                let bound = observed_indices[c] >= n_gas;
                if opts.noise_targets == NoiseTargets::All || bound {
                    *value += normal.sample(&mut rng);
                }
            }
        }
        NOISE_SIGMA
    } else {
        0.0
    };

    Ok(Dataset {
        scenario,
        t: traj.t.clone(),
        observed,
        observed_indices,
        true_scaling,
        noise_sigma,
        rng_seed: opts.seed,
    })
}
