//! Forward problem: train a surrogate to satisfy the kinetic ODE with fixed
//! rate constants over log-spaced collocation points.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::ad::{Graph, GraphBuilder};
use crate::dataset::log_grid;
use crate::dual::Dual;
use crate::kinetics::{self, KineticParameters, KineticsError};
use crate::metrics::{compute_metrics, Metrics};
use crate::network::ReactionNetwork;
use crate::nn::AdamState;
use crate::ode::{self, OdeError};
use crate::surrogate::{self, ParamLayout, SurrogateConfig, SurrogateParams};

/// Loss value that counts as divergence when sustained.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Consecutive diverged epochs tolerated before aborting.
pub const DIVERGENCE_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Stage {
    pub lr: f64,
    pub epochs: usize,
    pub iters_per_epoch: usize,
}

/// Learning-rate ladder; per-epoch convergence checks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StageSchedule {
    pub stages: Vec<Stage>,
}

impl StageSchedule {
    /// The standard three-stage ladder: learning rates 1e-4, 1e-5, 1e-6 over
    /// a total of 10^3 epochs of 10^2 iterations, split evenly.
    pub fn three_stage() -> StageSchedule {
        StageSchedule::three_stage_scaled(1000, 100)
    }

    /// Same ladder with a custom epoch/iteration budget, split evenly.
    pub fn three_stage_scaled(total_epochs: usize, iters_per_epoch: usize) -> StageSchedule {
        let base = total_epochs / 3;
        let first = total_epochs - 2 * base;
        StageSchedule {
            stages: vec![
                Stage {
                    lr: 1e-4,
                    epochs: first,
                    iters_per_epoch,
                },
                Stage {
                    lr: 1e-5,
                    epochs: base,
                    iters_per_epoch,
                },
                Stage {
                    lr: 1e-6,
                    epochs: base,
                    iters_per_epoch,
                },
            ],
        }
    }

    pub fn single(lr: f64, epochs: usize, iters_per_epoch: usize) -> StageSchedule {
        StageSchedule {
            stages: vec![Stage {
                lr,
                epochs,
                iters_per_epoch,
            }],
        }
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardProblem {
    pub network: ReactionNetwork,
    pub params: KineticParameters,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t_end: f64,
    pub collocation: Vec<f64>,
    pub config: SurrogateConfig,
    pub schedule: StageSchedule,
    /// Early-stop threshold on the model loss.
    pub tol: f64,
}

impl ForwardProblem {
    /// Standard setup: 100 log-spaced collocation points, BC-operator
    /// surrogate, three-stage schedule, 1e-12 tolerance.
    pub fn new(
        network: ReactionNetwork,
        params: KineticParameters,
        x0: Vec<f64>,
        t_end: f64,
        hidden: [usize; 3],
        kappa_hidden: usize,
    ) -> ForwardProblem {
        let config = SurrogateConfig::forward_for(&network, hidden, kappa_hidden);
        ForwardProblem {
            collocation: log_grid(0.0, t_end, 100),
            network,
            params,
            x0,
            t0: 0.0,
            t_end,
            config,
            schedule: StageSchedule::three_stage(),
            tol: 1e-12,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        self.config
            .validate()
            .map_err(|e| TrainError::InvalidProblem {
                msg: format!("{e}"),
            })?;
        if self.x0.len() != self.network.n_species()
            || self.config.n_state() != self.network.n_species()
        {
            return Err(TrainError::InvalidProblem {
                msg: "state dimensions disagree with the network".into(),
            });
        }
        if self.collocation.is_empty()
            || self
                .collocation
                .windows(2)
                .any(|w| w[1] <= w[0])
            || self.collocation[0] <= self.t0
            || *self.collocation.last().unwrap() > self.t_end + 1e-12
        {
            return Err(TrainError::InvalidProblem {
                msg: "collocation points must be strictly increasing within (t0, t_end]".into(),
            });
        }
        if !(self.tol > 0.0) {
            return Err(TrainError::InvalidProblem {
                msg: "tol must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training diverged: loss {loss:e} for {DIVERGENCE_PATIENCE} consecutive epochs (epoch {epoch})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("invalid problem: {msg}")]
    InvalidProblem { msg: String },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// Training summary and comparison against the reference integration.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Model loss after initialization and after each epoch.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    /// Per-collocation-point model residuals of the trained surrogate.
    pub final_residuals: Vec<Vec<f64>>,
    pub observed_states: Metrics,
    pub latent_states: Option<Metrics>,
    pub observed_derivs: Metrics,
    pub latent_derivs: Option<Metrics>,
}

/// Model residual at one time: surrogate AD derivative minus kinetic RHS at
/// the surrogate state (raw power-law algebra; no positivity guard).
pub fn model_residual(problem: &ForwardProblem, params_sa: &SurrogateParams, t: f64) -> Vec<f64> {
    let state = surrogate::evaluate_dual(&problem.config, params_sa, &problem.x0, problem.t0, t);
    let values: Vec<f64> = state.iter().map(|d| d.v).collect();
    let orders = kinetics::power_orders(&problem.network);
    let k = problem.params.rates();
    let r = kinetics::rate_vector_prepared(&orders, &k, &values);
    let rhs = kinetics::apply_stoichiometry(&problem.network, &r);
    state
        .iter()
        .zip(&rhs)
        .map(|(d, &m)| d.d - m)
        .collect()
}

/// Mean squared residual norm over the collocation points.
pub fn loss_model(problem: &ForwardProblem, params_sa: &SurrogateParams) -> f64 {
    let n = problem.collocation.len() as f64;
    problem
        .collocation
        .iter()
        .map(|&t| {
            model_residual(problem, params_sa, t)
                .iter()
                .map(|e| e * e)
                .sum::<f64>()
        })
        .sum::<f64>()
        / n
}

/// Build the model-residual graph for one surrogate. `ln_k_node_offset`
/// selects trainable rate constants (inverse problem); `None` bakes them in
/// as fixed constants.
pub(crate) fn build_residual_graph(
    b: &mut GraphBuilder,
    network: &ReactionNetwork,
    ln_k: Result<usize, &[f64]>,
    config: &SurrogateConfig,
    layout: &ParamLayout,
    x0: &[f64],
    t0: f64,
) -> crate::ad::NodeId {
    let state = surrogate::build_state_node(b, config, layout, x0, t0);
    let lnk_node = match ln_k {
        Ok(offset) => b.params(offset, network.n_steps()),
        Err(values) => b.consts(values.to_vec()),
    };
    let k = b.exp(lnk_node);
    let pl = b.power_law(state, kinetics::power_orders(network));
    let r = b.mul_elem(k, pl);
    let m_flat: Vec<f64> = network
        .stoichiometry
        .iter()
        .flat_map(|row| row.iter().map(|&v| v as f64))
        .collect();
    let rhs = b.matmul_const(r, m_flat, network.n_species());
    let xdot = b.tangent_of(state);
    b.sub(xdot, rhs)
}

/// Full-batch Adam over a set of `(graph, points, weight)` loss terms.
/// Returns per-term mean losses of the final iteration.
pub(crate) struct BatchTrainer {
    pub terms: Vec<LossTerm>,
    pub adam: AdamState,
    pub grad: Vec<f64>,
    /// Clamp applied after each step: `(offset, len, lo, hi)`.
    pub clamp: Option<(usize, usize, f64, f64)>,
}

pub(crate) struct LossTerm {
    pub graph: Graph,
    pub workspace: crate::ad::Workspace,
    pub points: Vec<f64>,
    /// Loss weight applied on top of the 1/n mean factor.
    pub weight: f64,
    /// Per-point target setter: (consts node, rows of targets).
    pub targets: Option<(crate::ad::NodeId, Vec<Vec<f64>>)>,
}

impl LossTerm {
    pub fn new(graph: Graph, points: Vec<f64>, weight: f64) -> LossTerm {
        let workspace = graph.workspace();
        LossTerm {
            graph,
            workspace,
            points,
            weight,
            targets: None,
        }
    }

    /// Mean squared output norm over the points; gradient accumulation
    /// weighted by `self.weight / n_points`.
    fn accumulate(&mut self, params: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.points.len() as f64;
        let w = self.weight / n;
        let mut total = 0.0;
        if let Some((node, rows)) = &self.targets {
            let rows = rows.clone();
            for (i, &t) in self.points.iter().enumerate() {
                self.graph.set_consts(*node, &rows[i]);
                self.graph.forward(t, params, &mut self.workspace);
                total += self
                    .graph
                    .backward_sq_norm(params, &mut self.workspace, grad, w);
            }
        } else {
            for &t in &self.points {
                self.graph.forward(t, params, &mut self.workspace);
                total += self
                    .graph
                    .backward_sq_norm(params, &mut self.workspace, grad, w);
            }
        }
        total / n
    }

    /// Loss only, no gradient.
    pub fn loss(&mut self, params: &[f64]) -> f64 {
        let n = self.points.len() as f64;
        let mut total = 0.0;
        if let Some((node, rows)) = &self.targets {
            let rows = rows.clone();
            for (i, &t) in self.points.iter().enumerate() {
                self.graph.set_consts(*node, &rows[i]);
                self.graph.forward(t, params, &mut self.workspace);
                total += self.graph.output_sq_norm(&self.workspace);
            }
        } else {
            for &t in &self.points {
                self.graph.forward(t, params, &mut self.workspace);
                total += self.graph.output_sq_norm(&self.workspace);
            }
        }
        total / n
    }
}

impl BatchTrainer {
    pub fn new(terms: Vec<LossTerm>, n_params: usize) -> BatchTrainer {
        BatchTrainer {
            terms,
            adam: AdamState::new(n_params, 1e-4),
            grad: vec![0.0; n_params],
            clamp: None,
        }
    }

    /// Run a stage schedule; `objective` is the weighted sum of term losses.
    /// Stops early when the objective falls below `tol`.
    pub fn run(
        &mut self,
        params: &mut Vec<f64>,
        schedule: &StageSchedule,
        tol: f64,
        history: &mut Vec<f64>,
    ) -> Result<(), TrainError> {
        let mut diverged_streak = 0usize;
        let mut epoch_no = 0usize;
        // initial objective for the tol = +inf degenerate case
        let initial: f64 = self
            .terms
            .iter_mut()
            .map(|t| {
                let w = t.weight;
                t.loss(params) * w
            })
            .sum();
        history.push(initial);
        if !initial.is_finite() {
            return Err(TrainError::NonFinite { epoch: 0 });
        }
        if initial < tol {
            return Ok(());
        }
        for stage in &schedule.stages {
            self.adam.lr = stage.lr;
            for _ in 0..stage.epochs {
                epoch_no += 1;
                let mut objective = 0.0;
                for _ in 0..stage.iters_per_epoch {
                    self.grad.iter_mut().for_each(|g| *g = 0.0);
                    objective = 0.0;
                    // split borrows: terms and grad are distinct fields
                    let grad = &mut self.grad;
                    for term in self.terms.iter_mut() {
                        let w = term.weight;
                        objective += term.accumulate(params, grad) * w;
                    }
                    if !objective.is_finite() {
                        return Err(TrainError::NonFinite { epoch: epoch_no });
                    }
                    self.adam.step(params, grad);
                    if let Some((off, len, lo, hi)) = self.clamp {
                        for p in &mut params[off..off + len] {
                            *p = p.clamp(lo, hi);
                        }
                    }
                }
                history.push(objective);
                if objective < tol {
                    return Ok(());
                }
                if objective > DIVERGENCE_LIMIT {
                    diverged_streak += 1;
                    if diverged_streak >= DIVERGENCE_PATIENCE {
                        return Err(TrainError::Diverged {
                            epoch: epoch_no,
                            loss: objective,
                        });
                    }
                } else {
                    diverged_streak = 0;
                }
            }
        }
        Ok(())
    }

    pub fn losses(&mut self, params: &[f64]) -> Vec<f64> {
        self.terms.iter_mut().map(|t| t.loss(params)).collect()
    }
}

/// Train the forward surrogate; returns trained parameters and the report
/// against a reference integration.
pub fn train_forward(
    problem: &ForwardProblem,
    seed: u64,
) -> Result<(SurrogateParams, ResidualReport), TrainError> {
    problem.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = SurrogateParams::init(&problem.config, &mut rng);
    let mut flat = Vec::new();
    init.push_flat(&mut flat);
    let layout = ParamLayout::for_config(&problem.config, 0);

    let mut b = GraphBuilder::new();
    let residual = build_residual_graph(
        &mut b,
        &problem.network,
        Err(&problem.params.ln_k),
        &problem.config,
        &layout,
        &problem.x0,
        problem.t0,
    );
    let graph = b.finish(residual, flat.len());

    let term = LossTerm::new(graph, problem.collocation.clone(), 1.0);
    let mut trainer = BatchTrainer::new(vec![term], flat.len());
    let mut history = Vec::new();
    trainer.run(&mut flat, &problem.schedule, problem.tol, &mut history)?;

    let trained = SurrogateParams::from_flat(&problem.config, &flat)
        .expect("layout matches config");
    let report = build_report(problem, &trained, history)?;
    Ok((trained, report))
}

fn build_report(
    problem: &ForwardProblem,
    trained: &SurrogateParams,
    loss_history: Vec<f64>,
) -> Result<ResidualReport, TrainError> {
    let final_residuals: Vec<Vec<f64>> = problem
        .collocation
        .iter()
        .map(|&t| model_residual(problem, trained, t))
        .collect();
    let final_loss = final_residuals
        .iter()
        .map(|r| r.iter().map(|e| e * e).sum::<f64>())
        .sum::<f64>()
        / problem.collocation.len() as f64;

    // reference grid: collocation plus 400 uniform points
    let mut grid = problem.collocation.clone();
    grid.push(problem.t0);
    for i in 0..=400 {
        grid.push(problem.t0 + (problem.t_end - problem.t0) * i as f64 / 400.0);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * problem.t_end.max(1.0));

    let reference = ode::integrate_reference(
        &problem.network,
        &problem.params,
        &problem.x0,
        &grid,
        ode::DEFAULT_RTOL,
        ode::DEFAULT_ATOL,
    )?;
    let ref_derivs = reference.derivatives(&problem.network, &problem.params)?;

    let pred: Vec<Vec<Dual>> = grid
        .iter()
        .map(|&t| surrogate::evaluate_dual(&problem.config, trained, &problem.x0, problem.t0, t))
        .collect();

    let n_gas = problem.network.n_gas();
    let split = |rows: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            rows.iter().map(|r| r[..n_gas].to_vec()).collect(),
            rows.iter().map(|r| r[n_gas..].to_vec()).collect(),
        )
    };
    let pred_states: Vec<Vec<f64>> = pred
        .iter()
        .map(|row| row.iter().map(|d| d.v).collect())
        .collect();
    let pred_derivs: Vec<Vec<f64>> = pred
        .iter()
        .map(|row| row.iter().map(|d| d.d).collect())
        .collect();

    let (pred_obs_s, pred_lat_s) = split(&pred_states);
    let (ref_obs_s, ref_lat_s) = split(&reference.x);
    let (pred_obs_d, pred_lat_d) = split(&pred_derivs);
    let (ref_obs_d, ref_lat_d) = split(&ref_derivs);

    let has_latent = problem.network.n_bound() > 0;
    Ok(ResidualReport {
        loss_history,
        final_loss,
        final_residuals,
        observed_states: compute_metrics(&pred_obs_s, &ref_obs_s),
        latent_states: has_latent.then(|| compute_metrics(&pred_lat_s, &ref_lat_s)),
        observed_derivs: compute_metrics(&pred_obs_d, &ref_obs_d),
        latent_derivs: has_latent.then(|| compute_metrics(&pred_lat_d, &ref_lat_d)),
    })
}
