//! Inverse problem: jointly train surrogate weights, shared kinetic
//! parameters and signal scalings against observed datasets, with the alpha
//! tightening/relaxation sweep and Pareto-knee model selection.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::ad::GraphBuilder;
use crate::dataset::{log_grid, Dataset, Scenario};
use crate::forward::{build_residual_graph, BatchTrainer, LossTerm, StageSchedule, TrainError};
use crate::kinetics::KineticParameters;
use crate::math;
use crate::metrics;
use crate::network::ReactionNetwork;
use crate::nn::AdamState;
use crate::surrogate::{self, ParamLayout, SurrogateConfig, SurrogateParams};

/// Natural-log rate constants are clamped to this range during training to
/// keep the exponential mapping finite.
pub const LN_K_RANGE: (f64, f64) = (-30.0, 30.0);

#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub network: ReactionNetwork,
    /// One dataset per initial condition, all sharing a scenario.
    pub datasets: Vec<Dataset>,
    pub configs: Vec<SurrogateConfig>,
    /// Model-residual collocation grids, one per dataset.
    pub collocations: Vec<Vec<f64>>,
    /// Regularization weight on the data residual.
    pub alpha: f64,
    pub schedule: StageSchedule,
    pub tol: f64,
    pub sweep: SweepPlan,
    /// Ground-truth parameters for correlation reporting, when known.
    pub ln_k_true: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepPlan {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub tighten_factor: f64,
    /// Finer relaxation factor (half-decades by default).
    pub relax_factor: f64,
    /// Training cycle per alpha value.
    pub cycle: StageSchedule,
    /// Final refinement schedule at the knee.
    pub refine: StageSchedule,
}

impl Default for SweepPlan {
    fn default() -> SweepPlan {
        SweepPlan {
            alpha_min: 1e-6,
            alpha_max: 1e6,
            tighten_factor: 10.0,
            relax_factor: math::sqrt(10.0),
            cycle: StageSchedule::single(1e-4, 40, 100),
            refine: StageSchedule::three_stage_scaled(300, 100),
        }
    }
}

impl InverseProblem {
    /// Standard setup from datasets that share one scenario: per-dataset
    /// inverse surrogates, 100 log-spaced collocation points each.
    pub fn new(network: ReactionNetwork, datasets: Vec<Dataset>, hidden: [usize; 3]) -> InverseProblem {
        assert!(!datasets.is_empty());
        let scenario = datasets[0].scenario;
        assert!(datasets.iter().all(|d| d.scenario == scenario));
        let learned_scaling = scenario != Scenario::Q;
        let configs: Vec<SurrogateConfig> = datasets
            .iter()
            .map(|_| SurrogateConfig::inverse_for(&network, hidden, learned_scaling))
            .collect();
        let collocations = datasets
            .iter()
            .map(|d| log_grid(d.t[0], *d.t.last().unwrap(), 100))
            .collect();
        InverseProblem {
            network,
            datasets,
            configs,
            collocations,
            alpha: 1.0,
            schedule: StageSchedule::three_stage(),
            tol: 1e-12,
            sweep: SweepPlan::default(),
            ln_k_true: None,
        }
    }

    fn n_obs(&self, ds: usize) -> usize {
        self.datasets[ds].observed_indices.len()
    }
}

/// Mean squared data residual of one surrogate against its dataset.
/// Q compares gas channels; SQ modes compare gas directly and bound channels
/// through the learned scaling.
pub fn loss_data(problem: &InverseProblem, sa: &SurrogateParams, ds: usize) -> f64 {
    let dataset = &problem.datasets[ds];
    let config = &problem.configs[ds];
    let n_gas = problem.network.n_gas();
    let mut total = 0.0;
    for (row, &t) in dataset.observed.iter().zip(&dataset.t) {
        let state = surrogate::evaluate(config, sa, &[], 0.0, t);
        let mut sq = 0.0;
        match dataset.scenario {
            Scenario::Q => {
                for (i, &obs) in row.iter().enumerate() {
                    let e = state[i] - obs;
                    sq += e * e;
                }
            }
            _ => {
                for i in 0..n_gas {
                    let e = state[i] - row[i];
                    sq += e * e;
                }
                let signals = surrogate::predicted_signals(sa, &state[n_gas..])
                    .expect("SQ surrogate carries scaling");
                for (j, &sig) in signals.iter().enumerate() {
                    let e = sig - row[n_gas + j];
                    sq += e * e;
                }
            }
        }
        total += sq;
    }
    total / dataset.t.len() as f64
}

/// Model loss of one surrogate over its collocation grid, with `ln_k` taken
/// from the problem's shared trainable parameters.
pub fn loss_model_at(
    problem: &InverseProblem,
    sa: &SurrogateParams,
    ln_k: &KineticParameters,
    ds: usize,
) -> f64 {
    let orders = crate::kinetics::power_orders(&problem.network);
    let k = ln_k.rates();
    let grid = &problem.collocations[ds];
    let mut total = 0.0;
    for &t in grid {
        let state = surrogate::evaluate_dual(&problem.configs[ds], sa, &[], 0.0, t);
        let values: Vec<f64> = state.iter().map(|d| d.v).collect();
        let r = crate::kinetics::rate_vector_prepared(&orders, &k, &values);
        let rhs = crate::kinetics::apply_stoichiometry(&problem.network, &r);
        for (d, m) in state.iter().zip(&rhs) {
            let e = d.d - m;
            total += e * e;
        }
    }
    total / grid.len() as f64
}

/// Total objective: sum over datasets of `j_m + alpha j_d`.
pub fn loss_total(
    problem: &InverseProblem,
    sas: &[SurrogateParams],
    ln_k: &KineticParameters,
) -> f64 {
    (0..problem.datasets.len())
        .map(|ds| {
            loss_model_at(problem, &sas[ds], ln_k, ds)
                + problem.alpha * loss_data(problem, &sas[ds], ds)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SweepDirection {
    Tighten,
    Relax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParetoEntry {
    pub alpha: f64,
    pub j_d: f64,
    pub j_m: f64,
    pub rho: Option<f64>,
    pub direction: SweepDirection,
}

#[derive(Debug, Clone, Default)]
pub struct ParetoRecord {
    pub entries: Vec<ParetoEntry>,
}

#[derive(Debug, Clone)]
pub struct InverseSolution {
    pub surrogates: Vec<SurrogateParams>,
    pub ln_k: KineticParameters,
    pub data_losses: Vec<f64>,
    pub model_losses: Vec<f64>,
    /// Objective after initialization and each epoch of the last cycle.
    pub history: Vec<f64>,
    pub parameters: ParameterReport,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub record: ParetoRecord,
    pub selected_alpha: f64,
    pub solution: InverseSolution,
}

/// Per-step recovered-parameter table with per-kind MAE buckets and overall
/// Pearson correlation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParameterRow {
    pub label: String,
    pub kind: char,
    pub ln_k_fit: f64,
    pub ln_k_true: Option<f64>,
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParameterReport {
    pub rows: Vec<ParameterRow>,
    /// `(kind letter, MAE)` for kinds present in the network.
    pub bucket_mae: Vec<(char, f64)>,
    pub overall_mae: Option<f64>,
    pub rho: Option<f64>,
}

pub fn recover_parameters(
    network: &ReactionNetwork,
    ln_k_true: Option<&[f64]>,
    ln_k_fit: &[f64],
) -> ParameterReport {
    let labels = network.step_labels();
    let rows: Vec<ParameterRow> = network
        .steps
        .iter()
        .map(|step| {
            let j = step.rate_index;
            let t = ln_k_true.map(|v| v[j]);
            ParameterRow {
                label: labels[j].clone(),
                kind: step.kind.letter(),
                ln_k_fit: ln_k_fit[j],
                ln_k_true: t,
                abs_error: t.map(|tv| math::abs(ln_k_fit[j] - tv)),
            }
        })
        .collect();

    let mut bucket_mae = Vec::new();
    for letter in ['g', 'd', 'a', 'c', 's'] {
        let errors: Vec<f64> = rows
            .iter()
            .filter(|r| r.kind == letter)
            .filter_map(|r| r.abs_error)
            .collect();
        if !errors.is_empty() {
            bucket_mae.push((letter, errors.iter().sum::<f64>() / errors.len() as f64));
        }
    }
    let overall_mae = ln_k_true.map(|t| {
        t.iter()
            .zip(ln_k_fit)
            .map(|(a, b)| math::abs(a - b))
            .sum::<f64>()
            / t.len() as f64
    });
    let rho = ln_k_true.and_then(|t| metrics::pearson(t, ln_k_fit));
    ParameterReport {
        rows,
        bucket_mae,
        overall_mae,
        rho,
    }
}

/// Shared training state across sweep cycles (warm starts).
struct InverseTrainer {
    flat: Vec<f64>,
    layouts: Vec<ParamLayout>,
    lnk_offset: usize,
    trainer: BatchTrainer,
}

impl InverseTrainer {
    fn new(problem: &InverseProblem, seed: u64) -> Result<InverseTrainer, TrainError> {
        for c in &problem.configs {
            c.validate().map_err(|e| TrainError::InvalidProblem {
                msg: format!("{e}"),
            })?;
        }
        if problem.datasets.len() != problem.configs.len()
            || problem.datasets.len() != problem.collocations.len()
        {
            return Err(TrainError::InvalidProblem {
                msg: "datasets, configs and collocations must align".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flat = Vec::new();
        let mut layouts = Vec::new();
        for config in &problem.configs {
            let init = SurrogateParams::init(config, &mut rng);
            let layout = ParamLayout::for_config(config, flat.len());
            init.push_flat(&mut flat);
            debug_assert_eq!(layout.end, flat.len());
            layouts.push(layout);
        }
        let lnk_offset = flat.len();
        let m = problem.network.n_steps();
        // kinetic parameters initialized uniformly at 1e-2 scale
        for _ in 0..m {
            flat.push(rng.random_range(-1e-2..1e-2));
        }
        let n_params = flat.len();

        let mut terms = Vec::new();
        for ds in 0..problem.datasets.len() {
            let config = &problem.configs[ds];
            let layout = &layouts[ds];

            let mut b = GraphBuilder::new();
            let residual = build_residual_graph(
                &mut b,
                &problem.network,
                Ok(lnk_offset),
                config,
                layout,
                &[],
                0.0,
            );
            let model_graph = b.finish(residual, n_params);
            terms.push(LossTerm::new(
                model_graph,
                problem.collocations[ds].clone(),
                1.0,
            ));

            let mut b = GraphBuilder::new();
            let state = surrogate::build_state_node(&mut b, config, layout, &[], 0.0);
            let n_gas = problem.network.n_gas();
            let pred = match problem.datasets[ds].scenario {
                Scenario::Q => b.slice(state, 0, n_gas),
                _ => {
                    let gas = b.slice(state, 0, n_gas);
                    let p = config.n_coverage();
                    let cov = b.slice(state, n_gas, p);
                    let (ls_off, ls_len) = layout.ln_scaling.expect("SQ layout has scaling");
                    let lns = b.params(ls_off, ls_len);
                    let scale = b.exp(lns);
                    let signals = b.mul_elem(scale, cov);
                    b.concat(gas, signals)
                }
            };
            let target = b.consts(vec![0.0; problem.n_obs(ds)]);
            let residual = b.sub(pred, target);
            let data_graph = b.finish(residual, n_params);
            let mut term = LossTerm::new(data_graph, problem.datasets[ds].t.clone(), problem.alpha);
            term.targets = Some((target, problem.datasets[ds].observed.clone()));
            terms.push(term);
        }

        let mut trainer = BatchTrainer::new(terms, n_params);
        trainer.clamp = Some((lnk_offset, m, LN_K_RANGE.0, LN_K_RANGE.1));
        Ok(InverseTrainer {
            flat,
            layouts,
            lnk_offset,
            trainer,
        })
    }

    fn set_alpha(&mut self, alpha: f64) {
        for (i, term) in self.trainer.terms.iter_mut().enumerate() {
            if i % 2 == 1 {
                term.weight = alpha;
            }
        }
    }

    fn run(
        &mut self,
        schedule: &StageSchedule,
        tol: f64,
        history: &mut Vec<f64>,
    ) -> Result<(), TrainError> {
        self.trainer.run(&mut self.flat, schedule, tol, history)
    }

    /// Unweighted per-dataset (model, data) losses.
    fn component_losses(&mut self) -> (Vec<f64>, Vec<f64>) {
        let all = self.trainer.losses(&self.flat);
        let mut model = Vec::new();
        let mut data = Vec::new();
        for (i, l) in all.into_iter().enumerate() {
            if i % 2 == 0 {
                model.push(l);
            } else {
                data.push(l);
            }
        }
        (model, data)
    }

    fn ln_k(&self, m: usize) -> Vec<f64> {
        self.flat[self.lnk_offset..self.lnk_offset + m].to_vec()
    }

    fn reset_adam(&mut self) {
        self.trainer.adam = AdamState::new(self.flat.len(), self.trainer.adam.lr);
    }

    fn solution(
        &mut self,
        problem: &InverseProblem,
        history: Vec<f64>,
    ) -> InverseSolution {
        let (model_losses, data_losses) = self.component_losses();
        let ln_k = self.ln_k(problem.network.n_steps());
        let surrogates: Vec<SurrogateParams> = problem
            .configs
            .iter()
            .zip(&self.layouts)
            .map(|(c, l)| {
                SurrogateParams::from_flat(c, &self.flat[l.start..l.end])
                    .expect("layout matches config")
            })
            .collect();
        let parameters =
            recover_parameters(&problem.network, problem.ln_k_true.as_deref(), &ln_k);
        InverseSolution {
            surrogates,
            ln_k: KineticParameters { ln_k },
            data_losses,
            model_losses,
            history,
            parameters,
        }
    }
}

/// Joint training of all surrogates, shared `ln_k` and scalings at the
/// problem's fixed alpha.
pub fn train_inverse(problem: &InverseProblem, seed: u64) -> Result<InverseSolution, TrainError> {
    let mut tr = InverseTrainer::new(problem, seed)?;
    tr.set_alpha(problem.alpha);
    let mut history = Vec::new();
    tr.run(&problem.schedule, problem.tol, &mut history)?;
    Ok(tr.solution(problem, history))
}

fn geometric_sequence(lo: f64, hi: f64, factor: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut a = lo;
    while a * factor <= hi * (1.0 + 1e-9) {
        a *= factor;
        out.push(a);
    }
    out
}

/// Maximum-curvature knee of log(j_d) as a function of log(j_m).
/// Returns the index into `entries`.
fn knee_index(entries: &[ParetoEntry]) -> usize {
    if entries.len() < 3 {
        return entries.len().saturating_sub(1);
    }
    let x: Vec<f64> = entries.iter().map(|e| math::log10(e.j_m.max(1e-300))).collect();
    let y: Vec<f64> = entries.iter().map(|e| math::log10(e.j_d.max(1e-300))).collect();
    let mut best = 1usize;
    let mut best_curv = -1.0;
    for i in 1..entries.len() - 1 {
        let dx1 = x[i] - x[i - 1];
        let dx2 = x[i + 1] - x[i];
        if dx1.abs() < 1e-12 || dx2.abs() < 1e-12 {
            continue;
        }
        let s1 = (y[i] - y[i - 1]) / dx1;
        let s2 = (y[i + 1] - y[i]) / dx2;
        let curv = math::abs(2.0 * (s2 - s1) / (x[i + 1] - x[i - 1]));
        if curv > best_curv {
            best_curv = curv;
            best = i;
        }
    }
    best
}

/// Tightening/relaxation sweep over alpha with warm starts; selects the model
/// checkpointed at the relaxation knee and refines it there.
pub fn alpha_sweep(problem: &InverseProblem, seed: u64) -> Result<SweepOutcome, TrainError> {
    let plan = &problem.sweep;
    let mut tr = InverseTrainer::new(problem, seed)?;
    let mut record = ParetoRecord::default();
    let m = problem.network.n_steps();
    let rho_of = |tr: &InverseTrainer| {
        problem
            .ln_k_true
            .as_deref()
            .and_then(|t| metrics::pearson(t, &tr.ln_k(m)))
    };

    let run_cycle = |tr: &mut InverseTrainer,
                         alpha: f64,
                         direction: SweepDirection,
                         record: &mut ParetoRecord|
     -> Result<(), TrainError> {
        tr.set_alpha(alpha);
        let mut history = Vec::new();
        tr.run(&plan.cycle, problem.tol, &mut history)?;
        let (model, data) = tr.component_losses();
        record.entries.push(ParetoEntry {
            alpha,
            j_d: data.iter().sum(),
            j_m: model.iter().sum(),
            rho: rho_of(tr),
            direction,
        });
        Ok(())
    };

    let tighten = geometric_sequence(plan.alpha_min, plan.alpha_max, plan.tighten_factor);
    for &alpha in &tighten {
        run_cycle(&mut tr, alpha, SweepDirection::Tighten, &mut record)?;
    }

    // monotone trend check on the tightening pass
    if record.entries.len() >= 3 {
        let alphas: Vec<f64> = record.entries.iter().map(|e| e.alpha).collect();
        let jds: Vec<f64> = record.entries.iter().map(|e| e.j_d).collect();
        if let Some(s) = metrics::spearman(&alphas, &jds) {
            if s > -0.9 {
                log::warn!("tightening pass j_d trend is not monotone (spearman {s:.3})");
            }
        }
    }

    let mut relax = Vec::new();
    if record.entries.len() > 1 {
        let mut a = plan.alpha_max / plan.relax_factor;
        while a >= plan.alpha_min * (1.0 - 1e-9) {
            relax.push(a);
            a /= plan.relax_factor;
        }
    }
    let mut snapshots: Vec<Vec<f64>> = Vec::with_capacity(relax.len());
    let relax_start = record.entries.len();
    for &alpha in &relax {
        run_cycle(&mut tr, alpha, SweepDirection::Relax, &mut record)?;
        snapshots.push(tr.flat.clone());
    }

    let (selected_alpha, knee_flat) = if relax.is_empty() {
        (record.entries.last().expect("nonempty record").alpha, tr.flat.clone())
    } else {
        let k = knee_index(&record.entries[relax_start..]);
        (relax[k], snapshots[k].clone())
    };

    // refine at the knee from its checkpoint
    tr.flat = knee_flat;
    tr.reset_adam();
    tr.set_alpha(selected_alpha);
    let mut history = Vec::new();
    tr.run(&plan.refine, problem.tol, &mut history)?;

    let solution = tr.solution(problem, history);
    Ok(SweepOutcome {
        record,
        selected_alpha,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::dataset::{generate_dataset, GenerateOptions};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_problem(scenario: Scenario) -> InverseProblem {
        let bundle = corpus::bundled("g").unwrap();
        let net = bundle.network();
        let params = bundle.parameters();
        let mut datasets = Vec::new();
        for (i, ic) in [corpus::IC1, corpus::IC2].iter().enumerate() {
            let x0 = corpus::initial_state(&net, *ic);
            let opts = GenerateOptions {
                seed: i as u64,
                horizon: Some(bundle.horizons[i]),
                ..Default::default()
            };
            let (_, ds) = generate_dataset(&net, &params, &x0, scenario, &opts).unwrap();
            datasets.push(ds);
        }
        let mut p = InverseProblem::new(net, datasets, [4, 4, 4]);
        p.ln_k_true = Some(bundle.ln_k());
        p
    }

    #[test]
    fn zero_epoch_run_keeps_initial_parameters() {
        let mut problem = small_problem(Scenario::Q);
        problem.schedule = StageSchedule::single(1e-4, 0, 0);
        let sol = train_inverse(&problem, 3).unwrap();
        // matches the seeded initialization draw
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for config in &problem.configs {
            let _ = SurrogateParams::init(config, &mut rng);
        }
        let expect: Vec<f64> = (0..problem.network.n_steps())
            .map(|_| rng.random_range(-1e-2..1e-2))
            .collect();
        assert_eq!(sol.ln_k.ln_k, expect);
    }

    #[test]
    fn loss_total_is_affine_in_alpha() {
        let mut problem = small_problem(Scenario::Q);
        problem.schedule = StageSchedule::single(1e-4, 0, 0);
        let sol = train_inverse(&problem, 1).unwrap();
        problem.alpha = 1.5;
        let j1 = loss_total(&problem, &sol.surrogates, &sol.ln_k);
        problem.alpha = 3.0;
        let j2 = loss_total(&problem, &sol.surrogates, &sol.ln_k);
        let jd: f64 = (0..problem.datasets.len())
            .map(|ds| loss_data(&problem, &sol.surrogates[ds], ds))
            .sum();
        assert!((j2 - j1 - 1.5 * jd).abs() < 1e-10 * (1.0 + j1.abs()));
    }

    #[test]
    fn q_loss_ignores_coverage_channels() {
        // type-g has no coverages; use da for the real check
        let bundle = corpus::bundled("da").unwrap();
        let net = bundle.network();
        let params = bundle.parameters();
        let x0 = corpus::initial_state(&net, corpus::IC1);
        let opts = GenerateOptions {
            horizon: Some(bundle.horizons[0]),
            ..Default::default()
        };
        let (_, ds) = generate_dataset(&net, &params, &x0, Scenario::Q, &opts).unwrap();
        let problem = InverseProblem::new(net, vec![ds], [4, 4, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sa = SurrogateParams::init(&problem.configs[0], &mut rng);
        let before = loss_data(&problem, &sa, 0);
        for w in sa.coverage_weights.as_mut().unwrap().flat.iter_mut() {
            *w += 0.37;
        }
        let after = loss_data(&problem, &sa, 0);
        assert_eq!(before, after);
    }

    #[test]
    fn data_loss_zero_on_exact_reproduction_and_matches_direct_sum() {
        let mut problem = small_problem(Scenario::Q);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sa = SurrogateParams::init(&problem.configs[0], &mut rng);

        // a surrogate that reproduces its dataset exactly has j_d = 0
        let mut exact = problem.clone();
        for (row, &t) in exact.datasets[0]
            .observed
            .iter_mut()
            .zip(&problem.datasets[0].t.clone())
        {
            *row = surrogate::evaluate(&problem.configs[0], &sa, &[], 0.0, t);
        }
        assert_eq!(loss_data(&exact, &sa, 0), 0.0);

        // constant offset on one channel: verified against direct summation
        let delta = 0.25;
        for row in problem.datasets[0].observed.iter_mut() {
            row[1] -= delta;
        }
        let got = loss_data(&problem, &sa, 0);
        let d = problem.datasets[0].t.len() as f64;
        let mut want = 0.0;
        for (row, &t) in problem.datasets[0]
            .observed
            .iter()
            .zip(&problem.datasets[0].t)
        {
            let state = surrogate::evaluate(&problem.configs[0], &sa, &[], 0.0, t);
            for (i, &obs) in row.iter().enumerate() {
                let e = state[i] - obs;
                want += e * e;
            }
        }
        want /= d;
        assert!((got - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn knee_is_invariant_to_jd_rescaling() {
        let mk = |scale: f64| -> Vec<ParetoEntry> {
            // synthetic L-shaped relaxation curve
            let pts = [
                (1e-1, 1e-6),
                (3e-2, 2e-6),
                (1e-2, 5e-6),
                (3e-3, 2e-5),
                (1e-3, 1e-3),
                (8e-4, 1e-1),
                (7e-4, 1e1),
            ];
            pts.iter()
                .map(|&(jm, jd)| ParetoEntry {
                    alpha: 1.0,
                    j_d: jd * scale,
                    j_m: jm,
                    rho: None,
                    direction: SweepDirection::Relax,
                })
                .collect()
        };
        let a = knee_index(&mk(1.0));
        let b = knee_index(&mk(123.456));
        assert_eq!(a, b);
    }

    #[test]
    fn recover_parameters_table() {
        let bundle = corpus::bundled("dc").unwrap();
        let net = bundle.network();
        let truth = bundle.ln_k();
        let report = recover_parameters(&net, Some(&truth), &truth);
        assert_eq!(report.rows.len(), net.n_steps());
        assert_eq!(report.overall_mae, Some(0.0));
        assert_eq!(report.rho, Some(1.0));
        assert!(report.bucket_mae.iter().all(|&(_, mae)| mae == 0.0));
        let kinds: Vec<char> = report.bucket_mae.iter().map(|&(k, _)| k).collect();
        assert_eq!(kinds, vec!['d', 'c']);
    }
}
