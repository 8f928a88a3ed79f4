//! Reference numerical integration of the kinetic ODEs.
//!
//! The ground-truth generator is an adaptive embedded Dormand-Prince 5(4)
//! scheme with PI step control; a fixed-step implicit trapezoidal integrator
//! is available as a fallback. Both land exactly on the requested grid.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinetics::{self, KineticParameters, KineticsError};
use crate::math;
use crate::network::ReactionNetwork;

/// Default relative tolerance of the reference integrator.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Default absolute tolerance of the reference integrator.
pub const DEFAULT_ATOL: f64 = 1e-12;

const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Trajectory {
    /// Strictly increasing time points.
    pub t: Vec<f64>,
    /// One state row per time point.
    pub x: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|row| row[i]).collect()
    }

    /// Coverage rows sum to one (1e-9) and no entry dips below -1e-12.
    pub fn validate(&self, network: &ReactionNetwork) -> bool {
        self.x.iter().all(|row| {
            let cov: f64 = network.bound_indices().map(|i| row[i]).sum();
            let cov_ok = network.n_bound() == 0 || (cov - 1.0).abs() <= 1e-9;
            cov_ok && row.iter().all(|&v| v >= -1e-12)
        })
    }

    /// Time derivatives along the trajectory from the kinetic model.
    pub fn derivatives(
        &self,
        network: &ReactionNetwork,
        params: &KineticParameters,
    ) -> Result<Vec<Vec<f64>>, KineticsError> {
        self.x
            .iter()
            .map(|row| kinetics::ode_rhs(network, row, params))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:e}")]
    StepSizeUnderflow { t: f64 },
    #[error("tolerance not achievable: step budget exhausted at t = {t:e}")]
    ToleranceNotAchievable { t: f64 },
    #[error("time grid must be strictly increasing")]
    InvalidGrid,
    #[error("newton iteration for the trapezoidal step failed at t = {t:e}")]
    NewtonFailed { t: f64 },
    #[error("horizon search exceeded 2^30 time units without equilibrating")]
    HorizonSearchFailed,
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// Prepared right-hand side: orders and rates resolved once.
struct Rhs<'a> {
    network: &'a ReactionNetwork,
    orders: Vec<Vec<(usize, u32)>>,
    k: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(network: &'a ReactionNetwork, params: &KineticParameters) -> Result<Self, OdeError> {
        if params.len() != network.n_steps() {
            return Err(KineticsError::ParameterLength {
                got: params.len(),
                want: network.n_steps(),
            }
            .into());
        }
        Ok(Rhs {
            network,
            orders: kinetics::power_orders(network),
            k: params.rates(),
        })
    }

    /// Raw polynomial evaluation; trial stages may wander slightly negative.
    fn eval(&self, c: &[f64], out: &mut [f64]) {
        let r = kinetics::rate_vector_prepared(&self.orders, &self.k, c);
        for (o, row) in out.iter_mut().zip(&self.network.stoichiometry) {
            *o = row.iter().zip(&r).map(|(&m, &rj)| m as f64 * rj).sum();
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dopri<'a> {
    rhs: Rhs<'a>,
    rtol: f64,
    atol: f64,
    n: usize,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    h: f64,
    facold: f64,
    steps: usize,
}

impl<'a> Dopri<'a> {
    fn new(rhs: Rhs<'a>, t0: f64, y0: &[f64], rtol: f64, atol: f64) -> Self {
        let n = y0.len();
        let mut s = Dopri {
            rhs,
            rtol,
            atol,
            n,
            t: t0,
            y: y0.to_vec(),
            k: core::array::from_fn(|_| vec![0.0; n]),
            h: 0.0,
            facold: 1e-4,
            steps: 0,
        };
        let mut f0 = vec![0.0; n];
        s.rhs.eval(&s.y, &mut f0);
        s.k[0] = f0;
        s
    }

    fn initial_step(&self, t_end: f64) -> f64 {
        let span = t_end - self.t;
        let sk = |i: usize| self.atol + self.rtol * math::abs(self.y[i]);
        let d0 = rms((0..self.n).map(|i| self.y[i] / sk(i)));
        let d1 = rms((0..self.n).map(|i| self.k[0][i] / sk(i)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span.max(1e-6)
        } else {
            0.01 * d0 / d1
        };
        h0.min(span)
    }

    /// One attempted step of size `self.h`; returns the scaled error norm and
    /// the candidate state in `ynew`.
    fn try_step(&mut self, ynew: &mut [f64]) -> f64 {
        let Dopri {
            rhs, n, y, k, h, ..
        } = self;
        let (n, h) = (*n, *h);
        let mut stage = vec![0.0; n];
        let tableau: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, coeffs) in tableau.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &a) in coeffs.iter().enumerate() {
                    acc += a * k[j][i];
                }
                stage[i] = y[i] + h * acc;
            }
            rhs.eval(&stage, &mut k[s + 1]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, &b) in B.iter().enumerate() {
                acc += b * k[j][i];
            }
            ynew[i] = y[i] + h * acc;
        }
        // FSAL stage
        rhs.eval(ynew, &mut k[6]);

        let mut err_acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, &c) in ERR.iter().enumerate() {
                e += c * k[j][i];
            }
            e *= h;
            let sk = self.atol + self.rtol * math::abs(y[i]).max(math::abs(ynew[i]));
            err_acc += (e / sk) * (e / sk);
        }
        math::sqrt(err_acc / n as f64)
    }

    /// Advance to exactly `t_target`.
    fn advance_to(&mut self, t_target: f64) -> Result<(), OdeError> {
        const SAFE: f64 = 0.9;
        const BETA: f64 = 0.04;
        const EXPO1: f64 = 0.2 - BETA * 0.75;
        const FAC_SHRINK: f64 = 5.0; // max shrink 1/5
        const FAC_GROW: f64 = 0.1; // max growth 10x

        if self.h == 0.0 {
            self.h = self.initial_step(t_target);
        }
        let mut ynew = vec![0.0; self.n];
        while self.t < t_target {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(OdeError::ToleranceNotAchievable { t: self.t });
            }
            if self.h < 1e-14 * (1.0 + math::abs(self.t)) {
                return Err(OdeError::StepSizeUnderflow { t: self.t });
            }
            let mut clipped = false;
            if self.t + self.h >= t_target {
                self.h = t_target - self.t;
                clipped = true;
            }
            let err = self.try_step(&mut ynew);
            if err <= 1.0 {
                self.t = if clipped { t_target } else { self.t + self.h };
                core::mem::swap(&mut self.y, &mut ynew);
                self.k.swap(0, 6); // FSAL
                let fac11 = math::powf(err.max(1e-16), EXPO1);
                let fac = (fac11 / math::powf(self.facold, BETA) / SAFE)
                    .clamp(FAC_GROW, FAC_SHRINK);
                self.facold = err.max(1e-4);
                self.h /= fac;
            } else {
                let fac11 = math::powf(err, EXPO1);
                self.h /= (fac11 / SAFE).min(FAC_SHRINK);
            }
        }
        Ok(())
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for v in values {
        acc += v * v;
        n += 1;
    }
    math::sqrt(acc / n.max(1) as f64)
}

fn check_grid(t_grid: &[f64]) -> Result<(), OdeError> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OdeError::InvalidGrid);
    }
    Ok(())
}

/// Snap integrator round-off negatives (within the guard band) to zero.
fn snap_row(mut row: Vec<f64>) -> Vec<f64> {
    for v in &mut row {
        if *v < 0.0 && *v >= kinetics::NEGATIVE_CLAMP {
            *v = 0.0;
        }
    }
    row
}

/// Adaptive Dormand-Prince 5(4) reference solution sampled on `t_grid`.
///
/// `t_grid[0]` is the initial time; its row is `x0`.
pub fn integrate_reference(
    network: &ReactionNetwork,
    params: &KineticParameters,
    x0: &[f64],
    t_grid: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError> {
    check_grid(t_grid)?;
    let rhs = Rhs::new(network, params)?;
    let mut solver = Dopri::new(rhs, t_grid[0], x0, rtol, atol);
    let mut x = Vec::with_capacity(t_grid.len());
    x.push(x0.to_vec());
    for &t in &t_grid[1..] {
        solver.advance_to(t)?;
        x.push(snap_row(solver.y.clone()));
    }
    Ok(Trajectory {
        t: t_grid.to_vec(),
        x,
    })
}

/// Fixed-step implicit trapezoidal fallback; `substeps` per grid interval.
pub fn integrate_trapezoidal(
    network: &ReactionNetwork,
    params: &KineticParameters,
    x0: &[f64],
    t_grid: &[f64],
    substeps: usize,
) -> Result<Trajectory, OdeError> {
    check_grid(t_grid)?;
    let rhs = Rhs::new(network, params)?;
    let n = x0.len();
    let mut y = x0.to_vec();
    let mut x = Vec::with_capacity(t_grid.len());
    x.push(y.clone());
    let mut f0 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    for w in t_grid.windows(2) {
        let h = (w[1] - w[0]) / substeps.max(1) as f64;
        for s in 0..substeps.max(1) {
            let t = w[0] + s as f64 * h;
            rhs.eval(&y, &mut f0);
            // Newton on g(z) = z - y - h/2 (f(y) + f(z))
            let mut z: Vec<f64> = (0..n).map(|i| y[i] + h * f0[i]).collect();
            let mut converged = false;
            for _ in 0..50 {
                rhs.eval(&z, &mut f1);
                let g: Vec<f64> = (0..n)
                    .map(|i| z[i] - y[i] - 0.5 * h * (f0[i] + f1[i]))
                    .collect();
                let gn = rms(g.iter().copied());
                if gn < 1e-13 {
                    converged = true;
                    break;
                }
                // J = I - h/2 df/dz, forward-difference Jacobian
                let mut jac = vec![vec![0.0; n]; n];
                let mut fp = vec![0.0; n];
                for col in 0..n {
                    let dz = 1e-8 * (1.0 + math::abs(z[col]));
                    let mut zp = z.clone();
                    zp[col] += dz;
                    rhs.eval(&zp, &mut fp);
                    for (row, jrow) in jac.iter_mut().enumerate() {
                        let df = (fp[row] - f1[row]) / dz;
                        jrow[col] = if row == col { 1.0 } else { 0.0 } - 0.5 * h * df;
                    }
                }
                let delta = solve_dense(&mut jac, &g).ok_or(OdeError::NewtonFailed { t })?;
                for i in 0..n {
                    z[i] -= delta[i];
                }
            }
            if !converged {
                return Err(OdeError::NewtonFailed { t });
            }
            y = z;
        }
        x.push(snap_row(y.clone()));
    }
    Ok(Trajectory {
        t: t_grid.to_vec(),
        x,
    })
}

/// Gaussian elimination with partial pivoting; consumes `a`.
fn solve_dense(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            math::abs(a[i][col])
                .partial_cmp(&math::abs(a[j][col]))
                .unwrap()
        })?;
        if math::abs(a[piv][col]) < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[col][col];
        for row in 0..col {
            x[row] -= a[row][col] * x[col];
        }
    }
    Some(x)
}

/// Smallest horizon from a doubling search (1, 2, 4, ...) such that the
/// largest |dc_i/dt| at the horizon falls below 1e-4 of the largest along the
/// whole trajectory. An already-equilibrated state returns the minimum 1.0.
pub fn choose_horizon(
    network: &ReactionNetwork,
    params: &KineticParameters,
    x0: &[f64],
) -> Result<f64, OdeError> {
    const RATIO: f64 = 1e-4;
    const SAMPLES: usize = 256;
    let mut t_end = 1.0f64;
    loop {
        let mut grid = vec![0.0];
        grid.extend(crate::dataset::log_grid(0.0, t_end, SAMPLES));
        let traj = integrate_reference(network, params, x0, &grid, 1e-9, 1e-11)?;
        let derivs = traj.derivatives(network, params)?;
        let inf = |row: &Vec<f64>| row.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)));
        let max_all = derivs.iter().map(inf).fold(0.0f64, f64::max);
        let at_end = inf(derivs.last().unwrap());
        if max_all < 1e-12 || at_end < RATIO * max_all {
            return Ok(t_end);
        }
        t_end *= 2.0;
        if t_end > (1u64 << 30) as f64 {
            return Err(OdeError::HorizonSearchFailed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let net = parse_network("A <-> C").unwrap();
        let params = KineticParameters::new(vec![0.0, -30.0]).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0];
        let traj =
            integrate_reference(&net, &params, &[1.0, 0.0], &grid, 1e-12, 1e-14).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let exact = math::exp(-t);
            assert!(
                (traj.x[i][0] - exact).abs() < 1e-8,
                "t={t}: {} vs {exact}",
                traj.x[i][0]
            );
            assert!((traj.x[i][1] - (1.0 - exact)).abs() < 1e-8);
        }
    }

    #[test]
    fn equilibrium_constant_identity() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[10.0, 1.0]).unwrap();
        let grid = [0.0, 50.0];
        let traj =
            integrate_reference(&net, &params, &[0.6, 0.4, 0.0], &grid, 1e-12, 1e-14).unwrap();
        let last = traj.x.last().unwrap();
        let keq = last[2] / (last[0] * last[1]);
        assert!((keq - 10.0).abs() < 1e-6, "K = {keq}");
    }

    #[test]
    fn trapezoidal_agrees_with_dopri() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[10.0, 1.0]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let a = integrate_reference(&net, &params, &[0.6, 0.4, 0.0], &grid, 1e-12, 1e-14).unwrap();
        let b = integrate_trapezoidal(&net, &params, &[0.6, 0.4, 0.0], &grid, 200).unwrap();
        for (ra, rb) in a.x.iter().zip(&b.x) {
            for (va, vb) in ra.iter().zip(rb) {
                assert!((va - vb).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn horizon_for_unit_decay() {
        let net = parse_network("A <-> C").unwrap();
        let params = KineticParameters::new(vec![0.0, -30.0]).unwrap();
        // decay rate 1: |dc/dt| falls below 1e-4 of its max at t = ln(1e4) = 9.2,
        // which the doubling search rounds up to 16
        let t_end = choose_horizon(&net, &params, &[1.0, 0.0]).unwrap();
        assert_eq!(t_end, 16.0);
    }

    #[test]
    fn horizon_at_equilibrium_is_minimum() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[10.0, 1.0]).unwrap();
        let t_end = choose_horizon(&net, &params, &[0.1, 0.2, 0.2]).unwrap();
        assert_eq!(t_end, 1.0);
    }
}
