//! Mass-action rate evaluation and the microkinetic ODE right-hand side.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::math;
use crate::network::ReactionNetwork;

/// Concentrations this far below zero are treated as integrator round-off and
/// clamped to zero before power-law evaluation; anything lower is an error.
pub const NEGATIVE_CLAMP: f64 = -1e-9;

/// Natural-log rate constants, one per step column; `k = exp(ln_k)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KineticParameters {
    pub ln_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticsError {
    #[error("ln_k[{index}] is not finite")]
    NonFiniteParameter { index: usize },
    #[error("ln_k has {got} entries, network has {want} steps")]
    ParameterLength { got: usize, want: usize },
    #[error("concentration c[{index}] = {value:e} is below the -1e-9 guard")]
    NegativeConcentration { index: usize, value: f64 },
}

impl KineticParameters {
    pub fn new(ln_k: Vec<f64>) -> Result<Self, KineticsError> {
        if let Some(index) = ln_k.iter().position(|v| !v.is_finite()) {
            return Err(KineticsError::NonFiniteParameter { index });
        }
        Ok(KineticParameters { ln_k })
    }

    /// From raw rate constants (must be strictly positive).
    pub fn from_rates(k: &[f64]) -> Result<Self, KineticsError> {
        KineticParameters::new(k.iter().map(|&v| math::ln(v)).collect())
    }

    pub fn rates(&self) -> Vec<f64> {
        self.ln_k.iter().map(|&v| math::exp(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.ln_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_k.is_empty()
    }
}

/// Reactant orders per rate column: `(species index, order)` with
/// `order = max(-M[i][j], 0)`.
pub fn power_orders(network: &ReactionNetwork) -> Vec<Vec<(usize, u32)>> {
    let n = network.n_species();
    let m = network.n_steps();
    let mut orders = vec![Vec::new(); m];
    for (j, col) in orders.iter_mut().enumerate() {
        for i in 0..n {
            let v = network.stoichiometry[i][j];
            if v < 0 {
                col.push((i, (-v) as u32));
            }
        }
    }
    orders
}

fn check_params(network: &ReactionNetwork, params: &KineticParameters) -> Result<(), KineticsError> {
    if params.len() != network.n_steps() {
        return Err(KineticsError::ParameterLength {
            got: params.len(),
            want: network.n_steps(),
        });
    }
    Ok(())
}

/// Guard and clamp a state vector for power-law evaluation.
fn clamped_state(c: &[f64]) -> Result<Vec<f64>, KineticsError> {
    let mut out = Vec::with_capacity(c.len());
    for (index, &value) in c.iter().enumerate() {
        if value < NEGATIVE_CLAMP {
            return Err(KineticsError::NegativeConcentration { index, value });
        }
        out.push(if value < 0.0 { 0.0 } else { value });
    }
    Ok(out)
}

/// Mass-action rate vector `r[j] = exp(ln_k[j]) * prod_i c[i]^order(i,j)`.
pub fn rate_vector(
    network: &ReactionNetwork,
    c: &[f64],
    params: &KineticParameters,
) -> Result<Vec<f64>, KineticsError> {
    check_params(network, params)?;
    let c = clamped_state(c)?;
    let orders = power_orders(network);
    let k = params.rates();
    Ok(rate_vector_prepared(&orders, &k, &c))
}

/// Rate evaluation on precomputed orders and rates, without the state guard.
/// Hot path for the integrator and residual graphs.
pub fn rate_vector_prepared(orders: &[Vec<(usize, u32)>], k: &[f64], c: &[f64]) -> Vec<f64> {
    let mut r = Vec::with_capacity(orders.len());
    for (j, col) in orders.iter().enumerate() {
        let mut v = k[j];
        for &(i, p) in col {
            v *= match p {
                1 => c[i],
                2 => c[i] * c[i],
                _ => math::powi(c[i], p as i32),
            };
        }
        r.push(v);
    }
    r
}

/// Microkinetic ODE right-hand side `dc/dt = M r(c)`.
pub fn ode_rhs(
    network: &ReactionNetwork,
    c: &[f64],
    params: &KineticParameters,
) -> Result<Vec<f64>, KineticsError> {
    let r = rate_vector(network, c, params)?;
    Ok(apply_stoichiometry(network, &r))
}

/// `M r` for a given rate vector.
pub fn apply_stoichiometry(network: &ReactionNetwork, r: &[f64]) -> Vec<f64> {
    network
        .stoichiometry
        .iter()
        .map(|row| row.iter().zip(r).map(|(&m, &rj)| m as f64 * rj).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    #[test]
    fn type_g_rate_and_rhs() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[10.0, 1.0]).unwrap();
        let r = rate_vector(&net, &[1.0, 1.0, 0.0], &params).unwrap();
        assert!((r[0] - 10.0).abs() < 1e-13 && r[1] == 0.0, "{r:?}");
        let dc = ode_rhs(&net, &[1.0, 1.0, 0.0], &params).unwrap();
        for (got, want) in dc.iter().zip(&[-10.0, -10.0, 10.0]) {
            assert!((got - want).abs() < 1e-13, "{dc:?}");
        }
    }

    #[test]
    fn equilibrium_state_has_zero_rhs() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[10.0, 1.0]).unwrap();
        // k1 * xa * xb == k2 * xc
        let state = [0.1, 0.2, 0.2];
        let dc = ode_rhs(&net, &state, &params).unwrap();
        for v in dc {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn zero_species_kill_consuming_columns() {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        let mut c = vec![0.0; net.n_species()];
        c[net.free_site_index().unwrap()] = 1.0;
        let params = KineticParameters::new(vec![0.5; net.n_steps()]).unwrap();
        let r = rate_vector(&net, &c, &params).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_guard() {
        let net = parse_network("A + B <-> C").unwrap();
        let params = KineticParameters::from_rates(&[1.0, 1.0]).unwrap();
        // within guard: clamped to zero
        let r = rate_vector(&net, &[1.0, -1e-10, 0.0], &params).unwrap();
        assert_eq!(r[0], 0.0);
        // beyond guard: error
        let err = rate_vector(&net, &[1.0, -1e-6, 0.0], &params).unwrap_err();
        assert!(matches!(
            err,
            KineticsError::NegativeConcentration { index: 1, .. }
        ));
    }

    #[test]
    fn bound_rows_conserve_sites_in_rhs() {
        let net =
            parse_network("A + * <-> A*\nB + * <-> B*\nC + * <-> C*\nA* + B* <-> C*").unwrap();
        let params = KineticParameters::new(vec![1.2, -0.3, 0.7, 0.0, 2.0, 1.0, -1.0, 0.4]).unwrap();
        let c = [0.3, 0.2, 0.1, 0.15, 0.25, 0.05, 0.55];
        let dc = ode_rhs(&net, &c, &params).unwrap();
        let bound_sum: f64 = net.bound_indices().map(|i| dc[i]).sum();
        assert!(bound_sum.abs() < 1e-13);
    }
}
