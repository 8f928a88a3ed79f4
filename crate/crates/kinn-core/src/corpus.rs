//! Bundled example networks (g, da, dc, dcs) with their rate constants,
//! surrogate architectures, initial conditions and frozen time horizons.

use alloc::vec::Vec;

use crate::kinetics::KineticParameters;
use crate::math;
use crate::network::{parse_network, ReactionNetwork};

/// Initial condition 1: similar concentrations of both reactants, clean surface.
pub const IC1: [f64; 3] = [0.6, 0.4, 0.0];
/// Initial condition 2: considerable amount of product present, clean surface.
pub const IC2: [f64; 3] = [0.2, 0.3, 0.5];

pub struct BundledNetwork {
    pub name: &'static str,
    /// Reaction-DSL source.
    pub source: &'static str,
    /// Forward/reverse rate-constant pairs, one per reaction line.
    pub rate_pairs: &'static [(f64, f64)],
    /// Rounded ln(k) vector as printed in the reference tables (2 decimals).
    pub printed_ln_k: &'static [f64],
    /// Hidden widths of the gas and coverage nets.
    pub hidden: [usize; 3],
    /// Hidden width of the characteristic-time net.
    pub kappa_hidden: usize,
    /// Frozen integration horizons for IC1 and IC2 (doubling-search output).
    pub horizons: [f64; 2],
}

pub const TYPE_G: BundledNetwork = BundledNetwork {
    name: "g",
    source: "# homogeneous reversible association\nA + B <-> C\n",
    rate_pairs: &[(10.0, 1.0)],
    printed_ln_k: &[2.30, 0.00],
    hidden: [5, 5, 5],
    kappa_hidden: 3,
    horizons: [2.0, 2.0],
};

pub const TYPE_DA: BundledNetwork = BundledNetwork {
    name: "da",
    source: "\
# ad/desorption of A, B, C plus a surface reaction between adsorbed molecules
A + * <-> A*
B + * <-> B*
C + * <-> C*
A* + B* <-> C* + *
",
    rate_pairs: &[(10.0, 4.0), (40.0, 60.0), (200.0, 40.0), (100.0, 80.0)],
    printed_ln_k: &[2.30, 1.39, 3.69, 4.09, 5.30, 3.69, 4.61, 4.38],
    hidden: [12, 12, 12],
    kappa_hidden: 3,
    horizons: [1.0, 1.0],
};

pub const TYPE_DC: BundledNetwork = BundledNetwork {
    name: "dc",
    source: "\
# the surface association goes through a dissociated intermediate D*
A + * <-> A*
B + * <-> B*
C + * <-> C*
B* + * <-> 2D*
A* + D* <-> C* + *
",
    rate_pairs: &[
        (20.0, 8.0),
        (16.0, 4.0),
        (12.0, 8.0),
        (1200.0, 400.0),
        (2000.0, 1600.0),
    ],
    printed_ln_k: &[3.00, 2.08, 2.77, 1.39, 2.48, 2.08, 7.09, 5.99, 7.60, 7.38],
    hidden: [16, 16, 16],
    kappa_hidden: 6,
    horizons: [2.0, 1.0],
};

pub const TYPE_DCS: BundledNetwork = BundledNetwork {
    name: "dcs",
    source: "\
# both reactants dissociate; intermediates D*, E*, F* react on the surface
A + * <-> A*
B + * <-> B*
C + * <-> C*
A* + * <-> 2D*
B* + * <-> 2E*
D* + E* <-> F* + *
F* + E* <-> C* + *
",
    rate_pairs: &[
        (20.0, 8.0),
        (24.0, 12.0),
        (16.0, 40.0),
        (640.0, 960.0),
        (160.0, 80.0),
        (640.0, 240.0),
        (560.0, 160.0),
    ],
    printed_ln_k: &[
        3.00, 2.08, 3.18, 2.48, 2.77, 3.69, 6.46, 6.87, 5.08, 4.38, 6.46, 5.48, 6.33, 5.08,
    ],
    hidden: [20, 20, 20],
    kappa_hidden: 6,
    horizons: [1.0, 1.0],
};

pub const ALL: [&BundledNetwork; 4] = [&TYPE_G, &TYPE_DA, &TYPE_DC, &TYPE_DCS];

pub fn bundled(name: &str) -> Option<&'static BundledNetwork> {
    ALL.iter().find(|b| b.name == name).copied()
}

impl BundledNetwork {
    pub fn network(&self) -> ReactionNetwork {
        parse_network(self.source).expect("bundled network parses")
    }

    pub fn ln_k(&self) -> Vec<f64> {
        self.rate_pairs
            .iter()
            .flat_map(|&(f, r)| [math::ln(f), math::ln(r)])
            .collect()
    }

    pub fn parameters(&self) -> KineticParameters {
        KineticParameters::new(self.ln_k()).expect("finite bundled parameters")
    }

    pub fn horizon(&self, ic: usize) -> f64 {
        self.horizons[ic]
    }

    /// Exact ln of the rate ratios agrees with the printed vectors to the
    /// printed precision (3 significant figures).
    pub fn self_check(&self) -> bool {
        let ln_k = self.ln_k();
        ln_k.len() == self.printed_ln_k.len()
            && ln_k
                .iter()
                .zip(self.printed_ln_k)
                .all(|(a, b)| math::abs(a - b) <= 5.0e-3)
    }
}

/// Full initial state: gas concentrations in species order, clean surface
/// (all coverages zero, free site 1).
pub fn initial_state(network: &ReactionNetwork, gas: [f64; 3]) -> Vec<f64> {
    assert_eq!(network.n_gas(), 3, "bundled networks have gas species A, B, C");
    let mut x0 = Vec::with_capacity(network.n_species());
    x0.extend_from_slice(&gas);
    for i in network.bound_indices() {
        x0.push(if network.species[i].is_free_site() {
            1.0
        } else {
            0.0
        });
    }
    x0
}
