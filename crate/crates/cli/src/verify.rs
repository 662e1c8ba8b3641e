//! Analytic self-checks behind `xphase verify`.

use std::f64::consts::{FRAC_PI_2, PI};

use xphase_core::circuit::{build_transfer_matrix, two_photon_amplitudes};
use xphase_core::observables::{pi_effective, pi_effective_components, DetectorParams};
use xphase_core::scalar::wrap_phase;
use xphase_core::swapphase::{dynamic_phase, total_and_geometric_phase, SwapHamiltonian, TwoQubitState};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Worst deviation found.
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation.is_finite() && self.deviation < self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<38} deviation {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |k| -PI + 2.0 * PI * k as f64 / n as f64)
}

const SYMMETRIC_SETS: [(f64, f64); 4] = [(1.0, 0.0), (0.6, 0.01), (0.3, 0.05), (0.05, 0.001)];

pub fn run_checks() -> Vec<Check> {
    let mut unitarity: f64 = 0.0;
    let mut normalization: f64 = 0.0;
    for p1 in grid(40) {
        for p2 in grid(40) {
            let t = build_transfer_matrix(p1, p2);
            unitarity = unitarity.max(t.unitarity_error());
            normalization = normalization.max((two_photon_amplitudes(&t, 0.0).total_probability() - 1.0).abs());
        }
    }

    let mut reduction: f64 = 0.0;
    let mut offsets: f64 = 0.0;
    for (eta, nu) in SYMMETRIC_SETS {
        let det = DetectorParams::symmetric(eta, nu).expect("valid detector set");
        let f1 = eta * eta * (-8.0 * nu).exp() / 2.0;
        for px in [0.0, FRAC_PI_2, PI, -1.0] {
            for p1 in grid(12) {
                for p2 in grid(12) {
                    let got = pi_effective(p1, p2, px, &det).0;
                    reduction = reduction.max((got - f1 * (p1 + p2 - px).cos()).abs());
                }
            }
        }
        let (_, f2, f3) = pi_effective_components(&det);
        offsets = offsets.max(f2.abs()).max(f3.abs());
    }

    let h = SwapHamiltonian::new();
    let state = TwoQubitState::symmetric_swap_input();
    let phi_d = dynamic_phase(&state, FRAC_PI_2, &h);
    let phi_g = total_and_geometric_phase(&state, FRAC_PI_2, &h)
        .map(|(_, g)| wrap_phase(g - PI).abs())
        .unwrap_or(f64::INFINITY);

    vec![
        Check { name: "transfer matrix unitarity", deviation: unitarity, tolerance: 1e-12 },
        Check { name: "two-photon normalization at phi_x = 0", deviation: normalization, tolerance: 1e-12 },
        Check { name: "symmetric observable reduction", deviation: reduction, tolerance: 1e-10 },
        Check { name: "symmetric offsets f2, f3", deviation: offsets, tolerance: 1e-10 },
        Check { name: "SWAP dynamic phase = 0", deviation: phi_d.abs(), tolerance: 1e-9 },
        Check { name: "SWAP geometric phase = pi", deviation: phi_g, tolerance: 1e-9 },
    ]
}
