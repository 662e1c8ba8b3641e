//! Phases acquired by two particles under a continuous SWAP evolution.
//!
//! Each particle evolves under `σx`, so the pair evolves under
//! `H = σx ⊗ 1 + 1 ⊗ σx`. For a cyclic evolution the total phase splits
//! into the Aharonov-Anandan geometric phase and the dynamic phase,
//! `Φ = φ_g - φ_d`.

use nalgebra::{Matrix4, RealField, SymmetricEigen};
use num_complex::Complex;
use num_traits::Float;
use thiserror::Error;

use crate::scalar::{wrap_phase, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwapPhaseError {
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("evolution is not cyclic: |<psi(0)|psi(T)>| = {overlap}")]
    NotCyclic { overlap: f64 },
}

/// Simpson panels used for one cycle of the dynamic-phase integral.
pub const QUADRATURE_STEPS: usize = 10_000;

/// Two-particle state in the basis `|φ1φ1>, |φ1φ2>, |φ2φ1>, |φ2φ2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState<T> {
    pub amplitudes: [Complex<T>; 4],
}

impl<T: Real> TwoQubitState<T> {
    pub fn new(amplitudes: [Complex<T>; 4]) -> Result<Self, SwapPhaseError> {
        let s = Self { amplitudes };
        let n = s.norm();
        if Float::abs(n - T::one()) > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return Err(SwapPhaseError::NotNormalized(n.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(s)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: [Complex<T>; 4]) -> Self {
        let s = Self { amplitudes };
        let n = s.norm();
        Self {
            amplitudes: amplitudes.map(|a| a / n),
        }
    }

    /// `(|φ1φ2> + |φ2φ1>)/√2`.
    pub fn symmetric_swap_input() -> Self {
        let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self {
            amplitudes: [z, r, r, z],
        }
    }

    pub fn norm(&self) -> T {
        Float::sqrt(self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }
}

/// Real symmetric generator of the pair evolution with its spectral data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapHamiltonian<T> {
    pub matrix: [[T; 4]; 4],
    eigenvalues: [T; 4],
    /// Columns are eigenvectors, sorted by ascending eigenvalue.
    eigenvectors: [[T; 4]; 4],
}

impl<T: Real + RealField> SwapHamiltonian<T> {
    /// `σx ⊗ 1 + 1 ⊗ σx`.
    pub fn new() -> Self {
        Self::scaled(T::one())
    }

    /// `k (σx ⊗ 1 + 1 ⊗ σx)`: the same path traversed `k` times faster.
    pub fn scaled(k: T) -> Self {
        let (o, z) = (k, T::zero());
        Self::from_symmetric([[z, o, o, z], [o, z, z, o], [o, z, z, o], [z, o, o, z]])
    }

    /// Any real symmetric generator.
    pub fn from_symmetric(matrix: [[T; 4]; 4]) -> Self {
        let m = Matrix4::from_fn(|r, c| matrix[r][c]);
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .expect("finite eigenvalues")
        });
        let eigenvalues = std::array::from_fn(|n| eig.eigenvalues[order[n]]);
        let eigenvectors = std::array::from_fn(|r| std::array::from_fn(|n| eig.eigenvectors[(r, order[n])]));
        Self {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> [T; 4] {
        self.eigenvalues
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, state: &TwoQubitState<T>) -> T {
        let mut acc = Complex::new(T::zero(), T::zero());
        for r in 0..4 {
            for c in 0..4 {
                acc = acc + state.amplitudes[r].conj() * state.amplitudes[c] * self.matrix[r][c];
            }
        }
        acc.re
    }
}

impl<T: Real + RealField> Default for SwapHamiltonian<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// `exp(-i t H) |state>` through the spectral decomposition of `H`.
pub fn evolve<T: Real + RealField>(
    state: &TwoQubitState<T>,
    t: T,
    hamiltonian: &SwapHamiltonian<T>,
) -> TwoQubitState<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = [zero; 4];
    for n in 0..4 {
        let coeff = (0..4).fold(zero, |acc, r| acc + state.amplitudes[r] * hamiltonian.eigenvectors[r][n]);
        let rotated = coeff * Complex::from_polar(T::one(), -hamiltonian.eigenvalues[n] * t);
        for r in 0..4 {
            out[r] = out[r] + rotated * hamiltonian.eigenvectors[r][n];
        }
    }
    TwoQubitState { amplitudes: out }
}

/// `∫_0^T <psi(t)|H|psi(t)> dt` by composite Simpson with `steps` panels.
pub fn dynamic_phase_with_steps<T: Real + RealField>(
    state0: &TwoQubitState<T>,
    period: T,
    hamiltonian: &SwapHamiltonian<T>,
    steps: usize,
) -> T {
    let steps = steps.max(2) + steps % 2;
    let h = period / T::from_usize(steps).expect("step count");
    let f = |k: usize| {
        let t = h * T::from_usize(k).expect("index");
        hamiltonian.expectation(&evolve(state0, t, hamiltonian))
    };
    let mut acc = f(0) + f(steps);
    for k in 1..steps {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * f(k);
    }
    acc * h / T::lit(3.0)
}

/// Dynamic phase with [`QUADRATURE_STEPS`] panels.
pub fn dynamic_phase<T: Real + RealField>(
    state0: &TwoQubitState<T>,
    period: T,
    hamiltonian: &SwapHamiltonian<T>,
) -> T {
    dynamic_phase_with_steps(state0, period, hamiltonian, QUADRATURE_STEPS)
}

/// Wraps into `(-π, π]`, sending values within rounding of `-π` to `π`.
pub fn principal_phase<T: Real>(phase: T) -> T {
    let p = wrap_phase(phase);
    if Float::abs(p + T::PI()) < T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
        T::PI()
    } else {
        p
    }
}

/// Total phase `Φ = arg <psi(0)|psi(T)>` and geometric phase `φ_g = Φ + φ_d`,
/// both in `(-π, π]`.
pub fn total_and_geometric_phase<T: Real + RealField>(
    state0: &TwoQubitState<T>,
    period: T,
    hamiltonian: &SwapHamiltonian<T>,
) -> Result<(T, T), SwapPhaseError> {
    let overlap = state0.inner(&evolve(state0, period, hamiltonian));
    let modulus = overlap.norm();
    if modulus <= T::one() - Float::max(T::lit(1e-9), T::epsilon() * T::lit(64.0)) {
        return Err(SwapPhaseError::NotCyclic {
            overlap: modulus.to_f64().unwrap_or(f64::NAN),
        });
    }
    let total = principal_phase(overlap.arg());
    let dynamic = dynamic_phase(state0, period, hamiltonian);
    Ok((total, principal_phase(total + dynamic)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn spectrum_of_swap_generator() {
        let h = SwapHamiltonian::<f64>::new();
        let ev = h.eigenvalues();
        for (got, want) in ev.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let h = SwapHamiltonian::new();
        let s = TwoQubitState::normalized([c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 0.7), c(0.4, 0.0)]);
        let out = evolve(&s, 0.0, &h);
        for k in 0..4 {
            assert!((out.amplitudes[k] - s.amplitudes[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn quarter_cycle_single_particle_swap() {
        // |φ1> ⊗ |φ1> under U(π/2) ⊗ U(π/2) = (-iσx) ⊗ (-iσx) → -|φ2φ2>
        let h = SwapHamiltonian::new();
        let s = TwoQubitState::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let out = evolve(&s, FRAC_PI_2, &h);
        assert!((out.amplitudes[3] - c(-1.0, 0.0)).norm() < 1e-12);
        // U(t) on one particle is cos t - i sin t σx
        let t = 0.37;
        let out = evolve(&s, t, &h);
        let u = [c(t.cos(), 0.0), c(0.0, -t.sin())];
        for a in 0..2 {
            for b in 0..2 {
                assert!((out.amplitudes[2 * a + b] - u[a] * u[b]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn swap_phase_is_geometric() {
        let h = SwapHamiltonian::new();
        let s = TwoQubitState::symmetric_swap_input();
        assert!(dynamic_phase(&s, FRAC_PI_2, &h).abs() < 1e-12);
        let (total, geo) = total_and_geometric_phase(&s, FRAC_PI_2, &h).unwrap();
        assert!((total - PI).abs() < 1e-9);
        assert!((geo - PI).abs() < 1e-9);
    }

    #[test]
    fn faster_swap_has_same_geometric_phase() {
        let s = TwoQubitState::symmetric_swap_input();
        let (_, slow) = total_and_geometric_phase(&s, FRAC_PI_2, &SwapHamiltonian::new()).unwrap();
        let (_, fast) = total_and_geometric_phase(&s, FRAC_PI_4, &SwapHamiltonian::scaled(2.0)).unwrap();
        assert!((slow - fast).abs() < 1e-9);
    }

    #[test]
    fn eigenstate_accumulates_dynamic_phase() {
        let h = SwapHamiltonian::new();
        let s = TwoQubitState::new([c(0.5, 0.0); 4]).unwrap();
        let period = 0.8;
        assert!((dynamic_phase(&s, period, &h) - 2.0 * period).abs() < 1e-12);
        let (total, geo) = total_and_geometric_phase(&s, PI, &h).unwrap();
        assert!((geo - principal_phase(total + 2.0 * PI)).abs() < 1e-9);
    }

    #[test]
    fn non_cyclic_period_rejected() {
        let s = TwoQubitState::symmetric_swap_input();
        let err = total_and_geometric_phase(&s, 0.3, &SwapHamiltonian::new()).unwrap_err();
        assert!(matches!(err, SwapPhaseError::NotCyclic { .. }));
    }

    #[test]
    fn unnormalized_state_rejected() {
        assert!(TwoQubitState::new([c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn single_precision_swap() {
        let h = SwapHamiltonian::<f32>::new();
        let s = TwoQubitState::<f32>::symmetric_swap_input();
        let (_, geo) = total_and_geometric_phase(&s, std::f32::consts::FRAC_PI_2, &h).unwrap();
        assert!((geo - std::f32::consts::PI).abs() < 1e-4);
    }
}
