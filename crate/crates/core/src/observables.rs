//! Expectation values for the calibration (coherent light) and pair stages.
//!
//! Detector imperfections enter through an effective efficiency `eta_i` and an
//! effective dark-count probability `nu_i` per detection window. Click
//! expectations are normally ordered and evaluated in the Glauber-Sudarshan
//! P representation.

use thiserror::Error;

use crate::circuit::{build_transfer_matrix, two_photon_amplitudes};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("efficiency eta{index} = {value} outside [0, 1]")]
    Efficiency { index: usize, value: f64 },
    #[error("dark-count rate nu{index} = {value} is negative or not finite")]
    DarkCount { index: usize, value: f64 },
    #[error("mean photon number {0} is negative or not finite")]
    MeanPhotonNumber(f64),
    #[error("visibility {0} outside [0, 1]")]
    Visibility(f64),
}

/// Effective efficiency and dark-count probability of the four detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams<T> {
    pub eta: [T; 4],
    /// Dark counts per detection window.
    pub nu: [T; 4],
}

impl<T: Real> DetectorParams<T> {
    pub fn new(eta: [T; 4], nu: [T; 4]) -> Result<Self, ParamError> {
        for (k, &e) in eta.iter().enumerate() {
            if !(e >= T::zero() && e <= T::one()) {
                return Err(ParamError::Efficiency {
                    index: k + 1,
                    value: e.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        for (k, &n) in nu.iter().enumerate() {
            if !(n >= T::zero() && n.is_finite()) {
                return Err(ParamError::DarkCount {
                    index: k + 1,
                    value: n.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { eta, nu })
    }

    pub fn symmetric(eta: T, nu: T) -> Result<Self, ParamError> {
        Self::new([eta; 4], [nu; 4])
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal() -> Self {
        Self {
            eta: [T::one(); 4],
            nu: [T::zero(); 4],
        }
    }
}

/// Coherent calibration beam with `|beta|²` photons per detection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentInput<T> {
    pub mean_photon_number: T,
}

impl<T: Real> CoherentInput<T> {
    pub fn new(mean_photon_number: T) -> Result<Self, ParamError> {
        if mean_photon_number >= T::zero() && mean_photon_number.is_finite() {
            Ok(Self { mean_photon_number })
        } else {
            Err(ParamError::MeanPhotonNumber(
                mean_photon_number.to_f64().unwrap_or(f64::NAN),
            ))
        }
    }
}

/// Expectation of the combined coincidence observable
/// `n1 n4 + n2 n3 - n1 n3 - n2 n4`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PiValue<T>(pub T);

/// Signs of the combined observable over ordered detector pairs (0-based).
pub const PI_SIGNS: [((usize, usize), i8); 4] = [((0, 3), 1), ((1, 2), 1), ((0, 2), -1), ((1, 3), -1)];

/// Single-photon detection probabilities for the diagonal calibration input
/// in port 2, lossless.
pub fn single_rates_ideal<T: Real>(phi1: T, phi2: T) -> [T; 4] {
    let q = T::lit(0.25);
    let (c1, c2) = (phi1.cos(), phi2.cos());
    [
        q * (T::one() - c1),
        q * (T::one() + c1),
        q * (T::one() + c2),
        q * (T::one() - c2),
    ]
}

/// Mean photon numbers `|beta_i|²` reaching the four detectors.
///
/// Detectors 3 and 4 follow `phi2`, so that `<n3 - n4>` traces `cos phi2`.
pub fn output_mean_photons<T: Real>(beam: CoherentInput<T>, phi1: T, phi2: T) -> [T; 4] {
    single_rates_ideal(phi1, phi2).map(|r| r * beam.mean_photon_number)
}

/// Normally ordered non-coincidence click probability per window,
/// `(eta_i |beta_i|² + nu_i) prod_j exp(-eta_j |beta_j|² - nu_j)`.
pub fn effective_click_rates<T: Real>(
    beam: CoherentInput<T>,
    phi1: T,
    phi2: T,
    det: &DetectorParams<T>,
) -> [T; 4] {
    let b = output_mean_photons(beam, phi1, phi2);
    let mean_events: [T; 4] = std::array::from_fn(|k| det.eta[k] * b[k] + det.nu[k]);
    let survival = mean_events.iter().fold(T::zero(), |acc, &m| acc + m);
    let common = (-survival).exp();
    mean_events.map(|m| m * common)
}

/// Fringe parameters `(c_bar_i, v_i)` of the calibration click rates.
///
/// The window survival factor is evaluated at the phase-averaged photon
/// numbers `|beta|²/4`; it is exactly phase independent when the
/// efficiencies agree within each arm.
pub fn fringe_parameters<T: Real>(beam: CoherentInput<T>, det: &DetectorParams<T>) -> ([T; 4], [T; 4]) {
    let b = beam.mean_photon_number;
    let quarter = T::lit(0.25);
    let exponent = (0..4).fold(T::zero(), |acc, k| acc + det.eta[k] * b * quarter + det.nu[k]);
    let common = (-exponent).exp();
    let mean = std::array::from_fn(|k| (det.eta[k] * b * quarter + det.nu[k]) * common);
    let vis = std::array::from_fn(|k| det.eta[k] * b * T::lit(0.5) * common);
    (mean, vis)
}

/// Fringe parameters after per-arm normalization `N_i = D_i / (D_i + D_j)`.
///
/// Exact when `eta1 = eta2` and `eta3 = eta4`; otherwise the normalized
/// fringe is not a pure cosine of the phase.
pub fn normalized_fringe_parameters<T: Real>(
    beam: CoherentInput<T>,
    det: &DetectorParams<T>,
) -> ([T; 4], [T; 4]) {
    let (mean, vis) = fringe_parameters(beam, det);
    let arm = [mean[0] + mean[1], mean[0] + mean[1], mean[2] + mean[3], mean[2] + mean[3]];
    (
        std::array::from_fn(|k| mean[k] / arm[k]),
        std::array::from_fn(|k| vis[k] / arm[k]),
    )
}

/// Lossless combined coincidence expectation.
///
/// With `include_geometric` the swap's geometric phase `pi` is added:
/// `½ cos(phi1 + phi2 + pi - phi_x)`; without it the bare circuit result
/// `½ cos(phi1 + phi2 - phi_x)` is returned.
pub fn pi_ideal<T: Real>(phi1: T, phi2: T, exchange_phase: T, include_geometric: bool) -> PiValue<T> {
    let geometric = if include_geometric { T::PI() } else { T::zero() };
    PiValue(T::lit(0.5) * (phi1 + phi2 + geometric - exchange_phase).cos())
}

/// Second-order jet in four variables: value, gradient and Hessian at the origin.
#[derive(Debug, Clone, Copy)]
struct Jet<T> {
    v: T,
    g: [T; 4],
    h: [[T; 4]; 4],
}

impl<T: Real> Jet<T> {
    fn constant(v: T) -> Self {
        Self {
            v,
            g: [T::zero(); 4],
            h: [[T::zero(); 4]; 4],
        }
    }

    /// `slope * x_k + offset`.
    fn affine(k: usize, slope: T, offset: T) -> Self {
        let mut j = Self::constant(offset);
        j.g[k] = slope;
        j
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            v: self.v + o.v,
            g: std::array::from_fn(|a| self.g[a] + o.g[a]),
            h: std::array::from_fn(|a| std::array::from_fn(|b| self.h[a][b] + o.h[a][b])),
        }
    }

    fn scale(&self, s: T) -> Self {
        Self {
            v: self.v * s,
            g: self.g.map(|x| x * s),
            h: self.h.map(|r| r.map(|x| x * s)),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        Self {
            v: self.v * o.v,
            g: std::array::from_fn(|a| self.v * o.g[a] + o.v * self.g[a]),
            h: std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    self.v * o.h[a][b] + o.v * self.h[a][b] + self.g[a] * o.g[b] + o.g[a] * self.g[b]
                })
            }),
        }
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        Self {
            v: e,
            g: self.g.map(|x| x * e),
            h: std::array::from_fn(|a| std::array::from_fn(|b| e * (self.h[a][b] + self.g[a] * self.g[b]))),
        }
    }
}

/// The effective observable
/// `sum_{kl} p_kl (eta_k x_k + nu_k)(eta_l x_l + nu_l) exp(-2 sum_r (eta_r x_r + nu_r))`
/// as a jet around `x = 0`, with `x_k = |alpha_k|²`.
fn effective_pi_jet<T: Real>(det: &DetectorParams<T>) -> Jet<T> {
    let linear: [Jet<T>; 4] = std::array::from_fn(|k| Jet::affine(k, det.eta[k], det.nu[k]));
    let exponent = linear
        .iter()
        .fold(Jet::constant(T::zero()), |acc, l| acc.add(l))
        .scale(-T::lit(2.0));
    let weight = exponent.exp();
    PI_SIGNS
        .iter()
        .fold(Jet::constant(T::zero()), |acc, &((k, l), sign)| {
            let term = linear[k].mul(&linear[l]).scale(T::lit(sign as f64));
            acc.add(&term)
        })
        .mul(&weight)
}

/// Normally ordered expectation of the effective coincidence observable for
/// the two-photon output state, without the geometric phase.
///
/// Only Fock-state populations `|psi_ij|²` enter because the observable
/// depends on the `|alpha_k|²` alone. A photon pair in modes `i != j`
/// contributes `∂_i ∂_j [e^{x_i + x_j} Π̃]`, a pair in mode `i` contributes
/// `∂_i² [e^{x_i} Π̃]`, both at the origin.
pub fn pi_effective<T: Real>(phi1: T, phi2: T, exchange_phase: T, det: &DetectorParams<T>) -> PiValue<T> {
    let amps = two_photon_amplitudes(&build_transfer_matrix(phi1, phi2), exchange_phase);
    let pi = effective_pi_jet(det);
    let mut total = T::zero();
    for ((i, j), amp) in amps.pairs() {
        let p = amp.norm_sqr();
        if p == T::zero() {
            continue;
        }
        let displaced = if i == j {
            Jet::affine(i, T::one(), T::zero())
        } else {
            Jet::affine(i, T::one(), T::zero()).add(&Jet::affine(j, T::one(), T::zero()))
        };
        let h = displaced.exp().mul(&pi);
        total = total + p * h.h[i][j];
    }
    PiValue(total)
}

/// Closed-form amplitude of the `cos(phi1 + phi2 - phi_x)` term of
/// [`pi_effective`].
pub fn f1_closed_form<T: Real>(det: &DetectorParams<T>) -> T {
    let [e1, e2, e3, e4] = det.eta;
    let [n1, n2, n3, n4] = det.nu;
    let two = T::lit(2.0);
    let nu_sum = n1 + n2 + n3 + n4;
    T::lit(0.125)
        * (-two * nu_sum).exp()
        * (e1 + e2 + two * (e2 - e1) * (n1 - n2))
        * (e3 + e4 + two * (e4 - e3) * (n3 - n4))
}

/// Decomposition `f1 cos(phi1 + phi2 - phi_x) + f2 cos(phi_x) + f3` of
/// [`pi_effective`], read off from three phase settings.
pub fn pi_effective_components<T: Real>(det: &DetectorParams<T>) -> (T, T, T) {
    let z = T::zero();
    let half_pi = T::FRAC_PI_2();
    let a = pi_effective(z, z, z, det).0;
    let b = pi_effective(T::PI(), z, z, det).0;
    let f3 = pi_effective(T::PI(), z, half_pi, det).0;
    let f1 = (a - b) * T::lit(0.5);
    let f2 = (a + b) * T::lit(0.5) - f3;
    (f1, f2, f3)
}

/// Coincidence contribution of fully distinguishable pairs.
///
/// One H photon and one V photon propagate independently and reach every
/// detector with probability ¼; the product of their linear detector
/// responses, weighted by the observable's signs, gives
/// `(1/16)(eta2 - eta1 + 4(nu2 - nu1))(eta3 - eta4 + 4(nu3 - nu4))`.
pub fn distinguishable_offset<T: Real>(det: &DetectorParams<T>) -> T {
    let [e1, e2, e3, e4] = det.eta;
    let [n1, n2, n3, n4] = det.nu;
    let four = T::lit(4.0);
    T::lit(1.0 / 16.0) * (e2 - e1 + four * (n2 - n1)) * (e3 - e4 + four * (n3 - n4))
}

/// Coincidence probability behind a PBS for an H/V pair rotated by a
/// half-wave plate at angle `theta`, with HOM visibility `visibility`.
///
/// Mixture of the indistinguishable rate `cos²(4θ)` (weight `V`) and the
/// distinguishable rate `cos⁴(2θ) + sin⁴(2θ)`.
pub fn hom_coincidence_model<T: Real>(theta: T, visibility: T) -> T {
    let half = T::lit(0.5);
    let c = (T::lit(4.0) * theta).cos();
    (T::one() - visibility) * half + (T::one() + visibility) * half * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

    #[test]
    fn ideal_single_rates() {
        assert_eq!(single_rates_ideal(0.0, 0.0), [0.0, 0.5, 0.5, 0.0]);
        let r = single_rates_ideal(FRAC_PI_2, FRAC_PI_2);
        for x in r {
            assert!((x - 0.25).abs() < 1e-15);
        }
        let r = single_rates_ideal(0.3, 1.1);
        assert!((r[1] - r[0] - 0.5 * 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn dark_output_port_never_clicks() {
        let beam = CoherentInput::new(0.1).unwrap();
        let r = effective_click_rates(beam, 0.0, 0.4, &DetectorParams::ideal());
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 0.05 * (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_fringe_parameters() {
        let (eta, nu, b) = (0.6f64, 0.002, 0.1);
        let det = DetectorParams::symmetric(eta, nu).unwrap();
        let beam = CoherentInput::new(b).unwrap();
        let (mean, vis) = fringe_parameters(beam, &det);
        let product = (-eta * b - 4.0 * nu).exp();
        for k in 0..4 {
            assert!((vis[k] - eta * b / 2.0 * product).abs() < 1e-15);
            assert!((mean[k] - (eta * b / 4.0 + nu) * product).abs() < 1e-15);
        }
        // rates at any phase follow c_bar ∓ v/2 cos
        let r = effective_click_rates(beam, 0.7, 2.0, &det);
        assert!((r[0] - (mean[0] - vis[0] / 2.0 * 0.7f64.cos())).abs() < 1e-15);
        assert!((r[2] - (mean[2] + vis[2] / 2.0 * 2.0f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn pi_ideal_conventions() {
        assert!((pi_ideal(0.0f64, 0.0, 0.0, true).0 + 0.5).abs() < 1e-15);
        assert!((pi_ideal(0.0f64, 0.0, 0.0, false).0 - 0.5).abs() < 1e-15);
        let v = pi_ideal(0.4f64, 1.3, PI, true).0;
        assert!((v - 0.5 * 1.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn lossless_effective_matches_ideal() {
        let det = DetectorParams::ideal();
        for &(a, b, x) in &[(0.1f64, 0.2f64, 0.0f64), (1.3, 2.9, 0.7), (3.0, -1.0, PI)] {
            let eff = pi_effective(a, b, x, &det).0;
            assert!((eff - pi_ideal(a, b, x, false).0).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_effective_reduces_to_visibility() {
        let (eta, nu) = (0.55f64, 0.013);
        let det = DetectorParams::symmetric(eta, nu).unwrap();
        for &(a, b, x) in &[(0.1f64, 0.2f64, 0.0f64), (1.3, 2.9, 0.7), (0.5, 0.5, PI)] {
            let want = eta * eta * (-8.0 * nu).exp() / 2.0 * (a + b - x).cos();
            assert!((pi_effective(a, b, x, &det).0 - want).abs() < 1e-12);
        }
        let (f1, f2, f3) = pi_effective_components(&det);
        assert!(f2.abs() < 1e-12 && f3.abs() < 1e-12);
        assert!((f1 - f1_closed_form(&det)).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_f1_matches_closed_form() {
        let det = DetectorParams::new([0.9f64, 0.8, 0.7, 0.6], [0.01; 4]).unwrap();
        let (f1, _, _) = pi_effective_components(&det);
        assert!((f1 - f1_closed_form(&det)).abs() < 1e-14);
        let det = DetectorParams::new([0.3f64, 0.5, 0.45, 0.2], [0.02, 0.001, 0.0, 0.05]).unwrap();
        let (f1, _, _) = pi_effective_components(&det);
        assert!((f1 - f1_closed_form(&det)).abs() < 1e-14);
    }

    #[test]
    fn distinguishable_offset_cases() {
        assert_eq!(distinguishable_offset(&DetectorParams::symmetric(0.4f64, 0.01).unwrap()), 0.0);
        let det = DetectorParams::new([1.0f64; 4], [0.0, 0.1, 0.0, 0.0]).unwrap();
        // (1/16)(0 + 0.4)(0) = 0: asymmetry in one arm alone does not bias
        assert_eq!(distinguishable_offset(&det), 0.0);
        let det = DetectorParams::new([1.0f64; 4], [0.0, 0.1, 0.05, 0.0]).unwrap();
        assert!((distinguishable_offset(&det) - 0.4 * 0.2 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn hom_model_anchors() {
        assert!((hom_coincidence_model(0.0f64, 0.3) - 1.0).abs() < 1e-15);
        assert!(hom_coincidence_model(FRAC_PI_8, 1.0).abs() < 1e-15);
        assert!((hom_coincidence_model(FRAC_PI_8, 0.86) - 0.07).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(DetectorParams::new([1.2, 0.5, 0.5, 0.5], [0.0; 4]).is_err());
        assert!(DetectorParams::new([0.5; 4], [0.0, -1e-3, 0.0, 0.0]).is_err());
        assert!(DetectorParams::new([f64::NAN, 0.5, 0.5, 0.5], [0.0; 4]).is_err());
        assert!(CoherentInput::new(-0.1).is_err());
    }
}
