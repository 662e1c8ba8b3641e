#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use xphase_core::circuit::{compose, device_sequence, INPUT_MODES, OUTPUT_MODES};

use xphase_core::analysis::Bin;

/// Direct search over the exchange phase: for each grid value the amplitude
/// and offset are solved by weighted least squares and the weighted SSE is
/// compared. Only solutions with positive amplitude count.
pub fn grid_search_phase(bins: &[Bin], step: f64) -> f64 {
    let weights: Vec<f64> = {
        let mut pos: Vec<f64> = bins
            .iter()
            .filter(|b| b.std_error > 0.0)
            .map(|b| 1.0 / (b.std_error * b.std_error))
            .collect();
        pos.sort_by(f64::total_cmp);
        let med = if pos.is_empty() {
            1.0
        } else if pos.len() % 2 == 1 {
            pos[pos.len() / 2]
        } else {
            0.5 * (pos[pos.len() / 2 - 1] + pos[pos.len() / 2])
        };
        bins.iter()
            .map(|b| if b.std_error > 0.0 { 1.0 / (b.std_error * b.std_error) } else { med })
            .collect()
    };
    let n = (2.0 * PI / step).round() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let phi = PI - k as f64 * step;
        // model A g(x) + C with g = cos(x + π - φ)
        let (mut sw, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (b, &w) in bins.iter().zip(&weights) {
            let g = (b.center + PI - phi).cos();
            sw += w;
            sg += w * g;
            sgg += w * g * g;
            sy += w * b.mean;
            sgy += w * g * b.mean;
        }
        let det = sw * sgg - sg * sg;
        let a = (sw * sgy - sg * sy) / det;
        let c = (sy - a * sg) / sw;
        if a <= 0.0 {
            continue;
        }
        let sse: f64 = bins
            .iter()
            .zip(&weights)
            .map(|(b, &w)| w * (b.mean - a * (b.center + PI - phi).cos() - c).powi(2))
            .sum();
        if sse < best.0 {
            best = (sse, phi);
        }
    }
    best.1
}

/// Bins sampled from `A cos(x + π - φx) + C` with optional noise.
pub fn model_bins(phi_x: f64, amp: f64, offset: f64, noise: &[f64]) -> Vec<Bin> {
    (0..53)
        .map(|k| {
            let x = 0.55 + 0.1 * k as f64;
            let e = noise.get(k).copied().unwrap_or(0.0);
            Bin {
                center: x,
                mean: amp * (x + PI - phi_x).cos() + offset + e,
                std_error: 0.5 + 0.01 * (k % 7) as f64,
                count: 40,
            }
        })
        .collect()
}

type Occupation = [u8; 4];
type FockState = HashMap<Occupation, Complex64>;

/// Applies `sum_k v_k a†_k` with bosonic or fermionic ladder operators.
fn create(state: &FockState, v: &[Complex64; 4], fermionic: bool) -> FockState {
    let mut out = FockState::new();
    for (occ, amp) in state {
        for k in 0..4 {
            let mut next = *occ;
            let factor = if fermionic {
                if occ[k] == 1 {
                    continue;
                }
                let parity: u8 = occ[..k].iter().sum();
                if parity % 2 == 0 { 1.0 } else { -1.0 }
            } else {
                ((occ[k] + 1) as f64).sqrt()
            };
            next[k] += 1;
            *out.entry(next).or_insert(Complex64::new(0.0, 0.0)) += amp * v[k] * factor;
        }
    }
    out
}

fn vacuum() -> FockState {
    FockState::from([([0u8; 4], Complex64::new(1.0, 0.0))])
}

fn basis(i: usize, j: usize) -> Occupation {
    let mut occ = [0u8; 4];
    occ[i] += 1;
    occ[j] += 1;
    occ
}

/// Rows of the composed device operator for the two input modes of port 1.
pub fn rows_from_devices(phi1: f64, phi2: f64) -> ([Complex64; 4], [Complex64; 4]) {
    let op = compose(&device_sequence(phi1, phi2));
    let row = |input| std::array::from_fn(|c| op.entry(OUTPUT_MODES[c], INPUT_MODES[input]));
    (row(0), row(1))
}

/// Two-photon amplitudes of `a†_{1H} a†_{1V}` built by explicit ladder
/// algebra: the symmetric and antisymmetric parts are propagated as bosons
/// and fermions and recombined with weights `(1 ± e^{iφx})/2`.
pub fn expanded_pair_amplitudes(phi1: f64, phi2: f64, phi_x: f64) -> [[Complex64; 4]; 4] {
    let (first, second) = rows_from_devices(phi1, phi2);
    let bosonic = create(&create(&vacuum(), &second, false), &first, false);
    let fermionic = create(&create(&vacuum(), &second, true), &first, true);
    let swap = Complex64::from_polar(1.0, phi_x);
    let (ws, wa) = ((1.0 + swap) * 0.5, (1.0 - swap) * 0.5);
    let zero = Complex64::new(0.0, 0.0);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let occ = basis(i, j);
            ws * bosonic.get(&occ).copied().unwrap_or(zero) + wa * fermionic.get(&occ).copied().unwrap_or(zero)
        })
    })
}

/// Printed coincidence probabilities for detectors `i <= j` (0-based).
pub fn closed_form_probability(i: usize, j: usize, phi1: f64, phi2: f64, phi_x: f64) -> f64 {
    let s = (phi1 + phi2 - phi_x).cos();
    match (i, j) {
        (0, 2) | (1, 3) => (1.0 - s) / 8.0,
        (0, 3) | (1, 2) => (1.0 + s) / 8.0,
        (0, 1) | (2, 3) => (1.0 - phi_x.cos()) / 8.0,
        (a, b) if a == b => (1.0 + phi_x.cos()) / 16.0,
        _ => panic!("unordered pair expected"),
    }
}
