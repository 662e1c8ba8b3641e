//! Complex-amplitude algebra of the coupled interferometer.
//!
//! Modes are labelled by a beam index (1 to 4) and a polarization. The
//! single-photon map acts on creation operators: a device sends
//! `a†_{x,p}` to a superposition of output creation operators.

use std::fmt;

use num_complex::Complex;

use crate::scalar::Real;

/// Linear polarization of a beam mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

/// One spatial beam together with a polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolarizedMode {
    pub beam: u8,
    pub polarization: Polarization,
}

impl PolarizedMode {
    pub const fn new(beam: u8, polarization: Polarization) -> Self {
        Self { beam, polarization }
    }

    /// Position in the 8-dimensional beam x polarization space.
    pub fn slot(self) -> usize {
        debug_assert!((1..=4).contains(&self.beam));
        (self.beam as usize - 1) * 2
            + match self.polarization {
                Polarization::H => 0,
                Polarization::V => 1,
            }
    }

    pub fn from_slot(slot: usize) -> Self {
        let polarization = if slot % 2 == 0 {
            Polarization::H
        } else {
            Polarization::V
        };
        Self::new((slot / 2 + 1) as u8, polarization)
    }
}

impl fmt::Display for PolarizedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.beam, self.polarization)
    }
}

/// Input basis of the transfer matrix: 1H, 1V, 2H, 2V.
pub const INPUT_MODES: [PolarizedMode; 4] = [
    PolarizedMode::new(1, Polarization::H),
    PolarizedMode::new(1, Polarization::V),
    PolarizedMode::new(2, Polarization::H),
    PolarizedMode::new(2, Polarization::V),
];

/// Post-selected detector modes: 1H, 2H, 3V, 4V (detectors 1 to 4).
pub const OUTPUT_MODES: [PolarizedMode; 4] = [
    PolarizedMode::new(1, Polarization::H),
    PolarizedMode::new(2, Polarization::H),
    PolarizedMode::new(3, Polarization::V),
    PolarizedMode::new(4, Polarization::V),
];

/// Elementary optical element acting on creation operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Device<T> {
    /// Polarizing beam splitter between beams `a` and `b`: H transmitted,
    /// V reflected into the partner beam with a factor `i`.
    Pbs { a: u8, b: u8 },
    /// Mirror on one beam: factor `i` for both polarizations.
    Mirror { beam: u8 },
    /// Half-wave plate at 22.5 degrees on one beam.
    HalfWavePlate { beam: u8 },
    /// Phase shifter `e^{i phase}` on one beam.
    PhaseShifter { beam: u8, phase: T },
    /// Non-polarizing 50:50 beam splitter between beams `a` and `b`.
    BeamSplitter { a: u8, b: u8 },
}

/// Image of one creation operator: output modes with their amplitudes.
pub type ModeMap<T> = Vec<(PolarizedMode, Complex<T>)>;

impl<T: Real> Device<T> {
    /// Image of `a†_{mode}` under this device.
    pub fn transform(&self, mode: PolarizedMode) -> ModeMap<T> {
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::i();
        let r = T::FRAC_1_SQRT_2();
        let p = mode.polarization;
        match *self {
            Device::Pbs { a, b } => {
                let partner = partner_of(mode.beam, a, b);
                match (partner, p) {
                    (Some(y), Polarization::V) => vec![(PolarizedMode::new(y, p), i)],
                    _ => vec![(mode, one)],
                }
            }
            Device::Mirror { beam } if beam == mode.beam => vec![(mode, i)],
            Device::HalfWavePlate { beam } if beam == mode.beam => {
                let h = PolarizedMode::new(beam, Polarization::H);
                let v = PolarizedMode::new(beam, Polarization::V);
                match p {
                    Polarization::H => vec![(h, one * r), (v, one * r)],
                    Polarization::V => vec![(v, one * r), (h, -one * r)],
                }
            }
            Device::PhaseShifter { beam, phase } if beam == mode.beam => {
                vec![(mode, Complex::from_polar(T::one(), phase))]
            }
            Device::BeamSplitter { a, b } => match partner_of(mode.beam, a, b) {
                Some(y) => vec![(mode, one * r), (PolarizedMode::new(y, p), i * r)],
                None => vec![(mode, one)],
            },
            _ => vec![(mode, one)],
        }
    }

    /// The device as an operator on the 8-mode space.
    pub fn operator(&self) -> ModeOperator<T> {
        let mut op = ModeOperator::zero();
        for slot in 0..8 {
            for (out, amp) in self.transform(PolarizedMode::from_slot(slot)) {
                op.m[out.slot()][slot] = op.m[out.slot()][slot] + amp;
            }
        }
        op
    }
}

fn partner_of(beam: u8, a: u8, b: u8) -> Option<u8> {
    if beam == a {
        Some(b)
    } else if beam == b {
        Some(a)
    } else {
        None
    }
}

/// Linear map on the 8 beam/polarization modes; column = input slot,
/// row = output slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOperator<T> {
    pub m: [[Complex<T>; 8]; 8],
}

impl<T: Real> ModeOperator<T> {
    pub fn zero() -> Self {
        Self {
            m: [[Complex::new(T::zero(), T::zero()); 8]; 8],
        }
    }

    pub fn identity() -> Self {
        let mut op = Self::zero();
        for k in 0..8 {
            op.m[k][k] = Complex::new(T::one(), T::zero());
        }
        op
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &Self) -> Self {
        let mut out = Self::zero();
        for r in 0..8 {
            for c in 0..8 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..8 {
                    acc = acc + next.m[r][k] * self.m[k][c];
                }
                out.m[r][c] = acc;
            }
        }
        out
    }

    /// Amplitude of `output` in the image of `input`.
    pub fn entry(&self, output: PolarizedMode, input: PolarizedMode) -> Complex<T> {
        self.m[output.slot()][input.slot()]
    }
}

/// Devices of the interferometer in the order a photon meets them.
///
/// Input PBS, the wave plates restoring diagonal polarization, the swap PBS
/// routing V light into beams 3 and 4, the mirrors, the two reference phase
/// shifters and the two recombining beam splitters.
pub fn device_sequence<T: Real>(phi1: T, phi2: T) -> Vec<Device<T>> {
    vec![
        Device::Pbs { a: 1, b: 2 },
        Device::HalfWavePlate { beam: 1 },
        Device::HalfWavePlate { beam: 2 },
        Device::Pbs { a: 1, b: 3 },
        Device::Pbs { a: 2, b: 4 },
        Device::Mirror { beam: 1 },
        Device::Mirror { beam: 2 },
        Device::Mirror { beam: 3 },
        Device::Mirror { beam: 4 },
        Device::PhaseShifter { beam: 1, phase: phi1 },
        Device::PhaseShifter { beam: 4, phase: phi2 },
        Device::BeamSplitter { a: 1, b: 2 },
        Device::BeamSplitter { a: 3, b: 4 },
    ]
}

/// Composes devices in the given order.
pub fn compose<T: Real>(devices: &[Device<T>]) -> ModeOperator<T> {
    devices
        .iter()
        .fold(ModeOperator::identity(), |acc, d| acc.then(&d.operator()))
}

/// Single-photon transfer matrix restricted to the input and detector modes.
///
/// `entries[input][output]` with inputs ordered as [`INPUT_MODES`] and
/// outputs as [`OUTPUT_MODES`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix<T> {
    pub entries: [[Complex<T>; 4]; 4],
    pub phases: (T, T),
}

impl<T: Real> TransferMatrix<T> {
    /// Closed-form transfer matrix for reference phases `(phi1, phi2)`.
    pub fn new(phi1: T, phi2: T) -> Self {
        let h = T::lit(0.5);
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im)) * h;
        let e1 = Complex::from_polar(T::one(), phi1);
        let e2 = Complex::from_polar(T::one(), phi2);
        let entries = [
            [c(0.0, 1.0) * e1, c(-1.0, 0.0) * e1, c(-1.0, 0.0), c(0.0, -1.0)],
            [c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0) * e2, c(0.0, -1.0) * e2],
            [c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0) * e2, c(-1.0, 0.0) * e2],
            [c(1.0, 0.0) * e1, c(0.0, 1.0) * e1, c(0.0, -1.0), c(1.0, 0.0)],
        ];
        Self {
            entries,
            phases: (phi1, phi2),
        }
    }

    /// Restriction of an 8-mode operator to the input/detector modes.
    pub fn from_operator(op: &ModeOperator<T>, phases: (T, T)) -> Self {
        let mut entries = [[Complex::new(T::zero(), T::zero()); 4]; 4];
        for (r, input) in INPUT_MODES.iter().enumerate() {
            for (c, output) in OUTPUT_MODES.iter().enumerate() {
                entries[r][c] = op.entry(*output, *input);
            }
        }
        Self { entries, phases }
    }

    pub fn row(&self, input: usize) -> &[Complex<T>; 4] {
        &self.entries[input]
    }

    /// `max |(T†T - I)_{ij}|`.
    pub fn unitarity_error(&self) -> T {
        let mut worst = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..4 {
                    acc = acc + self.entries[k][a].conj() * self.entries[k][b];
                }
                if a == b {
                    acc = acc - T::one();
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.entries[r][c] - other.entries[r][c]).norm());
            }
        }
        worst
    }
}

/// Shorthand for [`TransferMatrix::new`].
pub fn build_transfer_matrix<T: Real>(phi1: T, phi2: T) -> TransferMatrix<T> {
    TransferMatrix::new(phi1, phi2)
}

/// Coefficients of `a†_i a†_j |0>` after two transformed creation operators
/// are multiplied out, for `N` output modes.
///
/// `first` and `second` are the images of the two input creation operators in
/// the order they act. Ordered pairs `(j, i)` with `j > i` are rewritten as
/// `e^{i exchange_phase} a†_i a†_j`. For a repeated mode the operator product is
/// symmetrized under the same rule, and the entry is scaled by `√2` so that
/// `|psi_ii|²` is the probability of finding both photons in mode `i`.
/// Only the upper triangle `i <= j` is populated.
pub fn pair_amplitudes<T: Real, const N: usize>(
    first: &[Complex<T>; N],
    second: &[Complex<T>; N],
    exchange_phase: T,
) -> [[Complex<T>; N]; N] {
    let zero = Complex::new(T::zero(), T::zero());
    let swap = Complex::from_polar(T::one(), exchange_phase);
    let mut psi = [[zero; N]; N];
    for i in 0..N {
        for j in i..N {
            psi[i][j] = if i == j {
                first[i] * second[i] * (swap + T::one()) * (T::SQRT_2() * T::lit(0.5))
            } else {
                first[i] * second[j] + swap * first[j] * second[i]
            };
        }
    }
    psi
}

/// Output state of the two-photon input `a†_{1H} a†_{1V} |0>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonAmplitudes<T> {
    psi: [[Complex<T>; 4]; 4],
    pub exchange_phase: T,
}

impl<T: Real> TwoPhotonAmplitudes<T> {
    /// Amplitude for detectors `i` and `j` (0-based, any order).
    pub fn amplitude(&self, i: usize, j: usize) -> Complex<T> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.psi[lo][hi]
    }

    /// Probability of a joint detection at `i` and `j`.
    pub fn probability(&self, i: usize, j: usize) -> T {
        self.amplitude(i, j).norm_sqr()
    }

    /// Sum of all 10 unordered-pair probabilities.
    pub fn total_probability(&self) -> T {
        let mut acc = T::zero();
        for i in 0..4 {
            for j in i..4 {
                acc = acc + self.probability(i, j);
            }
        }
        acc
    }

    /// The 10 unordered pairs `(i, j)`, `i <= j`, with their amplitudes.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), Complex<T>)> + '_ {
        (0..4).flat_map(move |i| (i..4).map(move |j| ((i, j), self.psi[i][j])))
    }
}

/// Propagates `a†_{1H} a†_{1V}` through `t` with exchange phase `exchange_phase`.
///
/// The geometric phase of the swap is not included here.
pub fn two_photon_amplitudes<T: Real>(
    t: &TransferMatrix<T>,
    exchange_phase: T,
) -> TwoPhotonAmplitudes<T> {
    TwoPhotonAmplitudes {
        psi: pair_amplitudes(t.row(0), t.row(1), exchange_phase),
        exchange_phase,
    }
}
