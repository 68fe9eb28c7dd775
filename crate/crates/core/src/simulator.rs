//! Dense state-vector simulation of the trapped-ion native gate set.
//!
//! Bit ordering: qubit 0 is the most significant bit of a basis-state index,
//! so the bitstring `"01"` (qubit 0 in `|0>`, qubit 1 in `|1>`) is index 1.
//! Bitstrings are always written qubit 0 first.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng as _;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::seed;

pub const MAX_QUBITS: usize = 12;

/// Tolerance on `|sum |a|^2 - 1|` accepted when importing raw amplitudes.
pub const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Matrix2 {
        match self {
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// Matrix of `R_phi(theta) = exp(-i theta/2 (cos(phi) X + sin(phi) Y))`.
pub fn rphi_matrix(phi: f64, theta: f64) -> Matrix2 {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let off_lower = -I * Complex64::from_polar(s, phi);
    let off_upper = -I * Complex64::from_polar(s, -phi);
    [[c, off_upper], [off_lower, c]]
}

pub fn hadamard_matrix() -> Matrix2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register_size(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the vector
    /// normalized to within [`NORM_TOL`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register_size(n_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(format!("squared norm is {norm}")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, bits: &str) -> Result<Complex64> {
        let idx = basis_index(bits)?;
        if bits.len() != self.n_qubits {
            return Err(Error::Shape(format!(
                "bitstring {bits:?} does not match {} qubits",
                self.n_qubits
            )));
        }
        Ok(self.amplitudes[idx])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies an arbitrary 2x2 matrix to `qubit`.
    pub fn apply_matrix(&mut self, qubit: usize, m: &Matrix2) -> Result<()> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_rphi(&mut self, qubit: usize, phi: f64, theta: f64) -> Result<()> {
        self.apply_matrix(qubit, &rphi_matrix(phi, theta))
    }

    /// `R_X(theta) = R_0(theta)`.
    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.apply_rphi(qubit, 0.0, theta)
    }

    /// `R_Y(theta) = R_{pi/2}(theta)`.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.apply_rphi(qubit, std::f64::consts::FRAC_PI_2, theta)
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.apply_matrix(qubit, &hadamard_matrix())
    }

    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) -> Result<()> {
        self.apply_matrix(qubit, &pauli.matrix())
    }

    fn pair_masks(&self, q1: usize, q2: usize) -> Result<(usize, usize)> {
        let m1 = self.mask(q1)?;
        let m2 = self.mask(q2)?;
        if q1 == q2 {
            return Err(Error::RepeatedQubit(q1));
        }
        Ok((m1, m2))
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<()> {
        let (mc, mt) = self.pair_masks(control, target)?;
        for i in 0..self.amplitudes.len() {
            if i & mc != 0 && i & mt == 0 {
                self.amplitudes.swap(i, i | mt);
            }
        }
        Ok(())
    }

    /// Molmer-Sorensen gate `MS(chi) = exp(-i chi X (x) X) = cos(chi) I - i sin(chi) X (x) X`.
    pub fn apply_ms(&mut self, q1: usize, q2: usize, chi: f64) -> Result<()> {
        let (m1, m2) = self.pair_masks(q1, q2)?;
        let flip = m1 | m2;
        let c = Complex64::new(chi.cos(), 0.0);
        let s = Complex64::new(0.0, -chi.sin());
        for i in 0..self.amplitudes.len() {
            let j = i ^ flip;
            // each unordered pair {i, j} once, keyed by its lower member
            if j < i {
                continue;
            }
            let a = self.amplitudes[i];
            let b = self.amplitudes[j];
            self.amplitudes[i] = c * a + s * b;
            self.amplitudes[j] = c * b + s * a;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::RPhi { qubit, phi, theta } => self.apply_rphi(qubit, phi, theta),
            Gate::Rx { qubit, theta } => self.apply_rx(qubit, theta),
            Gate::Ry { qubit, theta } => self.apply_ry(qubit, theta),
            Gate::Cx { control, target } => self.apply_cx(control, target),
            Gate::Ms { a, b, chi } => self.apply_ms(a, b, chi),
            Gate::H { qubit } => self.apply_hadamard(qubit),
        }
    }

    /// Born probabilities indexed by basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability of reading every qubit as 0.
    pub fn probability_all_zeros(&self) -> f64 {
        self.amplitudes[0].norm_sqr().min(1.0)
    }

    /// Draws `shots` iid measurements of the full register.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<MeasurementOutcome> {
        if shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        let sampler = BornSampler::new(&self.probabilities());
        let mut rng = seed::rng(seed);
        let mut counts = vec![0u64; self.dim()];
        for _ in 0..shots {
            counts[sampler.draw(&mut rng)] += 1;
        }
        Ok(MeasurementOutcome {
            n_qubits: self.n_qubits,
            shots,
            counts,
        })
    }

    /// True when `max_x |a_x - e^{i alpha} b_x| <= tol` with `alpha` fixed by
    /// the largest-magnitude amplitude of `other`.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.n_qubits == other.n_qubits
            && approx_eq_up_to_phase(&self.amplitudes, &other.amplitudes, tol)
    }
}

/// Inverse-CDF sampler over a fixed distribution. One uniform `f64` per draw.
#[derive(Clone, Debug)]
pub(crate) struct BornSampler {
    cdf: Vec<f64>,
}

impl BornSampler {
    pub(crate) fn new(probabilities: &[f64]) -> Self {
        let total: f64 = probabilities.iter().sum();
        let mut acc = 0.0;
        let cdf = probabilities
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub(crate) fn draw(&self, rng: &mut seed::Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

/// Shot record of a full-register measurement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementOutcome {
    n_qubits: usize,
    shots: u64,
    counts: Vec<u64>,
}

impl MeasurementOutcome {
    pub fn new(n_qubits: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << n_qubits {
            return Err(Error::Shape(format!(
                "{} counts for {n_qubits} qubits",
                counts.len()
            )));
        }
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(Error::Config("outcome with zero shots".into()));
        }
        Ok(Self {
            n_qubits,
            shots,
            counts,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Counts indexed by basis state.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, bits: &str) -> u64 {
        basis_index(bits)
            .ok()
            .filter(|_| bits.len() == self.n_qubits)
            .map_or(0, |i| self.counts[i])
    }

    /// Nonzero counts keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i, self.n_qubits), c))
            .collect()
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.shots as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let s = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / s).collect()
    }
}

fn check_register_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Index of a bitstring written qubit 0 first.
pub fn basis_index(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > MAX_QUBITS {
        return Err(Error::Domain(format!("invalid bitstring {bits:?}")));
    }
    bits.bytes().try_fold(0usize, |acc, b| match b {
        b'0' => Ok(acc << 1),
        b'1' => Ok((acc << 1) | 1),
        _ => Err(Error::Domain(format!("invalid bitstring {bits:?}"))),
    })
}

/// Bitstring (qubit 0 first) of basis index `index` on `n_qubits` qubits.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| {
            if index >> (n_qubits - 1 - q) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Applies `circuit` to a copy of `initial`.
pub fn run_circuit(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    if circuit.n_qubits() != initial.n_qubits() {
        return Err(Error::Shape(format!(
            "circuit has {} qubits, state has {}",
            circuit.n_qubits(),
            initial.n_qubits()
        )));
    }
    let mut state = initial.clone();
    for gate in circuit.gates() {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Runs `circuit` from `|0...0>`.
pub fn run_from_zero(circuit: &Circuit) -> Result<StateVector> {
    run_circuit(circuit, &StateVector::zero(circuit.n_qubits())?)
}

/// Columns of the circuit unitary, obtained by evolving every basis state.
pub fn unitary_columns(circuit: &Circuit) -> Result<Vec<StateVector>> {
    let n = circuit.n_qubits();
    check_register_size(n)?;
    (0..1usize << n)
        .map(|k| {
            let mut amps = vec![ZERO; 1 << n];
            amps[k] = ONE;
            run_circuit(circuit, &StateVector::from_amplitudes(amps)?)
        })
        .collect()
}

/// Whether two circuits implement the same unitary up to one global phase.
pub fn same_unitary_up_to_phase(a: &Circuit, b: &Circuit, tol: f64) -> Result<bool> {
    if a.n_qubits() != b.n_qubits() {
        return Ok(false);
    }
    let flatten = |cols: Vec<StateVector>| -> Vec<Complex64> {
        cols.into_iter().flat_map(|s| s.amplitudes).collect()
    };
    let ua = flatten(unitary_columns(a)?);
    let ub = flatten(unitary_columns(b)?);
    Ok(approx_eq_up_to_phase(&ua, &ub, tol))
}

/// Phase-insensitive comparison of two amplitude slices.
pub fn approx_eq_up_to_phase(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let Some(k) = (0..b.len()).max_by(|&i, &j| b[i].norm_sqr().total_cmp(&b[j].norm_sqr())) else {
        return true;
    };
    let phase = if b[k].norm() > 0.0 && a[k].norm() > 0.0 {
        Complex64::from_polar(1.0, a[k].arg() - b[k].arg())
    } else {
        ONE
    };
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - phase * y).norm() <= tol)
}
