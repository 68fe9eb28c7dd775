//! Stochastic Pauli noise for shot sampling.
//!
//! Each shot replays the circuit on a fresh register. After every gate, with
//! that gate's error probability, a uniformly random non-identity Pauli acts
//! on the gate's qubits. Each measured bit is then flipped with `p_readout`.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::seed;
use crate::simulator::{run_from_zero, BornSampler, MeasurementOutcome, Pauli, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p_1q: f64,
    /// Error probability of a fully entangling `MS(pi/4)`.
    pub p_ms_base: f64,
    /// Weight of the `|chi|`-proportional part of the MS error, in `[0, 1]`.
    pub ms_chi_slope: f64,
    pub p_readout: f64,
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

pub fn default_calibration() -> NoiseConfig {
    NoiseConfig {
        p_1q: 5e-4,
        p_ms_base: 0.037,
        ms_chi_slope: 0.5,
        p_readout: 0.01,
        enabled: true,
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        default_calibration()
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..default_calibration()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_1q", self.p_1q),
            ("p_ms_base", self.p_ms_base),
            ("ms_chi_slope", self.ms_chi_slope),
            ("p_readout", self.p_readout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Disabled, or every error probability zero.
    pub fn is_noiseless(&self) -> bool {
        !self.enabled || (self.p_1q == 0.0 && self.p_ms_base == 0.0 && self.p_readout == 0.0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// `off`, `default`, or a path to a JSON config.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec {
            "off" | "none" => Ok(Self::disabled()),
            "default" => Ok(default_calibration()),
            path => Self::load(path),
        }
    }

    /// Error probability attached to `gate`.
    pub fn gate_error_prob(&self, gate: &Gate) -> f64 {
        match *gate {
            Gate::Ms { chi, .. } => ms_error_prob(chi, self),
            _ => self.p_1q,
        }
    }
}

/// `p_ms_base * ((1 - s) + s * |chi| / (pi/4))`, clamped to `[0, 1]`.
pub fn ms_error_prob(chi: f64, cfg: &NoiseConfig) -> f64 {
    let s = cfg.ms_chi_slope;
    (cfg.p_ms_base * ((1.0 - s) + s * chi.abs() / FRAC_PI_4)).clamp(0.0, 1.0)
}

const PAULIS: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];

fn check_native(circuit: &Circuit) -> Result<()> {
    for gate in circuit.gates() {
        match gate {
            Gate::H { .. } => {
                return Err(Error::UnsupportedGate {
                    gate: "H",
                    reason: "noisy sampling needs native gates",
                })
            }
            Gate::Cx { .. } => {
                return Err(Error::UnsupportedGate {
                    gate: "CX",
                    reason: "transpile to MS before noisy sampling",
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Samples `shots` noisy executions of `circuit` from `|0...0>`.
///
/// A disabled or all-zero config reproduces `StateVector::sample` exactly.
pub fn sample_noisy(circuit: &Circuit, cfg: &NoiseConfig, shots: u64, seed: u64) -> Result<MeasurementOutcome> {
    check_native(circuit)?;
    cfg.validate()?;
    if cfg.is_noiseless() {
        return run_from_zero(circuit)?.sample(shots, seed);
    }
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let n = circuit.n_qubits();
    let gates = circuit.gates();
    let probs: Vec<f64> = gates.iter().map(|g| cfg.gate_error_prob(g)).collect();
    let ideal = BornSampler::new(&run_from_zero(circuit)?.probabilities());
    let mut rng = seed::rng(seed);
    let mut counts = vec![0u64; 1 << n];
    let mut faults: Vec<(usize, usize)> = Vec::new();
    for _ in 0..shots {
        faults.clear();
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 && rng.random::<f64>() < p {
                let choices = if gates[i].is_two_qubit() { 15 } else { 3 };
                faults.push((i, rng.random_range(1..=choices)));
            }
        }
        let mut outcome = if faults.is_empty() {
            ideal.draw(&mut rng)
        } else {
            let state = trajectory(circuit, &faults)?;
            BornSampler::new(&state.probabilities()).draw(&mut rng)
        };
        for q in 0..n {
            if rng.random::<f64>() < cfg.p_readout {
                outcome ^= 1 << (n - 1 - q);
            }
        }
        counts[outcome] += 1;
    }
    MeasurementOutcome::new(n, counts)
}

/// Replays `circuit`, applying Pauli `code` after gate `i` for each fault.
/// Single-qubit codes are 1..=3 (X, Y, Z); two-qubit codes 1..=15 index
/// `P_a (x) P_b` as `4a + b`.
fn trajectory(circuit: &Circuit, faults: &[(usize, usize)]) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.n_qubits())?;
    let mut next = faults.iter().peekable();
    for (i, gate) in circuit.gates().iter().enumerate() {
        state.apply_gate(gate)?;
        while let Some(&&(at, code)) = next.peek() {
            if at != i {
                break;
            }
            next.next();
            match gate.qubits() {
                (q, None) => {
                    if let Some(p) = PAULIS[code] {
                        state.apply_pauli(q, p)?;
                    }
                }
                (a, Some(b)) => {
                    if let Some(p) = PAULIS[code / 4] {
                        state.apply_pauli(a, p)?;
                    }
                    if let Some(p) = PAULIS[code % 4] {
                        state.apply_pauli(b, p)?;
                    }
                }
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_values() {
        let c = default_calibration();
        assert_eq!((c.p_1q, c.p_ms_base, c.ms_chi_slope, c.p_readout), (5e-4, 0.037, 0.5, 0.01));
        assert!((ms_error_prob(FRAC_PI_4, &c) - 0.037).abs() < 1e-15);
        assert!((ms_error_prob(0.0, &c) - 0.0185).abs() < 1e-15);
        assert!(ms_error_prob(-0.3, &c) <= ms_error_prob(0.5, &c));
        let big = NoiseConfig {
            p_ms_base: 0.9,
            ..c
        };
        assert_eq!(ms_error_prob(std::f64::consts::PI, &big), 1.0);
    }

    #[test]
    fn json_round_trip_and_specs() {
        let c = default_calibration();
        let back = NoiseConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(!NoiseConfig::from_spec("off").unwrap().enabled);
        assert_eq!(NoiseConfig::from_spec("default").unwrap(), c);
        assert!(NoiseConfig::from_json(r#"{"p_1q":2,"p_ms_base":0,"ms_chi_slope":0,"p_readout":0}"#).is_err());
        let no_flag = r#"{"p_1q":0,"p_ms_base":0.1,"ms_chi_slope":0,"p_readout":0}"#;
        assert!(NoiseConfig::from_json(no_flag).unwrap().enabled);
    }

    #[test]
    fn noiseless_matches_plain_sampling() {
        let c = Circuit::with_gates(
            2,
            [
                Gate::Ry { qubit: 0, theta: 0.7 },
                Gate::Ms { a: 0, b: 1, chi: 0.4 },
            ],
        )
        .unwrap();
        let plain = run_from_zero(&c).unwrap().sample(500, 9).unwrap();
        assert_eq!(sample_noisy(&c, &NoiseConfig::disabled(), 500, 9).unwrap(), plain);
        let zero = NoiseConfig {
            p_1q: 0.0,
            p_ms_base: 0.0,
            p_readout: 0.0,
            ..default_calibration()
        };
        assert_eq!(sample_noisy(&c, &zero, 500, 9).unwrap(), plain);
    }

    #[test]
    fn rejects_non_native_gates() {
        let h = Circuit::with_gates(1, [Gate::H { qubit: 0 }]).unwrap();
        assert!(matches!(
            sample_noisy(&h, &default_calibration(), 10, 0),
            Err(Error::UnsupportedGate { gate: "H", .. })
        ));
        let cx = Circuit::with_gates(2, [Gate::Cx { control: 0, target: 1 }]).unwrap();
        assert!(sample_noisy(&cx, &default_calibration(), 10, 0).is_err());
    }

    #[test]
    fn readout_only_on_identity() {
        let cfg = NoiseConfig {
            p_1q: 0.0,
            p_ms_base: 0.0,
            p_readout: 0.01,
            ..default_calibration()
        };
        let shots = 100_000u64;
        let out = sample_noisy(&Circuit::new(4), &cfg, shots, 3).unwrap();
        assert_eq!(out.shots(), shots);
        let p = 0.99f64.powi(4);
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((out.frequency(0) - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn full_error_on_one_qubit_gate_flips() {
        // every RX(0) is followed by X, Y or Z; X and Y flip the bit
        let cfg = NoiseConfig {
            p_1q: 1.0,
            p_ms_base: 0.0,
            p_readout: 0.0,
            ..default_calibration()
        };
        let c = Circuit::with_gates(1, [Gate::Rx { qubit: 0, theta: 0.0 }]).unwrap();
        let out = sample_noisy(&c, &cfg, 30_000, 5).unwrap();
        assert!((out.frequency(1) - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn deterministic_under_seed() {
        let c = Circuit::with_gates(3, [Gate::Ms { a: 0, b: 2, chi: FRAC_PI_4 }]).unwrap();
        let cfg = default_calibration();
        assert_eq!(
            sample_noisy(&c, &cfg, 2000, 11).unwrap(),
            sample_noisy(&c, &cfg, 2000, 11).unwrap()
        );
    }
}
