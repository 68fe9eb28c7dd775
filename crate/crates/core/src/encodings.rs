//! Feature-to-circuit embeddings and their closed-form kernels.
//!
//! * `R_Y` layer over four qubits, optionally followed by `CX(0,1) CX(2,3)`.
//! * Two-qubit amplitude encoding of a padded, normalized 4-vector.
//! * Graph encoding `V(g) = prod_{j<k} MS(gamma * g_jk / max|g|)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::data::{ising_spectrum, GraphInstance};
use crate::error::{Error, Result};

/// Default graph-encoding scale.
pub const DEFAULT_GAMMA: f64 = 0.8;

/// Regularizer inside the amplitude-encoding square roots.
pub const AMPLITUDE_EPS: f64 = 1e-12;

/// Pad value appended to the three amplitude-encoding pixels.
pub const AMPLITUDE_PAD: f64 = 0.25;

/// Four feature values. For the `R_Y` encodings these are rotation angles in
/// `[0, pi]`; for amplitude encoding they are `(x1, x2, x3, 0.25)` before
/// normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitFeature(pub [f64; 4]);

/// How the amplitude-encoding angle `beta_2` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta2Variant {
    /// `2 asin(sqrt(x3^2 + x4^2))`, which prepares exactly `x`.
    #[default]
    Corrected,
    /// `2 asin(x3^2 + x4^2)`, without the square root.
    Verbatim,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeAngles {
    /// Rotation angles `(a1, ..., a5)`.
    pub a: [f64; 5],
    /// `(beta0, beta1, beta2)`.
    pub beta: [f64; 3],
}

/// `x / |x|`, rejecting negative components and zero vectors.
pub fn normalize_padded(x: &DigitFeature) -> Result<[f64; 4]> {
    if let Some(v) = x.0.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "amplitude encoding needs finite nonnegative components, got {v}"
        )));
    }
    let norm = x.0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Normalization("zero feature vector".into()));
    }
    Ok(x.0.map(|v| v / norm))
}

/// `sqrt(a^2 + b^2)`, or `sqrt(eps)` when both vanish. Adding `eps`
/// unconditionally would put `asin` at `1 - eps/2`, an angle error of
/// `sqrt(eps)`.
fn guarded_norm(a: f64, b: f64) -> f64 {
    let s = a * a + b * b;
    if s > 0.0 {
        s.sqrt()
    } else {
        AMPLITUDE_EPS.sqrt()
    }
}

fn asin_clamped(v: f64) -> f64 {
    v.clamp(-1.0, 1.0).asin()
}

pub fn amplitude_angles(x: &DigitFeature, variant: Beta2Variant) -> Result<AmplitudeAngles> {
    let [x1, x2, x3, x4] = normalize_padded(x)?;
    let beta0 = 2.0 * asin_clamped(x2 / guarded_norm(x1, x2));
    let beta1 = 2.0 * asin_clamped(x4 / guarded_norm(x3, x4));
    let lower_weight = x3 * x3 + x4 * x4;
    let beta2 = match variant {
        Beta2Variant::Corrected => 2.0 * asin_clamped(lower_weight.sqrt()),
        Beta2Variant::Verbatim => 2.0 * asin_clamped(lower_weight),
    };
    Ok(AmplitudeAngles {
        a: [beta2, -beta1 / 2.0, beta1 / 2.0, -beta0 / 2.0, beta0 / 2.0],
        beta: [beta0, beta1, beta2],
    })
}

fn ry(qubit: usize, theta: f64) -> Gate {
    Gate::Ry { qubit, theta }
}

/// `U_1(x)`: `R_Y(x_i)` on qubit `i`.
pub fn encode_ry(x: &DigitFeature) -> Circuit {
    let mut c = Circuit::new(4);
    for (q, &theta) in x.0.iter().enumerate() {
        c.push(ry(q, theta)).expect("4-qubit layer");
    }
    c
}

/// `U_2(x)`: the `R_Y` layer followed by `CX(0,1)` and `CX(2,3)`.
pub fn encode_ry_cx(x: &DigitFeature) -> Circuit {
    let mut c = encode_ry(x);
    c.push(Gate::Cx {
        control: 0,
        target: 1,
    })
    .expect("valid qubits");
    c.push(Gate::Cx {
        control: 2,
        target: 3,
    })
    .expect("valid qubits");
    c
}

/// `U_3(x)`: two-qubit state preparation of the normalized padded vector.
///
/// Two uniformly controlled `R_Y` blocks on qubit 1, the first active on
/// qubit 0 = `|1>` and the second (between the `R_X(pi)` flips) on `|0>`.
pub fn encode_amplitude(x: &DigitFeature, variant: Beta2Variant) -> Result<Circuit> {
    let AmplitudeAngles { a, .. } = amplitude_angles(x, variant)?;
    let cx = Gate::Cx {
        control: 0,
        target: 1,
    };
    let flip = Gate::Rx {
        qubit: 0,
        theta: PI,
    };
    Circuit::with_gates(
        2,
        [
            ry(0, a[0]),
            cx,
            ry(1, a[1]),
            cx,
            flip,
            ry(1, a[2]),
            cx,
            ry(1, a[3]),
            cx,
            ry(1, a[4]),
            flip,
        ],
    )
}

/// `V(g)`: one `MS(gamma * g~_jk)` per nonzero edge, edges in `(j, k)` order.
pub fn encode_graph(g: &GraphInstance, gamma: f64) -> Result<Circuit> {
    let normalized = g.normalized()?;
    let mut c = Circuit::new(g.n());
    for (j, k, w) in normalized.edges() {
        c.push(Gate::Ms {
            a: j,
            b: k,
            chi: gamma * w,
        })?;
    }
    Ok(c)
}

/// `prod_i cos^2((x_i - y_i) / 2)`.
pub fn analytic_kernel_ry(x: &DigitFeature, y: &DigitFeature) -> f64 {
    x.0.iter()
        .zip(&y.0)
        .map(|(a, b)| ((a - b) / 2.0).cos().powi(2))
        .product()
}

/// `|<x|y>|^2` of the normalized padded vectors.
pub fn analytic_kernel_amplitude(x: &DigitFeature, y: &DigitFeature) -> Result<f64> {
    let xn = normalize_padded(x)?;
    let yn = normalize_padded(y)?;
    let dot: f64 = xn.iter().zip(&yn).map(|(a, b)| a * b).sum();
    Ok(dot * dot)
}

/// `|2^-n sum_x exp(-i gamma (E_x / gmax - E'_x / g'max))|^2` by enumerating
/// both Ising spectra.
pub fn analytic_kernel_graph(g: &GraphInstance, g_prime: &GraphInstance, gamma: f64) -> Result<f64> {
    if g.n() != g_prime.n() {
        return Err(Error::Shape(format!(
            "graphs have {} and {} vertices",
            g.n(),
            g_prime.n()
        )));
    }
    let e = ising_spectrum(g)?;
    let e_prime = ising_spectrum(g_prime)?;
    let (m, m_prime) = (g.max_abs_weight()?, g_prime.max_abs_weight()?);
    let sum: Complex64 = e
        .iter()
        .zip(&e_prime)
        .map(|(a, b)| Complex64::from_polar(1.0, -gamma * (a / m - b / m_prime)))
        .sum();
    Ok((sum / e.len() as f64).norm_sqr())
}
