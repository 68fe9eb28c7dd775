//! Gate-level circuit IR for the trapped-ion native gate set.
//!
//! Native gates are `R_phi(theta)` (with `R_X = R_0`, `R_Y = R_{pi/2}`) and
//! `MS(chi)`. `CX` appears in encodings and is lowered by
//! [`Circuit::transpile_cx`]; `H` exists only for test oracles.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::GraphInstance;
use crate::error::{Error, Result};

/// Angles closer than this to a multiple of the identity period are dropped.
pub const ANGLE_EPS: f64 = 1e-12;

/// Metadata key recording a `-1` global phase collected by [`Circuit::optimize`].
pub const GLOBAL_PHASE_KEY: &str = "global_phase";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RPhi,
    Rx,
    Ry,
    Cx,
    Ms,
    H,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::RPhi,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Cx,
        GateKind::Ms,
        GateKind::H,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::RPhi => "RPHI",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Cx => "CX",
            GateKind::Ms => "MS",
            GateKind::H => "H",
        }
    }

    fn from_mnemonic(s: &str) -> Option<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.mnemonic().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    RPhi { qubit: usize, phi: f64, theta: f64 },
    Rx { qubit: usize, theta: f64 },
    Ry { qubit: usize, theta: f64 },
    Cx { control: usize, target: usize },
    Ms { a: usize, b: usize, chi: f64 },
    H { qubit: usize },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::RPhi { .. } => GateKind::RPhi,
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Cx { .. } => GateKind::Cx,
            Gate::Ms { .. } => GateKind::Ms,
            Gate::H { .. } => GateKind::H,
        }
    }

    /// First qubit, and the second one for two-qubit gates.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::RPhi { qubit, .. } | Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } => {
                (qubit, None)
            }
            Gate::H { qubit } => (qubit, None),
            Gate::Cx { control, target } => (control, Some(target)),
            Gate::Ms { a, b, .. } => (a, Some(b)),
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        let (a, b) = self.qubits();
        a == q || b == Some(q)
    }

    fn overlaps(&self, other: &Gate) -> bool {
        let (a, b) = other.qubits();
        self.touches(a) || b.is_some_and(|b| self.touches(b))
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1.is_some()
    }

    fn angles(&self) -> Vec<f64> {
        match *self {
            Gate::RPhi { phi, theta, .. } => vec![phi, theta],
            Gate::Rx { theta, .. } | Gate::Ry { theta, .. } => vec![theta],
            Gate::Ms { chi, .. } => vec![chi],
            Gate::Cx { .. } | Gate::H { .. } => vec![],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::RPhi { qubit, phi, theta } => Gate::RPhi {
                qubit,
                phi,
                theta: -theta,
            },
            Gate::Rx { qubit, theta } => Gate::Rx {
                qubit,
                theta: -theta,
            },
            Gate::Ry { qubit, theta } => Gate::Ry {
                qubit,
                theta: -theta,
            },
            Gate::Ms { a, b, chi } => Gate::Ms { a, b, chi: -chi },
            g @ (Gate::Cx { .. } | Gate::H { .. }) => g,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= n_qubits {
                return Err(Error::QubitIndex { index: q, n_qubits });
            }
        }
        if b == Some(a) {
            return Err(Error::RepeatedQubit(a));
        }
        if self.angles().iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite angle in {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())?;
        match self.qubits() {
            (a, Some(b)) => write!(f, " {a},{b}")?,
            (a, None) => write!(f, " {a}")?,
        }
        let angles = self.angles();
        if !angles.is_empty() {
            // shortest round-trip representation, at most 17 significant digits
            let parts: Vec<String> = angles.iter().map(|x| format!("{x:?}")).collect();
            write!(f, " {}", parts.join(","))?;
        }
        Ok(())
    }
}

/// Per-kind gate tally. Every kind is present, possibly with count 0.
pub type GateCounts = BTreeMap<GateKind, usize>;

/// An ordered gate list over a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Shape(format!(
                "cannot concatenate {}-qubit and {}-qubit circuits",
                self.n_qubits, other.n_qubits
            )));
        }
        let mut out = self.clone();
        out.gates.extend_from_slice(&other.gates);
        for (k, v) in &other.metadata {
            out.metadata.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Ok(out)
    }

    /// Reversed gate order with every gate inverted.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// Replaces every `CX(c, t)` by
    /// `R_Y(-pi/2)_c MS(pi/4)_{c,t} R_X(-pi/2)_c R_X(pi/2)_t R_Y(pi/2)_c`,
    /// which equals CX up to a global phase.
    pub fn transpile_cx(&self) -> Result<Circuit> {
        let mut out = Circuit {
            n_qubits: self.n_qubits,
            gates: Vec::with_capacity(self.gates.len()),
            metadata: self.metadata.clone(),
        };
        for g in &self.gates {
            match *g {
                Gate::H { .. } => {
                    return Err(Error::UnsupportedGate {
                        gate: "H",
                        reason: "not part of the native gate set",
                    })
                }
                Gate::Cx { control, target } => out.gates.extend(cx_to_native(control, target)),
                other => out.gates.push(other),
            }
        }
        Ok(out)
    }

    /// Peephole optimization to a fixed point.
    ///
    /// * adjacent rotations about the same axis on the same qubit are merged
    ///   (`RPHI` only when `phi` matches exactly);
    /// * rotations equal to the identity modulo `4 pi` are removed, and those
    ///   equal to `-I` (angle `2 pi`) are removed while a `-1` global phase is
    ///   recorded in the metadata;
    /// * identical adjacent `CX` (and `H`) pairs cancel, and adjacent MS gates
    ///   on the same pair merge into one whose angle wraps to `(-pi, pi]`.
    ///
    /// Two gates are adjacent when every gate between them acts on disjoint
    /// qubits.
    pub fn optimize(&self) -> Circuit {
        let mut gates = self.gates.clone();
        let mut flips = u32::from(self.metadata.contains_key(GLOBAL_PHASE_KEY));
        loop {
            let mut changed = simplify_trivial(&mut gates, &mut flips);
            changed |= merge_pairs(&mut gates, &mut flips);
            if !changed {
                break;
            }
        }
        let mut metadata = self.metadata.clone();
        if flips % 2 == 1 {
            metadata.insert(GLOBAL_PHASE_KEY.into(), "pi".into());
        } else {
            metadata.remove(GLOBAL_PHASE_KEY);
        }
        Circuit {
            n_qubits: self.n_qubits,
            gates,
            metadata,
        }
    }

    pub fn count_gates(&self) -> GateCounts {
        let mut counts: GateCounts = GateKind::ALL.into_iter().map(|k| (k, 0)).collect();
        for g in &self.gates {
            *counts.entry(g.kind()).or_default() += 1;
        }
        counts
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Parses the line-oriented text format:
    ///
    /// ```text
    /// # comment
    /// #! key = value        (metadata)
    /// QUBITS 2              (optional; inferred from the largest index otherwise)
    /// RY 0 1.5707963267948966
    /// CX 0,1
    /// MS 0,1 0.7853981633974483
    /// RPHI 1 0.3,1.2
    /// ```
    pub fn parse(text: &str) -> Result<Circuit> {
        let mut declared: Option<(usize, usize)> = None;
        let mut gates = Vec::new();
        let mut metadata = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if let Some(meta) = raw.trim_start().strip_prefix("#!") {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| err("metadata line needs `key = value`".into()))?;
                metadata.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0].eq_ignore_ascii_case("QUBITS") {
                if fields.len() != 2 || declared.is_some() {
                    return Err(err("expected a single `QUBITS <n>` line".into()));
                }
                let n = fields[1]
                    .parse()
                    .map_err(|e| err(format!("bad qubit count: {e}")))?;
                declared = Some((n, line_no));
                continue;
            }
            let kind = GateKind::from_mnemonic(fields[0])
                .ok_or_else(|| err(format!("unknown gate {:?}", fields[0])))?;
            let qubits = parse_list::<usize>(fields.get(1).copied(), line_no, "qubit")?;
            let angles = parse_list::<f64>(fields.get(2).copied(), line_no, "angle")?;
            if fields.len() > 3 {
                return Err(err("trailing fields".into()));
            }
            let gate = build_gate(kind, &qubits, &angles).map_err(err)?;
            gates.push((gate, line_no));
        }

        let inferred = gates
            .iter()
            .map(|(g, _)| {
                let (a, b) = g.qubits();
                a.max(b.unwrap_or(0)) + 1
            })
            .max()
            .unwrap_or(0);
        let n_qubits = declared.map_or(inferred, |(n, _)| n);
        let mut circuit = Circuit::new(n_qubits);
        circuit.metadata = metadata;
        for (g, line) in gates {
            circuit.push(g).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(circuit)
    }

    /// Inverse of [`Circuit::parse`]. An empty zero-qubit circuit prints as "".
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("#! {k} = {v}\n"));
        }
        if self.n_qubits > 0 {
            out.push_str(&format!("QUBITS {}\n", self.n_qubits));
        }
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

fn parse_list<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let Some(field) = field else {
        return Ok(Vec::new());
    };
    field
        .split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|e| Error::Parse {
                line,
                message: format!("bad {what} {s:?}: {e}"),
            })
        })
        .collect()
}

fn build_gate(kind: GateKind, q: &[usize], x: &[f64]) -> std::result::Result<Gate, String> {
    let arity = |nq: usize, na: usize| {
        if q.len() == nq && x.len() == na {
            Ok(())
        } else {
            Err(format!(
                "{kind} takes {nq} qubit(s) and {na} angle(s), got {} and {}",
                q.len(),
                x.len()
            ))
        }
    };
    Ok(match kind {
        GateKind::RPhi => {
            arity(1, 2)?;
            Gate::RPhi {
                qubit: q[0],
                phi: x[0],
                theta: x[1],
            }
        }
        GateKind::Rx => {
            arity(1, 1)?;
            Gate::Rx {
                qubit: q[0],
                theta: x[0],
            }
        }
        GateKind::Ry => {
            arity(1, 1)?;
            Gate::Ry {
                qubit: q[0],
                theta: x[0],
            }
        }
        GateKind::Cx => {
            arity(2, 0)?;
            Gate::Cx {
                control: q[0],
                target: q[1],
            }
        }
        GateKind::Ms => {
            arity(2, 1)?;
            Gate::Ms {
                a: q[0],
                b: q[1],
                chi: x[0],
            }
        }
        GateKind::H => {
            arity(1, 0)?;
            Gate::H { qubit: q[0] }
        }
    })
}

/// Native five-gate realization of `CX(control, target)`.
pub fn cx_to_native(control: usize, target: usize) -> [Gate; 5] {
    [
        Gate::Ry {
            qubit: control,
            theta: -FRAC_PI_2,
        },
        Gate::Ms {
            a: control,
            b: target,
            chi: FRAC_PI_4,
        },
        Gate::Rx {
            qubit: control,
            theta: -FRAC_PI_2,
        },
        Gate::Rx {
            qubit: target,
            theta: FRAC_PI_2,
        },
        Gate::Ry {
            qubit: control,
            theta: FRAC_PI_2,
        },
    ]
}

enum Trivial {
    No,
    Identity,
    MinusIdentity,
}

/// Rotation angles live in `(-2pi, 2pi]` (period `4pi`); MS angles in `(-pi, pi]`
/// (period `2pi`). Wrapping only touches out-of-range values so in-range angles
/// keep their exact bits.
fn wrap(angle: f64, period: f64) -> f64 {
    let half = period / 2.0;
    if angle > half || angle <= -half {
        let r = angle.rem_euclid(period);
        if r > half {
            r - period
        } else {
            r
        }
    } else {
        angle
    }
}

fn classify(angle: f64, half_period: f64) -> Trivial {
    if angle.abs() <= ANGLE_EPS {
        Trivial::Identity
    } else if (angle.abs() - half_period).abs() <= ANGLE_EPS {
        Trivial::MinusIdentity
    } else {
        Trivial::No
    }
}

fn with_angle(g: Gate, angle: f64) -> Gate {
    match g {
        Gate::RPhi { qubit, phi, .. } => Gate::RPhi {
            qubit,
            phi,
            theta: angle,
        },
        Gate::Rx { qubit, .. } => Gate::Rx {
            qubit,
            theta: angle,
        },
        Gate::Ry { qubit, .. } => Gate::Ry {
            qubit,
            theta: angle,
        },
        Gate::Ms { a, b, .. } => Gate::Ms { a, b, chi: angle },
        other => other,
    }
}

/// The angle that decides triviality and its wrapping period.
fn param_angle(g: &Gate) -> Option<(f64, f64)> {
    match *g {
        Gate::RPhi { theta, .. } | Gate::Rx { theta, .. } | Gate::Ry { theta, .. } => {
            Some((theta, 2.0 * TAU))
        }
        Gate::Ms { chi, .. } => Some((chi, TAU)),
        _ => None,
    }
}

fn simplify_trivial(gates: &mut Vec<Gate>, flips: &mut u32) -> bool {
    let before = gates.len();
    let mut rewrapped = false;
    gates.retain_mut(|g| {
        let Some((angle, period)) = param_angle(g) else {
            return true;
        };
        let wrapped = wrap(angle, period);
        match classify(wrapped, period / 2.0) {
            Trivial::Identity => false,
            Trivial::MinusIdentity => {
                *flips += 1;
                false
            }
            Trivial::No => {
                if wrapped.to_bits() != angle.to_bits() {
                    *g = with_angle(*g, wrapped);
                    rewrapped = true;
                }
                true
            }
        }
    });
    rewrapped || gates.len() != before
}

enum Combine {
    Replace(Gate),
    Remove,
}

fn combine(first: &Gate, second: &Gate) -> Option<Combine> {
    let merged = |a: f64, b: f64| Combine::Replace(with_angle(*first, a + b));
    match (*first, *second) {
        (Gate::Rx { qubit: q1, theta: a }, Gate::Rx { qubit: q2, theta: b })
        | (Gate::Ry { qubit: q1, theta: a }, Gate::Ry { qubit: q2, theta: b })
            if q1 == q2 =>
        {
            Some(merged(a, b))
        }
        (
            Gate::RPhi {
                qubit: q1,
                phi: p1,
                theta: a,
            },
            Gate::RPhi {
                qubit: q2,
                phi: p2,
                theta: b,
            },
        ) if q1 == q2 && p1.to_bits() == p2.to_bits() => Some(merged(a, b)),
        (Gate::H { qubit: q1 }, Gate::H { qubit: q2 }) if q1 == q2 => Some(Combine::Remove),
        (
            Gate::Cx {
                control: c1,
                target: t1,
            },
            Gate::Cx {
                control: c2,
                target: t2,
            },
        ) if c1 == c2 && t1 == t2 => Some(Combine::Remove),
        (Gate::Ms { a: a1, b: b1, chi: x }, Gate::Ms { a: a2, b: b2, chi: y })
            if (a1 == a2 && b1 == b2) || (a1 == b2 && b1 == a2) =>
        {
            Some(Combine::Replace(Gate::Ms {
                a: a1,
                b: b1,
                chi: wrap(x + y, TAU),
            }))
        }
        _ => None,
    }
}

fn merge_pairs(gates: &mut Vec<Gate>, flips: &mut u32) -> bool {
    let mut changed = false;
    let mut i = 0;
    while i < gates.len() {
        let next = (i + 1..gates.len()).find(|&j| gates[j].overlaps(&gates[i]));
        let Some(j) = next else {
            i += 1;
            continue;
        };
        match combine(&gates[i], &gates[j]) {
            Some(Combine::Remove) => {
                gates.remove(j);
                gates.remove(i);
                changed = true;
                i = i.saturating_sub(1);
            }
            Some(Combine::Replace(g)) => {
                gates.remove(j);
                let (angle, period) = param_angle(&g).expect("merged gates carry an angle");
                match classify(wrap(angle, period), period / 2.0) {
                    Trivial::No => gates[i] = g,
                    trivial => {
                        if matches!(trivial, Trivial::MinusIdentity) {
                            *flips += 1;
                        }
                        gates.remove(i);
                        i = i.saturating_sub(1);
                    }
                }
                changed = true;
            }
            None => i += 1,
        }
    }
    changed
}

/// The merged graph-kernel circuit `prod exp(-i gamma (g~_jk - g'~_jk) X_j X_k)`,
/// one MS gate per edge present in either graph. `g` is the graph encoded
/// first; each graph is normalized by its own largest absolute weight.
pub fn merge_graph_kernel(g: &GraphInstance, g_prime: &GraphInstance, gamma: f64) -> Result<Circuit> {
    if g.n() != g_prime.n() {
        return Err(Error::Shape(format!(
            "graphs have {} and {} vertices",
            g.n(),
            g_prime.n()
        )));
    }
    let a = g.normalized()?;
    let b = g_prime.normalized()?;
    let n = g.n();
    let mut circuit = Circuit::new(n);
    for j in 0..n {
        for k in j + 1..n {
            let (wa, wb) = (a.weight(j, k), b.weight(j, k));
            if wa != 0.0 || wb != 0.0 {
                circuit.push(Gate::Ms {
                    a: j,
                    b: k,
                    chi: gamma * (wa - wb),
                })?;
            }
        }
    }
    Ok(circuit)
}
