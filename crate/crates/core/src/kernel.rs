//! Kernel estimation from mirror circuits `U(x) U^dagger(y)`.
//!
//! The kernel entry `K(x, y)` is the probability of reading all zeros after
//! the mirror circuit, computed exactly from the state vector or estimated
//! from shots (optionally under noise).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{merge_graph_kernel, Circuit};
use crate::data::{digit_features_amplitude, digit_features_ry, DigitSample, GraphInstance, LabeledGraph};
use crate::encodings::{encode_amplitude, encode_graph, encode_ry, encode_ry_cx, Beta2Variant, DigitFeature, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::noise::{sample_noisy, NoiseConfig};
use crate::seed::derive_seed;
use crate::simulator::run_from_zero;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranspileMode {
    NonOptimized,
    Optimized,
}

impl TranspileMode {
    pub fn label(self) -> &'static str {
        match self {
            TranspileMode::NonOptimized => "nonopt",
            TranspileMode::Optimized => "opt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Ry,
    RyCx,
    Amplitude,
    Graph,
}

impl Encoding {
    pub fn label(self) -> &'static str {
        match self {
            Encoding::Ry => "ry",
            Encoding::RyCx => "rycx",
            Encoding::Amplitude => "amplitude",
            Encoding::Graph => "graph",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Shots(u64),
}

/// One sample as seen by the kernel: an id plus its encoder input.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelPoint {
    Digit { id: String, x: DigitFeature },
    Graph { id: String, g: GraphInstance },
}

impl KernelPoint {
    pub fn id(&self) -> &str {
        match self {
            KernelPoint::Digit { id, .. } | KernelPoint::Graph { id, .. } => id,
        }
    }
}

/// Features for `encoding`: RY angles for `Ry`/`RyCx`, padded amplitudes
/// for `Amplitude`.
pub fn digit_points(samples: &[DigitSample], encoding: Encoding) -> Result<Vec<KernelPoint>> {
    let extract = match encoding {
        Encoding::Ry | Encoding::RyCx => digit_features_ry,
        Encoding::Amplitude => digit_features_amplitude,
        Encoding::Graph => return Err(Error::Config("digit samples need a digit encoding".into())),
    };
    Ok(samples
        .iter()
        .map(|s| KernelPoint::Digit {
            id: s.id.clone(),
            x: extract(s),
        })
        .collect())
}

pub fn graph_points(graphs: &[LabeledGraph]) -> Vec<KernelPoint> {
    graphs
        .iter()
        .map(|g| KernelPoint::Graph {
            id: g.id.clone(),
            g: g.graph.clone(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub encoding: Encoding,
    pub mode: TranspileMode,
    pub estimator: Estimator,
    pub noise: Option<NoiseConfig>,
    pub seed: u64,
    pub gamma: f64,
    pub beta2: Beta2Variant,
    /// Set diagonal entries of a square matrix to 1 instead of estimating them.
    pub pin_diagonal: bool,
}

impl KernelConfig {
    pub fn new(encoding: Encoding, mode: TranspileMode) -> Self {
        Self {
            encoding,
            mode,
            estimator: Estimator::Exact,
            noise: None,
            seed: 0,
            gamma: DEFAULT_GAMMA,
            beta2: Beta2Variant::default(),
            pin_diagonal: false,
        }
    }

    /// Noise that actually perturbs samples, if any.
    pub fn active_noise(&self) -> Option<&NoiseConfig> {
        self.noise.as_ref().filter(|n| !n.is_noiseless())
    }

    fn kernel_mode(&self) -> KernelMode {
        match (self.estimator, self.active_noise()) {
            (Estimator::Exact, _) => KernelMode::Exact,
            (Estimator::Shots(shots), None) => KernelMode::Shots { shots, seed: self.seed },
            (Estimator::Shots(shots), Some(noise)) => KernelMode::Noisy {
                shots,
                seed: self.seed,
                noise: *noise,
            },
        }
    }
}

/// Encoder circuit of one digit point.
pub fn encode_digit(x: &DigitFeature, encoding: Encoding, beta2: Beta2Variant) -> Result<Circuit> {
    match encoding {
        Encoding::Ry => Ok(encode_ry(x)),
        Encoding::RyCx => Ok(encode_ry_cx(x)),
        Encoding::Amplitude => encode_amplitude(x, beta2),
        Encoding::Graph => Err(Error::Config("graph encoding needs a graph point".into())),
    }
}

/// `U(x)` followed by `U^dagger(y)`, lowered to native gates.
///
/// Non-optimized mode transpiles each half separately and concatenates.
/// Optimized mode simplifies the logical mirror circuit first (so `CX` pairs
/// meeting at the seam cancel), then transpiles and simplifies again.
pub fn mirror_circuit(encode_x: &Circuit, encode_y: &Circuit, mode: TranspileMode) -> Result<Circuit> {
    if encode_x.n_qubits() != encode_y.n_qubits() {
        return Err(Error::Shape(format!(
            "encoders act on {} and {} qubits",
            encode_x.n_qubits(),
            encode_y.n_qubits()
        )));
    }
    let y_dagger = encode_y.adjoint();
    match mode {
        TranspileMode::NonOptimized => encode_x.transpile_cx()?.concat(&y_dagger.transpile_cx()?),
        TranspileMode::Optimized => Ok(encode_x.concat(&y_dagger)?.optimize().transpile_cx()?.optimize()),
    }
}

/// Graph mirror circuit: `V(g) V^dagger(g')` with `2|E|` MS gates, or the
/// merged form with one MS per edge (after dropping zero angles).
pub fn graph_mirror_circuit(g: &GraphInstance, g_prime: &GraphInstance, gamma: f64, mode: TranspileMode) -> Result<Circuit> {
    match mode {
        TranspileMode::NonOptimized => {
            let v = encode_graph(g, gamma)?;
            let w = encode_graph(g_prime, gamma)?;
            if v.n_qubits() != w.n_qubits() {
                return Err(Error::Shape("graphs differ in vertex count".into()));
            }
            v.concat(&w.adjoint())
        }
        TranspileMode::Optimized => Ok(merge_graph_kernel(g, g_prime, gamma)?.optimize()),
    }
}

/// Mirror circuit for a pair of kernel points under `cfg`.
pub fn point_mirror_circuit(x: &KernelPoint, y: &KernelPoint, cfg: &KernelConfig) -> Result<Circuit> {
    match (x, y) {
        (KernelPoint::Digit { x, .. }, KernelPoint::Digit { x: y, .. }) => mirror_circuit(
            &encode_digit(x, cfg.encoding, cfg.beta2)?,
            &encode_digit(y, cfg.encoding, cfg.beta2)?,
            cfg.mode,
        ),
        (KernelPoint::Graph { g, .. }, KernelPoint::Graph { g: h, .. }) => {
            if cfg.encoding != Encoding::Graph {
                return Err(Error::Config("graph points need the graph encoding".into()));
            }
            graph_mirror_circuit(g, h, cfg.gamma, cfg.mode)
        }
        _ => Err(Error::Config("cannot mix digit and graph points".into())),
    }
}

/// All-zeros probability after `circuit` (exact), or its shot frequency.
pub fn kernel_entry(circuit: &Circuit, estimator: Estimator, noise: Option<&NoiseConfig>, seed: u64) -> Result<f64> {
    let noise = noise.filter(|n| !n.is_noiseless());
    match (estimator, noise) {
        (Estimator::Exact, None) => Ok(run_from_zero(circuit)?.probability_all_zeros().clamp(0.0, 1.0)),
        (Estimator::Exact, Some(_)) => Err(Error::Config(
            "noise needs a finite shot count; exact evaluation is noiseless".into(),
        )),
        (Estimator::Shots(shots), None) => Ok(run_from_zero(circuit)?.sample(shots, seed)?.frequency(0)),
        (Estimator::Shots(shots), Some(cfg)) => Ok(sample_noisy(circuit, cfg, shots, seed)?.frequency(0)),
    }
}

/// How a matrix was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelMode {
    Exact,
    Shots { shots: u64, seed: u64 },
    Noisy { shots: u64, seed: u64, noise: NoiseConfig },
}

/// Row-major kernel matrix with sample ids on both axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    entries: Vec<f64>,
    mode: KernelMode,
}

impl KernelMatrix {
    pub fn new(row_ids: Vec<String>, col_ids: Vec<String>, entries: Vec<f64>, mode: KernelMode) -> Result<Self> {
        if entries.len() != row_ids.len() * col_ids.len() {
            return Err(Error::Shape(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                row_ids.len(),
                col_ids.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("kernel entry {v} outside [0, 1]")));
        }
        Ok(Self {
            row_ids,
            col_ids,
            entries,
            mode,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn mode(&self) -> &KernelMode {
        &self.mode
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols()..(i + 1) * self.cols()]
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Shape("asymmetry of a non-square matrix".into()));
        }
        let n = self.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Ok(worst)
    }

    /// Smallest eigenvalue of the symmetrized matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Shape("eigenvalues of a non-square matrix".into()));
        }
        let n = self.rows();
        if n == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)));
        Ok(m.symmetric_eigenvalues().min())
    }

    /// CSV with a header of column ids; each row starts with its id.
    /// Values use 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.col_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, id) in self.row_ids.iter().enumerate() {
            out.push_str(id);
            for v in self.row(i) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: KernelMatrix = serde_json::from_str(text)?;
        Self::new(raw.row_ids, raw.col_ids, raw.entries, raw.mode)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `K[i][j] = kernel(rows[i], cols[j])` under `cfg`. Each cell's shot seed is
/// derived from `(cfg.seed, row id, col id)`, so results do not depend on
/// evaluation order. Exact square matrices over one id list are computed on
/// the upper triangle and mirrored.
pub fn kernel_matrix(rows: &[KernelPoint], cols: &[KernelPoint], cfg: &KernelConfig) -> Result<KernelMatrix> {
    let row_ids: Vec<String> = rows.iter().map(|p| p.id().to_string()).collect();
    let col_ids: Vec<String> = cols.iter().map(|p| p.id().to_string()).collect();
    let same = row_ids == col_ids;
    let mirror = same && cfg.estimator == Estimator::Exact;
    let nc = cols.len();
    let cells: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|i| (0..nc).map(move |j| (i, j)))
        .filter(|&(i, j)| !mirror || i <= j)
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| {
            if same && i == j && cfg.pin_diagonal {
                return Ok(1.0);
            }
            let circuit = point_mirror_circuit(&rows[i], &cols[j], cfg)?;
            let seed = derive_seed(cfg.seed, &row_ids[i], &col_ids[j]);
            kernel_entry(&circuit, cfg.estimator, cfg.active_noise(), seed)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut entries = vec![0.0; rows.len() * nc];
    for (&(i, j), v) in cells.iter().zip(values) {
        entries[i * nc + j] = v;
        if mirror {
            entries[j * nc + i] = v;
        }
    }
    KernelMatrix::new(row_ids, col_ids, entries, cfg.kernel_mode())
}

/// `max_ij |A_ij - B_ij|`.
pub fn matrix_distance(a: &KernelMatrix, b: &KernelMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())))
}

/// `sum_x sqrt(p_x q_x)`.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum())
}

/// Bhattacharyya coefficient between the noisy shot histogram of `circuit`
/// and its exact output distribution.
pub fn classical_fidelity(circuit: &Circuit, noise: &NoiseConfig, shots: u64, seed: u64) -> Result<f64> {
    let ideal = run_from_zero(circuit)?.probabilities();
    let measured = sample_noisy(circuit, noise, shots, seed)?.frequencies();
    bhattacharyya(&measured, &ideal)
}
