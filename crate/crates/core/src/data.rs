//! Datasets: Optdigits digit images and Ising-labeled ring graphs.
//!
//! Digit classes map to labels `+1` (first requested digit, default 0) and
//! `-1` (second, default 1). Pixel coordinates are zero-based `(row, column)`
//! and intensities `0..=16` are scaled to `[0, 1]` by dividing by 16.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encodings::{DigitFeature, AMPLITUDE_PAD};
use crate::error::{Error, Result};
use crate::seed;
use crate::simulator::{basis_index, bitstring, MAX_QUBITS};

pub const OPTDIGITS_MAX_INTENSITY: u8 = 16;

/// Attempt budget for rejection sampling of graphs.
pub const MAX_GENERATION_ATTEMPTS: u64 = 1_000_000;

/// Gap required between the `s`-th and `(s+1)`-th lowest energies.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitSample {
    pub id: String,
    pub pixels: [[u8; 8]; 8],
    pub digit: u8,
    /// `+1` or `-1`.
    pub label: i8,
}

impl DigitSample {
    fn scaled(&self, row: usize, col: usize) -> f64 {
        f64::from(self.pixels[row][col]) / f64::from(OPTDIGITS_MAX_INTENSITY)
    }
}

/// Parses Optdigits CSV text (64 intensities then the class, one image per
/// line) and keeps samples of the two requested digits in file order.
/// Sample ids are `"<source>:<line>"`.
pub fn parse_optdigits(text: &str, source: &str, class_a: u8, class_b: u8) -> Result<Vec<DigitSample>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let values = trimmed
            .split(',')
            .map(|f| f.trim().parse::<u8>())
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map_err(|e| err(format!("not an integer field: {e}")))?;
        if values.len() != 65 {
            return Err(err(format!("expected 65 fields, found {}", values.len())));
        }
        if let Some(v) = values[..64].iter().find(|&&v| v > OPTDIGITS_MAX_INTENSITY) {
            return Err(err(format!("intensity {v} outside 0..=16")));
        }
        let digit = values[64];
        if digit > 9 {
            return Err(err(format!("class {digit} is not a digit")));
        }
        let label = if digit == class_a {
            1
        } else if digit == class_b {
            -1
        } else {
            continue;
        };
        let mut pixels = [[0u8; 8]; 8];
        for (k, &v) in values[..64].iter().enumerate() {
            pixels[k / 8][k % 8] = v;
        }
        out.push(DigitSample {
            id: format!("{source}:{line_no}"),
            pixels,
            digit,
            label,
        });
    }
    Ok(out)
}

pub fn load_optdigits(path: impl AsRef<Path>, class_a: u8, class_b: u8) -> Result<Vec<DigitSample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path
        .file_name()
        .map_or_else(|| "optdigits".to_string(), |s| s.to_string_lossy().into_owned());
    parse_optdigits(&text, &source, class_a, class_b)
}

/// Central pixels `(3,3), (3,4), (4,3), (4,4)` scaled to `[0, pi]`.
pub fn digit_features_ry(sample: &DigitSample) -> DigitFeature {
    DigitFeature([(3, 3), (3, 4), (4, 3), (4, 4)].map(|(r, c)| PI * sample.scaled(r, c)))
}

/// Pixels `(3,3), (3,4), (4,4)` scaled to `[0, 1]`, padded with 0.25.
pub fn digit_features_amplitude(sample: &DigitSample) -> DigitFeature {
    DigitFeature([
        sample.scaled(3, 3),
        sample.scaled(3, 4),
        sample.scaled(4, 4),
        AMPLITUDE_PAD,
    ])
}

/// The pinned digit train/test split, stored by sample id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitManifest {
    pub source: String,
    pub class_a_digit: u8,
    pub class_b_digit: u8,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl DigitManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Looks up the manifest ids among `samples`.
    pub fn resolve(&self, samples: &[DigitSample]) -> Result<(Vec<DigitSample>, Vec<DigitSample>)> {
        let find = |ids: &[String]| -> Result<Vec<DigitSample>> {
            ids.iter()
                .map(|id| {
                    samples
                        .iter()
                        .find(|s| &s.id == id)
                        .cloned()
                        .ok_or_else(|| Error::Data(format!("manifest id {id} not in dataset")))
                })
                .collect()
        };
        Ok((find(&self.train)?, find(&self.test)?))
    }
}

/// Candidate split number `offset`: three training and two test images per
/// class, taken consecutively (in file order) starting at the `offset`-th
/// image of each class. `None` once a class runs out.
pub fn digit_split_candidate(samples: &[DigitSample], offset: usize) -> Option<(Vec<DigitSample>, Vec<DigitSample>)> {
    let pos: Vec<&DigitSample> = samples.iter().filter(|s| s.label == 1).collect();
    let neg: Vec<&DigitSample> = samples.iter().filter(|s| s.label == -1).collect();
    if pos.len() < offset + 5 || neg.len() < offset + 5 {
        return None;
    }
    let in_file_order = |chosen: Vec<&DigitSample>| -> Vec<DigitSample> {
        samples
            .iter()
            .filter(|s| chosen.iter().any(|c| c.id == s.id))
            .cloned()
            .collect()
    };
    let train = in_file_order(pos[offset..offset + 3].iter().chain(&neg[offset..offset + 3]).copied().collect());
    let test = in_file_order(pos[offset + 3..offset + 5].iter().chain(&neg[offset + 3..offset + 5]).copied().collect());
    Some((train, test))
}

/// Undirected weighted graph as a symmetric, zero-diagonal weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInstance {
    n: usize,
    weights: Vec<f64>,
}

impl GraphInstance {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = weights.len();
        if n < 2 {
            return Err(Error::Shape(format!("graph needs at least 2 vertices, got {n}")));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (j, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!("row {j} has {} entries, expected {n}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        for j in 0..n {
            if flat[j * n + j] != 0.0 {
                return Err(Error::Domain(format!("nonzero diagonal weight at {j}")));
            }
            for k in 0..n {
                let w = flat[j * n + k];
                if !w.is_finite() {
                    return Err(Error::Domain(format!("non-finite weight at ({j},{k})")));
                }
                if w != flat[k * n + j] {
                    return Err(Error::Domain(format!("weights not symmetric at ({j},{k})")));
                }
            }
        }
        Ok(Self { n, weights: flat })
    }

    /// Graph with the listed `(j, k, weight)` edges; unspecified pairs are 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = vec![vec![0.0; n]; n];
        for &(j, k, weight) in edges {
            if j >= n || k >= n || j == k {
                return Err(Error::Shape(format!("invalid edge ({j},{k}) for {n} vertices")));
            }
            if w[j][k] != 0.0 {
                return Err(Error::Data(format!("duplicate edge ({j},{k})")));
            }
            w[j][k] = weight;
            w[k][j] = weight;
        }
        Self::new(w)
    }

    /// Ring with `weights[i]` on edge `(i, (i+1) mod n)`.
    pub fn ring(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n < 3 {
            return Err(Error::Shape(format!("ring needs at least 3 vertices, got {n}")));
        }
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, (i + 1) % n, w))
            .collect();
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j * self.n + k]
    }

    /// Nonzero edges `(j, k, w)` with `j < k`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for k in j + 1..self.n {
                let w = self.weight(j, k);
                if w != 0.0 {
                    out.push((j, k, w));
                }
            }
        }
        out
    }

    pub fn max_abs_weight(&self) -> Result<f64> {
        let m = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if m == 0.0 {
            return Err(Error::Normalization("graph has no nonzero weight".into()));
        }
        Ok(m)
    }

    /// Weights divided by the largest absolute weight.
    pub fn normalized(&self) -> Result<GraphInstance> {
        let m = self.max_abs_weight()?;
        Ok(GraphInstance {
            n: self.n,
            weights: self.weights.iter().map(|w| w / m).collect(),
        })
    }
}

/// Energies `E_x = sum_{j<k} g_jk z_j z_k` (`z = +1` for bit 0, `-1` for bit 1)
/// indexed by basis state.
pub fn ising_spectrum(g: &GraphInstance) -> Result<Vec<f64>> {
    let n = g.n();
    if n > MAX_QUBITS {
        return Err(Error::Resource(format!(
            "spectrum of {n} vertices exceeds the {MAX_QUBITS}-vertex limit"
        )));
    }
    let edges = g.edges();
    Ok((0..1usize << n)
        .map(|x| {
            edges
                .iter()
                .map(|&(j, k, w)| {
                    let bj = x >> (n - 1 - j) & 1;
                    let bk = x >> (n - 1 - k) & 1;
                    if bj == bk {
                        w
                    } else {
                        -w
                    }
                })
                .sum()
        })
        .collect())
}

/// Sets of low-energy states that define the two graph classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumLabelRule {
    pub n: usize,
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

fn invert(bits: &str) -> String {
    bits.chars().map(|c| if c == '0' { '1' } else { '0' }).collect()
}

impl SpectrumLabelRule {
    pub fn new(n: usize, positive: BTreeSet<String>, negative: BTreeSet<String>) -> Result<Self> {
        for set in [&positive, &negative] {
            if set.is_empty() || set.len() >= 1 << n {
                return Err(Error::Config("label set size must be in 1..2^n".into()));
            }
            for bits in set {
                if bits.len() != n || basis_index(bits).is_err() {
                    return Err(Error::Config(format!("{bits:?} is not a {n}-bit string")));
                }
                if !set.contains(&invert(bits)) {
                    return Err(Error::Config(format!("label set not closed under inversion at {bits}")));
                }
            }
        }
        if !positive.is_disjoint(&negative) {
            return Err(Error::Config("label sets overlap".into()));
        }
        Ok(Self { n, positive, negative })
    }

    /// The class table: `+1` when the two uniform strings are the ground
    /// pair; `-1` for the six mixed strings (n = 3) or the alternating pair
    /// (n >= 4).
    pub fn standard(n: usize) -> Result<Self> {
        if !(3..=MAX_QUBITS).contains(&n) {
            return Err(Error::Config(format!("no label rule for n = {n}")));
        }
        let uniform = |b: char| std::iter::repeat_n(b, n).collect::<String>();
        let positive: BTreeSet<String> = [uniform('0'), uniform('1')].into();
        let negative: BTreeSet<String> = if n == 3 {
            (1..7).map(|x| bitstring(x, 3)).collect()
        } else {
            let alt: String = (0..n).map(|i| if i % 2 == 0 { '0' } else { '1' }).collect();
            [invert(&alt), alt].into()
        };
        Self::new(n, positive, negative)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphLabel {
    Positive,
    Negative,
    Reject,
}

impl GraphLabel {
    pub fn as_i8(self) -> Option<i8> {
        match self {
            GraphLabel::Positive => Some(1),
            GraphLabel::Negative => Some(-1),
            GraphLabel::Reject => None,
        }
    }
}

/// Labels `g` by comparing its `s` lowest-energy states with each rule set.
pub fn label_graph(g: &GraphInstance, rule: &SpectrumLabelRule) -> Result<GraphLabel> {
    if g.n() != rule.n {
        return Err(Error::Shape(format!("graph has {} vertices, rule expects {}", g.n(), rule.n)));
    }
    let energies = ising_spectrum(g)?;
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let lowest_matches = |set: &BTreeSet<String>| {
        let s = set.len();
        let gap = energies[order[s]] - energies[order[s - 1]];
        gap > DEGENERACY_TOL
            && order[..s]
                .iter()
                .all(|&x| set.contains(&bitstring(x, rule.n)))
    };
    Ok(if lowest_matches(&rule.positive) {
        GraphLabel::Positive
    } else if lowest_matches(&rule.negative) {
        GraphLabel::Negative
    } else {
        GraphLabel::Reject
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub id: String,
    pub graph: GraphInstance,
    pub label: i8,
}

/// Serialized form of one labeled graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub label: i8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    fn of(items: &[LabeledGraph]) -> Self {
        let positive = items.iter().filter(|g| g.label == 1).count();
        Self {
            positive,
            negative: items.len() - positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub n: usize,
    pub seed: u64,
    pub attempts: u64,
    pub train: Vec<LabeledGraph>,
    pub test: Vec<LabeledGraph>,
}

#[derive(Serialize, Deserialize)]
struct GraphDatasetFile {
    n: usize,
    seed: u64,
    attempts: u64,
    train_counts: ClassCounts,
    test_counts: ClassCounts,
    train: Vec<GraphRecord>,
    test: Vec<GraphRecord>,
}

impl GraphDataset {
    pub fn train_counts(&self) -> ClassCounts {
        ClassCounts::of(&self.train)
    }

    pub fn test_counts(&self) -> ClassCounts {
        ClassCounts::of(&self.test)
    }

    pub fn to_json(&self) -> Result<String> {
        let record = |g: &LabeledGraph| GraphRecord {
            id: g.id.clone(),
            n: g.graph.n(),
            edges: g.graph.edges(),
            label: g.label,
        };
        let file = GraphDatasetFile {
            n: self.n,
            seed: self.seed,
            attempts: self.attempts,
            train_counts: self.train_counts(),
            test_counts: self.test_counts(),
            train: self.train.iter().map(record).collect(),
            test: self.test.iter().map(record).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphDatasetFile = serde_json::from_str(text)?;
        let convert = |r: GraphRecord| -> Result<LabeledGraph> {
            if r.label != 1 && r.label != -1 {
                return Err(Error::Data(format!("graph {} has label {}", r.id, r.label)));
            }
            Ok(LabeledGraph {
                graph: GraphInstance::from_edges(r.n, &r.edges)?,
                id: r.id,
                label: r.label,
            })
        };
        Ok(Self {
            n: file.n,
            seed: file.seed,
            attempts: file.attempts,
            train: file.train.into_iter().map(convert).collect::<Result<_>>()?,
            test: file.test.into_iter().map(convert).collect::<Result<_>>()?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Rejection-samples ring graphs with standard-normal weights until
/// `count_train + count_test` graphs carry a label under
/// [`SpectrumLabelRule::standard`]. The first accepted graphs form the
/// training split.
pub fn generate_graph_dataset(n: usize, count_train: usize, count_test: usize, seed: u64) -> Result<GraphDataset> {
    let rule = SpectrumLabelRule::standard(n)?;
    let mut rng = seed::rng(seed);
    let mut train = Vec::with_capacity(count_train);
    let mut test = Vec::with_capacity(count_test);
    let mut attempts = 0u64;
    while train.len() + test.len() < count_train + count_test {
        if attempts == MAX_GENERATION_ATTEMPTS {
            return Err(Error::Generation(format!(
                "only {} labeled graphs after {attempts} attempts",
                train.len() + test.len()
            )));
        }
        attempts += 1;
        let weights: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let graph = GraphInstance::ring(&weights)?;
        let Some(label) = label_graph(&graph, &rule)?.as_i8() else {
            continue;
        };
        if train.len() < count_train {
            let id = format!("train-{:02}", train.len());
            train.push(LabeledGraph { id, graph, label });
        } else {
            let id = format!("test-{:02}", test.len());
            test.push(LabeledGraph { id, graph, label });
        }
    }
    let counts = ClassCounts::of(&train);
    if count_train > 0 && (counts.positive == 0 || counts.negative == 0) {
        return Err(Error::Generation(format!(
            "training split for seed {seed} holds a single class ({} positive, {} negative)",
            counts.positive, counts.negative
        )));
    }
    Ok(GraphDataset {
        n,
        seed,
        attempts,
        train,
        test,
    })
}
