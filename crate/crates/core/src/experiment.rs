//! End-to-end pipelines: kernels, SVM training, evaluation and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{digit_split_candidate, generate_graph_dataset, DigitManifest, DigitSample, GraphDataset};
use crate::error::{Error, Result};
use crate::kernel::{
    classical_fidelity, digit_points, graph_points, kernel_matrix, matrix_distance, point_mirror_circuit,
    Encoding, Estimator, KernelConfig, KernelMatrix, KernelPoint, TranspileMode,
};
use crate::noise::NoiseConfig;
use crate::seed::{derive_seed, stream_seed};
use crate::svm::{self, SvmModel};
use crate::GateKind;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Vertex counts of the graph grid.
pub const GRAPH_SIZES: [usize; 3] = [3, 4, 5];
pub const GRAPH_TRAIN: usize = 20;
pub const GRAPH_TEST: usize = 10;
pub const GRAPH_SHOTS: u64 = 1024;

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Seed of the `n`-vertex graph dataset in a grid rooted at `seed`.
pub fn graph_dataset_seed(seed: u64, n: usize) -> u64 {
    stream_seed(seed, n as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub correct: usize,
    pub total: usize,
    /// Percentage rounded to 0.1.
    pub accuracy_percent: f64,
    /// Entrywise max distance to the exact noiseless matrix, 4 decimals.
    pub distance: f64,
}

impl SplitScore {
    fn new(correct: usize, total: usize, distance: f64) -> Self {
        Self {
            correct,
            total,
            accuracy_percent: round_to(100.0 * correct as f64 / total as f64, 1),
            distance: round_to(distance, 4),
        }
    }

    pub fn cell(&self) -> String {
        format!("{:.1} ({:.4})", self.accuracy_percent, self.distance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityBucket {
    pub ms_count: usize,
    pub circuits: usize,
    pub mean_fidelity: f64,
    pub mean_infidelity: f64,
}

fn bucket(samples: impl IntoIterator<Item = (usize, f64)>) -> Vec<FidelityBucket> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (ms, f) in samples {
        groups.entry(ms).or_default().push(f);
    }
    groups
        .into_iter()
        .map(|(ms_count, fs)| {
            let mean = fs.iter().sum::<f64>() / fs.len() as f64;
            FidelityBucket {
                ms_count,
                circuits: fs.len(),
                mean_fidelity: mean,
                mean_infidelity: 1.0 - mean,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub dataset: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub encoding: Encoding,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub mode: TranspileMode,
    /// `None` for exact evaluation.
    pub shots: Option<u64>,
    pub seed: u64,
    pub noise: Option<NoiseConfig>,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
    pub train: SplitScore,
    pub test: SplitScore,
    pub min_eigenvalue: f64,
    pub support_vectors: usize,
    /// Classical fidelity of the training off-diagonal circuits, grouped by
    /// MS count. Empty without noise.
    pub fidelity_by_ms_count: Vec<FidelityBucket>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn summary(&self) -> String {
        let subject = match self.n {
            Some(n) => format!("n={n}"),
            None => self.encoding.label().to_string(),
        };
        let shots = self.shots.map_or_else(|| "exact".to_string(), |s| s.to_string());
        format!(
            "{} {subject} mode={} shots={shots} train {} test {}",
            self.experiment,
            self.mode.label(),
            self.train.cell(),
            self.test.cell()
        )
    }
}

/// Kernels, model and scores of one train/test run.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub gram: KernelMatrix,
    pub cross: KernelMatrix,
    pub model: SvmModel,
    pub train: SplitScore,
    pub test: SplitScore,
    pub min_eigenvalue: f64,
    pub fidelities: Vec<FidelityBucket>,
}

fn correct(model: &SvmModel, k: &KernelMatrix, truth: &[i8]) -> Result<usize> {
    let predicted = model.predict_all(k)?;
    Ok(predicted.iter().zip(truth).filter(|(p, t)| p == t).count())
}

/// Builds the training Gram and the test cross-kernel, trains the SVM and
/// scores both splits. Distances compare against exact noiseless kernels.
pub fn run_pipeline(
    train: &[KernelPoint],
    train_labels: &[i8],
    test: &[KernelPoint],
    test_labels: &[i8],
    cfg: &KernelConfig,
    c: f64,
) -> Result<PipelineResult> {
    if train.len() != train_labels.len() || test.len() != test_labels.len() {
        return Err(Error::Shape("points and labels differ in length".into()));
    }
    if test.is_empty() {
        return Err(Error::Data("empty test split".into()));
    }
    let gram = kernel_matrix(train, train, cfg)?;
    let cross = kernel_matrix(test, train, cfg)?;
    let model = svm::train(&gram, train_labels, c)?;
    let (d_train, d_test) = if cfg.estimator == Estimator::Exact {
        (0.0, 0.0)
    } else {
        let exact = KernelConfig {
            estimator: Estimator::Exact,
            noise: None,
            pin_diagonal: false,
            ..cfg.clone()
        };
        (
            matrix_distance(&gram, &kernel_matrix(train, train, &exact)?)?,
            matrix_distance(&cross, &kernel_matrix(test, train, &exact)?)?,
        )
    };
    let fidelities = match (cfg.estimator, cfg.active_noise()) {
        (Estimator::Shots(shots), Some(noise)) => training_fidelities(train, cfg, noise, shots)?,
        _ => Vec::new(),
    };
    Ok(PipelineResult {
        train: SplitScore::new(correct(&model, &gram, train_labels)?, train.len(), d_train),
        test: SplitScore::new(correct(&model, &cross, test_labels)?, test.len(), d_test),
        min_eigenvalue: gram.min_eigenvalue()?,
        gram,
        cross,
        model,
        fidelities,
    })
}

/// Classical fidelity of every off-diagonal training circuit, using the
/// same per-cell seeds as the Gram estimate.
fn training_fidelities(train: &[KernelPoint], cfg: &KernelConfig, noise: &NoiseConfig, shots: u64) -> Result<Vec<FidelityBucket>> {
    let mut samples = Vec::new();
    for i in 0..train.len() {
        for j in i + 1..train.len() {
            let circuit = point_mirror_circuit(&train[i], &train[j], cfg)?;
            let seed = derive_seed(cfg.seed, train[i].id(), train[j].id());
            samples.push((
                circuit.count_kind(GateKind::Ms),
                classical_fidelity(&circuit, noise, shots, seed)?,
            ));
        }
    }
    Ok(bucket(samples))
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    experiment: &'a str,
    kernel: &'a KernelConfig,
    c: f64,
    dataset: &'a str,
    version: &'a str,
}

fn report(experiment: &str, n: Option<usize>, cfg: &KernelConfig, c: f64, dataset: &str, result: &PipelineResult) -> Result<ExperimentReport> {
    let config_hash = config_hash(&HashedConfig {
        experiment,
        kernel: cfg,
        c,
        dataset,
        version: VERSION,
    })?;
    Ok(ExperimentReport {
        experiment: experiment.to_string(),
        encoding: cfg.encoding,
        n,
        mode: cfg.mode,
        shots: match cfg.estimator {
            Estimator::Exact => None,
            Estimator::Shots(s) => Some(s),
        },
        seed: cfg.seed,
        noise: cfg.active_noise().copied(),
        c,
        gamma: cfg.gamma,
        train: result.train.clone(),
        test: result.test.clone(),
        min_eigenvalue: result.min_eigenvalue,
        support_vectors: result.model.support_indices.len(),
        fidelity_by_ms_count: result.fidelities.clone(),
        provenance: Provenance {
            version: VERSION.to_string(),
            config_hash,
            seed: cfg.seed,
            dataset: dataset.to_string(),
        },
        timing_ms: None,
    })
}

fn labels_of(samples: &[DigitSample]) -> Vec<i8> {
    samples.iter().map(|s| s.label).collect()
}

/// Digit classifier with `cfg.encoding` on a fixed split. `dataset` names the
/// split in the provenance block.
pub fn digits_experiment(train: &[DigitSample], test: &[DigitSample], cfg: &KernelConfig, c: f64, dataset: &str) -> Result<ExperimentReport> {
    let result = run_pipeline(
        &digit_points(train, cfg.encoding)?,
        &labels_of(train),
        &digit_points(test, cfg.encoding)?,
        &labels_of(test),
        cfg,
        c,
    )?;
    report("digits", None, cfg, c, dataset, &result)
}

pub fn graphs_experiment(data: &GraphDataset, cfg: &KernelConfig, c: f64, dataset: &str) -> Result<ExperimentReport> {
    if cfg.encoding != Encoding::Graph {
        return Err(Error::Config("graph experiments use the graph encoding".into()));
    }
    let labels = |gs: &[crate::data::LabeledGraph]| gs.iter().map(|g| g.label).collect::<Vec<_>>();
    let result = run_pipeline(
        &graph_points(&data.train),
        &labels(&data.train),
        &graph_points(&data.test),
        &labels(&data.test),
        cfg,
        c,
    )?;
    report("graphs", Some(data.n), cfg, c, dataset, &result)
}

/// One row of the digit grid: an encoding, a shot count and a repetition,
/// with a cell per transpilation mode. Encodings without two-qubit gates
/// have no optimized cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitsGridRow {
    pub encoding: Encoding,
    pub shots: u64,
    pub repeat: usize,
    pub seed: u64,
    pub non_optimized: ExperimentReport,
    pub optimized: Option<ExperimentReport>,
}

/// Row layout of the digit grid: `(encoding, shots, repetitions)`.
pub const DIGITS_GRID: [(Encoding, u64, usize); 3] = [
    (Encoding::Ry, 2048, 3),
    (Encoding::RyCx, 1024, 3),
    (Encoding::Amplitude, 1024, 2),
];

pub fn digits_grid(
    train: &[DigitSample],
    test: &[DigitSample],
    seed: u64,
    noise: Option<NoiseConfig>,
    c: f64,
    dataset: &str,
) -> Result<Vec<DigitsGridRow>> {
    let mut rows = Vec::new();
    for (encoding, shots, repeats) in DIGITS_GRID {
        for repeat in 0..repeats {
            let row_seed = stream_seed(seed, rows.len() as u64);
            let cell = |mode| -> Result<ExperimentReport> {
                let mut cfg = KernelConfig::new(encoding, mode);
                cfg.estimator = Estimator::Shots(shots);
                cfg.noise = noise;
                cfg.seed = row_seed;
                digits_experiment(train, test, &cfg, c, dataset)
            };
            rows.push(DigitsGridRow {
                encoding,
                shots,
                repeat,
                seed: row_seed,
                non_optimized: cell(TranspileMode::NonOptimized)?,
                optimized: if encoding == Encoding::Ry {
                    None
                } else {
                    Some(cell(TranspileMode::Optimized)?)
                },
            });
        }
    }
    Ok(rows)
}

pub fn render_digits_grid(rows: &[DigitsGridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>6}  {:<16} {:<16}  {:<16} {:<16}",
        "encoding", "shots", "nonopt train", "nonopt test", "opt train", "opt test"
    );
    for row in rows {
        let (ot, oe) = row
            .optimized
            .as_ref()
            .map_or(("-".to_string(), "-".to_string()), |r| (r.train.cell(), r.test.cell()));
        let _ = writeln!(
            out,
            "{:<10} {:>6}  {:<16} {:<16}  {:<16} {:<16}",
            row.encoding.label(),
            row.shots,
            row.non_optimized.train.cell(),
            row.non_optimized.test.cell(),
            ot,
            oe
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphsGridRow {
    pub n: usize,
    pub dataset_seed: u64,
    pub non_optimized: ExperimentReport,
    pub optimized: ExperimentReport,
}

/// Graph grid over [`GRAPH_SIZES`] and both modes. Both modes of a row share
/// the dataset and the kernel seed.
pub fn graphs_grid(seed: u64, estimator: Estimator, noise: Option<NoiseConfig>, c: f64, gamma: f64) -> Result<Vec<GraphsGridRow>> {
    GRAPH_SIZES
        .iter()
        .map(|&n| {
            let dataset_seed = graph_dataset_seed(seed, n);
            let data = generate_graph_dataset(n, GRAPH_TRAIN, GRAPH_TEST, dataset_seed)?;
            let label = format!("graphs:n={n}:seed={dataset_seed}");
            let cell = |mode| -> Result<ExperimentReport> {
                let mut cfg = KernelConfig::new(Encoding::Graph, mode);
                cfg.estimator = estimator;
                cfg.noise = noise;
                cfg.seed = seed;
                cfg.gamma = gamma;
                graphs_experiment(&data, &cfg, c, &label)
            };
            Ok(GraphsGridRow {
                n,
                dataset_seed,
                non_optimized: cell(TranspileMode::NonOptimized)?,
                optimized: cell(TranspileMode::Optimized)?,
            })
        })
        .collect()
}

pub fn render_graphs_grid(rows: &[GraphsGridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<3} {:<16} {:<16}  {:<16} {:<16}",
        "n", "nonopt train", "nonopt test", "opt train", "opt test"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{:<3} {:<16} {:<16}  {:<16} {:<16}",
            row.n,
            row.non_optimized.train.cell(),
            row.non_optimized.test.cell(),
            row.optimized.train.cell(),
            row.optimized.test.cell()
        );
    }
    out
}

/// Mean classical infidelity of graph-kernel circuits grouped by MS count,
/// over all training pairs of the grid datasets in both modes.
pub fn figure3(seed: u64, noise: &NoiseConfig, shots: u64, gamma: f64) -> Result<Vec<FidelityBucket>> {
    let mut samples = Vec::new();
    for &n in &GRAPH_SIZES {
        let data = generate_graph_dataset(n, GRAPH_TRAIN, GRAPH_TEST, graph_dataset_seed(seed, n))?;
        let points = graph_points(&data.train);
        for mode in [TranspileMode::NonOptimized, TranspileMode::Optimized] {
            let mut cfg = KernelConfig::new(Encoding::Graph, mode);
            cfg.gamma = gamma;
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    let circuit = point_mirror_circuit(&points[i], &points[j], &cfg)?;
                    let cell_seed = derive_seed(seed, &format!("{}:{n}:{}", mode.label(), points[i].id()), points[j].id());
                    samples.push((
                        circuit.count_kind(GateKind::Ms),
                        classical_fidelity(&circuit, noise, shots, cell_seed)?,
                    ));
                }
            }
        }
    }
    Ok(bucket(samples))
}

pub fn render_figure3(buckets: &[FidelityBucket]) -> String {
    let mut out = String::from("ms_count,circuits,mean_fidelity,mean_infidelity\n");
    for b in buckets {
        let _ = writeln!(out, "{},{},{:.6},{:.6}", b.ms_count, b.circuits, b.mean_fidelity, b.mean_infidelity);
    }
    out
}

/// Whether every digit encoding and mode reaches 100% train and test
/// accuracy with exact kernels.
pub fn split_is_separable(train: &[DigitSample], test: &[DigitSample], c: f64) -> Result<bool> {
    for encoding in [Encoding::Ry, Encoding::RyCx, Encoding::Amplitude] {
        for mode in [TranspileMode::NonOptimized, TranspileMode::Optimized] {
            let cfg = KernelConfig::new(encoding, mode);
            let r = run_pipeline(
                &digit_points(train, encoding)?,
                &labels_of(train),
                &digit_points(test, encoding)?,
                &labels_of(test),
                &cfg,
                c,
            )?;
            if r.train.correct != r.train.total || r.test.correct != r.test.total {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Earliest candidate split (see [`digit_split_candidate`]) on which every
/// encoding classifies perfectly. Returns the manifest and its offset.
pub fn search_digit_manifest(samples: &[DigitSample], source: &str, class_a: u8, class_b: u8, c: f64) -> Result<(DigitManifest, usize)> {
    let mut offset = 0;
    while let Some((train, test)) = digit_split_candidate(samples, offset) {
        if split_is_separable(&train, &test, c)? {
            let manifest = DigitManifest {
                source: source.to_string(),
                class_a_digit: class_a,
                class_b_digit: class_b,
                train: train.iter().map(|s| s.id.clone()).collect(),
                test: test.iter().map(|s| s.id.clone()).collect(),
            };
            return Ok((manifest, offset));
        }
        offset += 1;
    }
    Err(Error::Data("no candidate split classifies perfectly".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_to(83.333333, 1), 83.3);
        assert_eq!(round_to(0.123456, 4), 0.1235);
        let s = SplitScore::new(5, 6, 0.53219);
        assert_eq!((s.accuracy_percent, s.distance), (83.3, 0.5322));
        assert_eq!(s.cell(), "83.3 (0.5322)");
    }

    #[test]
    fn hash_is_stable() {
        let cfg = KernelConfig::new(Encoding::Ry, TranspileMode::Optimized);
        let a = config_hash(&cfg).unwrap();
        assert_eq!(a, config_hash(&cfg.clone()).unwrap());
        assert_eq!(a.len(), 64);
        let mut other = cfg;
        other.seed = 1;
        assert_ne!(a, config_hash(&other).unwrap());
    }

    #[test]
    fn buckets_group_and_sort() {
        let b = bucket([(5, 0.9), (3, 1.0), (5, 0.7)]);
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].ms_count, b[0].circuits), (3, 1));
        assert!((b[1].mean_fidelity - 0.8).abs() < 1e-15);
        assert!((b[1].mean_infidelity - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_graph_experiment_is_perfect_and_reproducible() {
        let data = generate_graph_dataset(3, 20, 10, graph_dataset_seed(0, 3)).unwrap();
        let cfg = KernelConfig::new(Encoding::Graph, TranspileMode::Optimized);
        let a = graphs_experiment(&data, &cfg, 1.0, "t").unwrap();
        assert_eq!(a.train.distance, 0.0);
        assert_eq!(a.to_json().unwrap(), graphs_experiment(&data, &cfg, 1.0, "t").unwrap().to_json().unwrap());
        assert!(a.fidelity_by_ms_count.is_empty());
    }
}
