mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

use args::{Beta2Arg, Cli, Command, DataArgs, DatasetCommand, ExperimentCommand, FormatArg, KernelFlags, RunFlags, SplitArg};
use qsvm_core::data::{self, DigitManifest};
use qsvm_core::experiment::{self, ExperimentReport};
use qsvm_core::kernel::{self, digit_points, graph_points};
use qsvm_core::simulator::bitstring;
use qsvm_core::{svm, Beta2Variant, Circuit, Encoding, Error, GateKind, GraphDataset, KernelConfig, KernelMatrix, KernelPoint, NoiseConfig, SvmModel};

/// Invalid flag combinations detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NonConvergence { .. } => 4,
                Error::Config(_) => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dataset(cmd) => dataset(cmd),
        Command::Kernel(a) => kernel_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Experiment(cmd) => experiment_cmd(cmd),
        Command::Transpile(a) => transpile_cmd(a),
        Command::Figure3(a) => figure3_cmd(a),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn noise_from(spec: &str) -> Result<Option<NoiseConfig>> {
    let cfg = NoiseConfig::from_spec(spec).with_context(|| format!("noise spec `{spec}`"))?;
    Ok(cfg.enabled.then_some(cfg))
}

fn beta2(arg: Beta2Arg) -> Beta2Variant {
    match arg {
        Beta2Arg::Corrected => Beta2Variant::Corrected,
        Beta2Arg::Verbatim => Beta2Variant::Verbatim,
    }
}

fn kernel_config(flags: &KernelFlags) -> Result<KernelConfig> {
    let mut cfg = KernelConfig::new(flags.encoding.into(), flags.mode.into());
    cfg.estimator = flags.shots;
    cfg.seed = flags.seed;
    cfg.noise = noise_from(&flags.noise)?;
    cfg.gamma = flags.gamma;
    cfg.beta2 = beta2(flags.beta2);
    cfg.pin_diagonal = flags.pin_diagonal;
    check_noise_needs_shots(&cfg)?;
    Ok(cfg)
}

fn check_noise_needs_shots(cfg: &KernelConfig) -> Result<()> {
    if cfg.active_noise().is_some() && cfg.estimator == qsvm_core::Estimator::Exact {
        return Err(usage("--noise needs --shots N; exact evaluation is noiseless"));
    }
    Ok(())
}

fn load_digit_split(data_path: &Path, manifest_path: &Path) -> Result<(Vec<data::DigitSample>, Vec<data::DigitSample>)> {
    let manifest = DigitManifest::load(manifest_path).with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let samples = data::load_optdigits(data_path, manifest.class_a_digit, manifest.class_b_digit)
        .with_context(|| format!("reading {}", data_path.display()))?;
    Ok(manifest.resolve(&samples)?)
}

/// Training and test points with labels.
struct Split {
    train: Vec<KernelPoint>,
    train_labels: Vec<i8>,
    test: Vec<KernelPoint>,
    test_labels: Vec<i8>,
}

fn load_split(args: &DataArgs, encoding: Encoding) -> Result<Split> {
    if encoding == Encoding::Graph {
        let path = args
            .graphs
            .as_ref()
            .ok_or_else(|| usage("--encoding graph needs --graphs <dataset.json>"))?;
        let ds = GraphDataset::load(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Split {
            train: graph_points(&ds.train),
            train_labels: ds.train.iter().map(|g| g.label).collect(),
            test: graph_points(&ds.test),
            test_labels: ds.test.iter().map(|g| g.label).collect(),
        });
    }
    let (train, test) = load_digit_split(&args.data, &args.manifest)?;
    Ok(Split {
        train: digit_points(&train, encoding)?,
        train_labels: train.iter().map(|s| s.label).collect(),
        test: digit_points(&test, encoding)?,
        test_labels: test.iter().map(|s| s.label).collect(),
    })
}

/// Labels of `ids`, looked up in either split.
fn labels_for(split: &Split, ids: &[String]) -> Result<Vec<i8>> {
    ids.iter()
        .map(|id| {
            split
                .train
                .iter()
                .zip(&split.train_labels)
                .chain(split.test.iter().zip(&split.test_labels))
                .find(|(p, _)| p.id() == id)
                .map(|(_, &l)| l)
                .ok_or_else(|| anyhow!(Error::Data(format!("no label for sample {id}"))))
        })
        .collect()
}

/// Any encoding of the right dataset family; used only to look up labels.
fn encoding_for_ids(args: &DataArgs) -> Encoding {
    if args.graphs.is_some() {
        Encoding::Graph
    } else {
        Encoding::Ry
    }
}

fn dataset(cmd: DatasetCommand) -> Result<()> {
    match cmd {
        DatasetCommand::Digits {
            data: path,
            class_a,
            class_b,
            c,
            out,
        } => {
            let samples = data::load_optdigits(&path, class_a, class_b).with_context(|| format!("reading {}", path.display()))?;
            let source = path
                .file_name()
                .map_or_else(|| "optdigits".to_string(), |s| s.to_string_lossy().into_owned());
            let (manifest, offset) = experiment::search_digit_manifest(&samples, &source, class_a, class_b, c)?;
            eprintln!(
                "{} samples of digits {class_a}/{class_b}; split found at offset {offset}",
                samples.len()
            );
            emit(out.as_deref(), &manifest.to_json()?)
        }
        DatasetCommand::Graphs {
            n,
            seed,
            train,
            test,
            out,
        } => {
            let ds = data::generate_graph_dataset(n, train, test, seed)?;
            let (tr, te) = (ds.train_counts(), ds.test_counts());
            eprintln!(
                "n={n} seed={seed}: {} attempts; train +{} -{}, test +{} -{}",
                ds.attempts, tr.positive, tr.negative, te.positive, te.negative
            );
            emit(out.as_deref(), &ds.to_json()?)
        }
        DatasetCommand::Inspect { path } => {
            let ds = GraphDataset::load(&path).with_context(|| format!("reading {}", path.display()))?;
            let rule = data::SpectrumLabelRule::standard(ds.n)?;
            let mut out = String::new();
            for g in ds.train.iter().chain(&ds.test) {
                let e = data::ising_spectrum(&g.graph)?;
                let min = e.iter().copied().fold(f64::INFINITY, f64::min);
                let ground: Vec<String> = (0..e.len())
                    .filter(|&x| (e[x] - min).abs() <= data::DEGENERACY_TOL)
                    .map(|x| bitstring(x, ds.n))
                    .collect();
                let relabel = data::label_graph(&g.graph, &rule)?;
                let _ = writeln!(
                    out,
                    "{} label={:+} relabel={:?} E_min={min:.6} ground={}",
                    g.id,
                    g.label,
                    relabel,
                    ground.join(",")
                );
            }
            emit(None, &out)
        }
    }
}

fn kernel_cmd(a: args::KernelArgs) -> Result<()> {
    let cfg = kernel_config(&a.kernel)?;
    let split = load_split(&a.data, cfg.encoding)?;
    let rows = match a.split {
        SplitArg::Train => &split.train,
        SplitArg::Test => &split.test,
    };
    let k = kernel::kernel_matrix(rows, &split.train, &cfg)?;
    if a.min_eigenvalue {
        if k.is_square() {
            eprintln!("min eigenvalue: {:.6e}", k.min_eigenvalue()?);
        } else {
            return Err(usage("--min-eigenvalue needs a square (train) matrix"));
        }
    }
    let text = match a.format {
        FormatArg::Csv => k.to_csv(),
        FormatArg::Json => k.to_json()?,
    };
    emit(a.out.as_deref(), &text)
}

fn train_cmd(a: args::TrainArgs) -> Result<()> {
    let gram = KernelMatrix::load(&a.kernel).with_context(|| format!("reading {}", a.kernel.display()))?;
    if gram.row_ids() != gram.col_ids() {
        return Err(usage("training needs a Gram matrix (same row and column ids)"));
    }
    let split = load_split(&a.data, encoding_for_ids(&a.data))?;
    let labels = labels_for(&split, gram.row_ids())?;
    let model = svm::train(&gram, &labels, a.c)?;
    let correct = model
        .predict_all(&gram)?
        .iter()
        .zip(&labels)
        .filter(|(p, t)| p == t)
        .count();
    eprintln!(
        "{} support vectors, bias {:.6}, training accuracy {correct}/{}",
        model.support_indices.len(),
        model.bias,
        labels.len()
    );
    emit(a.out.as_deref(), &model.to_json()?)
}

fn predict_cmd(a: args::PredictArgs) -> Result<()> {
    let model = SvmModel::load(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let cross = KernelMatrix::load(&a.kernel).with_context(|| format!("reading {}", a.kernel.display()))?;
    let mut out = String::from("id,decision,label\n");
    let mut predicted = Vec::new();
    for (i, id) in cross.row_ids().iter().enumerate() {
        let d = model.decision_value(cross.row(i))?;
        let l = model.predict(cross.row(i))?;
        predicted.push(l);
        let _ = writeln!(out, "{id},{d:.10},{l:+}");
    }
    if a.score {
        let split = load_split(&a.data, encoding_for_ids(&a.data))?;
        let truth = labels_for(&split, cross.row_ids())?;
        let acc = model.accuracy(&cross, &truth)?;
        eprintln!("accuracy {:.1}%", 100.0 * acc);
    }
    emit(a.out.as_deref(), &out)
}

fn finish_report(mut report: ExperimentReport, start: Instant, run: &RunFlags) -> ExperimentReport {
    if run.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    report
}

fn run_config(encoding: Encoding, run: &RunFlags) -> Result<KernelConfig> {
    let mut cfg = KernelConfig::new(encoding, run.mode.into());
    cfg.estimator = run.shots;
    cfg.seed = run.seed;
    cfg.noise = noise_from(&run.noise)?;
    cfg.pin_diagonal = run.pin_diagonal;
    check_noise_needs_shots(&cfg)?;
    Ok(cfg)
}

fn write_report(run: &RunFlags, json: String, human: String) -> Result<()> {
    match &run.out {
        Some(path) => {
            fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            print!("{human}");
            Ok(())
        }
        None => emit(None, &json),
    }
}

fn experiment_cmd(cmd: ExperimentCommand) -> Result<()> {
    let start = Instant::now();
    match cmd {
        ExperimentCommand::Digits {
            encoding,
            beta2: b2,
            grid,
            data: data_path,
            manifest,
            run,
        } => {
            let (train, test) = load_digit_split(&data_path, &manifest)?;
            let dataset = manifest_label(&manifest);
            if grid {
                let rows = experiment::digits_grid(&train, &test, run.seed, noise_from(&run.noise)?, run.c, &dataset)?;
                if run.timing {
                    eprintln!("grid took {} ms", start.elapsed().as_millis());
                }
                let json = serde_json::to_string_pretty(&rows)? + "\n";
                return write_report(&run, json, experiment::render_digits_grid(&rows));
            }
            let encoding: Encoding = encoding.into();
            if encoding == Encoding::Graph {
                return Err(usage("digit experiments use ry, rycx or amplitude"));
            }
            let mut cfg = run_config(encoding, &run)?;
            cfg.beta2 = beta2(b2);
            let report = experiment::digits_experiment(&train, &test, &cfg, run.c, &dataset)?;
            let report = finish_report(report, start, &run);
            write_report(&run, report.to_json()?, report.summary() + "\n")
        }
        ExperimentCommand::Graphs {
            n,
            graphs,
            gamma,
            grid,
            run,
        } => {
            if grid {
                let rows = experiment::graphs_grid(run.seed, run.shots, noise_from(&run.noise)?, run.c, gamma)?;
                if run.timing {
                    eprintln!("grid took {} ms", start.elapsed().as_millis());
                }
                let json = serde_json::to_string_pretty(&rows)? + "\n";
                return write_report(&run, json, experiment::render_graphs_grid(&rows));
            }
            let (ds, label) = match graphs {
                Some(path) => {
                    let ds = GraphDataset::load(&path).with_context(|| format!("reading {}", path.display()))?;
                    (ds, path.display().to_string())
                }
                None => {
                    let seed = experiment::graph_dataset_seed(run.seed, n);
                    let ds = data::generate_graph_dataset(n, experiment::GRAPH_TRAIN, experiment::GRAPH_TEST, seed)?;
                    (ds, format!("graphs:n={n}:seed={seed}"))
                }
            };
            let mut cfg = run_config(Encoding::Graph, &run)?;
            cfg.gamma = gamma;
            let report = experiment::graphs_experiment(&ds, &cfg, run.c, &label)?;
            let report = finish_report(report, start, &run);
            write_report(&run, report.to_json()?, report.summary() + "\n")
        }
    }
}

fn manifest_label(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn transpile_cmd(a: args::TranspileArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let circuit = Circuit::parse(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let result = match qsvm_core::TranspileMode::from(a.mode) {
        qsvm_core::TranspileMode::NonOptimized => circuit.transpile_cx()?,
        qsvm_core::TranspileMode::Optimized => circuit.optimize().transpile_cx()?.optimize(),
    };
    let (before, after) = (circuit.count_gates(), result.count_gates());
    let mut summary = String::new();
    for kind in GateKind::ALL {
        let (b, c) = (before[&kind], after[&kind]);
        if b != 0 || c != 0 {
            let _ = write!(summary, "{kind}: {b} -> {c}  ");
        }
    }
    eprintln!("{} -> {} gates  {}", circuit.len(), result.len(), summary.trim_end());
    emit(a.out.as_deref(), &result.to_text())
}

fn figure3_cmd(a: args::Figure3Args) -> Result<()> {
    if a.shots == 0 {
        bail!(usage("--shots must be at least 1"));
    }
    let noise = NoiseConfig::from_spec(&a.noise).with_context(|| format!("noise spec `{}`", a.noise))?;
    let buckets = experiment::figure3(a.seed, &noise, a.shots, a.gamma)?;
    emit(a.out.as_deref(), &experiment::render_figure3(&buckets))
}
