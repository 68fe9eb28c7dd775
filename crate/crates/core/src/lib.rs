//! Quantum-kernel SVM toolkit for a trapped-ion native gate set.
//!
//! State-vector simulation, circuit transpilation to `R_phi`/`MS` gates,
//! feature encodings, kernel estimation (exact, shots, noisy), an SMO-based
//! SVM, and the digit and Ising-graph datasets.

pub mod circuit;
pub mod data;
pub mod encodings;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod noise;
pub mod seed;
pub mod simulator;
pub mod svm;

pub use circuit::{Circuit, Gate, GateKind};
pub use data::{DigitSample, GraphDataset, GraphInstance, LabeledGraph, SpectrumLabelRule};
pub use encodings::{Beta2Variant, DigitFeature};
pub use error::{Error, Result};
pub use kernel::{Encoding, Estimator, KernelConfig, KernelMatrix, KernelMode, KernelPoint, TranspileMode};
pub use noise::NoiseConfig;
pub use simulator::{MeasurementOutcome, StateVector};
pub use svm::SvmModel;
