//! Node-count inference for 802.11 star cells from client-side observables.
//!
//! A receiving node sees the transfer time (ETA) of a file, the transmit power
//! and its distance to the access point. From these alone the classifiers in
//! this crate estimate how many nodes (1 to 4) are being served at once:
//!
//! * [`bayes`]: Naive Bayes with Gaussian or Poisson likelihoods, MAP decision
//! * [`svm`]: soft-margin SVM dual solver with one-vs-one voting
//! * [`knn`]: exact k-nearest neighbors
//!
//! [`experiment`] runs stratified cross-validation over feature subsets and
//! class-imbalance subsamples; [`metrics`] provides F1 and ROC analysis and
//! [`eta`] propagates classification errors into ETA prediction error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod classifier;
pub mod data;
pub mod error;
pub mod eta;
pub mod experiment;
pub mod knn;
pub mod metrics;
pub mod scaling;
pub mod split;
pub mod svm;
pub mod synth;

pub use classifier::{ClassifierSpec, Prediction, TrainedClassifier};
pub use data::{
    load_csv, read_csv, save_csv, write_csv, Channel, Dataset, Feature, FeatureSubset,
    LabeledExample, NodeCount, Samples, TimeOfDay,
};
pub use error::{Error, Result};
pub use experiment::{
    cross_validate, evaluate, run, CvResult, ExperimentConfig, Report, RunOptions,
};
pub use scaling::{standardize, Scaling};
pub use split::{make_folds, subsample, FoldPlan, SubsampleSpec};
pub use synth::{calibration_report, generate, CalibrationReport, GeneratorConfig};
