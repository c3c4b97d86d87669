//! Classification of code and prose comprehension tasks from wearable
//! biometric recordings: session ingestion, preprocessing, task
//! segmentation, feature extraction, classifier evaluation and a synthetic
//! session generator.

pub mod error;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod preprocess;
pub mod rng;
pub mod segment;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, SignalConfig};
pub use ingest::{Session, TaskKind};
pub use learn::{ClassifierSpec, EvalReport, Family, Protocol};
pub use segment::TaskWindow;
pub use signal::{ChannelKind, SampledSignal};
