//! Multi-speaker azimuth tracking with joint spatial-spectral data association.
//!
//! A bank of wrapped Kalman filters (one per speaker) is driven by per
//! time-frequency-bin DOA estimates. Each estimate is soft-assigned to the
//! speakers through JPDA association probabilities whose detection term is
//! taken from speaker time-frequency masks. Three association variants are
//! available through [`AssociationMode`]:
//!
//! * `Spatial`: detection probabilities fixed at 0.5, association driven by
//!   the innovation likelihood alone.
//! * `Spectral`: the likelihood term is dropped, association driven by masks.
//! * `Joint`: both terms retained.
//!
//! The crate also ships a synthetic scenario generator, a narrowband
//! circular-array front end, evaluation metrics (RLMAE, identity switches),
//! text I/O formats and an experiment runner. See `examples/` for one
//! runnable program per capability.

pub mod arraysim;
pub mod assoc;
pub mod circular;
pub mod cli;
mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod plot;
pub mod scenario;
pub mod tracker;
pub mod wkf;

pub use assoc::{AssociationMode, MaskVector};
pub use circular::WrappedAngle;
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use scenario::{GroundTruth, ObservationModel, TrajectorySpec};
pub use tracker::{Observation, TrackResult, TrackerConfig};
pub use wkf::{MotionModel, SpeakerState};
