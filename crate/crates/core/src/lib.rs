//! Gaze analytics: fixation detection, AOI labelling and metrics, scanpath
//! similarity, matrix seriation, attention density and saccade bundling,
//! organised around versioned sessions.

pub mod aoi;
pub mod bundle;
pub mod fixation;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod seriation;
pub mod server;
pub mod session;
pub mod similarity;
pub mod spatial;

pub use model::*;
pub use session::{Session, SessionError};
