//! Behavioral sensor data toolkit: a standard observation table, per-sensor
//! feature extraction, exploration summaries and correlation analysis.

pub mod analysis;
pub mod comm;
pub mod error;
pub mod exploration;
pub mod features;
pub mod ingest;
pub mod location;
pub mod schema;
pub mod sensor;
pub mod stats;
pub mod tracker;
pub mod usage;

pub use error::{Error, Result};
pub use features::{EventList, FeatureRow, FeatureTable};
pub use schema::{validate, Alignment, Column, ObservationTable, Timestamp, WindowSpec};
pub use sensor::Sensor;
