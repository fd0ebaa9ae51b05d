//! Congestion-aware potential accessibility over a gridded metropolitan area.
//!
//! The pipeline routes every zone to every other zone on a time-dependent road
//! network at each departure instant, turns travel times into decayed
//! opportunities, and summarizes how congestion erodes accessibility over the
//! day, globally and per zone.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accessibility;
pub mod clustering;
pub mod error;
pub mod io;
pub mod network;
pub mod pipeline;
pub mod routing;
pub mod synthgen;
pub mod time;
pub mod zoning;

pub use accessibility::{DecayParams, GlobalMetrics, GlobalProfile, ZoneMetrics};
pub use error::{Error, Result};
pub use network::{Network, NetworkBuilder, SpeedProfile, TravelTimeFunction};
pub use routing::{Attachment, CostTensor, SearchGraph};
pub use time::{DepartureSchedule, Minute, TimeWindow};
pub use zoning::{StudyArea, Zone};
