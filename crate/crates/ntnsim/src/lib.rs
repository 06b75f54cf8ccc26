//! System-level simulator for an integrated terrestrial + non-terrestrial
//! network with multiple operators.
//!
//! The simulator reproduces two multi-operator arrangements on a Monte-Carlo
//! drop basis:
//!
//! * a terrestrial operator sharing spectrum with a dedicated aerial operator
//!   running uptilted massive-MIMO cells for UAV traffic, and
//! * a terrestrial operator offloading high-altitude users in outage to a
//!   LEO satellite operator.
//!
//! Each drop re-draws user positions, shadowing and small-scale channels,
//! associates users by RSRP, schedules round-robin, applies zero-forcing or
//! eigendirection-aware precoding/combining, and evaluates co-channel SINR
//! and rates across both operators. Results aggregate into per-class SINR
//! and rate distributions, percentiles and outage fractions.

pub mod antenna;
pub mod channel;
pub mod geometry;
pub mod kpi;
pub mod linalg;
pub mod ntn_phy;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod tn_phy;

// re-exports added as modules land

