//! Drone base station placement in a macro-cell grid.
//!
//! A single drone base station (DBS) helps a macro base station (MBS) carry
//! downlink traffic for one time slot. Both stations are modelled as
//! M/G/1 processor-sharing queues, and the quantity being minimized is the
//! sum of their mean latency ratios `rho / (1 - rho)`, subject to the drone's
//! battery budget.
//!
//! Module map:
//!
//! - [`scenario`]: grid geometry and per-slot traffic demand.
//! - [`radio`]: link budget and Shannon rates.
//! - [`queueing`]: utilization, latency ratio, objective and feasibility.
//! - [`placement`]: the LEAP optimizer and the S-MBS / SSC baselines.
//! - [`oracle`]: exhaustive search, a processor-sharing simulator and a
//!   grid-search check of the load split.
//! - [`config`], [`experiment`], [`heatmap`], [`validate`]: the
//!   experiment runner behind the `dbs-leap` binary.

// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod heatmap;
pub mod oracle;
pub mod placement;
pub mod queueing;
pub mod radio;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
pub use placement::{EnergyParams, PlacementResult};
pub use queueing::{Association, Evaluation, Infeasibility};
pub use radio::{LinkRates, PathLossModel, RadioParams};
pub use scenario::{DemandField, Grid, HotspotSpec, Scenario};
