//! Placement of wireless charging lanes (WCLs) on a road-segment graph.
//!
//! The pipeline is: load a [`road_network::SegmentGraph`], pick or enumerate
//! [`routing::Route`]s, simulate battery state of charge along them
//! ([`soc_model`]), expand each route into a layered SOC-state graph
//! ([`state_graph`]), and then either export the integer program
//! ([`ip_builder`]) or solve desk-scale instances directly ([`solvers`]).
//! [`experiments`] reproduces the sensitivity studies on top of all of that.

pub mod error;
pub mod experiments;
pub mod io;
pub mod ip_builder;
pub mod par;
pub mod road_network;
pub mod routing;
pub mod soc_model;
pub mod solvers;
pub mod state_graph;
pub mod synthetic;

pub use error::{Error, Result};
pub use road_network::{RoadSegment, SegmentGraph, Setting};
pub use routing::{Route, RoutePopulation};
pub use soc_model::{Installation, RouteOutcome, SocFunction, SocParams};
pub use solvers::{SolveResult, SolveStatus};
pub use state_graph::WeightScheme;
