//! Deterministic simulation and autonomic orchestration for a small data
//! center assembled from salvaged end-of-life devices.
//!
//! The library models the whole loop: an emissions-trajectory backdrop
//! ([`trajectory`]), heterogeneous salvaged nodes ([`device`]), an
//! intermittent energy supply ([`energy`]), degradable services
//! ([`workload`]), placement and shedding policies ([`scheduler`]), a
//! MAPE-K control loop ([`controller`]), a discrete-time engine ([`sim`])
//! and carbon accounting over the results ([`impact`]).
//!
//! A single run is strictly sequential and reproducible from its seed.
//! Independent runs (seed sweeps, batch evaluations) go through [`sweep`],
//! which is data-parallel when the `parallel` feature is enabled (default)
//! and falls back to a plain loop otherwise.

pub mod controller;
pub mod defaults;
pub mod device;
pub mod energy;
pub mod event;
pub mod ids;
pub mod impact;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod sweep;
pub mod trajectory;
pub mod workload;
pub mod world;
