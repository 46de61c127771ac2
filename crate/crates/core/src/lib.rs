//! Event-driven simulation of point particles in a rectangular cell containing
//! a chain of freely rotating disk scatterers, coupled to stochastic heat baths
//! through the two open vertical sides.
//!
//! The crate is organized around the physical pipeline:
//!
//! - [`geometry`] — the cell, exact ray/boundary queries, contact frames;
//! - [`dynamics`] — the particle–disk exchange law and the exact event loop;
//! - [`baths`] — Poisson injection processes and velocity samplers;
//! - [`ensemble`] — replicated steady-state runs and the statistical battery
//!   that checks the equilibrium invariant measure;
//! - [`control`] — planners that steer disk states and flush particles out
//!   using deterministic injection schedules;
//! - [`jacobian`] — closed-form injection / disk-response maps with
//!   finite-difference verification of their derivatives.
//!
//! All evolution is closed-form between events; there is no time-stepping
//! anywhere. Runs are bit-reproducible given a configuration and a seed.

// validation guards are written `!(x > 0.0)` on purpose: NaN must fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baths;
pub mod control;
pub mod dynamics;
pub mod ensemble;
pub mod geometry;
pub mod jacobian;
pub mod stats;

pub use dynamics::{DiskState, ParticleState, PhysicalParams, SystemState};
pub use geometry::{DomainSpec, Vec2};
