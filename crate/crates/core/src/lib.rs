//! Traffic density reconstruction from probe vehicles.
//!
//! A ground-truth LWR/viscous Burgers simulation drives a fleet of probe
//! vehicles; between every pair of consecutive probes a moving-boundary
//! observer reconstructs the density from the two probes' readings. The
//! [`stability`] module checks the 2×2 matrix inequalities that certify
//! exponential convergence of the observation error.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision types used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod export;
pub mod observer;
pub mod pde_solver;
pub mod probes;
pub mod quadrature;
pub mod scalar;
pub mod stability;
pub mod traffic_model;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelParams64 = traffic_model::ModelParams<f64>;
pub type Density64 = traffic_model::Density<f64>;
pub type Grid64 = pde_solver::Grid<f64>;
pub type DensityField64 = pde_solver::DensityField<f64>;
pub type InitialCondition64 = pde_solver::InitialCondition<f64>;
pub type ProbeFleet64 = probes::ProbeFleet<f64>;
pub type ObserverSegment64 = observer::ObserverSegment<f64>;
pub type GlobalEstimate64 = observer::GlobalEstimate<f64>;
pub type CertificateQuery64 = stability::CertificateQuery<f64>;
pub type StabilityCertificate64 = stability::StabilityCertificate<f64>;
