//! Double-critic recurrent actor-critic agents for mapless navigation of a
//! hybrid aerial-underwater vehicle, together with the tank simulator they
//! train in, a reactive baseline controller and the experiment harness.
//!
//! The network core ([`nn`]) and the sensing geometry ([`sim::raycast`]) are
//! generic over [`Scalar`]; the aliases below pin the precisions used in
//! practice.

pub mod agents;
pub mod bba;
pub mod harness;
pub mod nn;
pub mod scalar;
pub mod sim;

pub use scalar::Scalar;

/// Default training precision.
pub type Real = f64;
pub type Matrix64 = nn::Matrix<f64>;
pub type Network64 = nn::Network<f64>;
pub type ParamSet64 = nn::ParamSet<f64>;
pub type LstmState64 = nn::LstmState<f64>;
/// Storage precision of checkpoints.
pub type Network32 = nn::Network<f32>;
pub type Matrix32 = nn::Matrix<f32>;
