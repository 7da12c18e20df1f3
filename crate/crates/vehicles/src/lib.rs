//! Trajectory problems for the SCP loops: a quadrotor among ellipsoidal
//! obstacles and a 6-DoF free-flyer inside a space-station flight space.

pub mod freeflyer;
pub mod geometry;
pub mod quadrotor;
pub mod quat;

pub use freeflyer::{freeflyer_guess, FreeFlyer, FreeFlyerParams, FREEFLYER_FIXTURE};
pub use geometry::{room_sdf, softmax, softmax_gradient, Ellipsoid, Room};
pub use quadrotor::{quadrotor_guess, Quadrotor, QuadrotorParams, QUADROTOR_FIXTURE};
pub use quat::{quat_conj, quat_exp_map, quat_log_map, quat_mul, rotation_matrix, slerp, Quat};

use trajopt_ocp::OcpError;

#[derive(Debug, thiserror::Error)]
pub enum VehicleError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error("fixture: {0}")]
    Fixture(#[from] serde_json::Error),
}

/// Overwrites `base` with `patch`, merging nested objects key by key.
pub fn merge_json(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}
