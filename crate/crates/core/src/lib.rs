//! Kinematics of the Canfield Joint under the `(θ, p, φ)` control scheme.

pub mod error;
pub mod full_joint;
pub mod geometry;
pub mod joint_model;
pub mod oracle;
pub mod single_arm;
pub mod workspace;

pub use error::{Error, Result};
