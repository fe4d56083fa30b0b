//! Direct photometric homography estimation on SL(3).
//!
//! A homography between a reference view and the current view of a planar
//! scene is tracked as an element of SL(3) driven by the camera's group
//! velocity. The observer corrects the estimate with an sl(3)-valued
//! innovation built from the photometric residual between the reference image
//! and the current image warped through the estimate. A second observer
//! additionally estimates the unmeasured translational part of the group
//! velocity from gyro measurements alone.

pub mod camera;
pub mod config;
pub mod error;
pub mod image;
pub mod io;
pub mod lie;
pub mod observer;
pub mod sim;

pub use error::{Error, Result};
