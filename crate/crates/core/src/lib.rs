//! Bearing-only teach-and-repeat navigation.
//!
//! A robot is driven once along a route while it records a distance-indexed
//! velocity profile and local feature maps. When repeating, it replays the
//! profile by odometric distance and uses the camera only to correct its
//! heading. The crate contains the navigation method, a closed-loop
//! simulator to exercise it and a continuous-time model of the position
//! error that predicts when repeated traversals converge.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error_model;
pub mod io;
pub mod sim;
pub mod teach_repeat;
pub mod types;
pub mod vision;
