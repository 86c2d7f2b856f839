//! Core solver for a rigid disk immersed in a compressible viscous
//! barotropic fluid inside a circular container, driven toward a target
//! position by PD (spring–damper) feedback. The system is solved in the
//! fixed reference annulus via the flow-map change of variables, with a
//! per-step fixed-point iteration over a linear cascade (body ODEs →
//! implicit velocity solve → density update).

pub mod algebra;
pub mod cascade;
pub mod controller;
pub mod diagnostics;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod kinematics;
pub mod marcher;
pub mod model;
pub mod piston;
