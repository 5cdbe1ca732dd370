//! Monotone P1 finite element solver for time-dependent Hamilton-Jacobi-Bellman
//! equations, stabilized by nodal artificial diffusion.

pub mod assembly;
pub mod cli;
pub mod control;
pub mod io;
pub mod mesh;
pub mod numfmt;
pub mod problems;
pub mod solver;
pub mod timestepper;

#[cfg(test)]
mod testutil;
