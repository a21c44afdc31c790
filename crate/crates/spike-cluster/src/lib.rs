//! Multipeak cluster solutions of `ε²Δv − V(x)v + f(v) = 0` near a saddle of `V`:
//! ground-state profile, reduced energy, grid Lyapunov–Schmidt solves and the
//! unit-distance balance check.

pub mod cli_io;
pub mod equilibrium_checker;
pub mod ground_profile;
pub mod ls_pde;
pub mod potential_model;
pub mod reduced_model;

mod gauss;
mod io_util;
