//! Executable constructions for shadowing, odometer approximation and
//! entropy control on computable dynamical systems.
//!
//! Systems are subshifts of finite type, piecewise-linear interval maps,
//! odometers and finite products of these, all with exact metrics. On top
//! of them sit pseudo-orbit tracing, empirical measures compared in a
//! bounded-Lipschitz metric, entropy estimation, the periodic and odometer
//! point constructions, and a countable Markov graph with no measure of
//! maximal entropy.

pub mod constructions;
pub mod entropy;
pub mod gurevich;
pub mod interval_maps;
pub mod measures;
pub mod odometer;
pub mod rational;
pub mod shadowing;
pub mod spaces;
pub mod spectral;
pub mod subshift;

pub use rational::Q;
pub use spaces::{Extension, PointRep, SymbolicWindow, SystemHandle};
