//! Census engine for the prescribed Webster scalar curvature problem on the
//! CR 3-sphere.
//!
//! The variational problem `L u = K u^3` on `S^3` loses compactness along
//! concentrating bubble ensembles. When the candidate curvature `K` is flat of
//! order `beta` at each critical point, the non-compact flow ends are a finite
//! combinatorial family: single critical points with slow-decay flatness and
//! tuples of degree-two flat points whose interaction matrix is positive
//! definite. Counting those ends with signs against the Euler characteristic
//! of the variational space yields an existence gate and a lower bound on the
//! number of solutions.
//!
//! This crate computes everything in that census that is computable:
//!
//! * exact Heisenberg group geometry, Cayley transport and bubbles
//!   ([`heisenberg`]),
//! * the structural constants as singular integrals over the Heisenberg
//!   group, with error bounds and an independent Monte Carlo oracle
//!   ([`quad`], [`kernels`], [`monte_carlo`], [`constants`]),
//! * classification of flatness profiles ([`profiles`]),
//! * interaction matrices, their least eigenvalues and definiteness
//!   ([`interaction`]),
//! * enumeration of the ends, their indices, the existence gate and the
//!   solution-count bound ([`counting`]),
//! * the reduced pseudo-gradient dynamics of bubble ensembles ([`flow`]).

pub mod constants;
pub mod counting;
pub mod flow;
pub mod heisenberg;
pub mod interaction;
pub mod kernels;
pub mod monte_carlo;
pub mod profiles;
pub mod quad;
pub mod rng;
pub mod synthetic;

pub use constants::StructuralConstants;
pub use counting::{CensusReport, CriticalAtInfinity};
pub use heisenberg::{HeisenbergPoint, SpherePoint};
pub use profiles::{Classification, CriticalPointProfile};
pub use quad::QuadratureResult;
