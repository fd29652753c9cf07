//! Exact-arithmetic Markov intertwining relations between the Ehrenfest,
//! Yule, reverse-Yule and Ornstein-Uhlenbeck generator families.
//!
//! Everything structural (generators, kernels, eigenfunctions, feasibility
//! regions) is computed over arbitrary-precision rationals so that every
//! certificate is an exactly-zero residual, not a small float. Floating
//! point only enters where randomness or transcendental functions do: the
//! coupled-chain simulation and the convergence curves.

// Matrix code reads better with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod convergence;
pub mod coupling;
pub mod feasibility;
pub mod generators;
pub mod kernels;
pub mod linalg;
pub mod polyalg;
pub mod selftest;
pub mod stats;

pub use polyalg::{Poly, Rational, ValueVector};
