//! Double stochastic integrals driven by independent, not necessarily Gaussian, noise.
//!
//! Elements of `L^2([0, T])` are step functions on dyadic grids, expanded in normalized
//! cell indicators `e_k`. Random variables are polynomials in independent centred,
//! unit-variance `X_k`, graded by chaos order through the orthogonal polynomials of each
//! `X_k`. [`poly::MultiPoly`] expands everything into monomials and serves as the
//! reference for the closed-form operators in [`tensor`], [`chaos`], [`integral`] and
//! [`path`].

pub mod chaos;
pub mod dist;
pub mod error;
pub mod grid;
pub mod integral;
pub mod mc;
pub mod path;
pub mod poly;
pub mod tensor;
pub mod tolerances;

pub use chaos::{GradedChaos, Realization};
pub use dist::{DistFamily, Model, ModelRef, ModelSpec};
pub use error::{Error, Result};
pub use grid::{BasisSpec, Grid, Kernel2, StepFn};
pub use poly::MultiPoly;
pub use tensor::SymTensor;
