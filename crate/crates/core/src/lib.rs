//! Numerical toolkit for intrinsic calculus on low-codimension intrinsic
//! graphs in the Heisenberg group ℍⁿ.
//!
//! The crate provides, in dependency order:
//!
//! - [`hgroup`]: the group law, dilations, the homogeneous norm/distance
//!   and the left-invariant frame in exponential coordinates;
//! - [`split`]: the splitting ℍⁿ = 𝕄 · ℍ, coordinate embeddings, the
//!   ⋆-product on the base and the graph distances d_φ, D_φ, ρ_φ;
//! - [`expr`]: a small expression language with dual-number derivatives,
//!   plus grid-sampled fields with multilinear interpolation;
//! - [`intrinsic`]: the nonlinear vector fields W^φ_j, their integral
//!   curves, intrinsic partial derivatives, the intrinsic Jacobian from
//!   both the graph and the level-set side, and residual/modulus
//!   diagnostics for (uniform) intrinsic differentiability;
//! - [`approx`]: mollification of level-set functions and the Newton
//!   implicit-function pipeline producing smooth approximating graphs;
//! - [`measure`]: Hausdorff-type premeasure estimators and the
//!   codimension-k area formula.

pub mod approx;
pub mod domain;
pub mod error;
pub mod expr;
pub mod hgroup;
pub mod intrinsic;
pub mod linalg;
pub mod measure;
pub mod sampling;
pub mod split;

pub use domain::DomainBox;
pub use error::{Error, Result};
pub use expr::{ScalarField, Smoothness};
pub use hgroup::{Frame, GroupPoint, HDim};
pub use split::{BasePoint, GraphFunction, GraphMap, Splitting, TargetPoint};
