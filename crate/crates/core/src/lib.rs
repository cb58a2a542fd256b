//! Mesh-free solvers for Saint-Venant torsion problems.
//!
//! Three physics-informed network solvers share one toolbox: a standard
//! collocation solver for the 2D Prandtl stress-function Poisson problem,
//! a variable-scaling solver for a 1D shaft with a sharp diameter
//! transition, and a parametric solver for a family of Gaussian body
//! forces. Independent finite-difference and quadrature oracles back
//! every result.

pub mod autodiff;

pub mod fd_oracle;
pub mod geometry;
pub mod network;
pub mod optim;
pub mod parametric1d;
pub mod torsion1d_vs;
pub mod torsion2d;
pub mod numeric;

pub use autodiff::{param_gradient, Jet2};
