//! Numerical toolkit for de Branges-Rovnyak spaces H(b) on the upper
//! half-plane: symbol factorizations, reproducing kernels, boundary
//! quadrature, kernel-norm weights, Carleson geometry, embedding tests,
//! and Riesz-system diagnostics.

pub mod bernstein;
pub mod embedding;
pub mod geometry;
pub mod kernels;
pub mod quad;
pub mod riesz;
pub mod symbol;
pub mod weights;

pub use geometry::{CarlesonSquare, DiscreteMeasure, GeometryError, LevelSetOracle};
pub use kernels::{KernelCombination, KernelError};
pub use quad::{QuadError, Quadrature, QuadratureSpec, TailBound};
pub use symbol::{EvalError, SymbolError, SymbolFunction};
