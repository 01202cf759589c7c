//! Exact scalars, sparse linear algebra, and finite complexes.

pub mod complex;
pub mod linalg;
pub mod scalar;

pub use complex::{Cohomology, CohomologyDegree, FiniteComplex, GradedSpace};
pub use linalg::{
    solve_columns, solve_linear, Eliminator, Inserted, LinearSolution, SparseMatrix, SparseVec,
};
pub use scalar::Q;
