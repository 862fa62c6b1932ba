//! Inverse dynamics, three ways: the stacked-operator matrix form, its O(n)
//! recursive equivalent, and product-of-exponentials.

mod matrix;
mod poe;
mod recursive;

use nalgebra::{DMatrix, DVector};

pub use matrix::{
    build_operators, coriolis_matrix, gravity_vector, inverse_dynamics_matrix, mass_matrix, StackedOperators,
};
pub use poe::{inverse_dynamics_poe, PoeChain, PoeDynamics};
pub use recursive::{inverse_dynamics_recursive, rnea};

pub(crate) use poe::evaluate as evaluate_poe;

/// `τ = M(q)·q̈ + C(q, q̇)·q̇ + φ(q)` with its three terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsDecomposition {
    pub mass_matrix: DMatrix<f64>,
    pub coriolis_matrix: DMatrix<f64>,
    pub gravity_vector: DVector<f64>,
    pub torque: DVector<f64>,
}
