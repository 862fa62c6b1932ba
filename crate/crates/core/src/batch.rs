//! Batch evaluation over many independent states.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! pool; otherwise, or with [`Execution::Sequential`], it runs on the calling
//! thread. Output order always matches input order and every element is
//! computed independently, so results do not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dynamics::{self, PoeChain};
use crate::kinematics::{JointState, KinematicsError};
use crate::model::RobotModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Order-preserving map over `0..len`.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Stacked-operator matrix form.
    DhMatrix,
    /// O(n) recursive Newton-Euler over relative link transforms.
    DhRecursive,
    /// Product of exponentials.
    Poe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::DhMatrix, Method::DhRecursive, Method::Poe];

    pub fn name(&self) -> &'static str {
        match self {
            Method::DhMatrix => "dh-matrix",
            Method::DhRecursive => "dh-recursive",
            Method::Poe => "poe",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected dh-matrix, dh-recursive or poe)"))
    }
}

/// Joint torques for every state with the chosen formulation.
pub fn inverse_dynamics(
    model: &RobotModel,
    states: &[JointState],
    method: Method,
    exec: Execution,
) -> Result<Vec<DVector<f64>>, KinematicsError> {
    Ok(match method {
        Method::DhMatrix => map(exec, states, |s| dynamics::inverse_dynamics_matrix(model, s).torque),
        Method::DhRecursive => map(exec, states, |s| dynamics::inverse_dynamics_recursive(model, s)),
        Method::Poe => {
            let chain = PoeChain::new(model)?;
            map(exec, states, |s| dynamics::evaluate_poe(&chain, model, s).torque)
        }
    })
}
