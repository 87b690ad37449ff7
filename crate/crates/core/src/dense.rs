//! Conventional dense solver: assemble the full matrix, factor it by LU with
//! partial pivoting, and reuse the factors for any number of right-hand
//! sides.

use crate::assembly::{assemble_dense_matrix, assemble_rhs_leaf_order, Problem};
use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::ClusterTree;
use crate::linalg::{column, to_vec, Lu};
use crate::medium::IncidentWave;
use faer::{Mat, MatRef, Par};

/// Condition estimates above this trigger a warning in the non-Burton–Miller
/// path.
pub const CONDITION_WARNING: f64 = 1e6;

/// LU factors of a dense system.
pub struct DenseFactorization {
    lu: Lu,
    par: Par,
}

impl DenseFactorization {
    /// Factors `matrix` (consumed; the factors reuse its storage).
    pub fn factor(matrix: Mat<c64>, par: Par) -> Result<Self> {
        Ok(Self { lu: Lu::factor(matrix, par)?, par })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, rhs: &[c64]) -> Result<Vec<c64>> {
        if rhs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: rhs.len() });
        }
        let mut x = column(rhs);
        self.lu.solve_in_place(x.as_mut(), self.par);
        Ok(to_vec(x.as_ref()))
    }

    pub fn solve_many(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        if rhs.nrows() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: rhs.nrows() });
        }
        Ok(self.lu.solve(rhs, self.par))
    }

    /// 1-norm condition estimate.
    pub fn condition_estimate(&self) -> f64 {
        self.lu.condition_estimate()
    }

    pub fn min_pivot(&self) -> f64 {
        self.lu.min_pivot()
    }
}

/// Assembles and factors the system of `problem` in leaf order.
pub fn conv_factor(problem: &Problem, tree: &ClusterTree, budget: u64) -> Result<DenseFactorization> {
    let a = assemble_dense_matrix(problem, tree, budget)?;
    DenseFactorization::factor(a, Par::rayon(0))
}

/// Dense solve for each incident wave; the factorization is shared.
pub fn conv_solve(problem: &Problem, tree: &ClusterTree, waves: &[IncidentWave], budget: u64) -> Result<Vec<Vec<c64>>> {
    let f = conv_factor(problem, tree, budget)?;
    waves.iter().map(|w| f.solve(&assemble_rhs_leaf_order(problem, tree, w))).collect()
}

/// Solution of the standard equation `(D + I/2) u = u_inc`.
pub struct NonBmSolution {
    pub x: Vec<c64>,
    pub condition_estimate: f64,
    /// Set when the estimate exceeds [`CONDITION_WARNING`].
    pub ill_conditioned: bool,
}

/// Dense solve without the hypersingular term (`α = 0`, right-hand side
/// without traction). Near fictitious eigenfrequencies the result is still
/// returned, flagged by the condition estimate.
pub fn conv_solve_non_bm(problem: &Problem, tree: &ClusterTree, wave: &IncidentWave, budget: u64) -> Result<NonBmSolution> {
    let p = problem.without_hypersingular();
    let f = conv_factor(&p, tree, budget)?;
    let x = f.solve(&assemble_rhs_leaf_order(&p, tree, wave))?;
    let condition_estimate = f.condition_estimate();
    let ill_conditioned = condition_estimate > CONDITION_WARNING;
    if ill_conditioned {
        log::warn!("non-Burton-Miller system is ill-conditioned (estimate {condition_estimate:.3e}) at omega = {}", p.medium().omega);
    }
    Ok(NonBmSolution { x, condition_estimate, ill_conditioned })
}
