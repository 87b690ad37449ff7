//! Field evaluation through the integral representation
//! `u(x) = u_inc(x) − ∫_Γ H(x, y) u(y) ds(y)`, null-field checks and the
//! frequency sweep of the wave intensity at a boundary node.

use crate::assembly::{leaf_order_to_nodal, Problem, DEFAULT_DENSE_BUDGET};
use crate::c64;
use crate::dense::{conv_solve, conv_solve_non_bm};
use crate::error::{Error, Result};
use crate::fds::{FdsConfig, FdsFactorization};
use crate::geometry::{segment_distance, BoundaryMesh, ClusterTree};
use crate::kernels::Kernel;
use crate::medium::{ElasticMedium, IncidentWave};
use crate::quadrature::gauss_legendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Displacement at a point off the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub location: [f64; 2],
    pub displacement: [c64; 2],
    /// `|u_1|² + |u_2|²`.
    pub intensity: f64,
}

impl FieldSample {
    pub fn new(location: [f64; 2], displacement: [c64; 2]) -> Self {
        Self { location, displacement, intensity: intensity(displacement) }
    }
}

pub fn intensity(u: [c64; 2]) -> f64 {
    u[0].norm_sqr() + u[1].norm_sqr()
}

/// `∫_Γ H(x, y) u_h(y) ds(y)` with `u_h` the piecewise-linear interpolant of
/// the nodal values.
fn double_layer_potential(kernel: &Kernel, mesh: &BoundaryMesh, u: &[[c64; 2]], x: [f64; 2]) -> [c64; 2] {
    let mut out = [ZERO; 2];
    for e in 0..mesh.len() {
        let (ia, ib) = mesh.element_nodes(e);
        let (a, b) = (mesh.nodes[ia], mesh.nodes[ib]);
        let h = mesh.lengths[e];
        let mid = mesh.midpoint(e);
        let ratio = (x[0] - mid[0]).hypot(x[1] - mid[1]) / h;
        let order = if ratio < 3.0 {
            20
        } else if ratio < 10.0 {
            10
        } else {
            6
        };
        for (t, w) in gauss_legendre(order).iter() {
            let y = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let k = kernel.double_layer_at([x[0] - y[0], x[1] - y[1]], mesh.normals[e]);
            let uy = [u[ia][0] * (1.0 - t) + u[ib][0] * t, u[ia][1] * (1.0 - t) + u[ib][1] * t];
            for i in 0..2 {
                out[i] += (k[i][0] * uy[0] + k[i][1] * uy[1]) * (w * h);
            }
        }
    }
    out
}

/// Total displacement at `points` from nodal boundary values `u`.
///
/// Points closer to the boundary than the longest element are rejected.
pub fn evaluate_field(mesh: &BoundaryMesh, medium: &ElasticMedium, wave: &IncidentWave, u: &[[c64; 2]], points: &[[f64; 2]]) -> Result<Vec<FieldSample>> {
    if u.len() != mesh.len() {
        return Err(Error::Dimension { expected: mesh.len(), got: u.len() });
    }
    let min = mesh.max_length();
    for &p in points {
        let dist = (0..mesh.len())
            .map(|e| {
                let (ia, ib) = mesh.element_nodes(e);
                segment_distance(p, mesh.nodes[ia], mesh.nodes[ib])
            })
            .fold(f64::INFINITY, f64::min);
        if dist <= min {
            return Err(Error::Proximity { x: p[0], y: p[1], dist, min });
        }
    }
    let kernel = Kernel::time_harmonic(medium);
    Ok(points
        .par_iter()
        .map(|&x| {
            let inc = wave.displacement(medium, x);
            let dl = double_layer_potential(&kernel, mesh, u, x);
            FieldSample::new(x, [inc[0] - dl[0], inc[1] - dl[1]])
        })
        .collect())
}

/// Scattered part `u − u_inc` at `points`.
pub fn scattered_field(mesh: &BoundaryMesh, medium: &ElasticMedium, u: &[[c64; 2]], points: &[[f64; 2]]) -> Result<Vec<[c64; 2]>> {
    let zero = IncidentWave { direction: [1.0, 0.0], amplitude: ZERO };
    Ok(evaluate_field(mesh, medium, &zero, u, points)?.into_iter().map(|s| s.displacement).collect())
}

/// `count` points on a circle.
pub fn circle_probes(center: [f64; 2], radius: f64, count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// Default interior probe set: 16 points on the circle of radius 0.3 about
/// the origin.
pub fn null_field_probes() -> Vec<[f64; 2]> {
    circle_probes([0.0, 0.0], 0.3, 16)
}

/// `max |u(x)| / max |u_inc(x)|` over interior probes, where the
/// representation must vanish.
pub fn null_field_residual(mesh: &BoundaryMesh, medium: &ElasticMedium, wave: &IncidentWave, u: &[[c64; 2]], probes: &[[f64; 2]]) -> Result<f64> {
    let samples = evaluate_field(mesh, medium, wave, u, probes)?;
    let num = samples.iter().map(|s| s.intensity.sqrt()).fold(0.0, f64::max);
    let den = probes.iter().map(|&x| intensity(wave.displacement(medium, x)).sqrt()).fold(0.0, f64::max);
    Ok(num / den)
}

/// Which solver produces the boundary values in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Fds(FdsConfig),
    Conv,
    ConvNonBm,
}

/// Solves one scattering problem and returns nodal values.
pub fn solve_nodal(problem: &Problem, tree: &ClusterTree, wave: &IncidentWave, solver: &SolverChoice) -> Result<Vec<[c64; 2]>> {
    let x = match solver {
        SolverChoice::Fds(cfg) => {
            let f = FdsFactorization::build(problem, tree, cfg)?;
            f.solve(&crate::assembly::assemble_rhs_leaf_order(problem, tree, wave))?
        }
        SolverChoice::Conv => conv_solve(problem, tree, std::slice::from_ref(wave), DEFAULT_DENSE_BUDGET)?.remove(0),
        SolverChoice::ConvNonBm => conv_solve_non_bm(problem, tree, wave, DEFAULT_DENSE_BUDGET)?.x,
    };
    Ok(leaf_order_to_nodal(tree, &x))
}

/// One sample of an intensity sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntensityPoint {
    pub omega: f64,
    pub intensity: f64,
}

/// Intensity `|u_1|² + |u_2|²` of the boundary solution at `node` for each
/// frequency. `alpha` of `None` uses `i / k_T` at every frequency.
pub fn intensity_sweep(
    mesh: &BoundaryMesh,
    base: &ElasticMedium,
    omegas: &[f64],
    wave: &IncidentWave,
    tree: &ClusterTree,
    solver: &SolverChoice,
    node: usize,
    alpha: Option<c64>,
) -> Result<Vec<IntensityPoint>> {
    omegas
        .iter()
        .map(|&omega| {
            let medium = base.with_omega(omega)?;
            let problem = Problem::new(mesh, &medium, alpha.unwrap_or_else(|| medium.default_alpha()));
            let u = solve_nodal(&problem, tree, wave, solver)?;
            Ok(IntensityPoint { omega, intensity: intensity(u[node]) })
        })
        .collect()
}

/// Largest relative change between consecutive samples.
pub fn max_adjacent_jump(points: &[IntensityPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].intensity - w[0].intensity).abs() / w[0].intensity.abs().max(w[1].intensity.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
