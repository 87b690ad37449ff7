//! Galerkin assembly of `A = D + I0/2 + αN` and of the right-hand side
//! `∫ ψ (u_inc + α T u_inc)`.
//!
//! Everything is built from element-pair integrals: for a test element and a
//! trial element, the 2×2 local hat functions times the 2×2 displacement
//! components. A node-pair entry is the sum over the two elements supporting
//! each hat, always in the same order, so an entry has identical bits no
//! matter which block or dense matrix it is assembled into.
//!
//! Quadrature:
//! * coincident elements: the kernel depends only on `ρ = u - v`; the
//!   `ρ`-integral uses a graded Gauss rule (`ρ = s^q`) and pairs `±ρ`, which
//!   realises the Cauchy principal value of the double-layer term;
//! * elements sharing a vertex: Duffy split at the vertex with a graded rule
//!   in the radial direction;
//! * everything else: tensor Gauss–Legendre with the order chosen from the
//!   distance/size ratio.
//!
//! Vectors and matrices use component-major order: for node list `J`,
//! index `c * |J| + s` holds component `c` of node `J[s]`.

use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, ClusterTree};
use crate::kernels::{gradient_from, Bundle, Kernel, KernelModel, Mat2};
use crate::medium::{ElasticMedium, IncidentWave};
use crate::quadrature::{gauss_legendre, Rule};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ZERO2: Mat2 = [[ZERO; 2]; 2];

/// Quadrature controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Graded points along `ρ` for coincident elements.
    pub coincident_points: usize,
    /// Graded points along the radial Duffy direction for adjacent elements.
    pub adjacent_radial_points: usize,
    /// Gauss points along the angular Duffy direction for adjacent elements.
    pub adjacent_angular_points: usize,
    /// Extra points added to every regular-pair order.
    pub regular_extra: usize,
    /// Gauss points per element for right-hand sides.
    pub rhs_points: usize,
    /// Upper bound on the Gauss order of proxy-surface interactions.
    pub proxy_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { coincident_points: 32, adjacent_radial_points: 24, adjacent_angular_points: 16, regular_extra: 0, rhs_points: 6, proxy_points: 4 }
    }
}

impl QuadratureConfig {
    /// Halves the singular-pair refinement (used for self-convergence checks).
    pub fn coarsened(&self) -> Self {
        Self {
            coincident_points: self.coincident_points / 2,
            adjacent_radial_points: self.adjacent_radial_points / 2,
            adjacent_angular_points: self.adjacent_angular_points / 2,
            ..*self
        }
    }

    fn regular_order(&self, ratio: f64) -> usize {
        let base = if ratio < 3.0 {
            12
        } else if ratio < 7.0 {
            8
        } else if ratio < 16.0 {
            5
        } else if ratio < 40.0 {
            4
        } else {
            3
        };
        (base + self.regular_extra).min(64)
    }
}

/// A straight element with linear hats at both ends.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ElemGeom {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub n: [f64; 2],
    pub tau: [f64; 2],
    pub h: f64,
    pub sigma: f64,
}

impl ElemGeom {
    pub fn of(mesh: &BoundaryMesh, e: usize) -> Self {
        let (ia, ib) = mesh.element_nodes(e);
        Self {
            a: mesh.nodes[ia],
            b: mesh.nodes[ib],
            n: mesh.normals[e],
            tau: mesh.tangents[e],
            h: mesh.lengths[e],
            sigma: mesh.orientation[e],
        }
    }

    #[inline]
    fn point(&self, u: f64) -> [f64; 2] {
        [self.a[0] + u * (self.b[0] - self.a[0]), self.a[1] + u * (self.b[1] - self.a[1])]
    }

    fn mid(&self) -> [f64; 2] {
        self.point(0.5)
    }

    /// Arclength derivatives (along `τ`) of the two hats.
    fn dhat(&self) -> [f64; 2] {
        [-self.sigma / self.h, self.sigma / self.h]
    }
}

#[inline]
fn hats(u: f64) -> [f64; 2] {
    [1.0 - u, u]
}

/// `[test hat][trial hat]` of 2×2 component blocks.
pub(crate) type Local = [[Mat2; 2]; 2];

pub(crate) const LOCAL_ZERO: Local = [[ZERO2; 2]; 2];

/// Integrals of one element pair, split by operator.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairParts {
    pub d: Local,
    pub n: Local,
    /// `∫ ψ_a φ_b` (nonzero only for coincident elements).
    pub mass: [[f64; 2]; 2],
}

/// Linear combination `mass·I0 + d·D + n·N`.
#[derive(Clone, Copy, Debug)]
pub struct Coeffs {
    pub mass: f64,
    pub d: c64,
    pub n: c64,
}

impl Coeffs {
    /// Burton–Miller system matrix `D + I0/2 + αN`.
    pub fn system(alpha: c64) -> Self {
        Self { mass: 0.5, d: c64::new(1.0, 0.0), n: alpha }
    }

    pub fn d_only() -> Self {
        Self { mass: 0.0, d: c64::new(1.0, 0.0), n: ZERO }
    }

    pub fn n_only() -> Self {
        Self { mass: 0.0, d: ZERO, n: c64::new(1.0, 0.0) }
    }

    pub fn mass_only() -> Self {
        Self { mass: 1.0, d: ZERO, n: ZERO }
    }
}

impl PairParts {
    pub fn combine(&self, c: Coeffs) -> Local {
        let mut out = LOCAL_ZERO;
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = self.d[a][b][i][j] * c.d + self.n[a][b][i][j] * c.n;
                        if i == j && c.mass != 0.0 {
                            v += c64::new(c.mass * self.mass[a][b], 0.0);
                        }
                        out[a][b][i][j] = v;
                    }
                }
            }
        }
        out
    }
}

struct Acc {
    d00: Local,
    n00: Local,
    d01: [Mat2; 2],
    n01: [Mat2; 2],
    n10: [Mat2; 2],
    n11: Mat2,
}

impl Acc {
    fn new() -> Self {
        Self { d00: LOCAL_ZERO, n00: LOCAL_ZERO, d01: [ZERO2; 2], n01: [ZERO2; 2], n10: [ZERO2; 2], n11: ZERO2 }
    }

    #[inline]
    fn add(&mut self, w: f64, psi: [f64; 2], phi: [f64; 2], k: &Bundle) {
        for i in 0..2 {
            for j in 0..2 {
                let (d00, n00) = (k.d00[i][j], k.n00[i][j]);
                for a in 0..2 {
                    let wa = w * psi[a];
                    for b in 0..2 {
                        let wab = wa * phi[b];
                        self.d00[a][b][i][j] += d00 * wab;
                        self.n00[a][b][i][j] += n00 * wab;
                    }
                    self.d01[a][i][j] += k.d01[i][j] * wa;
                    self.n01[a][i][j] += k.n01[i][j] * wa;
                    self.n10[a][i][j] += k.n10[i][j] * (w * phi[a]);
                }
                self.n11[i][j] += k.n11[i][j] * w;
            }
        }
    }

    fn finish(self, dpsi: [f64; 2], dphi: [f64; 2], mass: [[f64; 2]; 2]) -> PairParts {
        let mut d = LOCAL_ZERO;
        let mut n = LOCAL_ZERO;
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        d[a][b][i][j] = self.d00[a][b][i][j] + self.d01[a][i][j] * dphi[b];
                        n[a][b][i][j] = self.n00[a][b][i][j]
                            + self.n01[a][i][j] * dphi[b]
                            + self.n10[b][i][j] * dpsi[a]
                            + self.n11[i][j] * (dpsi[a] * dphi[b]);
                    }
                }
            }
        }
        PairParts { d, n, mass }
    }
}

/// How two elements touch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Contact {
    Same,
    /// Shared vertex at local coordinate `ux` of the test element and `uy`
    /// of the trial element (each 0 or 1).
    Vertex { ux: f64, uy: f64 },
    Apart,
}

pub(crate) fn mesh_contact(n: usize, e: usize, f: usize) -> Contact {
    if e == f {
        Contact::Same
    } else if (e + 1) % n == f {
        Contact::Vertex { ux: 1.0, uy: 0.0 }
    } else if (f + 1) % n == e {
        Contact::Vertex { ux: 0.0, uy: 1.0 }
    } else {
        Contact::Apart
    }
}

/// Self-contained description of the discrete problem.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub mesh: &'a BoundaryMesh,
    pub kernel: Kernel,
    pub alpha: c64,
    pub quad: QuadratureConfig,
}

impl<'a> Problem<'a> {
    pub fn new(mesh: &'a BoundaryMesh, medium: &ElasticMedium, alpha: c64) -> Self {
        Self { mesh, kernel: Kernel::time_harmonic(medium), alpha, quad: QuadratureConfig::default() }
    }

    /// The standard (non-Burton–Miller) equation `(D + I0/2) u = u_inc`.
    pub fn without_hypersingular(mut self) -> Self {
        self.alpha = ZERO;
        self
    }

    pub fn with_model(mut self, model: KernelModel) -> Self {
        self.kernel = Kernel::new(self.kernel.medium, model);
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn medium(&self) -> &ElasticMedium {
        &self.kernel.medium
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.len()
    }

    pub fn system_coeffs(&self) -> Coeffs {
        Coeffs::system(self.alpha)
    }

    /// Integrals over a pair of mesh elements.
    pub(crate) fn mesh_pair(&self, e: usize, f: usize) -> PairParts {
        let contact = mesh_contact(self.mesh.len(), e, f);
        pair_parts(&self.kernel, &self.quad, &ElemGeom::of(self.mesh, e), &ElemGeom::of(self.mesh, f), contact)
    }

    /// `2|rows| × 2|cols|` block of `mass·I0 + d·D + n·N` between hat functions
    /// at the given mesh nodes.
    pub fn block(&self, rows: &[usize], cols: &[usize], c: Coeffs) -> Mat<c64> {
        self.block_lists([rows, rows], [cols, cols], c)
    }

    /// Block with separate node lists per component (see [`assemble_nodes`]).
    pub fn block_lists(&self, rows: [&[usize]; 2], cols: [&[usize]; 2], c: Coeffs) -> Mat<c64> {
        let [m] = assemble_nodes(
            rows,
            cols,
            |s| self.mesh.node_elements(s),
            |t| self.mesh.node_elements(t),
            |e, f| [self.mesh_pair(e, f).combine(c)],
        );
        m
    }

    /// The system block `A[rows, cols]`.
    pub fn system_block(&self, rows: &[usize], cols: &[usize]) -> Mat<c64> {
        self.block(rows, cols, self.system_coeffs())
    }
}

/// Element-pair integrals for any two straight elements.
pub(crate) fn pair_parts(kernel: &Kernel, quad: &QuadratureConfig, x: &ElemGeom, y: &ElemGeom, contact: Contact) -> PairParts {
    let mut acc = Acc::new();
    let jac = x.h * y.h;
    let mut mass = [[0.0; 2]; 2];
    match contact {
        Contact::Same => {
            let outer = Rule::graded(quad.coincident_points, 6);
            let inner = gauss_legendre(2);
            let step = [x.b[0] - x.a[0], x.b[1] - x.a[1]];
            for (rho, wr) in outer.iter() {
                let kp = kernel.eval([rho * step[0], rho * step[1]]);
                let km = kernel.eval([-rho * step[0], -rho * step[1]]);
                let bp = kernel.bundle(&kp, x.n, x.tau, y.n, y.tau);
                let bm = kernel.bundle(&km, x.n, x.tau, y.n, y.tau);
                for (t, wt) in inner.iter() {
                    let v = (1.0 - rho) * t;
                    let w = wr * wt * (1.0 - rho) * jac;
                    acc.add(w, hats(v + rho), hats(v), &bp);
                    acc.add(w, hats(v), hats(v + rho), &bm);
                }
            }
            let h = x.h;
            mass = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        }
        Contact::Vertex { ux, uy } => {
            let radial = Rule::graded(quad.adjacent_radial_points, 3);
            let angular = gauss_legendre(quad.adjacent_angular_points);
            // distance from the shared vertex along each element, in [0, 1]
            let map = |uv: f64, s: f64| if uv == 0.0 { s } else { 1.0 - s };
            for (rho, wr) in radial.iter() {
                for (w, ww) in angular.iter() {
                    let wt = wr * ww * rho * jac;
                    for (s, t) in [(rho, rho * w), (rho * w, rho)] {
                        let u = map(ux, s);
                        let v = map(uy, t);
                        let px = x.point(u);
                        let py = y.point(v);
                        let p = kernel.eval([px[0] - py[0], px[1] - py[1]]);
                        let bnd = kernel.bundle(&p, x.n, x.tau, y.n, y.tau);
                        acc.add(wt, hats(u), hats(v), &bnd);
                    }
                }
            }
        }
        Contact::Apart => apart_into(&mut acc, kernel, x, y, regular_order(quad, x, y)),
    }
    acc.finish(x.dhat(), y.dhat(), mass)
}

fn apart_into(acc: &mut Acc, kernel: &Kernel, x: &ElemGeom, y: &ElemGeom, order: usize) {
    let rule = gauss_legendre(order);
    let jac = x.h * y.h;
    for (u, wu) in rule.iter() {
        let px = x.point(u);
        for (v, wv) in rule.iter() {
            let py = y.point(v);
            let p = kernel.eval([px[0] - py[0], px[1] - py[1]]);
            let bnd = kernel.bundle(&p, x.n, x.tau, y.n, y.tau);
            acc.add(wu * wv * jac, hats(u), hats(v), &bnd);
        }
    }
}

/// Regularized parts between a boundary element and a proxy element. The
/// proxy only samples the far field, so its order is capped at
/// `proxy_points`.
pub(crate) fn proxy_pair_parts(kernel: &Kernel, quad: &QuadratureConfig, x: &ElemGeom, y: &ElemGeom) -> PairParts {
    let mut acc = Acc::new();
    apart_into(&mut acc, kernel, x, y, proxy_order(quad, x, y));
    acc.finish(x.dhat(), y.dhat(), [[0.0; 2]; 2])
}

fn proxy_order(quad: &QuadratureConfig, x: &ElemGeom, y: &ElemGeom) -> usize {
    regular_order(quad, x, y).min(quad.proxy_points.max(1))
}

fn regular_order(quad: &QuadratureConfig, x: &ElemGeom, y: &ElemGeom) -> usize {
    let (mx, my) = (x.mid(), y.mid());
    let dist = (mx[0] - my[0]).hypot(mx[1] - my[1]);
    quad.regular_order(dist / x.h.max(y.h))
}

/// Proxy-source columns for two well-separated elements, sharing one kernel
/// evaluation per point pair: the double-layer-type part `coeffs` of the
/// regularized forms, and the single-layer-type part
/// `∫∫ ψ_a φ_b [G + α T^{n_x} G]`.
pub(crate) fn proxy_source_pair(kernel: &Kernel, quad: &QuadratureConfig, coeffs: Coeffs, alpha: c64, x: &ElemGeom, y: &ElemGeom) -> [Local; 2] {
    let order = proxy_order(quad, x, y);
    let rule = gauss_legendre(order);
    let jac = x.h * y.h;
    let mut acc = Acc::new();
    let mut sl = LOCAL_ZERO;
    for (u, wu) in rule.iter() {
        let px = x.point(u);
        let psi = hats(u);
        for (v, wv) in rule.iter() {
            let py = y.point(v);
            let (p, rad) = kernel.eval_radial([px[0] - py[0], px[1] - py[1]]);
            let phi = hats(v);
            let w = wu * wv * jac;
            acc.add(w, psi, phi, &kernel.bundle(&p, x.n, x.tau, y.n, y.tau));
            let g = p.g();
            let k = kernel.adjoint_double_layer_from(&gradient_from(&p, rad), x.n);
            for i in 0..2 {
                for j in 0..2 {
                    let val = (g[i][j] + k[i][j] * alpha) * w;
                    for a in 0..2 {
                        for b in 0..2 {
                            sl[a][b][i][j] += val * (psi[a] * phi[b]);
                        }
                    }
                }
            }
        }
    }
    [acc.finish(x.dhat(), y.dhat(), [[0.0; 2]; 2]).combine(coeffs), sl]
}

/// Node-level assembly shared by every block builder.
///
/// `rows[c]` / `cols[c]` list the nodes whose component-`c` hat functions
/// form the rows / columns; the result has shape
/// `(|rows[0]| + |rows[1]|) × (|cols[0]| + |cols[1]|)` with component 0 first.
/// `row_elems(s)` / `col_elems(t)` give the two elements supporting a hat as
/// `[previous, next]`; the hat is local function 1 of the previous element and
/// local function 0 of the next. `pair(e, f)` returns `K` local blocks per
/// element pair.
pub(crate) fn assemble_nodes<const K: usize>(
    rows: [&[usize]; 2],
    cols: [&[usize]; 2],
    row_elems: impl Fn(usize) -> [usize; 2] + Sync,
    col_elems: impl Fn(usize) -> [usize; 2] + Sync,
    pair: impl Fn(usize, usize) -> [Local; K] + Sync,
) -> [Mat<c64>; K] {
    let (re, rpos) = unique_elements(rows, &row_elems);
    let (ce, cpos) = unique_elements(cols, &col_elems);
    let table: Vec<Vec<[Local; K]>> =
        re.par_iter().map(|&e| ce.iter().map(|&f| pair(e, f)).collect()).collect();

    let nr = rows[0].len() + rows[1].len();
    let nc = cols[0].len() + cols[1].len();
    let mut out: [Mat<c64>; K] = std::array::from_fn(|_| Mat::zeros(nr, nc));
    for i in 0..2 {
        let roff = if i == 0 { 0 } else { rows[0].len() };
        for j in 0..2 {
            let coff = if j == 0 { 0 } else { cols[0].len() };
            for (r, rp) in rpos[i].iter().enumerate() {
                for (c, cp) in cpos[j].iter().enumerate() {
                    for (k, m) in out.iter_mut().enumerate() {
                        let mut v = ZERO;
                        for (ei, la) in [(rp[0], 1), (rp[1], 0)] {
                            for (fi, lb) in [(cp[0], 1), (cp[1], 0)] {
                                v += table[ei][fi][k][la][lb][i][j];
                            }
                        }
                        m[(roff + r, coff + c)] = v;
                    }
                }
            }
        }
    }
    out
}

/// Sorted unique supporting elements and, per node of each list, the
/// positions of its two elements in that list.
fn unique_elements(lists: [&[usize]; 2], elems: &impl Fn(usize) -> [usize; 2]) -> (Vec<usize>, [Vec<[usize; 2]>; 2]) {
    let mut all: Vec<usize> = lists.iter().flat_map(|l| l.iter()).flat_map(|&s| elems(s)).collect();
    all.sort_unstable();
    all.dedup();
    let pos = lists.map(|l| {
        l.iter()
            .map(|&s| {
                let [a, b] = elems(s);
                [all.binary_search(&a).unwrap(), all.binary_search(&b).unwrap()]
            })
            .collect()
    });
    (all, pos)
}

/// Free function form of [`Problem::system_block`].
pub fn assemble_block(problem: &Problem, rows: &[usize], cols: &[usize]) -> Mat<c64> {
    problem.system_block(rows, cols)
}

/// A field that can drive the right-hand side.
pub trait IncidentField: Sync {
    fn displacement(&self, x: [f64; 2]) -> [c64; 2];
    fn traction(&self, x: [f64; 2], n: [f64; 2]) -> [c64; 2];
}

/// Plane wave bound to its medium.
#[derive(Clone, Copy, Debug)]
pub struct PlaneWaveField<'a> {
    pub wave: &'a IncidentWave,
    pub medium: &'a ElasticMedium,
}

impl IncidentField for PlaneWaveField<'_> {
    fn displacement(&self, x: [f64; 2]) -> [c64; 2] {
        self.wave.displacement(self.medium, x)
    }

    fn traction(&self, x: [f64; 2], n: [f64; 2]) -> [c64; 2] {
        self.wave.traction(self.medium, x, n)
    }
}

/// Spatially constant displacement (zero traction); a test hook for the
/// right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub [c64; 2]);

impl IncidentField for ConstantField {
    fn displacement(&self, _x: [f64; 2]) -> [c64; 2] {
        self.0
    }

    fn traction(&self, _x: [f64; 2], _n: [f64; 2]) -> [c64; 2] {
        [ZERO; 2]
    }
}

/// `∫ ψ_s (u_inc + α T u_inc)` for the nodes `rows`, component-major.
pub fn assemble_rhs_field(problem: &Problem, field: &dyn IncidentField, rows: &[usize]) -> Vec<c64> {
    let mesh = problem.mesh;
    let rule = gauss_legendre(problem.quad.rhs_points);
    let elem_integral = |e: usize| -> [[c64; 2]; 2] {
        let g = ElemGeom::of(mesh, e);
        let mut out = [[ZERO; 2]; 2];
        for (u, w) in rule.iter() {
            let x = g.point(u);
            let d = field.displacement(x);
            let t = if problem.alpha == ZERO { [ZERO; 2] } else { field.traction(x, g.n) };
            let psi = hats(u);
            for a in 0..2 {
                for i in 0..2 {
                    out[a][i] += (d[i] + t[i] * problem.alpha) * (w * g.h * psi[a]);
                }
            }
        }
        out
    };
    let n = rows.len();
    let mut f = vec![ZERO; 2 * n];
    for (r, &s) in rows.iter().enumerate() {
        let [prev, next] = mesh.node_elements(s);
        let (ip, inx) = (elem_integral(prev), elem_integral(next));
        for i in 0..2 {
            f[i * n + r] = ip[1][i] + inx[0][i];
        }
    }
    f
}

/// Right-hand side block for a plane wave.
pub fn assemble_rhs(problem: &Problem, wave: &IncidentWave, rows: &[usize]) -> Vec<c64> {
    assemble_rhs_field(problem, &PlaneWaveField { wave, medium: problem.medium() }, rows)
}

/// Global right-hand side in leaf order (leaf by leaf, component-major inside
/// each leaf).
pub fn assemble_rhs_leaf_order(problem: &Problem, tree: &ClusterTree, wave: &IncidentWave) -> Vec<c64> {
    let mut out = Vec::with_capacity(2 * tree.n_nodes);
    for leaf in tree.leaves() {
        out.extend(assemble_rhs(problem, wave, &tree.leaf_indices(leaf)));
    }
    out
}

/// Global DOF index of (node, component) in leaf order.
pub fn leaf_order_index(tree: &ClusterTree, node: usize, comp: usize) -> usize {
    let n = tree.leaf_size;
    let leaf_pos = node / n;
    leaf_pos * 2 * n + comp * n + node % n
}

/// Converts a leaf-ordered vector to nodal pairs `(u_1, u_2)`.
pub fn leaf_order_to_nodal(tree: &ClusterTree, x: &[c64]) -> Vec<[c64; 2]> {
    (0..tree.n_nodes).map(|t| [x[leaf_order_index(tree, t, 0)], x[leaf_order_index(tree, t, 1)]]).collect()
}

/// Inverse of [`leaf_order_to_nodal`].
pub fn nodal_to_leaf_order(tree: &ClusterTree, u: &[[c64; 2]]) -> Vec<c64> {
    let mut x = vec![ZERO; 2 * tree.n_nodes];
    for (t, v) in u.iter().enumerate() {
        x[leaf_order_index(tree, t, 0)] = v[0];
        x[leaf_order_index(tree, t, 1)] = v[1];
    }
    x
}

/// Component-major packing of nodal values.
pub fn pack(u: &[[c64; 2]]) -> Vec<c64> {
    let n = u.len();
    let mut x = vec![ZERO; 2 * n];
    for (s, v) in u.iter().enumerate() {
        x[s] = v[0];
        x[n + s] = v[1];
    }
    x
}

pub fn unpack(x: &[c64]) -> Vec<[c64; 2]> {
    let n = x.len() / 2;
    (0..n).map(|s| [x[s], x[n + s]]).collect()
}

/// Full system in leaf order.
pub struct DenseSystem {
    pub matrix: Mat<c64>,
    pub rhs: Vec<c64>,
}

/// Default memory budget for dense assembly (4 GiB).
pub const DEFAULT_DENSE_BUDGET: u64 = 4 << 30;

/// Bytes needed for the dense `2N × 2N` complex matrix.
pub fn dense_bytes(n_nodes: usize) -> u64 {
    let dim = 2 * n_nodes as u64;
    dim * dim * 16
}

/// Assembles the whole matrix in leaf order; block `(p, q)` equals
/// `assemble_block(J_p, J_q)` bit for bit.
pub fn assemble_dense_matrix(problem: &Problem, tree: &ClusterTree, budget: u64) -> Result<Mat<c64>> {
    let n = problem.n_nodes();
    if tree.n_nodes != n {
        return Err(Error::Dimension { expected: n, got: tree.n_nodes });
    }
    let needed = dense_bytes(n);
    if needed > budget {
        return Err(Error::MemoryBudget { needed, budget });
    }
    let mut a = Mat::<c64>::zeros(2 * n, 2 * n);
    let all: Vec<usize> = (0..n).collect();
    let chunk = 32usize.min(n);
    let coeffs = problem.system_coeffs();
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let rows: Vec<usize> = (start..end).collect();
        let blk = problem.block(&rows, &all, coeffs);
        let nr = rows.len();
        for (r, &s) in rows.iter().enumerate() {
            for i in 0..2 {
                let gi = leaf_order_index(tree, s, i);
                for t in 0..n {
                    for j in 0..2 {
                        a[(gi, leaf_order_index(tree, t, j))] = blk[(i * nr + r, j * n + t)];
                    }
                }
            }
        }
        start = end;
    }
    Ok(a)
}

/// Matrix and plane-wave right-hand side, both in leaf order.
pub fn assemble_dense(problem: &Problem, tree: &ClusterTree, wave: &IncidentWave, budget: u64) -> Result<DenseSystem> {
    Ok(DenseSystem { matrix: assemble_dense_matrix(problem, tree, budget)?, rhs: assemble_rhs_leaf_order(problem, tree, wave) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StarCurve;
    use proptest::prelude::*;

    fn star(n: usize) -> BoundaryMesh {
        BoundaryMesh::star(&StarCurve::default(), n).unwrap()
    }

    fn medium() -> ElasticMedium {
        ElasticMedium::reference(2.0).unwrap()
    }

    fn frob(m: &Mat<c64>) -> f64 {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s += m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    fn matvec(m: &Mat<c64>, x: &[c64]) -> Vec<c64> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
    }

    #[test]
    fn mass_matrix_rows_sum_to_element_length() {
        let mesh = BoundaryMesh::circle(1.0, 64).unwrap();
        let h = mesh.lengths[0];
        let p = Problem::new(&mesh, &medium(), ZERO);
        let all: Vec<usize> = (0..64).collect();
        let m = p.block(&all, &all, Coeffs::mass_only());
        for r in 0..128 {
            let s: c64 = (0..128).map(|c| m[(r, c)]).sum();
            assert!((s.re - h).abs() < 1e-14 && s.im == 0.0);
            for c in 0..128 {
                assert!((m[(r, c)] - m[(c, r)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_matrix_is_positive_definite() {
        // Symmetric tridiagonal-circulant with diagonal 2h/3 and off-diagonals
        // h/6 dominates strictly, so Gershgorin bounds the spectrum below by h/3.
        for n in [16, 64, 400] {
            let mesh = star(n);
            let p = Problem::new(&mesh, &medium(), ZERO);
            let all: Vec<usize> = (0..n).collect();
            let m = p.block(&all, &all, Coeffs::mass_only());
            for r in 0..2 * n {
                let off: f64 = (0..2 * n).filter(|&c| c != r).map(|c| m[(r, c)].norm()).sum();
                assert!(m[(r, r)].re - off > 0.0);
            }
        }
    }

    #[test]
    fn alpha_zero_drops_the_hypersingular_part() {
        let mesh = star(64);
        let m = medium();
        let rows: Vec<usize> = (0..10).collect();
        let cols: Vec<usize> = (5..30).collect();
        let p = Problem::new(&mesh, &m, ZERO);
        let a = p.system_block(&rows, &cols);
        let d = p.block(&rows, &cols, Coeffs::d_only());
        let i0 = p.block(&rows, &cols, Coeffs::mass_only());
        for r in 0..20 {
            for c in 0..50 {
                assert!((a[(r, c)] - (d[(r, c)] + i0[(r, c)] * 0.5)).norm() <= 1e-15 * a[(r, c)].norm().max(1e-300));
            }
        }
    }

    /// `(D + σ I0/2)` applied to constant nodal displacement, static kernel.
    #[test]
    fn static_double_layer_jump_on_constants() {
        let mut sign = 0.0;
        for (mesh, n) in [(BoundaryMesh::circle(1.0, 64).unwrap(), 64), (star(64), 64), (star(256), 256)] {
            let p = Problem::new(&mesh, &medium(), ZERO).with_model(KernelModel::Static);
            let all: Vec<usize> = (0..n).collect();
            let d = p.block(&all, &all, Coeffs::d_only());
            let i0 = p.block(&all, &all, Coeffs::mass_only());
            for comp in 0..2 {
                let mut x = vec![ZERO; 2 * n];
                for s in 0..n {
                    x[comp * n + s] = c64::new(1.0, 0.0);
                }
                let dx = matvec(&d, &x);
                let ix = matvec(&i0, &x);
                if sign == 0.0 {
                    // fix the orientation sign once, on the circle
                    let num: f64 = dx.iter().zip(&ix).map(|(a, b)| (a * b.conj()).re).sum();
                    sign = if num < 0.0 { 1.0 } else { -1.0 };
                }
                let h = mesh.max_length();
                let res = dx.iter().zip(&ix).map(|(a, b)| (a + b * (0.5 * sign)).norm()).fold(0.0, f64::max);
                assert!(res <= 1e-8 * h, "residual {res:e} vs h {h}");
            }
        }
        assert_eq!(sign, -1.0);
    }

    fn rigid_fields(mesh: &BoundaryMesh) -> Vec<Vec<c64>> {
        let n = mesh.len();
        let mut out = Vec::new();
        for comp in 0..2 {
            let mut x = vec![ZERO; 2 * n];
            for s in 0..n {
                x[comp * n + s] = c64::new(1.0, 0.0);
            }
            out.push(x);
        }
        let mut rot = vec![ZERO; 2 * n];
        for s in 0..n {
            rot[s] = c64::new(-mesh.nodes[s][1], 0.0);
            rot[n + s] = c64::new(mesh.nodes[s][0], 0.0);
        }
        out.push(rot);
        out
    }

    #[test]
    fn static_hypersingular_annihilates_rigid_motions() {
        let mesh = star(64);
        let p = Problem::new(&mesh, &medium(), ZERO).with_model(KernelModel::Static);
        let all: Vec<usize> = (0..64).collect();
        let nmat = p.block(&all, &all, Coeffs::n_only());
        let norm = frob(&nmat);
        for x in rigid_fields(&mesh) {
            let y = matvec(&nmat, &x);
            let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let yn = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(yn <= 1e-10 * norm * xn, "{:e}", yn / (norm * xn));
        }
    }

    #[test]
    fn static_hypersingular_is_symmetric() {
        let mesh = star(64);
        let p = Problem::new(&mesh, &medium(), ZERO).with_model(KernelModel::Static);
        let all: Vec<usize> = (0..64).collect();
        let nmat = p.block(&all, &all, Coeffs::n_only());
        let norm = frob(&nmat);
        for r in 0..128 {
            for c in 0..128 {
                assert!((nmat[(r, c)] - nmat[(c, r)]).norm() <= 1e-10 * norm);
            }
        }
    }

    #[test]
    fn time_harmonic_operators_are_galerkin_symmetric() {
        // N is symmetric for ψ = φ; D is not, but D + its adjoint form is not
        // needed here.
        let mesh = star(64);
        let p = Problem::new(&mesh, &medium(), ZERO);
        let all: Vec<usize> = (0..64).collect();
        let nmat = p.block(&all, &all, Coeffs::n_only());
        let norm = frob(&nmat);
        for r in 0..128 {
            for c in 0..128 {
                assert!((nmat[(r, c)] - nmat[(c, r)]).norm() <= 1e-10 * norm);
            }
        }
    }

    /// Regularized D versus direct quadrature of the traction-applied kernel on
    /// hats with disjoint supports.
    #[test]
    fn regularized_double_layer_matches_raw_kernel() {
        let mesh = star(64);
        let m = medium();
        let p = Problem::new(&mesh, &m, ZERO);
        let k = Kernel::time_harmonic(&m);
        let rule = gauss_legendre(16);
        for &(s, t) in &[(0usize, 10usize), (5, 40), (20, 23), (63, 3)] {
            let d = p.block(&[s], &[t], Coeffs::d_only());
            let mut raw = ZERO2;
            for e in mesh.node_elements(s) {
                for f in mesh.node_elements(t) {
                    let (x, y) = (ElemGeom::of(&mesh, e), ElemGeom::of(&mesh, f));
                    let la = if e == s { 0 } else { 1 };
                    let lb = if f == t { 0 } else { 1 };
                    for (u, wu) in rule.iter() {
                        for (v, wv) in rule.iter() {
                            let h = k.double_layer(x.point(u), y.point(v), y.n).unwrap();
                            let w = wu * wv * x.h * y.h * hats(u)[la] * hats(v)[lb];
                            for i in 0..2 {
                                for j in 0..2 {
                                    raw[i][j] += h[i][j] * w;
                                }
                            }
                        }
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    let err = (d[(i, j)] - raw[i][j]).norm();
                    assert!(err <= 1e-10 * raw[i][j].norm().max(1e-6), "({s},{t}) [{i}{j}] {err:e}");
                }
            }
        }
    }

    /// Regularized N versus finite differences of the double-layer field in the
    /// test-normal direction, for hats with disjoint supports.
    #[test]
    fn regularized_hypersingular_matches_traction_of_double_layer() {
        let mesh = star(64);
        let m = medium();
        let p = Problem::new(&mesh, &m, ZERO);
        let k = Kernel::time_harmonic(&m);
        let rule = gauss_legendre(12);
        let fd = 1e-4;
        for &(s, t) in &[(0usize, 12usize), (30, 50)] {
            let nm = p.block(&[s], &[t], Coeffs::n_only());
            let mut raw = ZERO2;
            for e in mesh.node_elements(s) {
                let x = ElemGeom::of(&mesh, e);
                let la = if e == s { 0 } else { 1 };
                for (u, wu) in rule.iter() {
                    let px = x.point(u);
                    // field w_i^{(j)}(z) = ∫ φ_t H_ij(z, y) for each density component j
                    let field = |z: [f64; 2]| {
                        let mut w = ZERO2;
                        for f in mesh.node_elements(t) {
                            let y = ElemGeom::of(&mesh, f);
                            let lb = if f == t { 0 } else { 1 };
                            for (v, wv) in rule.iter() {
                                let h = k.double_layer(z, y.point(v), y.n).unwrap();
                                for i in 0..2 {
                                    for j in 0..2 {
                                        w[i][j] += h[i][j] * (wv * y.h * hats(v)[lb]);
                                    }
                                }
                            }
                        }
                        w
                    };
                    for j in 0..2 {
                        let mut grad = [[ZERO; 2]; 2];
                        for q in 0..2 {
                            let mut zp = px;
                            let mut zm = px;
                            zp[q] += fd;
                            zm[q] -= fd;
                            let (wp, wm) = (field(zp), field(zm));
                            for c in 0..2 {
                                grad[c][q] = (wp[c][j] - wm[c][j]) / (2.0 * fd);
                            }
                        }
                        let tr = m.traction(&grad, x.n);
                        for i in 0..2 {
                            raw[i][j] += tr[i] * (wu * x.h * hats(u)[la]);
                        }
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    let err = (nm[(i, j)] - raw[i][j]).norm();
                    assert!(err <= 1e-6 * raw[i][j].norm().max(1e-3), "({s},{t}) [{i}{j}] {err:e} {} {}", nm[(i, j)], raw[i][j]);
                }
            }
        }
    }

    #[test]
    fn singular_quadrature_self_converges() {
        let mesh = star(400);
        let m = medium();
        let p = Problem::new(&mesh, &m, m.default_alpha());
        let coarse = p.with_quadrature(p.quad.coarsened());
        for e in [0usize, 17, 133] {
            for f in [e, e + 1] {
                let a = p.mesh_pair(e, f).combine(p.system_coeffs());
                let b = coarse.mesh_pair(e, f).combine(p.system_coeffs());
                let scale = a.iter().flatten().flatten().flatten().map(|z| z.norm()).fold(0.0, f64::max);
                for (x, y) in a.iter().flatten().flatten().flatten().zip(b.iter().flatten().flatten().flatten()) {
                    assert!((x - y).norm() <= 1e-8 * scale, "pair ({e},{f}): {:e}", (x - y).norm() / scale);
                }
            }
        }
    }

    #[test]
    fn rhs_with_constant_field_is_mass_action() {
        let mesh = star(64);
        let p = Problem::new(&mesh, &medium(), ZERO);
        let c = [c64::new(0.3, 1.0), c64::new(-2.0, 0.5)];
        let all: Vec<usize> = (0..64).collect();
        let f = assemble_rhs_field(&p, &ConstantField(c), &all);
        let i0 = p.block(&all, &all, Coeffs::mass_only());
        let mut x = vec![ZERO; 128];
        for s in 0..64 {
            x[s] = c[0];
            x[64 + s] = c[1];
        }
        let ix = matvec(&i0, &x);
        for (a, b) in f.iter().zip(&ix) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rhs_quadrature_converges() {
        let mesh = star(400);
        let m = medium();
        let p = Problem::new(&mesh, &m, m.default_alpha());
        let mut q = p.quad;
        q.rhs_points += 4;
        let finer = p.with_quadrature(q);
        let w = IncidentWave::along_angle(0.4);
        let all: Vec<usize> = (0..400).collect();
        let f1 = assemble_rhs(&p, &w, &all);
        let f2 = assemble_rhs(&finer, &w, &all);
        let num: f64 = f1.iter().zip(&f2).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = f2.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(num <= 1e-10 * den);
    }

    #[test]
    fn dense_blocks_equal_direct_blocks() {
        let mesh = star(400);
        let m = medium();
        let p = Problem::new(&mesh, &m, m.default_alpha());
        let tree = ClusterTree::new(400, 2).unwrap();
        let a = assemble_dense_matrix(&p, &tree, DEFAULT_DENSE_BUDGET).unwrap();
        assert_eq!((a.nrows(), a.ncols()), (800, 800));
        for (pi, leaf_p) in tree.leaves().enumerate() {
            for (qi, leaf_q) in tree.leaves().enumerate() {
                let blk = p.system_block(&tree.leaf_indices(leaf_p), &tree.leaf_indices(leaf_q));
                for r in 0..200 {
                    for c in 0..200 {
                        assert_eq!(blk[(r, c)], a[(pi * 200 + r, qi * 200 + c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn dense_budget_is_enforced() {
        let mesh = star(400);
        let m = medium();
        let p = Problem::new(&mesh, &m, m.default_alpha());
        let tree = ClusterTree::new(400, 2).unwrap();
        assert!(matches!(assemble_dense_matrix(&p, &tree, 1000), Err(Error::MemoryBudget { .. })));
    }

    proptest! {
        #[test]
        fn rhs_is_linear_in_amplitude(ang in 0.0..6.3f64, re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let mesh = star(64);
            let m = medium();
            let p = Problem::new(&mesh, &m, m.default_alpha());
            let rows: Vec<usize> = (10..30).collect();
            let w = IncidentWave::along_angle(ang);
            let s = c64::new(re, im);
            let f1 = assemble_rhs(&p, &w, &rows);
            let f2 = assemble_rhs(&p, &w.scaled(s), &rows);
            for (a, b) in f1.iter().zip(&f2) {
                prop_assert!((a * s - b).norm() <= 1e-14 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn pack_round_trip(vals in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..50)) {
            let u: Vec<[c64; 2]> = vals.iter().map(|&(a, b, c, d)| [c64::new(a, b), c64::new(c, d)]).collect();
            prop_assert_eq!(unpack(&pack(&u)), u.clone());
            let tree = ClusterTree::new(u.len(), 0).unwrap();
            prop_assert_eq!(leaf_order_to_nodal(&tree, &nodal_to_leaf_order(&tree, &u)), u);
        }
    }
}
