//! Proxy surfaces and interpolative decompositions that produce the per-cell
//! bases `U_i = U_i¹ ⊕ U_i²`, `V_i = V_i¹ ⊕ V_i²` and skeleton node lists.
//!
//! Column bases (`V`) compress the interactions *from* the cell to the rest
//! of the boundary; they are sampled by Galerkin test functionals on a proxy
//! circle (displacement and traction parts separately) plus the true matrix
//! rows of other cells' active nodes inside the circle. Row bases (`U`)
//! compress the interactions *into* the cell; they are sampled by
//! double-layer and single-layer sources on the proxy circle plus the true
//! matrix columns of enclosed nodes, and the ID is taken of the conjugate
//! transpose.

use crate::assembly::{assemble_nodes, proxy_pair_parts, proxy_source_pair, Coeffs, ElemGeom, Problem};
use crate::c64;
use crate::error::{param, Error, Result};
use crate::geometry::BoundaryMesh;
use crate::geometry::ClusterTree;
use crate::linalg::{frobenius, mul, Cpqr};
use faer::{Mat, MatRef, Par};
use serde::{Deserialize, Serialize};

/// Proxy circle parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyConfig {
    /// Circle radius over the half-diagonal of the cell's bounding box.
    pub radius_factor: f64,
    /// Number of proxy nodes (and elements).
    pub m_prime: usize,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self { radius_factor: 1.5, m_prime: 64 }
    }
}

impl ProxyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_factor > 1.0) {
            return param(format!("proxy radius factor must exceed 1, got {}", self.radius_factor));
        }
        if self.m_prime < 8 {
            return param(format!("proxy needs at least 8 nodes, got {}", self.m_prime));
        }
        Ok(())
    }
}

/// How the far interactions of a cell are sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// Proxy circle plus enclosed nodes; `O(1)` work per cell.
    Proxy(ProxyConfig),
    /// Every other active node, exactly; `O(N)` work per cell. Used as an
    /// oracle and for operators without geometry.
    Exact,
}

/// Active nodes of a cell per component: rows of the (reduced) equation and
/// columns (unknowns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveLists {
    pub rows: [Vec<usize>; 2],
    pub cols: [Vec<usize>; 2],
}

impl ActiveLists {
    pub fn leaf(nodes: Vec<usize>) -> Self {
        Self { rows: [nodes.clone(), nodes.clone()], cols: [nodes.clone(), nodes] }
    }

    pub fn row_refs(&self) -> [&[usize]; 2] {
        [&self.rows[0], &self.rows[1]]
    }

    pub fn col_refs(&self) -> [&[usize]; 2] {
        [&self.cols[0], &self.cols[1]]
    }

    /// Per-component list length (all four lists have this length).
    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Matrix entries by node lists, plus the proxy interactions when geometry is
/// available.
pub trait Operator: Sync {
    fn n_nodes(&self) -> usize;

    /// `A[rows, cols]` for per-component node lists, component 0 first.
    fn block(&self, rows: [&[usize]; 2], cols: [&[usize]; 2]) -> Mat<c64>;

    fn mesh(&self) -> Option<&BoundaryMesh> {
        None
    }

    /// Proxy test functionals against `cols`: `4m′ × (|cols[0]| + |cols[1]|)`,
    /// displacement-type rows first, then traction-type rows.
    fn proxy_test_rows(&self, _proxy: &BoundaryMesh, _cols: [&[usize]; 2]) -> Option<Mat<c64>> {
        None
    }

    /// `rows` tested against proxy sources: `(|rows[0]| + |rows[1]|) × 4m′`,
    /// double-layer-type columns first, then single-layer-type columns.
    fn proxy_trial_cols(&self, _rows: [&[usize]; 2], _proxy: &BoundaryMesh) -> Option<Mat<c64>> {
        None
    }
}

impl Operator for Problem<'_> {
    fn n_nodes(&self) -> usize {
        self.mesh.len()
    }

    fn block(&self, rows: [&[usize]; 2], cols: [&[usize]; 2]) -> Mat<c64> {
        self.block_lists(rows, cols, self.system_coeffs())
    }

    fn mesh(&self) -> Option<&BoundaryMesh> {
        Some(self.mesh)
    }

    fn proxy_test_rows(&self, proxy: &BoundaryMesh, cols: [&[usize]; 2]) -> Option<Mat<c64>> {
        let all: Vec<usize> = (0..proxy.len()).collect();
        let [d, n] = assemble_nodes(
            [&all, &all],
            cols,
            |s| proxy.node_elements(s),
            |t| self.mesh.node_elements(t),
            |e, f| {
                let p = proxy_pair_parts(&self.kernel, &self.quad, &ElemGeom::of(proxy, e), &ElemGeom::of(self.mesh, f));
                [p.combine(Coeffs::d_only()), p.combine(Coeffs::n_only())]
            },
        );
        Some(stack_rows(&d, &n))
    }

    fn proxy_trial_cols(&self, rows: [&[usize]; 2], proxy: &BoundaryMesh) -> Option<Mat<c64>> {
        let all: Vec<usize> = (0..proxy.len()).collect();
        let coeffs = Coeffs { mass: 0.0, ..self.system_coeffs() };
        let [dl, sl] = assemble_nodes(
            rows,
            [&all, &all],
            |s| self.mesh.node_elements(s),
            |t| proxy.node_elements(t),
            |e, f| proxy_source_pair(&self.kernel, &self.quad, coeffs, self.alpha, &ElemGeom::of(self.mesh, e), &ElemGeom::of(proxy, f)),
        );
        Some(stack_cols(&dl, &sl))
    }
}

/// Dense matrix viewed as an operator on `n` nodes with component-major
/// global numbering (`c * n + s`); proxy sampling is unavailable.
pub struct DenseOperator {
    pub matrix: Mat<c64>,
}

impl Operator for DenseOperator {
    fn n_nodes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    fn block(&self, rows: [&[usize]; 2], cols: [&[usize]; 2]) -> Mat<c64> {
        let n = self.n_nodes();
        let ridx: Vec<usize> = (0..2).flat_map(|c| rows[c].iter().map(move |&s| c * n + s)).collect();
        let cidx: Vec<usize> = (0..2).flat_map(|c| cols[c].iter().map(move |&t| c * n + t)).collect();
        Mat::from_fn(ridx.len(), cidx.len(), |i, j| self.matrix[(ridx[i], cidx[j])])
    }
}

fn stack_rows(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let ra = a.nrows();
    Mat::from_fn(ra + b.nrows(), a.ncols(), |i, j| if i < ra { a[(i, j)] } else { b[(i - ra, j)] })
}

fn stack_cols(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let ca = a.ncols();
    Mat::from_fn(a.nrows(), ca + b.ncols(), |i, j| if j < ca { a[(i, j)] } else { b[(i, j - ca)] })
}

/// Proxy circle around one cell.
#[derive(Clone, Debug)]
pub struct ProxySurface {
    pub center: [f64; 2],
    pub radius: f64,
    /// Closed `m′`-gon carrying the proxy hat functions.
    pub mesh: BoundaryMesh,
    /// Active row nodes of other cells inside the circle, per component.
    pub enclosed_rows: [Vec<usize>; 2],
    /// Active column nodes of other cells inside the circle, per component.
    pub enclosed_cols: [Vec<usize>; 2],
}

impl ProxySurface {
    /// `m′` plus the number of enclosed row entries.
    pub fn sample_count(&self) -> usize {
        self.mesh.len() + self.enclosed_rows[0].len() + self.enclosed_rows[1].len()
    }
}

/// Builds the proxy circle for a cell whose hat functions live on nodes
/// `span` (contiguous along the boundary). Nodes of `others` are enclosed
/// when their hat support can reach inside the circle.
pub fn build_proxy(mesh: &BoundaryMesh, span: &[usize], others: &[&ActiveLists], cfg: &ProxyConfig) -> Result<ProxySurface> {
    cfg.validate()?;
    if span.is_empty() {
        return param("proxy for an empty cell");
    }
    let n = mesh.len();
    // bounding box of the hat supports: one node beyond each end of the span
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let first = span[0];
    let last = span[span.len() - 1];
    let support = span.iter().copied().chain([(first + n - 1) % n, (last + 1) % n]);
    for s in support {
        let p = mesh.nodes[s];
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let half_diag = 0.5 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let radius = cfg.radius_factor * half_diag;
    let m = cfg.m_prime;
    let nodes = (0..m)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect();
    let proxy = BoundaryMesh::from_nodes(nodes)?;

    let inside = |s: usize| {
        let [e0, e1] = mesh.node_elements(s);
        let reach = mesh.lengths[e0].max(mesh.lengths[e1]);
        let p = mesh.nodes[s];
        (p[0] - center[0]).hypot(p[1] - center[1]) < radius + reach
    };
    let pick = |lists: &dyn Fn(&ActiveLists) -> &Vec<usize>| -> Vec<usize> {
        let mut v: Vec<usize> = others.iter().flat_map(|o| lists(o).iter().copied()).filter(|&s| inside(s)).collect();
        v.sort_unstable();
        v
    };
    Ok(ProxySurface {
        center,
        radius,
        mesh: proxy,
        enclosed_rows: [pick(&|o| &o.rows[0]), pick(&|o| &o.rows[1])],
        enclosed_cols: [pick(&|o| &o.cols[0]), pick(&|o| &o.cols[1])],
    })
}

/// `M ≈ M[:, skeleton] · coeff`.
#[derive(Clone, Debug)]
pub struct InterpolativeDecomposition {
    /// Skeleton column positions in pivot order.
    pub skeleton: Vec<usize>,
    /// `k × n`, identity on the skeleton columns.
    pub coeff: Mat<c64>,
    pub rank: usize,
    pub epsilon: f64,
}

/// Column ID by pivoted QR; rank is the smallest `k` with
/// `|R_{k+1,k+1}| <= epsilon |R_11|`.
pub fn interpolative_decompose(m: MatRef<'_, c64>, epsilon: f64) -> Result<InterpolativeDecomposition> {
    if !(epsilon > 0.0) {
        return param(format!("ID tolerance must be positive, got {epsilon}"));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return param("ID of an empty matrix");
    }
    let mut q = Cpqr::new(m);
    let rank = q.advance_to_tolerance(epsilon);
    let (skeleton, coeff) = q.interpolation(rank);
    Ok(InterpolativeDecomposition { skeleton, coeff, rank, epsilon })
}

/// Compressed bases of one cell. `u[c]` is `n × k`, `v[c]` is `k × n`;
/// skeletons are positions into the cell's active lists.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub rank: usize,
    pub u: [Mat<c64>; 2],
    pub v: [Mat<c64>; 2],
    pub row_skeleton: [Vec<usize>; 2],
    pub col_skeleton: [Vec<usize>; 2],
    /// Ranks of the four IDs before padding to the shared rank.
    pub raw_ranks: [usize; 4],
}

impl CellBasis {
    /// Skeleton node lists of the parent-facing reduced system.
    pub fn skeleton_lists(&self, lists: &ActiveLists) -> ActiveLists {
        let sel = |l: &Vec<usize>, s: &Vec<usize>| s.iter().map(|&p| l[p]).collect::<Vec<usize>>();
        ActiveLists {
            rows: [sel(&lists.rows[0], &self.row_skeleton[0]), sel(&lists.rows[1], &self.row_skeleton[1])],
            cols: [sel(&lists.cols[0], &self.col_skeleton[0]), sel(&lists.cols[1], &self.col_skeleton[1])],
        }
    }

    /// Block-diagonal `U_i` as a dense `2n × 2k` matrix.
    pub fn u_full(&self) -> Mat<c64> {
        block_diag(&self.u[0], &self.u[1])
    }

    /// Block-diagonal `V_i` as a dense `2k × 2n` matrix.
    pub fn v_full(&self) -> Mat<c64> {
        block_diag(&self.v[0], &self.v[1])
    }
}

pub(crate) fn block_diag(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    Mat::from_fn(ra + b.nrows(), ca + b.ncols(), |i, j| {
        if i < ra && j < ca {
            a[(i, j)]
        } else if i >= ra && j >= ca {
            b[(i - ra, j - ca)]
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Scales every nonzero row to unit length so each sampled functional counts
/// equally in the ID.
fn normalize_rows(m: &mut Mat<c64>) {
    for i in 0..m.nrows() {
        let s: f64 = (0..m.ncols()).map(|j| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if s > 0.0 {
            for j in 0..m.ncols() {
                m[(i, j)] /= s;
            }
        }
    }
}

/// Column-sample matrix `S` (rows = samples, cols = the cell's active
/// columns, component 0 then 1) and row-sample matrix `Tᴴ` (rows = samples,
/// cols = the cell's active rows).
pub fn sample_matrices(
    op: &dyn Operator,
    lists: &ActiveLists,
    span: &[usize],
    others: &[&ActiveLists],
    sampling: &Sampling,
) -> Result<(Mat<c64>, Mat<c64>)> {
    let (mut col_samples, row_samples) = match sampling {
        Sampling::Exact => {
            let gather = |f: &dyn Fn(&ActiveLists) -> &Vec<usize>| -> Vec<usize> {
                let mut v: Vec<usize> = others.iter().flat_map(|o| f(o).iter().copied()).collect();
                v.sort_unstable();
                v
            };
            let orow = [gather(&|o| &o.rows[0]), gather(&|o| &o.rows[1])];
            let ocol = [gather(&|o| &o.cols[0]), gather(&|o| &o.cols[1])];
            let s = op.block([&orow[0], &orow[1]], lists.col_refs());
            let t = op.block(lists.row_refs(), [&ocol[0], &ocol[1]]);
            (s, t.adjoint().to_owned())
        }
        Sampling::Proxy(cfg) => {
            let mesh = op.mesh().ok_or_else(|| Error::Parameter("proxy sampling needs a boundary mesh".into()))?;
            let proxy = build_proxy(mesh, span, others, cfg)?;
            let er = [&proxy.enclosed_rows[0][..], &proxy.enclosed_rows[1][..]];
            let ec = [&proxy.enclosed_cols[0][..], &proxy.enclosed_cols[1][..]];
            let pr = op.proxy_test_rows(&proxy.mesh, lists.col_refs()).expect("operator with mesh provides proxy rows");
            let pc = op.proxy_trial_cols(lists.row_refs(), &proxy.mesh).expect("operator with mesh provides proxy columns");
            let s = stack_rows(&pr, &op.block(er, lists.col_refs()));
            let t = stack_cols(&pc, &op.block(lists.row_refs(), ec));
            (s, t.adjoint().to_owned())
        }
    };
    normalize_rows(&mut col_samples);
    let mut row_samples = row_samples;
    normalize_rows(&mut row_samples);
    Ok((col_samples, row_samples))
}

/// Runs the four IDs (rows/columns × components), pads them to a shared rank
/// and returns the cell basis.
pub fn compress_cell(
    op: &dyn Operator,
    lists: &ActiveLists,
    span: &[usize],
    others: &[&ActiveLists],
    sampling: &Sampling,
    epsilon: f64,
) -> Result<CellBasis> {
    if !(epsilon > 0.0) {
        return param(format!("compression tolerance must be positive, got {epsilon}"));
    }
    let n = lists.len();
    let (cs, rs) = sample_matrices(op, lists, span, others, sampling)?;
    let half = |m: &Mat<c64>, c: usize| -> Mat<c64> { m.as_ref().subcols(c * n, n).to_owned() };
    // order: V comp 0, V comp 1, U comp 0, U comp 1
    let mut qr: Vec<Cpqr> = [half(&cs, 0), half(&cs, 1), half(&rs, 0), half(&rs, 1)].iter().map(|m| Cpqr::new(m.as_ref())).collect();
    let mut raw = [0usize; 4];
    for (q, r) in qr.iter_mut().zip(raw.iter_mut()) {
        *r = q.advance_to_tolerance(epsilon);
    }
    let cap = qr.iter().map(|q| q.max_rank()).min().unwrap_or(0);
    let k = raw.iter().copied().max().unwrap_or(0).min(cap);
    if k >= n {
        log::warn!("cell with {n} nodes per component is not compressible (rank {k})");
    }
    let mut ids = Vec::with_capacity(4);
    for q in qr.iter_mut() {
        q.advance_to(k);
        ids.push(q.interpolation(k));
    }
    let (v0s, v0) = ids[0].clone();
    let (v1s, v1) = ids[1].clone();
    let (u0s, u0t) = ids[2].clone();
    let (u1s, u1t) = ids[3].clone();
    Ok(CellBasis {
        rank: k,
        u: [u0t.adjoint().to_owned(), u1t.adjoint().to_owned()],
        v: [v0, v1],
        row_skeleton: [u0s, u1s],
        col_skeleton: [v0s, v1s],
        raw_ranks: raw,
    })
}

/// `‖M − M[:, skel] coeff‖_F / ‖M‖_F`.
pub fn reconstruction_error(m: MatRef<'_, c64>, id: &InterpolativeDecomposition) -> f64 {
    let sub = Mat::from_fn(m.nrows(), id.rank, |i, j| m[(i, id.skeleton[j])]);
    let approx = crate::linalg::mul(sub.as_ref(), id.coeff.as_ref(), faer::Par::Seq);
    let diff = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - approx[(i, j)]);
    frobenius(diff.as_ref()) / frobenius(m).max(f64::MIN_POSITIVE)
}

/// Low-rank consistency of the leaf bases: `‖A_ij − U_i R_ij V_j‖_F /
/// ‖A_ij‖_F` for every ordered pair of distinct leaves, with `R_ij` the
/// skeleton block. Returns `(i, j, error)`.
pub fn leaf_low_rank_errors(op: &dyn Operator, tree: &ClusterTree, sampling: &Sampling, epsilon: f64) -> Result<Vec<(usize, usize, f64)>> {
    let lists: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
    let bases = (0..lists.len())
        .map(|i| {
            let others: Vec<&ActiveLists> = lists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l).collect();
            compress_cell(op, &lists[i], &lists[i].rows[0], &others, sampling, epsilon)
        })
        .collect::<Result<Vec<CellBasis>>>()?;
    let mut out = Vec::new();
    for i in 0..lists.len() {
        for j in (0..lists.len()).filter(|&j| j != i) {
            let a = op.block(lists[i].row_refs(), lists[j].col_refs());
            let (si, sj) = (bases[i].skeleton_lists(&lists[i]), bases[j].skeleton_lists(&lists[j]));
            let r = op.block(si.row_refs(), sj.col_refs());
            let approx = mul(mul(bases[i].u_full().as_ref(), r.as_ref(), Par::Seq).as_ref(), bases[j].v_full().as_ref(), Par::Seq);
            let diff = &a - &approx;
            out.push((i, j, frobenius(diff.as_ref()) / frobenius(a.as_ref())));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StarCurve;
    use crate::medium::ElasticMedium;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
        Mat::from_fn(rows, cols, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// `Q1 diag(s) Q2` with orthonormal factors from Gram–Schmidt.
    fn decaying(rows: usize, cols: usize, seed: u64) -> Mat<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orth = |m: Mat<c64>| {
            let mut q = m;
            for j in 0..q.ncols() {
                for l in 0..j {
                    let d: c64 = (0..q.nrows()).map(|i| q[(i, l)].conj() * q[(i, j)]).sum();
                    for i in 0..q.nrows() {
                        let v = q[(i, l)];
                        q[(i, j)] -= v * d;
                    }
                }
                let s: f64 = (0..q.nrows()).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
                for i in 0..q.nrows() {
                    q[(i, j)] /= s;
                }
            }
            q
        };
        let r = rows.min(cols);
        let q1 = orth(random(rows, r, &mut rng));
        let q2 = orth(random(cols, r, &mut rng));
        let s = Mat::from_fn(r, r, |i, j| if i == j { c64::new(10f64.powi(-(i as i32)), 0.0) } else { c64::new(0.0, 0.0) });
        mul(mul(q1.as_ref(), s.as_ref(), Par::Seq).as_ref(), q2.adjoint().to_owned().as_ref(), Par::Seq)
    }

    #[test]
    fn rank_one_matrix_has_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(20, 1, &mut rng);
        let b = random(1, 15, &mut rng);
        let m = mul(a.as_ref(), b.as_ref(), Par::Seq);
        let id = interpolative_decompose(m.as_ref(), 1e-10).unwrap();
        assert_eq!(id.rank, 1);
        assert!(reconstruction_error(m.as_ref(), &id) <= 1e-13);
    }

    #[test]
    fn zero_matrix_has_empty_skeleton() {
        let m = Mat::<c64>::zeros(5, 4);
        let id = interpolative_decompose(m.as_ref(), 1e-8).unwrap();
        assert_eq!(id.rank, 0);
        assert!(id.skeleton.is_empty());
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let m = Mat::<c64>::identity(3, 3);
        assert!(interpolative_decompose(m.as_ref(), 0.0).is_err());
    }

    #[test]
    fn decaying_spectrum_reconstruction() {
        let eps = 1e-8;
        for seed in 0..3 {
            let m = decaying(100, 60, seed);
            let id = interpolative_decompose(m.as_ref(), eps).unwrap();
            assert!(id.rank >= 7 && id.rank <= 10, "rank {}", id.rank);
            let err = reconstruction_error(m.as_ref(), &id);
            assert!(err <= 10.0 * eps, "{err:e}");
        }
    }

    #[test]
    fn coefficient_is_identity_on_skeleton() {
        let m = decaying(40, 30, 9);
        let id = interpolative_decompose(m.as_ref(), 1e-6).unwrap();
        for (r, &s) in id.skeleton.iter().enumerate() {
            for i in 0..id.rank {
                assert_eq!(id.coeff[(i, s)], c64::new(if i == r { 1.0 } else { 0.0 }, 0.0));
            }
        }
    }

    fn setup(n: usize, levels: usize) -> (BoundaryMesh, ElasticMedium, ClusterTree) {
        let mesh = BoundaryMesh::star(&StarCurve::default(), n).unwrap();
        (mesh, ElasticMedium::reference(2.0).unwrap(), ClusterTree::new(n, levels).unwrap())
    }

    #[test]
    fn proxy_geometry() {
        let (mesh, _, tree) = setup(400, 2);
        let lists: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
        for (i, leaf) in tree.leaves().enumerate() {
            let span = tree.leaf_indices(leaf);
            let others: Vec<&ActiveLists> = lists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l).collect();
            let p = build_proxy(&mesh, &span, &others, &ProxyConfig::default()).unwrap();
            assert_eq!(p.mesh.len(), 64);
            for s in span.iter() {
                let q = mesh.nodes[*s];
                assert!((q[0] - p.center[0]).hypot(q[1] - p.center[1]) < p.radius / 1.4);
                assert!(!p.enclosed_rows[0].contains(s));
            }
        }
        assert!(build_proxy(&mesh, &[0, 1], &[], &ProxyConfig { radius_factor: 1.0, m_prime: 64 }).is_err());
    }

    #[test]
    fn isolated_cell_encloses_nothing() {
        let (mesh, _, _) = setup(400, 2);
        let far = ActiveLists::leaf((200..210).collect());
        let p = build_proxy(&mesh, &[0, 1, 2, 3], &[&far], &ProxyConfig::default()).unwrap();
        assert!(p.enclosed_rows[0].is_empty() && p.enclosed_cols[1].is_empty());
    }

    #[test]
    fn low_rank_consistency_on_leaf_pairs() {
        let (mesh, medium, tree) = setup(400, 2);
        let problem = Problem::new(&mesh, &medium, medium.default_alpha());
        for eps in [1e-6, 1e-8, 1e-10] {
            for (i, j, err) in leaf_low_rank_errors(&problem, &tree, &Sampling::Proxy(ProxyConfig::default()), eps).unwrap() {
                assert!(err <= 100.0 * eps, "eps {eps:e} pair ({i},{j}) error {err:e}");
            }
        }
    }

    #[test]
    fn proxy_matches_exact_sampling() {
        let (mesh, medium, tree) = setup(400, 2);
        let problem = Problem::new(&mesh, &medium, medium.default_alpha());
        let eps = 1e-6;
        let exact = leaf_low_rank_errors(&problem, &tree, &Sampling::Exact, eps).unwrap();
        let proxy = leaf_low_rank_errors(&problem, &tree, &Sampling::Proxy(ProxyConfig::default()), eps).unwrap();
        let emax = exact.iter().map(|e| e.2).fold(0.0, f64::max);
        let pmax = proxy.iter().map(|e| e.2).fold(0.0, f64::max);
        assert!(pmax <= 100.0 * emax.max(eps * 1e-2), "proxy {pmax:e} exact {emax:e}");
    }

    #[test]
    fn bases_have_block_structure_and_identity_skeletons() {
        let (mesh, medium, tree) = setup(400, 2);
        let problem = Problem::new(&mesh, &medium, medium.default_alpha());
        let lists: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
        let others: Vec<&ActiveLists> = lists[1..].iter().collect();
        let b = compress_cell(&problem, &lists[0], &lists[0].rows[0], &others, &Sampling::Proxy(ProxyConfig::default()), 1e-8).unwrap();
        let k = b.rank;
        assert!(k > 0 && k < 100);
        let u = b.u_full();
        let v = b.v_full();
        assert_eq!((u.nrows(), u.ncols()), (200, 2 * k));
        assert_eq!((v.nrows(), v.ncols()), (2 * k, 200));
        for i in 0..100 {
            for j in 0..k {
                assert_eq!(u[(i, k + j)], c64::new(0.0, 0.0));
                assert_eq!(u[(100 + i, j)], c64::new(0.0, 0.0));
                assert_eq!(v[(j, 100 + i)], c64::new(0.0, 0.0));
                assert_eq!(v[(k + j, i)], c64::new(0.0, 0.0));
            }
        }
        for c in 0..2 {
            for (r, &p) in b.row_skeleton[c].iter().enumerate() {
                for j in 0..k {
                    assert_eq!(b.u[c][(p, j)], c64::new(if j == r { 1.0 } else { 0.0 }, 0.0));
                }
            }
            for (r, &p) in b.col_skeleton[c].iter().enumerate() {
                for j in 0..k {
                    assert_eq!(b.v[c][(j, p)], c64::new(if j == r { 1.0 } else { 0.0 }, 0.0));
                }
            }
        }
    }

    #[test]
    fn leaf_rank_does_not_grow_with_n() {
        let eps = 1e-8;
        let mut ranks = vec![];
        for (n, levels) in [(400, 2), (800, 3), (1600, 4)] {
            let (mesh, medium, tree) = setup(n, levels);
            let problem = Problem::new(&mesh, &medium, medium.default_alpha());
            let lists: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
            let mut kmax = 0;
            for i in 0..lists.len() {
                let others: Vec<&ActiveLists> = lists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l).collect();
                let b = compress_cell(&problem, &lists[i], &lists[i].rows[0], &others, &Sampling::Proxy(ProxyConfig::default()), eps).unwrap();
                kmax = kmax.max(b.rank);
            }
            ranks.push(kmax);
        }
        assert!(ranks[1] <= ranks[0] && ranks[2] <= ranks[1], "{ranks:?}");
    }
}
