//! Hierarchical fast direct solver.
//!
//! Upward, level by level from the leaves: compress every cell
//! (`U_i`, `V_i`, skeletons), factor its diagonal block `A_i`, and form
//! `Ã_i = (V_i A_i⁻¹ U_i)⁻¹`. Siblings are merged into a parent whose
//! diagonal block is `[[Ã_a, R_ab], [R_ba, Ã_b]]` with `R` freshly assembled
//! on skeleton nodes. At level `ℓ0` the reduced system is solved densely.
//! Downward, `x_i = A_i⁻¹ f_i + A_i⁻¹ U_i (Ã_i y_i − f̃_i)` recovers each
//! cell's unknowns from its skeleton values `y_i`.
//!
//! `A_i⁻¹` is never formed; only its LU factors are stored. Per-cell work
//! runs sequentially inside a task and tasks are distributed over cells, so
//! results do not depend on the number of worker threads.

use crate::c64;
use crate::compression::{compress_cell, ActiveLists, CellBasis, Operator, ProxyConfig, Sampling};
use crate::error::{param, Error, Result};
use crate::geometry::ClusterTree;
use crate::linalg::{mul, mul_add, Lu};
use faer::{Mat, MatRef, Par};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdsConfig {
    /// ID truncation tolerance.
    pub epsilon: f64,
    /// Level at which the reduced system is solved densely.
    pub ell0: usize,
    pub proxy: ProxyConfig,
    /// Sample every other active node exactly instead of using the proxy.
    pub exact_sampling: bool,
}

impl Default for FdsConfig {
    fn default() -> Self {
        Self { epsilon: 1e-8, ell0: 1, proxy: ProxyConfig::default(), exact_sampling: false }
    }
}

impl FdsConfig {
    pub fn sampling(&self) -> Sampling {
        if self.exact_sampling {
            Sampling::Exact
        } else {
            Sampling::Proxy(self.proxy)
        }
    }
}

/// Factor data of one compressed cell.
#[derive(Clone, Debug)]
pub struct CellFactor {
    pub cell: usize,
    pub level: usize,
    /// Active nodes at this level.
    pub lists: ActiveLists,
    /// Skeleton nodes handed to the parent.
    pub skeleton: ActiveLists,
    pub rank: usize,
    pub raw_ranks: [usize; 4],
    lu: Lu,
    ainv_u: Mat<c64>,
    a_tilde: Mat<c64>,
    v: [Mat<c64>; 2],
}

impl CellFactor {
    /// Per-component active count `n` (the cell has `2n` unknowns).
    pub fn size(&self) -> usize {
        self.lists.len()
    }

    pub fn a_tilde(&self) -> MatRef<'_, c64> {
        self.a_tilde.as_ref()
    }

    pub fn ainv_u(&self) -> MatRef<'_, c64> {
        self.ainv_u.as_ref()
    }

    /// Block-diagonal `V_i` as a dense matrix.
    pub fn v_full(&self) -> Mat<c64> {
        crate::compression::block_diag(&self.v[0], &self.v[1])
    }

    /// `V_i A_i⁻¹ U_i`, recomputed from the stored factors.
    pub fn reduced_inverse(&self) -> Mat<c64> {
        let n = self.size();
        let k = self.rank;
        let mut s = Mat::zeros(2 * k, 2 * k);
        for c in 0..2 {
            let blk = mul(self.v[c].as_ref(), self.ainv_u.as_ref().subrows(c * n, n), Par::Seq);
            s.as_mut().subrows_mut(c * k, k).copy_from(&blk);
        }
        s
    }

    fn bytes(&self) -> usize {
        let n = self.size();
        let k = self.rank;
        self.lu.bytes() + 16 * (2 * n * 2 * k + 4 * k * k + 2 * k * n)
    }

    /// `(z, f̃)` for a block of right-hand sides.
    fn upward(&self, f: &Mat<c64>) -> (Mat<c64>, Mat<c64>) {
        let n = self.size();
        let k = self.rank;
        let z = self.lu.solve(f.as_ref(), Par::Seq);
        let mut vz = Mat::zeros(2 * k, f.ncols());
        for c in 0..2 {
            let blk = mul(self.v[c].as_ref(), z.as_ref().subrows(c * n, n), Par::Seq);
            vz.as_mut().subrows_mut(c * k, k).copy_from(&blk);
        }
        let ft = mul(self.a_tilde.as_ref(), vz.as_ref(), Par::Seq);
        (z, ft)
    }

    fn downward(&self, z: &Mat<c64>, ft: &Mat<c64>, y: &Mat<c64>) -> Mat<c64> {
        let mut w = mul(self.a_tilde.as_ref(), y.as_ref(), Par::Seq);
        w -= ft;
        let mut x = z.clone();
        mul_add(x.as_mut(), self.ainv_u.as_ref(), w.as_ref(), ONE, Par::Seq);
        x
    }
}

/// Ranks observed at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRanks {
    pub level: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// Largest per-component active count among the level's cells.
    pub max_size: usize,
}

/// Timings (seconds) and sizes from the build.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BuildStats {
    pub assembly_seconds: f64,
    pub compression_seconds: f64,
    pub factorization_seconds: f64,
    pub top_seconds: f64,
    pub ranks: Vec<LevelRanks>,
    /// Dimension of the dense system at level `ℓ0`.
    pub top_dim: usize,
    /// Bytes held by the factorization.
    pub bytes: usize,
}

/// Wall time of the three sweeps of one solve, in seconds.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SolveTimes {
    pub upward: f64,
    pub top: f64,
    pub downward: f64,
}

impl SolveTimes {
    pub fn total(&self) -> f64 {
        self.upward + self.top + self.downward
    }
}

/// Reusable factorization; solving does not modify it.
pub struct FdsFactorization {
    n_nodes: usize,
    tree: ClusterTree,
    ell0: usize,
    /// `levels[d]` holds the cells of tree level `L - d`, for levels `L..ℓ0+1`.
    levels: Vec<Vec<CellFactor>>,
    top_lists: Vec<ActiveLists>,
    top_lu: Lu,
    pub stats: BuildStats,
}

/// Parent position of child entry `(c, s)`: child `a` first, then `b`, per
/// component.
fn child_index(c: usize, s: usize, ka: usize, kb: usize, second: bool) -> usize {
    c * (ka + kb) + if second { ka + s } else { s }
}

fn merge(a: &Mat<c64>, b: &Mat<c64>, ka: usize, kb: usize) -> Mat<c64> {
    let m = a.ncols();
    let mut out = Mat::zeros(2 * (ka + kb), m);
    for c in 0..2 {
        for s in 0..ka {
            for j in 0..m {
                out[(child_index(c, s, ka, kb, false), j)] = a[(c * ka + s, j)];
            }
        }
        for s in 0..kb {
            for j in 0..m {
                out[(child_index(c, s, ka, kb, true), j)] = b[(c * kb + s, j)];
            }
        }
    }
    out
}

fn split(x: &Mat<c64>, ka: usize, kb: usize, second: bool) -> Mat<c64> {
    let k = if second { kb } else { ka };
    Mat::from_fn(2 * k, x.ncols(), |r, j| x[(child_index(r / k, r % k, ka, kb, second), j)])
}

fn merge_lists(a: &ActiveLists, b: &ActiveLists) -> ActiveLists {
    let cat = |x: &Vec<usize>, y: &Vec<usize>| x.iter().chain(y).copied().collect::<Vec<usize>>();
    ActiveLists {
        rows: [cat(&a.rows[0], &b.rows[0]), cat(&a.rows[1], &b.rows[1])],
        cols: [cat(&a.cols[0], &b.cols[0]), cat(&a.cols[1], &b.cols[1])],
    }
}

/// Diagonal block of a parent from its two compressed children.
fn parent_diag(op: &dyn Operator, a: &CellFactor, b: &CellFactor) -> Mat<c64> {
    let (ka, kb) = (a.rank, b.rank);
    let rab = op.block(a.skeleton.row_refs(), b.skeleton.col_refs());
    let rba = op.block(b.skeleton.row_refs(), a.skeleton.col_refs());
    let mut out = Mat::zeros(2 * (ka + kb), 2 * (ka + kb));
    let place = |out: &mut Mat<c64>, m: &Mat<c64>, (kr, sr): (usize, bool), (kc, sc): (usize, bool)| {
        for cr in 0..2 {
            for r in 0..kr {
                for cc in 0..2 {
                    for s in 0..kc {
                        out[(child_index(cr, r, ka, kb, sr), child_index(cc, s, ka, kb, sc))] = m[(cr * kr + r, cc * kc + s)];
                    }
                }
            }
        }
    };
    place(&mut out, &a.a_tilde, (ka, false), (ka, false));
    place(&mut out, &rab, (ka, false), (kb, true));
    place(&mut out, &rba, (kb, true), (ka, false));
    place(&mut out, &b.a_tilde, (kb, true), (kb, true));
    out
}

fn with_context(e: Error, cell: usize, level: usize) -> Error {
    match e {
        Error::Singular { pivot, .. } => Error::Singular { pivot, context: format!(" in cell {cell} at level {level}") },
        other => other,
    }
}

fn factor_cell(cell: usize, level: usize, lists: ActiveLists, diag: Mat<c64>, basis: CellBasis) -> Result<CellFactor> {
    let skeleton = basis.skeleton_lists(&lists);
    let lu = Lu::factor(diag, Par::Seq).map_err(|e| with_context(e, cell, level))?;
    let ainv_u = lu.solve(basis.u_full().as_ref(), Par::Seq);
    let mut f = CellFactor {
        cell,
        level,
        lists,
        skeleton,
        rank: basis.rank,
        raw_ranks: basis.raw_ranks,
        lu,
        ainv_u,
        a_tilde: Mat::zeros(0, 0),
        v: basis.v,
    };
    let s = f.reduced_inverse();
    let s_lu = Lu::factor(s, Par::Seq).map_err(|e| with_context(e, cell, level))?;
    f.a_tilde = s_lu.inverse(Par::Seq);
    Ok(f)
}

impl FdsFactorization {
    /// Builds the factorization of the operator on `tree`.
    pub fn build(op: &dyn Operator, tree: &ClusterTree, config: &FdsConfig) -> Result<Self> {
        if !(config.epsilon > 0.0) {
            return param(format!("epsilon must be positive, got {}", config.epsilon));
        }
        if tree.n_nodes != op.n_nodes() {
            return Err(Error::Dimension { expected: op.n_nodes(), got: tree.n_nodes });
        }
        if config.ell0 > tree.levels {
            return param(format!("ell0 = {} exceeds the number of levels {}", config.ell0, tree.levels));
        }
        let sampling = config.sampling();
        if let Sampling::Proxy(p) = &sampling {
            p.validate()?;
        }
        let mut stats = BuildStats::default();
        let big_l = tree.levels;
        let ell0 = config.ell0;

        let t = Instant::now();
        let mut lists: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
        let mut diags: Vec<Mat<c64>> = lists.par_iter().map(|l| op.block(l.row_refs(), l.col_refs())).collect();
        stats.assembly_seconds += t.elapsed().as_secs_f64();

        let mut levels = Vec::new();
        for level in (ell0 + 1..=big_l).rev() {
            let cells: Vec<usize> = tree.level_cells(level).collect();
            let t = Instant::now();
            let bases: Vec<CellBasis> = (0..cells.len())
                .into_par_iter()
                .map(|i| {
                    let span: Vec<usize> = tree.cell_nodes(cells[i]).collect();
                    let others: Vec<&ActiveLists> = lists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, l)| l).collect();
                    compress_cell(op, &lists[i], &span, &others, &sampling, config.epsilon)
                })
                .collect::<Result<_>>()?;
            stats.compression_seconds += t.elapsed().as_secs_f64();

            let t = Instant::now();
            let factors: Vec<CellFactor> = cells
                .par_iter()
                .zip(lists.into_par_iter())
                .zip(diags.into_par_iter())
                .zip(bases.into_par_iter())
                .map(|(((&cell, l), d), b)| factor_cell(cell, level, l, d, b))
                .collect::<Result<_>>()?;
            stats.factorization_seconds += t.elapsed().as_secs_f64();

            let ranks: Vec<usize> = factors.iter().map(|f| f.rank).collect();
            stats.ranks.push(LevelRanks {
                level,
                min: ranks.iter().copied().min().unwrap_or(0),
                max: ranks.iter().copied().max().unwrap_or(0),
                mean: ranks.iter().sum::<usize>() as f64 / ranks.len().max(1) as f64,
                max_size: factors.iter().map(|f| f.size()).max().unwrap_or(0),
            });

            let t = Instant::now();
            lists = factors.chunks(2).map(|p| merge_lists(&p[0].skeleton, &p[1].skeleton)).collect();
            diags = factors.par_chunks(2).map(|p| parent_diag(op, &p[0], &p[1])).collect();
            stats.assembly_seconds += t.elapsed().as_secs_f64();
            levels.push(factors);
        }

        let t = Instant::now();
        let sizes: Vec<usize> = lists.iter().map(|l| 2 * l.len()).collect();
        let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        }).collect();
        let dim: usize = sizes.iter().sum();
        let mut top = Mat::<c64>::zeros(dim, dim);
        let blocks: Vec<Vec<Mat<c64>>> = (0..lists.len())
            .into_par_iter()
            .map(|i| {
                (0..lists.len())
                    .map(|j| if i == j { Mat::zeros(0, 0) } else { op.block(lists[i].row_refs(), lists[j].col_refs()) })
                    .collect()
            })
            .collect();
        for i in 0..lists.len() {
            for j in 0..lists.len() {
                let b = if i == j { &diags[i] } else { &blocks[i][j] };
                top.as_mut().submatrix_mut(offsets[i], offsets[j], sizes[i], sizes[j]).copy_from(b);
            }
        }
        let top_lu = Lu::factor(top, Par::Seq).map_err(|e| with_context(e, 0, ell0))?;
        stats.top_seconds = t.elapsed().as_secs_f64();
        stats.top_dim = dim;
        stats.bytes = top_lu.bytes() + levels.iter().flatten().map(|f| f.bytes()).sum::<usize>();

        Ok(Self { n_nodes: tree.n_nodes, tree: tree.clone(), ell0, levels, top_lists: lists, top_lu, stats })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn ell0(&self) -> usize {
        self.ell0
    }

    /// Compressed cells, leaves first.
    pub fn levels(&self) -> &[Vec<CellFactor>] {
        &self.levels
    }

    /// Active node lists of the cells at level `ℓ0`.
    pub fn top_lists(&self) -> &[ActiveLists] {
        &self.top_lists
    }

    /// Solves for a single right-hand side given in leaf order.
    pub fn solve(&self, rhs: &[c64]) -> Result<Vec<c64>> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.solve_many(b.as_ref())?;
        Ok((0..x.nrows()).map(|i| x[(i, 0)]).collect())
    }

    /// Solves for several right-hand sides (columns, leaf order).
    pub fn solve_many(&self, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        Ok(self.solve_traced(rhs)?.0)
    }

    /// Solves for several right-hand sides and reports the time of each
    /// sweep.
    pub fn solve_timed(&self, rhs: MatRef<'_, c64>) -> Result<(Mat<c64>, SolveTimes)> {
        let (x, _, t) = self.solve_inner(rhs)?;
        Ok((x, t))
    }

    /// Solution plus the skeleton vectors `y_i` of every compressed cell
    /// (same layout as [`FdsFactorization::levels`]).
    pub fn solve_traced(&self, rhs: MatRef<'_, c64>) -> Result<(Mat<c64>, Vec<Vec<Mat<c64>>>)> {
        let (x, traces, _) = self.solve_inner(rhs)?;
        Ok((x, traces))
    }

    fn solve_inner(&self, rhs: MatRef<'_, c64>) -> Result<(Mat<c64>, Vec<Vec<Mat<c64>>>, SolveTimes)> {
        if rhs.nrows() != 2 * self.n_nodes {
            return Err(Error::Dimension { expected: 2 * self.n_nodes, got: rhs.nrows() });
        }
        let m = rhs.ncols();
        let leaf_sizes: Vec<usize> = self.tree.leaves().map(|l| 2 * self.tree.cell_nodes(l).len()).collect();
        let mut f: Vec<Mat<c64>> = Vec::with_capacity(leaf_sizes.len());
        let mut off = 0;
        for &s in &leaf_sizes {
            f.push(rhs.subrows(off, s).to_owned());
            off += s;
        }

        let mut times = SolveTimes::default();
        let clock = Instant::now();
        let mut saved: Vec<Vec<(Mat<c64>, Mat<c64>)>> = Vec::with_capacity(self.levels.len());
        for factors in &self.levels {
            let zf: Vec<(Mat<c64>, Mat<c64>)> = factors.par_iter().zip(f.par_iter()).map(|(c, fi)| c.upward(fi)).collect();
            f = factors
                .chunks(2)
                .zip(zf.chunks(2))
                .map(|(p, z)| merge(&z[0].1, &z[1].1, p[0].rank, p[1].rank))
                .collect();
            saved.push(zf);
        }

        times.upward = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let dim: usize = f.iter().map(|b| b.nrows()).sum();
        let mut top = Mat::zeros(dim, m);
        let mut off = 0;
        for b in &f {
            top.as_mut().subrows_mut(off, b.nrows()).copy_from(b);
            off += b.nrows();
        }
        self.top_lu.solve_in_place(top.as_mut(), Par::Seq);
        let mut x: Vec<Mat<c64>> = Vec::with_capacity(f.len());
        let mut off = 0;
        for b in &f {
            x.push(top.as_ref().subrows(off, b.nrows()).to_owned());
            off += b.nrows();
        }

        times.top = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let mut traces = vec![Vec::new(); self.levels.len()];
        for (d, factors) in self.levels.iter().enumerate().rev() {
            let ys: Vec<Mat<c64>> = factors
                .iter()
                .enumerate()
                .map(|(i, _)| split(&x[i / 2], factors[i & !1].rank, factors[i | 1].rank, i % 2 == 1))
                .collect();
            x = factors
                .par_iter()
                .zip(saved[d].par_iter())
                .zip(ys.par_iter())
                .map(|((c, (z, ft)), y)| c.downward(z, ft, y))
                .collect();
            traces[d] = ys;
        }

        let mut out = Mat::zeros(2 * self.n_nodes, m);
        let mut off = 0;
        for b in &x {
            out.as_mut().subrows_mut(off, b.nrows()).copy_from(b);
            off += b.nrows();
        }
        times.downward = clock.elapsed().as_secs_f64();
        Ok((out, traces, times))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_dense, assemble_rhs_leaf_order, Problem, DEFAULT_DENSE_BUDGET};
    use crate::compression::DenseOperator;
    use crate::geometry::{BoundaryMesh, StarCurve};
    use crate::linalg::{frobenius, norm2};
    use crate::medium::{ElasticMedium, IncidentWave};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &[c64], b: &[c64]) -> f64 {
        let d: Vec<c64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(b)
    }

    struct Case {
        mesh: BoundaryMesh,
        medium: ElasticMedium,
        tree: ClusterTree,
    }

    fn case(n: usize, levels: usize) -> Case {
        Case {
            mesh: BoundaryMesh::star(&StarCurve::default(), n).unwrap(),
            medium: ElasticMedium::reference(2.0).unwrap(),
            tree: ClusterTree::new(n, levels).unwrap(),
        }
    }

    fn dense_solution(p: &Problem, tree: &ClusterTree, wave: &IncidentWave) -> (Mat<c64>, Vec<c64>, Vec<c64>) {
        let sys = assemble_dense(p, tree, wave, DEFAULT_DENSE_BUDGET).unwrap();
        let lu = Lu::factor(sys.matrix.clone(), Par::Seq).unwrap();
        let x = lu.solve_vec(&sys.rhs, Par::Seq);
        (sys.matrix, sys.rhs, x)
    }

    #[test]
    fn one_level_matches_dense() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let wave = IncidentWave::along_angle(0.0);
        let (_, rhs, x) = dense_solution(&p, &c.tree, &wave);
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig { epsilon: 1e-8, ..Default::default() }).unwrap();
        let xf = fds.solve(&rhs).unwrap();
        let err = rel(&xf, &x);
        assert!(err <= 1e-7, "{err:e}");
    }

    #[test]
    fn algebraic_identity_per_cell() {
        let c = case(800, 3);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig::default()).unwrap();
        for cell in fds.levels().iter().flatten() {
            let prod = mul(cell.a_tilde(), cell.reduced_inverse().as_ref(), Par::Seq);
            let k = 2 * cell.rank;
            let id = Mat::<c64>::identity(k, k);
            let err = frobenius((&prod - &id).as_ref()) / (k as f64).sqrt();
            assert!(err <= 1e-10, "cell {} {err:e}", cell.cell);
        }
    }

    #[test]
    fn skeleton_vectors_match_dense_solution() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let wave = IncidentWave::along_angle(0.3);
        let (_, rhs, x) = dense_solution(&p, &c.tree, &wave);
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig { epsilon: 1e-10, ..Default::default() }).unwrap();
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let (_, traces) = fds.solve_traced(b.as_ref()).unwrap();
        for (i, cell) in fds.levels()[0].iter().enumerate() {
            let xi = Mat::from_fn(200, 1, |r, _| x[i * 200 + r]);
            let vx = mul(cell.v_full().as_ref(), xi.as_ref(), Par::Seq);
            let y = &traces[0][i];
            let d = frobenius((&vx - y).as_ref()) / frobenius(vx.as_ref());
            assert!(d <= 1e-6, "cell {i}: {d:e}");
        }
    }

    #[test]
    fn repeated_solves_are_identical() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig::default()).unwrap();
        let rhs = assemble_rhs_leaf_order(&p, &c.tree, &IncidentWave::along_angle(1.0));
        assert_eq!(fds.solve(&rhs).unwrap(), fds.solve(&rhs).unwrap());
    }

    #[test]
    fn batched_solve_matches_single_solves() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig::default()).unwrap();
        let rhss: Vec<Vec<c64>> = (0..4).map(|j| assemble_rhs_leaf_order(&p, &c.tree, &IncidentWave::along_angle(j as f64))).collect();
        let b = Mat::from_fn(800, 4, |i, j| rhss[j][i]);
        let xb = fds.solve_many(b.as_ref()).unwrap();
        for (j, r) in rhss.iter().enumerate() {
            let x = fds.solve(r).unwrap();
            let col: Vec<c64> = (0..800).map(|i| xb[(i, j)]).collect();
            assert!(rel(&col, &x) <= 1e-13, "{:e}", rel(&col, &x));
        }
    }

    #[test]
    fn wrong_rhs_length_is_rejected() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig::default()).unwrap();
        assert!(matches!(fds.solve(&[c64::new(1.0, 0.0); 10]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn ell0_equal_to_levels_is_a_dense_solve() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        let wave = IncidentWave::along_angle(0.0);
        let (_, rhs, x) = dense_solution(&p, &c.tree, &wave);
        let fds = FdsFactorization::build(&p, &c.tree, &FdsConfig { ell0: 2, ..Default::default() }).unwrap();
        assert!(fds.levels().is_empty());
        assert!(rel(&fds.solve(&rhs).unwrap(), &x) <= 1e-12);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let c = case(400, 2);
        let p = Problem::new(&c.mesh, &c.medium, c.medium.default_alpha());
        assert!(FdsFactorization::build(&p, &c.tree, &FdsConfig { ell0: 3, ..Default::default() }).is_err());
        assert!(FdsFactorization::build(&p, &c.tree, &FdsConfig { epsilon: 0.0, ..Default::default() }).is_err());
    }

    /// Block-diagonal plus exactly low-rank coupling between leaves, in
    /// leaf-ordered numbering; returns the operator (component-major) and the
    /// same matrix in leaf order.
    fn synthetic(n: usize, leaf: usize, rank: usize, coupled: bool, seed: u64) -> (DenseOperator, Mat<c64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = |rows: usize, cols: usize| Mat::<c64>::from_fn(rows, cols, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        // smooth low-rank field: a(x_s) b(x_t) products over `rank` terms per component pair
        let left = r(2 * n, rank);
        let right = r(rank, 2 * n);
        let mut a = if coupled { mul(left.as_ref(), right.as_ref(), Par::Seq) } else { Mat::zeros(2 * n, 2 * n) };
        // component-major index of node s, component c
        let idx = |c: usize, s: usize| c * n + s;
        for p in 0..n / leaf {
            let block = r(2 * leaf, 2 * leaf);
            for ci in 0..2 {
                for i in 0..leaf {
                    for cj in 0..2 {
                        for j in 0..leaf {
                            let (gi, gj) = (idx(ci, p * leaf + i), idx(cj, p * leaf + j));
                            let diag = if ci == cj && i == j { 4.0 * leaf as f64 } else { 0.0 };
                            a[(gi, gj)] = block[(ci * leaf + i, cj * leaf + j)] + c64::new(diag, 0.0);
                        }
                    }
                }
            }
        }
        let leaf_order = |g: usize| {
            let (c, s) = (g / n, g % n);
            (s / leaf) * 2 * leaf + c * leaf + s % leaf
        };
        let mut lo = Mat::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                lo[(leaf_order(i), leaf_order(j))] = a[(i, j)];
            }
        }
        (DenseOperator { matrix: a }, lo)
    }

    #[test]
    fn exact_on_exactly_low_rank_system() {
        let (op, lo) = synthetic(256, 32, 6, true, 3);
        let tree = ClusterTree::new(256, 3).unwrap();
        let cfg = FdsConfig { epsilon: 1e-13, ell0: 1, exact_sampling: true, ..Default::default() };
        let fds = FdsFactorization::build(&op, &tree, &cfg).unwrap();
        assert!(fds.stats.ranks.iter().all(|r| r.max <= 12));
        let b: Vec<c64> = (0..512).map(|i| c64::new((i as f64).cos(), 0.5)).collect();
        let x = fds.solve(&b).unwrap();
        let xd = Lu::factor(lo, Par::Seq).unwrap().solve_vec(&b, Par::Seq);
        assert!(rel(&x, &xd) <= 1e-11, "{:e}", rel(&x, &xd));
    }

    #[test]
    fn block_diagonal_system_gives_local_solves() {
        let (op, lo) = synthetic(128, 32, 1, false, 4);
        let tree = ClusterTree::new(128, 2).unwrap();
        let cfg = FdsConfig { epsilon: 1e-12, ell0: 0, exact_sampling: true, ..Default::default() };
        let fds = FdsFactorization::build(&op, &tree, &cfg).unwrap();
        let b: Vec<c64> = (0..256).map(|i| c64::new(1.0, i as f64)).collect();
        let x = fds.solve(&b).unwrap();
        for p in 0..4 {
            let blk = lo.as_ref().submatrix(64 * p, 64 * p, 64, 64).to_owned();
            let xp = Lu::factor(blk, Par::Seq).unwrap().solve_vec(&b[64 * p..64 * (p + 1)], Par::Seq);
            assert!(rel(&x[64 * p..64 * (p + 1)], &xp) <= 1e-13);
        }
    }
}
