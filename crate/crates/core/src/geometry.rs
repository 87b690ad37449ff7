//! Boundary curve, polygonal mesh, and the uniform binary cluster tree.
//!
//! Indices are 0-based throughout: node `t` sits at `θ_t = 2π t / N`, element
//! `e` joins node `e` to node `e + 1 (mod N)`, and leaf `p` of a depth-`L` tree
//! owns nodes `(p - (2^L - 1)) n .. (p - (2^L - 1) + 1) n`.

use crate::error::{param, Result};
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::path::Path;

/// Star-shaped curve
/// `x(θ) = (r + a cos bθ)(cos θ, sin θ) / (1 + a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarCurve {
    pub r: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for StarCurve {
    fn default() -> Self {
        Self { r: 1.0, a: 0.3, b: 3.0 }
    }
}

impl StarCurve {
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let rad = (self.r + self.a * (self.b * theta).cos()) / (1.0 + self.a);
        [rad * theta.cos(), rad * theta.sin()]
    }

    /// Arc length by adaptive-free composite Gauss quadrature; used as a
    /// high-resolution reference in tests.
    pub fn perimeter(&self, panels: usize) -> f64 {
        let rule = crate::quadrature::gauss_legendre(16);
        let dt = 2.0 * PI / panels as f64;
        let speed = |t: f64| {
            let s = 1.0 + self.a;
            let rad = (self.r + self.a * (self.b * t).cos()) / s;
            let drad = -self.a * self.b * (self.b * t).sin() / s;
            rad.hypot(drad)
        };
        (0..panels)
            .map(|p| rule.iter().map(|(u, w)| w * dt * speed((p as f64 + u) * dt)).sum::<f64>())
            .sum()
    }
}

/// Free function form of [`StarCurve::point`].
pub fn curve_point(c: &StarCurve, theta: f64) -> [f64; 2] {
    c.point(theta)
}

/// Closed polygon with `N` nodes and `N` straight elements.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub nodes: Vec<[f64; 2]>,
    /// Unit normal of element `e`, pointing into the cavity.
    pub normals: Vec<[f64; 2]>,
    /// Unit tangent `τ = (n_2, -n_1)` of element `e`.
    pub tangents: Vec<[f64; 2]>,
    pub lengths: Vec<f64>,
    /// `+1` if `τ` points from node `e` to node `e + 1`, else `-1`.
    pub orientation: Vec<f64>,
}

impl BoundaryMesh {
    /// Polygon through `N` points at uniform parameter on the star curve.
    pub fn star(curve: &StarCurve, n: usize) -> Result<Self> {
        if n < 8 {
            return param(format!("mesh needs at least 8 elements, got {n}"));
        }
        let nodes = (0..n).map(|t| curve.point(2.0 * PI * t as f64 / n as f64)).collect();
        Self::from_nodes(nodes)
    }

    /// Polygon on the circle of given radius about the origin.
    pub fn circle(radius: f64, n: usize) -> Result<Self> {
        if n < 8 || radius <= 0.0 {
            return param(format!("circle mesh needs n >= 8 and radius > 0 (n={n}, radius={radius})"));
        }
        let nodes = (0..n)
            .map(|t| {
                let th = 2.0 * PI * t as f64 / n as f64;
                [radius * th.cos(), radius * th.sin()]
            })
            .collect();
        Self::from_nodes(nodes)
    }

    /// Builds element data from polygon vertices (either orientation). Normals
    /// point into the enclosed region.
    pub fn from_nodes(nodes: Vec<[f64; 2]>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return param(format!("polygon needs at least 3 nodes, got {n}"));
        }
        let area2: f64 = (0..n)
            .map(|e| {
                let a = nodes[e];
                let b = nodes[(e + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        // Left normal is inward for counter-clockwise polygons.
        let inward_left = area2 > 0.0;
        let mut normals = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        let mut orientation = Vec::with_capacity(n);
        for e in 0..n {
            let a = nodes[e];
            let b = nodes[(e + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let h = d[0].hypot(d[1]);
            if !(h > 0.0) {
                return param(format!("element {e} has zero length"));
            }
            let left = [-d[1] / h, d[0] / h];
            let nrm = if inward_left { left } else { [-left[0], -left[1]] };
            let tau = [nrm[1], -nrm[0]];
            normals.push(nrm);
            tangents.push(tau);
            lengths.push(h);
            orientation.push(if tau[0] * d[0] + tau[1] * d[1] > 0.0 { 1.0 } else { -1.0 });
        }
        Ok(Self { nodes, normals, tangents, lengths, orientation })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// End nodes of element `e`.
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        (e, (e + 1) % self.len())
    }

    /// Point at local coordinate `u ∈ [0, 1]` on element `e`.
    pub fn element_point(&self, e: usize, u: f64) -> [f64; 2] {
        let (a, b) = self.element_nodes(e);
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        [pa[0] + u * (pb[0] - pa[0]), pa[1] + u * (pb[1] - pa[1])]
    }

    pub fn midpoint(&self, e: usize) -> [f64; 2] {
        self.element_point(e, 0.5)
    }

    /// The two elements whose union supports the hat function of node `t`.
    pub fn node_elements(&self, t: usize) -> [usize; 2] {
        let n = self.len();
        [(t + n - 1) % n, t]
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    /// Polygon centroid (area-weighted).
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.len();
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for e in 0..n {
            let p = self.nodes[e];
            let q = self.nodes[(e + 1) % n];
            let cr = p[0] * q[1] - q[0] * p[1];
            a += cr;
            cx += (p[0] + q[0]) * cr;
            cy += (p[1] + q[1]) * cr;
        }
        [cx / (3.0 * a), cy / (3.0 * a)]
    }

    /// Distance from `x` to the polygon.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        (0..self.len())
            .map(|e| {
                let (a, b) = self.element_nodes(e);
                segment_distance(x, self.nodes[a], self.nodes[b])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (t, p) in self.nodes.iter().enumerate() {
            let d = (p[0] - x[0]).hypot(p[1] - x[1]);
            if d < best.0 {
                best = (d, t);
            }
        }
        best.1
    }

    /// Writes the `"N"` header followed by one `"x1 x2"` line per node.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| crate::Error::Parameter("empty mesh file".into()))??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| crate::Error::Parameter(format!("bad mesh header {header:?}")))?;
        let mut nodes = Vec::with_capacity(n);
        for line in lines.take(n) {
            let line = line?;
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y))) => nodes.push([x, y]),
                _ => return param(format!("bad mesh line {line:?}")),
            }
        }
        if nodes.len() != n {
            return param(format!("mesh header says {n} nodes, found {}", nodes.len()));
        }
        Self::from_nodes(nodes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_text(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_text(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Free function form of [`BoundaryMesh::star`].
pub fn build_mesh(c: &StarCurve, n: usize) -> Result<BoundaryMesh> {
    BoundaryMesh::star(c, n)
}

pub(crate) fn segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

/// Uniform binary tree over `N` nodes with `2^L` leaves of size `N / 2^L`.
/// Children of cell `i` are `2i + 1` and `2i + 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterTree {
    pub n_nodes: usize,
    pub levels: usize,
    pub leaf_size: usize,
}

impl ClusterTree {
    pub fn new(n_nodes: usize, levels: usize) -> Result<Self> {
        if levels >= usize::BITS as usize - 1 {
            return param(format!("tree depth {levels} too large"));
        }
        let leaves = 1usize << levels;
        if n_nodes == 0 || n_nodes % leaves != 0 {
            return param(format!("{n_nodes} nodes cannot be split into {leaves} equal leaves"));
        }
        Ok(Self { n_nodes, levels, leaf_size: n_nodes / leaves })
    }

    pub fn cell_count(&self) -> usize {
        (1 << (self.levels + 1)) - 1
    }

    /// Cells of level `l`: `2^l - 1 ..= 2^{l+1} - 2`.
    pub fn level_cells(&self, l: usize) -> Range<usize> {
        ((1 << l) - 1)..((1 << (l + 1)) - 1)
    }

    pub fn leaves(&self) -> Range<usize> {
        self.level_cells(self.levels)
    }

    pub fn level_of(cell: usize) -> usize {
        (usize::BITS - (cell + 1).leading_zeros() - 1) as usize
    }

    pub fn parent(cell: usize) -> Option<usize> {
        if cell == 0 {
            None
        } else {
            Some((cell - 1) / 2)
        }
    }

    pub fn children(cell: usize) -> [usize; 2] {
        [2 * cell + 1, 2 * cell + 2]
    }

    pub fn is_leaf(&self, cell: usize) -> bool {
        self.leaves().contains(&cell)
    }

    /// Node range covered by `cell` (its own nodes if a leaf, the union of
    /// its descendant leaves otherwise).
    pub fn cell_nodes(&self, cell: usize) -> Range<usize> {
        let l = Self::level_of(cell);
        let width = self.n_nodes >> l;
        let pos = cell + 1 - (1 << l);
        pos * width..(pos + 1) * width
    }

    /// Index sequence `J_p` of a leaf as a vector.
    pub fn leaf_indices(&self, leaf: usize) -> Vec<usize> {
        self.cell_nodes(leaf).collect()
    }
}

/// Free function form of [`ClusterTree::new`].
pub fn build_tree(n: usize, levels: usize) -> Result<ClusterTree> {
    ClusterTree::new(n, levels)
}
