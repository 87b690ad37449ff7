//! Dense kernels: partial-pivoted LU (faer), a 1-norm condition estimator,
//! and an incremental column-pivoted QR used by the interpolative
//! decomposition.

use crate::c64;
use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::linalg::matmul::matmul;
use faer::perm::PermRef;
use faer::{Accum, Mat, MatMut, MatRef, Par};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// `a · b` into a new matrix.
pub fn mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>, par: Par) -> Mat<c64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, par);
    out
}

/// `dst += alpha · a · b`.
pub fn mul_add(dst: MatMut<'_, c64>, a: MatRef<'_, c64>, b: MatRef<'_, c64>, alpha: c64, par: Par) {
    matmul(dst, Accum::Add, a, b, alpha, par);
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn norm2(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Column vector view helpers.
pub fn column(x: &[c64]) -> Mat<c64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub fn to_vec(m: MatRef<'_, c64>) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// LU factors with partial pivoting, stored in place.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat<c64>,
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    norm1: f64,
    min_pivot: f64,
}

impl Lu {
    /// Factors `a` in place. Fails if a pivot is exactly zero or not finite.
    pub fn factor(mut a: Mat<c64>, par: Par) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension { expected: n, got: a.ncols() });
        }
        let norm1 = one_norm(a.as_ref());
        let mut perm = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let req = factor::lu_in_place_scratch::<usize, c64>(n, n, par, Default::default());
        let mut buf = MemBuffer::new(req);
        factor::lu_in_place(a.as_mut(), &mut perm, &mut perm_inv, par, MemStack::new(&mut buf), Default::default());
        let min_pivot = (0..n).map(|i| a[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if n > 0 && !(min_pivot > 0.0 && min_pivot.is_finite()) {
            return Err(Error::Singular { pivot: min_pivot, context: String::new() });
        }
        Ok(Self { lu: a, perm, perm_inv, norm1, min_pivot: if n == 0 { 0.0 } else { min_pivot } })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Bytes held by the factors.
    pub fn bytes(&self) -> usize {
        self.dim() * self.dim() * 16 + 2 * self.dim() * 8
    }

    fn perm_ref(&self) -> PermRef<'_, usize> {
        PermRef::new_checked(&self.perm, &self.perm_inv, self.dim())
    }

    /// `rhs ← A⁻¹ rhs`.
    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>, par: Par) {
        let req = solve::solve_in_place_scratch::<usize, c64>(self.dim(), rhs.ncols(), par);
        let mut buf = MemBuffer::new(req);
        solve::solve_in_place(self.lu.as_ref(), self.lu.as_ref(), self.perm_ref(), rhs, par, MemStack::new(&mut buf));
    }

    /// `rhs ← A⁻ᴴ rhs`.
    pub fn solve_adjoint_in_place(&self, rhs: MatMut<'_, c64>, par: Par) {
        let req = solve::solve_transpose_in_place_scratch::<usize, c64>(self.dim(), rhs.ncols(), par);
        let mut buf = MemBuffer::new(req);
        let lu = self.lu.as_ref().conjugate();
        solve::solve_transpose_in_place(lu, lu, self.perm_ref(), rhs, par, MemStack::new(&mut buf));
    }

    pub fn solve(&self, rhs: MatRef<'_, c64>, par: Par) -> Mat<c64> {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut(), par);
        x
    }

    pub fn solve_vec(&self, b: &[c64], par: Par) -> Vec<c64> {
        let mut x = column(b);
        self.solve_in_place(x.as_mut(), par);
        to_vec(x.as_ref())
    }

    /// Explicit inverse; only used on small reduced matrices.
    pub fn inverse(&self, par: Par) -> Mat<c64> {
        let mut x = Mat::<c64>::identity(self.dim(), self.dim());
        self.solve_in_place(x.as_mut(), par);
        x
    }

    /// Estimate of the 1-norm condition number (Hager–Higham iteration).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let mut x = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(y.as_mut(), Par::Seq);
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            let mut z = Mat::<c64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    ONE
                }
            });
            self.solve_adjoint_in_place(z.as_mut(), Par::Seq);
            let (mut jmax, mut zmax) = (0, 0.0);
            for i in 0..n {
                if z[(i, 0)].norm() > zmax {
                    zmax = z[(i, 0)].norm();
                    jmax = i;
                }
            }
            let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || jmax == last {
                break;
            }
            last = jmax;
            x = Mat::zeros(n, 1);
            x[(jmax, 0)] = ONE;
        }
        est * self.norm1
    }
}

/// Column-pivoted Householder QR that can be advanced one step at a time.
///
/// After `k` steps the first `k` rows of the working columns hold `R`, and
/// `perm[j]` is the original index of the column now in position `j`.
#[derive(Clone, Debug)]
pub struct Cpqr {
    m: usize,
    cols: Vec<Vec<c64>>,
    perm: Vec<usize>,
    norms: Vec<f64>,
    ref_norms: Vec<f64>,
    steps: usize,
    first: f64,
}

impl Cpqr {
    pub fn new(a: MatRef<'_, c64>) -> Self {
        let m = a.nrows();
        let cols: Vec<Vec<c64>> = (0..a.ncols()).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
        let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
        let first = norms.iter().copied().fold(0.0, f64::max);
        Self { m, perm: (0..cols.len()).collect(), ref_norms: norms.clone(), norms, cols, steps: 0, first }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn max_rank(&self) -> usize {
        self.m.min(self.cols.len())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `|R_11|`, the largest column norm.
    pub fn leading(&self) -> f64 {
        self.first
    }

    /// Norm of the next pivot column, i.e. `|R_{k+1,k+1}|` after `k` steps.
    pub fn next_pivot(&self) -> f64 {
        self.norms[self.steps..].iter().copied().fold(0.0, f64::max)
    }

    /// One pivoted Householder step.
    pub fn step(&mut self) {
        let k = self.steps;
        assert!(k < self.max_rank(), "no columns left to pivot");
        let mut piv = k;
        for j in k + 1..self.cols.len() {
            if self.norms[j] > self.norms[piv] {
                piv = j;
            }
        }
        self.cols.swap(k, piv);
        self.perm.swap(k, piv);
        self.norms.swap(k, piv);
        self.ref_norms.swap(k, piv);

        let m = self.m;
        let (head, tail) = self.cols.split_at_mut(k + 1);
        let col = &mut head[k];
        let xnorm = norm2(&col[k..m]);
        if xnorm > 0.0 {
            let x0 = col[k];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
            let alpha = -phase * xnorm;
            let mut v: Vec<c64> = col[k..m].to_vec();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vv > 0.0 {
                for c in tail.iter_mut() {
                    let dot: c64 = v.iter().zip(&c[k..m]).map(|(a, b)| a.conj() * b).sum();
                    let s = dot * (2.0 / vv);
                    for (ci, vi) in c[k..m].iter_mut().zip(&v) {
                        *ci -= vi * s;
                    }
                }
            }
            col[k] = alpha;
            for z in col[k + 1..m].iter_mut() {
                *z = ZERO;
            }
        }
        for (j, c) in tail.iter().enumerate() {
            let j = j + k + 1;
            let top = c[k].norm_sqr();
            let rest = self.norms[j] * self.norms[j] - top;
            if rest <= 1e-4 * self.ref_norms[j] * self.ref_norms[j] {
                let fresh = norm2(&c[k + 1..m]);
                self.norms[j] = fresh;
                self.ref_norms[j] = fresh;
            } else {
                self.norms[j] = rest.sqrt();
            }
        }
        self.norms[k] = 0.0;
        self.steps += 1;
    }

    pub fn advance_to(&mut self, k: usize) {
        let k = k.min(self.max_rank());
        while self.steps < k {
            self.step();
        }
    }

    /// Steps until `|R_{k+1,k+1}| <= eps |R_11|`; returns the rank `k`.
    pub fn advance_to_tolerance(&mut self, eps: f64) -> usize {
        if self.first == 0.0 {
            return self.steps;
        }
        while self.steps < self.max_rank() && self.next_pivot() > eps * self.first {
            self.step();
        }
        self.steps
    }

    /// Skeleton columns (pivot order) and `(I  R11⁻¹R12) Pᵀ` for rank `k`
    /// (`k <= steps`).
    pub fn interpolation(&self, k: usize) -> (Vec<usize>, Mat<c64>) {
        assert!(k <= self.steps);
        let n = self.cols.len();
        let mut coeff = Mat::<c64>::zeros(k, n);
        for j in 0..k {
            coeff[(j, self.perm[j])] = ONE;
        }
        for j in k..n {
            // back substitution R11 t = R12[:, j]
            let c = &self.cols[j];
            let mut t = vec![ZERO; k];
            for i in (0..k).rev() {
                let mut s = c[i];
                for l in i + 1..k {
                    s -= self.cols[l][i] * t[l];
                }
                t[i] = s / self.cols[i][i];
            }
            for (i, ti) in t.into_iter().enumerate() {
                coeff[(i, self.perm[j])] = ti;
            }
        }
        (self.perm[..k].to_vec(), coeff)
    }
}
