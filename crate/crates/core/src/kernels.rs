//! Elastodynamic fundamental solution and derived kernels in 2D.
//!
//! `G_ij(x - y) = A(r) δ_ij + B(r) r̂_i r̂_j` with `r = |x - y|`. For the
//! time-harmonic kernel
//!
//! ```text
//! A = i/(4μ) [H0(k_T r) - S/(k_T² r)]
//! B = i/(4μ k_T²) [-k_T² H0(k_T r) + k_L² H0(k_L r) + 2S/r]
//! S = k_T H1(k_T r) - k_L H1(k_L r)
//! ```
//!
//! where `S` is evaluated with the regular parts `H1 + 2i/(πz)` so the `1/r`
//! singularities cancel analytically. The elastostatic (Kelvin) kernel is
//! available as a separate model; it is the small-`r` limit of the dynamic one
//! up to an additive constant and is used by operator identity tests.
//!
//! The Galerkin forms of the double-layer operator `D` and hypersingular
//! operator `N` are written in terms of the scalar potentials
//! `g_L, g_T` (`(i/4)H0(k r)`, or `-(1/2π) ln r` statically), their gradients,
//! and `G`, after integrating by parts along the boundary. With `n, τ` the
//! normal and tangent at the test point and `m, t` at the source point,
//! `ε = [[0, 1], [-1, 0]]`, and `'` the arclength derivative along `τ`/`t`:
//!
//! ```text
//! D[ψ, φ]_ij = -∫∫ ψ φ (m_j ∂_i g_L + t_j (ε∇g_T)_i) - 2μ ∫∫ ψ φ' (G εᵀ)_ij
//! N[ψ, φ]_ij =  ρω² ∫∫ ψ φ (n_i m_j g_L + τ_i t_j g_T)
//!             - 2μ ∫∫ ψ φ' (n_i (ε∇g_L)_j - τ_i ∂_j g_T)
//!             + 2μ ∫∫ ψ' φ (m_j (ε∇g_L)_i - t_j ∂_i g_T)
//!             + 4μ² ∫∫ ψ' φ' (ε G εᵀ)_ij
//! ```
//!
//! Only the first line of `D` is (Cauchy) singular; all remaining kernels
//! are at most logarithmic.

use crate::c64;
use crate::error::{Error, Result};
use crate::medium::ElasticMedium;
use crate::special::hankel01;
use std::f64::consts::{FRAC_2_PI, PI};

/// Smallest `k r` accepted by the point-evaluation API.
pub const MIN_KR: f64 = 1e-10;

pub type Mat2 = [[c64; 2]; 2];

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Which fundamental solution to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelModel {
    TimeHarmonic,
    /// Plane-strain Kelvin solution (zero frequency).
    Static,
}

/// Kernel evaluator bound to a medium.
#[derive(Clone, Copy, Debug)]
pub struct Kernel {
    pub medium: ElasticMedium,
    pub model: KernelModel,
    kelvin: f64,
    kelvin_log: f64,
}

/// Everything the Galerkin integrands need at one pair of points.
#[derive(Clone, Copy, Debug)]
pub struct PointEval {
    pub r: f64,
    pub rhat: [f64; 2],
    pub g_l: c64,
    pub g_t: c64,
    /// `∇_x g_L(x - y)`
    pub dg_l: [c64; 2],
    pub dg_t: [c64; 2],
    /// `G = A I + B r̂ r̂ᵀ`
    pub a: c64,
    pub b: c64,
}

impl PointEval {
    pub fn g(&self) -> Mat2 {
        let (a, b, e) = (self.a, self.b, self.rhat);
        [[a + b * (e[0] * e[0]), b * (e[0] * e[1])], [b * (e[1] * e[0]), a + b * (e[1] * e[1])]]
    }
}

/// The pieces of the regularized Galerkin forms at one quadrature point pair.
/// Suffixes give which of test `ψ` / trial `φ` is differentiated:
/// `00` → `ψ φ`, `01` → `ψ φ'`, `10` → `ψ' φ`, `11` → `ψ' φ'`.
#[derive(Clone, Copy, Debug)]
pub struct Bundle {
    pub d00: Mat2,
    pub d01: Mat2,
    pub n00: Mat2,
    pub n01: Mat2,
    pub n10: Mat2,
    pub n11: Mat2,
}

#[inline]
fn eps(v: [c64; 2]) -> [c64; 2] {
    [v[1], -v[0]]
}

impl Kernel {
    pub fn new(medium: ElasticMedium, model: KernelModel) -> Self {
        let nu = medium.poisson();
        let kelvin = 1.0 / (8.0 * PI * medium.mu * (1.0 - nu));
        Self { medium, model, kelvin, kelvin_log: kelvin * (3.0 - 4.0 * nu) }
    }

    pub fn time_harmonic(medium: &ElasticMedium) -> Self {
        Self::new(*medium, KernelModel::TimeHarmonic)
    }

    pub fn elastostatic(medium: &ElasticMedium) -> Self {
        Self::new(*medium, KernelModel::Static)
    }

    /// `ρω²` as seen by the hypersingular form (zero for the static model).
    pub fn rho_omega2(&self) -> f64 {
        match self.model {
            KernelModel::TimeHarmonic => self.medium.rho_omega2(),
            KernelModel::Static => 0.0,
        }
    }

    fn check(&self, x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2]> {
        let d = [x[0] - y[0], x[1] - y[1]];
        let r = d[0].hypot(d[1]);
        let k = match self.model {
            KernelModel::TimeHarmonic => self.medium.k_t,
            KernelModel::Static => 1.0,
        };
        if !(k * r >= MIN_KR) {
            return Err(Error::SingularEvaluation { kr: k * r });
        }
        Ok(d)
    }

    /// Potentials at separation `d = x - y` (`d ≠ 0`). No proximity guard: the
    /// quadrature layer calls this at arbitrarily small but positive `r`.
    #[inline]
    pub fn eval(&self, d: [f64; 2]) -> PointEval {
        self.eval_radial(d).0
    }

    /// [`Kernel::eval`] plus `(A'(r), B'(r))` from the same Hankel values.
    #[inline]
    pub(crate) fn eval_radial(&self, d: [f64; 2]) -> (PointEval, (c64, c64)) {
        let r = d[0].hypot(d[1]);
        let rhat = [d[0] / r, d[1] / r];
        match self.model {
            KernelModel::TimeHarmonic => {
                let m = &self.medium;
                let (kl, kt) = (m.k_l, m.k_t);
                let hl = hankel01(kl * r);
                let ht = hankel01(kt * r);
                let s = ht.h1_reg * kt - hl.h1_reg * kl;
                let c = I / (4.0 * m.mu);
                let kt2 = kt * kt;
                let a = c * (ht.h0 - s / (kt2 * r));
                let b = c / kt2 * (-ht.h0 * kt2 + hl.h0 * (kl * kl) + s * (2.0 / r));
                let q = 1.0 / (2.0 * PI * r);
                let rad_l = -I * 0.25 * kl * hl.h1_reg - q;
                let rad_t = -I * 0.25 * kt * ht.h1_reg - q;
                let h0diff = ht.h0 * kt2 - hl.h0 * (kl * kl);
                let da = c * (-ht.h1_reg * kt + I * (FRAC_2_PI / r) - h0diff / (kt2 * r) + s * (2.0 / (kt2 * r * r)));
                let cube = ht.h1_reg * (kt * kt2) - hl.h1_reg * (kl * kl * kl) - I * (FRAC_2_PI / r) * (kt2 - kl * kl);
                let db = c / kt2 * (cube + h0diff * (2.0 / r) - s * (4.0 / (r * r)));
                let p = PointEval {
                    r,
                    rhat,
                    g_l: I * 0.25 * hl.h0,
                    g_t: I * 0.25 * ht.h0,
                    dg_l: [rad_l * rhat[0], rad_l * rhat[1]],
                    dg_t: [rad_t * rhat[0], rad_t * rhat[1]],
                    a,
                    b,
                };
                (p, (da, db))
            }
            KernelModel::Static => {
                let g = c64::new(-r.ln() / (2.0 * PI), 0.0);
                let rad = c64::new(-1.0 / (2.0 * PI * r), 0.0);
                let dg = [rad * rhat[0], rad * rhat[1]];
                let p = PointEval {
                    r,
                    rhat,
                    g_l: g,
                    g_t: g,
                    dg_l: dg,
                    dg_t: dg,
                    a: c64::new(-self.kelvin_log * r.ln(), 0.0),
                    b: c64::new(self.kelvin, 0.0),
                };
                (p, (c64::new(-self.kelvin_log / r, 0.0), ZERO))
            }
        }
    }

    /// `G_ij(x - y)`.
    pub fn fundamental(&self, x: [f64; 2], y: [f64; 2]) -> Result<Mat2> {
        let d = self.check(x, y)?;
        Ok(self.eval(d).g())
    }

    /// `∂G_ik/∂x_l` returned as `grad[l][i][k]`.
    pub fn fundamental_gradient(&self, x: [f64; 2], y: [f64; 2]) -> Result<[Mat2; 2]> {
        let d = self.check(x, y)?;
        Ok(self.gradient_at(d))
    }

    fn gradient_at(&self, d: [f64; 2]) -> [Mat2; 2] {
        let (p, rad) = self.eval_radial(d);
        gradient_from(&p, rad)
    }

    /// Double-layer kernel `H_ij = T^{n_y}_{jk} G_ik(x - y)`: the traction on
    /// the surface with normal `ny` at `y`, density component `j`, observed in
    /// displacement component `i`.
    pub fn double_layer(&self, x: [f64; 2], y: [f64; 2], ny: [f64; 2]) -> Result<Mat2> {
        let d = self.check(x, y)?;
        Ok(self.double_layer_at(d, ny))
    }

    pub(crate) fn double_layer_at(&self, d: [f64; 2], ny: [f64; 2]) -> Mat2 {
        let gr = self.gradient_at(d);
        let (lam, mu) = (self.medium.lambda, self.medium.mu);
        let mut h = [[ZERO; 2]; 2];
        for (i, hi) in h.iter_mut().enumerate() {
            let div = gr[0][i][0] + gr[1][i][1];
            for (j, hij) in hi.iter_mut().enumerate() {
                let mut s = div * (lam * ny[j]);
                for k in 0..2 {
                    s += (gr[j][i][k] + gr[k][i][j]) * (mu * ny[k]);
                }
                *hij = -s;
            }
        }
        h
    }

    /// Adjoint double-layer kernel `K_ij = T^{n_x}_{ik} G_kj(x - y)`.
    pub fn adjoint_double_layer(&self, x: [f64; 2], y: [f64; 2], nx: [f64; 2]) -> Result<Mat2> {
        let d = self.check(x, y)?;
        Ok(self.adjoint_double_layer_at(d, nx))
    }

    pub(crate) fn adjoint_double_layer_at(&self, d: [f64; 2], nx: [f64; 2]) -> Mat2 {
        self.adjoint_double_layer_from(&self.gradient_at(d), nx)
    }

    /// `T^{n_x}` applied to a precomputed gradient `grad[l][i][k]`.
    #[inline]
    pub(crate) fn adjoint_double_layer_from(&self, gr: &[Mat2; 2], nx: [f64; 2]) -> Mat2 {
        let (lam, mu) = (self.medium.lambda, self.medium.mu);
        let mut k = [[ZERO; 2]; 2];
        for (i, ki) in k.iter_mut().enumerate() {
            for (j, kij) in ki.iter_mut().enumerate() {
                let div = gr[0][0][j] + gr[1][1][j];
                let mut s = div * (lam * nx[i]);
                for p in 0..2 {
                    s += (gr[i][p][j] + gr[p][i][j]) * (mu * nx[p]);
                }
                *kij = s;
            }
        }
        k
    }

    /// Regularized integrand pieces at one point pair; `n, tau` belong to the
    /// test element, `m, t` to the trial element.
    #[inline]
    pub fn bundle(&self, p: &PointEval, n: [f64; 2], tau: [f64; 2], m: [f64; 2], t: [f64; 2]) -> Bundle {
        let mu = self.medium.mu;
        let row2 = self.rho_omega2();
        let g = p.g();
        let edg_l = eps(p.dg_l);
        let edg_t = eps(p.dg_t);
        let mut out = Bundle {
            d00: [[ZERO; 2]; 2],
            d01: [[ZERO; 2]; 2],
            n00: [[ZERO; 2]; 2],
            n01: [[ZERO; 2]; 2],
            n10: [[ZERO; 2]; 2],
            n11: [[ZERO; 2]; 2],
        };
        let ab = p.a + p.b;
        for i in 0..2 {
            // (G εᵀ)_{i1} = G_{i2}, (G εᵀ)_{i2} = -G_{i1}
            let g_eps = [g[i][1], -g[i][0]];
            for j in 0..2 {
                out.d00[i][j] = -(p.dg_l[i] * m[j] + edg_t[i] * t[j]);
                out.d01[i][j] = g_eps[j] * (-2.0 * mu);
                out.n00[i][j] = (p.g_l * (n[i] * m[j]) + p.g_t * (tau[i] * t[j])) * row2;
                out.n01[i][j] = (edg_l[j] * n[i] - p.dg_t[j] * tau[i]) * (-2.0 * mu);
                out.n10[i][j] = (edg_l[i] * m[j] - p.dg_t[i] * t[j]) * (2.0 * mu);
                let diag = if i == j { ab } else { ZERO };
                out.n11[i][j] = (diag - p.b * (p.rhat[i] * p.rhat[j])) * (4.0 * mu * mu);
            }
        }
        out
    }
}

/// `G_ij(x - y)` for the time-harmonic model.
/// `∂G_ik/∂x_l` as `grad[l][i][k]` from the potentials and `(A', B')`.
#[inline]
pub(crate) fn gradient_from(p: &PointEval, (da, db): (c64, c64)) -> [Mat2; 2] {
    let e = p.rhat;
    let br = p.b / p.r;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = [[[ZERO; 2]; 2]; 2];
    for (l, gl) in out.iter_mut().enumerate() {
        for (i, gi) in gl.iter_mut().enumerate() {
            for (k, gik) in gi.iter_mut().enumerate() {
                *gik = da * (e[l] * delta(i, k))
                    + db * (e[l] * e[i] * e[k])
                    + br * (delta(i, l) * e[k] + delta(k, l) * e[i] - 2.0 * e[i] * e[k] * e[l]);
            }
        }
    }
    out
}

pub fn fundamental(m: &ElasticMedium, x: [f64; 2], y: [f64; 2]) -> Result<Mat2> {
    Kernel::time_harmonic(m).fundamental(x, y)
}

/// `T^{n_y}_{jk} G_ik(x - y)` for the time-harmonic model.
pub fn double_layer_kernel(m: &ElasticMedium, x: [f64; 2], y: [f64; 2], ny: [f64; 2]) -> Result<Mat2> {
    Kernel::time_harmonic(m).double_layer(x, y, ny)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn medium(omega: f64) -> ElasticMedium {
        ElasticMedium::reference(omega).unwrap()
    }

    fn mnorm(a: &Mat2) -> f64 {
        a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn mdiff(a: &Mat2, b: &Mat2) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (a[i][j] - b[i][j]).norm_sqr();
            }
        }
        s.sqrt()
    }

    #[test]
    fn off_diagonal_vanishes_on_axis() {
        let g = fundamental(&medium(2.0), [0.7, 0.0], [0.0, 0.0]).unwrap();
        assert!(g[0][1].norm() < 1e-16 && g[1][0].norm() < 1e-16);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let k = Kernel::time_harmonic(&medium(2.0));
        assert!(matches!(k.fundamental([0.1, 0.2], [0.1, 0.2]), Err(Error::SingularEvaluation { .. })));
        assert!(k.fundamental([0.1, 0.2], [0.1 + 1e-12, 0.2]).is_err());
        assert!(k.double_layer([0.0, 0.0], [0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn far_field_decays_like_inverse_sqrt() {
        let m = medium(2.0);
        // k_T r = 100 and 400
        let g1 = fundamental(&m, [50.0, 0.0], [0.0, 0.0]).unwrap();
        let g4 = fundamental(&m, [200.0, 0.0], [0.0, 0.0]).unwrap();
        let ratio = g1[1][1].norm() / g4[1][1].norm();
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn dynamic_part_is_bounded_at_the_origin() {
        let m = medium(2.0);
        let kd = Kernel::time_harmonic(&m);
        let ks = Kernel::elastostatic(&m);
        let dyn_part = |r: f64| {
            let a = kd.eval([r, 0.0]).g();
            let b = ks.eval([r, 0.0]).g();
            let mut d = a;
            for i in 0..2 {
                for j in 0..2 {
                    d[i][j] -= b[i][j];
                }
            }
            mnorm(&d)
        };
        assert!(dyn_part(1e-6) <= 10.0 * dyn_part(1e-2));
        // the difference tends to a constant multiple of the identity
        assert!((dyn_part(1e-6) - dyn_part(1e-8)).abs() < 1e-5);
    }

    #[test]
    fn static_limit_of_double_layer() {
        let m = medium(1.0);
        let ks = Kernel::elastostatic(&m);
        let n = [0.6, -0.8];
        // k_T r = 1e-3
        let r = 0.5;
        let mlow = medium(1e-3 / r);
        let kd = Kernel::time_harmonic(&mlow);
        let x = [0.3, 0.1];
        let y = [0.3 - r * 0.28, 0.1 - r * 0.96];
        let hd = kd.double_layer(x, y, n).unwrap();
        let hs = ks.double_layer(x, y, n).unwrap();
        assert!(mdiff(&hd, &hs) <= 1e-4 * mnorm(&hs), "{}", mdiff(&hd, &hs) / mnorm(&hs));
    }

    fn fd_double_layer(k: &Kernel, x: [f64; 2], y: [f64; 2], ny: [f64; 2], h: f64) -> Mat2 {
        // traction at y of u_k(y) = G_ik(x - y)
        let (lam, mu) = (k.medium.lambda, k.medium.mu);
        let mut grad = [[[ZERO; 2]; 2]; 2]; // grad[i][k][j] = ∂/∂y_j G_ik
        for j in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[j] += h;
            ym[j] -= h;
            let gp = k.fundamental(x, yp).unwrap();
            let gm = k.fundamental(x, ym).unwrap();
            for i in 0..2 {
                for kk in 0..2 {
                    grad[i][kk][j] = (gp[i][kk] - gm[i][kk]) / (2.0 * h);
                }
            }
        }
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            let div = grad[i][0][0] + grad[i][1][1];
            for j in 0..2 {
                let mut s = div * (lam * ny[j]);
                for kk in 0..2 {
                    s += (grad[i][kk][j] + grad[i][j][kk]) * (mu * ny[kk]);
                }
                out[i][j] = s;
            }
        }
        out
    }

    /// Double layer assembled from the potentials as the regularized forms use
    /// it: `-m_j ∂_i g_L - t_j (ε∇g_T)_i - 2μ ε_jq t·∇_x G_iq`.
    fn double_layer_from_potentials(k: &Kernel, d: [f64; 2], m: [f64; 2]) -> Mat2 {
        let p = k.eval(d);
        let gr = k.gradient_at(d);
        let t = [m[1], -m[0]];
        let edg_t = eps(p.dg_t);
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            // D_y G_iq = -t_l ∂_l G_iq
            let dy = |q: usize| -(gr[0][i][q] * t[0] + gr[1][i][q] * t[1]);
            let eps_dy = [dy(1), -dy(0)];
            for j in 0..2 {
                out[i][j] = -(p.dg_l[i] * m[j] + edg_t[i] * t[j]) + eps_dy[j] * (2.0 * k.medium.mu);
            }
        }
        out
    }

    /// Navier operator applied to column `j` of `G(· - 0)` with fourth-order
    /// central differences.
    fn navier_residual_column(k: &Kernel, x: [f64; 2], j: usize, h: f64) -> [c64; 2] {
        let m = &k.medium;
        let u = |a: i32, b: i32| {
            let g = k.fundamental([x[0] + a as f64 * h, x[1] + b as f64 * h], [0.0, 0.0]).unwrap();
            [g[0][j], g[1][j]]
        };
        let d1 = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
        let d2 = [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
        let mut dxx = [ZERO; 2];
        let mut dyy = [ZERO; 2];
        let mut dxy = [ZERO; 2];
        for c in 0..2 {
            for &(a, w) in &d2 {
                dxx[c] += u(a, 0)[c] * (w / (12.0 * h * h));
                dyy[c] += u(0, a)[c] * (w / (12.0 * h * h));
            }
            for &(a, wa) in &d1 {
                for &(b, wb) in &d1 {
                    dxy[c] += u(a, b)[c] * (wa * wb / (144.0 * h * h));
                }
            }
        }
        let u0 = u(0, 0);
        let mut res = [ZERO; 2];
        for i in 0..2 {
            res[i] = (dxx[i] + dyy[i]) * m.mu + u0[i] * m.rho_omega2();
        }
        res[0] += (dxx[0] + dxy[1]) * (m.lambda + m.mu);
        res[1] += (dxy[0] + dyy[1]) * (m.lambda + m.mu);
        res
    }

    fn separated(x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        (x0 - y0).hypot(x1 - y1) > 0.05
    }

    proptest! {
        #[test]
        fn reciprocity(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, y0 in -2.0..2.0f64, y1 in -2.0..2.0f64, om in 0.3..8.0f64) {
            prop_assume!(separated(x0, x1, y0, y1));
            let k = Kernel::time_harmonic(&medium(om));
            let g = k.fundamental([x0, x1], [y0, y1]).unwrap();
            let gt = k.fundamental([y0, y1], [x0, x1]).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((g[i][j] - gt[j][i]).norm() <= 1e-13 * mnorm(&g));
                }
            }
        }

        #[test]
        fn double_layer_matches_finite_differences(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, y0 in -2.0..2.0f64, y1 in -2.0..2.0f64, a in 0.0..6.3f64, om in 0.5..8.0f64) {
            prop_assume!(separated(x0, x1, y0, y1));
            let k = Kernel::time_harmonic(&medium(om));
            let ny = [a.cos(), a.sin()];
            let h = k.double_layer([x0, x1], [y0, y1], ny).unwrap();
            let hf = fd_double_layer(&k, [x0, x1], [y0, y1], ny, 1e-5);
            prop_assert!(mdiff(&h, &hf) <= 1e-6 * mnorm(&h), "{}", mdiff(&h, &hf) / mnorm(&h));
        }

        #[test]
        fn potential_form_equals_double_layer(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, y0 in -2.0..2.0f64, y1 in -2.0..2.0f64, a in 0.0..6.3f64, om in 0.5..8.0f64, stat in proptest::bool::ANY) {
            prop_assume!(separated(x0, x1, y0, y1));
            let med = medium(om);
            let k = if stat { Kernel::elastostatic(&med) } else { Kernel::time_harmonic(&med) };
            let ny = [a.cos(), a.sin()];
            let d = [x0 - y0, x1 - y1];
            let h = k.double_layer_at(d, ny);
            let hp = double_layer_from_potentials(&k, d, ny);
            prop_assert!(mdiff(&h, &hp) <= 1e-12 * mnorm(&h));
        }

        #[test]
        fn double_layer_is_odd_in_normal(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, a in 0.0..6.3f64) {
            prop_assume!(separated(x0, x1, 0.1, 0.2));
            let k = Kernel::time_harmonic(&medium(2.0));
            let ny = [a.cos(), a.sin()];
            let h1 = k.double_layer([x0, x1], [0.1, 0.2], ny).unwrap();
            let h2 = k.double_layer([x0, x1], [0.1, 0.2], [-ny[0], -ny[1]]).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((h1[i][j] + h2[i][j]).norm() <= 1e-15 * mnorm(&h1));
                }
            }
        }

        #[test]
        fn kernels_are_translation_invariant(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, s0 in -5.0..5.0f64, s1 in -5.0..5.0f64) {
            prop_assume!(separated(x0, x1, 0.3, -0.4));
            let k = Kernel::time_harmonic(&medium(3.0));
            let ny = [0.6, 0.8];
            let y = [0.3, -0.4];
            let h1 = k.double_layer([x0, x1], y, ny).unwrap();
            let h2 = k.double_layer([x0 + s0, x1 + s1], [y[0] + s0, y[1] + s1], ny).unwrap();
            prop_assert!(mdiff(&h1, &h2) <= 1e-12 * mnorm(&h1));
            let p = k.eval([x0 - y[0], x1 - y[1]]);
            let b1 = k.bundle(&p, [0.0, 1.0], [1.0, 0.0], ny, [ny[1], -ny[0]]);
            let q = k.eval([(x0 + s0) - (y[0] + s0), (x1 + s1) - (y[1] + s1)]);
            let b2 = k.bundle(&q, [0.0, 1.0], [1.0, 0.0], ny, [ny[1], -ny[0]]);
            prop_assert!(mdiff(&b1.n11, &b2.n11) <= 1e-12 * mnorm(&b1.n11));
            prop_assert!(mdiff(&b1.d00, &b2.d00) <= 1e-12 * mnorm(&b1.d00));
        }

        #[test]
        fn fundamental_solves_navier(x0 in 0.3..2.0f64, x1 in -2.0..2.0f64, j in 0usize..2, om in 0.5..6.0f64) {
            let k = Kernel::time_harmonic(&medium(om));
            let dist = x0.hypot(x1);
            let h = 1e-2 * dist.min(1.0);
            let r = navier_residual_column(&k, [x0, x1], j, h);
            let g = k.fundamental([x0, x1], [0.0, 0.0]).unwrap();
            // each term of the operator is of size |G| k_T² or |G| / r²
            let scale = k.medium.mu * (k.medium.k_t * k.medium.k_t + 1.0 / (dist * dist)) * mnorm(&g);
            prop_assert!(r[0].norm().hypot(r[1].norm()) <= 1e-5 * scale, "{}", r[0].norm().hypot(r[1].norm()) / scale);
        }

        #[test]
        fn adjoint_double_layer_is_transpose_of_swapped(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, a in 0.0..6.3f64) {
            prop_assume!(separated(x0, x1, -0.2, 0.5));
            let k = Kernel::time_harmonic(&medium(2.5));
            let n = [a.cos(), a.sin()];
            let y = [-0.2, 0.5];
            // T^{n_x} G(x - y) at x equals the double layer with roles swapped
            let kx = k.adjoint_double_layer([x0, x1], y, n).unwrap();
            let hy = k.double_layer(y, [x0, x1], n).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((kx[i][j] - hy[j][i]).norm() <= 1e-12 * mnorm(&kx));
                }
            }
        }
    }
}
