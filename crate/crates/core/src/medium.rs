//! Isotropic elastic medium, plane longitudinal incident wave, and the
//! Burton–Miller coupling constant.

use crate::c64;
use crate::error::{param, Result};
use serde::{Deserialize, Serialize};

/// Homogeneous isotropic medium at a fixed angular frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticMedium {
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    pub c_l: f64,
    pub c_t: f64,
    pub k_l: f64,
    pub k_t: f64,
}

impl ElasticMedium {
    /// Builds the medium from wave speeds, density and angular frequency.
    pub fn from_speeds(c_l: f64, c_t: f64, rho: f64, omega: f64) -> Result<Self> {
        if !(c_l > 0.0 && c_t > 0.0 && rho > 0.0 && omega > 0.0) {
            return param(format!(
                "speeds, density and frequency must be positive (c_L={c_l}, c_T={c_t}, rho={rho}, omega={omega})"
            ));
        }
        if c_l <= c_t {
            return param(format!("longitudinal speed {c_l} must exceed transverse speed {c_t}"));
        }
        let mu = rho * c_t * c_t;
        let lambda = rho * (c_l * c_l - 2.0 * c_t * c_t);
        Self::from_lame(lambda, mu, rho, omega)
    }

    /// Builds the medium from Lamé constants.
    pub fn from_lame(lambda: f64, mu: f64, rho: f64, omega: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda + 2.0 * mu > 0.0 && rho > 0.0 && omega > 0.0) {
            return param(format!(
                "need mu > 0, lambda + 2 mu > 0, rho > 0, omega > 0 (lambda={lambda}, mu={mu}, rho={rho}, omega={omega})"
            ));
        }
        let c_l = ((lambda + 2.0 * mu) / rho).sqrt();
        let c_t = (mu / rho).sqrt();
        Ok(Self { rho, lambda, mu, omega, c_l, c_t, k_l: omega / c_l, k_t: omega / c_t })
    }

    /// The reference material used throughout the experiments:
    /// `c_L = √3`, `c_T = 1`, `ρ = 1`.
    pub fn reference(omega: f64) -> Result<Self> {
        Self::from_speeds(3f64.sqrt(), 1.0, 1.0, omega)
    }

    /// Same material at another frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::from_lame(self.lambda, self.mu, self.rho, omega)
    }

    /// `λ + 2μ`
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    /// `ρω²`
    pub fn rho_omega2(&self) -> f64 {
        self.rho * self.omega * self.omega
    }

    /// Poisson ratio of the plane-strain material.
    pub fn poisson(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    /// Elastic tensor `C_ipjq = λ δ_ip δ_jq + μ (δ_ij δ_pq + δ_iq δ_pj)`.
    pub fn elastic_tensor(&self, i: usize, p: usize, j: usize, q: usize) -> f64 {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        self.lambda * d(i, p) * d(j, q) + self.mu * (d(i, j) * d(p, q) + d(i, q) * d(p, j))
    }

    /// Default Burton–Miller coupling `α = i / k_T`.
    pub fn default_alpha(&self) -> c64 {
        c64::new(0.0, 1.0 / self.k_t)
    }

    /// Traction `t_i = C_ipjq ∂_q u_j n_p` of a displacement gradient `grad[j][q] = ∂_q u_j`.
    pub fn traction(&self, grad: &[[c64; 2]; 2], n: [f64; 2]) -> [c64; 2] {
        let div = grad[0][0] + grad[1][1];
        let mut t = [c64::new(0.0, 0.0); 2];
        for (i, ti) in t.iter_mut().enumerate() {
            let mut s = div * (self.lambda * n[i]);
            for p in 0..2 {
                s += (grad[p][i] + grad[i][p]) * (self.mu * n[p]);
            }
            *ti = s;
        }
        t
    }
}

/// Plane longitudinal wave `u = A d exp(-i k_L d·x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentWave {
    pub direction: [f64; 2],
    pub amplitude: c64,
}

impl IncidentWave {
    pub fn new(direction: [f64; 2], amplitude: c64) -> Result<Self> {
        let len = direction[0].hypot(direction[1]);
        if !((len - 1.0).abs() < 1e-12) {
            return param(format!("propagation direction must be a unit vector, |d| = {len}"));
        }
        Ok(Self { direction, amplitude })
    }

    /// Unit amplitude wave propagating at `angle` radians from the x1 axis.
    pub fn along_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { direction: [c, s], amplitude: c64::new(1.0, 0.0) }
    }

    fn phase(&self, m: &ElasticMedium, x: [f64; 2]) -> c64 {
        let arg = -m.k_l * (self.direction[0] * x[0] + self.direction[1] * x[1]);
        self.amplitude * c64::from_polar(1.0, arg)
    }

    pub fn displacement(&self, m: &ElasticMedium, x: [f64; 2]) -> [c64; 2] {
        let e = self.phase(m, x);
        [e * self.direction[0], e * self.direction[1]]
    }

    /// Analytic gradient `grad[j][q] = ∂_q u_j`.
    pub fn gradient(&self, m: &ElasticMedium, x: [f64; 2]) -> [[c64; 2]; 2] {
        let e = self.phase(m, x) * c64::new(0.0, -m.k_l);
        let d = self.direction;
        [[e * (d[0] * d[0]), e * (d[0] * d[1])], [e * (d[1] * d[0]), e * (d[1] * d[1])]]
    }

    pub fn traction(&self, m: &ElasticMedium, x: [f64; 2], n: [f64; 2]) -> [c64; 2] {
        m.traction(&self.gradient(m, x), n)
    }

    /// The same wave with a scaled amplitude.
    pub fn scaled(&self, factor: c64) -> Self {
        Self { direction: self.direction, amplitude: self.amplitude * factor }
    }
}

/// Free function form of [`IncidentWave::displacement`].
pub fn incident_displacement(w: &IncidentWave, m: &ElasticMedium, x: [f64; 2]) -> [c64; 2] {
    w.displacement(m, x)
}

/// Free function form of [`IncidentWave::traction`].
pub fn incident_traction(w: &IncidentWave, m: &ElasticMedium, x: [f64; 2], n: [f64; 2]) -> [c64; 2] {
    w.traction(m, x, n)
}
