//! Bessel and Hankel functions of integer order 0 and 1 for real positive
//! arguments.
//!
//! Three regimes are used:
//! * `x <= 5`: ascending power series;
//! * `5 < x <= 25`: Miller backward recurrence for `J_n`, normalised by
//!   `J_0 + 2 Σ J_2k = 1`, with Neumann series for `Y_0` and `Y_1`;
//! * `x > 25`: Hankel asymptotic expansion.
//!
//! `H1reg(x) = H_1(x) + 2i/(πx)` is exposed separately because the kernels
//! combine first-order Hankel terms whose `1/x` singularities cancel exactly.

use crate::c64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX: f64 = 5.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

/// `J0, Y0, J1` and `Y1 + 2/(πx)` at one argument.
#[derive(Clone, Copy, Debug)]
pub struct Bessel01 {
    pub j0: f64,
    pub y0: f64,
    pub j1: f64,
    pub y1_reg: f64,
}

/// First-kind Hankel functions of order 0 and 1 at one argument.
#[derive(Clone, Copy, Debug)]
pub struct Hankel01 {
    pub h0: c64,
    /// `H_1(x) + 2i/(πx)`: bounded as `x → 0`.
    pub h1_reg: c64,
    pub x: f64,
}

impl Hankel01 {
    pub fn h1(&self) -> c64 {
        self.h1_reg - c64::new(0.0, FRAC_2_PI / self.x)
    }
}

/// Evaluates `J0, Y0, J1, Y1reg` for `x > 0`.
pub fn bessel01(x: f64) -> Bessel01 {
    debug_assert!(x > 0.0, "bessel01 needs a positive argument, got {x}");
    if x <= SERIES_MAX {
        series(x)
    } else if x <= ASYMPTOTIC_MIN {
        miller(x)
    } else {
        asymptotic(x)
    }
}

pub fn hankel01(x: f64) -> Hankel01 {
    let b = bessel01(x);
    Hankel01 { h0: c64::new(b.j0, b.y0), h1_reg: c64::new(b.j1, b.y1_reg), x }
}

pub fn hankel1_0(x: f64) -> c64 {
    hankel01(x).h0
}

pub fn hankel1_1(x: f64) -> c64 {
    hankel01(x).h1()
}

fn series(x: f64) -> Bessel01 {
    let t = 0.25 * x * x;
    let log_term = (0.5 * x).ln();

    // a_k = (-t)^k / (k!)^2, b_k = (-t)^k / (k! (k+1)!)
    let mut a = 1.0;
    let mut b = 1.0;
    let mut j0 = 1.0;
    let mut j1s = 1.0;
    let mut y0s = 0.0;
    // ψ(k+1) + ψ(k+2) = -2γ + H_k + H_{k+1}
    let mut harmonic = 0.0;
    let mut y1s = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..200 {
        let kf = k as f64;
        a *= -t / (kf * kf);
        b *= -t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        j0 += a;
        j1s += b;
        y0s -= harmonic * a;
        y1s += (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0)) * b;
        if a.abs() < 1e-18 && b.abs() < 1e-18 {
            break;
        }
    }
    let j1 = 0.5 * x * j1s;
    let y0 = FRAC_2_PI * ((log_term + EULER_GAMMA) * j0 + y0s);
    let y1_reg = FRAC_2_PI * log_term * j1 - x / (2.0 * PI) * y1s;
    Bessel01 { j0, y0, j1, y1_reg }
}

fn miller(x: f64) -> Bessel01 {
    let mut m = (1.2 * x + 40.0) as usize;
    m += m % 2;
    let inv_x = 1.0 / x;

    let mut jp1 = 0.0; // J_{n+1}
    let mut jn = 1e-30; // J_n, starting at n = m
    let mut norm = 0.0; // Σ_{k≥1} J_2k
    let mut y0s = 0.0; // Σ_{k≥1} (-1)^k J_2k / k
    let mut y1s = 0.0; // Σ_{k≥1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    let mut j_odd_above = 0.0; // J_{2k+1} for the current even index 2k
    let mut j1 = 0.0;

    let mut n = m;
    loop {
        if n % 2 == 0 && n > 0 {
            let k = (n / 2) as f64;
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            norm += jn;
            y0s += sign * jn / k;
            j_odd_above = jp1;
        }
        if n % 2 == 1 {
            // n = 2k - 1, contributes to the k-th Y1 term together with J_{2k+1}.
            let k = ((n + 1) / 2) as f64;
            let sign = if ((n + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            y1s += sign * (jn - j_odd_above) / k;
        }
        if n == 1 {
            j1 = jn;
        }
        if n == 0 {
            break;
        }
        let jm1 = 2.0 * n as f64 * inv_x * jn - jp1;
        jp1 = jn;
        jn = jm1;
        n -= 1;
        if jn.abs() > 1e250 {
            let s = 1e-250;
            jn *= s;
            jp1 *= s;
            norm *= s;
            y0s *= s;
            y1s *= s;
            j_odd_above *= s;
            j1 *= s;
        }
    }
    let scale = 1.0 / (jn + 2.0 * norm);
    let j0 = jn * scale;
    let j1 = j1 * scale;
    let y0s = y0s * scale;
    let y1s = y1s * scale;
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let y0 = FRAC_2_PI * (lg * j0 - 2.0 * y0s);
    let y1 = -FRAC_2_PI * j0 * inv_x + FRAC_2_PI * lg * j1 + FRAC_2_PI * y1s;
    Bessel01 { j0, y0, j1, y1_reg: y1 + FRAC_2_PI * inv_x }
}

/// Σ_k i^k a_k(ν) / x^k for the Hankel asymptotic expansion.
fn asymptotic_sum(nu2x4: f64, x: f64) -> c64 {
    let mut term = c64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= c64::new(0.0, (nu2x4 - odd * odd) / (8.0 * kf * x));
        let mag = term.norm();
        if mag > prev {
            break;
        }
        sum += term;
        prev = mag;
        if mag < 1e-17 {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64) -> Bessel01 {
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = x.sin_cos();
    let e = c64::new(c, s);
    // e^{i(x - π/4)} and e^{i(x - 3π/4)}
    let ph0 = e * c64::from_polar(1.0, -FRAC_PI_4);
    let ph1 = e * c64::from_polar(1.0, -3.0 * FRAC_PI_4);
    let h0 = ph0 * asymptotic_sum(0.0, x) * amp;
    let h1 = ph1 * asymptotic_sum(4.0, x) * amp;
    Bessel01 { j0: h0.re, y0: h0.im, j1: h1.re, y1_reg: h1.im + FRAC_2_PI / x }
}
