//! Gauss–Legendre rules on `[0, 1]` and a graded variant for integrands
//! with an endpoint singularity at 0.

use std::sync::OnceLock;

const MAX_POINTS: usize = 64;

/// Nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Substitution `t = u^q`: clusters nodes at 0 so that integrands like
    /// `log t` or `t^a` (a > -1) converge quickly.
    pub fn graded(n: usize, q: u32) -> Rule {
        let base = gauss_legendre(n);
        let qf = q as f64;
        let nodes = base.nodes.iter().map(|u| u.powi(q as i32)).collect();
        let weights = base.iter().map(|(u, w)| w * qf * u.powi(q as i32 - 1)).collect();
        Rule { nodes, weights }
    }
}

fn compute(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached `n`-point Gauss–Legendre rule on `[0, 1]` (`1 <= n <= 64`).
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static TABLE: OnceLock<Vec<Rule>> = OnceLock::new();
    assert!((1..=MAX_POINTS).contains(&n), "Gauss-Legendre order {n} out of range");
    let table = TABLE.get_or_init(|| (0..=MAX_POINTS).map(|k| if k == 0 { Rule { nodes: vec![], weights: vec![] } } else { compute(k) }).collect());
    &table[n]
}
