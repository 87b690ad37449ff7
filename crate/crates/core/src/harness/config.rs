//! Experiment configuration.

use crate::assembly::QuadratureConfig;
use crate::c64;
use crate::compression::ProxyConfig;
use crate::error::{param, Result};
use crate::fds::FdsConfig;
use crate::geometry::{BoundaryMesh, ClusterTree, StarCurve};
use crate::medium::{ElasticMedium, IncidentWave};
use crate::postprocess::SolverChoice;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// The experiments the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Multi-level FDS error against the dense solver for several `ε`.
    ErrorTable,
    /// Single-level (`ℓ0 = L − 1`) error next to the multi-level error.
    SingleLevelError,
    /// Wall time over a size ladder and the fitted exponent.
    Scaling,
    /// First solve against each further right-hand side.
    MultiRhs,
    /// Wall time over a frequency range.
    OmegaTime,
    /// Error over a frequency range.
    OmegaError,
    /// Boundary intensity at the node nearest `(1, 0)` over frequency.
    IntensitySweep,
    /// Interior residual of the representation under refinement.
    NullField,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ErrorTable => "error_table",
            Experiment::SingleLevelError => "single_level_error",
            Experiment::Scaling => "scaling",
            Experiment::MultiRhs => "multi_rhs",
            Experiment::OmegaTime => "omega_time",
            Experiment::OmegaError => "omega_error",
            Experiment::IntensitySweep => "intensity_sweep",
            Experiment::NullField => "null_field",
        }
    }
}

/// Which solver an experiment uses where it has a choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Fds,
    Conv,
    ConvNonBm,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Fds => "fds",
            SolverKind::Conv => "conv",
            SolverKind::ConvNonBm => "conv-non-bm",
        }
    }
}

/// Everything that determines an experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Element counts `N` to run.
    pub sizes: Vec<usize>,
    /// Dense-solver sizes for the scaling ladder.
    pub conv_sizes: Vec<usize>,
    /// Nodes per leaf; sets `L = log2(N / n)` unless `levels` is given.
    pub leaf_size: usize,
    pub levels: Option<usize>,
    pub ell0: usize,
    pub epsilons: Vec<f64>,
    pub omega: f64,
    pub omega_max: Option<f64>,
    pub omega_step: f64,
    /// Burton–Miller coupling; `None` uses `i / k_T`.
    pub alpha: Option<[f64; 2]>,
    pub incident_angle_deg: f64,
    pub rhs_count: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub proxy: ProxyConfig,
    pub quadrature: QuadratureConfig,
    pub solver: SolverKind,
    /// Timed repetitions (median) for `N ≤ 1600`, after one warm-up run.
    pub repeats: usize,
    pub seed: u64,
    /// Random interior probes added to the fixed null-field set.
    pub extra_probes: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults of each experiment.
    pub fn new(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            sizes: vec![400],
            conv_sizes: vec![400, 800, 1600, 3200],
            leaf_size: 100,
            levels: None,
            ell0: 1,
            epsilons: vec![1e-8],
            omega: 2.0,
            omega_max: None,
            omega_step: 0.5,
            alpha: None,
            incident_angle_deg: 0.0,
            rhs_count: 180,
            threads: 0,
            proxy: ProxyConfig::default(),
            quadrature: QuadratureConfig::default(),
            solver: SolverKind::Fds,
            repeats: 3,
            seed: 0,
            extra_probes: 16,
            out: None,
        };
        match experiment {
            Experiment::ErrorTable => {
                c.sizes = vec![400, 1600, 6400];
                c.epsilons = vec![1e-8, 1e-10];
            }
            Experiment::SingleLevelError => c.sizes = vec![400, 800, 1600, 3200],
            Experiment::Scaling => c.sizes = vec![800, 1600, 3200, 6400, 12800, 25600],
            Experiment::MultiRhs => c.sizes = vec![1600],
            Experiment::OmegaTime | Experiment::OmegaError => {
                c.sizes = vec![1600];
                c.omega = 0.5;
                c.omega_max = Some(8.0);
            }
            Experiment::IntensitySweep => {
                c.sizes = vec![800];
                c.omega = 0.5;
                c.omega_max = Some(8.0);
                c.omega_step = 0.05;
            }
            Experiment::NullField => {
                c.sizes = vec![400, 800, 1600];
                c.epsilons = vec![1e-10];
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return param("at least one size is required");
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return param(format!("tolerances must be positive, got {:?}", self.epsilons));
        }
        if !(self.omega > 0.0) {
            return param(format!("omega must be positive, got {}", self.omega));
        }
        if let Some(m) = self.omega_max {
            if !(m >= self.omega) || !(self.omega_step > 0.0) {
                return param(format!("invalid frequency range {}..{} step {}", self.omega, m, self.omega_step));
            }
        }
        if self.rhs_count == 0 {
            return param("rhs count must be positive");
        }
        self.proxy.validate()?;
        for &n in self.sizes.iter().chain(&self.conv_sizes) {
            self.tree(n)?;
        }
        Ok(())
    }

    /// Cluster tree for `n` elements.
    pub fn tree(&self, n: usize) -> Result<ClusterTree> {
        let levels = match self.levels {
            Some(l) => l,
            None => {
                if self.leaf_size == 0 || n % self.leaf_size != 0 || !(n / self.leaf_size).is_power_of_two() {
                    return param(format!("N = {n} is not the leaf size {} times a power of two", self.leaf_size));
                }
                (n / self.leaf_size).trailing_zeros() as usize
            }
        };
        ClusterTree::new(n, levels)
    }

    pub fn mesh(&self, n: usize) -> Result<BoundaryMesh> {
        BoundaryMesh::star(&StarCurve::default(), n)
    }

    pub fn medium(&self, omega: f64) -> Result<ElasticMedium> {
        ElasticMedium::reference(omega)
    }

    pub fn alpha(&self, medium: &ElasticMedium) -> c64 {
        match self.alpha {
            Some([re, im]) => c64::new(re, im),
            None => medium.default_alpha(),
        }
    }

    pub fn wave(&self) -> IncidentWave {
        IncidentWave::along_angle(self.incident_angle_deg.to_radians())
    }

    pub fn fds(&self, epsilon: f64, ell0: usize) -> FdsConfig {
        FdsConfig { epsilon, ell0, proxy: self.proxy, exact_sampling: false }
    }

    pub fn solver_choice(&self) -> SolverChoice {
        match self.solver {
            SolverKind::Fds => SolverChoice::Fds(self.fds(self.epsilons[0], self.ell0)),
            SolverKind::Conv => SolverChoice::Conv,
            SolverKind::ConvNonBm => SolverChoice::ConvNonBm,
        }
    }

    /// `omega, omega + step, …` up to `omega_max` inclusive (or just `omega`).
    pub fn omegas(&self) -> Vec<f64> {
        match self.omega_max {
            None => vec![self.omega],
            Some(max) => {
                let count = ((max - self.omega) / self.omega_step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| self.omega + i as f64 * self.omega_step).collect()
            }
        }
    }

    /// Incident angles in degrees, evenly spaced over the full circle from
    /// `incident_angle_deg`.
    pub fn angles_deg(&self) -> Vec<f64> {
        (0..self.rhs_count).map(|j| self.incident_angle_deg + 360.0 * j as f64 / self.rhs_count as f64).collect()
    }
}
