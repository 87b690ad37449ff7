//! Experiment drivers. Each returns a table plus a run report; [`run`]
//! dispatches on the configured experiment inside a thread pool of the
//! configured size.

use super::config::{Experiment, ExperimentConfig, SolverKind};
use super::report::{Outcome, RunReport, Table, Value};
use crate::assembly::{assemble_rhs_leaf_order, dense_bytes, Problem, DEFAULT_DENSE_BUDGET};
use crate::c64;
use crate::dense::conv_solve;
use crate::error::{Error, Result};
use crate::fds::{FdsConfig, FdsFactorization, SolveTimes};
use crate::geometry::ClusterTree;
use crate::linalg::{column, norm2, to_vec};
use crate::medium::IncidentWave;
use crate::postprocess::{intensity_sweep, max_adjacent_jump, null_field_probes, null_field_residual, solve_nodal};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Largest `N` whose timings are the median of repeated runs.
pub const REPEAT_LIMIT: usize = 1600;

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let clock = Instant::now();
    let mut outcome = with_threads(cfg.threads, || match cfg.experiment {
        Experiment::ErrorTable => run_error_table(cfg),
        Experiment::SingleLevelError => run_single_level_table(cfg),
        Experiment::Scaling => run_scaling(cfg),
        Experiment::MultiRhs => run_multi_rhs(cfg),
        Experiment::OmegaTime | Experiment::OmegaError => run_omega_suite(cfg),
        Experiment::IntensitySweep => run_intensity_sweep(cfg),
        Experiment::NullField => run_null_field(cfg),
    })??;
    outcome.report.total_seconds = clock.elapsed().as_secs_f64();
    Ok(outcome)
}

/// Runs `f` on a dedicated pool of `threads` workers (0: all cores).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start a pool of {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

/// Resolves a thread request of 0 to the number of available cores.
pub fn resolve_threads(threads: usize) -> usize {
    if threads > 0 {
        threads
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let clock = Instant::now();
    let v = f();
    (v, clock.elapsed().as_secs_f64())
}

/// Wall time of `f`. For `n ≤ REPEAT_LIMIT` and `repeats > 1` a warm-up run
/// is discarded and the median of `repeats` runs is returned; larger runs are
/// timed once. The value of the last run is returned.
pub fn measure<T>(n: usize, repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    if n > REPEAT_LIMIT || repeats <= 1 {
        let (v, t) = timed(&mut f);
        return Ok((v?, t));
    }
    f()?;
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let (v, t) = timed(&mut f);
        last = Some(v?);
        times.push(t);
    }
    times.sort_by(f64::total_cmp);
    Ok((last.expect("at least one run"), times[repeats / 2]))
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_error(a: &[c64], b: &[c64]) -> f64 {
    let d: Vec<c64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// An FDS solve with its timings.
pub struct FdsRun {
    pub x: Vec<c64>,
    pub factorization: FdsFactorization,
    pub build_seconds: f64,
    pub rhs_seconds: f64,
    pub solve: SolveTimes,
}

impl FdsRun {
    pub fn total_seconds(&self) -> f64 {
        self.build_seconds + self.rhs_seconds + self.solve.total()
    }

    pub fn max_rank(&self) -> usize {
        self.factorization.stats.ranks.iter().map(|r| r.max).max().unwrap_or(0)
    }

    fn record(&self, report: &mut RunReport) {
        let s = &self.factorization.stats;
        let p = &mut report.phases;
        p.assembly = s.assembly_seconds + self.rhs_seconds;
        p.compression = s.compression_seconds;
        p.factorization = s.factorization_seconds;
        p.top_solve = s.top_seconds + self.solve.top;
        p.upward = self.solve.upward;
        p.downward = self.solve.downward;
        report.ranks = s.ranks.clone();
        report.note_memory(s.bytes as u64);
    }
}

pub fn fds_run(problem: &Problem, tree: &ClusterTree, config: &FdsConfig, wave: &IncidentWave) -> Result<FdsRun> {
    let (factorization, build_seconds) = timed(|| FdsFactorization::build(problem, tree, config));
    let factorization = factorization?;
    let (rhs, rhs_seconds) = timed(|| assemble_rhs_leaf_order(problem, tree, wave));
    let (x, solve) = factorization.solve_timed(column(&rhs).as_ref())?;
    Ok(FdsRun { x: to_vec(x.as_ref()), factorization, build_seconds, rhs_seconds, solve })
}

/// Dense solution and its wall time.
pub fn conv_run(problem: &Problem, tree: &ClusterTree, wave: &IncidentWave) -> Result<(Vec<c64>, f64)> {
    let (x, t) = timed(|| conv_solve(problem, tree, std::slice::from_ref(wave), DEFAULT_DENSE_BUDGET));
    Ok((x?.remove(0), t))
}

/// Multi-level FDS error against the dense solution.
pub fn run_error_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["n_elements", "levels", "ell0", "epsilon", "relative_error", "max_rank", "fds_build_seconds", "fds_solve_seconds", "conv_seconds"]);
    let medium = cfg.medium(cfg.omega)?;
    let wave = cfg.wave();
    for &n in &cfg.sizes {
        let mesh = cfg.mesh(n)?;
        let tree = cfg.tree(n)?;
        let problem = Problem::new(&mesh, &medium, cfg.alpha(&medium)).with_quadrature(cfg.quadrature);
        let (xc, tc) = conv_run(&problem, &tree, &wave)?;
        report.note_memory(dense_bytes(n));
        for &eps in &cfg.epsilons {
            let run = fds_run(&problem, &tree, &cfg.fds(eps, cfg.ell0), &wave)?;
            let err = relative_error(&run.x, &xc);
            log::info!("N = {n}, eps = {eps:e}: relative error {err:e}");
            table.push(vec![
                n.into(),
                tree.levels.into(),
                cfg.ell0.into(),
                eps.into(),
                err.into(),
                run.max_rank().into(),
                run.build_seconds.into(),
                run.solve.total().into(),
                tc.into(),
            ]);
            report.metric(format!("error_n{n}_eps{eps:e}"), err);
            run.record(&mut report);
        }
    }
    Ok(Outcome { table, report })
}

/// Single-level (`ℓ0 = L − 1`) error next to the multi-level error.
pub fn run_single_level_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["n_elements", "levels", "ell0", "epsilon", "single_level_error", "multi_level_error"]);
    let medium = cfg.medium(cfg.omega)?;
    let wave = cfg.wave();
    for &n in &cfg.sizes {
        let mesh = cfg.mesh(n)?;
        let tree = cfg.tree(n)?;
        let problem = Problem::new(&mesh, &medium, cfg.alpha(&medium)).with_quadrature(cfg.quadrature);
        let (xc, _) = conv_run(&problem, &tree, &wave)?;
        report.note_memory(dense_bytes(n));
        let single = tree.levels.saturating_sub(1);
        for &eps in &cfg.epsilons {
            let s = fds_run(&problem, &tree, &cfg.fds(eps, single), &wave)?;
            let m = fds_run(&problem, &tree, &cfg.fds(eps, cfg.ell0), &wave)?;
            let (es, em) = (relative_error(&s.x, &xc), relative_error(&m.x, &xc));
            table.push(vec![n.into(), tree.levels.into(), single.into(), eps.into(), es.into(), em.into()]);
            report.metric(format!("single_level_error_n{n}_eps{eps:e}"), es);
            report.metric(format!("multi_level_error_n{n}_eps{eps:e}"), em);
            m.record(&mut report);
        }
    }
    Ok(Outcome { table, report })
}

/// FDS and dense wall time over size ladders, on one core and on all
/// configured cores, with fitted exponents.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["solver", "threads", "n_elements", "seconds", "max_rank"]);
    let medium = cfg.medium(cfg.omega)?;
    let wave = cfg.wave();
    let alpha = cfg.alpha(&medium);
    let mut counts = vec![1, resolve_threads(cfg.threads)];
    counts.dedup();
    for &threads in &counts {
        with_threads(threads, || -> Result<()> {
            let mut times = Vec::new();
            for &n in &cfg.sizes {
                let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
                let problem = Problem::new(&mesh, &medium, alpha).with_quadrature(cfg.quadrature);
                let (run, t) = measure(n, cfg.repeats, || fds_run(&problem, &tree, &cfg.fds(cfg.epsilons[0], cfg.ell0), &wave))?;
                log::info!("fds N = {n}, {threads} thread(s): {t:.3} s");
                table.push(vec!["fds".into(), threads.into(), n.into(), t.into(), run.max_rank().into()]);
                run.record(&mut report);
                times.push(t);
            }
            let ns: Vec<f64> = cfg.sizes.iter().map(|&n| n as f64).collect();
            if ns.len() > 1 {
                report.metric(format!("exponent_fds_threads{threads}"), fit_exponent(&ns, &times));
            }
            let mut times = Vec::new();
            for &n in &cfg.conv_sizes {
                let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
                let problem = Problem::new(&mesh, &medium, alpha).with_quadrature(cfg.quadrature);
                let (_, t) = measure(n, cfg.repeats, || conv_run(&problem, &tree, &wave))?;
                log::info!("conv N = {n}, {threads} thread(s): {t:.3} s");
                table.push(vec!["conv".into(), threads.into(), n.into(), t.into(), 0usize.into()]);
                report.note_memory(dense_bytes(n));
                times.push(t);
            }
            let ns: Vec<f64> = cfg.conv_sizes.iter().map(|&n| n as f64).collect();
            if ns.len() > 1 {
                report.metric(format!("exponent_conv_threads{threads}"), fit_exponent(&ns, &times));
            }
            Ok(())
        })??;
    }
    Ok(Outcome { table, report })
}

/// Build plus first solve, then one solve per further incident angle. Every
/// solution is compared with the same right-hand side solved in one batch,
/// and a few against a freshly built factorization.
pub fn run_multi_rhs(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["rhs_index", "angle_deg", "seconds", "deviation_from_batched"]);
    let n = cfg.sizes[0];
    let medium = cfg.medium(cfg.omega)?;
    let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
    let problem = Problem::new(&mesh, &medium, cfg.alpha(&medium)).with_quadrature(cfg.quadrature);
    let fds = cfg.fds(cfg.epsilons[0], cfg.ell0);
    let angles = cfg.angles_deg();
    let waves: Vec<IncidentWave> = angles.iter().map(|a| IncidentWave::along_angle(a.to_radians())).collect();

    let (first, t_first) = timed(|| fds_run(&problem, &tree, &fds, &waves[0]));
    let first = first?;
    let f = &first.factorization;
    let mut xs = vec![first.x.clone()];
    let mut seconds = vec![t_first];
    for w in &waves[1..] {
        let (x, t) = timed(|| f.solve(&assemble_rhs_leaf_order(&problem, &tree, w)));
        xs.push(x?);
        seconds.push(t);
    }

    let dim = 2 * n;
    let rhs: Vec<Vec<c64>> = waves.iter().map(|w| assemble_rhs_leaf_order(&problem, &tree, w)).collect();
    let batched = f.solve_many(Mat::from_fn(dim, rhs.len(), |i, j| rhs[j][i]).as_ref())?;
    let mut max_dev: f64 = 0.0;
    for (j, x) in xs.iter().enumerate() {
        let b: Vec<c64> = (0..dim).map(|i| batched[(i, j)]).collect();
        let dev = relative_error(x, &b);
        max_dev = max_dev.max(dev);
        table.push(vec![j.into(), angles[j].into(), seconds[j].into(), dev.into()]);
    }

    let fresh = FdsFactorization::build(&problem, &tree, &fds)?;
    let mut fresh_dev: f64 = 0.0;
    for j in [0, xs.len() / 2, xs.len() - 1] {
        fresh_dev = fresh_dev.max(relative_error(&xs[j], &fresh.solve(&rhs[j])?));
    }

    let extra = &seconds[1..];
    let mean_extra = if extra.is_empty() { 0.0 } else { extra.iter().sum::<f64>() / extra.len() as f64 };
    first.record(&mut report);
    report.phases.per_rhs = mean_extra;
    report.metric("first_seconds", t_first);
    report.metric("mean_extra_seconds", mean_extra);
    report.metric("extra_fraction", mean_extra / t_first);
    report.metric("speedup", t_first / mean_extra);
    report.metric("max_deviation_from_batched", max_dev);
    report.metric("max_deviation_from_fresh", fresh_dev);
    Ok(Outcome { table, report })
}

/// FDS and dense time and FDS error over the frequency range.
pub fn run_omega_suite(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["omega", "fds_seconds", "conv_seconds", "relative_error", "max_rank"]);
    let n = cfg.sizes[0];
    let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
    let wave = cfg.wave();
    let (mut tf, mut tc, mut errs) = (Vec::new(), Vec::new(), Vec::new());
    for omega in cfg.omegas() {
        let medium = cfg.medium(omega)?;
        let problem = Problem::new(&mesh, &medium, cfg.alpha(&medium)).with_quadrature(cfg.quadrature);
        let (run, t_fds) = measure(n, cfg.repeats, || fds_run(&problem, &tree, &cfg.fds(cfg.epsilons[0], cfg.ell0), &wave))?;
        let (xc, t_conv) = measure(n, cfg.repeats, || conv_run(&problem, &tree, &wave).map(|r| r.0))?;
        let err = relative_error(&run.x, &xc);
        log::info!("omega = {omega}: fds {t_fds:.3} s, conv {t_conv:.3} s, error {err:e}");
        table.push(vec![omega.into(), t_fds.into(), t_conv.into(), err.into(), run.max_rank().into()]);
        run.record(&mut report);
        report.note_memory(dense_bytes(n));
        tf.push(t_fds);
        tc.push(t_conv);
        errs.push(err);
    }
    report.metric("max_relative_error", errs.iter().copied().fold(0.0, f64::max));
    report.metric("fds_time_growth", tf[tf.len() - 1] / tf[0]);
    report.metric("conv_time_growth", tc[tc.len() - 1] / tc[0]);
    Ok(Outcome { table, report })
}

/// Intensity at the boundary node nearest `(1, 0)` over frequency.
pub fn run_intensity_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["omega", "solver", "intensity"]);
    let n = cfg.sizes[0];
    let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
    let node = mesh.nearest_node([1.0, 0.0]);
    let base = cfg.medium(cfg.omega)?;
    let alpha = cfg.alpha.map(|[re, im]| c64::new(re, im));
    let points = intensity_sweep(&mesh, &base, &cfg.omegas(), &cfg.wave(), &tree, &cfg.solver_choice(), node, alpha)?;
    for p in &points {
        table.push(vec![p.omega.into(), cfg.solver.name().into(), p.intensity.into()]);
    }
    report.metric("node", node as f64);
    report.metric("node_x", mesh.nodes[node][0]);
    report.metric("node_y", mesh.nodes[node][1]);
    report.metric("max_adjacent_jump", max_adjacent_jump(&points));
    if cfg.solver != SolverKind::Fds {
        report.note_memory(dense_bytes(n));
    }
    Ok(Outcome { table, report })
}

/// Interior probes: the fixed circle plus `extra` seeded random points in
/// the disc of radius 0.3.
pub fn probes(seed: u64, extra: usize) -> Vec<[f64; 2]> {
    let mut pts = null_field_probes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        let r = 0.3 * rng.gen::<f64>().sqrt();
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        pts.push([r * t.cos(), r * t.sin()]);
    }
    pts
}

/// Interior residual of the representation for each size.
pub fn run_null_field(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut report = RunReport::new(cfg.clone());
    let mut table = Table::new(&["n_elements", "solver", "residual", "reduction"]);
    let medium = cfg.medium(cfg.omega)?;
    let wave = cfg.wave();
    let pts = probes(cfg.seed, cfg.extra_probes);
    let mut prev: Option<f64> = None;
    for &n in &cfg.sizes {
        let (mesh, tree) = (cfg.mesh(n)?, cfg.tree(n)?);
        let problem = Problem::new(&mesh, &medium, cfg.alpha(&medium)).with_quadrature(cfg.quadrature);
        let u = solve_nodal(&problem, &tree, &wave, &cfg.solver_choice())?;
        let res = null_field_residual(&mesh, &medium, &wave, &u, &pts)?;
        let reduction = prev.map_or(f64::NAN, |p| p / res);
        log::info!("N = {n}: null-field residual {res:e}");
        table.push(vec![n.into(), cfg.solver.name().into(), res.into(), Value::Float(reduction)]);
        report.metric(format!("residual_n{n}"), res);
        prev = Some(res);
    }
    Ok(Outcome { table, report })
}
