//! Scattering of a P-wave by the star-shaped cavity: FDS solve, comparison
//! with the dense solver, and the displacement at a few points.
//!
//! ```bash
//! cargo run --release --example solve_scattering
//! ```

use elastic_fds::harness::relative_error;
use elastic_fds::prelude::*;
use std::time::Instant;

fn main() -> Result<()> {
    let n = 1600;
    let medium = ElasticMedium::from_speeds(3f64.sqrt(), 1.0, 1.0, 2.0)?;
    let mesh = BoundaryMesh::star(&StarCurve::default(), n)?;
    let tree = ClusterTree::new(n, 4)?;
    let problem = Problem::new(&mesh, &medium, medium.default_alpha());
    let wave = IncidentWave::along_angle(0.0);

    let clock = Instant::now();
    let fds = FdsFactorization::build(&problem, &tree, &FdsConfig::default())?;
    let x = fds.solve(&assemble_rhs_leaf_order(&problem, &tree, &wave))?;
    println!("FDS build + solve: {:.2} s", clock.elapsed().as_secs_f64());
    for r in &fds.stats.ranks {
        println!("  level {}: ranks {}..{} (mean {:.1})", r.level, r.min, r.max, r.mean);
    }

    let clock = Instant::now();
    let reference = conv_solve(&problem, &tree, &[wave], elastic_fds::assembly::DEFAULT_DENSE_BUDGET)?.remove(0);
    println!("dense solve: {:.2} s", clock.elapsed().as_secs_f64());
    println!("relative difference: {:.3e}", relative_error(&x, &reference));

    let u = leaf_order_to_nodal(&tree, &x);
    let points = [[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [3.0, 3.0]];
    println!("\n      x1      x2      |u1|      |u2|   intensity");
    for s in evaluate_field(&mesh, &medium, &wave, &u, &points)? {
        println!("{:8.2}{:8.2}{:10.4}{:10.4}{:12.4}", s.location[0], s.location[1], s.displacement[0].norm(), s.displacement[1].norm(), s.intensity);
    }
    Ok(())
}
