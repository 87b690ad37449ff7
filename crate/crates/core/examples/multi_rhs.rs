//! One factorization, many incident angles: the first build and solve
//! against each further solve.
//!
//! ```bash
//! cargo run --release --example multi_rhs
//! ```

use elastic_fds::prelude::*;
use std::time::Instant;

fn main() -> Result<()> {
    let n = 1600;
    let medium = ElasticMedium::reference(2.0)?;
    let mesh = BoundaryMesh::star(&StarCurve::default(), n)?;
    let tree = ClusterTree::new(n, 4)?;
    let problem = Problem::new(&mesh, &medium, medium.default_alpha());
    let node = mesh.nearest_node([1.0, 0.0]);

    let clock = Instant::now();
    let fds = FdsFactorization::build(&problem, &tree, &FdsConfig::default())?;
    let first = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let count = 180;
    println!(" angle   intensity at node {node}");
    for j in 0..count {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
        let wave = IncidentWave::along_angle(angle);
        let x = fds.solve(&assemble_rhs_leaf_order(&problem, &tree, &wave))?;
        let u = leaf_order_to_nodal(&tree, &x)[node];
        if j % 20 == 0 {
            println!("{:6.1}{:14.6}", angle.to_degrees(), u[0].norm_sqr() + u[1].norm_sqr());
        }
    }
    let per = clock.elapsed().as_secs_f64() / count as f64;
    println!("build {first:.3} s, per right-hand side {:.2} ms ({:.0}x faster)", per * 1e3, first / per);
    Ok(())
}
