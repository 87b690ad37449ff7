//! Total field on a line through the scatterer's shadow, and the null-field
//! residual inside the cavity under mesh refinement.
//!
//! ```bash
//! cargo run --release --example field_and_null_field
//! ```

use elastic_fds::postprocess::{null_field_probes, solve_nodal};
use elastic_fds::prelude::*;

fn main() -> Result<()> {
    let medium = ElasticMedium::reference(2.0)?;
    let wave = IncidentWave::along_angle(0.0);
    let solver = SolverChoice::Fds(FdsConfig { epsilon: 1e-10, ..FdsConfig::default() });

    let mut previous: Option<f64> = None;
    for (n, levels) in [(400, 2), (800, 3), (1600, 4)] {
        let mesh = BoundaryMesh::star(&StarCurve::default(), n)?;
        let tree = ClusterTree::new(n, levels)?;
        let problem = Problem::new(&mesh, &medium, medium.default_alpha());
        let u = solve_nodal(&problem, &tree, &wave, &solver)?;
        let res = null_field_residual(&mesh, &medium, &wave, &u, &null_field_probes())?;
        match previous {
            Some(p) => println!("N = {n:5}: interior residual {res:.3e} (reduced {:.1}x)", p / res),
            None => println!("N = {n:5}: interior residual {res:.3e}"),
        }
        previous = Some(res);

        if n == 1600 {
            let points: Vec<[f64; 2]> = (0..9).map(|i| [1.6 + 0.5 * i as f64, 0.0]).collect();
            println!("\n   x1   intensity (incident intensity is 1)");
            for s in evaluate_field(&mesh, &medium, &wave, &u, &points)? {
                println!("{:5.2}{:12.5}", s.location[0], s.intensity);
            }
        }
    }
    Ok(())
}
