//! Boundary intensity near `(1, 0)` over a frequency band, with and without
//! the Burton–Miller coupling. The uncoupled equation is singular at the
//! interior eigenfrequencies of the cavity and shows spikes there.
//!
//! ```bash
//! cargo run --release --example fictitious_frequencies
//! ```

use elastic_fds::prelude::*;

fn main() -> Result<()> {
    let n = 400;
    let mesh = BoundaryMesh::star(&StarCurve::default(), n)?;
    let tree = ClusterTree::new(n, 2)?;
    let base = ElasticMedium::reference(1.0)?;
    let wave = IncidentWave::along_angle(0.0);
    let node = mesh.nearest_node([1.0, 0.0]);
    let omegas: Vec<f64> = (0..=40).map(|i| 2.0 + 0.05 * i as f64).collect();

    let bm = intensity_sweep(&mesh, &base, &omegas, &wave, &tree, &SolverChoice::Fds(FdsConfig::default()), node, None)?;
    let plain = intensity_sweep(&mesh, &base, &omegas, &wave, &tree, &SolverChoice::ConvNonBm, node, None)?;
    println!(" omega   Burton-Miller   uncoupled   ratio");
    for (a, b) in bm.iter().zip(&plain) {
        let ratio = b.intensity / a.intensity;
        let mark = if !(0.9..=1.1).contains(&ratio) { "  <" } else { "" };
        println!("{:6.2}{:16.6}{:12.6}{:8.3}{mark}", a.omega, a.intensity, b.intensity, ratio);
    }
    Ok(())
}
