//! The elastodynamic fundamental solution and double-layer kernel at a few
//! separations, with reciprocity `G(x, y) = G(y, x)ᵀ` and the static limit.
//!
//! ```bash
//! cargo run --release --example fundamental_solution
//! ```

use elastic_fds::kernels::Kernel;
use elastic_fds::medium::ElasticMedium;

fn main() -> elastic_fds::Result<()> {
    let medium = ElasticMedium::reference(2.0)?;
    println!("c_L = {:.6}, c_T = {}, k_L = {:.6}, k_T = {}", medium.c_l, medium.c_t, medium.k_l, medium.k_t);
    let dynamic = Kernel::time_harmonic(&medium);
    let low = Kernel::time_harmonic(&medium.with_omega(1e-4)?);
    let stat = Kernel::elastostatic(&medium);

    let y = [0.0, 0.0];
    for x in [[0.1, 0.0], [0.5, 0.5], [2.0, -1.0], [10.0, 3.0]] {
        let g = dynamic.fundamental(x, y)?;
        let gt = dynamic.fundamental(y, x)?;
        let recip = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (g[i][j] - gt[j][i]).norm()).fold(0.0, f64::max);
        let h = dynamic.double_layer(x, y, [1.0, 0.0])?;
        // the dynamic and static double layers share their 1/r singularity
        let hs = stat.double_layer(x, y, [1.0, 0.0])?;
        let hl = low.double_layer(x, y, [1.0, 0.0])?;
        println!(
            "x = {:?}: G11 = {:.5}, H11 = {:.5}, reciprocity {:.1e}, |H_low - H_static| = {:.1e}",
            x,
            g[0][0],
            h[0][0],
            recip,
            (hl[0][0] - hs[0][0]).norm()
        );
    }
    Ok(())
}
