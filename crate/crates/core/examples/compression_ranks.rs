//! Interpolative decompositions: skeleton ranks of one leaf for several
//! tolerances, with proxy-surface sampling and with exact sampling of every
//! other node, and the ranks the FDS reaches on each level.
//!
//! ```bash
//! cargo run --release --example compression_ranks
//! ```

use elastic_fds::compression::{compress_cell, ActiveLists, ProxyConfig, Sampling};
use elastic_fds::prelude::*;

fn main() -> Result<()> {
    let n = 1600;
    let medium = ElasticMedium::reference(2.0)?;
    let mesh = BoundaryMesh::star(&StarCurve::default(), n)?;
    let tree = ClusterTree::new(n, 4)?;
    let problem = Problem::new(&mesh, &medium, medium.default_alpha());

    let leaves: Vec<ActiveLists> = tree.leaves().map(|l| ActiveLists::leaf(tree.leaf_indices(l))).collect();
    let span = tree.leaf_indices(tree.leaves().start);
    let others: Vec<&ActiveLists> = leaves[1..].iter().collect();
    println!("leaf 0 ({} nodes per component)", span.len());
    println!("   epsilon   proxy rank   exact rank");
    for eps in [1e-4, 1e-6, 1e-8, 1e-10, 1e-12] {
        let proxy = compress_cell(&problem, &leaves[0], &span, &others, &Sampling::Proxy(ProxyConfig::default()), eps)?;
        let exact = compress_cell(&problem, &leaves[0], &span, &others, &Sampling::Exact, eps)?;
        println!("{eps:10.0e}{:13}{:13}", proxy.rank, exact.rank);
    }

    for eps in [1e-8, 1e-10] {
        let fds = FdsFactorization::build(&problem, &tree, &FdsConfig { epsilon: eps, ..FdsConfig::default() })?;
        let ranks: Vec<String> = fds.stats.ranks.iter().map(|r| format!("L{}:{}", r.level, r.max)).collect();
        println!("eps {eps:.0e}: max rank per level {}, top system {}", ranks.join(" "), fds.stats.top_dim);
    }
    Ok(())
}
