//! Boundary mesh of the star curve, its cluster tree, and the text format
//! used to reproduce a mesh elsewhere.
//!
//! ```bash
//! cargo run --release --example mesh_and_tree
//! ```

use elastic_fds::geometry::{BoundaryMesh, ClusterTree, StarCurve};

fn main() -> elastic_fds::Result<()> {
    let curve = StarCurve::default();
    let mesh = BoundaryMesh::star(&curve, 800)?;
    println!("star r = {}, a = {}, b = {}", curve.r, curve.a, curve.b);
    println!("{} elements, perimeter {:.6}, longest element {:.4e}", mesh.len(), mesh.perimeter(), mesh.max_length());
    println!("node nearest (1, 0): {}", mesh.nearest_node([1.0, 0.0]));

    let tree = ClusterTree::new(mesh.len(), 3)?;
    for l in 0..=tree.levels {
        let cells: Vec<usize> = tree.level_cells(l).map(|c| tree.cell_nodes(c).len()).collect();
        println!("level {l}: {} cells of {:?} nodes", cells.len(), cells.first().unwrap());
    }

    let path = std::env::temp_dir().join("star_800.txt");
    mesh.save(&path)?;
    let back = BoundaryMesh::load(&path)?;
    assert_eq!(back.nodes, mesh.nodes);
    println!("mesh round-tripped through {}", path.display());
    Ok(())
}
