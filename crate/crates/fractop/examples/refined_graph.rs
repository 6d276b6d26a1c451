//! Refined graphs of the Sierpinski gasket with exact rational weights.

use fractop::graph::{check_good_assignment, refine, verify_compatibility, MapFamily, WeightAssignment};
use fractop::report::rational_string;
use fractop::samples;
use fractop::{compute_post_critical, Result};
use num_rational::BigRational;

fn main() -> Result<()> {
    let ifs = samples::sierpinski();
    let pcd = compute_post_critical(&ifs)?;
    let family = MapFamily::singletons(ifs.n());
    let assign = WeightAssignment::uniform(pcd.len(), vec![0.5; 3]);
    let w = assign.typed::<BigRational>(pcd.len(), family.len())?;
    let good = check_good_assignment(&ifs, &pcd, &family, &w)?;
    println!("good assignment: compatible {} geodesic edges {}", good.compatible, good.edges_geodesic);
    for n in 0..=4 {
        let g = refine(&ifs, &pcd, &family, &w, n)?;
        let d = g.distance(0, g.vertices.len() - 1).map(|d| rational_string(&d)).unwrap_or_else(|| "inf".into());
        println!("G_{n}: {:>4} vertices {:>4} edges, D({}, {}) = {d}", g.vertices.len(), g.edges.len(), g.vertices[0].coding, g.vertices[g.vertices.len() - 1].coding);
        if n > 0 {
            let c = verify_compatibility(&ifs, &pcd, &family, &w, n, Some(10_000), 0)?;
            println!("      D_{n} = D_{} on {} pairs: {}", n - 1, c.pairs_checked, c.ok);
        }
    }
    Ok(())
}
