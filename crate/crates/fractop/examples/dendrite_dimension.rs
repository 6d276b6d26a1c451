//! Conformal dimension upper bounds for the dendrite K_{1/4}.

use fractop::dendrite::{analyse_dendrite, assign_weights, dendrite_metric_check, dimension_trend, CERT_DEPTH};
use fractop::samples::k_alpha_spec;
use fractop::Result;

fn main() -> Result<()> {
    let d = analyse_dendrite(&k_alpha_spec(0.25), CERT_DEPTH)?;
    for c in &d.certificate {
        println!("level {}: {} cylinders, {} junctions, {} edges", c.level, c.cylinders, c.junctions, c.edges);
    }
    println!("{} points in P*, {} primary arcs", d.system.pstar.len(), d.system.arcs.len());

    let a = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 1e-3 / 16.0, 1.0, true)?;
    let rep = dendrite_metric_check(&d.ifs, &d.system, &a, 2, 500, 0)?;
    println!("m = 2 metric check on {} points: {}", rep.points, rep.ok());

    let ms: Vec<usize> = (1..=6).collect();
    for row in dimension_trend(&d, &ms, 1e-3, 1.0, true)? {
        println!("m = {}  delta = {:.3e}  s_m = {:.8}", row.m, row.delta_used, row.s_m);
    }
    Ok(())
}
