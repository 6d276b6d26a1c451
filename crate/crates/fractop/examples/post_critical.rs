//! Post-critical sets, boundary symbols and separation estimates of a few built-in systems.

use fractop::ifs::verify_sic_asc;
use fractop::samples;
use fractop::{compute_post_critical, Ifs, Result};

fn main() -> Result<()> {
    for (name, ifs) in [("sierpinski", samples::sierpinski()), ("k_quarter", samples::k_alpha(0.25)), ("vicsek", samples::vicsek())] {
        let pcd = compute_post_critical(&ifs)?;
        let sic = verify_sic_asc(&ifs, &pcd, 8)?;
        println!("{name}: {} maps, {} post-critical points", ifs.n(), pcd.len());
        for p in &pcd.points {
            let codes: Vec<String> = p.codings.iter().map(|c| c.to_string()).collect();
            println!("  ({:.4}, {:.4})  {}", p.pos.x, p.pos.y, codes.join(" = "));
        }
        println!("  boundary symbols {:?}", pcd.boundary_symbols);
        println!("  SIC {}  ASC constant {:.4}  xi1 {}  xi2 {:.4}", sic.sic_ok, sic.asc_constant_estimate, sic.xi1, sic.xi2);
        lowest_coding_demo(&ifs)?;
    }
    Ok(())
}

fn lowest_coding_demo(ifs: &Ifs) -> Result<()> {
    let w = fractop::EvPeriodicWord::new(vec![2], vec![1])?;
    println!("  lowest coding of {w} is {}", ifs.lowest_coding(&w)?);
    Ok(())
}
