//! Uniform and general weight schemes for fractal gaskets.

use fractop::gasket::{augmentation_report, conformal_upper_bound, connectivity, validate_gasket, SChoice, Scheme};
use fractop::samples;
use fractop::Result;

fn main() -> Result<()> {
    let sierpinski = validate_gasket(&samples::sierpinski_spec())?;
    println!("sierpinski: {}", connectivity(&sierpinski, 8)?.verdict);
    let ms: Vec<usize> = (1..=10).collect();
    for row in conformal_upper_bound(&sierpinski, &ms, Scheme::Uniform, SChoice::Factor(1.01))? {
        println!("  m = {:>2}  |F_m| = {:>3}  dim = {:.9}", row.m, row.maps, row.dim);
    }

    let aug = validate_gasket(&samples::augmented_gasket_spec())?;
    let rep = augmentation_report(&aug)?;
    println!("augmented gasket: N0 = {:?}, properties hold: {}", rep.n0, rep.all_ok());
    for row in conformal_upper_bound(&aug, &[1, 2, 3], Scheme::General, SChoice::Factor(1.01))? {
        println!("  m = {}  s = {:.4}  dim = {:.6}", row.m, row.s.unwrap_or(f64::NAN), row.dim);
    }

    let corners = validate_gasket(&samples::corner_triangles_spec(0.25))?;
    println!("corner triangles: {}", connectivity(&corners, 8)?.verdict);
    Ok(())
}
