//! The symbolic distance rho, the surviving-time sandwich and the distortion modulus eta.

use fractop::automaton::analyse;
use fractop::metric::{distance_sandwich, eta_modulus, metric_check, rho, separation_prefix, EtaParams, MetricConstants};
use fractop::samples::sierpinski_spec;
use fractop::{EvPeriodicWord, Result};

fn main() -> Result<()> {
    let a = analyse(&sierpinski_spec())?;
    let consts = MetricConstants::from_sic(&a.ifs, &a.sic);
    println!("c1 = {:.4}, c2 = {:.4}, c3 = {:.4}", consts.c1, consts.c2, consts.c3);

    let x = EvPeriodicWord::new(vec![1, 3], vec![1])?;
    let y = EvPeriodicWord::new(vec![1, 2], vec![2])?;
    let sp = separation_prefix(&a.ifs, &x, &y)?;
    println!("separation of {x} and {y}: case {:?}, rho = {}", sp.case, rho(&a.ifs, &x, &y)?);
    let sw = distance_sandwich(&a.ifs, &a.automaton, &consts, &x, &y)?;
    println!("T = {}: {:.5} <= {:.5} <= {:.5}", sw.n, sw.lower, sw.distance, sw.upper);

    let mc = metric_check(&a, 1000, 7)?;
    println!("{} sampled pairs, max distortion {:.3}, {} violations", mc.samples, mc.max_distortion, mc.violations.len());

    let p = EtaParams { r_star: 0.25, r_sup: 0.5, rprime_star: 0.0625, s: 2.0 };
    for t in [1e-4, 1e-2, 0.5, 1.0] {
        println!("eta({t}) = {:.6e}", eta_modulus(&p, t)?);
    }
    Ok(())
}
