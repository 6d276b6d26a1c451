//! Metric equivalence verdicts for pairs of three-map interval systems.

use fractop::automaton::classify_equivalence;
use fractop::samples::{interval3_spec, sierpinski_spec};
use fractop::Result;

fn main() -> Result<()> {
    let base = interval3_spec(0.25, 0.25);
    let cases = [
        ("same system", interval3_spec(0.25, 0.25)),
        ("squared end ratios", interval3_spec(0.0625, 0.0625)),
        ("skewed end ratios", interval3_spec(0.25, 0.125)),
        ("sierpinski", sierpinski_spec()),
    ];
    for (label, other) in cases {
        let c = classify_equivalence(&base, &other)?;
        println!("{label:>20}: {:?}", c.verdict);
        for n in &c.notes {
            println!("{:>22}{n}", "");
        }
    }
    Ok(())
}
