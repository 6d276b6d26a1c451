//! Builds the topology automaton of the Sierpinski gasket and reads off surviving times.

use fractop::automaton::build_automaton;
use fractop::samples;
use fractop::{compute_post_critical, EvPeriodicWord, Result};

fn main() -> Result<()> {
    let ifs = samples::sierpinski();
    let pcd = compute_post_critical(&ifs)?;
    let a = build_automaton(&ifs, &pcd)?;
    println!("{} states, {} of them pair states", a.states.len(), a.pair_states());
    let pairs = [
        (EvPeriodicWord::new(vec![], vec![1])?, EvPeriodicWord::new(vec![], vec![2])?),
        (EvPeriodicWord::new(vec![1], vec![2])?, EvPeriodicWord::new(vec![2], vec![1])?),
        (EvPeriodicWord::new(vec![1, 1], vec![3])?, EvPeriodicWord::new(vec![1, 2], vec![3])?),
    ];
    for (x, y) in &pairs {
        match a.surviving_time(x, y) {
            Some(t) => println!("T({x}, {y}) = {t}"),
            None => println!("T({x}, {y}) = inf"),
        }
    }
    print!("{}", a.to_dot());
    Ok(())
}
