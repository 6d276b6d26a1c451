//! Seeded random eventually periodic codings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ifs::Ifs;
use crate::word::{EvPeriodicWord, Symbol, Word};

pub const MAX_PRE: usize = 6;
pub const MAX_PER: usize = 3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn symbols(rng: &mut impl Rng, n: usize, len: usize) -> Word {
    (0..len).map(|_| rng.gen_range(1..=n) as Symbol).collect()
}

/// A word with preperiod length in `0..=max_pre` and period length in `1..=max_per`.
pub fn random_word(rng: &mut impl Rng, n: usize, max_pre: usize, max_per: usize) -> EvPeriodicWord {
    let pre_len = rng.gen_range(0..=max_pre);
    let per_len = rng.gen_range(1..=max_per);
    let pre = symbols(rng, n, pre_len);
    let per = symbols(rng, n, per_len);
    EvPeriodicWord::new(pre, per).expect("nonempty period")
}

/// Pairs of distinct points as lowest codings. Draws mix independent words, words sharing a
/// prefix, and words entering two cylinders near one of their contact points.
pub fn sample_point_pairs(ifs: &Ifs, count: usize, seed: u64) -> Result<Vec<(EvPeriodicWord, EvPeriodicWord)>> {
    let mut rng = rng(seed);
    let n = ifs.n();
    let contacts: Vec<(EvPeriodicWord, EvPeriodicWord)> = ifs
        .classes()
        .iter()
        .flat_map(|c| {
            c.iter().flat_map(move |a| c.iter().filter(move |b| a.first() != b.first()).map(move |b| (a.clone(), b.clone())))
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < 100 * count.max(1) {
        guard += 1;
        let mode = rng.gen_range(0..3);
        let (x, y) = match mode {
            0 => (random_word(&mut rng, n, MAX_PRE, MAX_PER), random_word(&mut rng, n, MAX_PRE, MAX_PER)),
            1 => {
                let h = rng.gen_range(0..=MAX_PRE);
                let head = symbols(&mut rng, n, h);
                let room = MAX_PRE - h;
                (
                    random_word(&mut rng, n, room, MAX_PER).prepend(&head),
                    random_word(&mut rng, n, room, MAX_PER).prepend(&head),
                )
            }
            _ => {
                let Some((a, b)) = contacts.choose(&mut rng) else { continue };
                let h = rng.gen_range(0..MAX_PRE);
                let head = symbols(&mut rng, n, h);
                let l = rng.gen_range(1..=MAX_PRE - h);
                let mut xs = head.clone();
                xs.extend(a.prefix(l));
                let mut ys = head;
                ys.extend(b.prefix(l));
                let (lx, ly) = (rng.gen_range(1..=MAX_PER), rng.gen_range(1..=MAX_PER));
                let tail_x = symbols(&mut rng, n, lx);
                let tail_y = symbols(&mut rng, n, ly);
                (EvPeriodicWord::new(xs, tail_x)?, EvPeriodicWord::new(ys, tail_y)?)
            }
        };
        let (x, y) = (ifs.lowest_coding(&x)?, ifs.lowest_coding(&y)?);
        if x != y {
            out.push((x, y));
        }
    }
    Ok(out)
}

/// Seeded lowest codings of (not necessarily distinct) points.
pub fn sample_points(ifs: &Ifs, count: usize, seed: u64) -> Result<Vec<EvPeriodicWord>> {
    let mut rng = rng(seed);
    (0..count).map(|_| ifs.lowest_coding(&random_word(&mut rng, ifs.n(), MAX_PRE, MAX_PER))).collect()
}
