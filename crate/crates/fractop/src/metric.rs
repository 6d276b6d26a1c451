//! Separation prefixes, the metric-like function `ρ_K`, distance sandwiches and the
//! quasisymmetry control function `η`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::automaton::{Analysed, TopologyAutomaton};
use crate::error::{Error, Result};
use crate::ifs::{Ifs, PostCriticalData, SicReport};
use crate::sampling::{self, sample_point_pairs};
use crate::word::{EvPeriodicWord, Symbol, Word};

/// Relative slack for floating point comparisons of bounds.
const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SepCase {
    I,
    II,
    III,
}

/// One side of a separation prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Side {
    Finite(Word),
    Infinite(EvPeriodicWord),
}

impl Side {
    pub fn ratio(&self, ifs: &Ifs) -> f64 {
        match self {
            Side::Finite(w) => ifs.word_ratio(w),
            Side::Infinite(_) => 0.0,
        }
    }

    pub fn finite_len(&self) -> Option<usize> {
        match self {
            Side::Finite(w) => Some(w.len()),
            Side::Infinite(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparationPrefix {
    pub mu: Side,
    pub nu: Side,
    pub case: SepCase,
    /// `|x ∧ y|` of the lowest codings.
    pub common: usize,
}

/// `max_{c ∈ A} |c ∧ w|`, capped by the length at which the words agree forever.
fn longest_agreement(a: &BTreeSet<EvPeriodicWord>, w: &EvPeriodicWord) -> usize {
    a.iter().filter_map(|c| c.common_prefix_len(w)).max().unwrap_or(0)
}

/// All codings of the contact point of the 1-cylinders `i` and `j`, if they meet.
fn contact_codings(ifs: &Ifs, i: Symbol, j: Symbol) -> Result<Option<BTreeSet<EvPeriodicWord>>> {
    let key = (i.min(j), i.max(j));
    match ifs.touching_pairs().get(&key) {
        None => Ok(None),
        Some(&class) => ifs.all_codings(&ifs.classes()[class][0]).map(Some),
    }
}

pub fn separation_prefix(ifs: &Ifs, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Result<SeparationPrefix> {
    let x = ifs.lowest_coding(x)?;
    let y = ifs.lowest_coding(y)?;
    let k = x.common_prefix_len(&y).ok_or(Error::SamePoint)?;
    let (xs, ys) = (x.shift_n(k), y.shift_n(k));
    let Some(a) = contact_codings(ifs, xs.first(), ys.first())? else {
        return Ok(SeparationPrefix {
            mu: Side::Finite(x.prefix(k + 1)),
            nu: Side::Finite(y.prefix(k + 1)),
            case: SepCase::I,
            common: k,
        });
    };
    let side = |w: &EvPeriodicWord, ws: &EvPeriodicWord| {
        if a.contains(ws) {
            Side::Infinite(w.clone())
        } else {
            Side::Finite(w.prefix(k + 1 + longest_agreement(&a, ws)))
        }
    };
    let (mu, nu) = (side(&x, &xs), side(&y, &ys));
    let case = if matches!(mu, Side::Infinite(_)) || matches!(nu, Side::Infinite(_)) { SepCase::III } else { SepCase::II };
    Ok(SeparationPrefix { mu, nu, case, common: k })
}

/// `ρ_K(x, y) = max{r_μ, r_ν}`, zero when the codings denote the same point.
pub fn rho(ifs: &Ifs, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Result<f64> {
    match separation_prefix(ifs, x, y) {
        Ok(sp) => Ok(sp.mu.ratio(ifs).max(sp.nu.ratio(ifs))),
        Err(Error::SamePoint) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricConstants {
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub xi1: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub xi2: f64,
    #[serde(rename = "c")]
    pub asc_c: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub r_star: f64,
    pub r_sup: f64,
    pub diam: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub c1: f64,
    pub c2: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub c3: f64,
}

impl MetricConstants {
    /// Constants for a similitude system, where `A_i = B_i = r_i`.
    pub fn from_sic(ifs: &Ifs, sic: &SicReport) -> Self {
        let (r_star, r_sup) = (ifs.r_min(), ifs.r_max());
        let (a_star, b_star) = (r_star, r_sup);
        let (xi1, xi2, c, diam) = (sic.xi1, sic.xi2, sic.asc_constant_estimate, sic.diam);
        let c1 = xi1.min(c * xi2 / a_star);
        let c2 = 2.0 * diam / b_star;
        let c3 = [2.0 * diam / r_star, 1.0 / xi1, r_sup / (c * xi2), r_sup / xi2].into_iter().fold(0.0, f64::max);
        MetricConstants { xi1, xi2, asc_c: c, a_star, b_star, r_star, r_sup, diam, c1, c2, c3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub distance: f64,
    pub holds: bool,
}

pub fn distance_sandwich(
    ifs: &Ifs,
    aut: &TopologyAutomaton,
    consts: &MetricConstants,
    x: &EvPeriodicWord,
    y: &EvPeriodicWord,
) -> Result<Sandwich> {
    let n = aut.surviving_time(x, y).ok_or(Error::SamePointOrTouching)?;
    let lower = consts.c1 * consts.a_star.powi(n as i32);
    let upper = consts.c2 * consts.b_star.powi(n as i32);
    let distance = ifs.eval(x)?.dist(ifs.eval(y)?);
    let holds = lower <= distance * (1.0 + SLACK) && distance <= upper * (1.0 + SLACK);
    Ok(Sandwich { lower, upper, n, distance, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairWitness {
    pub x: EvPeriodicWord,
    pub y: EvPeriodicWord,
    pub rho: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparability {
    pub pairs: usize,
    pub skipped: usize,
    /// Largest `max{d/ρ, ρ/d}` over the checked pairs.
    pub max_distortion: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub c3: f64,
    pub worst: Option<PairWitness>,
}

fn pair_distortion(ifs: &Ifs, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Result<Option<PairWitness>> {
    let r = rho(ifs, x, y)?;
    let d = ifs.eval(x)?.dist(ifs.eval(y)?);
    if r == 0.0 {
        return Ok(None);
    }
    Ok(Some(PairWitness { x: x.clone(), y: y.clone(), rho: r, distance: d }))
}

fn distortion(w: &PairWitness) -> f64 {
    if w.distance == 0.0 {
        f64::INFINITY
    } else {
        (w.distance / w.rho).max(w.rho / w.distance)
    }
}

/// Checks `c₃⁻¹ρ ≤ d ≤ c₃ρ` on the given pairs; a violation is a `ComparabilityFailure`.
pub fn rho_comparability(
    ifs: &Ifs,
    consts: &MetricConstants,
    pairs: &[(EvPeriodicWord, EvPeriodicWord)],
) -> Result<Comparability> {
    let found: Vec<Option<PairWitness>> = pairs.par_iter().map(|(x, y)| pair_distortion(ifs, x, y)).collect::<Result<_>>()?;
    let skipped = found.iter().filter(|w| w.is_none()).count();
    let worst = found.into_iter().flatten().max_by(|a, b| distortion(a).total_cmp(&distortion(b)));
    let max_distortion = worst.as_ref().map_or(1.0, distortion);
    let report = Comparability { pairs: pairs.len(), skipped, max_distortion, c3: consts.c3, worst };
    if max_distortion > consts.c3 * (1.0 + SLACK) {
        let w = report.worst.as_ref().expect("a distortion above 1 has a witness");
        return Err(Error::ComparabilityFailure(format!(
            "x = {}, y = {}: rho = {:.6e}, d = {:.6e}, distortion {:.6} > c3 = {:.6}",
            w.x, w.y, w.rho, w.distance, max_distortion, consts.c3
        )));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EtaParams {
    pub r_star: f64,
    pub r_sup: f64,
    pub rprime_star: f64,
    pub s: f64,
}

impl EtaParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("r_star", self.r_star), ("r_sup", self.r_sup), ("rprime_star", self.rprime_star)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::DomainError(format!("{name} = {v} is not in (0, 1)")));
            }
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::DomainError(format!("s = {} is not positive", self.s)));
        }
        Ok(())
    }
}

/// The five terms of `η(t)` in printed order, for `t > 0`.
pub fn eta_terms(p: &EtaParams, t: f64) -> [f64; 5] {
    let (rs, rp, rsup, s) = (p.r_star, p.rprime_star, p.r_sup, p.s);
    let lt = t.ln();
    let shifted = rp.powf((lt - rs.ln()) / rsup.ln());
    [
        t / (rp * rs),
        t * shifted / rs,
        t.powf(s) * shifted / (rp * rp * rs.powf(s)),
        t.powf(s) / (rp.powi(3) * rs.powf(2.0 * s)),
        t.powf(s) * rp.powf(lt / rsup.ln()) / (rp.powi(3) * rs.powf(2.0 * s)),
    ]
}

/// `η(t)`, the maximum of the five terms; `η(0) = 0`.
pub fn eta_modulus(p: &EtaParams, t: f64) -> Result<f64> {
    p.validate()?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::DomainError(format!("t = {t} is negative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(eta_terms(p, t).into_iter().fold(0.0, f64::max))
}

/// Indices (0-based) of the interior run of one side: `ℓ+2 ..= end−1` in 1-based terms.
fn interior_run(side: &Side, common: usize) -> Vec<Symbol> {
    match side {
        Side::Finite(w) => w.iter().skip(common + 1).take(w.len().saturating_sub(common + 2)).copied().collect(),
        Side::Infinite(w) => {
            let end = (common + 1).max(w.pre().len()) + w.per().len();
            (common + 1..end).map(|k| w.at(k)).collect()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryLemmaReport {
    pub pairs: usize,
    pub case_counts: [usize; 3],
    pub runs_checked: usize,
    pub boundary_symbols: Vec<Symbol>,
    pub symbols_seen: Vec<Symbol>,
    pub witnesses: Vec<(EvPeriodicWord, EvPeriodicWord)>,
    pub holds: bool,
}

/// Checks that the interior runs of case II/III separation prefixes use boundary symbols only.
pub fn check_boundary_lemma(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    pairs: &[(EvPeriodicWord, EvPeriodicWord)],
) -> Result<BoundaryLemmaReport> {
    let prefixes: Vec<SeparationPrefix> = pairs.par_iter().map(|(x, y)| separation_prefix(ifs, x, y)).collect::<Result<_>>()?;
    let mut rep = BoundaryLemmaReport {
        pairs: pairs.len(),
        case_counts: [0; 3],
        runs_checked: 0,
        boundary_symbols: pcd.boundary_symbols.iter().copied().collect(),
        symbols_seen: Vec::new(),
        witnesses: Vec::new(),
        holds: true,
    };
    let mut seen = BTreeSet::new();
    for (sp, (x, y)) in prefixes.iter().zip(pairs) {
        rep.case_counts[sp.case as usize] += 1;
        if sp.case == SepCase::I {
            continue;
        }
        for side in [&sp.mu, &sp.nu] {
            let run = interior_run(side, sp.common);
            rep.runs_checked += 1;
            seen.extend(run.iter().copied());
            if run.iter().any(|s| !pcd.boundary_symbols.contains(s)) {
                rep.holds = false;
                if rep.witnesses.len() < 10 {
                    rep.witnesses.push((x.clone(), y.clone()));
                }
            }
        }
    }
    rep.symbols_seen = seen.into_iter().collect();
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct QsCheck {
    pub triples: usize,
    pub checked: usize,
    pub params: EtaParams,
    pub perm: Vec<Symbol>,
    /// Largest `ρ'(x,y) / (η(t) ρ'(x,z))`; at most 1 when the inequality holds.
    pub worst_ratio: f64,
    pub holds: bool,
}

fn relabel(w: &EvPeriodicWord, perm: &[Symbol]) -> EvPeriodicWord {
    let map = |v: &[Symbol]| v.iter().map(|&s| perm[s as usize - 1]).collect::<Word>();
    EvPeriodicWord::new(map(w.pre()), map(w.per())).expect("relabelling keeps the period")
}

/// Empirical check of `ρ_{K'}(x,y) ≤ η(t) ρ_{K'}(x,z)` with `t = ρ_K(x,y)/ρ_K(x,z)` on seeded triples,
/// with words carried over by the symbol relabelling `perm`.
pub fn qs_triple_check(f: &Analysed, g: &Analysed, perm: &[Symbol], s: f64, triples: usize, seed: u64) -> Result<QsCheck> {
    if perm.len() != f.ifs.n() || g.ifs.n() != f.ifs.n() {
        return Err(Error::DomainError("relabelling does not match the alphabets".into()));
    }
    let params = EtaParams { r_star: f.ifs.r_min(), r_sup: f.ifs.r_max(), rprime_star: g.ifs.r_min(), s };
    let mut rng = sampling::rng(seed);
    let n = f.ifs.n();
    let words: Vec<[EvPeriodicWord; 3]> = (0..triples)
        .map(|_| std::array::from_fn(|_| sampling::random_word(&mut rng, n, sampling::MAX_PRE, sampling::MAX_PER)))
        .collect();
    let ratios: Vec<Option<f64>> = words
        .par_iter()
        .map(|[x, y, z]| -> Result<Option<f64>> {
            let (rxy, rxz) = (rho(&f.ifs, x, y)?, rho(&f.ifs, x, z)?);
            if rxy == 0.0 || rxz == 0.0 {
                return Ok(None);
            }
            let (x2, y2, z2) = (relabel(x, perm), relabel(y, perm), relabel(z, perm));
            let (gxy, gxz) = (rho(&g.ifs, &x2, &y2)?, rho(&g.ifs, &x2, &z2)?);
            Ok(Some(gxy / (eta_modulus(&params, rxy / rxz)? * gxz)))
        })
        .collect::<Result<_>>()?;
    let checked: Vec<f64> = ratios.into_iter().flatten().collect();
    let worst_ratio = checked.iter().copied().fold(0.0, f64::max);
    Ok(QsCheck {
        triples,
        checked: checked.len(),
        params,
        perm: perm.to_vec(),
        worst_ratio,
        holds: worst_ratio <= 1.0 + SLACK,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub x: EvPeriodicWord,
    pub y: EvPeriodicWord,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricCheck {
    #[serde(flatten)]
    pub constants: MetricConstants,
    pub samples: usize,
    pub sandwich_checked: usize,
    pub max_distortion: f64,
    pub violations: Vec<Violation>,
}

/// Sandwich and comparability checks over seeded pairs; violations are collected, not raised.
pub fn metric_check(a: &Analysed, samples: usize, seed: u64) -> Result<MetricCheck> {
    let constants = MetricConstants::from_sic(&a.ifs, &a.sic);
    let pairs = sample_point_pairs(&a.ifs, samples, seed)?;
    type Row = (Option<Sandwich>, Option<PairWitness>);
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<Row> {
            let sw = match distance_sandwich(&a.ifs, &a.automaton, &constants, x, y) {
                Ok(s) => Some(s),
                Err(Error::SamePointOrTouching) => None,
                Err(e) => return Err(e),
            };
            Ok((sw, pair_distortion(&a.ifs, x, y)?))
        })
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    let mut max_distortion: f64 = 1.0;
    let mut sandwich_checked = 0;
    for ((x, y), (sw, pw)) in pairs.iter().zip(rows) {
        if let Some(sw) = sw {
            sandwich_checked += 1;
            if !sw.holds {
                violations.push(Violation {
                    kind: "sandwich",
                    x: x.clone(),
                    y: y.clone(),
                    detail: format!("n = {}: {:.6e} <= {:.6e} <= {:.6e} fails", sw.n, sw.lower, sw.distance, sw.upper),
                });
            }
        }
        if let Some(pw) = pw {
            let dist = distortion(&pw);
            max_distortion = max_distortion.max(dist);
            if dist > constants.c3 * (1.0 + SLACK) {
                violations.push(Violation {
                    kind: "comparability",
                    x: x.clone(),
                    y: y.clone(),
                    detail: format!("rho = {:.6e}, d = {:.6e}, distortion {:.6} > c3", pw.rho, pw.distance, dist),
                });
            }
        }
    }
    Ok(MetricCheck { constants, samples: pairs.len(), sandwich_checked, max_distortion, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::analyse;
    use crate::samples;

    fn w(pre: &[Symbol], per: &[Symbol]) -> EvPeriodicWord {
        EvPeriodicWord::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    #[test]
    fn sierpinski_corners_case_two() {
        let ifs = samples::sierpinski();
        let sp = separation_prefix(&ifs, &w(&[], &[1]), &w(&[], &[2])).unwrap();
        assert_eq!(sp.case, SepCase::II);
        assert_eq!(sp.mu, Side::Finite(vec![1, 1]));
        assert_eq!(sp.nu, Side::Finite(vec![2, 2]));
        assert_eq!(rho(&ifs, &w(&[], &[1]), &w(&[], &[2])).unwrap(), 0.25);
    }

    #[test]
    fn shared_prefix_is_peeled() {
        let ifs = samples::sierpinski();
        let sp = separation_prefix(&ifs, &w(&[1], &[2]), &w(&[1], &[3])).unwrap();
        assert_eq!(sp.common, 1);
        assert_eq!(sp.case, SepCase::II);
        assert_eq!(sp.mu.finite_len(), Some(3));
    }

    #[test]
    fn critical_point_case_three() {
        let ifs = samples::sierpinski();
        let sp = separation_prefix(&ifs, &w(&[1], &[2]), &w(&[2], &[2])).unwrap();
        assert_eq!(sp.case, SepCase::III);
        assert!(matches!(sp.mu, Side::Infinite(_)));
        assert_eq!(sp.nu, Side::Finite(vec![2, 2]));
        assert_eq!(rho(&ifs, &w(&[1], &[2]), &w(&[2], &[2])).unwrap(), 0.25);
    }

    #[test]
    fn equal_points() {
        let ifs = samples::sierpinski();
        assert_eq!(separation_prefix(&ifs, &w(&[1], &[2]), &w(&[2], &[1])), Err(Error::SamePoint));
        assert_eq!(rho(&ifs, &w(&[], &[3]), &w(&[], &[3])).unwrap(), 0.0);
    }

    #[test]
    fn eta_at_one() {
        let p = EtaParams { r_star: 0.5, r_sup: 0.5, rprime_star: 0.5, s: 1.0 };
        let t = eta_terms(&p, 1.0);
        for (a, b) in t.iter().zip([4.0, 4.0, 16.0, 32.0, 32.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((eta_modulus(&p, 1.0).unwrap() - 32.0).abs() < 1e-12);
        assert_eq!(eta_modulus(&p, 0.0).unwrap(), 0.0);
        assert!(eta_modulus(&p, 2.0).unwrap() > 32.0);
        assert!(matches!(eta_modulus(&p, -1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn sierpinski_sandwich() {
        let a = analyse(&samples::sierpinski_spec()).unwrap();
        let k = MetricConstants::from_sic(&a.ifs, &a.sic);
        let s = distance_sandwich(&a.ifs, &a.automaton, &k, &w(&[], &[1]), &w(&[], &[2])).unwrap();
        assert_eq!(s.n, 2);
        assert!(s.holds, "{s:?}");
        assert!((s.lower - k.c1 / 4.0).abs() < 1e-12 && (s.upper - k.c2 / 4.0).abs() < 1e-12);
        let deep = distance_sandwich(&a.ifs, &a.automaton, &k, &w(&[3, 3, 1], &[1]), &w(&[3, 3, 2], &[2])).unwrap();
        assert_eq!(deep.n, 4);
        assert!((deep.upper * 4.0 - s.upper).abs() < 1e-12);
    }

    #[test]
    fn single_map_sandwich_errors() {
        let a = analyse(&samples::single_map_spec()).unwrap();
        let k = MetricConstants::from_sic(&a.ifs, &a.sic);
        let r = distance_sandwich(&a.ifs, &a.automaton, &k, &w(&[], &[1]), &w(&[1], &[1]));
        assert_eq!(r.unwrap_err(), Error::SamePointOrTouching);
    }

    #[test]
    fn metric_check_clean() {
        for spec in [samples::sierpinski_spec(), samples::k_alpha_spec(0.25)] {
            let a = analyse(&spec).unwrap();
            let m = metric_check(&a, 500, 7).unwrap();
            assert!(m.violations.is_empty(), "{:?}", m.violations.first());
            assert!(m.sandwich_checked > 400);
        }
    }

    #[test]
    fn boundary_lemma_k_quarter() {
        let a = analyse(&samples::k_alpha_spec(0.25)).unwrap();
        let pairs = sample_point_pairs(&a.ifs, 200, 3).unwrap();
        let rep = check_boundary_lemma(&a.ifs, &a.pcd, &pairs).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.boundary_symbols, vec![1, 3]);
        assert!(rep.case_counts[1] + rep.case_counts[2] > 0);
        assert!(!rep.symbols_seen.contains(&2) && !rep.symbols_seen.contains(&4));
    }

    #[test]
    fn qs_triples_interval3() {
        let f = analyse(&samples::interval3_spec(0.25, 0.25)).unwrap();
        let g = analyse(&samples::interval3_spec(1.0 / 16.0, 1.0 / 16.0)).unwrap();
        let q = qs_triple_check(&f, &g, &[1, 2, 3], 2.0, 400, 11).unwrap();
        assert!(q.checked > 300);
        assert!(q.holds, "worst ratio {}", q.worst_ratio);
    }
}
