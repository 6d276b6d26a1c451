//! The topology automaton over `Σ²`, surviving times and equivalence classification.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{compute_post_critical, verify_sic_asc, Ifs, IfsSpec, PostCriticalData, SicReport};
use crate::sampling::sample_point_pairs;
use crate::word::{EvPeriodicWord, Symbol};

/// Net depth used for the SIC/ASC check inside [`classify_equivalence`].
pub const SIC_DEPTH: usize = 8;
/// ASC counts as verified when the estimated constant exceeds this.
pub const ASC_MIN: f64 = 1e-3;

/// `Pair { u, v }` is `S_{uv}`: `v` is tracked on the `x` side, `u` on the `y` side (0-based indices into `P`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum State {
    Id,
    Exit,
    Pair { u: usize, v: usize },
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Id => write!(f, "Id"),
            State::Exit => write!(f, "Exit"),
            State::Pair { u, v } => write!(f, "S(p{},p{})", u + 1, v + 1),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologyAutomaton {
    pub n: usize,
    /// `Id`, `Exit`, then reachable pair states in order.
    pub states: Vec<State>,
    /// `delta[s][(i−1)·N + (j−1)]` is the target state index.
    pub delta: Vec<Vec<usize>>,
    #[serde(skip)]
    index: HashMap<State, usize>,
}

fn letter(n: usize, i: Symbol, j: Symbol) -> usize {
    (i as usize - 1) * n + (j as usize - 1)
}

/// Unique member of a set, `SicViolation` if several.
fn unique(set: BTreeSet<usize>, what: impl FnOnce() -> String) -> Result<Option<usize>> {
    match set.len() {
        0 => Ok(None),
        1 => Ok(set.into_iter().next()),
        _ => Err(Error::SicViolation(what())),
    }
}

/// Builds the reachable part of the automaton. Undeclared contacts are searched geometrically.
pub fn build_automaton(ifs: &Ifs, pcd: &PostCriticalData) -> Result<TopologyAutomaton> {
    let n = ifs.n();
    let mut contact: BTreeMap<(Symbol, Symbol), (BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
    for class in ifs.classes() {
        for a in class {
            for b in class {
                if a.first() == b.first() {
                    continue;
                }
                let point = |w: &EvPeriodicWord| {
                    pcd.point_of(&w.shift()).ok_or_else(|| Error::SicViolation(format!("{} is not post-critical", w.shift())))
                };
                let e = contact.entry((a.first(), b.first())).or_default();
                e.1.insert(point(a)?);
                e.0.insert(point(b)?);
            }
        }
    }
    let mut first: HashMap<(Symbol, Symbol), State> = HashMap::new();
    for ((i, j), (us, vs)) in contact {
        let u = unique(us, || format!("cylinders {i} and {j} meet in more than one point"))?.expect("nonempty");
        let v = unique(vs, || format!("cylinders {i} and {j} meet in more than one point"))?.expect("nonempty");
        first.insert((i, j), State::Pair { u, v });
    }
    let seeds: Vec<_> = pcd.points.iter().map(|p| p.pos).collect();
    let undeclared: Vec<(Symbol, Symbol)> = (1..=n as Symbol)
        .flat_map(|i| (i + 1..=n as Symbol).map(move |j| (i, j)))
        .filter(|p| !first.contains_key(p))
        .collect();
    let bad = undeclared.par_iter().find_first(|(i, j)| ifs.cylinders_meet(&[*i], &[*j], &seeds) == Some(true));
    if let Some(&(i, j)) = bad {
        return Err(Error::MissingIdentification { i, j });
    }

    let mut pull: Vec<Vec<Option<usize>>> = Vec::with_capacity(pcd.len());
    for (k, p) in pcd.points.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for i in 1..=n as Symbol {
            let set: BTreeSet<usize> =
                p.codings.iter().filter(|c| c.first() == i).filter_map(|c| pcd.point_of(&c.shift())).collect();
            row.push(unique(set, || format!("p{} has two preimages under map {i}", k + 1))?);
        }
        pull.push(row);
    }

    let step = |s: State, i: Symbol, j: Symbol| -> State {
        match s {
            State::Exit => State::Exit,
            State::Id if i == j => State::Id,
            State::Id => first.get(&(i, j)).copied().unwrap_or(State::Exit),
            State::Pair { u, v } => match (pull[u][j as usize - 1], pull[v][i as usize - 1]) {
                (Some(u2), Some(v2)) => State::Pair { u: u2, v: v2 },
                _ => State::Exit,
            },
        }
    };

    let mut seen: BTreeSet<State> = BTreeSet::from([State::Id, State::Exit]);
    let mut queue = VecDeque::from([State::Id]);
    while let Some(s) = queue.pop_front() {
        for i in 1..=n as Symbol {
            for j in 1..=n as Symbol {
                let t = step(s, i, j);
                if seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    let states: Vec<State> = seen.into_iter().collect();
    let index: HashMap<State, usize> = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
    let delta = states
        .iter()
        .map(|&s| {
            let mut row = vec![0; n * n];
            for i in 1..=n as Symbol {
                for j in 1..=n as Symbol {
                    row[letter(n, i, j)] = index[&step(s, i, j)];
                }
            }
            row
        })
        .collect();
    Ok(TopologyAutomaton { n, states, delta, index })
}

#[derive(Clone, Debug, Serialize)]
pub struct Itinerary {
    pub states: Vec<State>,
    /// Index into `states` where the itinerary starts repeating, for infinite itineraries.
    pub cycle_start: Option<usize>,
    pub surviving_time: Option<usize>,
}

impl TopologyAutomaton {
    pub fn state_index(&self, s: State) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn step(&self, s: State, i: Symbol, j: Symbol) -> State {
        let k = self.index[&s];
        self.states[self.delta[k][letter(self.n, i, j)]]
    }

    pub fn pair_states(&self) -> usize {
        self.states.iter().filter(|s| matches!(s, State::Pair { .. })).count()
    }

    /// Runs `(x_k, y_k)` until `Exit` or until a configuration `(state, phase x, phase y)` repeats.
    pub fn itinerary(&self, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Itinerary {
        let phase = |w: &EvPeriodicWord, k: usize| {
            let p = w.pre().len();
            if k < p {
                k
            } else {
                p + (k - p) % w.per().len()
            }
        };
        let mut s = 0usize;
        let mut states = vec![State::Id];
        let mut seen: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut k = 0usize;
        loop {
            let conf = (s, phase(x, k), phase(y, k));
            if let Some(&at) = seen.get(&conf) {
                states.pop();
                return Itinerary { states, cycle_start: Some(at), surviving_time: None };
            }
            seen.insert(conf, k);
            s = self.delta[s][letter(self.n, x.at(k), y.at(k))];
            k += 1;
            states.push(self.states[s]);
            if self.states[s] == State::Exit {
                return Itinerary { states, cycle_start: None, surviving_time: Some(k) };
            }
        }
    }

    /// Number of input pairs consumed before `Exit`; `None` when `Exit` is never reached.
    pub fn surviving_time(&self, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Option<usize> {
        self.itinerary(x, y).surviving_time
    }

    /// GraphViz rendering of the transition diagram, letters grouped per edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph topology_automaton {\n  rankdir=LR;\n");
        for (k, s) in self.states.iter().enumerate() {
            let shape = match s {
                State::Exit => "doublecircle",
                State::Id => "box",
                _ => "circle",
            };
            out.push_str(&format!("  q{k} [label=\"{s}\", shape={shape}];\n"));
        }
        for (k, row) in self.delta.iter().enumerate() {
            let mut by_target: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for i in 1..=self.n {
                for j in 1..=self.n {
                    by_target.entry(row[(i - 1) * self.n + (j - 1)]).or_default().push(format!("{i}{j}"));
                }
            }
            for (t, letters) in by_target {
                out.push_str(&format!("  q{k} -> q{t} [label=\"{}\"];\n", letters.join(",")));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub depth: usize,
    pub agree: usize,
    pub disagree: usize,
    pub inconclusive: usize,
    pub witnesses: Vec<String>,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.disagree == 0
    }
}

/// Compares surviving times with the least `n` for which the `n`-cylinders of `x` and `y` are
/// disjoint, decided geometrically for `n ≤ depth`.
pub fn check_surviving_time_lemma(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    a: &TopologyAutomaton,
    samples: usize,
    depth: usize,
    seed: u64,
) -> Result<LemmaReport> {
    let pairs = sample_point_pairs(ifs, samples, seed)?;
    let seeds: Vec<_> = pcd.points.iter().map(|p| p.pos).collect();
    #[derive(Clone)]
    enum Outcome {
        Agree,
        Disagree(String),
        Inconclusive,
    }
    let outcomes: Vec<Outcome> = pairs
        .par_iter()
        .map(|(x, y)| {
            let t = a.surviving_time(x, y);
            let meet = |n: usize| -> Option<bool> {
                if n == 0 {
                    Some(true)
                } else {
                    ifs.cylinders_meet(&x.prefix(n), &y.prefix(n), &seeds)
                }
            };
            let (want_meet, want_disjoint) = match t {
                Some(t) if t <= depth => (t - 1, Some(t)),
                _ => (depth, None),
            };
            let m = meet(want_meet);
            let d = want_disjoint.map(|n| meet(n));
            match (m, d) {
                (None, _) | (_, Some(None)) => Outcome::Inconclusive,
                (Some(true), None) | (Some(true), Some(Some(false))) => Outcome::Agree,
                _ => Outcome::Disagree(format!(
                    "x = {x}, y = {y}: T = {}, cylinders at n = {want_meet} meet: {m:?}, at n = {:?} meet: {d:?}",
                    t.map_or("inf".into(), |t| t.to_string()),
                    want_disjoint
                )),
            }
        })
        .collect();
    let mut rep = LemmaReport { samples: pairs.len(), depth, agree: 0, disagree: 0, inconclusive: 0, witnesses: vec![] };
    for o in outcomes {
        match o {
            Outcome::Agree => rep.agree += 1,
            Outcome::Inconclusive => rep.inconclusive += 1,
            Outcome::Disagree(w) => {
                rep.disagree += 1;
                if rep.witnesses.len() < 10 {
                    rep.witnesses.push(w);
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Isomorphism {
    /// `perm[i−1]` is the symbol of the second system matched with symbol `i`.
    pub perm: Vec<Symbol>,
    pub states: Vec<(State, State)>,
}

fn try_perm(a: &TopologyAutomaton, b: &TopologyAutomaton, perm: &[Symbol]) -> Option<Vec<(State, State)>> {
    let n = a.n;
    let mut fwd: Vec<Option<usize>> = vec![None; a.states.len()];
    let mut bwd: Vec<Option<usize>> = vec![None; b.states.len()];
    let mut queue = VecDeque::new();
    for s in [State::Id, State::Exit] {
        let (x, y) = (a.index[&s], b.index[&s]);
        fwd[x] = Some(y);
        bwd[y] = Some(x);
        queue.push_back(x);
    }
    while let Some(x) = queue.pop_front() {
        let y = fwd[x].expect("queued states are mapped");
        for i in 1..=n as Symbol {
            for j in 1..=n as Symbol {
                let x2 = a.delta[x][letter(n, i, j)];
                let y2 = b.delta[y][letter(n, perm[i as usize - 1], perm[j as usize - 1])];
                match (fwd[x2], bwd[y2]) {
                    (Some(m), _) if m != y2 => return None,
                    (None, Some(_)) => return None,
                    (None, None) => {
                        fwd[x2] = Some(y2);
                        bwd[y2] = Some(x2);
                        queue.push_back(x2);
                    }
                    _ => {}
                }
            }
        }
    }
    if fwd.iter().any(|m| m.is_none()) || bwd.iter().any(|m| m.is_none()) {
        return None;
    }
    Some(fwd.iter().enumerate().map(|(x, y)| (a.states[x], b.states[y.unwrap()])).collect())
}

fn permutations(n: usize) -> Vec<Vec<Symbol>> {
    fn go(prefix: &mut Vec<Symbol>, used: &mut Vec<bool>, out: &mut Vec<Vec<Symbol>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k as Symbol + 1);
                go(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Largest alphabet for which symbol relabelings are searched.
pub const MAX_PERMUTED_ALPHABET: usize = 8;

/// A state bijection fixing `Id` and `Exit` and commuting with `δ`. The identity labelling of
/// `Σ` is tried first, then every relabelling for alphabets up to [`MAX_PERMUTED_ALPHABET`].
pub fn automata_isomorphic(a: &TopologyAutomaton, b: &TopologyAutomaton) -> Option<Isomorphism> {
    if a.n != b.n || a.states.len() != b.states.len() {
        return None;
    }
    let identity: Vec<Symbol> = (1..=a.n as Symbol).collect();
    if let Some(states) = try_perm(a, b, &identity) {
        return Some(Isomorphism { perm: identity, states });
    }
    if a.n > MAX_PERMUTED_ALPHABET {
        return None;
    }
    permutations(a.n).into_iter().find_map(|p| try_perm(a, b, &p).map(|states| Isomorphism { perm: p, states }))
}

/// Every relabelling of `Σ` that yields an isomorphism, identity first. Beyond
/// [`MAX_PERMUTED_ALPHABET`] only the identity is tried.
pub fn all_isomorphisms(a: &TopologyAutomaton, b: &TopologyAutomaton) -> Vec<Isomorphism> {
    if a.n != b.n || a.states.len() != b.states.len() {
        return Vec::new();
    }
    let identity: Vec<Symbol> = (1..=a.n as Symbol).collect();
    let mut perms = vec![identity.clone()];
    if a.n <= MAX_PERMUTED_ALPHABET {
        perms.extend(permutations(a.n).into_iter().filter(|p| *p != identity));
    }
    perms.into_iter().filter_map(|p| try_perm(a, b, &p).map(|states| Isomorphism { perm: p, states })).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    NotComparable,
    Homeomorphic,
    Hoelder,
    Quasisymmetric { s: f64 },
    Lipschitz,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub isomorphism: Option<Isomorphism>,
    pub asc: [bool; 2],
    pub boundary_symbols: Vec<Symbol>,
    pub notes: Vec<String>,
}

/// The exponent `s` with `r'_{π(i)} = r_i^s` on every boundary symbol, if one exists.
pub fn qs_exponent(r: &[f64], r2: &[f64], perm: &[Symbol], boundary: &BTreeSet<Symbol>) -> Option<f64> {
    let mut s: Option<f64> = None;
    for &i in boundary {
        let si = r2[perm[i as usize - 1] as usize - 1].ln() / r[i as usize - 1].ln();
        match s {
            None => s = Some(si),
            Some(t) if (t - si).abs() > 1e-9 * t.abs().max(1.0) => return None,
            _ => {}
        }
    }
    s
}

pub struct Analysed {
    pub ifs: Ifs,
    pub pcd: PostCriticalData,
    pub sic: SicReport,
    pub automaton: TopologyAutomaton,
}

pub fn analyse(spec: &IfsSpec) -> Result<Analysed> {
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let sic = verify_sic_asc(&ifs, &pcd, SIC_DEPTH)?;
    let automaton = build_automaton(&ifs, &pcd)?;
    Ok(Analysed { ifs, pcd, sic, automaton })
}

pub fn classify_equivalence(f: &IfsSpec, g: &IfsSpec) -> Result<Classification> {
    let a = analyse(f)?;
    let b = analyse(g)?;
    let asc = [a.sic.sic_ok && a.sic.asc_constant_estimate > ASC_MIN, b.sic.sic_ok && b.sic.asc_constant_estimate > ASC_MIN];
    let boundary_symbols: Vec<Symbol> = a.pcd.boundary_symbols.iter().copied().collect();
    let mut notes = Vec::new();
    let isos = all_isomorphisms(&a.automaton, &b.automaton);
    let Some(first) = isos.first().cloned() else {
        return Ok(Classification { verdict: Verdict::NotComparable, isomorphism: None, asc, boundary_symbols, notes });
    };
    if !(asc[0] && asc[1]) {
        notes.push("ASC not verified for both systems".into());
        return Ok(Classification { verdict: Verdict::Homeomorphic, isomorphism: Some(first), asc, boundary_symbols, notes });
    }
    let (r, r2) = (f.ratios(), g.ratios());
    let verdict_for = |iso: &Isomorphism| {
        let matched = |i: usize| r2[iso.perm[i] as usize - 1];
        if (0..r.len()).all(|i| (r[i] - matched(i)).abs() <= 1e-9 * r[i].max(1e-300)) {
            Verdict::Lipschitz
        } else if let Some(s) = qs_exponent(&r, &r2, &iso.perm, &a.pcd.boundary_symbols) {
            Verdict::Quasisymmetric { s }
        } else {
            Verdict::Hoelder
        }
    };
    let rank = |v: &Verdict| match v {
        Verdict::Lipschitz => 0,
        Verdict::Quasisymmetric { .. } => 1,
        _ => 2,
    };
    // The strongest verdict over all isomorphisms; ties keep the earliest relabelling.
    let (verdict, iso) = isos
        .into_iter()
        .map(|iso| (verdict_for(&iso), iso))
        .min_by_key(|(v, _)| rank(v))
        .expect("at least one isomorphism");
    if verdict == Verdict::Hoelder {
        notes.push("no common exponent on the boundary symbols".into());
    }
    Ok(Classification { verdict, isomorphism: Some(iso), asc, boundary_symbols, notes })
}

/// `T(x, y) = T(y, x)` on every pair drawn from `words`.
pub fn check_symmetry(a: &TopologyAutomaton, words: &[EvPeriodicWord]) -> bool {
    let pairs: HashSet<(usize, usize)> = (0..words.len()).flat_map(|i| (0..words.len()).map(move |j| (i, j))).collect();
    pairs.par_iter().all(|&(i, j)| a.surviving_time(&words[i], &words[j]) == a.surviving_time(&words[j], &words[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn w(pre: &[Symbol], per: &[Symbol]) -> EvPeriodicWord {
        EvPeriodicWord::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    fn built(ifs: &Ifs) -> (PostCriticalData, TopologyAutomaton) {
        let pcd = compute_post_critical(ifs).unwrap();
        let a = build_automaton(ifs, &pcd).unwrap();
        (pcd, a)
    }

    #[test]
    fn sierpinski_structure() {
        let s = samples::sierpinski();
        let (_, a) = built(&s);
        assert_eq!(a.states.len(), 8);
        assert_eq!(a.pair_states(), 6);
        let s12 = a.step(State::Id, 1, 2);
        assert_eq!(s12, State::Pair { u: 0, v: 1 });
        assert_eq!(a.step(s12, 2, 1), s12);
        assert_eq!(a.step(s12, 1, 2), State::Exit);
        assert!((1..=3).all(|i| (1..=3).all(|j| a.step(State::Exit, i, j) == State::Exit)));
    }

    #[test]
    fn k_quarter_transitions() {
        let k = samples::k_alpha(0.25);
        let (pcd, a) = built(&k);
        assert_eq!(pcd.len(), 2);
        let s = a.step(State::Id, 1, 3);
        assert_eq!(s, State::Pair { u: 0, v: 1 });
        assert_eq!(a.step(s, 3, 1), s);
        assert_eq!(a.step(s, 1, 1), State::Exit);
    }

    #[test]
    fn disjoint_system() {
        let c = samples::cantor_pair();
        let (_, a) = built(&c);
        assert_eq!(a.states, vec![State::Id, State::Exit]);
        assert_eq!(a.surviving_time(&w(&[1, 1], &[2]), &w(&[1, 2], &[1])), Some(2));
    }

    #[test]
    fn surviving_times() {
        let s = samples::sierpinski();
        let (_, a) = built(&s);
        assert_eq!(a.surviving_time(&w(&[], &[1]), &w(&[], &[2])), Some(2));
        assert_eq!(a.surviving_time(&w(&[1], &[2]), &w(&[2], &[1])), None);
        assert_eq!(a.surviving_time(&w(&[3], &[1, 2]), &w(&[3], &[1, 2])), None);
        let it = a.itinerary(&w(&[1], &[2]), &w(&[2], &[1]));
        assert_eq!(it.cycle_start, Some(1));
    }

    #[test]
    fn lemma_small_runs() {
        for ifs in [samples::sierpinski(), samples::k_alpha(0.25)] {
            let (pcd, a) = built(&ifs);
            let r = check_surviving_time_lemma(&ifs, &pcd, &a, 40, 8, 3).unwrap();
            assert!(r.ok(), "{:?}", r.witnesses);
            assert!(r.agree > 30);
        }
    }

    #[test]
    fn isomorphisms() {
        let (_, s) = built(&samples::sierpinski());
        let (_, k) = built(&samples::k_alpha(0.25));
        assert!(automata_isomorphic(&s, &s).is_some());
        assert!(automata_isomorphic(&s, &k).is_none());
        let (_, i1) = built(&samples::interval3(0.25, 0.25));
        let (_, i2) = built(&samples::interval3(1.0 / 3.0, 1.0 / 3.0));
        assert!(automata_isomorphic(&i1, &i2).is_some());
    }

    #[test]
    fn relabelled_copy() {
        let spec = samples::k_alpha_spec(0.25);
        let perm = [3, 4, 1, 2];
        let maps = (0..4).map(|k| spec.maps[perm[k] - 1].clone()).collect();
        let inv = |s: Symbol| (perm.iter().position(|&p| p == s as usize).unwrap() + 1) as Symbol;
        let ids = spec
            .identifications
            .iter()
            .map(|id| crate::ifs::Identification {
                i: inv(id.i),
                j: inv(id.j),
                u: EvPeriodicWord::new(vec![], id.u.per().iter().map(|&s| inv(s)).collect()).unwrap(),
                v: EvPeriodicWord::new(vec![], id.v.per().iter().map(|&s| inv(s)).collect()).unwrap(),
            })
            .collect();
        let relabelled = Ifs::new(IfsSpec::new(maps, ids)).unwrap();
        let (_, a) = built(&samples::k_alpha(0.25));
        let (_, b) = built(&relabelled);
        let iso = automata_isomorphic(&a, &b).unwrap();
        assert_eq!(iso.states.len(), a.states.len());
    }

    #[test]
    fn classification() {
        let base = samples::interval3_spec(0.25, 0.25);
        let c = classify_equivalence(&base, &base).unwrap();
        assert_eq!(c.verdict, Verdict::Lipschitz);
        match classify_equivalence(&base, &samples::interval3_spec(0.0625, 0.0625)).unwrap().verdict {
            Verdict::Quasisymmetric { s } => assert!((s - 2.0).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
        let h = classify_equivalence(&base, &samples::interval3_spec(0.25, 0.125)).unwrap();
        assert_eq!(h.verdict, Verdict::Hoelder);
        let n = classify_equivalence(&samples::sierpinski_spec(), &samples::k_alpha_spec(0.25)).unwrap();
        assert_eq!(n.verdict, Verdict::NotComparable);
    }

    #[test]
    fn symmetric_surviving_time() {
        let (_, a) = built(&samples::sierpinski());
        let words: Vec<EvPeriodicWord> =
            crate::word::all_words(3, 4).into_iter().map(|p| EvPeriodicWord::new(p, vec![1]).unwrap()).collect();
        assert!(check_symmetry(&a, &words));
    }
}
