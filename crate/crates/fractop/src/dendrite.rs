//! Self-similar dendrites: tree certificates, primary arcs as a graph-directed system, weight
//! assignments with `L(v) = 1`, the recursive metric `D_n` and the dimensions `s_m`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Pt;
use crate::graph::similarity_dimension;
use crate::ifs::{compute_post_critical, Ifs, IfsSpec, Junction, PostCriticalData};
use crate::sampling;
use crate::word::{all_words, EvPeriodicWord, Symbol, Word};

/// Rounds of the `P*` fixed-point iteration before giving up.
pub const PSTAR_ROUNDS: usize = 50;
const CENTER_DEPTH: usize = 64;
const MAX_HALVINGS: usize = 60;
const L_TOL: f64 = 1e-12;

fn word_index(w: &[Symbol], n: usize) -> usize {
    w.iter().fold(0, |acc, &s| acc * n + (s as usize - 1))
}

fn fmt_word(w: &[Symbol]) -> String {
    if w.is_empty() {
        "∅".into()
    } else {
        w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(if w.iter().any(|&s| s > 9) { "," } else { "" })
    }
}

/// Bipartite graph of level-`k` cylinders and the junction points where they meet.
/// Nodes `0..C` are cylinders in lexicographic order, `C..` are junctions.
#[derive(Clone, Debug)]
pub struct IncidenceTree {
    pub level: usize,
    pub n: usize,
    pub cylinders: Vec<Word>,
    pub junctions: Vec<Junction>,
    adj: Vec<Vec<usize>>,
    junction_index: HashMap<EvPeriodicWord, usize>,
}

impl IncidenceTree {
    pub fn build(ifs: &Ifs, level: usize) -> Result<Self> {
        let n = ifs.n();
        let cylinders = all_words(n, level);
        let junctions = ifs.level_junctions(level)?;
        let c = cylinders.len();
        let mut adj = vec![Vec::new(); c + junctions.len()];
        let mut junction_index = HashMap::new();
        for (k, j) in junctions.iter().enumerate() {
            junction_index.insert(j.point.clone(), c + k);
            for w in &j.cylinders {
                let i = word_index(w, n);
                adj[c + k].push(i);
                adj[i].push(c + k);
            }
        }
        Ok(IncidenceTree { level, n, cylinders, junctions, adj, junction_index })
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.junctions.iter().map(|j| j.cylinders.len()).sum()
    }

    pub fn is_cylinder(&self, node: usize) -> bool {
        node < self.cylinders.len()
    }

    pub fn junction_point(&self, node: usize) -> &EvPeriodicWord {
        &self.junctions[node - self.cylinders.len()].point
    }

    pub fn label(&self, node: usize) -> String {
        if self.is_cylinder(node) {
            fmt_word(&self.cylinders[node])
        } else {
            format!("J({})", self.junction_point(node))
        }
    }

    /// The node of a point: its junction when the point lies in several cylinders, its cylinder otherwise.
    pub fn node_of(&self, ifs: &Ifs, p: &EvPeriodicWord) -> Result<usize> {
        let codings = ifs.all_codings(p)?;
        let prefixes: BTreeSet<Word> = codings.iter().map(|c| c.prefix(self.level)).collect();
        if prefixes.len() >= 2 {
            let low = codings.iter().next().expect("nonempty");
            self.junction_index
                .get(low)
                .copied()
                .ok_or_else(|| Error::GeometryMismatch(format!("{low} lies in several cylinders but is not a junction")))
        } else {
            Ok(word_index(prefixes.iter().next().expect("nonempty"), self.n))
        }
    }

    fn bfs(&self, start: usize) -> (Vec<usize>, Vec<usize>) {
        let mut dist = vec![usize::MAX; self.len()];
        let mut parent = vec![usize::MAX; self.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        (dist, parent)
    }

    /// Node sequence from `a` to `b`, `None` when disconnected.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let (dist, parent) = self.bfs(b);
        if dist[a] == usize::MAX {
            return None;
        }
        let mut out = vec![a];
        let mut u = a;
        while u != b {
            u = parent[u];
            out.push(u);
        }
        Some(out)
    }

    /// `Ok(())` when connected and acyclic, otherwise a description of the obstruction.
    pub fn check_tree(&self) -> std::result::Result<(), String> {
        let mut forest: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        let mut uf: Vec<usize> = (0..self.len()).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut y = x;
            while uf[y] != r {
                let next = uf[y];
                uf[y] = r;
                y = next;
            }
            r
        }
        let c = self.cylinders.len();
        for (k, j) in self.junctions.iter().enumerate() {
            for w in &j.cylinders {
                let (a, b) = (c + k, word_index(w, self.n));
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                if ra == rb {
                    let partial = IncidenceTree { adj: forest, ..self.clone() };
                    let cycle = partial.path(b, a).unwrap_or_default();
                    let names: Vec<String> = cycle.iter().map(|&v| self.label(v)).collect();
                    return Err(format!("level {} cycle {} - {}", self.level, names.join(" - "), self.label(b)));
                }
                uf[ra] = rb;
                forest[a].push(b);
                forest[b].push(a);
            }
        }
        if !self.is_empty() {
            let root = find(&mut uf, 0);
            if let Some(v) = (0..self.len()).find(|&v| find(&mut uf, v) != root) {
                return Err(format!("level {} graph is disconnected at {}", self.level, self.label(v)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelCertificate {
    pub level: usize,
    pub cylinders: usize,
    pub junctions: usize,
    pub edges: usize,
}

/// Checks that the cylinder/junction incidence graph is a tree at every level `1..=depth`.
pub fn certify_dendrite(ifs: &Ifs, depth: usize) -> Result<Vec<LevelCertificate>> {
    (1..=depth)
        .map(|k| {
            let t = IncidenceTree::build(ifs, k)?;
            t.check_tree().map_err(Error::NotDendrite)?;
            Ok(LevelCertificate { level: k, cylinders: t.cylinders.len(), junctions: t.junctions.len(), edges: t.edge_count() })
        })
        .collect()
}

/// One block `θ_j ⊂ f_I(K)` of a canonical decomposition with its end points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Block {
    pub word: Word,
    pub entry: EvPeriodicWord,
    pub exit: EvPeriodicWord,
}

/// Canonical decomposition of the arc from `x` to `y` into level-`tree.level` cylinders.
pub fn chain(ifs: &Ifs, tree: &IncidenceTree, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Result<Vec<Block>> {
    let (x, y) = (ifs.lowest_coding(x)?, ifs.lowest_coding(y)?);
    if x == y {
        return Ok(Vec::new());
    }
    let (a, b) = (tree.node_of(ifs, &x)?, tree.node_of(ifs, &y)?);
    let path = tree.path(a, b).ok_or_else(|| Error::NotDendrite(format!("no path between {x} and {y}")))?;
    let last = path.len() - 1;
    Ok(path
        .iter()
        .enumerate()
        .filter(|&(_, &v)| tree.is_cylinder(v))
        .map(|(k, &v)| Block {
            word: tree.cylinders[v].clone(),
            entry: if k == 0 { x.clone() } else { tree.junction_point(path[k - 1]).clone() },
            exit: if k == last { y.clone() } else { tree.junction_point(path[k + 1]).clone() },
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcChain {
    pub endpoints: (EvPeriodicWord, EvPeriodicWord),
    pub cylinders: Vec<Word>,
    pub breakpoints: Vec<EvPeriodicWord>,
}

pub fn arc_chain(ifs: &Ifs, a: &EvPeriodicWord, b: &EvPeriodicWord, level: usize) -> Result<ArcChain> {
    let tree = IncidenceTree::build(ifs, level)?;
    let blocks = chain(ifs, &tree, a, b)?;
    Ok(ArcChain {
        endpoints: (ifs.lowest_coding(a)?, ifs.lowest_coding(b)?),
        cylinders: blocks.iter().map(|b| b.word.clone()).collect(),
        breakpoints: blocks.iter().skip(1).map(|b| b.entry.clone()).collect(),
    })
}

/// `f_I^{-1}(p)` for a point `p` of the cylinder `f_I(K)`, as a lowest coding.
pub fn pull_back(ifs: &Ifs, p: &EvPeriodicWord, word: &[Symbol]) -> Result<EvPeriodicWord> {
    let c = ifs
        .all_codings(p)?
        .into_iter()
        .find(|c| c.has_prefix(word))
        .ok_or_else(|| Error::SystemExtractionFailure(format!("{p} is not in cylinder {}", fmt_word(word))))?;
    ifs.lowest_coding(&c.shift_n(word.len()))
}

/// Center of the tripod spanned by three points (the common point of the three arcs between them).
pub fn tripod_center(ifs: &Ifs, t1: &IncidenceTree, pts: [&EvPeriodicWord; 3]) -> Result<EvPeriodicWord> {
    let mut cur: [EvPeriodicWord; 3] = [pts[0].clone(), pts[1].clone(), pts[2].clone()];
    let mut prefix: Word = Vec::new();
    let mut seen: HashMap<Vec<EvPeriodicWord>, usize> = HashMap::new();
    for _ in 0..CENTER_DEPTH {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if cur[a] == cur[b] {
                return ifs.lowest_coding(&cur[a].prepend(&prefix));
            }
        }
        let mut key = cur.to_vec();
        key.sort();
        if let Some(&d) = seen.get(&key) {
            return ifs.lowest_coding(&EvPeriodicWord::new(prefix[..d].to_vec(), prefix[d..].to_vec())?);
        }
        seen.insert(key, prefix.len());
        let nodes = [t1.node_of(ifs, &cur[0])?, t1.node_of(ifs, &cur[1])?, t1.node_of(ifs, &cur[2])?];
        let dists = nodes.map(|v| t1.bfs(v).0);
        let med = (0..t1.len())
            .filter(|&v| dists.iter().all(|d| d[v] != usize::MAX))
            .min_by_key(|&v| dists[0][v] + dists[1][v] + dists[2][v])
            .ok_or_else(|| Error::NotDendrite("points lie in different components".into()))?;
        if !t1.is_cylinder(med) {
            return ifs.lowest_coding(&t1.junction_point(med).prepend(&prefix));
        }
        let word = t1.cylinders[med].clone();
        let mut next = Vec::with_capacity(3);
        for k in 0..3 {
            let entry = if nodes[k] == med {
                cur[k].clone()
            } else {
                let nb = t1.adj[med].iter().copied().find(|&u| dists[k][u] + 1 == dists[k][med]).expect("tree path");
                t1.junction_point(nb).clone()
            };
            next.push(pull_back(ifs, &entry, &word)?);
        }
        cur = [next[0].clone(), next[1].clone(), next[2].clone()];
        prefix.extend_from_slice(&word);
    }
    Err(Error::SystemExtractionFailure(format!("tripod center not resolved within {CENTER_DEPTH} levels")))
}

#[derive(Clone, Debug, Serialize)]
pub struct PStarPoint {
    pub coding: EvPeriodicWord,
    pub pos: Pt,
    pub post_critical: bool,
}

/// One term `φ_{v,j}(u_{v,j})` of an expansion rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub map: Word,
    pub arc: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimaryArcSystem {
    pub pstar: Vec<PStarPoint>,
    /// Primary arcs as pairs of indices into `pstar`.
    pub arcs: Vec<(usize, usize)>,
    /// Expansion of each arc over the maps of `F`.
    pub rules: Vec<Vec<Term>>,
    pub rounds: usize,
    #[serde(skip)]
    index: HashMap<EvPeriodicWord, usize>,
}

impl PrimaryArcSystem {
    pub fn index_of(&self, p: &EvPeriodicWord) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn codings(&self) -> Vec<EvPeriodicWord> {
        self.pstar.iter().map(|p| p.coding.clone()).collect()
    }

    fn neighbours(&self) -> Vec<Vec<(usize, usize)>> {
        let mut nb = vec![Vec::new(); self.pstar.len()];
        for (k, &(a, b)) in self.arcs.iter().enumerate() {
            nb[a].push((b, k));
            nb[b].push((a, k));
        }
        nb
    }

    /// Primary arcs along the arc between two points of `P*`, in order.
    pub fn arc_path(&self, p: usize, q: usize) -> Option<Vec<usize>> {
        let nb = self.neighbours();
        let mut via: Vec<Option<(usize, usize)>> = vec![None; self.pstar.len()];
        let mut seen = vec![false; self.pstar.len()];
        seen[p] = true;
        let mut queue = VecDeque::from([p]);
        while let Some(u) = queue.pop_front() {
            for &(v, k) in &nb[u] {
                if !seen[v] {
                    seen[v] = true;
                    via[v] = Some((u, k));
                    queue.push_back(v);
                }
            }
        }
        if !seen[q] {
            return None;
        }
        let mut out = Vec::new();
        let mut u = q;
        while let Some((prev, k)) = via[u] {
            out.push(k);
            u = prev;
        }
        out.reverse();
        Some(out)
    }

    /// Expansion rules over the maps of `F^m` (words of length `m`).
    pub fn rules_at(&self, ifs: &Ifs, tree: &IncidenceTree) -> Result<Vec<Vec<Term>>> {
        self.arcs
            .iter()
            .map(|&(a, b)| {
                let mut terms = Vec::new();
                for blk in chain(ifs, tree, &self.pstar[a].coding, &self.pstar[b].coding)? {
                    let p = pull_back(ifs, &blk.entry, &blk.word)?;
                    let q = pull_back(ifs, &blk.exit, &blk.word)?;
                    let missing = |w: &EvPeriodicWord| Error::SystemExtractionFailure(format!("{w} is not in P*"));
                    let (ip, iq) = (self.index_of(&p).ok_or_else(|| missing(&p))?, self.index_of(&q).ok_or_else(|| missing(&q))?);
                    let arcs = self.arc_path(ip, iq).ok_or_else(|| missing(&q))?;
                    terms.extend(arcs.into_iter().map(|arc| Term { map: blk.word.clone(), arc }));
                }
                Ok(terms)
            })
            .collect()
    }
}

fn median_closure(ifs: &Ifs, t1: &IncidenceTree, set: &mut BTreeSet<EvPeriodicWord>) -> Result<()> {
    loop {
        let pts: Vec<EvPeriodicWord> = set.iter().cloned().collect();
        let mut added = false;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                for c in b + 1..pts.len() {
                    let z = tripod_center(ifs, t1, [&pts[a], &pts[b], &pts[c]])?;
                    added |= set.insert(z);
                }
            }
        }
        if !added {
            return Ok(());
        }
    }
}

fn adjacent_pairs(ifs: &Ifs, t1: &IncidenceTree, pts: &[EvPeriodicWord]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let mut between = false;
            for (c, z) in pts.iter().enumerate() {
                if c != a && c != b && tripod_center(ifs, t1, [&pts[a], &pts[b], z])? == *z {
                    between = true;
                    break;
                }
            }
            if !between {
                out.push((a, b));
            }
        }
    }
    Ok(out)
}

/// `P*`, the primary arcs between consecutive points of `P*` on the main tree, and their
/// expansion rules.
pub fn build_primary_arc_system(ifs: &Ifs, pcd: &PostCriticalData) -> Result<PrimaryArcSystem> {
    let t1 = IncidenceTree::build(ifs, 1)?;
    let post: BTreeSet<EvPeriodicWord> = pcd.points.iter().map(|p| p.codings[0].clone()).collect();
    let mut set = post.clone();
    median_closure(ifs, &t1, &mut set)?;
    for round in 1..=PSTAR_ROUNDS {
        let pts: Vec<EvPeriodicWord> = set.iter().cloned().collect();
        let arcs = adjacent_pairs(ifs, &t1, &pts)?;
        let mut grown = set.clone();
        for &(a, b) in &arcs {
            for blk in chain(ifs, &t1, &pts[a], &pts[b])? {
                grown.insert(pull_back(ifs, &blk.entry, &blk.word)?);
                grown.insert(pull_back(ifs, &blk.exit, &blk.word)?);
            }
        }
        median_closure(ifs, &t1, &mut grown)?;
        if grown == set {
            let pstar = pts
                .iter()
                .map(|c| Ok(PStarPoint { coding: c.clone(), pos: ifs.eval(c)?, post_critical: post.contains(c) }))
                .collect::<Result<Vec<_>>>()?;
            let index = pts.iter().enumerate().map(|(k, c)| (c.clone(), k)).collect();
            let mut sys = PrimaryArcSystem { pstar, arcs, rules: Vec::new(), rounds: round, index };
            sys.rules = sys.rules_at(ifs, &t1)?;
            return Ok(sys);
        }
        set = grown;
    }
    Err(Error::SystemExtractionFailure(format!("P* did not stabilise within {PSTAR_ROUNDS} rounds")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderKind {
    Boundary,
    Private { arc: usize },
    NonPrivate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcWeights {
    pub terms: usize,
    pub boundary_terms: usize,
    /// `n'_{v,m}`, private terms counted with multiplicity.
    pub n_private: usize,
    /// `n''_{v,m}`.
    pub n_nonprivate: usize,
    /// `a_{v,m}`, distinct private cylinders of the canonical decomposition.
    pub a_private: usize,
    pub l_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DendriteAssignment {
    pub m: usize,
    pub c: f64,
    pub delta_requested: f64,
    pub delta_used: f64,
    pub halvings: usize,
    /// `R(f_I)` for `I ∈ Σ^m` in lexicographic order.
    pub r: Vec<f64>,
    pub kinds: Vec<CylinderKind>,
    pub boundary_count: usize,
    pub arcs: Vec<ArcWeights>,
    #[serde(skip)]
    pub rules: Vec<Vec<Term>>,
}

impl DendriteAssignment {
    pub fn words(&self, n: usize) -> Vec<Word> {
        all_words(n, self.m)
    }

    pub fn weight(&self, w: &[Symbol], n: usize) -> f64 {
        self.r[word_index(w, n)]
    }

    /// `L(v) = Σ_j R(φ_{v,j})` for every arc.
    pub fn l_values(&self, n: usize) -> Vec<f64> {
        self.rules.iter().map(|terms| terms.iter().map(|t| self.weight(&t.map, n)).sum()).collect()
    }
}

/// The three-case weight scheme on `F^m` with non-private weight `delta`, halving `delta` while a
/// private weight would leave `(0, 1)` when `auto_halve` is set.
pub fn assign_weights(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    sys: &PrimaryArcSystem,
    m: usize,
    delta: f64,
    c: f64,
    auto_halve: bool,
) -> Result<DendriteAssignment> {
    if m == 0 {
        return Err(Error::DomainError("m must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) || !(c > 0.0) {
        return Err(Error::DomainError(format!("need 0 < delta < 1 and c > 0, got delta = {delta}, c = {c}")));
    }
    let n = ifs.n();
    let tree = IncidenceTree::build(ifs, m)?;
    let rules = sys.rules_at(ifs, &tree)?;
    let boundary: BTreeSet<Word> = pcd.points.iter().flat_map(|p| p.codings.iter().map(|w| w.prefix(m))).collect();
    let words = all_words(n, m);
    let mut owners: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); words.len()];
    for (v, terms) in rules.iter().enumerate() {
        for t in terms {
            owners[word_index(&t.map, n)].insert(v);
        }
    }
    let kinds: Vec<CylinderKind> = words
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if boundary.contains(w) {
                CylinderKind::Boundary
            } else if owners[k].len() == 1 {
                CylinderKind::Private { arc: *owners[k].iter().next().unwrap() }
            } else {
                CylinderKind::NonPrivate
            }
        })
        .collect();
    let mut delta_used = delta;
    let mut halvings = 0;
    loop {
        let mut r: Vec<f64> = words
            .iter()
            .zip(&kinds)
            .map(|(w, k)| match k {
                CylinderKind::Boundary => ifs.word_ratio(w).powf(c),
                _ => delta_used,
            })
            .collect();
        let mut arcs = Vec::with_capacity(rules.len());
        let mut shortfall: Option<String> = None;
        for (v, terms) in rules.iter().enumerate() {
            let mut aw = ArcWeights { terms: terms.len(), boundary_terms: 0, n_private: 0, n_nonprivate: 0, a_private: 0, l_value: 0.0 };
            let mut fixed = 0.0;
            let mut privates = BTreeSet::new();
            for t in terms {
                let k = word_index(&t.map, n);
                match kinds[k] {
                    CylinderKind::Boundary => {
                        aw.boundary_terms += 1;
                        fixed += r[k];
                    }
                    CylinderKind::Private { .. } => {
                        aw.n_private += 1;
                        privates.insert(k);
                    }
                    CylinderKind::NonPrivate => {
                        aw.n_nonprivate += 1;
                        fixed += delta_used;
                    }
                }
            }
            aw.a_private = privates.len();
            if aw.n_private == 0 {
                if (fixed - 1.0).abs() > L_TOL {
                    return Err(Error::AssignmentInfeasible(format!(
                        "arc {v} has no private cylinder and its fixed weights sum to {fixed}"
                    )));
                }
            } else {
                let w = (1.0 - fixed) / aw.n_private as f64;
                if !(w > 0.0 && w < 1.0) {
                    shortfall.get_or_insert(format!("arc {v}: private weight {w:.3e} with delta = {delta_used:.3e}"));
                }
                for &k in &privates {
                    r[k] = w;
                }
            }
            arcs.push(aw);
        }
        if let Some(why) = shortfall {
            if auto_halve && halvings < MAX_HALVINGS {
                delta_used *= 0.5;
                halvings += 1;
                continue;
            }
            return Err(Error::AssignmentInfeasible(why));
        }
        if let Some(k) = r.iter().position(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::AssignmentInfeasible(format!("R({}) = {} is outside (0, 1)", fmt_word(&words[k]), r[k])));
        }
        let mut out = DendriteAssignment {
            m,
            c,
            delta_requested: delta,
            delta_used,
            halvings,
            r,
            kinds,
            boundary_count: boundary.len(),
            arcs,
            rules,
        };
        let ls = out.l_values(n);
        for (aw, l) in out.arcs.iter_mut().zip(&ls) {
            aw.l_value = *l;
        }
        if let Some((v, l)) = ls.iter().enumerate().find(|(_, l)| (*l - 1.0).abs() > L_TOL) {
            return Err(Error::AssignmentInfeasible(format!("L(arc {v}) = {l}")));
        }
        return Ok(out);
    }
}

/// Root of `Σ_{I ∈ Σ^m} R(f_I)^s = 1`, which is the dimension equation with the three weight classes grouped.
pub fn solve_s_m(a: &DendriteAssignment) -> Result<f64> {
    if a.r.len() <= 1 {
        return Err(Error::DomainError("the left side at s = 0 does not exceed 1".into()));
    }
    similarity_dimension(&a.r)
}

/// The recursive metric `D_n` on `X_n`, one recursion step per level of `F^m`.
pub struct DendriteMetric<'a> {
    ifs: &'a Ifs,
    sys: &'a PrimaryArcSystem,
    a: &'a DendriteAssignment,
    tree: IncidenceTree,
}

impl<'a> DendriteMetric<'a> {
    pub fn new(ifs: &'a Ifs, sys: &'a PrimaryArcSystem, a: &'a DendriteAssignment) -> Result<Self> {
        Ok(DendriteMetric { ifs, sys, a, tree: IncidenceTree::build(ifs, a.m)? })
    }

    /// `X_n = X_0 ∪ ⋃_{|J| = n} f_J(X_0)` as sorted lowest codings, `J` over the alphabet of `F^m`.
    pub fn points(&self, n: usize) -> Result<Vec<EvPeriodicWord>> {
        let mut out = BTreeSet::new();
        for p in &self.sys.pstar {
            out.insert(p.coding.clone());
        }
        for k in 1..=n {
            for j in all_words(self.ifs.n(), k * self.a.m) {
                for p in &self.sys.pstar {
                    out.insert(self.ifs.lowest_coding(&p.coding.prepend(&j))?);
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    pub fn distance(&self, n: usize, x: &EvPeriodicWord, y: &EvPeriodicWord) -> Result<f64> {
        self.distance_memo(n, x, y, &mut HashMap::new())
    }

    fn distance_memo(
        &self,
        n: usize,
        x: &EvPeriodicWord,
        y: &EvPeriodicWord,
        memo: &mut HashMap<(usize, EvPeriodicWord, EvPeriodicWord), f64>,
    ) -> Result<f64> {
        let (x, y) = (self.ifs.lowest_coding(x)?, self.ifs.lowest_coding(y)?);
        if x == y {
            return Ok(0.0);
        }
        let key = if x < y { (n, x.clone(), y.clone()) } else { (n, y.clone(), x.clone()) };
        if let Some(&d) = memo.get(&key) {
            return Ok(d);
        }
        let d = if n == 0 {
            let missing = |w: &EvPeriodicWord| Error::DomainError(format!("{w} is not in X_0"));
            let p = self.sys.index_of(&x).ok_or_else(|| missing(&x))?;
            let q = self.sys.index_of(&y).ok_or_else(|| missing(&y))?;
            self.sys.arc_path(p, q).ok_or_else(|| missing(&y))?.len() as f64
        } else {
            let mut total = 0.0;
            for blk in chain(self.ifs, &self.tree, &x, &y)? {
                let p = pull_back(self.ifs, &blk.entry, &blk.word)?;
                let q = pull_back(self.ifs, &blk.exit, &blk.word)?;
                total += self.a.weight(&blk.word, self.ifs.n()) * self.distance_memo(n - 1, &p, &q, memo)?;
            }
            total
        };
        memo.insert(key, d);
        Ok(d)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DendriteMetricReport {
    pub n: usize,
    pub points: usize,
    pub triples: usize,
    pub symmetric: bool,
    pub positive: bool,
    pub triangle: bool,
    /// `D_n = D_{n−1}` on `X_{n−1}`.
    pub compatible: bool,
    /// `D_n(f_I x, f_I y) = R(f_I) D_{n−1}(x, y)` on `X_{n−1}`.
    pub similitude: bool,
    pub max_compat_diff: f64,
    pub witnesses: Vec<String>,
}

impl DendriteMetricReport {
    pub fn ok(&self) -> bool {
        self.symmetric && self.positive && self.triangle && self.compatible && self.similitude
    }
}

/// Metric axioms on seeded triples of `X_n`, compatibility with `D_{n−1}` and the similitude property.
pub fn dendrite_metric_check(
    ifs: &Ifs,
    sys: &PrimaryArcSystem,
    a: &DendriteAssignment,
    n: usize,
    triples: usize,
    seed: u64,
) -> Result<DendriteMetricReport> {
    if n == 0 {
        return Err(Error::DomainError("n must be at least 1".into()));
    }
    let dm = DendriteMetric::new(ifs, sys, a)?;
    let pts = dm.points(n)?;
    let prev = dm.points(n - 1)?;
    let mut rng = sampling::rng(seed);
    let picks: Vec<[usize; 3]> =
        (0..triples).map(|_| std::array::from_fn(|_| rng.gen_range(0..pts.len()))).collect();
    let tol = 1e-12;
    type Row = (bool, bool, bool, Option<String>);
    let rows: Vec<Row> = picks
        .par_iter()
        .map_init(HashMap::new, |memo, &[i, j, k]| -> Result<Row> {
            let (x, y, z) = (&pts[i], &pts[j], &pts[k]);
            let dxy = dm.distance_memo(n, x, y, memo)?;
            let dyx = dm.distance_memo(n, y, x, memo)?;
            let dxz = dm.distance_memo(n, x, z, memo)?;
            let dzy = dm.distance_memo(n, z, y, memo)?;
            let sym = (dxy - dyx).abs() <= tol;
            let pos = i == j || dxy > 0.0;
            let tri = dxy <= dxz + dzy + tol;
            let wit = (!(sym && pos && tri)).then(|| format!("x = {x}, y = {y}, z = {z}: D(x,y) = {dxy}, D(x,z) = {dxz}, D(z,y) = {dzy}"));
            Ok((sym, pos, tri, wit))
        })
        .collect::<Result<_>>()?;
    let mut rep = DendriteMetricReport {
        n,
        points: pts.len(),
        triples,
        symmetric: rows.iter().all(|r| r.0),
        positive: rows.iter().all(|r| r.1),
        triangle: rows.iter().all(|r| r.2),
        compatible: true,
        similitude: true,
        max_compat_diff: 0.0,
        witnesses: rows.into_iter().filter_map(|r| r.3).take(10).collect(),
    };
    let pairs: Vec<(usize, usize)> = (0..prev.len()).flat_map(|i| (i + 1..prev.len()).map(move |j| (i, j))).collect();
    let mut rng = sampling::rng(seed ^ 0x5eed);
    let pairs: Vec<(usize, usize)> = if pairs.len() > 2000 {
        (0..2000).map(|_| pairs[rng.gen_range(0..pairs.len())]).collect()
    } else {
        pairs
    };
    let diffs: Vec<f64> = pairs
        .par_iter()
        .map_init(HashMap::new, |memo, &(i, j)| -> Result<f64> {
            Ok((dm.distance_memo(n, &prev[i], &prev[j], memo)? - dm.distance_memo(n - 1, &prev[i], &prev[j], memo)?).abs())
        })
        .collect::<Result<_>>()?;
    rep.max_compat_diff = diffs.iter().copied().fold(0.0, f64::max);
    rep.compatible = rep.max_compat_diff <= tol;
    if !rep.compatible {
        if let Some(p) = diffs.iter().position(|&d| d > tol) {
            let (i, j) = pairs[p];
            rep.witnesses.push(format!("D_n and D_(n-1) differ by {:.3e} at {} , {}", diffs[p], prev[i], prev[j]));
        }
    }
    let words = all_words(ifs.n(), a.m);
    let mut memo = HashMap::new();
    for (t, &(i, j)) in pairs.iter().take(200).enumerate() {
        let w = &words[t % words.len()];
        let lhs = dm.distance_memo(n, &prev[i].prepend(w), &prev[j].prepend(w), &mut memo)?;
        let rhs = a.weight(w, ifs.n()) * dm.distance_memo(n - 1, &prev[i], &prev[j], &mut memo)?;
        if (lhs - rhs).abs() > tol * rhs.max(1.0) {
            rep.similitude = false;
            rep.witnesses.push(format!("f_{} scales D({}, {}) by {} instead of {}", fmt_word(w), prev[i], prev[j], lhs / rhs * a.weight(w, ifs.n()), a.weight(w, ifs.n())));
            break;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct DimRow {
    pub m: usize,
    pub delta_used: f64,
    pub halvings: usize,
    pub s_m: f64,
    pub boundary: usize,
    pub private: usize,
    pub nonprivate: usize,
}

pub struct DendriteAnalysis {
    pub ifs: Ifs,
    pub pcd: PostCriticalData,
    pub certificate: Vec<LevelCertificate>,
    pub system: PrimaryArcSystem,
}

/// Default number of levels in the dendrite certificate.
pub const CERT_DEPTH: usize = 3;

pub fn analyse_dendrite(spec: &IfsSpec, depth: usize) -> Result<DendriteAnalysis> {
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let certificate = certify_dendrite(&ifs, depth)?;
    let system = build_primary_arc_system(&ifs, &pcd)?;
    Ok(DendriteAnalysis { ifs, pcd, certificate, system })
}

/// `s_m` for each `m`, with non-private weight `δ_m = δ · N^{-m}`.
pub fn dimension_trend(d: &DendriteAnalysis, ms: &[usize], delta: f64, c: f64, auto_halve: bool) -> Result<Vec<DimRow>> {
    ms.iter()
        .map(|&m| {
            let dm = delta * (d.ifs.n() as f64).powi(-(m as i32));
            let a = assign_weights(&d.ifs, &d.pcd, &d.system, m, dm, c, auto_halve)?;
            let count = |f: fn(&CylinderKind) -> bool| a.kinds.iter().filter(|k| f(k)).count();
            Ok(DimRow {
                m,
                delta_used: a.delta_used,
                halvings: a.halvings,
                s_m: solve_s_m(&a)?,
                boundary: count(|k| matches!(k, CylinderKind::Boundary)),
                private: count(|k| matches!(k, CylinderKind::Private { .. })),
                nonprivate: count(|k| matches!(k, CylinderKind::NonPrivate)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn w(pre: &[Symbol], per: &[Symbol]) -> EvPeriodicWord {
        EvPeriodicWord::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    #[test]
    fn certificates() {
        assert_eq!(certify_dendrite(&samples::k_alpha(0.25), 4).unwrap().len(), 4);
        assert!(matches!(certify_dendrite(&samples::sierpinski(), 1), Err(Error::NotDendrite(_))));
        assert!(certify_dendrite(&samples::single_map(), 3).is_ok());
    }

    #[test]
    fn k_quarter_chains() {
        let ifs = samples::k_alpha(0.25);
        let c = arc_chain(&ifs, &w(&[], &[1]), &w(&[], &[3]), 1).unwrap();
        assert_eq!(c.cylinders, vec![vec![1], vec![3]]);
        assert_eq!(c.breakpoints, vec![w(&[1], &[3])]);
        let c = arc_chain(&ifs, &w(&[], &[1]), &w(&[4], &[3]), 1).unwrap();
        assert_eq!(c.cylinders, vec![vec![1], vec![4]]);
        let c = arc_chain(&ifs, &w(&[1, 1], &[2]), &w(&[1, 2], &[3]), 1).unwrap();
        assert_eq!(c.cylinders, vec![vec![1]]);
    }

    #[test]
    fn k_quarter_has_one_primary_arc() {
        let d = analyse_dendrite(&samples::k_alpha_spec(0.25), 3).unwrap();
        assert_eq!(d.system.pstar.len(), 2);
        assert_eq!(d.system.arcs, vec![(0, 1)]);
        assert_eq!(d.system.rules[0], vec![Term { map: vec![1], arc: 0 }, Term { map: vec![3], arc: 0 }]);
    }

    #[test]
    fn interval_system_and_dimension() {
        let d = analyse_dendrite(&samples::interval_spec(), 3).unwrap();
        assert_eq!(d.system.rules, vec![vec![Term { map: vec![1], arc: 0 }, Term { map: vec![2], arc: 0 }]]);
        let a = assign_weights(&d.ifs, &d.pcd, &d.system, 1, 1e-3, 1.0, true).unwrap();
        assert_eq!(a.r, vec![0.5, 0.5]);
        assert!((solve_s_m(&a).unwrap() - 1.0).abs() < 1e-10);
        let rep = dendrite_metric_check(&d.ifs, &d.system, &a, 3, 200, 1).unwrap();
        assert!(rep.ok(), "{:?}", rep.witnesses);
        let dm = DendriteMetric::new(&d.ifs, &d.system, &a).unwrap();
        let x = w(&[1, 2], &[1]);
        let y = w(&[2, 1, 2], &[1]);
        let e = (d.ifs.eval(&x).unwrap().x - d.ifs.eval(&y).unwrap().x).abs();
        assert!((dm.distance(3, &x, &y).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn k_quarter_weights() {
        let d = analyse_dendrite(&samples::k_alpha_spec(0.25), 3).unwrap();
        let a = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 1e-3, 1.0, false).unwrap();
        assert!(a.r.iter().all(|&r| r > 0.0 && r < 1.0));
        assert!(a.l_values(4).iter().all(|l| (l - 1.0).abs() < 1e-12));
        assert_eq!(a.boundary_count, 2);
        let rep = dendrite_metric_check(&d.ifs, &d.system, &a, 2, 500, 9).unwrap();
        assert!(rep.ok(), "{:?}", rep.witnesses);
    }

    #[test]
    fn broken_assignment_is_caught() {
        let d = analyse_dendrite(&samples::k_alpha_spec(0.25), 3).unwrap();
        let mut a = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 1e-3, 1.0, false).unwrap();
        for (r, k) in a.r.iter_mut().zip(&a.kinds) {
            if matches!(k, CylinderKind::Private { .. }) {
                *r -= 0.05;
            }
        }
        assert!(a.l_values(4).iter().all(|l| (l - 0.9).abs() < 1e-12));
        let rep = dendrite_metric_check(&d.ifs, &d.system, &a, 2, 200, 9).unwrap();
        assert!(!rep.compatible);
    }

    #[test]
    fn infeasible_without_halving() {
        let d = analyse_dendrite(&samples::vicsek_spec(), 2).unwrap();
        let r = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 0.95, 1.0, false);
        assert!(matches!(r, Err(Error::AssignmentInfeasible(_))), "{r:?}");
        let ok = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 0.95, 1.0, true).unwrap();
        assert!(ok.halvings > 0);
        assert!(ok.l_values(5).iter().all(|l| (l - 1.0).abs() < 1e-12));
    }

    #[test]
    fn vicsek_system() {
        let d = analyse_dendrite(&samples::vicsek_spec(), 2).unwrap();
        let centre = w(&[], &[5]);
        assert_eq!(d.system.pstar.len(), 5);
        assert_eq!(d.system.arcs.len(), 4);
        let c = d.system.index_of(&centre).unwrap();
        assert!(d.system.arcs.iter().all(|&(a, b)| a == c || b == c));
        let corners = [w(&[], &[1]), w(&[], &[2]), w(&[], &[3])];
        let t1 = IncidenceTree::build(&d.ifs, 1).unwrap();
        assert_eq!(tripod_center(&d.ifs, &t1, [&corners[0], &corners[1], &corners[2]]).unwrap(), centre);
        assert!(matches!(
            assign_weights(&d.ifs, &d.pcd, &d.system, 1, 1e-3, 1.0, true),
            Err(Error::AssignmentInfeasible(_))
        ));
        let a = assign_weights(&d.ifs, &d.pcd, &d.system, 2, 1e-3, 1.0, false).unwrap();
        let rep = dendrite_metric_check(&d.ifs, &d.system, &a, 2, 300, 4).unwrap();
        assert!(rep.ok(), "{:?}", rep.witnesses);
    }

    #[test]
    fn s_m_decreases() {
        let d = analyse_dendrite(&samples::k_alpha_spec(0.25), 3).unwrap();
        let rows = dimension_trend(&d, &[1, 2, 3, 4, 5, 6], 1e-3, 1.0, true).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].s_m < pair[0].s_m, "{rows:?}");
        }
        for r in &rows {
            assert!(r.s_m > 1.0);
            let m = r.m as f64;
            let approx = (1.0 - 2f64.powf(-m)) * 1e-3 / (m * 2f64.ln());
            assert!(((r.s_m - 1.0) - approx).abs() < 0.05 * approx, "m = {}: {} vs {}", r.m, r.s_m - 1.0, approx);
        }
    }
}
