//! Weighted refined graphs `G_n = ∪ f_I(G₀)` and their geodesic metrics.
//!
//! Vertices are identified symbolically by lowest codings. Weights are generic
//! over [`Scalar`] so the same code runs on `f64` and on exact rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Pt;
use crate::ifs::{Ifs, PostCriticalData};
use crate::report::rational_string;
use crate::word::{all_words, EvPeriodicWord, Word};

pub const PAIR_CAP: usize = 100_000;

pub trait Scalar: Clone + PartialOrd + Debug + Send + Sync + 'static {
    fn zero_val() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn as_f64(&self) -> f64;
    /// Equality up to the comparison tolerance of the number type.
    fn close_to(&self, o: &Self) -> bool;
    fn from_f64(x: f64) -> Option<Self>;
    fn render(&self) -> String;
}

impl Scalar for f64 {
    fn zero_val() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn close_to(&self, o: &Self) -> bool {
        (self - o).abs() <= 1e-12 * self.abs().max(o.abs()).max(1.0)
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for BigRational {
    fn zero_val() -> Self {
        Zero::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn as_f64(&self) -> f64 {
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }
    fn close_to(&self, o: &Self) -> bool {
        self == o
    }
    fn from_f64(x: f64) -> Option<Self> {
        rationalize(x)
    }
    fn render(&self) -> String {
        rational_string(self)
    }
}

/// The simplest fraction with denominator at most `10⁶` within `1e-14` (relative) of `x`.
pub fn rationalize(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-14 * x.abs().max(1.0);
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(1_000_000) {
            return None;
        }
        let q = BigRational::new(h2.clone(), k2.clone());
        if (q.as_f64() - x).abs() <= tol {
            return Some(q);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac == 0.0 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

/// A finite family of maps `f_w`, each given by a word `w` over the base alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapFamily {
    pub words: Vec<Word>,
}

impl MapFamily {
    pub fn singletons(n: usize) -> Self {
        MapFamily { words: all_words(n, 1) }
    }

    /// `F^m`, all words of length `m` in lexicographic order.
    pub fn power(n: usize, m: usize) -> Self {
        MapFamily { words: all_words(n, m) }
    }

    /// A family that must form a complete prefix code over `Σ`, so it has the same attractor.
    pub fn from_words(n: usize, words: Vec<Word>) -> Result<Self> {
        let fam = MapFamily { words };
        if !fam.is_complete_prefix_code(n) {
            return Err(Error::InvalidSpec("map family is not a complete prefix code".into()));
        }
        Ok(fam)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Prefix-free with Kraft sum exactly one.
    pub fn is_complete_prefix_code(&self, n: usize) -> bool {
        if self.words.iter().any(|w| w.is_empty() || w.iter().any(|&s| s == 0 || s as usize > n)) {
            return false;
        }
        for (a, wa) in self.words.iter().enumerate() {
            for (b, wb) in self.words.iter().enumerate() {
                if a != b && wb.len() >= wa.len() && wb[..wa.len()] == wa[..] {
                    return false;
                }
            }
        }
        let nb = BigInt::from(n);
        let kraft: BigRational = self
            .words
            .iter()
            .map(|w| BigRational::new(BigInt::one(), num_traits::pow(nb.clone(), w.len())))
            .fold(BigRational::zero(), |a, b| a + b);
        kraft.is_one()
    }

    /// Splits the first `count` family words off an infinite coding.
    pub fn split(&self, x: &EvPeriodicWord, count: usize) -> Option<(Vec<usize>, usize)> {
        let mut pos = 0;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let k = self.words.iter().position(|w| w.iter().enumerate().all(|(t, &s)| x.at(pos + t) == s))?;
            pos += self.words[k].len();
            out.push(k);
        }
        Some((out, pos))
    }

    pub fn block_word(&self, block: &[usize]) -> Word {
        block.iter().flat_map(|&k| self.words[k].iter().copied()).collect()
    }
}

/// `(τ₀, R)`: weights on the edges of `G₀` keyed `"i-j"` by 1-based post-critical index, and one ratio per family map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub tau0: BTreeMap<String, f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
}

/// Validated weights in a concrete number type.
#[derive(Clone, Debug)]
pub struct Weights<S> {
    pub tau0: Vec<((usize, usize), S)>,
    pub r: Vec<S>,
}

pub fn edge_key(i: usize, j: usize) -> String {
    format!("{}-{}", i + 1, j + 1)
}

impl WeightAssignment {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Weight 1 on every edge of the complete graph over `p` points.
    pub fn uniform(p: usize, r: Vec<f64>) -> Self {
        let mut tau0 = BTreeMap::new();
        for i in 0..p {
            for j in i + 1..p {
                tau0.insert(edge_key(i, j), 1.0);
            }
        }
        WeightAssignment { tau0, r }
    }

    pub fn typed<S: Scalar>(&self, p: usize, family_len: usize) -> Result<Weights<S>> {
        let conv = |x: f64| S::from_f64(x).ok_or_else(|| Error::DomainError(format!("{x} is not representable")));
        let mut tau0 = Vec::new();
        for (key, &w) in &self.tau0 {
            let (a, b) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::Parse(format!("bad tau0 key {key:?}")))?;
            if a == 0 || b == 0 || a > p || b > p {
                return Err(Error::InvalidSpec(format!("tau0 key {key:?} names a point outside 1..={p}")));
            }
            if a == b {
                if w != 0.0 {
                    return Err(Error::InvalidSpec(format!("loop weight {key:?} must be 0")));
                }
                continue;
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidSpec(format!("edge {key:?} needs a positive weight")));
            }
            tau0.push(((a.min(b) - 1, a.max(b) - 1), conv(w)?));
        }
        if self.r.len() != family_len {
            return Err(Error::InvalidSpec(format!("R has {} entries, family has {family_len} maps", self.r.len())));
        }
        if let Some(bad) = self.r.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidSpec(format!("R value {bad} outside (0,1)")));
        }
        let r = self.r.iter().map(|&x| conv(x)).collect::<Result<Vec<S>>>()?;
        Ok(Weights { tau0, r })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub coding: EvPeriodicWord,
    pub pos: Pt,
}

#[derive(Clone, Debug)]
pub struct Edge<S> {
    pub a: usize,
    pub b: usize,
    pub weight: S,
    /// Family indices of the block `I`.
    pub block: Vec<usize>,
    /// The edge `h` of `G₀`.
    pub h: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct RefinedGraph<S> {
    pub level: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge<S>>,
    index: HashMap<EvPeriodicWord, usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

/// Builds `G_n` over the given map family.
pub fn refine<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    w: &Weights<S>,
    n: usize,
) -> Result<RefinedGraph<S>> {
    let blocks: Vec<Vec<usize>> = all_words(family.len(), n)
        .into_iter()
        .map(|b| b.into_iter().map(|s| s as usize - 1).collect())
        .collect();
    let used: Vec<usize> = {
        let mut u: Vec<usize> = w.tau0.iter().flat_map(|((a, b), _)| [*a, *b]).collect();
        u.sort();
        u.dedup();
        u
    };
    let tol = 1e-7 * ifs.diam_upper().max(1.0);
    let per_block: Vec<Result<Vec<(usize, EvPeriodicWord, Pt)>>> = blocks
        .par_iter()
        .map(|block| {
            let word = family.block_word(block);
            let map = ifs.word_map(&word);
            used.iter()
                .map(|&p| {
                    let coding = ifs.lowest_coding(&pcd.lowest(p).prepend(&word))?;
                    Ok((p, coding, map.apply(pcd.points[p].pos)))
                })
                .collect()
        })
        .collect();
    let mut raw: BTreeMap<EvPeriodicWord, Pt> = BTreeMap::new();
    let mut block_vertices: Vec<HashMap<usize, EvPeriodicWord>> = Vec::with_capacity(blocks.len());
    for res in per_block {
        let mut here = HashMap::new();
        for (p, coding, pos) in res? {
            match raw.get(&coding) {
                Some(q) if q.dist(pos) > tol => {
                    return Err(Error::GeometryMismatch(format!(
                        "vertex {coding} sits at ({:.9}, {:.9}) and ({:.9}, {:.9})",
                        q.x, q.y, pos.x, pos.y
                    )))
                }
                Some(_) => {}
                None => {
                    raw.insert(coding.clone(), pos);
                }
            }
            here.insert(p, coding);
        }
        block_vertices.push(here);
    }
    let vertices: Vec<Vertex> = raw.into_iter().map(|(coding, pos)| Vertex { coding, pos }).collect();
    let index: HashMap<EvPeriodicWord, usize> = vertices.iter().enumerate().map(|(k, v)| (v.coding.clone(), k)).collect();
    let mut edges = Vec::new();
    for (block, verts) in blocks.iter().zip(&block_vertices) {
        let rb = block.iter().fold(None::<S>, |acc, &k| Some(match acc {
            None => w.r[k].clone(),
            Some(x) => x.mul(&w.r[k]),
        }));
        for ((p, q), tau) in &w.tau0 {
            let (a, b) = (index[&verts[p]], index[&verts[q]]);
            if a == b {
                continue;
            }
            let weight = match &rb {
                None => tau.clone(),
                Some(r) => r.mul(tau),
            };
            edges.push(Edge { a, b, weight, block: block.clone(), h: (*p, *q) });
        }
    }
    Ok(RefinedGraph::assemble(n, vertices, edges, index))
}

#[derive(Clone, Debug)]
pub struct Geodesic<S> {
    /// `None` when the endpoints lie in different components.
    pub distance: Option<S>,
    pub path: Vec<usize>,
}

struct HeapItem<S> {
    d: S,
    v: usize,
}

impl<S: PartialOrd> PartialEq for HeapItem<S> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<S: PartialOrd> Eq for HeapItem<S> {}
impl<S: PartialOrd> PartialOrd for HeapItem<S> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<S: PartialOrd> Ord for HeapItem<S> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.d.partial_cmp(&self.d).unwrap_or(Ordering::Equal).then(o.v.cmp(&self.v))
    }
}

impl<S: Scalar> RefinedGraph<S> {
    fn assemble(level: usize, vertices: Vec<Vertex>, edges: Vec<Edge<S>>, index: HashMap<EvPeriodicWord, usize>) -> Self {
        let mut adj = vec![Vec::new(); vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            adj[e.a].push((e.b, k));
            adj[e.b].push((e.a, k));
        }
        RefinedGraph { level, vertices, edges, index, adj }
    }

    pub fn vertex_of(&self, coding: &EvPeriodicWord) -> Option<usize> {
        self.index.get(coding).copied()
    }

    /// Vertex of the point `π(x)`, after reducing `x` to its lowest coding.
    pub fn vertex_at(&self, ifs: &Ifs, x: &EvPeriodicWord) -> Result<Option<usize>> {
        Ok(self.vertex_of(&ifs.lowest_coding(x)?))
    }

    /// The subgraph keeping every vertex and only the edges accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&Edge<S>) -> bool) -> Self {
        let edges: Vec<Edge<S>> = self.edges.iter().filter(|e| keep(e)).cloned().collect();
        Self::assemble(self.level, self.vertices.clone(), edges, self.index.clone())
    }

    /// Single-source shortest distances and the predecessor edge on a shortest path.
    pub fn distances_from(&self, src: usize) -> (Vec<Option<S>>, Vec<Option<usize>>) {
        let n = self.vertices.len();
        let mut dist: Vec<Option<S>> = vec![None; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(S::zero_val());
        heap.push(HeapItem { d: S::zero_val(), v: src });
        while let Some(HeapItem { d, v }) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &(u, e) in &self.adj[v] {
                if done[u] {
                    continue;
                }
                let nd = d.add(&self.edges[e].weight);
                let better = match &dist[u] {
                    None => true,
                    Some(old) => nd < *old,
                };
                if better {
                    dist[u] = Some(nd.clone());
                    pred[u] = Some(e);
                    heap.push(HeapItem { d: nd, v: u });
                }
            }
        }
        (dist, pred)
    }

    pub fn geodesic(&self, x: usize, y: usize) -> Geodesic<S> {
        if x == y {
            return Geodesic { distance: Some(S::zero_val()), path: vec![x] };
        }
        let (dist, pred) = self.distances_from(x);
        let Some(d) = dist[y].clone() else {
            return Geodesic { distance: None, path: vec![] };
        };
        let mut path = vec![y];
        let mut v = y;
        while v != x {
            let e = &self.edges[pred[v].expect("reachable vertex has a predecessor")];
            v = if e.a == v { e.b } else { e.a };
            path.push(v);
        }
        path.reverse();
        Geodesic { distance: Some(d), path }
    }

    pub fn distance(&self, x: usize, y: usize) -> Option<S> {
        self.geodesic(x, y).distance
    }

    /// Edge set as normalized vertex pairs.
    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect()
    }

    pub fn path_weight(&self, path: &[usize]) -> Option<S> {
        let mut total = S::zero_val();
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let w = self.adj[a]
                .iter()
                .filter(|(u, _)| *u == b)
                .map(|(_, e)| self.edges[*e].weight.clone())
                .fold(None::<S>, |m, x| match m {
                    Some(y) if y <= x => Some(y),
                    _ => Some(x),
                })?;
            total = total.add(&w);
        }
        Some(total)
    }
}

fn render_opt<S: Scalar>(d: &Option<S>) -> String {
    d.as_ref().map(|x| x.render()).unwrap_or_else(|| "inf".into())
}

fn same<S: Scalar>(a: &Option<S>, b: &Option<S>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.close_to(y),
        (None, None) => true,
        _ => false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodAssignmentReport {
    pub compatible: bool,
    pub edges_geodesic: bool,
    /// `(i, j, D₀, D₁)` over post-critical pairs.
    pub corner_distances: Vec<(usize, usize, String, String)>,
    pub witnesses: Vec<String>,
}

/// Conditions for a good assignment: `D₁ = D₀` on `P` and every edge of `G₁` a geodesic.
pub fn check_good_assignment<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    w: &Weights<S>,
) -> Result<GoodAssignmentReport> {
    let g0 = refine(ifs, pcd, family, w, 0)?;
    let g1 = refine(ifs, pcd, family, w, 1)?;
    let mut rep = GoodAssignmentReport { compatible: true, edges_geodesic: true, corner_distances: vec![], witnesses: vec![] };
    for i in 0..pcd.len() {
        for j in i + 1..pcd.len() {
            let (Some(a0), Some(b0)) = (g0.vertex_of(pcd.lowest(i)), g0.vertex_of(pcd.lowest(j))) else { continue };
            let (Some(a1), Some(b1)) = (g1.vertex_of(pcd.lowest(i)), g1.vertex_of(pcd.lowest(j))) else { continue };
            let d0 = g0.distance(a0, b0);
            let d1 = g1.distance(a1, b1);
            if !same(&d0, &d1) {
                rep.compatible = false;
                rep.witnesses.push(format!("D1(p{},p{}) = {} but D0 = {}", i + 1, j + 1, render_opt(&d1), render_opt(&d0)));
            }
            rep.corner_distances.push((i + 1, j + 1, render_opt(&d0), render_opt(&d1)));
        }
    }
    let mut sources: Vec<usize> = g1.edges.iter().map(|e| e.a).collect();
    sources.sort();
    sources.dedup();
    let dists: HashMap<usize, Vec<Option<S>>> = sources.par_iter().map(|&s| (s, g1.distances_from(s).0)).collect();
    for e in &g1.edges {
        let d = &dists[&e.a][e.b];
        if !same(d, &Some(e.weight.clone())) {
            rep.edges_geodesic = false;
            if rep.witnesses.len() < 20 {
                rep.witnesses.push(format!(
                    "edge {} -- {} of block {:?} has weight {} but D1 = {}",
                    g1.vertices[e.a].coding,
                    g1.vertices[e.b].coding,
                    family.block_word(&e.block),
                    e.weight.render(),
                    render_opt(d)
                ));
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    pub level: usize,
    pub pairs_checked: usize,
    pub sampled: bool,
    pub max_abs_diff: f64,
    pub ok: bool,
    pub witness: Option<String>,
}

/// `D_n = D_{n−1}` on vertex pairs of `G_{n−1}`, exhaustive up to `PAIR_CAP` pairs, otherwise `sample` seeded pairs.
pub fn verify_compatibility<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    w: &Weights<S>,
    n: usize,
    sample: Option<usize>,
    seed: u64,
) -> Result<CompatibilityReport> {
    if n == 0 {
        return Err(Error::DomainError("compatibility needs n ≥ 1".into()));
    }
    let prev = refine(ifs, pcd, family, w, n - 1)?;
    let cur = refine(ifs, pcd, family, w, n)?;
    let m = prev.vertices.len();
    let total = m * m.saturating_sub(1) / 2;
    let (pairs, sampled) = match sample {
        Some(k) if k < total || total > PAIR_CAP => (sample_pairs(m, k, seed), true),
        None if total > PAIR_CAP => (sample_pairs(m, PAIR_CAP, seed), true),
        _ => ((0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect(), false),
    };
    let map: Vec<usize> = prev
        .vertices
        .iter()
        .map(|v| cur.vertex_of(&v.coding).ok_or_else(|| Error::GeometryMismatch(format!("vertex {} missing at level {n}", v.coding))))
        .collect::<Result<_>>()?;
    let mut by_src: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &pairs {
        by_src.entry(a).or_default().push(b);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_src.into_iter().collect();
    let results: Vec<(f64, Option<String>)> = groups
        .par_iter()
        .map(|(a, bs)| {
            let dp = prev.distances_from(*a).0;
            let dc = cur.distances_from(map[*a]).0;
            let mut worst = 0.0f64;
            let mut wit = None;
            for &b in bs {
                let (x, y) = (&dp[b], &dc[map[b]]);
                let diff = match (x, y) {
                    (Some(x), Some(y)) => (x.as_f64() - y.as_f64()).abs(),
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                };
                worst = worst.max(diff);
                if wit.is_none() && !same(x, y) {
                    wit = Some(format!(
                        "D{}({}, {}) = {} but D{} = {}",
                        n,
                        prev.vertices[*a].coding,
                        prev.vertices[b].coding,
                        render_opt(y),
                        n - 1,
                        render_opt(x)
                    ));
                }
            }
            (worst, wit)
        })
        .collect();
    let max_abs_diff = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let witness = results.into_iter().find_map(|r| r.1);
    Ok(CompatibilityReport { level: n, pairs_checked: pairs.len(), sampled, max_abs_diff, ok: witness.is_none(), witness })
}

fn sample_pairs(m: usize, k: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    if m < 2 {
        return out;
    }
    while out.len() < k {
        let a = rng.gen_range(0..m);
        let b = rng.gen_range(0..m);
        if a != b {
            out.push((a.min(b), a.max(b)));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricEstimate {
    #[serde(serialize_with = "crate::report::ser_opt_f64_inf")]
    pub value: Option<f64>,
    pub exact: Option<String>,
    pub envelope: f64,
}

/// `D_n` between the level-`n` vertices nearest to `π(x)` and `π(y)`, with the projection envelope.
pub fn metric_d<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    w: &Weights<S>,
    x: &EvPeriodicWord,
    y: &EvPeriodicWord,
    n: usize,
) -> Result<MetricEstimate> {
    let g = refine(ifs, pcd, family, w, n)?;
    let g0 = refine(ifs, pcd, family, w, 0)?;
    let mut diam0 = 0.0f64;
    for a in 0..g0.vertices.len() {
        for d in g0.distances_from(a).0.into_iter().flatten() {
            diam0 = diam0.max(d.as_f64());
        }
    }
    let r_max = w.r.iter().map(|r| r.as_f64()).fold(0.0, f64::max);
    let envelope = 2.0 * r_max.powi(n as i32) * diam0;
    let xv = project(ifs, pcd, family, &g, x, n)?;
    let yv = project(ifs, pcd, family, &g, y, n)?;
    let d = g.distance(xv, yv);
    Ok(MetricEstimate { value: d.as_ref().map(|v| v.as_f64()), exact: d.as_ref().map(|v| v.render()), envelope })
}

/// The vertex `f_J(p)` where `J` is the first `n` family words of `x` and `p ∈ P` best matches the remaining tail.
fn project<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    g: &RefinedGraph<S>,
    x: &EvPeriodicWord,
    n: usize,
) -> Result<usize> {
    let x = ifs.lowest_coding(x)?;
    let (block, used) = family.split(&x, n).ok_or_else(|| Error::InvalidWord(format!("{x} does not parse over the family")))?;
    let tail = x.shift_n(used);
    let word = family.block_word(&block);
    let mut best: Option<(usize, usize)> = None;
    for p in 0..pcd.len() {
        let score = pcd.points[p]
            .codings
            .iter()
            .map(|c| c.common_prefix_len(&tail).unwrap_or(usize::MAX))
            .max()
            .unwrap_or(0);
        if best.map_or(true, |(s, _)| score > s) {
            best = Some((score, p));
        }
    }
    let (_, p) = best.ok_or_else(|| Error::DomainError("empty post-critical set".into()))?;
    let coding = ifs.lowest_coding(&pcd.lowest(p).prepend(&word))?;
    g.vertex_of(&coding).ok_or_else(|| Error::GeometryMismatch(format!("projected vertex {coding} not in graph")))
}

/// Largest relative deviation of `D_{n+1}(f_j x, f_j y)` from `R(j) D_n(x, y)` over vertex pairs of `G_n`.
pub fn check_similitude_under_d<S: Scalar>(
    ifs: &Ifs,
    pcd: &PostCriticalData,
    family: &MapFamily,
    w: &Weights<S>,
    j: usize,
    n: usize,
    max_pairs: usize,
    seed: u64,
) -> Result<f64> {
    if j >= family.len() {
        return Err(Error::DomainError(format!("family index {} out of range", j + 1)));
    }
    let g = refine(ifs, pcd, family, w, n)?;
    let h = refine(ifs, pcd, family, w, n + 1)?;
    let m = g.vertices.len();
    let total = m * m.saturating_sub(1) / 2;
    let pairs = if total <= max_pairs {
        (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect()
    } else {
        sample_pairs(m, max_pairs, seed)
    };
    let image: Vec<usize> = g
        .vertices
        .iter()
        .map(|v| {
            let c = ifs.lowest_coding(&v.coding.prepend(&family.words[j]))?;
            h.vertex_of(&c).ok_or_else(|| Error::GeometryMismatch(format!("image vertex {c} missing")))
        })
        .collect::<Result<_>>()?;
    let mut by_src: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (a, b) in pairs {
        by_src.entry(a).or_default().push(b);
    }
    let rj = w.r[j].as_f64();
    let groups: Vec<(usize, Vec<usize>)> = by_src.into_iter().collect();
    let worst = groups
        .par_iter()
        .map(|(a, bs)| {
            let dg = g.distances_from(*a).0;
            let dh = h.distances_from(image[*a]).0;
            bs.iter()
                .map(|&b| match (&dg[b], &dh[image[b]]) {
                    (Some(x), Some(y)) => {
                        let x = x.as_f64();
                        if x == 0.0 {
                            0.0
                        } else {
                            (y.as_f64() - rj * x).abs() / x
                        }
                    }
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// The unique `s ≥ 0` with `Σ rᵢ^s = 1`.
pub fn similarity_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::DomainError("no ratios".into()));
    }
    if let Some(r) = ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::DomainError(format!("ratio {r} outside (0,1)")));
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Splits a path crossing from `Γ₁` into `Γ₂` at a vertex of the cut `{a, b}`.
pub fn decompose_path_by_subgraphs(
    path: &[usize],
    g1: &HashSet<(usize, usize)>,
    g2: &HashSet<(usize, usize)>,
    cut: (usize, usize),
) -> Result<(Vec<usize>, Vec<usize>)> {
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let verts = |g: &HashSet<(usize, usize)>| -> HashSet<usize> { g.iter().flat_map(|&(a, b)| [a, b]).collect() };
    let (v1, v2) = (verts(g1), verts(g2));
    let shared: HashSet<usize> = v1.intersection(&v2).copied().collect();
    if shared != HashSet::from([cut.0, cut.1]) {
        return Err(Error::DecompositionError(format!("subgraphs share {} vertices, not exactly the cut", shared.len())));
    }
    let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
        return Err(Error::DecompositionError("empty path".into()));
    };
    let in_cut = |v: usize| v == cut.0 || v == cut.1;
    if !v1.contains(&first) || in_cut(first) || !v2.contains(&last) || in_cut(last) {
        return Err(Error::DecompositionError("path endpoints must lie in Γ₁ and Γ₂ away from the cut".into()));
    }
    for t in 1..path.len() - 1 {
        if !in_cut(path[t]) {
            continue;
        }
        let left = path[..=t].windows(2).all(|p| g1.contains(&norm(p[0], p[1])));
        let right = path[t..].windows(2).all(|p| g2.contains(&norm(p[0], p[1])));
        if left && right {
            return Ok((path[..=t].to_vec(), path[t..].to_vec()));
        }
    }
    Err(Error::DecompositionError("no split point in the cut separates the path".into()))
}

pub fn rational_one_over(k: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(k))
}

pub fn is_nonnegative(q: &BigRational) -> bool {
    !q.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::compute_post_critical;
    use crate::samples;

    fn sierpinski_g(r: f64, n: usize) -> (RefinedGraph<BigRational>, Ifs, PostCriticalData) {
        let ifs = samples::sierpinski();
        let pcd = compute_post_critical(&ifs).unwrap();
        let fam = MapFamily::singletons(3);
        let w = WeightAssignment::uniform(3, vec![r; 3]).typed::<BigRational>(3, 3).unwrap();
        let g = refine(&ifs, &pcd, &fam, &w, n).unwrap();
        (g, ifs, pcd)
    }

    #[test]
    fn sierpinski_level_one() {
        let (g, ifs, _) = sierpinski_g(0.5, 1);
        assert_eq!(g.vertices.len(), 6);
        assert_eq!(g.edges.len(), 9);
        assert!(g.edges.iter().all(|e| e.weight == BigRational::new(1.into(), 2.into())));
        let a1 = g.vertex_at(&ifs, &EvPeriodicWord::constant(1)).unwrap().unwrap();
        let a2 = g.vertex_at(&ifs, &EvPeriodicWord::constant(2)).unwrap().unwrap();
        let geo = g.geodesic(a1, a2);
        assert_eq!(geo.distance, Some(BigRational::one()));
        assert_eq!(geo.path.len(), 3);
        assert_eq!(g.geodesic(a1, a1).distance, Some(BigRational::zero()));
    }

    #[test]
    fn level_zero_is_base_graph() {
        let (g, _, _) = sierpinski_g(0.5, 0);
        assert_eq!(g.vertices.len(), 3);
        assert!(g.edges.iter().all(|e| e.weight.is_one()));
    }

    #[test]
    fn disconnected_is_infinite() {
        let (g, _, _) = sierpinski_g(0.5, 1);
        let cut = g.restrict(|e| e.block[0] == 0);
        let far = cut.vertices.iter().position(|v| v.coding == EvPeriodicWord::constant(2)).unwrap();
        let near = cut.vertices.iter().position(|v| v.coding == EvPeriodicWord::constant(1)).unwrap();
        assert!(cut.distance(near, far).is_none());
    }

    #[test]
    fn rationalize_simple_fractions() {
        assert_eq!(rationalize(1.0 / 3.0), Some(BigRational::new(1.into(), 3.into())));
        assert_eq!(rationalize(0.35), Some(BigRational::new(7.into(), 20.into())));
        assert_eq!(rationalize(std::f64::consts::PI), None);
    }

    #[test]
    fn bad_weights_rejected() {
        let bad = WeightAssignment { tau0: BTreeMap::from([("1-2".to_string(), 0.0)]), r: vec![0.5; 3] };
        assert!(bad.typed::<f64>(3, 3).is_err());
        let bad_r = WeightAssignment::uniform(3, vec![1.2; 3]);
        assert!(bad_r.typed::<f64>(3, 3).is_err());
    }

    #[test]
    fn moran_examples() {
        let s = similarity_dimension(&[0.5; 3]).unwrap();
        assert!((s - 3f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert_eq!(similarity_dimension(&[0.3]).unwrap(), 0.0);
        let m = 2.0;
        let r = vec![1.0 / (2.0 * m + 2.0); 15];
        assert!((similarity_dimension(&r).unwrap() - 15f64.ln() / 6f64.ln()).abs() < 1e-12);
        assert!(similarity_dimension(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn decomposition_forced_junction() {
        // two triangles 0-1-2 and 1-2-3 sharing {1, 2}
        let g1 = HashSet::from([(0, 1), (0, 2), (1, 2)]);
        let g2 = HashSet::from([(1, 3), (2, 3)]);
        let (p1, p2) = decompose_path_by_subgraphs(&[0, 1, 3], &g1, &g2, (1, 2)).unwrap();
        assert_eq!(p1, vec![0, 1]);
        assert_eq!(p2, vec![1, 3]);
        assert!(matches!(decompose_path_by_subgraphs(&[0, 1], &g1, &g2, (1, 2)), Err(Error::DecompositionError(_))));
    }
}
