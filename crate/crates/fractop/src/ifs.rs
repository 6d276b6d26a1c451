//! Iterated function systems of planar similitudes with declared critical identifications.
//!
//! An identification `{i, j, u, v}` states `f_i(π(v)) = f_j(π(u))`, so the
//! codings `i·v` and `j·u` denote one critical point.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Affine, PlanarSimilitude, Pt};
use crate::word::{all_words, EvPeriodicWord, Symbol, Word};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_PCF_CAP: usize = 10_000;

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub i: Symbol,
    pub j: Symbol,
    pub u: EvPeriodicWord,
    pub v: EvPeriodicWord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<PlanarSimilitude>,
    #[serde(default)]
    pub identifications: Vec<Identification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_bounds: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl IfsSpec {
    pub fn new(maps: Vec<PlanarSimilitude>, identifications: Vec<Identification>) -> Self {
        IfsSpec { maps, identifications, lipschitz_bounds: None, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio).collect()
    }

    /// `(A_i, B_i)` per map; the ratios themselves when no bounds are declared.
    pub fn bounds(&self) -> Vec<[f64; 2]> {
        match &self.lipschitz_bounds {
            Some(b) => b.clone(),
            None => self.maps.iter().map(|m| [m.ratio, m.ratio]).collect(),
        }
    }

    /// The same attractor with map `k` renamed `perm[k-1]`.
    pub fn relabeled(&self, perm: &[Symbol]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        for &p in perm {
            if p == 0 || p as usize > n || std::mem::replace(&mut seen[p as usize - 1], true) {
                return Err(Error::InvalidSpec(format!("{perm:?} is not a permutation of 1..={n}")));
            }
        }
        if perm.len() != n {
            return Err(Error::InvalidSpec(format!("{perm:?} is not a permutation of 1..={n}")));
        }
        let rename = |s: Symbol| perm[s as usize - 1];
        let word = |w: &EvPeriodicWord| {
            let f = |xs: &[Symbol]| xs.iter().map(|&c| rename(c)).collect::<Vec<_>>();
            EvPeriodicWord::new(f(w.pre()), f(w.per()))
        };
        let mut maps = self.maps.clone();
        let mut bounds = self.lipschitz_bounds.clone();
        for k in 0..n {
            let to = perm[k] as usize - 1;
            maps[to] = self.maps[k].clone();
            if let (Some(b), Some(src)) = (bounds.as_mut(), self.lipschitz_bounds.as_ref()) {
                b[to] = src[k];
            }
        }
        let identifications = self
            .identifications
            .iter()
            .map(|id| Ok(Identification { i: rename(id.i), j: rename(id.j), u: word(&id.u)?, v: word(&id.v)? }))
            .collect::<Result<_>>()?;
        Ok(IfsSpec { maps, identifications, lipschitz_bounds: bounds, tolerance: self.tolerance })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSpec("no maps".into()));
        }
        for (k, m) in self.maps.iter().enumerate() {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(Error::InvalidSpec(format!("map {} has ratio {} outside (0,1)", k + 1, m.ratio)));
            }
        }
        for id in &self.identifications {
            if id.i == id.j || id.i == 0 || id.j == 0 || id.i as usize > n || id.j as usize > n {
                return Err(Error::InvalidSpec(format!("bad identification pair ({}, {})", id.i, id.j)));
            }
            id.u.check_alphabet(n)?;
            id.v.check_alphabet(n)?;
        }
        if let Some(b) = &self.lipschitz_bounds {
            if b.len() != n {
                return Err(Error::InvalidSpec("lipschitz_bounds length differs from map count".into()));
            }
            for (k, [a, bb]) in b.iter().enumerate() {
                let r = self.maps[k].ratio;
                if !(0.0 < *a && *a <= r + 1e-15 && r <= *bb + 1e-15 && *bb < 1.0) {
                    return Err(Error::InvalidSpec(format!("bounds of map {} do not bracket its ratio", k + 1)));
                }
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSpec("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A validated IFS with its affine maps and critical coding classes.
#[derive(Clone, Debug)]
pub struct Ifs {
    pub spec: IfsSpec,
    maps: Vec<Affine>,
    /// Each class lists all declared codings of one critical point, sorted.
    classes: Vec<Vec<EvPeriodicWord>>,
    class_of: HashMap<EvPeriodicWord, usize>,
    ball_center: Pt,
    ball_radius: f64,
}

impl Ifs {
    pub fn new(spec: IfsSpec) -> Result<Self> {
        spec.validate()?;
        let maps: Vec<Affine> = spec.maps.iter().map(|m| m.affine()).collect();
        let fixed: Vec<Pt> = maps.iter().map(|a| a.fixed_point()).collect();
        let c = Pt::new(
            fixed.iter().map(|p| p.x).sum::<f64>() / fixed.len() as f64,
            fixed.iter().map(|p| p.y).sum::<f64>() / fixed.len() as f64,
        );
        let radius = maps
            .iter()
            .zip(&spec.maps)
            .map(|(a, m)| a.apply(c).dist(c) / (1.0 - m.ratio))
            .fold(0.0, f64::max)
            * (1.0 + 1e-12)
            + 1e-15;

        // union-find over the declared critical codings
        let mut codings: Vec<EvPeriodicWord> = Vec::new();
        let mut idx: HashMap<EvPeriodicWord, usize> = HashMap::new();
        let mut parent: Vec<usize> = Vec::new();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        let mut intern = |w: EvPeriodicWord, codings: &mut Vec<EvPeriodicWord>, parent: &mut Vec<usize>| -> usize {
            *idx.entry(w.clone()).or_insert_with(|| {
                codings.push(w);
                parent.push(parent.len());
                parent.len() - 1
            })
        };
        for id in &spec.identifications {
            let a = intern(id.v.prepend(&[id.i]), &mut codings, &mut parent);
            let b = intern(id.u.prepend(&[id.j]), &mut codings, &mut parent);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<EvPeriodicWord>> = BTreeMap::new();
        for k in 0..codings.len() {
            let r = find(&mut parent, k);
            groups.entry(r).or_default().push(codings[k].clone());
        }
        let mut classes: Vec<Vec<EvPeriodicWord>> = groups
            .into_values()
            .map(|mut g| {
                g.sort();
                g
            })
            .collect();
        classes.sort();
        let class_of = classes
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.iter().map(move |w| (w.clone(), k)))
            .collect();

        let ifs = Ifs { spec, maps, classes, class_of, ball_center: c, ball_radius: radius };
        ifs.check_identifications()?;
        Ok(ifs)
    }

    fn check_identifications(&self) -> Result<()> {
        let scale = self.diam_upper().max(1e-300);
        for id in &self.spec.identifications {
            let a = self.maps[id.i as usize - 1].apply(self.eval_unchecked(&id.v));
            let b = self.maps[id.j as usize - 1].apply(self.eval_unchecked(&id.u));
            if a.dist(b) > self.spec.tolerance * scale.max(1.0) {
                return Err(Error::InvalidSpec(format!(
                    "identification f{}({}) = f{}({}) fails numerically (gap {:.3e})",
                    id.i,
                    id.v,
                    id.j,
                    id.u,
                    a.dist(b)
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.spec.tolerance
    }

    pub fn ratio(&self, s: Symbol) -> f64 {
        self.spec.maps[s as usize - 1].ratio
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.spec.ratios()
    }

    pub fn r_max(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    pub fn r_min(&self) -> f64 {
        self.ratios().into_iter().fold(1.0, f64::min)
    }

    pub fn word_ratio(&self, w: &[Symbol]) -> f64 {
        w.iter().map(|&s| self.ratio(s)).product()
    }

    pub fn map(&self, s: Symbol) -> &Affine {
        &self.maps[s as usize - 1]
    }

    /// `f_{w_1} ∘ … ∘ f_{w_k}`.
    pub fn word_map(&self, w: &[Symbol]) -> Affine {
        w.iter().fold(Affine::IDENTITY, |acc, &s| acc.compose(self.map(s)))
    }

    /// Disc `B(c, R)` with `f_i(B) ⊆ B` for every map, hence `K ⊆ B`.
    pub fn ball(&self) -> (Pt, f64) {
        (self.ball_center, self.ball_radius)
    }

    pub fn diam_upper(&self) -> f64 {
        2.0 * self.ball_radius
    }

    pub fn classes(&self) -> &[Vec<EvPeriodicWord>] {
        &self.classes
    }

    pub fn class_of(&self, w: &EvPeriodicWord) -> Option<usize> {
        self.class_of.get(w).copied()
    }

    fn eval_unchecked(&self, w: &EvPeriodicWord) -> Pt {
        let z = self.word_map(w.per()).fixed_point();
        self.word_map(w.pre()).apply(z)
    }

    /// The point `π(w)`.
    pub fn eval(&self, w: &EvPeriodicWord) -> Result<Pt> {
        w.check_alphabet(self.n())?;
        Ok(self.eval_unchecked(w))
    }

    /// Every coding of `π(w)` reachable through the declared identifications.
    pub fn all_codings(&self, w: &EvPeriodicWord) -> Result<BTreeSet<EvPeriodicWord>> {
        w.check_alphabet(self.n())?;
        let widest = self.classes.iter().map(|c| c.len()).max().unwrap_or(1);
        let cap = 10 * w.len() * widest.max(self.n()).max(1);
        let mut seen = BTreeSet::new();
        seen.insert(w.clone());
        let mut queue = VecDeque::from([w.clone()]);
        while let Some(x) = queue.pop_front() {
            for p in 0..x.len() {
                let suffix = x.shift_n(p);
                if let Some(&c) = self.class_of.get(&suffix) {
                    let head = x.prefix(p);
                    for y in &self.classes[c] {
                        let z = y.prepend(&head);
                        if seen.insert(z.clone()) {
                            if seen.len() > cap {
                                return Err(Error::RewriteOverflow(cap));
                            }
                            queue.push_back(z);
                        }
                    }
                }
            }
        }
        Ok(seen)
    }

    /// Lexicographically smallest coding of `π(w)`.
    pub fn lowest_coding(&self, w: &EvPeriodicWord) -> Result<EvPeriodicWord> {
        Ok(self.all_codings(w)?.into_iter().next().expect("set holds w"))
    }

    /// First-symbol pairs `(i, j)`, `i < j`, whose 1-cylinders meet, with the class of the meeting point.
    pub fn touching_pairs(&self) -> BTreeMap<(Symbol, Symbol), usize> {
        let mut out = BTreeMap::new();
        for (k, class) in self.classes.iter().enumerate() {
            for a in class {
                for b in class {
                    if a.first() < b.first() {
                        out.entry((a.first(), b.first())).or_insert(k);
                    }
                }
            }
        }
        out
    }

    /// The IFS `F^m` over block symbols, with identifications induced from `F`.
    pub fn power(&self, m: usize) -> Result<Ifs> {
        let n = self.n();
        let words = all_words(n, m);
        let maps = words
            .iter()
            .map(|w| {
                let a = self.word_map(w);
                let rot = a.c.atan2(a.a).to_degrees();
                let ratio = self.word_ratio(w);
                let reflect = (a.a * a.d - a.b * a.c) < 0.0;
                PlanarSimilitude::new(ratio, rot, reflect, [a.t.x, a.t.y])
            })
            .collect();
        let mut ids = Vec::new();
        for class in &self.classes {
            for len in 0..m {
                for head in all_words(n, len) {
                    let members: Vec<EvPeriodicWord> = class.iter().map(|c| c.prepend(&head)).collect();
                    let base = &members[0];
                    for other in &members[1..] {
                        if base.prefix(m) == other.prefix(m) {
                            continue;
                        }
                        let i = base.blocks(m, n);
                        let j = other.blocks(m, n);
                        ids.push(Identification { i: i.first(), j: j.first(), v: i.shift(), u: j.shift() });
                    }
                }
            }
        }
        let spec = IfsSpec { maps, identifications: ids, lipschitz_bounds: None, tolerance: self.spec.tolerance };
        Ifs::new(spec)
    }

    /// Sample points of `K`: fixed points of the maps pushed through all words of length `depth`.
    pub fn net(&self, depth: usize, seeds: &[Pt]) -> Vec<Pt> {
        let mut pts = seeds.to_vec();
        for _ in 0..depth {
            pts = self.maps.iter().flat_map(|m| pts.iter().map(move |&p| m.apply(p))).collect();
        }
        pts
    }

    pub fn fixed_points(&self) -> Vec<Pt> {
        self.maps.iter().map(|m| m.fixed_point()).collect()
    }
}

/// A point where at least two level-`k` cylinders meet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Junction {
    pub point: EvPeriodicWord,
    pub cylinders: Vec<Word>,
}

impl Ifs {
    /// All junctions between cylinders of length `k`, sorted by lowest coding.
    pub fn level_junctions(&self, k: usize) -> Result<Vec<Junction>> {
        let mut out: BTreeMap<EvPeriodicWord, BTreeSet<Word>> = BTreeMap::new();
        for class in &self.classes {
            for len in 0..k {
                for head in all_words(self.n(), len) {
                    let codings = self.all_codings(&class[0].prepend(&head))?;
                    let cyl: BTreeSet<Word> = codings.iter().map(|c| c.prefix(k)).collect();
                    if cyl.len() >= 2 {
                        let low = codings.iter().next().unwrap().clone();
                        out.entry(low).or_default().extend(cyl);
                    }
                }
            }
        }
        Ok(out.into_iter().map(|(point, c)| Junction { point, cylinders: c.into_iter().collect() }).collect())
    }
}

/// One point of the post-critical set with all its codings.
#[derive(Clone, Debug, Serialize)]
pub struct PcPoint {
    pub codings: Vec<EvPeriodicWord>,
    pub pos: Pt,
}

#[derive(Clone, Debug, Serialize)]
pub struct PostCriticalData {
    pub codings: BTreeSet<EvPeriodicWord>,
    pub points: Vec<PcPoint>,
    pub boundary_symbols: BTreeSet<Symbol>,
    #[serde(skip)]
    point_of: HashMap<EvPeriodicWord, usize>,
}

impl PostCriticalData {
    /// Index of the post-critical point coded by `w`, if any.
    pub fn point_of(&self, w: &EvPeriodicWord) -> Option<usize> {
        self.point_of.get(w).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lowest coding of point `k`.
    pub fn lowest(&self, k: usize) -> &EvPeriodicWord {
        &self.points[k].codings[0]
    }
}

/// Shift closure of the critical codings, grouped into points.
pub fn compute_post_critical(ifs: &Ifs) -> Result<PostCriticalData> {
    compute_post_critical_capped(ifs, DEFAULT_PCF_CAP)
}

pub fn compute_post_critical_capped(ifs: &Ifs, cap: usize) -> Result<PostCriticalData> {
    let mut set: BTreeSet<EvPeriodicWord> = BTreeSet::new();
    let mut queue: VecDeque<EvPeriodicWord> = VecDeque::new();
    for class in ifs.classes() {
        for c in class {
            let s = c.shift();
            if set.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    while let Some(w) = queue.pop_front() {
        if set.len() > cap {
            return Err(Error::NotPcf(cap));
        }
        let mut next = vec![w.shift()];
        next.extend(ifs.all_codings(&w)?);
        for x in next {
            if set.insert(x.clone()) {
                queue.push_back(x);
            }
        }
    }
    if set.len() > cap {
        return Err(Error::NotPcf(cap));
    }

    // group: symbolic equivalence first, numeric coincidence second
    let words: Vec<EvPeriodicWord> = set.iter().cloned().collect();
    let mut group: Vec<usize> = (0..words.len()).collect();
    let index: HashMap<&EvPeriodicWord, usize> = words.iter().enumerate().map(|(k, w)| (w, k)).collect();
    for (k, w) in words.iter().enumerate() {
        for x in ifs.all_codings(w)? {
            let other = index[&x];
            let (a, b) = (root(&mut group, k), root(&mut group, other));
            if a != b {
                group[a.max(b)] = a.min(b);
            }
        }
    }
    let pos: Vec<Pt> = words.iter().map(|w| ifs.eval_unchecked(w)).collect();
    let tol = ifs.tolerance() * ifs.diam_upper().max(1.0);
    for a in 0..words.len() {
        for b in a + 1..words.len() {
            if pos[a].dist(pos[b]) <= tol {
                let (ra, rb) = (root(&mut group, a), root(&mut group, b));
                if ra != rb {
                    group[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..words.len() {
        let r = root(&mut group, k);
        by_root.entry(r).or_default().push(k);
    }
    let mut points: Vec<PcPoint> = by_root
        .into_values()
        .map(|ks| PcPoint { codings: ks.iter().map(|&k| words[k].clone()).collect(), pos: pos[ks[0]] })
        .collect();
    for p in &mut points {
        p.codings.sort();
    }
    points.sort_by(|a, b| a.codings[0].cmp(&b.codings[0]));
    let mut point_of = HashMap::new();
    for (k, p) in points.iter().enumerate() {
        for c in &p.codings {
            point_of.insert(c.clone(), k);
        }
    }
    let boundary_symbols = set.iter().map(|w| w.first()).collect();
    Ok(PostCriticalData { codings: set, points, boundary_symbols, point_of })
}

fn root(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

// ---------------------------------------------------------------------------
// cylinder geometry by branch and bound over bounding discs

#[derive(Clone)]
struct Piece {
    word: Word,
    map: Affine,
    ratio: f64,
}

impl Piece {
    fn center(&self, ifs: &Ifs) -> Pt {
        self.map.apply(ifs.ball_center)
    }
    fn radius(&self, ifs: &Ifs) -> f64 {
        self.ratio * ifs.ball_radius
    }
    fn children<'a>(&'a self, ifs: &'a Ifs) -> impl Iterator<Item = Piece> + 'a {
        (1..=ifs.n() as Symbol).map(move |s| {
            let mut word = self.word.clone();
            word.push(s);
            Piece { word, map: self.map.compose(ifs.map(s)), ratio: self.ratio * ifs.ratio(s) }
        })
    }
}

/// Points known to lie in `K`, used as witnesses for upper bounds.
fn witnesses(ifs: &Ifs, extra: &[Pt]) -> Vec<Pt> {
    let mut w = ifs.fixed_points();
    w.extend_from_slice(extra);
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistBounds {
    pub lower: f64,
    pub upper: f64,
}

struct HeapItem {
    key: f64,
    seq: u64,
    a: Piece,
    b: Piece,
}

impl PartialEq for HeapItem {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key && self.seq == o.seq
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        // min-heap on key, then insertion order
        o.key.total_cmp(&self.key).then(o.seq.cmp(&self.seq))
    }
}

impl Ifs {
    fn piece(&self, w: &[Symbol]) -> Piece {
        Piece { word: w.to_vec(), map: self.word_map(w), ratio: self.word_ratio(w) }
    }

    /// Bounds on `dist(f_I(K), f_J(K))` with `upper - lower ≤ eps` unless the budget runs out.
    pub fn cylinder_distance(&self, i: &[Symbol], j: &[Symbol], eps: f64, seeds: &[Pt]) -> DistBounds {
        self.cylinder_distance_until(i, j, seeds, |lb, ub| lb >= ub - eps)
    }

    fn cylinder_distance_until(
        &self,
        i: &[Symbol],
        j: &[Symbol],
        seeds: &[Pt],
        done: impl Fn(f64, f64) -> bool,
    ) -> DistBounds {
        let wit = witnesses(self, seeds);
        let pa = self.piece(i);
        let pb = self.piece(j);
        let mut ub = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut push = |a: Piece, b: Piece, heap: &mut BinaryHeap<HeapItem>, ub: &mut f64| {
            for p in &wit {
                let x = a.map.apply(*p);
                for q in &wit {
                    *ub = ub.min(x.dist(b.map.apply(*q)));
                }
            }
            let lb = (a.center(self).dist(b.center(self)) - a.radius(self) - b.radius(self)).max(0.0);
            seq += 1;
            heap.push(HeapItem { key: lb, seq, a, b });
        };
        push(pa, pb, &mut heap, &mut ub);
        let mut budget = 400_000usize;
        while let Some(top) = heap.peek() {
            if done(top.key, ub) || budget == 0 {
                return DistBounds { lower: top.key.min(ub), upper: ub };
            }
            let item = heap.pop().unwrap();
            budget -= 1;
            if item.a.radius(self) >= item.b.radius(self) {
                for c in item.a.children(self) {
                    push(c, item.b.clone(), &mut heap, &mut ub);
                }
            } else {
                for c in item.b.children(self) {
                    push(item.a.clone(), c, &mut heap, &mut ub);
                }
            }
        }
        DistBounds { lower: ub, upper: ub }
    }

    /// Bounds on `dist(f_I(K), p)`.
    pub fn cylinder_point_distance(&self, i: &[Symbol], p: Pt, eps: f64, seeds: &[Pt]) -> DistBounds {
        let wit = witnesses(self, seeds);
        let mut ub = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let ident = Piece { word: vec![], map: Affine::IDENTITY, ratio: 0.0 };
        let mut push = |a: Piece, heap: &mut BinaryHeap<HeapItem>, ub: &mut f64| {
            for q in &wit {
                *ub = ub.min(a.map.apply(*q).dist(p));
            }
            let lb = (a.center(self).dist(p) - a.radius(self)).max(0.0);
            seq += 1;
            heap.push(HeapItem { key: lb, seq, a, b: ident.clone() });
        };
        push(self.piece(i), &mut heap, &mut ub);
        let mut budget = 400_000usize;
        while let Some(top) = heap.peek() {
            if top.key >= ub - eps || budget == 0 {
                return DistBounds { lower: top.key.min(ub), upper: ub };
            }
            let item = heap.pop().unwrap();
            budget -= 1;
            for c in item.a.children(self) {
                push(c, &mut heap, &mut ub);
            }
        }
        DistBounds { lower: ub, upper: ub }
    }

    /// Geometric test whether `f_I(K) ∩ f_J(K) ≠ ∅`. The shared prefix is stripped first and the
    /// contact threshold is relative to the smaller remaining cylinder. `None` when undecided.
    pub fn cylinders_meet(&self, i: &[Symbol], j: &[Symbol], seeds: &[Pt]) -> Option<bool> {
        let k = i.iter().zip(j).take_while(|(a, b)| a == b).count();
        let (i, j) = (&i[k..], &j[k..]);
        if i.is_empty() || j.is_empty() {
            return Some(true);
        }
        let diam = self.diam_upper();
        let small = self.word_ratio(i).min(self.word_ratio(j));
        let touch = (1e-6 * small * diam).max(1e-13 * diam);
        let d = self.cylinder_distance_until(i, j, seeds, |lb, ub| ub <= touch || lb > touch);
        if d.upper <= touch {
            Some(true)
        } else if d.lower > touch {
            Some(false)
        } else {
            None
        }
    }

    /// Leaf pairs of sub-cylinders of `f_I(K)` and `f_J(K)` whose discs still overlap at radius below `mesh`.
    fn contact_leaves(&self, i: &[Symbol], j: &[Symbol], mesh: f64, cap: usize) -> Option<Vec<Pt>> {
        let mut out = Vec::new();
        let mut stack = vec![(self.piece(i), self.piece(j))];
        while let Some((a, b)) = stack.pop() {
            let gap = a.center(self).dist(b.center(self)) - a.radius(self) - b.radius(self);
            if gap > 0.0 {
                continue;
            }
            let (ra, rb) = (a.radius(self), b.radius(self));
            if ra < mesh && rb < mesh {
                out.push(0.5 * (a.center(self) + b.center(self)));
                if out.len() > cap {
                    return None;
                }
                continue;
            }
            if ra >= rb {
                for c in a.children(self) {
                    stack.push((c, b.clone()));
                }
            } else {
                for c in b.children(self) {
                    stack.push((a.clone(), c));
                }
            }
        }
        Some(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SicReport {
    pub sic_ok: bool,
    pub asc_constant_estimate: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub xi1: f64,
    #[serde(serialize_with = "crate::report::ser_f64_inf")]
    pub xi2: f64,
    pub mesh: f64,
    pub diam: f64,
    pub intersecting_pairs: Vec<(Symbol, Symbol)>,
}

/// Net estimates of SIC, the ASC constant and the separation constants `ξ₁`, `ξ₂`.
pub fn verify_sic_asc(ifs: &Ifs, pcd: &PostCriticalData, depth: usize) -> Result<SicReport> {
    if depth < 2 {
        return Err(Error::DomainError("depth must be at least 2".into()));
    }
    let n = ifs.n() as Symbol;
    let seeds: Vec<Pt> = pcd.points.iter().map(|p| p.pos).collect();
    let wit = witnesses(ifs, &seeds);
    let mut k = 0;
    while k < depth && ifs.n().pow(k as u32 + 1) * wit.len() <= 3000 {
        k += 1;
    }
    let pts = ifs.net(k, &wit);
    let mut net_diam: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            net_diam = net_diam.max(a.dist(*b));
        }
    }
    let diam = ifs.diam_upper().min(net_diam + 2.0 * ifs.diam_upper() * ifs.r_max().powi(k as i32));
    let mesh = ifs.r_max().powi(depth as i32) * ifs.diam_upper();
    let declared = ifs.touching_pairs();
    let touch_tol = 1e-9 * ifs.diam_upper();

    let mut xi1 = f64::INFINITY;
    let mut intersecting = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            let d = ifs.cylinder_distance(&[i], &[j], mesh, &seeds);
            match declared.get(&(i, j)) {
                Some(&class) => {
                    if d.lower > touch_tol {
                        return Err(Error::SicViolation(format!(
                            "declared intersection of cylinders {i} and {j} is contradicted (distance ≥ {:.3e})",
                            d.lower
                        )));
                    }
                    let z = ifs.eval_unchecked(&ifs.classes()[class][0]);
                    if let Some(leaves) = ifs.contact_leaves(&[i], &[j], mesh, 200_000) {
                        let far = 16.0 * mesh;
                        if let Some(p) = leaves.iter().find(|p| p.dist(z) > far.max(touch_tol)) {
                            return Err(Error::SicViolation(format!(
                                "cylinders {i} and {j} approach each other near ({:.6}, {:.6}) away from ({:.6}, {:.6})",
                                p.x, p.y, z.x, z.y
                            )));
                        }
                    }
                    intersecting.push((i, j));
                }
                None => {
                    if d.upper <= touch_tol {
                        return Err(Error::MissingIdentification { i, j });
                    }
                    xi1 = xi1.min(d.lower);
                }
            }
        }
    }

    let mut xi2 = f64::INFINITY;
    for i in 1..=n {
        for p in &pcd.points {
            if p.codings.iter().any(|c| c.first() == i) {
                continue;
            }
            let d = ifs.cylinder_point_distance(&[i], p.pos, mesh, &seeds);
            xi2 = xi2.min(d.lower);
        }
    }

    let asc = asc_estimate(ifs, &intersecting, depth);
    Ok(SicReport {
        sic_ok: true,
        asc_constant_estimate: asc,
        xi1,
        xi2,
        mesh,
        diam,
        intersecting_pairs: intersecting,
    })
}

/// `min d(x,y) / max(d(x,z), d(y,z))` over net points `x ∈ f_i(K)`, `y ∈ f_j(K)` around each touching point `z`.
fn asc_estimate(ifs: &Ifs, pairs: &[(Symbol, Symbol)], depth: usize) -> f64 {
    let declared = ifs.touching_pairs();
    let n = ifs.n();
    let mut k = 1;
    while k < depth && n.pow(k as u32 + 1) <= 2048 {
        k += 1;
    }
    let mut seeds = ifs.fixed_points();
    for class in ifs.classes() {
        seeds.push(ifs.eval_unchecked(&class[0]));
    }
    let base = ifs.net(k - 1, &seeds);
    let mut best: f64 = 1.0;
    for &(i, j) in pairs {
        let z = ifs.eval_unchecked(&ifs.classes()[declared[&(i, j)]][0]);
        let xs: Vec<Pt> = base.iter().map(|&p| ifs.map(i).apply(p)).collect();
        let ys: Vec<Pt> = base.iter().map(|&p| ifs.map(j).apply(p)).collect();
        let floor = 1e-9 * ifs.diam_upper();
        for x in &xs {
            let dxz = x.dist(z);
            for y in &ys {
                let dyz = y.dist(z);
                let m = dxz.max(dyz);
                if m <= floor {
                    continue;
                }
                best = best.min(x.dist(*y) / m);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn w(pre: &[Symbol], per: &[Symbol]) -> EvPeriodicWord {
        EvPeriodicWord::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    fn iterate_oracle(ifs: &Ifs, w: &EvPeriodicWord, steps: usize) -> Pt {
        // apply the first `steps` maps to an arbitrary start point
        let mut p = Pt::new(0.3, 0.1);
        for k in (0..steps).rev() {
            p = ifs.map(w.at(k)).apply(p);
        }
        p
    }

    #[test]
    fn eval_examples() {
        let s = samples::sierpinski();
        assert!(s.eval(&w(&[], &[1])).unwrap().dist(Pt::new(0.0, 0.0)) < 1e-15);
        let p = s.eval(&w(&[1], &[2])).unwrap();
        assert!(p.dist(Pt::new(0.5, 0.0)) < 1e-12);
        assert!(p.dist(iterate_oracle(&s, &w(&[1], &[2]), 50)) < 1e-12);
        let k = samples::k_alpha(0.25);
        let q = k.eval(&w(&[3], &[1])).unwrap();
        assert!(q.dist(Pt::new(0.5, 0.0)) < 1e-12);
        assert!(q.dist(iterate_oracle(&k, &w(&[3], &[1]), 50)) < 1e-12);
        assert!(matches!(s.eval(&w(&[4], &[1])), Err(Error::InvalidWord(_))));
    }

    #[test]
    fn post_critical_examples() {
        let s = samples::sierpinski();
        let p = compute_post_critical(&s).unwrap();
        let got: Vec<String> = p.codings.iter().map(|c| c.to_string()).collect();
        assert_eq!(got, ["(1)", "(2)", "(3)"]);
        assert_eq!(p.boundary_symbols, BTreeSet::from([1, 2, 3]));

        let k = samples::k_alpha(0.25);
        let p = compute_post_critical(&k).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.points[0].pos.dist(Pt::new(0.0, 0.0)) < 1e-15);
        assert!(p.points[1].pos.dist(Pt::new(1.0, 0.0)) < 1e-15);
        assert_eq!(p.boundary_symbols, BTreeSet::from([1, 3]));

        let bare = Ifs::new(IfsSpec::new(s.spec.maps.clone(), vec![])).unwrap();
        let p = compute_post_critical(&bare).unwrap();
        assert!(p.is_empty() && p.boundary_symbols.is_empty());
    }

    #[test]
    fn not_pcf_cap() {
        let s = samples::sierpinski();
        assert!(matches!(compute_post_critical_capped(&s, 2), Err(Error::NotPcf(2))));
    }

    #[test]
    fn lowest_coding_examples() {
        let s = samples::sierpinski();
        assert_eq!(s.lowest_coding(&w(&[2], &[1])).unwrap(), w(&[1], &[2]));
        assert_eq!(s.lowest_coding(&w(&[], &[1])).unwrap(), w(&[], &[1]));
        let k = samples::k_alpha(0.25);
        assert_eq!(k.lowest_coding(&w(&[3], &[1])).unwrap(), w(&[1], &[3]));
        let all = k.all_codings(&w(&[4], &[1])).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn power_keeps_post_critical_points() {
        for ifs in [samples::sierpinski(), samples::k_alpha(0.25)] {
            let base = compute_post_critical(&ifs).unwrap();
            for m in [2, 3] {
                let pm = compute_post_critical(&ifs.power(m).unwrap()).unwrap();
                assert_eq!(pm.len(), base.len());
                for (a, b) in base.points.iter().zip(&pm.points) {
                    assert!(a.pos.dist(b.pos) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sic_asc_examples() {
        let s = samples::sierpinski();
        let p = compute_post_critical(&s).unwrap();
        let r = verify_sic_asc(&s, &p, 8).unwrap();
        assert!(r.sic_ok);
        assert!(r.asc_constant_estimate > 0.4 && r.asc_constant_estimate <= 1.0);
        assert!(r.xi1.is_infinite());

        let c = samples::cantor_pair();
        let p = compute_post_critical(&c).unwrap();
        let r = verify_sic_asc(&c, &p, 10).unwrap();
        assert!((r.xi1 - 1.0 / 3.0).abs() <= r.mesh + 1e-12, "xi1 = {}", r.xi1);

        let one = samples::single_map();
        let p = compute_post_critical(&one).unwrap();
        let r = verify_sic_asc(&one, &p, 4).unwrap();
        assert!(r.xi1.is_infinite() && r.intersecting_pairs.is_empty());
    }

    #[test]
    fn missing_identification_is_reported() {
        let s = samples::sierpinski();
        let mut spec = s.spec.clone();
        spec.identifications.truncate(2);
        let ifs = Ifs::new(spec).unwrap();
        let p = compute_post_critical(&ifs).unwrap();
        assert!(matches!(verify_sic_asc(&ifs, &p, 6), Err(Error::MissingIdentification { i: 2, j: 3 })));
    }

    #[test]
    fn false_identification_is_rejected() {
        let s = samples::sierpinski();
        let mut spec = s.spec.clone();
        spec.identifications[0].u = w(&[], &[3]);
        assert!(matches!(Ifs::new(spec), Err(Error::InvalidSpec(_))));
    }
}
