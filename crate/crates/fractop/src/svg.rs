//! SVG 1.1 renderings of iterations, refined graphs, main trees and automata.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::automaton::{State, TopologyAutomaton};
use crate::dendrite::{chain, IncidenceTree, PrimaryArcSystem};
use crate::error::Result;
use crate::geom::Pt;
use crate::graph::{RefinedGraph, Scalar};
use crate::ifs::Ifs;
use crate::word::{all_words, Symbol, Word};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const H: f64 = 0.866_025_403_784_438_6;
const COMPONENT_FILLS: [&str; 3] = ["#d1495b", "#00798c", "#edae49"];
const OTHER_FILL: &str = "#66a182";

/// Maps a bounding box onto the page with the y axis pointing up.
struct Frame {
    min: Pt,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl IntoIterator<Item = Pt>) -> Self {
        let (mut lo, mut hi) = (Pt::new(f64::INFINITY, f64::INFINITY), Pt::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Pt::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Pt::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Pt::new(0.0, 0.0);
            hi = Pt::new(1.0, 1.0);
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Frame { min: lo, scale, height: (hi.y - lo.y) * scale + 2.0 * MARGIN }
    }

    fn map(&self, p: Pt) -> (f64, f64) {
        (MARGIN + (p.x - self.min.x) * self.scale, self.height - MARGIN - (p.y - self.min.y) * self.scale)
    }

    fn points(&self, ps: &[Pt]) -> String {
        ps.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn open(&self) -> String {
        svg_open(SIZE, self.height)
    }
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn word_label(w: &[Symbol]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(if w.iter().any(|&s| s > 9) { "," } else { "" })
}

pub const TRIANGLE: [Pt; 3] = [Pt::new(0.0, 0.0), Pt::new(1.0, 0.0), Pt::new(0.5, H)];

/// Fixed points of the maps ordered by angle around their centroid; the base outline for
/// systems without a triangle.
pub fn base_polygon(ifs: &Ifs) -> Vec<Pt> {
    let mut pts = ifs.fixed_points();
    let n = pts.len().max(1) as f64;
    let c = Pt::new(pts.iter().map(|p| p.x).sum::<f64>() / n, pts.iter().map(|p| p.y).sum::<f64>() / n);
    pts.sort_by(|a, b| (a.y - c.y).atan2(a.x - c.x).total_cmp(&(b.y - c.y).atan2(b.x - c.x)));
    pts.dedup_by(|a, b| a.dist(*b) < 1e-12);
    pts
}

/// Images of `base` under `f_w` for each word, filled by the class given in `class_of`
/// (`Some(k)` picks one of three component colours).
pub fn iteration_svg(ifs: &Ifs, base: &[Pt], words: &[Word], class_of: impl Fn(usize) -> Option<usize>) -> String {
    let frame = Frame::fit(base.iter().copied());
    let mut out = frame.open();
    let _ = writeln!(out, "<polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>", frame.points(base));
    for (k, w) in words.iter().enumerate() {
        let f = ifs.word_map(w);
        let img: Vec<Pt> = base.iter().map(|&p| f.apply(p)).collect();
        let fill = class_of(k).map_or(OTHER_FILL, |c| COMPONENT_FILLS[c % 3]);
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{fill}\" fill-opacity=\"0.85\" stroke=\"black\" stroke-width=\"0.5\"><title>{}</title></polygon>",
            frame.points(&img),
            word_label(w)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertices at their positions and edges with stroke width proportional to the weight.
pub fn graph_svg<S: Scalar>(g: &RefinedGraph<S>) -> String {
    let frame = Frame::fit(g.vertices.iter().map(|v| v.pos));
    let mut out = frame.open();
    let wmax = g.edges.iter().map(|e| e.weight.as_f64()).fold(0.0, f64::max).max(1e-300);
    for e in &g.edges {
        let (x1, y1) = frame.map(g.vertices[e.a].pos);
        let (x2, y2) = frame.map(g.vertices[e.b].pos);
        let w = 0.5 + 4.5 * e.weight.as_f64() / wmax;
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"#00798c\" stroke-width=\"{w:.3}\"><title>{}</title></line>",
            escape(&e.weight.render())
        );
    }
    let r = (200.0 / (g.vertices.len() as f64).sqrt()).clamp(1.0, 6.0);
    for v in &g.vertices {
        let (x, y) = frame.map(v.pos);
        let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.2}\" fill=\"#d1495b\"><title>{}</title></circle>", v.coding);
    }
    out.push_str("</svg>\n");
    out
}

/// Largest level whose cylinder count stays below `cap`.
fn level_for(n: usize, cap: usize) -> usize {
    let mut k = 1;
    while n > 1 && n.pow(k as u32 + 1) <= cap {
        k += 1;
    }
    k
}

/// The main tree drawn through canonical-decomposition breakpoints, over an outline of small cylinders.
pub fn main_tree_svg(ifs: &Ifs, sys: &PrimaryArcSystem) -> Result<String> {
    let n = ifs.n();
    let outline_level = level_for(n, 1500);
    let arc_level = level_for(n, 4000);
    let base = base_polygon(ifs);
    let words = all_words(n, outline_level);
    let mut all = Vec::new();
    for w in &words {
        let f = ifs.word_map(w);
        all.extend(base.iter().map(|&p| f.apply(p)));
    }
    let frame = Frame::fit(all.iter().copied().chain(sys.pstar.iter().map(|p| p.pos)));
    let mut out = frame.open();
    for w in &words {
        let f = ifs.word_map(w);
        let img: Vec<Pt> = base.iter().map(|&p| f.apply(p)).collect();
        let _ = writeln!(out, "<polygon points=\"{}\" fill=\"#e8e8e8\" stroke=\"#bbbbbb\" stroke-width=\"0.3\"/>", frame.points(&img));
    }
    let tree = IncidenceTree::build(ifs, arc_level)?;
    for (k, &(a, b)) in sys.arcs.iter().enumerate() {
        let blocks = chain(ifs, &tree, &sys.pstar[a].coding, &sys.pstar[b].coding)?;
        let mut pts = vec![sys.pstar[a].pos];
        for blk in &blocks {
            pts.push(ifs.eval(&blk.exit)?);
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"><title>arc {k}</title></polyline>",
            frame.points(&pts),
            COMPONENT_FILLS[k % 3]
        );
    }
    for p in &sys.pstar {
        let (x, y) = frame.map(p.pos);
        let fill = if p.post_critical { "black" } else { "white" };
        let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\" fill=\"{fill}\" stroke=\"black\"><title>{}</title></circle>", p.coding);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// States on a circle, one arrow per (source, target) pair labelled with its letters.
pub fn automaton_svg(a: &TopologyAutomaton) -> String {
    let k = a.states.len();
    let (cx, cy, rad) = (SIZE / 2.0, SIZE / 2.0, SIZE / 2.0 - 70.0);
    let pos: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / k as f64 - std::f64::consts::FRAC_PI_2;
            (cx + rad * t.cos(), cy + rad * t.sin())
        })
        .collect();
    let mut out = svg_open(SIZE, SIZE);
    out.push_str("<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>\n");
    let mut edges: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (s, st) in a.states.iter().enumerate() {
        for i in 1..=a.n as Symbol {
            for j in 1..=a.n as Symbol {
                let t = a.state_index(a.step(*st, i, j)).expect("closed transition table");
                edges.entry((s, t)).or_default().push(format!("{i}{j}"));
            }
        }
    }
    let node_r = 22.0;
    for ((s, t), letters) in &edges {
        let label = escape(&letters.join(" "));
        let (x1, y1) = pos[*s];
        if s == t {
            let (dx, dy) = ((x1 - cx) / rad, (y1 - cy) / rad);
            let (lx, ly) = (x1 + dx * (node_r + 18.0), y1 + dy * (node_r + 18.0));
            let _ = writeln!(
                out,
                "<circle cx=\"{lx:.3}\" cy=\"{ly:.3}\" r=\"16\" fill=\"none\" stroke=\"#555555\"><title>{label}</title></circle>"
            );
            continue;
        }
        let (x2, y2) = pos[*t];
        let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
        let (ux, uy) = ((x2 - x1) / len, (y2 - y1) / len);
        let (ox, oy) = (-uy * 4.0, ux * 4.0);
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#555555\" marker-end=\"url(#arrow)\"><title>{label}</title></line>",
            x1 + ux * node_r + ox,
            y1 + uy * node_r + oy,
            x2 - ux * node_r + ox,
            y2 - uy * node_r + oy
        );
    }
    for (s, st) in a.states.iter().enumerate() {
        let (x, y) = pos[s];
        let fill = match st {
            State::Id => "#edae49",
            State::Exit => "#d1495b",
            State::Pair { .. } => "#a7d3db",
        };
        let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{node_r}\" fill=\"{fill}\" stroke=\"black\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{x:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            y + 3.5,
            escape(&st.to_string())
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::analyse;
    use crate::gasket::{validate_gasket, vertex_iteration};
    use crate::samples;

    #[test]
    fn sierpinski_iteration_has_nine_triangles() {
        let spec = samples::sierpinski_spec();
        let g = validate_gasket(&spec).unwrap();
        let it = vertex_iteration(&g, 1).unwrap();
        let ifs = samples::sierpinski();
        let svg = iteration_svg(&ifs, &TRIANGLE, &it.family.words, |k| it.components.iter().position(|c| c.contains(&k)));
        assert_eq!(svg.matches("<polygon").count(), 10);
        assert!(svg.starts_with("<?xml") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn automaton_nodes() {
        let a = analyse(&samples::sierpinski_spec()).unwrap();
        let svg = automaton_svg(&a.automaton);
        assert_eq!(svg.matches("<text").count(), 8);
        assert_eq!(svg, automaton_svg(&a.automaton));
    }
}
