//! Built-in example systems used by the examples, tests and data files.

use crate::gasket;
use crate::geom::PlanarSimilitude;
use crate::ifs::{Identification, Ifs, IfsSpec};
use crate::word::{EvPeriodicWord, Symbol};

fn c(s: Symbol) -> EvPeriodicWord {
    EvPeriodicWord::constant(s)
}

fn id(i: Symbol, v: Symbol, j: Symbol, u: Symbol) -> Identification {
    Identification { i, j, u: c(u), v: c(v) }
}

const H: f64 = 0.866_025_403_784_438_6; // √3/2

/// Sierpinski gasket on `a₁=(0,0)`, `a₂=(1,0)`, `a₃=(1/2,√3/2)`.
pub fn sierpinski_spec() -> IfsSpec {
    let maps = vec![
        PlanarSimilitude::homothety(0.5, 0.0, 0.0),
        PlanarSimilitude::homothety(0.5, 0.5, 0.0),
        PlanarSimilitude::homothety(0.5, 0.25, H / 2.0),
    ];
    IfsSpec::new(maps, vec![id(1, 2, 2, 1), id(1, 3, 3, 1), id(2, 3, 3, 2)])
}

pub fn sierpinski() -> Ifs {
    Ifs::new(sierpinski_spec()).expect("built-in spec")
}

/// The dendrite `K_α`: `z/2`, `1/2 − αiz`, `(z+1)/2`, `1/2 + αiz`.
pub fn k_alpha_spec(alpha: f64) -> IfsSpec {
    let maps = vec![
        PlanarSimilitude::homothety(0.5, 0.0, 0.0),
        PlanarSimilitude::new(alpha, -90.0, false, [0.5, 0.0]),
        PlanarSimilitude::homothety(0.5, 0.5, 0.0),
        PlanarSimilitude::new(alpha, 90.0, false, [0.5, 0.0]),
    ];
    IfsSpec::new(maps, vec![id(1, 3, 3, 1), id(2, 1, 1, 3), id(4, 1, 1, 3)])
}

pub fn k_alpha(alpha: f64) -> Ifs {
    Ifs::new(k_alpha_spec(alpha)).expect("built-in spec")
}

/// `[0,1]` as the attractor of `x/2`, `(x+1)/2`.
pub fn interval_spec() -> IfsSpec {
    let maps = vec![PlanarSimilitude::homothety(0.5, 0.0, 0.0), PlanarSimilitude::homothety(0.5, 0.5, 0.0)];
    IfsSpec::new(maps, vec![id(1, 2, 2, 1)])
}

pub fn interval() -> Ifs {
    Ifs::new(interval_spec()).expect("built-in spec")
}

/// `[0,1]` cut into three consecutive pieces of ratios `r₁`, `1−r₁−r₃`, `r₃`.
pub fn interval3_spec(r1: f64, r3: f64) -> IfsSpec {
    let maps = vec![
        PlanarSimilitude::homothety(r1, 0.0, 0.0),
        PlanarSimilitude::homothety(1.0 - r1 - r3, r1, 0.0),
        PlanarSimilitude::homothety(r3, 1.0 - r3, 0.0),
    ];
    IfsSpec::new(maps, vec![id(1, 3, 2, 1), id(2, 3, 3, 1)])
}

pub fn interval3(r1: f64, r3: f64) -> Ifs {
    Ifs::new(interval3_spec(r1, r3)).expect("built-in spec")
}

/// Vicsek cross: four corner maps and a central map, all of ratio 1/3, on the unit square.
pub fn vicsek_spec() -> IfsSpec {
    let t = 2.0 / 3.0;
    let maps = vec![
        PlanarSimilitude::homothety(1.0 / 3.0, 0.0, 0.0),
        PlanarSimilitude::homothety(1.0 / 3.0, t, 0.0),
        PlanarSimilitude::homothety(1.0 / 3.0, t, t),
        PlanarSimilitude::homothety(1.0 / 3.0, 0.0, t),
        PlanarSimilitude::homothety(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
    ];
    IfsSpec::new(maps, vec![id(1, 3, 5, 1), id(2, 4, 5, 2), id(3, 1, 5, 3), id(4, 2, 5, 4)])
}

pub fn vicsek() -> Ifs {
    Ifs::new(vicsek_spec()).expect("built-in spec")
}

/// Middle-thirds Cantor set.
pub fn cantor_pair_spec() -> IfsSpec {
    let maps = vec![PlanarSimilitude::homothety(1.0 / 3.0, 0.0, 0.0), PlanarSimilitude::homothety(1.0 / 3.0, 2.0 / 3.0, 0.0)];
    IfsSpec::new(maps, vec![])
}

pub fn cantor_pair() -> Ifs {
    Ifs::new(cantor_pair_spec()).expect("built-in spec")
}

pub fn single_map_spec() -> IfsSpec {
    IfsSpec::new(vec![PlanarSimilitude::homothety(0.5, 0.0, 0.0)], vec![])
}

pub fn single_map() -> Ifs {
    Ifs::new(single_map_spec()).expect("built-in spec")
}

/// Three disjoint corner triangles of ratio `r < 1/2`.
pub fn corner_triangles_spec(r: f64) -> IfsSpec {
    gasket::gasket_spec(&[(r, 0.0, 0.0), (r, 1.0 - r, 0.0), (r, 0.0, 1.0 - r)]).expect("built-in gasket")
}

/// A gasket with corners of ratio 1/3 and two private triangles of side 1/6 in the middle third of each edge.
pub fn augmented_gasket_spec() -> IfsSpec {
    let t = 1.0 / 3.0;
    let p = 1.0 / 6.0;
    gasket::gasket_spec(&[
        (t, 0.0, 0.0),
        (t, 2.0 * t, 0.0),
        (t, 0.0, 2.0 * t),
        (p, t, 0.0),
        (p, 0.5, 0.0),
        (p, 0.0, t),
        (p, 0.0, 0.5),
        (p, 0.5, t),
        (p, t, 0.5),
    ])
    .expect("built-in gasket")
}

/// Sixteen basic triangles touching only at vertices, including one inner triangle.
pub fn sixteen_triangle_spec() -> IfsSpec {
    gasket::gasket_spec(&[
        (0.2, 0.0, 0.0),
        (0.2, 0.8, 0.0),
        (0.2, 0.0, 0.8),
        (0.3, 0.2, 0.0),
        (1.0 / 6.0, 0.5, 0.0),
        (1.0 / 15.0, 2.0 / 3.0, 0.0),
        (1.0 / 15.0, 11.0 / 15.0, 0.0),
        (0.2, 0.0, 0.6),
        (0.2, 0.0, 0.4),
        (0.1, 0.0, 0.2),
        (0.1, 0.0, 0.3),
        (0.15, 0.2, 0.65),
        (0.3, 0.35, 0.35),
        (0.05, 0.65, 0.3),
        (0.1, 0.7, 0.2),
        (0.1, 0.6, 0.2),
    ])
    .expect("built-in gasket")
}

/// Every built-in spec with the file stem used under `data/`.
pub fn catalog() -> Vec<(&'static str, IfsSpec)> {
    vec![
        ("sierpinski", sierpinski_spec()),
        ("k_quarter", k_alpha_spec(0.25)),
        ("interval", interval_spec()),
        ("vicsek", vicsek_spec()),
        ("interval3_quarter", interval3_spec(0.25, 0.25)),
        ("interval3_squared", interval3_spec(0.0625, 0.0625)),
        ("interval3_skew", interval3_spec(0.25, 0.125)),
        ("cantor", cantor_pair_spec()),
        ("single_map", single_map_spec()),
        ("corner_triangles", corner_triangles_spec(0.25)),
        ("augmented_gasket", augmented_gasket_spec()),
        ("sixteen_triangles", sixteen_triangle_spec()),
    ]
}
