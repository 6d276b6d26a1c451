//! Planar points, affine maps and similitudes.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Pt {
    pub x: f64,
    pub y: f64,
}

impl Pt {
    pub const fn new(x: f64, y: f64) -> Self {
        Pt { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Pt) -> f64 {
        (self - o).norm()
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, o: Pt) -> Pt {
        Pt::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, o: Pt) -> Pt {
        Pt::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Pt> for f64 {
    type Output = Pt;
    fn mul(self, p: Pt) -> Pt {
        Pt::new(self * p.x, self * p.y)
    }
}

/// `z ↦ M z + t` with `M = [[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub t: Pt,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { a: 1.0, b: 0.0, c: 0.0, d: 1.0, t: Pt::new(0.0, 0.0) };

    pub fn apply(&self, p: Pt) -> Pt {
        Pt::new(self.a * p.x + self.b * p.y + self.t.x, self.c * p.x + self.d * p.y + self.t.y)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Affine) -> Affine {
        Affine {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
            t: self.apply(o.t),
        }
    }

    pub fn inverse(&self) -> Affine {
        let det = self.a * self.d - self.b * self.c;
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        let t = Pt::new(-(a * self.t.x + b * self.t.y), -(c * self.t.x + d * self.t.y));
        Affine { a, b, c, d, t }
    }

    /// Unique fixed point of a contraction.
    pub fn fixed_point(&self) -> Pt {
        // (I - M) z = t
        let (p, q, r, s) = (1.0 - self.a, -self.b, -self.c, 1.0 - self.d);
        let det = p * s - q * r;
        Pt::new((s * self.t.x - q * self.t.y) / det, (p * self.t.y - r * self.t.x) / det)
    }
}

/// `z ↦ ratio · Rot(θ) · (reflect ? conj z : z) + translation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarSimilitude {
    pub ratio: f64,
    #[serde(default)]
    pub rotation_deg: f64,
    #[serde(default)]
    pub reflect: bool,
    #[serde(default)]
    pub translation: [f64; 2],
}

impl PlanarSimilitude {
    pub fn new(ratio: f64, rotation_deg: f64, reflect: bool, translation: [f64; 2]) -> Self {
        PlanarSimilitude { ratio, rotation_deg, reflect, translation }
    }

    /// Homothety `z ↦ r z + t`.
    pub fn homothety(ratio: f64, tx: f64, ty: f64) -> Self {
        Self::new(ratio, 0.0, false, [tx, ty])
    }

    pub fn rotation(&self) -> f64 {
        self.rotation_deg.to_radians()
    }

    pub fn affine(&self) -> Affine {
        let (s, c) = sin_cos_deg(self.rotation_deg);
        let r = self.ratio;
        let (a, b, cc, d) = if self.reflect { (r * c, r * s, r * s, -r * c) } else { (r * c, -r * s, r * s, r * c) };
        Affine { a, b, c: cc, d, t: Pt::new(self.translation[0], self.translation[1]) }
    }

    pub fn apply(&self, p: Pt) -> Pt {
        self.affine().apply(p)
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let q = deg / 90.0;
    if (q - q.round()).abs() < 1e-12 {
        match (q.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_is_exact() {
        let f = PlanarSimilitude::new(0.25, 90.0, false, [0.5, 0.0]);
        assert_eq!(f.apply(Pt::new(1.0, 0.0)), Pt::new(0.5, 0.25));
    }

    #[test]
    fn compose_and_invert() {
        let f = PlanarSimilitude::new(0.5, 30.0, true, [0.1, 0.2]).affine();
        let g = PlanarSimilitude::new(0.3, -45.0, false, [1.0, -1.0]).affine();
        let p = Pt::new(0.7, -0.4);
        let fg = f.compose(&g);
        assert!(fg.apply(p).dist(f.apply(g.apply(p))) < 1e-15);
        assert!(fg.inverse().apply(fg.apply(p)).dist(p) < 1e-13);
        let z = fg.fixed_point();
        assert!(fg.apply(z).dist(z) < 1e-13);
    }
}
