//! Convex polygons on the unit torus and piecewise-affine maps acting on them.
//!
//! All clipping is against axis-aligned lines, and intersection points take
//! the clipping coordinate verbatim, so dyadic inputs stay exact.

use serde::{Deserialize, Serialize};

/// Pieces with area below this are treated as clipping slivers.
pub const AREA_EPS: f64 = 1e-14;

/// Axis-aligned rectangle `[q0, q1) x [p0, p1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub q0: f64,
    pub q1: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Rect {
    pub fn new(q0: f64, q1: f64, p0: f64, p1: f64) -> Self {
        Rect { q0, q1, p0, p1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.q1 - self.q0).max(0.0) * (self.p1 - self.p0).max(0.0)
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: vec![
                [self.q0, self.p0],
                [self.q1, self.p0],
                [self.q1, self.p1],
                [self.q0, self.p1],
            ],
        }
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Clone, Copy)]
enum Side {
    /// keep coord <= c
    Below,
    /// keep coord >= c
    Above,
}

impl ConvexPolygon {
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut twice = 0.0;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            twice += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * twice.abs()
    }

    pub fn bbox(&self) -> Rect {
        let mut r = Rect::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for v in &self.vertices {
            r.q0 = r.q0.min(v[0]);
            r.q1 = r.q1.max(v[0]);
            r.p0 = r.p0.min(v[1]);
            r.p1 = r.p1.max(v[1]);
        }
        r
    }

    /// If the polygon is an axis-aligned rectangle, return it.
    pub fn as_rect(&self) -> Option<Rect> {
        let b = self.bbox();
        let on_corner = self
            .vertices
            .iter()
            .all(|v| (v[0] == b.q0 || v[0] == b.q1) && (v[1] == b.p0 || v[1] == b.p1));
        (self.vertices.len() == 4 && on_corner).then_some(b)
    }

    fn clip_axis(&self, axis: usize, c: f64, side: Side) -> ConvexPolygon {
        let inside = |v: &[f64; 2]| match side {
            Side::Below => v[axis] <= c,
            Side::Above => v[axis] >= c,
        };
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let cur = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            let (ci, ni) = (inside(&cur), inside(&next));
            if ci {
                out.push(cur);
            }
            if ci != ni {
                let t = (c - cur[axis]) / (next[axis] - cur[axis]);
                let other = 1 - axis;
                let mut x = [0.0; 2];
                x[axis] = c;
                x[other] = if cur[other] == next[other] {
                    cur[other]
                } else {
                    cur[other] + t * (next[other] - cur[other])
                };
                out.push(x);
            }
        }
        out.dedup();
        if out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        ConvexPolygon { vertices: out }
    }

    /// Intersection with a closed rectangle.
    pub fn clip_rect(&self, r: &Rect) -> ConvexPolygon {
        self.clip_axis(0, r.q0, Side::Above)
            .clip_axis(0, r.q1, Side::Below)
            .clip_axis(1, r.p0, Side::Above)
            .clip_axis(1, r.p1, Side::Below)
    }

    pub fn translate(&self, dq: f64, dp: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + dq, v[1] + dp])
                .collect(),
        }
    }

    /// Cut the polygon along integer grid lines and translate every piece
    /// back into the fundamental domain `[0,1)^2`.
    pub fn wrap_to_torus(&self) -> Vec<ConvexPolygon> {
        let b = self.bbox();
        let mut out = Vec::new();
        let (i0, i1) = (b.q0.floor() as i64, b.q1.ceil() as i64);
        let (j0, j1) = (b.p0.floor() as i64, b.p1.ceil() as i64);
        for i in i0..i1.max(i0 + 1) {
            for j in j0..j1.max(j0 + 1) {
                let cell = Rect::new(i as f64, (i + 1) as f64, j as f64, (j + 1) as f64);
                let piece = self.clip_rect(&cell);
                if piece.area() > AREA_EPS {
                    out.push(piece.translate(-(i as f64), -(j as f64)));
                }
            }
        }
        out
    }

    /// Split into the cells of an `m_q x m_p` grid, returning `(i_q, i_p, piece)`.
    pub fn split_grid(&self, m_q: usize, m_p: usize) -> Vec<(usize, usize, ConvexPolygon)> {
        let b = self.bbox();
        let lo = |x: f64, m: usize| ((x * m as f64).floor().max(0.0) as usize).min(m - 1);
        let hi = |x: f64, m: usize| ((x * m as f64).ceil().max(1.0) as usize).min(m);
        let mut out = Vec::new();
        for iq in lo(b.q0, m_q)..hi(b.q1, m_q) {
            for ip in lo(b.p0, m_p)..hi(b.p1, m_p) {
                let cell = Rect::new(
                    iq as f64 / m_q as f64,
                    (iq + 1) as f64 / m_q as f64,
                    ip as f64 / m_p as f64,
                    (ip + 1) as f64 / m_p as f64,
                );
                let piece = self.clip_rect(&cell);
                if piece.area() > AREA_EPS {
                    out.push((iq, ip, piece));
                }
            }
        }
        out
    }
}

/// `x -> matrix * x + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub matrix: [[f64; 2]; 2],
    pub shift: [f64; 2],
}

impl Affine {
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + self.shift[0],
            m[1][0] * v[0] + m[1][1] * v[1] + self.shift[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    pub fn apply_polygon(&self, poly: &ConvexPolygon) -> ConvexPolygon {
        let mut vertices: Vec<_> = poly.vertices.iter().map(|&v| self.apply(v)).collect();
        if self.det() < 0.0 {
            vertices.reverse();
        }
        ConvexPolygon { vertices }
    }
}

/// One branch of a piecewise-affine torus map: the affine law holds on
/// `domain` (closed), and the result is reduced modulo 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub domain: Rect,
    pub map: Affine,
}

/// Image of a region (finite union of polygons in `[0,1)^2`) under a
/// piecewise-affine map.
pub fn apply_pieces(pieces: &[AffinePiece], region: &[ConvexPolygon]) -> Vec<ConvexPolygon> {
    let mut out = Vec::new();
    for poly in region {
        for piece in pieces {
            let part = poly.clip_rect(&piece.domain);
            if part.area() > AREA_EPS {
                out.extend(piece.map.apply_polygon(&part).wrap_to_torus());
            }
        }
    }
    out
}

pub fn region_area(region: &[ConvexPolygon]) -> f64 {
    region.iter().map(ConvexPolygon::area).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_area() {
        assert_eq!(Rect::unit().to_polygon().area(), 1.0);
    }

    #[test]
    fn clip_keeps_exact_dyadic_coordinates() {
        let tri = ConvexPolygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        };
        let c = tri.clip_rect(&Rect::new(0.0, 0.5, 0.0, 1.0));
        assert_eq!(c.area(), 0.375);
    }

    #[test]
    fn wrap_splits_across_the_seam() {
        let r = Rect::new(0.75, 1.25, 0.0, 0.5).to_polygon();
        let pieces = r.wrap_to_torus();
        assert_eq!(pieces.len(), 2);
        assert_eq!(region_area(&pieces), 0.25);
        for p in &pieces {
            let b = p.bbox();
            assert!(b.q0 >= 0.0 && b.q1 <= 1.0);
        }
    }

    #[test]
    fn split_grid_covers_polygon() {
        let tri = ConvexPolygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        };
        let parts = tri.split_grid(4, 4);
        let total: f64 = parts.iter().map(|(_, _, p)| p.area()).sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reflection_keeps_orientation_positive() {
        let flip = Affine {
            matrix: [[-1.0, 0.0], [0.0, 1.0]],
            shift: [1.0, 0.0],
        };
        let img = flip.apply_polygon(&Rect::new(0.0, 0.5, 0.0, 1.0).to_polygon());
        assert_eq!(img.area(), 0.5);
        assert_eq!(img.as_rect(), Some(Rect::new(0.5, 1.0, 0.0, 1.0)));
    }
}
