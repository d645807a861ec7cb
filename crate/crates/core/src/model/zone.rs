use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Convex forbidden area, vertices in either winding order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon<S> {
    pub vertices: Vec<(S, S)>,
}

fn cross<S: Scalar>(o: (S, S), a: (S, S), b: (S, S)) -> S {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_intersect<S: Scalar>(p1: (S, S), p2: (S, S), q1: (S, S), q2: (S, S)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    let zero = S::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero)) && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero)) {
        return true;
    }
    let on_segment = |a: (S, S), b: (S, S), p: (S, S)| p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1);
    (d1 == zero && on_segment(q1, q2, p1))
        || (d2 == zero && on_segment(q1, q2, p2))
        || (d3 == zero && on_segment(p1, p2, q1))
        || (d4 == zero && on_segment(p1, p2, q2))
}

impl<S: Scalar> ConvexPolygon<S> {
    pub fn new(vertices: Vec<(S, S)>) -> Self {
        Self { vertices }
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: (S, S)) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut sign = S::zero();
        for k in 0..n {
            let c = cross(self.vertices[k], self.vertices[(k + 1) % n], p);
            if c != S::zero() {
                if sign == S::zero() {
                    sign = c.signum();
                } else if c.signum() != sign {
                    return false;
                }
            }
        }
        true
    }

    /// Whether the straight segment `a`-`b` touches the polygon.
    pub fn intersects_segment(&self, a: (S, S), b: (S, S)) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        let n = self.vertices.len();
        (0..n).any(|k| segments_intersect(a, b, self.vertices[k], self.vertices[(k + 1) % n]))
    }

    pub fn intersects_polyline(&self, points: &[(S, S)]) -> bool {
        points.windows(2).any(|w| self.intersects_segment(w[0], w[1]))
    }
}
