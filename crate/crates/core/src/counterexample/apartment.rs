//! Rooms, passages and walls of a single apartment.

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, DyadicCube, Point};

/// Geometry attached to a closed cube `Q` with centre `x` and side `ℓ`:
/// the room `R = x ± ℓ/8`, the passage `P_s` of half-width `w = (ℓ/8)^s`
/// over heights `(x_n + ℓ/8, x_n + ℓ/4)`, the long passage `L_s` over
/// `(x_n, x_n + ℓ/2)` and the tiny passage `T_s` over
/// `(x_n + 5ℓ/32, x_n + 7ℓ/32)`. All boxes are open.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Apartment {
    pub host: DyadicCube,
    pub center: Point,
    pub side: f64,
    pub s: f64,
    pub n: usize,
}

impl Apartment {
    pub fn new(host: DyadicCube, s: f64, n: usize) -> Self {
        Apartment { host, center: host.center(n), side: host.side(), s, n }
    }

    /// Passage half-width `(ℓ/8)^s`.
    pub fn w(&self) -> f64 {
        (self.side / 8.0).powf(self.s)
    }

    fn column(&self, half: f64, lo: f64, hi: f64) -> Aabb {
        let mut b = Aabb::new([0.0; 3], [0.0; 3]);
        let n = self.n;
        for a in 0..n - 1 {
            b.lo[a] = self.center[a] - half;
            b.hi[a] = self.center[a] + half;
        }
        b.lo[n - 1] = self.center[n - 1] + lo;
        b.hi[n - 1] = self.center[n - 1] + hi;
        b
    }

    pub fn room(&self) -> Aabb {
        let e = self.side / 8.0;
        let mut b = Aabb::new([0.0; 3], [0.0; 3]);
        for a in 0..self.n {
            b.lo[a] = self.center[a] - e;
            b.hi[a] = self.center[a] + e;
        }
        b
    }

    pub fn passage(&self) -> Aabb {
        self.column(self.w(), self.side / 8.0, self.side / 4.0)
    }

    pub fn long_passage(&self) -> Aabb {
        self.column(self.w(), 0.0, self.side / 2.0)
    }

    pub fn tiny_passage(&self) -> Aabb {
        self.column(self.w(), 5.0 * self.side / 32.0, 7.0 * self.side / 32.0)
    }

    /// Two closed boxes around the room and passage: the middle half of `Q`
    /// and a cap of width `ℓ/8` over the passage opening. Every point of
    /// their union is closer to this apartment's walls than to anything
    /// outside `Q`, so the Whitney cubes inside depend on `ℓ` alone.
    pub fn core(&self) -> [Aabb; 2] {
        let q = self.side / 4.0;
        let mut mid = Aabb::new([0.0; 3], [0.0; 3]);
        for a in 0..self.n {
            mid.lo[a] = self.center[a] - q;
            mid.hi[a] = self.center[a] + q;
        }
        [mid, self.column(self.side / 16.0, self.side / 4.0, 5.0 * self.side / 16.0)]
    }

    /// Region where the Whitney search resolves the passage scale.
    pub fn passage_neighborhood(&self) -> Aabb {
        self.column(2.0 * self.w(), -self.side / 8.0, self.side / 2.0)
    }

    /// Closed, flat boxes removed from `Q`: the room boundary without the
    /// open mouth, and the passage's lateral walls.
    pub fn walls(&self) -> Vec<Aabb> {
        let n = self.n;
        let top = n - 1;
        let room = self.room();
        let w = self.w();
        let mut out = Vec::new();
        for a in 0..n {
            for (face, v) in [(0, room.lo[a]), (1, room.hi[a])] {
                let mut f = room;
                f.lo[a] = v;
                f.hi[a] = v;
                if a == top && face == 1 {
                    // ceiling: cut out the open mouth |x_i - c_i| < w
                    for b in 0..n - 1 {
                        let mut left = f;
                        left.hi[b] = self.center[b] - w;
                        let mut right = f;
                        right.lo[b] = self.center[b] + w;
                        // later axes keep the full range, earlier ones the mouth range
                        for c in 0..b {
                            left.lo[c] = self.center[c] - w;
                            left.hi[c] = self.center[c] + w;
                            right.lo[c] = self.center[c] - w;
                            right.hi[c] = self.center[c] + w;
                        }
                        out.push(left);
                        out.push(right);
                    }
                } else {
                    out.push(f);
                }
            }
        }
        let p = self.passage();
        let mut closed = p;
        for a in 0..n - 1 {
            closed.lo[a] = self.center[a] - w;
            closed.hi[a] = self.center[a] + w;
        }
        for a in 0..n - 1 {
            for v in [closed.lo[a], closed.hi[a]] {
                let mut f = closed;
                f.lo[a] = v;
                f.hi[a] = v;
                out.push(f);
            }
        }
        out
    }

    /// Whether `(ℓ/8)^s <= ℓ/32`.
    pub fn width_condition(side: f64, s: f64) -> bool {
        // equality is attained at dyadic sides, so allow rounding
        (side / 8.0).powf(s) <= side / 32.0 * (1.0 + 1e-12)
    }
}
