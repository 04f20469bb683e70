//! Closed sets with exact distance queries, used for porosity and
//! Minkowski-content experiments.

use super::bvh::{BoxTree, Segment};
use super::{Aabb, Point};
use crate::error::{invalid, Result};

pub trait PointSet: Sync + Send {
    fn dim(&self) -> usize;
    /// A box containing the set (for unbounded sets, the region of interest).
    fn bbox(&self) -> Aabb;
    fn dist(&self, p: &Point) -> f64;
}

pub struct SinglePoint {
    pub p: Point,
    pub n: usize,
}

impl PointSet for SinglePoint {
    fn dim(&self) -> usize {
        self.n
    }
    fn bbox(&self) -> Aabb {
        Aabb::point(self.p)
    }
    fn dist(&self, q: &Point) -> f64 {
        Aabb::point(self.p).dist2_point(q).sqrt()
    }
}

/// Union of straight segments.
pub struct Polyline {
    tree: BoxTree<Segment>,
    bbox: Aabb,
    n: usize,
}

impl Polyline {
    pub fn open(points: &[Point], n: usize) -> Self {
        let segs = points.windows(2).map(|w| Segment { a: w[0], b: w[1] }).collect();
        Self::from_segments(segs, n)
    }

    pub fn closed(points: &[Point], n: usize) -> Self {
        let m = points.len();
        let segs = (0..m).map(|i| Segment { a: points[i], b: points[(i + 1) % m] }).collect();
        Self::from_segments(segs, n)
    }

    fn from_segments(segs: Vec<Segment>, n: usize) -> Self {
        use super::bvh::Primitive;
        let bbox = segs.iter().fold(Aabb::empty(), |b, s| b.union(&s.bounds()));
        Polyline { tree: BoxTree::build(segs), bbox, n }
    }
}

impl PointSet for Polyline {
    fn dim(&self) -> usize {
        self.n
    }
    fn bbox(&self) -> Aabb {
        self.bbox
    }
    fn dist(&self, p: &Point) -> f64 {
        self.tree.nearest_point(p).sqrt()
    }
}

/// Boundary of a closed box.
pub struct BoxBoundary {
    pub b: Aabb,
    pub n: usize,
}

impl PointSet for BoxBoundary {
    fn dim(&self) -> usize {
        self.n
    }
    fn bbox(&self) -> Aabb {
        self.b
    }
    fn dist(&self, p: &Point) -> f64 {
        if self.b.interior_contains(p, self.n) {
            (0..self.n)
                .map(|a| (p[a] - self.b.lo[a]).min(self.b.hi[a] - p[a]))
                .fold(f64::INFINITY, f64::min)
        } else {
            self.b.dist2_point(p).sqrt()
        }
    }
}

/// The hyperplane `{x_axis = value}`; `window` is the region of interest.
pub struct Hyperplane {
    pub axis: usize,
    pub value: f64,
    pub window: Aabb,
    pub n: usize,
}

impl PointSet for Hyperplane {
    fn dim(&self) -> usize {
        self.n
    }
    fn bbox(&self) -> Aabb {
        self.window
    }
    fn dist(&self, p: &Point) -> f64 {
        (p[self.axis] - self.value).abs()
    }
}

pub struct PointCloud {
    tree: BoxTree<Aabb>,
    bbox: Aabb,
    n: usize,
}

impl PointCloud {
    pub fn new(points: &[Point], n: usize) -> Self {
        let boxes: Vec<Aabb> = points.iter().map(|&p| Aabb::point(p)).collect();
        let bbox = boxes.iter().fold(Aabb::empty(), |b, x| b.union(x));
        PointCloud { tree: BoxTree::build(boxes), bbox, n }
    }
}

impl PointSet for PointCloud {
    fn dim(&self) -> usize {
        self.n
    }
    fn bbox(&self) -> Aabb {
        self.bbox
    }
    fn dist(&self, p: &Point) -> f64 {
        self.tree.nearest_point(p).sqrt()
    }
}

fn koch_refine(a: Point, b: Point, level: u32, sign: f64, out: &mut Vec<Point>) {
    if level == 0 {
        out.push(a);
        return;
    }
    let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
    let p1 = [a[0] + d[0], a[1] + d[1], 0.0];
    let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1], 0.0];
    let (s, c) = ((sign * std::f64::consts::FRAC_PI_3).sin(), 0.5);
    let peak = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1], 0.0];
    koch_refine(a, p1, level - 1, sign, out);
    koch_refine(p1, peak, level - 1, sign, out);
    koch_refine(peak, p3, level - 1, sign, out);
    koch_refine(p3, b, level - 1, sign, out);
}

/// Vertices of the level-`level` Koch curve from `(0,0)` to `(1,0)`.
pub fn koch_curve(level: u32) -> Vec<Point> {
    let mut out = Vec::with_capacity(4usize.pow(level) + 1);
    koch_refine([0.0; 3], [1.0, 0.0, 0.0], level, 1.0, &mut out);
    out.push([1.0, 0.0, 0.0]);
    out
}

/// Vertices (counter-clockwise, not repeated) of the level-`level` Koch
/// snowflake of side 1 centred at the origin.
pub fn koch_snowflake(level: u32) -> Vec<Point> {
    let r = 1.0 / 3f64.sqrt();
    let v: Vec<Point> = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|deg| [r * deg.to_radians().cos(), r * deg.to_radians().sin(), 0.0])
        .collect();
    let mut out = Vec::new();
    for i in 0..3 {
        koch_refine(v[i], v[(i + 1) % 3], level, -1.0, &mut out);
    }
    out
}

/// Builds one of the named sets: `point`, `segment`, `square-boundary`,
/// `cube-boundary`, `hyperplane`, `koch-curve[:level]`, `koch-snowflake[:level]`.
pub fn named_set(name: &str, n: usize) -> Result<Box<dyn PointSet>> {
    let (base, level) = match name.split_once(':') {
        Some((b, l)) => (b, Some(l.parse::<u32>().map_err(|_| invalid("set", format!("bad level in {name:?}")))?)),
        None => (name, None),
    };
    let unit = {
        let mut hi = [0.0; 3];
        for x in hi.iter_mut().take(n) {
            *x = 1.0;
        }
        Aabb::new([0.0; 3], hi)
    };
    Ok(match base {
        "point" => Box::new(SinglePoint { p: [0.0; 3], n }),
        "segment" => Box::new(Polyline::open(&[[0.0; 3], [1.0, 0.0, 0.0]], n)),
        "square-boundary" | "cube-boundary" => Box::new(BoxBoundary { b: unit, n }),
        "hyperplane" => Box::new(Hyperplane { axis: n - 1, value: 0.0, window: unit, n }),
        "koch-curve" => {
            if n != 2 {
                return Err(invalid("n", "the Koch curve is planar"));
            }
            Box::new(Polyline::open(&koch_curve(level.unwrap_or(8)), 2))
        }
        "koch-snowflake" => {
            if n != 2 {
                return Err(invalid("n", "the Koch snowflake is planar"));
            }
            Box::new(Polyline::closed(&koch_snowflake(level.unwrap_or(7)), 2))
        }
        _ => return Err(invalid("set", format!("unknown set {name:?}"))),
    })
}
