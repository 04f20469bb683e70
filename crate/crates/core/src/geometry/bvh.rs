//! Bounding-volume hierarchy for exact nearest-distance queries.

use super::{Aabb, Point};

pub trait Primitive: Sync + Send {
    fn bounds(&self) -> Aabb;
    /// Squared distance from a point.
    fn dist2_point(&self, p: &Point) -> f64;
}

impl Primitive for Aabb {
    fn bounds(&self) -> Aabb {
        *self
    }
    fn dist2_point(&self, p: &Point) -> f64 {
        Aabb::dist2_point(self, p)
    }
}

/// Closed straight segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Primitive for Segment {
    fn bounds(&self) -> Aabb {
        Aabb::point(self.a).union(&Aabb::point(self.b))
    }

    fn dist2_point(&self, p: &Point) -> f64 {
        let mut ab = [0.0; 3];
        let mut ap = [0.0; 3];
        for i in 0..3 {
            ab[i] = self.b[i] - self.a[i];
            ap[i] = p[i] - self.a[i];
        }
        let len2: f64 = ab.iter().map(|x| x * x).sum();
        let t = if len2 > 0.0 {
            (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (0..3).map(|i| (ap[i] - t * ab[i]).powi(2)).sum()
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    start: u32,
    count: u32,
    // index of the left child; the right child follows it. Zero marks a leaf.
    left: u32,
}

const LEAF: usize = 4;

#[derive(Clone, Debug)]
pub struct BoxTree<T> {
    nodes: Vec<Node>,
    items: Vec<T>,
}

impl<T: Primitive> BoxTree<T> {
    pub fn build(mut items: Vec<T>) -> Self {
        let mut nodes = Vec::with_capacity(2 * items.len() / LEAF + 1);
        if !items.is_empty() {
            let n = items.len();
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: n as u32, left: 0 });
            Self::split(&mut nodes, &mut items, 0);
        }
        BoxTree { nodes, items }
    }

    fn split(nodes: &mut Vec<Node>, items: &mut [T], idx: usize) {
        let (start, count) = (nodes[idx].start as usize, nodes[idx].count as usize);
        let slice = &mut items[start..start + count];
        let mut bounds = Aabb::empty();
        let mut cb = Aabb::empty();
        for it in slice.iter() {
            let b = it.bounds();
            bounds = bounds.union(&b);
            cb = cb.union(&Aabb::point(b.center()));
        }
        nodes[idx].bounds = bounds;
        if count <= LEAF {
            return;
        }
        let axis = (0..3)
            .max_by(|&a, &b| cb.extent(a).total_cmp(&cb.extent(b)))
            .unwrap_or(0);
        let mid = count / 2;
        slice.select_nth_unstable_by(mid, |x, y| {
            x.bounds().center()[axis].total_cmp(&y.bounds().center()[axis])
        });
        let left = nodes.len();
        nodes.push(Node { bounds: Aabb::empty(), start: start as u32, count: mid as u32, left: 0 });
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: (start + mid) as u32,
            count: (count - mid) as u32,
            left: 0,
        });
        nodes[idx].left = left as u32;
        Self::split(nodes, items, left);
        Self::split(nodes, items, left + 1);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    /// Generic best-first search. `lb` bounds the squared distance to anything
    /// inside a node box from below; `exact` gives the squared distance to an
    /// item. Returns `INFINITY` for an empty tree.
    pub fn nearest_by<L, E>(&self, lb: L, exact: E) -> f64
    where
        L: Fn(&Aabb) -> f64,
        E: Fn(&T) -> f64,
    {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack: Vec<(f64, usize)> = vec![(lb(&self.nodes[0].bounds), 0)];
        while let Some((d, idx)) = stack.pop() {
            if d >= best {
                continue;
            }
            let node = &self.nodes[idx];
            if node.left == 0 {
                let s = node.start as usize;
                for it in &self.items[s..s + node.count as usize] {
                    best = best.min(exact(it));
                }
                if best == 0.0 {
                    return 0.0;
                }
            } else {
                let l = node.left as usize;
                let dl = lb(&self.nodes[l].bounds);
                let dr = lb(&self.nodes[l + 1].bounds);
                // push the farther child first so the nearer one pops next
                if dl <= dr {
                    stack.push((dr, l + 1));
                    stack.push((dl, l));
                } else {
                    stack.push((dl, l));
                    stack.push((dr, l + 1));
                }
            }
        }
        best
    }

    /// Squared distance from `p` to the nearest item.
    pub fn nearest_point(&self, p: &Point) -> f64 {
        self.nearest_by(|b| b.dist2_point(p), |it| it.dist2_point(p))
    }
}

impl BoxTree<Aabb> {
    /// Squared distance from a closed box to the nearest item box.
    pub fn nearest_box(&self, q: &Aabb) -> f64 {
        self.nearest_by(|b| b.dist2_box(q), |it| it.dist2_box(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn boxes(seed: &[(f64, f64, f64)]) -> Vec<Aabb> {
        seed.iter()
            .map(|&(x, y, s)| Aabb::new([x, y, 0.0], [x + s, y + s, 0.0]))
            .collect()
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            seed in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0.0..1.0f64), 1..80),
            px in -6.0..6.0f64, py in -6.0..6.0f64, qs in 0.0..2.0f64,
        ) {
            let items = boxes(&seed);
            let tree = BoxTree::build(items.clone());
            let p = [px, py, 0.0];
            let brute = items.iter().map(|b| b.dist2_point(&p)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(tree.nearest_point(&p), brute);
            let q = Aabb::new(p, [px + qs, py + qs, 0.0]);
            let brute = items.iter().map(|b| b.dist2_box(&q)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(tree.nearest_box(&q), brute);
        }
    }

    #[test]
    fn segment_distance() {
        let s = Segment { a: [0.0, 0.0, 0.0], b: [2.0, 0.0, 0.0] };
        assert_eq!(s.dist2_point(&[1.0, 1.0, 0.0]), 1.0);
        assert_eq!(s.dist2_point(&[3.0, 0.0, 0.0]), 1.0);
        let t = BoxTree::build(vec![s]);
        assert_eq!(t.nearest_point(&[-1.0, 1.0, 0.0]), 2.0);
    }
}
