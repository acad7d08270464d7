// SPDX-License-Identifier: Apache-2.0

//! Axis-aligned bounding volume hierarchy over mesh faces.

use super::{Point3, Vector3};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    pub fn distance_to_point(&self, p: &Point3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2.sqrt()
    }

    /// Slab test; returns the entry parameter when the ray hits within `[0, t_max]`.
    pub fn ray_entry(&self, origin: &Point3, inv_dir: &Vector3, t_max: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the origin lies on a slab plane; keep the interval.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(vertices: &[Point3], faces: &[[usize; 3]]) -> Self {
        if faces.is_empty() {
            return Self::default();
        }
        let boxes: Vec<Aabb> = faces
            .iter()
            .map(|f| {
                let mut b = Aabb::empty();
                for &v in f {
                    b.grow(&vertices[v]);
                }
                b
            })
            .collect();
        let centers: Vec<Point3> = boxes.iter().map(|b| nalgebra::center(&b.min, &b.max)).collect();
        let mut bvh = Self {
            nodes: Vec::with_capacity(2 * faces.len() / LEAF_SIZE + 1),
            order: (0..faces.len()).collect(),
        };
        bvh.split(&boxes, &centers, 0, faces.len());
        bvh
    }

    fn split(&mut self, boxes: &[Aabb], centers: &[Point3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &i in &self.order[start..end] {
            bounds.merge(&boxes[i]);
            cbounds.grow(&centers[i]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let extent = cbounds.max - cbounds.min;
        let axis = extent.imax();
        if extent[axis] <= 0.0 {
            return id;
        }
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centers[a][axis].total_cmp(&centers[b][axis])
        });
        let left = self.split(boxes, centers, start, mid);
        let right = self.split(boxes, centers, mid, end);
        self.nodes[id].kind = NodeKind::Inner { left, right };
        id
    }

    pub fn root_bounds(&self) -> (Point3, Point3) {
        let b = self.nodes[0].bounds;
        (b.min, b.max)
    }

    /// Best-first search for the minimum of `leaf` over faces, pruning nodes
    /// whose `lower_bound` cannot beat the current best.
    pub fn minimize<L, F>(&self, lower_bound: L, mut leaf: F) -> f64
    where
        L: Fn(&Aabb) -> f64,
        F: FnMut(usize, f64) -> f64,
    {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![(0usize, lower_bound(&self.nodes[0].bounds))];
        while let Some((id, lb)) = stack.pop() {
            if lb > best {
                continue;
            }
            match self.nodes[id].kind {
                NodeKind::Leaf { start, end } => {
                    for &face in &self.order[start..end] {
                        best = best.min(leaf(face, best));
                    }
                }
                NodeKind::Inner { left, right } => {
                    let lb_l = lower_bound(&self.nodes[left].bounds);
                    let lb_r = lower_bound(&self.nodes[right].bounds);
                    // Visit the closer child first.
                    if lb_l <= lb_r {
                        stack.push((right, lb_r));
                        stack.push((left, lb_l));
                    } else {
                        stack.push((left, lb_l));
                        stack.push((right, lb_r));
                    }
                }
            }
        }
        best
    }

    /// Visits every face whose box the ray enters before `t_max`.
    pub fn ray_candidates<F: FnMut(usize)>(&self, origin: &Point3, dir: &Vector3, t_max: f64, mut visit: F) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds.ray_entry(origin, &inv, t_max).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => self.order[start..end].iter().for_each(|&f| visit(f)),
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
    }
}
