//! Incremental kd-tree over joint configurations.
//!
//! Exact queries only. Nearest-neighbour ties resolve to the lowest
//! insertion index so tree growth is reproducible.

#[derive(Debug, Clone)]
struct KdNode {
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KdIndex {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<KdNode>,
}

impl KdIndex {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        KdIndex {
            dim,
            coords: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Insert a point; returns its index (insertion order).
    pub fn insert(&mut self, q: &[f64]) -> usize {
        assert_eq!(q.len(), self.dim);
        let idx = self.nodes.len();
        self.coords.extend_from_slice(q);
        if idx == 0 {
            self.nodes.push(KdNode {
                axis: 0,
                left: None,
                right: None,
            });
            return idx;
        }
        let mut cur = 0;
        loop {
            let axis = self.nodes[cur].axis;
            let go_left = q[axis] < self.point(cur)[axis];
            let next = if go_left {
                self.nodes[cur].left
            } else {
                self.nodes[cur].right
            };
            match next {
                Some(n) => cur = n,
                None => {
                    let depth_axis = (axis + 1) % self.dim;
                    self.nodes.push(KdNode {
                        axis: depth_axis,
                        left: None,
                        right: None,
                    });
                    if go_left {
                        self.nodes[cur].left = Some(idx);
                    } else {
                        self.nodes[cur].right = Some(idx);
                    }
                    return idx;
                }
            }
        }
    }

    fn dist2(&self, i: usize, q: &[f64]) -> f64 {
        self.point(i)
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Index of the nearest point (squared distance, index).
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, q, &mut best);
        Some(best)
    }

    fn nearest_rec(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        let d = self.dist2(node, q);
        if d < best.1 || (d == best.1 && node < best.0) {
            *best = (node, d);
        }
        let axis = self.nodes[node].axis;
        let diff = q[axis] - self.point(node)[axis];
        let (near, far) = if diff < 0.0 {
            (self.nodes[node].left, self.nodes[node].right)
        } else {
            (self.nodes[node].right, self.nodes[node].left)
        };
        if let Some(n) = near {
            self.nearest_rec(n, q, best);
        }
        if let Some(f) = far {
            if diff * diff <= best.1 {
                self.nearest_rec(f, q, best);
            }
        }
    }

    /// All indices within Euclidean distance `r` of `q`, ascending.
    pub fn within_radius(&self, q: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.radius_rec(0, q, r * r, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node: usize, q: &[f64], r2: f64, out: &mut Vec<usize>) {
        if self.dist2(node, q) <= r2 {
            out.push(node);
        }
        let axis = self.nodes[node].axis;
        let diff = q[axis] - self.point(node)[axis];
        let (near, far) = if diff < 0.0 {
            (self.nodes[node].left, self.nodes[node].right)
        } else {
            (self.nodes[node].right, self.nodes[node].left)
        };
        if let Some(n) = near {
            self.radius_rec(n, q, r2, out);
        }
        if let Some(f) = far {
            if diff * diff <= r2 {
                self.radius_rec(f, q, r2, out);
            }
        }
    }
}
