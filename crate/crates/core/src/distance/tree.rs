use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{Closest, SignedDistanceResult};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Pseudonormals, TriMesh, Vec3};

pub const DEFAULT_LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, PartialEq)]
struct OrderedDist(f64);

impl Eq for OrderedDist {}

impl PartialOrd for OrderedDist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedDist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf { bounds: Aabb, start: u32, count: u32 },
    Inner { bounds: Aabb, left: u32, right: u32 },
}

impl Node {
    pub fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Binary AABB tree over the triangles of one mesh snapshot. Node 0 is the
/// root; leaves index ranges of [`AabbTree::order`].
#[derive(Clone, Debug)]
pub struct AabbTree {
    mesh: TriMesh,
    nodes: Vec<Node>,
    order: Vec<u32>,
    depth: usize,
    leaf_size: usize,
}

pub fn build_aabb_tree(mesh: &TriMesh) -> Result<AabbTree> {
    AabbTree::with_leaf_size(mesh, DEFAULT_LEAF_SIZE)
}

struct Builder<'a> {
    boxes: &'a [Aabb],
    centroids: &'a [Vec3],
    nodes: Vec<Node>,
    leaf_size: usize,
    depth: usize,
}

impl Builder<'_> {
    fn bounds(&self, items: &[u32]) -> Aabb {
        items
            .iter()
            .fold(Aabb::empty(), |acc, &t| acc.union(&self.boxes[t as usize]))
    }

    /// Splits at a leaf-size multiple near the median along the longest axis
    /// of the centroid bounds, so a tree over `T` triangles has exactly
    /// `ceil(T / leaf)` leaves.
    fn build(&mut self, order: &mut [u32], start: usize, level: usize) -> u32 {
        self.depth = self.depth.max(level + 1);
        let bounds = self.bounds(order);
        let id = self.nodes.len() as u32;
        let n = order.len();
        if n <= self.leaf_size {
            self.nodes.push(Node::Leaf {
                bounds,
                start: start as u32,
                count: n as u32,
            });
            return id;
        }
        let cbounds = Aabb::from_points(order.iter().map(|&t| &self.centroids[t as usize]));
        let axis = cbounds.longest_axis();
        let leaves = n.div_ceil(self.leaf_size);
        let mid = self.leaf_size * leaves.div_ceil(2);
        let centroids = self.centroids;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a as usize][axis]
                .total_cmp(&centroids[b as usize][axis])
                .then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf {
            bounds,
            start: 0,
            count: 0,
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.build(lo, start, level + 1);
        let right = self.build(hi, start + mid, level + 1);
        self.nodes[id as usize] = Node::Inner { bounds, left, right };
        id
    }
}

impl AabbTree {
    pub fn with_leaf_size(mesh: &TriMesh, leaf_size: usize) -> Result<Self> {
        if mesh.triangle_count() == 0 {
            return Err(Error::Empty("mesh has no triangles"));
        }
        if leaf_size == 0 {
            return Err(Error::InvalidArgument("leaf size must be positive".into()));
        }
        let tc = mesh.triangle_count();
        let mut boxes = Vec::with_capacity(tc);
        let mut centroids = Vec::with_capacity(tc);
        for t in 0..tc {
            let c = mesh.corners(t);
            boxes.push(Aabb::from_points(&c));
            centroids.push((c[0] + c[1] + c[2]) / 3.0);
        }
        let mut order: Vec<u32> = (0..tc as u32).collect();
        let mut b = Builder {
            boxes: &boxes,
            centroids: &centroids,
            nodes: Vec::with_capacity(2 * tc.div_ceil(leaf_size)),
            leaf_size,
            depth: 0,
        };
        b.build(&mut order, 0, 0);
        Ok(Self {
            mesh: mesh.clone(),
            nodes: b.nodes,
            order,
            depth: b.depth,
            leaf_size,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Number of levels (a single leaf has depth 1).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Best-first branch and bound: nodes are expanded in order of their box
    /// distance, so only boxes closer than the final answer are entered.
    pub(crate) fn closest(&self, q: &Vec3, visits: &mut usize) -> Closest {
        let mut best = Closest::NONE;
        let mut heap: BinaryHeap<Reverse<(OrderedDist, u32)>> = BinaryHeap::with_capacity(4 * self.depth + 4);
        heap.push(Reverse((OrderedDist(self.nodes[0].bounds().distance_squared(q)), 0)));
        while let Some(Reverse((OrderedDist(d2), id))) = heap.pop() {
            // ties must still be explored to keep the lowest-index winner
            if d2 > best.dist2 {
                break;
            }
            *visits += 1;
            match self.nodes[id as usize] {
                Node::Leaf { start, count, .. } => {
                    for &t in &self.order[start as usize..(start + count) as usize] {
                        best.offer(&self.mesh, t as usize, q);
                    }
                }
                Node::Inner { left, right, .. } => {
                    for child in [left, right] {
                        let dc = self.nodes[child as usize].bounds().distance_squared(q);
                        if dc <= best.dist2 {
                            heap.push(Reverse((OrderedDist(dc), child)));
                        }
                    }
                }
            }
        }
        best
    }

    /// Signed distance plus the number of nodes whose box was entered.
    pub fn signed_distance_counted(&self, pn: &Pseudonormals, q: &Vec3) -> (SignedDistanceResult, usize) {
        let mut visits = 0;
        let best = self.closest(q, &mut visits);
        (best.signed(&self.mesh, pn, q), visits)
    }
}

/// Branch-and-bound query; identical to
/// [`brute_force_signed_distance`](super::brute_force_signed_distance).
pub fn tree_signed_distance(tree: &AabbTree, pn: &Pseudonormals, q: &Vec3) -> SignedDistanceResult {
    let mut visits = 0;
    tree.closest(q, &mut visits).signed(&tree.mesh, pn, q)
}
