//! Rooted cube-trees over a Whitney cover: bounded-depth spanning trees,
//! the metric consistency certificate, subtree regions, and witness curves
//! with sampled clearance profiles.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::dyadic::DyadicCube;
use crate::math;
use crate::whitney::{face_adjacency, label_grid, WhitneyCover};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeError {
    /// A vertex is unreachable from the root within the depth bound.
    NotInClassK { vertex: u32 },
    DisconnectedCover,
    NotASubtree(String),
    PointNotInCube,
}

impl core::fmt::Display for TreeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TreeError::NotInClassK { vertex } => {
                write!(f, "not in G_k: vertex {vertex} unreachable within depth bound")
            }
            TreeError::DisconnectedCover => write!(f, "disconnected cover"),
            TreeError::NotASubtree(s) => write!(f, "vertex set is not a subtree: {s}"),
            TreeError::PointNotInCube => write!(f, "point not interior to the given cube"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TreeError {}

/// Rooted tree over vertices `0..n`; `parent[root] == u32::MAX`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub root: u32,
    pub parent: Vec<u32>,
    pub children: Vec<Vec<u32>>,
    pub depth: Vec<u32>,
}

impl Tree {
    fn from_parents(root: u32, parent: Vec<u32>) -> Tree {
        let n = parent.len();
        let mut children: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
        for (v, &p) in parent.iter().enumerate() {
            if p != u32::MAX {
                children[p as usize].push(v as u32);
            }
        }
        let mut depth = alloc::vec![0u32; n];
        // parents always settle before children in the constructions below,
        // but compute depths robustly by repeated relaxation over a BFS order
        let mut order = alloc::vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for &c in &children[v] {
                depth[c as usize] = depth[v] + 1;
                order.push(c);
            }
        }
        Tree {
            root,
            parent,
            children,
            depth,
        }
    }

    /// Vertices in root-first (breadth-first) order.
    pub fn bfs_order(&self) -> Vec<u32> {
        let mut order = alloc::vec![self.root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            order.extend_from_slice(&self.children[v]);
        }
        order
    }
}

/// Breadth-first spanning tree of a directed graph, depth-bounded.
///
/// Succeeds iff every vertex is reachable from `root` within `k` arcs; the
/// output tree's arcs form a subset of the input arcs and its depth is the
/// graph distance from the root.
pub fn spanning_tree(adj: &[Vec<u32>], root: u32, k: u32) -> Result<Tree, TreeError> {
    let n = adj.len();
    let mut parent = alloc::vec![u32::MAX; n];
    let mut dist = alloc::vec![u32::MAX; n];
    dist[root as usize] = 0;
    let mut queue = alloc::vec![root];
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &w in &adj[v as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[v as usize] + 1;
                parent[w as usize] = v;
                queue.push(w);
            }
        }
    }
    for v in 0..n as u32 {
        if dist[v as usize] == u32::MAX || dist[v as usize] > k {
            return Err(TreeError::NotInClassK { vertex: v });
        }
    }
    Ok(Tree::from_parents(root, parent))
}

/// Cube-tree: rooted tree whose vertices are the cover cubes and whose edges
/// are face-adjacency edges.
#[derive(Clone, Debug)]
pub struct CubeTree {
    pub tree: Tree,
    /// face-adjacency neighbor lists, sorted
    pub adjacency: Vec<Vec<u32>>,
    /// cube level per vertex (copied from the cover for convenience)
    pub levels: Vec<u32>,
}

/// Metric consistency certificate: for every descendant/ancestor pair
/// `(v', v'')`, `l_star * (m_{v'} - m_{v''}) >= rho(v', v'') - k_star`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyCertificate {
    pub l_star: u32,
    pub k_star: i64,
    /// pair attaining the bound (descendant, ancestor); root pair for a
    /// single-vertex tree
    pub witness: (u32, u32),
}

/// Worst slack `max (rho - l * dm)` over comparable pairs, with its witness.
fn certificate_for_l(tree: &Tree, levels: &[u32], l: i64) -> (i64, (u32, u32)) {
    let n = tree.parent.len();
    // best[v] = (max over ancestors v'' of (l*m'' - depth''), arg vertex)
    let mut best: Vec<(i64, u32)> = alloc::vec![(i64::MIN, u32::MAX); n];
    let mut k = i64::MIN;
    let mut wit = (tree.root, tree.root);
    for v in tree.bfs_order() {
        let vi = v as usize;
        if v != tree.root {
            let p = tree.parent[vi] as usize;
            let pv = l * levels[p] as i64 - tree.depth[p] as i64;
            best[vi] = if best[p].0 >= pv {
                best[p]
            } else {
                (pv, p as u32)
            };
            let val = tree.depth[vi] as i64 - l * levels[vi] as i64 + best[vi].0;
            if val > k {
                k = val;
                wit = (v, best[vi].1);
            }
        }
    }
    if k == i64::MIN {
        // single vertex: no comparable pairs, certificate trivially holds
        k = 0;
    }
    (k, wit)
}

/// Build the cube-tree: root at the largest cube (ties by index order, which
/// is the canonical cover order), shortest-path tree on the face-adjacency
/// graph with edge weight `max(side(u), side(v))`, then measure the smallest
/// consistency certificate, minimizing `k_star` and then `l_star` over
/// `l_star <= 64`.
pub fn build_cube_tree(cover: &WhitneyCover) -> Result<(CubeTree, ConsistencyCertificate), TreeError> {
    let labels = label_grid(cover);
    let adjacency = face_adjacency(cover, &labels);
    let n = cover.cubes.len();
    let levels: Vec<u32> = cover.cubes.iter().map(|c| c.level).collect();
    let root = 0u32; // cover is sorted by (level, index): first cube is largest
    let mut dist = alloc::vec![u64::MAX; n];
    let mut done = alloc::vec![false; n];
    let mut heap = alloc::collections::BinaryHeap::new();
    dist[root as usize] = 0;
    heap.push(Reverse((0u64, root)));
    while let Some(Reverse((dv, v))) = heap.pop() {
        let vi = v as usize;
        if done[vi] {
            continue;
        }
        done[vi] = true;
        for &w in &adjacency[vi] {
            let wi = w as usize;
            let weight = 1u64 << (cover.grid_level - levels[vi].min(levels[wi]));
            let nd = dv + weight;
            if nd < dist[wi] {
                dist[wi] = nd;
                heap.push(Reverse((nd, w)));
            }
        }
    }
    if done.iter().any(|&b| !b) {
        return Err(TreeError::DisconnectedCover);
    }
    // any optimal predecessor yields a shortest-path tree; prefer the
    // coarsest one (smallest id in canonical order) so paths descend
    // through large cubes, deterministically
    let mut parent = alloc::vec![u32::MAX; n];
    for v in 0..n as u32 {
        let vi = v as usize;
        if v == root {
            continue;
        }
        let mut best: Option<u32> = None;
        for &u in &adjacency[vi] {
            let ui = u as usize;
            let weight = 1u64 << (cover.grid_level - levels[vi].min(levels[ui]));
            if dist[ui] != u64::MAX && dist[ui] + weight == dist[vi] {
                let better = match best {
                    None => true,
                    Some(b) => u < b,
                };
                if better {
                    best = Some(u);
                }
            }
        }
        let p = best.expect("reachable vertex has an optimal predecessor");
        parent[vi] = p;
    }
    let tree = Tree::from_parents(root, parent);
    let mut cert: Option<ConsistencyCertificate> = None;
    for l in 1..=64u32 {
        let (k, wit) = certificate_for_l(&tree, &levels, l as i64);
        if cert.as_ref().map_or(true, |c| k < c.k_star) {
            cert = Some(ConsistencyCertificate {
                l_star: l,
                k_star: k,
                witness: wit,
            });
        }
    }
    Ok((
        CubeTree {
            tree,
            adjacency,
            levels,
        },
        cert.unwrap(),
    ))
}

/// Union of the open cubes of a subtree together with the open shared faces
/// along its tree edges.
#[derive(Clone, Debug)]
pub struct SubtreeRegion {
    pub vertices: Vec<u32>,
    /// minimal vertex (subtree root)
    pub top: u32,
    /// tree edges (child, parent) inside the subtree; each is a
    /// face-adjacency edge and contributes its open shared face
    pub edges: Vec<(u32, u32)>,
    pub measure: f64,
    /// measure / measure of the top cube
    pub ratio: f64,
}

pub fn subtree_region(
    cover: &WhitneyCover,
    ct: &CubeTree,
    vertices: &[u32],
) -> Result<SubtreeRegion, TreeError> {
    if vertices.is_empty() {
        return Err(TreeError::NotASubtree(String::from("empty vertex set")));
    }
    let mut in_set = alloc::vec![false; ct.tree.parent.len()];
    for &v in vertices {
        if in_set[v as usize] {
            return Err(TreeError::NotASubtree(String::from("duplicate vertex")));
        }
        in_set[v as usize] = true;
    }
    let mut top = None;
    let mut edges = Vec::new();
    for &v in vertices {
        let p = ct.tree.parent[v as usize];
        if p != u32::MAX && in_set[p as usize] {
            edges.push((v, p));
        } else if top.replace(v).is_some() {
            return Err(TreeError::NotASubtree(String::from(
                "more than one vertex without its parent in the set",
            )));
        }
    }
    let top = top.unwrap();
    let measure: f64 = vertices
        .iter()
        .map(|&v| cover.cubes[v as usize].measure())
        .sum();
    let ratio = measure / cover.cubes[top as usize].measure();
    let mut vertices = vertices.to_vec();
    vertices.sort_unstable();
    edges.sort_unstable();
    Ok(SubtreeRegion {
        vertices,
        top,
        edges,
        measure,
        ratio,
    })
}

/// Polyline from a point toward the root with a sampled clearance profile.
#[derive(Clone, Debug)]
pub struct WitnessCurve {
    pub points: Vec<Vec<f64>>,
    pub length: f64,
    /// `(t, a_t)` samples: arc length from the start and the largest radius
    /// of a ball centered at the curve point inside the union of the two
    /// cubes active there
    pub clearance: Vec<(f64, f64)>,
    /// `min a_t / t` over samples with `t > 0`; `+inf` for a degenerate curve
    pub a_hat: f64,
}

const SAMPLES_PER_SEGMENT: usize = 64;

fn box_of(c: &DyadicCube) -> (Vec<f64>, Vec<f64>) {
    let d = c.dim();
    ((0..d).map(|i| c.lo(i)).collect(), (0..d).map(|i| c.hi(i)).collect())
}

// Radius of the largest ball centered at `p` inside the union of two boxes:
// the distance from `p` to comp(B1) ∩ comp(B2). Each complement is a union of
// 2d halfspaces, so the distance is the minimum over halfspace pairs; a pair
// on different axes contributes the root-sum-square of the per-axis
// distances, a pair on the same axis a band (possibly empty).
fn union_clearance(p: &[f64], b1: (&[f64], &[f64]), b2: (&[f64], &[f64])) -> f64 {
    let d = p.len();
    // halfspace encoded as (axis, is_upper, bound): lower means {x <= bound},
    // upper means {x >= bound}
    let sides = |b: (&[f64], &[f64])| -> Vec<(usize, bool, f64)> {
        let mut v = Vec::with_capacity(2 * d);
        for i in 0..d {
            v.push((i, false, b.0[i]));
            v.push((i, true, b.1[i]));
        }
        v
    };
    let hdist = |p: f64, upper: bool, c: f64| -> f64 {
        if upper {
            (c - p).max(0.0)
        } else {
            (p - c).max(0.0)
        }
    };
    let mut best = f64::INFINITY;
    for &(a1, u1, c1) in &sides(b1) {
        for &(a2, u2, c2) in &sides(b2) {
            let dist = if a1 != a2 {
                let d1 = hdist(p[a1], u1, c1);
                let d2 = hdist(p[a2], u2, c2);
                math::sqrt(d1 * d1 + d2 * d2)
            } else {
                match (u1, u2) {
                    (false, false) => hdist(p[a1], false, c1.min(c2)),
                    (true, true) => hdist(p[a1], true, c1.max(c2)),
                    // opposite sides form an open band (x > c2) ∩ (x < c1);
                    // a zero-width band lies on the union's boundary and is
                    // not in the complement, so require strict width
                    (false, true) => {
                        if c2 >= c1 {
                            continue;
                        }
                        hdist(p[a1], false, c1).max(hdist(p[a1], true, c2))
                    }
                    (true, false) => {
                        if c1 >= c2 {
                            continue;
                        }
                        hdist(p[a1], true, c1).max(hdist(p[a1], false, c2))
                    }
                }
            };
            best = best.min(dist);
        }
    }
    best
}

fn dist_pts(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    math::sqrt(s)
}

/// Witness curve from `x` (interior to cube `w`) to the root cube center:
/// `x -> center(w)`, then per tree edge the orthogonal projection of the
/// current center onto the shared face followed by the parent's center.
pub fn witness_curve(
    cover: &WhitneyCover,
    ct: &CubeTree,
    x: &[f64],
    w: u32,
) -> Result<WitnessCurve, TreeError> {
    let d = cover.dim;
    let (wlo, whi) = box_of(&cover.cubes[w as usize]);
    for i in 0..d {
        if !(x[i] > wlo[i] && x[i] < whi[i]) {
            return Err(TreeError::PointNotInCube);
        }
    }
    // segments annotated with the pair of cubes active on them
    let mut points: Vec<Vec<f64>> = alloc::vec![x.to_vec()];
    let mut active: Vec<(u32, u32)> = Vec::new(); // per segment
    points.push(cover.cubes[w as usize].center());
    active.push((w, w));
    let mut v = w;
    while ct.tree.parent[v as usize] != u32::MAX {
        let p = ct.tree.parent[v as usize];
        let (vlo, vhi) = box_of(&cover.cubes[v as usize]);
        let (plo, phi) = box_of(&cover.cubes[p as usize]);
        // shared face = intersection of the closed boxes (degenerate along
        // the touching axis); it is the full face of the smaller cube, and y
        // is the orthogonal projection of the smaller cube's center onto it
        // (per-axis clamp), hence a relative-interior point of the face
        let small = if cover.cubes[v as usize].level >= cover.cubes[p as usize].level {
            v
        } else {
            p
        };
        let sc = cover.cubes[small as usize].center();
        let y: Vec<f64> = (0..d)
            .map(|i| {
                let lo = if vlo[i] > plo[i] { vlo[i] } else { plo[i] };
                let hi = if vhi[i] < phi[i] { vhi[i] } else { phi[i] };
                sc[i].max(lo).min(hi)
            })
            .collect();
        points.push(y);
        active.push((v, p));
        points.push(cover.cubes[p as usize].center());
        active.push((v, p));
        v = p;
    }
    let mut clearance = Vec::new();
    let mut t0 = 0.0;
    let mut a_hat = f64::INFINITY;
    for(seg, pair) in active.iter().enumerate() {
        let a = &points[seg];
        let b = &points[seg + 1];
        let len = dist_pts(a, b);
        let (lo1, hi1) = box_of(&cover.cubes[pair.0 as usize]);
        let (lo2, hi2) = box_of(&cover.cubes[pair.1 as usize]);
        for s in 0..=SAMPLES_PER_SEGMENT {
            let u = s as f64 / SAMPLES_PER_SEGMENT as f64;
            let p: Vec<f64> = (0..d).map(|i| a[i] + u * (b[i] - a[i])).collect();
            let t = t0 + u * len;
            let at = union_clearance(&p, (&lo1, &hi1), (&lo2, &hi2));
            clearance.push((t, at));
            if t > 0.0 {
                a_hat = a_hat.min(at / t);
            }
        }
        t0 += len;
    }
    Ok(WitnessCurve {
        points,
        length: t0,
        clearance,
        a_hat: if t0 > 0.0 { a_hat } else { f64::INFINITY },
    })
}

/// Lower estimate of the inner-cone (John) constant of the rasterized
/// domain: worst witness-curve slope over all cube centers.
pub fn estimate_john_constant(cover: &WhitneyCover, ct: &CubeTree) -> f64 {
    let mut a = f64::INFINITY;
    for v in 0..cover.cubes.len() as u32 {
        let x = cover.cubes[v as usize].center();
        if let Ok(c) = witness_curve(cover, ct, &x, v) {
            a = a.min(c.a_hat);
        }
    }
    a
}
