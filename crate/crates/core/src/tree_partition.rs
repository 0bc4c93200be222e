//! Partitions of rooted trees under a superadditive set functional: the
//! split-vertex search, the one-step partition Sigma, the recursive
//! partition S(T, gamma) with its cardinality and shape guarantees, the
//! cross-scale overlap count, and the balanced family S_n.

use alloc::vec::Vec;

use crate::cube_tree::Tree;
use crate::measure::PsiEval;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionError {
    /// `Psi(T) <= 2 gamma`: the split vertex need not exist.
    ThresholdTooLarge,
    TooManyChildren { vertex: u32, count: usize },
    /// several children exceed the split threshold; the functional is not
    /// strictly superadditive
    AmbiguousSplit { vertex: u32 },
    MismatchedTrees,
}

impl core::fmt::Display for PartitionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PartitionError::ThresholdTooLarge => write!(f, "threshold too large"),
            PartitionError::TooManyChildren { vertex, count } => {
                write!(f, "child count {count} at vertex {vertex} exceeds bound")
            }
            PartitionError::AmbiguousSplit { vertex } => {
                write!(f, "ambiguous split below vertex {vertex}")
            }
            PartitionError::MismatchedTrees => write!(f, "partitions come from different trees"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PartitionError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartShape {
    /// whole subtree below the vertex
    Subtree(u32),
    /// `T_v \ T_w`, `w` a strict descendant of `v`
    Diff(u32, u32),
    Singleton(u32),
}

#[derive(Clone, Debug)]
pub struct Part {
    pub shape: PartShape,
    /// sorted vertex ids
    pub vertices: Vec<u32>,
    pub psi: f64,
}

#[derive(Clone, Debug)]
pub struct TreePartition {
    pub parts: Vec<Part>,
    pub gamma: f64,
    pub k: u32,
    pub vertex_count: usize,
}

impl TreePartition {
    /// part index per vertex
    pub fn part_of(&self) -> Vec<u32> {
        let mut owner = alloc::vec![u32::MAX; self.vertex_count];
        for (i, p) in self.parts.iter().enumerate() {
            for &v in &p.vertices {
                debug_assert_eq!(owner[v as usize], u32::MAX);
                owner[v as usize] = i as u32;
            }
        }
        owner
    }
}

fn subtree_vertices(tree: &Tree, root: u32) -> Vec<u32> {
    let mut out = alloc::vec![root];
    let mut head = 0;
    while head < out.len() {
        let v = out[head] as usize;
        head += 1;
        out.extend_from_slice(&tree.children[v]);
    }
    out.sort_unstable();
    out
}

fn split_vertex_below(
    tree: &Tree,
    psi: &dyn PsiEval,
    top: u32,
    gamma: f64,
) -> Result<u32, PartitionError> {
    let total = psi.subtree(top);
    if !(total > 2.0 * gamma) {
        return Err(PartitionError::ThresholdTooLarge);
    }
    let bar = total - gamma;
    let mut v = top;
    loop {
        let mut next = None;
        for &c in &tree.children[v as usize] {
            if psi.subtree(c) > bar {
                if next.replace(c).is_some() {
                    return Err(PartitionError::AmbiguousSplit { vertex: v });
                }
            }
        }
        match next {
            Some(c) => v = c,
            None => return Ok(v),
        }
    }
}

/// The unique vertex `v` with `Psi(T_v) > Psi(T) - gamma` whose children all
/// stay at or below that threshold. Requires `Psi(T) > 2 gamma`.
pub fn split_vertex(tree: &Tree, psi: &dyn PsiEval, gamma: f64) -> Result<u32, PartitionError> {
    split_vertex_below(tree, psi, tree.root, gamma)
}

fn push_sigma_parts(
    tree: &Tree,
    psi: &dyn PsiEval,
    top: u32,
    v_hat: u32,
    parts: &mut Vec<Part>,
) {
    if v_hat != top {
        let below = subtree_vertices(tree, v_hat);
        let mut diff: Vec<u32> = subtree_vertices(tree, top);
        diff.retain(|v| below.binary_search(v).is_err());
        parts.push(Part {
            shape: PartShape::Diff(top, v_hat),
            vertices: diff,
            psi: psi.diff(top, v_hat),
        });
    }
    parts.push(Part {
        shape: PartShape::Singleton(v_hat),
        vertices: alloc::vec![v_hat],
        psi: psi.singleton(v_hat),
    });
}

/// One-step partition: the (possibly empty, then omitted) remainder above
/// the split vertex, the split vertex itself, and the child subtrees.
pub fn sigma(
    tree: &Tree,
    psi: &dyn PsiEval,
    gamma: f64,
) -> Result<TreePartition, PartitionError> {
    let v_hat = split_vertex(tree, psi, gamma)?;
    let mut parts = Vec::new();
    push_sigma_parts(tree, psi, tree.root, v_hat, &mut parts);
    for &c in &tree.children[v_hat as usize] {
        parts.push(Part {
            shape: PartShape::Subtree(c),
            vertices: subtree_vertices(tree, c),
            psi: psi.subtree(c),
        });
    }
    let k = tree.children.iter().map(|c| c.len()).max().unwrap_or(0) as u32;
    parts.sort_by_key(|p| p.vertices[0]);
    Ok(TreePartition {
        parts,
        gamma,
        k,
        vertex_count: tree.parent.len(),
    })
}

/// Recursive partition: a subtree with `Psi <= (k+1) gamma` stays whole;
/// otherwise it is split and the recursion continues into the split vertex's
/// child subtrees.
pub fn partition_tree(
    tree: &Tree,
    psi: &dyn PsiEval,
    gamma: f64,
    k: u32,
) -> Result<TreePartition, PartitionError> {
    for (v, c) in tree.children.iter().enumerate() {
        if c.len() > k as usize {
            return Err(PartitionError::TooManyChildren {
                vertex: v as u32,
                count: c.len(),
            });
        }
    }
    let mut parts = Vec::new();
    let mut stack = alloc::vec![tree.root];
    while let Some(u) = stack.pop() {
        if psi.subtree(u) <= (k as f64 + 1.0) * gamma {
            parts.push(Part {
                shape: PartShape::Subtree(u),
                vertices: subtree_vertices(tree, u),
                psi: psi.subtree(u),
            });
            continue;
        }
        let v_hat = split_vertex_below(tree, psi, u, gamma)?;
        push_sigma_parts(tree, psi, u, v_hat, &mut parts);
        stack.extend_from_slice(&tree.children[v_hat as usize]);
    }
    parts.sort_by_key(|p| p.vertices[0]);
    Ok(TreePartition {
        parts,
        gamma,
        k,
        vertex_count: tree.parent.len(),
    })
}

/// Balanced family `S_n = S(T, Psi(T)/n)`; a vanishing functional yields the
/// single-part partition.
pub fn balanced_partition(
    tree: &Tree,
    psi: &dyn PsiEval,
    n: u64,
    k: u32,
) -> Result<TreePartition, PartitionError> {
    let total = psi.total();
    if total <= 0.0 {
        return Ok(TreePartition {
            parts: alloc::vec![Part {
                shape: PartShape::Subtree(tree.root),
                vertices: subtree_vertices(tree, tree.root),
                psi: total,
            }],
            gamma: 0.0,
            k,
            vertex_count: tree.parent.len(),
        });
    }
    partition_tree(tree, psi, total / n as f64, k)
}

/// Max over parts of `p` of the number of parts of `q` it intersects.
pub fn overlap_count(p: &TreePartition, q: &TreePartition) -> Result<usize, PartitionError> {
    if p.vertex_count != q.vertex_count {
        return Err(PartitionError::MismatchedTrees);
    }
    let q_owner = q.part_of();
    let mut max = 0;
    let mut seen: Vec<u32> = Vec::new();
    for part in &p.parts {
        seen.clear();
        for &v in &part.vertices {
            let o = q_owner[v as usize];
            if !seen.contains(&o) {
                seen.push(o);
            }
        }
        max = max.max(seen.len());
    }
    Ok(max)
}
