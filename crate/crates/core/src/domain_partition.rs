//! Two-parameter family `B_{n,m}` of domain partitions: balance the Whitney
//! tree by the product functional, then sub-partition the heavy singleton
//! cubes with per-cube budgets proportional to their share of the mass.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cube_partition::{cell_intersection_volume, partition_cube, CubeCell};
use crate::cube_tree::CubeTree;
use crate::dyadic::DomainError;
use crate::measure::{MassVector, ProductMeasure, ProductPsi, PsiEval};
use crate::tree_partition::balanced_partition;
use crate::whitney::WhitneyCover;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// part `j` of the balanced tree partition, kept whole
    TreePart { part: usize },
    /// sub-cell of the heavy singleton cube of part `j`
    CubePart { part: usize, cell: usize },
}

#[derive(Clone, Debug)]
pub struct DomainCell {
    /// disjoint dyadic primitives whose union is the cell
    pub pieces: Vec<CubeCell>,
    /// Whitney vertices composing the cell (singleton for cube-part cells)
    pub vertices: Vec<u32>,
    pub provenance: Provenance,
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct DomainPartition {
    pub n: u64,
    pub m: u32,
    /// measured max child count of the tree
    pub k: u32,
    pub phi_total: f64,
    pub cells: Vec<DomainCell>,
    /// part indices of the heavy singletons (the set `J`)
    pub heavy_parts: Vec<usize>,
    /// sub-partition budgets, one per heavy part
    pub budgets: Vec<u64>,
}

impl DomainPartition {
    /// `C2 * Phi / (2^m n)` with `C2 = max(3, k+2)`.
    pub fn cell_budget(&self) -> f64 {
        let c2 = 3.0f64.max(self.k as f64 + 2.0);
        c2 * self.phi_total / ((1u64 << self.m) as f64 * self.n as f64)
    }
}

fn max_child_count(ct: &CubeTree) -> u32 {
    ct.tree.children.iter().map(|c| c.len()).max().unwrap_or(0) as u32
}

/// `B_{n,m}`: balanced tree partition into `2^m n` parts, heavy singletons
/// (mass at least `Phi / 2^m n`) refined by cube partitions with budgets
/// `l_j = ceil(2^m n Phi_j / Phi)`.
pub fn partition_domain(
    cover: &WhitneyCover,
    ct: &CubeTree,
    pm: &ProductMeasure,
    n: u64,
    m: u32,
) -> Result<DomainPartition, DomainError> {
    if n < 1 {
        return Err(DomainError::InvalidSpec(String::from(
            "partition size must be positive",
        )));
    }
    let psi = ProductPsi::new(cover, ct, pm);
    let k = max_child_count(ct);
    let total = psi.total();
    let big_n = (1u64 << m) * n;
    let all: Vec<u32> = (0..cover.cubes.len() as u32).collect();
    if total <= 0.0 {
        let pieces = all.iter().map(|&v| CubeCell::Cube(cover.cubes[v as usize].clone()));
        return Ok(DomainPartition {
            n,
            m,
            k,
            phi_total: 0.0,
            cells: alloc::vec![DomainCell {
                pieces: pieces.collect(),
                vertices: all,
                provenance: Provenance::TreePart { part: 0 },
                phi: 0.0,
            }],
            heavy_parts: Vec::new(),
            budgets: Vec::new(),
        });
    }
    let tp = balanced_partition(&ct.tree, &psi, big_n, k)
        .map_err(|e| DomainError::InvalidSpec(format!("tree partition failed: {e}")))?;
    let threshold = total / big_n as f64;
    let mut cells: Vec<DomainCell> = Vec::new();
    let mut heavy_parts: Vec<usize> = Vec::new();
    let mut budgets: Vec<u64> = Vec::new();
    for (j, part) in tp.parts.iter().enumerate() {
        let heavy_singleton = part.vertices.len() == 1 && part.psi >= threshold;
        if heavy_singleton {
            let v = part.vertices[0];
            let cube = &cover.cubes[v as usize];
            let phi_j = pm.phi_of_cube(cube);
            let l_j = crate::math::ceil(big_n as f64 * phi_j / total).max(1.0) as u64;
            let sub = partition_cube(cube, pm, l_j)?;
            for (c, (cell, &phi)) in sub.cells.iter().zip(&sub.phi).enumerate() {
                cells.push(DomainCell {
                    pieces: alloc::vec![cell.clone()],
                    vertices: alloc::vec![v],
                    provenance: Provenance::CubePart { part: j, cell: c },
                    phi,
                });
            }
            heavy_parts.push(j);
            budgets.push(l_j);
        } else {
            let mut masses = MassVector::zero(pm.measures.len());
            let mut pieces = Vec::with_capacity(part.vertices.len());
            for &v in &part.vertices {
                masses.add(&pm.masses_of_cube(&cover.cubes[v as usize]));
                pieces.push(CubeCell::Cube(cover.cubes[v as usize].clone()));
            }
            cells.push(DomainCell {
                pieces,
                vertices: part.vertices.clone(),
                provenance: Provenance::TreePart { part: j },
                phi: pm.phi(&masses),
            });
        }
    }
    // budget identity: sum of l_j is at most card J + 2^m n, exactly
    let sum: u64 = budgets.iter().sum();
    assert!(
        sum <= heavy_parts.len() as u64 + big_n,
        "budget identity violated: {sum} > {} + {big_n}",
        heavy_parts.len()
    );
    Ok(DomainPartition {
        n,
        m,
        k,
        phi_total: total,
        cells,
        heavy_parts,
        budgets,
    })
}

fn cells_meet(a: &DomainCell, b: &DomainCell, level: u32) -> bool {
    for pa in &a.pieces {
        for pb in &b.pieces {
            if cell_intersection_volume(pa, pb, level) > 0 {
                return true;
            }
        }
    }
    false
}

/// Max over cells of `a` of the number of cells of `b` meeting it with
/// positive measure; `a` and `b` must share `n` and differ in `m` by at
/// most one.
pub fn domain_overlap(
    a: &DomainPartition,
    b: &DomainPartition,
    level: u32,
) -> Result<usize, DomainError> {
    if a.n != b.n || (a.m as i64 - b.m as i64).abs() > 1 {
        return Err(DomainError::InvalidSpec(String::from(
            "overlap requires equal n and adjacent m",
        )));
    }
    let mut max = 0usize;
    for ca in &a.cells {
        let count = b.cells.iter().filter(|cb| cells_meet(ca, cb, level)).count();
        max = max.max(count);
    }
    Ok(max)
}
