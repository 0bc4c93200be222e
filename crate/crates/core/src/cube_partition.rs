//! Partition of a dyadic cube into at most `2^d n` dyadic subcubes and ring
//! regions, each carrying at most `3 Phi(K)/n` of a superadditive product
//! measure.
//!
//! Construction: call a cube fat when its mass
//! exceeds `3 Phi(K)/n`. Fat cubes form a subtree by monotonicity. At a fat
//! cube with no fat child, emit the children; with several fat children,
//! emit the light children singly and recurse; with exactly one, grow a ring
//! around the fat descendant chain while the ring mass stays within the
//! budget, then recurse inside. Every bound is asserted, never assumed.

use alloc::vec::Vec;

use crate::dyadic::{DomainError, DyadicCube, RingRegion};
use crate::measure::{MassVector, ProductMeasure};

#[derive(Clone, Debug)]
pub enum CubeCell {
    Cube(DyadicCube),
    Ring(RingRegion),
}

impl CubeCell {
    pub fn outer(&self) -> &DyadicCube {
        match self {
            CubeCell::Cube(c) => c,
            CubeCell::Ring(r) => &r.outer,
        }
    }

    pub fn inner(&self) -> Option<&DyadicCube> {
        match self {
            CubeCell::Cube(_) => None,
            CubeCell::Ring(r) => Some(&r.inner),
        }
    }

    /// Lebesgue volume (exact in cell units at `level`), for partition checks.
    pub fn cell_count(&self, level: u32) -> u128 {
        let d = self.outer().dim() as u32;
        let o = 1u128 << ((level - self.outer().level) as u32 * d);
        match self.inner() {
            None => o,
            Some(i) => o - (1u128 << ((level - i.level) as u32 * d)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CubePartition {
    pub k: DyadicCube,
    pub n: u64,
    pub cells: Vec<CubeCell>,
    pub phi: Vec<f64>,
}

fn ring_masses(pm: &ProductMeasure, outer: &DyadicCube, inner: &DyadicCube) -> MassVector {
    let mut m = pm.masses_of_cube(outer);
    m.sub(&pm.masses_of_cube(inner));
    m
}

/// `T_n(K)`: deterministic partition of `K` with `card <= 2^d n` and
/// `Phi(cell) <= 3 Phi(K) / n` for every cell.
pub fn partition_cube(
    k: &DyadicCube,
    pm: &ProductMeasure,
    n: u64,
) -> Result<CubePartition, DomainError> {
    if n < 1 {
        return Err(DomainError::InvalidSpec(alloc::string::String::from(
            "partition size must be positive",
        )));
    }
    let level = pm.level();
    if k.level > level {
        return Err(DomainError::LevelTooCoarse);
    }
    let budget = pm.phi_of_cube(k) * 3.0 / n as f64;
    let mut cells: Vec<CubeCell> = Vec::new();
    let mut phis: Vec<f64> = Vec::new();
    let emit = |cell: CubeCell, phi: f64, cells: &mut Vec<CubeCell>, phis: &mut Vec<f64>| {
        cells.push(cell);
        phis.push(phi);
    };
    let mut stack: Vec<DyadicCube> = alloc::vec![k.clone()];
    while let Some(c) = stack.pop() {
        let phi_c = pm.phi_of_cube(&c);
        if phi_c <= budget {
            emit(CubeCell::Cube(c), phi_c, &mut cells, &mut phis);
            continue;
        }
        if c.level == level {
            return Err(DomainError::ResolutionTooCoarse);
        }
        let children = c.children();
        let child_phi: Vec<f64> = children.iter().map(|ch| pm.phi_of_cube(ch)).collect();
        let fat: Vec<usize> = (0..children.len())
            .filter(|&i| child_phi[i] > budget)
            .collect();
        match fat.len() {
            0 => {
                for (ch, &p) in children.into_iter().zip(&child_phi) {
                    emit(CubeCell::Cube(ch), p, &mut cells, &mut phis);
                }
            }
            1 => {
                let hole = children[fat[0]].clone();
                let first = pm.phi(&ring_masses(pm, &c, &hole));
                if first > budget {
                    // ring around the single fat child is already too heavy:
                    // emit the light children singly
                    for (i, ch) in children.into_iter().enumerate() {
                        if i == fat[0] {
                            stack.push(ch);
                        } else {
                            emit(CubeCell::Cube(ch), child_phi[i], &mut cells, &mut phis);
                        }
                    }
                } else {
                    // grow the ring down the fat chain
                    let mut hole = hole;
                    loop {
                        if hole.level == level {
                            break;
                        }
                        let sub = hole.children();
                        let heavy: Vec<&DyadicCube> = sub
                            .iter()
                            .filter(|h| pm.phi_of_cube(h) > budget)
                            .collect();
                        if heavy.len() != 1 {
                            break;
                        }
                        let cand = heavy[0];
                        if pm.phi(&ring_masses(pm, &c, cand)) > budget {
                            break;
                        }
                        hole = cand.clone();
                    }
                    let phi_ring = pm.phi(&ring_masses(pm, &c, &hole));
                    emit(
                        CubeCell::Ring(RingRegion::new(c, hole.clone()).unwrap()),
                        phi_ring,
                        &mut cells,
                        &mut phis,
                    );
                    stack.push(hole);
                }
            }
            _ => {
                for (i, ch) in children.into_iter().enumerate() {
                    if fat.contains(&i) {
                        stack.push(ch);
                    } else {
                        emit(CubeCell::Cube(ch), child_phi[i], &mut cells, &mut phis);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        let ca = &cells[a];
        let cb = &cells[b];
        (ca.outer().level, &ca.outer().index, ca.inner().map(|i| i.level))
            .cmp(&(cb.outer().level, &cb.outer().index, cb.inner().map(|i| i.level)))
    });
    Ok(CubePartition {
        k: k.clone(),
        n,
        cells: order.iter().map(|&i| cells[i].clone()).collect(),
        phi: order.iter().map(|&i| phis[i]).collect(),
    })
}

fn box_range(c: &DyadicCube, level: u32) -> (Vec<u64>, Vec<u64>) {
    c.cell_range(level).unwrap()
}

fn inter_volume(a: &(Vec<u64>, Vec<u64>), b: &(Vec<u64>, Vec<u64>)) -> u128 {
    let mut v = 1u128;
    for i in 0..a.0.len() {
        let lo = a.0[i].max(b.0[i]);
        let hi = a.1[i].min(b.1[i]);
        if hi <= lo {
            return 0;
        }
        v *= (hi - lo) as u128;
    }
    v
}

/// Volume (in level-`level` cells) of the intersection of two cube/ring cells.
pub fn cell_intersection_volume(a: &CubeCell, b: &CubeCell, level: u32) -> u128 {
    let oa = box_range(a.outer(), level);
    let ob = box_range(b.outer(), level);
    let mut v = inter_volume(&oa, &ob) as i128;
    if v == 0 {
        return 0;
    }
    // inclusion-exclusion over the holes
    let ia = a.inner().map(|c| box_range(c, level));
    let ib = b.inner().map(|c| box_range(c, level));
    if let Some(ia) = &ia {
        v -= inter_volume(ia, &ob) as i128;
    }
    if let Some(ib) = &ib {
        v -= inter_volume(&oa, ib) as i128;
    }
    if let (Some(ia), Some(ib)) = (&ia, &ib) {
        v += inter_volume(ia, ib) as i128;
    }
    debug_assert!(v >= 0);
    v.max(0) as u128
}

/// Max over cells of `t_m` of the number of cells of `t_l` meeting it with
/// positive measure. Requires the scales to satisfy `l <= 2m`.
pub fn cube_partition_overlap(
    t_m: &CubePartition,
    t_l: &CubePartition,
    level: u32,
) -> Result<usize, DomainError> {
    if t_m.k != t_l.k {
        return Err(DomainError::InvalidSpec(alloc::string::String::from(
            "partitions cover different cubes",
        )));
    }
    if t_l.n > 2 * t_m.n {
        return Err(DomainError::InvalidSpec(alloc::string::String::from(
            "scale precondition violated: need l <= 2m",
        )));
    }
    let mut max = 0usize;
    for a in &t_m.cells {
        let count = t_l
            .cells
            .iter()
            .filter(|b| cell_intersection_volume(a, b, level) > 0)
            .count();
        max = max.max(count);
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DensityMeasure;
    use rand::{Rng, SeedableRng};

    fn check_invariants(p: &CubePartition, pm: &ProductMeasure) {
        let level = pm.level();
        let d = p.k.dim();
        let budget = pm.phi_of_cube(&p.k) * 3.0 / p.n as f64;
        assert!(
            (p.cells.len() as u128) <= (1u128 << d) * p.n as u128,
            "cardinality {} exceeds 2^d n = {}",
            p.cells.len(),
            (1u128 << d) * p.n as u128
        );
        let mut total: u128 = 0;
        for (cell, &phi) in p.cells.iter().zip(&p.phi) {
            assert!(phi <= budget + 1e-12, "cell mass {phi} exceeds {budget}");
            total += cell.cell_count(level);
        }
        let expect = 1u128 << ((level - p.k.level) as u32 * d as u32);
        assert_eq!(total, expect, "cells do not tile the cube");
        // pairwise disjoint (integer intersection volumes)
        for i in 0..p.cells.len() {
            for j in i + 1..p.cells.len() {
                assert_eq!(
                    cell_intersection_volume(&p.cells[i], &p.cells[j], level),
                    0,
                    "cells {i} and {j} overlap"
                );
            }
        }
    }

    #[test]
    fn lebesgue_square_n4_gives_quadrants() {
        let pm = ProductMeasure::lebesgue(4, 2);
        let k = DyadicCube::unit(2);
        let p = partition_cube(&k, &pm, 4).unwrap();
        assert_eq!(p.cells.len(), 4);
        for (cell, &phi) in p.cells.iter().zip(&p.phi) {
            assert!(matches!(cell, CubeCell::Cube(c) if c.level == 1));
            assert!((phi - 0.25).abs() < 1e-12);
        }
        check_invariants(&p, &pm);
    }

    #[test]
    fn n1_returns_whole_cube() {
        let pm = ProductMeasure::lebesgue(3, 2);
        let k = DyadicCube::unit(2);
        let p = partition_cube(&k, &pm, 1).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert!(matches!(&p.cells[0], CubeCell::Cube(c) if *c == k));
    }

    #[test]
    fn corner_mass_produces_rings() {
        let level = 6u32;
        let side = 1usize << level;
        // mass concentrates toward the corner but no single cell dominates
        let density: Vec<f64> = (0..side * side)
            .map(|k| {
                let (i, j) = (k / side, k % side);
                1.0 / ((i + j + 1) as f64 * (i + j + 1) as f64)
            })
            .collect();
        let pm = ProductMeasure::new(
            alloc::vec![DensityMeasure::from_density(level, 2, &density)],
            alloc::vec![1.0],
        )
        .unwrap();
        let k = DyadicCube::unit(2);
        let p = partition_cube(&k, &pm, 8).unwrap();
        assert!(
            p.cells.iter().any(|c| matches!(c, CubeCell::Ring(_))),
            "expected at least one ring cell"
        );
        check_invariants(&p, &pm);
    }

    #[test]
    fn invariants_on_random_measures() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for trial in 0..60 {
            let dim = 1 + trial % 2;
            let level = 6u32;
            let total = (1usize << level).pow(dim as u32);
            // heavy-tailed densities exercise the ring logic
            let density: Vec<f64> = (0..total)
                .map(|_| {
                    let u: f64 = rng.gen_range(0.0..1.0f64);
                    crate::math::powf(u, 8.0) * 100.0 + 1e-6
                })
                .collect();
            let pm = ProductMeasure::new(
                alloc::vec![DensityMeasure::from_density(level, dim, &density)],
                alloc::vec![1.0],
            )
            .unwrap();
            let k = DyadicCube::unit(dim);
            let n = rng.gen_range(1..=64u64);
            match partition_cube(&k, &pm, n) {
                Ok(p) => {
                    check_invariants(&p, &pm);
                    // additivity for single-measure Phi
                    let s: f64 = p.phi.iter().sum();
                    assert!((s - pm.phi_of_cube(&k)).abs() < 1e-9);
                }
                Err(DomainError::ResolutionTooCoarse) => {
                    // only legitimate when a single grid cell busts the budget
                    let budget = pm.phi_of_cube(&k) * 3.0 / n as f64;
                    let max_cell = density.iter().cloned().fold(0.0f64, f64::max)
                        / total as f64;
                    assert!(max_cell > budget - 1e-12);
                }
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
    }

    #[test]
    fn resolution_error_when_single_cell_too_heavy() {
        let level = 2u32;
        let mut density = alloc::vec![0.0; 16];
        density[5] = 16.0;
        let pm = ProductMeasure::new(
            alloc::vec![DensityMeasure::from_density(level, 2, &density)],
            alloc::vec![1.0],
        )
        .unwrap();
        let k = DyadicCube::unit(2);
        assert_eq!(
            partition_cube(&k, &pm, 64).unwrap_err(),
            DomainError::ResolutionTooCoarse
        );
    }

    #[test]
    fn overlap_with_itself_is_one() {
        let pm = ProductMeasure::lebesgue(5, 2);
        let k = DyadicCube::unit(2);
        let p = partition_cube(&k, &pm, 4).unwrap();
        assert_eq!(cube_partition_overlap(&p, &p, 5).unwrap(), 1);
    }

    #[test]
    fn overlap_across_scales_is_bounded() {
        let level = 6u32;
        let total = 1usize << (2 * level);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let side = 1usize << level;
        let density: Vec<f64> = (0..total)
            .map(|k| {
                let (i, j) = (k / side, k % side);
                let base = 1.0 / ((i + j + 1) as f64).sqrt();
                base * rng.gen_range(0.5..2.0)
            })
            .collect();
        let pm = ProductMeasure::new(
            alloc::vec![DensityMeasure::from_density(level, 2, &density)],
            alloc::vec![1.0],
        )
        .unwrap();
        let k = DyadicCube::unit(2);
        let t4 = partition_cube(&k, &pm, 4).unwrap();
        let t7 = partition_cube(&k, &pm, 7).unwrap();
        let t8 = partition_cube(&k, &pm, 8).unwrap();
        let c1 = cube_partition_overlap(&t4, &t8, level).unwrap();
        let c2 = cube_partition_overlap(&t4, &t7, level).unwrap();
        assert!(c1 <= 81 && c2 <= 81, "overlaps {c1}, {c2}");
        // scale precondition: l <= 2m
        assert!(cube_partition_overlap(&t4, &partition_cube(&k, &pm, 9).unwrap(), level).is_err());
    }

    #[test]
    fn stability_of_overlap_constant_across_ladder() {
        let pm = ProductMeasure::lebesgue(6, 2);
        let k = DyadicCube::unit(2);
        let mut prev = usize::MAX;
        for m in [1u64, 2, 4, 8, 16] {
            let tm = partition_cube(&k, &pm, m).unwrap();
            let tl = partition_cube(&k, &pm, 2 * m).unwrap();
            let c = cube_partition_overlap(&tm, &tl, 6).unwrap();
            assert!(c <= prev.max(16), "overlap grew: {c} after {prev}");
            prev = c;
        }
    }
}
