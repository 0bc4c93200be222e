//! Whitney cover of a rasterized open set: maximal dyadic cubes `Delta` in
//! the grid with `diam Delta <= dist(Delta, boundary) <= 4 diam Delta`,
//! pairwise non-overlapping, truncated at the grid level.
//!
//! Distances are exact. The squared Euclidean gap between a grid cell box and
//! the complement region (outside cells plus the exterior of the unit box) is
//! an integer in units of `h^2`, `h = 2^{-L}`; it is computed with a
//! separable lower-envelope transform, so the accept test
//! `dist^2 >= d * 4^{L-m}` is pure integer arithmetic.

use alloc::vec::Vec;

use crate::dyadic::{DomainError, DyadicCube, GridMask};

const INF: u64 = u64::MAX >> 2;

/// `min_j (q - p_j)^2 + v_j` for each query: exact-integer lower envelope of
/// parabolas. Sites must have strictly increasing positions; queries may come
/// in any order (answered by binary search over the envelope breakpoints).
fn lower_envelope(sites: &[(i64, u64)], queries: &[i64], out: &mut Vec<u64>) {
    out.clear();
    // hull[i] wins on [z[i], z[i+1]); z[i] is a rational (num, den), den > 0,
    // with den == 0 marking -infinity.
    let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<(i128, i128)> = Vec::with_capacity(sites.len());
    let inter = |a: usize, b: usize| -> (i128, i128) {
        let (pa, va) = (sites[a].0 as i128, sites[a].1 as i128);
        let (pb, vb) = (sites[b].0 as i128, sites[b].1 as i128);
        ((vb + pb * pb) - (va + pa * pa), 2 * (pb - pa))
    };
    for s in 0..sites.len() {
        if sites[s].1 >= INF {
            continue;
        }
        loop {
            match hull.last() {
                None => {
                    hull.push(s);
                    z.push((0, 0)); // -infinity
                    break;
                }
                Some(&top) => {
                    let (xn, xd) = inter(top, s);
                    let (zn, zd) = *z.last().unwrap();
                    // pop if the new parabola overtakes at or before the
                    // point where the top one started winning
                    if zd != 0 && xn * zd <= zn * xd {
                        hull.pop();
                        z.pop();
                        continue;
                    }
                    hull.push(s);
                    z.push((xn, xd));
                    break;
                }
            }
        }
    }
    if hull.is_empty() {
        out.resize(queries.len(), INF);
        return;
    }
    for &q in queries {
        // largest i with z[i] <= q
        let (mut lo, mut hi) = (0usize, hull.len() - 1);
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            let (zn, zd) = z[mid];
            if zd == 0 || zn <= q as i128 * zd {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let (p, v) = sites[hull[lo]];
        let dq = (q - p) as i128;
        let val = dq * dq + v as i128;
        out.push(if val >= INF as i128 { INF } else { val as u64 });
    }
}

/// One separable pass: `D_new(k) = min(D(k), E(s*k - 1), E(s*k + 1))` where
/// `E` is the parabola envelope over sites at `s*j` with values `D(j)`,
/// padded with zero-valued virtual sites at `j = -1` and `j = n` (the
/// exterior of the unit box is outside).
fn axis_pass(line: &mut [u64], scale: i64, scratch_sites: &mut Vec<(i64, u64)>, scratch_q: &mut Vec<i64>, scratch_e: &mut Vec<u64>) {
    let n = line.len() as i64;
    scratch_sites.clear();
    scratch_sites.push((-scale, 0));
    for (j, &v) in line.iter().enumerate() {
        scratch_sites.push((scale * j as i64, v));
    }
    scratch_sites.push((scale * n, 0));
    scratch_q.clear();
    for k in 0..n {
        scratch_q.push(scale * k - 1);
        scratch_q.push(scale * k + 1);
    }
    lower_envelope(scratch_sites, scratch_q, scratch_e);
    for k in 0..n as usize {
        let e = scratch_e[2 * k].min(scratch_e[2 * k + 1]);
        if e < line[k] {
            line[k] = e;
        }
    }
}

fn separable_transform(mask: &GridMask, scale: i64) -> Vec<u64> {
    let s = mask.cells_per_axis() as usize;
    let d = mask.dim;
    let mut dist: Vec<u64> = mask
        .inside
        .iter()
        .map(|&b| if b { INF } else { 0 })
        .collect();
    let total = dist.len();
    let mut line = alloc::vec![0u64; s];
    let (mut sites, mut qs, mut env) = (Vec::new(), Vec::new(), Vec::new());
    // axis `a` has stride s^(d-1-a) in row-major order (last axis fastest)
    for a in 0..d {
        let stride = s.pow((d - 1 - a) as u32);
        let block = stride * s;
        let mut base = 0usize;
        while base < total {
            for off in 0..stride {
                let start = base + off;
                for k in 0..s {
                    line[k] = dist[start + k * stride];
                }
                axis_pass(&mut line, scale, &mut sites, &mut qs, &mut env);
                for k in 0..s {
                    dist[start + k * stride] = line[k];
                }
            }
            base += block;
        }
    }
    dist
}

/// Per cell: exact squared Euclidean gap (units `h^2`) between the closed
/// cell box and the nearest outside cell box, exterior included. Zero for
/// outside cells and for inside cells touching the complement.
pub fn box_gap_sq(mask: &GridMask) -> Vec<u64> {
    separable_transform(mask, 1)
}

/// Per cell: exact squared Euclidean distance (units `(h/2)^2`) from the
/// cell center to the complement region.
pub fn center_dist_sq(mask: &GridMask) -> Vec<u64> {
    separable_transform(mask, 2)
}

/// Whitney cover truncated at the grid level. `dist_sq[i]` is the exact
/// squared distance (units `h^2`) from `cubes[i]` to the complement.
#[derive(Clone, Debug)]
pub struct WhitneyCover {
    pub grid_level: u32,
    pub dim: usize,
    pub cubes: Vec<DyadicCube>,
    pub dist_sq: Vec<u64>,
    pub inside_cells: usize,
    pub residual_cells: usize,
}

impl WhitneyCover {
    pub fn residual_measure(&self) -> f64 {
        let h = 1.0 / (1u64 << self.grid_level) as f64;
        let mut cell = 1.0;
        for _ in 0..self.dim {
            cell *= h;
        }
        self.residual_cells as f64 * cell
    }

    pub fn covered_cells(&self) -> usize {
        self.inside_cells - self.residual_cells
    }
}

struct Pyramid {
    // index 0 = level L (finest), index L-m = level m
    min_gap: Vec<Vec<u64>>,
    all_inside: Vec<Vec<bool>>,
    any_inside: Vec<Vec<bool>>,
}

fn build_pyramid(mask: &GridMask, gap: &[u64]) -> Pyramid {
    let d = mask.dim;
    let mut min_gap = alloc::vec![gap.to_vec()];
    let mut all_inside = alloc::vec![mask.inside.clone()];
    let mut any_inside = alloc::vec![mask.inside.clone()];
    let mut side = mask.cells_per_axis() as usize;
    while side > 1 {
        let fine_g = min_gap.last().unwrap();
        let fine_all = all_inside.last().unwrap();
        let fine_any = any_inside.last().unwrap();
        let cs = side / 2;
        let ctotal = cs.pow(d as u32);
        let mut g = alloc::vec![INF; ctotal];
        let mut al = alloc::vec![true; ctotal];
        let mut an = alloc::vec![false; ctotal];
        // walk fine cells, fold into parents
        let ftotal = side.pow(d as u32);
        for f in 0..ftotal {
            // parent linear index: halve each coordinate
            let mut rem = f;
            let mut p = 0usize;
            for i in 0..d {
                let stride = side.pow((d - 1 - i) as u32);
                let k = rem / stride;
                rem %= stride;
                p = p * cs + k / 2;
            }
            g[p] = g[p].min(fine_g[f]);
            al[p] &= fine_all[f];
            an[p] |= fine_any[f];
        }
        min_gap.push(g);
        all_inside.push(al);
        any_inside.push(an);
        side = cs;
    }
    Pyramid {
        min_gap,
        all_inside,
        any_inside,
    }
}

fn level_linear(index: &[u64], side: u64) -> usize {
    let mut p = 0u64;
    for &k in index {
        p = p * side + k;
    }
    p as usize
}

/// Build the truncated Whitney cover of the inside region by greedy maximal
/// acceptance: a cube is emitted iff it lies inside and its exact distance to
/// the complement is at least its diameter, descending otherwise. Inside
/// cells whose distance fails even at the finest level stay uncovered and are
/// reported as residual.
pub fn whitney_cover(mask: &GridMask) -> Result<WhitneyCover, DomainError> {
    let d = mask.dim;
    let big_l = mask.level;
    let gap = box_gap_sq(mask);
    let pyr = build_pyramid(mask, &gap);
    let mut cubes: Vec<DyadicCube> = Vec::new();
    let mut dist_sq: Vec<u64> = Vec::new();
    let mut stack: Vec<DyadicCube> = alloc::vec![DyadicCube::unit(d)];
    let mut residual = 0usize;
    while let Some(c) = stack.pop() {
        let m = c.level;
        let side = 1u64 << m;
        let lin = level_linear(&c.index, side);
        let li = (big_l - m) as usize;
        if !pyr.any_inside[li][lin] {
            continue;
        }
        let thresh = (d as u64) << (2 * (big_l - m));
        if pyr.all_inside[li][lin] && pyr.min_gap[li][lin] >= thresh {
            dist_sq.push(pyr.min_gap[li][lin]);
            cubes.push(c);
        } else if m == big_l {
            residual += 1;
        } else {
            stack.extend(c.children());
        }
    }
    if cubes.is_empty() {
        // the inside set might itself be a single dyadic cube; report it
        // rather than an empty cover
        if let Some(c) = inside_as_single_cube(mask) {
            let side = 1u64 << c.level;
            let lin = level_linear(&c.index, side);
            let ds = pyr.min_gap[(big_l - c.level) as usize][lin];
            return Ok(WhitneyCover {
                grid_level: big_l,
                dim: d,
                cubes: alloc::vec![c],
                dist_sq: alloc::vec![ds],
                inside_cells: mask.count_inside(),
                residual_cells: 0,
            });
        }
        return Err(DomainError::ResolutionTooCoarse);
    }
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| cubes[a].cmp(&cubes[b]));
    let cubes: Vec<DyadicCube> = order.iter().map(|&i| cubes[i].clone()).collect();
    let dist_sq: Vec<u64> = order.iter().map(|&i| dist_sq[i]).collect();
    Ok(WhitneyCover {
        grid_level: big_l,
        dim: d,
        cubes,
        dist_sq,
        inside_cells: mask.count_inside(),
        residual_cells: residual,
    })
}

fn inside_as_single_cube(mask: &GridMask) -> Option<DyadicCube> {
    let d = mask.dim;
    let mut lo = alloc::vec![u64::MAX; d];
    let mut hi = alloc::vec![0u64; d];
    let mut count = 0usize;
    for idx in 0..mask.len() {
        if !mask.inside[idx] {
            continue;
        }
        count += 1;
        let cell = mask.decode(idx);
        for i in 0..d {
            lo[i] = lo[i].min(cell[i]);
            hi[i] = hi[i].max(cell[i]);
        }
    }
    if count == 0 {
        return None;
    }
    let span = hi[0] - lo[0] + 1;
    if !span.is_power_of_two() {
        return None;
    }
    for i in 0..d {
        if hi[i] - lo[i] + 1 != span || lo[i] % span != 0 {
            return None;
        }
    }
    if count as u128 != (span as u128).pow(d as u32) {
        return None;
    }
    let s = span.trailing_zeros();
    let level = mask.level - s;
    Some(DyadicCube::new(
        level,
        lo.iter().map(|&k| k >> s).collect(),
    ))
}

/// Per-cell owner id (`u32::MAX` = uncovered) on the level-`L` grid.
pub fn label_grid(cover: &WhitneyCover) -> Vec<u32> {
    let s = 1usize << cover.grid_level;
    let mut labels = alloc::vec![u32::MAX; s.pow(cover.dim as u32)];
    let d = cover.dim;
    for (id, c) in cover.cubes.iter().enumerate() {
        let (lo, hi) = c.cell_range(cover.grid_level).unwrap();
        let mut cell: Vec<u64> = lo.clone();
        loop {
            let mut lin = 0usize;
            for &k in &cell {
                lin = lin * s + k as usize;
            }
            debug_assert_eq!(labels[lin], u32::MAX, "overlapping cover cubes");
            labels[lin] = id as u32;
            let mut ax = d;
            loop {
                if ax == 0 {
                    break;
                }
                ax -= 1;
                cell[ax] += 1;
                if cell[ax] < hi[ax] {
                    break;
                }
                cell[ax] = lo[ax];
            }
            if cell == lo {
                break;
            }
        }
    }
    labels
}

/// Neighbor lists under shared-face adjacency: cubes whose closed boxes share a
/// face overlap of positive area. Discovered by walking one-cell-thick face
/// shells in the label grid.
pub fn face_adjacency(cover: &WhitneyCover, labels: &[u32]) -> Vec<Vec<u32>> {
    collect_shell_neighbors(cover, labels, false)
}

/// Neighbor lists under touching (closed boxes intersect, corners included).
pub fn touching_adjacency(cover: &WhitneyCover, labels: &[u32]) -> Vec<Vec<u32>> {
    collect_shell_neighbors(cover, labels, true)
}

fn collect_shell_neighbors(
    cover: &WhitneyCover,
    labels: &[u32],
    include_corners: bool,
) -> Vec<Vec<u32>> {
    let d = cover.dim;
    let s = 1i64 << cover.grid_level;
    let mut adj: Vec<Vec<u32>> = alloc::vec![Vec::new(); cover.cubes.len()];
    for (id, c) in cover.cubes.iter().enumerate() {
        let (lo, hi) = c.cell_range(cover.grid_level).unwrap();
        let lo: Vec<i64> = lo.iter().map(|&k| k as i64).collect();
        let hi: Vec<i64> = hi.iter().map(|&k| k as i64).collect();
        let mut seen: Vec<u32> = Vec::new();
        let visit = |cell: &[i64], seen: &mut Vec<u32>| {
            if cell.iter().any(|&k| k < 0 || k >= s) {
                return;
            }
            let mut lin = 0usize;
            for &k in cell {
                lin = lin * s as usize + k as usize;
            }
            let owner = labels[lin];
            if owner != u32::MAX && owner != id as u32 && !seen.contains(&owner) {
                seen.push(owner);
            }
        };
        if include_corners {
            // full Chebyshev-1 shell: iterate expanded box minus own box
            let mut cell: Vec<i64> = lo.iter().map(|&k| k - 1).collect();
            loop {
                let on_shell = (0..d).any(|i| cell[i] < lo[i] || cell[i] >= hi[i]);
                if on_shell {
                    visit(&cell, &mut seen);
                }
                let mut ax = d;
                let mut done = true;
                while ax > 0 {
                    ax -= 1;
                    cell[ax] += 1;
                    if cell[ax] <= hi[ax] {
                        done = false;
                        break;
                    }
                    cell[ax] = lo[ax] - 1;
                }
                if done {
                    break;
                }
            }
        } else {
            for axis in 0..d {
                for side in 0..2 {
                    let plane = if side == 0 { lo[axis] - 1 } else { hi[axis] };
                    let mut cell: Vec<i64> = lo.clone();
                    cell[axis] = plane;
                    loop {
                        visit(&cell, &mut seen);
                        let mut ax = d;
                        let mut done = true;
                        while ax > 0 {
                            ax -= 1;
                            if ax == axis {
                                continue;
                            }
                            cell[ax] += 1;
                            if cell[ax] < hi[ax] {
                                done = false;
                                break;
                            }
                            cell[ax] = lo[ax];
                        }
                        if done {
                            break;
                        }
                    }
                }
            }
        }
        seen.sort_unstable();
        adj[id] = seen;
    }
    adj
}

/// Measured certificate for the cover invariants.
#[derive(Clone, Debug)]
pub struct CoverStats {
    /// min over cubes of dist/diam (should be >= 1)
    pub min_ratio: f64,
    /// max over cubes of dist/diam (should be <= 4)
    pub max_ratio: f64,
    /// max number of cubes touching a single cube (itself excluded)
    pub max_touching: usize,
    pub covered_measure: f64,
    pub residual_measure: f64,
}

pub fn verify_cover(cover: &WhitneyCover, mask: &GridMask) -> CoverStats {
    let labels = label_grid(cover); // panics (debug) on overlap
    let d = cover.dim as f64;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for (i, c) in cover.cubes.iter().enumerate() {
        let diam_sq = d * crate::math::powf(4.0, (cover.grid_level - c.level) as f64);
        let r = crate::math::sqrt(cover.dist_sq[i] as f64 / diam_sq);
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    let adj = touching_adjacency(cover, &labels);
    let max_touching = adj.iter().map(|v| v.len()).max().unwrap_or(0);
    let cell = {
        let mut m = 1.0;
        for _ in 0..cover.dim {
            m *= mask.cell_side();
        }
        m
    };
    CoverStats {
        min_ratio,
        max_ratio,
        max_touching,
        covered_measure: cover.covered_cells() as f64 * cell,
        residual_measure: cover.residual_cells as f64 * cell,
    }
}
