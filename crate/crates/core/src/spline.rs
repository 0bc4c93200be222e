//! Piecewise-polynomial approximation on domain partitions: local weighted
//! least-squares projections of degree `r-1`, the mixed `(p,q)` norm with
//! `l_sigma` aggregation (`sigma = min(p,q)`), and the empirical rate
//! harness fitting `log error` against `log n`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cube_tree::build_cube_tree;
use crate::domain_partition::{partition_domain, DomainCell};
use crate::dyadic::{DomainError, GridMask};
use crate::math;
use crate::measure::WeightPair;
use crate::whitney::whitney_cover;

/// Analytic test functions with closed-form partial derivatives.
#[derive(Clone, Debug)]
pub enum Generator {
    /// `prod_i sin(pi x_i)`
    SinProduct,
    /// `sum_t c_t * x^alpha_t` over multi-indices
    Polynomial { terms: Vec<(Vec<u32>, f64)> },
}

fn falling(a: u32, k: u32) -> f64 {
    let mut f = 1.0;
    for i in 0..k {
        f *= (a - i) as f64;
    }
    f
}

impl Generator {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Generator::SinProduct => {
                let mut v = 1.0;
                for &xi in x {
                    v *= math::sin(core::f64::consts::PI * xi);
                }
                v
            }
            Generator::Polynomial { terms } => terms
                .iter()
                .map(|(a, c)| {
                    let mut v = *c;
                    for (i, &ai) in a.iter().enumerate() {
                        for _ in 0..ai {
                            v *= x[i];
                        }
                    }
                    v
                })
                .sum(),
        }
    }

    /// Exact partial derivative `d^{|beta|} f / dx^beta`.
    pub fn partial(&self, beta: &[u32], x: &[f64]) -> f64 {
        match self {
            Generator::SinProduct => {
                let pi = core::f64::consts::PI;
                let mut v = 1.0;
                for (i, &b) in beta.iter().enumerate() {
                    v *= math::powf(pi, b as f64) * math::sin(pi * x[i] + b as f64 * pi / 2.0);
                }
                v
            }
            Generator::Polynomial { terms } => terms
                .iter()
                .map(|(a, c)| {
                    let mut v = *c;
                    for (i, (&ai, &bi)) in a.iter().zip(beta).enumerate() {
                        if bi > ai {
                            return 0.0;
                        }
                        v *= falling(ai, bi);
                        for _ in 0..(ai - bi) {
                            v *= x[i];
                        }
                    }
                    v
                })
                .sum(),
        }
    }

    /// Euclidean norm of the full gradient vector of order `r` at `x`.
    pub fn grad_r_norm(&self, r: u32, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for beta in multi_indices_exact(x.len(), r) {
            let p = self.partial(&beta, x);
            s += p * p;
        }
        math::sqrt(s)
    }
}

/// All multi-indices with `|beta| = r`.
pub fn multi_indices_exact(dim: usize, r: u32) -> Vec<Vec<u32>> {
    fn go(dim: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == dim {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for b in 0..=rem {
            cur.push(b);
            go(dim, rem - b, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(dim, r, &mut Vec::new(), &mut out);
    out
}

/// All multi-indices with `|beta| <= deg`, graded order.
pub fn multi_indices_upto(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for r in 0..=deg {
        out.extend(multi_indices_exact(dim, r));
    }
    out
}

/// Samples of a function at grid cell centers at level `level`.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    pub level: u32,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_generator(gen: &Generator, level: u32, dim: usize) -> Self {
        let side = 1usize << level;
        let total = side.pow(dim as u32);
        let h = 1.0 / side as f64;
        let mut values = Vec::with_capacity(total);
        let mut coord = alloc::vec![0u64; dim];
        let mut x = alloc::vec![0.0; dim];
        for _ in 0..total {
            for a in 0..dim {
                x[a] = (coord[a] as f64 + 0.5) * h;
            }
            values.push(gen.eval(&x));
            // mixed-radix increment, last axis fastest
            for a in (0..dim).rev() {
                coord[a] += 1;
                if coord[a] < side as u64 {
                    break;
                }
                coord[a] = 0;
            }
        }
        SampledFunction { level, dim, values }
    }

    /// Iterated central differences of order `beta` at an interior cell,
    /// cross-checked against the closed forms in tests.
    pub fn central_partial(&self, beta: &[u32], cell: &[u64]) -> f64 {
        fn rec(f: &SampledFunction, beta: &[u32], axis: usize, cell: &mut Vec<i64>) -> f64 {
            if axis == beta.len() {
                let side = 1i64 << f.level;
                let mut idx = 0usize;
                for &c in cell.iter() {
                    assert!(c >= 0 && c < side, "stencil leaves the grid");
                    idx = idx * side as usize + c as usize;
                }
                return f.values[idx];
            }
            if beta[axis] == 0 {
                return rec(f, beta, axis + 1, cell);
            }
            let h = 1.0 / (1u64 << f.level) as f64;
            let mut b = beta.to_vec();
            b[axis] -= 1;
            cell[axis] += 1;
            let hi = rec(f, &b, axis, cell);
            cell[axis] -= 2;
            let lo = rec(f, &b, axis, cell);
            cell[axis] += 1;
            (hi - lo) / (2.0 * h)
        }
        let mut c: Vec<i64> = cell.iter().map(|&v| v as i64).collect();
        rec(self, beta, 0, &mut c)
    }
}

/// Norm and projection parameters: `p`, `q`, `r`, the weight grids, and the
/// aggregation exponent `sigma = min(p, q)`.
#[derive(Clone, Debug)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub r: u32,
    pub dim: usize,
    pub level: u32,
    pub g: Vec<f64>,
    pub v: Vec<f64>,
}

impl NormSpec {
    pub fn new(wp: &WeightPair, mask: &GridMask) -> Result<NormSpec, DomainError> {
        if !wp.q.is_finite() {
            return Err(DomainError::InvalidSpec(String::from(
                "q must be finite for the mixed norm",
            )));
        }
        let gap = wp.r as f64 / wp.dim as f64 + 1.0 / wp.q - 1.0 / wp.p;
        if !(gap > 0.0) {
            return Err(DomainError::InvalidSpec(String::from(
                "r/d + 1/q - 1/p must be positive",
            )));
        }
        Ok(NormSpec {
            p: wp.p,
            q: wp.q,
            r: wp.r,
            dim: wp.dim,
            level: mask.level,
            g: wp.g_grid(mask)?,
            v: wp.v_grid(mask)?,
        })
    }

    pub fn sigma(&self) -> f64 {
        if self.p < self.q {
            self.p
        } else {
            self.q
        }
    }

    fn cell_volume(&self) -> f64 {
        let mut v = 1.0;
        for _ in 0..self.dim {
            v /= (1u64 << self.level) as f64;
        }
        v
    }
}

/// Linear grid indices of the cells composing a partition cell.
pub fn grid_cells_of(cell: &DomainCell, level: u32, dim: usize) -> Vec<usize> {
    let side = 1u64 << level;
    let mut out = Vec::new();
    for piece in &cell.pieces {
        let (lo, hi) = piece.outer().cell_range(level).unwrap();
        let hole = piece.inner().map(|c| c.cell_range(level).unwrap());
        let mut coord = lo.clone();
        'outer: loop {
            let inside_hole = hole.as_ref().map_or(false, |(hl, hh)| {
                (0..dim).all(|a| coord[a] >= hl[a] && coord[a] < hh[a])
            });
            if !inside_hole {
                let mut idx = 0usize;
                for &c in &coord {
                    idx = idx * side as usize + c as usize;
                }
                out.push(idx);
            }
            for a in (0..dim).rev() {
                coord[a] += 1;
                if coord[a] < hi[a] {
                    continue 'outer;
                }
                coord[a] = lo[a];
                if a == 0 {
                    break 'outer;
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SplineCell {
    pub grid_cells: Vec<usize>,
    /// coefficients against the full `|beta| <= r-1` basis in scaled local
    /// coordinates; dropped monomials (degree fallback) stay zero
    pub coeffs: Vec<f64>,
    pub center: Vec<f64>,
    pub scale: f64,
    /// effective polynomial degree actually fitted
    pub degree: u32,
    pub reduced: bool,
}

#[derive(Clone, Debug)]
pub struct Spline {
    pub level: u32,
    pub dim: usize,
    pub r: u32,
    pub basis: Vec<Vec<u32>>,
    pub cells: Vec<SplineCell>,
}

impl Spline {
    pub fn eval_cell(&self, ci: usize, x: &[f64]) -> f64 {
        let cell = &self.cells[ci];
        let mut s = 0.0;
        for (beta, &c) in self.basis.iter().zip(&cell.coeffs) {
            if c == 0.0 {
                continue;
            }
            let mut m = c;
            for (a, &b) in beta.iter().enumerate() {
                let t = (x[a] - cell.center[a]) / cell.scale;
                for _ in 0..b {
                    m *= t;
                }
            }
            s += m;
        }
        s
    }

    pub fn any_reduced(&self) -> bool {
        self.cells.iter().any(|c| c.reduced)
    }

    /// `f - S` at the centers of all covered grid cells; zero elsewhere.
    pub fn residual_grid(&self, f: &SampledFunction) -> Vec<f64> {
        let side = 1u64 << self.level;
        let h = 1.0 / side as f64;
        let mut out = alloc::vec![0.0; f.values.len()];
        let mut x = alloc::vec![0.0; self.dim];
        for (ci, cell) in self.cells.iter().enumerate() {
            for &idx in &cell.grid_cells {
                let mut rem = idx;
                for a in (0..self.dim).rev() {
                    x[a] = ((rem % side as usize) as f64 + 0.5) * h;
                    rem /= side as usize;
                }
                out[idx] = f.values[idx] - self.eval_cell(ci, &x);
            }
        }
        out
    }
}

fn center_of(idx: usize, level: u32, dim: usize, x: &mut [f64]) {
    let side = 1usize << level;
    let h = 1.0 / side as f64;
    let mut rem = idx;
    for a in (0..dim).rev() {
        x[a] = ((rem % side) as f64 + 0.5) * h;
        rem /= side;
    }
}

/// Weighted least-squares projection of `f` on the given grid cells onto
/// polynomials of degree at most `r-1` (weight `v^2`), with degree fallback
/// when the cell cannot support the space.
pub fn project_local(
    f: &SampledFunction,
    grid_cells: &[usize],
    spec: &NormSpec,
) -> Result<SplineCell, DomainError> {
    if grid_cells.is_empty() {
        return Err(DomainError::InvalidSpec(String::from(
            "empty projection cell",
        )));
    }
    let dim = spec.dim;
    let mut x = alloc::vec![0.0; dim];
    let mut lo = alloc::vec![f64::INFINITY; dim];
    let mut hi = alloc::vec![f64::NEG_INFINITY; dim];
    for &idx in grid_cells {
        center_of(idx, spec.level, dim, &mut x);
        for a in 0..dim {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let center: Vec<f64> = (0..dim).map(|a| 0.5 * (lo[a] + hi[a])).collect();
    let mut scale = 0.0f64;
    for a in 0..dim {
        scale = scale.max(0.5 * (hi[a] - lo[a]));
    }
    let h = 1.0 / (1u64 << spec.level) as f64;
    scale = scale.max(h);
    let full_basis = multi_indices_upto(dim, spec.r.saturating_sub(1));
    let mut deg = spec.r.saturating_sub(1);
    loop {
        let basis = multi_indices_upto(dim, deg);
        let nb = basis.len();
        if grid_cells.len() >= nb {
            let mut a = alloc::vec![0.0; nb * nb];
            let mut b = alloc::vec![0.0; nb];
            let mut phi = alloc::vec![0.0; nb];
            for &idx in grid_cells {
                center_of(idx, spec.level, dim, &mut x);
                for (i, beta) in basis.iter().enumerate() {
                    let mut m = 1.0;
                    for (ax, &bb) in beta.iter().enumerate() {
                        let t = (x[ax] - center[ax]) / scale;
                        for _ in 0..bb {
                            m *= t;
                        }
                    }
                    phi[i] = m;
                }
                let w = spec.v[idx] * spec.v[idx];
                for i in 0..nb {
                    for j in 0..nb {
                        a[i * nb + j] += w * phi[i] * phi[j];
                    }
                    b[i] += w * phi[i] * f.values[idx];
                }
            }
            if math::solve_dense(&mut a, &mut b, nb, 1e-300) {
                let mut coeffs = alloc::vec![0.0; full_basis.len()];
                for (i, beta) in basis.iter().enumerate() {
                    let pos = full_basis.iter().position(|fb| fb == beta).unwrap();
                    coeffs[pos] = b[i];
                }
                return Ok(SplineCell {
                    grid_cells: grid_cells.to_vec(),
                    coeffs,
                    center,
                    scale,
                    degree: deg,
                    reduced: deg + 1 < spec.r,
                });
            }
        }
        if deg == 0 {
            // constant fit can only be singular with all-zero weights; fall
            // back to the plain average
            let mut num = 0.0;
            let mut den = 0.0;
            for &idx in grid_cells {
                num += f.values[idx];
                den += 1.0;
            }
            let mut coeffs = alloc::vec![0.0; full_basis.len()];
            coeffs[0] = num / den;
            return Ok(SplineCell {
                grid_cells: grid_cells.to_vec(),
                coeffs,
                center,
                scale,
                degree: 0,
                reduced: spec.r > 1,
            });
        }
        deg -= 1;
    }
}

/// Per-cell projections over a domain partition, linear in `f`.
pub fn approximate(
    f: &SampledFunction,
    cells: &[DomainCell],
    spec: &NormSpec,
) -> Result<Spline, DomainError> {
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let gc = grid_cells_of(cell, spec.level, spec.dim);
        out.push(project_local(f, &gc, spec)?);
    }
    Ok(Spline {
        level: spec.level,
        dim: spec.dim,
        r: spec.r,
        basis: multi_indices_upto(spec.dim, spec.r.saturating_sub(1)),
        cells: out,
    })
}

/// Weighted `L_{q,v}` norm of grid values over one index set.
pub fn lq_norm(h: &[f64], grid_cells: &[usize], spec: &NormSpec) -> f64 {
    let vol = spec.cell_volume();
    let mut s = 0.0;
    for &idx in grid_cells {
        let t = math::abs(h[idx]) * spec.v[idx];
        s += math::powf(t, spec.q) * vol;
    }
    math::powf(s, 1.0 / spec.q)
}

/// Mixed norm: `l_sigma` aggregation of per-cell `L_{q,v}` norms,
/// `sigma = min(p, q)`.
pub fn mixed_norm(h: &[f64], cells: &[Vec<usize>], spec: &NormSpec) -> f64 {
    let sigma = spec.sigma();
    let mut s = 0.0;
    for gc in cells {
        s += math::powf(lq_norm(h, gc, spec), sigma);
    }
    math::powf(s, 1.0 / sigma)
}

#[derive(Clone, Debug)]
pub struct RateRow {
    pub n: u64,
    pub cells: usize,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// `None` when every error is at reproduction level (slope undefined)
    pub slope: Option<f64>,
    /// `-r/d + (1/p - 1/q)_+` from the constructive upper bound
    pub theory: f64,
    /// some requested sizes were dropped for lack of resolution
    pub truncated: bool,
    pub degree_reduced: bool,
}

/// Reproduction threshold relative to the function scale.
const REPRODUCTION_TOL: f64 = 1e-9;

/// Full pipeline: Whitney cover -> cube tree -> `B_{n,m}` partitions ->
/// projections -> normalized mixed-norm errors and fitted log-log slope.
pub fn rate_experiment(
    gen: &Generator,
    mask: &GridMask,
    wp: &WeightPair,
    n_list: &[u64],
    m: u32,
) -> Result<RateTable, DomainError> {
    let spec = NormSpec::new(wp, mask)?;
    let cover = whitney_cover(mask)?;
    let (ct, _) = build_cube_tree(&cover)
        .map_err(|e| DomainError::InvalidSpec(alloc::format!("cube tree failed: {e}")))?;
    let pm = wp.build_phi(mask)?;
    let f = SampledFunction::from_generator(gen, mask.level, mask.dim);
    // normalization: quadrature estimate of || |grad^r f| / g ||_p
    let h = mask.cell_side();
    let vol = spec.cell_volume();
    let mut norm_p = 0.0;
    let side = 1usize << mask.level;
    let mut x = alloc::vec![0.0; mask.dim];
    for idx in 0..mask.len() {
        let mut rem = idx;
        let mut coord = alloc::vec![0u64; mask.dim];
        for a in (0..mask.dim).rev() {
            coord[a] = (rem % side) as u64;
            rem /= side;
        }
        if !mask.is_inside(&coord) {
            continue;
        }
        for a in 0..mask.dim {
            x[a] = (coord[a] as f64 + 0.5) * h;
        }
        let grad = gen.grad_r_norm(spec.r, &x) / spec.g[idx];
        norm_p += math::powf(grad, spec.p) * vol;
    }
    let norm_p = math::powf(norm_p, 1.0 / spec.p);
    let mut rows = Vec::new();
    let mut truncated = false;
    let mut degree_reduced = false;
    for &n in n_list {
        let dp = match partition_domain(&cover, &ct, &pm, n, m) {
            Ok(dp) => dp,
            Err(DomainError::ResolutionTooCoarse) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let spline = approximate(&f, &dp.cells, &spec)?;
        degree_reduced |= spline.any_reduced();
        let residual = spline.residual_grid(&f);
        let idx_sets: Vec<Vec<usize>> = spline.cells.iter().map(|c| c.grid_cells.clone()).collect();
        let err = mixed_norm(&residual, &idx_sets, &spec);
        rows.push(RateRow {
            n,
            cells: dp.cells.len(),
            error: if norm_p > 0.0 { err / norm_p } else { err },
        });
    }
    let scale = rows.iter().map(|r| r.error).fold(0.0f64, f64::max);
    let slope = if rows.len() >= 2 && scale > REPRODUCTION_TOL {
        let xs: Vec<f64> = rows.iter().map(|r| math::ln(r.n as f64)).collect();
        let ys: Vec<f64> = rows.iter().map(|r| math::ln(r.error.max(1e-300))).collect();
        Some(math::fit_slope(&xs, &ys))
    } else {
        None
    };
    let rd = spec.r as f64 / spec.dim as f64;
    let theory = -rd + (1.0 / spec.p - 1.0 / spec.q).max(0.0);
    Ok(RateTable {
        rows,
        slope,
        theory,
        truncated,
        degree_reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, DomainSpec};
    use crate::measure::unweighted;
    use rand::{Rng, SeedableRng};

    fn spec_for(mask: &GridMask, p: f64, q: f64, r: u32) -> NormSpec {
        NormSpec::new(&unweighted(p, q, r, mask.dim), mask).unwrap()
    }

    fn single_cell_indices(mask: &GridMask) -> Vec<usize> {
        (0..mask.len())
            .filter(|&i| mask.is_inside(&mask.decode(i)))
            .collect()
    }

    #[test]
    fn constant_fit_of_linear_is_midpoint() {
        let mask = rasterize(&DomainSpec::Cube { dim: 1 }, 8).unwrap();
        let spec = spec_for(&mask, 2.0, 2.0, 1);
        let gen = Generator::Polynomial {
            terms: alloc::vec![(alloc::vec![1], 1.0)],
        };
        let f = SampledFunction::from_generator(&gen, 8, 1);
        let cell = project_local(&f, &single_cell_indices(&mask), &spec).unwrap();
        assert!((cell.coeffs[0] - 0.5).abs() < 1e-12, "{}", cell.coeffs[0]);
    }

    #[test]
    fn affine_fit_of_square_matches_normal_equations() {
        // best affine a + b x to x^2 on [0,1]: b = 1, a = -1/6
        let mask = rasterize(&DomainSpec::Cube { dim: 1 }, 10).unwrap();
        let spec = spec_for(&mask, 2.0, 2.0, 2);
        let gen = Generator::Polynomial {
            terms: alloc::vec![(alloc::vec![2], 1.0)],
        };
        let f = SampledFunction::from_generator(&gen, 10, 1);
        let sc = project_local(&f, &single_cell_indices(&mask), &spec).unwrap();
        let spline = Spline {
            level: 10,
            dim: 1,
            r: 2,
            basis: multi_indices_upto(1, 1),
            cells: alloc::vec![sc],
        };
        let at0 = spline.eval_cell(0, &[0.0]);
        let at1 = spline.eval_cell(0, &[1.0]);
        assert!((at0 + 1.0 / 6.0).abs() < 1e-3, "{at0}");
        assert!((at1 - (1.0 - 1.0 / 6.0)).abs() < 1e-3, "{at1}");
    }

    fn lshape_partition(level: u32, n: u64) -> (GridMask, Vec<DomainCell>) {
        let mask = rasterize(&DomainSpec::LShape { dim: 2 }, level).unwrap();
        let cover = whitney_cover(&mask).unwrap();
        let (ct, _) = build_cube_tree(&cover).unwrap();
        let pm = unweighted(2.0, 2.0, 1, 2).build_phi(&mask).unwrap();
        let dp = partition_domain(&cover, &ct, &pm, n, 0).unwrap();
        (mask, dp.cells)
    }

    #[test]
    fn polynomial_reproduction_on_all_cell_types() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mask, cells) = lshape_partition(7, 12);
        for r in 1..=3u32 {
            let terms: Vec<(Vec<u32>, f64)> = multi_indices_upto(2, r - 1)
                .into_iter()
                .map(|b| (b, rng.gen_range(-1.0..1.0f64)))
                .collect();
            let gen = Generator::Polynomial { terms };
            let f = SampledFunction::from_generator(&gen, 7, 2);
            let spec = spec_for(&mask, 2.0, 2.0, r);
            let spline = approximate(&f, &cells, &spec).unwrap();
            assert!(!spline.any_reduced());
            let res = spline.residual_grid(&f);
            let fmax = f.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            for cell in &spline.cells {
                for &idx in &cell.grid_cells {
                    assert!(
                        res[idx].abs() <= 1e-9 * fmax.max(1.0),
                        "residual {} at cell {idx}, r = {r}",
                        res[idx]
                    );
                }
            }
        }
    }

    #[test]
    fn projection_is_linear() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let (mask, cells) = lshape_partition(6, 6);
        let spec = spec_for(&mask, 2.0, 2.0, 2);
        let total = mask.len();
        for _ in 0..5 {
            let fa = SampledFunction {
                level: 6,
                dim: 2,
                values: (0..total).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let fb = SampledFunction {
                level: 6,
                dim: 2,
                values: (0..total).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let (a, b) = (rng.gen_range(-2.0..2.0f64), rng.gen_range(-2.0..2.0f64));
            let mixed = SampledFunction {
                level: 6,
                dim: 2,
                values: (0..total)
                    .map(|i| a * fa.values[i] + b * fb.values[i])
                    .collect(),
            };
            let sa = approximate(&fa, &cells, &spec).unwrap();
            let sb = approximate(&fb, &cells, &spec).unwrap();
            let sm = approximate(&mixed, &cells, &spec).unwrap();
            for ci in 0..cells.len() {
                for k in 0..sm.cells[ci].coeffs.len() {
                    let expect = a * sa.cells[ci].coeffs[k] + b * sb.cells[ci].coeffs[k];
                    assert!(
                        (sm.cells[ci].coeffs[k] - expect).abs() < 1e-9,
                        "nonlinear coefficient"
                    );
                }
            }
        }
    }

    #[test]
    fn mixed_norm_identities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let (mask, cells) = lshape_partition(6, 8);
        let idx_sets: Vec<Vec<usize>> = cells
            .iter()
            .map(|c| grid_cells_of(c, 6, 2))
            .collect();
        let h: Vec<f64> = (0..mask.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let all: Vec<usize> = idx_sets.iter().flatten().copied().collect();
        // p >= q: sigma = q and the q-th powers add up to the global norm
        let spec = spec_for(&mask, 3.0, 2.0, 1);
        let global = lq_norm(&h, &all, &spec);
        let mixed = mixed_norm(&h, &idx_sets, &spec);
        assert!((mixed - global).abs() <= 1e-12 * global.max(1.0));
        // single cell: both coincide by definition
        let spec2 = spec_for(&mask, 1.5, 3.0, 1);
        let single = mixed_norm(&h, &[all.clone()], &spec2);
        assert!((single - lq_norm(&h, &all, &spec2)).abs() < 1e-12);
        // p < q: l_p aggregation dominates the global L_q norm
        let mut ind = alloc::vec![0.0; mask.len()];
        for &i in &idx_sets[0] {
            ind[i] = 1.0;
        }
        assert!(mixed_norm(&ind, &idx_sets, &spec2) >= lq_norm(&ind, &all, &spec2) - 1e-12);
    }

    #[test]
    fn central_differences_match_closed_form() {
        let gen = Generator::SinProduct;
        let level = 8u32;
        let f = SampledFunction::from_generator(&gen, level, 2);
        let h = 1.0 / (1u64 << level) as f64;
        for (beta, cell) in [
            (alloc::vec![1u32, 0u32], [100u64, 60u64]),
            (alloc::vec![0, 1], [37, 201]),
            (alloc::vec![1, 1], [128, 128]),
            (alloc::vec![2, 0], [90, 33]),
        ] {
            let x = [
                (cell[0] as f64 + 0.5) * h,
                (cell[1] as f64 + 0.5) * h,
            ];
            let exact = gen.partial(&beta, &x);
            let approx = f.central_partial(&beta, &cell);
            let denom = exact.abs().max(1.0);
            assert!(
                (approx - exact).abs() / denom <= 1e-3,
                "beta {beta:?}: {approx} vs {exact}"
            );
        }
    }

    #[test]
    fn polynomial_rate_flags_reproduction() {
        let mask = rasterize(&DomainSpec::Cube { dim: 2 }, 7).unwrap();
        let gen = Generator::Polynomial {
            terms: alloc::vec![(alloc::vec![1, 0], 1.0), (alloc::vec![0, 1], -0.5)],
        };
        let wp = unweighted(2.0, 2.0, 2, 2);
        let table = rate_experiment(&gen, &mask, &wp, &[4, 8, 16], 0).unwrap();
        assert!(table.slope.is_none(), "slope should be undefined");
        for row in &table.rows {
            assert!(row.error <= 1e-9, "error {}", row.error);
        }
    }

    #[test]
    fn sine_rate_on_square_matches_theory() {
        let mask = rasterize(&DomainSpec::Cube { dim: 2 }, 9).unwrap();
        let wp = unweighted(2.0, 2.0, 1, 2);
        let ns = [32, 64, 128, 256, 512];
        let table = rate_experiment(&Generator::SinProduct, &mask, &wp, &ns, 0).unwrap();
        let slope = table.slope.unwrap();
        assert!((table.theory + 0.5).abs() < 1e-12);
        assert!(
            (slope - table.theory).abs() < 0.15,
            "slope {slope} vs theory {}",
            table.theory
        );
    }
}
