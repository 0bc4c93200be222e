//! Product set functions over absolutely continuous measures, the induced
//! tree functionals, and boundary-distance weight families.
//!
//! A `ProductMeasure` is superadditive but not additive; all evaluations
//! therefore go through per-measure mass vectors, which *are* additive over
//! disjoint cell unions, with the product applied last.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cube_tree::CubeTree;
use crate::dyadic::{DomainError, DyadicCube, GridMask, RingRegion};
use crate::math;
use crate::whitney::{center_dist_sq, WhitneyCover};

/// Absolutely continuous measure given by a density sampled at cell centers;
/// stored per cell as mass = density * cell volume.
#[derive(Clone, Debug)]
pub struct DensityMeasure {
    pub level: u32,
    pub dim: usize,
    pub cell_mass: Vec<f64>,
}

impl DensityMeasure {
    pub fn from_density(level: u32, dim: usize, density: &[f64]) -> Self {
        let cell = {
            let mut m = 1.0;
            for _ in 0..dim {
                m /= (1u64 << level) as f64;
            }
            m
        };
        DensityMeasure {
            level,
            dim,
            cell_mass: density.iter().map(|&v| v * cell).collect(),
        }
    }

    /// Lebesgue measure on the grid.
    pub fn lebesgue(level: u32, dim: usize) -> Self {
        let total = (1usize << level).pow(dim as u32);
        Self::from_density(level, dim, &alloc::vec![1.0; total])
    }

    pub fn total(&self) -> f64 {
        self.cell_mass.iter().sum()
    }
}

/// Additive per-measure mass vector; the nonlinear product is applied last.
#[derive(Clone, Debug, PartialEq)]
pub struct MassVector(pub Vec<f64>);

impl MassVector {
    pub fn zero(k: usize) -> Self {
        MassVector(alloc::vec![0.0; k])
    }

    pub fn add(&mut self, other: &MassVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sub(&mut self, other: &MassVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a - b).max(0.0);
        }
    }
}

/// `Phi(A) = prod_j mu_j(A)^{alpha_j}` with `alpha_j > 0`, `sum alpha_j = 1`.
#[derive(Clone, Debug)]
pub struct ProductMeasure {
    pub measures: Vec<DensityMeasure>,
    pub exponents: Vec<f64>,
}

impl ProductMeasure {
    pub fn new(measures: Vec<DensityMeasure>, exponents: Vec<f64>) -> Result<Self, DomainError> {
        if measures.is_empty() || measures.len() != exponents.len() {
            return Err(DomainError::InvalidSpec(String::from(
                "need one exponent per measure",
            )));
        }
        if exponents.iter().any(|&a| !(a > 0.0)) {
            return Err(DomainError::InvalidSpec(String::from(
                "exponents must be positive",
            )));
        }
        let s: f64 = exponents.iter().sum();
        if math::abs(s - 1.0) > 1e-12 {
            return Err(DomainError::InvalidSpec(String::from(
                "exponents must sum to one",
            )));
        }
        let (level, dim) = (measures[0].level, measures[0].dim);
        if measures.iter().any(|m| m.level != level || m.dim != dim) {
            return Err(DomainError::DimensionMismatch);
        }
        Ok(ProductMeasure {
            measures,
            exponents,
        })
    }

    pub fn lebesgue(level: u32, dim: usize) -> Self {
        ProductMeasure {
            measures: alloc::vec![DensityMeasure::lebesgue(level, dim)],
            exponents: alloc::vec![1.0],
        }
    }

    pub fn level(&self) -> u32 {
        self.measures[0].level
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim
    }

    pub fn phi(&self, masses: &MassVector) -> f64 {
        let mut p = 1.0;
        for (m, &a) in masses.0.iter().zip(&self.exponents) {
            if *m <= 0.0 {
                return 0.0;
            }
            p *= math::powf(*m, a);
        }
        p
    }

    pub fn masses_of_cell(&self, linear: usize) -> MassVector {
        MassVector(self.measures.iter().map(|m| m.cell_mass[linear]).collect())
    }

    pub fn masses_of_cells<I: IntoIterator<Item = usize>>(&self, cells: I) -> MassVector {
        let mut v = MassVector::zero(self.measures.len());
        for c in cells {
            for (j, m) in self.measures.iter().enumerate() {
                v.0[j] += m.cell_mass[c];
            }
        }
        v
    }

    pub fn masses_of_cube(&self, cube: &DyadicCube) -> MassVector {
        let level = self.level();
        let (lo, hi) = cube.cell_range(level).unwrap();
        let s = 1usize << level;
        let d = self.dim();
        let mut v = MassVector::zero(self.measures.len());
        let mut cell = lo.clone();
        loop {
            let mut lin = 0usize;
            for &k in &cell {
                lin = lin * s + k as usize;
            }
            for (j, m) in self.measures.iter().enumerate() {
                v.0[j] += m.cell_mass[lin];
            }
            let mut ax = d;
            loop {
                if ax == 0 {
                    return v;
                }
                ax -= 1;
                cell[ax] += 1;
                if cell[ax] < hi[ax] {
                    break;
                }
                cell[ax] = lo[ax];
            }
        }
    }

    pub fn masses_of_ring(&self, ring: &RingRegion) -> MassVector {
        let mut v = self.masses_of_cube(&ring.outer);
        v.sub(&self.masses_of_cube(&ring.inner));
        v
    }

    pub fn phi_of_cube(&self, cube: &DyadicCube) -> f64 {
        self.phi(&self.masses_of_cube(cube))
    }

    pub fn total_masses(&self) -> MassVector {
        MassVector(self.measures.iter().map(|m| m.total()).collect())
    }
}

/// Evaluations of the tree functional `Psi` on the vertex-set shapes used by
/// the partition algorithms: whole subtrees, subtree differences, singletons.
pub trait PsiEval {
    fn total(&self) -> f64;
    fn subtree(&self, v: u32) -> f64;
    /// `Psi(T_v \ T_w)`, `w` a descendant of `v` (possibly `v` itself,
    /// giving the empty set).
    fn diff(&self, v: u32, w: u32) -> f64;
    fn singleton(&self, v: u32) -> f64;
}

/// Additive vertex-weight functional (exact prefix sums over subtrees).
#[derive(Clone, Debug)]
pub struct AdditivePsi {
    pub weight: Vec<f64>,
    pub subtree_sum: Vec<f64>,
    root: u32,
}

impl AdditivePsi {
    pub fn new(tree: &crate::cube_tree::Tree, weight: Vec<f64>) -> Self {
        let mut subtree_sum = weight.clone();
        for &v in tree.bfs_order().iter().rev() {
            let p = tree.parent[v as usize];
            if p != u32::MAX {
                subtree_sum[p as usize] += subtree_sum[v as usize];
            }
        }
        AdditivePsi {
            weight,
            subtree_sum,
            root: tree.root,
        }
    }
}

impl PsiEval for AdditivePsi {
    fn total(&self) -> f64 {
        self.subtree_sum[self.root as usize]
    }
    fn subtree(&self, v: u32) -> f64 {
        self.subtree_sum[v as usize]
    }
    fn diff(&self, v: u32, w: u32) -> f64 {
        (self.subtree_sum[v as usize] - self.subtree_sum[w as usize]).max(0.0)
    }
    fn singleton(&self, v: u32) -> f64 {
        self.weight[v as usize]
    }
}

/// `Psi(W) = Phi(union of F(v), v in W)` realized through additive mass
/// vectors: vectors are summed or subtracted exactly and the superadditive
/// product is applied last, never by subtracting `Psi` values.
#[derive(Clone, Debug)]
pub struct ProductPsi {
    pub exponents: Vec<f64>,
    pub own: Vec<MassVector>,
    pub sub: Vec<MassVector>,
    root: u32,
}

impl ProductPsi {
    pub fn new(cover: &WhitneyCover, ct: &CubeTree, pm: &ProductMeasure) -> Self {
        let n = cover.cubes.len();
        let own: Vec<MassVector> = cover
            .cubes
            .iter()
            .map(|c| pm.masses_of_cube(c))
            .collect();
        let mut sub = own.clone();
        for &v in ct.tree.bfs_order().iter().rev() {
            let p = ct.tree.parent[v as usize];
            if p != u32::MAX {
                let mv = sub[v as usize].clone();
                sub[p as usize].add(&mv);
            }
        }
        debug_assert_eq!(own.len(), n);
        ProductPsi {
            exponents: pm.exponents.clone(),
            own,
            sub,
            root: ct.tree.root,
        }
    }

    fn phi(&self, m: &MassVector) -> f64 {
        let mut p = 1.0;
        for (x, &a) in m.0.iter().zip(&self.exponents) {
            if *x <= 0.0 {
                return 0.0;
            }
            p *= math::powf(*x, a);
        }
        p
    }
}

impl PsiEval for ProductPsi {
    fn total(&self) -> f64 {
        self.phi(&self.sub[self.root as usize])
    }
    fn subtree(&self, v: u32) -> f64 {
        self.phi(&self.sub[v as usize])
    }
    fn diff(&self, v: u32, w: u32) -> f64 {
        let mut m = self.sub[v as usize].clone();
        m.sub(&self.sub[w as usize]);
        self.phi(&m)
    }
    fn singleton(&self, v: u32) -> f64 {
        self.phi(&self.own[v as usize])
    }
}

/// Boundary-distance weight `x -> dist(x, Gamma)^lambda`.
#[derive(Clone, Debug)]
pub enum GammaSet {
    /// complement of the rasterized domain, exterior included
    DomainBoundary,
    /// a face of the unit box: hyperplane `x_axis = 0` or `x_axis = 1`
    BoxFace { axis: usize, upper: bool },
}

#[derive(Clone, Debug)]
pub struct BoundaryWeight {
    pub gamma: GammaSet,
    pub lambda: f64,
}

impl BoundaryWeight {
    /// `4^{|lambda|}` satisfies the dyadic-ring doubling condition.
    pub fn doubling_constant(&self) -> f64 {
        math::powf(4.0, math::abs(self.lambda))
    }

    /// Weight at cell centers; exact distances (distance transform for the
    /// domain boundary, closed form for box faces).
    pub fn grid(&self, mask: &GridMask) -> Result<Vec<f64>, DomainError> {
        let h = mask.cell_side();
        match &self.gamma {
            GammaSet::DomainBoundary => {
                let d2 = center_dist_sq(mask);
                Ok(d2
                    .iter()
                    .map(|&q| math::powf(math::sqrt(q as f64) * h / 2.0, self.lambda))
                    .collect())
            }
            GammaSet::BoxFace { axis, upper } => {
                if *axis >= mask.dim {
                    return Err(DomainError::InvalidSpec(String::from(
                        "face axis out of range",
                    )));
                }
                let mut out = Vec::with_capacity(mask.len());
                for idx in 0..mask.len() {
                    let k = mask.decode(idx)[*axis];
                    let c = (k as f64 + 0.5) * h;
                    let dist = if *upper { 1.0 - c } else { c };
                    out.push(math::powf(dist, self.lambda));
                }
                Ok(out)
            }
        }
    }
}

/// Infinity marker for the integrability exponents.
pub const INF_EXPONENT: f64 = f64::INFINITY;

/// Weights `g = g0 * gtilde`, `v = v0 * vtilde` with integrability exponents,
/// validated against the hypotheses they must satisfy. `None` grids mean the
/// constant 1.
#[derive(Clone, Debug)]
pub struct WeightPair {
    pub g0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub gtilde: Option<BoundaryWeight>,
    pub vtilde: Option<BoundaryWeight>,
    pub p: f64,
    pub q: f64,
    pub r: u32,
    pub dim: usize,
}

impl WeightPair {
    /// `1/kappa_tilde = r/d + 1/q - 1/p - 1/alpha - 1/beta`
    pub fn inv_kappa_tilde(&self) -> f64 {
        self.r as f64 / self.dim as f64 + 1.0 / self.q - 1.0 / self.p
            - 1.0 / self.alpha
            - 1.0 / self.beta
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let err = |s: &str| Err(DomainError::InvalidSpec(String::from(s)));
        if !(self.beta > self.q) {
            return err("beta must exceed q");
        }
        if !(1.0 / self.p + 1.0 / self.alpha < 1.0) {
            return err("1/p + 1/alpha must be below one");
        }
        let ik = self.inv_kappa_tilde();
        if ik < -1e-12 {
            return err("r/d + 1/q - 1/p - 1/alpha - 1/beta must be nonnegative");
        }
        if ik <= 1e-12 && (self.gtilde.is_some() || self.vtilde.is_some()) {
            return err("boundary weights require a positive kappa-tilde exponent");
        }
        let denom = self.r as f64 / self.dim as f64 + 1.0 / self.q - 1.0 / self.p;
        if !(denom > 0.0) {
            return err("r/d + 1/q - 1/p must be positive");
        }
        Ok(())
    }

    /// Assemble the product measure: `mu_1 = int g0^alpha` (alpha finite),
    /// `mu_2 = int v0^beta` (beta finite), `mu_3 = int (gtilde vtilde)^kt`
    /// when `1/kt > 0`, with exponents each divided by `r/d + 1/q - 1/p`.
    /// With no factors at all the measure degenerates to Lebesgue.
    pub fn build_phi(&self, mask: &GridMask) -> Result<ProductMeasure, DomainError> {
        self.validate()?;
        let denom = self.r as f64 / self.dim as f64 + 1.0 / self.q - 1.0 / self.p;
        let total = mask.len();
        let ones = alloc::vec![1.0; total];
        let mut measures = Vec::new();
        let mut exponents = Vec::new();
        if self.alpha.is_finite() {
            let g0 = self.g0.as_deref().unwrap_or(&ones);
            let density: Vec<f64> = g0.iter().map(|&x| math::powf(x, self.alpha)).collect();
            measures.push(DensityMeasure::from_density(mask.level, mask.dim, &density));
            exponents.push(1.0 / self.alpha / denom);
        }
        if self.beta.is_finite() {
            let v0 = self.v0.as_deref().unwrap_or(&ones);
            let density: Vec<f64> = v0.iter().map(|&x| math::powf(x, self.beta)).collect();
            measures.push(DensityMeasure::from_density(mask.level, mask.dim, &density));
            exponents.push(1.0 / self.beta / denom);
        }
        let ik = self.inv_kappa_tilde();
        if ik > 1e-12 {
            let kt = 1.0 / ik;
            let gt = match &self.gtilde {
                Some(w) => w.grid(mask)?,
                None => ones.clone(),
            };
            let vt = match &self.vtilde {
                Some(w) => w.grid(mask)?,
                None => ones.clone(),
            };
            let density: Vec<f64> = gt
                .iter()
                .zip(&vt)
                .map(|(&a, &b)| math::powf(a * b, kt))
                .collect();
            measures.push(DensityMeasure::from_density(mask.level, mask.dim, &density));
            exponents.push(ik / denom);
        }
        if measures.is_empty() {
            return Ok(ProductMeasure::lebesgue(mask.level, mask.dim));
        }
        ProductMeasure::new(measures, exponents)
    }

    /// Pointwise weight grids g and v at cell centers.
    pub fn g_grid(&self, mask: &GridMask) -> Result<Vec<f64>, DomainError> {
        self.combine(mask, &self.g0, &self.gtilde)
    }

    pub fn v_grid(&self, mask: &GridMask) -> Result<Vec<f64>, DomainError> {
        self.combine(mask, &self.v0, &self.vtilde)
    }

    fn combine(
        &self,
        mask: &GridMask,
        base: &Option<Vec<f64>>,
        tilde: &Option<BoundaryWeight>,
    ) -> Result<Vec<f64>, DomainError> {
        let mut out = match base {
            Some(g) => g.clone(),
            None => alloc::vec![1.0; mask.len()],
        };
        if let Some(w) = tilde {
            let t = w.grid(mask)?;
            for (a, b) in out.iter_mut().zip(&t) {
                *a *= b;
            }
        }
        Ok(out)
    }
}

/// Unweighted parameters: `g = v = 1`, both integrability exponents infinite.
pub fn unweighted(p: f64, q: f64, r: u32, dim: usize) -> WeightPair {
    WeightPair {
        g0: None,
        v0: None,
        alpha: INF_EXPONENT,
        beta: INF_EXPONENT,
        gtilde: None,
        vtilde: None,
        p,
        q,
        r,
        dim,
    }
}
