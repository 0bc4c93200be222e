//! Integer-exact dyadic cubes in `[0,1]^d`, their subdivision lattice, ring
//! regions, and rasterization of domain specifications onto a fine dyadic
//! grid.
//!
//! A cube at level `m` with index `k` is `2^{-m}([k_1,k_1+1] x ... x
//! [k_d,k_d+1])`. All geometry predicates are pure integer arithmetic; floats
//! only appear when converting to coordinates.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Closed dyadic cube, addressed by `(level, index)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<u64>,
}

/// Outcome of comparing two dyadic cubes of the same ambient lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nesting {
    Equal,
    /// First cube strictly inside the second.
    FirstInsideSecond,
    /// Second cube strictly inside the first.
    SecondInsideFirst,
    DisjointInteriors,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainError {
    DimensionMismatch,
    /// No grid cell survived conservative sampling.
    DegenerateDomain,
    InvalidSpec(String),
    /// Requested grid level cannot resolve the cube.
    LevelTooCoarse,
    /// The grid cannot support the requested construction.
    ResolutionTooCoarse,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::DimensionMismatch => write!(f, "dimension mismatch"),
            DomainError::DegenerateDomain => {
                write!(f, "degenerate domain at this resolution")
            }
            DomainError::InvalidSpec(s) => write!(f, "invalid domain spec: {s}"),
            DomainError::LevelTooCoarse => write!(f, "grid level too coarse for cube"),
            DomainError::ResolutionTooCoarse => write!(f, "resolution too coarse"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DomainError {}

impl DyadicCube {
    pub fn new(level: u32, index: Vec<u64>) -> Self {
        debug_assert!(index.iter().all(|&k| k < (1u64 << level)));
        DyadicCube { level, index }
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit(dim: usize) -> Self {
        DyadicCube {
            level: 0,
            index: alloc::vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }

    pub fn diam(&self) -> f64 {
        self.side() * math::sqrt(self.dim() as f64)
    }

    pub fn measure(&self) -> f64 {
        let mut m = 1.0;
        for _ in 0..self.dim() {
            m *= self.side();
        }
        m
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.index[axis] as f64 * self.side()
    }

    pub fn hi(&self, axis: usize) -> f64 {
        (self.index[axis] + 1) as f64 * self.side()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.index[i] as f64 + 0.5) * self.side())
            .collect()
    }

    /// The `2^{sd}` level-`m+s` cubes partitioning this cube, in
    /// lexicographic offset order.
    pub fn subdivide(&self, s: u32) -> Vec<DyadicCube> {
        let d = self.dim();
        let f = 1u64 << s;
        let count = f.pow(d as u32);
        let mut out = Vec::with_capacity(count as usize);
        let mut offset = alloc::vec![0u64; d];
        loop {
            let index: Vec<u64> = (0..d).map(|i| self.index[i] * f + offset[i]).collect();
            out.push(DyadicCube {
                level: self.level + s,
                index,
            });
            // mixed-radix increment, last axis fastest
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                offset[axis] += 1;
                if offset[axis] < f {
                    break;
                }
                offset[axis] = 0;
            }
        }
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        self.subdivide(1)
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCube {
            level: self.level - 1,
            index: self.index.iter().map(|k| k >> 1).collect(),
        })
    }

    /// Range of level-`grid_level` cell indices covered by this cube,
    /// as `(lo, hi)` with `hi` exclusive, per axis.
    pub fn cell_range(&self, grid_level: u32) -> Result<(Vec<u64>, Vec<u64>), DomainError> {
        if grid_level < self.level {
            return Err(DomainError::LevelTooCoarse);
        }
        let f = 1u64 << (grid_level - self.level);
        let lo: Vec<u64> = self.index.iter().map(|k| k * f).collect();
        let hi: Vec<u64> = self.index.iter().map(|k| (k + 1) * f).collect();
        Ok((lo, hi))
    }
}

/// Exact classification of the mutual position of two dyadic cubes.
pub fn nesting_relation(a: &DyadicCube, b: &DyadicCube) -> Result<Nesting, DomainError> {
    if a.dim() != b.dim() {
        return Err(DomainError::DimensionMismatch);
    }
    if a.level == b.level {
        return Ok(if a.index == b.index {
            Nesting::Equal
        } else {
            Nesting::DisjointInteriors
        });
    }
    let (fine, coarse, fine_is_a) = if a.level > b.level {
        (a, b, true)
    } else {
        (b, a, false)
    };
    let shift = fine.level - coarse.level;
    let nested = fine
        .index
        .iter()
        .zip(&coarse.index)
        .all(|(&kf, &kc)| kf >> shift == kc);
    Ok(if !nested {
        Nesting::DisjointInteriors
    } else if fine_is_a {
        Nesting::FirstInsideSecond
    } else {
        Nesting::SecondInsideFirst
    })
}

/// Ring region `outer \ inner` with `inner` a strict dyadic descendant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingRegion {
    pub outer: DyadicCube,
    pub inner: DyadicCube,
}

impl RingRegion {
    pub fn new(outer: DyadicCube, inner: DyadicCube) -> Result<Self, DomainError> {
        match nesting_relation(&inner, &outer)? {
            Nesting::FirstInsideSecond => Ok(RingRegion { outer, inner }),
            _ => Err(DomainError::InvalidSpec(String::from(
                "ring inner cube must be a strict dyadic descendant of the outer cube",
            ))),
        }
    }
}

/// Boolean inside-mask on the level-`L` dyadic grid; the open set represented
/// is the union of interiors of inside cells.
#[derive(Clone, Debug)]
pub struct GridMask {
    pub level: u32,
    pub dim: usize,
    pub inside: Vec<bool>,
}

impl GridMask {
    pub fn cells_per_axis(&self) -> u64 {
        1u64 << self.level
    }

    pub fn len(&self) -> usize {
        (self.cells_per_axis() as usize).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major linear index, last axis fastest.
    pub fn linear(&self, cell: &[u64]) -> usize {
        let s = self.cells_per_axis();
        let mut idx = 0u64;
        for &k in cell {
            idx = idx * s + k;
        }
        idx as usize
    }

    pub fn decode(&self, mut idx: usize) -> Vec<u64> {
        let s = self.cells_per_axis() as usize;
        let mut cell = alloc::vec![0u64; self.dim];
        for i in (0..self.dim).rev() {
            cell[i] = (idx % s) as u64;
            idx /= s;
        }
        cell
    }

    pub fn is_inside(&self, cell: &[u64]) -> bool {
        self.inside[self.linear(cell)]
    }

    pub fn count_inside(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn cell_side(&self) -> f64 {
        1.0 / self.cells_per_axis() as f64
    }
}

/// Linear constraint `normal . x + offset > 0`.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Built-in domain families plus bitmap and implicit inputs. The cusp is
/// `K_sigma` with the first axis affinely mapped from `[0,1]` to `[-1,1]`;
/// its tip sits at `(1/2, 0)` for `d = 2`.
#[derive(Clone, Debug)]
pub enum DomainSpec {
    Cube { dim: usize },
    LShape { dim: usize },
    SquareMinusSquare { dim: usize, inner_lo: f64, inner_hi: f64 },
    Cusp { dim: usize, sigma: f64 },
    Bitmap { dim: usize, level: u32, inside: Vec<bool> },
    Implicit { dim: usize, halfspaces: Vec<Halfspace> },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Cube { dim }
            | DomainSpec::LShape { dim }
            | DomainSpec::SquareMinusSquare { dim, .. }
            | DomainSpec::Cusp { dim, .. }
            | DomainSpec::Bitmap { dim, .. }
            | DomainSpec::Implicit { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            DomainSpec::Cube { dim } | DomainSpec::Implicit { dim, .. } if *dim == 0 => Err(
                DomainError::InvalidSpec(String::from("dimension must be positive")),
            ),
            DomainSpec::LShape { dim } | DomainSpec::SquareMinusSquare { dim, .. }
                if *dim < 2 =>
            {
                Err(DomainError::InvalidSpec(String::from(
                    "family requires dimension >= 2",
                )))
            }
            DomainSpec::SquareMinusSquare {
                inner_lo, inner_hi, ..
            } if !(0.0 < *inner_lo && inner_lo < inner_hi && *inner_hi < 1.0) => Err(
                DomainError::InvalidSpec(String::from("inner square must satisfy 0 < lo < hi < 1")),
            ),
            DomainSpec::Cusp { sigma, .. } if !(*sigma > 1.0) => Err(DomainError::InvalidSpec(
                String::from("cusp exponent sigma must exceed 1"),
            )),
            DomainSpec::Bitmap { dim, level, inside } => {
                let want = (1usize << (level * *dim as u32)).max(1);
                if inside.len() != want {
                    Err(DomainError::InvalidSpec(String::from(
                        "bitmap length does not match 2^(level*dim)",
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Membership predicate on `(0,1)^d`. Family boundaries use strict
    /// comparisons so that removed closed sets do not swallow the grid cells
    /// merely touching them; the ambient box boundary is handled downstream
    /// by the Whitney construction.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Cube { .. } => true,
            DomainSpec::LShape { .. } => !(x[0] > 0.5 && x[1] > 0.5),
            DomainSpec::SquareMinusSquare {
                inner_lo, inner_hi, ..
            } => !x.iter().all(|&c| c > *inner_lo && c < *inner_hi),
            DomainSpec::Cusp { dim, sigma } => {
                let t = math::abs(2.0 * x[0] - 1.0);
                math::powf(t, 1.0 / sigma) < x[dim - 1]
            }
            DomainSpec::Bitmap { dim, level, inside } => {
                let s = 1u64 << level;
                let mut idx = 0u64;
                for i in 0..*dim {
                    let mut k = math::floor(x[i] * s as f64) as i64;
                    if k < 0 {
                        k = 0;
                    }
                    if k as u64 >= s {
                        k = s as i64 - 1;
                    }
                    idx = idx * s + k as u64;
                }
                inside[idx as usize]
            }
            DomainSpec::Implicit { halfspaces, .. } => halfspaces.iter().all(|h| {
                h.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + h.offset > 0.0
            }),
        }
    }
}

/// Conservative rasterization: a cell is inside iff all `2^d` corners and the
/// center satisfy the membership predicate.
pub fn rasterize(spec: &DomainSpec, level: u32) -> Result<GridMask, DomainError> {
    spec.validate()?;
    if level < 1 {
        return Err(DomainError::InvalidSpec(String::from(
            "grid level must be at least 1",
        )));
    }
    let d = spec.dim();
    let s = 1u64 << level;
    let h = 1.0 / s as f64;
    let total = (s as usize).pow(d as u32);
    let mut inside = alloc::vec![false; total];
    let mask = GridMask {
        level,
        dim: d,
        inside: Vec::new(),
    };
    let mut any = false;
    for idx in 0..total {
        let cell = mask_decode(&mask, idx, d, s as usize);
        let mut ok = {
            let center: Vec<f64> = cell.iter().map(|&k| (k as f64 + 0.5) * h).collect();
            spec.contains(&center)
        };
        if ok {
            'corners: for bits in 0..(1u32 << d) {
                let corner: Vec<f64> = (0..d)
                    .map(|i| (cell[i] + ((bits >> i) & 1) as u64) as f64 * h)
                    .collect();
                if !spec.contains(&corner) {
                    ok = false;
                    break 'corners;
                }
            }
        }
        if ok {
            inside[idx] = true;
            any = true;
        }
    }
    if !any {
        return Err(DomainError::DegenerateDomain);
    }
    Ok(GridMask {
        level,
        dim: d,
        inside,
    })
}

fn mask_decode(_mask: &GridMask, mut idx: usize, dim: usize, s: usize) -> Vec<u64> {
    let mut cell = alloc::vec![0u64; dim];
    for i in (0..dim).rev() {
        cell[i] = (idx % s) as u64;
        idx /= s;
    }
    cell
}
