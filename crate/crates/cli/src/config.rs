use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use whitney_core::dyadic::{rasterize, DomainSpec, GridMask};
use whitney_core::measure::{BoundaryWeight, GammaSet, WeightPair, INF_EXPONENT};

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(s) => write!(f, "io error: {s}"),
            ConfigError::Invalid(s) => write!(f, "invalid config: {s}"),
        }
    }
}

fn invalid(s: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(s.into())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Square { dim: usize },
    LShape { dim: usize },
    SquareMinusSquare { dim: usize, inner_lo: f64, inner_hi: f64 },
    Cusp { dim: usize, sigma: f64 },
    /// PGM image (P2 or P5); pixels above half the maximum value are inside
    Bitmap { pgm: PathBuf },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "set", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GammaConfig {
    DomainBoundary { lambda: f64 },
    BoxFace { axis: usize, upper: bool, lambda: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub p: f64,
    pub q: f64,
    pub r: u32,
    /// integrability exponent of g0; null means infinity (g0 = 1)
    pub alpha: Option<f64>,
    /// integrability exponent of v0; null means infinity (v0 = 1)
    pub beta: Option<f64>,
    pub g_boundary: Option<GammaConfig>,
    pub v_boundary: Option<GammaConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub level: u32,
    pub weights: WeightConfig,
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub m: u32,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.level == 0 || self.level > 14 {
            return Err(invalid("resolution level must lie in 1..=14"));
        }
        if self.n_list.is_empty() {
            return Err(invalid("n_list must not be empty"));
        }
        if self.n_list.contains(&0) {
            return Err(invalid("partition sizes must be positive"));
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec, ConfigError> {
        let spec = match &self.domain {
            DomainConfig::Square { dim } => DomainSpec::Cube { dim: *dim },
            DomainConfig::LShape { dim } => DomainSpec::LShape { dim: *dim },
            DomainConfig::SquareMinusSquare {
                dim,
                inner_lo,
                inner_hi,
            } => DomainSpec::SquareMinusSquare {
                dim: *dim,
                inner_lo: *inner_lo,
                inner_hi: *inner_hi,
            },
            DomainConfig::Cusp { dim, sigma } => DomainSpec::Cusp {
                dim: *dim,
                sigma: *sigma,
            },
            DomainConfig::Bitmap { pgm } => read_pgm_mask(pgm, self.level)?,
        };
        spec.validate()
            .map_err(|e| invalid(format!("domain: {e:?}")))?;
        Ok(spec)
    }

    pub fn mask(&self) -> Result<GridMask, ConfigError> {
        let spec = self.domain_spec()?;
        rasterize(&spec, self.level).map_err(|e| invalid(format!("rasterize: {e:?}")))
    }

    pub fn weight_pair(&self, mask: &GridMask) -> Result<WeightPair, ConfigError> {
        let w = &self.weights;
        let boundary = |g: &GammaConfig| match g {
            GammaConfig::DomainBoundary { lambda } => BoundaryWeight {
                gamma: GammaSet::DomainBoundary,
                lambda: *lambda,
            },
            GammaConfig::BoxFace {
                axis,
                upper,
                lambda,
            } => BoundaryWeight {
                gamma: GammaSet::BoxFace {
                    axis: *axis,
                    upper: *upper,
                },
                lambda: *lambda,
            },
        };
        let wp = WeightPair {
            g0: None,
            v0: None,
            alpha: w.alpha.unwrap_or(INF_EXPONENT),
            beta: w.beta.unwrap_or(INF_EXPONENT),
            gtilde: w.g_boundary.as_ref().map(boundary),
            vtilde: w.v_boundary.as_ref().map(boundary),
            p: w.p,
            q: w.q,
            r: w.r,
            dim: mask.dim,
        };
        wp.validate()
            .map_err(|e| invalid(format!("weights: {e:?}")))?;
        Ok(wp)
    }
}

/// Square PGM (P2 ascii or P5 binary, 8-bit) of side 2^level; pixels above
/// half the maximum value are interior. Row 0 is the top of the image
/// (largest x2 coordinate).
pub fn read_pgm_mask(path: &Path, level: u32) -> Result<DomainSpec, ConfigError> {
    let bytes =
        fs::read(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let mut pos = 0usize;
    let mut token = || -> Result<String, ConfigError> {
        // skip whitespace and '#' comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(invalid("truncated pgm header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P2" && magic != "P5" {
        return Err(invalid(format!("unsupported pgm magic {magic:?}")));
    }
    let width: usize = token()?.parse().map_err(|_| invalid("bad pgm width"))?;
    let height: usize = token()?.parse().map_err(|_| invalid("bad pgm height"))?;
    let maxval: u32 = token()?.parse().map_err(|_| invalid("bad pgm maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(invalid("pgm maxval must lie in 1..=255"));
    }
    let side = 1usize << level;
    if width != side || height != side {
        return Err(invalid(format!(
            "pgm must be {side}x{side} to match resolution level {level}, got {width}x{height}"
        )));
    }
    let mut pixels = Vec::with_capacity(width * height);
    if magic == "P5" {
        let start = pos + 1; // single whitespace byte after maxval
        if bytes.len() < start + width * height {
            return Err(invalid("truncated pgm pixel data"));
        }
        pixels.extend(bytes[start..start + width * height].iter().map(|&b| b as u32));
    } else {
        for _ in 0..width * height {
            pixels.push(token()?.parse().map_err(|_| invalid("bad pgm pixel"))?);
        }
    }
    // pgm row 0 is the top of the image: x2 = 1 - .. ; grid axis order is
    // (x1, x2) with the mask's last axis fastest
    let mut inside = vec![false; width * height];
    for (row, chunk) in pixels.chunks(width).enumerate() {
        let x2 = height - 1 - row;
        for (x1, &v) in chunk.iter().enumerate() {
            inside[x1 * side + x2] = 2 * v > maxval;
        }
    }
    Ok(DomainSpec::Bitmap {
        dim: 2,
        level,
        inside,
    })
}
