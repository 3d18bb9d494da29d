//! Shape specifications: `cube`, `sphere`, `tetrahedron`, `rod`,
//! `halfspace:<axis>:<threshold>` and `mesh:<path>`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use omnitree_core::oracle::{analytic_solid, Halfspace, MeshSolid, Oracle, Solid, SolidOracle, TimeRotated};

use crate::meshio;

#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    Analytic(String),
    Halfspace { axis: usize, threshold: f64 },
    Mesh(PathBuf),
}

impl FromStr for ShapeSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("mesh:") {
            if path.is_empty() {
                bail!("mesh shape needs a path: mesh:<path>");
            }
            return Ok(ShapeSpec::Mesh(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("halfspace:") {
            let (axis, c) =
                rest.split_once(':').with_context(|| format!("expected halfspace:<axis>:<threshold>, got {s:?}"))?;
            let axis = axis.parse().with_context(|| format!("bad halfspace axis {axis:?}"))?;
            let threshold = parse_threshold(c)?;
            return Ok(ShapeSpec::Halfspace { axis, threshold });
        }
        match s {
            "cube" | "sphere" | "tetrahedron" | "rod" => Ok(ShapeSpec::Analytic(s.to_owned())),
            _ => bail!(
                "unknown shape {s:?} (expected cube, sphere, tetrahedron, rod, halfspace:<axis>:<c> or mesh:<path>)"
            ),
        }
    }
}

/// Accepts decimals and simple fractions such as `1/3`.
fn parse_threshold(s: &str) -> Result<f64> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().with_context(|| format!("bad threshold {s:?}"))?;
            let q: f64 = q.trim().parse().with_context(|| format!("bad threshold {s:?}"))?;
            p / q
        }
        None => s.trim().parse().with_context(|| format!("bad threshold {s:?}"))?,
    };
    Ok(v)
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeSpec::Analytic(name) => f.write_str(name),
            ShapeSpec::Halfspace { axis, threshold } => write!(f, "halfspace:{axis}:{threshold}"),
            ShapeSpec::Mesh(p) => write!(f, "mesh:{}", p.display()),
        }
    }
}

/// A shape together with the domain it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub spec: ShapeSpec,
    /// Adds a time axis along which the solid turns once about its diagonal.
    pub time_rotate: bool,
    /// Spatial dimension; only halfspaces accept anything other than 3.
    pub dim: usize,
}

impl Shape {
    /// Dimension of the domain, counting the time axis.
    pub fn domain_dim(&self) -> usize {
        self.dim + self.time_rotate as usize
    }

    pub fn build(&self) -> Result<Box<dyn Oracle>> {
        if let ShapeSpec::Halfspace { axis, threshold } = self.spec {
            let h = Halfspace::new(self.dim, axis, threshold)?;
            if !self.time_rotate {
                return Ok(Box::new(h));
            }
            return Ok(Box::new(TimeRotated::new(h.to_solid()?)));
        }
        if self.dim != 3 {
            bail!("shape {} is three-dimensional; --dim {} only applies to halfspaces", self.spec, self.dim);
        }
        let solid: Box<dyn Solid> = match &self.spec {
            ShapeSpec::Analytic(name) => analytic_solid(name)?,
            ShapeSpec::Mesh(path) => {
                let mesh = meshio::load(path)?;
                Box::new(MeshSolid::new(mesh).with_context(|| format!("mesh {} is not usable", path.display()))?)
            }
            ShapeSpec::Halfspace { .. } => unreachable!(),
        };
        Ok(if self.time_rotate { Box::new(TimeRotated::new(solid)) } else { Box::new(SolidOracle(solid)) })
    }
}
