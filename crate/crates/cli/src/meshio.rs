//! Triangle mesh loading from STL (binary or ASCII) and OBJ files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use omnitree_core::oracle::TriangleMesh;

pub fn load(path: &Path) -> Result<TriangleMesh> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let mesh = match ext.as_deref() {
        Some("stl") => {
            let bytes = fs::read(path).with_context(|| format!("cannot read mesh {}", path.display()))?;
            parse_stl(&bytes)
        }
        Some("obj") => load_obj(path),
        _ => bail!("unsupported mesh format {} (expected .stl or .obj)", path.display()),
    };
    mesh.with_context(|| format!("cannot load mesh {}", path.display()))
}

/// STL stores each triangle with its own corners; identical corners are
/// merged so the mesh can be checked for watertightness.
struct Welder {
    index: HashMap<[u32; 3], u32>,
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
}

impl Welder {
    fn new() -> Self {
        Self { index: HashMap::new(), vertices: Vec::new(), triangles: Vec::new() }
    }

    fn vertex(&mut self, p: [f32; 3]) -> u32 {
        // -0.0 and 0.0 are the same corner.
        let key = p.map(|c| if c == 0.0 { 0 } else { c.to_bits() });
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p.map(f64::from));
            (self.vertices.len() - 1) as u32
        })
    }

    fn triangle(&mut self, corners: [[f32; 3]; 3]) {
        let t = corners.map(|c| self.vertex(c));
        // Zero-area slivers from welding carry no surface.
        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
            self.triangles.push(t);
        }
    }

    fn finish(self) -> Result<TriangleMesh> {
        Ok(TriangleMesh::new(self.vertices, self.triangles)?)
    }
}

pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == 84 + 50 * count {
            return parse_binary_stl(&bytes[84..], count);
        }
    }
    let text = std::str::from_utf8(bytes).context("STL is neither binary nor ASCII")?;
    if !text.trim_start().starts_with("solid") {
        bail!("STL is neither binary nor ASCII");
    }
    parse_ascii_stl(text)
}

fn parse_binary_stl(body: &[u8], count: usize) -> Result<TriangleMesh> {
    let mut w = Welder::new();
    for rec in body.chunks_exact(50).take(count) {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        // Skip the 3 normal components.
        w.triangle([[f(3), f(4), f(5)], [f(6), f(7), f(8)], [f(9), f(10), f(11)]]);
    }
    w.finish()
}

fn parse_ascii_stl(text: &str) -> Result<TriangleMesh> {
    let mut w = Welder::new();
    let mut corners = Vec::with_capacity(3);
    for (n, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("vertex") => {
                let mut p = [0f32; 3];
                for c in &mut p {
                    let t = tok.next().with_context(|| format!("line {}: short vertex", n + 1))?;
                    *c = t.parse().with_context(|| format!("line {}: bad coordinate {t:?}", n + 1))?;
                }
                corners.push(p);
            }
            Some("endloop") => {
                if corners.len() != 3 {
                    bail!("line {}: facet with {} vertices", n + 1, corners.len());
                }
                w.triangle([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    w.finish()
}

fn load_obj(path: &Path) -> Result<TriangleMesh> {
    let opts = tobj::LoadOptions { triangulate: true, single_index: false, ..Default::default() };
    let (models, _) = tobj::load_obj(path, &opts)?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in models {
        let base = vertices.len() as u32;
        vertices.extend(m.mesh.positions.chunks_exact(3).map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]));
        triangles.extend(m.mesh.indices.chunks_exact(3).map(|t| [base + t[0], base + t[1], base + t[2]]));
    }
    Ok(TriangleMesh::new(vertices, triangles)?)
}
