//! Tiling of the unit cell into the fine lattice over the rectangle
//! (0, L1) x (0, L2) with period delta, and Dirichlet boundary marking.
//!
//! Vertices that coincide where neighboring cell copies touch are merged by
//! quantized-coordinate hashing (bucket size delta * 1e-6) followed by an
//! exact distance check at tolerance delta * 1e-9.

use std::collections::HashMap;

use crate::cell::UnitCellPattern;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEdge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    /// Cell copy (n1, n2) this edge came from.
    pub cell: (usize, usize),
    /// Index of the generating edge in the unit-cell pattern.
    pub unit_edge: usize,
}

/// The assembled lattice graph over the rectangle.
#[derive(Debug, Clone)]
pub struct LatticeMesh {
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<LatticeEdge>,
    /// Sorted vertex indices carrying the homogeneous Dirichlet condition.
    pub dirichlet: Vec<usize>,
    pub delta: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Which part of the rectangle boundary carries the Dirichlet condition.
#[derive(Debug, Clone, PartialEq)]
pub enum DirichletSpec {
    All,
    Segments(Vec<BoundarySegment>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// An interval on one side of the rectangle, in the coordinate running along
/// that side.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
}

impl DirichletSpec {
    /// Parse `all` or a comma-separated list of `side` / `side:lo:hi` items,
    /// sides being left, right, bottom, top.
    pub fn parse(text: &str, l1: f64, l2: f64) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("all") {
            return Ok(DirichletSpec::All);
        }
        let mut segments = Vec::new();
        for item in text.split(',') {
            let parts: Vec<&str> = item.trim().split(':').collect();
            let side = match parts[0] {
                "left" => Side::Left,
                "right" => Side::Right,
                "bottom" => Side::Bottom,
                "top" => Side::Top,
                other => return Err(Error::Config(format!("unknown boundary side `{other}`"))),
            };
            let side_len = match side {
                Side::Left | Side::Right => l2,
                Side::Bottom | Side::Top => l1,
            };
            let (lo, hi) = match parts.len() {
                1 => (0.0, side_len),
                3 => {
                    let lo: f64 = parts[1]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad interval bound `{}`", parts[1])))?;
                    let hi: f64 = parts[2]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad interval bound `{}`", parts[2])))?;
                    (lo, hi)
                }
                _ => {
                    return Err(Error::Config(format!(
                        "bad dirichlet item `{item}` (expected `side` or `side:lo:hi`)"
                    )))
                }
            };
            if !(hi > lo) {
                return Err(Error::Config(format!("empty dirichlet interval `{item}`")));
            }
            segments.push(BoundarySegment { side, lo, hi });
        }
        if segments.is_empty() {
            return Err(Error::Config("empty dirichlet spec".into()));
        }
        Ok(DirichletSpec::Segments(segments))
    }

    /// Does the point lie on a marked part of the boundary (within tol)?
    pub fn contains(&self, p: [f64; 2], l1: f64, l2: f64, tol: f64) -> bool {
        let on = |v: f64, c: f64| (v - c).abs() <= tol;
        match self {
            DirichletSpec::All => {
                on(p[0], 0.0) || on(p[0], l1) || on(p[1], 0.0) || on(p[1], l2)
            }
            DirichletSpec::Segments(segs) => segs.iter().any(|s| {
                let (fixed, fixed_val, along) = match s.side {
                    Side::Left => (p[0], 0.0, p[1]),
                    Side::Right => (p[0], l1, p[1]),
                    Side::Bottom => (p[1], 0.0, p[0]),
                    Side::Top => (p[1], l2, p[0]),
                };
                on(fixed, fixed_val) && along >= s.lo - tol && along <= s.hi + tol
            }),
        }
    }
}

struct MergeGrid {
    bucket: f64,
    tol: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl MergeGrid {
    fn new(delta: f64) -> Self {
        MergeGrid { bucket: delta * 1e-6, tol: delta * 1e-9, map: HashMap::new() }
    }

    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        ((p[0] / self.bucket).floor() as i64, (p[1] / self.bucket).floor() as i64)
    }

    /// Index of an existing vertex within tolerance, or insert a new one.
    fn find_or_insert(&mut self, p: [f64; 2], vertices: &mut Vec<[f64; 2]>) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cands) = self.map.get(&(kx + dx, ky + dy)) {
                    for &i in cands {
                        let q = vertices[i];
                        if (q[0] - p[0]).abs() <= self.tol && (q[1] - p[1]).abs() <= self.tol {
                            return i;
                        }
                    }
                }
            }
        }
        let idx = vertices.len();
        vertices.push(p);
        self.map.entry((kx, ky)).or_default().push(idx);
        idx
    }
}

/// Scale and repeat the unit cell over the rectangle; coincident vertices of
/// neighboring copies merge into single lattice vertices.
pub fn build_lattice(p: &UnitCellPattern, l1: f64, l2: f64, delta: f64) -> Result<LatticeMesh> {
    if p.has_overrides() {
        return Err(Error::LengthOverrides);
    }
    if !(delta > 0.0 && l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidInput("domain sides and delta must be positive".into()));
    }
    let n1 = integer_ratio(l1, delta)
        .ok_or_else(|| Error::InvalidInput(format!("L1/delta = {} is not an integer", l1 / delta)))?;
    let n2 = integer_ratio(l2, delta)
        .ok_or_else(|| Error::InvalidInput(format!("L2/delta = {} is not an integer", l2 / delta)))?;

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut grid = MergeGrid::new(delta);
    let mut local = vec![0usize; p.vertices.len()];
    for a in 0..n1 {
        for b in 0..n2 {
            for (i, v) in p.vertices.iter().enumerate() {
                let pos = [delta * (v[0] + a as f64), delta * (v[1] + b as f64)];
                local[i] = grid.find_or_insert(pos, &mut vertices);
            }
            for (j, e) in p.edges.iter().enumerate() {
                edges.push(LatticeEdge {
                    from: local[e.from],
                    to: local[e.to],
                    length: delta * p.edge_length(j),
                    cell: (a, b),
                    unit_edge: j,
                });
            }
        }
    }
    Ok(LatticeMesh { vertices, edges, dirichlet: Vec::new(), delta, l1, l2 })
}

fn integer_ratio(l: f64, delta: f64) -> Option<usize> {
    let r = l / delta;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * r.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

impl LatticeMesh {
    /// Sum of all edge lengths.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Mark the vertices lying on the requested boundary part; returns how
    /// many were marked (an empty set is allowed, the caller may warn).
    pub fn mark_dirichlet(&mut self, spec: &DirichletSpec) -> usize {
        let tol = self.delta * 1e-9;
        let mut marked: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| spec.contains(self.vertices[i], self.l1, self.l2, tol))
            .collect();
        marked.sort_unstable();
        self.dirichlet = marked;
        self.dirichlet.len()
    }
}
