//! The unit-cell pattern: a connected oriented graph drawn in the unit square,
//! with opposite boundary vertices identified periodically.
//!
//! Pattern files are line-based UTF-8 text (`#` starts a comment):
//!
//! ```text
//! vertex <id> <x> <y>
//! edge <id> <from> <to> [length <l>]
//! ```
//!
//! IDs must be contiguous from 1 in declaration order. Edge lengths default to
//! the Euclidean distance of the endpoints; an explicit `length` override
//! stands in for a curved edge. Overridden patterns are accepted by the tensor
//! computation (which only sees topology and lengths) but rejected by the
//! lattice simulation (which needs true positions).

use crate::{Error, Result};

/// Absolute tolerance for coordinate comparisons inside the unit square.
pub const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub length_override: Option<f64>,
}

/// The unit-cell graph: vertices in [0,1]^2 and oriented edges.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellPattern {
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<Edge>,
}

impl UnitCellPattern {
    /// Build and check the pattern invariants: coordinates inside the unit
    /// square, distinct endpoints per raw edge, positive lengths, no
    /// coincident vertices.
    pub fn from_parts(vertices: Vec<[f64; 2]>, edges: Vec<Edge>) -> Result<Self> {
        let bad = |msg: String| Error::InvalidInput(msg);
        if edges.is_empty() {
            return Err(bad("no edges".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(bad(format!("vertex {} has non-finite coordinates", i + 1)));
            }
            if v[0] < -COORD_TOL || v[0] > 1.0 + COORD_TOL || v[1] < -COORD_TOL || v[1] > 1.0 + COORD_TOL
            {
                return Err(bad(format!(
                    "vertex {} at ({}, {}) lies outside the unit square",
                    i + 1,
                    v[0],
                    v[1]
                )));
            }
        }
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                if dist(vertices[i], vertices[j]) <= COORD_TOL {
                    return Err(bad(format!("vertices {} and {} coincide", i + 1, j + 1)));
                }
            }
        }
        for (j, e) in edges.iter().enumerate() {
            if e.from >= vertices.len() || e.to >= vertices.len() {
                return Err(bad(format!("edge {} references an unknown vertex", j + 1)));
            }
            if e.from == e.to {
                return Err(bad(format!("edge {} is a loop (raw loops are not allowed)", j + 1)));
            }
            if let Some(l) = e.length_override {
                if !(l > 0.0) || !l.is_finite() {
                    return Err(bad(format!("edge {} has a non-positive length override", j + 1)));
                }
            }
        }
        let p = UnitCellPattern { vertices, edges };
        for j in 0..p.edges.len() {
            if p.edge_length(j) <= COORD_TOL {
                return Err(bad(format!("edge {} has zero length", j + 1)));
            }
        }
        Ok(p)
    }

    pub fn edge_length(&self, j: usize) -> f64 {
        let e = &self.edges[j];
        e.length_override
            .unwrap_or_else(|| dist(self.vertices[e.from], self.vertices[e.to]))
    }

    /// Sum of all edge lengths |Gamma_Y|.
    pub fn total_length(&self) -> f64 {
        (0..self.edges.len()).map(|j| self.edge_length(j)).sum()
    }

    /// Vector from edge tail to edge head (original positions).
    pub fn chord(&self, j: usize) -> [f64; 2] {
        let e = &self.edges[j];
        let a = self.vertices[e.from];
        let b = self.vertices[e.to];
        [b[0] - a[0], b[1] - a[1]]
    }

    /// Unit tangent along the straight segment from tail to head.
    pub fn unit_tangent(&self, j: usize) -> [f64; 2] {
        let c = self.chord(j);
        let l = (c[0] * c[0] + c[1] * c[1]).sqrt();
        [c[0] / l, c[1] / l]
    }

    pub fn has_overrides(&self) -> bool {
        self.edges.iter().any(|e| e.length_override.is_some())
    }

    /// Serialize in the pattern file format; `parse_pattern` on the output
    /// reproduces the pattern exactly.
    pub fn to_pattern_file(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.vertices.iter().enumerate() {
            s.push_str(&format!("vertex {} {} {}\n", i + 1, v[0], v[1]));
        }
        for (j, e) in self.edges.iter().enumerate() {
            match e.length_override {
                Some(l) => {
                    s.push_str(&format!("edge {} {} {} length {}\n", j + 1, e.from + 1, e.to + 1, l))
                }
                None => s.push_str(&format!("edge {} {} {}\n", j + 1, e.from + 1, e.to + 1)),
            }
        }
        s
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Parse the pattern file format. Errors carry the offending line number.
pub fn parse_pattern(text: &str) -> Result<UnitCellPattern> {
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "vertex" => {
                if tok.len() != 4 {
                    return Err(err("expected `vertex <id> <x> <y>`".into()));
                }
                let id: usize = tok[1].parse().map_err(|_| err(format!("bad vertex id `{}`", tok[1])))?;
                if id != vertices.len() + 1 {
                    return Err(err(format!(
                        "vertex ids must be contiguous from 1 (expected {}, got {})",
                        vertices.len() + 1,
                        id
                    )));
                }
                let x: f64 = tok[2].parse().map_err(|_| err(format!("bad coordinate `{}`", tok[2])))?;
                let y: f64 = tok[3].parse().map_err(|_| err(format!("bad coordinate `{}`", tok[3])))?;
                vertices.push([x, y]);
            }
            "edge" => {
                if tok.len() != 4 && tok.len() != 6 {
                    return Err(err("expected `edge <id> <from> <to> [length <l>]`".into()));
                }
                let id: usize = tok[1].parse().map_err(|_| err(format!("bad edge id `{}`", tok[1])))?;
                if id != edges.len() + 1 {
                    return Err(err(format!(
                        "edge ids must be contiguous from 1 (expected {}, got {})",
                        edges.len() + 1,
                        id
                    )));
                }
                let from: usize =
                    tok[2].parse().map_err(|_| err(format!("bad vertex reference `{}`", tok[2])))?;
                let to: usize =
                    tok[3].parse().map_err(|_| err(format!("bad vertex reference `{}`", tok[3])))?;
                if from == 0 || to == 0 || from > vertices.len() || to > vertices.len() {
                    return Err(err(format!("edge {} references an unknown vertex", id)));
                }
                let length_override = if tok.len() == 6 {
                    if tok[4] != "length" {
                        return Err(err(format!("expected `length`, got `{}`", tok[4])));
                    }
                    let l: f64 =
                        tok[5].parse().map_err(|_| err(format!("bad length `{}`", tok[5])))?;
                    if !(l > 0.0) {
                        return Err(err(format!("non-positive length override {}", l)));
                    }
                    Some(l)
                } else {
                    None
                };
                edges.push(Edge { from: from - 1, to: to - 1, length_override });
            }
            other => return Err(err(format!("unknown record `{}`", other))),
        }
    }
    if edges.is_empty() {
        return Err(Error::Parse { line: text.lines().count().max(1), msg: "no edges".into() });
    }
    UnitCellPattern::from_parts(vertices, edges).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Parse { line: 0, msg },
        other => other,
    })
}

/// Periodic identification of the boundary vertices.
///
/// Vertices on the right side carry the shift e1, on the top side e2, on the
/// top-right corner e1+e2, all others 0; every shifted vertex is matched to
/// its opposite partner, which defines the idempotent map `rep`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicStructure {
    /// rep[i] is the interior representative of vertex i (identity on interior vertices).
    pub rep: Vec<usize>,
    /// shift[i] is the periodic shift of vertex i: 0, e1, e2 or e1+e2.
    pub shift: Vec<[f64; 2]>,
    /// Interior vertices (those not on the right or top side), in index order.
    pub interior: Vec<usize>,
    /// interior_slot[i] is the position of vertex i in `interior`, if any.
    pub interior_slot: Vec<Option<usize>>,
}

impl PeriodicStructure {
    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }
}

pub fn periodic_identification(p: &UnitCellPattern) -> Result<PeriodicStructure> {
    let n = p.vertices.len();
    let mut shift = vec![[0.0; 2]; n];
    let mut rep = (0..n).collect::<Vec<_>>();
    for (i, v) in p.vertices.iter().enumerate() {
        let on_right = (v[0] - 1.0).abs() <= COORD_TOL;
        let on_top = (v[1] - 1.0).abs() <= COORD_TOL;
        let eta = [if on_right { 1.0 } else { 0.0 }, if on_top { 1.0 } else { 0.0 }];
        if eta == [0.0, 0.0] {
            continue;
        }
        let target = [v[0] - eta[0], v[1] - eta[1]];
        let partner = p
            .vertices
            .iter()
            .position(|w| dist(*w, target) <= COORD_TOL)
            .ok_or_else(|| {
                Error::NotPeriodic(format!(
                    "vertex {} at ({}, {}) has no opposite partner at ({}, {})",
                    i + 1,
                    v[0],
                    v[1],
                    target[0],
                    target[1]
                ))
            })?;
        shift[i] = eta;
        rep[i] = partner;
    }
    let mut interior = Vec::new();
    let mut interior_slot = vec![None; n];
    for i in 0..n {
        if rep[i] == i {
            interior_slot[i] = Some(interior.len());
            interior.push(i);
        }
    }
    Ok(PeriodicStructure { rep, shift, interior, interior_slot })
}

/// Outcome of the structural checks on a pattern.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// (a) the graph is connected
    pub connected: bool,
    /// (b1) at least one identified pair across the left/right sides
    pub contact_e1: bool,
    /// (b2) at least one identified pair across the bottom/top sides
    pub contact_e2: bool,
    /// (c) no edge runs along a boundary side, so every boundary contact is a vertex
    pub boundary_contacts_are_vertices: bool,
    /// Edges violating (c), 1-based.
    pub boundary_edges: Vec<usize>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.connected && self.contact_e1 && self.contact_e2 && self.boundary_contacts_are_vertices
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pf = |b: bool| if b { "pass" } else { "FAIL" };
        writeln!(f, "connectivity: {}", pf(self.connected))?;
        writeln!(f, "left-right contact: {}", pf(self.contact_e1))?;
        writeln!(f, "bottom-top contact: {}", pf(self.contact_e2))?;
        write!(f, "boundary contacts are vertices: {}", pf(self.boundary_contacts_are_vertices))?;
        if !self.boundary_edges.is_empty() {
            write!(f, " (edges along the boundary: {:?})", self.boundary_edges)?;
        }
        Ok(())
    }
}

/// Run the structural checks: connectivity, periodic contact in both axis
/// directions, and that boundary contact happens only at vertices.
pub fn validate(p: &UnitCellPattern, s: &PeriodicStructure) -> ValidationReport {
    let n = p.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for e in &p.edges {
        adj[e.from].push(e.to);
        adj[e.to].push(e.from);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    let connected = seen.iter().all(|&b| b);

    let contact_e1 = s.shift.iter().any(|eta| eta[0] == 1.0);
    let contact_e2 = s.shift.iter().any(|eta| eta[1] == 1.0);

    let mut boundary_edges = Vec::new();
    for (j, e) in p.edges.iter().enumerate() {
        let a = p.vertices[e.from];
        let b = p.vertices[e.to];
        let on_side = |u: f64, v: f64, c: f64| (u - c).abs() <= COORD_TOL && (v - c).abs() <= COORD_TOL;
        let along = on_side(a[0], b[0], 0.0)
            || on_side(a[0], b[0], 1.0)
            || on_side(a[1], b[1], 0.0)
            || on_side(a[1], b[1], 1.0);
        if along {
            boundary_edges.push(j + 1);
        }
    }
    ValidationReport {
        connected,
        contact_e1,
        contact_e2,
        boundary_contacts_are_vertices: boundary_edges.is_empty(),
        boundary_edges,
    }
}

/// Validate and convert a failed report into an error, for pipeline use.
pub fn require_valid(p: &UnitCellPattern, s: &PeriodicStructure) -> Result<()> {
    let report = validate(p, s);
    if report.ok() {
        Ok(())
    } else {
        Err(Error::Validation(report.to_string().replace('\n', "; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parse_plus_pattern() {
        let text = "\
# plus-shaped unit cell
vertex 1 0 0.5
vertex 2 0.5 0
vertex 3 0.5 0.5
vertex 4 1 0.5
vertex 5 0.5 1
edge 1 3 4
edge 2 3 5
edge 3 1 3
edge 4 2 3
";
        let p = parse_pattern(text).unwrap();
        assert_eq!(p.vertices.len(), 5);
        assert_eq!(p.edges.len(), 4);
        for j in 0..4 {
            assert!((p.edge_length(j) - 0.5).abs() < 1e-15);
        }
        assert!((p.total_length() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn parse_rejects_empty_edge_list() {
        let err = parse_pattern("vertex 1 0 0.5\nvertex 2 1 0.5\n").unwrap_err();
        assert!(err.to_string().contains("no edges"), "{err}");
    }

    #[test]
    fn parse_blitz_lengths() {
        let p = fixtures::bolt();
        let r = std::f64::consts::SQRT_2 / 2.0;
        assert_eq!(p.vertices.len(), 4);
        assert_eq!(p.edges.len(), 3);
        assert!((p.edge_length(0) - r).abs() < 1e-15);
        assert!((p.edge_length(1) - 1.0).abs() < 1e-15);
        assert!((p.edge_length(2) - r).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_pattern("vertex 1 0 0.5\nvertex 3 1 0.5\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("contiguous"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let err = parse_pattern("vertex 1 0 0.5\nvertex 2 1 0.5\nedge 1 1 7\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");

        let err =
            parse_pattern("vertex 1 0 0.5\nvertex 2 1 0.5\nedge 1 1 2 length -1\n").unwrap_err();
        assert!(err.to_string().contains("non-positive"), "{err}");
    }

    #[test]
    fn raw_loops_rejected() {
        let err = parse_pattern("vertex 1 0.5 0.5\nedge 1 1 1\n").unwrap_err();
        assert!(err.to_string().contains("loop"), "{err}");
    }

    #[test]
    fn round_trip_serialization() {
        for p in [fixtures::plus(), fixtures::rhomb(0.4), fixtures::bolt(), fixtures::diamond()] {
            let text = p.to_pattern_file();
            let q = parse_pattern(&text).unwrap();
            assert_eq!(p, q);
        }
        // With overrides.
        let mut p = fixtures::plus();
        p.edges[2].length_override = Some(0.75);
        let q = parse_pattern(&p.to_pattern_file()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn plus_identification() {
        let p = fixtures::plus();
        let s = periodic_identification(&p).unwrap();
        // v4 = (1, 1/2) maps to v1 = (0, 1/2) with shift e1; v5 = (1/2, 1) to v2 with e2.
        assert_eq!(s.rep[3], 0);
        assert_eq!(s.shift[3], [1.0, 0.0]);
        assert_eq!(s.rep[4], 1);
        assert_eq!(s.shift[4], [0.0, 1.0]);
        assert_eq!(s.interior_count(), 3);
        assert_eq!(s.interior, vec![0, 1, 2]);
    }

    #[test]
    fn blitz_identification() {
        let p = fixtures::bolt();
        let s = periodic_identification(&p).unwrap();
        assert_eq!(s.rep[3], 0); // v4 = (1, 1/2) -> v1
        assert_eq!(s.rep[2], 1); // v3 = (1/2, 1) -> v2
        assert_eq!(s.interior_count(), 2);
    }

    #[test]
    fn corner_vertices_identify_to_one_representative() {
        let p = fixtures::xcross();
        let s = periodic_identification(&p).unwrap();
        // All four corners collapse onto the origin vertex.
        for (i, v) in p.vertices.iter().enumerate() {
            let corner = (v[0].abs() <= COORD_TOL || (v[0] - 1.0).abs() <= COORD_TOL)
                && (v[1].abs() <= COORD_TOL || (v[1] - 1.0).abs() <= COORD_TOL);
            if corner {
                assert_eq!(p.vertices[s.rep[i]], [0.0, 0.0]);
            }
        }
        assert_eq!(s.interior_count(), 2);
    }

    #[test]
    fn missing_partner_is_an_error() {
        // Right-side contact with no matching left-side vertex.
        let p = UnitCellPattern::from_parts(
            vec![[0.2, 0.5], [1.0, 0.6], [0.5, 0.0], [0.5, 1.0]],
            vec![
                Edge { from: 0, to: 1, length_override: None },
                Edge { from: 2, to: 3, length_override: None },
            ],
        )
        .unwrap();
        assert!(matches!(periodic_identification(&p), Err(Error::NotPeriodic(_))));
    }

    #[test]
    fn single_horizontal_segment_fails_e2_contact() {
        let p = UnitCellPattern::from_parts(
            vec![[0.0, 0.5], [1.0, 0.5]],
            vec![Edge { from: 0, to: 1, length_override: None }],
        )
        .unwrap();
        let s = periodic_identification(&p).unwrap();
        assert_eq!(s.rep[1], 0);
        let report = validate(&p, &s);
        assert!(report.connected && report.contact_e1);
        assert!(!report.contact_e2);
        assert!(!report.ok());
    }

    #[test]
    fn disjoint_components_fail_connectivity() {
        // A valid plus plus a floating segment in the lower-left corner area.
        let mut p = fixtures::plus();
        let n = p.vertices.len();
        p.vertices.push([0.1, 0.1]);
        p.vertices.push([0.2, 0.1]);
        p.edges.push(Edge { from: n, to: n + 1, length_override: None });
        let p = UnitCellPattern::from_parts(p.vertices, p.edges).unwrap();
        let s = periodic_identification(&p).unwrap();
        let report = validate(&p, &s);
        assert!(!report.connected);
        assert!(!report.ok());
    }

    #[test]
    fn edge_along_boundary_fails_check() {
        let p = UnitCellPattern::from_parts(
            vec![[0.0, 0.2], [0.0, 0.8], [0.0, 0.5], [1.0, 0.5], [0.5, 0.0], [0.5, 1.0]],
            vec![
                Edge { from: 0, to: 1, length_override: None }, // runs along the left side
                Edge { from: 2, to: 3, length_override: None },
                Edge { from: 4, to: 5, length_override: None },
                Edge { from: 0, to: 4, length_override: None },
                Edge { from: 2, to: 0, length_override: None },
            ],
        )
        .unwrap();
        let s = periodic_identification(&p).unwrap();
        let report = validate(&p, &s);
        assert!(!report.boundary_contacts_are_vertices);
        assert_eq!(report.boundary_edges, vec![1]);
    }

    #[test]
    fn identification_invariant_under_reindexing() {
        let p = fixtures::plus();
        let s = periodic_identification(&p).unwrap();
        // Reverse the vertex order.
        let n = p.vertices.len();
        let perm: Vec<usize> = (0..n).rev().collect(); // new index of old vertex i
        let mut vertices = vec![[0.0; 2]; n];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = p.vertices[old];
        }
        let edges = p
            .edges
            .iter()
            .map(|e| Edge { from: perm[e.from], to: perm[e.to], length_override: e.length_override })
            .collect();
        let q = UnitCellPattern::from_parts(vertices, edges).unwrap();
        let t = periodic_identification(&q).unwrap();
        // Shifts attached to positions are identical.
        for old in 0..n {
            assert_eq!(s.shift[old], t.shift[perm[old]]);
            assert_eq!(perm[s.rep[old]], t.rep[perm[old]]);
        }
    }

    #[test]
    fn fixture_patterns_validate() {
        for p in [
            fixtures::plus(),
            fixtures::rhomb((0.5f64).atan()),
            fixtures::bolt(),
            fixtures::xcross(),
            fixtures::diamond(),
        ] {
            let s = periodic_identification(&p).unwrap();
            assert!(validate(&p, &s).ok());
        }
    }
}
