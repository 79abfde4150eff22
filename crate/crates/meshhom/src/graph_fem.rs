//! Continuous piecewise-polynomial finite elements on the lattice graph:
//! every lattice edge is split into `s` sub-edges carrying degree-`p`
//! Lagrange elements. Nodes at shared graph vertices have a single global
//! index, so the vertex balance condition is natural in the weak form.
//!
//! Lattice vertices keep their indices as the first FE nodes, which makes the
//! Dirichlet vertex set of the mesh directly usable as a node set here.

use crate::basis::ShapeTable;
use crate::lattice::LatticeMesh;
use crate::linalg::{Csr, CsrBuilder};
use crate::{Error, Result};

/// One sub-edge element: p+1 global node indices along a straight segment.
#[derive(Debug, Clone)]
pub struct GraphElement {
    pub nodes: Vec<usize>,
    pub length: f64,
    /// Index of the lattice edge this element belongs to.
    pub lattice_edge: usize,
}

#[derive(Debug, Clone)]
pub struct GraphFeSpace {
    pub degree: usize,
    pub splits: usize,
    /// Node positions; the first `mesh_vertices` entries coincide with the
    /// lattice vertices.
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<GraphElement>,
    pub mesh_vertices: usize,
}

impl GraphFeSpace {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Conductivity field and heat-capacity constant of the medium.
pub struct CoefficientField {
    pub a: Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    pub rho_cp: f64,
}

impl CoefficientField {
    pub fn constant(a: f64, rho_cp: f64) -> Self {
        CoefficientField { a: Box::new(move |_| a), rho_cp }
    }
}

/// Separable heat source A exp(-k |x - c|^2) exp(-lambda t), or none.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Zero,
    Gaussian { amplitude: f64, decay: f64, center: [f64; 2], rate: f64 },
}

impl SourceSpec {
    pub fn eval(&self, t: f64, x: [f64; 2]) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Gaussian { amplitude, decay, center, rate } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                amplitude * (-decay * (dx * dx + dy * dy)).exp() * (-rate * t).exp()
            }
        }
    }
}

/// Build the FE space: degree p in {1, 2, 3}, each lattice edge split into
/// `splits` equal sub-edges with equispaced Lagrange nodes.
pub fn build_space(mesh: &LatticeMesh, degree: usize, splits: usize) -> Result<GraphFeSpace> {
    if !(1..=3).contains(&degree) {
        return Err(Error::InvalidInput(format!("unsupported degree {degree} (use 1, 2 or 3)")));
    }
    if splits == 0 {
        return Err(Error::InvalidInput("splits must be at least 1".into()));
    }
    let p = degree;
    let per_edge = splits * p; // nodes per edge chain, minus one endpoint
    let mut nodes = mesh.vertices.clone();
    let mut elements = Vec::with_capacity(mesh.edges.len() * splits);
    for (ei, e) in mesh.edges.iter().enumerate() {
        let a = mesh.vertices[e.from];
        let b = mesh.vertices[e.to];
        let base = nodes.len();
        for k in 1..per_edge {
            let t = k as f64 / per_edge as f64;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        let global = |m: usize| -> usize {
            if m == 0 {
                e.from
            } else if m == per_edge {
                e.to
            } else {
                base + m - 1
            }
        };
        for s in 0..splits {
            let ids = (0..=p).map(|r| global(s * p + r)).collect();
            elements.push(GraphElement {
                nodes: ids,
                length: e.length / splits as f64,
                lattice_edge: ei,
            });
        }
    }
    Ok(GraphFeSpace { degree, splits, nodes, elements, mesh_vertices: mesh.vertices.len() })
}

/// Mass matrix with coefficient rho_cp, symmetric positive definite.
pub fn assemble_mass(space: &GraphFeSpace, rho_cp: f64) -> Csr {
    let p = space.degree;
    let table = ShapeTable::gauss(p, p + 1);
    let n = space.node_count();
    let mut builder = CsrBuilder::with_capacity(n, space.elements.len() * (p + 1) * (p + 1));
    for elem in &space.elements {
        for (q, &w) in table.weights.iter().enumerate() {
            let scale = rho_cp * elem.length * w;
            for i in 0..=p {
                for j in 0..=p {
                    builder.add(
                        elem.nodes[i],
                        elem.nodes[j],
                        scale * table.value[q][i] * table.value[q][j],
                    );
                }
            }
        }
    }
    builder.build()
}

/// Stiffness matrix for the edge-wise second-derivative form with
/// conductivity `coef.a`, symmetric positive semidefinite with the constants
/// in its kernel before any Dirichlet treatment.
pub fn assemble_stiffness(space: &GraphFeSpace, coef: &CoefficientField) -> Result<Csr> {
    let p = space.degree;
    let table = ShapeTable::gauss(p, p + 1);
    let n = space.node_count();
    let mut builder = CsrBuilder::with_capacity(n, space.elements.len() * (p + 1) * (p + 1));
    for elem in &space.elements {
        let x0 = space.nodes[elem.nodes[0]];
        let x1 = space.nodes[elem.nodes[p]];
        for (q, &w) in table.weights.iter().enumerate() {
            let t = table.points[q];
            let x = [x0[0] + t * (x1[0] - x0[0]), x0[1] + t * (x1[1] - x0[1])];
            let a = (coef.a)(x);
            if !(a > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "conductivity is not positive at ({}, {})",
                    x[0], x[1]
                )));
            }
            let scale = a * w / elem.length;
            for i in 0..=p {
                for j in 0..=p {
                    builder.add(
                        elem.nodes[i],
                        elem.nodes[j],
                        scale * table.deriv[q][i] * table.deriv[q][j],
                    );
                }
            }
        }
    }
    Ok(builder.build())
}

/// Load vector for the given source at time t.
pub fn assemble_load(space: &GraphFeSpace, source: &SourceSpec, t: f64) -> Vec<f64> {
    assemble_load_with(space, |x| source.eval(t, x))
}

/// Load vector for an arbitrary spatial function.
pub fn assemble_load_with(space: &GraphFeSpace, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let p = space.degree;
    let table = ShapeTable::gauss(p, p + 1);
    let mut load = vec![0.0; space.node_count()];
    for elem in &space.elements {
        let x0 = space.nodes[elem.nodes[0]];
        let x1 = space.nodes[elem.nodes[p]];
        for (q, &w) in table.weights.iter().enumerate() {
            let t = table.points[q];
            let x = [x0[0] + t * (x1[0] - x0[0]), x0[1] + t * (x1[1] - x0[1])];
            let scale = elem.length * w * f(x);
            for i in 0..=p {
                load[elem.nodes[i]] += scale * table.value[q][i];
            }
        }
    }
    load
}

/// How homogeneous Dirichlet nodes are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletMode {
    /// Symmetric removal of the constrained rows and columns (the default).
    Eliminate,
    /// Large diagonal penalty added to the stiffness.
    Penalty,
}

/// Maps between the full node set and the constrained system.
#[derive(Debug, Clone)]
pub enum BoundaryMap {
    Eliminate { free: Vec<usize>, full_dim: usize },
    /// Dimension-preserving treatments (penalty, or no constrained nodes).
    Identity { full_dim: usize },
}

impl BoundaryMap {
    pub fn reduced_dim(&self) -> usize {
        match self {
            BoundaryMap::Eliminate { free, .. } => free.len(),
            BoundaryMap::Identity { full_dim } => *full_dim,
        }
    }

    /// Restrict a full-length vector to the constrained system.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        match self {
            BoundaryMap::Eliminate { free, .. } => free.iter().map(|&i| full[i]).collect(),
            BoundaryMap::Identity { .. } => full.to_vec(),
        }
    }

    /// Expand a constrained vector back to full length, zeros on the boundary.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        match self {
            BoundaryMap::Eliminate { free, full_dim } => {
                let mut full = vec![0.0; *full_dim];
                for (k, &i) in free.iter().enumerate() {
                    full[i] = reduced[k];
                }
                full
            }
            BoundaryMap::Identity { .. } => reduced.to_vec(),
        }
    }
}

/// Impose homogeneous Dirichlet values on the given nodes.
///
/// `Eliminate` shrinks the system to the free nodes; `Penalty` adds
/// 1e10 * max |K_ii| to the constrained stiffness diagonal and leaves the
/// dimension alone. Both keep M + dt/2 K symmetric positive definite.
pub fn apply_dirichlet(
    mass: &Csr,
    stiffness: &Csr,
    load: &[f64],
    dirichlet: &[usize],
    mode: DirichletMode,
) -> (Csr, Csr, Vec<f64>, BoundaryMap) {
    let n = mass.dim;
    if dirichlet.is_empty() {
        let map = BoundaryMap::Identity { full_dim: n };
        return (mass.clone(), stiffness.clone(), load.to_vec(), map);
    }
    match mode {
        DirichletMode::Eliminate => {
            let mut constrained = vec![false; n];
            for &i in dirichlet {
                constrained[i] = true;
            }
            let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
            let m = mass.restrict(&free);
            let k = stiffness.restrict(&free);
            let f = free.iter().map(|&i| load[i]).collect();
            (m, k, f, BoundaryMap::Eliminate { free, full_dim: n })
        }
        DirichletMode::Penalty => {
            let beta = 1e10
                * stiffness
                    .diagonal()
                    .iter()
                    .fold(0.0f64, |m, d| m.max(d.abs()))
                    .max(1.0);
            let mut penal = CsrBuilder::new(n);
            for &i in dirichlet {
                penal.add(i, i, beta);
            }
            let k = stiffness.add_scaled(&penal.build(), 1.0).expect("same dimension");
            (mass.clone(), k, load.to_vec(), BoundaryMap::Identity { full_dim: n })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gauss_legendre;
    use crate::lattice::{build_lattice, DirichletSpec, LatticeEdge};
    use crate::linalg::{cg_solve, spmv};
    use crate::fixtures;

    fn single_edge_mesh(length: f64) -> LatticeMesh {
        LatticeMesh {
            vertices: vec![[0.0, 0.0], [length, 0.0]],
            edges: vec![LatticeEdge { from: 0, to: 1, length, cell: (0, 0), unit_edge: 0 }],
            dirichlet: Vec::new(),
            delta: 1.0,
            l1: length,
            l2: 1.0,
        }
    }

    fn chain_mesh(xs: &[f64]) -> LatticeMesh {
        let vertices: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 0.0]).collect();
        let edges = (0..xs.len() - 1)
            .map(|i| LatticeEdge {
                from: i,
                to: i + 1,
                length: xs[i + 1] - xs[i],
                cell: (0, 0),
                unit_edge: 0,
            })
            .collect();
        LatticeMesh {
            vertices,
            edges,
            dirichlet: Vec::new(),
            delta: 1.0,
            l1: *xs.last().unwrap(),
            l2: 1.0,
        }
    }

    #[test]
    fn node_counts() {
        let m = single_edge_mesh(1.0);
        assert_eq!(build_space(&m, 1, 1).unwrap().node_count(), 2);
        assert_eq!(build_space(&m, 2, 3).unwrap().node_count(), 7);
        assert!(build_space(&m, 4, 1).is_err());
        assert!(build_space(&m, 2, 0).is_err());
    }

    #[test]
    fn plus_lattice_node_count_matches_position_oracle() {
        let mesh = build_lattice(&fixtures::plus(), 1.0, 1.0, 0.25).unwrap();
        let space = build_space(&mesh, 2, 3).unwrap();
        // Continuity leaves V + E (s p - 1) distinct nodes.
        assert_eq!(space.node_count(), 56 + 64 * 5);

        // Independent oracle: dedupe all element node positions pairwise.
        let mut reps: Vec<[f64; 2]> = Vec::new();
        for e in &space.elements {
            for &nidx in &e.nodes {
                let p = space.nodes[nidx];
                if !reps
                    .iter()
                    .any(|r| (r[0] - p[0]).abs() <= 1e-11 && (r[1] - p[1]).abs() <= 1e-11)
                {
                    reps.push(p);
                }
            }
        }
        assert_eq!(space.node_count(), reps.len());
    }

    #[test]
    fn p1_mass_matrix_single_edge() {
        let m = single_edge_mesh(0.7);
        let space = build_space(&m, 1, 1).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let l = 0.7;
        assert!((mass.get(0, 0) - l / 3.0).abs() < 1e-14);
        assert!((mass.get(0, 1) - l / 6.0).abs() < 1e-14);
        assert!((mass.get(1, 1) - l / 3.0).abs() < 1e-14);
    }

    #[test]
    fn mass_total_is_density_times_length() {
        let mesh = build_lattice(&fixtures::bolt(), 1.0, 1.0, 0.25).unwrap();
        for (p, s) in [(1, 1), (2, 3), (3, 2)] {
            let space = build_space(&mesh, p, s).unwrap();
            let rho_cp = 2.5;
            let mass = assemble_mass(&space, rho_cp);
            let expect = rho_cp * mesh.total_length();
            assert!(
                (mass.total() - expect).abs() <= 1e-10 * expect,
                "p = {p}, s = {s}: {} vs {expect}",
                mass.total()
            );
        }
    }

    #[test]
    fn shared_vertex_mass_entry() {
        let m = chain_mesh(&[0.0, 0.3, 1.0]);
        let space = build_space(&m, 1, 1).unwrap();
        let mass = assemble_mass(&space, 1.0);
        assert!((mass.get(1, 1) - (0.3 + 0.7) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn p1_stiffness_single_edge() {
        let m = single_edge_mesh(0.5);
        let space = build_space(&m, 1, 1).unwrap();
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        assert!((k.get(0, 0) - 2.0).abs() < 1e-13);
        assert!((k.get(0, 1) + 2.0).abs() < 1e-13);
        assert!((k.get(1, 1) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_kernel_is_constants() {
        let mesh = build_lattice(&fixtures::plus(), 1.0, 1.0, 0.25).unwrap();
        let space = build_space(&mesh, 2, 3).unwrap();
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let ones = vec![1.0; space.node_count()];
        let k1 = spmv(&k, &ones).unwrap();
        let max = k1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max < 1e-12, "max |K 1| = {max:e}");
    }

    #[test]
    fn stiffness_orientation_independent() {
        let fwd = single_edge_mesh(1.0);
        let mut rev = fwd.clone();
        rev.edges[0].from = 1;
        rev.edges[0].to = 0;
        let sf = build_space(&fwd, 2, 1).unwrap();
        let sr = build_space(&rev, 2, 1).unwrap();
        let kf = assemble_stiffness(&sf, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let kr = assemble_stiffness(&sr, &CoefficientField::constant(1.0, 1.0)).unwrap();
        // Node positions swap ends: 0 <-> 1, interior node 2 is shared.
        let sigma = [1, 0, 2];
        for i in 0..3 {
            for j in 0..3 {
                assert!((kf.get(i, j) - kr.get(sigma[i], sigma[j])).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nonpositive_conductivity_rejected() {
        let m = single_edge_mesh(1.0);
        let space = build_space(&m, 1, 1).unwrap();
        let coef = CoefficientField { a: Box::new(|x| 1.0 - 2.0 * x[0]), rho_cp: 1.0 };
        assert!(assemble_stiffness(&space, &coef).is_err());
    }

    #[test]
    fn load_constant_and_zero() {
        let m = single_edge_mesh(0.8);
        let space = build_space(&m, 1, 1).unwrap();
        let f = assemble_load_with(&space, |_| 1.0);
        assert!((f[0] - 0.4).abs() < 1e-14 && (f[1] - 0.4).abs() < 1e-14);
        let z = assemble_load(&space, &SourceSpec::Zero, 0.3);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_exact_for_polynomials() {
        // Degree-p data integrated exactly by the p+1 point rule.
        let m = single_edge_mesh(1.0);
        for p in 1..=3 {
            let space = build_space(&m, p, 1).unwrap();
            let f = assemble_load_with(&space, |x| x[0].powi(p as i32));
            // Reference: 64-point rule, indexed through the element's local
            // node order.
            let (nodes, weights) = gauss_legendre(64);
            let elem = &space.elements[0];
            for i in 0..=p {
                let exact: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| w * t.powi(p as i32) * crate::basis::lagrange_value(p, i, t))
                    .sum();
                assert!((f[elem.nodes[i]] - exact).abs() < 1e-13, "p = {p}, node {i}");
            }
        }
    }

    #[test]
    fn gaussian_load_matches_high_order_oracle_at_lattice_scale() {
        // A lattice-scale edge through the source center.
        let l = 1.0 / 32.0;
        let mesh = LatticeMesh {
            vertices: vec![[0.5 - l / 2.0, 0.5], [0.5 + l / 2.0, 0.5]],
            edges: vec![LatticeEdge { from: 0, to: 1, length: l, cell: (0, 0), unit_edge: 0 }],
            dirichlet: Vec::new(),
            delta: 1.0 / 16.0,
            l1: 1.0,
            l2: 1.0,
        };
        let space = build_space(&mesh, 2, 3).unwrap();
        let src = SourceSpec::Gaussian {
            amplitude: 4.0,
            decay: 196.0,
            center: [0.5, 0.5],
            rate: 3.0,
        };
        let f = assemble_load(&space, &src, 0.0);

        // Oracle: 64-point Gauss per sub-edge.
        let (qn, qw) = gauss_legendre(64);
        let mut oracle = vec![0.0; space.node_count()];
        for elem in &space.elements {
            let x0 = space.nodes[elem.nodes[0]];
            let x1 = space.nodes[elem.nodes[2]];
            for (&t, &w) in qn.iter().zip(&qw) {
                let x = [x0[0] + t * (x1[0] - x0[0]), x0[1] + t * (x1[1] - x0[1])];
                let scale = elem.length * w * src.eval(0.0, x);
                for i in 0..=2 {
                    oracle[elem.nodes[i]] += scale * crate::basis::lagrange_value(2, i, t);
                }
            }
        }
        for i in 0..space.node_count() {
            assert!((f[i] - oracle[i]).abs() < 1e-10, "node {i}: {} vs {}", f[i], oracle[i]);
        }
    }

    #[test]
    fn eliminate_shrinks_system() {
        let m = single_edge_mesh(1.0);
        let space = build_space(&m, 1, 1).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let f = assemble_load_with(&space, |_| 1.0);
        let (mr, kr, fr, map) = apply_dirichlet(&mass, &k, &f, &[0], DirichletMode::Eliminate);
        assert_eq!(mr.dim, 1);
        assert_eq!(kr.dim, 1);
        assert_eq!(fr.len(), 1);
        let full = map.expand(&[2.0]);
        assert_eq!(full, vec![0.0, 2.0]);
    }

    #[test]
    fn no_dirichlet_leaves_matrices_alone() {
        let m = single_edge_mesh(1.0);
        let space = build_space(&m, 2, 2).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let f = assemble_load_with(&space, |x| x[0]);
        let (mr, kr, fr, _) = apply_dirichlet(&mass, &k, &f, &[], DirichletMode::Eliminate);
        assert_eq!(mr.dim, mass.dim);
        assert_eq!(kr.values, k.values);
        assert_eq!(fr, f);
    }

    #[test]
    fn penalty_and_eliminate_agree_on_chain_poisson() {
        let m = chain_mesh(&[0.0, 0.5, 1.0]);
        let space = build_space(&m, 1, 1).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let f = assemble_load_with(&space, |_| 1.0);
        let dirichlet = [0usize, 2];

        let (_, ke, fe, map_e) = apply_dirichlet(&mass, &k, &f, &dirichlet, DirichletMode::Eliminate);
        let ue = map_e.expand(&cg_solve(&ke, &fe, 1e-12, 100).unwrap());

        let (_, kp, fp, _) = apply_dirichlet(&mass, &k, &f, &dirichlet, DirichletMode::Penalty);
        let up = cg_solve(&kp, &fp, 1e-12, 1000).unwrap();

        for i in 0..3 {
            let denom = ue[i].abs().max(1e-3);
            assert!((ue[i] - up[i]).abs() / denom < 1e-6, "node {i}: {} vs {}", ue[i], up[i]);
        }
    }

    #[test]
    fn quadratic_poisson_is_exact_for_p2() {
        // -u'' = 2 on (0, 1), u(0) = u(1) = 0  =>  u = x (1 - x).
        let m = chain_mesh(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let space = build_space(&m, 2, 1).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let k = assemble_stiffness(&space, &CoefficientField::constant(1.0, 1.0)).unwrap();
        let f = assemble_load_with(&space, |_| 2.0);
        let (_, kr, fr, map) = apply_dirichlet(&mass, &k, &f, &[0, 4], DirichletMode::Eliminate);
        let u = map.expand(&cg_solve(&kr, &fr, 1e-14, 1000).unwrap());
        for (i, x) in space.nodes.iter().enumerate() {
            let exact = x[0] * (1.0 - x[0]);
            assert!((u[i] - exact).abs() < 1e-12, "node {i}: {} vs {}", u[i], exact);
        }
    }

    #[test]
    fn mass_is_spd_under_cg() {
        let mesh = build_lattice(&fixtures::plus(), 1.0, 1.0, 0.5).unwrap();
        let space = build_space(&mesh, 2, 3).unwrap();
        let mass = assemble_mass(&space, 1.0);
        let n = space.node_count();
        let mut state = 5u64;
        for _ in 0..3 {
            let b: Vec<f64> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            cg_solve(&mass, &b, 1e-10, 10 * n).expect("mass solve");
        }
    }

    #[test]
    fn dirichlet_nodes_are_vertex_ids() {
        let mut mesh = build_lattice(&fixtures::plus(), 1.0, 1.0, 0.25).unwrap();
        mesh.mark_dirichlet(&DirichletSpec::All);
        let space = build_space(&mesh, 2, 3).unwrap();
        for &v in &mesh.dirichlet {
            assert!(v < space.mesh_vertices);
            assert_eq!(space.nodes[v], mesh.vertices[v]);
        }
    }
}
