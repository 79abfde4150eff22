//! Effective conductivity tensor of a unit-cell pattern.
//!
//! Two independent routes compute the same 2x2 tensor:
//!
//! * [`solve_tensor`] runs the incidence-matrix method: per-edge slope vectors
//!   b_j and interior node values Q solve the saddle system
//!   `[L, A^T; A, 0] [b; Q] = [f; 0]`, reduced to the SPD system
//!   `A L^-1 A^T Q = A L^-1 f` with the two-dimensional constant kernel
//!   removed by pinning one interior vertex. The tensor is
//!   `(1/|cell|) sum_j l_j b_j b_j^T`.
//! * [`solve_canonical_fem`] discretizes the periodic cell problem for the
//!   corrector with one linear element per edge, which is exact because the
//!   continuous solution is affine along every edge.
//!
//! Both depend on the pattern only through its topology and edge lengths.

use crate::cell::{PeriodicStructure, UnitCellPattern};
use crate::linalg::{dense_solve_spd, eigenvalues_sym2, Dense};
use crate::{Error, Result};

/// The algebraic system of the incidence-matrix method.
///
/// Rows of `a_i` come in pairs per interior vertex, columns in pairs per edge;
/// each 2x2 block is +I if the edge enters the vertex (after periodic
/// identification), -I if it leaves, and 0 otherwise, so edges that become
/// loops contribute nothing.
#[derive(Debug, Clone)]
pub struct IncidenceSystem {
    pub a_i: Dense,
    /// Diagonal of L: edge lengths, each duplicated for the two components.
    pub ell: Vec<f64>,
    /// Per-edge shift differences eta(head) - eta(tail), interleaved.
    pub f: Vec<f64>,
    pub interior_count: usize,
    pub edge_count: usize,
}

impl IncidenceSystem {
    /// max-norm of A_I * b, the Kirchhoff balance residual.
    pub fn kirchhoff_residual(&self, b: &[[f64; 2]]) -> f64 {
        let flat: Vec<f64> = b.iter().flat_map(|v| [v[0], v[1]]).collect();
        self.a_i.matvec(&flat).iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Effective tensor together with the algebraic solution it came from.
#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    pub a_hom: [[f64; 2]; 2],
    /// Per-edge slope of the affine node potential.
    pub b: Vec<[f64; 2]>,
    /// Node values at interior vertices; one particular solution, pinned at
    /// the first interior vertex.
    pub q: Vec<[f64; 2]>,
    pub total_length: f64,
}

impl EffectiveTensor {
    /// Eigenvalues of the tensor, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        eigenvalues_sym2(&self.a_hom)
    }
}

/// Periodic corrector: per-vertex values and per-edge slopes of the field
/// whose sum with the identity is affine along every edge.
#[derive(Debug, Clone)]
pub struct CorrectorField {
    /// Value at every raw vertex (equal at identified vertices).
    pub phi: Vec<[f64; 2]>,
    /// Slope along each edge, equal to b_j minus the mean tangent.
    pub slope: Vec<[f64; 2]>,
    /// Per-edge slope of the full affine potential (copied from the tensor solve).
    pub b: Vec<[f64; 2]>,
}

/// Assemble the incidence matrix, length diagonal and shift vector.
pub fn build_incidence_system(p: &UnitCellPattern, s: &PeriodicStructure) -> IncidenceSystem {
    let ne = p.edges.len();
    let nv = s.interior_count();
    let mut a_i = Dense::zeros(2 * nv, 2 * ne);
    let mut ell = vec![0.0; 2 * ne];
    let mut f = vec![0.0; 2 * ne];
    for (j, e) in p.edges.iter().enumerate() {
        let l = p.edge_length(j);
        ell[2 * j] = l;
        ell[2 * j + 1] = l;
        let eta_head = s.shift[e.to];
        let eta_tail = s.shift[e.from];
        f[2 * j] = eta_head[0] - eta_tail[0];
        f[2 * j + 1] = eta_head[1] - eta_tail[1];
        let head = s.interior_slot[s.rep[e.to]].expect("rep is interior");
        let tail = s.interior_slot[s.rep[e.from]].expect("rep is interior");
        if head == tail {
            continue; // loop in the periodic graph
        }
        for c in 0..2 {
            a_i.add_to(2 * head + c, 2 * j + c, 1.0);
            a_i.add_to(2 * tail + c, 2 * j + c, -1.0);
        }
    }
    IncidenceSystem { a_i, ell, f, interior_count: nv, edge_count: ne }
}

/// Solve the reduced system and assemble the tensor, pinning the first
/// interior vertex.
pub fn solve_tensor(sys: &IncidenceSystem, total_length: f64) -> Result<EffectiveTensor> {
    solve_tensor_pinned(sys, total_length, 0)
}

/// Same with an explicit choice of the pinned interior vertex; b is
/// independent of the choice, Q is not.
pub(crate) fn solve_tensor_pinned(
    sys: &IncidenceSystem,
    total_length: f64,
    pin: usize,
) -> Result<EffectiveTensor> {
    let nv = sys.interior_count;
    let ne = sys.edge_count;
    assert!(pin < nv);

    // S = A L^-1 A^T and rhs = A L^-1 f on the unpinned rows.
    let rows = 2 * nv;
    let cols = 2 * ne;
    let mut s_full = Dense::zeros(rows, rows);
    for r in 0..rows {
        for c in r..rows {
            let mut acc = 0.0;
            for k in 0..cols {
                let ar = sys.a_i.at(r, k);
                if ar != 0.0 {
                    acc += ar * sys.a_i.at(c, k) / sys.ell[k];
                }
            }
            s_full.set(r, c, acc);
            s_full.set(c, r, acc);
        }
    }
    let mut rhs_full = vec![0.0; rows];
    for r in 0..rows {
        let mut acc = 0.0;
        for k in 0..cols {
            acc += sys.a_i.at(r, k) * sys.f[k] / sys.ell[k];
        }
        rhs_full[r] = acc;
    }

    let keep: Vec<usize> = (0..rows).filter(|&r| r / 2 != pin).collect();
    let m = keep.len();
    let mut s_red = Dense::zeros(m, m);
    for (i, &r) in keep.iter().enumerate() {
        for (j, &c) in keep.iter().enumerate() {
            s_red.set(i, j, s_full.at(r, c));
        }
    }
    let rhs_red: Vec<f64> = keep.iter().map(|&r| rhs_full[r]).collect();
    let q_red = dense_solve_spd(&s_red, &rhs_red).map_err(|e| match e {
        Error::NotSpd => Error::DegenerateCell,
        other => other,
    })?;

    let mut q_flat = vec![0.0; rows];
    for (i, &r) in keep.iter().enumerate() {
        q_flat[r] = q_red[i];
    }

    // b = L^-1 (f - A^T Q)
    let atq = sys.a_i.tr_matvec(&q_flat);
    let mut b = Vec::with_capacity(ne);
    for j in 0..ne {
        b.push([
            (sys.f[2 * j] - atq[2 * j]) / sys.ell[2 * j],
            (sys.f[2 * j + 1] - atq[2 * j + 1]) / sys.ell[2 * j + 1],
        ]);
    }

    let mut a_hom = [[0.0; 2]; 2];
    for j in 0..ne {
        let l = sys.ell[2 * j];
        a_hom[0][0] += l * b[j][0] * b[j][0];
        a_hom[0][1] += l * b[j][0] * b[j][1];
        a_hom[1][1] += l * b[j][1] * b[j][1];
    }
    a_hom[0][0] /= total_length;
    a_hom[0][1] /= total_length;
    a_hom[1][1] /= total_length;
    a_hom[1][0] = a_hom[0][1];

    let q = (0..nv).map(|i| [q_flat[2 * i], q_flat[2 * i + 1]]).collect();
    Ok(EffectiveTensor { a_hom, b, q, total_length })
}

/// Independent route: linear finite elements for the periodic cell problem,
/// one element per edge, gauge fixed by pinning one vertex value.
///
/// Exact for the cell problem because its solutions are edge-wise affine, so
/// the result must match [`solve_tensor`] to round-off.
pub fn solve_canonical_fem(
    p: &UnitCellPattern,
    s: &PeriodicStructure,
) -> Result<(CorrectorField, [[f64; 2]; 2])> {
    let nv = s.interior_count();
    let ne = p.edges.len();

    // Periodic graph Laplacian weighted by inverse lengths.
    let mut k = Dense::zeros(nv, nv);
    let mut rhs = [vec![0.0; nv], vec![0.0; nv]];
    for (j, e) in p.edges.iter().enumerate() {
        let l = p.edge_length(j);
        let tail = s.interior_slot[s.rep[e.from]].unwrap();
        let head = s.interior_slot[s.rep[e.to]].unwrap();
        if tail == head {
            continue; // hat functions are constant along a loop
        }
        k.add_to(tail, tail, 1.0 / l);
        k.add_to(head, head, 1.0 / l);
        k.add_to(tail, head, -1.0 / l);
        k.add_to(head, tail, -1.0 / l);
        let g = p.chord(j);
        for c in 0..2 {
            rhs[c][head] -= g[c] / l;
            rhs[c][tail] += g[c] / l;
        }
    }

    // Remove the constant kernel by pinning vertex 0.
    let keep: Vec<usize> = (1..nv).collect();
    let mut k_red = Dense::zeros(nv - 1, nv - 1);
    for (i, &r) in keep.iter().enumerate() {
        for (j2, &c) in keep.iter().enumerate() {
            k_red.set(i, j2, k.at(r, c));
        }
    }
    let mut phi_interior = vec![[0.0; 2]; nv];
    for c in 0..2 {
        let rhs_red: Vec<f64> = keep.iter().map(|&r| rhs[c][r]).collect();
        let sol = dense_solve_spd(&k_red, &rhs_red).map_err(|e| match e {
            Error::NotSpd => Error::DegenerateCell,
            other => other,
        })?;
        for (i, &r) in keep.iter().enumerate() {
            phi_interior[r][c] = sol[i];
        }
    }

    let total = p.total_length();
    let mut b = Vec::with_capacity(ne);
    let mut slope = Vec::with_capacity(ne);
    let mut a_hom = [[0.0; 2]; 2];
    for (j, e) in p.edges.iter().enumerate() {
        let l = p.edge_length(j);
        let g = p.chord(j);
        let pt = phi_interior[s.interior_slot[s.rep[e.from]].unwrap()];
        let ph = phi_interior[s.interior_slot[s.rep[e.to]].unwrap()];
        let bj = [(ph[0] - pt[0] + g[0]) / l, (ph[1] - pt[1] + g[1]) / l];
        slope.push([bj[0] - g[0] / l, bj[1] - g[1] / l]);
        a_hom[0][0] += l * bj[0] * bj[0];
        a_hom[0][1] += l * bj[0] * bj[1];
        a_hom[1][1] += l * bj[1] * bj[1];
        b.push(bj);
    }
    a_hom[0][0] /= total;
    a_hom[0][1] /= total;
    a_hom[1][1] /= total;
    a_hom[1][0] = a_hom[0][1];

    let phi = (0..p.vertices.len()).map(|i| phi_interior[s.interior_slot[s.rep[i]].unwrap()]).collect();
    Ok((CorrectorField { phi, slope, b }, a_hom))
}

/// Corrector data from an algebraic tensor solve.
///
/// The per-edge slope of the corrector is b_j minus the mean tangent; vertex
/// values are reconstructed from Q and the shifts and are periodic by
/// construction.
pub fn corrector_slopes(
    t: &EffectiveTensor,
    p: &UnitCellPattern,
    s: &PeriodicStructure,
) -> CorrectorField {
    let mut phi = Vec::with_capacity(p.vertices.len());
    for i in 0..p.vertices.len() {
        let r = s.rep[i];
        let q = t.q[s.interior_slot[r].unwrap()];
        let pos = p.vertices[r];
        // The particular solution solves the saddle system with Q = -(phi + id)
        // up to an additive constant, so flip the sign when reconstructing.
        phi.push([-q[0] - pos[0], -q[1] - pos[1]]);
    }
    let slope = (0..p.edges.len())
        .map(|j| {
            let l = p.edge_length(j);
            let g = p.chord(j);
            [t.b[j][0] - g[0] / l, t.b[j][1] - g[1] / l]
        })
        .collect();
    CorrectorField { phi, slope, b: t.b.clone() }
}

/// Convenience: identification, validation, incidence assembly and tensor
/// solve in one call.
pub fn tensor_of_pattern(p: &UnitCellPattern) -> Result<(EffectiveTensor, IncidenceSystem, PeriodicStructure)> {
    let s = crate::cell::periodic_identification(p)?;
    crate::cell::require_valid(p, &s)?;
    let sys = build_incidence_system(p, &s);
    let t = solve_tensor(&sys, p.total_length())?;
    Ok((t, sys, s))
}
