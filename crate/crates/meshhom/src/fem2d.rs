//! Tensor-product Lagrange finite elements on a uniform rectangle mesh for
//! the effective 2D heat problem, plus exact point evaluation for projecting
//! the 2D solution onto lattice nodes.

use crate::basis::{lagrange_deriv, lagrange_value, ShapeTable};
use crate::cell::UnitCellPattern;
use crate::graph_fem::{CoefficientField, SourceSpec};
use crate::lattice::DirichletSpec;
use crate::linalg::{eigenvalues_sym2, Csr, CsrBuilder};
use crate::{Error, Result};

/// Uniform nx-by-ny quadrilateral mesh of (0, L1) x (0, L2) with degree-q
/// tensor-product Lagrange elements on a shared global node grid.
#[derive(Debug, Clone)]
pub struct QuadFeSpace {
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub l1: f64,
    pub l2: f64,
}

impl QuadFeSpace {
    pub fn new(nx: usize, ny: usize, degree: usize, l1: f64, l2: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || degree == 0 {
            return Err(Error::InvalidInput("mesh sizes and degree must be positive".into()));
        }
        if !(l1 > 0.0 && l2 > 0.0) {
            return Err(Error::InvalidInput("domain sides must be positive".into()));
        }
        Ok(QuadFeSpace { nx, ny, degree, l1, l2 })
    }

    pub fn nodes_x(&self) -> usize {
        self.nx * self.degree + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.ny * self.degree + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nodes_x() + ix
    }

    pub fn node_position(&self, idx: usize) -> [f64; 2] {
        let ix = idx % self.nodes_x();
        let iy = idx / self.nodes_x();
        [
            self.l1 * ix as f64 / (self.nodes_x() - 1) as f64,
            self.l2 * iy as f64 / (self.nodes_y() - 1) as f64,
        ]
    }

    fn cell_size(&self) -> (f64, f64) {
        (self.l1 / self.nx as f64, self.l2 / self.ny as f64)
    }

    /// Cell index and local [0,1]^2 coordinates of a point, clamped to the
    /// closed domain within tolerance.
    fn locate(&self, p: [f64; 2]) -> Result<(usize, usize, f64, f64)> {
        let tol = 1e-12 * self.l1.max(self.l2);
        if p[0] < -tol || p[0] > self.l1 + tol || p[1] < -tol || p[1] > self.l2 + tol {
            return Err(Error::OutsideDomain(p[0], p[1]));
        }
        let (hx, hy) = self.cell_size();
        let x = p[0].clamp(0.0, self.l1);
        let y = p[1].clamp(0.0, self.l2);
        let cx = ((x / hx).floor() as usize).min(self.nx - 1);
        let cy = ((y / hy).floor() as usize).min(self.ny - 1);
        Ok((cx, cy, (x - cx as f64 * hx) / hx, (y - cy as f64 * hy) / hy))
    }

    /// Nodes lying on the marked part of the rectangle boundary.
    pub fn dirichlet_nodes(&self, spec: &DirichletSpec) -> Vec<usize> {
        let tol = 1e-12 * self.l1.max(self.l2);
        (0..self.node_count())
            .filter(|&i| spec.contains(self.node_position(i), self.l1, self.l2, tol))
            .collect()
    }

    /// Nodal interpolant of a function.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.node_count()).map(|i| f(self.node_position(i))).collect()
    }
}

/// Initial temperature: zero or an evaluable field (which must vanish on the
/// Dirichlet part).
pub enum InitialField {
    Zero,
    Field(Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl InitialField {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            InitialField::Zero => 0.0,
            InitialField::Field(f) => f(x),
        }
    }
}

/// Data of the effective problem: constant SPD tensor, scalar coefficient
/// field, averaged source and initial state.
pub struct HomogenizedProblem {
    pub a_hom: [[f64; 2]; 2],
    pub coef: CoefficientField,
    pub source: SourceSpec,
    pub u_init: InitialField,
}

/// Mass and stiffness of the effective bilinear form
/// (rho_cp u, v) and (a(x) A_hom grad u, grad v).
pub fn assemble_2d(space: &QuadFeSpace, prob: &HomogenizedProblem) -> Result<(Csr, Csr)> {
    let a = &prob.a_hom;
    if (a[0][1] - a[1][0]).abs() > 1e-12 || eigenvalues_sym2(a)[0] <= 0.0 {
        return Err(Error::NotSpd);
    }
    let q = space.degree;
    let table = ShapeTable::gauss(q, q + 1);
    let nq = table.points.len();
    let (hx, hy) = space.cell_size();
    let n = space.node_count();
    let nloc = (q + 1) * (q + 1);
    let cap = space.nx * space.ny * nloc * nloc;
    let mut mass = CsrBuilder::with_capacity(n, cap);
    let mut stiff = CsrBuilder::with_capacity(n, cap);

    let mut global = vec![0usize; nloc];
    for cx in 0..space.nx {
        for cy in 0..space.ny {
            for a_ in 0..=q {
                for b in 0..=q {
                    global[b * (q + 1) + a_] = space.node_index(cx * q + a_, cy * q + b);
                }
            }
            let mut m_loc = vec![0.0; nloc * nloc];
            let mut k_loc = vec![0.0; nloc * nloc];
            for qx in 0..nq {
                for qy in 0..nq {
                    let w = table.weights[qx] * table.weights[qy] * hx * hy;
                    let x = [
                        (cx as f64 + table.points[qx]) * hx,
                        (cy as f64 + table.points[qy]) * hy,
                    ];
                    let coef_a = (prob.coef.a)(x);
                    if !(coef_a > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "conductivity is not positive at ({}, {})",
                            x[0], x[1]
                        )));
                    }
                    for i in 0..nloc {
                        let (ia, ib) = (i % (q + 1), i / (q + 1));
                        let vi = table.value[qx][ia] * table.value[qy][ib];
                        let gi = [
                            table.deriv[qx][ia] * table.value[qy][ib] / hx,
                            table.value[qx][ia] * table.deriv[qy][ib] / hy,
                        ];
                        let agi = [
                            a[0][0] * gi[0] + a[0][1] * gi[1],
                            a[1][0] * gi[0] + a[1][1] * gi[1],
                        ];
                        for j in 0..nloc {
                            let (ja, jb) = (j % (q + 1), j / (q + 1));
                            let vj = table.value[qx][ja] * table.value[qy][jb];
                            let gj = [
                                table.deriv[qx][ja] * table.value[qy][jb] / hx,
                                table.value[qx][ja] * table.deriv[qy][jb] / hy,
                            ];
                            m_loc[i * nloc + j] += w * prob.coef.rho_cp * vi * vj;
                            k_loc[i * nloc + j] += w * coef_a * (agi[0] * gj[0] + agi[1] * gj[1]);
                        }
                    }
                }
            }
            for i in 0..nloc {
                for j in 0..nloc {
                    mass.add(global[i], global[j], m_loc[i * nloc + j]);
                    stiff.add(global[i], global[j], k_loc[i * nloc + j]);
                }
            }
        }
    }
    Ok((mass.build(), stiff.build()))
}

/// Average the source over the unit cell.
///
/// Macroscopic sources do not depend on the cell variable, so the average is
/// the source itself; the hook exists so that cell-oscillating sources slot
/// in here later.
pub fn homogenize_source(f: &SourceSpec, _pattern: &UnitCellPattern) -> SourceSpec {
    f.clone()
}

/// Load vector for an arbitrary spatial function.
pub fn assemble_load_2d(space: &QuadFeSpace, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let q = space.degree;
    let table = ShapeTable::gauss(q, q + 1);
    let nq = table.points.len();
    let (hx, hy) = space.cell_size();
    let mut load = vec![0.0; space.node_count()];
    for cx in 0..space.nx {
        for cy in 0..space.ny {
            for qx in 0..nq {
                for qy in 0..nq {
                    let w = table.weights[qx] * table.weights[qy] * hx * hy;
                    let x = [
                        (cx as f64 + table.points[qx]) * hx,
                        (cy as f64 + table.points[qy]) * hy,
                    ];
                    let fw = w * f(x);
                    if fw == 0.0 {
                        continue;
                    }
                    for a_ in 0..=q {
                        for b in 0..=q {
                            load[space.node_index(cx * q + a_, cy * q + b)] +=
                                fw * table.value[qx][a_] * table.value[qy][b];
                        }
                    }
                }
            }
        }
    }
    load
}

/// Exact finite-element evaluation at arbitrary points of the closed domain.
pub fn evaluate_at_points(space: &QuadFeSpace, u: &[f64], pts: &[[f64; 2]]) -> Result<Vec<f64>> {
    if u.len() != space.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "evaluate_at_points: {} coefficients for {} nodes",
            u.len(),
            space.node_count()
        )));
    }
    let q = space.degree;
    let mut out = Vec::with_capacity(pts.len());
    for &p in pts {
        let (cx, cy, xi, eta) = space.locate(p)?;
        let lx: Vec<f64> = (0..=q).map(|i| lagrange_value(q, i, xi)).collect();
        let ly: Vec<f64> = (0..=q).map(|i| lagrange_value(q, i, eta)).collect();
        let mut v = 0.0;
        for b in 0..=q {
            let mut row = 0.0;
            for a in 0..=q {
                row += u[space.node_index(cx * q + a, cy * q + b)] * lx[a];
            }
            v += row * ly[b];
        }
        out.push(v);
    }
    Ok(out)
}

/// Gradient of the finite-element field at arbitrary points.
pub fn evaluate_gradient_at_points(
    space: &QuadFeSpace,
    u: &[f64],
    pts: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    if u.len() != space.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "evaluate_gradient_at_points: {} coefficients for {} nodes",
            u.len(),
            space.node_count()
        )));
    }
    let q = space.degree;
    let (hx, hy) = space.cell_size();
    let mut out = Vec::with_capacity(pts.len());
    for &p in pts {
        let (cx, cy, xi, eta) = space.locate(p)?;
        let lx: Vec<f64> = (0..=q).map(|i| lagrange_value(q, i, xi)).collect();
        let ly: Vec<f64> = (0..=q).map(|i| lagrange_value(q, i, eta)).collect();
        let dx: Vec<f64> = (0..=q).map(|i| lagrange_deriv(q, i, xi)).collect();
        let dy: Vec<f64> = (0..=q).map(|i| lagrange_deriv(q, i, eta)).collect();
        let mut g = [0.0, 0.0];
        for b in 0..=q {
            for a in 0..=q {
                let c = u[space.node_index(cx * q + a, cy * q + b)];
                g[0] += c * dx[a] * ly[b] / hx;
                g[1] += c * lx[a] * dy[b] / hy;
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// L2 distance between the finite-element field and a reference function,
/// by cell-wise Gauss quadrature with q + 2 points per direction.
pub fn l2_error(space: &QuadFeSpace, u: &[f64], exact: impl Fn([f64; 2]) -> f64) -> Result<f64> {
    let q = space.degree;
    let table = ShapeTable::gauss(q, q + 2);
    let (hx, hy) = space.cell_size();
    let mut total = 0.0;
    for cx in 0..space.nx {
        for cy in 0..space.ny {
            for qx in 0..table.points.len() {
                for qy in 0..table.points.len() {
                    let w = table.weights[qx] * table.weights[qy] * hx * hy;
                    let x = [
                        (cx as f64 + table.points[qx]) * hx,
                        (cy as f64 + table.points[qy]) * hy,
                    ];
                    let mut v = 0.0;
                    for a in 0..=q {
                        for b in 0..=q {
                            v += u[space.node_index(cx * q + a, cy * q + b)]
                                * table.value[qx][a]
                                * table.value[qy][b];
                        }
                    }
                    total += w * (v - exact(x)).powi(2);
                }
            }
        }
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_fem::{apply_dirichlet, DirichletMode};
    use crate::linalg::spmv;
    use crate::timestep::{crank_nicolson_run, TransientSystem};

    fn unit_problem(a_hom: [[f64; 2]; 2]) -> HomogenizedProblem {
        HomogenizedProblem {
            a_hom,
            coef: CoefficientField::constant(1.0, 1.0),
            source: SourceSpec::Zero,
            u_init: InitialField::Zero,
        }
    }

    #[test]
    fn q1_laplacian_element_matrix() {
        let sp = QuadFeSpace::new(1, 1, 1, 1.0, 1.0).unwrap();
        let (_, k) = assemble_2d(&sp, &unit_problem([[1.0, 0.0], [0.0, 1.0]])).unwrap();
        // Bilinear element on the unit square: diagonal 2/3, opposite corner -1/3,
        // adjacent corners -1/6.
        for i in 0..4 {
            assert!((k.get(i, i) - 2.0 / 3.0).abs() < 1e-13);
        }
        assert!((k.get(0, 3) + 1.0 / 3.0).abs() < 1e-13);
        assert!((k.get(1, 2) + 1.0 / 3.0).abs() < 1e-13);
        assert!((k.get(0, 1) + 1.0 / 6.0).abs() < 1e-13);
        assert!((k.get(0, 2) + 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn scaled_tensor_scales_stiffness() {
        let sp = QuadFeSpace::new(2, 3, 2, 1.0, 1.0).unwrap();
        let (_, k1) = assemble_2d(&sp, &unit_problem([[1.0, 0.0], [0.0, 1.0]])).unwrap();
        let c = 0.37;
        let (_, kc) = assemble_2d(&sp, &unit_problem([[c, 0.0], [0.0, c]])).unwrap();
        for (a, b) in k1.values.iter().zip(&kc.values) {
            assert!((c * a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_in_stiffness_kernel_and_mass_total() {
        let sp = QuadFeSpace::new(3, 2, 3, 2.0, 1.5).unwrap();
        let prob = HomogenizedProblem {
            a_hom: [[0.5, -0.1], [-0.1, 0.7]],
            coef: CoefficientField::constant(1.0, 2.0),
            source: SourceSpec::Zero,
            u_init: InitialField::Zero,
        };
        let (m, k) = assemble_2d(&sp, &prob).unwrap();
        let ones = vec![1.0; sp.node_count()];
        let k1 = spmv(&k, &ones).unwrap();
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
        // Sum of mass entries = rho_cp |Omega|.
        assert!((m.total() - 2.0 * 3.0).abs() < 1e-10);
    }

    #[test]
    fn non_spd_tensor_rejected() {
        let sp = QuadFeSpace::new(1, 1, 1, 1.0, 1.0).unwrap();
        assert!(matches!(
            assemble_2d(&sp, &unit_problem([[1.0, 2.0], [2.0, 1.0]])),
            Err(Error::NotSpd)
        ));
        assert!(matches!(
            assemble_2d(&sp, &unit_problem([[1.0, 0.5], [0.4, 1.0]])),
            Err(Error::NotSpd)
        ));
    }

    #[test]
    fn bilinear_interpolation_at_center() {
        let sp = QuadFeSpace::new(1, 1, 1, 1.0, 1.0).unwrap();
        // Coefficient 1 at the top-right node, 0 elsewhere.
        let mut u = vec![0.0; 4];
        u[sp.node_index(1, 1)] = 1.0;
        let v = evaluate_at_points(&sp, &u, &[[0.5, 0.5]]).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn evaluation_at_nodes_returns_coefficients() {
        let sp = QuadFeSpace::new(2, 2, 3, 1.0, 1.0).unwrap();
        let u: Vec<f64> = (0..sp.node_count()).map(|i| (i as f64).sin()).collect();
        let pts: Vec<[f64; 2]> = (0..sp.node_count()).map(|i| sp.node_position(i)).collect();
        let v = evaluate_at_points(&sp, &u, &pts).unwrap();
        for i in 0..u.len() {
            assert!((v[i] - u[i]).abs() < 1e-11, "node {i}");
        }
    }

    #[test]
    fn polynomial_reproduction() {
        let sp = QuadFeSpace::new(2, 2, 2, 1.0, 1.0).unwrap();
        let g = |x: [f64; 2]| x[0] * x[0] * x[1];
        let u = sp.interpolate(g);
        let pts = [[0.13, 0.87], [0.5, 0.25], [0.99, 0.01], [1.0, 1.0]];
        let v = evaluate_at_points(&sp, &u, &pts).unwrap();
        for (p, val) in pts.iter().zip(v) {
            assert!((val - g(*p)).abs() < 1e-13);
        }
        let grads = evaluate_gradient_at_points(&sp, &u, &pts).unwrap();
        for (p, g2) in pts.iter().zip(grads) {
            assert!((g2[0] - 2.0 * p[0] * p[1]).abs() < 1e-12);
            assert!((g2[1] - p[0] * p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_point_rejected() {
        let sp = QuadFeSpace::new(1, 1, 1, 1.0, 1.0).unwrap();
        let u = vec![0.0; 4];
        assert!(matches!(
            evaluate_at_points(&sp, &u, &[[1.5, 0.5]]),
            Err(Error::OutsideDomain(_, _))
        ));
    }

    #[test]
    fn anisotropic_tensor_spreads_along_the_strong_axis() {
        // Strongly anisotropic diffusion of a centered bump: after a short
        // run the second moment along x must dominate the one along y.
        let sp = QuadFeSpace::new(4, 4, 3, 1.0, 1.0).unwrap();
        let prob = HomogenizedProblem {
            a_hom: [[1.0, 0.0], [0.0, 0.05]],
            coef: CoefficientField::constant(1.0, 1.0),
            source: SourceSpec::Gaussian {
                amplitude: 4.0,
                decay: 196.0,
                center: [0.5, 0.5],
                rate: 0.0,
            },
            u_init: InitialField::Zero,
        };
        let (m, k) = assemble_2d(&sp, &prob).unwrap();
        let nodes = sp.dirichlet_nodes(&DirichletSpec::All);
        let f0 = assemble_load_2d(&sp, |x| prob.source.eval(0.0, x));
        let (mr, kr, _, map) = apply_dirichlet(&m, &k, &f0, &nodes, DirichletMode::Eliminate);
        let loader = |t: f64| map.restrict(&assemble_load_2d(&sp, |x| prob.source.eval(t, x)));
        let sys = TransientSystem {
            mass: &mr,
            stiffness: &kr,
            load: &loader,
            u0: vec![0.0; map.reduced_dim()],
            dt: 0.01,
            t_final: 0.2,
        };
        let u = map.expand(&crank_nicolson_run(&sys, |_, _, _| {}).unwrap());

        let moment = |dir: usize| {
            let f = |x: [f64; 2]| (x[dir] - 0.5) * (x[dir] - 0.5);
            let w = assemble_load_2d(&sp, f);
            crate::linalg::dot(&w, &u)
        };
        let mx = moment(0);
        let my = moment(1);
        assert!(mx > my, "second moments: x {mx}, y {my}");
    }
}
