//! Gauss-Legendre quadrature and equispaced Lagrange shape functions on the
//! reference interval [0, 1], shared by the 1D graph elements and the
//! tensor-product quadrilateral elements.

/// Gauss-Legendre nodes and weights on [0, 1].
///
/// Exact for polynomials up to degree 2n - 1. Nodes are found by Newton
/// iteration on the Legendre polynomial, which is plenty for the orders used
/// here (up to a few dozen points for oracle tests).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * p - if n == 1 { 1.0 } else { p0 }) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // Map [-1, 1] to [0, 1].
    for x in nodes.iter_mut() {
        *x = 0.5 * (*x + 1.0);
    }
    for w in weights.iter_mut() {
        *w *= 0.5;
    }
    (nodes, weights)
}

/// Value of the i-th equispaced Lagrange basis polynomial of degree p at t.
///
/// Reference nodes are t_k = k / p on [0, 1] (a single node at t = 0 for p = 0).
pub fn lagrange_value(p: usize, i: usize, t: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let pf = p as f64;
    let ti = i as f64 / pf;
    let mut v = 1.0;
    for k in 0..=p {
        if k != i {
            let tk = k as f64 / pf;
            v *= (t - tk) / (ti - tk);
        }
    }
    v
}

/// Derivative of the i-th equispaced Lagrange basis polynomial of degree p at t.
pub fn lagrange_deriv(p: usize, i: usize, t: f64) -> f64 {
    if p == 0 {
        return 0.0;
    }
    let pf = p as f64;
    let ti = i as f64 / pf;
    let mut sum = 0.0;
    for m in 0..=p {
        if m == i {
            continue;
        }
        let tm = m as f64 / pf;
        let mut prod = 1.0 / (ti - tm);
        for k in 0..=p {
            if k != i && k != m {
                let tk = k as f64 / pf;
                prod *= (t - tk) / (ti - tk);
            }
        }
        sum += prod;
    }
    sum
}

/// Shape-function table: values and derivatives of all degree-p basis
/// functions at a fixed set of quadrature points.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// value[q][i] = phi_i(points[q])
    pub value: Vec<Vec<f64>>,
    /// deriv[q][i] = phi_i'(points[q])
    pub deriv: Vec<Vec<f64>>,
}

impl ShapeTable {
    /// Table for degree `p` basis functions at an `n`-point Gauss rule.
    pub fn gauss(p: usize, n: usize) -> Self {
        let (points, weights) = gauss_legendre(n);
        let value = points
            .iter()
            .map(|&t| (0..=p).map(|i| lagrange_value(p, i, t)).collect())
            .collect();
        let deriv = points
            .iter()
            .map(|&t| (0..=p).map(|i| lagrange_deriv(p, i, t)).collect())
            .collect();
        ShapeTable { degree: p, points, weights, value, deriv }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_low_orders_match_tables() {
        let (x, w) = gauss_legendre(1);
        assert!((x[0] - 0.5).abs() < 1e-15 && (w[0] - 1.0).abs() < 1e-15);

        // 2-point rule on [0,1]: nodes (1 -/+ 1/sqrt(3))/2, weights 1/2.
        let (x, w) = gauss_legendre(2);
        let r = 0.5 / 3.0f64.sqrt();
        assert!((x[0] - (0.5 - r)).abs() < 1e-14);
        assert!((x[1] - (0.5 + r)).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);

        // 3-point rule: middle node 1/2 with weight 4/9.
        let (x, w) = gauss_legendre(3);
        assert!((x[1] - 0.5).abs() < 1e-14);
        assert!((w[1] - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_exact_for_monomials() {
        for n in 1..=16 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for d in 0..=(2 * n - 1) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "n = {n}, degree {d}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn lagrange_kronecker_property() {
        for p in 1..=6 {
            for i in 0..=p {
                for k in 0..=p {
                    let v = lagrange_value(p, i, k as f64 / p as f64);
                    let expect = if i == k { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "p={p} i={i} k={k}: {v}");
                }
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity_and_derivative() {
        for p in 1..=6 {
            for &t in &[0.0, 0.123, 0.5, 0.987, 1.0] {
                let s: f64 = (0..=p).map(|i| lagrange_value(p, i, t)).sum();
                let ds: f64 = (0..=p).map(|i| lagrange_deriv(p, i, t)).sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(ds.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lagrange_deriv_matches_finite_difference() {
        let h = 1e-6;
        for p in 1..=4 {
            for i in 0..=p {
                for &t in &[0.21, 0.63] {
                    let fd = (lagrange_value(p, i, t + h) - lagrange_value(p, i, t - h)) / (2.0 * h);
                    let an = lagrange_deriv(p, i, t);
                    assert!((fd - an).abs() < 1e-7, "p={p} i={i}: {fd} vs {an}");
                }
            }
        }
    }
}
