//! Gauss–Legendre and Gauss–Lobatto rules.

use crate::error::{Error, Result};

/// Quadrature rule on [-1,1]^dim (or on [0,1]^dim after [`QuadRule::to_unit`]).
/// For `dim == 1` the second coordinate of every point is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

fn legendre_with_prev(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1,1], ascending.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut xi = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, pm) = legendre_with_prev(n, xi);
            let dp = nf * (xi * p - pm) / (xi * xi - 1.0);
            let step = p / dp;
            xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (p, pm) = legendre_with_prev(n, xi);
        let dp = nf * (xi * p - pm) / (xi * xi - 1.0);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    (x, w)
}

/// The n+1 Gauss–Lobatto–Legendre nodes of degree n on [-1,1], ascending.
pub fn gauss_lobatto_nodes(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..=n)
        .map(|i| {
            let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
            if i == 0 || i == n {
                return x.round();
            }
            for _ in 0..100 {
                let (p, pm) = legendre_with_prev(n, x);
                let dx = (x * p - pm) / ((nf + 1.0) * p);
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            x
        })
        .collect()
}

/// Tensor Gauss–Legendre rule with `n` points per direction on [-1,1]^dim.
pub fn gauss_legendre(n: usize, dim: usize) -> Result<QuadRule> {
    if !(1..=10).contains(&n) {
        return Err(Error::QuadratureOrder(n));
    }
    let (x, w) = gauss_legendre_1d(n);
    match dim {
        1 => Ok(QuadRule { dim, points: x.iter().map(|&p| [p, 0.0]).collect(), weights: w }),
        2 => {
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    points.push([x[i], x[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
            Ok(QuadRule { dim, points, weights })
        }
        _ => Err(Error::InvalidArgument(format!("quadrature dimension {dim}"))),
    }
}

impl QuadRule {
    /// Map to [0,1]^dim; weights then sum to 1.
    pub fn to_unit(&self) -> QuadRule {
        let scale = 0.5f64.powi(self.dim as i32);
        let map = |v: f64| 0.5 * (v + 1.0);
        let points = self
            .points
            .iter()
            .map(|p| if self.dim == 1 { [map(p[0]), 0.0] } else { [map(p[0]), map(p[1])] })
            .collect();
        QuadRule { dim: self.dim, points, weights: self.weights.iter().map(|w| w * scale).collect() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let r = gauss_legendre(1, 2).unwrap();
        assert_eq!(r.points, vec![[0.0, 0.0]]);
        assert_eq!(r.weights, vec![4.0]);
        let r = gauss_legendre(2, 1).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.points[0][0] + s).abs() < 1e-15 && (r.points[1][0] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        assert!(gauss_legendre(0, 1).is_err());
        assert!(gauss_legendre(11, 1).is_err());
    }

    #[test]
    fn exactness() {
        for n in 1..=10 {
            let r = gauss_legendre(n, 1).unwrap();
            for d in 0..(2 * n) {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} d={d}");
            }
        }
        let r = gauss_legendre(3, 1).unwrap();
        let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(5)).sum();
        assert!(q.abs() < 1e-14);
    }

    #[test]
    fn lobatto_nodes() {
        let n = gauss_lobatto_nodes(2);
        assert_eq!(n, vec![-1.0, 0.0, 1.0]);
        let n = gauss_lobatto_nodes(3);
        assert!((n[1] + 1.0 / 5f64.sqrt()).abs() < 1e-15);
        let n = gauss_lobatto_nodes(4);
        assert!((n[1] + (3.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert!(n[2].abs() < 1e-15);
    }

    #[test]
    fn unit_weights_sum_to_one() {
        for n in 1..=6 {
            let r = gauss_legendre(n, 2).unwrap().to_unit();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }
}
