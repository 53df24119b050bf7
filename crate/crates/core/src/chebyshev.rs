//! Chebyshev-Gauss-Lobatto nodes, barycentric interpolation and
//! Clenshaw-Curtis weights on an interval `[0, t]`.

use std::f64::consts::PI;

/// Nodes `t (1 - cos(pi j / p)) / 2`, ascending from 0 to `t`.
pub fn lobatto_nodes(p: usize, t: f64) -> Vec<f64> {
    assert!(p >= 1, "degree must be at least 1");
    (0..=p)
        .map(|j| {
            if j == 0 {
                0.0
            } else if j == p {
                t
            } else {
                0.5 * t * (1.0 - (PI * j as f64 / p as f64).cos())
            }
        })
        .collect()
}

/// Barycentric weights for Lobatto nodes: `(-1)^j`, halved at both ends.
pub fn barycentric_weights(p: usize) -> Vec<f64> {
    (0..=p)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == p {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Lagrange basis values `L_l(x)` for the given nodes and weights.
pub fn lagrange_row(nodes: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    if let Some(hit) = nodes.iter().position(|&n| n == x) {
        let mut row = vec![0.0; nodes.len()];
        row[hit] = 1.0;
        return row;
    }
    let terms: Vec<f64> = nodes.iter().zip(weights).map(|(&n, &w)| w / (x - n)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}

/// Clenshaw-Curtis weights on `[-1, 1]` for the `n + 1` Lobatto points
/// `cos(pi j / n)`.
pub fn clenshaw_curtis_unit(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    if n == 1 {
        return vec![1.0, 1.0];
    }
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / nf).collect();
    let mut v = vec![1.0; n - 1];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.into_iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

/// Clenshaw-Curtis rule of order `n` on `[0, t]`: ascending nodes and weights.
pub fn clenshaw_curtis(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes = lobatto_nodes(n, t);
    // unit weights are symmetric, so node ordering does not matter
    let weights = clenshaw_curtis_unit(n).into_iter().map(|w| 0.5 * t * w).collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16, 17] {
            let (x, w) = clenshaw_curtis(n, 0.7);
            for deg in 0..=n {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = 0.7f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn quadrature_of_trigonometric_integrand() {
        let (x, w) = clenshaw_curtis(16, 1.0);
        let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * (3.0 * t).cos()).sum();
        assert!((q - 3f64.sin() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_interpolation_reproduces_polynomials() {
        let p = 12;
        let nodes = lobatto_nodes(p, 2.0);
        let wts = barycentric_weights(p);
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(7) - 0.01 * t.powi(12);
        let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
        for x in [0.0, 0.013, 0.5, 1.1, 1.999, 2.0] {
            let row = lagrange_row(&nodes, &wts, x);
            let v: f64 = row.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((v - f(x)).abs() < 1e-11 * (1.0 + f(x).abs()), "x={x}");
        }
    }
}
