//! Vandermonde moment systems.
//!
//! The design machinery repeatedly solves systems of the form
//! `sum_k x_k^j w_k = b_j` (a transposed Vandermonde, "moment" system). For
//! geometrically spaced radii the nodes cluster and naive elimination loses
//! most digits, so everything here goes through the Bjorck-Pereyra dual
//! recurrences or explicit Lagrange-basis products, both of which stay
//! accurate on clustered nodes.

use crate::error::{CgptError, Result};

/// Solve `sum_k x_k^j w_k = b_j` for `j = 0..n-1` (Bjorck-Pereyra, dual form).
/// Nodes must be pairwise distinct.
pub fn solve_moments(nodes: &[f64], moments: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n == 0 || moments.len() != n {
        return Err(CgptError::InvalidInput(
            "moment vector length must match node count".into(),
        ));
    }
    for i in 0..n {
        for j in i + 1..n {
            if nodes[i] == nodes[j] {
                return Err(CgptError::Singular("duplicate Vandermonde node".into()));
            }
        }
    }
    let mut w = moments.to_vec();
    let m = n - 1;
    for k in 0..m {
        for i in (k + 1..=m).rev() {
            w[i] -= nodes[k] * w[i - 1];
        }
    }
    for k in (0..m).rev() {
        for i in k + 1..=m {
            w[i] /= nodes[i] - nodes[i - 1 - k];
        }
        for i in k..m {
            let next = w[i + 1];
            w[i] -= next;
        }
    }
    Ok(w)
}

/// Solve `sum_k x_k^j w_k = b_j` for `j = 1..n` (powers starting at one).
pub fn solve_moments_pow1(nodes: &[f64], moments: &[f64]) -> Result<Vec<f64>> {
    // substitute v_k = x_k w_k to shift the powers down to 0..n-1
    let v = solve_moments(nodes, moments)?;
    Ok(v.iter().zip(nodes).map(|(v, x)| v / x).collect())
}

/// Lagrange cardinal value `ell_k(t)` on the given nodes,
/// `ell_k(t) = prod_{j != k} (t - x_j) / (x_k - x_j)`.
pub fn lagrange_at(nodes: &[f64], k: usize, t: f64) -> f64 {
    let mut p = 1.0;
    for (j, &x) in nodes.iter().enumerate() {
        if j != k {
            p *= (t - x) / (nodes[k] - x);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residual(nodes: &[f64], w: &[f64], moments: &[f64], pow1: bool) -> f64 {
        let n = nodes.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let p = j as i32 + if pow1 { 1 } else { 0 };
            let s: f64 = nodes.iter().zip(w).map(|(x, w)| x.powi(p) * w).sum();
            worst = worst.max((s - moments[j]).abs());
        }
        worst
    }

    #[test]
    fn moments_well_separated() {
        let nodes = [4.0, 2.25, 1.0, 0.25];
        let moments = [1.0, -2.0, 0.5, 3.0];
        let w = solve_moments(&nodes, &moments).unwrap();
        assert!(residual(&nodes, &w, &moments, false) < 1e-10);
    }

    #[test]
    fn moments_clustered_nodes_stay_accurate() {
        // geometric nodes with 2% spacing: condition number beyond 1e10
        let g: f64 = 1.01;
        let nodes: Vec<f64> = (1..=8).map(|k| g.powi(2 * k)).collect();
        let moments = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let w = solve_moments(&nodes, &moments).unwrap();
        // the known exact solution of the all-ones moment problem
        for k in 0..8 {
            let expect = lagrange_at(&nodes, k, 1.0) / 1.0;
            // reproduces moments of a unit mass at t = 1, shifted one power:
            // sum x^j w = 1 = 1^j  =>  w_k = ell_k(1)
            assert_relative_eq!(w[k], expect, max_relative = 1e-11);
        }
        assert!(w.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e3);
    }

    #[test]
    fn moments_pow1() {
        let nodes = [2.0, 1.5, 1.1];
        let moments = [0.3, -1.0, 2.0];
        let w = solve_moments_pow1(&nodes, &moments).unwrap();
        assert!(residual(&nodes, &w, &moments, true) < 1e-12);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(solve_moments(&[1.0, 1.0], &[0.0, 0.0]).is_err());
    }
}
