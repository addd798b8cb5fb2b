//! Direct transmission solve: assemble the full interface system in the
//! per-layer harmonic coefficients and solve it densely. Slowest route, but
//! independent of every algebraic shortcut, so it serves as the oracle the
//! other routes are verified against.

use nalgebra::{DMatrix, DVector};

use crate::error::{CgptError, Result};
use crate::structure::{sigma_from_eta, ContrastVector, Dimension, LayerStructure};
use crate::tensor::cgpt_prefactor_b0;

/// Per-layer mode coefficients of the potential
/// `u = a_k r^n Y + b_k r^{-n} Y` (2-d) or `a_k r^n Y + b_k r^{-n-1} Y` (3-d)
/// in region `k`, with `a_0 = 1` (unit incident mode) and `b_{N+1} = 0`.
#[derive(Debug, Clone)]
pub struct FieldCoefficients {
    pub mode: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FieldCoefficients {
    /// Exterior decay coefficient `b_0`.
    pub fn b0(&self) -> f64 {
        self.b[0]
    }
}

fn column_a(k: usize) -> usize {
    2 * k - 1
}

fn column_b(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        2 * k
    }
}

/// Solve the transmission system for one mode. The core interface may be
/// insulating (`eta = -1`); every other contrast must lie strictly inside
/// `(-1, 1)` so all conductivities stay finite and nonzero.
pub fn direct_solve(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<FieldCoefficients> {
    if n == 0 {
        return Err(CgptError::InvalidInput("mode order must be at least 1".into()));
    }
    let layers = structure.n_layers();
    if eta.len() != layers {
        return Err(CgptError::InvalidInput(format!(
            "contrast count {} does not match {} interfaces",
            eta.len(),
            layers
        )));
    }
    for (k, &e) in eta.as_slice().iter().enumerate() {
        let is_core = k + 1 == layers;
        if e >= 1.0 || (!is_core && e <= -1.0) {
            return Err(CgptError::InvalidInput(format!(
                "direct solve needs finite conductivities: eta_{} = {e} (only the core may be insulating)",
                k + 1
            )));
        }
    }
    let sigma = sigma_from_eta(eta, structure.sigma_background())?;
    let dim = structure.dimension();
    let radii = structure.radii();
    let n_i = n as i32;
    let nf = n as f64;

    let size = 2 * layers;
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);

    // decay-part radial powers and flux weights per dimension
    let decay_pow = |rho: f64| -> f64 {
        match dim {
            Dimension::Two => rho.powi(-n_i),
            Dimension::Three => rho.powi(-n_i - 1),
        }
    };
    let flux_decay = |rho: f64| -> f64 {
        // radial derivative times rho (continuity rows are scaled by rho/n elsewhere)
        match dim {
            Dimension::Two => -nf * rho.powi(-n_i),
            Dimension::Three => -(nf + 1.0) * rho.powi(-n_i - 1),
        }
    };

    for k in 1..=layers {
        let rho = radii[k - 1];
        let row_c = 2 * (k - 1);
        let row_f = row_c + 1;
        let grow = rho.powi(n_i);
        let dec = decay_pow(rho);
        let flux_grow = nf * grow;
        let flux_dec = flux_decay(rho);
        let (s_out, s_in) = (sigma[k - 1], sigma[k]);

        // continuity: outer coefficients minus inner coefficients
        if k == 1 {
            rhs[row_c] -= grow; // a_0 = 1 moves to the right-hand side
            rhs[row_f] -= s_out * flux_grow;
        } else {
            mat[(row_c, column_a(k - 1))] += grow;
            mat[(row_f, column_a(k - 1))] += s_out * flux_grow;
        }
        mat[(row_c, column_b(k - 1))] += dec;
        mat[(row_f, column_b(k - 1))] += s_out * flux_dec;

        mat[(row_c, column_a(k))] -= grow;
        mat[(row_f, column_a(k))] -= s_in * flux_grow;
        if k < layers {
            mat[(row_c, column_b(k))] -= dec;
            mat[(row_f, column_b(k))] -= s_in * flux_dec;
        }
    }

    let lu = mat.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| CgptError::Singular("direct transmission solve".into()))?;

    let mut a = Vec::with_capacity(layers + 1);
    let mut b = Vec::with_capacity(layers + 1);
    a.push(1.0);
    b.push(sol[0]);
    for k in 1..=layers {
        a.push(sol[column_a(k)]);
        if k < layers {
            b.push(sol[column_b(k)]);
        }
    }
    b.push(0.0);
    Ok(FieldCoefficients { mode: n, a, b })
}

/// Two-dimensional direct solve.
pub fn direct_solve_2d(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<FieldCoefficients> {
    if structure.dimension() != Dimension::Two {
        return Err(CgptError::Unsupported("direct_solve_2d needs a 2-d structure".into()));
    }
    direct_solve(structure, eta, n)
}

/// Three-dimensional direct solve.
pub fn direct_solve_3d(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<FieldCoefficients> {
    if structure.dimension() != Dimension::Three {
        return Err(CgptError::Unsupported("direct_solve_3d needs a 3-d structure".into()));
    }
    direct_solve(structure, eta, n)
}

/// CGPT read off the exterior decay coefficient of a direct solve.
pub fn cgpt_from_coefficients(structure: &LayerStructure, coeffs: &FieldCoefficients) -> f64 {
    cgpt_prefactor_b0(structure.dimension(), coeffs.mode) * coeffs.b0()
}

/// Convenience wrapper: direct solve followed by the far-field read-off.
pub fn cgpt_direct(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    Ok(cgpt_from_coefficients(structure, &direct_solve(structure, eta, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::eta_from_sigma;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn disk_sigma_three() {
        let s = LayerStructure::disk(vec![1.0]).unwrap();
        let e = eta_from_sigma(&[1.0, 3.0]).unwrap();
        let c = direct_solve_2d(&s, &e, 1).unwrap();
        assert_relative_eq!(c.b0(), -0.5, max_relative = 1e-14);
        assert_relative_eq!(cgpt_from_coefficients(&s, &c), PI, max_relative = 1e-14);
    }

    #[test]
    fn ball_sigma_two() {
        let s = LayerStructure::ball(vec![1.0]).unwrap();
        let e = eta_from_sigma(&[1.0, 2.0]).unwrap();
        let c = direct_solve_3d(&s, &e, 1).unwrap();
        assert_relative_eq!(c.b0(), -0.25, max_relative = 1e-14);
    }

    #[test]
    fn zero_contrast_leaves_background_field() {
        let s = LayerStructure::disk(vec![2.0, 1.2, 0.6]).unwrap();
        let c = direct_solve(&s, &ContrastVector::zeros(3), 3).unwrap();
        for k in 0..=3 {
            assert_relative_eq!(c.a[k], 1.0, max_relative = 1e-13);
            assert!(c.b[k].abs() < 1e-13);
        }
    }

    #[test]
    fn insulating_core_is_solvable() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let e = ContrastVector::new(vec![0.4, -1.0]).unwrap();
        let c = direct_solve(&s, &e, 2).unwrap();
        // one-sided Neumann at the core: sigma_1 * du/dr|_+ = 0 at r_2
        let rho: f64 = 1.0;
        let n = 2.0;
        let du = n * c.a[1] * rho.powi(1) - n * c.b[1] * rho.powi(-3);
        assert!(du.abs() < 1e-12, "normal derivative {du} should vanish");
    }

    #[test]
    fn interior_insulating_layer_rejected() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let e = ContrastVector::new(vec![-1.0, 0.3]).unwrap();
        assert!(direct_solve(&s, &e, 1).is_err());
    }

    #[test]
    fn interface_conditions_hold() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [Dimension::Two, Dimension::Three] {
            for _ in 0..50 {
                let layers = rng.random_range(1..=10);
                let mut radii: Vec<f64> = (0..layers)
                    .map(|i| 0.5 + 0.2 * i as f64 + rng.random_range(0.0..0.15))
                    .collect();
                radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let s = LayerStructure::new(dim, radii, 1.0).unwrap();
                let eta = ContrastVector::new(
                    (0..layers).map(|_| rng.random_range(-0.9..0.9)).collect(),
                ).unwrap();
                let n = rng.random_range(1..=8);
                let c = direct_solve(&s, &eta, n).unwrap();
                let sigma = sigma_from_eta(&eta, 1.0).unwrap();
                let n_i = n as i32;
                let nf = n as f64;
                for k in 1..=layers {
                    let rho = s.radii()[k - 1];
                    let dec = match dim {
                        Dimension::Two => rho.powi(-n_i),
                        Dimension::Three => rho.powi(-n_i - 1),
                    };
                    let fdec = match dim {
                        Dimension::Two => -nf * dec,
                        Dimension::Three => -(nf + 1.0) * dec,
                    };
                    let up = c.a[k - 1] * rho.powi(n_i) + c.b[k - 1] * dec;
                    let um = c.a[k] * rho.powi(n_i) + c.b[k] * dec;
                    let fp = sigma[k - 1] * (nf * c.a[k - 1] * rho.powi(n_i) + c.b[k - 1] * fdec);
                    let fm = sigma[k] * (nf * c.a[k] * rho.powi(n_i) + c.b[k] * fdec);
                    let scale = up.abs().max(um.abs()).max(1e-30);
                    assert!((up - um).abs() / scale < 1e-11);
                    let fscale = fp.abs().max(fm.abs()).max(1e-30);
                    assert!((fp - fm).abs() / fscale < 1e-10);
                }
            }
        }
    }
}
