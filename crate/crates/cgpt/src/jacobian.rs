//! Derivatives of the CGPTs with respect to the contrasts.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CgptError, Result};
use crate::structure::{ContrastVector, Dimension, LayerStructure};
use crate::tensor::{
    assemble_p_2d, calibrated_sign_2d, cgpt, cgpt_prefactor, mode_transfer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMethod {
    TransferDiff,
    MatrixAnalytic,
    FiniteDifference,
}

/// `entries[(i, k)] = d M_{orders[i]} / d eta_{k+1}`.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub orders: Vec<usize>,
    pub entries: DMatrix<f64>,
    pub method: JacobianMethod,
}

fn check(structure: &LayerStructure, eta: &ContrastVector, orders: &[usize]) -> Result<()> {
    if eta.len() != structure.n_layers() {
        return Err(CgptError::InvalidInput(format!(
            "contrast count {} does not match {} interfaces",
            eta.len(),
            structure.n_layers()
        )));
    }
    if orders.iter().any(|&n| n == 0) {
        return Err(CgptError::InvalidInput("mode orders must be at least 1".into()));
    }
    Ok(())
}

/// Product-rule differentiation of the transfer representation. Regular on
/// the whole closed box, including zero contrasts; the production Jacobian.
pub fn jacobian_transfer(
    structure: &LayerStructure,
    eta: &ContrastVector,
    orders: &[usize],
) -> Result<Jacobian> {
    check(structure, eta, orders)?;
    let layers = structure.n_layers();
    let mut entries = DMatrix::zeros(orders.len(), layers);
    for (row, &n) in orders.iter().enumerate() {
        let mt = mode_transfer(structure, eta.as_slice(), n, true);
        mt.check_resonance()?;
        let pref = cgpt_prefactor(structure.dimension(), n);
        for k in 0..layers {
            entries[(row, k)] =
                pref * (mt.d21[k] * mt.t22 - mt.t21 * mt.d22[k]) / (mt.t22 * mt.t22);
        }
    }
    Ok(Jacobian { orders: orders.to_vec(), entries, method: JacobianMethod::TransferDiff })
}

/// Analytic derivative of the 2-d interaction-matrix formula,
/// `dM_n/deta_i = s * (2 pi n / eta_i^2) e^T Upsilon P^{-1} E_ii P^{-1} e`.
/// Undefined at zero contrast; cross-check of [`jacobian_transfer`].
pub fn jacobian_matrix_analytic(
    structure: &LayerStructure,
    eta: &ContrastVector,
    orders: &[usize],
) -> Result<Jacobian> {
    if structure.dimension() != Dimension::Two {
        return Err(CgptError::Unsupported(
            "the analytic matrix Jacobian is implemented for 2-d structures".into(),
        ));
    }
    check(structure, eta, orders)?;
    let layers = structure.n_layers();
    let radii = structure.radii();
    let sign = calibrated_sign_2d();
    let mut entries = DMatrix::zeros(orders.len(), layers);
    let ones = DVector::from_element(layers, 1.0);
    for (row, &n) in orders.iter().enumerate() {
        let p = assemble_p_2d(structure, eta, n)?;
        let lu = p.lu();
        let x = lu
            .solve(&ones)
            .ok_or_else(|| CgptError::Singular("interaction-matrix solve".into()))?; // P^{-1} e
        // y^T = e^T Upsilon P^{-1}  <=>  P^T y = Upsilon e
        let ups_e = DVector::from_fn(layers, |i, _| radii[i].powi(2 * n as i32));
        let y = assemble_p_2d(structure, eta, n)?
            .transpose()
            .lu()
            .solve(&ups_e)
            .ok_or_else(|| CgptError::Singular("transposed interaction-matrix solve".into()))?;
        let pref = 2.0 * std::f64::consts::PI * n as f64;
        for k in 0..layers {
            entries[(row, k)] = sign * pref / (eta[k] * eta[k]) * y[k] * x[k];
        }
    }
    Ok(Jacobian { orders: orders.to_vec(), entries, method: JacobianMethod::MatrixAnalytic })
}

/// Central finite differences of the transfer route, falling back to
/// one-sided differences where `eta_k +- step` would leave the box.
pub fn jacobian_fd(
    structure: &LayerStructure,
    eta: &ContrastVector,
    orders: &[usize],
    step: f64,
) -> Result<Jacobian> {
    check(structure, eta, orders)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(CgptError::InvalidInput("step must be positive".into()));
    }
    let layers = structure.n_layers();
    let mut entries = DMatrix::zeros(orders.len(), layers);
    for k in 0..layers {
        let e0 = eta[k];
        let hi = (e0 + step).min(1.0);
        let lo = (e0 - step).max(-1.0);
        let mut up = eta.as_slice().to_vec();
        let mut dn = eta.as_slice().to_vec();
        up[k] = hi;
        dn[k] = lo;
        let up = ContrastVector::new(up)?;
        let dn = ContrastVector::new(dn)?;
        for (row, &n) in orders.iter().enumerate() {
            let f_up = cgpt(structure, &up, n)?;
            let f_dn = cgpt(structure, &dn, n)?;
            entries[(row, k)] = (f_up - f_dn) / (hi - lo);
        }
    }
    Ok(Jacobian { orders: orders.to_vec(), entries, method: JacobianMethod::FiniteDifference })
}
