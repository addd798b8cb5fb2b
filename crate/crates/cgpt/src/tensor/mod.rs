//! CGPT evaluation through four independent routes.
//!
//! * [`transfer`] — ordered 2x2 product; O(N) per mode, defined on the whole
//!   closed contrast box. Production route.
//! * [`poly`] — subset-sum polynomials (2-d only); exponential, test oracle.
//! * [`matrix`] — dense interaction-matrix formula; undefined at zero
//!   contrast, cross-check away from it.
//! * [`direct`] — full transmission solve; the ground-truth oracle.

mod direct;
mod matrix;
mod poly;
mod transfer;

pub use direct::{
    cgpt_direct, cgpt_from_coefficients, direct_solve, direct_solve_2d, direct_solve_3d,
    FieldCoefficients,
};
pub use matrix::{
    assemble_p_2d, assemble_p_3d, calibrated_sign_2d, calibrated_sign_3d, cgpt_2d_matrix,
    cgpt_3d_matrix,
};
pub use poly::{cgpt_2d_polynomial, t21_t22_polynomial, MAX_ENUMERATED_LAYERS};
pub use transfer::{cgpt, cgpt_2d_transfer, cgpt_3d_transfer};

pub(crate) use transfer::{cgpt_prefactor, mode_transfer};

use serde::Serialize;

use crate::error::Result;
use crate::structure::{ContrastVector, Dimension, LayerStructure};

/// Which formula produced a tensor value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Transfer,
    Polynomial,
    Matrix,
    Direct,
}

/// Evaluated CGPTs for a list of mode orders.
#[derive(Debug, Clone, Serialize)]
pub struct CgptVector {
    pub orders: Vec<usize>,
    pub values: Vec<f64>,
    pub route: Route,
}

/// Conversion factor between `b_0` and the tensor, `M_n = pref * b_0`:
/// `-2 pi n` in two dimensions, `2n + 1` in three.
pub(crate) fn cgpt_prefactor_b0(dim: Dimension, n: usize) -> f64 {
    match dim {
        Dimension::Two => -2.0 * std::f64::consts::PI * n as f64,
        Dimension::Three => 2.0 * n as f64 + 1.0,
    }
}

/// Natural magnitude of mode `n` for relative comparisons:
/// `2 pi n r_1^{2n}` (2-d) or `(2n+1) r_1^{2n+1}` (3-d).
pub fn scale_factor(structure: &LayerStructure, n: usize) -> f64 {
    let r1 = structure.outer_radius();
    match structure.dimension() {
        Dimension::Two => 2.0 * std::f64::consts::PI * n as f64 * r1.powi(2 * n as i32),
        Dimension::Three => (2.0 * n as f64 + 1.0) * r1.powi(2 * n as i32 + 1),
    }
}

/// Evaluate `M_n` for every order in `orders` through the chosen route.
pub fn evaluate(
    structure: &LayerStructure,
    eta: &ContrastVector,
    orders: &[usize],
    route: Route,
) -> Result<CgptVector> {
    let mut values = Vec::with_capacity(orders.len());
    for &n in orders {
        let v = match (route, structure.dimension()) {
            (Route::Transfer, _) => cgpt(structure, eta, n)?,
            (Route::Polynomial, _) => cgpt_2d_polynomial(structure, eta, n)?,
            (Route::Matrix, Dimension::Two) => cgpt_2d_matrix(structure, eta, n)?,
            (Route::Matrix, Dimension::Three) => cgpt_3d_matrix(structure, eta, n)?,
            (Route::Direct, _) => cgpt_direct(structure, eta, n)?,
        };
        values.push(v);
    }
    Ok(CgptVector { orders: orders.to_vec(), values, route })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluate_collects_all_orders() {
        let s = LayerStructure::disk(vec![1.5, 1.0]).unwrap();
        let e = ContrastVector::new(vec![0.4, -0.3]).unwrap();
        let v = evaluate(&s, &e, &[1, 2, 3], Route::Transfer).unwrap();
        assert_eq!(v.orders, vec![1, 2, 3]);
        assert_eq!(v.values.len(), 3);
        assert!(v.values.iter().all(|x| x.is_finite()));
        let d = evaluate(&s, &e, &[1, 2, 3], Route::Direct).unwrap();
        for (a, b) in v.values.iter().zip(&d.values) {
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn degeneracy_zero_contrast_equals_deleted_layer() {
        let s_full = LayerStructure::disk(vec![2.0, 1.5, 1.0]).unwrap();
        let e_full = ContrastVector::new(vec![0.4, 0.0, -0.6]).unwrap();
        let s_red = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let e_red = ContrastVector::new(vec![0.4, -0.6]).unwrap();
        for n in 1..=6 {
            let a = cgpt(&s_full, &e_full, n).unwrap();
            let b = cgpt(&s_red, &e_red, n).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn scale_factors() {
        let s2 = LayerStructure::disk(vec![2.0]).unwrap();
        assert_relative_eq!(scale_factor(&s2, 3), 6.0 * std::f64::consts::PI * 2.0f64.powi(6));
        let s3 = LayerStructure::ball(vec![2.0]).unwrap();
        assert_relative_eq!(scale_factor(&s3, 2), 5.0 * 2.0f64.powi(5));
    }
}
