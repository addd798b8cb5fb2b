//! Transfer-matrix evaluation of CGPTs.
//!
//! Crossing interface `k` from region `k-1` to region `k` multiplies the
//! per-layer coefficient pair by a 2x2 factor depending only on `eta_k`,
//! `r_k` and the mode. With the regularity conditions `a_0 = 1`,
//! `b_{N+1} = 0`, the exterior decay coefficient is read off the ordered
//! product `Q = T_{N+1} * ... * T_1` as `b_0 = -Q21 / Q22`. This is the O(N)
//! production route, well defined on the whole closed contrast box.

use crate::error::{CgptError, Result};
use crate::structure::{ContrastVector, Dimension, LayerStructure};

pub(crate) const RESONANCE_RELATIVE: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    #[inline]
    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Interface factor for one mode; `abs` replaces every entry magnitude to
/// track the worst-case size of the accumulated t22 terms.
#[inline]
fn factor(dim: Dimension, eta: f64, r: f64, n: usize) -> Mat2 {
    let n_i = n as i32;
    match dim {
        Dimension::Two => Mat2([
            [1.0, eta * r.powi(-2 * n_i)],
            [eta * r.powi(2 * n_i), 1.0],
        ]),
        Dimension::Three => {
            let w = 2.0 * n as f64 + 1.0;
            Mat2([
                [1.0 + eta / w, 2.0 * (n as f64 + 1.0) * eta * r.powi(-2 * n_i - 1) / w],
                [2.0 * n as f64 * eta * r.powi(2 * n_i + 1) / w, 1.0 - eta / w],
            ])
        }
    }
}

#[inline]
fn factor_deriv(dim: Dimension, r: f64, n: usize) -> Mat2 {
    let n_i = n as i32;
    match dim {
        Dimension::Two => Mat2([[0.0, r.powi(-2 * n_i)], [r.powi(2 * n_i), 0.0]]),
        Dimension::Three => {
            let w = 2.0 * n as f64 + 1.0;
            Mat2([
                [1.0 / w, 2.0 * (n as f64 + 1.0) * r.powi(-2 * n_i - 1) / w],
                [2.0 * n as f64 * r.powi(2 * n_i + 1) / w, -1.0 / w],
            ])
        }
    }
}

fn abs_mat(m: &Mat2) -> Mat2 {
    Mat2([
        [m.0[0][0].abs(), m.0[0][1].abs()],
        [m.0[1][0].abs(), m.0[1][1].abs()],
    ])
}

/// Entries of the ordered transfer product for one mode, optionally with
/// per-contrast derivatives.
#[derive(Debug, Clone)]
pub(crate) struct ModeTransfer {
    pub t21: f64,
    pub t22: f64,
    /// t22 of the absolute-value product; bounds the term magnitudes that
    /// were summed into t22, for the near-resonance check.
    pub t22_abs: f64,
    pub d21: Vec<f64>,
    pub d22: Vec<f64>,
}

impl ModeTransfer {
    pub fn check_resonance(&self) -> Result<()> {
        let threshold = RESONANCE_RELATIVE * self.t22_abs;
        if self.t22.abs() <= threshold {
            return Err(CgptError::NearResonance { t22: self.t22, threshold });
        }
        Ok(())
    }
}

pub(crate) fn mode_transfer(
    structure: &LayerStructure,
    eta: &[f64],
    n: usize,
    with_derivatives: bool,
) -> ModeTransfer {
    let dim = structure.dimension();
    let radii = structure.radii();
    let layers = radii.len();
    debug_assert_eq!(eta.len(), layers);

    let factors: Vec<Mat2> = (0..layers).map(|k| factor(dim, eta[k], radii[k], n)).collect();

    // Q = T_{L} ... T_1 and the absolute-value companion product
    let mut q = Mat2::IDENTITY;
    let mut q_abs = Mat2::IDENTITY;
    for f in &factors {
        q = f.mul(&q);
        q_abs = abs_mat(f).mul(&q_abs);
    }

    let (mut d21, mut d22) = (Vec::new(), Vec::new());
    if with_derivatives {
        // prefix[k] = T_k ... T_1, suffix[k] = T_L ... T_{k+1}
        let mut prefix = Vec::with_capacity(layers + 1);
        prefix.push(Mat2::IDENTITY);
        for f in &factors {
            let last = *prefix.last().unwrap();
            prefix.push(f.mul(&last));
        }
        let mut suffix = vec![Mat2::IDENTITY; layers + 1];
        for k in (0..layers).rev() {
            suffix[k] = suffix[k + 1].mul(&factors[k]);
        }
        d21.reserve(layers);
        d22.reserve(layers);
        for k in 0..layers {
            let d = factor_deriv(dim, radii[k], n);
            let dq = suffix[k + 1].mul(&d).mul(&prefix[k]);
            d21.push(dq.0[1][0]);
            d22.push(dq.0[1][1]);
        }
    }

    ModeTransfer { t21: q.0[1][0], t22: q.0[1][1], t22_abs: q_abs.0[1][1], d21, d22 }
}

/// CGPT prefactor turning the transfer ratio into the tensor value:
/// `M_n = pref * t21 / t22`.
pub(crate) fn cgpt_prefactor(dim: Dimension, n: usize) -> f64 {
    match dim {
        Dimension::Two => 2.0 * std::f64::consts::PI * n as f64,
        Dimension::Three => -(2.0 * n as f64 + 1.0),
    }
}

fn check_mode_inputs(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<()> {
    if n == 0 {
        return Err(CgptError::InvalidInput("mode order must be at least 1".into()));
    }
    if eta.len() != structure.n_layers() {
        return Err(CgptError::InvalidInput(format!(
            "contrast count {} does not match {} interfaces",
            eta.len(),
            structure.n_layers()
        )));
    }
    Ok(())
}

/// CGPT of the structure at mode `n` through the transfer product,
/// dispatching on the structure's dimension.
pub fn cgpt(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    check_mode_inputs(structure, eta, n)?;
    let mt = mode_transfer(structure, eta.as_slice(), n, false);
    mt.check_resonance()?;
    Ok(cgpt_prefactor(structure.dimension(), n) * mt.t21 / mt.t22)
}

/// Two-dimensional transfer route `M_n = 2 pi n t21 / t22`.
pub fn cgpt_2d_transfer(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    if structure.dimension() != Dimension::Two {
        return Err(CgptError::Unsupported("cgpt_2d_transfer needs a 2-d structure".into()));
    }
    cgpt(structure, eta, n)
}

/// Three-dimensional transfer route `M~_n = -(2n+1) t21 / t22`.
pub fn cgpt_3d_transfer(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    if structure.dimension() != Dimension::Three {
        return Err(CgptError::Unsupported("cgpt_3d_transfer needs a 3-d structure".into()));
    }
    cgpt(structure, eta, n)
}
