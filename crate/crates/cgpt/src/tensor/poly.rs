//! Subset-sum (polynomial) representation of the two-dimensional CGPTs.
//!
//! Expanding the ordered transfer product writes the ratio entries as
//! multilinear polynomials over index subsets: odd-size subsets feed the
//! numerator, even-size subsets the denominator, each index carrying radius
//! powers that alternate in sign along the sorted subset. Exponential in the
//! layer count, so this route is capped and used as an independent check of
//! the transfer product.

use crate::error::{CgptError, Result};
use crate::structure::{ContrastVector, Dimension, LayerStructure};
use crate::tensor::transfer::RESONANCE_RELATIVE;

/// Hard cap on the layer count (2^L subsets are enumerated).
pub const MAX_ENUMERATED_LAYERS: usize = 20;

/// Numerator and denominator polynomials `(t21, t22)` by direct subset
/// enumeration; exactly the entries of the ordered transfer product.
pub fn t21_t22_polynomial(structure: &LayerStructure, eta: &ContrastVector) -> Result<PolyParts> {
    if structure.dimension() != Dimension::Two {
        return Err(CgptError::Unsupported(
            "subset enumeration is only defined for 2-d structures".into(),
        ));
    }
    let layers = structure.n_layers();
    if eta.len() != layers {
        return Err(CgptError::InvalidInput(format!(
            "contrast count {} does not match {} interfaces",
            eta.len(),
            layers
        )));
    }
    if layers > MAX_ENUMERATED_LAYERS {
        return Err(CgptError::EnumerationCap { layers, max: MAX_ENUMERATED_LAYERS });
    }
    Ok(PolyParts { layers })
}

/// Lazy per-mode evaluation handle (the subset walk depends on the mode).
pub struct PolyParts {
    layers: usize,
}

impl PolyParts {
    pub fn eval(&self, structure: &LayerStructure, eta: &ContrastVector, n: usize) -> PolyValue {
        let radii = structure.radii();
        let n_i = n as i32;
        let mut t21 = 0.0;
        let mut t22 = 1.0;
        let mut t22_abs = 1.0;
        for mask in 1u32..(1u32 << self.layers) {
            let odd = mask.count_ones() % 2 == 1;
            let mut term = 1.0;
            let mut pos = 0usize; // position within the sorted subset, 0-based
            for k in 0..self.layers {
                if mask >> k & 1 == 1 {
                    // numerator terms open with +2n on the smallest index,
                    // denominator terms with -2n
                    let sign_up = if odd { pos % 2 == 0 } else { pos % 2 == 1 };
                    let e = if sign_up { 2 * n_i } else { -2 * n_i };
                    term *= eta[k] * radii[k].powi(e);
                    pos += 1;
                }
            }
            if odd {
                t21 += term;
            } else {
                t22 += term;
                t22_abs += term.abs();
            }
        }
        PolyValue { t21, t22, t22_abs }
    }
}

pub struct PolyValue {
    pub t21: f64,
    pub t22: f64,
    pub t22_abs: f64,
}

/// Two-dimensional CGPT via subset enumeration, `M_n = 2 pi n t21 / t22`.
pub fn cgpt_2d_polynomial(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(CgptError::InvalidInput("mode order must be at least 1".into()));
    }
    let parts = t21_t22_polynomial(structure, eta)?;
    let v = parts.eval(structure, eta, n);
    let threshold = RESONANCE_RELATIVE * v.t22_abs;
    if v.t22.abs() <= threshold {
        return Err(CgptError::NearResonance { t22: v.t22, threshold });
    }
    Ok(2.0 * std::f64::consts::PI * n as f64 * v.t21 / v.t22)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::LayerStructure;
    use crate::tensor::transfer::cgpt_2d_transfer;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn worked_two_layer_parts() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let e = ContrastVector::new(vec![0.5, -0.5]).unwrap();
        let v = t21_t22_polynomial(&s, &e).unwrap().eval(&s, &e, 1);
        assert_relative_eq!(v.t21, 1.5);
        assert_relative_eq!(v.t22, 0.9375);
        assert_relative_eq!(cgpt_2d_polynomial(&s, &e, 1).unwrap(), 2.0 * PI * 1.6);
    }

    #[test]
    fn zero_contrast() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let e = ContrastVector::zeros(2);
        let v = t21_t22_polynomial(&s, &e).unwrap().eval(&s, &e, 2);
        assert_eq!(v.t21, 0.0);
        assert_eq!(v.t22, 1.0);
    }

    #[test]
    fn odd_even_parity_under_negation() {
        let s = LayerStructure::disk(vec![2.0, 1.4, 1.0]).unwrap();
        let e = ContrastVector::new(vec![0.3, -0.7, 0.5]).unwrap();
        let neg = ContrastVector::new(e.as_slice().iter().map(|v| -v).collect()).unwrap();
        for n in 1..=4 {
            let a = t21_t22_polynomial(&s, &e).unwrap().eval(&s, &e, n);
            let b = t21_t22_polynomial(&s, &neg).unwrap().eval(&s, &neg, n);
            assert_relative_eq!(a.t21, -b.t21, max_relative = 1e-15);
            assert_relative_eq!(a.t22, b.t22, max_relative = 1e-15);
        }
    }

    #[test]
    fn agrees_with_transfer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let layers = rng.random_range(1..=10);
            let mut radii: Vec<f64> = (0..layers).map(|_| rng.random_range(0.5..2.5)).collect();
            radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (i, r) in radii.iter_mut().enumerate() {
                *r += (layers - i) as f64 * 1e-3; // enforce strict spacing
            }
            let s = LayerStructure::disk(radii).unwrap();
            let eta = ContrastVector::new(
                (0..layers)
                    .map(|_| {
                        let m: f64 = rng.random_range(0.05..0.95);
                        if rng.random_bool(0.5) { m } else { -m }
                    })
                    .collect(),
            )
            .unwrap();
            let n = rng.random_range(1..=10);
            let scale = 2.0 * PI * n as f64 * s.outer_radius().powi(2 * n as i32);
            let a = cgpt_2d_transfer(&s, &eta, n).unwrap();
            let b = cgpt_2d_polynomial(&s, &eta, n).unwrap();
            assert!((a - b).abs() <= 1e-12 * scale, "transfer {a} vs polynomial {b}");
        }
    }

    #[test]
    fn enumeration_cap() {
        let radii: Vec<f64> = (0..21).map(|i| 30.0 - i as f64).collect();
        let s = LayerStructure::disk(radii).unwrap();
        let e = ContrastVector::zeros(21);
        assert!(matches!(
            cgpt_2d_polynomial(&s, &e, 1),
            Err(CgptError::EnumerationCap { .. })
        ));
    }
}
