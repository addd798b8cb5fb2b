//! Residual systems driven by the design iterations.
//!
//! The raw scaled tensor residual `M_n / scale_n` conditions catastrophically
//! for thin-coating designs: its Jacobian carries a Vandermonde factor in the
//! squared radii, and its denominator entries pass near zero exactly where
//! the interesting designs live. Both effects are removed up front:
//!
//! * the iteration residual is the transfer *numerator* per mode, with the
//!   zero-contrast Jacobian (a Vandermonde moment matrix) solved out through
//!   the Bjorck-Pereyra recurrences, or
//! * on geometrically spaced 2-d structures, the exactly equivalent subset
//!   aggregate mismatch `xi(eta) - xi*`, evaluated by the peeling recursion.
//!
//! Either way the residual has contrast-like units, vanishes exactly at the
//! designs, and stays evaluable on the whole closed box. The scaled tensor
//! values are still computed at every iterate for reporting and for the
//! published convergence criterion.

use nalgebra::{DMatrix, DVector};

use crate::error::{CgptError, Result};
use crate::proportional::{xi_targets, xi_with_jacobian};
use crate::structure::{eta_core_for_sigma, eta_core_for_sigma_grad, Dimension, LayerStructure};
use crate::tensor::{mode_transfer, scale_factor};
use crate::vandermonde::solve_moments;

/// How the innermost contrast is pinned during a design solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedCore {
    /// Fix `eta_{N+1}` itself.
    Eta(f64),
    /// Fix the core conductivity (relative to the background); the core
    /// contrast is recomputed from the coating contrasts at every iterate.
    Sigma(f64),
}

enum Preconditioner {
    /// Vandermonde moment solve of the transfer numerator.
    Moments { nodes: Vec<f64>, col_div: Vec<f64> },
    /// Aggregate mismatch on a proportional 2-d structure.
    Aggregates { gamma: f64, base_targets: Vec<f64> },
}

pub(crate) struct DesignSystem<'a> {
    pub structure: &'a LayerStructure,
    pub core: FixedCore,
    pub n_unknowns: usize,
    modes: Vec<usize>,
    scales: Vec<f64>,
    precond: Preconditioner,
}

pub(crate) struct SystemEval {
    /// Preconditioned residual (contrast-like units).
    pub g: DVector<f64>,
    /// Jacobian of `g` with respect to the coating contrasts.
    pub jac: DMatrix<f64>,
    /// Scaled tensor residuals `M_n / scale_n`.
    pub m_scaled: DVector<f64>,
    /// Some transfer denominator was below the resonance floor, so
    /// `m_scaled` is rounding-limited there.
    pub resonant: bool,
}

impl SystemEval {
    pub fn g_norm(&self) -> f64 {
        self.g.amax()
    }
    pub fn m_norm(&self) -> f64 {
        self.m_scaled.amax()
    }
    pub fn merit(&self) -> f64 {
        0.5 * self.g.norm_squared()
    }
}

impl<'a> DesignSystem<'a> {
    pub fn new(structure: &'a LayerStructure, core: FixedCore) -> Result<Self> {
        let n = structure.n_coatings();
        if n == 0 {
            return Err(CgptError::InvalidInput(
                "design needs at least one coating to adjust".into(),
            ));
        }
        let modes: Vec<usize> = (1..=n).collect();
        let scales: Vec<f64> = modes.iter().map(|&m| scale_factor(structure, m)).collect();
        let precond = match (structure.dimension(), structure.proportional_ratio()) {
            (Dimension::Two, Some(gamma)) => Preconditioner::Aggregates {
                gamma,
                base_targets: xi_targets(gamma, n, 1.0),
            },
            _ => {
                let radii = structure.radii();
                let nodes: Vec<f64> = radii[..n].iter().map(|r| r * r).collect();
                let col_div: Vec<f64> = match structure.dimension() {
                    Dimension::Two => radii[..n].iter().map(|r| r * r).collect(),
                    Dimension::Three => radii[..n].iter().map(|r| r * r * r).collect(),
                };
                Preconditioner::Moments { nodes, col_div }
            }
        };
        Ok(Self { structure, core, n_unknowns: n, modes, scales, precond })
    }

    /// Core contrast and its gradient with respect to the coating contrasts.
    pub fn core_eta(&self, eta_prime: &[f64]) -> Result<(f64, Option<Vec<f64>>)> {
        match self.core {
            FixedCore::Eta(c) => Ok((c, None)),
            FixedCore::Sigma(t) => {
                let sigma0 = self.structure.sigma_background();
                let c = eta_core_for_sigma(eta_prime, t * sigma0, sigma0)?;
                Ok((c, Some(eta_core_for_sigma_grad(eta_prime, t * sigma0, sigma0))))
            }
        }
    }

    pub fn eval(&self, eta_prime: &[f64]) -> Result<SystemEval> {
        let n = self.n_unknowns;
        debug_assert_eq!(eta_prime.len(), n);
        let (core, core_grad) = self.core_eta(eta_prime)?;
        let mut full = eta_prime.to_vec();
        full.push(core);

        // transfer entries and their derivatives for every mode
        let mut t21 = DVector::zeros(n);
        let mut m_scaled = DVector::zeros(n);
        let mut d21 = DMatrix::zeros(n, n); // reduced to the coating unknowns
        let mut resonant = false;
        for (row, &mode) in self.modes.iter().enumerate() {
            let mt = mode_transfer(self.structure, &full, mode, true);
            if mt.check_resonance().is_err() {
                resonant = true;
            }
            t21[row] = mt.t21;
            m_scaled[row] = crate::tensor::cgpt_prefactor(self.structure.dimension(), mode)
                * mt.t21
                / (mt.t22 * self.scales[row]);
            for k in 0..n {
                let mut d = mt.d21[k];
                if let Some(g) = &core_grad {
                    d += mt.d21[n] * g[k];
                }
                d21[(row, k)] = d;
            }
        }

        let (g, jac) = match &self.precond {
            Preconditioner::Moments { nodes, col_div } => {
                let row_scale: Vec<f64> = match self.structure.dimension() {
                    Dimension::Two => vec![1.0; n],
                    Dimension::Three => self
                        .modes
                        .iter()
                        .map(|&m| (2.0 * m as f64 + 1.0) / (2.0 * m as f64))
                        .collect(),
                };
                let apply = |v: &[f64]| -> Result<Vec<f64>> {
                    let scaled: Vec<f64> =
                        v.iter().zip(&row_scale).map(|(x, s)| x * s).collect();
                    let w = solve_moments(nodes, &scaled)?;
                    Ok(w.iter().zip(col_div).map(|(w, d)| w / d).collect())
                };
                let g = DVector::from_vec(apply(t21.as_slice())?);
                let mut jac = DMatrix::zeros(n, n);
                for k in 0..n {
                    let col: Vec<f64> = (0..n).map(|row| d21[(row, k)]).collect();
                    let pc = apply(&col)?;
                    for row in 0..n {
                        jac[(row, k)] = pc[row];
                    }
                }
                (g, jac)
            }
            Preconditioner::Aggregates { base_targets, .. } => {
                let (xi, dxi) = xi_with_jacobian(&full);
                let mut g = DVector::zeros(n);
                let mut jac = DMatrix::zeros(n, n);
                for row in 0..n {
                    g[row] = xi[row + 1] - core * base_targets[row];
                    for k in 0..n {
                        let mut d = dxi[row + 1][k];
                        if let Some(grad) = &core_grad {
                            // both the aggregates and the targets move with the core
                            d += (dxi[row + 1][n] - base_targets[row]) * grad[k];
                        }
                        jac[(row, k)] = d;
                    }
                }
                (g, jac)
            }
        };

        Ok(SystemEval { g, jac, m_scaled, resonant })
    }

    /// Scaled tensor residuals only (no derivatives).
    pub fn m_residuals(&self, eta_prime: &[f64]) -> Result<DVector<f64>> {
        let (core, _) = self.core_eta(eta_prime)?;
        let mut full = eta_prime.to_vec();
        full.push(core);
        let mut m = DVector::zeros(self.n_unknowns);
        for (row, &mode) in self.modes.iter().enumerate() {
            let mt = mode_transfer(self.structure, &full, mode, false);
            m[row] = crate::tensor::cgpt_prefactor(self.structure.dimension(), mode) * mt.t21
                / (mt.t22 * self.scales[row]);
        }
        Ok(m)
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }
}
