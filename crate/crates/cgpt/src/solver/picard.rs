//! Fixed-point (Picard) solvers for the two perturbative regimes: small
//! total contrast, and a core much smaller than its coatings. Both split the
//! vanishing conditions into a Vandermonde moment system plus a quadratic
//! remainder and iterate `eta <- V^{-1}(f - W(eta))`, here with a relaxation
//! factor since the plain iteration need not contract at practical sizes.

use nalgebra::DVector;

use crate::error::{CgptError, Result};
use crate::solver::residual::{DesignSystem, FixedCore};
use crate::solver::{finish_report, IterationRecord, SolverConfig, StepKind, Termination};
use crate::structure::{ContrastVector, Dimension, LayerStructure};
use crate::tensor::mode_transfer;
use crate::vandermonde::{solve_moments, solve_moments_pow1};
use crate::SolveReport;

/// Quadratic remainder per mode: `w_n = t21/t22 - sum_j eta_j r_j^{2n}`.
fn remainder(structure: &LayerStructure, eta: &[f64], n: usize) -> f64 {
    let mt = mode_transfer(structure, eta, n, false);
    let linear: f64 = eta
        .iter()
        .zip(structure.radii())
        .map(|(e, r)| e * r.powi(2 * n as i32))
        .sum();
    mt.t21 / mt.t22 - linear
}

fn check_2d(structure: &LayerStructure) -> Result<()> {
    if structure.dimension() != Dimension::Two {
        return Err(CgptError::Unsupported(
            "the fixed-point design solvers are stated for 2-d structures".into(),
        ));
    }
    Ok(())
}

/// Empirical bound on the size of `w_n` relative to `|eta|^2`, measured by
/// shrinking a reference contrast vector toward zero. Returns the largest
/// observed ratio `|w_n| / |eta|^2`.
pub fn remainder_quadratic_bound(structure: &LayerStructure, eta: &ContrastVector, n: usize) -> Result<f64> {
    check_2d(structure)?;
    let base = eta.as_slice();
    let mut worst: f64 = 0.0;
    for scale in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let scaled: Vec<f64> = base.iter().map(|e| e * scale).collect();
        let norm2: f64 = scaled.iter().map(|e| e * e).sum::<f64>();
        if norm2 == 0.0 {
            continue;
        }
        worst = worst.max(remainder(structure, &scaled, n).abs() / norm2);
    }
    Ok(worst)
}

/// Design with a prescribed total contrast `sum_j eta_j = f0`: all `N + 1`
/// contrasts are unknowns of the moment system (powers `0..N`).
pub fn picard_small_contrast(
    structure: &LayerStructure,
    f0: f64,
    config: &SolverConfig,
) -> Result<SolveReport> {
    check_2d(structure)?;
    let layers = structure.n_layers();
    let n = structure.n_coatings();
    let nodes: Vec<f64> = structure.radii().iter().map(|r| r * r).collect();
    let theta = config.picard_damping;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(CgptError::InvalidInput("relaxation factor must lie in (0, 1]".into()));
    }

    let mut eta = vec![0.0; layers];
    let mut log = Vec::new();
    let mut prev_update = f64::INFINITY;
    let mut growth = 0usize;
    let mut termination = Termination::MaxIterations;
    for it in 0..config.max_iters {
        let mut rhs = vec![0.0; layers];
        rhs[0] = f0;
        for mode in 1..=n {
            rhs[mode] = -remainder(structure, &eta, mode);
        }
        let target = solve_moments(&nodes, &rhs)?;
        let mut update: f64 = 0.0;
        for k in 0..layers {
            let step = theta * (target[k] - eta[k]);
            update = update.max(step.abs());
            eta[k] += step;
        }
        log.push(IterationRecord {
            iter: it,
            phase: 0,
            kind: StepKind::Picard,
            step_len: update,
            lambda: None,
            merit: 0.5 * update * update,
            residual_norm: f64::NAN,
            precond_norm: update,
        });
        if update <= config.tol_residual {
            termination = Termination::Converged;
            break;
        }
        if update > prev_update {
            growth += 1;
            if growth >= 5 {
                termination = Termination::Diverged;
                break;
            }
        } else {
            growth = 0;
        }
        prev_update = update;
    }

    let core = *eta.last().unwrap();
    let system = DesignSystem::new(structure, FixedCore::Eta(core))?;
    finish_report(
        structure,
        &system,
        DVector::from_vec(eta[..n].to_vec()),
        log,
        matches!(termination, Termination::Converged),
        termination,
        0,
        config,
    )
}

/// Design with a fixed core contrast on a structure whose core is small
/// relative to its coatings: the `N` coating contrasts solve the moment
/// system with powers `1..N`.
pub fn picard_small_core(
    structure: &LayerStructure,
    core_eta: f64,
    config: &SolverConfig,
) -> Result<SolveReport> {
    check_2d(structure)?;
    if core_eta.abs() > 1.0 {
        return Err(CgptError::InvalidInput("core contrast outside [-1, 1]".into()));
    }
    let n = structure.n_coatings();
    if n == 0 {
        return Err(CgptError::InvalidInput("need at least one coating".into()));
    }
    let radii = structure.radii();
    let nodes: Vec<f64> = radii[..n].iter().map(|r| r * r).collect();
    let r_core = structure.core_radius();
    let theta = config.picard_damping;

    let mut eta_prime = vec![0.0; n];
    let mut log = Vec::new();
    let mut prev_update = f64::INFINITY;
    let mut growth = 0usize;
    let mut termination = Termination::MaxIterations;
    for it in 0..config.max_iters {
        let mut full = eta_prime.clone();
        full.push(core_eta);
        let rhs: Vec<f64> = (1..=n)
            .map(|mode| {
                -core_eta * r_core.powi(2 * mode as i32) - remainder(structure, &full, mode)
            })
            .collect();
        let target = solve_moments_pow1(&nodes, &rhs)?;
        let mut update: f64 = 0.0;
        for k in 0..n {
            let step = theta * (target[k] - eta_prime[k]);
            update = update.max(step.abs());
            eta_prime[k] += step;
        }
        log.push(IterationRecord {
            iter: it,
            phase: 0,
            kind: StepKind::Picard,
            step_len: update,
            lambda: None,
            merit: 0.5 * update * update,
            residual_norm: f64::NAN,
            precond_norm: update,
        });
        if update <= config.tol_residual {
            termination = Termination::Converged;
            break;
        }
        if update > prev_update {
            growth += 1;
            if growth >= 5 {
                termination = Termination::Diverged;
                break;
            }
        } else {
            growth = 0;
        }
        prev_update = update;
    }

    let system = DesignSystem::new(structure, FixedCore::Eta(core_eta))?;
    finish_report(
        structure,
        &system,
        DVector::from_vec(eta_prime),
        log,
        matches!(termination, Termination::Converged),
        termination,
        0,
        config,
    )
}
