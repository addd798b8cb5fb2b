//! Design solvers: find coating contrasts that zero out the leading CGPTs
//! for a fixed core.
//!
//! `solve_vanishing` drives the preconditioned residual of
//! [`residual::DesignSystem`] with a damped Gauss-Newton engine (projection
//! onto the contrast box, backtracking, gradient fallback, seeded restarts).
//! `continuation_solve` wraps it in the core-contrast homotopy used for
//! near-resonant thin-coating designs, and [`picard_small_contrast`] /
//! [`picard_small_core`] are the perturbative fixed-point alternatives.
//!
//! Every reported success is re-verified against the direct transmission
//! solve, not the route the iteration used.

mod engine;
mod picard;
mod residual;

pub use picard::{picard_small_contrast, picard_small_core, remainder_quadratic_bound};
pub use residual::FixedCore;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CgptError, Result};
use crate::jacobian::jacobian_transfer;
use crate::proportional::extreme_asymptotic;
use crate::structure::{sigma_from_eta, ContrastVector, LayerStructure};
use crate::tensor::{cgpt_direct, scale_factor};
use residual::DesignSystem;

/// Starting point for the iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitGuess {
    /// Zero coating contrasts (the Jacobian there is a nonsingular moment
    /// matrix). Default.
    Zero,
    /// Alternating thin-coating preset; needs geometrically spaced radii.
    Asymptotic,
    /// Explicit coating contrasts.
    Given(Vec<f64>),
}

/// Tuning knobs of the design iteration.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Convergence tolerance on `max_n |M_n| / scale_n`.
    pub tol_residual: f64,
    /// Convergence tolerance on the preconditioned residual (contrast-like
    /// units); reachable even where the raw tensor values are
    /// rounding-limited by a near-resonant denominator.
    pub tol_precond: f64,
    pub max_iters: usize,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Number of homotopy stages used by [`continuation_solve`].
    pub continuation_steps: usize,
    pub init: InitGuess,
    /// Seed for the perturbation restarts (and anything else randomized).
    pub seed: u64,
    /// Maximum number of perturbation restarts after a stalled attempt.
    pub max_restarts: u32,
    /// Relaxation factor of the fixed-point solvers.
    pub picard_damping: f64,
    /// Acceptance threshold on the direct-solve residual of a reported root.
    pub root_check_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            tol_precond: 1e-10,
            max_iters: 200,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            continuation_steps: 10,
            init: InitGuess::Zero,
            seed: 0,
            max_restarts: 6,
            picard_damping: 0.5,
            root_check_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.tol_precond > 0.0) {
            return Err(CgptError::InvalidInput("tolerances must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(CgptError::InvalidInput("backtrack factor must lie in (0, 1)".into()));
        }
        if self.continuation_steps == 0 {
            return Err(CgptError::InvalidInput("need at least one continuation stage".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Damped,
    Newton,
    Gradient,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stagnation,
    LineSearchStall,
    Diverged,
}

/// One accepted iteration step.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Attempt index; the merit is monotone within one phase.
    pub phase: u32,
    pub kind: StepKind,
    pub step_len: f64,
    pub lambda: Option<f64>,
    pub merit: f64,
    pub residual_norm: f64,
    pub precond_norm: f64,
}

/// Continuation stage summary.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub core_eta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub precond_norm: f64,
}

/// Independent verification of a reported root.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    /// `max_n |M_direct - M_transfer| / scale_n` at the final point.
    pub max_route_delta: f64,
    /// `max_n |M_direct| / scale_n` at the final point.
    pub direct_residual: f64,
    pub verified: bool,
}

/// Full solve trajectory and outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// All `N + 1` contrasts, core last.
    pub final_eta: Vec<f64>,
    /// Conductivities `sigma_0 ... sigma_{N+1}`.
    pub final_sigma: Vec<f64>,
    /// Scaled tensor residuals `M_n / scale_n`, `n = 1..N`.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    pub precond_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    pub restarts: u32,
    pub iterations: Vec<IterationRecord>,
    pub stages: Vec<StageRecord>,
    pub cross_check: CrossCheck,
}

fn initial_point(structure: &LayerStructure, config: &SolverConfig) -> Result<DVector<f64>> {
    let n = structure.n_coatings();
    match &config.init {
        InitGuess::Zero => Ok(DVector::zeros(n)),
        InitGuess::Asymptotic => {
            let gamma = structure.proportional_ratio().ok_or_else(|| {
                CgptError::InvalidInput(
                    "the asymptotic preset needs geometrically spaced radii".into(),
                )
            })?;
            let mut v = DVector::from_vec(extreme_asymptotic(n, gamma - 1.0));
            engine::project(&mut v);
            Ok(v)
        }
        InitGuess::Given(values) => {
            if values.len() != n {
                return Err(CgptError::InvalidInput(format!(
                    "initial guess has {} entries; the structure has {} coatings",
                    values.len(),
                    n
                )));
            }
            let mut v = DVector::from_vec(values.clone());
            engine::project(&mut v);
            Ok(v)
        }
    }
}

/// Newton direction `p = -pinv(J) F` of the scaled tensor residual at the
/// given coating contrasts.
pub fn newton_direction(
    structure: &LayerStructure,
    eta_prime: &[f64],
    core: FixedCore,
) -> Result<DVector<f64>> {
    let (f, j) = scaled_residual_and_jacobian(structure, eta_prime, core)?;
    let svd = j.svd(true, true);
    let eps = svd.singular_values.max() * 1e-14;
    svd.solve(&(-f), eps)
        .map(|m| m.column(0).into_owned())
        .map_err(|e| CgptError::Singular(format!("pseudo-inverse solve: {e}")))
}

/// Steepest-descent direction `p = -J^T F` of the scaled merit.
pub fn gradient_direction(
    structure: &LayerStructure,
    eta_prime: &[f64],
    core: FixedCore,
) -> Result<DVector<f64>> {
    let (f, j) = scaled_residual_and_jacobian(structure, eta_prime, core)?;
    Ok(-(j.transpose() * f))
}

fn scaled_residual_and_jacobian(
    structure: &LayerStructure,
    eta_prime: &[f64],
    core: FixedCore,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let system = DesignSystem::new(structure, core)?;
    let n = system.n_unknowns;
    if eta_prime.len() != n {
        return Err(CgptError::InvalidInput(format!(
            "expected {n} coating contrasts, got {}",
            eta_prime.len()
        )));
    }
    let (core_eta, core_grad) = system.core_eta(eta_prime)?;
    let mut full = eta_prime.to_vec();
    full.push(core_eta);
    let cv = ContrastVector::new(full)?;
    let f = system.m_residuals(eta_prime)?;
    let jac_full = jacobian_transfer(structure, &cv, system.modes())?;
    let mut j = DMatrix::zeros(n, n);
    for (row, &mode) in system.modes().iter().enumerate() {
        let s = scale_factor(structure, mode);
        for k in 0..n {
            let mut d = jac_full.entries[(row, k)];
            if let Some(g) = &core_grad {
                d += jac_full.entries[(row, n)] * g[k];
            }
            j[(row, k)] = d / s;
        }
    }
    Ok((f, j))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_report(
    structure: &LayerStructure,
    system: &DesignSystem,
    eta_prime: DVector<f64>,
    iterations: Vec<IterationRecord>,
    converged: bool,
    termination: Termination,
    restarts: u32,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let (core_eta, _) = system.core_eta(eta_prime.as_slice())?;
    let mut full = eta_prime.as_slice().to_vec();
    full.push(core_eta);
    let cv = ContrastVector::new(full.clone())?;
    let sigma = sigma_from_eta(&cv, structure.sigma_background())?;

    let m = system.m_residuals(eta_prime.as_slice())?;
    let residual_norm = m.amax();
    let precond_norm = iterations
        .last()
        .map(|r| r.precond_norm)
        .unwrap_or(f64::NAN);

    // independent root verification through the direct transmission solve
    let mut max_route_delta: f64 = 0.0;
    let mut direct_residual: f64 = 0.0;
    for (row, &mode) in system.modes().iter().enumerate() {
        let s = scale_factor(structure, mode);
        let via_direct = cgpt_direct(structure, &cv, mode)? / s;
        direct_residual = direct_residual.max(via_direct.abs());
        max_route_delta = max_route_delta.max((via_direct - m[row]).abs());
    }
    let verified = direct_residual <= config.root_check_tol;

    Ok(SolveReport {
        final_eta: full,
        final_sigma: sigma,
        residuals: m.iter().copied().collect(),
        residual_norm,
        precond_norm,
        converged,
        termination,
        restarts,
        iterations,
        stages: Vec::new(),
        cross_check: CrossCheck { max_route_delta, direct_residual, verified },
    })
}

/// Solve the vanishing system `M_1 = ... = M_N = 0` for the coating
/// contrasts with the core pinned by `core`.
pub fn solve_vanishing(
    structure: &LayerStructure,
    core: FixedCore,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let system = DesignSystem::new(structure, core)?;
    let x0 = initial_point(structure, config)?;
    let mut log = Vec::new();
    let out = engine::solve_system(&system, x0, config, &mut log)?;
    let converged = matches!(out.termination, Termination::Converged);
    let mut report = finish_report(
        structure,
        &system,
        out.x,
        log,
        converged,
        out.termination,
        out.restarts,
        config,
    )?;
    report.precond_norm = out.eval.g_norm();
    Ok(report)
}

/// Homotopy over the core contrast: solve at `core = target * j / d` for
/// `j = 1..d`, warm-starting every stage from the previous solution. The
/// trivial stage `core = 0` is the (exact) starting point.
pub fn continuation_solve(
    structure: &LayerStructure,
    target_core_eta: f64,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    if !(-1.0..=0.0).contains(&target_core_eta) {
        return Err(CgptError::InvalidInput(
            "the continuation path is defined for core contrasts in [-1, 0]".into(),
        ));
    }
    let d = config.continuation_steps;
    let mut stages = Vec::with_capacity(d);
    let mut x = initial_point(structure, config)?;
    let mut log = Vec::new();
    let mut last: Option<(engine::EngineOutcome, DesignSystem)> = None;

    if target_core_eta == 0.0 {
        let system = DesignSystem::new(structure, FixedCore::Eta(0.0))?;
        let out = engine::solve_system(&system, x, config, &mut log)?;
        let converged = matches!(out.termination, Termination::Converged);
        stages.push(StageRecord {
            core_eta: 0.0,
            converged,
            iterations: out.iterations,
            residual_norm: out.eval.m_norm(),
            precond_norm: out.eval.g_norm(),
        });
        let mut report = finish_report(
            structure, &system, out.x, log, converged, out.termination, out.restarts, config,
        )?;
        report.stages = stages;
        return Ok(report);
    }

    for j in 1..=d {
        let core = target_core_eta * j as f64 / d as f64;
        let system = DesignSystem::new(structure, FixedCore::Eta(core))?;
        let out = engine::solve_system(&system, x.clone(), config, &mut log)?;
        let converged = matches!(out.termination, Termination::Converged);
        stages.push(StageRecord {
            core_eta: core,
            converged,
            iterations: out.iterations,
            residual_norm: out.eval.m_norm(),
            precond_norm: out.eval.g_norm(),
        });
        x = out.x.clone();
        if !converged && j < d {
            // a failed intermediate stage still warm-starts the next one,
            // but flag it so the caller sees where the path degraded
            last = Some((out, system));
            continue;
        }
        last = Some((out, system));
    }

    let (out, system) = last.expect("at least one continuation stage");
    let converged = matches!(out.termination, Termination::Converged);
    let mut report = finish_report(
        structure,
        &system,
        out.x,
        log,
        converged,
        out.termination,
        out.restarts,
        config,
    )?;
    report.precond_norm = out.eval.g_norm();
    report.stages = stages;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{equidistant_radii, proportional_radii};
    use approx::assert_relative_eq;

    #[test]
    fn single_coating_closed_form() {
        // insulating core: eta_1 = (r_2 / r_1)^2
        for (r1, r2) in [(2.0, 1.0), (1.5, 0.6)] {
            let s = LayerStructure::disk(vec![r1, r2]).unwrap();
            let rep = solve_vanishing(&s, FixedCore::Eta(-1.0), &SolverConfig::default()).unwrap();
            assert!(rep.converged);
            assert_relative_eq!(rep.final_eta[0], (r2 / r1) * (r2 / r1), max_relative = 1e-10);
            assert!(rep.cross_check.verified);
        }
    }

    #[test]
    fn newton_direction_vanishes_at_root() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let p = newton_direction(&s, &[0.25], FixedCore::Eta(-1.0)).unwrap();
        assert!(p.amax() < 1e-10);
        let g = gradient_direction(&s, &[0.25], FixedCore::Eta(-1.0)).unwrap();
        assert!(g.amax() < 1e-10);
    }

    #[test]
    fn scalar_newton_direction() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let eta = [0.1];
        let (f, j) = scaled_residual_and_jacobian(&s, &eta, FixedCore::Eta(-1.0)).unwrap();
        let p = newton_direction(&s, &eta, FixedCore::Eta(-1.0)).unwrap();
        assert_relative_eq!(p[0], -f[0] / j[(0, 0)], max_relative = 1e-12);
        // gradient points the same way for a scalar system
        let g = gradient_direction(&s, &eta, FixedCore::Eta(-1.0)).unwrap();
        assert_eq!(p[0].signum(), g[0].signum());
    }

    #[test]
    fn gradient_is_descent_direction() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 3).unwrap()).unwrap();
        let eta = [0.2, -0.3, 0.1];
        let g = gradient_direction(&s, &eta, FixedCore::Eta(-0.5)).unwrap();
        // directional derivative of the merit along g is -|g|^2
        let h = 1e-7;
        let merit = |x: &[f64]| -> f64 {
            let sys = DesignSystem::new(&s, FixedCore::Eta(-0.5)).unwrap();
            let m = sys.m_residuals(x).unwrap();
            0.5 * m.norm_squared()
        };
        let stepped: Vec<f64> = eta.iter().zip(g.iter()).map(|(e, d)| e + h * d).collect();
        let deriv = (merit(&stepped) - merit(&eta)) / h;
        assert_relative_eq!(deriv, -g.norm_squared(), max_relative = 1e-4);
    }

    #[test]
    fn equidistant_design_oscillates() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 8).unwrap()).unwrap();
        let rep = solve_vanishing(&s, FixedCore::Eta(-1.0), &SolverConfig::default()).unwrap();
        assert!(rep.converged, "termination {:?}", rep.termination);
        assert!(rep.residual_norm <= 1e-9);
        for w in rep.final_eta.windows(2) {
            assert!(w[0] * w[1] < 0.0, "contrast signs must alternate: {:?}", rep.final_eta);
        }
    }

    #[test]
    fn fixed_sigma_core_is_respected() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 4).unwrap()).unwrap();
        let rep = solve_vanishing(&s, FixedCore::Sigma(0.5), &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert_relative_eq!(*rep.final_sigma.last().unwrap(), 0.5, max_relative = 1e-10);
        assert!(rep.cross_check.verified);
    }

    #[test]
    fn continuation_trivial_target() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 3).unwrap()).unwrap();
        let rep = continuation_solve(&s, 0.0, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.final_eta.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(rep.stages.len(), 1);
    }

    #[test]
    fn continuation_matches_direct_solve() {
        let s = LayerStructure::disk(proportional_radii(1.0, 1.3, 4).unwrap()).unwrap();
        let cfg = SolverConfig::default();
        let a = continuation_solve(&s, -1.0, &cfg).unwrap();
        assert!(a.converged);
        assert_eq!(a.stages.len(), cfg.continuation_steps);
        let b = solve_vanishing(&s, FixedCore::Eta(-1.0), &cfg).unwrap();
        assert!(b.converged);
        for (x, y) in a.final_eta.iter().zip(&b.final_eta) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        for st in &a.stages {
            assert!(st.converged, "stage at {} failed", st.core_eta);
        }
    }

    #[test]
    fn merit_is_monotone_within_phases() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 6).unwrap()).unwrap();
        let rep = solve_vanishing(&s, FixedCore::Eta(-1.0), &SolverConfig::default()).unwrap();
        for w in rep.iterations.windows(2) {
            if w[0].phase == w[1].phase {
                assert!(
                    w[1].merit < w[0].merit,
                    "merit rose within a phase: {} -> {}",
                    w[0].merit,
                    w[1].merit
                );
            }
        }
    }

    #[test]
    fn iterates_stay_in_box() {
        let s = LayerStructure::disk(proportional_radii(1.0, 1.05, 5).unwrap()).unwrap();
        let rep = solve_vanishing(&s, FixedCore::Eta(-1.0), &SolverConfig::default()).unwrap();
        assert!(rep.final_eta.iter().all(|e| e.abs() <= 1.0));
    }

    #[test]
    fn idempotent_restart_from_solution() {
        let s = LayerStructure::disk(equidistant_radii(2.0, 1.0, 4).unwrap()).unwrap();
        let cfg = SolverConfig::default();
        let first = solve_vanishing(&s, FixedCore::Eta(-1.0), &cfg).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.init = InitGuess::Given(first.final_eta[..4].to_vec());
        let second = solve_vanishing(&s, FixedCore::Eta(-1.0), &cfg2).unwrap();
        assert!(second.converged);
        assert!(second.iterations.len() <= 2, "{} steps", second.iterations.len());
    }

    #[test]
    fn three_dimensional_design() {
        let s = LayerStructure::ball(equidistant_radii(2.0, 1.0, 3).unwrap()).unwrap();
        let rep = solve_vanishing(&s, FixedCore::Eta(-1.0), &SolverConfig::default()).unwrap();
        assert!(rep.converged, "termination {:?}", rep.termination);
        assert!(rep.cross_check.verified);
    }

    #[test]
    fn invalid_configs_rejected() {
        let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.backtrack_factor = 1.5;
        assert!(solve_vanishing(&s, FixedCore::Eta(-1.0), &cfg).is_err());
        let cfg = SolverConfig::default();
        assert!(continuation_solve(&s, 0.5, &cfg).is_err());
    }
}
