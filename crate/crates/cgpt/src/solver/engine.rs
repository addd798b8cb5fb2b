//! Damped Gauss-Newton iteration with box projection.
//!
//! Each attempt runs two phases on the preconditioned residual: a
//! Levenberg-Marquardt phase (step from the lambda-damped least-squares
//! system, never through the normal equations) that handles the global
//! approach, then an undamped Newton polish with backtracking and a
//! steepest-descent fallback. If an attempt stalls short of tolerance the
//! driver restarts from a seeded perturbation of the best point so far;
//! perturbation sizes grow with the attempt number.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::solver::residual::{DesignSystem, SystemEval};
use crate::solver::{IterationRecord, SolverConfig, StepKind, Termination};

pub(crate) const EPS_BOX: f64 = 1e-12;
const LAMBDA_INIT: f64 = 1e-4;
const LAMBDA_GROW: f64 = 4.0;
const LAMBDA_SHRINK: f64 = 3.0;
const LAMBDA_MIN: f64 = 1e-16;
const STAGNATION_STEPS: usize = 10;
const STAGNATION_RELATIVE: f64 = 1e-16;
const NEWTON_POLISH_ITERS: usize = 60;

pub(crate) fn project(x: &mut DVector<f64>) {
    for v in x.iter_mut() {
        *v = v.clamp(-1.0 + EPS_BOX, 1.0 - EPS_BOX);
    }
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let eps = svd.singular_values.max() * 1e-14;
    svd.solve(b, eps).ok().map(|m| m.column(0).into_owned())
}

pub(crate) struct EngineOutcome {
    pub x: DVector<f64>,
    pub eval: SystemEval,
    pub termination: Termination,
    pub iterations: usize,
    pub restarts: u32,
}

struct Phase<'a> {
    cfg: &'a SolverConfig,
    log: &'a mut Vec<IterationRecord>,
    phase_id: u32,
    iter: usize,
}

impl Phase<'_> {
    fn record(&mut self, kind: StepKind, step_len: f64, lambda: Option<f64>, ev: &SystemEval) {
        self.log.push(IterationRecord {
            iter: self.iter,
            phase: self.phase_id,
            kind,
            step_len,
            lambda,
            merit: ev.merit(),
            residual_norm: ev.m_norm(),
            precond_norm: ev.g_norm(),
        });
        self.iter += 1;
    }
}

fn converged(ev: &SystemEval, cfg: &SolverConfig) -> bool {
    (!ev.resonant && ev.m_norm() <= cfg.tol_residual) || ev.g_norm() <= cfg.tol_precond
}

/// One LM + Newton pass from a fixed starting point.
fn single_pass(
    system: &DesignSystem,
    x0: DVector<f64>,
    cfg: &SolverConfig,
    phase: &mut Phase,
) -> Result<(DVector<f64>, SystemEval, Termination)> {
    let n = system.n_unknowns;
    let mut x = x0;
    project(&mut x);
    let mut ev = system.eval(x.as_slice())?;
    let mut lambda = LAMBDA_INIT;
    let mut stagnant = 0usize;
    let mut term = Termination::MaxIterations;

    // -- damped phase --
    for _ in 0..cfg.max_iters {
        if converged(&ev, cfg) {
            return Ok((x, ev, Termination::Converged));
        }
        let merit0 = ev.merit();
        let col_norms: Vec<f64> = (0..n)
            .map(|k| ev.jac.column(k).norm().max(1e-150))
            .collect();
        let mut accepted = false;
        for _ in 0..cfg.max_backtracks.max(40) {
            // stacked damped least-squares system [J; sqrt(lambda) D]
            let mut a = DMatrix::zeros(2 * n, n);
            a.view_mut((0, 0), (n, n)).copy_from(&ev.jac);
            for k in 0..n {
                a[(n + k, k)] = lambda.sqrt() * col_norms[k];
            }
            let mut b = DVector::zeros(2 * n);
            b.rows_mut(0, n).copy_from(&(-&ev.g));
            let Some(p) = lstsq(&a, &b) else {
                lambda *= LAMBDA_GROW;
                continue;
            };
            let mut cand = &x + &p;
            project(&mut cand);
            let cand_ev = system.eval(cand.as_slice())?;
            if cand_ev.merit() < merit0 {
                let drop = merit0 - cand_ev.merit();
                x = cand;
                ev = cand_ev;
                lambda = (lambda / LAMBDA_SHRINK).max(LAMBDA_MIN);
                phase.record(StepKind::Damped, p.norm(), Some(lambda), &ev);
                stagnant = if drop < STAGNATION_RELATIVE * merit0 { stagnant + 1 } else { 0 };
                accepted = true;
                break;
            }
            lambda *= LAMBDA_GROW;
        }
        if !accepted {
            term = Termination::LineSearchStall;
            break;
        }
        if stagnant >= STAGNATION_STEPS {
            term = Termination::Stagnation;
            break;
        }
    }

    // -- undamped polish --
    stagnant = 0;
    for _ in 0..NEWTON_POLISH_ITERS {
        if converged(&ev, cfg) {
            return Ok((x, ev, Termination::Converged));
        }
        let merit0 = ev.merit();
        let newton = lstsq(&ev.jac, &(-&ev.g));
        let gradient = -(ev.jac.transpose() * &ev.g);
        let mut moved = false;
        let dirs: [(StepKind, Option<DVector<f64>>); 2] =
            [(StepKind::Newton, newton), (StepKind::Gradient, Some(gradient))];
        'dirs: for (kind, dir) in dirs {
            let Some(p) = dir else { continue };
            let mut t = 1.0;
            for _ in 0..cfg.max_backtracks {
                let mut cand = &x + &(&p * t);
                project(&mut cand);
                let cand_ev = system.eval(cand.as_slice())?;
                if cand_ev.merit() < merit0 {
                    let drop = merit0 - cand_ev.merit();
                    x = cand;
                    ev = cand_ev;
                    phase.record(kind, t, None, &ev);
                    stagnant = if drop < STAGNATION_RELATIVE * merit0 { stagnant + 1 } else { 0 };
                    moved = true;
                    break 'dirs;
                }
                t *= cfg.backtrack_factor;
            }
        }
        if !moved {
            return Ok((x, ev, Termination::LineSearchStall));
        }
        if stagnant >= STAGNATION_STEPS {
            return Ok((x, ev, Termination::Stagnation));
        }
    }
    if converged(&ev, cfg) {
        return Ok((x, ev, Termination::Converged));
    }
    Ok((x, ev, term))
}

/// Full driver: initial pass plus seeded perturbation restarts from the best
/// point seen, keeping the best outcome.
pub(crate) fn solve_system(
    system: &DesignSystem,
    x0: DVector<f64>,
    cfg: &SolverConfig,
    log: &mut Vec<IterationRecord>,
) -> Result<EngineOutcome> {
    let mut phase = Phase { cfg, log, phase_id: 0, iter: 0 };
    phase.cfg = cfg;
    let (x, ev, term) = single_pass(system, x0, cfg, &mut phase)?;
    let mut best = EngineOutcome { x, eval: ev, termination: term, iterations: phase.iter, restarts: 0 };
    if matches!(best.termination, Termination::Converged) {
        return Ok(best);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for attempt in 0..cfg.max_restarts {
        phase.phase_id = attempt + 1;
        let scale = 10f64.powf(-6.0 + 1.5 * attempt as f64).min(1.0);
        let mut start = best.x.clone();
        for v in start.iter_mut() {
            *v += (rng.random::<f64>() * 2.0 - 1.0) * scale;
        }
        project(&mut start);
        let (x, ev, term) = single_pass(system, start, cfg, &mut phase)?;
        let better = ev.g_norm() < best.eval.g_norm();
        if better {
            best = EngineOutcome {
                x,
                eval: ev,
                termination: term,
                iterations: phase.iter,
                restarts: attempt + 1,
            };
        } else {
            best.restarts = attempt + 1;
        }
        if matches!(best.termination, Termination::Converged) {
            break;
        }
    }
    best.iterations = phase.iter;
    Ok(best)
}
