//! Geometrically spaced structures: subset aggregates, the linear design
//! system they satisfy, and thin-coating asymptotics.
//!
//! For radii `r_k = r * gamma^{L-k}` the transfer numerator collapses to
//! `t21^{(n)} = r^{2n} * sum_k gamma^{2(k-1)n} xi_k`, where `xi_k` gathers
//! products of contrasts over odd-size index subsets by an alternating
//! weight. Tensor vanishing then pins the aggregates through a pure
//! Vandermonde system, which is what makes these structures tractable.

use serde::Serialize;

use crate::error::{CgptError, Result};
use crate::structure::{ContrastVector, LayerStructure};
use crate::tensor::{cgpt, scale_factor};
use crate::vandermonde::lagrange_at;

/// Odd- and even-subset aggregates of a contrast vector.
///
/// For `L` layers, `xi` has length `L` (`xi_1 = eta_L`, `xi_L = eta_1`) and
/// `zeta` length `L - 1`.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateVector {
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Both aggregate families, by peeling layers from the outside in: appending
/// layer `l` maps `xi_{k+1} <- xi_k + zeta_k eta_l` and
/// `zeta_k <- zeta_k + xi_k eta_l`. Runs in O(L^2).
pub fn aggregates(eta: &ContrastVector) -> AggregateVector {
    let e = eta.as_slice();
    let mut xi = vec![e[0]];
    let mut zeta: Vec<f64> = Vec::new();
    for &el in &e[1..] {
        zeta.push(0.0); // zeta^{(l-1)} padded with its missing top weight
        let mut xi_new = Vec::with_capacity(xi.len() + 1);
        xi_new.push(el);
        for k in 0..xi.len() {
            xi_new.push(xi[k] + zeta[k] * el);
        }
        for k in 0..zeta.len() {
            zeta[k] += xi[k] * el;
        }
        xi = xi_new;
    }
    AggregateVector { xi, zeta }
}

/// Odd-subset aggregates `xi_1 ... xi_L`.
pub fn xi_aggregates(eta: &ContrastVector) -> Vec<f64> {
    aggregates(eta).xi
}

/// Even-subset aggregates `zeta_1 ... zeta_{L-1}`.
pub fn zeta_aggregates(eta: &ContrastVector) -> Vec<f64> {
    aggregates(eta).zeta
}

/// `xi` together with its Jacobian `d xi_i / d eta_j` (forward-mode
/// differentiation of the peeling recursion).
pub(crate) fn xi_with_jacobian(eta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let l = eta.len();
    let mut xi = vec![eta[0]];
    let mut zeta: Vec<f64> = Vec::new();
    let mut dxi = vec![unit_row(l, 0)];
    let mut dzeta: Vec<Vec<f64>> = Vec::new();
    for (idx, &el) in eta.iter().enumerate().skip(1) {
        zeta.push(0.0);
        dzeta.push(vec![0.0; l]);
        let mut xi_new = Vec::with_capacity(xi.len() + 1);
        let mut dxi_new = Vec::with_capacity(xi.len() + 1);
        xi_new.push(el);
        dxi_new.push(unit_row(l, idx));
        for k in 0..xi.len() {
            xi_new.push(xi[k] + zeta[k] * el);
            let mut row = vec![0.0; l];
            for j in 0..l {
                row[j] = dxi[k][j] + dzeta[k][j] * el;
            }
            row[idx] += zeta[k];
            dxi_new.push(row);
        }
        for k in 0..zeta.len() {
            for j in 0..l {
                dzeta[k][j] += dxi[k][j] * el;
            }
            dzeta[k][idx] += xi[k];
            zeta[k] += xi[k] * el;
        }
        xi = xi_new;
        dxi = dxi_new;
    }
    (xi, dxi)
}

fn unit_row(l: usize, j: usize) -> Vec<f64> {
    let mut r = vec![0.0; l];
    r[j] = 1.0;
    r
}

/// Aggregate targets `xi_2 ... xi_{N+1}` that a vanishing design with the
/// given core contrast must meet on a proportional structure: the solution of
/// `sum_{k=1..N} gamma^{2kn} xi_{k+1} = -core` for `n = 1..N`, in closed form
/// through Lagrange cardinal products (stable for gamma near 1).
pub(crate) fn xi_targets(gamma: f64, n_coatings: usize, core_eta: f64) -> Vec<f64> {
    let nodes: Vec<f64> = (1..=n_coatings).map(|k| gamma.powi(2 * k as i32)).collect();
    (0..n_coatings)
        .map(|k| -core_eta * lagrange_at(&nodes, k, 1.0) / nodes[k])
        .collect()
}

/// Design targets for an insulating (or perfectly conducting) core on a
/// proportional structure. Returns the full aggregate vector
/// `(xi_1, ..., xi_{N+1})` with `xi_1 = core_eta`; the interior entries are
/// determined by the vanishing conditions alone.
pub fn vandermonde_design_targets(structure: &LayerStructure, core_eta: f64) -> Result<Vec<f64>> {
    let gamma = structure.proportional_ratio().ok_or_else(|| {
        CgptError::Unsupported("design targets need geometrically spaced radii".into())
    })?;
    if core_eta.abs() != 1.0 {
        return Err(CgptError::InvalidInput(
            "aggregate design targets are defined for an extreme core (eta = +-1)".into(),
        ));
    }
    let n = structure.n_coatings();
    if n == 0 {
        return Err(CgptError::InvalidInput("need at least one coating".into()));
    }
    // computed at the +1 normalization and mapped back through oddness
    let mut xi = vec![core_eta];
    xi.extend(xi_targets(gamma, n, 1.0).iter().map(|t| core_eta * t));
    Ok(xi)
}

/// Leading-order thin-coating contrasts for an insulating-core design with
/// `gamma = 1 + delta`: `eta_1 = (-1)^{N-1} (1 - N(N-1) delta)` and
/// `eta_k = (-1)^{N-k}` for `k >= 2`. Used as a solver preset and as the
/// asymptotic reference the solved designs are compared against.
pub fn extreme_asymptotic(n_coatings: usize, delta: f64) -> Vec<f64> {
    let n = n_coatings as f64;
    (1..=n_coatings)
        .map(|k| {
            let sign = if (n_coatings - k) % 2 == 0 { 1.0 } else { -1.0 };
            if k == 1 {
                sign * (1.0 - n * (n - 1.0) * delta)
            } else {
                sign
            }
        })
        .collect()
}

/// Outcome of sampling the claim that the only vanishing design with a
/// contrast-free core is the trivial one.
#[derive(Debug, Clone, Serialize)]
pub struct TrivialityReport {
    pub trials: usize,
    pub min_residual: f64,
    /// Sampled coating contrasts that produced a residual below the floor.
    pub counterexamples: Vec<(Vec<f64>, f64)>,
}

/// Sample random nonzero coating contrasts with a zero-contrast core and
/// record `max_n |M_n| / scale_n` for each; a vanishing residual would
/// contradict the uniqueness of the trivial solution.
pub fn verify_only_trivial(
    structure: &LayerStructure,
    trials: usize,
    seed: u64,
    floor: f64,
) -> Result<TrivialityReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    if structure.proportional_ratio().is_none() {
        return Err(CgptError::Unsupported(
            "the triviality property is stated for geometrically spaced radii".into(),
        ));
    }
    let n = structure.n_coatings();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_residual = f64::INFINITY;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let mut eta: Vec<f64> = (0..n).map(|_| rng.random_range(-0.95..0.95)).collect();
        // keep the sample meaningfully nonzero
        if eta.iter().all(|e| e.abs() < 0.01) {
            eta[0] = 0.5;
        }
        let mut full = eta.clone();
        full.push(0.0);
        let cv = ContrastVector::new(full)?;
        let mut worst: f64 = 0.0;
        for mode in 1..=n {
            let m = cgpt(structure, &cv, mode)?;
            worst = worst.max(m.abs() / scale_factor(structure, mode));
        }
        min_residual = min_residual.min(worst);
        if worst <= floor {
            counterexamples.push((eta, worst));
        }
    }
    Ok(TrivialityReport { trials, min_residual, counterexamples })
}
