//! Geometry and material model of a concentric multilayer structure.
//!
//! A structure with `N` coatings has `N + 1` interfaces at radii
//! `r_1 > r_2 > ... > r_{N+1} > 0`. Region `k` (between `r_k` and `r_{k+1}`,
//! with region 0 the unbounded background and region `N + 1` the core)
//! carries a homogeneous conductivity `sigma_k`. Materials are described
//! either by the conductivities themselves or by the interface contrasts
//!
//! ```text
//! eta_k = (sigma_k - sigma_{k-1}) / (sigma_k + sigma_{k-1})  in [-1, 1],
//! ```
//!
//! with `eta_k = -1` an insulating interface and `eta_k = +1` a perfectly
//! conducting one.

use serde::Serialize;

use crate::error::{CgptError, Result};

/// Ambient dimension of the problem (disks or balls).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn from_u32(d: u32) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            other => Err(CgptError::InvalidInput(format!(
                "dimension must be 2 or 3, got {other}"
            ))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

/// Concentric layered geometry: strictly decreasing interface radii plus the
/// background conductivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStructure {
    dimension: Dimension,
    radii: Vec<f64>,
    sigma_background: f64,
}

impl LayerStructure {
    pub fn new(dimension: Dimension, radii: Vec<f64>, sigma_background: f64) -> Result<Self> {
        if radii.is_empty() {
            return Err(CgptError::InvalidInput("at least one radius required".into()));
        }
        if !radii.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(CgptError::InvalidInput("radii must be positive and finite".into()));
        }
        if !radii.windows(2).all(|w| w[0] > w[1]) {
            return Err(CgptError::InvalidInput(
                "radii must be strictly decreasing from the outermost interface".into(),
            ));
        }
        if !(sigma_background.is_finite() && sigma_background > 0.0) {
            return Err(CgptError::InvalidInput(
                "background conductivity must be positive".into(),
            ));
        }
        Ok(Self { dimension, radii, sigma_background })
    }

    /// Two-dimensional structure with unit background conductivity.
    pub fn disk(radii: Vec<f64>) -> Result<Self> {
        Self::new(Dimension::Two, radii, 1.0)
    }

    /// Three-dimensional structure with unit background conductivity.
    pub fn ball(radii: Vec<f64>) -> Result<Self> {
        Self::new(Dimension::Three, radii, 1.0)
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn sigma_background(&self) -> f64 {
        self.sigma_background
    }

    /// Number of interfaces (= number of contrasts), i.e. N + 1.
    pub fn n_layers(&self) -> usize {
        self.radii.len()
    }

    /// Number of coatings N surrounding the core.
    pub fn n_coatings(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn outer_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn core_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Common ratio `r_{k-1} / r_k` when the radii are geometrically spaced,
    /// detected to a relative tolerance of 1e-12.
    pub fn proportional_ratio(&self) -> Option<f64> {
        if self.radii.len() < 2 {
            return None;
        }
        let gamma = self.radii[0] / self.radii[1];
        for w in self.radii.windows(2) {
            let g = w[0] / w[1];
            if (g - gamma).abs() > 1e-12 * gamma {
                return None;
            }
        }
        Some(gamma)
    }
}

/// Interface contrasts `eta_1 ... eta_{N+1}`, ordered from the outermost
/// interface inward. Every entry lies in the closed box `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastVector {
    eta: Vec<f64>,
}

impl ContrastVector {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(CgptError::InvalidInput("at least one contrast required".into()));
        }
        for (k, e) in eta.iter().enumerate() {
            if !e.is_finite() || e.abs() > 1.0 {
                return Err(CgptError::InvalidInput(format!(
                    "contrast eta_{} = {e} outside [-1, 1]",
                    k + 1
                )));
            }
        }
        Ok(Self { eta })
    }

    /// The zero-contrast vector (structure indistinguishable from background).
    pub fn zeros(n: usize) -> Self {
        Self { eta: vec![0.0; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eta
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Spectral parameter `lambda_k = 1 / (2 eta_k)`; `None` at zero contrast.
    /// Satisfies `|lambda_k| >= 1/2` on the contrast box.
    pub fn lambda(&self, k: usize) -> Option<f64> {
        let e = self.eta[k];
        if e == 0.0 {
            None
        } else {
            Some(1.0 / (2.0 * e))
        }
    }
}

impl std::ops::Index<usize> for ContrastVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.eta[i]
    }
}

/// Contrasts from conductivities `sigma_0, sigma_1, ..., sigma_{N+1}`
/// (background first.)
pub fn eta_from_sigma(sigmas: &[f64]) -> Result<ContrastVector> {
    if sigmas.len() < 2 {
        return Err(CgptError::InvalidInput(
            "need the background and at least one layer conductivity".into(),
        ));
    }
    if !(sigmas[0].is_finite() && sigmas[0] > 0.0) {
        return Err(CgptError::InvalidInput("background conductivity must be positive".into()));
    }
    let mut eta = Vec::with_capacity(sigmas.len() - 1);
    for k in 1..sigmas.len() {
        let (lo, hi) = (sigmas[k - 1], sigmas[k]);
        if !hi.is_finite() || hi < 0.0 {
            return Err(CgptError::InvalidInput(format!(
                "conductivity sigma_{k} = {hi} must be finite and nonnegative"
            )));
        }
        let sum = hi + lo;
        if sum == 0.0 {
            return Err(CgptError::InvalidInput(format!(
                "sigma_{} + sigma_{} = 0: contrast undefined",
                k - 1,
                k
            )));
        }
        eta.push((hi - lo) / sum);
    }
    ContrastVector::new(eta)
}

/// Conductivities `sigma_0 ... sigma_{N+1}` generated by the contrasts,
/// `sigma_k = sigma_0 * prod_{i<=k} (1 + eta_i) / (1 - eta_i)`.
///
/// `eta_i = -1` makes every deeper conductivity zero; `eta_i = +1` (infinite
/// conductivity) is rejected since a finite value is required.
pub fn sigma_from_eta(eta: &ContrastVector, sigma0: f64) -> Result<Vec<f64>> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(CgptError::InvalidInput("background conductivity must be positive".into()));
    }
    let mut out = Vec::with_capacity(eta.len() + 1);
    out.push(sigma0);
    let mut cur = sigma0;
    for (k, &e) in eta.as_slice().iter().enumerate() {
        if e == 1.0 {
            return Err(CgptError::InvalidInput(format!(
                "eta_{} = 1 corresponds to infinite conductivity",
                k + 1
            )));
        }
        cur *= (1.0 + e) / (1.0 - e);
        out.push(cur);
    }
    Ok(out)
}

/// Core contrast that fixes the core conductivity at `target_sigma` given the
/// coating contrasts, via
/// `eta_{N+1} = (t A - B) / (t A + B)` with `t = target_sigma / sigma0`,
/// `A = prod (1 - eta_i)`, `B = prod (1 + eta_i)`.
pub fn eta_core_for_sigma(eta_prime: &[f64], target_sigma: f64, sigma0: f64) -> Result<f64> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(CgptError::InvalidInput("background conductivity must be positive".into()));
    }
    if !(target_sigma.is_finite() && target_sigma >= 0.0) {
        return Err(CgptError::InvalidInput("target conductivity must be nonnegative".into()));
    }
    let t = target_sigma / sigma0;
    let (mut a, mut b) = (1.0, 1.0);
    for (k, &e) in eta_prime.iter().enumerate() {
        if e.abs() >= 1.0 {
            return Err(CgptError::InvalidInput(format!(
                "coating contrast eta_{} must lie strictly inside (-1, 1)",
                k + 1
            )));
        }
        a *= 1.0 - e;
        b *= 1.0 + e;
    }
    let den = t * a + b;
    if den == 0.0 {
        return Err(CgptError::InvalidInput("degenerate coating product".into()));
    }
    Ok((t * a - b) / den)
}

/// Derivative of [`eta_core_for_sigma`] with respect to each coating contrast.
pub(crate) fn eta_core_for_sigma_grad(eta_prime: &[f64], target_sigma: f64, sigma0: f64) -> Vec<f64> {
    let t = target_sigma / sigma0;
    let (mut a, mut b) = (1.0, 1.0);
    for &e in eta_prime {
        a *= 1.0 - e;
        b *= 1.0 + e;
    }
    let den = t * a + b;
    eta_prime
        .iter()
        .map(|&e| -4.0 * t * a * b / ((1.0 - e * e) * den * den))
        .collect()
}

/// `n_coatings + 1` equally spaced radii from `r_outer` down to `r_inner`.
pub fn equidistant_radii(r_outer: f64, r_inner: f64, n_coatings: usize) -> Result<Vec<f64>> {
    if !(r_inner.is_finite() && r_outer.is_finite() && r_inner > 0.0 && r_outer > r_inner) {
        return Err(CgptError::InvalidInput(
            "need r_outer > r_inner > 0 for equidistant radii".into(),
        ));
    }
    if n_coatings == 0 {
        return Err(CgptError::InvalidInput("need at least one coating".into()));
    }
    let n = n_coatings as f64;
    let step = (r_outer - r_inner) / n;
    Ok((0..=n_coatings).map(|i| r_outer - step * i as f64).collect())
}

/// Geometrically spaced radii `r_k = r_inner * gamma^{N+1-k}`, `k = 1..N+1`.
pub fn proportional_radii(r_inner: f64, gamma: f64, n_coatings: usize) -> Result<Vec<f64>> {
    if !(r_inner.is_finite() && r_inner > 0.0) {
        return Err(CgptError::InvalidInput("inner radius must be positive".into()));
    }
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(CgptError::InvalidInput("growth ratio must exceed 1".into()));
    }
    Ok((0..=n_coatings)
        .map(|i| r_inner * gamma.powi((n_coatings - i) as i32))
        .collect())
}
