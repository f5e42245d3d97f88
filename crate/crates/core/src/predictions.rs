//! Uniform-population estimates of particle growth and saturation, and fits
//! of measured `Ω(t)` against them.

use serde::Serialize;

use crate::algebra::{AssembledModel, LocalRateMatrix};
use crate::error::{Error, Result};

/// Minimum number of points in a growth fit.
pub const MIN_FIT_POINTS: usize = 5;

/// `μ = (2d/6^k) Σ_{C≠C'} M⁻_{CC'}`.
pub fn growth_rate(m: &LocalRateMatrix, d: usize) -> f64 {
    2.0 * d as f64 / 6f64.powi(m.k as i32) * m.negative_mass()
}

/// `μ` summed over the groups of a model: `(2/N) Σ_g M⁻_g / 6^{k_g}`. On a
/// periodic lattice with identical links this equals [`growth_rate`].
pub fn model_growth_rate(model: &AssembledModel) -> f64 {
    let total: f64 = model
        .groups
        .iter()
        .map(|g| {
            let m = model.matrix_of(g);
            m.negative_mass() / 6f64.powi(m.k as i32)
        })
        .sum();
    2.0 * total / model.num_sites as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saturation {
    /// `−2·6^N log(1 − r)`.
    pub approx: f64,
    /// `log(1 − r) / log(1 − 6^{−N}/2)`.
    pub exact: f64,
    /// `r = ΣM⁻ / Σ|M|` over off-diagonal entries.
    pub ratio: f64,
}

fn saturation_from_masses(negative: f64, absolute: f64, n: usize) -> Result<Saturation> {
    if negative == 0.0 {
        return Ok(Saturation { approx: 0.0, exact: 0.0, ratio: 0.0 });
    }
    let ratio = negative / absolute;
    if !(ratio < 1.0) {
        return Err(Error::DivergentSaturation { ratio });
    }
    let l = (-ratio).ln_1p();
    let approx = -2.0 * 6f64.powi(n as i32) * l;
    let exact = l / (-0.5 * 6f64.powi(-(n as i32))).ln_1p();
    Ok(Saturation { approx, exact, ratio })
}

pub fn omega_saturation(m: &LocalRateMatrix, n: usize) -> Result<Saturation> {
    saturation_from_masses(m.negative_mass(), m.absolute_mass(), n)
}

/// Saturation with masses summed over all groups.
pub fn model_omega_saturation(model: &AssembledModel) -> Result<Saturation> {
    saturation_from_masses(model.negative_mass(), model.absolute_mass(), model.num_sites)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Slope of `log Ω` against `t·N`.
    pub mu: f64,
    pub intercept: f64,
    /// Grid indices `[start, end)` used.
    pub window: (usize, usize),
    /// Root-mean-square residual of `log Ω`.
    pub residual: f64,
    /// Set when `Ω` never left 1 and no fit was attempted.
    pub flat: bool,
}

/// Least-squares growth rate on the leading points with `Ω < omega_sat/10`.
/// A series that stays at its initial value gives `μ = 0` with `flat` set.
pub fn fit_growth(times: &[f64], omega: &[f64], n_sites: usize, omega_sat: f64) -> Result<GrowthFit> {
    if times.len() != omega.len() {
        return Err(Error::Config("times and omega differ in length".into()));
    }
    if omega.iter().all(|&o| o == omega[0]) && !omega.is_empty() {
        return Ok(GrowthFit { mu: 0.0, intercept: omega[0].ln(), window: (0, omega.len()), residual: 0.0, flat: true });
    }
    let cut = if omega_sat > 0.0 { omega_sat / 10.0 } else { f64::INFINITY };
    let end = omega.iter().position(|&o| !(o < cut) || !(o > 0.0)).unwrap_or(omega.len());
    if end < MIN_FIT_POINTS {
        return Err(Error::EmptyFitWindow);
    }
    let x: Vec<f64> = times[..end].iter().map(|t| t * n_sites as f64).collect();
    let y: Vec<f64> = omega[..end].iter().map(|o| o.ln()).collect();
    let k = end as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::EmptyFitWindow);
    }
    let mu = sxy / sxx;
    let intercept = my - mu * mx;
    let residual = (x.iter().zip(&y).map(|(a, b)| (b - intercept - mu * a).powi(2)).sum::<f64>() / k).sqrt();
    Ok(GrowthFit { mu, intercept, window: (0, end), residual, flat: false })
}

/// Mean of `Ω` over grid points with `t ≥ t_from`, and its standard error
/// treating points as independent.
pub fn plateau(times: &[f64], omega: &[f64], stderr: &[f64], t_from: f64) -> Option<(f64, f64)> {
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t_from).collect();
    if idx.is_empty() {
        return None;
    }
    let k = idx.len() as f64;
    let mean = idx.iter().map(|&i| omega[i]).sum::<f64>() / k;
    let se = idx.iter().map(|&i| stderr[i].powi(2)).sum::<f64>().sqrt() / k;
    Some((mean, se))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub mu_pred: f64,
    pub mu_fit: Option<GrowthFit>,
    pub omega_sat_pred: f64,
    pub omega_sat_exact: f64,
    pub omega_sat_meas: Option<(f64, f64)>,
}

impl GrowthReport {
    /// Predictions only.
    pub fn predict(model: &AssembledModel) -> Result<Self> {
        let sat = model_omega_saturation(model)?;
        Ok(GrowthReport {
            mu_pred: model_growth_rate(model),
            mu_fit: None,
            omega_sat_pred: sat.approx,
            omega_sat_exact: sat.exact,
            omega_sat_meas: None,
        })
    }
}
