use serde::{Deserialize, Serialize};

use super::{Adversary, Algorithm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `eps(m) = a d ln(m gamma^2 / d) / (m gamma^2)`.
    Log,
    /// `eps(m) = a d / (m gamma^2)`.
    Flat,
}

/// Shape of each model at `m`, without the scale `a`.
pub fn model_shape(model: Model, m: usize, gamma: f64, d: usize) -> f64 {
    let x = m as f64 * gamma * gamma / d as f64;
    match model {
        Model::Log => x.ln() / x,
        Model::Flat => 1.0 / x,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub a: f64,
    /// `ln(mean error) - ln(a shape(m))` per point.
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub m: usize,
    pub mean_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub algo: Algorithm,
    pub adversary: Adversary,
    /// Points both models were fitted on.
    pub points: Vec<FitPoint>,
    /// Points left out: zero mean error, or `m gamma^2 <= d`.
    pub excluded: Vec<FitPoint>,
    pub model_log: Option<ModelFit>,
    pub model_flat: Option<ModelFit>,
    pub preferred: Option<Model>,
}

/// Least squares on `ln(error) = ln(a) + ln(shape(m))`; the optimal `ln(a)`
/// is the mean of `ln(error) - ln(shape)`.
pub fn fit_model(model: Model, points: &[FitPoint], gamma: f64, d: usize) -> Option<ModelFit> {
    if points.is_empty() {
        return None;
    }
    let gaps: Vec<f64> = points.iter().map(|p| p.mean_error.ln() - model_shape(model, p.m, gamma, d).ln()).collect();
    let ln_a = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let residuals: Vec<f64> = gaps.iter().map(|g| g - ln_a).collect();
    let ssr = residuals.iter().map(|r| r * r).sum();
    Some(ModelFit { a: ln_a.exp(), residuals, ssr })
}

/// Fits both models to `(m, mean error)` on the same points and prefers the
/// smaller squared log-residual sum; ties go to the flat model.
pub fn fit_report(algo: Algorithm, adversary: Adversary, means: &[FitPoint], gamma: f64, d: usize) -> FitReport {
    let usable = |p: &FitPoint| p.mean_error > 0.0 && p.mean_error.is_finite() && (p.m as f64) * gamma * gamma > d as f64;
    let (points, excluded): (Vec<FitPoint>, Vec<FitPoint>) = means.iter().partition(|p| usable(p));
    let model_log = fit_model(Model::Log, &points, gamma, d);
    let model_flat = fit_model(Model::Flat, &points, gamma, d);
    let preferred = match (&model_log, &model_flat) {
        (Some(l), Some(f)) => Some(if l.ssr < f.ssr { Model::Log } else { Model::Flat }),
        _ => None,
    };
    FitReport { algo, adversary, points, excluded, model_log, model_flat, preferred }
}
