use serde::Serialize;

use crate::error::{Error, Result};

use super::model::FusionModel;
use super::train::{example_loss, TrainingExample};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Lower bound on the relative-error denominator, so that gradients which are
/// zero up to rounding do not count as failures.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Tensor and flat index where the maximum occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

fn mean_loss(model: &FusionModel, ex: &TrainingExample) -> f64 {
    let (l, n) = example_loss(model, ex, None, None);
    l / n as f64
}

/// Compares the analytic gradient of the mean per-token loss with central
/// finite differences for every scalar of every parameter tensor. Dropout is
/// off for both.
pub fn gradient_check(model: &FusionModel, sample: &TrainingExample) -> Result<GradCheckReport> {
    let mut grads = model.params.zeros_like();
    let (_, n) = example_loss(model, sample, None, Some(&mut grads));
    let scale = 1.0 / n as f64;

    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
    };
    for t in 0..probe.params.len() {
        for i in 0..probe.params.get(t).data.len() {
            let orig = probe.params.get(t).data[i];
            probe.params.get_mut(t).data[i] = orig + FD_STEP;
            let plus = mean_loss(&probe, sample);
            probe.params.get_mut(t).data[i] = orig - FD_STEP;
            let minus = mean_loss(&probe, sample);
            probe.params.get_mut(t).data[i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let analytic = grads.get(t).data[i] * scale;
            if !numeric.is_finite() || !analytic.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite gradient for {}[{i}]",
                    probe.params.get(t).name
                )));
            }
            let err = relative_error(analytic, numeric);
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((probe.params.get(t).name.clone(), i));
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
