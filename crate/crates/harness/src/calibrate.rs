//! Fits a single scale on the noise sigmas so the pooled median direction
//! error of the 36-direction benchmark hits a target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::scenario::{CalibrationInfo, NoiseSection, Scenario};
use crate::stats::median;
use crate::sweep::{direction_cell_errors, DirectionAxis, SweepOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub target_median_deg: f64,
    pub trials_per_direction: usize,
    pub seed: u64,
    /// Bracket on the scale factor.
    pub scale_bounds: (f64, f64),
    /// Stop once the pooled median is within this many degrees of the target.
    pub tolerance_deg: f64,
    pub max_iterations: usize,
}

impl CalibrationOptions {
    pub fn new(target_median_deg: f64) -> Self {
        CalibrationOptions {
            target_median_deg,
            trials_per_direction: 100,
            seed: 0x5eed,
            scale_bounds: (0.01, 10.0),
            tolerance_deg: 1e-3,
            max_iterations: 40,
        }
    }
}

/// Pooled errors (degrees) of the 36-direction benchmark for `noise`.
pub fn benchmark_errors(
    scenario: &Scenario,
    noise: &NoiseSection,
    opts: &SweepOptions,
) -> Result<Vec<f64>> {
    let model = noise.to_model();
    let anchor = scenario.anchor_model();
    let rate = scenario.gesture.sample_rate_hz;
    let grid = DirectionAxis::Direction.default_grid();
    let per_cell = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &v)| {
            direction_cell_errors(
                DirectionAxis::Direction,
                v,
                &model,
                &anchor,
                rate,
                opts,
                idx as u64,
            )
            .map(|(errs, _)| errs)
            .map_err(HarnessError::Experiment)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.concat())
}

/// Returns `scenario` with its noise scaled to the target and the calibration
/// record filled in. The pre-calibration sigmas come from the existing record
/// when present, so repeated runs do not compound.
pub fn calibrate(scenario: &Scenario, opts: &CalibrationOptions) -> Result<Scenario> {
    if !(opts.target_median_deg > 0.0) || opts.trials_per_direction == 0 {
        return Err(HarnessError::Experiment(
            "target must be > 0 and trials >= 1".into(),
        ));
    }
    scenario.validate()?;
    let base = scenario
        .calibration
        .as_ref()
        .map(|c| c.base_noise.clone())
        .unwrap_or_else(|| scenario.noise.clone());
    let sweep = SweepOptions::new(opts.trials_per_direction, opts.seed);
    let med = |k: f64| -> Result<f64> {
        let errs = benchmark_errors(scenario, &base.scaled(k), &sweep)?;
        median(&errs)
            .ok_or_else(|| HarnessError::Experiment("no trial produced an estimate".into()))
    };

    let (mut lo, mut hi) = opts.scale_bounds;
    if !(lo > 0.0 && hi > lo) {
        return Err(HarnessError::Experiment(
            "scale bounds must satisfy 0 < lo < hi".into(),
        ));
    }
    let (m_lo, m_hi) = (med(lo)?, med(hi)?);
    if !(m_lo <= opts.target_median_deg && opts.target_median_deg <= m_hi) {
        return Err(HarnessError::Experiment(format!(
            "target {} deg outside reachable range [{m_lo}, {m_hi}]",
            opts.target_median_deg
        )));
    }
    // Bisection in log-scale; the median grows monotonically with the scale
    // under a fixed random stream.
    let (mut k, mut m) =
        if (m_lo - opts.target_median_deg).abs() < (m_hi - opts.target_median_deg).abs() {
            (lo, m_lo)
        } else {
            (hi, m_hi)
        };
    for _ in 0..opts.max_iterations {
        if (m - opts.target_median_deg).abs() <= opts.tolerance_deg {
            break;
        }
        k = (lo * hi).sqrt();
        m = med(k)?;
        if m < opts.target_median_deg {
            lo = k;
        } else {
            hi = k;
        }
    }

    let mut out = scenario.clone();
    out.noise = base.scaled(k);
    out.calibration = Some(CalibrationInfo {
        target_median_deg: opts.target_median_deg,
        achieved_median_deg: m,
        scale: k,
        base_noise: base,
        trials_per_direction: opts.trials_per_direction,
        seed: opts.seed,
    });
    Ok(out)
}
