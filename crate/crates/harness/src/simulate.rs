//! Free-hand gesture simulation against a scenario.

use pointsel_core::{GestureSpec, SimulatedGesture, Simulator, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::Scenario;

fn default_displacement() -> f64 {
    0.2
}

fn default_speed() -> f64 {
    0.1
}

/// A gesture centred on `user` and moving toward `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureRequest {
    pub user: [f64; 3],
    pub target: [f64; 3],
    #[serde(default = "default_displacement")]
    pub displacement_m: f64,
    #[serde(default = "default_speed")]
    pub speed_mps: f64,
    /// Overrides the scenario tremor amplitude, m.
    #[serde(default)]
    pub jitter_m: Option<f64>,
    /// Overrides the scenario noise seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl GestureRequest {
    pub fn new(user: Vec3<f64>, target: Vec3<f64>) -> Self {
        GestureRequest {
            user: user.into(),
            target: target.into(),
            displacement_m: default_displacement(),
            speed_mps: default_speed(),
            jitter_m: None,
            seed: None,
        }
    }

    pub fn spec(&self, scenario: &Scenario) -> Result<GestureSpec<f64>> {
        let center = Vec3::from(self.user);
        let base = GestureSpec::toward(center, Vec3::from(self.target))?;
        let spec = GestureSpec {
            start: center - base.direction * (0.5 * self.displacement_m),
            displacement: self.displacement_m,
            speed: self.speed_mps,
            jitter_amplitude: self.jitter_m.unwrap_or(scenario.gesture.jitter_amplitude_m),
            sample_rate: scenario.gesture.sample_rate_hz,
            ..base
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn simulate(&self, scenario: &Scenario) -> Result<SimulatedGesture<f64>> {
        let spec = self.spec(scenario)?;
        let mut noise = scenario.noise_model();
        if let Some(seed) = self.seed {
            noise.seed = seed;
        }
        Ok(Simulator::new(noise, scenario.anchor_model()).generate_gesture(&spec)?)
    }
}
