//! Target selection: match the pointing direction against the unit vectors
//! from each trajectory sample to every registered device.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_between, Vec3};
use crate::pointing::PointingRay;
use crate::registry::DeviceRecord;
use crate::scalar::{lit, Real};

/// Minimum distance between a device and any trajectory sample, m.
const COINCIDENCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct SelectorConfig<T> {
    /// Angular margin around the best device inside which candidates are
    /// reported as ambiguous, rad.
    pub ambiguity_margin: T,
}

impl<T: Real> Default for SelectorConfig<T> {
    fn default() -> Self {
        SelectorConfig {
            ambiguity_margin: lit::<T>(2.36).to_radians(),
        }
    }
}

impl<T: Real> SelectorConfig<T> {
    /// The angular margin expressed on the score scale, `1 - cos(margin)`.
    pub fn score_margin(&self) -> T {
        T::one() - self.ambiguity_margin.cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct RankedDevice<T> {
    pub id: String,
    pub score: T,
    /// Mean angle between the pointing direction and the per-sample device
    /// bearing, rad.
    pub mean_offset: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Device(String),
    Ambiguous(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct SelectionResult<T> {
    /// Ascending by score; ties ordered by id.
    pub ranked: Vec<RankedDevice<T>>,
    pub chosen: Choice,
}

impl<T: Real> SelectionResult<T> {
    /// Lowest-scoring device regardless of ambiguity.
    pub fn best(&self) -> &RankedDevice<T> {
        &self.ranked[0]
    }

    pub fn chosen_id(&self) -> Option<&str> {
        match &self.chosen {
            Choice::Device(id) => Some(id),
            Choice::Ambiguous(_) => None,
        }
    }
}

/// Unit vectors from every smoothed sample to `device`.
fn bearings<'a, T: Real>(
    ray: &'a PointingRay<T>,
    device: Vec3<T>,
) -> impl Iterator<Item = Result<Vec3<T>>> + 'a {
    ray.samples.samples().iter().enumerate().map(move |(m, s)| {
        let v = device - s.position;
        let d = v.norm();
        if !(d > lit(COINCIDENCE_EPS)) {
            return Err(Error::DegenerateGeometry {
                sample: m,
                distance_m: d.to_f64_lossy(),
            });
        }
        Ok(v / d)
    })
}

/// `(1/M) Σ |1 - n_s · n_i(m)|` over the gesture samples.
pub fn score_device<T: Real>(ray: &PointingRay<T>, device: &DeviceRecord<T>) -> Result<T> {
    score_position(ray, device.position)
}

pub fn score_position<T: Real>(ray: &PointingRay<T>, position: Vec3<T>) -> Result<T> {
    let m = ray.samples.len();
    if m == 0 {
        return Err(Error::InsufficientData { got: 0, need: 1 });
    }
    let mut sum = T::zero();
    for n_i in bearings(ray, position) {
        sum = sum + (T::one() - ray.direction.dot(n_i?)).abs();
    }
    Ok(sum / lit(m as f64))
}

fn mean_offset<T: Real>(ray: &PointingRay<T>, position: Vec3<T>) -> Result<T> {
    let mut sum = T::zero();
    for n_i in bearings(ray, position) {
        sum = sum + angle_between(ray.direction, n_i?);
    }
    Ok(sum / lit(ray.samples.len() as f64))
}

pub fn select<T: Real>(
    ray: &PointingRay<T>,
    catalog: &[DeviceRecord<T>],
) -> Result<SelectionResult<T>> {
    select_with(ray, catalog, &SelectorConfig::default())
}

/// Ranks every device; the best one is chosen unless other devices score
/// within the ambiguity margin, in which case all of them are returned.
pub fn select_with<T: Real>(
    ray: &PointingRay<T>,
    catalog: &[DeviceRecord<T>],
    cfg: &SelectorConfig<T>,
) -> Result<SelectionResult<T>> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut ranked = catalog
        .iter()
        .map(|d| {
            Ok(RankedDevice {
                id: d.id.clone(),
                score: score_device(ray, d)?,
                mean_offset: mean_offset(ray, d.position)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });

    let limit = ranked[0].score + cfg.score_margin();
    let candidates: Vec<String> = ranked
        .iter()
        .take_while(|r| r.score <= limit)
        .map(|r| r.id.clone())
        .collect();
    let chosen = if candidates.len() == 1 {
        Choice::Device(candidates.into_iter().next().expect("one candidate"))
    } else {
        Choice::Ambiguous(candidates)
    };
    Ok(SelectionResult { ranked, chosen })
}

/// Outcome of a baseline selector. `tied` lists every id sharing the winning
/// value (including `id`) when there is more than one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselinePick {
    pub id: String,
    pub tied: Vec<String>,
}

impl BaselinePick {
    pub fn is_tie(&self) -> bool {
        !self.tied.is_empty()
    }
}

fn pick_extreme<T: Real>(values: BTreeMap<&str, T>, better: impl Fn(T, T) -> bool) -> BaselinePick {
    // BTreeMap iterates ids lexicographically, so the first winner is the tie-break.
    let mut best: Option<(&str, T)> = None;
    for (id, v) in &values {
        match best {
            Some((_, b)) if !better(*v, b) => {}
            _ => best = Some((id, *v)),
        }
    }
    let (id, v) = best.expect("non-empty");
    let tied: Vec<String> = values
        .iter()
        .filter(|(_, x)| **x == v)
        .map(|(k, _)| k.to_string())
        .collect();
    BaselinePick {
        id: id.to_string(),
        tied: if tied.len() > 1 { tied } else { Vec::new() },
    }
}

/// Picks the device whose distance changed most over the gesture,
/// `|last - first|`. Series are `(timestamp, meters)`.
pub fn baseline_distance_change<T: Real>(
    series: &BTreeMap<String, Vec<(T, T)>>,
) -> Result<BaselinePick> {
    if series.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut changes = BTreeMap::new();
    for (id, s) in series {
        if s.len() < 2 {
            return Err(Error::InsufficientData {
                got: s.len(),
                need: 2,
            });
        }
        let change = (s[s.len() - 1].1 - s[0].1).abs();
        changes.insert(id.as_str(), change);
    }
    Ok(pick_extreme(changes, |a, b| a > b))
}

/// Picks the device with the smallest mean `|AoA|` over the final quarter of
/// the gesture. Series are radians.
pub fn baseline_aoa<T: Real>(series: &BTreeMap<String, Vec<T>>) -> Result<BaselinePick> {
    if series.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut means = BTreeMap::new();
    for (id, s) in series {
        if s.is_empty() {
            return Err(Error::InsufficientData { got: 0, need: 1 });
        }
        let tail = s.len().div_ceil(4);
        let window = &s[s.len() - tail..];
        let mean = window.iter().map(|a| a.abs()).sum::<T>() / lit(tail as f64);
        means.insert(id.as_str(), mean);
    }
    Ok(pick_extreme(means, |a, b| a < b))
}
