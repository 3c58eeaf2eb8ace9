use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::decision_fn::{fd_gradient, DecisionFunction};
use crate::seed::derive_rng;
use crate::{math, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StraightnessConfig {
    pub n_samples: usize,
    /// Euler step along the normalized gradient.
    pub step: f64,
    pub fd_step: f64,
    /// Gradient norms at or below this count as stationary.
    pub stationary_tol: f64,
    pub seed: u64,
}

impl Default for StraightnessConfig {
    fn default() -> Self {
        StraightnessConfig { n_samples: 100, step: 1e-3, fd_step: 1e-6, stationary_tol: 1e-12, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StraightnessReport {
    /// Per traced sample: the flow line's largest distance from its chord.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    /// Samples whose start point was stationary.
    pub skipped_stationary: usize,
    /// Flow lines that stopped at an interior stationary point.
    pub interior_stationary: usize,
}

/// Traces normalized finite-difference gradient flow from random points of
/// `region` until it leaves the region or stalls, and measures how far each
/// flow line strays from the chord between its endpoints.
pub fn gradient_straightness_check(
    df: &dyn DecisionFunction,
    region: &[(f64, f64)],
    cfg: &StraightnessConfig,
) -> Result<StraightnessReport> {
    if region.len() != df.schema().len() || !df.schema().all_numeric() {
        return Err(Error::Unsupported(String::from("straightness needs a numeric region matching the schema")));
    }
    if cfg.n_samples == 0 || !(cfg.step > 0.0) || !(cfg.fd_step > 0.0) {
        return Err(Error::InvalidParams(String::from("samples, step and fd_step must be positive")));
    }
    let mut rng = derive_rng(cfg.seed, "straightness", 0);
    let diameter = math::sqrt(region.iter().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum());
    // a flow of unit speed leaves the box within its diameter, with headroom
    let max_steps = (2.0 * diameter / cfg.step) as usize + 1;
    let inside = |x: &[f64]| x.iter().zip(region).all(|(&v, &(lo, hi))| v >= lo && v <= hi);

    let mut report = StraightnessReport {
        deviations: Vec::with_capacity(cfg.n_samples),
        max_deviation: 0.0,
        mean_deviation: 0.0,
        skipped_stationary: 0,
        interior_stationary: 0,
    };
    for _ in 0..cfg.n_samples {
        let start: Vec<f64> = region.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        if math::norm(&fd_gradient(df, &start, cfg.fd_step)) <= cfg.stationary_tol {
            report.skipped_stationary += 1;
            continue;
        }
        let mut path = Vec::new();
        path.push(start.clone());
        let mut x = start;
        for _ in 0..max_steps {
            let g = fd_gradient(df, &x, cfg.fd_step);
            let n = math::norm(&g);
            if n <= cfg.stationary_tol {
                report.interior_stationary += 1;
                break;
            }
            let next: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v + cfg.step * d / n).collect();
            if !inside(&next) {
                break;
            }
            path.push(next.clone());
            x = next;
        }
        report.deviations.push(chord_deviation(&path));
    }
    if !report.deviations.is_empty() {
        report.max_deviation = report.deviations.iter().copied().fold(0.0, f64::max);
        report.mean_deviation = report.deviations.iter().sum::<f64>() / report.deviations.len() as f64;
    }
    Ok(report)
}

/// Largest distance of any path point from the segment joining its ends.
fn chord_deviation(path: &[Vec<f64>]) -> f64 {
    let a = &path[0];
    let b = &path[path.len() - 1];
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let len2 = math::dot(&ab, &ab);
    path.iter()
        .map(|p| {
            let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
            let t = if len2 > 0.0 { (math::dot(&ap, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d: Vec<f64> = ap.iter().zip(&ab).map(|(u, v)| u - t * v).collect();
            math::norm(&d)
        })
        .fold(0.0, f64::max)
}
