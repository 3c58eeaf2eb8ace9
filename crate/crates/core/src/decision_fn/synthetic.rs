//! Analytic decision surfaces used as benchmarks and theorem fixtures.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{DecisionFunction, Feature, Schema};
use crate::math::{dot, exp, norm, powi};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticKind {
    /// Two Gaussian bumps on a constant floor. `start` is where subjects begin;
    /// the taller bump must be the farther one.
    Bimodal1d {
        base: f64,
        left_center: f64,
        left_height: f64,
        right_center: f64,
        right_height: f64,
        width: f64,
        start: f64,
    },
    /// `base + x_slope * x + y_coef * y^y_power` on `y >= 0`.
    Curved2dMonotone { base: f64, x_slope: f64, y_coef: f64, y_power: i32 },
    /// `bias + w . x`.
    Linear { bias: f64, weights: Vec<f64> },
    /// `scale / (1 + exp(-(bias + w . x)))`.
    Logistic { bias: f64, weights: Vec<f64>, scale: f64 },
    /// `base + slope * |x - center|`.
    Radial { center: Vec<f64>, base: f64, slope: f64 },
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::Bimodal1d { .. } => "bimodal1d",
            SyntheticKind::Curved2dMonotone { .. } => "curved2d_monotone",
            SyntheticKind::Linear { .. } => "linear",
            SyntheticKind::Logistic { .. } => "logistic",
            SyntheticKind::Radial { .. } => "radial",
        }
    }
}

/// Named parameter sets shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig1Default,
    Fig2Default,
    LinearDefault,
    LogisticDefault,
    RadialDefault,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::Fig1Default, Preset::Fig2Default, Preset::LinearDefault, Preset::LogisticDefault, Preset::RadialDefault];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Default => "fig1_default",
            Preset::Fig2Default => "fig2_default",
            Preset::LinearDefault => "linear_default",
            Preset::LogisticDefault => "logistic_default",
            Preset::RadialDefault => "radial_default",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn build(self) -> Synthetic {
        let square = vec![(0.0, 10.0), (0.0, 10.0)];
        let (kind, domain) = match self {
            Preset::Fig1Default => (
                SyntheticKind::Bimodal1d {
                    base: 0.1,
                    left_center: -2.0,
                    left_height: 1.0,
                    right_center: 3.0,
                    right_height: 1.5,
                    width: 1.0,
                    start: 0.0,
                },
                vec![(-6.0, 8.0)],
            ),
            Preset::Fig2Default => {
                (SyntheticKind::Curved2dMonotone { base: 1.0, x_slope: 0.6, y_coef: 0.05, y_power: 3 }, square)
            }
            Preset::LinearDefault => (SyntheticKind::Linear { bias: 20.0, weights: vec![1.0, 0.5] }, square),
            Preset::LogisticDefault => {
                (SyntheticKind::Logistic { bias: -3.0, weights: vec![0.4, 0.2], scale: 1.0 }, square)
            }
            Preset::RadialDefault => (SyntheticKind::Radial { center: vec![5.0, 5.0], base: 1.0, slope: 1.0 }, square),
        };
        make_synthetic(kind, domain).expect("shipped presets satisfy their shape contracts")
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    kind: SyntheticKind,
    domain: Vec<(f64, f64)>,
    schema: Schema,
}

impl Synthetic {
    pub fn kind(&self) -> &SyntheticKind {
        &self.kind
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Grid-search local maxima of a 1-D surface over its domain.
    pub fn local_maxima_1d(&self, samples: usize) -> Vec<f64> {
        let (lo, hi) = self.domain[0];
        let xs: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| self.value(&[x])).collect();
        (1..samples - 1).filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1]).map(|i| xs[i]).collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + exp(-z))
}

fn gauss(x: f64, c: f64, w: f64) -> f64 {
    let d = (x - c) / w;
    exp(-0.5 * d * d)
}

impl DecisionFunction for Synthetic {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SyntheticKind::Bimodal1d { base, left_center, left_height, right_center, right_height, width, .. } => {
                base + left_height * gauss(x[0], *left_center, *width) + right_height * gauss(x[0], *right_center, *width)
            }
            SyntheticKind::Curved2dMonotone { base, x_slope, y_coef, y_power } => {
                base + x_slope * x[0] + y_coef * powi(x[1], *y_power)
            }
            SyntheticKind::Linear { bias, weights } => bias + dot(weights, x),
            SyntheticKind::Logistic { bias, weights, scale } => scale * sigmoid(bias + dot(weights, x)),
            SyntheticKind::Radial { center, base, slope } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                base + slope * norm(&d)
            }
        }
    }
}

fn invalid(kind: &str, msg: &str) -> Error {
    Error::InvalidParams(format!("{kind}: {msg}"))
}

/// Builds a synthetic surface over `domain` (one `(lo, hi)` box per axis),
/// checking the kind's shape contract and positivity on a grid of the box.
pub fn make_synthetic(kind: SyntheticKind, domain: Vec<(f64, f64)>) -> Result<Synthetic> {
    let name = kind.name();
    if domain.is_empty() || domain.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(invalid(name, "domain must be a nonempty box with lo < hi"));
    }
    let dims = domain.len();
    let expect_dims = |d: usize| if dims == d { Ok(()) } else { Err(invalid(name, &format!("needs a {d}-D domain"))) };
    match &kind {
        SyntheticKind::Bimodal1d { base, left_center, left_height, right_center, right_height, width, start } => {
            expect_dims(1)?;
            if !(*width > 0.0 && *left_height > 0.0 && *right_height > 0.0 && *base > 0.0) {
                return Err(invalid(name, "base, heights and width must be positive"));
            }
            if left_center >= right_center {
                return Err(invalid(name, "left peak must lie left of the right peak"));
            }
            if left_height == right_height {
                return Err(invalid(name, "peak heights must differ"));
            }
            let (near, far) = if (start - left_center).abs() <= (right_center - start).abs() {
                (left_height, right_height)
            } else {
                (right_height, left_height)
            };
            if far <= near {
                return Err(invalid(name, "the taller peak must be the one farther from the start"));
            }
        }
        SyntheticKind::Curved2dMonotone { x_slope, y_coef, y_power, base } => {
            expect_dims(2)?;
            if !(*x_slope > 0.0 && *y_coef > 0.0 && *base > 0.0) || *y_power < 2 {
                return Err(invalid(name, "slopes and base must be positive and y_power >= 2"));
            }
            if domain[1].0 < 0.0 {
                return Err(invalid(name, "domain must have y >= 0 for monotonicity"));
            }
        }
        SyntheticKind::Linear { weights, .. } | SyntheticKind::Logistic { weights, .. } => {
            if weights.len() != dims || weights.iter().all(|w| *w == 0.0) {
                return Err(invalid(name, "one weight per axis, not all zero"));
            }
            if let SyntheticKind::Logistic { scale, .. } = &kind {
                if !(*scale > 0.0) {
                    return Err(invalid(name, "scale must be positive"));
                }
            }
        }
        SyntheticKind::Radial { center, base, slope } => {
            if center.len() != dims || !(*base > 0.0 && *slope > 0.0) {
                return Err(invalid(name, "center must match the domain and base, slope be positive"));
            }
        }
    }
    let names = ["x", "y", "z"];
    let schema = Schema::new(
        domain
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                let n: String = names.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{i}"));
                Feature::numeric(&n, lo, hi)
            })
            .collect(),
    );
    let s = Synthetic { kind, domain, schema };
    check_positive_on_grid(&s)?;
    if let SyntheticKind::Bimodal1d { .. } = s.kind {
        let peaks = s.local_maxima_1d(4001);
        if peaks.len() != 2 {
            return Err(invalid(name, &format!("expected two local maxima, found {}", peaks.len())));
        }
    }
    Ok(s)
}

fn check_positive_on_grid(s: &Synthetic) -> Result<()> {
    let per_axis = if s.domain.len() == 1 { 1001 } else { 41 };
    let dims = s.domain.len();
    let total = (0..dims).fold(1usize, |acc, _| acc * per_axis);
    let mut x = vec![0.0; dims];
    for flat in 0..total {
        let mut rest = flat;
        for (d, &(lo, hi)) in s.domain.iter().enumerate() {
            let k = rest % per_axis;
            rest /= per_axis;
            x[d] = lo + (hi - lo) * k as f64 / (per_axis - 1) as f64;
        }
        let v = s.value(&x);
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(s.kind.name(), "not positive on its domain"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision_fn::fd_gradient;

    #[test]
    fn linear_orthogonal_weight() {
        let f = make_synthetic(SyntheticKind::Linear { bias: 1.0, weights: vec![1.0, 0.0] }, vec![(0.0, 10.0); 2]).unwrap();
        assert_eq!(f.evaluate(&[0.0, 5.0]), Ok(1.0));
    }

    #[test]
    fn bimodal_right_peak_height() {
        let f = Preset::Fig1Default.build();
        // at the right center: base + right_height + left_height * exp(-0.5 * 5^2)
        let expected = 0.1 + 1.5 + 1.0 * libm::exp(-12.5);
        assert!((f.evaluate(&[3.0]).unwrap() - expected).abs() < 1e-15);
        let peaks = f.local_maxima_1d(14001);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0] + 2.0).abs() < 1e-2 && (peaks[1] - 3.0).abs() < 1e-2, "{peaks:?}");
    }

    #[test]
    fn bimodal_rejects_equal_heights_and_near_tall_peak() {
        let dom = vec![(-6.0, 8.0)];
        let mk = |lh: f64, rh: f64| SyntheticKind::Bimodal1d {
            base: 0.1,
            left_center: -2.0,
            left_height: lh,
            right_center: 3.0,
            right_height: rh,
            width: 1.0,
            start: 0.0,
        };
        assert!(make_synthetic(mk(1.0, 1.0), dom.clone()).is_err());
        assert!(make_synthetic(mk(1.5, 1.0), dom.clone()).is_err());
        assert!(make_synthetic(mk(1.0, 1.5), dom).is_ok());
    }

    #[test]
    fn bimodal_rejects_merged_peaks() {
        let k = SyntheticKind::Bimodal1d {
            base: 0.1,
            left_center: -0.5,
            left_height: 1.0,
            right_center: 0.6,
            right_height: 1.2,
            width: 1.0,
            start: 0.0,
        };
        assert!(make_synthetic(k, vec![(-6.0, 8.0)]).is_err());
    }

    #[test]
    fn curved_is_monotone_on_grid() {
        let f = Preset::Fig2Default.build();
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (i as f64 * 0.5, j as f64 * 0.5);
                let v = f.value(&[x, y]);
                assert!(f.value(&[x + 0.5, y]) >= v);
                assert!(f.value(&[x, y + 0.5]) >= v);
            }
        }
    }

    #[test]
    fn linear_gradients_are_parallel() {
        let f = Preset::LinearDefault.build();
        let g0 = fd_gradient(&f, &[1.0, 1.0], 1e-4);
        for k in 0..100 {
            let x = [k as f64 * 0.1, 10.0 - k as f64 * 0.07];
            let g = fd_gradient(&f, &x, 1e-4);
            let cos = dot(&g, &g0) / (norm(&g) * norm(&g0));
            let angle = libm::acos(cos.min(1.0));
            assert!(angle <= 1e-9, "angle {angle}");
        }
    }

    #[test]
    fn radial_gradient_points_away_from_center() {
        let f = Preset::RadialDefault.build();
        let x = [8.0, 1.0];
        let g = fd_gradient(&f, &x, 1e-6);
        let r = [3.0 / 5.0, -4.0 / 5.0];
        assert!((g[0] - r[0]).abs() < 1e-8 && (g[1] - r[1]).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonpositive_surfaces() {
        let k = SyntheticKind::Linear { bias: 1.0, weights: vec![-1.0, 0.0] };
        assert!(make_synthetic(k, vec![(0.0, 10.0); 2]).is_err());
        let k = SyntheticKind::Curved2dMonotone { base: 1.0, x_slope: 0.6, y_coef: 0.05, y_power: 2 };
        assert!(make_synthetic(k, vec![(0.0, 10.0), (-1.0, 10.0)]).is_err());
    }

    #[test]
    fn presets_round_trip_names() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
            let _ = p.build();
        }
    }
}
