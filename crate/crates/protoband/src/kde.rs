//! Kernel density estimation over unit-hypercube points, and the
//! good/bad-density proposal rule built on top of it.
//!
//! The model is a product-kernel Gaussian KDE with per-dimension Scott's-rule
//! bandwidths. Proposals are drawn from the "good" model with widened
//! bandwidths and ranked by the ratio of good to bad density, which steers
//! sampling toward regions that performed well without abandoning coverage.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::hpspace::UnitPoint;
use crate::{Error, Result};

/// Lower clamp on the bad-model density when forming the ratio.
const DENSITY_FLOOR: f64 = 1e-32;
/// Lower clamp on per-dimension bandwidths.
const BANDWIDTH_FLOOR: f64 = 1e-3;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Fitted density model: the observations and one bandwidth per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub points: Vec<UnitPoint>,
    pub bandwidths: Vec<f64>,
}

/// One completed observation used to fit the models.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Used only to break value ties (earlier wins).
    pub id: u64,
    pub point: UnitPoint,
    pub value: f64,
}

/// Knobs of the model-based sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Candidates drawn per proposal.
    pub n_candidates: usize,
    /// Bandwidth widening applied when drawing candidates (not when scoring).
    pub bandwidth_factor: f64,
    /// Fraction of configurations sampled uniformly regardless of the model.
    pub random_fraction: f64,
    /// Fraction of observations forming the good model.
    pub good_quantile: f64,
    /// Minimum observations required before fitting; `None` means `d + 1`.
    pub min_points_per_model: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_candidates: 64,
            bandwidth_factor: 3.0,
            random_fraction: 1.0 / 3.0,
            good_quantile: 0.15,
            min_points_per_model: None,
        }
    }
}

impl SamplerConfig {
    pub fn min_points(&self, dim: usize) -> usize {
        self.min_points_per_model.unwrap_or(dim + 1)
    }
}

/// Fit a product-kernel Gaussian KDE.
///
/// Bandwidths follow Scott's rule per dimension, `n^(-1/(d+4)) * sd_j`,
/// floored at `1e-3` so degenerate dimensions stay usable.
pub fn fit(points: &[UnitPoint]) -> Result<KdeModel> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Kde("cannot fit on zero points".into()));
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::Kde("points must have at least one dimension".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::Kde(format!(
                "point {i} has {} dims, expected {d}",
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite() || !(0.0..=1.0).contains(x)) {
            return Err(Error::Kde(format!("point {i} outside the unit cube")));
        }
    }
    let scott = (n as f64).powf(-1.0 / (d as f64 + 4.0));
    let mut bandwidths = Vec::with_capacity(d);
    for j in 0..d {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>();
            (ss / (n as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        bandwidths.push((scott * sd).max(BANDWIDTH_FLOOR));
    }
    Ok(KdeModel { points: points.to_vec(), bandwidths })
}

impl KdeModel {
    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    /// Natural log of [`density`](Self::density), computed with a
    /// log-sum-exp so far-away queries stay finite.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Kde(format!(
                "query has {} dims, model has {}",
                x.len(),
                self.dim()
            )));
        }
        let n = self.points.len() as f64;
        let mut terms = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let mut log_k = 0.0;
            for j in 0..self.dim() {
                let h = self.bandwidths[j];
                let z = (x[j] - p[j]) / h;
                log_k += -0.5 * z * z - h.ln() - 0.5 * LN_2PI;
            }
            terms.push(log_k);
        }
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        Ok(max + sum.ln() - n.ln())
    }

    /// Mean of per-point Gaussian product kernels at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }
}

/// Partition observations into (good, bad) by value.
///
/// The good set holds the top `max(min_points, ceil(quantile * n))`
/// observations, ordered by value descending with earlier ids winning ties;
/// everything else is bad. If fewer observations exist than the floor, all
/// of them are good.
pub fn split_good_bad(
    observations: &[Observation],
    good_quantile: f64,
    min_points: usize,
) -> (Vec<Observation>, Vec<Observation>) {
    let n = observations.len();
    let by_quantile = (good_quantile * n as f64).ceil() as usize;
    let n_good = min_points.max(by_quantile).min(n);
    let mut sorted: Vec<Observation> = observations.to_vec();
    sorted.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    let bad = sorted.split_off(n_good);
    (sorted, bad)
}

/// Draw candidates from the good model and return the one maximizing the
/// good/bad density ratio.
///
/// Candidates are sampled by picking a support point uniformly and adding
/// per-dimension Gaussian noise with the widened bandwidth, clamped into the
/// cube. With no bad model the score degenerates to the good density alone.
/// Ties keep the earliest candidate, so the result is a deterministic
/// function of the models, config, and generator state.
pub fn propose<R: Rng + ?Sized>(
    good: &KdeModel,
    bad: Option<&KdeModel>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<UnitPoint> {
    if cfg.n_candidates == 0 {
        return Err(Error::Kde("n_candidates must be positive".into()));
    }
    if let Some(b) = bad {
        if b.dim() != good.dim() {
            return Err(Error::Kde("good and bad models disagree on dimension".into()));
        }
    }
    let d = good.dim();
    let ln_floor = DENSITY_FLOOR.ln();
    let mut best: Option<(f64, UnitPoint)> = None;
    for _ in 0..cfg.n_candidates {
        let anchor = rng.random_range(0..good.points.len());
        let mut x = Vec::with_capacity(d);
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(rng);
            let v = good.points[anchor][j] + cfg.bandwidth_factor * good.bandwidths[j] * noise;
            x.push(v.clamp(0.0, 1.0));
        }
        let lg = good.log_density(&x)?;
        let score = match bad {
            Some(b) => lg - b.log_density(&x)?.max(ln_floor),
            None => lg,
        };
        match &best {
            Some((s, _)) if *s >= score => {}
            _ => best = Some((score, x)),
        }
    }
    Ok(best.expect("n_candidates > 0").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct-summation density, written independently of the model code.
    fn brute_density(points: &[Vec<f64>], bw: &[f64], x: &[f64]) -> f64 {
        let mut total = 0.0;
        for p in points {
            let mut k = 1.0;
            for j in 0..x.len() {
                let z = (x[j] - p[j]) / bw[j];
                k *= (-0.5 * z * z).exp() / (bw[j] * (2.0 * std::f64::consts::PI).sqrt());
            }
            total += k;
        }
        total / points.len() as f64
    }

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
    }

    #[test]
    fn density_matches_direct_summation() {
        for &d in &[1usize, 5, 16] {
            let points = random_points(50, d, 11 + d as u64);
            let model = fit(&points).unwrap();
            let queries = random_points(20, d, 900 + d as u64);
            for q in &queries {
                let got = model.density(q).unwrap();
                let want = brute_density(&points, &model.bandwidths, q);
                assert!(
                    (got - want).abs() <= 1e-9,
                    "d={d}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn scott_bandwidths_with_floor() {
        let points = vec![vec![0.2, 0.5], vec![0.4, 0.5], vec![0.6, 0.5], vec![0.8, 0.5]];
        let model = fit(&points).unwrap();
        let scott = 4f64.powf(-1.0 / 6.0);
        let mean = 0.5;
        let ss: f64 = [0.2f64, 0.4, 0.6, 0.8].iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / 3.0).sqrt();
        assert!((model.bandwidths[0] - scott * sd).abs() < 1e-15);
        // Second dimension is degenerate: the floor applies.
        assert_eq!(model.bandwidths[1], 1e-3);
    }

    #[test]
    fn single_point_fit_peaks_at_the_point() {
        let p = vec![0.37, 0.81];
        let model = fit(std::slice::from_ref(&p)).unwrap();
        let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
        for i in 0..=100 {
            for j in 0..=100 {
                let q = [i as f64 / 100.0, j as f64 / 100.0];
                let v = model.log_density(&q).unwrap();
                if v > best.0 {
                    best = (v, (q[0], q[1]));
                }
            }
        }
        assert_eq!(best.1, (0.37, 0.81));
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit(&[]).is_err());
        assert!(fit(&[vec![0.1, 0.2], vec![0.3]]).is_err());
        assert!(fit(&[vec![0.1, 1.2]]).is_err());
        assert!(fit(&[vec![f64::NAN]]).is_err());
    }

    fn obs(id: u64, value: f64) -> Observation {
        Observation { id, point: vec![id as f64 / 100.0], value }
    }

    #[test]
    fn split_sizes() {
        // 20 observations at quantile 0.15 with floor d+1=6 gives 6 good.
        let observations: Vec<Observation> =
            (0..20).map(|i| obs(i, i as f64)).collect();
        let (good, bad) = split_good_bad(&observations, 0.15, 6);
        assert_eq!((good.len(), bad.len()), (6, 14));
        assert!(good.iter().all(|o| o.value >= 14.0));

        // Exactly the floor available: everything is good, bad is empty.
        let observations: Vec<Observation> = (0..6).map(|i| obs(i, i as f64)).collect();
        let (good, bad) = split_good_bad(&observations, 0.15, 6);
        assert_eq!((good.len(), bad.len()), (6, 0));
    }

    #[test]
    fn split_breaks_ties_by_earlier_id() {
        let observations = vec![obs(3, 1.0), obs(1, 1.0), obs(2, 1.0), obs(0, 0.5)];
        let (good, _) = split_good_bad(&observations, 0.25, 2);
        assert_eq!(good.iter().map(|o| o.id).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn proposals_stay_in_cube_and_are_deterministic() {
        let good = fit(&random_points(12, 4, 5)).unwrap();
        let bad = fit(&random_points(30, 4, 6)).unwrap();
        let cfg = SamplerConfig::default();
        let a = propose(&good, Some(&bad), &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = propose(&good, Some(&bad), &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
        let c = propose(&good, Some(&bad), &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn proposals_prefer_the_good_region() {
        // Good mass near the origin corner, bad mass near the far corner.
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut near = |center: f64| -> Vec<Vec<f64>> {
            (0..10)
                .map(|_| {
                    (0..d)
                        .map(|_| (center + 0.06 * rng.random::<f64>()).clamp(0.0, 1.0))
                        .collect()
                })
                .collect()
        };
        let good = fit(&near(0.1)).unwrap();
        let bad = fit(&near(0.84)).unwrap();
        let cfg = SamplerConfig::default();
        let mut wins = 0;
        let mut prop_rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = propose(&good, Some(&bad), &cfg, &mut prop_rng).unwrap();
            let to_good: f64 = x.iter().map(|v| (v - 0.13) * (v - 0.13)).sum();
            let to_bad: f64 = x.iter().map(|v| (v - 0.87) * (v - 0.87)).sum();
            if to_good < to_bad {
                wins += 1;
            }
        }
        assert!(wins >= 95, "only {wins}/100 proposals landed nearer the good corner");
    }

    #[test]
    fn empty_bad_model_degenerates_to_good_density() {
        let good = fit(&random_points(8, 2, 21)).unwrap();
        let cfg = SamplerConfig { n_candidates: 16, ..SamplerConfig::default() };
        // Reproduce the internal candidate stream and pick the argmax of the
        // good density alone; propose with bad=None must agree.
        let picked = propose(&good, None, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..cfg.n_candidates {
            let anchor = rng.random_range(0..good.points.len());
            let mut x = Vec::new();
            for j in 0..good.dim() {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let v =
                    good.points[anchor][j] + cfg.bandwidth_factor * good.bandwidths[j] * noise;
                x.push(v.clamp(0.0, 1.0));
            }
            let s = good.log_density(&x).unwrap();
            match &best {
                Some((bs, _)) if *bs >= s => {}
                _ => best = Some((s, x)),
            }
        }
        assert_eq!(picked, best.unwrap().1);
    }

    #[test]
    fn density_is_positive_in_log_space() {
        let model = fit(&random_points(25, 16, 77)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        for _ in 0..200 {
            let q: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
            let ld = model.log_density(&q).unwrap();
            assert!(ld.is_finite());
            assert!(model.density(&q).unwrap() > 0.0);
        }
    }
}
