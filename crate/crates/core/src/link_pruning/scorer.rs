use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureExtractor, FeatureVector, LinkSample, PruningError, Result};
use crate::taxonomy::Taxonomy;

/// Probability that `parent` is a valid parent of `child`.
///
/// Implementations must be deterministic and return values in `[0, 1]`.
/// Closures with the same signature are scorers too.
pub trait LinkScorer {
    fn score(&self, child: &str, parent: &str, features: &FeatureVector) -> f64;
}

impl<F> LinkScorer for F
where
    F: Fn(&str, &str, &FeatureVector) -> f64,
{
    fn score(&self, child: &str, parent: &str, features: &FeatureVector) -> f64 {
        self(child, parent, features)
    }
}

/// Scores from foreign scorers, forced into `[0, 1]` (NaN becomes 0).
pub(crate) fn bounded_score(s: &dyn LinkScorer, child: &str, parent: &str, f: &FeatureVector) -> f64 {
    let v = s.score(child, parent, f);
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerTraining {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ScorerTraining {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 0.5,
            seed: 42,
        }
    }
}

/// Logistic regression over [`FeatureVector`] with a bias term.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogisticScorer {
    pub weights: [f64; FeatureVector::LEN],
    pub bias: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedScorer {
    pub scorer: LogisticScorer,
    /// Training log-loss before the first epoch, then after each epoch.
    pub losses: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticScorer {
    fn logit(&self, x: &FeatureVector) -> f64 {
        self.weights.iter().zip(x.to_array()).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean negative log-likelihood.
    pub fn log_loss(&self, data: &[(FeatureVector, bool)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let total: f64 = data
            .iter()
            .map(|(x, y)| {
                let z = self.logit(x);
                if *y {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            })
            .sum();
        total / data.len() as f64
    }

    /// Gradient of [`Self::log_loss`] with respect to (weights, bias).
    pub fn log_loss_gradient(&self, data: &[(FeatureVector, bool)]) -> ([f64; FeatureVector::LEN], f64) {
        let mut gw = [0.0; FeatureVector::LEN];
        let mut gb = 0.0;
        if data.is_empty() {
            return (gw, gb);
        }
        let n = data.len() as f64;
        for (x, y) in data {
            let err = self.probability(x) - f64::from(u8::from(*y));
            for (g, v) in gw.iter_mut().zip(x.to_array()) {
                *g += err * v / n;
            }
            gb += err / n;
        }
        (gw, gb)
    }

    fn sgd_epoch(&mut self, data: &[(FeatureVector, bool)], order: &[usize], lr: f64) {
        for &i in order {
            let (x, y) = &data[i];
            let err = self.probability(x) - f64::from(u8::from(*y));
            for (w, v) in self.weights.iter_mut().zip(x.to_array()) {
                *w -= lr * err * v;
            }
            self.bias -= lr * err;
        }
    }

    /// Seeded SGD from zero weights.
    ///
    /// The rate decays as `lr / (1 + epoch / 10)`. An epoch that would raise
    /// the training loss is undone and retried with half the rate, and the
    /// reduction carries over to later epochs. After ten failed retries the
    /// parameters stay put, so the recorded loss never increases.
    pub fn fit(data: &[(FeatureVector, bool)], cfg: &ScorerTraining) -> Result<TrainedScorer> {
        let pos = data.iter().filter(|(_, y)| *y).count();
        if pos == 0 || pos == data.len() {
            return Err(PruningError::SingleClass);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model = LogisticScorer::default();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut loss = model.log_loss(data);
        let mut losses = vec![loss];
        let mut scale = 1.0;
        for epoch in 0..cfg.epochs {
            let lr = cfg.lr / (1.0 + epoch as f64 / 10.0);
            for _ in 0..=10 {
                order.shuffle(&mut rng);
                let mut next = model.clone();
                next.sgd_epoch(data, &order, lr * scale);
                let next_loss = next.log_loss(data);
                if next_loss <= loss {
                    model = next;
                    loss = next_loss;
                    break;
                }
                scale *= 0.5;
            }
            losses.push(loss);
        }
        Ok(TrainedScorer { scorer: model, losses })
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let s: Self = serde_json::from_reader(r)?;
        if !s.bias.is_finite() || s.weights.iter().any(|w| !w.is_finite()) {
            return Err(PruningError::Malformed {
                line: 0,
                msg: "scorer parameters must be finite".into(),
            });
        }
        Ok(s)
    }
}

impl LinkScorer for LogisticScorer {
    fn score(&self, _child: &str, _parent: &str, features: &FeatureVector) -> f64 {
        self.probability(features)
    }
}

/// Fits a [`LogisticScorer`] on labeled pairs. Parent depths are read from
/// `t`; parents that are not nodes get depth 0.
pub fn fit_reference_scorer(
    samples: &[LinkSample],
    fx: &FeatureExtractor<'_>,
    t: &Taxonomy,
    cfg: &ScorerTraining,
) -> Result<TrainedScorer> {
    let max_depth = t.stats().max_depth;
    let data: Vec<(FeatureVector, bool)> = samples
        .iter()
        .map(|s| (fx.pair_features(t, &s.child, &s.parent, max_depth), s.valid))
        .collect();
    LogisticScorer::fit(&data, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_only(c: f64) -> FeatureVector {
        FeatureVector {
            cosine_sim: c,
            ..Default::default()
        }
    }

    fn mixed_set() -> Vec<(FeatureVector, bool)> {
        (0..40)
            .map(|i| {
                let x = FeatureVector {
                    cosine_sim: ((i * 37) % 19) as f64 / 9.5 - 1.0,
                    trigram_jaccard: ((i * 7) % 11) as f64 / 11.0,
                    token_overlap: (i % 3) as f64 / 3.0,
                    substring_flag: (i % 2) as f64,
                    len_diff: ((i * 5) % 13) as f64 / 13.0,
                    parent_depth_norm: (i % 4) as f64 / 4.0,
                };
                (x, (i * 13) % 7 < 4)
            })
            .collect()
    }

    #[test]
    fn separable_toy_set() {
        let data: Vec<_> = (0..20).map(|i| (cos_only(if i % 2 == 0 { 0.9 } else { 0.1 }), i % 2 == 0)).collect();
        let fit = LogisticScorer::fit(&data, &ScorerTraining::default()).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| (fit.scorer.probability(x) >= 0.5) == *y)
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn identical_features_learn_base_rate() {
        let x = cos_only(0.3);
        let data: Vec<_> = (0..100).map(|i| (x, i < 30)).collect();
        let fit = LogisticScorer::fit(&data, &ScorerTraining::default()).unwrap();
        let p = fit.scorer.probability(&x);
        assert!((p - 0.3).abs() < 0.05, "p = {p}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = mixed_set();
        let m = LogisticScorer {
            weights: [0.4, -1.2, 0.7, 0.3, -0.5, 0.9],
            bias: -0.2,
        };
        let (gw, gb) = m.log_loss_gradient(&data);
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let h = 1e-5;
        for (k, a) in analytic.iter().enumerate() {
            let bump = |d: f64| {
                let mut p = m.clone();
                if k < FeatureVector::LEN {
                    p.weights[k] += d;
                } else {
                    p.bias += d;
                }
                p.log_loss(&data)
            };
            let numeric = (bump(h) - bump(-h)) / (2.0 * h);
            let rel = (a - numeric).abs() / numeric.abs().max(1e-8);
            assert!(rel < 1e-4, "param {k}: analytic {a} numeric {numeric}");
        }
    }

    #[test]
    fn loss_never_increases() {
        let fit = LogisticScorer::fit(
            &mixed_set(),
            &ScorerTraining {
                epochs: 60,
                lr: 5.0,
                seed: 3,
            },
        )
        .unwrap();
        for w in fit.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(fit.losses.last().unwrap() < &fit.losses[0]);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = vec![(cos_only(0.5), true); 3];
        assert!(matches!(
            LogisticScorer::fit(&data, &ScorerTraining::default()),
            Err(PruningError::SingleClass)
        ));
    }

    #[test]
    fn deterministic_and_bounded() {
        let cfg = ScorerTraining::default();
        let a = LogisticScorer::fit(&mixed_set(), &cfg).unwrap().scorer;
        let b = LogisticScorer::fit(&mixed_set(), &cfg).unwrap().scorer;
        assert_eq!(a, b);
        let extreme = LogisticScorer {
            weights: [1e6; 6],
            bias: 1e6,
        };
        for x in [cos_only(-1.0), cos_only(1.0)] {
            let p = extreme.score("a", "b", &x);
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(extreme.log_loss(&[(cos_only(-1.0), false)]).is_finite());
    }

    #[test]
    fn json_round_trip() {
        let s = LogisticScorer::fit(&mixed_set(), &ScorerTraining::default()).unwrap().scorer;
        let mut buf = Vec::new();
        s.save(&mut buf).unwrap();
        assert_eq!(LogisticScorer::load(buf.as_slice()).unwrap(), s);
        assert!(LogisticScorer::load(&b"{\"weights\":[1,2],\"bias\":0}"[..]).is_err());
    }
}
