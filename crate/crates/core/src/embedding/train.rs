//! Skip-gram with negative sampling over subword-composed center vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingConfig, EmbeddingError, EmbeddingModel, Result, Vocab};
use crate::text::tokenize;

fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `log(sigmoid(x))`, stable for large |x|.
fn log_sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        -((-x).exp().ln_1p())
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// For each target, the derivative of the negative log-likelihood with
/// respect to its score `u_t . h`: `sigmoid(u_t . h) - label`. Target 0 is
/// the positive context, the rest are negatives. Returns the loss too.
fn target_coefficients<F: Float>(h: &[F], targets: &[&[F]], coefs: &mut Vec<F>) -> F {
    coefs.clear();
    let mut loss = F::zero();
    for (j, u) in targets.iter().enumerate() {
        let score = dot(u, h);
        if j == 0 {
            loss = loss - log_sigmoid(score);
            coefs.push(sigmoid(score) - F::one());
        } else {
            loss = loss - log_sigmoid(-score);
            coefs.push(sigmoid(score));
        }
    }
    loss
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut h = vec![0.0; rows[0].len()];
    for r in rows {
        h.iter_mut().zip(r).for_each(|(a, x)| *a += x);
    }
    let n = rows.len() as f64;
    h.iter_mut().for_each(|a| *a /= n);
    h
}

/// Negative SGNS log-likelihood of one (center, context, negatives) draw.
///
/// `center_rows` are the input rows averaged into the center vector (the
/// word row and its subword rows, with multiplicity).
pub fn sgns_loss(center_rows: &[Vec<f64>], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let h = mean_rows(center_rows);
    let targets: Vec<&[f64]> = std::iter::once(context)
        .chain(negatives.iter().map(Vec::as_slice))
        .collect();
    target_coefficients(&h, &targets, &mut Vec::new())
}

/// Analytic gradient of [`sgns_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    /// Gradient with respect to each center row; identical for every row
    /// because the center vector is their mean.
    pub center_row: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradient(center_rows: &[Vec<f64>], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradient {
    let h = mean_rows(center_rows);
    let targets: Vec<&[f64]> = std::iter::once(context)
        .chain(negatives.iter().map(Vec::as_slice))
        .collect();
    let mut coefs = Vec::new();
    target_coefficients(&h, &targets, &mut coefs);
    let n = center_rows.len() as f64;
    let mut center_row = vec![0.0; h.len()];
    for (u, &c) in targets.iter().zip(&coefs) {
        center_row.iter_mut().zip(*u).for_each(|(g, x)| *g += c * x / n);
    }
    let scaled = |c: f64| h.iter().map(|x| c * x).collect::<Vec<_>>();
    SgnsGradient {
        center_row,
        context: scaled(coefs[0]),
        negatives: coefs[1..].iter().map(|&c| scaled(c)).collect(),
    }
}

/// Trains a model on a corpus file with one description per line.
pub fn train(corpus: &Path, cfg: &EmbeddingConfig) -> Result<EmbeddingModel> {
    let reader = BufReader::new(File::open(corpus)?);
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    train_lines(&lines, cfg)
}

/// Trains a model on in-memory lines. Single-threaded and fully
/// determined by `cfg.seed`.
pub fn train_lines<S: AsRef<str>>(lines: &[S], cfg: &EmbeddingConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let tokenized: Vec<Vec<String>> = lines.iter().map(|l| tokenize(l.as_ref())).collect();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for tok in tokenized.iter().flatten() {
        *counts.entry(tok.clone()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let vocab = Vocab::from_counts(counts, cfg.min_count);
    if vocab.is_empty() {
        return Err(EmbeddingError::NoVocabulary(cfg.min_count));
    }
    let sentences: Vec<Vec<usize>> = tokenized
        .iter()
        .map(|toks| toks.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim;
    let vocab_len = vocab.len();
    let bound = 1.0 / dim as f32;
    let input: Vec<f32> = (0..(vocab_len + cfg.buckets) * dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let mut model = EmbeddingModel {
        config: cfg.clone(),
        vocab,
        input,
        output: vec![0.0; vocab_len * dim],
    };
    if cfg.epochs == 0 {
        return Ok(model);
    }

    let rows: Vec<Vec<usize>> = (0..vocab_len)
        .map(|w| model.token_rows(model.vocab.word(w)))
        .collect();
    let total_count = model.vocab.total() as f64;
    let keep_prob: Vec<f64> = (0..vocab_len)
        .map(|w| {
            let f = model.vocab.count(w) as f64 / total_count;
            (cfg.subsample_t / f).sqrt().min(1.0)
        })
        .collect();
    let noise = WeightedIndex::new((0..vocab_len).map(|w| (model.vocab.count(w) as f64).powf(0.75)))
        .expect("vocabulary counts are positive");

    let tokens_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total_tokens = (tokens_per_epoch * cfg.epochs) as f64;
    let mut processed = 0usize;
    let mut scratch = Scratch::new(dim);
    let mut kept = Vec::new();
    for _ in 0..cfg.epochs {
        for sentence in &sentences {
            let lr = (cfg.lr0 * (1.0 - processed as f64 / total_tokens)).max(0.0) as f32;
            processed += sentence.len();
            kept.clear();
            kept.extend(
                sentence
                    .iter()
                    .copied()
                    .filter(|&w| rng.random::<f64>() < keep_prob[w]),
            );
            for pos in 0..kept.len() {
                let span = rng.random_range(1..=cfg.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept.len() - 1);
                for ctx in lo..=hi {
                    if ctx == pos {
                        continue;
                    }
                    scratch.targets.clear();
                    scratch.targets.push(kept[ctx]);
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut rng);
                        if n != kept[ctx] {
                            scratch.targets.push(n);
                        }
                    }
                    sgd_step(&mut model, &rows[kept[pos]], lr, &mut scratch);
                }
            }
        }
    }
    Ok(model)
}

struct Scratch {
    h: Vec<f32>,
    grad_h: Vec<f32>,
    coefs: Vec<f32>,
    targets: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            h: vec![0.0; dim],
            grad_h: vec![0.0; dim],
            coefs: Vec::new(),
            targets: Vec::new(),
        }
    }
}

/// One gradient step on the negative log-likelihood, in place.
///
/// Output rows move by `lr` times their gradient. Input rows move by `lr`
/// times the gradient with respect to the center vector.
fn sgd_step(model: &mut EmbeddingModel, center_rows: &[usize], lr: f32, s: &mut Scratch) {
    let dim = model.config.dim;
    s.h.iter_mut().for_each(|x| *x = 0.0);
    for &r in center_rows {
        let row = &model.input[r * dim..(r + 1) * dim];
        s.h.iter_mut().zip(row).for_each(|(a, x)| *a += x);
    }
    let inv_n = 1.0 / center_rows.len() as f32;
    s.h.iter_mut().for_each(|x| *x *= inv_n);

    {
        let output = &model.output;
        let targets: Vec<&[f32]> = s
            .targets
            .iter()
            .map(|&t| &output[t * dim..(t + 1) * dim])
            .collect();
        target_coefficients(&s.h, &targets, &mut s.coefs);
    }

    s.grad_h.iter_mut().for_each(|x| *x = 0.0);
    for (&t, &c) in s.targets.iter().zip(&s.coefs) {
        let u = &mut model.output[t * dim..(t + 1) * dim];
        for k in 0..dim {
            s.grad_h[k] += c * u[k];
            u[k] -= lr * c * s.h[k];
        }
    }
    // Each composed row takes the full center-vector step (the row gradient
    // scaled by n), as fastText does; a 1/n step starves word rows.
    let step = lr;
    for &r in center_rows {
        let row = &mut model.input[r * dim..(r + 1) * dim];
        row.iter_mut().zip(&s.grad_h).for_each(|(x, g)| *x -= step * g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0f64) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0f64).is_finite());
        assert!(log_sigmoid(800.0f64).abs() < 1e-300);
    }

    // Central differences with step 1e-3 over every parameter coordinate.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps = 1e-3;
        for _ in 0..25 {
            let dim = 6;
            let n_rows = rng.random_range(1..5);
            let rows: Vec<Vec<f64>> = (0..n_rows).map(|_| random_vec(&mut rng, dim)).collect();
            let ctx = random_vec(&mut rng, dim);
            let negs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, dim)).collect();
            let g = sgns_gradient(&rows, &ctx, &negs);
            for k in 0..dim {
                let mut plus = rows.clone();
                let mut minus = rows.clone();
                plus[0][k] += eps;
                minus[0][k] -= eps;
                let fd = (sgns_loss(&plus, &ctx, &negs) - sgns_loss(&minus, &ctx, &negs)) / (2.0 * eps);
                assert!((fd - g.center_row[k]).abs() <= 1e-4 * fd.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let cfg = EmbeddingConfig { dim: 4, buckets: 16, min_count: 1, epochs: 0, ..Default::default() };
        let m = train_lines(&["a b"], &cfg).unwrap();
        assert!(m.output.iter().all(|&x| x == 0.0));
    }

    // Input vectors of words that share contexts converge; a two-word corpus
    // would instead push "a" and "b" apart through the negatives.
    #[test]
    fn shared_context_pulls_words_together() {
        let lines: Vec<&str> = ["a x", "b x", "c y", "d y"].iter().copied().cycle().take(400).collect();
        let base = EmbeddingConfig {
            dim: 16,
            buckets: 256,
            min_count: 1,
            subsample_t: 1.0,
            negatives: 2,
            ..Default::default()
        };
        let untrained = train_lines(&lines, &EmbeddingConfig { epochs: 0, ..base.clone() }).unwrap();
        let trained = train_lines(&lines, &base).unwrap();
        let sim = |m: &EmbeddingModel| {
            cosine(&m.phrase_vector("a").unwrap(), &m.phrase_vector("b").unwrap()).unwrap()
        };
        assert!(sim(&trained) > sim(&untrained));
    }

    #[test]
    fn error_cases() {
        let cfg = EmbeddingConfig::default();
        assert!(matches!(train_lines::<&str>(&[], &cfg), Err(EmbeddingError::EmptyCorpus)));
        assert!(matches!(train_lines(&["", "!!"], &cfg), Err(EmbeddingError::EmptyCorpus)));
        assert!(matches!(
            train_lines(&["a b c"], &cfg),
            Err(EmbeddingError::NoVocabulary(2))
        ));
    }

    #[test]
    fn seeds_control_determinism() {
        let lines = vec!["pool spa deck", "kitchen granite island", "pool deck"];
        let cfg = EmbeddingConfig { dim: 8, buckets: 32, min_count: 1, subsample_t: 1.0, ..Default::default() };
        let a = train_lines(&lines, &cfg).unwrap();
        let b = train_lines(&lines, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_lines(&lines, &EmbeddingConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }
}
