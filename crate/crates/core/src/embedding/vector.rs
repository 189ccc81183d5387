//! Normalized phrase vectors, cosine similarity and exact nearest neighbor.

use super::{EmbeddingError, Result};

/// An L2-normalized vector. A zero raw vector is kept but flagged
/// degenerate and rejected by [`cosine`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    values: Vec<f64>,
    degenerate: bool,
}

impl PhraseVector {
    pub fn from_raw(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let degenerate = !(norm.is_finite() && norm > 0.0);
        if !degenerate {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Self { values, degenerate }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Dot product of two normalized vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &PhraseVector, b: &PhraseVector) -> Result<f64> {
    if a.degenerate || b.degenerate {
        return Err(EmbeddingError::DegenerateVector);
    }
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch(a.dim(), b.dim()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<'a> {
    pub position: usize,
    pub label: &'a str,
    pub similarity: f64,
}

/// Exhaustive argmax of cosine similarity over `index`.
///
/// Ties go to the lexicographically smallest label. Degenerate entries are
/// never returned.
pub fn nearest_neighbor<'a, L: AsRef<str>>(
    index: &'a [(L, PhraseVector)],
    query: &PhraseVector,
) -> Result<Neighbor<'a>> {
    if index.is_empty() {
        return Err(EmbeddingError::EmptyIndex);
    }
    if query.is_degenerate() {
        return Err(EmbeddingError::DegenerateVector);
    }
    let mut best: Option<Neighbor<'a>> = None;
    for (position, (label, vector)) in index.iter().enumerate() {
        if vector.is_degenerate() {
            continue;
        }
        let similarity = cosine(vector, query)?;
        let label = label.as_ref();
        let better = match &best {
            None => true,
            Some(b) => {
                similarity > b.similarity || (similarity == b.similarity && label < b.label)
            }
        };
        if better {
            best = Some(Neighbor { position, label, similarity });
        }
    }
    best.ok_or(EmbeddingError::EmptyIndex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> PhraseVector {
        PhraseVector::from_raw(x.to_vec())
    }

    #[test]
    fn cosine_examples() {
        let a = v(&[3.0, 4.0]);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        let c = cosine(&v(&[1.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((c - 0.70710678).abs() < 1e-8);
        assert!(matches!(
            cosine(&v(&[0.0, 0.0]), &a),
            Err(EmbeddingError::DegenerateVector)
        ));
    }

    #[test]
    fn normalization() {
        let p = v(&[1.0, 2.0, -2.0]);
        let norm: f64 = p.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(v(&[0.0, 0.0]).is_degenerate());
    }

    #[test]
    fn singleton_and_identity() {
        let index = vec![("only".to_string(), v(&[0.0, 1.0]))];
        let n = nearest_neighbor(&index, &v(&[1.0, -0.1])).unwrap();
        assert_eq!(n.label, "only");

        let index = vec![("a", v(&[1.0, 0.0])), ("b", v(&[0.3, 0.7]))];
        let n = nearest_neighbor(&index, &v(&[0.3, 0.7])).unwrap();
        assert_eq!(n.label, "b");
        assert!((n.similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let index = vec![("zeta", v(&[1.0, 0.0])), ("alpha", v(&[1.0, 0.0])), ("mid", v(&[1.0, 0.0]))];
        assert_eq!(nearest_neighbor(&index, &v(&[1.0, 0.0])).unwrap().label, "alpha");
    }

    #[test]
    fn empty_index() {
        let index: Vec<(String, PhraseVector)> = Vec::new();
        assert!(matches!(
            nearest_neighbor(&index, &v(&[1.0])),
            Err(EmbeddingError::EmptyIndex)
        ));
    }

    // Brute force: collect every maximal similarity and take the min label.
    #[test]
    fn matches_rescan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let index: Vec<(String, PhraseVector)> = (0..50)
            .map(|i| {
                // Coarse coordinates force exact ties.
                let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-2..=2) as f64).collect();
                (format!("l{:02}", (i * 37) % 50), PhraseVector::from_raw(raw))
            })
            .collect();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-2..=2) as f64).collect();
            let q = PhraseVector::from_raw(raw);
            if q.is_degenerate() {
                continue;
            }
            let sims: Vec<(f64, &str)> = index
                .iter()
                .filter(|(_, p)| !p.is_degenerate())
                .map(|(l, p)| (cosine(p, &q).unwrap(), l.as_str()))
                .collect();
            let max = sims.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
            let oracle = sims.iter().filter(|s| s.0 == max).map(|s| s.1).min().unwrap();
            let got = nearest_neighbor(&index, &q).unwrap();
            assert_eq!(got.label, oracle);
            assert_eq!(got.similarity, max);
        }
    }
}
