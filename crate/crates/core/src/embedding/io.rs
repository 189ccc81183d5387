//! Plain-text model file.
//!
//! ```text
//! taxoforge-emb v1 dim=<d> vocab=<V> buckets=<B> ngmin=<a> ngmax=<b> seed=<s>
//! <word> <freq>                      (V lines)
//! <d floats>                         (V + B input rows, then V output rows)
//! ```
//!
//! Floats carry 9 significant digits, which round-trips every `f32`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{EmbeddingConfig, EmbeddingError, EmbeddingModel, Result, Vocab};

const MAGIC: &str = "taxoforge-emb";
const VERSION: &str = "v1";

fn write_row<W: Write>(w: &mut W, row: &[f32]) -> std::io::Result<()> {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            w.write_all(b" ")?;
        }
        write!(w, "{x:.8e}")?;
    }
    w.write_all(b"\n")
}

impl EmbeddingModel {
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        writeln!(
            w,
            "{MAGIC} {VERSION} dim={} vocab={} buckets={} ngmin={} ngmax={} seed={}",
            c.dim,
            self.vocab.len(),
            c.buckets,
            c.ngram_min,
            c.ngram_max,
            c.seed
        )?;
        for i in 0..self.vocab.len() {
            writeln!(w, "{} {}", self.vocab.word(i), self.vocab.count(i))?;
        }
        for row in self.input.chunks(c.dim).chain(self.output.chunks(c.dim)) {
            write_row(&mut w, row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a model file. Training-only settings not stored in the header
    /// take their defaults.
    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(EmbeddingError::Format {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let fail = |line: usize, msg: String| EmbeddingError::Format { line, msg };

        let (_, header) = next("header")?;
        let mut parts = header.split(' ');
        if parts.next() != Some(MAGIC) || parts.next() != Some(VERSION) {
            return Err(fail(1, "bad magic or version".into()));
        }
        let mut fields = HashMap::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| fail(1, format!("bad header field {part:?}")))?;
            let v: u64 = v.parse().map_err(|_| fail(1, format!("bad value in {part:?}")))?;
            fields.insert(k, v);
        }
        let field = |k: &str| fields.get(k).copied().ok_or_else(|| fail(1, format!("missing {k}")));
        let config = EmbeddingConfig {
            dim: field("dim")? as usize,
            buckets: field("buckets")? as usize,
            ngram_min: field("ngmin")? as usize,
            ngram_max: field("ngmax")? as usize,
            seed: field("seed")?,
            ..Default::default()
        };
        let vocab_len = field("vocab")? as usize;
        config.validate().map_err(|e| fail(1, e.to_string()))?;

        let mut entries = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let (n, line) = next("vocabulary entry")?;
            let (word, freq) = line
                .rsplit_once(' ')
                .ok_or_else(|| fail(n, "expected \"word freq\"".into()))?;
            let freq = freq.parse().map_err(|_| fail(n, "bad frequency".into()))?;
            entries.push((word.to_owned(), freq));
        }
        let vocab = Vocab::from_entries(entries);
        if vocab.len() != vocab_len {
            return Err(fail(0, "duplicate vocabulary words".into()));
        }

        let dim = config.dim;
        let mut read_rows = |count: usize| -> Result<Vec<f32>> {
            let mut out = Vec::with_capacity(count * dim);
            for _ in 0..count {
                let (n, line) = next("vector row")?;
                let before = out.len();
                for tok in line.split(' ') {
                    out.push(tok.parse::<f32>().map_err(|_| fail(n, format!("bad float {tok:?}")))?);
                }
                if out.len() - before != dim {
                    return Err(fail(n, format!("expected {dim} values")));
                }
            }
            Ok(out)
        };
        let input = read_rows(vocab_len + config.buckets)?;
        let output = read_rows(vocab_len)?;
        Ok(Self { config, vocab, input, output })
    }
}
