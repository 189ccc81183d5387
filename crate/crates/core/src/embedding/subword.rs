//! Character n-gram extraction and bucket hashing.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a, 64-bit, over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Character n-grams of `<word>` for every length in `min_n..=max_n`.
///
/// N-grams are emitted length-major: all n-grams of length `min_n` left to
/// right, then length `min_n + 1`, and so on. Duplicates are kept.
pub fn ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        if n > wrapped.len() {
            break;
        }
        out.extend(wrapped.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}

/// Bucket indices (in `0..buckets`) of the n-grams of `word`.
pub fn subword_ids(word: &str, min_n: usize, max_n: usize, buckets: usize) -> Vec<usize> {
    ngrams(word, min_n, max_n)
        .iter()
        .map(|g| (fnv1a64(g) % buckets as u64) as usize)
        .collect()
}
