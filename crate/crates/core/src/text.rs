//! Phrase normalization shared by every module that compares labels.

use unicode_normalization::UnicodeNormalization;

/// Normalizes a raw phrase into the canonical label form.
///
/// The input is NFC-composed and lowercased. Only alphabetic characters,
/// numeric characters, hyphens and whitespace survive; whitespace runs
/// collapse to a single space and the result is trimmed. An empty string
/// means nothing survived and callers treat it as invalid.
pub fn normalize_phrase(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfc().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if c.is_alphabetic() || c.is_numeric() || c == '-' {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Returns `true` if `label` is already in normalized form and non-empty.
pub fn is_normalized(label: &str) -> bool {
    !label.is_empty() && normalize_phrase(label) == label
}

/// Normalizes a line and splits it on spaces.
pub fn tokenize(line: &str) -> Vec<String> {
    normalize_phrase(line)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_punctuation_and_collapses_whitespace() {
        assert_eq!(normalize_phrase("  Granite   Countertops! "), "granite countertops");
        assert_eq!(normalize_phrase("mid-century"), "mid-century");
        assert_eq!(normalize_phrase("\tWalk-in\n closet "), "walk-in closet");
    }

    // U+2014 EM DASH is Pd (dash punctuation), not the hyphen-minus in the
    // keep-set, and U+26F3 FLAG IN HOLE is So. Both are dropped; the space
    // before the flag becomes trailing and is trimmed.
    #[test]
    fn em_dash_and_symbols_are_removed() {
        assert_eq!(normalize_phrase("Golf—Course ⛳"), "golfcourse");
    }

    #[test]
    fn composes_to_nfc() {
        // "e" + COMBINING ACUTE ACCENT composes to U+00E9.
        assert_eq!(normalize_phrase("Cafe\u{301}"), "caf\u{e9}");
        assert_eq!(normalize_phrase("CAF\u{c9}"), "caf\u{e9}");
    }

    #[test]
    fn nothing_survives() {
        assert_eq!(normalize_phrase("!!!"), "");
        assert_eq!(normalize_phrase("   "), "");
        assert!(!is_normalized(""));
    }

    #[test]
    fn digits_kept() {
        assert_eq!(normalize_phrase("2-Car Garage"), "2-car garage");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Hardwood floors, open layout"),
            vec!["hardwood", "floors", "open", "layout"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("MID-CENTURY  home"), vec!["mid-century", "home"]);
    }

    #[test]
    fn idempotent() {
        for raw in ["  A  b ", "Golf—Course ⛳", "x-y z", "ÅNGSTRÖM"] {
            let once = normalize_phrase(raw);
            assert_eq!(normalize_phrase(&once), once);
        }
    }
}
