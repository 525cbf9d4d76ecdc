//! Tokenization and string matching helpers shared by alignment and the
//! classifier.
//!
//! The token boundary rule: split on whitespace and punctuation, but keep
//! numbers and date-like sequences such as `2020-10-20` or `1,000` as a
//! single token so that byte offsets survive masking.

/// A word-level token with its byte range in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub fn tokenize(input: &str) -> Vec<Token> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_digit() {
            let start = i;
            i += 1;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_ascii_digit() {
                    i += 1;
                } else if matches!(c, '-' | '/' | '.' | ',' | ':')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1] as char).is_ascii_digit()
                {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                text: input[start..i].to_string(),
                start,
                end: i,
            });
        } else if c.is_ascii_alphabetic() || c == '_' || !c.is_ascii() {
            let start = i;
            while i < bytes.len() {
                let c = input[i..].chars().next().unwrap();
                if c.is_alphanumeric() || c == '_' {
                    i += c.len_utf8();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                text: input[start..i].to_string(),
                start,
                end: i,
            });
        } else {
            i += 1;
        }
    }
    tokens
}

/// Lowercase fold used for identifiers, dictionary keys and token matching.
pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Lowercase and collapse internal whitespace runs to a single space.
pub fn fold_ws(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance divided by the longer length, in `[0, 1]`.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / max_len as f64
}

/// All `(first_token, last_token)` index pairs for n-grams up to `max_n`
/// tokens, ordered by start position then length.
pub fn ngram_spans(token_count: usize, max_n: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    for i in 0..token_count {
        for n in 1..=max_n {
            if i + n > token_count {
                break;
            }
            spans.push((i, i + n - 1));
        }
    }
    spans
}

/// Strips grouping commas and currency symbols from a numeric surface form.
/// Returns the bare numeric string, or `None` if the remainder is not a
/// plain integer or decimal.
pub fn strip_number(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    let cleaned: String = trimmed
        .chars()
        .filter(|c| !matches!(c, '$' | '€' | '£' | ','))
        .collect();
    let cleaned = cleaned.trim().to_string();
    if cleaned.is_empty() {
        return None;
    }
    let body = cleaned.strip_prefix('-').unwrap_or(&cleaned);
    let mut dots = 0;
    for c in body.chars() {
        if c == '.' {
            dots += 1;
        } else if !c.is_ascii_digit() {
            return None;
        }
    }
    if dots > 1 || body.is_empty() || body == "." {
        return None;
    }
    if !body.chars().any(|c| c.is_ascii_digit()) {
        return None;
    }
    Some(cleaned)
}

/// Numeric equality of two surface forms after stripping, tolerant of
/// grouping separators and a trailing fractional zero.
pub fn numbers_equal(a: &str, b: &str) -> bool {
    match (strip_number(a), strip_number(b)) {
        (Some(x), Some(y)) => match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) => x == y,
            _ => false,
        },
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_whitespace_and_punctuation() {
        let toks = tokenize("What's the current temperature in Seattle?");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec!["What", "s", "the", "current", "temperature", "in", "Seattle"]
        );
    }

    #[test]
    fn keeps_dates_and_numbers_whole() {
        let toks = tokenize("orders since 2020-10-20 over 1,000 dollars");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec!["orders", "since", "2020-10-20", "over", "1,000", "dollars"]
        );
    }

    #[test]
    fn token_offsets_match_source() {
        let src = "from Seattle to Portland";
        for t in tokenize(src) {
            assert_eq!(&src[t.start..t.end], t.text);
        }
    }

    #[test]
    fn hyphenated_words_split() {
        let texts: Vec<String> = tokenize("Seattle-based")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(texts, vec!["Seattle", "based"]);
    }

    #[test]
    fn strip_number_cases() {
        assert_eq!(strip_number("1,000"), Some("1000".to_string()));
        assert_eq!(strip_number("$1,000.50"), Some("1000.50".to_string()));
        assert_eq!(strip_number("-5"), Some("-5".to_string()));
        assert_eq!(strip_number("abc"), None);
        assert_eq!(strip_number("1.2.3"), None);
    }

    #[test]
    fn numbers_equal_strips_grouping() {
        assert!(numbers_equal("1,000", "1000"));
        assert!(numbers_equal("1000.0", "1000"));
        assert!(!numbers_equal("1000", "1001"));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert!(normalized_edit_distance("seattle", "seatle") < 0.2);
        assert_eq!(normalized_edit_distance("", ""), 0.0);
    }
}
