//! Tokenizer for the restricted SQL dialect and for API call targets.

use super::SqlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or keyword; keyword recognition happens in the parser,
    /// case-insensitively.
    Ident(String),
    /// Numeric literal, raw text preserved (may carry a leading minus).
    Number(String),
    /// Single-quoted string with the outer quotes stripped and `''`
    /// escapes resolved.
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Semicolon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

pub fn lex(input: &str) -> Result<Vec<Token>, SqlError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '\'' => {
                let mut value = String::new();
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(SqlError::parse(start, "unterminated string literal"));
                    }
                    if bytes[i] == b'\'' {
                        if i + 1 < bytes.len() && bytes[i + 1] == b'\'' {
                            value.push('\'');
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    } else {
                        let ch = input[i..].chars().next().unwrap();
                        value.push(ch);
                        i += ch.len_utf8();
                    }
                }
                TokenKind::Str(value)
            }
            '0'..='9' => {
                i = scan_number(input, i);
                TokenKind::Number(input[start..i].to_string())
            }
            '-' if i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit() => {
                i = scan_number(input, i + 1);
                TokenKind::Number(input[start..i].to_string())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                TokenKind::Ident(input[start..i].to_string())
            }
            ',' => {
                i += 1;
                TokenKind::Comma
            }
            '.' => {
                i += 1;
                TokenKind::Dot
            }
            '(' => {
                i += 1;
                TokenKind::LParen
            }
            ')' => {
                i += 1;
                TokenKind::RParen
            }
            '*' => {
                i += 1;
                TokenKind::Star
            }
            ';' => {
                i += 1;
                TokenKind::Semicolon
            }
            '=' => {
                i += 1;
                TokenKind::Eq
            }
            '<' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Le
                } else if i < bytes.len() && bytes[i] == b'>' {
                    i += 1;
                    TokenKind::Ne
                } else {
                    TokenKind::Lt
                }
            }
            '>' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            '!' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Ne
                } else {
                    return Err(SqlError::parse(start, "unexpected character '!'"));
                }
            }
            other => {
                return Err(SqlError::parse(
                    start,
                    format!("unexpected character '{other}'"),
                ));
            }
        };
        tokens.push(Token {
            kind,
            start,
            end: i,
        });
    }
    Ok(tokens)
}

// Digits with at most one fractional part; the leading digit is already
// confirmed by the caller.
fn scan_number(input: &str, mut i: usize) -> usize {
    let bytes = input.as_bytes();
    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
        i += 1;
    }
    if i + 1 < bytes.len() && bytes[i] == b'.' && (bytes[i + 1] as char).is_ascii_digit() {
        i += 1;
        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
            i += 1;
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(input: &str) -> Vec<TokenKind> {
        lex(input).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_basic_query() {
        let toks = kinds("SELECT t FROM temperature WHERE city='Seattle'");
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("SELECT".into()),
                TokenKind::Ident("t".into()),
                TokenKind::Ident("FROM".into()),
                TokenKind::Ident("temperature".into()),
                TokenKind::Ident("WHERE".into()),
                TokenKind::Ident("city".into()),
                TokenKind::Eq,
                TokenKind::Str("Seattle".into()),
            ]
        );
    }

    #[test]
    fn resolves_quote_escapes() {
        let toks = kinds("'It''s'");
        assert_eq!(toks, vec![TokenKind::Str("It's".into())]);
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(lex("'oops").is_err());
    }

    #[test]
    fn numbers_and_operators() {
        let toks = kinds("a >= 1.5 AND b <> -3 AND c != 2");
        assert!(toks.contains(&TokenKind::Ge));
        assert!(toks.contains(&TokenKind::Number("1.5".into())));
        assert!(toks.contains(&TokenKind::Number("-3".into())));
        assert_eq!(toks.iter().filter(|k| **k == TokenKind::Ne).count(), 2);
    }
}
