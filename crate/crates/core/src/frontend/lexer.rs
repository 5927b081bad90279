use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

// Longest first so that `<<` wins over `<`.
const PUNCTS: &[&str] = &[
    "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ";", ",", "=", "+", "-", "*", "&", "|", "^",
    "<", ">", "!", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let start = i;
            let radix = if src[i..].starts_with("0x") || src[i..].starts_with("0X") {
                i += 2;
                16
            } else {
                10
            };
            let digits_start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text: String = src[digits_start..i].chars().filter(|&c| c != '_').collect();
            let value = u64::from_str_radix(&text, radix).map_err(|_| FrontendError::Syntax {
                line,
                col: start_col,
                message: format!("invalid integer literal `{}`", &src[start..i]),
            })?;
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Int(value),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line,
                col: start_col,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push(Token {
                    tok: Tok::Punct(p),
                    line,
                    col: start_col,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
