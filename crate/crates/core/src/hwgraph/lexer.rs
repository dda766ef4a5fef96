use super::HwGraphError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    SysIdent(String),
    Directive(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first so that prefix matching picks e.g. `<<<` over `<<`.
const SYMBOLS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "**", "<<", ">>", "~&", "~|", "~^", "^~", "+:",
    "-:", "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "?", "=", "+", "-", "*", "/", "%", "&", "|", "^", "~",
    "!", "<", ">", "@", "#",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, HwGraphError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let col = i - line_start + 1;
        if c == b'\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            i = scan_word(bytes, i);
            Tok::Ident(src[start..i].to_string())
        } else if c == b'\\' {
            i += 1;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            Tok::Ident(src[start + 1..i].to_string())
        } else if c == b'$' {
            i = scan_word(bytes, i + 1);
            Tok::SysIdent(src[start..i].to_string())
        } else if c == b'`' {
            i = scan_word(bytes, i + 1);
            Tok::Directive(src[start..i].to_string())
        } else if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                if bytes[i] == b'\n' {
                    return Err(syntax(line, col, "unterminated string literal"));
                }
                i += if bytes[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
            Tok::Str(src[start..i.min(bytes.len())].to_string())
        } else if c.is_ascii_digit() || c == b'\'' {
            i = scan_number(bytes, i).ok_or_else(|| syntax(line, col, "malformed number"))?;
            if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                return Err(HwGraphError::UnsupportedConstruct {
                    construct: "real literal".into(),
                    line,
                    col,
                });
            }
            let text: String = src[start..i].chars().filter(|c| !c.is_whitespace()).collect();
            Tok::Number(text)
        } else {
            let rest = &src[i..];
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| syntax(line, col, &format!("unexpected character {:?}", c as char)))?;
            i += sym.len();
            Tok::Sym(sym)
        };
        toks.push(Token { tok, line, col });
    }
    let col = i - line_start + 1;
    toks.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(toks)
}

fn syntax(line: usize, col: usize, message: &str) -> HwGraphError {
    HwGraphError::Syntax {
        line,
        col,
        message: message.to_string(),
    }
}

fn scan_word(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
        i += 1;
    }
    i
}

/// Scans `12`, `8'hFF`, `'b0`, `4 'b10x1`, `8'sd5`.
fn scan_number(bytes: &[u8], mut i: usize) -> Option<usize> {
    if bytes[i].is_ascii_digit() {
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
            i += 1;
        }
        let mut j = i;
        while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t') {
            j += 1;
        }
        if j < bytes.len() && bytes[j] == b'\'' {
            i = j;
        } else {
            return Some(i);
        }
    }
    // at the apostrophe
    i += 1;
    if i < bytes.len() && (bytes[i] == b's' || bytes[i] == b'S') {
        i += 1;
    }
    if i >= bytes.len() || !matches!(bytes[i].to_ascii_lowercase(), b'b' | b'o' | b'd' | b'h') {
        return None;
    }
    i += 1;
    while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
        i += 1;
    }
    let digits = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'?') {
        i += 1;
    }
    (i > digits).then_some(i)
}
