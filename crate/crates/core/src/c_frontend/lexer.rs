use super::ast::Loc;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    IntLit(String),
    FloatLit(String),
    CharLit(String),
    StrLit(String),
    Punct(&'static str),
    /// A whole preprocessor line, starting with `#`.
    Directive(String),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(n) if n == s)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(s)
            | TokenKind::IntLit(s)
            | TokenKind::FloatLit(s)
            | TokenKind::CharLit(s)
            | TokenKind::StrLit(s) => format!("`{s}`"),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::Directive(d) => format!("directive `{}`", d.trim()),
            TokenKind::Eof => "end of file".to_string(),
        }
    }
}

// Longest first so maximal munch works by scanning in order.
const PUNCTS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "(", ")", "[", "]", "{", "}", ";", ",", ".", "?",
    ":", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "^", "|",
];

pub fn tokenize(src: &str, path: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let mut at_line_start = true;

    let err = |line: u32, col: u32, msg: String| FrontendError::Syntax {
        path: path.to_string(),
        line,
        column: col,
        message: msg,
    };

    while i < bytes.len() {
        let c = bytes[i];
        let col = (i - line_start) as u32 + 1;
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let (sl, sc) = (line, col);
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(err(sl, sc, "unterminated comment".into()));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                    line_start = i + 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let loc = Loc::new(line, col);
        if c == b'#' && at_line_start {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            toks.push(Token {
                kind: TokenKind::Directive(src[start..i].trim_end().to_string()),
                loc,
                start,
                end: i,
            });
            continue;
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(Token {
                kind: TokenKind::Ident(src[start..i].to_string()),
                loc,
                start,
                end: i,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            let mut is_float = false;
            if c == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
                i += 2;
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
            } else {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    is_float = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    is_float = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(err(line, col, "malformed exponent".into()));
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            while i < bytes.len() && matches!(bytes[i], b'u' | b'U' | b'l' | b'L' | b'f' | b'F') {
                if matches!(bytes[i], b'f' | b'F') {
                    is_float = true;
                }
                i += 1;
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                return Err(err(line, col, "malformed numeric literal".into()));
            }
            let text = src[start..i].to_string();
            toks.push(Token {
                kind: if is_float {
                    TokenKind::FloatLit(text)
                } else {
                    TokenKind::IntLit(text)
                },
                loc,
                start,
                end: i,
            });
            continue;
        }
        if c == b'\'' || c == b'"' {
            let quote = c;
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(err(line, col, "unterminated literal".into()));
                    }
                    Some(b'\\') => i += 2,
                    Some(&b) if b == quote => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            let text = src[start..i].to_string();
            toks.push(Token {
                kind: if quote == b'"' {
                    TokenKind::StrLit(text)
                } else {
                    TokenKind::CharLit(text)
                },
                loc,
                start,
                end: i,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                toks.push(Token {
                    kind: TokenKind::Punct(p),
                    loc,
                    start,
                    end: i,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(line, col, format!("unexpected character `{ch}`")));
            }
        }
    }
    let col = (bytes.len() - line_start) as u32 + 1;
    toks.push(Token {
        kind: TokenKind::Eof,
        loc: Loc::new(line, col),
        start: bytes.len(),
        end: bytes.len(),
    });
    Ok(toks)
}
