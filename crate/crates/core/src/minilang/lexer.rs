use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Option,
    Fun,
    If,
    Else,
    While,
    Return,
    Throw,
    Assert,
    True,
    False,
    Null,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Option => "option",
            Tok::Fun => "fun",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Throw => "throw",
            Tok::Assert => "assert",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Null => "null",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, (String, u32, u32)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1u32, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let column = (src[line_start..i].chars().count() + 1) as u32;
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
                continue;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                continue;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            keyword(&src[start..i]).unwrap_or_else(|| Tok::Ident(src[start..i].to_string()))
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            match src[start..i].parse::<i64>() {
                Ok(v) => Tok::Int(v),
                Err(_) => return Err(("integer literal out of range".into(), line, column)),
            }
        } else if c == b'"' {
            i += 1;
            let mut text = String::new();
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(("unterminated string literal".into(), line, column))
                    }
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') => {
                        let esc = match bytes.get(i + 1) {
                            Some(b'n') => '\n',
                            Some(b't') => '\t',
                            Some(b'"') => '"',
                            Some(b'\\') => '\\',
                            _ => return Err(("invalid escape in string literal".into(), line, column)),
                        };
                        text.push(esc);
                        i += 2;
                    }
                    Some(_) => {
                        let ch = src[i..].chars().next().expect("in bounds");
                        text.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            Tok::Str(text)
        } else {
            let two = bytes.get(i + 1).copied();
            let (tok, len) = match (c, two) {
                (b'=', Some(b'=')) => (Tok::EqEq, 2),
                (b'!', Some(b'=')) => (Tok::NotEq, 2),
                (b'<', Some(b'=')) => (Tok::Le, 2),
                (b'>', Some(b'=')) => (Tok::Ge, 2),
                (b'&', Some(b'&')) => (Tok::AndAnd, 2),
                (b'|', Some(b'|')) => (Tok::OrOr, 2),
                (b'=', _) => (Tok::Assign, 1),
                (b'!', _) => (Tok::Bang, 1),
                (b'<', _) => (Tok::Lt, 1),
                (b'>', _) => (Tok::Gt, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b'{', _) => (Tok::LBrace, 1),
                (b'}', _) => (Tok::RBrace, 1),
                (b';', _) => (Tok::Semi, 1),
                (b',', _) => (Tok::Comma, 1),
                (b'+', _) => (Tok::Plus, 1),
                (b'-', _) => (Tok::Minus, 1),
                (b'*', _) => (Tok::Star, 1),
                (b'/', _) => (Tok::Slash, 1),
                _ => {
                    let ch = src[i..].chars().next().expect("in bounds");
                    return Err((format!("unexpected character `{ch}`"), line, column));
                }
            };
            i += len;
            tok
        };
        out.push(Token {
            tok,
            start,
            end: i,
            line,
            column,
        });
    }
    let column = (src[line_start..].chars().count() + 1) as u32;
    out.push(Token {
        tok: Tok::Eof,
        start: src.len(),
        end: src.len(),
        line,
        column,
    });
    Ok(out)
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "option" => Tok::Option,
        "fun" => Tok::Fun,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "return" => Tok::Return,
        "throw" => Tok::Throw,
        "assert" => Tok::Assert,
        "true" => Tok::True,
        "false" => Tok::False,
        "null" => Tok::Null,
        _ => return None,
    })
}

impl From<(String, u32, u32)> for ParseError {
    fn from((message, line, column): (String, u32, u32)) -> Self {
        ParseError::Syntax {
            message,
            line,
            column,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("x = 1;\n  // note\n  if (a && !b) { }").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[..4], [Tok::Ident("x".into()), Tok::Assign, Tok::Int(1), Tok::Semi]);
        let if_tok = &toks[4];
        assert_eq!((if_tok.tok.clone(), if_tok.line, if_tok.column), (Tok::If, 3, 3));
        assert!(kinds.contains(&Tok::AndAnd));
        assert_eq!(kinds.last(), Some(&Tok::Eof));
    }

    #[test]
    fn string_escapes() {
        let toks = tokenize(r#"throw "bad \"tag\"";"#).unwrap();
        assert_eq!(toks[1].tok, Tok::Str("bad \"tag\"".into()));
        assert!(tokenize("\"open").is_err());
        assert!(tokenize("x = 1 # 2").is_err());
    }
}
