use super::ast::CmpOp;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Word(String),
    Int(i64),
    Real(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Dash,
    Op(CmpOp),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Real(r) => format!("number {r}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Dash => "`-`".into(),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

/// Position of the last non-whitespace character, used for end-of-input
/// errors so reported positions always fall inside the text.
pub(crate) fn end_position(text: &str) -> Pos {
    let mut pos = Pos { line: 1, column: 1 };
    let mut last = pos;
    for c in text.chars() {
        if !c.is_whitespace() {
            last = pos;
        }
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    }
    last
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut out = Vec::new();
    let err = |pos: Pos, expected: &str, found: String| SyntaxError {
        line: pos.line,
        column: pos.column,
        expected: expected.to_owned(),
        found,
    };
    while let Some(c) = cur.peek() {
        let pos = cur.pos;
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let tok = match c {
            '(' | ')' | ',' | '.' | '-' | '=' => {
                cur.bump();
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '-' => Tok::Dash,
                    _ => Tok::Op(CmpOp::Eq),
                }
            }
            '!' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Op(CmpOp::Ne)
                } else {
                    return Err(err(pos, "`!=`", "`!`".into()));
                }
            }
            '<' | '>' => {
                cur.bump();
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                Tok::Op(match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                })
            }
            '"' | '\'' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(err(pos, "closing quote", "end of input".into())),
                        Some('\\') => match cur.bump() {
                            Some(e @ ('\\' | '"' | '\'')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            _ => return Err(err(pos, "valid escape", "`\\`".into())),
                        },
                        Some(q) if q == c => break,
                        Some(other) => s.push(other),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                let mut real = false;
                while let Some(d) = cur.peek().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    cur.bump();
                }
                // fraction only if a digit follows the dot
                if cur.peek() == Some('.') {
                    let mut ahead = cur.chars.clone();
                    ahead.next();
                    if ahead.peek().is_some_and(|d| d.is_ascii_digit()) {
                        real = true;
                        s.push('.');
                        cur.bump();
                        while let Some(d) = cur.peek().filter(|d| d.is_ascii_digit()) {
                            s.push(d);
                            cur.bump();
                        }
                    }
                }
                if matches!(cur.peek(), Some('e' | 'E')) {
                    let mut ahead = cur.chars.clone();
                    ahead.next();
                    let mut exp = String::from("e");
                    if let Some(sign @ ('+' | '-')) = ahead.peek().copied() {
                        exp.push(sign);
                        ahead.next();
                    }
                    if ahead.peek().is_some_and(|d| d.is_ascii_digit()) {
                        real = true;
                        for _ in 0..exp.len() {
                            cur.bump();
                        }
                        s.push_str(&exp);
                        while let Some(d) = cur.peek().filter(|d| d.is_ascii_digit()) {
                            s.push(d);
                            cur.bump();
                        }
                    }
                }
                if real {
                    let v: f64 = s.parse().map_err(|_| err(pos, "number", s.clone()))?;
                    if !v.is_finite() {
                        return Err(err(pos, "finite number", s));
                    }
                    Tok::Real(v)
                } else {
                    Tok::Int(
                        s.parse()
                            .map_err(|_| err(pos, "integer within 64-bit range", s.clone()))?,
                    )
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(w) = cur.peek().filter(|w| w.is_alphanumeric() || *w == '_') {
                    s.push(w);
                    cur.bump();
                }
                Tok::Word(s)
            }
            other => return Err(err(pos, "token", format!("`{other}`"))),
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: end_position(text),
    });
    Ok(out)
}
