use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::SyntaxError;
use crate::graphstore::{EdgeKind, VertexKind};

pub(crate) const KEYWORDS: [&str; 10] = [
    "SELECT",
    "PATTERNS",
    "ANTIPATTERNS",
    "WHERE",
    "AND",
    "ORDERBY",
    "AVG",
    "ASC",
    "DESC",
    "LIMIT",
];

pub(crate) fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

/// Words usable as variable names: not a keyword and not a kind symbol.
pub(crate) fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !is_keyword(word)
        && VertexKind::from_symbol(word).is_none()
        && EdgeKind::from_symbol(word).is_none()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.at].tok.clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        tok
    }

    fn error(&self, expected: impl Into<String>) -> SyntaxError {
        let token = &self.tokens[self.at];
        SyntaxError {
            line: token.pos.line,
            column: token.pos.column,
            expected: expected.into(),
            found: token.tok.describe(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(kw))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(tok.describe()))
        }
    }

    fn identifier(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Word(w) if is_identifier(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn attribute(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Word(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.error("attribute name")),
        }
    }

    fn at_vertex_kind(&self) -> Option<VertexKind> {
        match self.peek() {
            Tok::Word(w) => VertexKind::from_symbol(w),
            _ => None,
        }
    }

    fn query(&mut self) -> Result<QueryAst, SyntaxError> {
        self.expect_keyword("SELECT")?;
        let mut select = vec![self.projection()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            select.push(self.projection()?);
        }

        self.expect_keyword("PATTERNS")?;
        let patterns = self.pattern_list()?;

        let antipatterns = if self.eat_keyword("ANTIPATTERNS") {
            self.pattern_list()?
        } else {
            Vec::new()
        };

        let mut conditions = Vec::new();
        if self.eat_keyword("WHERE") {
            conditions.push(self.condition()?);
            while self.eat_keyword("AND") {
                conditions.push(self.condition()?);
            }
        }

        let order_by = if self.eat_keyword("ORDERBY") {
            self.expect_keyword("AVG")?;
            self.expect(Tok::LParen)?;
            let pattern = self.pattern()?;
            self.expect(Tok::RParen)?;
            let direction = if self.eat_keyword("ASC") {
                SortDirection::Asc
            } else {
                self.eat_keyword("DESC");
                SortDirection::Desc
            };
            Some(OrderBy {
                agg: AggExpr {
                    function: AggFunction::Avg,
                    pattern,
                },
                direction,
            })
        } else {
            None
        };

        let limit = if self.eat_keyword("LIMIT") {
            match self.peek() {
                Tok::Int(n) if *n > 0 => {
                    let n = *n as u64;
                    self.bump();
                    Some(n)
                }
                _ => return Err(self.error("positive integer")),
            }
        } else {
            None
        };

        if *self.peek() != Tok::Eof {
            let expected = if order_by.is_some() || limit.is_some() {
                "end of input"
            } else {
                "pattern, clause keyword or end of input"
            };
            return Err(self.error(expected));
        }
        Ok(QueryAst {
            select,
            patterns,
            antipatterns,
            conditions,
            order_by,
            limit,
        })
    }

    fn pattern_list(&mut self) -> Result<Vec<Pattern>, SyntaxError> {
        let mut list = vec![self.pattern()?];
        while self.at_vertex_kind().is_some() {
            list.push(self.pattern()?);
        }
        Ok(list)
    }

    fn pattern(&mut self) -> Result<Pattern, SyntaxError> {
        let mut pattern = Pattern::single(self.vertex_atom()?);
        while *self.peek() == Tok::Dash {
            self.bump();
            let edge = self.edge_atom()?;
            self.expect(Tok::Dash)?;
            let vertex = self.vertex_atom()?;
            pattern = pattern.then(edge, vertex);
        }
        Ok(pattern)
    }

    fn vertex_atom(&mut self) -> Result<VertexAtom, SyntaxError> {
        let kind = self
            .at_vertex_kind()
            .ok_or_else(|| self.error("vertex kind (V_P, V_G, V_D, V_R)"))?;
        self.bump();
        let var = if *self.peek() == Tok::LParen {
            self.bump();
            let name = self.identifier()?;
            self.expect(Tok::RParen)?;
            Some(name)
        } else {
            None
        };
        Ok(VertexAtom { kind, var })
    }

    fn edge_atom(&mut self) -> Result<EdgeAtom, SyntaxError> {
        let kind = match self.peek() {
            Tok::Word(w) => EdgeKind::from_symbol(w),
            _ => None,
        }
        .ok_or_else(|| self.error("edge kind (E_F, E_O, E_D, E_R)"))?;
        self.bump();
        let tap = if *self.peek() == Tok::Dot {
            self.bump();
            Some(self.attribute()?)
        } else {
            None
        };
        Ok(EdgeAtom { kind, tap })
    }

    fn projection(&mut self) -> Result<Projection, SyntaxError> {
        let var = if let Some(kind) = self.at_vertex_kind() {
            if *self.peek_at(1) == Tok::LParen {
                self.bump();
                self.bump();
                let name = self.identifier()?;
                self.expect(Tok::RParen)?;
                VarRef::Named {
                    name,
                    kind: Some(kind),
                }
            } else {
                self.bump();
                VarRef::Kind(kind)
            }
        } else {
            VarRef::named(
                self.identifier()
                    .map_err(|_| self.error("variable or vertex kind"))?,
            )
        };
        self.expect(Tok::Dot)?;
        let attr = self.attribute()?;
        Ok(Projection { var, attr })
    }

    fn number(&mut self) -> Result<Literal, SyntaxError> {
        let negative = *self.peek() == Tok::Dash;
        if negative {
            self.bump();
        }
        let lit = match self.peek() {
            Tok::Int(i) => Literal::Int(if negative { -*i } else { *i }),
            Tok::Real(r) => Literal::Real(if negative { -*r } else { *r }),
            _ => return Err(self.error("number")),
        };
        self.bump();
        Ok(lit)
    }

    fn condition(&mut self) -> Result<Condition, SyntaxError> {
        let target = self.projection()?;
        let op = match self.peek() {
            Tok::Op(op) => *op,
            _ => return Err(self.error("comparison operator")),
        };
        self.bump();
        let value = if op.is_ordering() {
            self.number()?
        } else {
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    Literal::Str(s)
                }
                Tok::Word(w) if !is_keyword(&w) => {
                    self.bump();
                    Literal::Str(w)
                }
                Tok::Int(_) | Tok::Real(_) | Tok::Dash => self.number()?,
                _ => return Err(self.error("literal")),
            }
        };
        Ok(Condition { target, op, value })
    }
}

pub fn parse(text: &str) -> Result<QueryAst, SyntaxError> {
    let tokens = lex(text)?;
    Parser { tokens, at: 0 }.query()
}
