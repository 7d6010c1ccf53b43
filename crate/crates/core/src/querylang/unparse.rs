use std::fmt::{self, Write};

use super::ast::*;

pub(crate) fn var_ref(v: &VarRef) -> String {
    match v {
        VarRef::Named { name, kind: None } => name.clone(),
        VarRef::Named {
            name,
            kind: Some(k),
        } => format!("{k}({name})"),
        VarRef::Kind(k) => k.symbol().to_owned(),
    }
}

fn literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Int(i) => write!(out, "{i}").unwrap(),
        Literal::Real(r) => write!(out, "{r:?}").unwrap(),
        Literal::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                let e = &self.edges[i - 1];
                write!(f, "-{}", e.kind)?;
                if let Some(tap) = &e.tap {
                    write!(f, ".{tap}")?;
                }
                f.write_str("-")?;
            }
            write!(f, "{}", v.kind)?;
            if let Some(var) = &v.var {
                write!(f, "({var})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", var_ref(&self.var), self.attr)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        literal(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.target, self.op.symbol(), self.value)
    }
}

/// Canonical single-line text. Clauses appear in grammar order.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: Vec<String>, sep: &str| items.join(sep);
        write!(
            f,
            "SELECT {}",
            join(self.select.iter().map(|p| p.to_string()).collect(), ", ")
        )?;
        write!(
            f,
            " PATTERNS {}",
            join(self.patterns.iter().map(|p| p.to_string()).collect(), " ")
        )?;
        if !self.antipatterns.is_empty() {
            write!(
                f,
                " ANTIPATTERNS {}",
                join(self.antipatterns.iter().map(|p| p.to_string()).collect(), " ")
            )?;
        }
        if !self.conditions.is_empty() {
            write!(
                f,
                " WHERE {}",
                join(self.conditions.iter().map(|c| c.to_string()).collect(), " AND ")
            )?;
        }
        if let Some(o) = &self.order_by {
            let dir = match o.direction {
                SortDirection::Asc => "ASC",
                SortDirection::Desc => "DESC",
            };
            write!(f, " ORDERBY AVG({}) {dir}", o.agg.pattern)?;
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        Ok(())
    }
}

pub fn unparse(ast: &QueryAst) -> String {
    ast.to_string()
}
