use std::collections::HashMap;

use thiserror::Error;

use super::ast::*;
use crate::graphstore::{Direction, EdgeKind, VertexKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("variable `{var}` used as both {first} and {second}")]
    KindMismatch {
        var: String,
        first: VertexKind,
        second: VertexKind,
    },
    #[error("illegal edge {edge} between {left} and {right}")]
    IllegalEdge {
        edge: EdgeKind,
        left: VertexKind,
        right: VertexKind,
    },
    #[error("AVG pattern has no tapped edge attribute")]
    UntappedAggregate,
    #[error("pattern taps more than one edge attribute")]
    MultipleTaps,
    #[error("`{0}` must match exactly one anonymous atom in PATTERNS, found {1}")]
    AmbiguousKindReference(VertexKind, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub kind: VertexKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub kind: VertexKind,
    /// Index into [`TypedQuery::vars`]; `None` for existential atoms.
    pub var: Option<usize>,
}

/// Traversal from `atoms[i]` to `atoms[i + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub edge: EdgeKind,
    pub dir: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPattern {
    pub atoms: Vec<Atom>,
    pub steps: Vec<Step>,
    /// Step index and attribute of the tapped edge.
    pub tap: Option<(usize, String)>,
}

impl CompiledPattern {
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().filter_map(|a| a.var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProjection {
    pub var: usize,
    pub attr: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCondition {
    pub var: usize,
    pub attr: String,
    pub op: CmpOp,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledOrder {
    pub pattern: CompiledPattern,
    pub attr: String,
    pub direction: SortDirection,
}

/// A validated query with variables resolved to dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedQuery {
    pub ast: QueryAst,
    /// Grouping variables in order of first appearance in PATTERNS.
    pub vars: Vec<VarInfo>,
    pub patterns: Vec<CompiledPattern>,
    pub antipatterns: Vec<CompiledPattern>,
    pub projections: Vec<CompiledProjection>,
    pub conditions: Vec<CompiledCondition>,
    pub order: Option<CompiledOrder>,
    pub limit: Option<usize>,
}

impl TypedQuery {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn kind_of(&self, name: &str) -> Option<VertexKind> {
        self.var(name).map(|i| self.vars[i].kind)
    }

    /// Output column names: one per projection, then `avg` if ordered.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.projections.iter().map(|p| p.label.clone()).collect();
        if self.order.is_some() {
            cols.push("avg".into());
        }
        cols
    }
}

fn check_edges(pattern: &Pattern) -> Result<Vec<Step>, ValidationError> {
    if pattern.taps().count() > 1 {
        return Err(ValidationError::MultipleTaps);
    }
    pattern
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (left, right) = (pattern.vertices[i].kind, pattern.vertices[i + 1].kind);
            e.kind
                .traversal(left, right)
                .map(|dir| Step { edge: e.kind, dir })
                .ok_or(ValidationError::IllegalEdge {
                    edge: e.kind,
                    left,
                    right,
                })
        })
        .collect()
}

struct Scope {
    vars: Vec<VarInfo>,
    index: HashMap<String, usize>,
}

impl Scope {
    fn bind(&mut self, name: &str, kind: VertexKind) -> Result<usize, ValidationError> {
        match self.index.get(name) {
            Some(&i) => self.check(i, kind),
            None => {
                self.index.insert(name.to_owned(), self.vars.len());
                self.vars.push(VarInfo {
                    name: name.to_owned(),
                    kind,
                });
                Ok(self.vars.len() - 1)
            }
        }
    }

    fn lookup(&self, name: &str, kind: Option<VertexKind>) -> Result<usize, ValidationError> {
        let &i = self
            .index
            .get(name)
            .ok_or_else(|| ValidationError::UnboundVariable(name.to_owned()))?;
        match kind {
            Some(k) => self.check(i, k),
            None => Ok(i),
        }
    }

    fn check(&self, i: usize, kind: VertexKind) -> Result<usize, ValidationError> {
        let var = &self.vars[i];
        if var.kind != kind {
            return Err(ValidationError::KindMismatch {
                var: var.name.clone(),
                first: var.kind,
                second: kind,
            });
        }
        Ok(i)
    }

    fn compile_bound(
        &self,
        pattern: &Pattern,
        steps: Vec<Step>,
    ) -> Result<CompiledPattern, ValidationError> {
        let atoms = pattern
            .vertices
            .iter()
            .map(|a| {
                Ok(Atom {
                    kind: a.kind,
                    var: a
                        .var
                        .as_deref()
                        .map(|name| self.lookup(name, Some(a.kind)))
                        .transpose()?,
                })
            })
            .collect::<Result<_, ValidationError>>()?;
        Ok(CompiledPattern {
            atoms,
            steps,
            tap: pattern.taps().next().map(|(i, t)| (i, t.to_owned())),
        })
    }
}

fn projection_label(p: &Projection) -> String {
    format!("{}.{}", super::unparse::var_ref(&p.var), p.attr)
}

pub fn validate(ast: &QueryAst) -> Result<TypedQuery, ValidationError> {
    let steps = |list: &[Pattern]| list.iter().map(check_edges).collect::<Result<Vec<_>, _>>();
    let pos_steps = steps(&ast.patterns)?;
    let anti_steps = steps(&ast.antipatterns)?;
    let agg_steps = ast
        .order_by
        .as_ref()
        .map(|o| check_edges(&o.agg.pattern))
        .transpose()?;

    // Kind references promote their unique anonymous atom to a variable.
    let mut promoted: Vec<(usize, usize)> = Vec::new();
    let kind_refs = ast
        .select
        .iter()
        .chain(ast.conditions.iter().map(|c| &c.target))
        .filter_map(|p| match p.var {
            VarRef::Kind(k) => Some(k),
            VarRef::Named { .. } => None,
        });
    for kind in kind_refs {
        let sites: Vec<(usize, usize)> = ast
            .patterns
            .iter()
            .enumerate()
            .flat_map(|(pi, p)| {
                p.vertices
                    .iter()
                    .enumerate()
                    .filter(move |(_, a)| a.kind == kind && a.var.is_none())
                    .map(move |(ai, _)| (pi, ai))
            })
            .collect();
        match sites.as_slice() {
            [site] => {
                if !promoted.contains(site) {
                    promoted.push(*site);
                }
            }
            [] => return Err(ValidationError::UnboundVariable(kind.symbol().to_owned())),
            _ => return Err(ValidationError::AmbiguousKindReference(kind, sites.len())),
        }
    }

    let mut scope = Scope {
        vars: Vec::new(),
        index: HashMap::new(),
    };
    let mut patterns = Vec::with_capacity(ast.patterns.len());
    for ((pi, pattern), steps) in ast.patterns.iter().enumerate().zip(pos_steps) {
        let mut atoms = Vec::with_capacity(pattern.vertices.len());
        for (ai, a) in pattern.vertices.iter().enumerate() {
            let name = match &a.var {
                Some(name) => Some(name.as_str()),
                None if promoted.contains(&(pi, ai)) => Some(a.kind.symbol()),
                None => None,
            };
            let var = name.map(|n| scope.bind(n, a.kind)).transpose()?;
            atoms.push(Atom { kind: a.kind, var });
        }
        patterns.push(CompiledPattern {
            atoms,
            steps,
            tap: pattern.taps().next().map(|(i, t)| (i, t.to_owned())),
        });
    }

    let antipatterns = ast
        .antipatterns
        .iter()
        .zip(anti_steps)
        .map(|(p, s)| scope.compile_bound(p, s))
        .collect::<Result<Vec<_>, _>>()?;

    let resolve = |p: &Projection| -> Result<usize, ValidationError> {
        match &p.var {
            VarRef::Named { name, kind } => scope.lookup(name, *kind),
            VarRef::Kind(k) => scope.lookup(k.symbol(), Some(*k)),
        }
    };
    let projections = ast
        .select
        .iter()
        .map(|p| {
            Ok(CompiledProjection {
                var: resolve(p)?,
                attr: p.attr.clone(),
                label: projection_label(p),
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    let conditions = ast
        .conditions
        .iter()
        .map(|c| {
            Ok(CompiledCondition {
                var: resolve(&c.target)?,
                attr: c.target.attr.clone(),
                op: c.op,
                value: c.value.clone(),
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;

    let order = match (&ast.order_by, agg_steps) {
        (Some(o), Some(steps)) => {
            let pattern = scope.compile_bound(&o.agg.pattern, steps)?;
            let attr = pattern
                .tap
                .as_ref()
                .map(|(_, a)| a.clone())
                .ok_or(ValidationError::UntappedAggregate)?;
            Some(CompiledOrder {
                pattern,
                attr,
                direction: o.direction,
            })
        }
        _ => None,
    };

    Ok(TypedQuery {
        ast: ast.clone(),
        vars: scope.vars,
        patterns,
        antipatterns,
        projections,
        conditions,
        order,
        limit: ast.limit.map(|l| usize::try_from(l).unwrap_or(usize::MAX)),
    })
}
