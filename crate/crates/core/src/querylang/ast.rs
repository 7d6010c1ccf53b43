use crate::graphstore::{EdgeKind, VertexKind};

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub select: Vec<Projection>,
    pub patterns: Vec<Pattern>,
    pub antipatterns: Vec<Pattern>,
    pub conditions: Vec<Condition>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

/// Alternating vertex and edge atoms; `edges[i]` joins `vertices[i]` and
/// `vertices[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub vertices: Vec<VertexAtom>,
    pub edges: Vec<EdgeAtom>,
}

impl Pattern {
    pub fn single(atom: VertexAtom) -> Self {
        Self {
            vertices: vec![atom],
            edges: Vec::new(),
        }
    }

    /// Appends `-edge-vertex` to the pattern.
    pub fn then(mut self, edge: EdgeAtom, vertex: VertexAtom) -> Self {
        self.edges.push(edge);
        self.vertices.push(vertex);
        self
    }

    pub fn taps(&self) -> impl Iterator<Item = (usize, &str)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.tap.as_deref().map(|t| (i, t)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexAtom {
    pub kind: VertexKind,
    pub var: Option<String>,
}

impl VertexAtom {
    pub fn anon(kind: VertexKind) -> Self {
        Self { kind, var: None }
    }

    pub fn named(kind: VertexKind, var: impl Into<String>) -> Self {
        Self {
            kind,
            var: Some(var.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAtom {
    pub kind: EdgeKind,
    /// Edge attribute aggregated by an enclosing `AVG(...)`.
    pub tap: Option<String>,
}

impl EdgeAtom {
    pub fn plain(kind: EdgeKind) -> Self {
        Self { kind, tap: None }
    }

    pub fn tapped(kind: EdgeKind, attr: impl Into<String>) -> Self {
        Self {
            kind,
            tap: Some(attr.into()),
        }
    }
}

/// How a projection or condition names its vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum VarRef {
    /// `b.name`, or `V_G(b).name` when `kind` is given.
    Named {
        name: String,
        kind: Option<VertexKind>,
    },
    /// `V_R.description`: the single anonymous atom of that kind in the
    /// positive patterns.
    Kind(VertexKind),
}

impl VarRef {
    pub fn named(name: impl Into<String>) -> Self {
        VarRef::Named {
            name: name.into(),
            kind: None,
        }
    }

    /// Variable name used for binding; kind references bind under the kind
    /// symbol.
    pub fn binding_name(&self) -> &str {
        match self {
            VarRef::Named { name, .. } => name,
            VarRef::Kind(k) => k.symbol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub var: VarRef,
    pub attr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub target: Projection,
    pub op: CmpOp,
    pub value: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortDirection {
    Asc,
    #[default]
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunction {
    Avg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggExpr {
    pub function: AggFunction,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderBy {
    pub agg: AggExpr,
    pub direction: SortDirection,
}
