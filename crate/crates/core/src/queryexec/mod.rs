//! Evaluation of validated queries over a frozen graph.
//!
//! Positive patterns are joined in written order. Each pattern is walked
//! outward from a pivot atom (a bound variable if there is one, otherwise
//! the atom with the fewest candidates), carrying partial bindings as
//! deduplicated frontier states. Antipatterns and `AVG` reuse a path-count
//! sweep over the same frontier.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graphstore::{AttrValue, Direction, EdgeId, EdgeKind, PropertyGraph, VertexId};
use crate::querylang::{
    compile, Atom, CmpOp, CompiledCondition, CompiledOrder, CompiledPattern, Literal,
    QueryError, SortDirection, TypedQuery,
};

/// Partial assignment, indexed like [`TypedQuery::vars`].
pub type Binding = Vec<Option<VertexId>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("graph must be frozen before querying")]
    NotFrozen,
    #[error("edge {edge} lacks numeric attribute `{attr}`")]
    TapAttributeMissing { edge: EdgeId, attr: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// One cell per projection; `None` when the vertex lacks the attribute.
    pub cells: Vec<Option<AttrValue>>,
    pub sort_key: Option<f64>,
    pub binding: Vec<(String, VertexId)>,
}

fn reverse(dir: Direction) -> Direction {
    match dir {
        Direction::Out => Direction::In,
        Direction::In => Direction::Out,
        Direction::Any => Direction::Any,
    }
}

/// Edge kind, direction and step index for moving between adjacent atoms.
fn step_between(p: &CompiledPattern, from: usize, to: usize) -> (EdgeKind, Direction, usize) {
    if to == from + 1 {
        let s = p.steps[from];
        (s.edge, s.dir, from)
    } else {
        let s = p.steps[to];
        (s.edge, reverse(s.dir), to)
    }
}

enum Num {
    I(i64),
    F(f64),
}

fn attr_num(v: &AttrValue) -> Option<Num> {
    match v {
        AttrValue::Int(i) => Some(Num::I(*i)),
        AttrValue::Real(r) => Some(Num::F(*r)),
        AttrValue::Text(t) => t
            .parse::<i64>()
            .map(Num::I)
            .ok()
            .or_else(|| t.parse::<f64>().ok().filter(|f| f.is_finite()).map(Num::F)),
        AttrValue::Bool(_) => None,
    }
}

fn cmp_num(a: Num, b: Num) -> Option<Ordering> {
    match (a, b) {
        (Num::I(x), Num::I(y)) => Some(x.cmp(&y)),
        (Num::I(x), Num::F(y)) => (x as f64).partial_cmp(&y),
        (Num::F(x), Num::I(y)) => x.partial_cmp(&(y as f64)),
        (Num::F(x), Num::F(y)) => x.partial_cmp(&y),
    }
}

/// WHERE semantics. A missing attribute fails every comparison. String
/// literals compare against the attribute's text form; numeric literals
/// compare numerically, reading numeric-looking text (steamids) as numbers.
pub fn condition_holds(value: Option<&AttrValue>, op: CmpOp, lit: &Literal) -> bool {
    let Some(v) = value else { return false };
    let ord = match lit {
        Literal::Str(s) => {
            let eq = match v {
                AttrValue::Text(t) => t == s,
                other => other.to_string() == *s,
            };
            return match op {
                CmpOp::Eq => eq,
                CmpOp::Ne => !eq,
                _ => false,
            };
        }
        Literal::Int(i) => attr_num(v).and_then(|a| cmp_num(a, Num::I(*i))),
        Literal::Real(r) => attr_num(v).and_then(|a| cmp_num(a, Num::F(*r))),
    };
    match (op, ord) {
        (CmpOp::Ne, None) => true,
        (_, None) => false,
        (CmpOp::Eq, Some(o)) => o.is_eq(),
        (CmpOp::Ne, Some(o)) => o.is_ne(),
        (CmpOp::Lt, Some(o)) => o.is_lt(),
        (CmpOp::Le, Some(o)) => o.is_le(),
        (CmpOp::Gt, Some(o)) => o.is_gt(),
        (CmpOp::Ge, Some(o)) => o.is_ge(),
    }
}

/// Lazy depth-first enumeration of a pattern's embeddings consistent with
/// `seed`, in ascending vertex order at each atom.
pub struct Embeddings<'a> {
    graph: &'a PropertyGraph,
    pattern: &'a CompiledPattern,
    binding: Binding,
    stack: Vec<Frame>,
    path_v: Vec<VertexId>,
    path_e: Vec<EdgeId>,
}

struct Frame {
    cands: Vec<(VertexId, Option<EdgeId>)>,
    next: usize,
    bound: Option<usize>,
}

pub fn embeddings<'a>(
    pattern: &'a CompiledPattern,
    graph: &'a PropertyGraph,
    seed: &[Option<VertexId>],
) -> Embeddings<'a> {
    let first = pattern.atoms[0];
    let cands = match first.var.and_then(|x| seed.get(x).copied().flatten()) {
        Some(v) => vec![(v, None)],
        None => graph
            .vertices_of(first.kind)
            .iter()
            .map(|&v| (v, None))
            .collect(),
    };
    let nvars = pattern
        .vars()
        .max()
        .map_or(seed.len(), |m| seed.len().max(m + 1));
    let mut binding = seed.to_vec();
    binding.resize(nvars, None);
    Embeddings {
        graph,
        pattern,
        binding,
        stack: vec![Frame {
            cands,
            next: 0,
            bound: None,
        }],
        path_v: Vec::new(),
        path_e: Vec::new(),
    }
}

impl Iterator for Embeddings<'_> {
    type Item = Embedding;

    fn next(&mut self) -> Option<Embedding> {
        while !self.stack.is_empty() {
            let depth = self.stack.len() - 1;
            // retract the choice made at this depth last time round
            if self.path_v.len() > depth {
                self.path_v.pop();
                if depth > 0 {
                    self.path_e.pop();
                }
                if let Some(x) = self.stack[depth].bound.take() {
                    self.binding[x] = None;
                }
            }
            let frame = &mut self.stack[depth];
            let Some(&(v, e)) = frame.cands.get(frame.next) else {
                self.stack.pop();
                continue;
            };
            frame.next += 1;
            let atom = self.pattern.atoms[depth];
            if self.graph.kind_of(v) != atom.kind {
                continue;
            }
            if let Some(x) = atom.var {
                match self.binding[x] {
                    Some(w) if w != v => continue,
                    Some(_) => {}
                    None => {
                        self.binding[x] = Some(v);
                        frame.bound = Some(x);
                    }
                }
            }
            self.path_v.push(v);
            if let Some(e) = e {
                self.path_e.push(e);
            }
            if depth + 1 == self.pattern.atoms.len() {
                return Some(Embedding {
                    vertices: self.path_v.clone(),
                    edges: self.path_e.clone(),
                });
            }
            let step = self.pattern.steps[depth];
            let cands = self
                .graph
                .adjacent(v, step.edge, step.dir)
                .iter()
                .map(|&(n, e)| (n, Some(e)))
                .collect();
            self.stack.push(Frame {
                cands,
                next: 0,
                bound: None,
            });
        }
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: f64,
    sum: f64,
    bad: f64,
}

struct Exec<'a> {
    graph: &'a PropertyGraph,
    conds: Vec<Vec<&'a CompiledCondition>>,
}

impl<'a> Exec<'a> {
    fn new(graph: &'a PropertyGraph, q: &'a TypedQuery) -> Self {
        let mut conds = vec![Vec::new(); q.vars.len()];
        for c in &q.conditions {
            conds[c.var].push(c);
        }
        Self { graph, conds }
    }

    fn admits(&self, var: usize, v: VertexId) -> bool {
        let attrs = &self.graph.vertices()[v.index()].attrs;
        self.conds[var]
            .iter()
            .all(|c| condition_holds(attrs.get(&c.attr), c.op, &c.value))
    }

    /// `None` rejects; `Some(Some(x))` means `x` becomes bound to `v`.
    fn place(&self, atom: Atom, v: VertexId, b: &Binding) -> Option<Option<usize>> {
        if self.graph.kind_of(v) != atom.kind {
            return None;
        }
        match atom.var {
            None => Some(None),
            Some(x) => match b[x] {
                Some(w) => (w == v).then_some(None),
                None => self.admits(x, v).then_some(Some(x)),
            },
        }
    }

    /// Adjacent `(neighbor, edge)` pairs, narrowed to `target` when known.
    fn hop(
        &self,
        v: VertexId,
        edge: EdgeKind,
        dir: Direction,
        target: Option<VertexId>,
    ) -> &'a [(VertexId, EdgeId)] {
        let adj = self.graph.adjacent(v, edge, dir);
        match target {
            None => adj,
            Some(w) => {
                let lo = adj.partition_point(|&(n, _)| n < w);
                let hi = lo + adj[lo..].partition_point(|&(n, _)| n == w);
                &adj[lo..hi]
            }
        }
    }

    fn candidates(&self, atom: Atom) -> Vec<VertexId> {
        let all = self.graph.vertices_of(atom.kind);
        match atom.var {
            Some(x) if !self.conds[x].is_empty() => {
                all.iter().copied().filter(|&v| self.admits(x, v)).collect()
            }
            _ => all.to_vec(),
        }
    }

    /// Extends each of the partial bindings through one positive pattern.
    fn join(&self, p: &CompiledPattern, bindings: Vec<Binding>) -> Vec<Binding> {
        let Some(first) = bindings.first() else {
            return bindings;
        };
        let bound_pivot = p
            .atoms
            .iter()
            .position(|a| a.var.is_some_and(|x| first[x].is_some()));
        let (pivot, shared) = match bound_pivot {
            Some(k) => (k, None),
            None => {
                let (k, cands) = p
                    .atoms
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| (k, self.candidates(a)))
                    .min_by_key(|(k, c)| (c.len(), *k))
                    .expect("patterns have at least one atom");
                (k, Some(cands))
            }
        };
        let per: Vec<Vec<Binding>> = bindings
            .par_iter()
            .map(|b| {
                let starts = match (&shared, p.atoms[pivot].var) {
                    (Some(c), _) => c.clone(),
                    (None, Some(x)) => vec![b[x].expect("pivot is bound")],
                    (None, None) => unreachable!(),
                };
                self.extend(p, pivot, &starts, b)
            })
            .collect();
        let mut seen = HashSet::new();
        per.into_iter()
            .flatten()
            .filter(|b| seen.insert(b.clone()))
            .collect()
    }

    fn extend(
        &self,
        p: &CompiledPattern,
        pivot: usize,
        starts: &[VertexId],
        seed: &Binding,
    ) -> Vec<Binding> {
        let last = p.atoms.len() - 1;
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for &s in starts {
            let Some(bind) = self.place(p.atoms[pivot], s, seed) else {
                continue;
            };
            let mut b0 = seed.clone();
            if let Some(x) = bind {
                b0[x] = Some(s);
            }
            for lb in self.walk(p, pivot, 0, s, b0) {
                for rb in self.walk(p, pivot, last, s, lb) {
                    if seen.insert(rb.clone()) {
                        out.push(rb);
                    }
                }
            }
        }
        out
    }

    /// Distinct bindings reachable by walking from atom `from` (at `start`)
    /// to atom `to`.
    fn walk(
        &self,
        p: &CompiledPattern,
        from: usize,
        to: usize,
        start: VertexId,
        b: Binding,
    ) -> Vec<Binding> {
        let mut states = vec![(start, b)];
        let mut i = from;
        while i != to && !states.is_empty() {
            let j = if to > i { i + 1 } else { i - 1 };
            let (edge, dir, _) = step_between(p, i, j);
            let atom = p.atoms[j];
            let mut next = Vec::new();
            let mut seen = HashSet::new();
            for (v, b) in &states {
                let target = atom.var.and_then(|x| b[x]);
                for &(n, _) in self.hop(*v, edge, dir, target) {
                    let Some(bind) = self.place(atom, n, b) else {
                        continue;
                    };
                    let mut nb = b.clone();
                    if let Some(x) = bind {
                        nb[x] = Some(n);
                    }
                    if seen.insert((n, nb.clone())) {
                        next.push((n, nb));
                    }
                }
            }
            states = next;
            i = j;
        }
        let mut seen = HashSet::new();
        states
            .into_iter()
            .map(|(_, b)| b)
            .filter(|b| seen.insert(b.clone()))
            .collect()
    }

    /// Counts embeddings of a pattern whose named variables are all bound in
    /// `b`, summing the tapped attribute when `tap` is set.
    fn count(&self, p: &CompiledPattern, b: &Binding, tap: Option<&(usize, String)>) -> (Acc, Option<EdgeId>) {
        let last = p.atoms.len() - 1;
        let pivot = p
            .atoms
            .iter()
            .position(|a| a.var.is_some_and(|x| b[x].is_some()));
        let (pivot, starts) = match pivot {
            Some(k) => (k, vec![b[p.atoms[k].var.unwrap()].unwrap()]),
            None => (0, self.graph.vertices_of(p.atoms[0].kind).to_vec()),
        };
        let mut total = Acc::default();
        let mut bad_edge = None;
        for s in starts {
            if self.place(p.atoms[pivot], s, b).is_none() {
                continue;
            }
            let (l, e1) = self.sweep(p, pivot, 0, s, b, tap);
            if l.count == 0.0 {
                continue;
            }
            let (r, e2) = self.sweep(p, pivot, last, s, b, tap);
            total.count += l.count * r.count;
            total.sum += l.sum * r.count + l.count * r.sum;
            total.bad += l.bad * r.count + l.count * r.bad;
            bad_edge = bad_edge.or(e1).or(e2);
        }
        (total, bad_edge)
    }

    fn sweep(
        &self,
        p: &CompiledPattern,
        from: usize,
        to: usize,
        start: VertexId,
        b: &Binding,
        tap: Option<&(usize, String)>,
    ) -> (Acc, Option<EdgeId>) {
        let mut states: Vec<(VertexId, Acc)> = vec![(
            start,
            Acc {
                count: 1.0,
                ..Acc::default()
            },
        )];
        let mut bad_edge = None;
        let mut i = from;
        while i != to && !states.is_empty() {
            let j = if to > i { i + 1 } else { i - 1 };
            let (edge, dir, step) = step_between(p, i, j);
            let atom = p.atoms[j];
            let target = atom.var.and_then(|x| b[x]);
            let tapped = tap.filter(|(s, _)| *s == step).map(|(_, a)| a.as_str());
            let mut index: HashMap<VertexId, usize> = HashMap::new();
            let mut next: Vec<(VertexId, Acc)> = Vec::new();
            for &(v, acc) in &states {
                for &(n, e) in self.hop(v, edge, dir, target) {
                    if self.place(atom, n, b).is_none() {
                        continue;
                    }
                    let mut add = acc;
                    if let Some(attr) = tapped {
                        match self.graph.edges()[e.index()]
                            .attrs
                            .get(attr)
                            .and_then(AttrValue::as_f64)
                        {
                            Some(x) => add.sum = acc.sum + acc.count * x,
                            None => {
                                add.bad = acc.bad + acc.count;
                                bad_edge = bad_edge.or(Some(e));
                            }
                        }
                    }
                    let slot = *index.entry(n).or_insert_with(|| {
                        next.push((n, Acc::default()));
                        next.len() - 1
                    });
                    let cur = &mut next[slot].1;
                    cur.count += add.count;
                    cur.sum += add.sum;
                    cur.bad += add.bad;
                }
            }
            states = next;
            i = j;
        }
        let mut total = Acc::default();
        for (_, a) in states {
            total.count += a.count;
            total.sum += a.sum;
            total.bad += a.bad;
        }
        (total, bad_edge)
    }

    fn avg(&self, order: &CompiledOrder, b: &Binding) -> Result<Option<f64>, ExecError> {
        let (acc, bad_edge) = self.count(&order.pattern, b, order.pattern.tap.as_ref());
        if acc.bad > 0.0 {
            return Err(ExecError::TapAttributeMissing {
                edge: bad_edge.expect("a bad path records its edge"),
                attr: order.attr.clone(),
            });
        }
        Ok((acc.count > 0.0).then(|| acc.sum / acc.count))
    }
}

/// Mean of the tapped attribute over the embeddings of the aggregate
/// pattern consistent with `binding`; `None` with no embeddings.
pub fn aggregate_avg(
    query: &TypedQuery,
    binding: &[Option<VertexId>],
    graph: &PropertyGraph,
) -> Result<Option<f64>, ExecError> {
    let Some(order) = &query.order else {
        return Ok(None);
    };
    Exec::new(graph, query).avg(order, &binding.to_vec())
}

fn compare_rows(a: &(Binding, Option<f64>), b: &(Binding, Option<f64>), dir: SortDirection) -> Ordering {
    let keyed = match (a.1, b.1) {
        (Some(x), Some(y)) => match dir {
            SortDirection::Desc => y.total_cmp(&x),
            SortDirection::Asc => x.total_cmp(&y),
        },
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    keyed.then_with(|| a.0.cmp(&b.0))
}

/// Rows after LIMIT, plus the row count before it.
pub fn evaluate_counted(
    query: &TypedQuery,
    graph: &PropertyGraph,
) -> Result<(Vec<ResultRow>, usize), ExecError> {
    if !graph.is_frozen() {
        return Err(ExecError::NotFrozen);
    }
    let exec = Exec::new(graph, query);
    let mut bindings: Vec<Binding> = vec![vec![None; query.vars.len()]];
    for p in &query.patterns {
        bindings = exec.join(p, bindings);
        if bindings.is_empty() {
            break;
        }
    }
    let kept: Vec<Binding> = bindings
        .into_par_iter()
        .filter(|b| {
            query
                .antipatterns
                .iter()
                .all(|p| exec.count(p, b, None).0.count == 0.0)
        })
        .collect();
    let mut keyed: Vec<(Binding, Option<f64>)> = kept
        .into_par_iter()
        .map(|b| {
            let key = match &query.order {
                Some(o) => exec.avg(o, &b)?,
                None => None,
            };
            Ok((b, key))
        })
        .collect::<Result<_, ExecError>>()?;
    let dir = query
        .order
        .as_ref()
        .map_or(SortDirection::Desc, |o| o.direction);
    keyed.sort_by(|a, b| compare_rows(a, b, dir));
    let total = keyed.len();
    if let Some(limit) = query.limit {
        keyed.truncate(limit);
    }
    let rows = keyed
        .into_iter()
        .map(|(b, sort_key)| {
            let cells = query
                .projections
                .iter()
                .map(|p| {
                    let v = b[p.var].expect("all variables bound");
                    graph.vertices()[v.index()].attrs.get(&p.attr).cloned()
                })
                .collect();
            let binding = query
                .vars
                .iter()
                .zip(&b)
                .map(|(info, v)| (info.name.clone(), v.expect("all variables bound")))
                .collect();
            ResultRow {
                cells,
                sort_key,
                binding,
            }
        })
        .collect();
    Ok((rows, total))
}

pub fn evaluate(query: &TypedQuery, graph: &PropertyGraph) -> Result<Vec<ResultRow>, ExecError> {
    evaluate_counted(query, graph).map(|(rows, _)| rows)
}

/// Tabular result shared by the CLI and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub elapsed_ms: f64,
    /// Row count before LIMIT.
    pub total_rows: usize,
    /// Query text that produced the rows, when it was generated server side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

impl QueryResponse {
    /// Tab-separated rows, one line each, without a header.
    pub fn to_tsv(&self) -> String {
        self.rows
            .iter()
            .map(|r| r.iter().map(render_cell).collect::<Vec<_>>().join("\t") + "\n")
            .collect()
    }
}

/// Text form of a cell: empty for null, reals rounded to ten decimals.
pub fn render_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => {
            let s = format!("{:.10}", n.as_f64().unwrap_or(0.0));
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" {
                "0".into()
            } else {
                s.to_owned()
            }
        }
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

pub fn respond(query: &TypedQuery, graph: &PropertyGraph) -> Result<QueryResponse, ExecError> {
    let started = Instant::now();
    let (rows, total_rows) = evaluate_counted(query, graph)?;
    let rows = rows
        .into_iter()
        .map(|r| {
            let mut cells: Vec<Value> = r
                .cells
                .iter()
                .map(|c| c.as_ref().map_or(Value::Null, AttrValue::to_json))
                .collect();
            if query.order.is_some() {
                cells.push(r.sort_key.map_or(Value::Null, Value::from));
            }
            cells
        })
        .collect();
    Ok(QueryResponse {
        columns: query.columns(),
        rows,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        total_rows,
        query: None,
    })
}

/// Compiles and evaluates query text.
pub fn run_query(text: &str, graph: &PropertyGraph) -> Result<QueryResponse, RunError> {
    let q = compile(text)?;
    Ok(respond(&q, graph)?)
}
