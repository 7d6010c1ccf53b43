//! Brute-force query evaluator and random case generator. Enumerates every
//! variable assignment and every embedding with no indexing, working from
//! the parsed AST rather than the executor's compiled form.

#![allow(dead_code)]

use std::cmp::Ordering;

use attaingraph_core::graphstore::{
    attrs, AttrValue, Attrs, EdgeKind, PropertyGraph, VertexId, VertexKind,
};
use attaingraph_core::querylang::{CmpOp, Literal, Pattern, QueryAst, SortDirection, VarRef};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub binding: Vec<VertexId>,
    pub key: Option<f64>,
    pub cells: Vec<Option<AttrValue>>,
}

fn var_order(ast: &QueryAst) -> Vec<(String, VertexKind)> {
    let mut vars: Vec<(String, VertexKind)> = Vec::new();
    let referenced: Vec<VertexKind> = ast
        .select
        .iter()
        .chain(ast.conditions.iter().map(|c| &c.target))
        .filter_map(|p| match p.var {
            VarRef::Kind(k) => Some(k),
            _ => None,
        })
        .collect();
    for p in &ast.patterns {
        for a in &p.vertices {
            let name = match &a.var {
                Some(n) => n.clone(),
                None if referenced.contains(&a.kind) => a.kind.symbol().to_owned(),
                None => continue,
            };
            if !vars.iter().any(|(n, _)| *n == name) {
                vars.push((name, a.kind));
            }
        }
    }
    vars
}

fn lookup(vars: &[(String, VertexKind)], assign: &[VertexId], name: &str) -> Option<VertexId> {
    vars.iter().position(|(n, _)| n == name).map(|i| assign[i])
}

fn var_of(r: &VarRef) -> String {
    match r {
        VarRef::Named { name, .. } => name.clone(),
        VarRef::Kind(k) => k.symbol().to_owned(),
    }
}

fn edge_matches(g: &PropertyGraph, kind: EdgeKind, x: VertexId, y: VertexId) -> Vec<usize> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            e.kind == kind
                && ((e.src == x && e.dst == y) || (e.src == y && e.dst == x))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Every embedding as (vertices, edge indices). `fixed[i]` pins atom `i`.
fn all_embeddings(
    g: &PropertyGraph,
    p: &Pattern,
    fixed: &[Option<VertexId>],
) -> Vec<(Vec<VertexId>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut verts = Vec::new();
    fn rec(
        g: &PropertyGraph,
        p: &Pattern,
        fixed: &[Option<VertexId>],
        verts: &mut Vec<VertexId>,
        out: &mut Vec<(Vec<VertexId>, Vec<usize>)>,
    ) {
        let i = verts.len();
        if i == p.vertices.len() {
            // expand edge choices
            let mut partial: Vec<Vec<usize>> = vec![Vec::new()];
            for s in 0..p.edges.len() {
                let choices = edge_matches(g, p.edges[s].kind, verts[s], verts[s + 1]);
                let mut next = Vec::new();
                for pre in &partial {
                    for &c in &choices {
                        let mut v = pre.clone();
                        v.push(c);
                        next.push(v);
                    }
                }
                partial = next;
            }
            for edges in partial {
                out.push((verts.clone(), edges));
            }
            return;
        }
        for v in g.vertices() {
            if v.kind != p.vertices[i].kind {
                continue;
            }
            if let Some(f) = fixed[i] {
                if f != v.id {
                    continue;
                }
            }
            // kinds on edges are implied by atom kinds, and edge_matches
            // checks incidence
            verts.push(v.id);
            rec(g, p, fixed, verts, out);
            verts.pop();
        }
    }
    rec(g, p, fixed, &mut verts, &mut out);
    out
}

/// Atoms pinned by the assignment. In positive patterns an anonymous atom
/// whose kind is referenced as `V_X.attr` is the referenced vertex.
fn pins(
    p: &Pattern,
    vars: &[(String, VertexKind)],
    assign: &[VertexId],
    positive: bool,
) -> Vec<Option<VertexId>> {
    p.vertices
        .iter()
        .map(|a| match a.var.as_deref() {
            Some(n) => lookup(vars, assign, n),
            None if positive => lookup(vars, assign, a.kind.symbol()),
            None => None,
        })
        .collect()
}

fn holds(value: Option<&AttrValue>, op: CmpOp, lit: &Literal) -> bool {
    let Some(value) = value else { return false };
    if let Literal::Str(s) = lit {
        // string literals: equality on the attribute's text form only
        let text = match value {
            AttrValue::Text(t) => t.clone(),
            other => other.to_string(),
        };
        return match op {
            CmpOp::Eq => text == *s,
            CmpOp::Ne => text != *s,
            _ => false,
        };
    }
    // numeric literals: numeric-looking text (steamids) is read as a number
    let as_int = match value {
        AttrValue::Int(a) => Some(*a),
        AttrValue::Text(t) => t.parse::<i64>().ok(),
        _ => None,
    };
    let as_real = match value {
        AttrValue::Real(a) => Some(*a),
        AttrValue::Int(a) => Some(*a as f64),
        AttrValue::Text(t) => t.parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    };
    let ord = match (lit, as_int, as_real) {
        (Literal::Int(b), Some(a), _) => a.cmp(b),
        (Literal::Int(b), None, Some(a)) => a.partial_cmp(&(*b as f64)).unwrap(),
        (Literal::Real(b), _, Some(a)) => a.partial_cmp(b).unwrap(),
        _ => return op == CmpOp::Ne,
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

pub fn evaluate(ast: &QueryAst, g: &PropertyGraph) -> Vec<OracleRow> {
    let vars = var_order(ast);
    let domains: Vec<Vec<VertexId>> = vars
        .iter()
        .map(|(_, k)| g.vertices().iter().filter(|v| v.kind == *k).map(|v| v.id).collect())
        .collect();
    let mut rows = Vec::new();
    let mut assign = vec![VertexId(0); vars.len()];
    fn each(
        i: usize,
        domains: &[Vec<VertexId>],
        assign: &mut Vec<VertexId>,
        f: &mut dyn FnMut(&[VertexId]),
    ) {
        if i == domains.len() {
            f(assign);
            return;
        }
        for &v in &domains[i] {
            assign[i] = v;
            each(i + 1, domains, assign, f);
        }
    }
    each(0, &domains, &mut assign, &mut |a: &[VertexId]| {
        for c in &ast.conditions {
            let v = lookup(&vars, a, &var_of(&c.target.var)).unwrap();
            if !holds(g.vertices()[v.index()].attrs.get(&c.target.attr), c.op, &c.value) {
                return;
            }
        }
        for p in &ast.patterns {
            if all_embeddings(g, p, &pins(p, &vars, a, true)).is_empty() {
                return;
            }
        }
        for p in &ast.antipatterns {
            if !all_embeddings(g, p, &pins(p, &vars, a, false)).is_empty() {
                return;
            }
        }
        let key = ast.order_by.as_ref().and_then(|o| {
            let p = &o.agg.pattern;
            let step = p.edges.iter().position(|e| e.tap.is_some()).unwrap();
            let attr = p.edges[step].tap.as_deref().unwrap();
            let embs = all_embeddings(g, p, &pins(p, &vars, a, false));
            if embs.is_empty() {
                return None;
            }
            let mut sum = 0.0;
            for (_, edges) in &embs {
                sum += g.edges()[edges[step]].attrs[attr].as_f64().unwrap();
            }
            Some(sum / embs.len() as f64)
        });
        let cells = ast
            .select
            .iter()
            .map(|p| {
                let v = lookup(&vars, a, &var_of(&p.var)).unwrap();
                g.vertices()[v.index()].attrs.get(&p.attr).cloned()
            })
            .collect();
        rows.push(OracleRow {
            binding: a.to_vec(),
            key,
            cells,
        });
    });
    let desc = ast
        .order_by
        .as_ref()
        .is_none_or(|o| o.direction == SortDirection::Desc);
    rows.sort_by(|x, y| {
        let k = match (x.key, y.key) {
            (Some(a), Some(b)) if desc => b.partial_cmp(&a).unwrap(),
            (Some(a), Some(b)) => a.partial_cmp(&b).unwrap(),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        k.then_with(|| x.binding.cmp(&y.binding))
    });
    if let Some(l) = ast.limit {
        rows.truncate(l as usize);
    }
    rows
}

/// Random graph with at most 8 players, 8 games, 3 developers and 3 genres
/// (so at most 22 vertices). Ownership ratings are multiples of 1/8 so sums
/// are exact in any order.
pub fn random_graph(rng: &mut impl Rng) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let np = rng.random_range(1..=8);
    let ng = rng.random_range(1..=8);
    let nd = rng.random_range(1..=3);
    let nr = rng.random_range(1..=3);
    fn with_score(
        g: &mut PropertyGraph,
        kind: VertexKind,
        key: &str,
        i: usize,
        rng: &mut dyn RngCore,
    ) -> VertexId {
        let mut a = attrs([(key, format!("{}{i}", kind.symbol()))]);
        if rng.random_bool(0.8) {
            a.insert("score".into(), AttrValue::Int(rng.random_range(0..4)));
        }
        g.add_vertex(kind, a).unwrap()
    }
    let players: Vec<_> = (0..np)
        .map(|i| with_score(&mut g, VertexKind::Player, "steamid", i, rng))
        .collect();
    let games: Vec<_> = (0..ng)
        .map(|i| with_score(&mut g, VertexKind::Game, "name", i, rng))
        .collect();
    let devs: Vec<_> = (0..nd)
        .map(|i| with_score(&mut g, VertexKind::Developer, "name", i, rng))
        .collect();
    let genres: Vec<_> = (0..nr)
        .map(|i| with_score(&mut g, VertexKind::Genre, "description", i, rng))
        .collect();
    let density = rng.random_range(0.25..0.7);
    for i in 0..np {
        for j in i + 1..np {
            if rng.random_bool(density) {
                g.add_edge(EdgeKind::Friend, players[i], players[j], Attrs::new()).unwrap();
            }
        }
    }
    for &p in &players {
        for &game in &games {
            if rng.random_bool(density) {
                let mut a = Attrs::new();
                a.insert(
                    "attainmentRating".into(),
                    AttrValue::Real(rng.random_range(0..8) as f64 / 8.0),
                );
                g.add_edge(EdgeKind::Owns, p, game, a).unwrap();
            }
        }
    }
    for &game in &games {
        for &d in &devs {
            if rng.random_bool(0.5) {
                g.add_edge(EdgeKind::DevelopedBy, game, d, Attrs::new()).unwrap();
            }
        }
        for &r in &genres {
            if rng.random_bool(0.5) {
                g.add_edge(EdgeKind::HasGenre, game, r, Attrs::new()).unwrap();
            }
        }
    }
    g.freeze();
    g
}

fn pool(kind: VertexKind) -> &'static [&'static str] {
    match kind {
        VertexKind::Player => &["p", "q"],
        VertexKind::Game => &["g", "h"],
        VertexKind::Developer => &["d"],
        VertexKind::Genre => &["r"],
    }
}

fn neighbors_in_schema(kind: VertexKind) -> Vec<(EdgeKind, VertexKind)> {
    match kind {
        VertexKind::Player => vec![
            (EdgeKind::Friend, VertexKind::Player),
            (EdgeKind::Owns, VertexKind::Game),
        ],
        VertexKind::Game => vec![
            (EdgeKind::Owns, VertexKind::Player),
            (EdgeKind::DevelopedBy, VertexKind::Developer),
            (EdgeKind::HasGenre, VertexKind::Genre),
        ],
        VertexKind::Developer => vec![(EdgeKind::DevelopedBy, VertexKind::Game)],
        VertexKind::Genre => vec![(EdgeKind::HasGenre, VertexKind::Game)],
    }
}

/// A random schema-legal walk as text. `name` decides each atom's label.
fn walk_text(
    rng: &mut impl Rng,
    start: VertexKind,
    steps: usize,
    name: &mut dyn FnMut(&mut dyn RngCore, VertexKind) -> Option<String>,
    tap_owns: bool,
) -> Option<String> {
    let atom = |kind: VertexKind, label: Option<String>| match label {
        Some(l) => format!("{kind}({l})"),
        None => kind.to_string(),
    };
    let mut kind = start;
    let mut text = atom(kind, name(rng, kind));
    let mut tapped = false;
    for _ in 0..steps {
        let opts = neighbors_in_schema(kind);
        let (edge, next) = opts[rng.random_range(0..opts.len())];
        let tap = if tap_owns && !tapped && edge == EdgeKind::Owns {
            tapped = true;
            ".attainmentRating"
        } else {
            ""
        };
        kind = next;
        text.push_str(&format!("-{edge}{tap}-{}", atom(kind, name(rng, kind))));
    }
    (!tap_owns || tapped).then_some(text)
}

fn random_kind(rng: &mut impl Rng) -> VertexKind {
    VertexKind::ALL[rng.random_range(0..4)]
}

/// Random valid query text together with its bound variables.
pub fn random_query(rng: &mut impl Rng) -> String {
    let mut bound: Vec<(String, VertexKind)> = Vec::new();
    let n_pos = rng.random_range(1..=3);
    let mut positives = Vec::new();
    for _ in 0..n_pos {
        let mut namer = |r: &mut dyn RngCore, k: VertexKind| {
            if r.random_bool(0.4) {
                let names = pool(k);
                let n = names[r.random_range(0..names.len())].to_owned();
                if !bound.iter().any(|(b, _)| *b == n) {
                    bound.push((n.clone(), k));
                }
                Some(n)
            } else {
                None
            }
        };
        let steps = rng.random_range(0..=3);
        let start = random_kind(rng);
        positives.push(walk_text(rng, start, steps, &mut namer, false).unwrap());
    }
    if bound.is_empty() {
        // keep within three positive patterns
        positives.truncate(2);
        let k = random_kind(rng);
        let n = pool(k)[0].to_owned();
        positives.push(format!("{k}({n})"));
        bound.push((n, k));
    }
    let bound_name = |r: &mut dyn RngCore, k: VertexKind| -> Option<String> {
        let cands: Vec<&String> = bound.iter().filter(|(_, bk)| *bk == k).map(|(n, _)| n).collect();
        (!cands.is_empty() && r.random_bool(0.8)).then(|| cands[r.random_range(0..cands.len())].clone())
    };

    let mut anti = Vec::new();
    let n_anti = if rng.random_bool(0.5) { 0 } else { rng.random_range(1..=2) };
    for _ in 0..n_anti {
        // mostly anchored to a bound variable; a fully anonymous antipattern
        // usually empties the result
        for attempt in 0..10 {
            let mut namer = |r: &mut dyn RngCore, k: VertexKind| bound_name(r, k);
            let steps = rng.random_range(1..=2);
            let start = random_kind(rng);
            let t = walk_text(rng, start, steps, &mut namer, false).unwrap();
            if t.contains('(') || attempt == 9 {
                anti.push(t);
                break;
            }
        }
    }

    let mut order = None;
    if rng.random_bool(0.7) {
        for _ in 0..20 {
            let mut namer = |r: &mut dyn RngCore, k: VertexKind| bound_name(r, k);
            let steps = rng.random_range(1..=3);
            let start = if rng.random_bool(0.5) {
                VertexKind::Player
            } else {
                random_kind(rng)
            };
            if let Some(t) = walk_text(rng, start, steps, &mut namer, true) {
                order = Some(t);
                break;
            }
        }
    }

    let pick = |r: &mut dyn RngCore| bound[r.random_range(0..bound.len())].clone();
    let mut select = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        let (n, k) = pick(rng);
        let attr = match rng.random_range(0..3) {
            0 => k.required_attr(),
            1 => "score",
            _ => "missing",
        };
        select.push(format!("{n}.{attr}"));
    }
    let mut conds = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        let (n, k) = pick(rng);
        if rng.random_bool(0.3) {
            let idx = rng.random_range(0..4);
            conds.push(format!("{n}.{}=\"{}{idx}\"", k.required_attr(), k.symbol()));
        } else {
            let op = ["=", "!=", "<", "<=", ">", ">="][rng.random_range(0..6)];
            conds.push(format!("{n}.score{op}{}", rng.random_range(0..4)));
        }
    }

    let mut text = format!("SELECT {} PATTERNS {}", select.join(", "), positives.join(" "));
    if !anti.is_empty() {
        text.push_str(&format!(" ANTIPATTERNS {}", anti.join(" ")));
    }
    if !conds.is_empty() {
        text.push_str(&format!(" WHERE {}", conds.join(" AND ")));
    }
    if let Some(o) = order {
        let dir = if rng.random_bool(0.5) { "ASC" } else { "DESC" };
        text.push_str(&format!(" ORDERBY AVG({o}) {dir}"));
    }
    if rng.random_bool(0.4) {
        text.push_str(&format!(" LIMIT {}", rng.random_range(1..=5)));
    }
    text
}

pub fn case_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
