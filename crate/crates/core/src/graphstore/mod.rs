//! Typed in-memory property graph.
//!
//! Four vertex kinds (players, games, developers, genres) and four edge kinds
//! with fixed endpoint rules. Ids are dense and assigned in insertion order.
//! The graph is built single-threaded, annotated, then frozen; after
//! [`PropertyGraph::freeze`] every mutation is rejected and the graph can be
//! shared freely across threads.

mod dataset;

pub use dataset::{canonical_form, load_dataset, save_dataset, Dataset, DatasetError, MANIFEST};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Player,
    Game,
    Developer,
    Genre,
}

impl VertexKind {
    pub const ALL: [VertexKind; 4] = [
        VertexKind::Player,
        VertexKind::Game,
        VertexKind::Developer,
        VertexKind::Genre,
    ];

    /// Token used by the query language (`V_P`, `V_G`, ...).
    pub fn symbol(self) -> &'static str {
        match self {
            VertexKind::Player => "V_P",
            VertexKind::Game => "V_G",
            VertexKind::Developer => "V_D",
            VertexKind::Genre => "V_R",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.symbol() == s)
    }

    /// The attribute every vertex of this kind must carry.
    pub fn required_attr(self) -> &'static str {
        match self {
            VertexKind::Player => "steamid",
            VertexKind::Game => "name",
            VertexKind::Developer => "name",
            VertexKind::Genre => "description",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Friend,
    Owns,
    DevelopedBy,
    HasGenre,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [
        EdgeKind::Friend,
        EdgeKind::Owns,
        EdgeKind::DevelopedBy,
        EdgeKind::HasGenre,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            EdgeKind::Friend => "E_F",
            EdgeKind::Owns => "E_O",
            EdgeKind::DevelopedBy => "E_D",
            EdgeKind::HasGenre => "E_R",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.symbol() == s)
    }

    /// `(source kind, target kind)` of the stored edge.
    pub fn endpoints(self) -> (VertexKind, VertexKind) {
        match self {
            EdgeKind::Friend => (VertexKind::Player, VertexKind::Player),
            EdgeKind::Owns => (VertexKind::Player, VertexKind::Game),
            EdgeKind::DevelopedBy => (VertexKind::Game, VertexKind::Developer),
            EdgeKind::HasGenre => (VertexKind::Game, VertexKind::Genre),
        }
    }

    pub fn is_undirected(self) -> bool {
        matches!(self, EdgeKind::Friend)
    }

    /// Direction in which an edge of this kind is traversed when walking from
    /// a `from` vertex to a `to` vertex, or `None` if the triple is illegal.
    pub fn traversal(self, from: VertexKind, to: VertexKind) -> Option<Direction> {
        let (src, dst) = self.endpoints();
        if self.is_undirected() {
            (from == src && to == dst).then_some(Direction::Any)
        } else if from == src && to == dst {
            Some(Direction::Out)
        } else if from == dst && to == src {
            Some(Direction::In)
        } else {
            None
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
    Any,
}

/// Scalar attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Int(i) => Some(*i as f64),
            AttrValue::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Converts a JSON scalar. Arrays, objects, null and non-finite numbers
    /// yield `None`.
    pub fn from_json(value: &serde_json::Value) -> Option<Self> {
        match value {
            serde_json::Value::Bool(b) => Some(AttrValue::Bool(*b)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(AttrValue::Int(i))
                } else {
                    n.as_f64().filter(|f| f.is_finite()).map(AttrValue::Real)
                }
            }
            serde_json::Value::String(s) => Some(AttrValue::Text(s.clone())),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AttrValue::Bool(b) => serde_json::Value::Bool(*b),
            AttrValue::Int(i) => serde_json::Value::from(*i),
            AttrValue::Real(r) => serde_json::Value::from(*r),
            AttrValue::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(i) => write!(f, "{i}"),
            // Shortest representation that round-trips to the same f64.
            AttrValue::Real(r) => write!(f, "{r}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Text(s.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Text(s)
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Real(v)
    }
}

impl From<i64> for AttrValue {
    fn from(v: i64) -> Self {
        AttrValue::Int(v)
    }
}

impl From<bool> for AttrValue {
    fn from(v: bool) -> Self {
        AttrValue::Bool(v)
    }
}

pub type Attrs = BTreeMap<String, AttrValue>;

/// Builds an attribute map from `(name, value)` pairs.
pub fn attrs<I, K, V>(pairs: I) -> Attrs
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<AttrValue>,
{
    pairs
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    pub attrs: Attrs,
    /// Non-scalar fields (e.g. game tags) kept verbatim for load/save.
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub kind: EdgeKind,
    pub src: VertexId,
    pub dst: VertexId,
    pub attrs: Attrs,
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Edge {
    /// The endpoint opposite to `v`.
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.src == v {
            self.dst
        } else {
            self.src
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("missing required attribute `{0}`")]
    MissingRequiredAttr(&'static str),
    #[error("invalid attribute: {0}")]
    InvalidAttr(String),
    #[error("{kind} edge cannot join {src_kind} -> {dst_kind}")]
    EndpointKindMismatch {
        kind: EdgeKind,
        src_kind: VertexKind,
        dst_kind: VertexKind,
    },
    #[error("player {0} cannot befriend itself")]
    SelfFriend(VertexId),
    #[error("duplicate {kind} edge {src} -> {dst}")]
    DuplicateEdge {
        kind: EdgeKind,
        src: VertexId,
        dst: VertexId,
    },
    #[error("duplicate steamid `{0}`")]
    DuplicateSteamId(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("graph is frozen")]
    Frozen,
}

#[derive(Debug, Clone, Default)]
struct Adjacency {
    // (neighbor, edge) pairs; sorted by neighbor once frozen.
    out: Vec<(VertexId, EdgeId)>,
    inc: Vec<(VertexId, EdgeId)>,
}

#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    // adjacency[vertex][edge kind]
    adjacency: Vec<[Adjacency; 4]>,
    by_kind: [Vec<VertexId>; 4],
    edge_counts: [usize; 4],
    edge_keys: HashSet<(EdgeKind, VertexId, VertexId)>,
    steamids: HashMap<String, VertexId>,
    sorted: bool,
    frozen: bool,
}

fn check_attrs(attrs: &Attrs) -> Result<(), GraphError> {
    for (name, value) in attrs {
        if name.is_empty() {
            return Err(GraphError::InvalidAttr("empty attribute name".into()));
        }
        if let AttrValue::Real(r) = value {
            if !r.is_finite() {
                return Err(GraphError::InvalidAttr(format!("`{name}` is not finite")));
            }
        }
    }
    Ok(())
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self {
            sorted: true,
            ..Default::default()
        }
    }

    pub fn add_vertex(&mut self, kind: VertexKind, attrs: Attrs) -> Result<VertexId, GraphError> {
        self.add_vertex_with_extra(kind, attrs, BTreeMap::new())
    }

    pub fn add_vertex_with_extra(
        &mut self,
        kind: VertexKind,
        attrs: Attrs,
        extra: BTreeMap<String, serde_json::Value>,
    ) -> Result<VertexId, GraphError> {
        if self.frozen {
            return Err(GraphError::Frozen);
        }
        let required = kind.required_attr();
        if !attrs.contains_key(required) {
            return Err(GraphError::MissingRequiredAttr(required));
        }
        check_attrs(&attrs)?;
        let id = VertexId(self.vertices.len() as u32);
        if kind == VertexKind::Player {
            let steamid = attrs[required].to_string();
            if self.steamids.contains_key(&steamid) {
                return Err(GraphError::DuplicateSteamId(steamid));
            }
            self.steamids.insert(steamid, id);
        }
        self.vertices.push(Vertex {
            id,
            kind,
            attrs,
            extra,
        });
        self.adjacency.push(Default::default());
        self.by_kind[kind.slot()].push(id);
        Ok(id)
    }

    pub fn add_edge(
        &mut self,
        kind: EdgeKind,
        src: VertexId,
        dst: VertexId,
        attrs: Attrs,
    ) -> Result<EdgeId, GraphError> {
        self.add_edge_with_extra(kind, src, dst, attrs, BTreeMap::new())
    }

    pub fn add_edge_with_extra(
        &mut self,
        kind: EdgeKind,
        src: VertexId,
        dst: VertexId,
        attrs: Attrs,
        extra: BTreeMap<String, serde_json::Value>,
    ) -> Result<EdgeId, GraphError> {
        if self.frozen {
            return Err(GraphError::Frozen);
        }
        let src_kind = self.vertex(src)?.kind;
        let dst_kind = self.vertex(dst)?.kind;
        if (src_kind, dst_kind) != kind.endpoints() {
            return Err(GraphError::EndpointKindMismatch {
                kind,
                src_kind,
                dst_kind,
            });
        }
        check_attrs(&attrs)?;
        let (src, dst) = if kind.is_undirected() {
            if src == dst {
                return Err(GraphError::SelfFriend(src));
            }
            (src.min(dst), src.max(dst))
        } else {
            (src, dst)
        };
        if !self.edge_keys.insert((kind, src, dst)) {
            return Err(GraphError::DuplicateEdge { kind, src, dst });
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            id,
            kind,
            src,
            dst,
            attrs,
            extra,
        });
        let slot = kind.slot();
        let push = |list: &mut Vec<(VertexId, EdgeId)>, n: VertexId, sorted: &mut bool| {
            if list.last().is_some_and(|&(last, _)| last > n) {
                *sorted = false;
            }
            list.push((n, id));
        };
        if kind.is_undirected() {
            // Both endpoints see the edge in their `out` list.
            push(&mut self.adjacency[src.index()][slot].out, dst, &mut self.sorted);
            push(&mut self.adjacency[dst.index()][slot].out, src, &mut self.sorted);
        } else {
            push(&mut self.adjacency[src.index()][slot].out, dst, &mut self.sorted);
            push(&mut self.adjacency[dst.index()][slot].inc, src, &mut self.sorted);
        }
        self.edge_counts[slot] += 1;
        Ok(id)
    }

    pub fn set_edge_attr(
        &mut self,
        edge: EdgeId,
        name: &str,
        value: AttrValue,
    ) -> Result<(), GraphError> {
        if self.frozen {
            return Err(GraphError::Frozen);
        }
        if name.is_empty() {
            return Err(GraphError::InvalidAttr("empty attribute name".into()));
        }
        if let AttrValue::Real(r) = value {
            if !r.is_finite() {
                return Err(GraphError::InvalidAttr(format!("`{name}` is not finite")));
            }
        }
        let e = self
            .edges
            .get_mut(edge.index())
            .ok_or(GraphError::UnknownEdge(edge))?;
        e.attrs.insert(name.to_owned(), value);
        Ok(())
    }

    /// Sorts adjacency lists and rejects any further mutation.
    pub fn freeze(&mut self) {
        if !self.sorted {
            for lists in &mut self.adjacency {
                for adj in lists.iter_mut() {
                    adj.out.sort_unstable();
                    adj.inc.sort_unstable();
                }
            }
            self.sorted = true;
        }
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn vertex(&self, id: VertexId) -> Result<&Vertex, GraphError> {
        self.vertices
            .get(id.index())
            .ok_or(GraphError::UnknownVertex(id))
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge, GraphError> {
        self.edges.get(id.index()).ok_or(GraphError::UnknownEdge(id))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn count(&self, kind: VertexKind) -> usize {
        self.by_kind[kind.slot()].len()
    }

    pub fn edge_count_of(&self, kind: EdgeKind) -> usize {
        self.edge_counts[kind.slot()]
    }

    /// Vertex ids of one kind, ascending.
    pub fn vertices_of(&self, kind: VertexKind) -> &[VertexId] {
        &self.by_kind[kind.slot()]
    }

    pub fn player_by_steamid(&self, steamid: &str) -> Option<VertexId> {
        self.steamids.get(steamid).copied()
    }

    pub fn kind_of(&self, v: VertexId) -> VertexKind {
        self.vertices[v.index()].kind
    }

    /// Raw adjacency slice for traversal. Only ordered by neighbor id after
    /// [`freeze`](Self::freeze); `Any` on a directed kind is not supported
    /// here (no vertex kind appears on both ends of a directed edge kind).
    pub fn adjacent(&self, v: VertexId, kind: EdgeKind, dir: Direction) -> &[(VertexId, EdgeId)] {
        let adj = &self.adjacency[v.index()][kind.slot()];
        if kind.is_undirected() {
            return &adj.out;
        }
        match dir {
            Direction::Out => &adj.out,
            Direction::In => &adj.inc,
            Direction::Any => {
                if adj.out.is_empty() {
                    &adj.inc
                } else {
                    &adj.out
                }
            }
        }
    }

    /// Neighbors of `v` over edges of `kind`, as `(edge, neighbor)` pairs in
    /// ascending neighbor order. Friend edges are symmetric regardless of
    /// `dir`.
    pub fn neighbors(
        &self,
        v: VertexId,
        kind: EdgeKind,
        dir: Direction,
    ) -> Result<Vec<(EdgeId, VertexId)>, GraphError> {
        self.vertex(v)?;
        let adj = &self.adjacency[v.index()][kind.slot()];
        let mut out: Vec<(VertexId, EdgeId)> = if kind.is_undirected() {
            adj.out.clone()
        } else {
            match dir {
                Direction::Out => adj.out.clone(),
                Direction::In => adj.inc.clone(),
                Direction::Any => adj.out.iter().chain(&adj.inc).copied().collect(),
            }
        };
        if !self.sorted || dir == Direction::Any {
            out.sort_unstable();
        }
        Ok(out.into_iter().map(|(n, e)| (e, n)).collect())
    }

    /// Looks up an edge by its endpoints. Friend lookups are order-insensitive.
    pub fn find_edge(&self, kind: EdgeKind, src: VertexId, dst: VertexId) -> Option<EdgeId> {
        let (src, dst) = if kind.is_undirected() {
            (src.min(dst), src.max(dst))
        } else {
            (src, dst)
        };
        if !self.edge_keys.contains(&(kind, src, dst)) {
            return None;
        }
        self.adjacency
            .get(src.index())?
            .get(kind.slot())?
            .out
            .iter()
            .find(|&&(n, _)| n == dst)
            .map(|&(_, e)| e)
    }

    /// Text form of a vertex's required attribute (steamid, name, ...).
    pub fn label(&self, v: VertexId) -> String {
        let vertex = &self.vertices[v.index()];
        vertex
            .attrs
            .get(vertex.kind.required_attr())
            .map(|a| a.to_string())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn player(g: &mut PropertyGraph, id: &str) -> VertexId {
        g.add_vertex(VertexKind::Player, attrs([("steamid", id)])).unwrap()
    }

    fn game(g: &mut PropertyGraph, name: &str) -> VertexId {
        g.add_vertex(VertexKind::Game, attrs([("name", name)])).unwrap()
    }

    #[test]
    fn first_vertex_gets_id_zero() {
        let mut g = PropertyGraph::new();
        let id = game(&mut g, "g1");
        assert_eq!(id, VertexId(0));
        assert_eq!(g.count(VertexKind::Game), 1);
    }

    #[test]
    fn missing_required_attr_is_named() {
        let mut g = PropertyGraph::new();
        let err = g.add_vertex(VertexKind::Player, Attrs::new()).unwrap_err();
        assert_eq!(err, GraphError::MissingRequiredAttr("steamid"));
        let err = g.add_vertex(VertexKind::Genre, Attrs::new()).unwrap_err();
        assert_eq!(err, GraphError::MissingRequiredAttr("description"));
    }

    #[test]
    fn game_count_at_full_scale() {
        let mut g = PropertyGraph::new();
        for i in 0..4487 {
            game(&mut g, &format!("g{i}"));
        }
        assert_eq!(g.count(VertexKind::Game), 4487);
    }

    #[test]
    fn non_finite_attr_rejected() {
        let mut g = PropertyGraph::new();
        let err = g
            .add_vertex(
                VertexKind::Game,
                attrs([("name", AttrValue::from("x")), ("cost", AttrValue::Real(f64::NAN))]),
            )
            .unwrap_err();
        assert!(matches!(err, GraphError::InvalidAttr(_)));
    }

    #[test]
    fn owns_edge_and_degree() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let x = game(&mut g, "g");
        let e = g
            .add_edge(EdgeKind::Owns, p, x, attrs([("attainmentRating", 0.25)]))
            .unwrap();
        assert_eq!(g.neighbors(p, EdgeKind::Owns, Direction::Out).unwrap(), vec![(e, x)]);
        assert_eq!(g.neighbors(x, EdgeKind::Owns, Direction::In).unwrap(), vec![(e, p)]);
        assert!(g.neighbors(x, EdgeKind::Owns, Direction::Out).unwrap().is_empty());
    }

    #[test]
    fn reversed_owns_is_mismatch() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let x = game(&mut g, "g");
        let err = g.add_edge(EdgeKind::Owns, x, p, Attrs::new()).unwrap_err();
        assert!(matches!(err, GraphError::EndpointKindMismatch { .. }));
    }

    #[test]
    fn self_friendship_rejected() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        assert_eq!(
            g.add_edge(EdgeKind::Friend, p, p, Attrs::new()).unwrap_err(),
            GraphError::SelfFriend(p)
        );
    }

    #[test]
    fn duplicate_edges_rejected_including_reversed_friendship() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let q = player(&mut g, "2");
        g.add_edge(EdgeKind::Friend, p, q, Attrs::new()).unwrap();
        let err = g.add_edge(EdgeKind::Friend, q, p, Attrs::new()).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge { .. }));
    }

    #[test]
    fn friendship_is_symmetric() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let q = player(&mut g, "2");
        let e = g.add_edge(EdgeKind::Friend, q, p, Attrs::new()).unwrap();
        for dir in [Direction::Out, Direction::In, Direction::Any] {
            assert_eq!(g.neighbors(p, EdgeKind::Friend, dir).unwrap(), vec![(e, q)]);
            assert_eq!(g.neighbors(q, EdgeKind::Friend, dir).unwrap(), vec![(e, p)]);
        }
        assert_eq!(g.edge_count_of(EdgeKind::Friend), 1);
    }

    #[test]
    fn isolated_vertex_has_no_neighbors() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        for kind in EdgeKind::ALL {
            assert!(g.neighbors(p, kind, Direction::Any).unwrap().is_empty());
        }
        assert_eq!(
            g.neighbors(VertexId(9), EdgeKind::Owns, Direction::Any),
            Err(GraphError::UnknownVertex(VertexId(9)))
        );
    }

    #[test]
    fn neighbors_sorted_even_when_inserted_out_of_order() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let g1 = game(&mut g, "g1");
        let g2 = game(&mut g, "g2");
        g.add_edge(EdgeKind::Owns, p, g2, Attrs::new()).unwrap();
        g.add_edge(EdgeKind::Owns, p, g1, Attrs::new()).unwrap();
        let ns: Vec<_> = g
            .neighbors(p, EdgeKind::Owns, Direction::Out)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(ns, vec![g1, g2]);
        g.freeze();
        let raw: Vec<_> = g
            .adjacent(p, EdgeKind::Owns, Direction::Out)
            .iter()
            .map(|&(v, _)| v)
            .collect();
        assert_eq!(raw, vec![g1, g2]);
    }

    #[test]
    fn edge_attr_write_read_and_overwrite() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        let x = game(&mut g, "g");
        let e = g.add_edge(EdgeKind::Owns, p, x, Attrs::new()).unwrap();
        g.set_edge_attr(e, "attainmentRating", AttrValue::Real(0.0)).unwrap();
        assert_eq!(g.edge(e).unwrap().attrs["attainmentRating"], AttrValue::Real(0.0));
        g.set_edge_attr(e, "attainmentRating", AttrValue::Real(0.2)).unwrap();
        g.set_edge_attr(e, "attainmentRating", AttrValue::Real(0.3)).unwrap();
        assert_eq!(g.edge(e).unwrap().attrs["attainmentRating"], AttrValue::Real(0.3));
        assert_eq!(
            g.set_edge_attr(EdgeId(7), "x", AttrValue::Int(1)),
            Err(GraphError::UnknownEdge(EdgeId(7)))
        );
    }

    #[test]
    fn frozen_graph_rejects_mutation() {
        let mut g = PropertyGraph::new();
        let p = player(&mut g, "1");
        g.freeze();
        assert_eq!(
            g.add_vertex(VertexKind::Game, attrs([("name", "x")])),
            Err(GraphError::Frozen)
        );
        assert_eq!(g.add_edge(EdgeKind::Friend, p, p, Attrs::new()), Err(GraphError::Frozen));
    }

    #[test]
    fn traversal_rules() {
        use VertexKind::*;
        assert_eq!(EdgeKind::Owns.traversal(Player, Game), Some(Direction::Out));
        assert_eq!(EdgeKind::Owns.traversal(Game, Player), Some(Direction::In));
        assert_eq!(EdgeKind::DevelopedBy.traversal(Developer, Game), Some(Direction::In));
        assert_eq!(EdgeKind::Friend.traversal(Player, Player), Some(Direction::Any));
        assert_eq!(EdgeKind::DevelopedBy.traversal(Player, Developer), None);
    }
}
