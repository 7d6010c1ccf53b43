//! Dataset directory format: a `manifest.json` plus seven line-delimited JSON
//! record files (players, games, developers, genres, friendships, ownership,
//! achievements). See the README for field-level documentation.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{AttrValue, Attrs, EdgeKind, GraphError, PropertyGraph, VertexId, VertexKind};
use crate::attainment::{AchievementTable, AttainmentError};

pub const MANIFEST: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: parse error: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: schema violation: {message}")]
    SchemaViolation {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: dangling reference: {message}")]
    DanglingReference {
        file: String,
        line: usize,
        message: String,
    },
}

/// A loaded dataset: the (unfrozen) graph and one achievement table per game.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub graph: PropertyGraph,
    pub achievements: Vec<AchievementTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    files: ManifestFiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestFiles {
    players: String,
    games: String,
    developers: String,
    genres: String,
    friendships: String,
    ownership: String,
    achievements: String,
}

impl Default for ManifestFiles {
    fn default() -> Self {
        Self {
            players: "players.jsonl".into(),
            games: "games.jsonl".into(),
            developers: "developers.jsonl".into(),
            genres: "genres.jsonl".into(),
            friendships: "friendships.jsonl".into(),
            ownership: "ownership.jsonl".into(),
            achievements: "achievements.jsonl".into(),
        }
    }
}

/// Reads one record file, calling `f` with (1-based line, object).
fn read_records(
    dir: &Path,
    file: &str,
    mut f: impl FnMut(usize, Map<String, Value>) -> Result<(), DatasetError>,
) -> Result<(), DatasetError> {
    let path = dir.join(file);
    let handle = fs::File::open(&path).map_err(|source| DatasetError::Io {
        path: path.clone(),
        source,
    })?;
    for (idx, line) in BufReader::new(handle).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: path.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            file: file.to_owned(),
            line: line_no,
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(DatasetError::Parse {
                file: file.to_owned(),
                line: line_no,
                message: "record is not an object".into(),
            });
        };
        f(line_no, obj)?;
    }
    Ok(())
}

struct Ctx<'a> {
    file: &'a str,
    line: usize,
}

impl Ctx<'_> {
    fn schema(&self, message: impl Into<String>) -> DatasetError {
        DatasetError::SchemaViolation {
            file: self.file.to_owned(),
            line: self.line,
            message: message.into(),
        }
    }

    fn dangling(&self, message: impl Into<String>) -> DatasetError {
        DatasetError::DanglingReference {
            file: self.file.to_owned(),
            line: self.line,
            message: message.into(),
        }
    }

    fn graph(&self, err: GraphError) -> DatasetError {
        self.schema(err.to_string())
    }

    fn attainment(&self, err: AttainmentError) -> DatasetError {
        self.schema(err.to_string())
    }

    fn take_string(&self, obj: &mut Map<String, Value>, key: &str) -> Result<String, DatasetError> {
        match obj.remove(key) {
            Some(Value::String(s)) => Ok(s),
            Some(other) => Err(self.schema(format!("`{key}` must be a string, got {other}"))),
            None => Err(self.schema(format!("missing `{key}`"))),
        }
    }

    fn take_int(&self, obj: &mut Map<String, Value>, key: &str) -> Result<i64, DatasetError> {
        match obj.remove(key) {
            Some(Value::Number(n)) if n.is_i64() => Ok(n.as_i64().unwrap()),
            Some(other) => Err(self.schema(format!("`{key}` must be an integer, got {other}"))),
            None => Err(self.schema(format!("missing `{key}`"))),
        }
    }

    fn take_strings(
        &self,
        obj: &mut Map<String, Value>,
        key: &str,
    ) -> Result<Vec<String>, DatasetError> {
        match obj.remove(key) {
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(self.schema(format!("`{key}` entries must be strings, got {other}"))),
                })
                .collect(),
            Some(other) => Err(self.schema(format!("`{key}` must be an array, got {other}"))),
            None => Err(self.schema(format!("missing `{key}`"))),
        }
    }

    /// Splits leftover fields into scalar attributes and verbatim extras.
    fn split_rest(
        &self,
        obj: Map<String, Value>,
        attrs: &mut Attrs,
    ) -> Result<BTreeMap<String, Value>, DatasetError> {
        let mut extra = BTreeMap::new();
        for (k, v) in obj {
            if k.is_empty() {
                return Err(self.schema("empty field name"));
            }
            match AttrValue::from_json(&v) {
                Some(a) => {
                    attrs.insert(k, a);
                }
                None => {
                    extra.insert(k, v);
                }
            }
        }
        Ok(extra)
    }
}

/// Loads a dataset directory. The returned graph is not frozen so ratings
/// can still be annotated.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|source| DatasetError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        file: MANIFEST.into(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if manifest.version != FORMAT_VERSION {
        return Err(DatasetError::SchemaViolation {
            file: MANIFEST.into(),
            line: 1,
            message: format!("unsupported version {}", manifest.version),
        });
    }
    let files = &manifest.files;
    let mut graph = PropertyGraph::new();

    let file = files.players.as_str();
    read_records(dir, file, |line, mut obj| {
        let ctx = Ctx { file, line };
        let steamid = ctx.take_string(&mut obj, "steamid")?;
        let mut attrs = Attrs::new();
        attrs.insert("steamid".into(), AttrValue::Text(steamid));
        let extra = ctx.split_rest(obj, &mut attrs)?;
        graph
            .add_vertex_with_extra(VertexKind::Player, attrs, extra)
            .map_err(|e| ctx.graph(e))?;
        Ok(())
    })?;

    let mut named: [HashMap<String, VertexId>; 2] = Default::default();
    for (slot, kind, file, key) in [
        (0, VertexKind::Developer, files.developers.as_str(), "name"),
        (1, VertexKind::Genre, files.genres.as_str(), "description"),
    ] {
        read_records(dir, file, |line, mut obj| {
            let ctx = Ctx { file, line };
            let name = ctx.take_string(&mut obj, key)?;
            if named[slot].contains_key(&name) {
                return Err(ctx.schema(format!("duplicate {key} `{name}`")));
            }
            let mut attrs = Attrs::new();
            attrs.insert(key.into(), AttrValue::Text(name.clone()));
            let extra = ctx.split_rest(obj, &mut attrs)?;
            let id = graph
                .add_vertex_with_extra(kind, attrs, extra)
                .map_err(|e| ctx.graph(e))?;
            named[slot].insert(name, id);
            Ok(())
        })?;
    }
    let [developers, genres] = named;

    // appid -> (game vertex, achievement names, completion override)
    type GameEntry = (VertexId, Vec<String>, Option<Vec<f64>>);
    let mut games: HashMap<i64, GameEntry> = HashMap::new();
    let mut game_order = Vec::new();
    let file = files.games.as_str();
    read_records(dir, file, |line, mut obj| {
        let ctx = Ctx { file, line };
        let appid = ctx.take_int(&mut obj, "appid")?;
        if games.contains_key(&appid) {
            return Err(ctx.schema(format!("duplicate appid {appid}")));
        }
        let name = ctx.take_string(&mut obj, "name")?;
        let devs = ctx.take_strings(&mut obj, "developers")?;
        let genre_names = ctx.take_strings(&mut obj, "genres")?;
        let achievement_names = ctx.take_strings(&mut obj, "achievement_names")?;
        let completion = match obj.remove("global_completion") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .ok_or_else(|| ctx.schema("`global_completion` entries must be numbers"))
                    })
                    .collect::<Result<Vec<f64>, _>>()?,
            ),
            Some(_) => return Err(ctx.schema("`global_completion` must be an array")),
        };
        let mut attrs = Attrs::new();
        attrs.insert("appid".into(), AttrValue::Int(appid));
        attrs.insert("name".into(), AttrValue::Text(name));
        match obj.remove("cost") {
            None | Some(Value::Null) => {}
            Some(Value::Number(n)) => {
                attrs.insert("cost".into(), AttrValue::Real(n.as_f64().unwrap_or(0.0)));
            }
            Some(_) => return Err(ctx.schema("`cost` must be a number")),
        }
        let extra = ctx.split_rest(obj, &mut attrs)?;
        let game = graph
            .add_vertex_with_extra(VertexKind::Game, attrs, extra)
            .map_err(|e| ctx.graph(e))?;
        for dev in &devs {
            let &d = developers
                .get(dev)
                .ok_or_else(|| ctx.dangling(format!("developer `{dev}`")))?;
            graph
                .add_edge(EdgeKind::DevelopedBy, game, d, Attrs::new())
                .map_err(|e| ctx.graph(e))?;
        }
        for genre in &genre_names {
            let &r = genres
                .get(genre)
                .ok_or_else(|| ctx.dangling(format!("genre `{genre}`")))?;
            graph
                .add_edge(EdgeKind::HasGenre, game, r, Attrs::new())
                .map_err(|e| ctx.graph(e))?;
        }
        games.insert(appid, (game, achievement_names, completion));
        game_order.push(appid);
        Ok(())
    })?;

    let player = |ctx: &Ctx, graph: &PropertyGraph, steamid: &str| {
        graph
            .player_by_steamid(steamid)
            .ok_or_else(|| ctx.dangling(format!("player `{steamid}`")))
    };

    let file = files.friendships.as_str();
    read_records(dir, file, |line, mut obj| {
        let ctx = Ctx { file, line };
        let a = ctx.take_string(&mut obj, "a")?;
        let b = ctx.take_string(&mut obj, "b")?;
        let pa = player(&ctx, &graph, &a)?;
        let pb = player(&ctx, &graph, &b)?;
        if a >= b {
            return Err(ctx.schema(format!("friendship endpoints must satisfy a < b (`{a}`, `{b}`)")));
        }
        let mut attrs = Attrs::new();
        let extra = ctx.split_rest(obj, &mut attrs)?;
        graph
            .add_edge_with_extra(EdgeKind::Friend, pa, pb, attrs, extra)
            .map_err(|e| ctx.graph(e))?;
        Ok(())
    })?;

    let file = files.ownership.as_str();
    read_records(dir, file, |line, mut obj| {
        let ctx = Ctx { file, line };
        let steamid = ctx.take_string(&mut obj, "steamid")?;
        let appid = ctx.take_int(&mut obj, "appid")?;
        let p = player(&ctx, &graph, &steamid)?;
        let &(g, _, _) = games
            .get(&appid)
            .ok_or_else(|| ctx.dangling(format!("game {appid}")))?;
        let mut attrs = Attrs::new();
        let extra = ctx.split_rest(obj, &mut attrs)?;
        graph
            .add_edge_with_extra(EdgeKind::Owns, p, g, attrs, extra)
            .map_err(|e| ctx.graph(e))?;
        Ok(())
    })?;

    let mut rows: HashMap<VertexId, Vec<(VertexId, Vec<bool>)>> = HashMap::new();
    let file = files.achievements.as_str();
    read_records(dir, file, |line, mut obj| {
        let ctx = Ctx { file, line };
        let steamid = ctx.take_string(&mut obj, "steamid")?;
        let appid = ctx.take_int(&mut obj, "appid")?;
        let p = player(&ctx, &graph, &steamid)?;
        let (g, names, _) = games
            .get(&appid)
            .ok_or_else(|| ctx.dangling(format!("game {appid}")))?;
        if graph.find_edge(EdgeKind::Owns, p, *g).is_none() {
            return Err(ctx.schema(format!("player `{steamid}` does not own game {appid}")));
        }
        let bits = match obj.remove("unlocked") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v.as_u64() {
                    Some(0) => Ok(false),
                    Some(1) => Ok(true),
                    _ => Err(ctx.schema("`unlocked` entries must be 0 or 1")),
                })
                .collect::<Result<Vec<bool>, _>>()?,
            _ => return Err(ctx.schema("`unlocked` must be an array")),
        };
        if bits.len() != names.len() {
            return Err(ctx.schema(format!(
                "`unlocked` has {} flags, game {appid} has {} achievements",
                bits.len(),
                names.len()
            )));
        }
        let game_rows = rows.entry(*g).or_default();
        if game_rows.iter().any(|(q, _)| *q == p) {
            return Err(ctx.schema(format!("duplicate achievement row for `{steamid}` on {appid}")));
        }
        game_rows.push((p, bits));
        Ok(())
    })?;

    let mut achievements = Vec::with_capacity(game_order.len());
    for appid in game_order {
        let (g, names, completion) = games.remove(&appid).unwrap();
        let ctx = Ctx {
            file: files.games.as_str(),
            line: 0,
        };
        let mut table = AchievementTable::from_rows(g, names, rows.remove(&g).unwrap_or_default())
            .map_err(|e| ctx.attainment(e))?;
        if let Some(rates) = completion {
            table = table
                .with_completion_override(rates)
                .map_err(|e| ctx.attainment(e))?;
        }
        achievements.push(table);
    }
    Ok(Dataset {
        graph,
        achievements,
    })
}

fn insert_attrs(obj: &mut Map<String, Value>, attrs: &Attrs, extra: &BTreeMap<String, Value>) {
    for (k, v) in attrs {
        obj.insert(k.clone(), v.to_json());
    }
    for (k, v) in extra {
        obj.insert(k.clone(), v.clone());
    }
}

struct RecordWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl RecordWriter {
    fn create(dir: &Path, file: &str) -> Result<Self, DatasetError> {
        let path = dir.join(file);
        let handle = fs::File::create(&path).map_err(|source| DatasetError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            path,
            out: BufWriter::new(handle),
        })
    }

    fn io(&self, source: io::Error) -> DatasetError {
        DatasetError::Io {
            path: self.path.clone(),
            source,
        }
    }

    fn write(&mut self, obj: Map<String, Value>) -> Result<(), DatasetError> {
        serde_json::to_writer(&mut self.out, &Value::Object(obj))
            .map_err(|e| self.io(e.into()))?;
        self.out.write_all(b"\n").map_err(|e| self.io(e))
    }

    fn finish(mut self) -> Result<(), DatasetError> {
        self.out.flush().map_err(|e| self.io(e))
    }
}

fn text_attr(graph: &PropertyGraph, v: VertexId, key: &str) -> String {
    graph.vertices()[v.index()]
        .attrs
        .get(key)
        .map(|a| a.to_string())
        .unwrap_or_default()
}

/// Writes the dataset in the directory format read by [`load_dataset`].
/// Output is a pure function of the graph and tables.
pub fn save_dataset(
    graph: &PropertyGraph,
    achievements: &[AchievementTable],
    dir: impl AsRef<Path>,
) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let files = ManifestFiles::default();
    let manifest = Manifest {
        version: FORMAT_VERSION,
        files: files.clone(),
    };
    let manifest_path = dir.join(MANIFEST);
    let mut text = serde_json::to_string(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|source| DatasetError::Io {
        path: manifest_path,
        source,
    })?;

    let schema = |file: &str, message: String| DatasetError::SchemaViolation {
        file: file.to_owned(),
        line: 0,
        message,
    };

    let mut appids: HashMap<VertexId, i64> = HashMap::new();
    for &g in graph.vertices_of(VertexKind::Game) {
        match graph.vertices()[g.index()].attrs.get("appid") {
            Some(AttrValue::Int(a)) => {
                appids.insert(g, *a);
            }
            _ => return Err(schema(&files.games, format!("game {g} has no integer appid"))),
        }
    }
    let tables: HashMap<VertexId, &AchievementTable> =
        achievements.iter().map(|t| (t.game(), t)).collect();

    for (kind, file) in [
        (VertexKind::Player, &files.players),
        (VertexKind::Developer, &files.developers),
        (VertexKind::Genre, &files.genres),
    ] {
        let mut w = RecordWriter::create(dir, file)?;
        for &v in graph.vertices_of(kind) {
            let vertex = &graph.vertices()[v.index()];
            let mut obj = Map::new();
            insert_attrs(&mut obj, &vertex.attrs, &vertex.extra);
            // Required keys are always text on disk.
            let key = kind.required_attr();
            obj.insert(key.into(), Value::String(text_attr(graph, v, key)));
            w.write(obj)?;
        }
        w.finish()?;
    }

    let mut w = RecordWriter::create(dir, &files.games)?;
    for &g in graph.vertices_of(VertexKind::Game) {
        let vertex = &graph.vertices()[g.index()];
        let mut obj = Map::new();
        insert_attrs(&mut obj, &vertex.attrs, &vertex.extra);
        let linked = |kind: EdgeKind, key: &str| -> Value {
            Value::Array(
                graph
                    .adjacent(g, kind, super::Direction::Out)
                    .iter()
                    .map(|&(v, _)| v)
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .map(|v| Value::String(text_attr(graph, v, key)))
                    .collect(),
            )
        };
        obj.insert("developers".into(), linked(EdgeKind::DevelopedBy, "name"));
        obj.insert("genres".into(), linked(EdgeKind::HasGenre, "description"));
        let table = tables.get(&g);
        let names: Vec<Value> = table
            .map(|t| t.names().iter().cloned().map(Value::String).collect())
            .unwrap_or_default();
        obj.insert("achievement_names".into(), Value::Array(names));
        if let Some(rates) = table.and_then(|t| t.completion_override()) {
            obj.insert("global_completion".into(), Value::from(rates.to_vec()));
        }
        w.write(obj)?;
    }
    w.finish()?;

    let steamid = |v: VertexId| text_attr(graph, v, "steamid");

    let mut friends = RecordWriter::create(dir, &files.friendships)?;
    let mut owns = RecordWriter::create(dir, &files.ownership)?;
    for edge in graph.edges() {
        let mut obj = Map::new();
        insert_attrs(&mut obj, &edge.attrs, &edge.extra);
        match edge.kind {
            EdgeKind::Friend => {
                let (mut a, mut b) = (steamid(edge.src), steamid(edge.dst));
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                obj.insert("a".into(), Value::String(a));
                obj.insert("b".into(), Value::String(b));
                friends.write(obj)?;
            }
            EdgeKind::Owns => {
                obj.insert("steamid".into(), Value::String(steamid(edge.src)));
                obj.insert("appid".into(), Value::from(appids[&edge.dst]));
                owns.write(obj)?;
            }
            EdgeKind::DevelopedBy | EdgeKind::HasGenre => {}
        }
    }
    friends.finish()?;
    owns.finish()?;

    let mut w = RecordWriter::create(dir, &files.achievements)?;
    for &g in graph.vertices_of(VertexKind::Game) {
        let Some(table) = tables.get(&g) else { continue };
        for (p, row) in table.rows() {
            let mut obj = Map::new();
            obj.insert("steamid".into(), Value::String(steamid(p)));
            obj.insert("appid".into(), Value::from(appids[&g]));
            obj.insert(
                "unlocked".into(),
                Value::Array(row.iter().map(|&b| Value::from(b as u8)).collect()),
            );
            w.write(obj)?;
        }
    }
    w.finish()
}

/// Id-independent description of a dataset: sorted lines describing every
/// vertex, edge and achievement row by external keys. Two datasets are equal
/// up to id renaming iff their canonical forms are equal.
pub fn canonical_form(graph: &PropertyGraph, achievements: &[AchievementTable]) -> Vec<String> {
    let key = |v: VertexId| {
        let vertex = &graph.vertices()[v.index()];
        format!("{}:{}", vertex.kind, graph.label(v))
    };
    let mut lines = Vec::new();
    for vertex in graph.vertices() {
        lines.push(format!(
            "V {} {} {}",
            key(vertex.id),
            serde_json::to_string(&vertex.attrs).unwrap(),
            serde_json::to_string(&vertex.extra).unwrap()
        ));
    }
    for edge in graph.edges() {
        let (mut a, mut b) = (key(edge.src), key(edge.dst));
        if edge.kind.is_undirected() && a > b {
            std::mem::swap(&mut a, &mut b);
        }
        lines.push(format!(
            "E {} {} {} {} {}",
            edge.kind,
            a,
            b,
            serde_json::to_string(&edge.attrs).unwrap(),
            serde_json::to_string(&edge.extra).unwrap()
        ));
    }
    for table in achievements {
        lines.push(format!(
            "T {} {:?} {:?}",
            key(table.game()),
            table.names(),
            table.completion_override()
        ));
        for (p, row) in table.rows() {
            let bits: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            lines.push(format!("R {} {} {}", key(table.game()), key(p), bits));
        }
    }
    lines.sort();
    lines
}
