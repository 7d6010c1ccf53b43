//! Fixture F: three players, three games, two developers and two genres,
//! sized so the sample query and its refinements can be checked by hand.
//!
//! - players P1 (the sample steamid), P2, P3; friendships P1-P2, P1-P3
//! - games g1 (D1, Strategy), g2 (D1, Action), g3 (D2, Strategy)
//! - ownership P1-g1 0.5, P2-g2 0.8, P2-g3 0.9, P3-g2 0.4
//!
//! Ratings come from achievement rows with a zero global completion
//! override, so each rating is exactly `unlocked / N_g`.

use crate::attainment::{annotate_graph, AchievementTable};
use crate::graphstore::{attrs, Attrs, Dataset, EdgeKind, PropertyGraph, VertexId, VertexKind};
use crate::querylang::SAMPLE_STEAMID;

pub const P2_STEAMID: &str = "76561197960653977";
pub const P3_STEAMID: &str = "76561197960653978";

/// Vertex ids of the fixture, in insertion order.
#[derive(Debug, Clone, Copy)]
pub struct FixtureIds {
    pub p1: VertexId,
    pub p2: VertexId,
    pub p3: VertexId,
    pub g1: VertexId,
    pub g2: VertexId,
    pub g3: VertexId,
    pub d1: VertexId,
    pub d2: VertexId,
    pub action: VertexId,
    pub strategy: VertexId,
}

fn table(game: VertexId, n: usize, rows: &[(VertexId, usize)]) -> AchievementTable {
    let names = (0..n).map(|i| format!("ach{i}")).collect();
    let rows = rows
        .iter()
        .map(|&(p, unlocked)| (p, (0..n).map(|i| i < unlocked).collect()))
        .collect();
    AchievementTable::from_rows(game, names, rows)
        .and_then(|t| t.with_completion_override(vec![0.0; n]))
        .expect("fixture table is well formed")
}

/// The raw dataset (graph unfrozen, not annotated). With `p1_owns_g2`, P1
/// also owns g2 with one of five achievements.
pub fn dataset(p1_owns_g2: bool) -> (Dataset, FixtureIds) {
    let mut g = PropertyGraph::new();
    let player = |g: &mut PropertyGraph, steamid: &str, name: &str| {
        g.add_vertex(
            VertexKind::Player,
            attrs([("steamid", steamid), ("personaname", name)]),
        )
        .unwrap()
    };
    let p1 = player(&mut g, SAMPLE_STEAMID, "P1");
    let p2 = player(&mut g, P2_STEAMID, "P2");
    let p3 = player(&mut g, P3_STEAMID, "P3");
    let d1 = g.add_vertex(VertexKind::Developer, attrs([("name", "D1")])).unwrap();
    let d2 = g.add_vertex(VertexKind::Developer, attrs([("name", "D2")])).unwrap();
    let action = g
        .add_vertex(VertexKind::Genre, attrs([("description", "Action")]))
        .unwrap();
    let strategy = g
        .add_vertex(VertexKind::Genre, attrs([("description", "Strategy")]))
        .unwrap();
    let mut game = |appid: i64, name: &str, cost: f64| {
        let mut a = attrs([("name", name)]);
        a.insert("appid".into(), appid.into());
        a.insert("cost".into(), cost.into());
        g.add_vertex(VertexKind::Game, a).unwrap()
    };
    let g1 = game(10, "g1", 9.99);
    let g2 = game(20, "g2", 19.99);
    let g3 = game(30, "g3", 4.99);

    let none = Attrs::new;
    g.add_edge(EdgeKind::Friend, p1, p2, none()).unwrap();
    g.add_edge(EdgeKind::Friend, p1, p3, none()).unwrap();
    for (game, dev) in [(g1, d1), (g2, d1), (g3, d2)] {
        g.add_edge(EdgeKind::DevelopedBy, game, dev, none()).unwrap();
    }
    for (game, genre) in [(g1, strategy), (g2, action), (g3, strategy)] {
        g.add_edge(EdgeKind::HasGenre, game, genre, none()).unwrap();
    }
    let mut owns = vec![(p1, g1), (p2, g2), (p2, g3), (p3, g2)];
    if p1_owns_g2 {
        owns.push((p1, g2));
    }
    for (p, game) in owns {
        g.add_edge(EdgeKind::Owns, p, game, none()).unwrap();
    }

    let mut g2_rows = vec![(p2, 4), (p3, 2)];
    if p1_owns_g2 {
        g2_rows.push((p1, 1));
    }
    let achievements = vec![
        table(g1, 2, &[(p1, 1)]),
        table(g2, 5, &g2_rows),
        table(g3, 10, &[(p2, 9)]),
    ];
    let ids = FixtureIds {
        p1,
        p2,
        p3,
        g1,
        g2,
        g3,
        d1,
        d2,
        action,
        strategy,
    };
    (
        Dataset {
            graph: g,
            achievements,
        },
        ids,
    )
}

/// Annotated and frozen fixture graph.
pub fn graph(p1_owns_g2: bool) -> (PropertyGraph, FixtureIds) {
    let (mut ds, ids) = dataset(p1_owns_g2);
    annotate_graph(&mut ds.graph, &ds.achievements).expect("fixture annotates");
    ds.graph.freeze();
    (ds.graph, ids)
}
