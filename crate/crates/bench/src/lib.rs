//! Shared inputs for the benchmarks.

use attaingraph_core::attainment::annotate_graph;
use attaingraph_core::datagen::{generate_dataset, GenConfig};
use attaingraph_core::graphstore::{Dataset, PropertyGraph};
use attaingraph_core::querylang::SAMPLE_STEAMID;

/// Synthetic dataset at `scale`, not yet annotated.
pub fn dataset(scale: f64) -> Dataset {
    generate_dataset(&GenConfig::with_scale(scale, 2024))
        .expect("benchmark config is feasible")
        .0
}

/// Annotated, frozen graph at `scale`.
pub fn graph(scale: f64) -> PropertyGraph {
    let mut ds = dataset(scale);
    annotate_graph(&mut ds.graph, &ds.achievements).expect("generated data annotates");
    ds.graph.freeze();
    ds.graph
}

/// Steamid of the best-connected player, so recommendation queries do work.
pub fn busiest_player(g: &PropertyGraph) -> String {
    use attaingraph_core::graphstore::{Direction, EdgeKind, VertexKind};
    g.vertices_of(VertexKind::Player)
        .iter()
        .max_by_key(|&&p| g.adjacent(p, EdgeKind::Friend, Direction::Any).len())
        .map(|&p| g.vertices()[p.index()].attrs["steamid"].to_string())
        .unwrap_or_else(|| SAMPLE_STEAMID.to_owned())
}
