//! Attainment ratings.
//!
//! For a game with `N` achievements and owner set `P`, the completion rate of
//! achievement `i` is the fraction of owners who unlocked it. A player's
//! attainment rating is the rarity-weighted fraction of unlocked achievements:
//!
//! ```text
//! C_i    = (Σ_p bits[p][i]) / |P|
//! A(s)   = Σ_i bits[s][i] · (1 − C_i) / N
//! 0 ≤ A(s) ≤ 1 − 1/|P|
//! ```
//!
//! Games without achievements rate every owner 0.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::graphstore::{AttrValue, Direction, EdgeKind, GraphError, PropertyGraph, VertexId};

/// Edge attribute written by [`annotate_graph`].
pub const RATING_ATTR: &str = "attainmentRating";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttainmentError {
    #[error("game {0} has no owners; completion rates are undefined")]
    NoOwners(VertexId),
    #[error("player {player} does not own game {game}")]
    NotAnOwner { player: VertexId, game: VertexId },
    #[error("no achievement row for player {player} on game {game}")]
    MissingAchievementRow { player: VertexId, game: VertexId },
    #[error("achievement row for player {player} has {found} entries, expected {expected}")]
    RowLength {
        player: VertexId,
        expected: usize,
        found: usize,
    },
    #[error("duplicate achievement row for player {0}")]
    DuplicateRow(VertexId),
    #[error("invalid completion override: {0}")]
    InvalidOverride(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Per-game binary matrix of achievement unlocks, one row per owner.
#[derive(Debug, Clone, PartialEq)]
pub struct AchievementTable {
    game: VertexId,
    names: Vec<String>,
    // ascending
    owners: Vec<VertexId>,
    // owners.len() × names.len(), row-major
    bits: Vec<bool>,
    completion_override: Option<Vec<f64>>,
}

impl AchievementTable {
    /// Builds a table from unordered `(player, unlock flags)` rows.
    pub fn from_rows(
        game: VertexId,
        names: Vec<String>,
        mut rows: Vec<(VertexId, Vec<bool>)>,
    ) -> Result<Self, AttainmentError> {
        let n = names.len();
        rows.sort_by_key(|(p, _)| *p);
        let mut owners = Vec::with_capacity(rows.len());
        let mut bits = Vec::with_capacity(rows.len() * n);
        for (player, row) in rows {
            if row.len() != n {
                return Err(AttainmentError::RowLength {
                    player,
                    expected: n,
                    found: row.len(),
                });
            }
            if owners.last() == Some(&player) {
                return Err(AttainmentError::DuplicateRow(player));
            }
            owners.push(player);
            bits.extend(row);
        }
        Ok(Self {
            game,
            names,
            owners,
            bits,
            completion_override: None,
        })
    }

    /// Replaces the locally computed completion rates with externally
    /// supplied global fractions, one per achievement, each in `[0, 1]`.
    pub fn with_completion_override(mut self, rates: Vec<f64>) -> Result<Self, AttainmentError> {
        if rates.len() != self.names.len() {
            return Err(AttainmentError::InvalidOverride(format!(
                "{} rates for {} achievements",
                rates.len(),
                self.names.len()
            )));
        }
        if let Some(bad) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(AttainmentError::InvalidOverride(format!("{bad} outside [0, 1]")));
        }
        self.completion_override = Some(rates);
        Ok(self)
    }

    pub fn game(&self) -> VertexId {
        self.game
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_achievements(&self) -> usize {
        self.names.len()
    }

    pub fn owners(&self) -> &[VertexId] {
        &self.owners
    }

    pub fn completion_override(&self) -> Option<&[f64]> {
        self.completion_override.as_deref()
    }

    pub fn row(&self, owner_index: usize) -> &[bool] {
        let n = self.names.len();
        &self.bits[owner_index * n..(owner_index + 1) * n]
    }

    pub fn row_of(&self, player: VertexId) -> Option<&[bool]> {
        self.owners
            .binary_search(&player)
            .ok()
            .map(|idx| self.row(idx))
    }

    pub fn rows(&self) -> impl Iterator<Item = (VertexId, &[bool])> {
        self.owners
            .iter()
            .enumerate()
            .map(|(idx, &p)| (p, self.row(idx)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRates {
    pub game: VertexId,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AttainmentRating(pub f64);

impl AttainmentRating {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn completion_rates(table: &AchievementTable) -> Result<CompletionRates, AttainmentError> {
    if let Some(rates) = &table.completion_override {
        return Ok(CompletionRates {
            game: table.game,
            rates: rates.clone(),
        });
    }
    let owners = table.owners.len();
    if owners == 0 {
        return Err(AttainmentError::NoOwners(table.game));
    }
    let mut counts = vec![0usize; table.n_achievements()];
    for idx in 0..owners {
        for (count, &bit) in counts.iter_mut().zip(table.row(idx)) {
            *count += bit as usize;
        }
    }
    let rates = counts
        .into_iter()
        .map(|c| c as f64 / owners as f64)
        .collect();
    Ok(CompletionRates {
        game: table.game,
        rates,
    })
}

fn score_row(row: &[bool], rates: &[f64]) -> f64 {
    if row.is_empty() {
        return 0.0;
    }
    let weighted: f64 = row
        .iter()
        .zip(rates)
        .filter(|(&bit, _)| bit)
        .map(|(_, &c)| 1.0 - c)
        .sum();
    weighted / row.len() as f64
}

pub fn attainment_score(
    table: &AchievementTable,
    rates: &CompletionRates,
    player: VertexId,
) -> Result<AttainmentRating, AttainmentError> {
    let row = table.row_of(player).ok_or(AttainmentError::NotAnOwner {
        player,
        game: table.game,
    })?;
    Ok(AttainmentRating(score_row(row, &rates.rates)))
}

/// Ratings for every owner in the table, in owner order.
pub fn game_ratings(table: &AchievementTable) -> Result<Vec<(VertexId, f64)>, AttainmentError> {
    if table.n_achievements() == 0 {
        return Ok(table.owners.iter().map(|&p| (p, 0.0)).collect());
    }
    let rates = completion_rates(table)?;
    Ok(table
        .rows()
        .map(|(p, row)| (p, score_row(row, &rates.rates)))
        .collect())
}

/// Writes [`RATING_ATTR`] on every ownership edge. Returns the number of
/// edges written.
pub fn annotate_graph(
    graph: &mut PropertyGraph,
    tables: &[AchievementTable],
) -> Result<usize, AttainmentError> {
    let by_game: HashMap<VertexId, &AchievementTable> =
        tables.iter().map(|t| (t.game(), t)).collect();

    // Rows are independent per game; compute in parallel, write sequentially.
    let games = graph.vertices_of(crate::graphstore::VertexKind::Game).to_vec();
    let per_game: Vec<Result<Vec<(crate::graphstore::EdgeId, f64)>, AttainmentError>> = games
        .par_iter()
        .map(|&game| {
            let owned = graph.adjacent(game, EdgeKind::Owns, Direction::In);
            if owned.is_empty() {
                return Ok(Vec::new());
            }
            let Some(table) = by_game.get(&game) else {
                let (player, _) = owned[0];
                return Err(AttainmentError::MissingAchievementRow { player, game });
            };
            let ratings: HashMap<VertexId, f64> = game_ratings(table)?.into_iter().collect();
            owned
                .iter()
                .map(|&(player, edge)| {
                    if table.n_achievements() == 0 {
                        return Ok((edge, 0.0));
                    }
                    ratings
                        .get(&player)
                        .map(|&r| (edge, r))
                        .ok_or(AttainmentError::MissingAchievementRow { player, game })
                })
                .collect()
        })
        .collect();

    let mut written = 0;
    for ratings in per_game {
        for (edge, rating) in ratings? {
            graph.set_edge_attr(edge, RATING_ATTR, AttrValue::Real(rating))?;
            written += 1;
        }
    }
    Ok(written)
}

/// Rating spread of one game's ownership edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSummary {
    pub game: VertexId,
    pub owners: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Summaries for every owned game with annotated ratings, in game id order.
pub fn summarize_ratings(graph: &PropertyGraph) -> Vec<GameSummary> {
    graph
        .vertices_of(crate::graphstore::VertexKind::Game)
        .iter()
        .filter_map(|&game| {
            let ratings: Vec<f64> = graph
                .adjacent(game, EdgeKind::Owns, Direction::In)
                .iter()
                .filter_map(|&(_, e)| graph.edges()[e.index()].attrs.get(RATING_ATTR)?.as_f64())
                .collect();
            if ratings.is_empty() {
                return None;
            }
            let min = ratings.iter().copied().fold(f64::INFINITY, f64::min);
            let max = ratings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = ratings.iter().sum::<f64>() / ratings.len() as f64;
            Some(GameSummary {
                game,
                owners: ratings.len(),
                min,
                max,
                mean,
            })
        })
        .collect()
}

/// All annotated ownership ratings, in edge id order.
pub fn all_ratings(graph: &PropertyGraph) -> Vec<f64> {
    graph
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::Owns)
        .filter_map(|e| e.attrs.get(RATING_ATTR)?.as_f64())
        .collect()
}
