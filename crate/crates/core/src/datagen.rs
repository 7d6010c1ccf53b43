//! Seeded synthetic datasets: a friendship network, skewed game ownership,
//! developer and genre links, and achievement unlocks planted so that the
//! recomputed attainment ratings follow a target Lomax law.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};
use thiserror::Error;

use crate::attainment::{game_ratings, AchievementTable};
use crate::cf::RatingsTable;
use crate::evalstats::{ks_statistic, LomaxParams};
use crate::graphstore::{attrs, save_dataset, AttrValue, Attrs, Dataset, DatasetError, EdgeKind, PropertyGraph, VertexId, VertexKind};

pub const GENRE_NAMES: [&str; 30] = [
    "Action",
    "Strategy",
    "Role-Playing",
    "Adventure",
    "Indie",
    "Casual",
    "Simulation",
    "Racing",
    "Sports",
    "Massively Multiplayer",
    "Free to Play",
    "Early Access",
    "Puzzle",
    "Platformer",
    "Shooter",
    "Fighting",
    "Horror",
    "Survival",
    "Sandbox",
    "Open World",
    "Stealth",
    "Tower Defense",
    "Turn-Based",
    "Card Game",
    "Rhythm",
    "Visual Novel",
    "Education",
    "Design & Illustration",
    "Utilities",
    "Animation & Modeling",
];

const STEAMID_BASE: u64 = 76561197960265728;
const MAX_GENRES_PER_GAME: usize = 5;
const LADDER_STRETCH: f64 = 1.6;
// keeps engine-recomputed ratings clear of the per-game upper bound
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error(transparent)]
    Io(#[from] DatasetError),
}

/// Lomax adjustment for games whose primary genre is `genre`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreTweak {
    pub genre: String,
    #[serde(default = "one")]
    pub shape: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub players: usize,
    pub games: usize,
    pub developers: usize,
    pub genres: usize,
    pub friendships: usize,
    pub ownership: usize,
    pub developed: usize,
    pub genre_links: usize,
}

impl Counts {
    pub const BASE: Counts = Counts {
        players: 4159,
        games: 4487,
        developers: 1904,
        genres: 30,
        friendships: 272888,
        ownership: 613769,
        developed: 4589,
        genre_links: 11229,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub scale: f64,
    pub seed: u64,
    /// Counts at scale 1.0.
    pub base: Counts,
    pub attainment: LomaxParams,
    pub achievements_median: f64,
    pub achievements_sigma: f64,
    pub achievements_max: usize,
    /// Ownership weight of the game at popularity rank r is r^-exponent.
    pub popularity_exponent: f64,
    /// Spread of per-player library sizes (log-normal sigma).
    pub library_sigma: f64,
    /// Edge targets never exceed this fraction of possible pairs.
    pub max_density: f64,
    pub genre_tweaks: Vec<GenreTweak>,
    /// Weights of the player and game latent factors in the rating copula.
    pub player_effect: f64,
    pub game_effect: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            scale: 1.0,
            seed: 0,
            base: Counts::BASE,
            attainment: LomaxParams::PAPER,
            achievements_median: 20.0,
            achievements_sigma: 0.8,
            achievements_max: 200,
            popularity_exponent: 1.5,
            library_sigma: 1.0,
            max_density: 0.5,
            genre_tweaks: vec![
                GenreTweak {
                    genre: "Strategy".into(),
                    shape: 1.3,
                    scale: 1.0,
                },
                GenreTweak {
                    genre: "Role-Playing".into(),
                    shape: 0.8,
                    scale: 1.0,
                },
                GenreTweak {
                    genre: "Action".into(),
                    shape: 1.0,
                    scale: 1.2,
                },
            ],
            player_effect: 0.6,
            game_effect: 0.3,
        }
    }
}

impl GenConfig {
    pub fn with_scale(scale: f64, seed: u64) -> Self {
        Self {
            scale,
            seed,
            ..Self::default()
        }
    }

    /// Applies a JSON object on top of `self`; absent fields keep their value.
    pub fn merge_json(&self, text: &str) -> Result<Self, GenError> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let patch: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| GenError::InfeasibleConfig(format!("config file: {e}")))?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(GenError::InfeasibleConfig("config file must hold an object".into()));
        };
        let obj = base.as_object_mut().unwrap();
        for (k, v) in patch {
            match (obj.get_mut(&k), v) {
                (Some(serde_json::Value::Object(dst)), serde_json::Value::Object(src)) => {
                    dst.extend(src);
                }
                (_, v) => {
                    obj.insert(k, v);
                }
            }
        }
        serde_json::from_value(base).map_err(|e| GenError::InfeasibleConfig(format!("config file: {e}")))
    }

    fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InfeasibleConfig(m.into()));
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive");
        }
        if !(self.max_density > 0.0 && self.max_density <= 1.0) {
            return bad("max_density must lie in (0, 1]");
        }
        if LomaxParams::new(self.attainment.shape, self.attainment.scale).is_err() {
            return bad("attainment shape and scale must be positive");
        }
        if !(self.achievements_median >= 1.0 && self.achievements_sigma >= 0.0 && self.achievements_max >= 1) {
            return bad("achievement count parameters out of range");
        }
        if !(self.popularity_exponent >= 0.0 && self.library_sigma >= 0.0) {
            return bad("popularity parameters must be nonnegative");
        }
        let (p, g) = (self.player_effect, self.game_effect);
        if !(p >= 0.0 && g >= 0.0 && p * p + g * g <= 1.0) {
            return bad("player_effect^2 + game_effect^2 must not exceed 1");
        }
        for t in &self.genre_tweaks {
            if !(t.shape > 0.0 && t.scale > 0.0 && t.shape.is_finite() && t.scale.is_finite()) {
                return bad("genre tweaks must be positive");
            }
        }
        Ok(())
    }

    /// Scaled targets, clamped to what the vertex counts can hold. The
    /// second value names every clamped field.
    pub fn targets(&self) -> Result<(Counts, Vec<String>), GenError> {
        self.check()?;
        let s = |n: usize| ((n as f64 * self.scale).round() as usize).max(1);
        let b = &self.base;
        let mut t = Counts {
            players: s(b.players),
            games: s(b.games),
            developers: s(b.developers),
            genres: s(b.genres),
            friendships: (b.friendships as f64 * self.scale).round() as usize,
            ownership: (b.ownership as f64 * self.scale).round() as usize,
            developed: s(b.developed),
            genre_links: s(b.genre_links),
        };
        let mut clamped = Vec::new();
        let mut clamp = |name: &str, v: &mut usize, lo: usize, hi: usize| {
            let c = (*v).clamp(lo, hi.max(lo));
            if c != *v {
                clamped.push(format!("{name} {} -> {c}", *v));
                *v = c;
            }
        };
        let dens = |pairs: usize| (pairs as f64 * self.max_density).floor() as usize;
        let pairs = t.players * (t.players - 1) / 2;
        clamp("friendships", &mut t.friendships, 0, dens(pairs));
        clamp("ownership", &mut t.ownership, 0, dens(t.players * t.games));
        clamp("developed", &mut t.developed, t.games, t.games * t.developers);
        let per_game = MAX_GENRES_PER_GAME.min(t.genres);
        clamp("genre_links", &mut t.genre_links, t.games, t.games * per_game);
        Ok((t, clamped))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenReport {
    pub seed: u64,
    pub scale: f64,
    pub targets: Counts,
    pub realized: Counts,
    pub clamped: Vec<String>,
    /// Fraction of players in the largest friendship component.
    pub giant_component: f64,
    /// Share of ownership edges held by the most-owned tenth of games.
    pub top_decile_share: f64,
    pub attainment_ks: f64,
    pub ratings: usize,
}

impl fmt::Display for GenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed\t{}", self.seed)?;
        writeln!(f, "scale\t{}", self.scale)?;
        let rows = [
            ("players", self.targets.players, self.realized.players),
            ("games", self.targets.games, self.realized.games),
            ("developers", self.targets.developers, self.realized.developers),
            ("genres", self.targets.genres, self.realized.genres),
            ("friendships", self.targets.friendships, self.realized.friendships),
            ("ownership", self.targets.ownership, self.realized.ownership),
            ("developed", self.targets.developed, self.realized.developed),
            ("genre_links", self.targets.genre_links, self.realized.genre_links),
        ];
        for (name, want, got) in rows {
            writeln!(f, "{name}\t{got}\t(target {want})")?;
        }
        for c in &self.clamped {
            writeln!(f, "clamped\t{c}")?;
        }
        writeln!(f, "giant_component\t{:.4}", self.giant_component)?;
        writeln!(f, "top_decile_share\t{:.4}", self.top_decile_share)?;
        writeln!(f, "ratings\t{}", self.ratings)?;
        write!(f, "attainment_ks\t{:.4}", self.attainment_ks)
    }
}

// Independent substreams per entity class keep phases decoupled.
const S_FRIENDS: u64 = 1;
const S_OWN: u64 = 2;
const S_DEV: u64 = 3;
const S_GENRE: u64 = 4;
const S_ACH: u64 = 5;
const S_PLAYER_LATENT: u64 = 6;
const S_PLANT: u64 = 7;
const S_MISC: u64 = 8;

fn substream(seed: u64, class: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((class << 40) | index);
    rng
}

/// Splits `total` into integer parts proportional to `weights`, each at
/// most `cap`. Requires `total <= weights.len() * cap`.
fn allot(weights: &[f64], total: usize, cap: usize) -> Vec<usize> {
    let n = weights.len();
    let mut out = vec![0usize; n];
    let mut left = total;
    let mut open: Vec<usize> = (0..n).collect();
    while left > 0 && !open.is_empty() {
        let wsum: f64 = open.iter().map(|&i| weights[i]).sum();
        let mut frac = Vec::with_capacity(open.len());
        let mut given = 0;
        for &i in &open {
            let share = if wsum > 0.0 {
                left as f64 * weights[i] / wsum
            } else {
                left as f64 / open.len() as f64
            };
            let room = cap - out[i];
            let whole = (share.floor() as usize).min(room);
            out[i] += whole;
            given += whole;
            frac.push((share - share.floor(), i));
        }
        left -= given;
        if given == 0 {
            // hand out single units by largest remainder
            frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (_, i) in frac {
                if left == 0 {
                    break;
                }
                if out[i] < cap {
                    out[i] += 1;
                    left -= 1;
                }
            }
        }
        open.retain(|&i| out[i] < cap);
    }
    out
}

/// Indices of the `k` largest Efraimidis-Spirakis keys for the weights.
fn weighted_sample(rng: &mut impl Rng, weights: &[f64], k: usize) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (rng.random::<f64>().ln() / w, i))
        .collect();
    let k = k.min(keys.len());
    if k == 0 {
        return Vec::new();
    }
    if k < keys.len() {
        keys.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keys.truncate(k);
    }
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keys.into_iter().map(|(_, i)| i).collect()
}

/// Preferential attachment on `n` nodes, topped up to exactly `target`
/// edges. Pairs are `(min, max)`.
fn friendship_pairs(n: usize, target: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(target);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(target);
    if n < 2 || target == 0 {
        return edges;
    }
    // largest m whose attachment phase stays within the target
    let ba_edges = |m: usize| m * (2 * n - m - 1) / 2;
    let mut m = 0;
    while m + 1 < n && ba_edges(m + 1) <= target {
        m += 1;
    }
    let mut ends: Vec<usize> = Vec::with_capacity(2 * target);
    let mut push = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>, ends: &mut Vec<usize>| {
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            edges.push(key);
            ends.push(a);
            ends.push(b);
            true
        } else {
            false
        }
    };
    if m > 0 {
        for a in 0..=m {
            for b in a + 1..=m {
                push(a, b, &mut edges, &mut ends);
            }
        }
        for v in m + 1..n {
            let mut chosen = 0;
            while chosen < m {
                let u = ends[rng.random_range(0..ends.len())];
                if push(v, u, &mut edges, &mut ends) {
                    chosen += 1;
                }
            }
        }
    }
    while edges.len() < target {
        let pick = |rng: &mut ChaCha8Rng, ends: &Vec<usize>| {
            if !ends.is_empty() && rng.random_bool(0.5) {
                ends[rng.random_range(0..ends.len())]
            } else {
                rng.random_range(0..n)
            }
        };
        let a = pick(rng, &ends);
        let b = pick(rng, &ends);
        push(a, b, &mut edges, &mut ends);
    }
    edges
}

fn largest_component_fraction(n: usize, pairs: &[(usize, usize)]) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    let mut sizes = vec![0usize; n];
    for v in 0..n {
        sizes[uf.find(v)] += 1;
    }
    *sizes.iter().max().unwrap() as f64 / n as f64
}

/// Achievable ratings `L_0 = 0 < L_1 <= .. <= L_n` for a game with `n`
/// achievements unlocked easiest-first. Rung k sits near the target quantile
/// at `(offset + k) * stretch / n`; a step never exceeds `1 / n` since it
/// equals `(1 - C_k) / n`, so past that point the rungs climb at the cap.
pub fn rating_ladder(law: &LomaxParams, n: usize, offset: f64) -> Vec<f64> {
    let mut levels = Vec::with_capacity(n + 1);
    levels.push(0.0);
    let cap = 1.0 / n as f64;
    let mut level = 0.0f64;
    for k in 0..n {
        let p = ((offset + k as f64) * LADDER_STRETCH / n as f64).min(1.0 - 1e-12);
        level += (law.inverse_cdf(p) - level).clamp(0.0, cap);
        levels.push(level);
    }
    levels
}

/// Global completion rates realizing `levels` under easiest-first order.
fn ladder_rates(levels: &[f64]) -> Vec<f64> {
    let n = (levels.len() - 1) as f64;
    levels
        .windows(2)
        .map(|w| (1.0 - n * (w[1] - w[0])).clamp(0.0, 1.0))
        .collect()
}

/// Index of the rung nearest `r` among rungs not above `bound`.
fn nearest_rung(levels: &[f64], r: f64, bound: f64) -> usize {
    let top = levels.partition_point(|&x| x <= bound).max(1) - 1;
    let hi = levels[..=top].partition_point(|&x| x < r);
    if hi == 0 {
        0
    } else if hi > top || r - levels[hi - 1] <= levels[hi] - r {
        hi - 1
    } else {
        hi
    }
}

struct GameSpec {
    achievements: usize,
    params: LomaxParams,
}

/// Builds the dataset in memory. The graph is unfrozen and unannotated.
pub fn generate_dataset(config: &GenConfig) -> Result<(Dataset, GenReport), GenError> {
    let (t, clamped) = config.targets()?;
    let seed = config.seed;
    let mut graph = PropertyGraph::new();

    let mut misc = substream(seed, S_MISC, 0);
    let mut offsets: Vec<u64> = rand::seq::index::sample(&mut misc, t.players * 50, t.players)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    offsets.sort_unstable();
    let players: Vec<VertexId> = offsets
        .iter()
        .enumerate()
        .map(|(i, off)| {
            let a = attrs([
                ("steamid", AttrValue::Text((STEAMID_BASE + off).to_string())),
                ("personaname", AttrValue::Text(format!("player{i}"))),
            ]);
            graph.add_vertex(VertexKind::Player, a).expect("player attrs")
        })
        .collect();

    let cost = LogNormal::<f64>::new(2.3, 0.7).unwrap();
    let games: Vec<VertexId> = (0..t.games)
        .map(|i| {
            let price = if misc.random_bool(0.1) {
                0.0
            } else {
                (cost.sample(&mut misc) * 100.0f64).round() / 100.0
            };
            let a = attrs([
                ("appid", AttrValue::Int(10 * (i as i64 + 1))),
                ("name", AttrValue::Text(format!("Game {i}"))),
                ("cost", AttrValue::Real(price)),
            ]);
            graph.add_vertex(VertexKind::Game, a).expect("game attrs")
        })
        .collect();
    let developers: Vec<VertexId> = (0..t.developers)
        .map(|i| {
            graph
                .add_vertex(VertexKind::Developer, attrs([("name", format!("Studio {i}"))]))
                .expect("developer attrs")
        })
        .collect();
    let genre_names: Vec<String> = (0..t.genres)
        .map(|i| GENRE_NAMES.get(i).map_or_else(|| format!("Genre {i}"), |s| s.to_string()))
        .collect();
    let genres: Vec<VertexId> = genre_names
        .iter()
        .map(|d| {
            graph
                .add_vertex(VertexKind::Genre, attrs([("description", d.as_str())]))
                .expect("genre attrs")
        })
        .collect();

    // friendships
    let pairs = friendship_pairs(t.players, t.friendships, &mut substream(seed, S_FRIENDS, 0));
    for &(a, b) in &pairs {
        graph
            .add_edge(EdgeKind::Friend, players[a], players[b], Attrs::new())
            .expect("distinct friend pair");
    }
    let giant_component = largest_component_fraction(t.players, &pairs);

    // ownership
    let mut own_rng = substream(seed, S_OWN, 0);
    let mut rank: Vec<usize> = (0..t.games).collect();
    rank.shuffle(&mut own_rng);
    let popularity: Vec<f64> = rank
        .iter()
        .map(|&r| (r as f64 + 1.0).powf(-config.popularity_exponent))
        .collect();
    let size_dist = LogNormal::new(0.0, config.library_sigma.max(1e-12)).unwrap();
    let library_weights: Vec<f64> = (0..t.players).map(|_| size_dist.sample(&mut own_rng)).collect();
    let library = allot(&library_weights, t.ownership, t.games);
    let libraries: Vec<Vec<usize>> = (0..t.players)
        .into_par_iter()
        .map(|p| {
            let mut rng = substream(seed, S_OWN, p as u64 + 1);
            let mut owned = weighted_sample(&mut rng, &popularity, library[p]);
            owned.sort_unstable();
            owned
        })
        .collect();
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); t.games];
    for (p, owned) in libraries.iter().enumerate() {
        for &g in owned {
            graph
                .add_edge(EdgeKind::Owns, players[p], games[g], Attrs::new())
                .expect("distinct ownership");
            owners[g].push(p);
        }
    }
    let mut owner_counts: Vec<usize> = owners.iter().map(Vec::len).collect();
    owner_counts.sort_unstable_by(|a, b| b.cmp(a));
    let decile = t.games.div_ceil(10);
    let top_decile_share = if t.ownership == 0 {
        0.0
    } else {
        owner_counts[..decile].iter().sum::<usize>() as f64 / t.ownership as f64
    };

    // developers: one primary per game, studio sizes by preferential choice
    let mut dev_rng = substream(seed, S_DEV, 0);
    let mut order: Vec<usize> = (0..t.games).collect();
    order.shuffle(&mut dev_rng);
    let mut primary = vec![0usize; t.games];
    let mut dev_links: HashSet<(usize, usize)> = HashSet::new();
    for (pos, &g) in order.iter().enumerate() {
        let d = if pos < t.developers {
            pos
        } else if dev_rng.random_bool(0.5) {
            dev_rng.random_range(0..t.developers)
        } else {
            primary[order[dev_rng.random_range(0..pos)]]
        };
        primary[g] = d;
    }
    for (g, &d) in primary.iter().enumerate() {
        dev_links.insert((g, d));
    }
    let mut extra_devs = Vec::new();
    while dev_links.len() < t.developed {
        let pair = (dev_rng.random_range(0..t.games), dev_rng.random_range(0..t.developers));
        if dev_links.insert(pair) {
            extra_devs.push(pair);
        }
    }
    for (g, &d) in primary.iter().enumerate() {
        graph
            .add_edge(EdgeKind::DevelopedBy, games[g], developers[d], Attrs::new())
            .expect("primary developer");
    }
    for &(g, d) in &extra_devs {
        graph
            .add_edge(EdgeKind::DevelopedBy, games[g], developers[d], Attrs::new())
            .expect("distinct co-developer");
    }

    // genres: 1..=5 per game, first pick is the primary genre
    let mut genre_rng = substream(seed, S_GENRE, 0);
    let per_game = MAX_GENRES_PER_GAME.min(t.genres);
    let spread: Vec<f64> = (0..t.games).map(|_| genre_rng.random::<f64>()).collect();
    let extra = allot(&spread, t.genre_links - t.games, per_game - 1);
    let genre_weight: Vec<f64> = (0..t.genres).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let mut primary_genre = vec![0usize; t.games];
    for g in 0..t.games {
        let picks = weighted_sample(&mut genre_rng, &genre_weight, 1 + extra[g]);
        primary_genre[g] = picks[0];
        for &r in &picks {
            graph
                .add_edge(EdgeKind::HasGenre, games[g], genres[r], Attrs::new())
                .expect("distinct genre");
        }
    }

    // achievements per game and genre-adjusted rating law
    let ach_dist = LogNormal::new(config.achievements_median.ln(), config.achievements_sigma.max(1e-12)).unwrap();
    let mut ach_rng = substream(seed, S_ACH, 0);
    let specs: Vec<GameSpec> = (0..t.games)
        .map(|g| {
            let n = (ach_dist.sample(&mut ach_rng).round() as usize).clamp(1, config.achievements_max);
            let mut params = config.attainment;
            if let Some(tw) = config
                .genre_tweaks
                .iter()
                .find(|tw| tw.genre == genre_names[primary_genre[g]])
            {
                params.shape *= tw.shape;
                params.scale *= tw.scale;
            }
            GameSpec {
                achievements: n,
                params,
            }
        })
        .collect();

    let mut latent_rng = substream(seed, S_PLAYER_LATENT, 0);
    let player_latent: Vec<f64> = (0..t.players)
        .map(|_| StandardNormal.sample(&mut latent_rng))
        .collect();

    type Planted = (Vec<(VertexId, Vec<bool>)>, Vec<f64>);
    let planted: Vec<Planted> = (0..t.games)
        .into_par_iter()
        .map(|g| {
            let mut rng = substream(seed, S_PLANT, g as u64);
            let (rows, rates) = plant_game(&owners[g], &specs[g], &player_latent, config, &mut rng);
            let rows = rows.into_iter().map(|(p, row)| (players[p], row)).collect();
            (rows, rates)
        })
        .collect();
    let achievements: Vec<AchievementTable> = planted
        .into_iter()
        .enumerate()
        .map(|(g, (rows, rates))| {
            let names = (0..specs[g].achievements).map(|i| format!("ach{i:03}")).collect();
            AchievementTable::from_rows(games[g], names, rows)
                .and_then(|t| t.with_completion_override(rates))
                .expect("well-formed rows")
        })
        .collect();

    let sample = attainment_sample(&achievements);
    let attainment_ks = if sample.is_empty() {
        0.0
    } else {
        ks_statistic(&sample, &config.attainment).expect("nonempty sample")
    };
    let realized = Counts {
        players: graph.count(VertexKind::Player),
        games: graph.count(VertexKind::Game),
        developers: graph.count(VertexKind::Developer),
        genres: graph.count(VertexKind::Genre),
        friendships: graph.edge_count_of(EdgeKind::Friend),
        ownership: graph.edge_count_of(EdgeKind::Owns),
        developed: graph.edge_count_of(EdgeKind::DevelopedBy),
        genre_links: graph.edge_count_of(EdgeKind::HasGenre),
    };
    let report = GenReport {
        seed,
        scale: config.scale,
        targets: t,
        realized,
        clamped,
        giant_component,
        top_decile_share,
        attainment_ks,
        ratings: sample.len(),
    };
    Ok((Dataset { graph, achievements }, report))
}

/// Every owner's recomputed rating, game by game.
pub fn attainment_sample(tables: &[AchievementTable]) -> Vec<f64> {
    tables
        .par_iter()
        .map(|t| {
            game_ratings(t)
                .expect("tables have owners")
                .into_iter()
                .map(|(_, r)| r)
                .collect::<Vec<f64>>()
        })
        .flatten()
        .collect()
}

/// Unlock rows for one game's owners (given as player indices) and the
/// global completion rate of every achievement.
fn plant_game(
    owners: &[usize],
    spec: &GameSpec,
    player_latent: &[f64],
    config: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<(usize, Vec<bool>)>, Vec<f64>) {
    let n = spec.achievements;
    let mut easiest: Vec<usize> = (0..n).collect();
    easiest.shuffle(rng);
    let levels = rating_ladder(&spec.params, n, rng.random());
    let by_rank = ladder_rates(&levels);
    let mut rates = vec![0.0; n];
    for (rank, &i) in easiest.iter().enumerate() {
        rates[i] = by_rank[rank];
    }
    if owners.is_empty() {
        return (Vec::new(), rates);
    }
    let phi = StdNormal::standard();
    let game_latent: f64 = StandardNormal.sample(rng);
    let (wp, wg) = (config.player_effect, config.game_effect);
    let wn = (1.0 - wp * wp - wg * wg).max(0.0).sqrt();
    let bound = 1.0 - 1.0 / owners.len() as f64;
    let top = spec.params.cdf(bound);
    let rows = owners
        .iter()
        .map(|&p| {
            let eps: f64 = StandardNormal.sample(rng);
            let z = wp * player_latent[p] + wg * game_latent + wn * eps;
            let target = spec.params.inverse_cdf(phi.cdf(z) * top);
            let k = nearest_rung(&levels, target, bound - BOUND_SLACK);
            let mut row = vec![false; n];
            for &i in &easiest[..k] {
                row[i] = true;
            }
            (p, row)
        })
        .collect();
    (rows, rates)
}

/// Generates and writes a dataset directory.
pub fn generate(config: &GenConfig, out: impl AsRef<Path>) -> Result<GenReport, GenError> {
    let (ds, report) = generate_dataset(config)?;
    save_dataset(&ds.graph, &ds.achievements, out)?;
    Ok(report)
}

/// Low-rank ratings with known structure for recommender checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub users: usize,
    pub items: usize,
    pub rank: usize,
    pub density: f64,
    pub mean: f64,
    pub bias_std: f64,
    pub factor_std: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            users: 500,
            items: 200,
            rank: 5,
            density: 0.1,
            mean: 0.3,
            bias_std: 0.1,
            factor_std: 0.15,
            noise_std: 0.03,
            seed: 0,
        }
    }
}

/// `clamp(mean + b_u + b_i + u.v + noise)` on a seeded uniform sample of
/// `density * users * items` cells.
pub fn planted_ratings(cfg: &PlantedConfig) -> RatingsTable {
    let mut rng = substream(cfg.seed, S_PLANT, u64::from(u32::MAX));
    let bias = Normal::new(0.0, cfg.bias_std).unwrap();
    let factor = Normal::new(0.0, cfg.factor_std).unwrap();
    let noise = Normal::new(0.0, cfg.noise_std).unwrap();
    let bu: Vec<f64> = (0..cfg.users).map(|_| bias.sample(&mut rng)).collect();
    let bi: Vec<f64> = (0..cfg.items).map(|_| bias.sample(&mut rng)).collect();
    let u: Vec<f64> = (0..cfg.users * cfg.rank).map(|_| factor.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..cfg.items * cfg.rank).map(|_| factor.sample(&mut rng)).collect();
    let cells = cfg.users * cfg.items;
    let m = ((cells as f64 * cfg.density).round() as usize).min(cells);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, cells, m).into_vec();
    picked.sort_unstable();
    let mut table = RatingsTable::new();
    let k = cfg.rank;
    for c in picked {
        let (a, b) = (c / cfg.items, c % cfg.items);
        let dot: f64 = (0..k).map(|f| u[a * k + f] * v[b * k + f]).sum();
        let r = (cfg.mean + bu[a] + bi[b] + dot + noise.sample(&mut rng)).clamp(0.0, 1.0);
        table
            .push(&format!("u{a}"), &format!("i{b}"), r)
            .expect("distinct cells");
    }
    table
}
