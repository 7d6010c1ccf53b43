//! SVD++ matrix factorization over (player, game, rating) triples, trained
//! by plain SGD with one learning rate and one regularization constant.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attainment::RATING_ATTR;
use crate::evalstats::{self, Scored};
use crate::graphstore::{EdgeKind, PropertyGraph};

#[derive(Debug, Error)]
pub enum CfError {
    #[error("no ratings to train on")]
    EmptyData,
    #[error("need at least {needed} ratings for {folds} folds, got {found}")]
    TooFewRatings {
        needed: usize,
        folds: usize,
        found: usize,
    },
    #[error("duplicate rating for ({user}, {item})")]
    DuplicateRating { user: String, item: String },
    #[error("rating {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("model file: {0}")]
    Io(#[from] io::Error),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub value: f64,
}

/// Ratings with dense user and item indices and their external keys.
#[derive(Debug, Clone, Default)]
pub struct RatingsTable {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    ratings: Vec<Rating>,
    seen: std::collections::HashSet<(u32, u32)>,
}

impl RatingsTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(keys: &mut Vec<String>, index: &mut HashMap<String, u32>, key: &str) -> u32 {
        if let Some(&i) = index.get(key) {
            return i;
        }
        let i = keys.len() as u32;
        keys.push(key.to_owned());
        index.insert(key.to_owned(), i);
        i
    }

    pub fn push(&mut self, user: &str, item: &str, value: f64) -> Result<(), CfError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(CfError::OutOfRange(value));
        }
        let u = Self::intern(&mut self.users, &mut self.user_index, user);
        let i = Self::intern(&mut self.items, &mut self.item_index, item);
        if !self.seen.insert((u, i)) {
            return Err(CfError::DuplicateRating {
                user: user.to_owned(),
                item: item.to_owned(),
            });
        }
        self.ratings.push(Rating { user: u, item: i, value });
        Ok(())
    }

    /// Every rated ownership edge, keyed by steamid and appid (or game name
    /// when the game has no appid).
    pub fn from_graph(graph: &PropertyGraph) -> Self {
        let mut t = Self::new();
        for e in graph.edges().iter().filter(|e| e.kind == EdgeKind::Owns) {
            let Some(r) = e.attrs.get(RATING_ATTR).and_then(|a| a.as_f64()) else {
                continue;
            };
            let game = &graph.vertices()[e.dst.index()];
            let item = game
                .attrs
                .get("appid")
                .map(|a| a.to_string())
                .unwrap_or_else(|| graph.label(e.dst));
            t.push(&graph.label(e.src), &item, r.clamp(0.0, 1.0))
                .expect("ownership edges are unique");
        }
        t
    }

    /// Same key space, only the ratings at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let ratings: Vec<Rating> = indices.iter().map(|&i| self.ratings[i]).collect();
        Self {
            users: self.users.clone(),
            items: self.items.clone(),
            user_index: self.user_index.clone(),
            item_index: self.item_index.clone(),
            seen: ratings.iter().map(|r| (r.user, r.item)).collect(),
            ratings,
        }
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_key(&self, u: u32) -> &str {
        &self.users[u as usize]
    }

    pub fn item_key(&self, i: u32) -> &str {
        &self.items[i as usize]
    }

    pub fn user_id(&self, key: &str) -> Option<u32> {
        self.user_index.get(key).copied()
    }

    pub fn item_id(&self, key: &str) -> Option<u32> {
        self.item_index.get(key).copied()
    }

    pub fn mean(&self) -> f64 {
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub factors: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            factors: 20,
            epochs: 20,
            learning_rate: 0.007,
            regularization: 0.02,
            init_std: 0.1,
            seed: 0,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<(), CfError> {
        let ok = self.factors > 0
            && self.learning_rate > 0.0
            && self.regularization >= 0.0
            && self.init_std >= 0.0
            && self.learning_rate.is_finite()
            && self.regularization.is_finite()
            && self.init_std.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CfError::InvalidParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdppModel {
    pub params: TrainParams,
    pub mu: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// Row-major `n_users x factors`.
    pub p: Vec<f64>,
    /// Row-major `n_items x factors`.
    pub q: Vec<f64>,
    /// Implicit item factors, row-major `n_items x factors`.
    pub y: Vec<f64>,
    /// Items rated by each user in training.
    pub implicit: Vec<Vec<u32>>,
    pub user_keys: Vec<String>,
    pub item_keys: Vec<String>,
}

/// Gradient of the single-example loss
/// `0.5 * err^2 + 0.5 * reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2 + sum |y_j|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleGradient {
    pub user_bias: f64,
    pub item_bias: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// One row per item in the user's implicit set, same order.
    pub y: Vec<Vec<f64>>,
}

impl SvdppModel {
    pub fn factors(&self) -> usize {
        self.params.factors
    }

    pub fn n_users(&self) -> usize {
        self.user_bias.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_bias.len()
    }

    fn row(v: &[f64], k: usize, r: usize) -> &[f64] {
        &v[r * k..(r + 1) * k]
    }

    /// `p_u + |N(u)|^(-1/2) * sum y_j`.
    fn user_vector(&self, u: usize) -> Vec<f64> {
        let k = self.factors();
        let mut v = Self::row(&self.p, k, u).to_vec();
        let items = &self.implicit[u];
        if !items.is_empty() {
            let norm = (items.len() as f64).powf(-0.5);
            for &j in items {
                for (vf, yf) in v.iter_mut().zip(Self::row(&self.y, k, j as usize)) {
                    *vf += norm * yf;
                }
            }
        }
        v
    }

    /// Unclamped estimate for known indices.
    pub fn raw_estimate(&self, u: u32, i: u32) -> f64 {
        let (u, i) = (u as usize, i as usize);
        let uv = self.user_vector(u);
        let qi = Self::row(&self.q, self.factors(), i);
        self.mu + self.user_bias[u] + self.item_bias[i] + dot(qi, &uv)
    }

    /// Clamped prediction; unknown indices fall back to the available biases.
    pub fn predict(&self, user: Option<u32>, item: Option<u32>) -> f64 {
        let known_u = user.filter(|&u| (u as usize) < self.n_users());
        let known_i = item.filter(|&i| (i as usize) < self.n_items());
        let est = match (known_u, known_i) {
            (Some(u), Some(i)) => self.raw_estimate(u, i),
            (Some(u), None) => self.mu + self.user_bias[u as usize],
            (None, Some(i)) => self.mu + self.item_bias[i as usize],
            (None, None) => self.mu,
        };
        est.clamp(0.0, 1.0)
    }

    pub fn predict_keys(&self, user: &str, item: &str) -> f64 {
        let u = self.user_keys.iter().position(|k| k == user).map(|u| u as u32);
        let i = self.item_keys.iter().position(|k| k == item).map(|i| i as u32);
        self.predict(u, i)
    }

    /// Regularized squared error of one example.
    pub fn example_loss(&self, u: u32, i: u32, r: f64) -> f64 {
        let k = self.factors();
        let err = r - self.raw_estimate(u, i);
        let (us, is) = (u as usize, i as usize);
        let mut norm = self.user_bias[us].powi(2) + self.item_bias[is].powi(2);
        norm += sq(Self::row(&self.p, k, us)) + sq(Self::row(&self.q, k, is));
        for &j in &self.implicit[us] {
            norm += sq(Self::row(&self.y, k, j as usize));
        }
        0.5 * err * err + 0.5 * self.params.regularization * norm
    }

    pub fn example_gradient(&self, u: u32, i: u32, r: f64) -> ExampleGradient {
        let k = self.factors();
        let reg = self.params.regularization;
        let (us, is) = (u as usize, i as usize);
        let err = r - self.raw_estimate(u, i);
        let uv = self.user_vector(us);
        let pu = Self::row(&self.p, k, us);
        let qi = Self::row(&self.q, k, is);
        let items = &self.implicit[us];
        let norm = if items.is_empty() {
            0.0
        } else {
            (items.len() as f64).powf(-0.5)
        };
        ExampleGradient {
            user_bias: -err + reg * self.user_bias[us],
            item_bias: -err + reg * self.item_bias[is],
            p: (0..k).map(|f| -err * qi[f] + reg * pu[f]).collect(),
            q: (0..k).map(|f| -err * uv[f] + reg * qi[f]).collect(),
            y: items
                .iter()
                .map(|&j| {
                    let yj = Self::row(&self.y, k, j as usize);
                    (0..k).map(|f| -err * qi[f] * norm + reg * yj[f]).collect()
                })
                .collect(),
        }
    }

    /// One SGD update on a single example.
    pub fn sgd_step(&mut self, u: u32, i: u32, r: f64) {
        let k = self.factors();
        let lr = self.params.learning_rate;
        let reg = self.params.regularization;
        let (us, is) = (u as usize, i as usize);
        let uv = self.user_vector(us);
        let err = {
            let qi = Self::row(&self.q, k, is);
            r - (self.mu + self.user_bias[us] + self.item_bias[is] + dot(qi, &uv))
        };
        self.user_bias[us] += lr * (err - reg * self.user_bias[us]);
        self.item_bias[is] += lr * (err - reg * self.item_bias[is]);
        let n_items = self.implicit[us].len();
        let norm = if n_items == 0 {
            0.0
        } else {
            (n_items as f64).powf(-0.5)
        };
        for (f, &uvf) in uv.iter().enumerate() {
            let puf = self.p[us * k + f];
            let qif = self.q[is * k + f];
            self.p[us * k + f] += lr * (err * qif - reg * puf);
            self.q[is * k + f] += lr * (err * uvf - reg * qif);
            for &j in &self.implicit[us] {
                let y = &mut self.y[j as usize * k + f];
                *y += lr * (err * qif * norm - reg * *y);
            }
        }
    }

    /// Mean squared error over `data` (unclamped, no regularization).
    pub fn training_loss(&self, data: &RatingsTable) -> f64 {
        let n = data.len().max(1) as f64;
        data.ratings()
            .iter()
            .map(|r| (r.value - self.raw_estimate(r.user, r.item)).powi(2))
            .sum::<f64>()
            / n
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Builds the initial model: zero biases, normal factors, implicit sets
/// from `data`.
pub fn init_model(data: &RatingsTable, params: &TrainParams) -> Result<(SvdppModel, ChaCha8Rng), CfError> {
    params.validate()?;
    if data.is_empty() {
        return Err(CfError::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = params.factors;
    let (nu, ni) = (data.n_users(), data.n_items());
    let mut draw = |n: usize| -> Vec<f64> {
        if params.init_std == 0.0 {
            return vec![0.0; n];
        }
        let normal = Normal::new(0.0, params.init_std).expect("std is finite and positive");
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    };
    let p = draw(nu * k);
    let q = draw(ni * k);
    let y = draw(ni * k);
    let mut implicit = vec![Vec::new(); nu];
    for r in data.ratings() {
        implicit[r.user as usize].push(r.item);
    }
    for items in &mut implicit {
        items.sort_unstable();
    }
    Ok((
        SvdppModel {
            params: *params,
            mu: data.mean(),
            user_bias: vec![0.0; nu],
            item_bias: vec![0.0; ni],
            p,
            q,
            y,
            implicit,
            user_keys: data.users.clone(),
            item_keys: data.items.clone(),
        },
        rng,
    ))
}

/// Trains for `params.epochs` passes, each in a freshly shuffled order.
pub fn train(data: &RatingsTable, params: &TrainParams) -> Result<SvdppModel, CfError> {
    let (mut model, mut rng) = init_model(data, params)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let r = data.ratings()[idx];
            model.sgd_step(r.user, r.item, r.value);
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub rmse: f64,
    pub mae: f64,
    /// Errors of predicting the training mean for every test rating.
    pub baseline_rmse: f64,
    pub baseline_mae: f64,
    pub test_size: usize,
}

/// Seeded partition of rating indices into `k` folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f01d));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Trains on each `k - 1` folds and scores the held-out fold. Also returns
/// every held-out prediction.
pub fn cross_validate_scored(
    data: &RatingsTable,
    params: &TrainParams,
    k: usize,
) -> Result<(Vec<FoldMetrics>, Vec<Vec<Scored>>), CfError> {
    if k < 2 || data.len() < k {
        return Err(CfError::TooFewRatings {
            needed: k.max(2),
            folds: k,
            found: data.len(),
        });
    }
    let folds = fold_assignment(data.len(), k, params.seed);
    let mut metrics = Vec::with_capacity(k);
    let mut scored = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        let train_set = data.subset(&train_idx);
        let model = train(&train_set, params)?;
        let s: Vec<Scored> = test
            .iter()
            .map(|&i| {
                let r = data.ratings()[i];
                Scored {
                    user: r.user,
                    item: r.item,
                    predicted: model.predict(Some(r.user), Some(r.item)),
                    truth: r.value,
                }
            })
            .collect();
        let pred: Vec<f64> = s.iter().map(|x| x.predicted).collect();
        let truth: Vec<f64> = s.iter().map(|x| x.truth).collect();
        let base = vec![train_set.mean(); truth.len()];
        metrics.push(FoldMetrics {
            fold: f,
            rmse: evalstats::rmse(&pred, &truth).expect("fold is nonempty"),
            mae: evalstats::mae(&pred, &truth).expect("fold is nonempty"),
            baseline_rmse: evalstats::rmse(&base, &truth).expect("fold is nonempty"),
            baseline_mae: evalstats::mae(&base, &truth).expect("fold is nonempty"),
            test_size: truth.len(),
        });
        scored.push(s);
    }
    Ok((metrics, scored))
}

pub fn cross_validate(
    data: &RatingsTable,
    params: &TrainParams,
    k: usize,
) -> Result<Vec<FoldMetrics>, CfError> {
    cross_validate_scored(data, params, k).map(|(m, _)| m)
}

/// Top `n` candidates by prediction, ties by ascending item index.
pub fn recommend_top_n(
    model: &SvdppModel,
    user: u32,
    candidates: &[u32],
    n: usize,
    exclude_rated: bool,
) -> Vec<(u32, f64)> {
    let rated: &[u32] = model
        .implicit
        .get(user as usize)
        .map_or(&[], |v| v.as_slice());
    let mut scored: Vec<(u32, f64)> = candidates
        .iter()
        .copied()
        .filter(|i| !(exclude_rated && rated.binary_search(i).is_ok()))
        .map(|i| (i, model.predict(Some(user), Some(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.dedup_by_key(|s| s.0);
    scored.truncate(n);
    scored
}

const MAGIC: &[u8; 8] = b"AGSVDPP\0";
const VERSION: u32 = 1;

fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(w: &mut Vec<u8>, v: f64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    put_u32(w, s.len() as u32);
    w.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CfError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| CfError::Format("truncated".into()))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CfError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CfError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CfError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, CfError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| CfError::Format(e.to_string()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CfError> {
        (0..n).map(|_| self.f64()).collect()
    }
}

impl SvdppModel {
    /// Binary encoding: magic, version, header (factors, counts, mu and the
    /// training parameters), keys, implicit sets, then every parameter array
    /// as little-endian f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        put_u32(&mut w, VERSION);
        put_u64(&mut w, self.params.factors as u64);
        put_u64(&mut w, self.n_users() as u64);
        put_u64(&mut w, self.n_items() as u64);
        put_f64(&mut w, self.mu);
        put_u64(&mut w, self.params.seed);
        put_u64(&mut w, self.params.epochs as u64);
        put_f64(&mut w, self.params.learning_rate);
        put_f64(&mut w, self.params.regularization);
        put_f64(&mut w, self.params.init_std);
        for k in self.user_keys.iter().chain(&self.item_keys) {
            put_str(&mut w, k);
        }
        for items in &self.implicit {
            put_u32(&mut w, items.len() as u32);
            for &j in items {
                put_u32(&mut w, j);
            }
        }
        for block in [&self.user_bias, &self.item_bias, &self.p, &self.q, &self.y] {
            for &v in block.iter() {
                put_f64(&mut w, v);
            }
        }
        w
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CfError> {
        let mut r = Reader { buf, at: 0 };
        if r.take(8)? != MAGIC {
            return Err(CfError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CfError::Format(format!("unsupported version {version}")));
        }
        let k = r.u64()? as usize;
        let nu = r.u64()? as usize;
        let ni = r.u64()? as usize;
        let mu = r.f64()?;
        let seed = r.u64()?;
        let epochs = r.u64()? as usize;
        let params = TrainParams {
            factors: k,
            epochs,
            learning_rate: r.f64()?,
            regularization: r.f64()?,
            init_std: r.f64()?,
            seed,
        };
        // every size must be backed by bytes before allocating
        let remaining = buf.len().saturating_sub(r.at);
        let needed = (nu + ni)
            .checked_mul(4)
            .and_then(|x| x.checked_add((nu + ni).checked_mul(8)?.checked_mul(k.max(1))?))
            .ok_or_else(|| CfError::Format("header sizes overflow".into()))?;
        if needed > remaining {
            return Err(CfError::Format("truncated".into()));
        }
        let user_keys = (0..nu).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
        let item_keys = (0..ni).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
        let mut implicit = Vec::with_capacity(nu);
        for _ in 0..nu {
            let n = r.u32()? as usize;
            let items = (0..n).map(|_| r.u32()).collect::<Result<Vec<u32>, _>>()?;
            if items.iter().any(|&j| j as usize >= ni) {
                return Err(CfError::Format("implicit item out of range".into()));
            }
            implicit.push(items);
        }
        let model = SvdppModel {
            params,
            mu,
            user_bias: r.f64s(nu)?,
            item_bias: r.f64s(ni)?,
            p: r.f64s(nu * k)?,
            q: r.f64s(ni * k)?,
            y: r.f64s(ni * k)?,
            implicit,
            user_keys,
            item_keys,
        };
        if r.at != buf.len() {
            return Err(CfError::Format("trailing bytes".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CfError> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CfError> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}
