//! Error metrics, top-n precision/recall, and Lomax distribution fitting.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attainment::RATING_ATTR;
use crate::graphstore::{Direction, EdgeKind, PropertyGraph, VertexKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
}

fn check(pred: &[f64], truth: &[f64]) -> Result<(), MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth)?;
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth)?;
    let abs: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(abs / pred.len() as f64)
}

/// One held-out rating with the model's prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub user: u32,
    pub item: u32,
    pub predicted: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    /// Users with at least one recommendation (precision denominator).
    pub users_counted: usize,
    /// Users with at least one relevant item (recall denominator).
    pub recall_users: usize,
}

/// Default threshold grid: 0.00, 0.05, ..., 0.50.
pub fn default_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.05).collect()
}

/// Per user, recommends the top `n` test items with prediction at least `t`
/// and counts those whose true rating is at least `t`.
pub fn precision_recall_at_n(scored: &[Scored], n: usize, thresholds: &[f64]) -> Vec<PrPoint> {
    let mut by_user: BTreeMap<u32, Vec<&Scored>> = BTreeMap::new();
    for s in scored {
        by_user.entry(s.user).or_default().push(s);
    }
    for items in by_user.values_mut() {
        items.sort_by(|a, b| {
            b.predicted
                .total_cmp(&a.predicted)
                .then(a.item.cmp(&b.item))
        });
    }
    thresholds
        .iter()
        .map(|&t| {
            let (mut p_sum, mut p_users, mut r_sum, mut r_users) = (0.0, 0, 0.0, 0);
            for items in by_user.values() {
                let rec: Vec<&&Scored> = items.iter().take(n).filter(|s| s.predicted >= t).collect();
                let hits = rec.iter().filter(|s| s.truth >= t).count();
                let relevant = items.iter().filter(|s| s.truth >= t).count();
                if !rec.is_empty() {
                    p_sum += hits as f64 / rec.len() as f64;
                    p_users += 1;
                }
                if relevant > 0 {
                    r_sum += hits as f64 / relevant as f64;
                    r_users += 1;
                }
            }
            PrPoint {
                threshold: t,
                n,
                precision: if p_users > 0 { p_sum / p_users as f64 } else { 0.0 },
                recall: if r_users > 0 { r_sum / r_users as f64 } else { 0.0 },
                users_counted: p_users,
                recall_users: r_users,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("need at least 10 values, got {0}")]
    TooSmall(usize),
    #[error("values must be finite and nonnegative")]
    InvalidValue,
    #[error("all values are zero")]
    DegenerateSample,
    #[error("empty sample")]
    Empty,
    #[error("shape and scale must be positive and finite")]
    InvalidParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LomaxParams {
    pub shape: f64,
    pub scale: f64,
}

impl LomaxParams {
    /// The attainment distribution reported for the original crawl.
    pub const PAPER: LomaxParams = LomaxParams {
        shape: 4.78,
        scale: 0.61,
    };

    pub fn new(shape: f64, scale: f64) -> Result<Self, FitError> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(FitError::InvalidParams);
        }
        Ok(Self { shape, scale })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-self.shape * (x / self.scale).ln_1p()).exp_m1()
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        self.scale * ((-(-u).ln_1p() / self.shape).exp_m1())
    }

    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| self.inverse_cdf(rng.random::<f64>()))
            .collect()
    }

    pub fn log_likelihood(&self, sample: &[f64]) -> f64 {
        let n = sample.len() as f64;
        let s: f64 = sample.iter().map(|x| (x / self.scale).ln_1p()).sum();
        n * self.shape.ln() - n * self.scale.ln() - (self.shape + 1.0) * s
    }
}

/// Log-likelihood with the shape at its conditional optimum for `scale`.
pub fn profile_log_likelihood(sample: &[f64], scale: f64) -> f64 {
    let s: f64 = sample.iter().map(|x| (x / scale).ln_1p()).sum();
    let n = sample.len() as f64;
    let shape = n / s;
    n * shape.ln() - n * scale.ln() - (shape + 1.0) * s
}

/// Maximum-likelihood fit by golden-section search over `ln(scale)`.
pub fn lomax_fit(sample: &[f64]) -> Result<LomaxParams, FitError> {
    if sample.len() < 10 {
        return Err(FitError::TooSmall(sample.len()));
    }
    if sample.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(FitError::InvalidValue);
    }
    if sample.iter().all(|&x| x == 0.0) {
        return Err(FitError::DegenerateSample);
    }
    let f = |ln_scale: f64| -profile_log_likelihood(sample, ln_scale.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-4f64.ln(), 1e4f64.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-8 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let scale = ((a + b) / 2.0).exp();
    let s: f64 = sample.iter().map(|x| (x / scale).ln_1p()).sum();
    LomaxParams::new(sample.len() as f64 / s, scale)
}

/// Kolmogorov-Smirnov distance between the sample and `params`.
pub fn ks_statistic(sample: &[f64], params: &LomaxParams) -> Result<f64, FitError> {
    if sample.is_empty() {
        return Err(FitError::Empty);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = params.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// Empirical CDF as `(value, fraction <= value)` at each distinct value.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub group: String,
    /// `bins + 1` uniform edges over [0, 1].
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub count: usize,
}

/// Density histogram over [0, 1]; values outside are clamped into the
/// end bins.
pub fn histogram(group: impl Into<String>, values: &[f64], bins: usize) -> HistogramSpec {
    let bins = bins.max(1);
    let width = 1.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let norm = if values.is_empty() {
        0.0
    } else {
        1.0 / (values.len() as f64 * width)
    };
    HistogramSpec {
        group: group.into(),
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        densities: counts.iter().map(|&c| c as f64 * norm).collect(),
        count: values.len(),
    }
}

/// One histogram per genre with at least one rated ownership, in genre id
/// order. A game in several genres contributes to each.
pub fn genre_histograms(graph: &PropertyGraph, bins: usize) -> Vec<HistogramSpec> {
    graph
        .vertices_of(VertexKind::Genre)
        .iter()
        .filter_map(|&genre| {
            let values: Vec<f64> = graph
                .adjacent(genre, EdgeKind::HasGenre, Direction::In)
                .iter()
                .flat_map(|&(game, _)| graph.adjacent(game, EdgeKind::Owns, Direction::In))
                .filter_map(|&(_, e)| graph.edges()[e.index()].attrs.get(RATING_ATTR)?.as_f64())
                .collect();
            (!values.is_empty()).then(|| histogram(graph.label(genre), &values, bins))
        })
        .collect()
}

/// Histogram over every rated ownership edge.
pub fn overall_histogram(graph: &PropertyGraph, bins: usize) -> HistogramSpec {
    histogram("all", &crate::attainment::all_ratings(graph), bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphstore::{attrs, AttrValue, Attrs};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert_eq!(mae(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 0.0], &[0.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
        assert_eq!(mae(&[1.0], &[]), Err(MetricError::LengthMismatch(1, 0)));
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae_and_is_symmetric(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50)
        ) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&p, &t).unwrap();
            let m = mae(&p, &t).unwrap();
            prop_assert!(r + 1e-12 >= m);
            prop_assert_eq!(r, rmse(&t, &p).unwrap());
            prop_assert_eq!(m, mae(&t, &p).unwrap());
        }

        #[test]
        fn ks_is_bounded_and_order_invariant(
            mut xs in prop::collection::vec(0.0f64..3.0, 1..40)
        ) {
            let d = ks_statistic(&xs, &LomaxParams::PAPER).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            xs.reverse();
            prop_assert_eq!(d, ks_statistic(&xs, &LomaxParams::PAPER).unwrap());
        }

        #[test]
        fn histograms_integrate_to_one(
            xs in prop::collection::vec(0.0f64..=1.0, 1..200),
            bins in 1usize..80
        ) {
            let h = histogram("g", &xs, bins);
            let width = 1.0 / bins as f64;
            let total: f64 = h.densities.iter().map(|d| d * width).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(h.densities.iter().all(|d| *d >= 0.0));
        }
    }

    fn scored(rows: &[(u32, u32, f64, f64)]) -> Vec<Scored> {
        rows.iter()
            .map(|&(user, item, predicted, truth)| Scored {
                user,
                item,
                predicted,
                truth,
            })
            .collect()
    }

    #[test]
    fn perfect_predictor_has_full_precision() {
        let data = scored(&[
            (0, 0, 0.5, 0.5),
            (0, 1, 0.1, 0.1),
            (0, 2, 0.3, 0.3),
            (1, 0, 0.2, 0.2),
            (1, 3, 0.45, 0.45),
        ]);
        let points = precision_recall_at_n(&data, 2, &[0.0, 0.1, 0.2, 0.4]);
        assert!(points.iter().all(|p| p.precision == 1.0));
        let precisions: Vec<f64> = points.iter().map(|p| p.precision).collect();
        assert!(precisions.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_threshold_recall_is_coverage() {
        let data = scored(&[
            (0, 0, 0.5, 0.9),
            (0, 1, 0.1, 0.0),
            (0, 2, 0.3, 0.3),
            (1, 0, 0.2, 0.2),
        ]);
        let p = precision_recall_at_n(&data, 2, &[0.0])[0];
        assert!((p.recall - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(p.precision, 1.0);
        assert_eq!(p.users_counted, 2);
    }

    #[test]
    fn users_without_recommendations_are_skipped() {
        let data = scored(&[(0, 0, 0.05, 0.5), (1, 0, 0.5, 0.5)]);
        let p = precision_recall_at_n(&data, 5, &[0.1])[0];
        assert_eq!(p.users_counted, 1);
        assert_eq!(p.recall_users, 2);
        assert_eq!(p.recall, 0.5);
    }

    #[test]
    fn cdf_and_inverse() {
        let d = LomaxParams::PAPER;
        assert_eq!(d.cdf(0.0), 0.0);
        for u in [0.01, 0.3, 0.5, 0.9, 0.999] {
            assert!((d.cdf(d.inverse_cdf(u)) - u).abs() < 1e-12);
        }
        let mut prev = 0.0;
        for i in 0..100 {
            let f = d.cdf(i as f64 * 0.05);
            assert!(f >= prev);
            prev = f;
        }
        assert!(LomaxParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn ks_single_zero_is_one() {
        assert_eq!(ks_statistic(&[0.0], &LomaxParams::PAPER).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[], &LomaxParams::PAPER), Err(FitError::Empty));
    }

    #[test]
    fn fit_recovers_parameters() {
        let truth = LomaxParams::PAPER;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs = truth.sample(&mut rng, 100_000);
        let fit = lomax_fit(&xs).unwrap();
        assert!((fit.shape / truth.shape - 1.0).abs() < 0.10, "{fit:?}");
        assert!((fit.scale / truth.scale - 1.0).abs() < 0.15, "{fit:?}");
        assert!(ks_statistic(&xs, &truth).unwrap() < 0.01);
        let n = xs.len() as f64;
        assert!(fit.log_likelihood(&xs) >= truth.log_likelihood(&xs) - 1e-6 * n);
        let at = |s: f64| profile_log_likelihood(&xs, s);
        assert!(at(fit.scale) >= at(0.5 * fit.scale));
        assert!(at(fit.scale) >= at(2.0 * fit.scale));
    }

    #[test]
    fn fit_edge_cases() {
        assert_eq!(lomax_fit(&[0.0; 20]), Err(FitError::DegenerateSample));
        assert_eq!(lomax_fit(&[0.1; 5]), Err(FitError::TooSmall(5)));
        assert_eq!(lomax_fit(&[-0.1; 12]), Err(FitError::InvalidValue));
        let flat = lomax_fit(&[0.3; 50]).unwrap();
        assert!(flat.shape.is_finite() && flat.scale.is_finite());
        assert!(ks_statistic(&[0.3; 50], &flat).unwrap() < 1.0);
    }

    #[test]
    fn ecdf_steps() {
        assert_eq!(ecdf(&[0.2, 0.1, 0.2, 0.4]), vec![(0.1, 0.25), (0.2, 0.75), (0.4, 1.0)]);
    }

    #[test]
    fn single_rating_histogram() {
        let h = histogram("x", &[0.25], 4);
        assert_eq!(h.densities, vec![0.0, 4.0, 0.0, 0.0]);
        assert_eq!(histogram("x", &[1.0], 4).densities[3], 4.0);
    }

    #[test]
    fn genre_histograms_skip_unowned_genres() {
        let mut g = PropertyGraph::new();
        let p = g.add_vertex(VertexKind::Player, attrs([("steamid", "1")])).unwrap();
        let game = g.add_vertex(VertexKind::Game, attrs([("name", "a")])).unwrap();
        let used = g
            .add_vertex(VertexKind::Genre, attrs([("description", "Action")]))
            .unwrap();
        let other = g
            .add_vertex(VertexKind::Genre, attrs([("description", "Strategy")]))
            .unwrap();
        let lonely = g.add_vertex(VertexKind::Game, attrs([("name", "b")])).unwrap();
        g.add_edge(EdgeKind::HasGenre, game, used, Attrs::new()).unwrap();
        g.add_edge(EdgeKind::HasGenre, lonely, other, Attrs::new()).unwrap();
        let mut a = Attrs::new();
        a.insert(RATING_ATTR.into(), AttrValue::Real(0.25));
        g.add_edge(EdgeKind::Owns, p, game, a).unwrap();
        g.freeze();
        let hs = genre_histograms(&g, 4);
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].group, "Action");
        assert_eq!(hs[0].densities, vec![0.0, 4.0, 0.0, 0.0]);
    }
}
