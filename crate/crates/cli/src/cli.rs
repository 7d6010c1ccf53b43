use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use attaingraph_core::attainment::{all_ratings, annotate_graph, summarize_ratings, AttainmentError};
use attaingraph_core::cf::{cross_validate, cross_validate_scored, train, CfError, RatingsTable, TrainParams};
use attaingraph_core::datagen::{generate, planted_ratings, GenConfig, GenError, PlantedConfig};
use attaingraph_core::evalstats::{
    default_thresholds, genre_histograms, ks_statistic, lomax_fit, overall_histogram,
    precision_recall_at_n, FitError, HistogramSpec, LomaxParams,
};
use attaingraph_core::graphstore::{load_dataset, DatasetError, PropertyGraph};
use attaingraph_core::queryexec::{respond, ExecError};
use attaingraph_core::querylang::{compile, QueryError};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::service::{self, AppState, ServiceConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("query: {0}")]
    Query(#[from] QueryError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Attainment(#[from] AttainmentError),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Query(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "attaingraph",
    version,
    about = "Attainment ratings, graph queries and recommendations over game ownership data",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn data(&self) -> Result<&Path, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Usage("--data DIR is required".into()))
    }
}

#[derive(Debug, Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 20)]
    factors: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.007)]
    lr: f64,
    #[arg(long, default_value_t = 0.02)]
    reg: f64,
    #[arg(long, default_value_t = 0.1)]
    init_std: f64,
}

impl TrainOpts {
    fn params(&self, seed: u64) -> TrainParams {
        TrainParams {
            factors: self.factors,
            epochs: self.epochs,
            learning_rate: self.lr,
            regularization: self.reg,
            init_std: self.init_std,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupBy {
    Genre,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory (same as --data).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// JSON file whose fields override the generator config.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Compute attainment ratings and print per-game min/max/mean.
    Rate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a graph query and print tab-separated rows.
    Query {
        #[command(flatten)]
        common: Common,
        /// File holding the query text.
        #[arg(long, value_name = "FILE", conflicts_with = "text")]
        file: Option<PathBuf>,
        /// Query text.
        #[arg(long)]
        text: Option<String>,
        /// Print a header line with column names.
        #[arg(long)]
        header: bool,
        /// Print the full response as JSON instead of rows.
        #[arg(long)]
        json: bool,
    },
    /// Train an SVD++ model on all ratings and save it.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TrainOpts,
        /// Model output file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// K-fold cross-validated RMSE and MAE.
    EvalCf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TrainOpts,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Use the planted low-rank ratings instead of --data.
        #[arg(long)]
        planted: bool,
    },
    /// Precision@n and Recall@n over a threshold grid, from held-out folds.
    EvalPr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TrainOpts,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Cutoffs; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', default_value = "5")]
        n: Vec<usize>,
        /// Thresholds; defaults to 0.00..0.50 in steps of 0.05.
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
        #[arg(long)]
        planted: bool,
    },
    /// Fit a Lomax distribution to all ratings and report KS distances.
    FitLomax {
        #[command(flatten)]
        common: Common,
    },
    /// Density histograms of ratings.
    Hist {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = GroupBy::Genre)]
        groupby: GroupBy,
        /// Also write one JSON record per bin to this file.
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long, default_value = "*")]
        cors_origin: String,
        /// Recommendation count when a request omits `n`.
        #[arg(long, default_value_t = 5)]
        limit: u64,
    },
}

/// Loads, annotates and freezes a dataset.
pub fn load_annotated(dir: &Path) -> Result<PropertyGraph, CliError> {
    let mut ds = load_dataset(dir)?;
    annotate_graph(&mut ds.graph, &ds.achievements)?;
    ds.graph.freeze();
    Ok(ds.graph)
}

fn ratings_for(common: &Common, planted: bool) -> Result<RatingsTable, CliError> {
    if planted {
        return Ok(planted_ratings(&PlantedConfig {
            seed: common.seed,
            ..PlantedConfig::default()
        }));
    }
    Ok(RatingsTable::from_graph(&load_annotated(common.data()?)?))
}

fn check_folds(folds: usize) -> Result<(), CliError> {
    if folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    Ok(())
}

fn write_hist_tsv(out: &mut dyn Write, hs: &[HistogramSpec]) -> io::Result<()> {
    writeln!(out, "group\tlo\thi\tdensity")?;
    for h in hs {
        for (b, d) in h.densities.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", h.group, h.edges[b], h.edges[b + 1], d)?;
        }
    }
    Ok(())
}

fn write_plot_data(path: &Path, hs: &[HistogramSpec]) -> Result<(), CliError> {
    let mut s = String::new();
    for h in hs {
        for (b, d) in h.densities.iter().enumerate() {
            let rec = serde_json::json!({ "group": h.group, "bin": b, "density": d });
            s.push_str(&rec.to_string());
            s.push('\n');
        }
    }
    fs::write(path, s).map_err(io_err(path))
}

fn run_serve(
    common: &Common,
    host: &str,
    port: u16,
    config: ServiceConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let dir = common.data()?.to_owned();
    if !dir.is_dir() {
        return Err(CliError::Io {
            path: dir,
            source: io::Error::new(io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Usage(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(io_err(&dir))?;
    let failed: Arc<OnceLock<CliError>> = Arc::new(OnceLock::new());
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(io_err(Path::new(host)))?;
        let local = listener.local_addr().map_err(io_err(Path::new(host)))?;
        let _ = writeln!(out, "listening on http://{local}");
        let _ = out.flush();
        let state = AppState::loading(config);
        let load = {
            let state = state.clone();
            tokio::task::spawn_blocking(move || load_annotated(&dir).map(|g| state.install(g)))
        };
        let failed2 = failed.clone();
        let shutdown = async move {
            match load.await {
                Ok(Ok(_)) => {
                    let _ = tokio::signal::ctrl_c().await;
                }
                Ok(Err(e)) => {
                    let _ = failed2.set(e);
                }
                Err(e) => {
                    let _ = failed2.set(CliError::Usage(format!("loader panicked: {e}")));
                }
            }
        };
        service::serve(listener, state, shutdown)
            .await
            .map_err(io_err(Path::new(host)))
    })?;
    match Arc::try_unwrap(failed).ok().and_then(OnceLock::into_inner) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |e: io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cli.command {
        Command::Gen {
            common,
            out: dir,
            scale,
            config,
        } => {
            let dir = dir
                .or(common.data.clone())
                .ok_or_else(|| CliError::Usage("--out DIR is required".into()))?;
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(CliError::Usage("--scale must be positive".into()));
            }
            let mut cfg = GenConfig::with_scale(scale, common.seed);
            if let Some(path) = config {
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                cfg = cfg.merge_json(&text)?;
            }
            let report = generate(&cfg, &dir)?;
            write!(out, "{report}").map_err(w)?;
        }
        Command::Rate { common } => {
            let g = load_annotated(common.data()?)?;
            writeln!(out, "appid\tname\towners\tmin\tmax\tmean").map_err(w)?;
            for s in summarize_ratings(&g) {
                let v = &g.vertices()[s.game.index()];
                let attr = |k: &str| v.attrs.get(k).map(|a| a.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    attr("appid"),
                    attr("name"),
                    s.owners,
                    s.min,
                    s.max,
                    s.mean
                )
                .map_err(w)?;
            }
        }
        Command::Query {
            common,
            file,
            text,
            header,
            json,
        } => {
            let text = match (file, text) {
                (Some(path), None) => fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
                (None, Some(t)) => t,
                _ => return Err(CliError::Usage("give exactly one of --file or --text".into())),
            };
            let query = compile(&text)?;
            let g = load_annotated(common.data()?)?;
            let resp = respond(&query, &g)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&resp).expect("serializable")).map_err(w)?;
            } else {
                if header {
                    writeln!(out, "{}", resp.columns.join("\t")).map_err(w)?;
                }
                write!(out, "{}", resp.to_tsv()).map_err(w)?;
            }
        }
        Command::Train { common, opts, out: path } => {
            let data = RatingsTable::from_graph(&load_annotated(common.data()?)?);
            let model = train(&data, &opts.params(common.seed))?;
            model.save(&path)?;
            writeln!(out, "ratings\t{}", data.len()).map_err(w)?;
            writeln!(out, "users\t{}", data.n_users()).map_err(w)?;
            writeln!(out, "items\t{}", data.n_items()).map_err(w)?;
            writeln!(out, "training_loss\t{}", model.training_loss(&data)).map_err(w)?;
        }
        Command::EvalCf {
            common,
            opts,
            folds,
            planted,
        } => {
            check_folds(folds)?;
            let data = ratings_for(&common, planted)?;
            let metrics = cross_validate(&data, &opts.params(common.seed), folds)?;
            writeln!(out, "fold\trmse\tmae\tbaseline_rmse\tbaseline_mae\ttest_size").map_err(w)?;
            for m in &metrics {
                writeln!(
                    out,
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                    m.fold, m.rmse, m.mae, m.baseline_rmse, m.baseline_mae, m.test_size
                )
                .map_err(w)?;
            }
            let k = metrics.len() as f64;
            let mean = |f: fn(&attaingraph_core::cf::FoldMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / k;
            writeln!(
                out,
                "mean\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                mean(|m| m.rmse),
                mean(|m| m.mae),
                mean(|m| m.baseline_rmse),
                mean(|m| m.baseline_mae),
                data.len()
            )
            .map_err(w)?;
        }
        Command::EvalPr {
            common,
            opts,
            folds,
            n,
            thresholds,
            planted,
        } => {
            check_folds(folds)?;
            if n.contains(&0) {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let thresholds = if thresholds.is_empty() {
                default_thresholds()
            } else {
                thresholds
            };
            if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(CliError::Usage("thresholds must lie in [0, 1]".into()));
            }
            let data = ratings_for(&common, planted)?;
            let (_, scored) = cross_validate_scored(&data, &opts.params(common.seed), folds)?;
            let flat: Vec<_> = scored.into_iter().flatten().collect();
            writeln!(out, "threshold\tn\tprecision\trecall\tusers_counted\trecall_users").map_err(w)?;
            for &cut in &n {
                for p in precision_recall_at_n(&flat, cut, &thresholds) {
                    writeln!(
                        out,
                        "{:.2}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                        p.threshold, p.n, p.precision, p.recall, p.users_counted, p.recall_users
                    )
                    .map_err(w)?;
                }
            }
        }
        Command::FitLomax { common } => {
            let g = load_annotated(common.data()?)?;
            let sample = all_ratings(&g);
            let fit = lomax_fit(&sample)?;
            writeln!(out, "n\t{}", sample.len()).map_err(w)?;
            writeln!(out, "shape\t{:.6}", fit.shape).map_err(w)?;
            writeln!(out, "scale\t{:.6}", fit.scale).map_err(w)?;
            writeln!(out, "ks_fit\t{:.6}", ks_statistic(&sample, &fit)?).map_err(w)?;
            let r = LomaxParams::PAPER;
            writeln!(
                out,
                "ks_reference\t{:.6}\t(shape {}, scale {})",
                ks_statistic(&sample, &r)?,
                r.shape,
                r.scale
            )
            .map_err(w)?;
        }
        Command::Hist {
            common,
            bins,
            groupby,
            plot_data,
        } => {
            if bins == 0 || bins > service::MAX_BINS {
                return Err(CliError::Usage(format!("--bins must be in 1..={}", service::MAX_BINS)));
            }
            let g = load_annotated(common.data()?)?;
            let hs = match groupby {
                GroupBy::Genre => genre_histograms(&g, bins),
                GroupBy::All => vec![overall_histogram(&g, bins)],
            };
            write_hist_tsv(out, &hs).map_err(w)?;
            if let Some(path) = plot_data {
                write_plot_data(&path, &hs)?;
            }
        }
        Command::Serve {
            common,
            host,
            port,
            cors_origin,
            limit,
        } => {
            if limit == 0 {
                return Err(CliError::Usage("--limit must be at least 1".into()));
            }
            let config = ServiceConfig {
                cors_origin,
                default_limit: limit,
            };
            run_serve(&common, &host, port, config, out)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 on success, 1 on usage errors, 2 on
/// data errors.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.exit_code() == 1 {
                let _ = writeln!(err, "run `attaingraph help` for usage");
            }
            e.exit_code()
        }
    }
}
