use std::fs;
use std::path::Path;

use attaingraph_cli::cli_main;
use attaingraph_cli::service::{router, AppState, ServiceConfig};
use attaingraph_core::fixtures;
use attaingraph_core::graphstore::save_dataset;
use attaingraph_core::queryexec::{render_cell, QueryResponse};
use attaingraph_core::querylang::{recommendation_query, unparse, LISTING_1, SAMPLE_STEAMID};
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("attaingraph").chain(args.iter().copied());
    let code = cli_main(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture_dir() -> tempfile::TempDir {
    let (ds, _) = fixtures::dataset(false);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds.graph, &ds.achievements, dir.path()).unwrap();
    dir
}

fn p(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage() {
    let (code, out, err) = run(&[]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("Usage"), "{err}");
    for sub in ["gen", "rate", "query", "train", "eval-cf", "eval-pr", "fit-lomax", "hist", "serve"] {
        assert!(err.contains(sub), "{sub} missing from usage");
    }
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["query", "--bogus"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn listing_file_on_fixture() {
    let dir = fixture_dir();
    let q = dir.path().join("listing1.q");
    fs::write(&q, LISTING_1).unwrap();
    let (code, out, err) = run(&["query", "--data", p(dir.path()), "--file", q.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "g2\t19.99\t0.6\n");
    let (_, out, _) = run(&["query", "--data", p(dir.path()), "--text", LISTING_1, "--header"]);
    assert_eq!(out, "V_G(b).name\tV_G(b).cost\tavg\ng2\t19.99\t0.6\n");
}

#[test]
fn query_errors_have_exit_codes() {
    let dir = fixture_dir();
    let (code, _, err) = run(&["query", "--data", p(dir.path()), "--text", "SELECT"]);
    assert_eq!(code, 1);
    assert!(err.contains("1:6"), "{err}");
    let (code, _, _) = run(&["query", "--text", LISTING_1]);
    assert_eq!(code, 1);
    let missing = dir.path().join("nope");
    let (code, _, err) = run(&["query", "--data", p(&missing), "--text", LISTING_1]);
    assert_eq!(code, 2, "{err}");
    fs::write(dir.path().join("players.jsonl"), "{broken\n").unwrap();
    assert_eq!(run(&["query", "--data", p(dir.path()), "--text", LISTING_1]).0, 2);
}

#[tokio::test]
async fn cli_and_http_agree() {
    let dir = fixture_dir();
    let texts = [
        LISTING_1.to_string(),
        unparse(&recommendation_query(SAMPLE_STEAMID, true, None, 5)),
        unparse(&recommendation_query(SAMPLE_STEAMID, false, Some("Action"), 2)),
        "SELECT g.name, g.cost PATTERNS V_G(g)-E_R-V_R WHERE V_R.description=\"Strategy\"".into(),
    ];
    let (g, _) = fixtures::graph(false);
    let app = router(AppState::ready(ServiceConfig::default(), g));
    for text in &texts {
        let (code, cli_out, err) = run(&["query", "--data", p(dir.path()), "--text", text]);
        assert_eq!(code, 0, "{err}");
        let req = Request::post("/api/query")
            .body(Body::from(serde_json::json!({ "text": text }).to_string()))
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let resp: QueryResponse = serde_json::from_slice(&bytes).unwrap();
        let http_out: String = resp
            .rows
            .iter()
            .map(|r| r.iter().map(render_cell).collect::<Vec<_>>().join("\t") + "\n")
            .collect();
        assert_eq!(cli_out, http_out, "{text}");
    }
}

#[test]
fn rate_prints_per_game_summaries() {
    let dir = fixture_dir();
    let (code, out, _) = run(&["rate", "--data", p(dir.path())]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "appid\tname\towners\tmin\tmax\tmean");
    assert_eq!(lines[1], "10\tg1\t1\t0.5\t0.5\t0.5");
    assert_eq!(lines[2], "20\tg2\t2\t0.4\t0.8\t0.6000000000000001");
    assert_eq!(lines.len(), 4);
}

#[test]
fn pipeline_on_small_synthetic_data() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    let (code, report, err) = run(&["gen", "--scale", "0.05", "--seed", "11", "--out", p(&data)]);
    assert_eq!(code, 0, "{err}");
    assert!(report.contains("attainment_ks"), "{report}");

    let (code, out, _) = run(&["fit-lomax", "--data", p(&data)]);
    assert_eq!(code, 0);
    for key in ["n\t", "shape\t", "scale\t", "ks_fit\t", "ks_reference\t"] {
        assert!(out.contains(key), "{out}");
    }

    let plot = tmp.path().join("plot.jsonl");
    let (code, out, _) = run(&["hist", "--data", p(&data), "--bins", "10", "--plot-data", p(&plot)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("group\tlo\thi\tdensity\n"));
    let records = fs::read_to_string(&plot).unwrap();
    assert_eq!(records.lines().count(), out.lines().count() - 1);
    assert_eq!(run(&["hist", "--data", p(&data), "--bins", "0"]).0, 1);

    let model = tmp.path().join("m.bin");
    let (code, out, err) = run(&["train", "--data", p(&data), "--out", p(&model), "--epochs", "3"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("training_loss"));
    assert!(model.exists());

    let (code, out, _) = run(&["eval-cf", "--data", p(&data), "--folds", "3", "--epochs", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    assert!(out.lines().last().unwrap().starts_with("mean\t"));

    let (code, out, _) = run(&["eval-pr", "--data", p(&data), "--folds", "3", "--epochs", "3", "--n", "1,5"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1 + 2 * 11);
    assert_eq!(run(&["eval-pr", "--data", p(&data), "--folds", "1"]).0, 1);

    let a = tmp.path().join("a");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"achievements_median": 5}"#).unwrap();
    assert_eq!(run(&["gen", "--scale", "0.01", "--out", p(&a), "--config", p(&cfg)]).0, 0);
    fs::write(&cfg, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(run(&["gen", "--scale", "0.01", "--out", p(&a), "--config", p(&cfg)]).0, 2);
}

#[test]
fn eval_cf_on_planted_data() {
    let (code, out, _) = run(&["eval-cf", "--planted", "--seed", "0"]);
    assert_eq!(code, 0);
    let mean: Vec<f64> = out
        .lines()
        .last()
        .unwrap()
        .split('\t')
        .skip(1)
        .take(4)
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(mean[0] <= 0.8 * mean[2], "{out}");
}

#[test]
fn serve_rejects_missing_data_dir() {
    let (code, _, err) = run(&["serve", "--data", "/definitely/not/here", "--port", "0"]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = run(&["serve", "--data", "/definitely/not/here", "--port", "8123"]);
    assert_eq!(code, 2);
}

fn http_get(addr: &str, path: &str) -> String {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).unwrap();
    buf
}

#[test]
fn binary_serves_fixture() {
    use std::io::{BufRead, BufReader};
    use std::process::{Command, Stdio};
    let dir = fixture_dir();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_attaingraph"))
        .args(["serve", "--data", p(dir.path()), "--port", &port.to_string()])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().trim_start_matches("listening on http://").to_owned();
    let mut resp = String::new();
    for _ in 0..100 {
        resp = http_get(&addr, "/api/schema");
        if resp.starts_with("HTTP/1.1 200") {
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    let _ = child.kill();
    let _ = child.wait();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"V_P\""));
}
