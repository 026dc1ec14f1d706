//! Exit codes of the `ttk` binary.

use std::fs;
use std::process::Command;

use tindex_core::backend::mock::{MockMode, MockServer};

fn ttk(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ttk")).args(args).output().expect("binary runs");
    (out.status.code().expect("exited normally"), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn usage_error_is_2() {
    assert_eq!(ttk(&["eval-binary"]).0, 2);
    assert_eq!(ttk(&["no-such-command"]).0, 2);
}

#[test]
fn malformed_input_is_2() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("bad.jsonl");
    fs::write(&dump, "{\"sample_id\": \"a\"}\n").unwrap();
    let (code, err) = ttk(&["dump", "validate", "--dump", dump.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("bad.jsonl"), "{err}");
}

#[test]
fn missing_file_is_4() {
    let (code, err) = ttk(&["dump", "validate", "--dump", "/nonexistent/dump.jsonl"]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn endpoint_without_logprobs_is_3() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds.jsonl");
    fs::write(
        &ds,
        concat!(
            "{\"kind\":\"source\",\"id\":\"s1\",\"genre\":\"news\",\"text\":\"hello\"}\n",
            "{\"kind\":\"translation\",\"id\":\"t1\",\"source_id\":\"s1\",\"author\":\"a\",\"condition\":\"low\",\"text\":\"你好\"}\n",
        ),
    )
    .unwrap();
    let server = MockServer::start(MockMode::NoLogprobs).unwrap();
    let out = dir.path().join("dump.jsonl");
    let (code, err) = ttk(&[
        "fetch",
        "--dataset",
        ds.to_str().unwrap(),
        "--base-url",
        &server.base_url(),
        "--model-id",
        "mock",
        "--retries",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn fixture_round_trip_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(ttk(&["dump", "fixture", "--n", "20", "--out", fx.to_str().unwrap()]).0, 0);
    let (code, err) = ttk(&["dump", "validate", "--dump", fx.join("high.jsonl").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
}
