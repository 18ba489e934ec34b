mod common;

use std::fs;
use std::process::Command;

use serde_json::{json, Value};

use common::{ingest_sample, path_str, timelines, Server, BIN, SAMPLE_CATALOG};
use timelines_core::activity::{TopicId, UserId};
use timelines_core::persistence::Store;
use timelines_core::session::{compute_session_durations, SessionDuration};

const MIN: i64 = 60_000;
const DAY: i64 = 24 * 60 * MIN;
const T0: i64 = 1_709_280_000_000;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ingest_prints_stats_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("index");
    let args = ["ingest", "--catalog", SAMPLE_CATALOG, "--index-dir", path_str(&index)];
    let out = timelines(&args);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("read 40 records: 40 accepted, 0 rejected"));
    let first = (fs::read(index.join("catalog.jsonl")).unwrap(), fs::read(index.join("index.json")).unwrap());
    assert!(timelines(&args).status.success());
    let second = (fs::read(index.join("catalog.jsonl")).unwrap(), fs::read(index.join("index.json")).unwrap());
    assert_eq!(first, second);
}

#[test]
fn ingest_reports_rejections_and_strict_mode_fails() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = dir.path().join("cat.jsonl");
    fs::write(
        &catalog,
        concat!(
            r#"{"id":"a","title":"Alpha","authors":[],"year":1999,"type":"book"}"#,
            "\n",
            r#"{"id":"b","authors":[],"type":"book"}"#,
            "\n",
            r#"{"id":"a","title":"Again","authors":[],"type":"dvd"}"#,
            "\n",
        ),
    )
    .unwrap();
    let index = dir.path().join("index");
    let out =
        timelines(&["ingest", "--catalog", path_str(&catalog), "--index-dir", path_str(&index), "--format", "json"]);
    assert!(out.status.success());
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["records_read"], 3);
    assert_eq!(stats["records_accepted"], 1);
    assert_eq!(stats["records_rejected"], 2);
    assert_eq!(stats["reject_reasons"][0], json!({"line": 2, "reason": "missing title"}));

    let strict = timelines(&["ingest", "--catalog", path_str(&catalog), "--index-dir", path_str(&index), "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("line 2: missing title"));
}

#[test]
fn missing_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = timelines(&["ingest", "--catalog", "/no/such/file", "--index-dir", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot open catalog"));

    let out = timelines(&["serve", "--index-dir", "/no/such/dir", "--store-dir", path_str(dir.path())]);
    assert!(!out.status.success());
    let out = timelines(&["sessions", "--store-dir", path_str(dir.path()), "--user", "u", "--topic", "t"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("user u not found"));
}

#[test]
fn environment_fallbacks() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("env-index");
    let out = Command::new(BIN)
        .arg("ingest")
        .env("TS_CATALOG", SAMPLE_CATALOG)
        .env("TS_INDEX_DIR", &index)
        .env("TS_FORMAT", "json")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["records_accepted"], 40);

    let out = Command::new(BIN)
        .args(["serve", "--index-dir", path_str(&index), "--store-dir", path_str(dir.path())])
        .env("TS_IDLE_GAP_MIN", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn serve_answers_terminates_cleanly_and_restarts_with_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let index = ingest_sample(dir.path());
    let store = dir.path().join("store");

    let server = Server::start(&index, &store);
    let c = server.client();
    assert_eq!(c.get("/api/users/unknown/topics").status, 404);
    let u = c.new_user();
    let serp = c.post(&format!("/api/users/{u}/queries"), &json!({"text": "french revolution"}), Some(T0));
    let t = serp.body["topic_id"].as_str().unwrap().to_string();
    c.post(
        &format!("/api/topics/{t}/saves"),
        &json!({"query_event_id": "e1", "resource_id": "fr-001"}),
        Some(T0 + MIN),
    );
    let before = c.get(&format!("/api/topics/{t}/timeline?detail=detailed")).text;
    let topics_before = c.get(&format!("/api/users/{u}/topics")).text;
    assert_eq!(server.terminate().code(), Some(0));
    assert!(Store::open(&store).unwrap().snapshot_path(&UserId::new(&u)).is_file());

    let server = Server::start(&index, &store);
    let c = server.client();
    assert_eq!(c.get(&format!("/api/topics/{t}/timeline?detail=detailed")).text, before);
    assert_eq!(c.get(&format!("/api/users/{u}/topics")).text, topics_before);
    server.terminate();

    let exported = timelines(&["export", "--store-dir", path_str(&store), "--user", &u]);
    assert!(exported.status.success());
    assert_eq!(stdout(&exported).lines().count(), 2);
}

#[test]
fn sessions_table_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let index = ingest_sample(dir.path());
    let store = dir.path().join("store");
    let server = Server::start(&index, &store);
    let c = server.client();
    let u = c.new_user();
    let q = format!("/api/users/{u}/queries");
    let t = c.post(&q, &json!({"text": "indigenous people"}), Some(T0)).body["topic_id"].as_str().unwrap().to_string();
    c.post(&q, &json!({"text": "treaty rights"}), Some(T0 + 10 * MIN));
    c.post(&q, &json!({"text": "first nations"}), Some(T0 + 2 * DAY));
    c.post(&q, &json!({"text": "inuit"}), Some(T0 + 2 * DAY + 7 * MIN));
    server.terminate();

    let out =
        timelines(&["sessions", "--store-dir", path_str(&store), "--user", &u, "--topic", &t, "--format", "json"]);
    assert!(out.status.success());
    let rows: Vec<SessionDuration> = serde_json::from_slice(&out.stdout).unwrap();
    let loaded = Store::open(&store).unwrap().load_user(&UserId::new(&u)).unwrap();
    let events = loaded.activity.topic(&TopicId::new(&t)).unwrap().events().to_vec();
    assert_eq!(rows, compute_session_durations(&events, std::time::Duration::from_secs(1800)));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].duration_secs, 600.0);
    assert_eq!(rows[1].duration_secs, 420.0);

    let text = timelines(&["sessions", "--store-dir", path_str(&store), "--user", &u, "--topic", &t]);
    let text = stdout(&text);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().trim_end().ends_with("600.000"));

    // A gap wider than any pause merges everything.
    let out = timelines(&[
        "sessions",
        "--store-dir",
        path_str(&store),
        "--user",
        &u,
        "--topic",
        &t,
        "--format",
        "json",
        "--idle-gap-min",
        "4320",
    ]);
    let rows: Vec<SessionDuration> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 1);

    let out = timelines(&["sessions", "--store-dir", path_str(&store), "--user", &u, "--topic", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}
