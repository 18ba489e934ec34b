//! Helpers for driving the `timelines` binary from tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Output, Stdio};
use std::time::Duration;

use serde_json::Value;
use timelines_core::Timestamp;

pub const BIN: &str = env!("CARGO_BIN_EXE_timelines");
pub const SAMPLE_CATALOG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/catalog.sample.jsonl");

pub fn timelines(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("RUST_LOG").output().expect("run timelines")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Ingest the sample catalog into `dir/index` and return that directory.
pub fn ingest_sample(dir: &Path) -> PathBuf {
    let index = dir.join("index");
    let out = timelines(&["ingest", "--catalog", SAMPLE_CATALOG, "--index-dir", path_str(&index)]);
    assert!(out.status.success(), "ingest failed: {}", String::from_utf8_lossy(&out.stderr));
    index
}

pub struct Server {
    child: Option<Child>,
    pub base: String,
}

impl Server {
    pub fn start(index_dir: &Path, store_dir: &Path) -> Server {
        let mut child = Command::new(BIN)
            .args(["serve", "--port", "0", "--index-dir", path_str(index_dir), "--store-dir", path_str(store_dir)])
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let stdout = child.stdout.take().expect("stdout");
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).expect("read listen line");
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected server output {line:?}"))
            .to_string();
        Server { child: Some(child), base }
    }

    pub fn client(&self) -> Client {
        Client::new(&self.base)
    }

    pub fn pid(&self) -> u32 {
        self.child.as_ref().expect("running").id()
    }

    /// SIGTERM and wait.
    pub fn terminate(mut self) -> ExitStatus {
        let mut child = self.child.take().expect("running");
        unsafe {
            libc::kill(child.id() as libc::pid_t, libc::SIGTERM);
        }
        child.wait().expect("wait for server")
    }

    /// SIGKILL and wait.
    pub fn kill(mut self) {
        let mut child = self.child.take().expect("running");
        let _ = child.kill();
        let _ = child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

pub struct Reply {
    pub status: u16,
    pub body: Value,
    pub text: String,
}

/// Minimal JSON client. `at` values are milliseconds since the epoch sent
/// as the client clock.
pub struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    pub fn new(base: &str) -> Client {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        Client { agent, base: base.to_string() }
    }

    fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<Reply, ureq::Error> {
        let mut resp = resp?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string()?;
        let body = serde_json::from_str(&text).unwrap_or(Value::Null);
        Ok(Reply { status, body, text })
    }

    pub fn try_post(&self, path: &str, body: &Value, at: Option<i64>) -> Result<Reply, ureq::Error> {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some(ms) = at {
            req = req.header("X-Client-Time", Timestamp::from_millis(ms).to_string());
        }
        Client::finish(req.send_json(body))
    }

    pub fn post(&self, path: &str, body: &Value, at: Option<i64>) -> Reply {
        self.try_post(path, body, at).unwrap_or_else(|e| panic!("POST {path}: {e}"))
    }

    pub fn post_empty(&self, path: &str) -> Reply {
        Client::finish(self.agent.post(format!("{}{path}", self.base)).send_empty())
            .unwrap_or_else(|e| panic!("POST {path}: {e}"))
    }

    pub fn patch(&self, path: &str, body: &Value, at: Option<i64>) -> Reply {
        let mut req = self.agent.patch(format!("{}{path}", self.base));
        if let Some(ms) = at {
            req = req.header("X-Client-Time", Timestamp::from_millis(ms).to_string());
        }
        Client::finish(req.send_json(body)).unwrap_or_else(|e| panic!("PATCH {path}: {e}"))
    }

    pub fn get(&self, path: &str) -> Reply {
        Client::finish(self.agent.get(format!("{}{path}", self.base)).call())
            .unwrap_or_else(|e| panic!("GET {path}: {e}"))
    }

    pub fn new_user(&self) -> String {
        let r = self.post_empty("/api/users");
        assert_eq!(r.status, 201, "{}", r.text);
        r.body["user_id"].as_str().expect("user_id").to_string()
    }
}
