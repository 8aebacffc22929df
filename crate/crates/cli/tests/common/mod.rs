#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_hrrt");

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn hrrt(args: &[&str]) -> Run {
    let out = Command::new(BIN).args(args).output().expect("runs hrrt");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn init(dir: &Path, template: &str) {
    let r = hrrt(&["init", dir.to_str().unwrap(), "--template", template]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

pub struct Server {
    pub child: Child,
    pub base: String,
    agent: ureq::Agent,
}

impl Server {
    pub fn start(root: &Path, env: &[(&str, String)]) -> Server {
        let mut cmd = Command::new(BIN);
        cmd.args(["-C", root.to_str().unwrap(), "serve", "--port", "0"])
            .stdout(Stdio::null())
            .stderr(Stdio::piped());
        for (k, v) in env {
            cmd.env(k, v);
        }
        let mut child = cmd.spawn().expect("starts server");
        let mut line = String::new();
        BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().rsplit(' ').next().expect("address").to_string();
        assert!(base.starts_with("http://127.0.0.1:"), "{line}");
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Server { child, base, agent }
    }

    fn finish(res: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<(u16, Value), ureq::Error> {
        let mut res = res?;
        let status = res.status().as_u16();
        let text = res.body_mut().read_to_string()?;
        let body = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).expect("json body") };
        Ok((status, body))
    }

    pub fn try_post(&self, path: &str, body: Value, key: Option<&str>) -> Result<(u16, Value), ureq::Error> {
        let mut req = self.agent.post(format!("{}{path}", self.base));
        if let Some(k) = key {
            req = req.header("Idempotency-Key", k);
        }
        Self::finish(req.send_json(body))
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.try_post(path, body, None).expect("request")
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        Self::finish(self.agent.get(format!("{}{path}", self.base)).call()).expect("request")
    }

    /// Polls a bench batch until it is no longer running.
    pub fn wait_bench(&self, batch: &str) -> Value {
        let start = Instant::now();
        loop {
            let (status, body) = self.get(&format!("/bench/{batch}"));
            assert_eq!(status, 200, "{body}");
            if body["status"] != "running" {
                return body;
            }
            assert!(start.elapsed() < Duration::from_secs(300), "bench did not finish");
            std::thread::sleep(Duration::from_millis(50));
        }
    }

    /// One full iteration: advance and commit through the three levels.
    pub fn iteration(&self, session: &str) -> Value {
        let mut last = Value::Null;
        for _ in 0..3 {
            let (status, body) = self.post(&format!("/sessions/{session}/advance"), Value::Null);
            assert_eq!(status, 200, "{body}");
            assert_eq!(body["completed"], true, "{body}");
            let (status, body) = self.post(&format!("/sessions/{session}/commit"), Value::Null);
            assert_eq!(status, 200, "{body}");
            last = body;
        }
        last
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn post_h4_rates(bench: &Value) -> Vec<f64> {
    bench["series"]["success"].as_array().expect("series").iter().map(|p| p["rate"].as_f64().unwrap()).collect()
}
