mod common;

use common::{init, Server};
use hrrt_core::model::load_workspace;
use serde_json::{json, Value};

/// Drives two iterations through a server that dies after `n` workspace
/// writes. Returns the number of acknowledged commits and whether it died.
fn drive(root: &std::path::Path, n: usize) -> (usize, bool) {
    let mut s = Server::start(root, &[("HRRT_CRASH_AFTER_WRITES", n.to_string())]);
    let (_, created) = s.post("/sessions", json!({ "model_id": "seed", "agent": "scripted" }));
    let id = created["session_id"].as_str().unwrap().to_string();
    let mut acked = 0;
    for _ in 0..6 {
        assert_eq!(s.post(&format!("/sessions/{id}/advance"), Value::Null).0, 200);
        match s.try_post(&format!("/sessions/{id}/commit"), Value::Null, None) {
            Ok((200, _)) => acked += 1,
            Ok((status, body)) => panic!("commit answered {status}: {body}"),
            Err(_) => {
                assert_eq!(s.child.wait().unwrap().code(), Some(137));
                return (acked, true);
            }
        }
    }
    (acked, false)
}

#[test]
fn killed_server_leaves_a_loadable_workspace() {
    let dir = tempfile::tempdir().unwrap();
    for n in 1.. {
        let root = dir.path().join(format!("ws{n}"));
        init(&root, "lunar");
        let (acked, crashed) = drive(&root, n);
        let ws = load_workspace(&root).unwrap_or_else(|e| panic!("after {n} writes: {e}"));
        ws.lineage.verify().unwrap();
        // the commit in flight may or may not have reached lineage.json
        let committed = ws.lineage.len() - 1;
        assert!(committed == acked || (crashed && committed == acked + 1), "n={n}: {committed} vs {acked}");
        if !crashed {
            assert_eq!(acked, 6);
            assert!(n > 6, "every commit writes at least once");
            break;
        }
        assert!(n < 500);
    }
}
