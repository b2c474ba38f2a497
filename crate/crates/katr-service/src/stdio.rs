//! Line-delimited JSON transport for direct function-calling harnesses.
//!
//! One request per line:
//!   `{"tool": "poi_tags"}`
//!   `{"tool": "katr_search", "request": { ... }}`
//! One response per line: `{"schema_version": "1", "ok": ...}` or
//! `{"schema_version": "1", "error": ...}`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::json;

use crate::{search, tags_response, ServiceState, SCHEMA_VERSION};

#[derive(Deserialize)]
#[serde(tag = "tool", rename_all = "snake_case")]
enum ToolCall {
    PoiTags,
    KatrSearch { request: crate::QueryRequest },
}

pub fn handle_line(state: &ServiceState, line: &str) -> serde_json::Value {
    let call: ToolCall = match serde_json::from_str(line) {
        Ok(call) => call,
        Err(e) => {
            return json!({
                "schema_version": SCHEMA_VERSION,
                "error": { "code": "malformed_request", "message": e.to_string() },
            });
        }
    };
    match call {
        ToolCall::PoiTags => json!({
            "schema_version": SCHEMA_VERSION,
            "ok": serde_json::to_value(tags_response(state)).unwrap(),
        }),
        ToolCall::KatrSearch { request } => match search(state, &request) {
            Ok(resp) => json!({
                "schema_version": SCHEMA_VERSION,
                "ok": serde_json::to_value(resp).unwrap(),
            }),
            Err(err) => err.body,
        },
    }
}

/// Serves requests from `input` to `output` until EOF. Blank lines are
/// ignored.
pub fn run<R: BufRead, W: Write>(
    state: Arc<ServiceState>,
    input: R,
    mut output: W,
) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = handle_line(&state, &line);
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}
