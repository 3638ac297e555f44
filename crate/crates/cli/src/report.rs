//! Plain-text reports.

use std::fmt::Write;

use auxcheck::catalog::ExampleEntry;
use auxcheck::explorer::Verdict;
use serde_json::Value as Json;

/// `{x: 1, y: {1, 2}}` style rendering of a JSON-encoded state.
fn show(j: &Json) -> String {
    match j {
        Json::Object(m) if m.len() == 1 && m.contains_key("fcn") => {
            let pairs = m["fcn"].as_array().cloned().unwrap_or_default();
            let body: Vec<String> = pairs
                .iter()
                .map(|p| format!("{} :> {}", show(&p[0]), show(&p[1])))
                .collect();
            format!("({})", body.join(" @@ "))
        }
        Json::Object(m) => {
            let body: Vec<String> = m.iter().map(|(k, v)| format!("{k} = {}", show(v))).collect();
            body.join(", ")
        }
        Json::Array(items) => {
            let body: Vec<String> = items.iter().map(show).collect();
            format!("{{{}}}", body.join(", "))
        }
        Json::String(s) => format!("\"{s}\""),
        other => other.to_string(),
    }
}

pub fn verdict(title: &str, v: &Verdict) -> String {
    let mut out = String::new();
    let status = if v.is_pass() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{title}: {status} ({} distinct states)", v.states);
    if let Some(msg) = &v.violation {
        let _ = writeln!(out, "  {msg}");
    }
    if let Some(trace) = &v.trace {
        let _ = writeln!(out, "  trace of {} steps:", trace.len().saturating_sub(1));
        for (i, step) in trace.iter().enumerate() {
            let _ = writeln!(out, "  {i:>3}. {}", step.action);
            let _ = writeln!(out, "       {}", show(&step.state));
        }
    }
    out
}

pub fn listing(entries: &[&ExampleEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}  {}", e.name, e.about);
        if !e.required_params.is_empty() {
            let _ = writeln!(out, "    params:     {}", e.required_params.join(", "));
        }
        for m in e.mappings {
            let _ = writeln!(out, "    mapping:    {} -> {}", m.name, m.target);
        }
        for p in e.invariants {
            let _ = writeln!(out, "    invariant:  {}  ({})", p.name, p.about);
        }
        for p in e.targets {
            let _ = writeln!(out, "    target:     {}  ({})", p.name, p.about);
        }
        for p in e.action_props {
            let _ = writeln!(out, "    action:     {}  ({})", p.name, p.about);
        }
        let mut extras = Vec::new();
        if e.prophecy.is_some() {
            extras.push("prophecy conditions");
        }
        if e.stuttering.is_some() {
            extras.push("stuttering conditions");
        }
        if !extras.is_empty() {
            let _ = writeln!(out, "    checks:     {}", extras.join(", "));
        }
    }
    out
}
