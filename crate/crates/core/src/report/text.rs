use std::fmt::Write;

use serde_json::Value;

use super::TestReport;
use crate::checker::Verdict;
use crate::stateful::CallStep;

fn compact(v: &Value) -> String {
    // serde_json leaves DEL and C1 controls raw; they would vanish on a terminal.
    let s: String = v
        .to_string()
        .chars()
        .map(|c| {
            if c.is_control() {
                format!("\\u{:04x}", c as u32)
            } else {
                c.to_string()
            }
        })
        .collect();
    if s.len() > 400 {
        let mut end = 400;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}... ({} bytes)", &s[..end], s.len())
    } else {
        s
    }
}

fn steps(out: &mut String, label: &str, seq: &[CallStep]) {
    let _ = writeln!(out, "  {label} ({} steps):", seq.len());
    for (i, s) in seq.iter().enumerate() {
        let status = s.status.map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "    {}. {} {} -> {status}",
            i + 1,
            s.operation,
            compact(&Value::Object(s.assignment.clone()))
        );
    }
}

/// Human-readable summary: verdict per operation, failures with their
/// shrunk input, then the status-code table.
pub fn render_text(report: &TestReport) -> String {
    let mut out = String::new();
    let m = &report.metadata;
    let _ = writeln!(
        out,
        "quickrest {} run against {} (seed {})",
        m.mode, m.base_url, m.seed
    );
    let _ = writeln!(out);
    for o in &report.outcomes {
        let verdict = match o.verdict {
            Verdict::Pass => "pass".to_string(),
            Verdict::Fail => format!(
                "FAIL {}",
                o.first_failure().map_or(String::new(), |f| f.property.to_string())
            ),
            Verdict::Aborted => "ABORTED (transport errors)".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<40} {verdict}  [{} tests, {} skipped]",
            o.operation, o.tests_run, o.skipped
        );
        for f in &o.failures {
            let _ = writeln!(out, "  {}: {}", f.property, f.message);
            for v in &f.violations {
                let _ = writeln!(out, "    at {}: expected {}, got {}", v.json_path, v.expected, v.actual);
            }
            let _ = writeln!(out, "  original input: {}", compact(&f.original_input.to_value()));
            let _ = writeln!(
                out,
                "  shrunk input:   {}  ({} steps, {} executions{})",
                compact(&Value::Object(f.shrunk_input.clone())),
                f.shrink_steps,
                f.shrink_executions,
                if f.shrink_budget_exceeded { ", budget exceeded" } else { "" }
            );
            if !f.reproduced {
                let _ = writeln!(out, "  note: the failure did not reproduce on replay");
            }
            let _ = writeln!(out, "  repro: {}", f.repro_command);
            let _ = writeln!(out, "  curl:  {}", f.curl);
        }
        if !o.transport_errors.is_empty() {
            let tally: Vec<String> = o
                .transport_errors
                .iter()
                .map(|(k, n)| format!("{k:?}={n}").to_lowercase())
                .collect();
            let _ = writeln!(out, "  transport errors: {}", tally.join(", "));
        }
    }
    for (i, s) in report.sequences.iter().enumerate() {
        let verdict = match s.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Aborted => "ABORTED (transport errors)",
        };
        let _ = writeln!(
            out,
            "stateful run {}: {verdict}  [{} sequences]",
            i + 1,
            s.sequences_run
        );
        if let Some(f) = &s.failure {
            let _ = writeln!(out, "  {} at {}: {}", f.property, f.operation, f.message);
            steps(&mut out, "failing sequence", &s.failing_sequence);
            steps(&mut out, "shrunk sequence", &s.shrunk_sequence);
            let _ = writeln!(
                out,
                "  shrinking: {} steps, {} executions{}",
                s.shrink_steps,
                s.shrink_executions,
                if s.shrink_budget_exceeded { ", budget exceeded" } else { "" }
            );
            if s.best_effort {
                let _ = writeln!(out, "  note: no reset hook, replays saw leftover state");
            }
            if s.values_may_differ {
                let _ = writeln!(out, "  note: replays recreate state, so values may differ from the original run");
            }
        }
    }
    if !report.frequency_table.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<32} {:<7} {:>6} {:>8}  documented", "path", "verb", "status", "count");
        for r in &report.frequency_table {
            let _ = writeln!(
                out,
                "{:<32} {:<7} {:>6} {:>8}  {}",
                r.path_template,
                r.verb.as_str(),
                r.status,
                r.count,
                if r.documented { "yes" } else { "NO" }
            );
        }
    }
    let uncovered: Vec<_> = report.coverage.iter().filter(|c| !c.fully_covered).collect();
    if !uncovered.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "documented status codes never observed:");
        for c in uncovered {
            let missing: Vec<String> = c.missing.iter().map(u16::to_string).collect();
            let _ = writeln!(out, "  {:<40} {}", c.operation, missing.join(", "));
        }
    }
    let passed = report
        .outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Pass)
        .count()
        + report.sequences.iter().filter(|s| s.verdict == Verdict::Pass).count();
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{} passed, {} failed, {} aborted, {} calls",
        passed,
        report.failures(),
        report.aborted(),
        report.records.len()
    );
    out
}
