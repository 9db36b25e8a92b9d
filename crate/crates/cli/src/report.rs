//! Text and JSON rendering of results, and exit codes.

use std::process::ExitCode;

use gamkit::harness::{CheckStatus, CrossCheckReport, FuzzSummary, ReportRow};
use gamkit::litmus::Program;
use gamkit::operational::Stats;
use gamkit::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Ok = 0,
    Mismatch = 1,
    Usage = 2,
    Resource = 3,
}

impl From<Code> for ExitCode {
    fn from(c: Code) -> ExitCode {
        ExitCode::from(c as u8)
    }
}

/// Mismatches and disagreements dominate resource limits.
pub fn exit_code(rows: &[ReportRow], disagreement: bool) -> Code {
    if disagreement || rows.iter().any(|r| !r.pass && r.error.is_none()) {
        Code::Mismatch
    } else if rows.iter().any(|r| r.error.is_some()) {
        Code::Resource
    } else {
        Code::Ok
    }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = vec![line(header.to_vec())];
    out.extend(rows.iter().map(|r| line(r.iter().map(String::as_str).collect())));
    out.join("\n")
}

pub fn emit_rows(rows: &[ReportRow], json: bool, witness: bool) {
    println!("{}", render_rows(rows, json, witness));
}

/// The verdict report: a pretty JSON array, or an aligned table followed by
/// errors, outcome lists and witnesses.
pub fn render_rows(rows: &[ReportRow], json: bool, witness: bool) -> String {
    if json {
        return serde_json::to_string_pretty(rows).expect("rows serialize");
    }
    if rows.is_empty() {
        return "no results".to_string();
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.test.clone(),
                r.model.to_string(),
                r.engine.to_string(),
                r.verdict.clone(),
                r.expected.map_or("-".to_string(), |e| e.to_string()),
                if r.pass { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let mut out = vec![table(&["test", "model", "engine", "verdict", "expected", "result"], &cells)];
    for r in rows {
        if let Some(e) = &r.error {
            out.push(format!("{} {} {}: {e}", r.test, r.model, r.engine));
        }
        if let Some(outcomes) = &r.outcomes {
            out.push(format!("outcomes ({} {}):", r.model, r.engine));
            out.extend(outcomes.iter().map(|o| format!("  {o}")));
        }
        if witness {
            if let Some(w) = &r.witness {
                out.push(format!("witness ({} {}): {}", r.model, r.engine, w));
            }
        }
    }
    out.join("\n")
}

/// Diagnostic listings go to stderr in JSON mode so stdout stays one JSON document.
fn listing(json: bool, line: &str) {
    if json {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

pub fn print_ppo_dump(lines: &[String], json: bool) {
    for l in lines {
        listing(json, l);
    }
}

pub fn print_traces(traces: &[(Model, Vec<String>)], json: bool) {
    for (m, lines) in traces {
        listing(json, &format!("trace ({m}):"));
        for l in lines {
            listing(json, &format!("  {l}"));
        }
    }
}

pub fn emit_explore(row: &ReportRow, stats: &Stats, json: bool) {
    if json {
        let mut v = serde_json::to_value(row).expect("row serializes");
        v["stats"] = stats.to_json();
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        emit_rows(std::slice::from_ref(row), false, false);
        println!("transitions: {}", stats.transitions);
        println!("stats: {}", stats.to_json());
    }
}

fn millis(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

pub fn emit_cross_checks(program: &Program, reports: &[CrossCheckReport], json: bool) -> Code {
    let layout = program.layout().expect("program is resolved");
    let render =
        |set: &std::collections::BTreeSet<gamkit::Outcome>| gamkit::harness::render_outcomes(program, &layout, set);
    let status_name = |s: CheckStatus| match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Inconclusive => "inconclusive",
    };
    if json {
        let items: Vec<serde_json::Value> = reports
            .iter()
            .map(|r| {
                serde_json::json!({
                    "test": r.test,
                    "model": r.model,
                    "status": status_name(r.status),
                    "axiomatic": r.axiomatic.as_ref().map(|v| render(&v.outcomes)),
                    "operational": r.operational.as_ref().map(|o| render(&o.verdict.outcomes)),
                    "only_axiomatic": render(&r.only_axiomatic),
                    "only_operational": render(&r.only_operational),
                    "axiomatic_ms": millis(r.axiomatic_time),
                    "operational_ms": millis(r.operational_time),
                    "stats": r.operational.as_ref().map(|o| o.stats.to_json()),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&items).expect("json"));
    } else if reports.is_empty() {
        println!("no results");
    } else {
        for r in reports {
            println!("{} {}: {}", r.test, r.model, status_name(r.status));
            for (name, set, time, err) in [
                ("axiomatic", r.axiomatic.as_ref().map(|v| &v.outcomes), r.axiomatic_time, &r.axiomatic_error),
                (
                    "operational",
                    r.operational.as_ref().map(|o| &o.verdict.outcomes),
                    r.operational_time,
                    &r.operational_error,
                ),
            ] {
                match (set, err) {
                    (Some(s), _) => {
                        println!("  {name} ({:.3} ms): {} outcomes", millis(time), s.len());
                        for o in render(s) {
                            println!("    {o}");
                        }
                    }
                    (None, Some(e)) => println!("  {name}: {e}"),
                    (None, None) => {}
                }
            }
            for (name, set) in [("only axiomatic", &r.only_axiomatic), ("only operational", &r.only_operational)] {
                for o in render(set) {
                    println!("  {name}: {o}");
                }
            }
        }
    }
    if reports.iter().any(|r| r.status == CheckStatus::Fail) {
        Code::Mismatch
    } else if reports.iter().any(|r| r.status == CheckStatus::Inconclusive) {
        Code::Resource
    } else {
        Code::Ok
    }
}

pub fn emit_fuzz(summary: &FuzzSummary, json: bool) -> Code {
    let failed: Vec<_> = summary.cases.iter().filter(|c| !c.passed()).collect();
    if json {
        let failures: Vec<serde_json::Value> = failed
            .iter()
            .map(|c| {
                serde_json::json!({
                    "seed": c.seed,
                    "program": c.program.to_string(),
                    "equivalence": c.equivalence.iter().map(|(m, s)| (m.name(), format!("{s:?}").to_lowercase())).collect::<std::collections::BTreeMap<_, _>>(),
                    "monotonic": c.monotonic,
                    "per_location_sc": c.per_location_sc,
                    "errors": c.errors,
                })
            })
            .collect();
        let v = serde_json::json!({
            "programs": summary.cases.len(),
            "equivalence_failures": summary.equivalence_failures(),
            "monotonicity_failures": summary.monotonicity_failures(),
            "per_location_failures": summary.per_location_failures(),
            "inconclusive": summary.inconclusive(),
            "failures": failures,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("programs:              {}", summary.cases.len());
        println!("equivalence failures:  {}", summary.equivalence_failures());
        println!("monotonicity failures: {}", summary.monotonicity_failures());
        println!("per-location failures: {}", summary.per_location_failures());
        println!("inconclusive:          {}", summary.inconclusive());
        for c in &failed {
            println!("--- seed {} ---", c.seed);
            print!("{}", c.program);
            for e in &c.errors {
                println!("error: {e}");
            }
        }
    }
    let hard_failure =
        summary.equivalence_failures() + summary.monotonicity_failures() + summary.per_location_failures();
    if hard_failure > 0 {
        Code::Mismatch
    } else if summary.inconclusive() > 0 {
        Code::Resource
    } else {
        Code::Ok
    }
}

#[cfg(test)]
mod tests {
    use gamkit::harness::ReportRow;
    use gamkit::litmus::Expect;
    use gamkit::{Engine, Model};

    use super::*;

    fn row(pass: bool, error: Option<&str>) -> ReportRow {
        ReportRow {
            test: "t".into(),
            model: Model::Gam,
            engine: Engine::Axiomatic,
            verdict: if error.is_some() { "error" } else { "allowed" }.into(),
            expected: Some(Expect::Allowed),
            pass,
            outcomes: None,
            witness: None,
            error: error.map(String::from),
        }
    }

    #[test]
    fn empty_reports_render_as_empty_array_or_no_results() {
        assert_eq!(render_rows(&[], true, false), "[]");
        assert_eq!(render_rows(&[], false, false), "no results");
    }

    #[test]
    fn table_columns_are_aligned() {
        let mut long = row(true, None);
        long.test = "a-much-longer-name".into();
        let text = render_rows(&[row(true, None), long], false, false);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let col = lines[0].find("model").unwrap();
        assert!(lines[1..].iter().all(|l| l[col..].starts_with("gam")));
    }

    #[test]
    fn exit_codes_rank_mismatch_over_resource_limits() {
        assert_eq!(exit_code(&[row(true, None)], false), Code::Ok);
        assert_eq!(exit_code(&[row(true, None)], true), Code::Mismatch);
        assert_eq!(exit_code(&[row(false, Some("budget"))], false), Code::Resource);
        assert_eq!(exit_code(&[row(false, Some("budget")), row(false, None)], false), Code::Mismatch);
        assert_eq!(exit_code(&[], false), Code::Ok);
    }
}
