//! JSON, Markdown and HTML renderings of a [`FactSheet`].

use std::fmt::Write;
use std::str::FromStr;

use super::{FactSheet, FactSheetError};
use crate::ledger::encode_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Html,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Markdown, Format::Html];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Html => "html",
        }
    }
}

impl FromStr for Format {
    type Err = FactSheetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            "html" => Ok(Format::Html),
            other => Err(FactSheetError::UnknownFormat(other.to_owned())),
        }
    }
}

pub fn render(fs: &FactSheet, format: Format) -> Result<Vec<u8>, FactSheetError> {
    Ok(match format {
        Format::Json => encode_value(fs)?,
        Format::Markdown => markdown(fs).into_bytes(),
        Format::Html => html(fs).into_bytes(),
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_owned(), T::to_string)
}

/// Overview as label/value pairs, shared by both text formats.
fn overview_rows(fs: &FactSheet) -> Vec<(&'static str, String)> {
    let o = &fs.overview;
    let mut rows = vec![("Verdict", o.verdict.clone())];
    if let Some(p) = &o.project {
        rows.extend([
            ("Model", p.model_name.clone()),
            ("Fusion", p.fusion.clone()),
            ("Parties", p.parties.to_string()),
            ("Rounds (K)", p.rounds.to_string()),
            ("Quorum", p.quorum.to_string()),
            ("Learning rate", p.learning_rate.to_string()),
            ("Local epochs", p.epochs.to_string()),
            ("Termination accuracy", opt(&p.termination_accuracy)),
            ("Pre-processing", p.preprocess.join(", ")),
            ("Post-processing", p.postprocess.clone()),
            ("Spec digest", p.spec_digest.to_string()),
        ]);
    }
    rows.extend([
        ("Stop reason", opt(&o.stop_reason)),
        ("Rounds executed", o.rounds_executed.to_string()),
        ("Final model digest", opt(&o.final_model_digest)),
        ("Ledger integrity", if o.integrity_ok { "intact" } else { "BROKEN" }.to_owned()),
    ]);
    rows
}

fn metric_cells(m: &crate::flcore::RoundMetrics) -> Vec<String> {
    std::iter::once(m.round.to_string())
        .chain(m.values().iter().map(|v| format!("{v:.4}")))
        .collect()
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn markdown(fs: &FactSheet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# FL FactSheet\n\n## Overview\n\n| Field | Value |\n|---|---|");
    for (k, v) in overview_rows(fs) {
        let _ = writeln!(out, "| {k} | {} |", md_escape(&v));
    }
    let _ = writeln!(out, "\n### Actors\n\n| Actor | Key fingerprint |\n|---|---|");
    for a in &fs.overview.actors {
        let _ = writeln!(out, "| {} | `{}` |", a.name, a.fingerprint);
    }

    let _ = writeln!(
        out,
        "\n## Checked properties\n\n| Property | Description | Status | Evidence | Detail |\n|---|---|---|---|---|"
    );
    for p in &fs.checked_properties {
        let evidence: Vec<String> = p.evidence.iter().map(|s| format!("[{s}](#seq-{s})")).collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            p.predicate_id,
            md_escape(&p.description),
            p.glyph,
            evidence.join(", "),
            md_escape(&p.detail)
        );
    }

    let cols = &fs.performance.columns;
    let _ = writeln!(out, "\n## Performance\n\n| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cols.len()));
    for m in &fs.performance.rows {
        let _ = writeln!(out, "| {} |", metric_cells(m).join(" | "));
    }

    let l = &fs.lineage;
    let _ = writeln!(
        out,
        "\n## Lineage\n\nLedger head `{}` over {} entries; ledger file digest `{}`.\n\n| Actor | Claim kind | Count |\n|---|---|---|",
        l.ledger_head, l.ledger_entries, l.ledger_digest
    );
    for (actor, kinds) in &l.claims {
        for (kind, n) in kinds {
            let _ = writeln!(out, "| {actor} | {kind} | {n} |");
        }
    }

    let _ = writeln!(out, "\n## Ledger\n\n| Seq | Actor | Kind | Round | Entry hash |\n|---|---|---|---|---|");
    for r in &fs.appendix {
        let _ = writeln!(
            out,
            "| <a id=\"seq-{0}\"></a>{0} | {1} | {2} | {3} | `{4}` |",
            r.seq,
            r.actor,
            r.kind,
            r.round.map_or_else(String::new, |x| x.to_string()),
            r.entry_hash.short(16)
        );
    }
    out
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:80em}\
table{border-collapse:collapse;margin-bottom:1.5em}\
td,th{border:1px solid #bbb;padding:.25em .6em;text-align:left}\
th{background:#eee}code{font-size:90%}\
.pass{color:#1a7f37}.fail{color:#cf222e}.inapplicable{color:#777}";

fn html(fs: &FactSheet) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>FL FactSheet</title>\n\
         <style>{STYLE}</style>\n</head>\n<body>\n<h1>FL FactSheet</h1>\n<h2>Overview</h2>\n<table>\n"
    );
    for (k, v) in overview_rows(fs) {
        let _ = writeln!(out, "<tr><th>{k}</th><td>{}</td></tr>", esc(&v));
    }
    let _ = writeln!(out, "</table>\n<h3>Actors</h3>\n<table>\n<tr><th>Actor</th><th>Key fingerprint</th></tr>");
    for a in &fs.overview.actors {
        let _ = writeln!(out, "<tr><td>{}</td><td><code>{}</code></td></tr>", esc(&a.name), a.fingerprint);
    }

    let _ = writeln!(
        out,
        "</table>\n<h2>Checked properties</h2>\n<table>\n\
         <tr><th>Property</th><th>Description</th><th>Status</th><th>Evidence</th><th>Detail</th></tr>"
    );
    for p in &fs.checked_properties {
        let class = match p.status {
            crate::verifier::Status::Pass => "pass",
            crate::verifier::Status::Fail => "fail",
            crate::verifier::Status::Inapplicable => "inapplicable",
        };
        let evidence: Vec<String> = p.evidence.iter().map(|s| format!("<a href=\"#seq-{s}\">{s}</a>")).collect();
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{}</td><td class=\"{class}\">{}</td><td>{}</td><td>{}</td></tr>",
            p.predicate_id,
            esc(&p.description),
            p.glyph,
            evidence.join(", "),
            esc(&p.detail)
        );
    }

    let _ = writeln!(out, "</table>\n<h2>Performance</h2>\n<table>\n<tr>");
    for c in &fs.performance.columns {
        let _ = write!(out, "<th>{}</th>", esc(c));
    }
    let _ = writeln!(out, "</tr>");
    for m in &fs.performance.rows {
        let cells: String = metric_cells(m).iter().map(|c| format!("<td>{c}</td>")).collect();
        let _ = writeln!(out, "<tr>{cells}</tr>");
    }

    let l = &fs.lineage;
    let _ = writeln!(
        out,
        "</table>\n<h2>Lineage</h2>\n<p>Ledger head <code>{}</code> over {} entries; ledger file digest <code>{}</code>.</p>\n<table>\n\
         <tr><th>Actor</th><th>Claim kind</th><th>Count</th></tr>",
        l.ledger_head, l.ledger_entries, l.ledger_digest
    );
    for (actor, kinds) in &l.claims {
        for (kind, n) in kinds {
            let _ = writeln!(out, "<tr><td>{}</td><td>{kind}</td><td>{n}</td></tr>", esc(actor));
        }
    }

    let _ = writeln!(
        out,
        "</table>\n<h2>Ledger</h2>\n<table>\n<tr><th>Seq</th><th>Actor</th><th>Kind</th><th>Round</th><th>Entry hash</th></tr>"
    );
    for r in &fs.appendix {
        let _ = writeln!(
            out,
            "<tr id=\"seq-{0}\"><td>{0}</td><td>{1}</td><td>{2}</td><td>{3}</td><td><code>{4}</code></td></tr>",
            r.seq,
            esc(&r.actor),
            r.kind,
            r.round.map_or_else(String::new, |x| x.to_string()),
            r.entry_hash.short(16)
        );
    }
    let _ = writeln!(out, "</table>\n</body>\n</html>");
    out
}
