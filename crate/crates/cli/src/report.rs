//! Report rendering: JSON and CSV for machines, a text summary for people.
//!
//! Machine formats carry rationals as `"p/q"` strings, sort their keys and
//! leave out timing, so identical configs give identical bytes.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rankone::criteria::{
    CriterionVerdict, CyclicDiscrepancy, FitRecord, ResidueSelection, SummabilityReading,
    SymmetricDifferenceFit, WindowScan,
};
use rankone::measure::{ApproximatingMap, Members};
use rankone::rational::to_fraction_string;
use serde_json::{json, Value};

use crate::run::{Outcome, Record, Report};

pub const TOOL_NAME: &str = "rankone";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn frac(q: &BigRational) -> Value {
    Value::String(to_fraction_string(q))
}

fn big(x: &BigUint) -> Value {
    Value::String(x.to_string())
}

fn approx(q: &BigRational) -> String {
    let x = q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN);
    format!("~{x:.4}")
}

fn discrepancy(d: &CyclicDiscrepancy) -> Value {
    json!({ "m": d.m, "n": d.n, "k": d.k, "best_j": d.best_j, "delta": frac(&d.delta) })
}

fn scan(s: &WindowScan) -> Value {
    json!({
        "k": s.k,
        "eta": frac(&s.eta),
        "start": s.start,
        "depth": s.depth,
        "passed": s.passed,
        "worst": discrepancy(&s.worst),
        "max_delta_by_start": s.max_delta_by_start.iter()
            .map(|(n, q)| json!({ "start": n, "max_delta": frac(q) }))
            .collect::<Vec<_>>(),
        "min_proper_delta": s.min_proper_delta.as_ref().map(frac),
    })
}

fn selection(d: &ResidueSelection) -> Value {
    match d {
        ResidueSelection::Classes(c) => json!({ "classes": c }),
        ResidueSelection::IndexSetImage { l, m } => json!({ "index_set_image": { "l": l, "m": m } }),
    }
}

fn fit(f: &SymmetricDifferenceFit) -> Value {
    json!({ "l": f.l, "m": f.m, "k": f.k, "best_d": selection(&f.best_d), "eps_star": frac(&f.eps_star) })
}

fn fit_record(r: &FitRecord) -> Value {
    json!({
        "l": r.l,
        "eps": frac(&r.eps),
        "start": r.start,
        "depth": r.depth,
        "witness_k": r.witness_k,
        "fits": r.fits.iter().map(fit).collect::<Vec<_>>(),
    })
}

fn verdict(v: &CriterionVerdict) -> Value {
    json!({
        "status": v.status.as_str(),
        "depth": v.depth,
        "zero_evidence": v.zero_evidence,
        "windows": v.windows.iter().map(scan).collect::<Vec<_>>(),
        "fits": v.fits.iter().map(fit_record).collect::<Vec<_>>(),
        "notes": v.notes,
    })
}

fn map(m: &ApproximatingMap, equivariance: &BigRational) -> Value {
    let fibers: Vec<Value> = m
        .fibers
        .iter()
        .map(|f| match f.members() {
            Members::Residues { modulus, classes } => json!({ "modulus": modulus, "classes": classes }),
            Members::Explicit(bits) => json!({ "levels": bits.iter_ones().collect::<Vec<_>>() }),
        })
        .collect();
    json!({
        "k": m.modulus,
        "alpha": m.alpha,
        "stage": m.stage,
        "next_stage": m.next_stage,
        "eta": frac(&m.eta),
        "offset": m.offset,
        "accumulated": m.accumulated,
        "fibers": fibers,
        "window_delta": frac(&m.window_delta),
        "defect": frac(&m.defect),
        "tower_fraction": frac(&m.tower_fraction),
        "equivariance_defect": frac(equivariance),
    })
}

fn outcome(o: &Outcome) -> Value {
    match o {
        Outcome::Heights(h) => json!({ "heights": h.iter().map(big).collect::<Vec<_>>() }),
        Outcome::Words(w) => json!({ "words": w }),
        Outcome::IndexSet(i) => json!({ "indices": i.iter().map(big).collect::<Vec<_>>() }),
        Outcome::Mass(r) => json!({
            "depth": r.depth,
            "terms": r.terms.iter().map(frac).collect::<Vec<_>>(),
            "partial_sums": r.partial_sums.iter().map(frac).collect::<Vec<_>>(),
        }),
        Outcome::Grid(rows) => json!({ "windows": rows.iter().map(discrepancy).collect::<Vec<_>>() }),
        Outcome::Verdict(v) => json!({ "verdict": verdict(v) }),
        Outcome::Probe(rows) => json!({
            "table": rows.iter().map(|(k, v)| json!({ "k": k, "verdict": verdict(v) })).collect::<Vec<_>>(),
        }),
        Outcome::Summability(p) => json!({
            "k": p.k,
            "q": p.q_seq,
            "reading": match p.reading {
                SummabilityReading::OffClassFraction => "off_class",
                SummabilityReading::Literal => "literal",
            },
            "terms": p.terms.iter().map(frac).collect::<Vec<_>>(),
            "partial_sums": p.partial_sums.iter().map(frac).collect::<Vec<_>>(),
        }),
        Outcome::Fit(f) => json!({ "fit": fit(f) }),
        Outcome::Search(s) => json!({
            "verdict": verdict(&s.verdict),
            "found": s.found.iter().map(|(l, e, k)| json!({ "l": l, "eps": frac(e), "k": k })).collect::<Vec<_>>(),
            "candidate": s.candidate.as_ref().map(|c| c.to_string()),
        }),
        Outcome::Maps { maps, equivariance } => json!({
            "maps": maps.iter().zip(equivariance).map(|(m, e)| map(m, e)).collect::<Vec<_>>(),
        }),
    }
}

fn record(r: &Record) -> Value {
    match &r.outcome {
        Ok(o) => json!({ "index": r.index, "kind": r.kind, "status": "ok", "result": outcome(o) }),
        Err(e) => json!({ "index": r.index, "kind": r.kind, "status": "error", "error": e }),
    }
}

/// The machine-readable report. Keys are sorted.
pub fn to_json(report: &Report) -> String {
    let value = json!({
        "tool": { "name": TOOL_NAME, "version": TOOL_VERSION },
        "config": serde_json::to_value(&report.config).expect("configs always serialize"),
        "analyses": report.records.iter().map(record).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_string_pretty(&value).expect("values always serialize");
    out.push('\n');
    out
}

/// One CSV table per discrepancy grid, named by the analysis index.
pub fn to_csv(report: &Report) -> Vec<(String, String)> {
    let mut tables = Vec::new();
    for r in &report.records {
        let Ok(Outcome::Grid(rows)) = &r.outcome else {
            continue;
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "m", "n", "best_j", "delta_num", "delta_den"])
            .expect("in-memory write");
        for d in rows {
            w.write_record([
                d.k.to_string(),
                d.m.to_string(),
                d.n.to_string(),
                d.best_j.to_string(),
                d.delta.numer().to_string(),
                d.delta.denom().to_string(),
            ])
            .expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        tables.push((
            format!("discrepancy_{}.csv", r.index),
            String::from_utf8(bytes).expect("csv output is utf-8"),
        ));
    }
    tables
}

fn verdict_line(v: &CriterionVerdict) -> String {
    let mut s = v.status.as_str().to_string();
    if v.zero_evidence {
        s.push_str(" (zero evidence)");
    }
    if let Some(w) = v.windows.iter().max_by(|a, b| a.worst.delta.cmp(&b.worst.delta)) {
        let _ = write!(
            s,
            "; worst delta {} {} at k={} (m,n)=({},{})",
            to_fraction_string(&w.worst.delta),
            approx(&w.worst.delta),
            w.k,
            w.worst.m,
            w.worst.n
        );
    }
    for f in &v.fits {
        match f.witness_k {
            Some(k) => {
                let _ = write!(s, "; l={} eps={} fitted by k={}", f.l, to_fraction_string(&f.eps), k);
            }
            None => {
                let _ = write!(s, "; l={} eps={} no fitting k", f.l, to_fraction_string(&f.eps));
            }
        }
    }
    s
}

fn summary_line(o: &Outcome) -> String {
    match o {
        Outcome::Heights(h) => format!(
            "h_0..h_{} computed, h_{} = {}",
            h.len() - 1,
            h.len() - 1,
            h.last().expect("depth 0 gives one height")
        ),
        Outcome::Words(w) => {
            let mut s = format!("{} words", w.len());
            for (n, word) in w.iter().enumerate() {
                let _ = write!(s, "\n    v_{n} = {word}");
            }
            s
        }
        Outcome::IndexSet(i) => format!("{} indices", i.len()),
        Outcome::Mass(r) => format!(
            "spacer mass sum to depth {} = {} {}",
            r.depth,
            to_fraction_string(r.total()),
            approx(r.total())
        ),
        Outcome::Grid(rows) => format!("{} windows", rows.len()),
        Outcome::Verdict(v) => verdict_line(v),
        Outcome::Probe(rows) => {
            let mut s = format!("{} moduli", rows.len());
            for (k, v) in rows {
                let min = v.windows[0].min_proper_delta.as_ref();
                let _ = write!(
                    s,
                    "\n    k={k:<3} {:<17} min window delta {}",
                    v.status.as_str(),
                    min.map_or("n/a".into(), |q| format!("{} {}", to_fraction_string(q), approx(q)))
                );
            }
            s
        }
        Outcome::Summability(p) => {
            let total = p.partial_sums.last().expect("partial sums start at 0");
            format!("{} terms, partial sum {} {}", p.terms.len(), to_fraction_string(total), approx(total))
        }
        Outcome::Fit(f) => format!("eps_star = {} {}", to_fraction_string(&f.eps_star), approx(&f.eps_star)),
        Outcome::Search(s) => {
            let mut line = verdict_line(&s.verdict);
            if let Some(c) = &s.candidate {
                let _ = write!(line, "; candidate {c}");
            }
            line
        }
        Outcome::Maps { maps, .. } => {
            let stages: Vec<String> = maps.iter().map(|m| m.stage.to_string()).collect();
            let worst = maps.iter().map(|m| &m.defect).max();
            format!(
                "{} maps at stages [{}], max defect {}",
                maps.len(),
                stages.join(", "),
                worst.map_or("n/a".into(), |d| format!("{} {}", to_fraction_string(d), approx(d)))
            )
        }
    }
}

/// Human-readable summary; `~` marks approximate decimal renderings.
pub fn to_text(report: &Report) -> String {
    let mut out = format!("{TOOL_NAME} {TOOL_VERSION}\n");
    let spec = &report.config.spec;
    let source = match (&spec.preset, &spec.stages, &spec.periodic) {
        (Some(p), _, _) => format!("preset {p}"),
        (_, Some(rows), _) => format!("table of {} stages", rows.len()),
        (_, _, Some(rows)) => format!("periodic rule of {} stages", rows.len()),
        _ => "none".into(),
    };
    let _ = writeln!(out, "construction: {source}");
    for r in &report.records {
        let body = match &r.outcome {
            Ok(o) => summary_line(o),
            Err(e) => format!("ERROR {e}"),
        };
        let _ = writeln!(out, "[{}] {}: {}", r.index, r.kind, body);
    }
    let _ = writeln!(out, "wall time: {:.3} s", report.wall_time.as_secs_f64());
    out
}
