//! Solution files and metric reports.

use std::collections::HashMap;

use tdiv_core::baselines::{RankedItem, RankedLists};
use tdiv_core::metrics::MetricsReport;
use tdiv_core::RecGraph;

use crate::data::lines;
use crate::error::{DataError, Result};

/// One line per recommendation in list order:
/// `user<TAB>item<TAB>relevance<TAB>method`.
pub fn format_solution(graph: &RecGraph, lists: &RankedLists, method: &str) -> String {
    let mut out = String::from("user\titem\trelevance\tmethod\n");
    for (u, list) in lists.lists().iter().enumerate() {
        for r in list {
            let e = graph.edge(r.edge);
            out.push_str(&format!("{}\t{}\t{}\t{method}\n", graph.users()[u].id, graph.items()[r.item].id, e.relevance));
        }
    }
    out
}

/// Reads a solution back onto the candidate graph it was built from.
/// Every row must name a candidate edge of `graph`.
pub fn parse_solution(text: &str, origin: &str, graph: &RecGraph) -> Result<RankedLists> {
    let users: HashMap<&str, usize> = graph.users().iter().enumerate().map(|(i, u)| (u.id.as_str(), i)).collect();
    let items: HashMap<&str, usize> = graph.items().iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let mut lists = vec![Vec::new(); graph.user_count()];
    for (n, (line_no, line)) in lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 2 {
            return Err(DataError::parse(origin, line_no, "expected user and item"));
        }
        if n == 0 && f[0] == "user" && f[1] == "item" {
            continue;
        }
        let u = *users.get(f[0]).ok_or_else(|| DataError::UnknownId { what: "user", id: f[0].into() })?;
        let v = *items.get(f[1]).ok_or_else(|| DataError::UnknownId { what: "item", id: f[1].into() })?;
        let edge = graph
            .user_edges(u)
            .iter()
            .copied()
            .find(|&e| graph.edge(e).item == v)
            .ok_or_else(|| DataError::parse(origin, line_no, format!("({}, {}) is not a candidate pair", f[0], f[1])))?;
        let list: &mut Vec<RankedItem> = &mut lists[u];
        if list.iter().any(|r| r.edge == edge) {
            return Err(DataError::DuplicatePair { origin: origin.into(), line: line_no, user: f[0].into(), item: f[1].into() });
        }
        list.push(RankedItem { item: v, edge, score: graph.edge(edge).relevance });
    }
    Ok(RankedLists::new(lists))
}

pub fn report_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

pub fn parse_report_json(text: &str) -> serde_json::Result<MetricsReport> {
    serde_json::from_str(text)
}

pub fn report_csv_header() -> String {
    MetricsReport::FIELDS.join(",")
}

/// Absent metrics are empty cells.
pub fn report_csv_row(report: &MetricsReport) -> String {
    let mut cells: Vec<String> =
        report.values()[..11].iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()).collect();
    cells.push(report.k.to_string());
    cells.join(",")
}
