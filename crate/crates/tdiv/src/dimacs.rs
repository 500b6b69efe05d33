//! DIMACS min-cost-flow text format for inspecting reduction networks.
//!
//! Nodes are 1-based on disk. Unbounded capacities are written as
//! [`UNBOUNDED`] verbatim.

use std::fmt::Write;

use tdiv_core::mcmf::{FlowNetwork, FlowResult, UNBOUNDED};

use crate::data::lines;
use crate::error::{DataError, Result};

pub fn write_network(net: &FlowNetwork, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "c {line}");
    }
    let _ = writeln!(out, "c unbounded = {UNBOUNDED}");
    let _ = writeln!(out, "p min {} {}", net.node_count(), net.arcs().len());
    for (v, &s) in net.supply().iter().enumerate() {
        if s != 0 {
            let _ = writeln!(out, "n {} {s}", v + 1);
        }
    }
    for a in net.arcs() {
        let _ = writeln!(out, "a {} {} 0 {} {}", a.tail + 1, a.head + 1, a.capacity, a.cost);
    }
    out
}

fn field<T: std::str::FromStr>(origin: &str, line: usize, tok: Option<&str>) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| DataError::parse(origin, line, "malformed DIMACS line"))
}

/// Reads `p`, `n` and `a` lines. Lower bounds must be zero.
pub fn parse_network(text: &str, origin: &str) -> Result<FlowNetwork> {
    let mut net: Option<FlowNetwork> = None;
    for (line_no, line) in lines(text) {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("c") => {}
            Some("p") => {
                if tok.next() != Some("min") {
                    return Err(DataError::parse(origin, line_no, "expected `p min`"));
                }
                let n: usize = field(origin, line_no, tok.next())?;
                net = Some(FlowNetwork::new(n));
            }
            Some(kind @ ("n" | "a")) => {
                let net = net.as_mut().ok_or_else(|| DataError::parse(origin, line_no, "missing problem line"))?;
                let node = |t: Option<&str>, net: &FlowNetwork| -> Result<usize> {
                    let v: usize = field(origin, line_no, t)?;
                    if v == 0 || v > net.node_count() {
                        return Err(DataError::parse(origin, line_no, format!("node {v} out of range")));
                    }
                    Ok(v - 1)
                };
                if kind == "n" {
                    let v = node(tok.next(), net)?;
                    net.set_supply(v, field(origin, line_no, tok.next())?);
                } else {
                    let (tail, head) = (node(tok.next(), net)?, node(tok.next(), net)?);
                    let low: i64 = field(origin, line_no, tok.next())?;
                    if low != 0 {
                        return Err(DataError::parse(origin, line_no, "nonzero lower bounds are not supported"));
                    }
                    let cap = field(origin, line_no, tok.next())?;
                    let cost = field(origin, line_no, tok.next())?;
                    net.add_arc(tail, head, cap, cost);
                }
            }
            _ => return Err(DataError::parse(origin, line_no, "unknown DIMACS line")),
        }
    }
    net.ok_or_else(|| DataError::parse(origin, 0, "missing problem line"))
}

/// `s <cost>` followed by `f <tail> <head> <flow>` for every arc with flow.
pub fn write_flow(net: &FlowNetwork, result: &FlowResult) -> String {
    let mut out = format!("s {}\n", result.total_cost);
    for (a, &f) in result.flow.iter().enumerate() {
        if f > 0 {
            let arc = net.arc(a);
            let _ = writeln!(out, "f {} {} {f}", arc.tail + 1, arc.head + 1);
        }
    }
    out
}
