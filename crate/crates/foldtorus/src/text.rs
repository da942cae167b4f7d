// SPDX-License-Identifier: MIT OR Apache-2.0

//! Line-oriented text format for graphs and graph maps.
//!
//! ```text
//! # comment
//! vertices L R
//! edge a L R
//! len a 1
//! map a -> d
//! vmap L -> L
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::graph_core::Graph;
use crate::graph_maps::{parse_word, GraphMap};
use crate::rational;

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

/// Parses a graph map. Lengths, when any are given, must cover every edge.
pub fn parse_map(src: &str) -> Result<GraphMap> {
    let mut g = Graph::new();
    let mut lens = BTreeMap::new();
    let mut images: Vec<(usize, String, String)> = Vec::new();
    let mut vmaps: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut toks = text.split_whitespace();
        let kw = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        match kw {
            "vertices" => {
                if rest.is_empty() {
                    return perr(line, "`vertices` needs at least one name");
                }
                for v in rest {
                    if g.vertex_by_name(v).is_some() {
                        return perr(line, format!("duplicate vertex `{v}`"));
                    }
                    g.add_vertex(v);
                }
            }
            "edge" => {
                let [name, o, t] = rest[..] else { return perr(line, "expected `edge NAME FROM TO`") };
                if name.contains("^") || g.edge_by_name(name).is_some() {
                    return perr(line, format!("bad or duplicate edge name `{name}`"));
                }
                let Some(o) = g.vertex_by_name(o) else { return perr(line, format!("unknown vertex `{o}`")) };
                let Some(t) = g.vertex_by_name(t) else { return perr(line, format!("unknown vertex `{t}`")) };
                g.add_edge(name, o, t);
            }
            "len" => {
                let [name, value] = rest[..] else { return perr(line, "expected `len NAME VALUE`") };
                let Some(e) = g.edge_by_name(name).filter(|e| g.positive[*e]) else {
                    return perr(line, format!("unknown edge `{name}`"));
                };
                match rational::parse(value) {
                    Some(x) if x > rational::zero() => {
                        lens.insert(e, x);
                    }
                    _ => return perr(line, format!("length must be a positive rational, got `{value}`")),
                }
            }
            "map" | "vmap" => {
                let Some(pos) = rest.iter().position(|t| *t == "->") else {
                    return perr(line, format!("expected `{kw} X -> ...`"));
                };
                if pos != 1 {
                    return perr(line, format!("expected a single name before `->` in `{kw}`"));
                }
                let entry = (line, rest[0].to_string(), rest[2..].join(" "));
                if kw == "map" {
                    images.push(entry);
                } else {
                    vmaps.push(entry);
                }
            }
            other => return perr(line, format!("unknown keyword `{other}`")),
        }
    }
    if g.num_edges() == 0 {
        return perr(src.lines().count().max(1), "empty edge list");
    }
    if !lens.is_empty() {
        if lens.len() != g.num_edges() {
            return perr(1, "lengths given for some edges but not all");
        }
        for (e, x) in lens {
            g.set_length(e, x);
        }
    }
    let mut emap = BTreeMap::new();
    for (line, name, word) in &images {
        let Some(e) = g.edge_by_name(name).filter(|e| g.positive[*e]) else {
            return perr(*line, format!("unknown edge `{name}`"));
        };
        let w = parse_word(&g, word).or_else(|err| perr(*line, err.to_string()))?;
        if emap.insert(e, w).is_some() {
            return perr(*line, format!("edge `{name}` mapped twice"));
        }
    }
    let mut vmap = BTreeMap::new();
    for (line, v, w) in &vmaps {
        let (Some(a), Some(b)) = (g.vertex_by_name(v), g.vertex_by_name(w.trim())) else {
            return perr(*line, "unknown vertex in `vmap`");
        };
        vmap.insert(a, b);
    }
    let first_map_line = images.first().map_or(1, |x| x.0);
    GraphMap::new(g, vmap, emap).or_else(|err| perr(first_map_line, err.to_string()))
}

/// Prints a map in the format accepted by [`parse_map`].
pub fn print_map(m: &GraphMap) -> String {
    let g = &m.graph;
    let mut s = String::new();
    let _ = writeln!(s, "vertices {}", g.vertex_names.join(" "));
    for e in g.positive_edges() {
        let _ =
            writeln!(s, "edge {} {} {}", g.edge_names[e], g.vertex_names[g.origin[e]], g.vertex_names[g.terminus(e)]);
    }
    if g.lengths.is_some() {
        for e in g.positive_edges() {
            let _ = writeln!(s, "len {} {}", g.edge_names[e], rational::fmt(&g.length(e)));
        }
    }
    for e in g.positive_edges() {
        let _ = writeln!(s, "map {} -> {}", g.edge_names[e], g.word(&m.edge_map[e]));
    }
    for (v, w) in m.vertex_map.iter().enumerate() {
        let _ = writeln!(s, "vmap {} -> {}", g.vertex_names[v], g.vertex_names[*w]);
    }
    s
}

/// The running example used throughout the documentation and tests.
pub const RUNNING_EXAMPLE: &str = "\
vertices L R
edge a L R
edge b L R
edge c R R
edge d L R
map a -> d
map b -> a
map c -> b^-1 a
map d -> b a^-1 d b^-1 a c
";
