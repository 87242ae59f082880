//! Line-oriented text formats for instances, pipe orders and raw drawings.
//!
//! ```text
//! cluster <id> <x> <y>
//! pipe <id> <u> <v> [: x1 y1 x2 y2 ...]
//! vertex <id>
//! edge <id> <a> <b>
//! mapv <vertex-id> <cluster-id>
//! mape <edge-id> <pipe-id>
//! ```
//!
//! Orders: `order <pipe-id> : <edge-id> ...`. Raw drawings:
//! `vertex <id> <x> <y>` and `edge <a> <b> [: x1 y1 ...]`.
//! Everything after `#` on a line is ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::*;
use crate::normalize::RawDrawing;
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate {what} id {id}")]
    Duplicate {
        line: usize,
        what: &'static str,
        id: u32,
    },
    #[error("line {line}: reference to undefined {what} {id}")]
    Dangling {
        line: usize,
        what: &'static str,
        id: u32,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::Duplicate { line, .. }
            | ParseError::Dangling { line, .. } => *line,
        }
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with comments stripped, tokenized on whitespace.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn id(line: usize, tok: &str) -> Result<u32, ParseError> {
    tok.parse::<u32>()
        .map_err(|_| syntax(line, format!("invalid id `{tok}`")))
}

fn rat(line: usize, tok: &str) -> Result<Rat, ParseError> {
    tok.parse::<Rat>().map_err(|e| syntax(line, e.to_string()))
}

fn arity(line: usize, toks: &[&str], n: usize) -> Result<(), ParseError> {
    if toks.len() != n {
        return Err(syntax(
            line,
            format!(
                "`{}` expects {} fields, found {}",
                toks[0],
                n - 1,
                toks.len() - 1
            ),
        ));
    }
    Ok(())
}

/// Splits `head : tail` token lists; the colon may be absent.
fn split_colon<'a>(toks: &'a [&'a str]) -> (&'a [&'a str], Option<&'a [&'a str]>) {
    match toks.iter().position(|t| *t == ":") {
        Some(i) => (&toks[..i], Some(&toks[i + 1..])),
        None => (toks, None),
    }
}

fn points(line: usize, toks: &[&str]) -> Result<Vec<Point>, ParseError> {
    if !toks.len().is_multiple_of(2) {
        return Err(syntax(line, "odd number of bend coordinates"));
    }
    toks.chunks(2)
        .map(|c| Ok(Point::new(rat(line, c[0])?, rat(line, c[1])?)))
        .collect()
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut inst = Instance::default();
    // references are resolved after all definitions are read
    let mut pipe_refs = Vec::new();
    let mut edge_refs = Vec::new();
    let mut mapv = Vec::new();
    let mut mape = Vec::new();
    for (ln, toks) in lines(text) {
        match toks[0] {
            "cluster" => {
                arity(ln, &toks, 4)?;
                let c = ClusterId(id(ln, toks[1])?);
                let p = Point::new(rat(ln, toks[2])?, rat(ln, toks[3])?);
                if inst.host.clusters.insert(c, p).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "cluster",
                        id: c.0,
                    });
                }
            }
            "pipe" => {
                let (head, tail) = split_colon(&toks);
                arity(ln, head, 4)?;
                let p = PipeId(id(ln, head[1])?);
                let u = ClusterId(id(ln, head[2])?);
                let v = ClusterId(id(ln, head[3])?);
                let bends = match tail {
                    Some(t) => points(ln, t)?,
                    None => Vec::new(),
                };
                if inst.host.pipes.insert(p, Pipe { u, v, bends }).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "pipe",
                        id: p.0,
                    });
                }
                pipe_refs.push((ln, u));
                pipe_refs.push((ln, v));
            }
            "vertex" => {
                arity(ln, &toks, 2)?;
                let v = VertexId(id(ln, toks[1])?);
                if !inst.guest.vertices.insert(v) {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "vertex",
                        id: v.0,
                    });
                }
            }
            "edge" => {
                arity(ln, &toks, 4)?;
                let e = EdgeId(id(ln, toks[1])?);
                let a = VertexId(id(ln, toks[2])?);
                let b = VertexId(id(ln, toks[3])?);
                if inst.guest.edges.insert(e, (a, b)).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "edge",
                        id: e.0,
                    });
                }
                edge_refs.push((ln, a));
                edge_refs.push((ln, b));
            }
            "mapv" => {
                arity(ln, &toks, 3)?;
                let v = VertexId(id(ln, toks[1])?);
                let c = ClusterId(id(ln, toks[2])?);
                if inst.map.vertex_map.insert(v, c).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "mapv",
                        id: v.0,
                    });
                }
                mapv.push((ln, v, c));
            }
            "mape" => {
                arity(ln, &toks, 3)?;
                let e = EdgeId(id(ln, toks[1])?);
                let p = PipeId(id(ln, toks[2])?);
                if inst.map.edge_map.insert(e, p).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "mape",
                        id: e.0,
                    });
                }
                mape.push((ln, e, p));
            }
            other => return Err(syntax(ln, format!("unknown record `{other}`"))),
        }
    }
    let dangling = |line, what, id| Err(ParseError::Dangling { line, what, id });
    for (ln, c) in pipe_refs {
        if !inst.host.clusters.contains_key(&c) {
            return dangling(ln, "cluster", c.0);
        }
    }
    for (ln, v) in edge_refs {
        if !inst.guest.vertices.contains(&v) {
            return dangling(ln, "vertex", v.0);
        }
    }
    for (ln, v, c) in mapv {
        if !inst.guest.vertices.contains(&v) {
            return dangling(ln, "vertex", v.0);
        }
        if !inst.host.clusters.contains_key(&c) {
            return dangling(ln, "cluster", c.0);
        }
    }
    for (ln, e, p) in mape {
        if !inst.guest.edges.contains_key(&e) {
            return dangling(ln, "edge", e.0);
        }
        if !inst.host.pipes.contains_key(&p) {
            return dangling(ln, "pipe", p.0);
        }
    }
    Ok(inst)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = String::new();
    for (c, p) in &inst.host.clusters {
        writeln!(s, "cluster {c} {} {}", p.x, p.y).unwrap();
    }
    for (id, pipe) in &inst.host.pipes {
        write!(s, "pipe {id} {} {}", pipe.u, pipe.v).unwrap();
        if !pipe.bends.is_empty() {
            s.push_str(" :");
            for b in &pipe.bends {
                write!(s, " {} {}", b.x, b.y).unwrap();
            }
        }
        s.push('\n');
    }
    for v in &inst.guest.vertices {
        writeln!(s, "vertex {v}").unwrap();
    }
    for (e, (a, b)) in &inst.guest.edges {
        writeln!(s, "edge {e} {a} {b}").unwrap();
    }
    for (v, c) in &inst.map.vertex_map {
        writeln!(s, "mapv {v} {c}").unwrap();
    }
    for (e, p) in &inst.map.edge_map {
        writeln!(s, "mape {e} {p}").unwrap();
    }
    s
}

pub fn parse_orders(text: &str) -> Result<PipeOrderSet, ParseError> {
    let mut out = PipeOrderSet::default();
    for (ln, toks) in lines(text) {
        if toks[0] != "order" {
            return Err(syntax(ln, format!("unknown record `{}`", toks[0])));
        }
        let (head, tail) = split_colon(&toks);
        arity(ln, head, 2)?;
        let p = PipeId(id(ln, head[1])?);
        let tail = tail.ok_or_else(|| syntax(ln, "missing `:`"))?;
        let edges = tail
            .iter()
            .map(|t| id(ln, t).map(EdgeId))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = BTreeSet::new();
        for e in &edges {
            if !seen.insert(*e) {
                return Err(ParseError::Duplicate {
                    line: ln,
                    what: "edge",
                    id: e.0,
                });
            }
        }
        if out.orders.insert(p, edges).is_some() {
            return Err(ParseError::Duplicate {
                line: ln,
                what: "order",
                id: p.0,
            });
        }
    }
    Ok(out)
}

pub fn serialize_orders(orders: &PipeOrderSet) -> String {
    let mut s = String::new();
    for (p, o) in &orders.orders {
        write!(s, "order {p} :").unwrap();
        for e in o {
            write!(s, " {e}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn parse_raw(text: &str) -> Result<RawDrawing, ParseError> {
    let mut raw = RawDrawing::default();
    let mut refs = Vec::new();
    for (ln, toks) in lines(text) {
        match toks[0] {
            "vertex" => {
                arity(ln, &toks, 4)?;
                let v = VertexId(id(ln, toks[1])?);
                let p = Point::new(rat(ln, toks[2])?, rat(ln, toks[3])?);
                if raw.vertices.insert(v, p).is_some() {
                    return Err(ParseError::Duplicate {
                        line: ln,
                        what: "vertex",
                        id: v.0,
                    });
                }
            }
            "edge" => {
                let (head, tail) = split_colon(&toks);
                arity(ln, head, 3)?;
                let a = VertexId(id(ln, head[1])?);
                let b = VertexId(id(ln, head[2])?);
                let bends = match tail {
                    Some(t) => points(ln, t)?,
                    None => Vec::new(),
                };
                refs.push((ln, a));
                refs.push((ln, b));
                raw.edges.push((a, b, bends));
            }
            other => return Err(syntax(ln, format!("unknown record `{other}`"))),
        }
    }
    for (ln, v) in refs {
        if !raw.vertices.contains_key(&v) {
            return Err(ParseError::Dangling {
                line: ln,
                what: "vertex",
                id: v.0,
            });
        }
    }
    Ok(raw)
}

pub fn serialize_raw(raw: &RawDrawing) -> String {
    let mut s = String::new();
    for (v, p) in &raw.vertices {
        writeln!(s, "vertex {v} {} {}", p.x, p.y).unwrap();
    }
    for (a, b, bends) in &raw.edges {
        write!(s, "edge {a} {b}").unwrap();
        if !bends.is_empty() {
            s.push_str(" :");
            for p in bends {
                write!(s, " {} {}", p.x, p.y).unwrap();
            }
        }
        s.push('\n');
    }
    s
}

/// Parses a truth assignment: whitespace-separated DIMACS literals
/// (`3` true, `-3` false), optionally terminated by `0`, or lines `x3 = true`.
pub fn parse_assignment(text: &str) -> Result<BTreeMap<u32, bool>, ParseError> {
    let mut out = BTreeMap::new();
    for (ln, toks) in lines(text) {
        if toks.len() == 3 && toks[1] == "=" {
            let name = toks[0].trim_start_matches('x');
            let var = id(ln, name)?;
            let val = match toks[2] {
                "true" | "1" | "T" => true,
                "false" | "0" | "F" => false,
                other => return Err(syntax(ln, format!("invalid truth value `{other}`"))),
            };
            out.insert(var, val);
            continue;
        }
        for t in toks {
            if t == "v" {
                continue;
            }
            let lit: i64 = t
                .parse()
                .map_err(|_| syntax(ln, format!("invalid literal `{t}`")))?;
            if lit == 0 {
                continue;
            }
            out.insert(lit.unsigned_abs() as u32, lit > 0);
        }
    }
    Ok(out)
}
