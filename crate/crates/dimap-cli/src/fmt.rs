//! Line-based text formats: instances, placements, and distance tables.
//!
//! All three formats are UTF-8 with one record per line; `#` starts a
//! comment running to the end of the line, and blank lines are ignored.
//! A stream may concatenate several documents, each introduced by its own
//! header line (`dimap+ v1`, `placement v1`, or `metric v1`), so a solver
//! can echo the instance it read followed by the placement it produced
//! and a downstream tool can pick out either part.
//!
//! Parsing then re-serializing any document reproduces it exactly:
//! numbers are written in the shortest form that round-trips.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use dimap::lp::DistTable;
use dimap::model::{Edge, GridMode, Instance, ModelError, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("input contains no {0} document")]
    Missing(&'static str),
    #[error("input contains {found} {kind} documents, expected exactly one")]
    Ambiguous { kind: &'static str, found: usize },
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

fn num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T, FormatError> {
    tok.parse().map_err(|_| syntax(line, format!("cannot parse {what} from '{tok}'")))
}

/// Every document found in a text stream, in input order per kind.
#[derive(Debug, Default)]
pub struct Stream {
    pub instances: Vec<Instance>,
    /// Placements as position vectors indexed by vertex id.
    pub placements: Vec<Vec<Point>>,
    pub metrics: Vec<DistTable>,
}

fn exactly_one<'a, T>(items: &'a [T], kind: &'static str) -> Result<&'a T, FormatError> {
    match items {
        [one] => Ok(one),
        [] => Err(FormatError::Missing(kind)),
        many => Err(FormatError::Ambiguous { kind, found: many.len() }),
    }
}

impl Stream {
    pub fn only_instance(&self) -> Result<&Instance, FormatError> {
        exactly_one(&self.instances, "instance")
    }

    pub fn only_placement(&self) -> Result<&Vec<Point>, FormatError> {
        exactly_one(&self.placements, "placement")
    }

    pub fn only_metric(&self) -> Result<&DistTable, FormatError> {
        exactly_one(&self.metrics, "metric")
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Instance,
    Placement,
    Metric,
}

/// Parse a whole stream, splitting it into documents at header lines.
pub fn parse_stream(text: &str) -> Result<Stream, FormatError> {
    let mut docs: Vec<(Kind, Vec<(usize, &str)>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let header = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["dimap+", "v1"] => Some(Kind::Instance),
            ["placement", "v1"] => Some(Kind::Placement),
            ["metric", "v1"] => Some(Kind::Metric),
            _ => None,
        };
        match (header, docs.last_mut()) {
            (Some(kind), _) => docs.push((kind, Vec::new())),
            (None, Some((_, lines))) => lines.push((lineno, line)),
            (None, None) => {
                return Err(syntax(lineno, format!("expected a document header, found '{line}'")))
            }
        }
    }
    let mut stream = Stream::default();
    for (kind, lines) in docs {
        match kind {
            Kind::Instance => stream.instances.push(parse_instance_doc(&lines)?),
            Kind::Placement => stream.placements.push(parse_placement_doc(&lines)?),
            Kind::Metric => stream.metrics.push(parse_metric_doc(&lines)?),
        }
    }
    Ok(stream)
}

fn parse_instance_doc(lines: &[(usize, &str)]) -> Result<Instance, FormatError> {
    let mut dim: Option<u32> = None;
    let mut n: Option<usize> = None;
    let mut grid: Option<GridMode> = None;
    let mut terminals = Vec::new();
    let mut pins: BTreeMap<usize, Point> = BTreeMap::new();
    let mut edges = Vec::new();
    fn set_once<T>(
        slot: &mut Option<T>,
        value: T,
        line: usize,
        what: &str,
    ) -> Result<(), FormatError> {
        if slot.replace(value).is_some() {
            return Err(syntax(line, format!("duplicate '{what}' line")));
        }
        Ok(())
    }
    for &(line, text) in lines {
        let toks: Vec<&str> = text.split_whitespace().collect();
        match toks.as_slice() {
            ["dim", d] => set_once(&mut dim, num(d, line, "dimension")?, line, "dim")?,
            ["vertices", count] => {
                set_once(&mut n, num(count, line, "vertex count")?, line, "vertices")?
            }
            ["grid", "unbounded"] => set_once(&mut grid, GridMode::Unbounded, line, "grid")?,
            ["grid", "bounded", s] => set_once(
                &mut grid,
                GridMode::Bounded { side: num(s, line, "grid side")? },
                line,
                "grid",
            )?,
            ["grid", "eps", e] => set_once(
                &mut grid,
                GridMode::EpsViolation { eps: num(e, line, "eps")? },
                line,
                "grid",
            )?,
            ["terminal", id, "at", x, y] => {
                let t: usize = num(id, line, "terminal id")?;
                terminals.push(t);
                pins.insert(t, Point::new(num(x, line, "x")?, num(y, line, "y")?));
            }
            ["edge", u, v, w] => edges.push(Edge::new(
                num(u, line, "endpoint")?,
                num(v, line, "endpoint")?,
                num(w, line, "weight")?,
            )),
            _ => return Err(syntax(line, format!("unrecognized instance line '{text}'"))),
        }
    }
    let last = lines.last().map_or(0, |&(l, _)| l);
    let inst = Instance {
        dim: dim.ok_or_else(|| syntax(last, "missing 'dim' line"))?,
        n: n.ok_or_else(|| syntax(last, "missing 'vertices' line"))?,
        edges,
        terminals,
        pins,
        grid: grid.ok_or_else(|| syntax(last, "missing 'grid' line"))?,
    };
    inst.validate()?;
    Ok(inst)
}

fn parse_placement_doc(lines: &[(usize, &str)]) -> Result<Vec<Point>, FormatError> {
    let m = lines.len();
    let mut positions: Vec<Option<Point>> = vec![None; m];
    for &(line, text) in lines {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let ["vertex", id, x, y] = toks.as_slice() else {
            return Err(syntax(line, format!("unrecognized placement line '{text}'")));
        };
        let v: usize = num(id, line, "vertex id")?;
        if v >= m {
            return Err(syntax(line, format!("vertex id {v} out of range for {m} lines")));
        }
        let p = Point::new(num(x, line, "x")?, num(y, line, "y")?);
        if positions[v].replace(p).is_some() {
            return Err(syntax(line, format!("vertex {v} placed twice")));
        }
    }
    Ok(positions.into_iter().map(|p| p.expect("all ids 0..m seen exactly once")).collect())
}

fn parse_metric_doc(lines: &[(usize, &str)]) -> Result<DistTable, FormatError> {
    let Some((&(first_line, count), rest)) = lines.split_first() else {
        return Err(syntax(0, "metric document is empty"));
    };
    let n: usize = num(count, first_line, "point count")?;
    if n == 0 {
        return Err(syntax(first_line, "metric needs at least one point"));
    }
    let expected = n * (n - 1) / 2;
    if rest.len() != expected {
        return Err(syntax(
            first_line,
            format!("metric over {n} points needs {expected} entries, found {}", rest.len()),
        ));
    }
    let mut table = DistTable::zeros(n);
    let mut seen = vec![false; expected];
    for &(line, text) in rest {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let [u, v, d] = toks.as_slice() else {
            return Err(syntax(line, format!("unrecognized metric line '{text}'")));
        };
        let u: usize = num(u, line, "point id")?;
        let v: usize = num(v, line, "point id")?;
        if u >= v || v >= n {
            return Err(syntax(line, format!("pair ({u}, {v}) must satisfy u < v < {n}")));
        }
        let slot = u * n + v - (u + 1) * (u + 2) / 2;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(syntax(line, format!("pair ({u}, {v}) listed twice")));
        }
        table.set(u, v, num(d, line, "distance")?);
    }
    Ok(table)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = String::from("dimap+ v1\n");
    writeln!(s, "dim {}", inst.dim).unwrap();
    writeln!(s, "vertices {}", inst.n).unwrap();
    match inst.grid {
        GridMode::Unbounded => s.push_str("grid unbounded\n"),
        GridMode::Bounded { side } => writeln!(s, "grid bounded {side}").unwrap(),
        GridMode::EpsViolation { eps } => writeln!(s, "grid eps {eps}").unwrap(),
    }
    for &t in &inst.terminals {
        let p = inst.pins[&t];
        writeln!(s, "terminal {t} at {} {}", p.x, p.y).unwrap();
    }
    for e in &inst.edges {
        writeln!(s, "edge {} {} {}", e.u, e.v, e.w).unwrap();
    }
    s
}

pub fn serialize_placement(positions: &[Point]) -> String {
    let mut s = String::from("placement v1\n");
    for (v, p) in positions.iter().enumerate() {
        writeln!(s, "vertex {v} {} {}", p.x, p.y).unwrap();
    }
    s
}

pub fn serialize_metric(table: &DistTable) -> String {
    let n = table.len();
    let mut s = String::from("metric v1\n");
    writeln!(s, "{n}").unwrap();
    for u in 0..n {
        for v in u + 1..n {
            writeln!(s, "{u} {v} {}", table.get(u, v)).unwrap();
        }
    }
    s
}
