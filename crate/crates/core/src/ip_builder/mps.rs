//! MPS export and a standalone reader.
//!
//! Fixed-format MPS is written when every name fits in 8 characters and
//! every number in 12; otherwise the file is free-format and says so in a
//! leading comment. All columns are binary.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{IpInstance, RowKind, Sense};

const NAME_WIDTH: usize = 8;
const NUMBER_WIDTH: usize = 12;

/// Shortest decimal or exponent rendering that parses back to `v`.
pub fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace()) || name.starts_with('*') {
        return Err(Error::MpsName(name.to_owned()));
    }
    Ok(())
}

struct Writer {
    fixed: bool,
    out: String,
}

impl Writer {
    fn section(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }

    /// Data line with up to five fields after an optional code.
    fn line(&mut self, code: &str, fields: &[&str]) {
        let mut l = String::new();
        if self.fixed {
            // columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
            l.push(' ');
            l.push_str(&format!("{code:<2}"));
            let pads = [1usize, 2, 2, 3, 2];
            let widths = [NAME_WIDTH, NAME_WIDTH, NUMBER_WIDTH, NAME_WIDTH, NUMBER_WIDTH];
            for (i, f) in fields.iter().enumerate() {
                l.push_str(&" ".repeat(pads[i]));
                l.push_str(&format!("{f:<w$}", w = widths[i]));
            }
        } else {
            l.push(' ');
            if !code.is_empty() {
                l.push_str(code);
                l.push(' ');
            }
            l.push_str(&fields.join(" "));
        }
        self.out.push_str(l.trim_end());
        self.out.push('\n');
    }
}

/// Renders the instance as MPS text. Output depends only on the instance.
pub fn to_mps_string(ip: &IpInstance) -> Result<String> {
    check_name(&ip.name)?;
    for n in ip.var_names.iter().chain(ip.rows.iter().map(|r| &r.name)) {
        check_name(n)?;
    }
    let numbers = ip
        .objective
        .iter()
        .copied()
        .chain(ip.rows.iter().flat_map(|r| r.coeffs.iter().map(|&(_, c)| c)))
        .chain(ip.rows.iter().map(|r| r.rhs));
    let names_fit = std::iter::once(&ip.name)
        .chain(&ip.var_names)
        .chain(ip.rows.iter().map(|r| &r.name))
        .all(|n| n.len() <= NAME_WIDTH);
    let numbers_fit = numbers.clone().all(|v| format_number(v).len() <= NUMBER_WIDTH);
    let mut w = Writer {
        fixed: names_fit && numbers_fit,
        out: String::new(),
    };

    if !w.fixed {
        w.section("* free-format MPS: some names or numbers exceed fixed-format field widths");
    }
    if w.fixed {
        w.section(&format!("NAME          {}", ip.name));
    } else {
        w.section(&format!("NAME {}", ip.name));
    }
    if ip.sense == Sense::Maximize {
        w.section("OBJSENSE");
        w.section("    MAX");
    }
    w.section("ROWS");
    w.line("N", &["OBJ"]);
    for r in &ip.rows {
        let code = match r.kind {
            RowKind::Le => "L",
            RowKind::Ge => "G",
            RowKind::Eq => "E",
        };
        w.line(code, &[&r.name]);
    }

    // column-major view of the rows
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ip.var_names.len()];
    for (ri, r) in ip.rows.iter().enumerate() {
        for &(v, c) in &r.coeffs {
            if c != 0.0 {
                by_col[v].push((ri, c));
            }
        }
    }
    w.section("COLUMNS");
    for (v, name) in ip.var_names.iter().enumerate() {
        let obj = ip.objective.get(v).copied().unwrap_or(0.0);
        // a column with no entries is still declared, with a zero cost
        if obj != 0.0 || by_col[v].is_empty() {
            w.line("", &[name, "OBJ", &format_number(obj)]);
        }
        for &(ri, c) in &by_col[v] {
            w.line("", &[name, &ip.rows[ri].name, &format_number(c)]);
        }
    }
    w.section("RHS");
    for r in &ip.rows {
        if r.rhs != 0.0 {
            w.line("", &["RHS", &r.name, &format_number(r.rhs)]);
        }
    }
    w.section("BOUNDS");
    for name in &ip.var_names {
        w.line("BV", &["BND", name]);
    }
    w.section("ENDATA");
    Ok(w.out)
}

pub fn write_mps(ip: &IpInstance, mut sink: impl Write) -> Result<()> {
    let text = to_mps_string(ip)?;
    sink.write_all(text.as_bytes())
        .map_err(|e| Error::io("<mps sink>", e))
}

/// Column bound as read from a BOUNDS section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

impl Default for Bound {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
            integer: false,
        }
    }
}

/// A model read back from MPS text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpsModel {
    pub name: String,
    pub maximize: bool,
    pub objective_row: String,
    /// Constraint rows in file order (objective excluded).
    pub rows: Vec<(String, RowKind)>,
    /// Columns in order of first appearance.
    pub columns: Vec<String>,
    /// Sparse entries `(column, row) -> value`, objective included.
    pub entries: HashMap<(String, String), f64>,
    pub rhs: HashMap<String, f64>,
    pub bounds: HashMap<String, Bound>,
}

impl MpsModel {
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_coeff(&self, column: &str) -> f64 {
        self.entries
            .get(&(column.to_owned(), self.objective_row.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn rhs_of(&self, row: &str) -> f64 {
        self.rhs.get(row).copied().unwrap_or(0.0)
    }

    /// Rows violated by a named 0/1 assignment (missing columns read as 0).
    pub fn violations(&self, values: &HashMap<String, f64>, tol: f64) -> Vec<String> {
        let mut lhs: HashMap<&str, f64> = HashMap::new();
        for ((col, row), &c) in &self.entries {
            let v = values.get(col).copied().unwrap_or(0.0);
            *lhs.entry(row.as_str()).or_default() += c * v;
        }
        self.rows
            .iter()
            .filter(|(name, kind)| {
                let a = lhs.get(name.as_str()).copied().unwrap_or(0.0);
                let b = self.rhs_of(name);
                match kind {
                    RowKind::Le => a > b + tol,
                    RowKind::Ge => a < b - tol,
                    RowKind::Eq => (a - b).abs() > tol,
                }
            })
            .map(|(n, _)| n.clone())
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    ObjSense,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MpsParse {
        line,
        reason: reason.into(),
    }
}

fn num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad number `{tok}`")))
}

/// Reads fixed- or free-format MPS. Fields are split on whitespace, so names
/// must not contain spaces.
pub fn parse_mps(reader: impl BufRead) -> Result<MpsModel> {
    let mut m = MpsModel::default();
    let mut section = Section::None;
    let mut kinds: HashMap<String, Option<RowKind>> = HashMap::new();
    let mut integer_block = false;
    let mut ended = false;
    for (i, line) in reader.lines().enumerate() {
        let ln = i + 1;
        let line = line.map_err(|e| Error::io("<mps>", e))?;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match toks[0] {
                "NAME" => {
                    m.name = toks.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        m.maximize = *s == "MAX" || *s == "MAXIMIZE";
                    }
                    Section::ObjSense
                }
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(parse_err(ln, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(parse_err(ln, "data outside a section")),
            Section::ObjSense => m.maximize = matches!(toks[0], "MAX" | "MAXIMIZE"),
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(parse_err(ln, "ROWS entry needs a type and a name"));
                }
                let kind = match toks[0] {
                    "N" => None,
                    "L" => Some(RowKind::Le),
                    "G" => Some(RowKind::Ge),
                    "E" => Some(RowKind::Eq),
                    t => return Err(parse_err(ln, format!("row type `{t}`"))),
                };
                let name = toks[1].to_owned();
                if kinds.contains_key(&name) {
                    return Err(parse_err(ln, format!("duplicate row `{name}`")));
                }
                match kind {
                    None if m.objective_row.is_empty() => m.objective_row = name.clone(),
                    None => {} // extra free rows are ignored
                    Some(k) => m.rows.push((name.clone(), k)),
                }
                kinds.insert(name, kind);
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    integer_block = toks[2] == "'INTORG'";
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(ln, "COLUMNS entry needs 3 or 5 fields"));
                }
                let col = toks[0].to_owned();
                if m.columns.last() != Some(&col) {
                    if m.bounds.contains_key(&col) {
                        return Err(parse_err(ln, format!("column `{col}` is not contiguous")));
                    }
                    m.columns.push(col.clone());
                    m.bounds.insert(
                        col.clone(),
                        Bound {
                            integer: integer_block,
                            upper: if integer_block { 1.0 } else { f64::INFINITY },
                            ..Bound::default()
                        },
                    );
                }
                for pair in toks[1..].chunks(2) {
                    if !kinds.contains_key(pair[0]) {
                        return Err(parse_err(ln, format!("unknown row `{}`", pair[0])));
                    }
                    m.entries
                        .insert((col.clone(), pair[0].to_owned()), num(pair[1], ln)?);
                }
            }
            Section::Rhs => {
                let pairs = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                if pairs.is_empty() {
                    return Err(parse_err(ln, "empty RHS entry"));
                }
                for pair in pairs.chunks(2) {
                    if !kinds.contains_key(pair[0]) {
                        return Err(parse_err(ln, format!("unknown row `{}`", pair[0])));
                    }
                    m.rhs.insert(pair[0].to_owned(), num(pair[1], ln)?);
                }
            }
            Section::Ranges => return Err(parse_err(ln, "RANGES is not supported")),
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(parse_err(ln, "BOUNDS entry too short"));
                }
                let col = toks[2];
                let b = m
                    .bounds
                    .get_mut(col)
                    .ok_or_else(|| parse_err(ln, format!("unknown column `{col}`")))?;
                let val = || -> Result<f64> {
                    toks.get(3)
                        .ok_or_else(|| parse_err(ln, "bound value missing"))
                        .and_then(|t| num(t, ln))
                };
                match toks[0] {
                    "BV" => *b = Bound { lower: 0.0, upper: 1.0, integer: true },
                    "UP" => b.upper = val()?,
                    "LO" => b.lower = val()?,
                    "FX" => {
                        let v = val()?;
                        b.lower = v;
                        b.upper = v;
                    }
                    "FR" => {
                        b.lower = f64::NEG_INFINITY;
                        b.upper = f64::INFINITY;
                    }
                    "MI" => b.lower = f64::NEG_INFINITY,
                    "PL" => b.upper = f64::INFINITY,
                    "LI" => {
                        b.lower = val()?;
                        b.integer = true;
                    }
                    "UI" => {
                        b.upper = val()?;
                        b.integer = true;
                    }
                    t => return Err(parse_err(ln, format!("bound type `{t}`"))),
                }
            }
        }
    }
    if !ended {
        return Err(parse_err(0, "missing ENDATA"));
    }
    Ok(m)
}
