//! Line-oriented text format for constraint networks.
//!
//! ```text
//! CSPINST 1
//! vars <n>
//! dom <i> <k> <v1> ... <vk>          one per variable, i = 0..n-1
//! con <j> <m> <i1> ... <im> <t>      one per constraint, j = 0..e-1
//! tup <v1> ... <vm>                  t lines after each con
//! ```
//!
//! ASCII, single spaces, LF line endings.

use std::fmt::Write as _;
use std::io::{self, BufRead};
use std::path::Path;

use thiserror::Error;

use crate::csp::{ConstraintNetwork, NetworkError};

pub const HEADER: &str = "CSPINST 1";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
    #[error("invalid network: {0}")]
    Invalid(#[from] NetworkError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

/// Renders a network in the instance text format.
pub fn write_instance(net: &ConstraintNetwork) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    writeln!(out, "vars {}", net.num_vars()).unwrap();
    for v in 0..net.num_vars() {
        write!(out, "dom {} {}", v, net.domain_size(v)).unwrap();
        for l in net.labels(v) {
            write!(out, " {l}").unwrap();
        }
        out.push('\n');
    }
    for (j, c) in net.constraints().iter().enumerate() {
        write!(out, "con {} {}", j, c.arity()).unwrap();
        for v in c.scope() {
            write!(out, " {v}").unwrap();
        }
        writeln!(out, " {}", c.tuple_count()).unwrap();
        for t in c.tuples() {
            out.push_str("tup");
            for (&v, &val) in c.scope().iter().zip(t) {
                write!(out, " {}", net.label(v, val as usize)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_instance(net: &ConstraintNetwork, path: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(path, write_instance(net))
}

/// Reads an instance file; the network id is the file stem.
pub fn load_instance(path: impl AsRef<Path>) -> Result<ConstraintNetwork, ParseError> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path)?;
    parse_instance(io::BufReader::new(file), id)
}

pub fn parse_str(text: &str, id: impl Into<String>) -> Result<ConstraintNetwork, ParseError> {
    parse_instance(text.as_bytes(), id)
}

struct Lines<R> {
    inner: io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self, what: &str) -> Result<(usize, String), ParseError> {
        match self.inner.next() {
            Some(line) => {
                self.number += 1;
                Ok((self.number, line?))
            }
            None => Err(ParseError::Truncated(format!("expected {what}"))),
        }
    }
}

fn ints<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>, ParseError> {
    fields
        .iter()
        .map(|f| f.parse().map_err(|_| syntax(line, format!("bad integer `{f}`"))))
        .collect()
}

fn expect_keyword<'a>(line: usize, text: &'a str, keyword: &str) -> Result<Vec<&'a str>, ParseError> {
    let mut fields = text.split(' ');
    if fields.next() != Some(keyword) {
        return Err(syntax(line, format!("expected `{keyword}` record")));
    }
    Ok(fields.collect())
}

pub fn parse_instance<R: BufRead>(reader: R, id: impl Into<String>) -> Result<ConstraintNetwork, ParseError> {
    let mut lines = Lines { inner: reader.lines(), number: 0 };
    let (no, header) = lines.next_line("header")?;
    if header != HEADER {
        return Err(syntax(no, format!("expected header `{HEADER}`")));
    }
    let (no, text) = lines.next_line("vars record")?;
    let fields = expect_keyword(no, &text, "vars")?;
    let [n] = ints::<usize>(no, &fields)?[..] else {
        return Err(syntax(no, "vars takes one field"));
    };

    let mut domains = Vec::with_capacity(n);
    for i in 0..n {
        let (no, text) = lines.next_line("dom record")?;
        let fields = expect_keyword(no, &text, "dom")?;
        let nums = ints::<i64>(no, &fields)?;
        if nums.len() < 2 || nums[0] != i as i64 || nums[1] < 0 || nums.len() != 2 + nums[1] as usize {
            return Err(syntax(no, format!("malformed dom record for variable {i}")));
        }
        domains.push(nums[2..].to_vec());
    }

    let mut constraints = Vec::new();
    while let Some(line) = lines.inner.next() {
        lines.number += 1;
        let no = lines.number;
        let text = line?;
        if text.is_empty() {
            return Err(syntax(no, "blank line"));
        }
        let j = constraints.len();
        let fields = expect_keyword(no, &text, "con")?;
        let nums = ints::<usize>(no, &fields)?;
        if nums.len() < 2 || nums[0] != j || nums.len() != nums[1] + 3 {
            return Err(syntax(no, format!("malformed con record for constraint {j}")));
        }
        let arity = nums[1];
        let scope = nums[2..2 + arity].to_vec();
        let count = nums[2 + arity];
        let mut tuples = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, text) = lines.next_line("tup record")?;
            let fields = expect_keyword(no, &text, "tup")?;
            let tuple = ints::<i64>(no, &fields)?;
            if tuple.len() != arity {
                return Err(syntax(no, format!("tuple has {} values, expected {arity}", tuple.len())));
            }
            tuples.push(tuple);
        }
        constraints.push((scope, tuples));
    }
    Ok(ConstraintNetwork::new(id, domains, constraints)?)
}
