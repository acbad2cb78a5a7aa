//! Parser, formatter and executor for March-test notation.
//!
//! A March test is a sequence of elements, each pairing an address-order
//! direction with a list of read/write operations applied to every address
//! in that order. The text grammar is:
//!
//! ```text
//! test    := '{' element (';' element)* '}'
//! element := dir '(' op (',' op)* ')'
//! dir     := 'u' | 'd' | 'a'            (up, down, any order)
//! op      := ('w' | 'r') hexdigit+
//! ```
//!
//! Whitespace between tokens is ignored; a data literal is one contiguous
//! run of hex digits. `parse` and `format` are inverse on canonical text.
//!
//! The three-element test `{a(w0); u(r0,w1); d(r1,w0)}` is the classic
//! baseline used in the coverage campaigns.

use thiserror::Error;

use crate::memory::{Memory, MemoryError};

/// Address traversal order of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    /// Don't-care order; executed ascending for determinism.
    Any,
}

impl Direction {
    fn letter(self) -> char {
        match self {
            Direction::Up => 'u',
            Direction::Down => 'd',
            Direction::Any => 'a',
        }
    }
}

/// One read or write operation with its data (or expected data) value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarchOp {
    Write(u32),
    Read(u32),
}

impl MarchOp {
    pub fn data(self) -> u32 {
        match self {
            MarchOp::Write(d) | MarchOp::Read(d) => d,
        }
    }
}

/// One element: a direction plus a nonempty op list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarchElement {
    pub direction: Direction,
    pub ops: Vec<MarchOp>,
}

/// A parsed March test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarchTest {
    pub elements: Vec<MarchElement>,
}

impl MarchTest {
    /// The classic three-element baseline `{a(w0); u(r0,w1); d(r1,w0)}`.
    pub fn baseline_a() -> Self {
        parse_march("{a(w0); u(r0,w1); d(r1,w0)}").expect("built-in test parses")
    }

    /// Total operations applied per full pass over an `n`-cell memory.
    pub fn op_count(&self, n: usize) -> u64 {
        self.elements
            .iter()
            .map(|e| e.ops.len() as u64 * n as u64)
            .sum()
    }
}

impl std::fmt::Display for MarchTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_march(self))
    }
}

/// Positioned syntax error: byte offset plus what was expected there.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at offset {offset}: expected {expected}, found {}",
        found.map_or("end of input".to_string(), |c| format!("'{c}'")))]
pub struct MarchParseError {
    pub offset: usize,
    pub expected: &'static str,
    pub found: Option<char>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self
            .text
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text.get(self.pos).map(|&b| b as char)
    }

    fn error(&self, expected: &'static str) -> MarchParseError {
        MarchParseError {
            offset: self.pos,
            expected,
            found: self.text.get(self.pos).map(|&b| b as char),
        }
    }

    fn expect(&mut self, c: char, expected: &'static str) -> Result<(), MarchParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn direction(&mut self) -> Result<Direction, MarchParseError> {
        let dir = match self.peek() {
            Some('u') => Direction::Up,
            Some('d') => Direction::Down,
            Some('a') => Direction::Any,
            _ => return Err(self.error("direction ('u', 'd' or 'a')")),
        };
        self.pos += 1;
        Ok(dir)
    }

    fn op(&mut self) -> Result<MarchOp, MarchParseError> {
        let is_write = match self.peek() {
            Some('w') => true,
            Some('r') => false,
            _ => return Err(self.error("operation ('w' or 'r')")),
        };
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self
            .text
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_hexdigit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("hex data digits"));
        }
        let digits = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        let data = u32::from_str_radix(digits, 16).map_err(|_| MarchParseError {
            offset: start,
            expected: "data value fitting in 32 bits",
            found: Some(self.text[start] as char),
        })?;
        Ok(if is_write {
            MarchOp::Write(data)
        } else {
            MarchOp::Read(data)
        })
    }

    fn element(&mut self) -> Result<MarchElement, MarchParseError> {
        let direction = self.direction()?;
        self.expect('(', "'('")?;
        let mut ops = vec![self.op()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            ops.push(self.op()?);
        }
        self.expect(')', "')' or ','")?;
        Ok(MarchElement { direction, ops })
    }

    fn test(&mut self) -> Result<MarchTest, MarchParseError> {
        self.expect('{', "'{'")?;
        let mut elements = vec![self.element()?];
        while self.peek() == Some(';') {
            self.pos += 1;
            elements.push(self.element()?);
        }
        self.expect('}', "'}' or ';'")?;
        self.skip_ws();
        if self.pos != self.text.len() {
            return Err(self.error("end of input"));
        }
        Ok(MarchTest { elements })
    }
}

/// Parses March notation into a structured test.
pub fn parse_march(text: &str) -> Result<MarchTest, MarchParseError> {
    Parser::new(text).test()
}

/// Canonical text: single space after each ';', ops comma-separated,
/// lowercase hex data. `parse_march(format_march(t)) == t`.
pub fn format_march(test: &MarchTest) -> String {
    let elements: Vec<String> = test
        .elements
        .iter()
        .map(|e| {
            let ops: Vec<String> = e
                .ops
                .iter()
                .map(|op| match op {
                    MarchOp::Write(d) => format!("w{d:x}"),
                    MarchOp::Read(d) => format!("r{d:x}"),
                })
                .collect();
            format!("{}({})", e.direction.letter(), ops.join(","))
        })
        .collect();
    format!("{{{}}}", elements.join("; "))
}

/// Execution verdict. Indices are 0-based; `Fail` reports the first
/// mismatching read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarchVerdict {
    Pass,
    Fail(MarchFailure),
}

impl MarchVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, MarchVerdict::Pass)
    }

    pub fn failure(&self) -> Option<MarchFailure> {
        match *self {
            MarchVerdict::Pass => None,
            MarchVerdict::Fail(f) => Some(f),
        }
    }
}

/// One observed read mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarchFailure {
    pub element: usize,
    pub op: usize,
    pub address: usize,
    pub read: u32,
    pub expected: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarchError {
    #[error("op data {data:#x} does not fit in a {m}-bit cell (element {element}, op {op})")]
    DataOutOfRange {
        data: u32,
        m: u8,
        element: usize,
        op: usize,
    },
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

fn validate(test: &MarchTest, mem: &Memory) -> Result<(), MarchError> {
    let limit = mem.config().value_limit();
    for (ei, element) in test.elements.iter().enumerate() {
        for (oi, op) in element.ops.iter().enumerate() {
            if op.data() >= limit {
                return Err(MarchError::DataOutOfRange {
                    data: op.data(),
                    m: mem.config().m,
                    element: ei,
                    op: oi,
                });
            }
        }
    }
    Ok(())
}

fn run(
    test: &MarchTest,
    mem: &mut Memory,
    collect_all: bool,
) -> Result<Vec<MarchFailure>, MarchError> {
    validate(test, mem)?;
    let n = mem.config().n;
    let mut failures = Vec::new();
    'elements: for (ei, element) in test.elements.iter().enumerate() {
        let addresses: Box<dyn Iterator<Item = usize>> = match element.direction {
            Direction::Up | Direction::Any => Box::new(0..n),
            Direction::Down => Box::new((0..n).rev()),
        };
        for addr in addresses {
            for (oi, op) in element.ops.iter().enumerate() {
                match *op {
                    MarchOp::Write(d) => mem.write(0, addr, d as u16)?,
                    MarchOp::Read(expected) => {
                        let read = mem.read(0, addr)? as u32;
                        if read != expected {
                            failures.push(MarchFailure {
                                element: ei,
                                op: oi,
                                address: addr,
                                read,
                                expected,
                            });
                            if !collect_all {
                                break 'elements;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(failures)
}

/// Runs a test against a memory, failing fast on the first read mismatch
/// (hardware-comparator behavior).
pub fn execute_march(test: &MarchTest, mem: &mut Memory) -> Result<MarchVerdict, MarchError> {
    let failures = run(test, mem, false)?;
    Ok(match failures.first() {
        None => MarchVerdict::Pass,
        Some(&f) => MarchVerdict::Fail(f),
    })
}

/// Diagnostic mode: runs the whole test and returns every read mismatch.
pub fn execute_march_trace(
    test: &MarchTest,
    mem: &mut Memory,
) -> Result<Vec<MarchFailure>, MarchError> {
    run(test, mem, true)
}
