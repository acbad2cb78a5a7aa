//! Simulated RAM with injectable functional faults and operation accounting.
//!
//! The model is behavioral: cells hold `m`-bit words, and the classical
//! functional fault models (stuck-at, transition, coupling, address-decoder)
//! are applied on every access. Fault effects compose in a fixed order:
//! address decode first, then stuck-at forcing, then transition blocking,
//! then coupling triggers; state coupling is evaluated when the victim is
//! read. Campaigns inject exactly one fault at a time, so the order only
//! matters for multi-fault experiments.
//!
//! Accounting distinguishes reads, writes and cycles: on a single-port
//! memory every access costs one cycle, while [`Memory::cycle_dual`] charges
//! a simultaneous pair of accesses to a single cycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::GfElement;

/// Smallest usable array: a 2-stage register plus one cell to write.
pub const MIN_CELLS: usize = 3;

/// Geometry of a simulated memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryConfig {
    /// Number of addressable cells.
    pub n: usize,
    /// Bits per cell (1 for bit-oriented, up to 16 for word-oriented).
    pub m: u8,
    /// Number of independent ports, 1 or 2.
    pub ports: u8,
}

impl MemoryConfig {
    pub fn new(n: usize, m: u8, ports: u8) -> Result<Self, MemoryError> {
        let cfg = Self { n, m, ports };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.n < MIN_CELLS {
            return Err(MemoryError::TooFewCells(self.n));
        }
        if self.m == 0 || self.m > crate::galois::MAX_WIDTH {
            return Err(MemoryError::BadCellWidth(self.m));
        }
        if self.ports != 1 && self.ports != 2 {
            return Err(MemoryError::BadPortCount(self.ports));
        }
        Ok(())
    }

    /// Exclusive upper bound on cell values.
    pub fn value_limit(&self) -> u32 {
        1u32 << self.m
    }
}

/// Write-transition edge on a single bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    /// A 0 -> 1 write transition.
    Rise,
    /// A 1 -> 0 write transition.
    Fall,
}

impl Edge {
    fn matches(self, old: bool, new: bool) -> bool {
        match self {
            Edge::Rise => !old && new,
            Edge::Fall => old && !new,
        }
    }
}

/// Blocked direction of a transition fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionDir {
    /// The cell cannot perform a 0 -> 1 transition.
    UpBlocked,
    /// The cell cannot perform a 1 -> 0 transition.
    DownBlocked,
}

/// One injectable functional fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultDescriptor {
    /// Bit permanently reads and stores `value`.
    StuckAt { cell: usize, bit: u8, value: bool },
    /// Bit cannot perform the given write transition.
    Transition {
        cell: usize,
        bit: u8,
        direction: TransitionDir,
    },
    /// Victim bit inverts when the aggressor bit performs the edge.
    CouplingInversion {
        aggressor_cell: usize,
        aggressor_bit: u8,
        victim_cell: usize,
        victim_bit: u8,
        edge: Edge,
    },
    /// Victim bit is forced to `forced_value` when the aggressor performs
    /// the edge.
    CouplingIdempotent {
        aggressor_cell: usize,
        aggressor_bit: u8,
        victim_cell: usize,
        victim_bit: u8,
        edge: Edge,
        forced_value: bool,
    },
    /// Victim bit reads as `forced_value` while the aggressor bit holds
    /// `aggressor_state`.
    CouplingState {
        aggressor_cell: usize,
        aggressor_bit: u8,
        aggressor_state: bool,
        victim_cell: usize,
        victim_bit: u8,
        forced_value: bool,
    },
    /// Both addresses decode to the physical cell of `address_a`.
    AddressAlias { address_a: usize, address_b: usize },
    /// No cell is selected: writes are dropped, reads return a constant.
    AddressVoid { address: usize, read_default: bool },
}

impl FaultDescriptor {
    /// Validates indices against a geometry.
    pub fn validate(&self, cfg: &MemoryConfig) -> Result<(), MemoryError> {
        let cell_ok = |cell: usize| {
            if cell < cfg.n {
                Ok(())
            } else {
                Err(MemoryError::CellOutOfRange { cell, n: cfg.n })
            }
        };
        let bit_ok = |bit: u8| {
            if bit < cfg.m {
                Ok(())
            } else {
                Err(MemoryError::BitOutOfRange { bit, m: cfg.m })
            }
        };
        match *self {
            FaultDescriptor::StuckAt { cell, bit, .. }
            | FaultDescriptor::Transition { cell, bit, .. } => {
                cell_ok(cell)?;
                bit_ok(bit)
            }
            FaultDescriptor::CouplingInversion {
                aggressor_cell,
                aggressor_bit,
                victim_cell,
                victim_bit,
                ..
            }
            | FaultDescriptor::CouplingIdempotent {
                aggressor_cell,
                aggressor_bit,
                victim_cell,
                victim_bit,
                ..
            }
            | FaultDescriptor::CouplingState {
                aggressor_cell,
                aggressor_bit,
                victim_cell,
                victim_bit,
                ..
            } => {
                cell_ok(aggressor_cell)?;
                cell_ok(victim_cell)?;
                bit_ok(aggressor_bit)?;
                bit_ok(victim_bit)?;
                if aggressor_cell == victim_cell && aggressor_bit == victim_bit {
                    return Err(MemoryError::SelfCoupling);
                }
                Ok(())
            }
            FaultDescriptor::AddressAlias {
                address_a,
                address_b,
            } => {
                cell_ok(address_a)?;
                cell_ok(address_b)?;
                if address_a == address_b {
                    return Err(MemoryError::DegenerateAlias(address_a));
                }
                Ok(())
            }
            FaultDescriptor::AddressVoid { address, .. } => cell_ok(address),
        }
    }
}

impl std::fmt::Display for FaultDescriptor {
    /// Canonical descriptor string, also accepted by `FromStr`:
    /// `sa:c3:b0:v1`, `tf:c3:b0:up`, `cfin:a1.0:v4.0:rise`,
    /// `cfid:a1.0:v4.0:rise:w1`, `cfst:a1.0=1:v4.0:w0`, `aa:a2:b5`,
    /// `av:c3:r0`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let b = |v: bool| u8::from(v);
        match *self {
            FaultDescriptor::StuckAt { cell, bit, value } => {
                write!(f, "sa:c{cell}:b{bit}:v{}", b(value))
            }
            FaultDescriptor::Transition {
                cell,
                bit,
                direction,
            } => {
                let dir = match direction {
                    TransitionDir::UpBlocked => "up",
                    TransitionDir::DownBlocked => "down",
                };
                write!(f, "tf:c{cell}:b{bit}:{dir}")
            }
            FaultDescriptor::CouplingInversion {
                aggressor_cell,
                aggressor_bit,
                victim_cell,
                victim_bit,
                edge,
            } => write!(
                f,
                "cfin:a{aggressor_cell}.{aggressor_bit}:v{victim_cell}.{victim_bit}:{}",
                edge_name(edge)
            ),
            FaultDescriptor::CouplingIdempotent {
                aggressor_cell,
                aggressor_bit,
                victim_cell,
                victim_bit,
                edge,
                forced_value,
            } => write!(
                f,
                "cfid:a{aggressor_cell}.{aggressor_bit}:v{victim_cell}.{victim_bit}:{}:w{}",
                edge_name(edge),
                b(forced_value)
            ),
            FaultDescriptor::CouplingState {
                aggressor_cell,
                aggressor_bit,
                aggressor_state,
                victim_cell,
                victim_bit,
                forced_value,
            } => write!(
                f,
                "cfst:a{aggressor_cell}.{aggressor_bit}={}:v{victim_cell}.{victim_bit}:w{}",
                b(aggressor_state),
                b(forced_value)
            ),
            FaultDescriptor::AddressAlias {
                address_a,
                address_b,
            } => write!(f, "aa:a{address_a}:b{address_b}"),
            FaultDescriptor::AddressVoid {
                address,
                read_default,
            } => write!(f, "av:c{address}:r{}", b(read_default)),
        }
    }
}

fn edge_name(edge: Edge) -> &'static str {
    match edge {
        Edge::Rise => "rise",
        Edge::Fall => "fall",
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad fault descriptor {text:?}: {reason}")]
pub struct FaultParseError {
    pub text: String,
    pub reason: String,
}

impl std::str::FromStr for FaultDescriptor {
    type Err = FaultParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| FaultParseError {
            text: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let tag = |part: &str, prefix: &str| -> Result<usize, FaultParseError> {
            part.strip_prefix(prefix)
                .and_then(|rest| rest.parse().ok())
                .ok_or_else(|| fail(&format!("expected `{prefix}<number>`, got `{part}`")))
        };
        let bit01 = |part: &str, prefix: &str| -> Result<bool, FaultParseError> {
            match part.strip_prefix(prefix) {
                Some("0") => Ok(false),
                Some("1") => Ok(true),
                _ => Err(fail(&format!(
                    "expected `{prefix}0` or `{prefix}1`, got `{part}`"
                ))),
            }
        };
        // `a<cell>.<bit>` or `v<cell>.<bit>`, optionally with `=<0|1>`.
        let site =
            |part: &str, prefix: &str| -> Result<(usize, u8, Option<bool>), FaultParseError> {
                let rest = part.strip_prefix(prefix).ok_or_else(|| {
                    fail(&format!("expected `{prefix}<cell>.<bit>`, got `{part}`"))
                })?;
                let (addr_part, state) = match rest.split_once('=') {
                    Some((lhs, "0")) => (lhs, Some(false)),
                    Some((lhs, "1")) => (lhs, Some(true)),
                    Some(_) => return Err(fail("state suffix must be =0 or =1")),
                    None => (rest, None),
                };
                let (cell, bit) = addr_part
                    .split_once('.')
                    .ok_or_else(|| fail("expected `<cell>.<bit>`"))?;
                Ok((
                    cell.parse().map_err(|_| fail("bad cell index"))?,
                    bit.parse().map_err(|_| fail("bad bit index"))?,
                    state,
                ))
            };
        let edge = |part: &str| -> Result<Edge, FaultParseError> {
            match part {
                "rise" => Ok(Edge::Rise),
                "fall" => Ok(Edge::Fall),
                _ => Err(fail("expected `rise` or `fall`")),
            }
        };
        match parts.as_slice() {
            ["sa", c, b, v] => Ok(FaultDescriptor::StuckAt {
                cell: tag(c, "c")?,
                bit: tag(b, "b")? as u8,
                value: bit01(v, "v")?,
            }),
            ["tf", c, b, dir] => Ok(FaultDescriptor::Transition {
                cell: tag(c, "c")?,
                bit: tag(b, "b")? as u8,
                direction: match *dir {
                    "up" => TransitionDir::UpBlocked,
                    "down" => TransitionDir::DownBlocked,
                    _ => return Err(fail("expected `up` or `down`")),
                },
            }),
            ["cfin", a, v, e] => {
                let (ac, ab, _) = site(a, "a")?;
                let (vc, vb, _) = site(v, "v")?;
                Ok(FaultDescriptor::CouplingInversion {
                    aggressor_cell: ac,
                    aggressor_bit: ab,
                    victim_cell: vc,
                    victim_bit: vb,
                    edge: edge(e)?,
                })
            }
            ["cfid", a, v, e, w] => {
                let (ac, ab, _) = site(a, "a")?;
                let (vc, vb, _) = site(v, "v")?;
                Ok(FaultDescriptor::CouplingIdempotent {
                    aggressor_cell: ac,
                    aggressor_bit: ab,
                    victim_cell: vc,
                    victim_bit: vb,
                    edge: edge(e)?,
                    forced_value: bit01(w, "w")?,
                })
            }
            ["cfst", a, v, w] => {
                let (ac, ab, state) = site(a, "a")?;
                let state = state.ok_or_else(|| fail("aggressor needs `=<0|1>` state"))?;
                let (vc, vb, _) = site(v, "v")?;
                Ok(FaultDescriptor::CouplingState {
                    aggressor_cell: ac,
                    aggressor_bit: ab,
                    aggressor_state: state,
                    victim_cell: vc,
                    victim_bit: vb,
                    forced_value: bit01(w, "w")?,
                })
            }
            ["aa", a, b] => Ok(FaultDescriptor::AddressAlias {
                address_a: tag(a, "a")?,
                address_b: tag(b, "b")?,
            }),
            ["av", c, r] => Ok(FaultDescriptor::AddressVoid {
                address: tag(c, "c")?,
                read_default: bit01(r, "r")?,
            }),
            _ => Err(fail("unknown fault class or wrong field count")),
        }
    }
}

/// Operation accounting. A dual-port simultaneous pair costs one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub reads: u64,
    pub writes: u64,
    pub cycles: u64,
}

impl OpStats {
    /// Counts accumulated since an earlier snapshot.
    pub fn since(&self, earlier: &OpStats) -> OpStats {
        OpStats {
            reads: self.reads - earlier.reads,
            writes: self.writes - earlier.writes,
            cycles: self.cycles - earlier.cycles,
        }
    }

    pub fn accumulate(&mut self, other: &OpStats) {
        self.reads += other.reads;
        self.writes += other.writes;
        self.cycles += other.cycles;
    }
}

/// One port access, for the dual-port simultaneous cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read { addr: usize },
    Write { addr: usize, value: GfElement },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("memory needs at least {MIN_CELLS} cells, got {0}")]
    TooFewCells(usize),
    #[error("cell width must be between 1 and 16 bits, got {0}")]
    BadCellWidth(u8),
    #[error("port count must be 1 or 2, got {0}")]
    BadPortCount(u8),
    #[error("address {addr} out of range for {n} cells")]
    AddressOutOfRange { addr: usize, n: usize },
    #[error("cell index {cell} out of range for {n} cells")]
    CellOutOfRange { cell: usize, n: usize },
    #[error("bit index {bit} out of range for {m}-bit cells")]
    BitOutOfRange { bit: u8, m: u8 },
    #[error("value {value:#x} does not fit in a {m}-bit cell")]
    ValueOutOfRange { value: u32, m: u8 },
    #[error("port {port} out of range for {ports}-port memory")]
    PortOutOfRange { port: u8, ports: u8 },
    #[error("coupling fault with aggressor equal to victim")]
    SelfCoupling,
    #[error("address alias of {0} onto itself")]
    DegenerateAlias(usize),
    #[error("dual-port cycle requires a 2-port memory")]
    NotDualPort,
    #[error("port conflict: simultaneous writes to address {0}")]
    PortConflict(usize),
}

/// A simulated RAM instance. Single-owner mutable state: one logical thread
/// drives it at a time, and campaigns use one instance per injected fault.
#[derive(Debug, Clone)]
pub struct Memory {
    cfg: MemoryConfig,
    cells: Vec<GfElement>,
    faults: Vec<FaultDescriptor>,
    stats: OpStats,
}

impl Memory {
    /// Fresh memory: all cells zero, no faults, zeroed counters.
    pub fn new(cfg: MemoryConfig) -> Result<Self, MemoryError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cells: vec![0; cfg.n],
            faults: Vec::new(),
            stats: OpStats::default(),
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.cfg
    }

    /// Activates a fault until cleared. Multiple active faults are allowed;
    /// they compose in the documented application order.
    pub fn inject_fault(&mut self, fault: FaultDescriptor) -> Result<(), MemoryError> {
        fault.validate(&self.cfg)?;
        self.faults.push(fault);
        Ok(())
    }

    /// Removes all faults. Stored values already corrupted stay corrupted.
    pub fn clear_faults(&mut self) {
        self.faults.clear();
    }

    pub fn faults(&self) -> &[FaultDescriptor] {
        &self.faults
    }

    pub fn stats(&self) -> OpStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = OpStats::default();
    }

    fn check_addr(&self, addr: usize) -> Result<(), MemoryError> {
        if addr < self.cfg.n {
            Ok(())
        } else {
            Err(MemoryError::AddressOutOfRange {
                addr,
                n: self.cfg.n,
            })
        }
    }

    fn check_port(&self, port: u8) -> Result<(), MemoryError> {
        if port < self.cfg.ports {
            Ok(())
        } else {
            Err(MemoryError::PortOutOfRange {
                port,
                ports: self.cfg.ports,
            })
        }
    }

    fn check_value(&self, value: GfElement) -> Result<(), MemoryError> {
        if (value as u32) < self.cfg.value_limit() {
            Ok(())
        } else {
            Err(MemoryError::ValueOutOfRange {
                value: value as u32,
                m: self.cfg.m,
            })
        }
    }

    /// Counted write through the fault pipeline.
    pub fn write(&mut self, port: u8, addr: usize, value: GfElement) -> Result<(), MemoryError> {
        self.check_port(port)?;
        self.check_addr(addr)?;
        self.check_value(value)?;
        self.stats.writes += 1;
        self.stats.cycles += 1;
        self.apply_write(addr, value);
        Ok(())
    }

    /// Counted read through the fault pipeline.
    pub fn read(&mut self, port: u8, addr: usize) -> Result<GfElement, MemoryError> {
        self.check_port(port)?;
        self.check_addr(addr)?;
        self.stats.reads += 1;
        self.stats.cycles += 1;
        Ok(self.apply_read(addr))
    }

    /// Uncounted read through the fault pipeline, for verdict comparisons
    /// that are not part of the test's charged operations.
    pub fn observe(&self, addr: usize) -> Result<GfElement, MemoryError> {
        self.check_addr(addr)?;
        Ok(self.apply_read(addr))
    }

    /// One dual-port cycle: both accesses are charged a single cycle.
    /// Reads capture pre-write values; simultaneous writes to the same
    /// address are a port conflict. When both ports write distinct
    /// addresses, port 0 applies first.
    pub fn cycle_dual(
        &mut self,
        op0: Access,
        op1: Access,
    ) -> Result<(Option<GfElement>, Option<GfElement>), MemoryError> {
        if self.cfg.ports != 2 {
            return Err(MemoryError::NotDualPort);
        }
        for op in [&op0, &op1] {
            match *op {
                Access::Read { addr } => self.check_addr(addr)?,
                Access::Write { addr, value } => {
                    self.check_addr(addr)?;
                    self.check_value(value)?;
                }
            }
        }
        if let (Access::Write { addr: a, .. }, Access::Write { addr: b, .. }) = (&op0, &op1) {
            if a == b {
                return Err(MemoryError::PortConflict(*a));
            }
        }
        self.stats.cycles += 1;
        let mut results = [None, None];
        for (slot, op) in results.iter_mut().zip([&op0, &op1]) {
            if let Access::Read { addr } = *op {
                self.stats.reads += 1;
                *slot = Some(self.apply_read(addr));
            }
        }
        for op in [&op0, &op1] {
            if let Access::Write { addr, value } = *op {
                self.stats.writes += 1;
                self.apply_write(addr, value);
            }
        }
        Ok((results[0], results[1]))
    }

    /// Test-bench backdoor: raw stored word, bypassing faults and counters.
    pub fn peek(&self, cell: usize) -> GfElement {
        self.cells[cell]
    }

    /// Test-bench backdoor: overwrite the raw stored word, bypassing faults
    /// and counters. Used to plant corruptions mid-run.
    pub fn poke(&mut self, cell: usize, value: GfElement) {
        debug_assert!((value as u32) < self.cfg.value_limit());
        self.cells[cell] = value;
    }

    /// Address decode: aliases remap, voids select no cell.
    fn decode(&self, addr: usize) -> Option<usize> {
        let mut phys = addr;
        for fault in &self.faults {
            match *fault {
                FaultDescriptor::AddressVoid { address, .. } if address == addr => return None,
                FaultDescriptor::AddressAlias {
                    address_a,
                    address_b,
                } if address_b == phys => phys = address_a,
                _ => {}
            }
        }
        Some(phys)
    }

    fn apply_write(&mut self, addr: usize, value: GfElement) {
        let Some(phys) = self.decode(addr) else {
            return; // void: write dropped
        };
        let old = self.cells[phys];
        let mut new = value;
        for fault in &self.faults {
            match *fault {
                FaultDescriptor::StuckAt { cell, bit, value } if cell == phys => {
                    new = set_bit(new, bit, value);
                }
                _ => {}
            }
        }
        for fault in &self.faults {
            match *fault {
                FaultDescriptor::Transition {
                    cell,
                    bit,
                    direction,
                } if cell == phys => {
                    let ob = get_bit(old, bit);
                    let nb = get_bit(new, bit);
                    let blocked = match direction {
                        TransitionDir::UpBlocked => !ob && nb,
                        TransitionDir::DownBlocked => ob && !nb,
                    };
                    if blocked {
                        new = set_bit(new, bit, ob);
                    }
                }
                _ => {}
            }
        }
        self.cells[phys] = new;
        // Coupling triggers fire on the aggressor bit's actual stored
        // transition, after forcing and blocking above.
        for i in 0..self.faults.len() {
            match self.faults[i] {
                FaultDescriptor::CouplingInversion {
                    aggressor_cell,
                    aggressor_bit,
                    victim_cell,
                    victim_bit,
                    edge,
                } if aggressor_cell == phys => {
                    let (ob, nb) = (get_bit(old, aggressor_bit), get_bit(new, aggressor_bit));
                    if edge.matches(ob, nb) {
                        let v = self.cells[victim_cell];
                        self.cells[victim_cell] = set_bit(v, victim_bit, !get_bit(v, victim_bit));
                    }
                }
                FaultDescriptor::CouplingIdempotent {
                    aggressor_cell,
                    aggressor_bit,
                    victim_cell,
                    victim_bit,
                    edge,
                    forced_value,
                } if aggressor_cell == phys => {
                    let (ob, nb) = (get_bit(old, aggressor_bit), get_bit(new, aggressor_bit));
                    if edge.matches(ob, nb) {
                        let v = self.cells[victim_cell];
                        self.cells[victim_cell] = set_bit(v, victim_bit, forced_value);
                    }
                }
                _ => {}
            }
        }
    }

    fn apply_read(&self, addr: usize) -> GfElement {
        let Some(phys) = self.decode(addr) else {
            // void: constant bus value replicated across the word
            let fill = self.faults.iter().find_map(|f| match *f {
                FaultDescriptor::AddressVoid {
                    address,
                    read_default,
                } if address == addr => Some(read_default),
                _ => None,
            });
            return match fill {
                Some(true) => (self.cfg.value_limit() - 1) as GfElement,
                _ => 0,
            };
        };
        let mut value = self.cells[phys];
        for fault in &self.faults {
            match *fault {
                FaultDescriptor::StuckAt {
                    cell,
                    bit,
                    value: v,
                } if cell == phys => {
                    value = set_bit(value, bit, v);
                }
                FaultDescriptor::CouplingState {
                    aggressor_cell,
                    aggressor_bit,
                    aggressor_state,
                    victim_cell,
                    victim_bit,
                    forced_value,
                } if victim_cell == phys
                    && get_bit(self.cells[aggressor_cell], aggressor_bit) == aggressor_state =>
                {
                    value = set_bit(value, victim_bit, forced_value);
                }
                _ => {}
            }
        }
        value
    }
}

fn get_bit(word: GfElement, bit: u8) -> bool {
    (word >> bit) & 1 != 0
}

fn set_bit(word: GfElement, bit: u8, value: bool) -> GfElement {
    if value {
        word | (1 << bit)
    } else {
        word & !(1 << bit)
    }
}
