//! Workbench for pseudo-ring testing (PRT) of random-access memories.
//!
//! Pseudo-ring testing walks a virtual linear feedback shift register through
//! the cells of the memory under test: the first `k` cells are seeded, then
//! each sub-iteration reads `k` consecutive cells along a trajectory and
//! writes their tap-weighted GF(2^m) sum into the next cell. A fault-free
//! memory reproduces the LFSR sequence exactly, so the final `k` cells can be
//! checked against a state predicted a priori (or against the seed itself
//! when the array length closes the ring).
//!
//! The crate provides the pieces needed to study that scheme at desk scale:
//!
//! - [`galois`]: arithmetic in GF(2) polynomial rings and GF(2^m) extensions;
//! - [`xornet`]: XOR-only networks multiplying by a field constant;
//! - [`lfsr`]: the k-stage word-oriented LFSR model and its period/final-state
//!   predictions;
//! - [`memory`]: a simulated single- or dual-port RAM with injectable
//!   functional faults and operation accounting;
//! - [`march`]: a parser, formatter and executor for March-test notation,
//!   used as the baseline test family;
//! - [`pi`]: the pseudo-ring test engine itself;
//! - [`campaign`]: single-fault coverage campaigns and report generation;
//! - [`config`]: the JSON configuration document consumed by the CLI.

pub mod campaign;
pub mod config;
pub mod galois;
pub mod lfsr;
pub mod march;
pub mod memory;
pub mod pi;
pub mod rng;
pub mod xornet;

pub use galois::{FieldSpec, GfElement};
pub use lfsr::{LfsrDef, LfsrState};
pub use march::MarchTest;
pub use memory::{FaultDescriptor, Memory, MemoryConfig, OpStats};
pub use pi::{IterationResult, PiTestConfig, ScheduleVerdict, Trajectory};
