//! Single-fault coverage campaigns.
//!
//! A campaign enumerates a fault universe, then for every descriptor builds
//! a fresh memory, injects that one fault, runs the test under evaluation
//! and records whether it detected the fault. Faults are independent, so
//! the runner can fan out across worker threads (one memory per fault);
//! serial and parallel execution produce identical reports.
//!
//! Reports serialize to JSON (full rows plus per-class summaries) and CSV
//! (rows only). Identical configuration and seeds give byte-identical JSON
//! except for the `timing` metadata field, which carries the timestamp and
//! wall time and is excluded from determinism comparisons.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::march::{execute_march, MarchError, MarchTest};
use crate::memory::{
    Edge, FaultDescriptor, Memory, MemoryConfig, MemoryError, OpStats, TransitionDir,
};
use crate::pi::{run_prt_schedule, PiError, PiTestConfig};
use crate::rng::SplitMix64;

/// Coupling-pair window applied by default above this cell count.
pub const FULL_PAIR_LIMIT: usize = 64;
/// Default `d_max` for memories above [`FULL_PAIR_LIMIT`].
pub const DEFAULT_COUPLING_WINDOW: usize = 8;

/// The injectable fault classes, in canonical enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultClass {
    StuckAt,
    Transition,
    CouplingInversion,
    CouplingIdempotent,
    CouplingState,
    AddressAlias,
    AddressVoid,
}

impl FaultClass {
    pub const ALL: [FaultClass; 7] = [
        FaultClass::StuckAt,
        FaultClass::Transition,
        FaultClass::CouplingInversion,
        FaultClass::CouplingIdempotent,
        FaultClass::CouplingState,
        FaultClass::AddressAlias,
        FaultClass::AddressVoid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FaultClass::StuckAt => "stuck_at",
            FaultClass::Transition => "transition",
            FaultClass::CouplingInversion => "coupling_inversion",
            FaultClass::CouplingIdempotent => "coupling_idempotent",
            FaultClass::CouplingState => "coupling_state",
            FaultClass::AddressAlias => "address_alias",
            FaultClass::AddressVoid => "address_void",
        }
    }

    pub fn of(fault: &FaultDescriptor) -> FaultClass {
        match fault {
            FaultDescriptor::StuckAt { .. } => FaultClass::StuckAt,
            FaultDescriptor::Transition { .. } => FaultClass::Transition,
            FaultDescriptor::CouplingInversion { .. } => FaultClass::CouplingInversion,
            FaultDescriptor::CouplingIdempotent { .. } => FaultClass::CouplingIdempotent,
            FaultDescriptor::CouplingState { .. } => FaultClass::CouplingState,
            FaultDescriptor::AddressAlias { .. } => FaultClass::AddressAlias,
            FaultDescriptor::AddressVoid { .. } => FaultClass::AddressVoid,
        }
    }
}

impl std::fmt::Display for FaultClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FaultClass {
    type Err = CampaignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CampaignError::UnknownClass(s.to_string()))
    }
}

/// The set of faults a campaign evaluates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultUniverse {
    pub geometry: MemoryConfig,
    /// Classes to enumerate, stored sorted and deduplicated.
    pub classes: Vec<FaultClass>,
    /// Maximum |aggressor - victim| distance for coupling pairs. `None`
    /// means all pairs up to [`FULL_PAIR_LIMIT`] cells, windowed above.
    pub d_max: Option<usize>,
}

impl FaultUniverse {
    pub fn new(
        geometry: MemoryConfig,
        classes: &[FaultClass],
        d_max: Option<usize>,
    ) -> Result<Self, CampaignError> {
        if classes.is_empty() {
            return Err(CampaignError::EmptyClasses);
        }
        geometry.validate()?;
        let mut classes = classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        Ok(Self {
            geometry,
            classes,
            d_max,
        })
    }

    fn coupling_window(&self) -> usize {
        self.d_max.unwrap_or(if self.geometry.n <= FULL_PAIR_LIMIT {
            self.geometry.n
        } else {
            DEFAULT_COUPLING_WINDOW
        })
    }

    /// Ordered (aggressor, victim) cell pairs within the coupling window.
    fn coupling_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.geometry.n;
        let window = self.coupling_window();
        let mut pairs = Vec::new();
        for a in 0..n {
            for v in 0..n {
                if a != v && a.abs_diff(v) <= window {
                    pairs.push((a, v));
                }
            }
        }
        pairs
    }

    /// Deterministic, duplicate-free enumeration: classes in canonical
    /// order, indices ascending within each class.
    pub fn enumerate(&self) -> Vec<FaultDescriptor> {
        let n = self.geometry.n;
        let m = self.geometry.m;
        let mut faults = Vec::new();
        for class in &self.classes {
            match class {
                FaultClass::StuckAt => {
                    for cell in 0..n {
                        for bit in 0..m {
                            for value in [false, true] {
                                faults.push(FaultDescriptor::StuckAt { cell, bit, value });
                            }
                        }
                    }
                }
                FaultClass::Transition => {
                    for cell in 0..n {
                        for bit in 0..m {
                            for direction in [TransitionDir::UpBlocked, TransitionDir::DownBlocked]
                            {
                                faults.push(FaultDescriptor::Transition {
                                    cell,
                                    bit,
                                    direction,
                                });
                            }
                        }
                    }
                }
                FaultClass::CouplingInversion => {
                    for (a, v) in self.coupling_pairs() {
                        for ab in 0..m {
                            for vb in 0..m {
                                for edge in [Edge::Rise, Edge::Fall] {
                                    faults.push(FaultDescriptor::CouplingInversion {
                                        aggressor_cell: a,
                                        aggressor_bit: ab,
                                        victim_cell: v,
                                        victim_bit: vb,
                                        edge,
                                    });
                                }
                            }
                        }
                    }
                }
                FaultClass::CouplingIdempotent => {
                    for (a, v) in self.coupling_pairs() {
                        for ab in 0..m {
                            for vb in 0..m {
                                for edge in [Edge::Rise, Edge::Fall] {
                                    for forced_value in [false, true] {
                                        faults.push(FaultDescriptor::CouplingIdempotent {
                                            aggressor_cell: a,
                                            aggressor_bit: ab,
                                            victim_cell: v,
                                            victim_bit: vb,
                                            edge,
                                            forced_value,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
                FaultClass::CouplingState => {
                    for (a, v) in self.coupling_pairs() {
                        for ab in 0..m {
                            for vb in 0..m {
                                for aggressor_state in [false, true] {
                                    for forced_value in [false, true] {
                                        faults.push(FaultDescriptor::CouplingState {
                                            aggressor_cell: a,
                                            aggressor_bit: ab,
                                            aggressor_state,
                                            victim_cell: v,
                                            victim_bit: vb,
                                            forced_value,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
                FaultClass::AddressAlias => {
                    for a in 0..n {
                        for b in 0..n {
                            if a != b {
                                faults.push(FaultDescriptor::AddressAlias {
                                    address_a: a,
                                    address_b: b,
                                });
                            }
                        }
                    }
                }
                FaultClass::AddressVoid => {
                    for address in 0..n {
                        for read_default in [false, true] {
                            faults.push(FaultDescriptor::AddressVoid {
                                address,
                                read_default,
                            });
                        }
                    }
                }
            }
        }
        faults
    }

    /// Stable digest of geometry, classes, limits and the enumerated
    /// descriptor list; two reports compare only when these match.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(self).expect("universe serializes"));
        for fault in self.enumerate() {
            hasher.update(fault.to_string());
            hasher.update(b"\n");
        }
        hex_digest(hasher)
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// The test a campaign evaluates: a March test or a pseudo-ring schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum TestPlan {
    March(MarchTest),
    Prt(Vec<PiTestConfig>),
}

impl TestPlan {
    fn kind(&self) -> &'static str {
        match self {
            TestPlan::March(_) => "march",
            TestPlan::Prt(_) => "prt",
        }
    }

    /// Canonical serialized form, used for the report's config hash.
    fn describe(&self) -> serde_json::Value {
        match self {
            TestPlan::March(test) => serde_json::json!({ "march": test.to_string() }),
            TestPlan::Prt(schedule) => {
                serde_json::json!({ "prt": serde_json::to_value(schedule).unwrap() })
            }
        }
    }

    /// Runs the plan on a memory. `Ok(None)` means pass; a detection carries
    /// the 0-based March element or schedule iteration index.
    fn run(&self, mem: &mut Memory) -> Result<Option<usize>, CampaignError> {
        match self {
            TestPlan::March(test) => {
                let verdict = execute_march(test, mem)?;
                Ok(verdict.failure().map(|f| f.element))
            }
            TestPlan::Prt(schedule) => {
                if schedule.is_empty() {
                    return Err(PiError::EmptySchedule.into());
                }
                let verdict = run_prt_schedule(schedule, mem)?;
                Ok(verdict.first_failure)
            }
        }
    }
}

/// One evaluated fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultRow {
    /// Sequential id in enumeration order, `f000000` upward.
    pub fault_id: String,
    pub class: FaultClass,
    /// Canonical descriptor string (parseable by `FaultDescriptor::from_str`).
    pub params: String,
    pub detected: bool,
    /// 0-based March element or schedule iteration that first detected it.
    pub detected_by: Option<usize>,
}

/// Per-class detection summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: FaultClass,
    pub total: usize,
    pub detected: usize,
    /// Exactly `detected / total` (1.0 for an empty class).
    pub coverage: f64,
}

/// Volatile metadata, excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub unix_ms: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// `march` or `prt`.
    pub kind: String,
    /// Canonical text of the test under evaluation.
    pub test: serde_json::Value,
    /// Digest of test plus universe; identical inputs hash identically.
    pub config_hash: String,
    pub universe: FaultUniverse,
    pub universe_fingerprint: String,
    /// Charged operations of one fault-free run of the test.
    pub reference_stats: OpStats,
    pub timing: Timing,
}

/// Full campaign outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub metadata: ReportMetadata,
    pub classes: Vec<ClassSummary>,
    pub rows: Vec<FaultRow>,
}

impl CoverageReport {
    /// Overall detected/total ratio across every enumerated fault.
    pub fn overall_coverage(&self) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        self.rows.iter().filter(|r| r.detected).count() as f64 / self.rows.len() as f64
    }

    pub fn class_summary(&self, class: FaultClass) -> Option<&ClassSummary> {
        self.classes.iter().find(|s| s.class == class)
    }

    /// Pretty JSON document, trailing newline included.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        Ok(serde_json::from_str(text)?)
    }

    /// CSV rows only, fixed column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fault_id,class,params,detected,detected_by\n");
        for row in &self.rows {
            let by = row.detected_by.map(|i| i.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.fault_id, row.class, row.params, row.detected, by
            ));
        }
        out
    }

    /// The report with volatile timing removed, for determinism checks.
    pub fn deterministic_content(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(meta) = value.get_mut("metadata") {
            meta.as_object_mut().unwrap().remove("timing");
        }
        value
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("fault universe has no classes")]
    EmptyClasses,
    #[error("unknown fault class {0:?}")]
    UnknownClass(String),
    #[error("test fails on fault-free memory: {0}")]
    FailsFaultFree(String),
    #[error("reports cover different universes and cannot be compared")]
    UniverseMismatch,
    #[error(transparent)]
    March(#[from] MarchError),
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("report (de)serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Runs a single-fault campaign, parallel across faults by default.
pub fn run_campaign(
    plan: &TestPlan,
    universe: &FaultUniverse,
) -> Result<CoverageReport, CampaignError> {
    run_campaign_with(plan, universe, true)
}

/// Campaign runner with explicit serial/parallel choice. Both modes produce
/// identical reports (modulo the timing field).
pub fn run_campaign_with(
    plan: &TestPlan,
    universe: &FaultUniverse,
    parallel: bool,
) -> Result<CoverageReport, CampaignError> {
    let started = Instant::now();
    let unix_ms = now_unix_ms();

    // Fault-free reference run: validates the plan against the geometry and
    // pins the charged operation counts.
    let mut reference = Memory::new(universe.geometry)?;
    match plan.run(&mut reference)? {
        None => {}
        Some(at) => {
            return Err(CampaignError::FailsFaultFree(format!(
                "detection reported at index {at} with no fault injected"
            )))
        }
    }
    let reference_stats = reference.stats();

    let faults = universe.enumerate();
    let evaluate = |(idx, fault): (usize, &FaultDescriptor)| -> Result<FaultRow, CampaignError> {
        let mut mem = Memory::new(universe.geometry)?;
        mem.inject_fault(*fault)?;
        let detected_by = plan.run(&mut mem)?;
        Ok(FaultRow {
            fault_id: format!("f{idx:06}"),
            class: FaultClass::of(fault),
            params: fault.to_string(),
            detected: detected_by.is_some(),
            detected_by,
        })
    };
    let rows: Vec<FaultRow> = if parallel {
        faults
            .par_iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_, _>>()?
    } else {
        faults
            .iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_, _>>()?
    };

    let classes = universe
        .classes
        .iter()
        .map(|&class| {
            let total = rows.iter().filter(|r| r.class == class).count();
            let detected = rows
                .iter()
                .filter(|r| r.class == class && r.detected)
                .count();
            ClassSummary {
                class,
                total,
                detected,
                coverage: if total == 0 {
                    1.0
                } else {
                    detected as f64 / total as f64
                },
            }
        })
        .collect();

    let mut hasher = Sha256::new();
    hasher.update(
        serde_json::to_string(&serde_json::json!({
            "test": plan.describe(),
            "universe": universe,
        }))
        .expect("hash input serializes"),
    );

    Ok(CoverageReport {
        metadata: ReportMetadata {
            kind: plan.kind().to_string(),
            test: plan.describe(),
            config_hash: hex_digest(hasher),
            universe: universe.clone(),
            universe_fingerprint: universe.fingerprint(),
            reference_stats,
            timing: Timing {
                unix_ms,
                wall_ms: started.elapsed().as_millis() as u64,
            },
        },
        classes,
        rows,
    })
}

/// Per-class delta between two reports over the same universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDelta {
    pub class: FaultClass,
    pub total: usize,
    pub detected_a: usize,
    pub detected_b: usize,
    /// `detected_b - detected_a`.
    pub delta: i64,
}

/// Outcome of comparing two reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDiff {
    pub classes: Vec<ClassDelta>,
    /// Descriptor strings detected only by report A.
    pub only_a: Vec<String>,
    /// Descriptor strings detected only by report B.
    pub only_b: Vec<String>,
}

impl ReportDiff {
    pub fn is_zero(&self) -> bool {
        self.only_a.is_empty() && self.only_b.is_empty()
    }
}

impl std::fmt::Display for ReportDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<22} {:>8} {:>10} {:>10} {:>7}",
            "class", "total", "detected A", "detected B", "delta"
        )?;
        for d in &self.classes {
            writeln!(
                f,
                "{:<22} {:>8} {:>10} {:>10} {:>+7}",
                d.class.name(),
                d.total,
                d.detected_a,
                d.detected_b,
                d.delta
            )?;
        }
        writeln!(f, "detected only by A: {}", self.only_a.len())?;
        for p in &self.only_a {
            writeln!(f, "  {p}")?;
        }
        writeln!(f, "detected only by B: {}", self.only_b.len())?;
        for p in &self.only_b {
            writeln!(f, "  {p}")?;
        }
        Ok(())
    }
}

/// Diffs two reports over the same universe: per-class deltas plus the
/// faults caught by exactly one of the tests.
pub fn compare_reports(
    a: &CoverageReport,
    b: &CoverageReport,
) -> Result<ReportDiff, CampaignError> {
    if a.metadata.universe_fingerprint != b.metadata.universe_fingerprint
        || a.rows.len() != b.rows.len()
    {
        return Err(CampaignError::UniverseMismatch);
    }
    let mut classes = Vec::with_capacity(a.classes.len());
    for sa in &a.classes {
        // A matching fingerprint implies matching classes unless a report
        // file was edited by hand; treat that as a mismatch, not a panic.
        let sb = b
            .class_summary(sa.class)
            .ok_or(CampaignError::UniverseMismatch)?;
        classes.push(ClassDelta {
            class: sa.class,
            total: sa.total,
            detected_a: sa.detected,
            detected_b: sb.detected,
            delta: sb.detected as i64 - sa.detected as i64,
        });
    }
    let mut only_a = Vec::new();
    let mut only_b = Vec::new();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        if ra.params != rb.params {
            return Err(CampaignError::UniverseMismatch);
        }
        match (ra.detected, rb.detected) {
            (true, false) => only_a.push(ra.params.clone()),
            (false, true) => only_b.push(rb.params.clone()),
            _ => {}
        }
    }
    Ok(ReportDiff {
        classes,
        only_a,
        only_b,
    })
}

/// Outcome of a background search (see [`search_tdb`]).
#[derive(Debug, Clone)]
pub struct TdbSearchOutcome {
    /// Seed states of the best schedule found, one per iteration.
    pub inits: Vec<Vec<crate::galois::GfElement>>,
    pub coverage: f64,
    pub report: CoverageReport,
    /// Trials that failed validation (e.g. ring misalignment) and were skipped.
    pub skipped_trials: u64,
}

/// Random search for seed states maximizing campaign coverage.
///
/// Word-oriented seed values have no closed-form choice, so this samples
/// `trials` random schedules of `iterations` nonzero seeds for the base
/// iteration config and keeps the best coverage. Deterministic per seed;
/// ties keep the earliest trial.
pub fn search_tdb(
    base: &PiTestConfig,
    universe: &FaultUniverse,
    iterations: usize,
    trials: u64,
    seed: u64,
) -> Result<TdbSearchOutcome, CampaignError> {
    let mut rng = SplitMix64::new(seed);
    let k = base.stage_count();
    let order = base.field.order() as u64;
    let mut best: Option<TdbSearchOutcome> = None;
    let mut skipped = 0u64;
    for _ in 0..trials {
        let inits: Vec<Vec<crate::galois::GfElement>> = (0..iterations)
            .map(|_| loop {
                let stages: Vec<crate::galois::GfElement> = (0..k)
                    .map(|_| rng.next_below(order) as crate::galois::GfElement)
                    .collect();
                if stages.iter().any(|&s| s != 0) {
                    break stages;
                }
            })
            .collect();
        let schedule: Vec<PiTestConfig> = inits
            .iter()
            .map(|init| PiTestConfig {
                init: crate::lfsr::LfsrState::new(init.clone()),
                ..base.clone()
            })
            .collect();
        let report = match run_campaign(&TestPlan::Prt(schedule), universe) {
            Ok(report) => report,
            Err(CampaignError::Pi(_)) => {
                skipped += 1;
                continue;
            }
            Err(other) => return Err(other),
        };
        let coverage = report.overall_coverage();
        let better = best.as_ref().is_none_or(|b| coverage > b.coverage);
        if better {
            best = Some(TdbSearchOutcome {
                inits,
                coverage,
                report,
                skipped_trials: 0,
            });
        }
    }
    match best {
        Some(mut outcome) => {
            outcome.skipped_trials = skipped;
            Ok(outcome)
        }
        None => Err(CampaignError::FailsFaultFree(
            "every search trial failed validation".to_string(),
        )),
    }
}
