//! The pseudo-ring test engine.
//!
//! One iteration seeds the first `k` cells of a trajectory with the register
//! initial state, then walks the array: each sub-iteration reads the `k`
//! cells of the sliding window and writes their tap-weighted field sum into
//! the next cell, regenerating the register sequence inside the memory and
//! leaving a fresh test data background behind. At the end the last `k`
//! cells are read back as the final state `Fin` and compared against either
//! the a-priori prediction (`OracleCompare`) or, when the walk length closes
//! the ring, the initial state itself (`RingCompare`).
//!
//! Word-oriented memories can run a single GF(2^m) automaton across whole
//! words, or `m` independent per-bit lane automatons (binary taps), with
//! identical or per-lane randomized seeds, to expose intra-word faults.
//!
//! Charged operation counts are exact: a single-port iteration costs
//! `k + (k+1)(n-k)` operations and the dual-port variant `k + 2(n-k)`
//! cycles, because the two window reads of each sub-iteration share one
//! cycle. The final verdict reads are not charged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{FieldSpec, GfElement};
use crate::lfsr::{LfsrDef, LfsrError, LfsrState};
use crate::memory::{Access, Memory, MemoryError, OpStats};
use crate::rng::SplitMix64;

/// Address order of the walk, realized as a permutation of `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    Ascending,
    Descending,
    Random { seed: u64 },
}

impl Trajectory {
    /// The concrete address permutation for an `n`-cell memory.
    pub fn permutation(&self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        match *self {
            Trajectory::Ascending => {}
            Trajectory::Descending => order.reverse(),
            Trajectory::Random { seed } => SplitMix64::new(seed).shuffle(&mut order),
        }
        order
    }
}

/// How the final state is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Compare against the register prediction for `n` cells.
    OracleCompare,
    /// Compare against the initial state; valid when `(n - k)` is a
    /// multiple of the register period.
    RingCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortMode {
    SinglePort,
    DualPort,
}

/// Intra-word organization for word-oriented memories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneMode {
    /// One GF(2^m) automaton over whole words.
    WholeWord,
    /// `m` identical per-bit GF(2) automatons (binary taps and seeds).
    ParallelLanes,
    /// `m` per-bit automatons with independent seeded-random nonzero seeds.
    RandomLanes { seed: u64 },
}

/// Full description of one pseudo-ring iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiTestConfig {
    pub field: FieldSpec,
    pub lfsr: LfsrDef,
    /// The `k` seed values written to the first trajectory cells. Ignored by
    /// `RandomLanes`, which draws per-lane seeds instead.
    pub init: LfsrState,
    pub trajectory: Trajectory,
    pub compare: CompareMode,
    pub port_mode: PortMode,
    pub lane_mode: LaneMode,
}

impl PiTestConfig {
    /// Convenience constructor for the common whole-word single-port case.
    pub fn new(
        field: FieldSpec,
        lfsr: LfsrDef,
        init: LfsrState,
        trajectory: Trajectory,
        compare: CompareMode,
    ) -> Self {
        Self {
            field,
            lfsr,
            init,
            trajectory,
            compare,
            port_mode: PortMode::SinglePort,
            lane_mode: LaneMode::WholeWord,
        }
    }

    pub fn stage_count(&self) -> usize {
        self.lfsr.stage_count()
    }
}

/// Seed and taps of one per-bit lane automaton (always over GF(2)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanePlan {
    pub lane: u8,
    pub init: Vec<GfElement>,
    pub taps: Vec<GfElement>,
}

/// Verdict of one lane of a laned iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LaneVerdict {
    pub lane: u8,
    pub fin: Vec<GfElement>,
    pub fin_expected: Vec<GfElement>,
    pub pass: bool,
}

/// Outcome of one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterationResult {
    /// Observed final state: the last `k` trajectory cells.
    pub fin: LfsrState,
    /// Predicted final state (or the seed, in ring mode).
    pub fin_expected: LfsrState,
    pub pass: bool,
    /// Operations charged to this iteration (verdict reads excluded).
    pub stats: OpStats,
    /// Per-lane verdicts when running laned.
    pub lanes: Option<Vec<LaneVerdict>>,
}

/// Outcome of a schedule of iterations run back to back without resetting
/// the memory; each iteration rewrites every cell, supplying the next
/// test data background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleVerdict {
    pub pass: bool,
    /// Index of the first failing iteration, 0-based.
    pub first_failure: Option<usize>,
    pub iterations: Vec<IterationResult>,
    /// Aggregate charged operations.
    pub stats: OpStats,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PiError {
    #[error("field width {field} does not match memory cell width {mem}")]
    FieldWidthMismatch { field: u8, mem: u8 },
    #[error("seed state has {got} stages, register has {want}")]
    InitLength { got: usize, want: usize },
    #[error("register stage count {k} must be below the cell count {n}")]
    StageCount { k: usize, n: usize },
    #[error("this engine entry point handles {expected:?} configs only")]
    WrongPortMode { expected: PortMode },
    #[error("dual-port scheduling is defined for 2-stage registers, got {0}")]
    UnsupportedDualStageCount(usize),
    #[error("lane modes need a word-oriented memory (m > 1)")]
    LanedBitMemory,
    #[error("whole-word configs have no lanes to plan")]
    NotLaned,
    #[error("lane modes need binary taps (every tap 0 or 1)")]
    LanedTapsNotBinary,
    #[error("parallel lanes need binary seed values (every stage 0 or 1)")]
    ParallelInitNotBinary,
    #[error(
        "ring compare needs (n - k) divisible by the register period; n={n}, k={k}, period={period}"
    )]
    RingMisaligned { n: usize, k: usize, period: u64 },
    #[error("schedule contains no iterations")]
    EmptySchedule,
    #[error("iteration must be initialized before stepping")]
    NotInitialized,
    #[error("iteration already initialized")]
    AlreadyInitialized,
    #[error("{0} sub-iterations still pending")]
    StepsRemaining(usize),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Lfsr(#[from] LfsrError),
}

/// Plans the per-bit lane automatons of a laned configuration.
///
/// Parallel lanes all share the seed given in the config; random lanes draw
/// independent nonzero seeds from the fixed PRNG, so a given seed always
/// produces the same assignment. All lanes share the (binary) taps and
/// advance on the same address sequence, because reads and writes touch
/// whole words.
pub fn plan_lanes(cfg: &PiTestConfig) -> Result<Vec<LanePlan>, PiError> {
    let m = cfg.field.width();
    if matches!(cfg.lane_mode, LaneMode::WholeWord) {
        return Err(PiError::NotLaned);
    }
    if m == 1 {
        return Err(PiError::LanedBitMemory);
    }
    if !cfg.lfsr.has_binary_taps() {
        return Err(PiError::LanedTapsNotBinary);
    }
    let k = cfg.stage_count();
    let taps: Vec<GfElement> = cfg.lfsr.taps().to_vec();
    match cfg.lane_mode {
        LaneMode::WholeWord => unreachable!(),
        LaneMode::ParallelLanes => {
            if cfg.init.stages().iter().any(|&s| s > 1) {
                return Err(PiError::ParallelInitNotBinary);
            }
            Ok((0..m)
                .map(|lane| LanePlan {
                    lane,
                    init: cfg.init.stages().to_vec(),
                    taps: taps.clone(),
                })
                .collect())
        }
        LaneMode::RandomLanes { seed } => {
            // Each lane owns a stream derived from the master seed and its
            // index, so lane seeds stay decorrelated instead of sampling one
            // shared sequence (which can collapse every lane onto the same
            // value and degenerate into parallel lanes).
            let limit = 1u64.checked_shl(k as u32).map_or(u64::MAX, |v| v - 1);
            Ok((0..m)
                .map(|lane| {
                    let stream = seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(lane as u64 + 1);
                    let drawn = 1 + SplitMix64::new(stream).next_below(limit);
                    LanePlan {
                        lane,
                        init: (0..k).map(|j| ((drawn >> j) & 1) as GfElement).collect(),
                        taps: taps.clone(),
                    }
                })
                .collect())
        }
    }
}

/// A stepwise iteration runner.
///
/// [`pi_iteration`] drives it end to end; the stepping API exists so tests
/// and diagnostics can intervene mid-run (e.g. plant a corruption right
/// after a specific cell is written).
pub struct PiRunner<'m> {
    mem: &'m mut Memory,
    k: usize,
    n: usize,
    perm: Vec<usize>,
    taps: Vec<GfElement>,
    field: FieldSpec,
    laned: bool,
    init_words: Vec<GfElement>,
    expected_words: Vec<GfElement>,
    lane_plans: Option<Vec<LanePlan>>,
    port_mode: PortMode,
    initialized: bool,
    steps_done: usize,
    stats_at_start: OpStats,
}

impl<'m> PiRunner<'m> {
    /// Validates the configuration against the memory geometry and
    /// precomputes the trajectory, seed words and expected final state.
    pub fn new(cfg: &PiTestConfig, mem: &'m mut Memory) -> Result<Self, PiError> {
        let mcfg = *mem.config();
        if cfg.field.width() != mcfg.m {
            return Err(PiError::FieldWidthMismatch {
                field: cfg.field.width(),
                mem: mcfg.m,
            });
        }
        let k = cfg.stage_count();
        let n = mcfg.n;
        if cfg.init.len() != k {
            return Err(PiError::InitLength {
                got: cfg.init.len(),
                want: k,
            });
        }
        if k >= n {
            return Err(PiError::StageCount { k, n });
        }
        for &s in cfg.init.stages() {
            cfg.field.element(s as u32).map_err(LfsrError::from)?;
        }
        if cfg.port_mode == PortMode::DualPort && k != 2 {
            return Err(PiError::UnsupportedDualStageCount(k));
        }

        let laned = !matches!(cfg.lane_mode, LaneMode::WholeWord);
        let (init_words, expected_words, lane_plans) = if laned {
            let plans = plan_lanes(cfg)?;
            let gf2 = FieldSpec::gf2();
            let mut expected_states = Vec::with_capacity(plans.len());
            for plan in &plans {
                let lane_def = LfsrDef::new(gf2, plan.taps.clone())?;
                let lane_init = LfsrState::new(plan.init.clone());
                if cfg.compare == CompareMode::RingCompare {
                    let period = lane_def.period(&lane_init)?;
                    if !((n - k) as u64).is_multiple_of(period) {
                        return Err(PiError::RingMisaligned { n, k, period });
                    }
                }
                let exp = match cfg.compare {
                    CompareMode::OracleCompare => lane_def.expected_final(&lane_init, n)?,
                    CompareMode::RingCompare => lane_init.clone(),
                };
                expected_states.push(exp);
            }
            let pack = |pick: &dyn Fn(usize, usize) -> GfElement| -> Vec<GfElement> {
                (0..k)
                    .map(|idx| {
                        plans
                            .iter()
                            .enumerate()
                            .fold(0, |word, (l, plan)| word | (pick(l, idx) << plan.lane))
                    })
                    .collect()
            };
            let init_words = pack(&|l, idx| plans[l].init[idx]);
            let expected_words = pack(&|l, idx| expected_states[l].stages()[idx]);
            (init_words, expected_words, Some(plans))
        } else {
            if cfg.compare == CompareMode::RingCompare {
                let period = cfg.lfsr.period(&cfg.init)?;
                if !((n - k) as u64).is_multiple_of(period) {
                    return Err(PiError::RingMisaligned { n, k, period });
                }
            }
            let expected = match cfg.compare {
                CompareMode::OracleCompare => cfg.lfsr.expected_final(&cfg.init, n)?,
                CompareMode::RingCompare => cfg.init.clone(),
            };
            (cfg.init.stages().to_vec(), expected.stages().to_vec(), None)
        };

        Ok(Self {
            stats_at_start: mem.stats(),
            mem,
            k,
            n,
            perm: cfg.trajectory.permutation(n),
            taps: cfg.lfsr.taps().to_vec(),
            field: cfg.field,
            laned,
            init_words,
            expected_words,
            lane_plans,
            port_mode: cfg.port_mode,
            initialized: false,
            steps_done: 0,
        })
    }

    /// Writes the seed values into the first `k` trajectory cells
    /// (`k` charged writes).
    pub fn initialize(&mut self) -> Result<(), PiError> {
        if self.initialized {
            return Err(PiError::AlreadyInitialized);
        }
        for idx in 0..self.k {
            self.mem.write(0, self.perm[idx], self.init_words[idx])?;
        }
        self.initialized = true;
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.n - self.k
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// The cell written by sub-iteration `step` (trajectory position
    /// `step + k`).
    pub fn written_cell(&self, step: usize) -> usize {
        self.perm[step + self.k]
    }

    /// Trajectory cell at a position, seed cells included.
    pub fn trajectory_cell(&self, position: usize) -> usize {
        self.perm[position]
    }

    /// The memory under test, e.g. to plant corruptions between steps.
    pub fn memory_mut(&mut self) -> &mut Memory {
        self.mem
    }

    fn feedback(&self, window: &[GfElement]) -> GfElement {
        if self.laned {
            // Shared binary taps: every lane XORs the same selection of
            // window words, which collapses to whole-word XOR.
            self.taps
                .iter()
                .zip(window)
                .fold(0, |acc, (&t, &w)| if t != 0 { acc ^ w } else { acc })
        } else {
            self.taps
                .iter()
                .zip(window)
                .fold(0, |acc, (&t, &w)| acc ^ self.field.mul(t, w))
        }
    }

    /// Runs one sub-iteration; returns `true` while more remain.
    ///
    /// Single-port: `k` reads plus one write, each its own cycle. Dual-port
    /// (k = 2): the two reads share one cycle, the write takes the second.
    pub fn step(&mut self) -> Result<bool, PiError> {
        if !self.initialized {
            return Err(PiError::NotInitialized);
        }
        let i = self.steps_done;
        if i >= self.total_steps() {
            return Ok(false); // walk already complete
        }
        let window: Vec<GfElement> = match self.port_mode {
            PortMode::SinglePort => {
                let mut window = Vec::with_capacity(self.k);
                for j in 0..self.k {
                    window.push(self.mem.read(0, self.perm[i + j])?);
                }
                window
            }
            PortMode::DualPort => {
                let (r0, r1) = self.mem.cycle_dual(
                    Access::Read { addr: self.perm[i] },
                    Access::Read {
                        addr: self.perm[i + 1],
                    },
                )?;
                vec![r0.unwrap(), r1.unwrap()]
            }
        };
        let value = self.feedback(&window);
        self.mem.write(0, self.perm[i + self.k], value)?;
        self.steps_done += 1;
        Ok(self.steps_done < self.total_steps())
    }

    /// Reads the final state (uncharged) and renders the verdict.
    pub fn finish(self) -> Result<IterationResult, PiError> {
        if !self.initialized {
            return Err(PiError::NotInitialized);
        }
        let remaining = self.total_steps() - self.steps_done;
        if remaining > 0 {
            return Err(PiError::StepsRemaining(remaining));
        }
        let mut fin_words = Vec::with_capacity(self.k);
        for idx in (self.n - self.k)..self.n {
            fin_words.push(self.mem.observe(self.perm[idx])?);
        }
        let lanes = self.lane_plans.as_ref().map(|plans| {
            plans
                .iter()
                .map(|plan| {
                    let bit = |w: &GfElement| (w >> plan.lane) & 1;
                    let fin: Vec<GfElement> = fin_words.iter().map(bit).collect();
                    let exp: Vec<GfElement> = self.expected_words.iter().map(bit).collect();
                    LaneVerdict {
                        lane: plan.lane,
                        pass: fin == exp,
                        fin,
                        fin_expected: exp,
                    }
                })
                .collect::<Vec<_>>()
        });
        let pass = fin_words == self.expected_words;
        debug_assert!(lanes
            .as_ref()
            .is_none_or(|ls| ls.iter().all(|l| l.pass) == pass));
        Ok(IterationResult {
            fin: LfsrState::new(fin_words),
            fin_expected: LfsrState::new(self.expected_words),
            pass,
            stats: self.mem.stats().since(&self.stats_at_start),
            lanes,
        })
    }
}

/// Seeds the first `k` trajectory cells without running the walk.
pub fn initialize_tdb(cfg: &PiTestConfig, mem: &mut Memory) -> Result<(), PiError> {
    PiRunner::new(cfg, mem)?.initialize()
}

fn run_to_end(cfg: &PiTestConfig, mem: &mut Memory) -> Result<IterationResult, PiError> {
    let n = mem.config().n as u64;
    let mut runner = PiRunner::new(cfg, mem)?;
    runner.initialize()?;
    while runner.step()? {}
    let result = runner.finish()?;
    let k = cfg.stage_count() as u64;
    debug_assert_eq!(
        result.stats.cycles,
        match cfg.port_mode {
            PortMode::SinglePort => k + (k + 1) * (n - k),
            PortMode::DualPort => k + 2 * (n - k),
        },
        "charged cycles drifted from the cost model"
    );
    Ok(result)
}

/// One single-port iteration: seed, walk, verdict.
/// Charged operations: exactly `k + (k+1)(n-k)`.
pub fn pi_iteration(cfg: &PiTestConfig, mem: &mut Memory) -> Result<IterationResult, PiError> {
    if cfg.port_mode != PortMode::SinglePort {
        return Err(PiError::WrongPortMode {
            expected: PortMode::SinglePort,
        });
    }
    run_to_end(cfg, mem)
}

/// One dual-port iteration (2-stage registers only): the two window reads of
/// each sub-iteration are issued simultaneously on the two ports.
/// Charged cycles: exactly `k + 2(n-k)`.
pub fn pi_iteration_dual_port(
    cfg: &PiTestConfig,
    mem: &mut Memory,
) -> Result<IterationResult, PiError> {
    if cfg.port_mode != PortMode::DualPort {
        return Err(PiError::WrongPortMode {
            expected: PortMode::DualPort,
        });
    }
    run_to_end(cfg, mem)
}

/// Runs an iteration with the port mode the config asks for.
pub fn run_iteration(cfg: &PiTestConfig, mem: &mut Memory) -> Result<IterationResult, PiError> {
    run_to_end(cfg, mem)
}

/// Runs a schedule of iterations in order on one memory, without resets.
/// The verdict fails if any iteration fails and reports the first detection.
pub fn run_prt_schedule(
    schedule: &[PiTestConfig],
    mem: &mut Memory,
) -> Result<ScheduleVerdict, PiError> {
    if schedule.is_empty() {
        return Err(PiError::EmptySchedule);
    }
    let mut iterations = Vec::with_capacity(schedule.len());
    let mut stats = OpStats::default();
    let mut first_failure = None;
    for (idx, cfg) in schedule.iter().enumerate() {
        let result = run_iteration(cfg, mem)?;
        stats.accumulate(&result.stats);
        if !result.pass && first_failure.is_none() {
            first_failure = Some(idx);
        }
        iterations.push(result);
    }
    Ok(ScheduleVerdict {
        pass: first_failure.is_none(),
        first_failure,
        iterations,
        stats,
    })
}
