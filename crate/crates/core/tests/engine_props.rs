//! Cross-module engine properties: fault-free completeness, exact operation
//! accounting, corruption detection, and the memory-as-array baseline.

use proptest::prelude::*;

use prt_core::galois::{FieldSpec, GfElement};
use prt_core::lfsr::{LfsrDef, LfsrState};
use prt_core::memory::{Memory, MemoryConfig};
use prt_core::pi::{
    pi_iteration, CompareMode, LaneMode, PiRunner, PiTestConfig, PortMode, Trajectory,
};

/// One irreducible polynomial per supported width up to 8.
const POLYS: [(u8, u32); 8] = [
    (1, 0b11),
    (2, 0b111),
    (3, 0b1011),
    (4, 0x13),
    (5, 0x25),
    (6, 0x43),
    (7, 0x83),
    (8, 0x11B),
];

fn arb_config() -> impl Strategy<Value = (PiTestConfig, usize)> {
    (0usize..POLYS.len(), 1usize..=3)
        .prop_flat_map(|(fi, k)| {
            let (m, poly) = POLYS[fi];
            let field = FieldSpec::new(m, poly).unwrap();
            let order = field.order() as u16;
            let lane_choice = if m == 1 { 0..=0usize } else { 0..=2usize };
            (
                Just(field),
                Just(k),
                (k + 1).max(3)..=64usize,
                lane_choice,
                proptest::collection::vec(0..order, k),
                proptest::collection::vec(0..order, k),
                0usize..=2,
                any::<u64>(),
            )
        })
        .prop_map(
            |(field, _k, n, lane_choice, mut taps, mut init, traj_choice, seed)| {
                let lane_mode = match lane_choice {
                    0 => LaneMode::WholeWord,
                    1 => LaneMode::ParallelLanes,
                    _ => LaneMode::RandomLanes { seed },
                };
                if lane_mode != LaneMode::WholeWord {
                    for t in taps.iter_mut() {
                        *t &= 1;
                    }
                    for s in init.iter_mut() {
                        *s &= 1;
                    }
                }
                if taps[0] == 0 {
                    taps[0] = 1;
                }
                let trajectory = match traj_choice {
                    0 => Trajectory::Ascending,
                    1 => Trajectory::Descending,
                    _ => Trajectory::Random { seed },
                };
                let cfg = PiTestConfig {
                    field,
                    lfsr: LfsrDef::new(field, taps).unwrap(),
                    init: LfsrState::new(init),
                    trajectory,
                    compare: CompareMode::OracleCompare,
                    port_mode: PortMode::SinglePort,
                    lane_mode,
                };
                (cfg, n)
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    /// Every valid configuration passes on a fault-free memory, and the
    /// charged operation count is exactly k + (k+1)(n-k).
    #[test]
    fn fault_free_iterations_pass((cfg, n) in arb_config()) {
        let mut mem = Memory::new(MemoryConfig::new(n, cfg.field.width(), 1).unwrap()).unwrap();
        let result = pi_iteration(&cfg, &mut mem).unwrap();
        prop_assert!(result.pass, "fin {:?} vs {:?}", result.fin, result.fin_expected);
        let k = cfg.stage_count() as u64;
        let n = n as u64;
        prop_assert_eq!(result.stats.reads + result.stats.writes, k + (k + 1) * (n - k));
        prop_assert_eq!(result.stats.cycles, k + (k + 1) * (n - k));
    }

    /// A fault-free memory behaves exactly like an array under random
    /// write/read traffic.
    #[test]
    fn memory_is_a_perfect_store(
        ops in proptest::collection::vec((0usize..24, 0u16..16, any::<bool>()), 1..200)
    ) {
        let mut mem = Memory::new(MemoryConfig::new(24, 4, 1).unwrap()).unwrap();
        let mut reference = [0u16; 24];
        for (addr, value, is_write) in ops {
            if is_write {
                mem.write(0, addr, value).unwrap();
                reference[addr] = value;
            } else {
                assert_eq!(mem.read(0, addr).unwrap(), reference[addr]);
            }
        }
        let stats = mem.stats();
        prop_assert_eq!(stats.cycles, stats.reads + stats.writes);
    }

    /// Every trajectory realizes a permutation of the address space.
    #[test]
    fn trajectories_are_permutations(seed in any::<u64>(), n in 3usize..128) {
        for trajectory in [
            Trajectory::Ascending,
            Trajectory::Descending,
            Trajectory::Random { seed },
        ] {
            let mut perm = trajectory.permutation(n);
            perm.sort_unstable();
            prop_assert_eq!(perm, (0..n).collect::<Vec<_>>());
        }
    }

    /// Appending iterations to a schedule never loses a detection: the
    /// extended schedule replays the prefix on the same memory evolution.
    #[test]
    fn schedule_extension_is_monotone(
        seeds in proptest::collection::vec(0u64..,  1..4),
        extra in 1u64..3,
        fault_pick in any::<u64>(),
    ) {
        use prt_core::campaign::{run_campaign, FaultClass, FaultUniverse, TestPlan};

        let field = FieldSpec::gf2();
        let cfg_for = |seed: u64| {
            let stages = vec![(seed & 1) as GfElement, ((seed >> 1) & 1) as GfElement];
            let stages = if stages == [0, 0] { vec![0, 1] } else { stages };
            PiTestConfig::new(
                field,
                LfsrDef::new(field, vec![1, 1]).unwrap(),
                LfsrState::new(stages),
                Trajectory::Random { seed },
                CompareMode::OracleCompare,
            )
        };
        let prefix: Vec<PiTestConfig> = seeds.iter().copied().map(cfg_for).collect();
        let mut extended = prefix.clone();
        extended.extend((0..extra).map(|i| cfg_for(fault_pick.wrapping_add(i))));

        let universe = FaultUniverse::new(
            MemoryConfig::new(10, 1, 1).unwrap(),
            &[FaultClass::StuckAt, FaultClass::Transition],
            None,
        )
        .unwrap();
        let short = run_campaign(&TestPlan::Prt(prefix), &universe).unwrap();
        let long = run_campaign(&TestPlan::Prt(extended), &universe).unwrap();
        for (a, b) in short.rows.iter().zip(&long.rows) {
            prop_assert!(!a.detected || b.detected, "{} got lost", a.params);
            if a.detected {
                prop_assert_eq!(a.detected_by, b.detected_by);
            }
        }
    }
}

/// Flipping any single bit of any cell right after it is written makes the
/// iteration fail: the register map is invertible, so no corruption can
/// cancel before the final state. Exhaustive over cells and bits.
#[test]
fn any_single_corruption_is_detected() {
    let cases: Vec<(FieldSpec, Vec<GfElement>, Vec<GfElement>, usize)> = vec![
        (FieldSpec::gf2(), vec![1, 1], vec![0, 1], 32),
        (FieldSpec::new(4, 0x13).unwrap(), vec![9, 1], vec![1, 2], 16),
    ];
    for (field, taps, init, n) in cases {
        let cfg = PiTestConfig::new(
            field,
            LfsrDef::new(field, taps).unwrap(),
            LfsrState::new(init),
            Trajectory::Ascending,
            CompareMode::OracleCompare,
        );
        let k = cfg.stage_count();
        for position in 0..n {
            for bit in 0..field.width() {
                let mut mem = Memory::new(MemoryConfig::new(n, field.width(), 1).unwrap()).unwrap();
                let mut runner = PiRunner::new(&cfg, &mut mem).unwrap();
                runner.initialize().unwrap();
                // Advance until the target position has just been written
                // (seed cells are written by initialize).
                while position >= k && runner.steps_done() + k <= position {
                    runner.step().unwrap();
                }
                let cell = runner.trajectory_cell(position);
                let corrupted = runner.memory_mut().peek(cell) ^ (1 << bit);
                runner.memory_mut().poke(cell, corrupted);
                while runner.steps_done() < runner.total_steps() {
                    runner.step().unwrap();
                }
                let result = runner.finish().unwrap();
                assert!(
                    !result.pass,
                    "corruption of cell {cell} bit {bit} went unnoticed"
                );
            }
        }
    }
}
