//! Acceptance suite: one test per release criterion, each printing a
//! PASS line when it holds. Run with
//! `cargo test -p prt-core --test acceptance -- --nocapture`.

use std::time::Instant;

use prt_core::campaign::{
    compare_reports, run_campaign, run_campaign_with, FaultClass, FaultUniverse, TestPlan,
};
use prt_core::galois::{FieldSpec, GfElement};
use prt_core::lfsr::{LfsrDef, LfsrState};
use prt_core::march::{execute_march, format_march, parse_march, MarchTest};
use prt_core::memory::{Memory, MemoryConfig};
use prt_core::pi::{
    pi_iteration, pi_iteration_dual_port, CompareMode, PiTestConfig, PortMode, Trajectory,
};
use prt_core::rng::SplitMix64;
use prt_core::xornet::{mul_by_const_matrix, synthesize_multiplier, ConstMatrix};

/// Test-side schoolbook oracle: full carry-less product first, explicit
/// long division second. Independent of the library's interleaved reduction.
fn oracle_mul(poly: u32, m: u8, a: u16, b: u16) -> u16 {
    let mut product: u64 = 0;
    for i in 0..16 {
        if (b >> i) & 1 != 0 {
            product ^= (a as u64) << i;
        }
    }
    let divisor = poly as u64;
    let deg_divisor = 63 - divisor.leading_zeros();
    while product >> deg_divisor != 0 {
        let deg = 63 - product.leading_zeros();
        product ^= divisor << (deg - deg_divisor);
    }
    debug_assert!(product < (1 << m));
    product as u16
}

fn bom_cfg(init: Vec<GfElement>, compare: CompareMode) -> PiTestConfig {
    let field = FieldSpec::gf2();
    PiTestConfig::new(
        field,
        LfsrDef::new(field, vec![1, 1]).unwrap(),
        LfsrState::new(init),
        Trajectory::Ascending,
        compare,
    )
}

fn three_iteration_plan() -> TestPlan {
    TestPlan::Prt(
        [vec![0, 1], vec![1, 0], vec![1, 1]]
            .into_iter()
            .map(|init| bom_cfg(init, CompareMode::OracleCompare))
            .collect(),
    )
}

/// Criterion 1: exhaustive multiplication equivalence against the schoolbook
/// oracle for m = 4 (all 256 pairs) and m = 8 (all 65536 pairs), under 1 s.
#[test]
fn acceptance_1_gf_correctness() {
    let started = Instant::now();
    let mut mismatches = 0usize;
    for (m, poly) in [(4u8, 0x13u32), (8, 0x11B)] {
        let field = FieldSpec::new(m, poly).unwrap();
        for a in 0..field.order() as u16 {
            for b in 0..field.order() as u16 {
                if field.mul(a, b) != oracle_mul(poly, m, a, b) {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert_eq!(mismatches, 0);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("acceptance 1 (gf correctness, 256 + 65536 pairs, {elapsed:?}): PASS");
}

/// Test-side naive bound: one XOR chain per matrix row (`popcount - 1`
/// gates), plus a single cancelling gate when a row is all-zero.
fn naive_bound(matrix: &ConstMatrix) -> usize {
    let mut gates = 0usize;
    let mut any_zero_row = false;
    for i in 0..matrix.width() {
        match matrix.row(i).count_ones() as usize {
            0 => any_zero_row = true,
            pc => gates += pc - 1,
        }
    }
    gates + usize::from(any_zero_row)
}

/// Criterion 2: for m = 4 every constant's synthesized network matches
/// multiplication on all 16 inputs and stays within the naive popcount bound.
#[test]
fn acceptance_2_multiplier_synthesis() {
    let field = FieldSpec::new(4, 0x13).unwrap();
    let mut violations = 0usize;
    for c in 0..16u16 {
        let net = synthesize_multiplier(&field, c);
        let matrix = mul_by_const_matrix(&field, c);
        if net.gate_count() > naive_bound(&matrix) {
            violations += 1;
        }
        for x in 0..16u16 {
            if net.eval(x) != field.mul(c, x) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
    println!("acceptance 2 (multiplier synthesis, 16 constants x 16 inputs): PASS");
}

/// Criterion 3: the walk returns to the initial state whenever the number of
/// recurrence steps is a multiple of the register period, for the 2-stage
/// bit register (period 3) and the word register over GF(2^4) (period 255).
#[test]
fn acceptance_3_return_to_initial() {
    // Bit-oriented: taps (1,1), init (0,1), period 3.
    let bit_def = LfsrDef::new(FieldSpec::gf2(), vec![1, 1]).unwrap();
    let bit_init = LfsrState::new(vec![0, 1]);
    assert_eq!(bit_def.period(&bit_init).unwrap(), 3);
    for c in 1..=10usize {
        let n = 2 + 3 * c;
        let mut mem = Memory::new(MemoryConfig::new(n, 1, 1).unwrap()).unwrap();
        let cfg = bom_cfg(vec![0, 1], CompareMode::RingCompare);
        let result = pi_iteration(&cfg, &mut mem).unwrap();
        assert!(result.pass, "n = {n}");
        assert_eq!(result.fin, bit_init);
    }

    // Word-oriented: generator (1, 2, 2) over GF(2^4)/0x13 -> taps (9, 1).
    let field = FieldSpec::new(4, 0x13).unwrap();
    let word_def = LfsrDef::from_generator(field, &[1, 2, 2]).unwrap();
    let word_init = LfsrState::new(vec![1, 2]);
    let period = word_def.period(&word_init).unwrap();
    assert_eq!(period, 255); // brute-force iteration, frozen
    let n = 2 + period as usize;
    let mut mem = Memory::new(MemoryConfig::new(n, 4, 1).unwrap()).unwrap();
    let cfg = PiTestConfig::new(
        field,
        word_def,
        word_init.clone(),
        Trajectory::Ascending,
        CompareMode::RingCompare,
    );
    let result = pi_iteration(&cfg, &mut mem).unwrap();
    assert!(result.pass);
    assert_eq!(result.fin, word_init);
    println!("acceptance 3 (return to initial, T=3 bit / T=255 word): PASS");
}

/// Criterion 4: exact operation counts. Single port: 2 + 3(n-2) charged
/// operations; dual port: 2 + 2(n-2) charged cycles. Zero tolerance.
#[test]
fn acceptance_4_complexity() {
    for n in [8usize, 64, 1024] {
        let mut mem = Memory::new(MemoryConfig::new(n, 1, 1).unwrap()).unwrap();
        let cfg = bom_cfg(vec![0, 1], CompareMode::OracleCompare);
        let result = pi_iteration(&cfg, &mut mem).unwrap();
        assert!(result.pass);
        let expected_ops = 2 + 3 * (n as u64 - 2);
        assert_eq!(result.stats.reads + result.stats.writes, expected_ops);
        assert_eq!(result.stats.cycles, expected_ops);

        let mut mem = Memory::new(MemoryConfig::new(n, 1, 2).unwrap()).unwrap();
        let mut dual_cfg = bom_cfg(vec![0, 1], CompareMode::OracleCompare);
        dual_cfg.port_mode = PortMode::DualPort;
        let result = pi_iteration_dual_port(&dual_cfg, &mut mem).unwrap();
        assert!(result.pass);
        assert_eq!(result.stats.cycles, 2 + 2 * (n as u64 - 2));
    }
    println!("acceptance 4 (complexity: ops 2+3(n-2), cycles 2+2(n-2); n in {{8,64,1024}}): PASS");
}

/// Criterion 5: the three-iteration schedule with seeds (0,1), (1,0), (1,1)
/// covers the full stuck-at universe on a 64-cell bit memory, while a single
/// iteration cannot.
#[test]
fn acceptance_5_three_iteration_stuck_at_coverage() {
    let universe = FaultUniverse::new(
        MemoryConfig::new(64, 1, 1).unwrap(),
        &[FaultClass::StuckAt],
        None,
    )
    .unwrap();
    assert_eq!(universe.enumerate().len(), 128);

    let full = run_campaign(&three_iteration_plan(), &universe).unwrap();
    let summary = full.class_summary(FaultClass::StuckAt).unwrap();
    assert_eq!(summary.total, 128);
    assert_eq!(summary.coverage, 1.0);

    let single = TestPlan::Prt(vec![bom_cfg(vec![0, 1], CompareMode::OracleCompare)]);
    let partial = run_campaign(&single, &universe).unwrap();
    let partial_cov = partial.class_summary(FaultClass::StuckAt).unwrap().coverage;
    assert!(partial_cov < 1.0, "one iteration reached {partial_cov}");
    println!("acceptance 5 (stuck-at coverage: 3 iterations 1.0, single {partial_cov:.3}): PASS");
}

/// Criterion 6: transition + coupling campaign on 16 cells is deterministic,
/// serial/parallel reproducible, and never loses per-class coverage when
/// iterations are appended; the March baseline is computed alongside.
#[test]
fn acceptance_6_transition_coupling_campaign() {
    let started = Instant::now();
    let universe = FaultUniverse::new(
        MemoryConfig::new(16, 1, 1).unwrap(),
        &[
            FaultClass::Transition,
            FaultClass::CouplingInversion,
            FaultClass::CouplingIdempotent,
        ],
        None,
    )
    .unwrap();

    let serial = run_campaign_with(&three_iteration_plan(), &universe, false).unwrap();
    let parallel = run_campaign_with(&three_iteration_plan(), &universe, true).unwrap();
    assert_eq!(
        serial.deterministic_content(),
        parallel.deterministic_content()
    );

    let repeat = run_campaign(&three_iteration_plan(), &universe).unwrap();
    assert_eq!(
        repeat.deterministic_content(),
        parallel.deterministic_content()
    );

    let single = TestPlan::Prt(vec![bom_cfg(vec![0, 1], CompareMode::OracleCompare)]);
    let one_iter = run_campaign(&single, &universe).unwrap();
    for (short, long) in one_iter.classes.iter().zip(&parallel.classes) {
        assert!(
            long.detected >= short.detected,
            "{} coverage dropped",
            short.class
        );
    }

    let march = run_campaign(&TestPlan::March(MarchTest::baseline_a()), &universe).unwrap();
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "acceptance 6 (transition+coupling: prt {:.3}, march {:.3}, {elapsed:?}): PASS",
        parallel.overall_coverage(),
        march.overall_coverage(),
    );
}

/// Criterion 7: the March baseline round-trips through parse/format, passes
/// fault-free, and covers the full 16-cell stuck-at universe.
#[test]
fn acceptance_7_march_baseline() {
    let text = "{a(w0); u(r0,w1); d(r1,w0)}";
    let test = parse_march(text).unwrap();
    assert_eq!(format_march(&test), text);

    let mut mem = Memory::new(MemoryConfig::new(16, 1, 1).unwrap()).unwrap();
    assert!(execute_march(&test, &mut mem).unwrap().passed());

    let universe = FaultUniverse::new(
        MemoryConfig::new(16, 1, 1).unwrap(),
        &[FaultClass::StuckAt],
        None,
    )
    .unwrap();
    let report = run_campaign(&TestPlan::March(test), &universe).unwrap();
    assert_eq!(
        report.class_summary(FaultClass::StuckAt).unwrap().coverage,
        1.0
    );
    println!("acceptance 7 (march baseline round-trip + full stuck-at coverage): PASS");
}

/// Criterion 8: single- and dual-port engines agree on the final state for
/// 100 random fault-free configurations, at their respective exact costs.
#[test]
fn acceptance_8_dual_port_equivalence() {
    const POLYS: [(u8, u32); 4] = [(1, 0b11), (2, 0b111), (4, 0x13), (8, 0x11B)];
    let mut rng = SplitMix64::new(0xD0A1);
    for case in 0..100 {
        let (m, poly) = POLYS[rng.next_below(POLYS.len() as u64) as usize];
        let field = FieldSpec::new(m, poly).unwrap();
        let order = field.order() as u64;
        let n = 3 + rng.next_below(62) as usize; // 3..=64
        let taps = vec![
            (1 + rng.next_below(order - 1)) as GfElement,
            rng.next_below(order) as GfElement,
        ];
        let init = LfsrState::new(vec![
            rng.next_below(order) as GfElement,
            rng.next_below(order) as GfElement,
        ]);
        let trajectory = match rng.next_below(3) {
            0 => Trajectory::Ascending,
            1 => Trajectory::Descending,
            _ => Trajectory::Random {
                seed: rng.next_u64(),
            },
        };
        let single_cfg = PiTestConfig::new(
            field,
            LfsrDef::new(field, taps).unwrap(),
            init,
            trajectory,
            CompareMode::OracleCompare,
        );
        let mut dual_cfg = single_cfg.clone();
        dual_cfg.port_mode = PortMode::DualPort;

        let mut mem_s = Memory::new(MemoryConfig::new(n, m, 1).unwrap()).unwrap();
        let single = pi_iteration(&single_cfg, &mut mem_s).unwrap();
        let mut mem_d = Memory::new(MemoryConfig::new(n, m, 2).unwrap()).unwrap();
        let dual = pi_iteration_dual_port(&dual_cfg, &mut mem_d).unwrap();

        assert_eq!(single.fin, dual.fin, "case {case} diverged");
        assert!(single.pass && dual.pass, "case {case} failed fault-free");
        let n = n as u64;
        assert_eq!(single.stats.reads + single.stats.writes, 2 + 3 * (n - 2));
        assert_eq!(dual.stats.cycles, 2 + 2 * (n - 2));
    }
    println!("acceptance 8 (dual-port equivalence, 100 random configs): PASS");
}

/// Cross-check of the two coverage baselines: a self-comparison is a zero
/// diff and the three-iteration schedule dominates its one-iteration prefix.
#[test]
fn acceptance_bonus_report_comparison() {
    let universe = FaultUniverse::new(
        MemoryConfig::new(16, 1, 1).unwrap(),
        &[FaultClass::StuckAt],
        None,
    )
    .unwrap();
    let one = run_campaign(
        &TestPlan::Prt(vec![bom_cfg(vec![0, 1], CompareMode::OracleCompare)]),
        &universe,
    )
    .unwrap();
    let three = run_campaign(&three_iteration_plan(), &universe).unwrap();
    assert!(compare_reports(&one, &one).unwrap().is_zero());
    let diff = compare_reports(&one, &three).unwrap();
    assert!(diff.only_a.is_empty());
    assert!(diff.classes.iter().all(|d| d.delta >= 0));
    println!("acceptance bonus (report comparison semantics): PASS");
}
