mod common;

use proptest::prelude::*;

use rtlic_core::cfg::build_cfg_set;
use rtlic_core::concolic::{
    build_constraint_vector, concolic, incremental_run, random_test, select_alternate_branches, SearchConfig,
};
use rtlic_core::instrument::plain_design;
use rtlic_core::pipeline::{analyze, instrument_queue};
use rtlic_core::sim::{replay_check, simulate, Phase, TestSet};
use rtlic_core::solver::{check_model, solve_internal, SolveOutcome};
use rtlic_core::symbolic::unroll;
use rtlic_core::target::TargetLocator;

use common::*;

fn line(n: u32) -> TargetLocator {
    TargetLocator::Line { line: n, polarity: true }
}

fn set(t: &mut TestSet, cycle: u32, pairs: &[(&str, u64)]) {
    for (k, v) in pairs {
        t.vectors[cycle as usize - 1].inputs.insert(k.to_string(), *v);
    }
}

/// Write 0x11 to address 4 in cycle 1, read address 4 in cycle 2.
fn write_read(d: &rtlic_core::frontend::ElaboratedDesign) -> TestSet {
    let mut t = TestSet::zeros(d, 4);
    set(&mut t, 1, &[("w_en", 1), ("addr", 4), ("w_data", 0x11)]);
    set(&mut t, 2, &[("r_en", 1), ("addr", 4)]);
    t
}

#[test]
fn flipping_the_data_check_reaches_back_to_the_write() {
    let d = ram();
    let inst = plain_design(&d);
    let cs = &inst.cfgs;
    let t = write_read(&d);
    let trace = simulate(&inst, &t, 4).unwrap();
    let b15 = cs.by_label("B15").unwrap();
    let ds = cs.compute_distance(b15);
    let cands = select_alternate_branches(&trace, &ds, cs, 1);
    let ab = cands
        .iter()
        .find(|a| cs.label(a.block) == "B15" && a.cycle == 2 && a.phase == Phase::PostEdge)
        .expect("B13 taken false at cycle 2");
    assert_eq!(ab.distance, 0);
    let u = unroll(&d, cs, &t, 1, 4);
    let cv = build_constraint_vector(ab, &trace, &u, cs, &t);
    assert_eq!(cv.pivot_cycle(), 2);
    assert!(cv.inputs.iter().all(|s| s.cycle <= 2));
    let SolveOutcome::Sat(m) = solve_internal(&cv, 100_000) else { panic!("expected sat") };
    assert!(check_model(&cv, &m));
    assert_eq!(m.get("w_data", 1), Some(0xab));
    assert_eq!(m.get("addr", 1), m.get("addr", 2));
    assert_eq!(m.get("addr", 2), Some(4));
}

#[test]
fn start_excludes_earlier_cycles() {
    let d = ram();
    let inst = plain_design(&d);
    let cs = &inst.cfgs;
    let t = random_test(&d, 6, 3);
    let trace = simulate(&inst, &t, 6).unwrap();
    let ds = cs.compute_distance(cs.by_label("B15").unwrap());
    let all = select_alternate_branches(&trace, &ds, cs, 1);
    assert!(all.iter().any(|a| a.cycle == 3));
    let late = select_alternate_branches(&trace, &ds, cs, 4);
    assert!(late.iter().all(|a| a.cycle >= 4));
    assert!(select_alternate_branches(&trace, &ds, cs, 7).is_empty());
}

#[test]
fn already_active_target_needs_no_solver_call() {
    let d = ram();
    let inst = plain_design(&d);
    let mut t = write_read(&d);
    set(&mut t, 1, &[("w_data", 0xab)]);
    let b15 = inst.cfgs.by_label("B15").unwrap();
    let cfg = SearchConfig::default();
    let o = concolic(&inst, b15, &t, 1, &[], &cfg).unwrap();
    assert_eq!(o.activation, Some(2));
    assert_eq!(o.solver_calls(), 0);
}

#[test]
fn infeasible_target_is_reported_unsolved() {
    let d = design(
        "module m(input clk, input [3:0] a, output reg y);
  always @(*) begin
    y = 1'b0;
    if (a == 4'h3 && a == 4'h5) y = 1'b1;
  end
endmodule",
    );
    let inst = plain_design(&d);
    let target = rtlic_core::target::resolve_target(&inst.cfgs, &line(4)).unwrap();
    let cfg = SearchConfig { limit: 1, ..SearchConfig::default() };
    let o = concolic(&inst, target.block, &random_test(&d, 3, 1), 1, &[], &cfg).unwrap();
    assert!(!o.solved());
    assert_eq!(o.solver_calls(), 1);
    assert_eq!(o.iterations[0].verdict, "unsat");
}

#[test]
fn ram_incremental_run() {
    let d = ram();
    let a = analyze(d.clone(), &line(37)).unwrap();
    assert_eq!(a.sequence.render(&a.cfgs), "S = <B3, B8>");
    let (inst, skipped) = instrument_queue(&a, &a.sequence.queues()[0]);
    assert!(skipped.is_empty());
    let cfg = SearchConfig::default();
    let r = incremental_run(&inst, &a.target, &cfg).unwrap();
    assert!(r.targets.iter().all(|t| t.solved));
    assert!(r.final_target.solved);
    let acts: Vec<u32> = r.targets.iter().map(|t| t.activation_cycle.unwrap()).collect();
    assert!(acts.windows(2).all(|w| w[0] < w[1]));
    // Fragments concatenate to the combined test.
    let mut parts: Vec<TestSet> = r.targets.iter().map(|t| t.fragment.clone()).collect();
    parts.push(r.final_target.fragment.clone());
    assert_eq!(TestSet::concat(&parts), r.combined);
    // Earlier targets still fire where they were recorded.
    let trace = simulate(&inst, &r.combined, cfg.unroll).unwrap();
    for (e, t) in inst.queue.entries.iter().zip(&r.targets) {
        assert!(trace.block_cycles(e.branch_block).contains(&t.activation_cycle.unwrap()));
    }
    assert!(replay_check(&d, &r.combined, &a.target, cfg.unroll).unwrap());
}

#[test]
fn incremental_run_is_deterministic() {
    let d = ram();
    let a = analyze(d, &line(37)).unwrap();
    let (inst, _) = instrument_queue(&a, &a.sequence.queues()[0]);
    let cfg = SearchConfig { seed: 9, ..SearchConfig::default() };
    let x = incremental_run(&inst, &a.target, &cfg).unwrap();
    let y = incremental_run(&inst, &a.target, &cfg).unwrap();
    assert_eq!(x, y);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn alternates_are_ranked_and_filtered(seed in any::<u64>(), start in 1u32..5) {
        let d = ram();
        let inst = plain_design(&d);
        let cs = build_cfg_set(&d);
        let t = random_test(&d, 5, seed);
        let trace = simulate(&inst, &t, 5).unwrap();
        let ds = cs.compute_distance(cs.by_label("B15").unwrap());
        let got = select_alternate_branches(&trace, &ds, &cs, start);
        // Brute-force oracle: every decision, filtered, then a stable sort.
        let mut want = Vec::new();
        for r in &trace.runs {
            for dec in &r.decisions {
                let other = cs.sibling(dec.taken).unwrap();
                let executed = trace.block_cycles(other).contains(&r.cycle);
                if r.cycle >= start && !executed {
                    if let Some(dist) = ds.get(other) {
                        want.push((dist, r.cycle, r.phase, other));
                    }
                }
            }
        }
        want.sort();
        let keys: Vec<_> = got.iter().map(|a| (a.distance, a.cycle, a.phase, a.block)).collect();
        prop_assert_eq!(keys, want);
    }
}
