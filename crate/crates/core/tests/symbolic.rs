mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtlic_core::bv;
use rtlic_core::cfg::build_cfg_set;
use rtlic_core::frontend::ElaboratedDesign;
use rtlic_core::sim::{simulate_with, TestSet, TestVector};
use rtlic_core::solver::eval;
use rtlic_core::symbolic::unroll;

const MIX: &str = r#"
module mix(input clk, input [3:0] a, input [2:0] b, input s, output reg [7:0] q);
  reg [7:0] acc;
  reg [3:0] t;
  reg [1:0] m [3:0];
  always @(*) begin
    t = s ? a + {1'b0, b} : a ^ 4'h5;
    if (t[3] && !s) t = t >> b;
    else if (a[1:0] == 2'b10) t = ~t;
    else t = t << acc;
  end
  always @(posedge clk) begin
    acc <= acc + {t, a};
    m[b[1:0]] <= a[3:2];
    if (acc > 8'h80) q <= acc - {4'h0, t};
    else q <= {m[a[1:0]], b, s, 2'b01};
  end
endmodule
"#;

fn random_test(d: &ElaboratedDesign, cycles: u32, seed: u64) -> TestSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (1..=cycles)
        .map(|cycle| TestVector {
            cycle,
            inputs: d.data_inputs().iter().map(|s| (s.name.clone(), rng.gen::<u64>() & bv::mask(s.width))).collect(),
        })
        .collect();
    TestSet { vectors }
}

/// Every recorded branch term evaluates to the simulator's decision, with
/// all inputs free (start = 1) or pinned up to `start`.
fn agrees(d: &ElaboratedDesign, t: &TestSet, cycles: u32, start: u32) {
    let cs = build_cfg_set(d);
    let trace = simulate_with(d, &cs, t, cycles).unwrap();
    let u = unroll(d, &cs, t, start, cycles);
    let lookup = |n: &str, c: u32| Some(t.value(c, n));
    let mut checked = 0;
    for run in &trace.runs {
        for dec in &run.decisions {
            let term = u.condition(run.cycle, run.phase, dec.block).expect("condition recorded");
            let v = eval::evaluate(&u.store, &[term], &lookup)[0].bv();
            assert_eq!(v == 1, dec.outcome, "cycle {} {:?} {}", run.cycle, run.phase, cs.label(dec.block));
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn ram_write_then_read_terms() {
    let d = common::ram();
    let mut t = TestSet::zeros(&d, 3);
    for (k, v) in [("w_en", 1), ("addr", 4), ("w_data", 0xab)] {
        t.vectors[0].inputs.insert(k.into(), v);
    }
    for (k, v) in [("r_en", 1), ("addr", 4)] {
        t.vectors[1].inputs.insert(k.into(), v);
    }
    agrees(&d, &t, 3, 1);
    agrees(&d, &t, 3, 2);
}

#[test]
fn pinned_prefix_folds_to_constants() {
    let d = common::ram();
    let t = random_test(&d, 4, 7);
    let cs = build_cfg_set(&d);
    let u = unroll(&d, &cs, &t, 3, 4);
    assert!(u.inputs.iter().all(|s| s.cycle >= 3));
    for (k, &term) in &u.conditions {
        if k.cycle < 3 {
            assert!(u.store.as_const(term).is_some(), "{k:?} not folded");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ram_terms_match_simulation(seed in any::<u64>(), start in 1u32..6) {
        let d = common::ram();
        let t = random_test(&d, 6, seed);
        agrees(&d, &t, 6, start);
    }

    #[test]
    fn mixed_operators_match_simulation(seed in any::<u64>(), start in 1u32..5) {
        let d = common::design(MIX);
        let t = random_test(&d, 5, seed);
        agrees(&d, &t, 5, start);
    }
}
