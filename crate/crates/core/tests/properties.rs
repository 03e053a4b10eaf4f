mod common;

use std::collections::BTreeMap;

use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::Reversed;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtlic_core::cfg::{build_cfg_set, BlockId, CfgSet};
use rtlic_core::concolic::random_test;
use rtlic_core::frontend::ast::{Expr, ExprKind, StmtKind};
use rtlic_core::frontend::{elaborate, load_design, parse_design, print_ast, ElaboratedDesign, SourceDesign};
use rtlic_core::pipeline::{analyze, instrument_queue};
use rtlic_core::sim::{simulate, simulate_with};
use rtlic_core::target::TargetLocator;

const GUARDS: &[&str] = &[
    "a == 4'h3",
    "r0 < b",
    "s",
    "!s",
    "a[1:0] == 2'b10",
    "m[a[1:0]] == r0",
    "c > 4'h7",
    "r1 != a && s",
    "b[3] || r0[0]",
];

const EXPRS: &[&str] = &["a + b", "r0 ^ a", "c", "b - r1", "{a[1:0], b[1:0]}", "m[b[1:0]]", "r1 + 4'h1", "~a"];

struct Gen {
    rng: ChaCha8Rng,
    displays: u32,
}

impl Gen {
    fn body(&mut self, depth: u32, lhs: &[&str], op: &str, ind: usize, out: &mut String) {
        let pad = " ".repeat(ind);
        for _ in 0..self.rng.gen_range(1..=3) {
            let roll = self.rng.gen_range(0..10);
            if roll < 4 && depth < 3 {
                let g = GUARDS.choose(&mut self.rng).unwrap();
                out.push_str(&format!("{pad}if ({g}) begin\n"));
                self.body(depth + 1, lhs, op, ind + 2, out);
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{pad}end else begin\n"));
                    self.body(depth + 1, lhs, op, ind + 2, out);
                }
                out.push_str(&format!("{pad}end\n"));
            } else if roll < 5 {
                self.displays += 1;
                out.push_str(&format!("{pad}$display(\"D{}\");\n", self.displays));
            } else {
                let l = lhs.choose(&mut self.rng).unwrap();
                let e = EXPRS.choose(&mut self.rng).unwrap();
                out.push_str(&format!("{pad}{l} {op} {e};\n"));
            }
        }
    }
}

/// A random module in the supported subset: one combinational and two
/// clocked processes, each signal driven by one process. `swap` reverses
/// the textual order of the clocked processes without changing them.
fn random_design(seed: u64, swap: bool) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), displays: 0 };
    let mut comb = String::from("    c = a;\n");
    g.body(0, &["c"], "=", 4, &mut comb);
    let mut p1 = String::new();
    g.body(0, &["r0", "m[b[1:0]]"], "<=", 4, &mut p1);
    let mut p2 = String::new();
    g.body(0, &["r1", "q"], "<=", 4, &mut p2);
    let clocked = |b: &str| format!("  always @(posedge clk) begin\n{b}  end\n");
    let (x, y) = if swap { (clocked(&p2), clocked(&p1)) } else { (clocked(&p1), clocked(&p2)) };
    format!(
        "module g(input clk, input [3:0] a, input [3:0] b, input s, output reg [3:0] q);
  reg [3:0] r0;
  reg [3:0] r1;
  reg [3:0] c;
  reg [3:0] m [3:0];
  always @(*) begin
{comb}  end
{x}{y}endmodule
"
    )
}

fn load(text: &str) -> ElaboratedDesign {
    load_design(&SourceDesign::new("g.v", text), &BTreeMap::new()).unwrap()
}

/// Reverse intra-process graph plus the inter-edges, as a petgraph.
fn graph(cs: &CfgSet, with_inter: bool) -> DiGraph<(), ()> {
    let mut g = DiGraph::new();
    for _ in &cs.blocks {
        g.add_node(());
    }
    for cfg in &cs.cfgs {
        for &(a, b, _) in &cfg.edges {
            g.update_edge(NodeIndex::new(a.0), NodeIndex::new(b.0), ());
        }
    }
    if with_inter {
        for e in &cs.inter_edges {
            g.update_edge(NodeIndex::new(e.def.0), NodeIndex::new(e.use_.0), ());
        }
    }
    g
}

fn reverse_distances(g: &DiGraph<(), ()>, from: BlockId) -> BTreeMap<usize, u32> {
    dijkstra(Reversed(g), NodeIndex::new(from.0), None, |_| 1u32).into_iter().map(|(n, d)| (n.index(), d)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let src = SourceDesign::new("g.v", random_design(seed, false));
        let ast = parse_design(&src).unwrap();
        let again = parse_design(&SourceDesign::new("g.v", print_ast(&ast))).unwrap();
        prop_assert_eq!(again.without_spans(), ast.without_spans());
    }

    #[test]
    fn elaboration_is_idempotent(seed in any::<u64>()) {
        let d = load(&random_design(seed, false));
        let again = elaborate(&d.ast, &BTreeMap::new()).unwrap();
        prop_assert_eq!(&again.ast, &d.ast);
        prop_assert_eq!(&again.signals, &d.signals);
        // Every expression is sized and names only signals.
        let mut ok = true;
        let mut check = |e: &Expr| {
            e.walk(&mut |x| {
                ok &= x.width >= 1;
                if let ExprKind::Ident(n) = &x.kind {
                    ok &= d.signal(n).is_some();
                }
            })
        };
        for p in d.processes() {
            p.body.walk(&mut |st| match &st.kind {
                StmtKind::If { cond, .. } => check(cond),
                StmtKind::Assign { rhs, .. } => check(rhs),
                _ => {}
            });
        }
        prop_assert!(ok);
    }

    #[test]
    fn intra_bfs_matches_reference(seed in any::<u64>()) {
        let d = load(&random_design(seed, false));
        let cs = build_cfg_set(&d);
        let g = graph(&cs, false);
        for b in &cs.blocks {
            let entry = cs.cfg_of(b.id).entry;
            let got = cs.intra_bfs(b.id);
            let mut want = reverse_distances(&g, b.id);
            if b.id != entry {
                want.remove(&entry.0);
            }
            let mut ids: Vec<usize> = got.iter().map(|x| x.0).collect();
            // BFS order: distances never decrease.
            prop_assert!(ids.windows(2).all(|w| want[&w[0]] <= want[&w[1]]));
            ids.sort();
            prop_assert_eq!(ids, want.keys().copied().collect::<Vec<_>>());
        }
    }

    #[test]
    fn distances_match_reference(seed in any::<u64>()) {
        let d = load(&random_design(seed, false));
        let cs = build_cfg_set(&d);
        let g = graph(&cs, true);
        for b in &cs.blocks {
            let ds = cs.compute_distance(b.id);
            let want = reverse_distances(&g, b.id);
            for x in &cs.blocks {
                prop_assert_eq!(ds.get(x.id), want.get(&x.id.0).copied());
            }
            // Triangle inequality along every edge.
            let edges = cs.cfgs.iter().flat_map(|c| c.edges.iter().map(|&(a, b, _)| (a, b)));
            for (a, b) in edges.chain(cs.inter_edges.iter().map(|e| (e.def, e.use_))) {
                if let Some(db) = ds.get(b) {
                    prop_assert!(ds.get(a).unwrap() <= db + 1);
                }
            }
        }
    }

    #[test]
    fn swapping_clocked_processes_keeps_states(seed in any::<u64>(), tseed in any::<u64>()) {
        let x = load(&random_design(seed, false));
        let y = load(&random_design(seed, true));
        let t = random_test(&x, 8, tseed);
        let tx = simulate_with(&x, &build_cfg_set(&x), &t, 8).unwrap();
        let ty = simulate_with(&y, &build_cfg_set(&y), &t, 8).unwrap();
        prop_assert_eq!(tx.states, ty.states);
    }

    #[test]
    fn markers_agree_with_records(seed in any::<u64>(), tseed in any::<u64>()) {
        let d = load(&random_design(seed, false));
        let cs = build_cfg_set(&d);
        let trace = simulate_with(&d, &cs, &random_test(&d, 6, tseed), 6).unwrap();
        for b in &cs.blocks {
            for text in b.displays() {
                for r in &trace.records {
                    let fired = trace.activated_markers.contains(&(text.to_string(), r.cycle));
                    prop_assert_eq!(fired, r.blocks.contains(&b.id));
                }
            }
        }
    }

    #[test]
    fn memory_words_change_only_when_written(seed in any::<u64>(), tseed in any::<u64>()) {
        let d = load(&random_design(seed, false));
        let cs = build_cfg_set(&d);
        let trace = simulate_with(&d, &cs, &random_test(&d, 6, tseed), 6).unwrap();
        let writers: Vec<BlockId> = cs.blocks.iter().filter(|b| b.defined.contains("m")).map(|b| b.id).collect();
        let mut prev = vec![0u64; 4];
        for (r, st) in trace.records.iter().zip(&trace.states) {
            let now = &st.memories["m"];
            if *now != prev {
                prop_assert!(writers.iter().any(|w| r.blocks.contains(w)));
            }
            prev = now.clone();
        }
    }

    #[test]
    fn instrumentation_does_not_interfere(seed in any::<u64>(), tseed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let d = load(&random_design(seed, false));
        let cs = build_cfg_set(&d);
        prop_assume!(!cs.branches.is_empty());
        let site = &cs.branches[pick.index(cs.branches.len())];
        let a = analyze(d.clone(), &TargetLocator::Line { line: site.line, polarity: true }).unwrap();
        let queue = a.sequence.queues().into_iter().next().unwrap_or_default();
        let (inst, _) = instrument_queue(&a, &queue);
        let t = random_test(&d, 8, tseed);
        let plain = simulate_with(&d, &cs, &t, 8).unwrap();
        let instrumented = simulate(&inst, &t, 8).unwrap();
        prop_assert_eq!(plain.states, instrumented.states);
    }
}

#[test]
fn ram_instrumentation_does_not_interfere() {
    let d = common::ram();
    let a = analyze(d.clone(), &TargetLocator::Line { line: 37, polarity: true }).unwrap();
    let (inst, _) = instrument_queue(&a, &a.sequence.queues()[0]);
    let cs = build_cfg_set(&d);
    for seed in 0..100 {
        let t = random_test(&d, 10, seed);
        let plain = simulate_with(&d, &cs, &t, 10).unwrap();
        let instrumented = simulate(&inst, &t, 10).unwrap();
        assert_eq!(plain.states, instrumented.states, "seed {seed}");
    }
}
