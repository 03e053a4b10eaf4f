mod common;

use rtlic_core::cfg::{build_cfg_set, EdgeKind};
use rtlic_core::frontend::print_expr;
use rtlic_core::instrument::{create_branch, extract_constraints, instrument_design, modify};
use rtlic_core::sequence::{dependency_search, get_signal_expression};
use rtlic_core::target::{resolve_target, TargetLocator};

use common::*;

fn line(n: u32) -> TargetLocator {
    TargetLocator::Line { line: n, polarity: true }
}

#[test]
fn ram_block_numbering() {
    let cs = build_cfg_set(&ram());
    assert_eq!(cs.cfgs.len(), 3);
    let labels: Vec<Vec<String>> = cs.cfgs.iter().map(|c| cs.labels(&c.blocks)).collect();
    assert_eq!(labels[0], ["E1", "B1", "B2", "B3", "B4"]);
    assert_eq!(labels[1], ["E2", "B5", "B6", "B7", "B8"]);
    assert_eq!(labels[2], ["E3", "B9", "B10", "B11", "B12", "B13", "B14", "B15", "B16"]);
    let b3 = cs.by_label("B3").unwrap();
    assert!(cs.block(b3).defined.contains("mem"));
    let b8 = cs.by_label("B8").unwrap();
    let b13 = cs.by_label("B13").unwrap();
    let has = |d, u, s: &str| cs.inter_edges.iter().any(|e| e.def == d && e.use_ == u && e.signal == s);
    assert!(has(b3, b8, "mem"));
    assert!(has(b8, b13, "r_data"));
    for cfg in &cs.cfgs {
        for &(from, _, kind) in &cfg.edges {
            if kind != EdgeKind::Unconditional {
                assert!(cs.block(from).branch_cond().is_some());
            }
        }
    }
}

#[test]
fn assignment_blocks() {
    let cs = build_cfg_set(&ram());
    assert_eq!(cs.labels(&cs.find_assignment_blocks("r_data").unwrap()), ["B8"]);
    assert_eq!(cs.labels(&cs.find_assignment_blocks("mem").unwrap()), ["B3"]);
    assert!(cs.find_assignment_blocks("w_data").unwrap().is_empty());
    assert!(cs.find_assignment_blocks("nope").is_err());
}

#[test]
fn intra_bfs_paths() {
    let cs = build_cfg_set(&ram());
    let b15 = cs.by_label("B15").unwrap();
    assert_eq!(cs.labels(&cs.intra_bfs(b15)), ["B15", "B13", "B12", "B9"]);
    let b3 = cs.by_label("B3").unwrap();
    assert_eq!(cs.labels(&cs.intra_bfs(b3)), ["B3", "B2"]);
    let e1 = cs.by_label("E1").unwrap();
    assert_eq!(cs.labels(&cs.intra_bfs(e1)), ["E1"]);
}

#[test]
fn distances_to_target() {
    let cs = build_cfg_set(&ram());
    let b15 = cs.by_label("B15").unwrap();
    let ds = cs.compute_distance(b15);
    let d = |l: &str| ds.get(cs.by_label(l).unwrap());
    assert_eq!(d("B15"), Some(0));
    assert_eq!(d("B13"), Some(1));
    assert_eq!(d("B12"), Some(2));
    assert_eq!(d("B9"), Some(3));
    assert!(d("B8").is_some());
    assert!(d("B3").is_some());
    assert_eq!(d("B16"), None);
}

#[test]
fn targets_resolve() {
    let d = ram();
    let cs = build_cfg_set(&d);
    let t = resolve_target(&cs, &line(36)).unwrap();
    assert_eq!(t.label, "B15");
    assert_eq!(t.process, 2);
    assert_eq!(resolve_target(&cs, &line(37)).unwrap().label, "B15");
    let m = resolve_target(&cs, &TargetLocator::Marker { text: "Target".into() }).unwrap();
    assert_eq!(m.block, t.block);
    let err = resolve_target(&cs, &line(2)).unwrap_err();
    assert_eq!(err.to_string(), "no branch at line 2");
    assert_eq!(resolve_target(&cs, &TargetLocator::Line { line: 36, polarity: false }).unwrap().label, "B16");
}

#[test]
fn sequence_for_ram_target() {
    let cs = build_cfg_set(&ram());
    let t = resolve_target(&cs, &line(37)).unwrap();
    let se = get_signal_expression(&cs, &t);
    assert_eq!(se.signals, ["r_data"]);
    assert_eq!(se.constants.iter().map(|c| c.0).collect::<Vec<_>>(), [0xAB]);
    let ss = dependency_search(&cs, &se);
    assert_eq!(ss.render(&cs), "S = <B3, B8>");
}

#[test]
fn ram_synthetic_branch_constraints() {
    let d = ram();
    let cs = build_cfg_set(&d);
    let b = |l: &str| cs.by_label(l).unwrap();
    let sc3 = extract_constraints(&cs, b("B3"));
    assert_eq!(sc3.render(), "r_en=0x0, w_en=0x1, mem=UR, addr=UR, w_data=UR");
    let sc8 = extract_constraints(&cs, b("B8"));
    assert_eq!(sc8.render(), "r_en=0x1, w_en=0x0, r_data=UR, mem=UR, addr=UR");
    let tc = extract_constraints(&cs, b("B15"));
    assert_eq!(tc.render(), "r_en=0x1, w_en=0x0, addr=0x4, r_data=0xab");
    let m3 = modify(&tc, &sc3, &cs);
    assert_eq!(m3.render(), "r_en=0x0, w_en=0x1, addr=0x4, w_data=0xab");
    let m8 = modify(&tc, &sc8, &cs);
    assert_eq!(m8.render(), "r_en=0x1, w_en=0x0, addr=0x4, r_data=0xab");
    let br1 = create_branch(&m3, "Target1", &cs).unwrap();
    assert_eq!(print_expr(&br1.cond), "r_en == 1'b0 && w_en == 1'b1 && addr == 4'h4 && w_data == 8'hab");
    let br2 = create_branch(&m8, "Target2", &cs).unwrap();
    let inst = instrument_design(&d, &[br1, br2]);
    assert_eq!(inst.design.ast.processes.len(), 4);
    let labels: Vec<_> = inst.queue.entries.iter().map(|e| e.label.as_str()).collect();
    assert_eq!(labels, ["B17", "B19"]);
    let origins: Vec<_> = inst.queue.entries.iter().map(|e| e.origin_label.as_str()).collect();
    assert_eq!(origins, ["B3", "B8"]);
}
