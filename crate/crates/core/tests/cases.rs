use rtlic_core::frontend::SourceDesign;
use rtlic_core::pipeline::{run, RunConfig};

const CASES: &[(&str, &str, &[&str])] = &[
    ("case1_write.v", include_str!("../fixtures/cases/case1_write.v"), &["WriteHit"]),
    ("case2_read.v", include_str!("../fixtures/cases/case2_read.v"), &["ReadHit"]),
    ("case3_writes.v", include_str!("../fixtures/cases/case3_writes.v"), &["Write1", "Write2", "Write3"]),
    ("case4_reads.v", include_str!("../fixtures/cases/case4_reads.v"), &["Read1", "Read2", "Read3"]),
    ("case5_boundary_write.v", include_str!("../fixtures/cases/case5_boundary_write.v"), &["WriteLow", "WriteHigh"]),
    ("case6_boundary_read.v", include_str!("../fixtures/cases/case6_boundary_read.v"), &["ReadLow", "ReadHigh"]),
];

#[test]
fn every_corner_case_is_activated() {
    for (file, text, markers) in CASES {
        let src = SourceDesign::new(*file, *text);
        for m in *markers {
            let cfg = RunConfig::new(*file, format!("marker:{m}").parse().unwrap());
            let r = run(&src, &cfg).unwrap();
            println!("{file} {m}: {} | {}", r.sequence, r.verdict);
            assert!(r.activated && r.replay_passed, "{file} {m}: {}", r.summary());
        }
    }
}
