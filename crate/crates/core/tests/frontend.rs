use std::collections::BTreeMap;

use rtlic_core::frontend::ast::{ExprKind, ProcessKind, StmtKind};
use rtlic_core::frontend::{elaborate, load_design, parse_design, print_ast, FrontendError, SignalKind, SourceDesign};

const RAM: &str = include_str!("../fixtures/ram.v");

fn ram_params() -> BTreeMap<String, i64> {
    [("ADDR_W", 4), ("DATA_W", 8), ("ADDR", 4), ("DATA", 0xAB)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn parse(text: &str) -> Result<rtlic_core::frontend::Ast, FrontendError> {
    parse_design(&SourceDesign::new("t.v", text))
}

#[test]
fn ram_shape() {
    let ast = parse(RAM).unwrap();
    assert_eq!(ast.module_name, "ram");
    assert_eq!(ast.processes.len(), 3);
    assert_eq!(ast.memories.len(), 1);
    let inputs = ast.input_ports().count();
    assert_eq!(inputs, 6);
    let out_regs: Vec<_> = ast.ports.iter().filter(|p| p.is_reg).map(|p| p.name.as_str()).collect();
    assert_eq!(out_regs, ["r_data"]);
    assert!(matches!(ast.processes[0].kind, ProcessKind::ClockedPosedge { ref clock } if clock == "clk"));
    assert_eq!(ast.processes[2].kind, ProcessKind::Combinational);
    assert_eq!(ast.processes[0].source_span, (9, 18));
    assert_eq!(ast.processes[2].source_span, (29, 42));
}

#[test]
fn empty_module() {
    let ast = parse("module m; endmodule").unwrap();
    assert!(ast.processes.is_empty());
    assert!(ast.ports.is_empty());
}

#[test]
fn missing_endmodule_is_reported() {
    let text: String = RAM.lines().take(42).collect::<Vec<_>>().join("\n");
    let err = parse(&text).unwrap_err();
    assert!(matches!(err, FrontendError::Syntax(_)));
    let msg = err.to_string();
    assert!(msg.contains("expected `endmodule`"), "{msg}");
    assert!(msg.starts_with("t.v:"), "{msg}");
}

#[test]
fn unsupported_constructs_are_named() {
    let cases = [
        ("module m(input a); task t; endtask endmodule", "task"),
        ("module m(input clk); always @(posedge clk) fork join endmodule", "fork"),
        ("module m(input a, output reg b); always @(*) case (a) endcase endmodule", "case"),
        ("module m(input a); wire w; endmodule", "wire"),
        ("module m(input a); initial begin end endmodule", "initial"),
        ("module m(input clk); always @(negedge clk) ; endmodule", "negedge"),
        ("module m(input a); sub u(.x(a)); endmodule", "instantiation"),
    ];
    for (src, word) in cases {
        let err = parse(src).unwrap_err();
        assert!(matches!(err, FrontendError::Unsupported(_)), "{src}: {err}");
        assert!(err.to_string().contains("unsupported feature"), "{err}");
        assert!(err.to_string().contains(word), "{src}: {err}");
    }
}

#[test]
fn unbalanced_end() {
    let err = parse("module m(input clk); always @(posedge clk) begin ; endmodule").unwrap_err();
    assert!(err.to_string().contains("expected `end`"), "{err}");
    let err = parse("module m; end endmodule").unwrap_err();
    assert!(matches!(err, FrontendError::Syntax(_)));
}

#[test]
fn non_ansi_ports() {
    let ast = parse(
        "module m(clk, a, q);\n input clk;\n input [3:0] a;\n output q;\n reg q;\n always @(posedge clk) q <= a == 4'h3;\nendmodule",
    )
    .unwrap();
    let names: Vec<_> = ast.ports.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["clk", "a", "q"]);
    assert!(ast.ports[2].is_reg);
}

#[test]
fn duplicate_identifier() {
    let err = parse("module m(input a); reg a; endmodule").unwrap_err();
    assert!(err.to_string().contains("duplicate"), "{err}");
}

#[test]
fn ram_elaborates_to_sixteen_bytes() {
    let d = load_design(&SourceDesign::new("ram.v", RAM), &ram_params()).unwrap();
    let mem = d.signal("mem").unwrap();
    assert_eq!(mem.kind, SignalKind::Memory);
    assert_eq!(mem.depth, 16);
    assert_eq!(mem.width, 8);
    assert_eq!(mem.index_width, 4);
    assert_eq!(d.signal("addr").unwrap().width, 4);
    assert!(d.signal("clk").unwrap().is_clock);
    let inputs: Vec<_> = d.data_inputs().iter().map(|s| s.name.clone()).collect();
    assert_eq!(inputs, ["rst", "addr", "w_en", "w_data", "r_en"]);
    // `addr == ADDR` folds the parameter into a constant.
    let mut found = false;
    for p in d.processes() {
        p.body.walk(&mut |s| {
            if let StmtKind::If { cond, .. } = &s.kind {
                if let ExprKind::Binary(_, a, b) = &cond.kind {
                    if matches!(&a.kind, ExprKind::Ident(n) if n == "r_data") {
                        assert_eq!(b.as_const(), Some(0xAB));
                        found = true;
                    }
                }
                assert!(cond.width >= 1);
            }
        });
    }
    assert!(found);
}

#[test]
fn missing_parameter() {
    let mut params = ram_params();
    params.remove("ADDR_W");
    let err = load_design(&SourceDesign::new("ram.v", RAM), &params).unwrap_err();
    assert!(err.to_string().contains("undefined parameter ADDR_W"), "{err}");
}

#[test]
fn identity_elaboration_without_parameters() {
    let src = "module m(input clk, input [3:0] a, output reg [3:0] q);\n  always @(posedge clk) begin\n    if (a == 4'h3) q <= a;\n  end\nendmodule\n";
    let ast = parse(src).unwrap();
    let d = elaborate(&ast, &BTreeMap::new()).unwrap();
    assert_eq!(d.ast.without_spans().processes.len(), 1);
    assert_eq!(print_ast(&d.ast), print_ast(&ast));
}

#[test]
fn elaboration_is_idempotent_on_ram() {
    let d = load_design(&SourceDesign::new("ram.v", RAM), &ram_params()).unwrap();
    let again = elaborate(&d.ast, &BTreeMap::new()).unwrap();
    assert_eq!(again.ast, d.ast);
    assert_eq!(again.signals, d.signals);
}

#[test]
fn printed_ram_reparses_identically() {
    let ast = parse(RAM).unwrap();
    let text = print_ast(&ast);
    let back = parse(&text).unwrap();
    assert_eq!(back.without_spans(), ast.without_spans());
}

#[test]
fn width_rules() {
    let src = "module m(input clk, input [3:0] a, input [7:0] b, output reg [7:0] q);\n always @(posedge clk) q <= (a + b) << 1;\nendmodule";
    let d = elaborate(&parse(src).unwrap(), &BTreeMap::new()).unwrap();
    let StmtKind::Assign { rhs, .. } = &d.ast.processes[0].body.kind else { panic!() };
    assert_eq!(rhs.width, 8);
    let src = "module m(input clk, input [3:0] a, output reg q);\n always @(posedge clk) q <= a[2] && a[3:1] != 3'b0;\nendmodule";
    let d = elaborate(&parse(src).unwrap(), &BTreeMap::new()).unwrap();
    let StmtKind::Assign { rhs, .. } = &d.ast.processes[0].body.kind else { panic!() };
    assert_eq!(rhs.width, 1);
}

#[test]
fn nonblocking_only_in_clocked() {
    let src = "module m(input clk, input a, output reg q);\n always @(posedge clk) q = a;\nendmodule";
    assert!(elaborate(&parse(src).unwrap(), &BTreeMap::new()).is_err());
    let src = "module m(input a, output reg q);\n always @(*) q <= a;\nendmodule";
    assert!(elaborate(&parse(src).unwrap(), &BTreeMap::new()).is_err());
}
