use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rtlic_core::frontend::{load_design, print_ast, ElaboratedDesign, SourceDesign};
use rtlic_core::pipeline::{self, analyze, instrument_queue, Analysis, Mode, PipelineError, RunConfig, Stage};
use rtlic_core::sim::{replay_check, simulate_with, TestSet};
use rtlic_core::solver::Backend;
use rtlic_core::target::{resolve_target, TargetLocator};

#[derive(Parser)]
#[command(name = "rtlic", version, about = "Incremental concolic test generation for RTL designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test activating the target and replay it on the original design.
    Gen(GenArgs),
    /// Check whether a test file activates the target.
    Replay(ReplayArgs),
    /// Write one analysis artifact.
    Dump(DumpArgs),
    /// Print the process control-flow graphs.
    Cfg(CfgArgs),
    /// Print the sequence of blocks the target depends on.
    Seq(TargetArgs),
    /// Print the design instrumented with the synthetic targets.
    Instrument(InstrumentArgs),
    /// Export the constraint vectors of a generation run as SMT-LIB2.
    Smt(SmtArgs),
    /// Simulate a test file and print the trace log.
    Sim(SimArgs),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    design: PathBuf,
    /// Parameter override, NAME=INT (repeatable).
    #[arg(long = "param", value_name = "NAME=INT", value_parser = parse_param)]
    params: Vec<(String, i64)>,
}

#[derive(Args)]
struct TargetArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// line:<n>[:true|false] or marker:<text>
    #[arg(long)]
    target: TargetLocator,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 10)]
    unroll: u32,
    #[arg(long, default_value_t = 10)]
    limit: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "incremental")]
    mode: Mode,
    /// internal, external or external:<command>
    #[arg(long, default_value = "internal")]
    solver: Backend,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    tests: PathBuf,
    /// Cycles to simulate; defaults to the length of the test.
    #[arg(long)]
    unroll: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpWhat {
    CfgDot,
    Seq,
    Instrumented,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_enum)]
    what: DumpWhat,
    #[arg(long)]
    target: Option<TargetLocator>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CfgArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Graphviz output instead of the block listing.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct InstrumentArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Write the instrumented source to this file.
    #[arg(long, value_name = "FILE")]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct SmtArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// 1-based index of the solver call to export.
    #[arg(long, default_value_t = 1)]
    pivot: usize,
    /// Script file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    tests: PathBuf,
    #[arg(long)]
    unroll: Option<u32>,
}

fn parse_param(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=INT, got `{s}`"))?;
    let value = match value.strip_prefix("0x") {
        Some(hex) => i64::from_str_radix(hex, 16),
        None => value.parse(),
    }
    .map_err(|_| format!("invalid integer in `{s}`"))?;
    Ok((name.to_string(), value))
}

fn stage(stage: Stage, e: impl std::fmt::Display) -> PipelineError {
    PipelineError { stage, message: e.to_string() }
}

impl DesignArgs {
    fn params(&self) -> BTreeMap<String, i64> {
        self.params.iter().cloned().collect()
    }

    fn source(&self) -> Result<SourceDesign, PipelineError> {
        SourceDesign::load(&self.design)
            .map_err(|e| stage(Stage::Frontend, format!("cannot read {}: {e}", self.design.display())))
    }

    fn load(&self) -> Result<ElaboratedDesign, PipelineError> {
        load_design(&self.source()?, &self.params()).map_err(|e| stage(Stage::Frontend, e))
    }
}

impl TargetArgs {
    fn analyze(&self) -> Result<Analysis, PipelineError> {
        analyze(self.design.load()?, &self.target)
    }
}

impl SearchArgs {
    fn run(&self, target: &TargetArgs, out: &Path) -> Result<pipeline::RunReport, PipelineError> {
        let mut cfg = RunConfig::new(target.design.design.display().to_string(), target.target.clone());
        cfg.params = target.design.params();
        cfg.unroll = self.unroll;
        cfg.limit = self.limit;
        cfg.seed = self.seed;
        cfg.mode = self.mode;
        cfg.solver = self.solver.clone();
        cfg.out = out.display().to_string();
        pipeline::run(&target.design.source()?, &cfg)
    }
}

fn load_tests(path: &Path, d: &ElaboratedDesign) -> Result<TestSet, PipelineError> {
    let text =
        fs::read_to_string(path).map_err(|e| stage(Stage::Replay, format!("cannot read {}: {e}", path.display())))?;
    let t = TestSet::from_json(&text).map_err(|e| stage(Stage::Replay, format!("{}: {e}", path.display())))?;
    t.validate(d).map_err(|e| stage(Stage::Replay, format!("{}: {e}", path.display())))?;
    Ok(t)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sequence_json(a: &Analysis) -> String {
    let labels = |blocks: &[rtlic_core::cfg::BlockId]| a.cfgs.labels(blocks);
    let v = serde_json::json!({
        "target": a.target.label,
        "sequence": labels(&a.sequence.blocks()),
        "queues": a.sequence.queues().iter().map(|q| labels(q)).collect::<Vec<_>>(),
        "signals": a.sequence.visited,
    });
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

fn instrumented_source(a: &Analysis) -> String {
    let queue = a.sequence.queues().into_iter().next().unwrap_or_default();
    let (inst, _) = instrument_queue(a, &queue);
    print_ast(&inst.design.ast)
}

fn block_listing(cs: &rtlic_core::cfg::CfgSet) -> String {
    let mut s = String::new();
    for cfg in &cs.cfgs {
        let kind = if cfg.clocked { "clocked" } else { "combinational" };
        s += &format!("process {} ({kind})\n", cfg.process + 1);
        for &id in &cfg.blocks {
            let b = cs.block(id);
            let succ = cs.labels(&cs.successors(id)).join(" ");
            s += &format!("  {:<5} lines {}-{} -> [{}]\n", b.label, b.span.0, b.span.1, succ);
        }
    }
    for e in &cs.inter_edges {
        s += &format!("{} -> {} ({})\n", cs.label(e.def), cs.label(e.use_), e.signal);
    }
    s
}

/// Writes report, tests, summary and SMT scripts under `<out>/<run_id>/`.
fn write_artifacts(report: &pipeline::RunReport, out: &Path) -> Result<PathBuf> {
    let dir = out.join(&report.run_id);
    fs::create_dir_all(dir.join("pivots")).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = vec![
        ("report.json".to_string(), report.to_json() + "\n"),
        ("tests.json".to_string(), report.combined.to_json() + "\n"),
        ("summary.txt".to_string(), report.summary()),
    ];
    let mut call = 0;
    for (k, attempt) in report.attempts.iter().enumerate() {
        let result = &attempt.result;
        for t in result.targets.iter().chain(std::iter::once(&result.final_target)) {
            for s in &t.scripts {
                call += 1;
                let name = format!("pivots/{:03}_q{}_{}.smt2", call, k + 1, t.marker);
                files.push((name, format!("; {} {} ({})\n{}", t.marker, s.pivot, s.verdict, s.script)));
            }
        }
    }
    for (name, text) in &files {
        fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))?;
    }
    let manifest = serde_json::json!({
        "schema_version": pipeline::SCHEMA_VERSION,
        "run_id": report.run_id,
        "files": files.iter().map(|(n, t)| serde_json::json!({"name": n, "bytes": t.len()})).collect::<Vec<_>>(),
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(dir)
}

fn cmd_gen(args: &GenArgs) -> Result<bool> {
    let report = args.search.run(&args.target, &args.out)?;
    let dir = write_artifacts(&report, &args.out)?;
    print!("{}", report.summary());
    println!("artifacts: {}", dir.display());
    Ok(report.activated && report.replay_passed)
}

fn cmd_replay(args: &ReplayArgs) -> Result<bool> {
    let d = args.target.design.load()?;
    let cs = rtlic_core::cfg::build_cfg_set(&d);
    let target = resolve_target(&cs, &args.target.target).map_err(|e| stage(Stage::Target, e))?;
    let t = load_tests(&args.tests, &d)?;
    let n = args.unroll.unwrap_or(t.len() as u32).max(1);
    let ok = replay_check(&d, &t, &target, n).map_err(|e| stage(Stage::Replay, e))?;
    println!("target {} {} within {n} cycles", target.label, if ok { "activated" } else { "not activated" });
    Ok(ok)
}

fn cmd_dump(args: &DumpArgs) -> Result<bool> {
    let analysis = || -> Result<Analysis> {
        let Some(target) = &args.target else {
            anyhow::bail!(
                "usage: --target is required for --what {}",
                args.what.to_possible_value().unwrap().get_name()
            );
        };
        Ok(analyze(args.design.load()?, target)?)
    };
    let text = match args.what {
        DumpWhat::CfgDot => rtlic_core::cfg::build_cfg_set(&args.design.load()?).to_dot(),
        DumpWhat::Seq => {
            let a = analysis()?;
            format!("{}\n{}", a.sequence.render(&a.cfgs), sequence_json(&a))
        }
        DumpWhat::Instrumented => instrumented_source(&analysis()?),
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(true)
}

fn cmd_cfg(args: &CfgArgs) -> Result<bool> {
    let cs = rtlic_core::cfg::build_cfg_set(&args.design.load()?);
    print!("{}", if args.dot { cs.to_dot() } else { block_listing(&cs) });
    Ok(true)
}

fn cmd_seq(args: &TargetArgs) -> Result<bool> {
    let a = args.analyze()?;
    println!("{}", a.sequence.render(&a.cfgs));
    print!("{}", sequence_json(&a));
    Ok(true)
}

fn cmd_instrument(args: &InstrumentArgs) -> Result<bool> {
    write_or_print(args.emit.as_deref(), &instrumented_source(&args.target.analyze()?))?;
    Ok(true)
}

fn cmd_smt(args: &SmtArgs) -> Result<bool> {
    let report = args.search.run(&args.target, Path::new("out"))?;
    let mut calls = Vec::new();
    for attempt in &report.attempts {
        let r = &attempt.result;
        for t in r.targets.iter().chain(std::iter::once(&r.final_target)) {
            calls.extend(t.scripts.iter().map(|s| (t.marker.as_str(), s)));
        }
    }
    for (k, (marker, s)) in calls.iter().enumerate() {
        eprintln!("{:>3} {:<10} {:<16} {}", k + 1, marker, s.pivot, s.verdict);
    }
    let Some((_, s)) = args.pivot.checked_sub(1).and_then(|k| calls.get(k)) else {
        anyhow::bail!("[concolic] the run made {} solver calls; no call {}", calls.len(), args.pivot);
    };
    write_or_print(args.out.as_deref(), &s.script)?;
    Ok(true)
}

fn cmd_sim(args: &SimArgs) -> Result<bool> {
    let d = args.design.load()?;
    let cs = rtlic_core::cfg::build_cfg_set(&d);
    let t = load_tests(&args.tests, &d)?;
    let n = args.unroll.unwrap_or(t.len() as u32).max(1);
    let trace = simulate_with(&d, &cs, &t, n).map_err(|e| stage(Stage::Replay, e))?;
    print!("{}", trace.to_log(&cs));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Dump(a) => cmd_dump(a),
        Command::Cfg(a) => cmd_cfg(a),
        Command::Seq(a) => cmd_seq(a),
        Command::Instrument(a) => cmd_instrument(a),
        Command::Smt(a) => cmd_smt(a),
        Command::Sim(a) => cmd_sim(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rtlic: {e:#}");
            ExitCode::from(2)
        }
    }
}
