use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trapdoor::channel::{format_bits, parse_bits, Bit};
use trapdoor::codec::{decode_block_traced, transmit, Codebook};
use trapdoor::export::{
    to_json, write_csv_file, write_iterates_csv, write_json_file, write_value_csv,
};
use trapdoor::golden::{
    stationary_check, verify_fixed_point, FixedPointReport, StationaryReport, VerifyParams,
};
use trapdoor::report::Check;
use trapdoor::search::ActionSearch;
use trapdoor::sim::{
    dp_study, run, trial_rng, ExperimentConfig, ExperimentReport, Mode, PolicySource,
};
use trapdoor::{Error, GoldenConstants};

#[derive(Parser)]
#[command(
    name = "trapdoor",
    version,
    about = "Feedback capacity of the trapdoor channel"
)]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretized value iteration, greedy policy and a simulated trajectory.
    Solve(SolveArgs),
    /// Check the closed-form fixed point of the Bellman equation.
    Verify(VerifyArgs),
    /// Encode, transmit and decode one message, or decode given outputs.
    Codec(CodecArgs),
    /// Run a seeded experiment.
    Simulate(SimulateArgs),
    /// Print the golden-ratio constants at full precision.
    Constants,
}

#[derive(Args)]
struct OutDir {
    /// Directory for CSV/JSON artifacts; nothing is written without it.
    #[arg(long, env = "TRAPDOOR_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, default_value_t = 4000, value_parser = clap::value_parser!(u64).range(2..))]
    actions: u64,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Steps of the greedy belief trajectory.
    #[arg(long, default_value_t = 1_000_000)]
    steps: usize,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 4001, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[arg(long, default_value_t = 8001, value_parser = clap::value_parser!(u64).range(2..))]
    actions: u64,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    /// Average reward to subtract instead of log2(phi).
    #[arg(long)]
    rho: Option<f64>,
    /// Scan every action pair instead of the concave search.
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct CodecArgs {
    /// Message index in the codebook.
    #[arg(long, default_value_t = 0)]
    message: u128,
    /// Block length.
    #[arg(long = "N", visible_alias = "block-length", default_value_t = 10)]
    n: usize,
    /// Initial channel state; drawn from the seed if omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    initial_state: Option<u8>,
    /// Decode these channel outputs instead of simulating a transmission.
    #[arg(long)]
    outputs: Option<String>,
    /// Print the backward-decoding table.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    DpSim,
    CodecRoundtrip,
    Flush,
    RateTable,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DpSim => Mode::DpSim,
            ModeArg::CodecRoundtrip => Mode::CodecRoundtrip,
            ModeArg::Flush => Mode::Flush,
            ModeArg::RateTable => Mode::RateTable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Learned,
    Conjectured,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "config")]
    mode: Option<ModeArg>,
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "N", visible_alias = "block-length")]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Codec round trip over every message and both initial states.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    flush_cap: Option<usize>,
    #[command(flatten)]
    out: OutDir,
}

/// Failure that maps to an exit code.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::MessageOutOfRange { .. }
            | Error::BlockLengthTooLarge(_)
            | Error::InvalidSequence(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn prepare_out(out: &OutDir) -> Result<Option<&Path>, Failure> {
    match &out.out {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
            Ok(Some(dir.as_path()))
        }
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "  [{}] {:<28} measured={:<14.6e} reference={:<12.6} tol={:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.reference,
            c.tolerance
        );
    }
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", to_json(value)?);
    Ok(())
}

fn cmd_solve(args: &SolveArgs, seed: u64, json: bool) -> CmdResult {
    let out = prepare_out(&args.out)?;
    let mut cfg = ExperimentConfig::new(Mode::DpSim);
    cfg.seed = seed;
    cfg.grid_size = args.grid as usize;
    cfg.action_grid = args.actions as usize;
    cfg.iterations = args.iters;
    cfg.steps = args.steps;
    cfg.policy = PolicySource::Learned;
    let study = dp_study(&cfg)?;
    let vi = study
        .value_iteration
        .as_ref()
        .expect("learned policy runs value iteration");

    if let Some(dir) = out {
        write_csv_file(&dir.join("value.csv"), |w| {
            write_value_csv(w, &vi.value, Some(&vi.policy), None)
        })?;
        let h = vi.differential();
        write_csv_file(&dir.join("differential.csv"), |w| {
            write_value_csv(w, &h, None, Some(&study.histogram))
        })?;
        write_json_file(&dir.join("solve.json"), &study.report)?;
    }
    if json {
        emit_json(&study.report)?;
    } else {
        println!(
            "value iteration: grid {} actions {} iterations {}",
            args.grid, args.actions, args.iters
        );
        if let Some(inc) = vi.increments.last() {
            println!("  last increment J_k(0) - J_(k-1)(0) = {inc:.6}");
        }
        match study.report.quantities.get("avg_reward") {
            Some(r) => println!("  simulated reward over {} steps = {r:.6}", args.steps),
            None => println!("  simulated reward: undefined (no steps)"),
        }
        if let Some(m) = study.report.quantities.get("concentration_near_b") {
            println!("  visits within one bin of b1..b4 = {m:.6}");
        }
        print_checks(&study.report.checks);
    }
    // A study at arbitrary settings is not a pass/fail run.
    Ok(true)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    fixed_point: &'a FixedPointReport,
    stationary: &'a StationaryReport,
    passed: bool,
}

fn cmd_verify(args: &VerifyArgs, json: bool) -> CmdResult {
    let out = prepare_out(&args.out)?;
    let mut params = VerifyParams::new(
        args.grid as usize,
        args.actions as usize,
        args.iters as usize,
    );
    if let Some(rho) = args.rho {
        params.rho = rho;
    }
    if args.exhaustive {
        params.bellman = params.bellman.with_search(ActionSearch::Exhaustive);
    }
    let fixed = verify_fixed_point(params)?;
    let stationary = stationary_check()?;
    let passed = fixed.passed && stationary.passed;
    let report = VerifyOutput {
        fixed_point: &fixed,
        stationary: &stationary,
        passed,
    };
    if let Some(dir) = out {
        write_json_file(&dir.join("verify.json"), &report)?;
        write_csv_file(&dir.join("verify_iterates.csv"), |w| {
            write_iterates_csv(w, &fixed.iterates)
        })?;
    }
    if json {
        emit_json(&report)?;
    } else {
        println!(
            "fixed point: grid {} actions {} iterations {} rho {:.12}",
            args.grid, args.actions, args.iters, params.rho
        );
        println!(
            "{:>4} {:>16} {:>16} {:>16}",
            "k", "deviation", "max increase", "sup change"
        );
        for r in &fixed.iterations {
            println!(
                "{:>4} {:>16.6e} {:>16.6e} {:>16.6e}",
                r.k, r.fixed_point_deviation, r.max_increase, r.sup_change
            );
        }
        println!(
            "  bellman residual |Th - rho - h_tilde| = {:.6e}",
            fixed.bellman_residual
        );
        println!(
            "  self residual    |Th - rho - h|       = {:.6e}",
            fixed.self_residual
        );
        println!(
            "  argmax at b2 = ({:.9}, {:.9})",
            fixed.argmax_at_b2.delta, fixed.argmax_at_b2.gamma
        );
        print_checks(&fixed.checks);
        println!(
            "stationary chain on b1..b4: expected reward {:.12}",
            stationary.expected_reward
        );
        print_checks(&stationary.checks);
        println!("overall: {}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(passed)
}

#[derive(Serialize)]
struct CodecOutput {
    block_length: usize,
    codebook_size: u128,
    rate: f64,
    message: Option<u128>,
    initial_state: Option<u8>,
    action_sequence: Option<String>,
    inputs: Option<String>,
    outputs: String,
    differential: String,
    decoded_sequence: String,
    decoded_message: u128,
    trace: Vec<(usize, u8, String)>,
    correct: bool,
}

fn cmd_codec(args: &CodecArgs, seed: u64, json: bool) -> CmdResult {
    let (outputs, sent) = match &args.outputs {
        Some(text) => {
            let y = parse_bits(text)
                .ok_or_else(|| Failure::Usage(format!("not a bit string: {text:?}")))?;
            (y, None)
        }
        None => {
            let book = Codebook::new(args.n)?;
            let seq = book.unrank(args.message)?;
            let mut rng = trial_rng(seed, 0);
            let s0 = match args.initial_state {
                Some(s) => Bit::from(s == 1),
                None => Bit::from(rand::Rng::random::<bool>(&mut rng)),
            };
            let tx = transmit(&seq, s0, &mut rng);
            (tx.outputs.clone(), Some((seq, s0, tx)))
        }
    };
    let n = outputs.len();
    let book = Codebook::new(n)?;
    let trace = decode_block_traced(&outputs)?;
    let decoded_message = book.rank(&trace.decoded)?;
    let correct = sent
        .as_ref()
        .is_none_or(|(seq, _, _)| *seq == trace.decoded);

    let report = CodecOutput {
        block_length: n,
        codebook_size: book.size(),
        rate: book.rate(),
        message: sent.as_ref().map(|_| args.message),
        initial_state: sent.as_ref().map(|(_, s, _)| s.as_u8()),
        action_sequence: sent.as_ref().map(|(seq, _, _)| seq.to_string()),
        inputs: sent.as_ref().map(|(_, _, tx)| format_bits(&tx.inputs)),
        outputs: format_bits(&outputs),
        differential: trace.differential.to_string(),
        decoded_sequence: trace.decoded.to_string(),
        decoded_message,
        trace: trace
            .steps
            .iter()
            .map(|s| (s.k, s.bit.as_u8(), s.case.to_string()))
            .collect(),
        correct,
    };
    if json {
        emit_json(&report)?;
        return Ok(correct);
    }
    println!(
        "N={n} codebook size {} rate {:.6}",
        book.size(),
        book.rate()
    );
    if let Some((seq, s0, tx)) = &sent {
        println!("message   {}", args.message);
        println!("x~        {seq}");
        println!("s0        {}", s0.as_u8());
        println!("x         {}", format_bits(&tx.inputs));
    }
    println!("y         {}", format_bits(&outputs));
    println!("y~        {}", trace.differential);
    if args.trace {
        print!("{}", trace.table());
    }
    println!("decoded   {} (message {decoded_message})", trace.decoded);
    if sent.is_some() {
        println!(
            "{}",
            if correct {
                "round trip OK"
            } else {
                "round trip FAILED"
            }
        );
    }
    Ok(correct)
}

fn simulate_config(args: &SimulateArgs, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => ExperimentConfig::new(args.mode.expect("clap requires mode without config").into()),
    };
    if let Some(m) = args.mode {
        cfg.mode = m.into();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    set!(trials, args.trials);
    set!(block_length, args.n);
    set!(grid_size, args.grid);
    set!(action_grid, args.actions);
    set!(iterations, args.iters);
    set!(steps, args.steps);
    set!(flush_cap, args.flush_cap);
    if let Some(p) = args.policy {
        cfg.policy = match p {
            PolicyArg::Learned => PolicySource::Learned,
            PolicyArg::Conjectured => PolicySource::Conjectured,
        };
    }
    cfg.exhaustive |= args.exhaustive;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, json: bool) -> CmdResult {
    let out = prepare_out(&args.out)?;
    let cfg = simulate_config(args, seed)?;
    let report: ExperimentReport = run(&cfg)?;
    if let Some(dir) = out {
        write_json_file(&dir.join("simulate.json"), &report)?;
    }
    if json {
        emit_json(&report)?;
    } else {
        print!("{}", report.to_text());
        for f in &report.failures {
            println!(
                "  failure: message {} s0 {} stream {} sent {} x {} y {} decoded {}",
                f.message, f.initial_state, f.stream, f.sent, f.inputs, f.outputs, f.decoded
            );
        }
        eprintln!("wall clock {:.2}s", report.wall_clock.as_secs_f64());
    }
    Ok(report.passed)
}

fn cmd_constants(json: bool) -> CmdResult {
    let g = GoldenConstants::new();
    if json {
        emit_json(&g)?;
    } else {
        for (name, v) in [
            ("phi", g.phi),
            ("rho", g.rho),
            ("b1", g.b1),
            ("b2", g.b2),
            ("b3", g.b3),
            ("b4", g.b4),
            ("c1", g.c1),
            ("c2", g.c2),
        ] {
            println!("{name:<4} {v:.17}");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(0);
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, seed, cli.json),
        Command::Verify(a) => cmd_verify(a, cli.json),
        Command::Codec(a) => cmd_codec(a, seed, cli.json),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.json),
        Command::Constants => cmd_constants(cli.json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
