mod store;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kimap::channel::{FaultSchedule, SessionTranscript, Simulator};
use kimap::cost::{check_budget, compute_cost, BudgetLimits, CostParams};
use kimap::games::{self, Budgets, GameConfig, GameKind};
use kimap::protocol::{keygen, KeySlot, Server, Tag};
use kimap::{BitString, HashSpec, HashVariant, Prng};
use serde::Serialize;

use store::Paths;

const DEFAULT_SEED: u64 = 2010;
const DEFAULT_INIT_TAGS: usize = 3;
const DEFAULT_GAME_TAGS: usize = 2;

#[derive(Parser)]
#[command(name = "kimap", version, about = "Key-insulated mutual RFID authentication toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Key and message width in bits.
    #[arg(long, global = true, default_value_t = 64)]
    lambda: usize,
    /// Number of tags (init, game) or tags per batch (cost).
    #[arg(long, global = true)]
    tags: Option<usize>,
    #[arg(long, global = true, env = "KIMAP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = HashArg::Production)]
    hash: HashArg,
    /// Server database path. The master key and tag states live beside it.
    #[arg(long, global = true, default_value = "kimap.db")]
    db: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, global = true, default_value_t = 10_000)]
    trials: u32,
    /// Fault schedule applied by `run`.
    #[arg(long, global = true)]
    schedule: Option<PathBuf>,
    /// Exit with status 1 on operational failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Overwrite existing files on `init`.
    #[arg(long, global = true)]
    force: bool,
    /// Let tags stop scanning candidates at the first match.
    #[arg(long, global = true)]
    no_hardened_scan: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum HashArg {
    Production,
    Toy,
}

impl From<HashArg> for HashVariant {
    fn from(h: HashArg) -> Self {
        match h {
            HashArg::Production => HashVariant::Production,
            HashArg::Toy => HashVariant::Toy,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Provision a master key and tags, and write the server database.
    Init,
    /// Run authentication sessions against the stored database.
    Run {
        #[arg(long, default_value_t = 100)]
        sessions: usize,
    },
    /// Play a privacy game against a named distinguisher.
    Game {
        /// ind, forward, backward, backward-control or ind2tag.
        definition: String,
        /// random-guess, key-knowledge, key-knowledge-leaky, static-id or exhaustive.
        distinguisher: String,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Print the timing model and check it against the reader budget.
    Cost(CostArgs),
    /// Verify that y -> L xor y is a bijection on k-bit strings.
    Lemma1 {
        k: usize,
        /// Fixed L as hex:len; drawn from the seed when omitted.
        #[arg(long)]
        mask: Option<BitString>,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    e1: Option<u32>,
    #[arg(long)]
    e2: Option<u32>,
    #[arg(long)]
    r1: Option<u32>,
    #[arg(long)]
    r2: Option<u32>,
    #[arg(long)]
    rb: Option<u32>,
    #[arg(long)]
    q: Option<u32>,
}

impl BudgetArgs {
    fn apply(&self, mut b: Budgets) -> Budgets {
        let set = |slot: &mut u32, v: Option<u32>| *slot = v.unwrap_or(*slot);
        set(&mut b.e1, self.e1);
        set(&mut b.e2, self.e2);
        set(&mut b.r1, self.r1);
        set(&mut b.r2, self.r2);
        set(&mut b.rb, self.rb);
        set(&mut b.q, self.q);
        b
    }
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    hash_cycles: Option<u64>,
    #[arg(long)]
    tag_clock_hz: Option<u64>,
    #[arg(long)]
    t2r_bps: Option<u64>,
    #[arg(long)]
    r2t_bps: Option<u64>,
    #[arg(long)]
    serial_bps: Option<u64>,
    #[arg(long)]
    tag_hash_ops: Option<u64>,
    #[arg(long)]
    candidates: Option<u64>,
    #[arg(long)]
    serial_bits: Option<u64>,
}

/// A configuration mistake on the caller's side (exit status 2).
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err
        .chain()
        .any(|e| e.is::<Usage>() || e.is::<kimap::Error>());
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// `Ok(false)` is an operational failure under `--strict`.
fn dispatch(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Init => init(g),
        Command::Run { sessions } => run(g, *sessions),
        Command::Game {
            definition,
            distinguisher,
            budgets,
        } => game(g, definition, distinguisher, budgets),
        Command::Cost(args) => cost(g, args),
        Command::Lemma1 { k, mask } => lemma1(g, *k, mask.as_ref()),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn init(g: &Global) -> Result<bool> {
    let paths = Paths::new(&g.db);
    if !g.force {
        if let Some(p) = paths.existing() {
            return Err(usage(format!(
                "{} already exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    let n = g.tags.unwrap_or(DEFAULT_INIT_TAGS);
    let (server, tags) = keygen(g.lambda, n, &mut Prng::new(g.seed, 0))?;
    let states: Vec<_> = server
        .records()
        .iter()
        .zip(&tags)
        .map(|(r, t)| (r.label.clone(), t.snapshot()))
        .collect();
    store::save(&paths, g.lambda, Some(server.master()), server.records(), &states)?;

    let labels: Vec<&str> = server.records().iter().map(|r| r.label.as_str()).collect();
    if g.format == Format::Structured {
        #[derive(Serialize)]
        struct Init<'a> {
            lambda: usize,
            db: String,
            tags: &'a [&'a str],
        }
        emit(&Init {
            lambda: g.lambda,
            db: paths.db.display().to_string(),
            tags: &labels,
        })?;
    } else {
        println!("wrote {} (lambda={})", paths.db.display(), g.lambda);
        for l in labels {
            println!("{l}");
        }
    }
    Ok(true)
}

/// A stream id bound to `text`, so reruns against an evolved database do
/// not replay earlier nonces.
fn stream_for(text: &str) -> u64 {
    let bits = BitString::from_bytes(text.as_bytes(), text.len() * 8).expect("whole bytes");
    HashSpec::production(64)
        .expect("64 is a valid width")
        .digest(&bits)
        .to_u64()
}

#[derive(Default, Serialize)]
struct RunSummary {
    sessions: usize,
    accepted: usize,
    rejected: usize,
    recovered: usize,
    desynced: usize,
    desynced_tags: Vec<String>,
}

fn run(g: &Global, sessions: usize) -> Result<bool> {
    let paths = Paths::new(&g.db);
    let schedule = match &g.schedule {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?;
            FaultSchedule::parse(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => FaultSchedule::default(),
    };
    let dep = store::load(&paths)?;
    let h = HashSpec::new(g.hash.into(), dep.lambda)?;

    let mut server = Server::new(
        dep.master,
        dep.records,
        Prng::new(g.seed, stream_for(&dep.db_text)),
    )?;
    let mut tags = Vec::with_capacity(dep.tags.len());
    for (label, snap) in &dep.tags {
        if server.index_of(label).is_none() {
            return Err(usage(format!("tag {label} has no database record")));
        }
        let line = format!("{label} {} {}", snap.counter, snap.key);
        let prng = Prng::new(g.seed, stream_for(&line));
        tags.push(Tag::new(snap.key.clone(), snap.counter, prng).with_hardened(!g.no_hardened_scan));
    }

    let transcripts =
        Simulator::new().run_schedule(&mut server, &mut tags, &schedule, sessions, &h)?;

    let states: Vec<_> = dep
        .tags
        .iter()
        .zip(&tags)
        .map(|((l, _), t)| (l.clone(), t.snapshot()))
        .collect();
    store::save(&paths, dep.lambda, None, server.records(), &states)?;

    let mut summary = RunSummary {
        sessions,
        ..Default::default()
    };
    for t in &transcripts {
        match t.outcome_server.slot() {
            Some(slot) => {
                summary.accepted += 1;
                summary.recovered += (slot == KeySlot::Recovery) as usize;
            }
            None => summary.rejected += 1,
        }
    }
    summary.desynced_tags = server
        .records()
        .iter()
        .filter(|r| r.is_desynchronized())
        .map(|r| r.label.to_string())
        .collect();
    summary.desynced = summary.desynced_tags.len();

    let labels: Vec<String> = dep.tags.iter().map(|(l, _)| l.to_string()).collect();
    if g.format == Format::Structured {
        for t in &transcripts {
            emit(t)?;
        }
        #[derive(Serialize)]
        struct Line<'a> {
            summary: &'a RunSummary,
        }
        emit(&Line { summary: &summary })?;
    } else {
        println!("{:>6}  {:<10} {:<9} tag-key", "seq", "tag", "server");
        for t in &transcripts {
            print_session(t, &labels[t.tag]);
        }
        println!(
            "sessions={} accepted={} rejected={} recovered={} desynced={}",
            summary.sessions, summary.accepted, summary.rejected, summary.recovered, summary.desynced
        );
        for l in &summary.desynced_tags {
            println!("desynchronized: {l}");
        }
    }

    let healthy = summary.desynced == 0 && summary.rejected <= summary.accepted;
    Ok(healthy || !g.strict)
}

fn print_session(t: &SessionTranscript, label: &str) {
    let server = match t.outcome_server.slot() {
        Some(KeySlot::Current) => "accept",
        Some(KeySlot::Recovery) => "recover",
        None => "reject",
    };
    let tag = if t.outcome_tag == kimap::protocol::TagOutcome::Updated {
        "updated"
    } else {
        "kept"
    };
    println!("{:>6}  {:<10} {:<9} {}", t.session_seq, label, server, tag);
}

fn game(g: &Global, definition: &str, distinguisher: &str, budgets: &BudgetArgs) -> Result<bool> {
    let mut kind = GameKind::from_name(definition)
        .ok_or_else(|| usage(format!("unknown game definition '{definition}'")))?;
    // the leaky variant is key-knowledge with full-view oracles restored
    let name = match distinguisher {
        "key-knowledge-leaky" if kind == GameKind::Backward => {
            kind = GameKind::BackwardControl;
            "key-knowledge"
        }
        "key-knowledge-leaky" => {
            return Err(usage("key-knowledge-leaky applies to the backward game only"));
        }
        other => other,
    };
    if games::by_name(name).is_none() {
        return Err(usage(format!(
            "unknown distinguisher '{distinguisher}' (known: {}, key-knowledge-leaky)",
            games::DISTINGUISHERS.join(", ")
        )));
    }
    let cfg = GameConfig {
        lambda: g.lambda,
        n: g.tags.unwrap_or(DEFAULT_GAME_TAGS),
        hash: g.hash.into(),
        budgets: budgets.apply(Budgets::default()),
        trials: g.trials,
        seed: g.seed,
    };
    let mut result = games::run_game(kind, &cfg, || games::by_name(name).expect("checked"))?;
    result.distinguisher = distinguisher.to_string();

    if g.format == Format::Structured {
        emit(&result)?;
    } else {
        let s = &result.stats;
        println!(
            "game {} / {}  lambda={} n={} hash={:?} seed={}",
            result.definition, result.distinguisher, cfg.lambda, cfg.n, cfg.hash, cfg.seed
        );
        println!("trials     {}", s.trials);
        println!("wins       {}", s.wins);
        println!("win rate   {:.4}", s.win_rate);
        println!("advantage  {:.4} (ci95 ±{:.4})", s.advantage, s.ci95);
        println!("wilson     [{:.4}, {:.4}]", s.wilson_low, s.wilson_high);
    }
    Ok(true)
}

fn cost(g: &Global, a: &CostArgs) -> Result<bool> {
    let mut p = CostParams::with_lambda(g.lambda as u64);
    let set = |slot: &mut u64, v: Option<u64>| *slot = v.unwrap_or(*slot);
    set(&mut p.hash_cycles_per_block, a.hash_cycles);
    set(&mut p.tag_clock_hz, a.tag_clock_hz);
    set(&mut p.t2r_rate_bps, a.t2r_bps);
    set(&mut p.r2t_rate_bps, a.r2t_bps);
    set(&mut p.serial_rate_bps, a.serial_bps);
    set(&mut p.tag_hash_ops, a.tag_hash_ops);
    set(&mut p.candidates, a.candidates);
    p.serial_bits_per_tag = a.serial_bits;
    if let Some(n) = g.tags {
        p.batch_tags = n as u64;
    }
    let report = compute_cost(&p)?;
    let verdict = check_budget(&report, &BudgetLimits::default())?;

    if g.format == Format::Structured {
        #[derive(Serialize)]
        struct Line<'a> {
            params: &'a CostParams,
            report: &'a kimap::cost::CostReport,
            budget: &'a kimap::cost::BudgetVerdict,
        }
        emit(&Line {
            params: &p,
            report: &report,
            budget: &verdict,
        })?;
    } else {
        println!("hash (1 block)        {} ms", report.hash_time_ms);
        println!("tag compute           {} ms", report.tag_compute_ms);
        println!("tag -> reader         {} ms  ({} bits)", report.t2r_ms, report.t2r_bits);
        println!("reader -> tag         {} ms  ({} bits)", report.r2t_ms, report.r2t_bits);
        println!("total                 {} ms  (~{} ms)", report.total_ms, report.total_approx_ms);
        println!(
            "serial, one tag       {} ms  ({} bits)",
            report.single_serial_ms, report.serial_bits_per_tag
        );
        println!("serial, {:<4} tags     {} s", report.batch_tags, report.batch_serial_s);
        for f in &verdict.findings {
            println!(
                "{:<5} {}: {} ms vs {} ms",
                if f.pass { "pass" } else { "FAIL" },
                f.check,
                f.value_ms,
                f.limit_ms
            );
        }
        println!("budget {}", if verdict.pass { "pass" } else { "FAIL" });
    }
    Ok(verdict.pass || !g.strict)
}

fn lemma1(g: &Global, k: usize, mask: Option<&BitString>) -> Result<bool> {
    if !(1..=games::LEMMA1_MAX_WIDTH).contains(&k) {
        return Err(usage(format!(
            "k must be between 1 and {}, got {k}",
            games::LEMMA1_MAX_WIDTH
        )));
    }
    let l = match mask {
        Some(m) => m.clone(),
        None => Prng::new(g.seed, 0).next_bits(k),
    };
    let report = games::lemma1_bijection_check(k, &l)?;
    if g.format == Format::Structured {
        emit(&report)?;
    } else {
        println!("k={} L={}", report.k, report.l);
        println!(
            "{} inputs, {} distinct images: {}",
            report.domain,
            report.distinct_images,
            if report.bijective { "bijective" } else { "NOT bijective" }
        );
    }
    Ok(report.bijective || !g.strict)
}
