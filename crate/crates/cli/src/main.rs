use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use privrec_core::exact::{ExactConfig, ExactIndex};
use privrec_core::lsh::{query_top1, query_topk, topk_prep, LogBase, LshIndex, LshParams};
use privrec_core::par::Exec;
use privrec_core::protocol::{run_query, ClientConfig, ClientSession, PrivateAnswer, PrivateQuery, Server, ServerConfig};
use privrec_core::rules::spmf::{load_rules, write_rules};
use privrec_core::rules::{collate_capacitated, default_recommendation, OrderingFunction};
use privrec_core::synth::{gen_synthetic, gen_transactions, SyntheticSpec};
use privrec_core::transport::{default_port, run_client, run_server, Loopback, PORT_ENV};
use privrec_core::{ItemSet, RuleDatabase};
use privrec_cli::accuracy::{accuracy_csv, run_accuracy, AccuracyConfig};
use privrec_cli::bench::{run_bench, to_csv, BenchConfig};
use privrec_cli::{parse_items, parse_list, parse_ordering, CliError, CriterionName, RunMode};

/// Confidences are stored as integers at this scale.
const CONF_SCALE: u64 = 10_000;

#[derive(Parser)]
#[command(name = "privrec", version, about = "Association-rule recommendation with private retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic rule file (and optionally query transactions).
    Gen(GenArgs),
    /// Load a rule file and report counts.
    LoadCheck(LoadArgs),
    /// Serve private queries over TCP.
    Serve(ServeArgs),
    /// Run one query.
    Query(QueryArgs),
    /// Measure query latency, or LSH accuracy with `--accuracy`.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    rules: usize,
    #[arg(long, default_value_t = 10_000)]
    universe: u32,
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rule file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write this many query transactions.
    #[arg(long)]
    transactions: Option<usize>,
    #[arg(long, default_value_t = 5)]
    transaction_len: usize,
    #[arg(long)]
    transactions_out: Option<PathBuf>,
}

#[derive(Args)]
struct LoadArgs {
    path: PathBuf,
    /// Universe size; defaults to the largest item id.
    #[arg(long)]
    universe: Option<u32>,
}

#[derive(Args, Clone)]
struct KeyArgs {
    /// Modulus size of the homomorphic keys.
    #[arg(long, default_value_t = 1024)]
    rsa_bits: u32,
    /// Dimensions of the record OT.
    #[arg(long, default_value_t = 3)]
    ot_dims: usize,
    /// Finest LSH signature width; the schedule is scaled from it.
    #[arg(long, default_value_t = 32)]
    sig_bits: usize,
    /// Use one level of `--sig-bits` bits with this many tables instead of
    /// the three-level schedule; keeps approximate private tables small.
    #[arg(long)]
    lsh_tables: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl KeyArgs {
    fn lsh(&self) -> LshParams {
        lsh_params(self.sig_bits, self.lsh_tables, self.seed)
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Defaults to the PRIVREC_PORT environment variable, then 7464.
    #[arg(long, env = PORT_ENV)]
    port: Option<u16>,
    /// Also serve approximate sessions.
    #[arg(long)]
    approx: bool,
    #[command(flatten)]
    keys: KeyArgs,
}

#[derive(Args)]
struct QueryArgs {
    /// Transaction items, e.g. `3,17,42`.
    #[arg(long)]
    items: String,
    /// Rule file for local execution.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Address of a running server (private modes only).
    #[arg(long)]
    server: Option<String>,
    #[arg(long, default_value = "exact-plain")]
    mode: RunMode,
    #[arg(long, default_value = "all")]
    criterion: CriterionName,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    w: u64,
    #[arg(long, default_value_t = 3)]
    t: usize,
    #[arg(long, default_value = "weight", value_parser = parse_ordering)]
    ordering: OrderingFunction,
    #[command(flatten)]
    keys: KeyArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated modes.
    #[arg(long, default_value = "exact-plain")]
    mode: String,
    /// Comma-separated database sizes.
    #[arg(long, default_value = "1000")]
    d: String,
    /// Comma-separated transaction lengths.
    #[arg(long = "T", default_value = "5")]
    transaction_len: String,
    /// Comma-separated antecedent length bounds.
    #[arg(long, default_value = "3")]
    t: String,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    w: u64,
    #[arg(long, default_value = "all")]
    criterion: CriterionName,
    #[arg(long, default_value = "weight", value_parser = parse_ordering)]
    ordering: OrderingFunction,
    #[arg(long, default_value_t = 10_000)]
    universe: u32,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Run the LSH accuracy sweep instead; `--sig-bits` takes a list.
    #[arg(long)]
    accuracy: bool,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value = "32")]
    sig_bits: String,
    /// Single-level schedule with this many tables (latency runs).
    #[arg(long)]
    lsh_tables: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    rsa_bits: u32,
    #[arg(long, default_value_t = 3)]
    ot_dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn lsh_params(sig_bits: usize, tables: Option<usize>, seed: u64) -> LshParams {
    match tables {
        Some(l) => LshParams::single(sig_bits, l, seed),
        None => LshParams::for_signature_width(sig_bits, seed),
    }
}

fn usage(e: String) -> CliError {
    CliError::Usage(e)
}

fn read_db(path: &Path, universe: Option<u32>) -> Result<RuleDatabase, CliError> {
    let (db, report) = load_rules(BufReader::new(File::open(path)?), CONF_SCALE, universe)?;
    eprintln!(
        "loaded {} rules ({} input lines, {} duplicates merged), universe {}",
        report.stored_rules,
        report.input_rules,
        report.merged_duplicates,
        db.universe_size()
    );
    Ok(db.with_most_frequent_default(10))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        rules: a.rules,
        universe: a.universe,
        antecedent_len: a.min_len..=a.max_len,
        seed: a.seed,
        ..Default::default()
    };
    let db = gen_synthetic(&spec)?;
    let mut f = BufWriter::new(File::create(&a.out)?);
    write_rules(&db, &mut f, CONF_SCALE)?;
    f.flush()?;
    eprintln!("wrote {} rules to {}", db.len(), a.out.display());
    if let Some(n) = a.transactions {
        let path = a.transactions_out.ok_or_else(|| usage("--transactions needs --transactions-out".into()))?;
        let ts = gen_transactions(a.universe, spec.zipf_exponent, n, a.transaction_len, a.seed ^ 0x7ac7)?;
        let mut f = BufWriter::new(File::create(&path)?);
        for t in ts {
            let line: Vec<String> = t.iter().map(|i| i.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        f.flush()?;
    }
    Ok(())
}

fn load_check(a: LoadArgs) -> Result<(), CliError> {
    let db = read_db(&a.path, a.universe)?;
    let max_len = db.rules().iter().map(|r| r.antecedent.len()).max().unwrap_or(0);
    println!("rules={} universe={} max_antecedent={} max_weight={}", db.len(), db.universe_size(), max_len, db.max_weight());
    Ok(())
}

fn server_config(keys: &KeyArgs, approx: bool) -> ServerConfig {
    ServerConfig {
        key_bits: keys.rsa_bits,
        seed: keys.seed,
        approx: approx.then(|| keys.lsh()),
        ..Default::default()
    }
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let db = read_db(&a.rules, None)?;
    let server = Arc::new(Server::new(db, server_config(&a.keys, a.approx))?);
    let addr = format!("{}:{}", a.bind, a.port.unwrap_or_else(default_port));
    run_server(addr, server, |bound| eprintln!("listening on {bound}"))?;
    Ok(())
}

fn print_answer(items: &[u32], default_used: bool, extra: serde_json::Value) {
    let mut v = serde_json::json!({ "items": items, "default": default_used });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    println!("{v}");
}

fn print_private(a: &PrivateAnswer) {
    let stages: serde_json::Map<String, serde_json::Value> =
        a.timings.stages.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v.as_secs_f64() * 1e3))).collect();
    print_answer(
        &a.items,
        a.default_used,
        serde_json::json!({ "rule": a.rule.map(|r| r.0), "fetches": a.fetches, "stages_ms": stages }),
    );
}

fn query(a: QueryArgs) -> Result<(), CliError> {
    let t: ItemSet = parse_items(&a.items).map_err(usage)?;
    let criterion = a.criterion.build(a.k, a.w, a.t, a.ordering);
    if a.mode.is_private() {
        let q = match (a.mode, a.criterion) {
            (RunMode::ExactPrivate, CriterionName::All) => PrivateQuery::AllAssoc { w: a.w, t: a.t, cap: a.k },
            (RunMode::ApproxPrivate, CriterionName::Top1) => PrivateQuery::ApproxTop1(a.ordering),
            _ => return Err(usage("private modes answer exact-private with --criterion all and approx-private with --criterion top1".into())),
        };
        let client = ClientConfig { key_bits: a.keys.rsa_bits, ot_dims: a.keys.ot_dims, mode: q.mode(), seed: a.keys.seed, exec: Exec::default() };
        let answer = match (&a.server, &a.rules) {
            (Some(addr), _) => run_client(addr.as_str(), &client, &t, &q)?,
            (None, Some(path)) => {
                let db = read_db(path, None)?;
                let server = Arc::new(Server::new(db, server_config(&a.keys, a.mode == RunMode::ApproxPrivate))?);
                let mut s = ClientSession::open(Loopback::new(&server), &client)?;
                let ans = run_query(&mut s, &t, &q)?;
                s.close()?;
                ans
            }
            (None, None) => return Err(usage("private queries need --server or --rules".into())),
        };
        print_private(&answer);
        return Ok(());
    }
    let path = a.rules.as_ref().ok_or_else(|| usage("plain queries need --rules".into()))?;
    let db = read_db(path, None)?;
    match a.mode {
        RunMode::ExactPlain => {
            let index = ExactIndex::build(&db, &ExactConfig::with_seed(a.keys.seed), Exec::default())?;
            let ans = index.query(&t, &criterion, Exec::default())?;
            let list = if ans.rules.is_empty() { default_recommendation(&db) } else { collate_capacitated(&ans.rules, a.k) };
            let rules: Vec<u32> = ans.rules.iter().map(|r| r.id.0).collect();
            print_answer(&list.item_ids(), ans.rules.is_empty(), serde_json::json!({ "rules": rules, "fetches": ans.fetches }));
        }
        _ => {
            let params = a.keys.lsh();
            let rules = match a.criterion {
                CriterionName::Top1 => {
                    let index = LshIndex::from_db(&db, params, Exec::default())?;
                    query_top1(&t, &index, &db, &a.ordering)?.into_iter().collect::<Vec<_>>()
                }
                CriterionName::TopK => {
                    let index = topk_prep(&db, a.k, &params, a.keys.seed, LogBase::Natural, Exec::default())?;
                    query_topk(&t, &index, &db, &a.ordering, a.k)?
                }
                _ => return Err(usage("approx-plain answers --criterion top1 or topk".into())),
            };
            let list = if rules.is_empty() { default_recommendation(&db) } else { collate_capacitated(rules.iter().copied(), a.k) };
            let ids: Vec<u32> = rules.iter().map(|r| r.id.0).collect();
            print_answer(&list.item_ids(), rules.is_empty(), serde_json::json!({ "rules": ids }));
        }
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let widths: Vec<usize> = parse_list(&a.sig_bits).map_err(usage)?;
    if a.accuracy {
        let cfg = AccuracyConfig {
            rules: parse_list::<usize>(&a.d).map_err(usage)?[0],
            universe: a.universe,
            queries: a.queries,
            widths,
            ordering: a.ordering,
            seed: a.seed,
            ..Default::default()
        };
        let (_, rows) = run_accuracy(&cfg)?;
        return write_output(a.out.as_deref(), &accuracy_csv(&cfg, &rows));
    }
    let modes = a.mode.split(',').map(|m| m.trim().parse::<RunMode>()).collect::<Result<Vec<_>, _>>().map_err(usage)?;
    let cfg = BenchConfig {
        modes,
        db_sizes: parse_list(&a.d).map_err(usage)?,
        transaction_lens: parse_list(&a.transaction_len).map_err(usage)?,
        max_lens: parse_list(&a.t).map_err(usage)?,
        k: a.k,
        w: a.w,
        criterion: a.criterion,
        ordering: a.ordering,
        key_bits: a.rsa_bits,
        ot_dims: a.ot_dims,
        lsh: lsh_params(widths[0], a.lsh_tables, a.seed),
        universe: a.universe,
        repetitions: a.reps,
        seed: a.seed,
        exec: if a.sequential { Exec::Sequential } else { Exec::default() },
    };
    let rows = run_bench(&cfg)?;
    write_output(a.out.as_deref(), &to_csv(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::LoadCheck(a) => load_check(a),
        Command::Serve(a) => serve(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
