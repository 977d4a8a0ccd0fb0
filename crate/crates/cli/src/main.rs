//! Command-line front end: ordinal tables, decompositions, norms,
//! operator-norm certificates, the wavelet transform, and the verification
//! harness. Thread count for the parallel suites follows RAYON_NUM_THREADS.

use std::io::Read;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use haar_postorder::dwt::{
    analyze_streaming, synthesize, ExactValue, HaarCoefficients, Signal,
};
use haar_postorder::dyadic::{lowermost_level, subtree, Depth, DyadicInterval, IntervalSet};
use haar_postorder::geometry::carleson_order_interval;
use haar_postorder::norms::{
    bmo_norm_sq, certify_lower_bound, certify_upper_bound_on_subspace,
    hp_norm, HaarExpansion,
};
use haar_postorder::order::{
    lex_ordinal, post_ordinal_closed, Rearrangement,
};
use haar_postorder::verify::{
    conjecture_scan, verify_all, verify_coneright, verify_decomposition, verify_dwt,
    verify_fefferman, verify_kg0, verify_leftmost, verify_lexorder, verify_opnorm,
    verify_orderint, verify_ordinals, verify_remark, VerificationReport,
};
use haar_postorder::{enumerate, DyadicRational};

#[derive(Parser)]
#[command(name = "haar-postorder", about = "Postorder rearrangement of the Haar system on dyadic trees", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RearrangementArg {
    Postorder,
    Inverse,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderKind {
    Post,
    Lex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the full permutation as CSV: level,pos,tau_level,tau_pos
    Map {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "postorder")]
        rearrangement: RearrangementArg,
    },
    /// Emit an interval -> ordinal table as CSV: level,pos,ordinal
    Order {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "post")]
        kind: OrderKind,
    },
    /// Maximal decomposition of the postorder order interval [J1, J2]
    Decompose {
        #[arg(long)]
        n: u32,
        /// first endpoint, as level,pos
        #[arg(long)]
        j1: String,
        /// second endpoint, as level,pos
        #[arg(long)]
        j2: String,
        /// emit Graphviz DOT instead of JSON
        #[arg(long)]
        dot: bool,
    },
    /// Norms of a Haar expansion read as JSON from stdin or --input
    Norm {
        #[command(subcommand)]
        which: NormCommand,
    },
    /// Certified operator-norm bounds for a restricted rearrangement
    Opnorm {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "postorder")]
        rearrangement: RearrangementArg,
        /// all | subtree:L,K | lex:L,K
        #[arg(long, default_value = "all")]
        restrict: String,
        #[arg(long, default_value = "42")]
        seed: u64,
    },
    /// Haar wavelet transform
    Dwt {
        #[command(subcommand)]
        which: DwtCommand,
    },
    /// Run verification suites; exit code 1 if any asserting suite fails
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = "6")]
        n_max: u32,
        #[arg(long, default_value = "42")]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// The conjecture experiment: measured vs predicted, reported only
    Conjecture {
        #[arg(long, default_value = "12")]
        n_max: u32,
    },
}

#[derive(Subcommand)]
enum NormCommand {
    /// Exact squared BMO norm with its arg-sup interval
    Bmo(NormInput),
    /// H^p norm of the square function (exact Parseval value when p = 2)
    Hp {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        input: NormInput,
    },
}

#[derive(Args)]
struct NormInput {
    /// JSON file {"N": int, "coeffs": [[level, pos, "num", exp], ...]};
    /// stdin when omitted
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DwtCommand {
    /// Decompose newline-separated samples; emits CSV
    /// ordinal,level,pos,value[,half_exponent], details first (in emission
    /// order), then the trend as a final row with level -1
    Analyze {
        /// level-by-level pyramid instead of the streaming pass
        #[arg(long)]
        batch: bool,
        /// double precision instead of exact values
        #[arg(long)]
        double: bool,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Invert the analyze CSV back to newline-separated samples
    Synth {
        #[arg(long)]
        double: bool,
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Map { n, rearrangement } => cmd_map(n, rearrangement),
        Command::Order { n, kind } => cmd_order(n, kind),
        Command::Decompose { n, j1, j2, dot } => cmd_decompose(n, &j1, &j2, dot),
        Command::Norm { which } => cmd_norm(which),
        Command::Opnorm {
            n,
            rearrangement,
            restrict,
            seed,
        } => cmd_opnorm(n, rearrangement, &restrict, seed),
        Command::Dwt { which } => cmd_dwt(which),
        Command::Verify {
            suite,
            n_max,
            seed,
            format,
        } => cmd_verify(&suite, n_max, seed, format),
        Command::Conjecture { n_max } => cmd_conjecture(n_max),
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            Ok(buf)
        }
    }
}

fn parse_interval(s: &str, depth: Depth) -> Result<DyadicInterval> {
    let (l, k) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected level,pos, got {s:?}"))?;
    Ok(DyadicInterval::new(
        l.trim().parse()?,
        k.trim().parse()?,
        depth,
    )?)
}

fn interval_pair(i: DyadicInterval) -> serde_json::Value {
    json!([i.level(), i.pos()])
}

fn set_pairs(set: &IntervalSet) -> serde_json::Value {
    json!(set.iter().map(interval_pair).collect::<Vec<_>>())
}

fn build_rearrangement(depth: Depth, kind: RearrangementArg) -> Result<Rearrangement> {
    Ok(match kind {
        RearrangementArg::Postorder => Rearrangement::postorder(depth)?,
        RearrangementArg::Inverse => Rearrangement::inverse_postorder(depth)?,
    })
}

fn cmd_map(n: u32, kind: RearrangementArg) -> Result<()> {
    let depth = Depth::new(n)?;
    let rearrangement = build_rearrangement(depth, kind)?;
    println!("level,pos,tau_level,tau_pos");
    for (from, to) in rearrangement.iter_pairs() {
        println!("{},{},{},{}", from.level(), from.pos(), to.level(), to.pos());
    }
    Ok(())
}

fn cmd_order(n: u32, kind: OrderKind) -> Result<()> {
    let depth = Depth::new(n)?;
    println!("level,pos,ordinal");
    for interval in enumerate(depth) {
        let ordinal = match kind {
            OrderKind::Post => post_ordinal_closed(interval, depth)?,
            OrderKind::Lex => lex_ordinal(interval),
        };
        println!("{},{},{}", interval.level(), interval.pos(), ordinal);
    }
    Ok(())
}

fn cmd_decompose(n: u32, j1: &str, j2: &str, dot: bool) -> Result<()> {
    let depth = Depth::new(n)?;
    let j1 = parse_interval(j1, depth)?;
    let j2 = parse_interval(j2, depth)?;
    let (decomposition, report) = carleson_order_interval(j1, j2, depth)?;
    if dot {
        print_dot(depth, &decomposition)?;
        return Ok(());
    }
    let out = json!({
        "maximal": decomposition.maximal.iter().map(|&i| interval_pair(i)).collect::<Vec<_>>(),
        "cone": decomposition.cone.chain.iter().map(|&i| interval_pair(i)).collect::<Vec<_>>(),
        "fillup": decomposition.fillup.blocks.iter().map(set_pairs).collect::<Vec<_>>(),
        "subtrees": decomposition.subtrees.iter().map(set_pairs).collect::<Vec<_>>(),
        "carleson": { "value": report.value, "argsup": report.argsup.map(interval_pair) },
        "bounds": { "lower": report.lower, "upper": report.upper,
                    "lower_asserted": report.lower_asserted, "ok": report.satisfied },
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn print_dot(
    depth: Depth,
    decomposition: &haar_postorder::geometry::MaximalDecomposition,
) -> Result<()> {
    let cone: IntervalSet = decomposition.cone.as_set(depth)?;
    let fillup = decomposition.fillup.as_set(depth)?;
    let mut subtrees = IntervalSet::empty(depth)?;
    for t in &decomposition.subtrees {
        subtrees = subtrees.union(t)?;
    }
    println!("digraph order_interval {{");
    println!("  node [shape=box];");
    for i in enumerate(depth) {
        let color = if cone.contains(i) {
            "lightblue"
        } else if fillup.contains(i) {
            "lightsalmon"
        } else if subtrees.contains(i) {
            "palegreen"
        } else {
            "white"
        };
        println!(
            "  \"I_{{{},{}}}\" [style=filled, fillcolor={}];",
            i.level(),
            i.pos(),
            color
        );
        if i.level() < depth.get() {
            let (l, r) = i.children(depth)?;
            for c in [l, r] {
                println!(
                    "  \"I_{{{},{}}}\" -> \"I_{{{},{}}}\";",
                    i.level(),
                    i.pos(),
                    c.level(),
                    c.pos()
                );
            }
        }
    }
    println!("}}");
    Ok(())
}

fn read_expansion(input: &Option<PathBuf>) -> Result<HaarExpansion> {
    #[derive(serde::Deserialize)]
    struct Raw {
        #[serde(rename = "N")]
        n: u32,
        coeffs: Vec<(u32, u64, String, u32)>,
    }
    let raw: Raw = serde_json::from_str(&read_input(input)?)?;
    let depth = Depth::new(raw.n)?;
    let mut f = HaarExpansion::zero(depth);
    for (level, pos, num, exp) in raw.coeffs {
        let value = DyadicRational::from_str(&format!("{num}/2^{exp}"))
            .map_err(|e| anyhow!("bad coefficient: {e}"))?;
        f.set(DyadicInterval::new(level, pos, depth)?, value);
    }
    Ok(f)
}

fn cmd_norm(which: NormCommand) -> Result<()> {
    match which {
        NormCommand::Bmo(input) => {
            let f = read_expansion(&input.input)?;
            let result = bmo_norm_sq(&f);
            let out = json!({
                "norm_sq": result.value_sq,
                "norm": result.value_sq.to_f64().sqrt(),
                "argsup": interval_pair(result.argsup),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        NormCommand::Hp { p, input } => {
            let f = read_expansion(&input.input)?;
            let value = hp_norm(&f, p)?;
            let out = if p == 2.0 {
                json!({ "p": p, "norm": value, "norm_sq": f.h2_norm_sq() })
            } else {
                json!({ "p": p, "norm": value })
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}

fn cmd_opnorm(n: u32, kind: RearrangementArg, restrict: &str, seed: u64) -> Result<()> {
    let depth = Depth::new(n)?;
    let rearrangement = build_rearrangement(depth, kind)?;
    // the restriction set and the collection witnessing the lower bound
    let (collection, witness) = if restrict == "all" {
        let full = IntervalSet::full(depth)?;
        (full.clone(), full)
    } else if let Some(spec) = restrict.strip_prefix("subtree:") {
        let root = parse_interval(spec, depth)?;
        (subtree(root, depth)?, lowermost_level(root, depth)?)
    } else if let Some(spec) = restrict.strip_prefix("lex:") {
        // all intervals lexicographically up to the given one
        let last = parse_interval(spec, depth)?;
        let mut set = IntervalSet::empty(depth)?;
        for i in enumerate(depth) {
            if lex_ordinal(i) <= lex_ordinal(last) {
                set.insert(i);
            }
        }
        (set.clone(), set)
    } else {
        bail!("--restrict must be all, subtree:L,K or lex:L,K");
    };

    let lower = certify_lower_bound(&rearrangement, &witness)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = certify_upper_bound_on_subspace(&rearrangement, &collection, &mut rng, 20)?;
    let out = json!({
        "lower_sq": lower.bound_sq_f64(),
        "upper_sq": upper.bound_sq_f64(),
        "witness_collection": set_pairs(&witness),
        "argsup_interval": upper.argsup_image.map(interval_pair),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn parse_samples_exact(text: &str) -> Result<Vec<DyadicRational>> {
    text.split_whitespace()
        .map(|t| DyadicRational::from_str(t).map_err(|e| anyhow!("bad sample {t:?}: {e}")))
        .collect()
}

fn cmd_dwt(which: DwtCommand) -> Result<()> {
    match which {
        DwtCommand::Analyze {
            batch,
            double,
            input,
        } => {
            let text = read_input(&input)?;
            if double {
                let samples: Vec<f64> = text
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|e| anyhow!("bad sample {t:?}: {e}")))
                    .collect::<Result<_>>()?;
                let signal = Signal::new(samples)?;
                let m = signal.levels();
                let stream = analyze_streaming(&signal);
                println!("ordinal,level,pos,value");
                emit_rows(m, &stream.emissions, batch, |v| format!("{v}"))?;
                println!("0,-1,0,{}", stream.trend);
            } else {
                let signal = Signal::from_rationals(parse_samples_exact(&text)?)?;
                let m = signal.levels();
                let stream = analyze_streaming(&signal);
                println!("ordinal,level,pos,value,half_exponent");
                emit_rows(m, &stream.emissions, batch, exact_cell)?;
                println!("0,-1,0,{}", exact_cell(&stream.trend));
            }
            Ok(())
        }
        DwtCommand::Synth { double, input } => {
            let text = read_input(&input)?;
            if double {
                let (m, trend, details) = parse_csv::<f64>(&text, |v, _| {
                    v.parse().map_err(|e| anyhow!("bad value {v:?}: {e}"))
                })?;
                let coefficients = HaarCoefficients::new(m, trend, details)?;
                for s in synthesize(&coefficients)?.samples() {
                    println!("{s}");
                }
            } else {
                let (m, trend, details) = parse_csv::<ExactValue>(&text, |v, h| {
                    let half: i64 = h
                        .ok_or_else(|| anyhow!("missing half_exponent column"))?
                        .parse()?;
                    let r = DyadicRational::from_str(v).map_err(|e| anyhow!("{e}"))?;
                    Ok(ExactValue::new(r, half))
                })?;
                let coefficients = HaarCoefficients::new(m, trend, details)?;
                for s in synthesize(&coefficients)?.samples() {
                    println!("{}", exact_cell(s));
                }
            }
            Ok(())
        }
    }
}

fn exact_cell(v: &ExactValue) -> String {
    format!("{},{}", v.rational_part(), v.half_exponent())
}

fn emit_rows<T: haar_postorder::dwt::DwtValue>(
    m: u32,
    emissions: &[(DyadicInterval, T)],
    batch: bool,
    render: impl Fn(&T) -> String,
) -> Result<()> {
    if m == 0 {
        return Ok(());
    }
    let depth = Depth::new(m - 1)?;
    // in batch mode re-sort the rows level by level, coarse to fine; the
    // values are identical either way
    let mut rows: Vec<&(DyadicInterval, T)> = emissions.iter().collect();
    if batch {
        rows.sort_by_key(|(i, _)| (i.level(), i.pos()));
    }
    for (interval, value) in rows {
        println!(
            "{},{},{},{}",
            post_ordinal_closed(*interval, depth)?,
            interval.level(),
            interval.pos(),
            render(value)
        );
    }
    Ok(())
}

type ParsedCsv<T> = (u32, T, std::collections::BTreeMap<DyadicInterval, T>);

fn parse_csv<T>(text: &str, parse: impl Fn(&str, Option<&str>) -> Result<T>) -> Result<ParsedCsv<T>> {
    let mut trend = None;
    let mut raw_details: Vec<(u32, u64, T)> = Vec::new();
    for line in text.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            bail!("expected at least 4 CSV fields, got {line:?}");
        }
        let value = parse(fields[3], fields.get(4).copied())?;
        if fields[1] == "-1" {
            trend = Some(value);
        } else {
            raw_details.push((fields[1].parse()?, fields[2].parse()?, value));
        }
    }
    let trend = trend.ok_or_else(|| anyhow!("missing trend row (level -1)"))?;
    let count = raw_details.len() as u64 + 1;
    if !count.is_power_of_two() {
        bail!("coefficient count {count} is not a power of two");
    }
    let m = count.trailing_zeros();
    let mut details = std::collections::BTreeMap::new();
    if m > 0 {
        let depth = Depth::new(m - 1)?;
        for (level, pos, value) in raw_details {
            details.insert(DyadicInterval::new(level, pos, depth)?, value);
        }
    }
    Ok((m, trend, details))
}

fn run_suite(suite: &str, n_max: u32, seed: u64) -> Result<Vec<VerificationReport>> {
    Ok(match suite {
        "all" => verify_all(n_max, seed),
        "ordinals" => vec![verify_ordinals(n_max)],
        "leftmost" => vec![verify_leftmost(n_max)],
        "kg0" => vec![verify_kg0(n_max)],
        "remark" => vec![verify_remark(n_max)],
        "decomposition" => vec![verify_decomposition(n_max)],
        "coneright" => vec![verify_coneright(n_max)],
        "orderint" => vec![verify_orderint(n_max)],
        "opnorm" => vec![verify_opnorm(n_max, seed)],
        "lexorder" => vec![verify_lexorder(n_max)],
        "fefferman" => vec![verify_fefferman(n_max, seed, 1000)],
        "dwt" => vec![verify_dwt(n_max.max(1), seed)],
        other => bail!("unknown suite {other:?}"),
    })
}

fn cmd_verify(suite: &str, n_max: u32, seed: u64, format: Format) -> Result<()> {
    let reports = run_suite(suite, n_max, seed)?;
    let passed = reports.iter().all(|r| r.passed());
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
        Format::Table => {
            println!("{:<16}{:>10}{:>10}{:>10}  status", "suite", "cases", "failed", "ms");
            for r in &reports {
                println!(
                    "{:<16}{:>10}{:>10}{:>10}  {}",
                    r.suite,
                    r.cases,
                    r.failures.len(),
                    r.millis,
                    if r.passed() { "pass" } else { "FAIL" }
                );
            }
        }
    }
    if !passed {
        std::process::exit(1);
    }
    Ok(())
}

fn cmd_conjecture(n_max: u32) -> Result<()> {
    let records = conjecture_scan(n_max);
    let matches = records.iter().filter(|r| r.matched).count();
    let out = json!({
        "records": records,
        "matches": matches,
        "total": records.len(),
        "match_rate": if records.is_empty() { 1.0 } else { matches as f64 / records.len() as f64 },
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
