use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use xsr_core::analysis::{
    make_tables, multicast_label_bits_v1, multicast_label_bits_v2, render_csv, render_text,
    run_invertibility_montecarlo, sigma0, sigma_eps, TableId, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use xsr_core::deployment::{Deployment, MulticastMode, Provisioning, DEFAULT_BANK_SEED};
use xsr_core::netmodel::{
    build_clos, multicast_broadcast_spec, parse_topology, write_topology, ClosParams, PathSpec,
    RouterId,
};
use xsr_core::pathencoder::{encode, EncodeDocument, EncodeError};
use xsr_core::routerplane::{BankMode, PacketHeader, MAX_EPSILON};
use xsr_core::sim::{walk, Trace};

const EXIT_INPUT: u8 = 2;
const EXIT_NO_LABEL: u8 = 3;
const EXIT_ANOMALY: u8 = 4;

/// XOR-based source routing: encode paths, simulate forwarding, reproduce sizing tables.
///
/// Exit codes: 0 success, 2 input or parse error, 3 no valid path label within
/// the filter-index budget, 4 forwarding anomaly.
#[derive(Parser)]
#[command(name = "xsr", version)]
struct Cli {
    /// Print provisioning details to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a leaf/spine topology document.
    Clos(ClosArgs),
    /// Compute the path label for a unicast path or multicast tree.
    Encode(EncodeArgs),
    /// Forward a header hop by hop and report the trace.
    Forward(ForwardArgs),
    /// Print the unicast and multicast label-size tables.
    Tables(TablesArgs),
    /// Sweep invertibility and valid-path probabilities.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct Deploy {
    /// Topology document.
    #[arg(long, short)]
    topology: PathBuf,
    /// Filter-index bits, overriding the document (0 to 11).
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=MAX_EPSILON as i64))]
    epsilon: Option<u32>,
    /// Seed for random filter banks, overriding the document.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClosArgs {
    #[arg(long)]
    spines: usize,
    #[arg(long)]
    leafs: usize,
    /// Ports per leaf.
    #[arg(long)]
    ports: usize,
    /// Filter-index bits (0 to 11).
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(0..=MAX_EPSILON as i64))]
    epsilon: u32,
    /// Multicast leaf label layout.
    #[arg(long, default_value = "v1")]
    multicast: MulticastMode,
    /// Seed for the random filter banks.
    #[arg(long, default_value_t = DEFAULT_BANK_SEED)]
    bank_seed: u64,
    /// Rows of every stored filter matrix [default: the broadcast label length].
    #[arg(long)]
    max_label_len: Option<usize>,
    /// Output file [default: standard output].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    deploy: Deploy,
    /// Source edge switch.
    #[arg(long)]
    src: String,
    /// Destination edge switch (unicast).
    #[arg(long)]
    dst: Option<String>,
    /// Routers of a unicast path in order, e.g. R17,R11,R29.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["outputs", "broadcast"], requires = "dst")]
    path: Vec<RouterId>,
    /// Multicast output ports of one router, e.g. R17:0,1; repeat per router.
    #[arg(
        long = "out",
        value_name = "ROUTER:PORTS",
        conflicts_with = "broadcast"
    )]
    outputs: Vec<String>,
    /// Multicast from --src to every other edge switch of a leaf/spine fabric.
    #[arg(long)]
    broadcast: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the JSON document to this file.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Forward,
    Reverse,
}

#[derive(Args)]
struct ForwardArgs {
    #[command(flatten)]
    deploy: Deploy,
    /// JSON document written by `encode`.
    #[arg(long, conflicts_with = "header")]
    encoded: Option<PathBuf>,
    /// Header bytes in hex.
    #[arg(long, requires = "from")]
    header: Option<String>,
    /// Ingress edge switch for --header.
    #[arg(long)]
    from: Option<String>,
    /// With --encoded: inject at the source, or at the destination to walk back.
    #[arg(long, value_enum, default_value_t = Direction::Forward)]
    direction: Direction,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableChoice {
    Unicast,
    Multicast,
    All,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, value_enum, default_value_t = TableChoice::All)]
    table: TableChoice,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Shorthand for --format csv.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Label lengths s_L, e.g. 8 or 1-16.
    #[arg(long, default_value = "1-16")]
    label_len: String,
    /// Filter-index widths, e.g. 5 or 0-8.
    #[arg(long, default_value = "0-8")]
    epsilon: String,
    /// Monte Carlo samples per label length; 0 skips sampling.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Shorthand for --format csv.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<EncodeError>() {
            Some(EncodeError::NoValidLabel { .. }) => EXIT_NO_LABEL,
            _ => EXIT_INPUT,
        };
        Failure { code, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Clos(a) => cmd_clos(a),
        Command::Encode(a) => cmd_encode(a, cli.verbose),
        Command::Forward(a) => cmd_forward(a, cli.verbose),
        Command::Tables(a) => cmd_tables(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_clos(a: ClosArgs) -> Result<u8, Failure> {
    let p = ClosParams::new(a.spines, a.leafs, a.ports)?;
    let t = build_clos(p)?;
    let longest = match a.multicast {
        MulticastMode::V1 => multicast_label_bits_v1(p, 0),
        MulticastMode::V2 => multicast_label_bits_v2(p, 0),
    };
    let settings = [
        ("epsilon", a.epsilon.to_string()),
        ("banks", "random".to_string()),
        ("bank_seed", a.bank_seed.to_string()),
        (
            "max_label_len",
            a.max_label_len.unwrap_or(longest as usize).to_string(),
        ),
        ("multicast", a.multicast.to_string()),
    ];
    emit(a.output.as_deref(), &write_topology(&t, &settings))?;
    Ok(0)
}

fn load(d: &Deploy, verbose: bool) -> Result<Deployment> {
    let text = fs::read_to_string(&d.topology)
        .with_context(|| format!("reading {}", d.topology.display()))?;
    let doc = parse_topology(&text).with_context(|| format!("parsing {}", d.topology.display()))?;
    let mut prov = Provisioning::from_document(&doc)
        .with_context(|| format!("in {}", d.topology.display()))?;
    if let Some(e) = d.epsilon {
        prov.epsilon = e;
    }
    if let Some(seed) = d.seed {
        prov.bank_mode = BankMode::Random { seed };
    }
    if verbose {
        eprintln!(
            "{} routers, epsilon {}, banks {:?}, max_label_len {}, multicast {}",
            doc.topology.router_count(),
            prov.epsilon,
            prov.bank_mode,
            prov.max_label_len,
            prov.multicast
        );
    }
    Ok(Deployment::provision(doc.topology, prov)?)
}

fn parse_outputs(items: &[String]) -> Result<BTreeMap<RouterId, BTreeSet<usize>>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (router, ports) = item
            .split_once(':')
            .with_context(|| format!("expected ROUTER:PORTS, got {item:?}"))?;
        let router: RouterId = router.trim().parse().map_err(anyhow::Error::msg)?;
        let ports = ports
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad port {p:?} in {item:?}"))
            })
            .collect::<Result<BTreeSet<_>>>()?;
        if out.insert(router, ports).is_some() {
            bail!("{router} is listed twice");
        }
    }
    Ok(out)
}

fn path_spec(a: &EncodeArgs, d: &Deployment) -> Result<PathSpec> {
    let t = d.topology();
    if a.broadcast {
        let p = d
            .clos()
            .context("--broadcast needs a leaf/spine topology (clos setting)")?;
        return Ok(multicast_broadcast_spec(t, p, &a.src)?);
    }
    if !a.outputs.is_empty() {
        return Ok(PathSpec::multicast(t, &a.src, parse_outputs(&a.outputs)?)?);
    }
    if a.path.is_empty() {
        bail!("give --path, --out or --broadcast");
    }
    let dst = a.dst.as_deref().context("--path needs --dst")?;
    Ok(PathSpec::unicast(t, &a.src, dst, &a.path)?)
}

fn encode_text(doc: &EncodeDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "cast          {}",
        serde_json::to_value(doc.cast)
            .unwrap_or_default()
            .as_str()
            .unwrap_or("")
    );
    let _ = writeln!(out, "path label    P = {}", doc.path_label);
    let _ = writeln!(out, "label length  s_P = {}", doc.label_len);
    let _ = writeln!(
        out,
        "filter index  e = {} (epsilon {}, attempts {})",
        doc.e, doc.epsilon, doc.attempts
    );
    let _ = writeln!(out, "header        {}", doc.header_hex);
    let _ = writeln!(out, "source        {}", doc.source);
    let _ = writeln!(out, "destinations  {}", doc.destinations.join(" "));
    for h in &doc.hops {
        let kind = serde_json::to_value(h.kind).ok();
        let kind = kind
            .as_ref()
            .and_then(|k| k.get("kind"))
            .and_then(|k| k.as_str())
            .unwrap_or("");
        let _ = writeln!(
            out,
            "  {:<6} {:<13} {}",
            h.router.to_string(),
            kind,
            h.label
        );
    }
    out
}

fn cmd_encode(a: EncodeArgs, verbose: bool) -> Result<u8, Failure> {
    let d = load(&a.deploy, verbose)?;
    let spec = path_spec(&a, &d)?;
    let result = encode(&spec, &d)?;
    let doc = EncodeDocument::new(&spec, &result, d.epsilon())?;
    let json = serde_json::to_string_pretty(&doc)? + "\n";
    if let Some(p) = &a.output {
        emit(Some(p), &json)?;
    }
    match a.format {
        Format::Json => print!("{json}"),
        Format::Text | Format::Csv => print!("{}", encode_text(&doc)),
    }
    Ok(0)
}

fn trace_text(t: &Trace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ingress {}  header {}",
        t.ingress,
        hex::encode(&t.wire)
    );
    for h in &t.hops {
        let outs: Vec<String> = h.out_ports.iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "  {:<6} in {:<3} label {:<10} out {:<8} header {}",
            h.router.to_string(),
            h.in_port,
            h.label.to_string(),
            if outs.is_empty() {
                "-".to_string()
            } else {
                outs.join(",")
            },
            hex::encode(&h.wire)
        );
    }
    let _ = writeln!(out, "delivered {}", t.delivered.join(" "));
    let _ = writeln!(
        out,
        "header unmodified at every hop: {}",
        if t.header_unmodified() { "yes" } else { "no" }
    );
    for anomaly in &t.anomalies {
        let _ = writeln!(out, "anomaly: {anomaly}");
    }
    out
}

fn cmd_forward(a: ForwardArgs, verbose: bool) -> Result<u8, Failure> {
    let d = load(&a.deploy, verbose)?;
    let (wire, ingress, expected) = match (&a.encoded, &a.header) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: EncodeDocument = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if doc.epsilon != d.epsilon() {
                return Err(anyhow::anyhow!(
                    "document uses epsilon {}, deployment uses {}",
                    doc.epsilon,
                    d.epsilon()
                )
                .into());
            }
            let wire = doc.header()?.to_bytes(doc.epsilon)?;
            match a.direction {
                Direction::Forward => (wire, doc.source.clone(), Some(doc.destinations.clone())),
                Direction::Reverse => {
                    let [dst] = doc.destinations.as_slice() else {
                        return Err(
                            anyhow::anyhow!("reverse traversal needs a unicast document").into(),
                        );
                    };
                    (wire, dst.clone(), Some(vec![doc.source.clone()]))
                }
            }
        }
        (None, Some(hex_text)) => {
            let wire = hex::decode(hex_text.trim()).context("--header is not valid hex")?;
            PacketHeader::from_bytes(&wire, d.epsilon()).context("--header does not parse")?;
            let from = a.from.clone().expect("clap enforces --from");
            (wire, from, None)
        }
        (None, None) => return Err(anyhow::anyhow!("give --encoded or --header").into()),
    };
    let trace = walk(&d, &wire, &ingress)?;
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&trace)?),
        Format::Text | Format::Csv => print!("{}", trace_text(&trace)),
    }
    let misdelivered = expected.is_some_and(|want| trace.delivered_sorted() != want);
    if misdelivered {
        eprintln!("delivery differs from the encoded destinations");
    }
    Ok(
        if trace.is_clean() && trace.header_unmodified() && !misdelivered {
            0
        } else {
            EXIT_ANOMALY
        },
    )
}

fn cmd_tables(a: TablesArgs) -> Result<u8, Failure> {
    let reports = make_tables();
    let tables = match a.table {
        TableChoice::Unicast => vec![TableId::Unicast],
        TableChoice::Multicast => vec![TableId::Multicast],
        TableChoice::All => vec![TableId::Unicast, TableId::Multicast],
    };
    let format = if a.csv { Format::Csv } else { a.format };
    match format {
        Format::Text => print!("{}", render_text(&reports, &tables)),
        Format::Csv => {
            let blocks: Vec<String> = tables.iter().map(|&t| render_csv(&reports, t)).collect();
            print!("{}", blocks.join("\n"));
        }
        Format::Json => {
            let selected: Vec<_> = reports
                .iter()
                .filter(|r| tables.contains(&r.table))
                .collect();
            println!("{}", serde_json::to_string_pretty(&selected)?);
        }
    }
    Ok(0)
}

fn parse_range(text: &str, what: &str) -> Result<Vec<u32>> {
    let bad = || anyhow::anyhow!("bad {what} range {text:?} (expected N or A-B)");
    let (lo, hi) = match text.split_once('-') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let n: u32 = text.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<u8, Failure> {
    let lengths = parse_range(&a.label_len, "label length")?;
    if lengths.contains(&0) {
        return Err(anyhow::anyhow!("label lengths start at 1").into());
    }
    let epsilons = parse_range(&a.epsilon, "epsilon")?;
    if epsilons.iter().any(|&e| e > MAX_EPSILON) {
        return Err(anyhow::anyhow!("epsilon must be at most {MAX_EPSILON}").into());
    }
    let rows: Vec<serde_json::Value> = lengths
        .iter()
        .map(|&s_l| {
            let estimate = (a.samples > 0)
                .then(|| run_invertibility_montecarlo(s_l, a.samples, a.seed).estimate);
            let sweep: serde_json::Map<String, serde_json::Value> = epsilons
                .iter()
                .map(|&e| (e.to_string(), sigma_eps(s_l, e).into()))
                .collect();
            serde_json::json!({
                "s_l": s_l,
                "sigma0": sigma0(s_l),
                "expected_ge": 1.0 / sigma0(s_l),
                "estimate": estimate,
                "samples": a.samples,
                "seed": a.seed,
                "sigma_eps": sweep,
            })
        })
        .collect();
    let format = if a.csv { Format::Csv } else { a.format };
    let mut out = String::new();
    let eps_cols: Vec<String> = epsilons.iter().map(|e| format!("eps={e}")).collect();
    match format {
        Format::Json => out = serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let _ = writeln!(out, "s_l,sigma0,estimate,{}", eps_cols.join(","));
            for (r, &s_l) in rows.iter().zip(&lengths) {
                let est = r["estimate"]
                    .as_f64()
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let sweep: Vec<String> = epsilons
                    .iter()
                    .map(|&e| sigma_eps(s_l, e).to_string())
                    .collect();
                let _ = writeln!(out, "{s_l},{},{est},{}", sigma0(s_l), sweep.join(","));
            }
        }
        Format::Text => {
            let _ = write!(out, "{:>4} {:>9} {:>9}", "s_L", "sigma0", "estimate");
            for c in &eps_cols {
                let _ = write!(out, " {c:>9}");
            }
            out.push('\n');
            for (r, &s_l) in rows.iter().zip(&lengths) {
                let est = r["estimate"]
                    .as_f64()
                    .map(|v| format!("{v:.5}"))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, "{s_l:>4} {:>9.5} {est:>9}", sigma0(s_l));
                for &e in &epsilons {
                    let _ = write!(out, " {:>9.5}", sigma_eps(s_l, e));
                }
                out.push('\n');
            }
        }
    }
    print!("{out}");
    Ok(0)
}
