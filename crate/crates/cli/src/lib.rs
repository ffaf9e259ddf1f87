//! The `fink` command line. [`dispatch`] runs one invocation in-process and
//! returns the exit code together with everything it printed.
//!
//! Exit codes: `0` success, `2` a mathematical negative (not a member, empty
//! intersection, not intertwined, not small), `1` any error. Errors go to
//! stderr as `error[CODE]: message`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fink_core::{
    big_f, build_graph, enumerate_span, evaluate, extract_intertwined, intersect_spans, is_member, run_diagonalization,
    smallness_check, star_split, validate_family, Builtin, Combination, CommonElement, DecompositionGraph,
    EnumerationCap, Error, FiniteBlockSeq, SequenceStream, StreamKind, Subblock, Verdict,
};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    NotCommon(Subblock),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "E_USAGE",
            CliError::NotCommon(_) => "E_NOT_COMMON",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::NotCommon(b) => write!(f, "{b} is not in both spans"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fink", version, about = "Block sequences, spans and almost-disjointness over FIN_k")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Level k. Required for builtin streams and bare block bodies.
    #[arg(long, global = true)]
    k: Option<u8>,
    /// Truncation horizon for streams.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration cap in bits: (k+1)^N must not exceed 2^cap.
    #[arg(long, global = true, default_value_t = 24)]
    cap: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct Pair {
    /// First sequence: builtin name, inline stream spec, spec file or sequence file.
    #[arg(long = "P")]
    p: String,
    /// Second sequence, same forms as --P.
    #[arg(long = "Q")]
    q: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a combination over a sequence.
    Eval {
        #[arg(long)]
        seq: String,
        /// Witness such as "0^0 + 2^1"; "-" is the empty starred combination.
        #[arg(long)]
        comb: String,
        #[arg(long)]
        starred: bool,
    },
    /// Decide span membership and print the witness.
    Member {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        block: String,
        #[arg(long)]
        starred: bool,
    },
    /// Enumerate a span.
    Span {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        starred: bool,
        /// Print a seeded random sample of this many elements.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Enumerate the intersection of two spans.
    Intersect {
        #[command(flatten)]
        pair: Pair,
    },
    /// F over the given blocks, or over the intersection of two spans.
    Valuation {
        #[arg(long = "P", requires = "q")]
        p: Option<String>,
        #[arg(long = "Q", requires = "p")]
        q: Option<String>,
        #[arg(long = "block", conflicts_with = "p")]
        blocks: Vec<String>,
    },
    /// Print the decomposition graph of a common element.
    Graph {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        block: String,
    },
    /// Decide whether a common element is intertwined.
    Intertwined {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        block: String,
    },
    /// Extract an intertwined element from the minimal prefix intersection.
    Extract {
        #[command(flatten)]
        pair: Pair,
    },
    /// Split p * q around an intertwined p.
    Split {
        #[command(flatten)]
        pair: Pair,
        /// The intertwined element.
        #[arg(long = "p")]
        p_block: String,
        /// Any element of the intersection.
        #[arg(long = "q")]
        q_block: String,
    },
    /// Horizon smallness check of the tail P/n against Q.
    Small {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
    },
    /// Validate a family and run the diagonalization.
    Diag {
        /// Comma-separated builtin names or sequence files.
        #[arg(long, value_delimiter = ',')]
        members: Vec<String>,
        /// One more member; repeatable, accepts inline specs.
        #[arg(long)]
        member: Vec<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        cycles: usize,
    },
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn dispatch<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome { code: EXIT_OK, stdout: text, stderr: String::new() };
            }
            // clap's message up to the first blank line, on one line
            let msg: Vec<&str> = text.lines().take_while(|l| !l.trim().is_empty()).map(str::trim).collect();
            let msg = msg.join(" ");
            let msg = msg.strip_prefix("error: ").unwrap_or(&msg);
            return Outcome { code: EXIT_ERROR, stdout: String::new(), stderr: format!("error[E_USAGE]: {msg}\n") };
        }
    };
    let ctx = Context {
        k: cli.global.k,
        horizon: cli.global.horizon,
        seed: cli.global.seed,
        cap: EnumerationCap::new(cli.global.cap),
    };
    match run(&ctx, cli.command) {
        Ok(report) => {
            let mut stdout = match cli.global.format {
                Format::Text => report.text,
                Format::Json => report.json.to_string(),
            };
            if !stdout.ends_with('\n') {
                stdout.push('\n');
            }
            Outcome { code: if report.negative { EXIT_NEGATIVE } else { EXIT_OK }, stdout, stderr: String::new() }
        }
        Err(e) => Outcome { code: EXIT_ERROR, stdout: String::new(), stderr: format!("error[{}]: {e}\n", e.code()) },
    }
}

struct Context {
    k: Option<u8>,
    horizon: Option<usize>,
    seed: u64,
    cap: EnumerationCap,
}

struct Report {
    text: String,
    json: Value,
    negative: bool,
}

impl Report {
    fn new(text: String, json: Value) -> Self {
        Report { text, json, negative: false }
    }

    fn negative(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }
}

impl Context {
    fn stream(&self, arg: &str) -> CliResult<SequenceStream> {
        let stream = if let Ok(builtin) = Builtin::from_str(arg) {
            let k = self.k.ok_or_else(|| CliError::Usage(format!("builtin `{arg}` needs --k")))?;
            SequenceStream::builtin(builtin, k)?
        } else if arg.contains("kind=") && !Path::new(arg).is_file() {
            SequenceStream::parse_spec(arg, None)?
        } else {
            let text =
                fs::read_to_string(arg).map_err(|e| Error::Io { path: arg.to_string(), message: e.to_string() })?;
            if text.trim_start().starts_with("kind=") {
                SequenceStream::parse_spec(&text, Path::new(arg).parent())?
            } else {
                SequenceStream::explicit(FiniteBlockSeq::parse(&text)?)
            }
        };
        if let Some(k) = self.k {
            if k != stream.k() {
                return Err(Error::MismatchedLevel { left: k, right: stream.k() }.into());
            }
        }
        Ok(stream)
    }

    /// A finite sequence: explicit sequences as given (cut at the horizon if
    /// one is set), other streams truncated at the horizon.
    fn seq(&self, arg: &str) -> CliResult<FiniteBlockSeq> {
        let stream = self.stream(arg)?;
        match (stream.kind(), self.horizon) {
            (_, Some(h)) => Ok(stream.truncate(h)),
            (StreamKind::Explicit(seq), None) => Ok(seq.skip(stream.offset())),
            (_, None) => Err(CliError::Usage(format!("`{arg}` is an infinite stream; pass --horizon"))),
        }
    }

    fn horizon(&self) -> CliResult<usize> {
        self.horizon.ok_or_else(|| CliError::Usage("--horizon is required".into()))
    }

    /// A full literal `k=K|body`, or a bare body at `fallback_k` (or `--k`).
    fn block(&self, arg: &str, fallback_k: Option<u8>) -> CliResult<Subblock> {
        if arg.trim_start().starts_with("k=") {
            return Ok(Subblock::from_str(arg)?);
        }
        let k = self
            .k
            .or(fallback_k)
            .ok_or_else(|| CliError::Usage(format!("block `{arg}` needs --k or a full `k=K|...` literal")))?;
        Ok(Subblock::parse_body(k, arg, 1, 1)?)
    }

    fn common(&self, arg: &str, p: &FiniteBlockSeq, q: &FiniteBlockSeq) -> CliResult<CommonElement> {
        let block = self.block(arg, Some(p.k()))?;
        match (is_member(&block, p, false)?, is_member(&block, q, false)?) {
            (Some(in_p), Some(in_q)) => Ok(CommonElement { block, in_p, in_q }),
            _ => Err(CliError::NotCommon(block)),
        }
    }
}

fn common_json(c: &CommonElement) -> Value {
    json!({ "block": c.block, "in_p": c.in_p.to_string(), "in_q": c.in_q.to_string() })
}

fn graph_json(g: &DecompositionGraph) -> Value {
    json!({ "left": g.left, "right": g.right, "edges": g.edges, "connected": g.is_connected() })
}

fn run(ctx: &Context, command: Command) -> CliResult<Report> {
    match command {
        Command::Eval { seq, comb, starred } => {
            let seq = ctx.seq(&seq)?;
            let comb = Combination::parse(&comb, starred)?;
            let block = evaluate(&seq, &comb)?;
            Ok(Report::new(
                format!("{block}\n"),
                json!({ "command": "eval", "block": block, "witness": comb.to_string(), "starred": starred }),
            ))
        }
        Command::Member { seq, block, starred } => {
            let seq = ctx.seq(&seq)?;
            let block = ctx.block(&block, Some(seq.k()))?;
            let witness = is_member(&block, &seq, starred)?;
            let text = match &witness {
                Some(w) => format!("yes {w}\n"),
                None => "no\n".to_string(),
            };
            let json = json!({
                "command": "member",
                "block": block,
                "starred": starred,
                "member": witness.is_some(),
                "witness": witness.as_ref().map(|w| w.to_string()),
            });
            Ok(Report::new(text, json).negative(witness.is_none()))
        }
        Command::Span { seq, starred, sample } => {
            let seq = ctx.seq(&seq)?;
            let span = enumerate_span(&seq, starred, ctx.cap)?;
            let mut rows: Vec<(Subblock, String)> = Vec::new();
            if span.contains_empty {
                rows.push((Subblock::empty(seq.k())?, Combination::empty_starred().to_string()));
            }
            rows.extend(span.elements.iter().map(|(b, c)| (b.clone(), c.to_string())));
            let total = rows.len();
            if let Some(n) = sample {
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
                let mut picked = index::sample(&mut rng, total, n.min(total)).into_vec();
                picked.sort_unstable();
                rows = picked.into_iter().map(|i| rows[i].clone()).collect();
            }
            let mut text = String::new();
            for (b, w) in &rows {
                writeln!(text, "{b}\t{w}").unwrap();
            }
            writeln!(text, "count={} shown={}", total, rows.len()).unwrap();
            let json = json!({
                "command": "span",
                "starred": starred,
                "count": total,
                "elements": rows.iter().map(|(b, w)| json!({ "block": b, "witness": w })).collect::<Vec<_>>(),
            });
            Ok(Report::new(text, json))
        }
        Command::Intersect { pair } => {
            let (p, q) = (ctx.seq(&pair.p)?, ctx.seq(&pair.q)?);
            let common = intersect_spans(&p, &q, ctx.cap)?;
            let mut text = String::new();
            for c in &common {
                writeln!(text, "{}\t{}\t{}", c.block, c.in_p, c.in_q).unwrap();
            }
            writeln!(text, "count={}", common.len()).unwrap();
            let json = json!({
                "command": "intersect",
                "count": common.len(),
                "elements": common.iter().map(common_json).collect::<Vec<_>>(),
            });
            Ok(Report::new(text, json).negative(common.is_empty()))
        }
        Command::Valuation { p, q, blocks } => {
            let valuation = match (p, q) {
                (Some(p), Some(q)) => {
                    let (p, q) = (ctx.seq(&p)?, ctx.seq(&q)?);
                    let common = intersect_spans(&p, &q, ctx.cap)?;
                    let v = big_f(common.iter().map(|c| &c.block))?;
                    match ctx.horizon {
                        Some(h) => v.at_horizon(h),
                        None => v,
                    }
                }
                _ => {
                    let parsed = blocks.iter().map(|b| ctx.block(b, None)).collect::<CliResult<Vec<_>>>()?;
                    big_f(&parsed)?
                }
            };
            let json = json!({
                "command": "valuation",
                "value": valuation.value,
                "count": valuation.element_count,
                "horizon": valuation.horizon,
            });
            Ok(Report::new(format!("{valuation}\n"), json))
        }
        Command::Graph { pair, block } => {
            let (p, q) = (ctx.seq(&pair.p)?, ctx.seq(&pair.q)?);
            let c = ctx.common(&block, &p, &q)?;
            let graph = build_graph(&c, &p, &q)?;
            let mut text = graph.dump();
            writeln!(text, "connected={}", graph.is_connected()).unwrap();
            let mut json = graph_json(&graph);
            json["command"] = json!("graph");
            json["element"] = common_json(&c);
            Ok(Report::new(text, json))
        }
        Command::Intertwined { pair, block } => {
            let (p, q) = (ctx.seq(&pair.p)?, ctx.seq(&pair.q)?);
            let c = ctx.common(&block, &p, &q)?;
            let yes = build_graph(&c, &p, &q)?.is_connected();
            let json = json!({ "command": "intertwined", "element": common_json(&c), "intertwined": yes });
            Ok(Report::new(if yes { "yes\n" } else { "no\n" }.to_string(), json).negative(!yes))
        }
        Command::Extract { pair } => {
            let (p, q) = (ctx.seq(&pair.p)?, ctx.seq(&pair.q)?);
            let Some(x) = extract_intertwined(&p, &q, ctx.cap)? else {
                return Ok(
                    Report::new("empty\n".into(), json!({ "command": "extract", "found": false })).negative(true)
                );
            };
            let mut text = format!(
                "block={}\nN={}\nsplits={}\nin_p={}\nin_q={}\n",
                x.element.block, x.prefix_len, x.splits, x.element.in_p, x.element.in_q
            );
            text.push_str(&x.graph.dump());
            let json = json!({
                "command": "extract",
                "found": true,
                "element": common_json(&x.element),
                "prefix_len": x.prefix_len,
                "splits": x.splits,
                "graph": graph_json(&x.graph),
            });
            Ok(Report::new(text, json))
        }
        Command::Split { pair, p_block, q_block } => {
            let (p, q) = (ctx.seq(&pair.p)?, ctx.seq(&pair.q)?);
            let cp = ctx.common(&p_block, &p, &q)?;
            let cq = ctx.common(&q_block, &p, &q)?;
            let split = star_split(&cp, &cq, &p, &q)?;
            let text = format!(
                "star={}\ns={}\t{}\t{}\np={}\nr={}\t{}\t{}\n",
                split.star, split.s, split.s_in_p, split.s_in_q, cp.block, split.r, split.r_in_p, split.r_in_q
            );
            let json = json!({
                "command": "split",
                "star": split.star,
                "s": split.s,
                "p": cp.block,
                "r": split.r,
                "s_in_p": split.s_in_p.to_string(),
                "s_in_q": split.s_in_q.to_string(),
                "r_in_p": split.r_in_p.to_string(),
                "r_in_q": split.r_in_q.to_string(),
            });
            Ok(Report::new(text, json))
        }
        Command::Small { pair, n } => {
            let (p, q) = (ctx.stream(&pair.p)?, ctx.stream(&pair.q)?);
            let cert = smallness_check(&p, &q, n, ctx.horizon()?, ctx.cap)?;
            let json = json!({
                "command": "small",
                "tail_index": cert.tail_index,
                "horizon": cert.horizon,
                "verdict": cert.verdict.to_string(),
                "witness": cert.witness.as_ref().map(common_json),
            });
            Ok(Report::new(format!("{}\n", cert.verdict), json).negative(cert.verdict == Verdict::Nonempty))
        }
        Command::Diag { members, member, n, cycles } => {
            let streams = members.iter().chain(&member).map(|m| ctx.stream(m.trim())).collect::<CliResult<Vec<_>>>()?;
            let family = validate_family(streams, n, ctx.horizon()?, ctx.cap)?;
            let trace = run_diagonalization(&family, cycles)?;
            let finals: Vec<String> = trace.final_values.iter().map(|v| v.to_string()).collect();
            let text = format!("{trace}final=[{}]\n", finals.join(","));
            let steps: Vec<Value> = trace
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "step": s.step,
                        "block": s.choice.block,
                        "member": s.choice.member,
                        "index": s.choice.index,
                        "between": s.choice.between,
                        "witness": s.choice.witness.to_string(),
                        "checks": s.checks,
                        "own_value": s.own_value.value,
                        "fresh_elements_checked": s.fresh_elements_checked,
                    })
                })
                .collect();
            let json = json!({ "command": "diag", "steps": steps, "final_values": trace.final_values });
            Ok(Report::new(text, json))
        }
    }
}
