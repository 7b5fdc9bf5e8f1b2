use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use piggyback::analysis::{self, SearchSpace, TableConfig};
use piggyback::sim::{Cluster, ClusterConfig, RepairPath, Scheme};
use piggyback::Error;

/// Piggybacking erasure codes: encode, repair and analyze.
#[derive(Debug, Parser)]
#[command(name = "pbec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Mds,
    Rsr2,
    Gen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a file into a new cluster directory.
    Encode {
        input: PathBuf,
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long, value_enum, default_value = "gen")]
        scheme: SchemeArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        /// Stripe count of the mds scheme.
        #[arg(long, default_value_t = 1)]
        alpha: usize,
        /// Bytes per cell.
        #[arg(long, default_value_t = Cluster::DEFAULT_LANE_SIZE)]
        lane_size: usize,
    },
    /// Write the stored payload to a file.
    Decode {
        output: PathBuf,
        #[arg(long)]
        cluster: PathBuf,
    },
    /// Erase one node of a cluster.
    Fail {
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long)]
        node: usize,
    },
    /// Rebuild one node and report the download.
    Repair {
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long)]
        node: usize,
        /// Rebuild even if the node looks healthy.
        #[arg(long)]
        force: bool,
    },
    /// Check the payload checksum and node consistency.
    Verify {
        #[arg(long)]
        cluster: PathBuf,
    },
    /// Repair ratios for one code, or the reference table without arguments.
    Analyze {
        n: Option<usize>,
        k: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 32)]
        max_stripes: usize,
        /// Cap on piggybacked stripes in the search.
        #[arg(long)]
        max_p: Option<usize>,
        /// Emit bound curves over the protected share instead.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 99)]
        samples: usize,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
    },
    /// Minimum-ratio curves over the parity count at rate 1/2.
    Sweep {
        #[arg(long, default_value_t = 3)]
        r_min: usize,
        #[arg(long, default_value_t = 50)]
        r_max: usize,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::Config(_) | Error::Domain(_) | Error::Argument(_) => 2,
            Error::Unrecoverable(_)
            | Error::InsufficientSymbols { .. }
            | Error::UndecodableNodeSet(_)
            | Error::InconsistentSymbols { .. } => 3,
            Error::Io(_) | Error::NodeIo { .. } | Error::Format { .. } => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 4, message: format!("{}: {e}", path.display()) }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Encode { input, cluster, scheme, n, k, s, p, alpha, lane_size } => {
            let scheme = match scheme {
                SchemeArg::Mds => Scheme::Mds { alpha },
                SchemeArg::Rsr2 => Scheme::Rsr2,
                SchemeArg::Gen => match (s, p) {
                    (Some(s), Some(p)) => Scheme::Gen { s, p },
                    _ => return Err(Failure::usage("the gen scheme needs --s and --p")),
                },
            };
            let config = ClusterConfig::new(scheme, n, k)?;
            let payload = fs::read(&input).map_err(|e| io_failure(&input, e))?;
            let mut c = Cluster::create_dir(config, lane_size, &cluster)?;
            let m = c.ingest(&payload)?;
            Ok(format!(
                "encoded {} bytes into {} block groups on {} nodes\n",
                m.payload_length, m.lane_count, m.n
            ))
        }
        Command::Decode { output, cluster } => {
            let c = Cluster::open_dir(&cluster)?;
            let payload = c.read_payload()?;
            fs::write(&output, &payload).map_err(|e| io_failure(&output, e))?;
            Ok(format!("decoded {} bytes\n", payload.len()))
        }
        Command::Fail { cluster, node } => {
            let mut c = Cluster::open_dir(&cluster)?;
            let health = c.fail_node(node)?;
            Ok(format!("node {node} failed; cluster {health:?}\n"))
        }
        Command::Repair { cluster, node, force } => {
            let mut c = Cluster::open_dir(&cluster)?;
            let summary = if force { c.repair_forced(node)? } else { c.repair(node)? };
            if summary.path == RepairPath::Skipped {
                return Ok(format!("nothing to repair: node {node} is healthy\n"));
            }
            let path = match summary.path {
                RepairPath::Fallback => "full decode",
                _ => "single-node",
            };
            Ok(format!(
                "repaired node {node} ({path} path, {} block groups)\ndownloaded: {} symbols\nmults: {}\nadds: {}\n",
                summary.reports.len(),
                summary.symbol_count(),
                summary.ops.mults,
                summary.ops.adds
            ))
        }
        Command::Verify { cluster } => {
            let c = Cluster::open_dir(&cluster)?;
            let v = c.verify()?;
            if v.is_clean() {
                return Ok("ok\n".into());
            }
            let mut problems = Vec::new();
            if !v.failed.is_empty() {
                problems.push(format!("failed nodes {:?}", v.failed));
            }
            if !v.checksum_ok {
                problems.push("payload checksum mismatch".into());
            }
            if !v.inconsistent.is_empty() {
                problems.push(format!("inconsistent nodes {:?}", v.inconsistent));
            }
            Err(Failure { code: 3, message: format!("verification failed: {}", problems.join("; ")) })
        }
        Command::Analyze { n, k, s, p, max_stripes, max_p, sweep, samples, format } => {
            analyze(n, k, s.zip(p), SearchSpace { max_stripes, max_p }, sweep, samples, format)
        }
        Command::Sweep { r_min, r_max, format } => {
            if r_min < 3 || r_max < r_min {
                return Err(Failure::usage(format!("need 3 <= r-min <= r-max, got {r_min}..{r_max}")));
            }
            let rows: Vec<Vec<String>> = analysis::min_curves(r_min..=r_max)
                .into_iter()
                .map(|(r, g1, low, msr)| vec![r.to_string(), f6(g1), f6(low), f6(msr)])
                .collect();
            Ok(render(&["r", "min_gamma1", "min_gamma_low", "gamma_msr"], &rows, format))
        }
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn analyze(
    n: Option<usize>,
    k: Option<usize>,
    sp: Option<(usize, usize)>,
    space: SearchSpace,
    sweep: bool,
    samples: usize,
    format: Format,
) -> Outcome {
    let (n, k) = match (n, k) {
        (Some(n), Some(k)) => (n, k),
        (None, None) if !sweep => return Ok(table(&analysis::reference_configs(), space, format, None)?),
        _ => return Err(Failure::usage("analyze needs both n and k")),
    };
    if k == 0 || n <= k + 1 {
        return Err(Failure::usage(format!("need at least 2 parities, got n={n}, k={k}")));
    }
    if sweep {
        let rows: Vec<Vec<String>> = analysis::bound_curves(k, n - k, samples)
            .into_iter()
            .map(|(x, lo, up)| vec![f6(x), f6(lo), f6(up)])
            .collect();
        return Ok(render(&["p_p", "gamma_low", "gamma_up"], &rows, format));
    }
    let optimum = analysis::optimize_sp(n, k, space)?;
    let mut configs = Vec::new();
    match sp {
        Some((s, p)) => configs.push(TableConfig::with_sp(n, k, s, p)),
        None => {
            if space.max_p != Some(1) {
                let single = SearchSpace { max_p: Some(1), ..space };
                let (s, p, _) = analysis::optimize_sp(n, k, single)?;
                configs.push(TableConfig::with_sp(n, k, s, p));
            }
            let best = TableConfig::with_sp(n, k, optimum.0, optimum.1);
            if !configs.contains(&best) {
                configs.push(best);
            }
        }
    }
    Ok(table(&configs, space, format, Some(optimum))?)
}

fn table(
    configs: &[TableConfig],
    space: SearchSpace,
    format: Format,
    optimum: Option<(usize, usize, analysis::Q)>,
) -> Result<String, Error> {
    let rows = analysis::emit_tables(configs, space)?;
    Ok(match format {
        Format::Csv => analysis::to_csv(&rows, 4),
        Format::Plain => {
            let mut out = analysis::to_plain(&rows, 4);
            if let Some((s, p, g)) = optimum {
                let _ = writeln!(
                    out,
                    "optimum within {} stripes: s={s} p={p} gamma2={}",
                    space.max_stripes,
                    analysis::format_decimal(g, 4)
                );
            }
            out
        }
    })
}

fn render(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let mut all = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
    all.extend(rows.iter().cloned());
    let mut out = String::new();
    match format {
        Format::Csv => {
            for row in all {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Format::Plain => {
            let widths: Vec<usize> =
                (0..header.len()).map(|i| all.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
            for row in all {
                let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    out
}
