//! `scdma`: construct, analyze, optimize and simulate sparse signature codes.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use scdma::design::{self, OptimizeOptions};
use scdma::detect::{abp_detect, bp_detect, Codebook, Observation};
use scdma::distance::{self, DistanceEnumerator};
use scdma::sim::{self, DetectorSpec, SimConfig};
use scdma::{presets, Error, FactorGraph, SignatureMatrix};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser, Serialize)]
#[command(name = "scdma", version, about = "Sparse signature code design and simulation")]
struct Cli {
    /// RNG seed; required by optimize, simulate and detect.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Build a signature matrix from a code family.
    Construct(ConstructArgs),
    /// Search for the labeling with the largest minimum distance on a graph.
    Optimize(OptimizeArgs),
    /// Exact minimum distance of a matrix.
    Distance(MatrixArgs),
    /// Distance enumerator of a matrix.
    Enumerate(EnumerateArgs),
    /// Union bound on the ML word error rate over an Eb/N0 grid.
    Bound(BoundArgs),
    /// Monte-Carlo word error rate simulation.
    Simulate(SimulateArgs),
    /// Detect symbols from received samples.
    Detect(DetectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    /// Bidiagonal tree code on K-1 resources.
    Tree,
    /// Kq users on (K-1)q resources with one long cycle.
    C1,
    /// Kq users on (K-2)q resources, three blocks per row.
    C2,
    /// K users on one resource.
    Single,
    /// 6 users on 4 resources, every resource shared by 3 users.
    Fig2,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    /// Published optimized labeling.
    Paper,
}

#[derive(Debug, Args, Serialize)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// User count (tree, single) or block count K (c1, c2).
    #[arg(long, default_value_t = 0)]
    users: usize,
    /// Block size for c1 and c2.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Use a published labeling instead of all-zero phases.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    /// Graph JSON `{n, k, edges: [[row, col], ...]}` or a matrix JSON whose support is used.
    #[arg(long)]
    graph: PathBuf,
    /// Objective evaluations (default depends on the number of free angles).
    #[arg(long)]
    budget: Option<usize>,
    /// Grid points refined by pattern search.
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Matrices on the same graph to refine as extra starting points.
    #[arg(long)]
    warm: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MatrixArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Print the minimum, an argmin difference vector and the spreading bound as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
struct EnumerateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    /// Matrix JSON; its enumerator is computed.
    #[arg(long, required_unless_present = "enumerator", conflicts_with = "enumerator")]
    matrix: Option<PathBuf>,
    /// Enumerator JSON; needs --eb to convert Eb/N0 to N0.
    #[arg(long)]
    enumerator: Option<PathBuf>,
    /// Energy per bit when only an enumerator is given.
    #[arg(long, requires = "enumerator")]
    eb: Option<f64>,
    /// Eb/N0 grid in dB as `a:b:step` or a single value.
    #[arg(long, default_value = "0:14:2")]
    ebn0: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DetectorKind {
    Ml,
    Bp,
    Abp,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = DetectorKind::Ml)]
    detector: DetectorKind,
    /// Message-passing iterations for bp and abp.
    #[arg(long, default_value_t = 6)]
    iters: usize,
    /// Eb/N0 grid in dB as `a:b:step` or a single value.
    #[arg(long, default_value = "0:12:2")]
    ebn0: String,
    /// Trials per point.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Stop a point early after this many word errors.
    #[arg(long)]
    max_errors: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct DetectArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// CSV with columns y1_re, y1_im, ..., yN_re, yN_im, one observation per line.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, value_enum, default_value_t = DetectorKind::Ml)]
    detector: DetectorKind,
    #[arg(long, default_value_t = 6)]
    iters: usize,
    /// Noise variance of the samples.
    #[arg(long)]
    n0: f64,
    /// Channel gain real part.
    #[arg(long, default_value_t = 1.0)]
    h_re: f64,
    /// Channel gain imaginary part.
    #[arg(long, default_value_t = 0.0)]
    h_im: f64,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Limit(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EnumerationCap { .. } => Failure::Limit(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Outcome<SignatureMatrix> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    n: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
}

fn read_graph(path: &Path) -> Outcome<FactorGraph> {
    let text = read_text(path)?;
    if let Ok(g) = serde_json::from_str::<GraphJson>(&text) {
        return Ok(FactorGraph::new(g.n, g.k, g.edges)?);
    }
    match serde_json::from_str::<SignatureMatrix>(&text) {
        Ok(s) => Ok(s.graph()?),
        Err(e) => Err(Failure::Input(format!("{}: neither a graph nor a matrix: {e}", path.display()))),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn require_seed(cli: &Cli) -> Outcome<u64> {
    cli.seed.ok_or_else(|| Failure::Usage("this subcommand requires --seed".into()))
}

fn grid(text: &str) -> Outcome<Vec<f64>> {
    sim::parse_grid(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn construct(a: &ConstructArgs) -> Outcome<SignatureMatrix> {
    let published = a.preset.is_some();
    let none = |what: &str| Failure::Input(format!("no published labeling for {what}"));
    let k = a.users;
    let q = a.q;
    Ok(match a.family {
        Family::Tree => presets::tree_code(k)?,
        Family::Single if published => presets::table1_vector(k)?,
        Family::Single => SignatureMatrix::from_angles(&[vec![Some(0.0); k]])?,
        Family::Fig2 if published => presets::fig2_optimal(),
        Family::Fig2 => SignatureMatrix::from_triplets(4, 6, presets::fig2_graph().edges().iter().map(|&(n, k)| (n, k, 0.0)))?,
        Family::C1 if published => match (k, q) {
            (3, 2) => presets::example3(),
            (4, 2) => presets::example4(),
            _ => return Err(none(&format!("c1 with K={k}, q={q}"))),
        },
        Family::C1 => design::construction_1(k, q, &vec![vec![0.0; q]; k], None)?,
        Family::C2 if published => match (k, q) {
            (4, 2) => presets::example5(),
            _ => return Err(none(&format!("c2 with K={k}, q={q}"))),
        },
        Family::C2 => design::construction_2(k, q, &vec![vec![0.0; q]; k.saturating_sub(1)], &vec![vec![0.0; q]; k.saturating_sub(3)], None, None)?,
    })
}

#[derive(Serialize)]
struct OptimizeSummary {
    d_min: f64,
    upper_bound: f64,
    params_pi: Vec<f64>,
    evaluations: usize,
    trace: Vec<(usize, f64)>,
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> Outcome<()> {
    let seed = require_seed(cli)?;
    let g = read_graph(&a.graph)?;
    let p = design::parameterize(&g)?;
    let budget = a.budget.unwrap_or_else(|| design::default_budget(p.n_params()));
    eprintln!("resolved: budget={budget} free_angles={}", p.n_params());
    let mut opts = OptimizeOptions::new(budget, seed);
    opts.starts = a.starts;
    for w in &a.warm {
        opts.warm_starts.push(read_matrix(w)?);
    }
    let r = design::optimize_with(&g, &opts)?;
    let summary = OptimizeSummary {
        d_min: r.d_min,
        upper_bound: distance::upper_bound_spreading(&r.matrix),
        params_pi: r.params.iter().map(|&t| design::pi_multiple(t)).collect(),
        evaluations: r.log.evaluations,
        trace: r.log.trace.clone(),
    };
    match &cli.out {
        Some(path) => {
            write_output(Some(path), &to_json(&r.matrix))?;
            eprint!("{}", design::format_angles(&r.matrix));
            print!("{}", to_json(&summary));
        }
        None => {
            #[derive(Serialize)]
            struct Both<'a> {
                matrix: &'a SignatureMatrix,
                #[serde(flatten)]
                summary: &'a OptimizeSummary,
            }
            print!("{}", to_json(&Both { matrix: &r.matrix, summary: &summary }));
        }
    }
    Ok(())
}

fn distance_cmd(cli: &Cli, a: &MatrixArgs) -> Outcome<()> {
    let s = read_matrix(&a.matrix)?;
    let r = distance::min_distance(&s)?;
    let text = if a.json {
        #[derive(Serialize)]
        struct Report {
            d_min: f64,
            argmin: Vec<[f64; 2]>,
            upper_bound: f64,
        }
        to_json(&Report { d_min: r.d_min, argmin: r.argmin.iter().map(|u| [u.re(), u.im()]).collect(), upper_bound: distance::upper_bound_spreading(&s) })
    } else {
        format!("{:.6}\n", r.d_min)
    };
    write_output(cli.out.as_deref(), &text)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn enumerate(cli: &Cli, a: &EnumerateArgs) -> Outcome<()> {
    let s = read_matrix(&a.matrix)?;
    let e = distance::distance_enumerator(&s)?;
    let text = match a.format {
        Format::Json => to_json(&e),
        Format::Csv => csv_string(
            &["d", "num", "den", "a_d"],
            e.terms().iter().map(|t| vec![format!("{}", t.d), t.coefficient.numer().to_string(), t.coefficient.denom().to_string(), format!("{}", t.coefficient_f64())]),
        ),
    };
    write_output(cli.out.as_deref(), &text)
}

fn bound(cli: &Cli, a: &BoundArgs) -> Outcome<()> {
    let (e, eb): (DistanceEnumerator, f64) = match (&a.matrix, &a.enumerator) {
        (Some(m), _) => {
            let s = read_matrix(m)?;
            (distance::distance_enumerator(&s)?, sim::energy_per_bit(&s))
        }
        (None, Some(p)) => {
            let e = serde_json::from_str(&read_text(p)?).map_err(|err| Failure::Input(format!("{}: {err}", p.display())))?;
            (e, a.eb.ok_or_else(|| Failure::Usage("--enumerator needs --eb".into()))?)
        }
        (None, None) => return Err(Failure::Usage("need --matrix or --enumerator".into())),
    };
    let mut rows = Vec::new();
    for db in grid(&a.ebn0)? {
        let n0 = eb * 10f64.powf(-db / 10.0);
        rows.push(vec![format!("{db}"), format!("{n0:e}"), format!("{:e}", distance::union_bound(&e, n0)?)]);
    }
    write_output(cli.out.as_deref(), &csv_string(&["eb_n0_db", "n0", "union_bound"], rows))
}

fn detector_spec(kind: DetectorKind, iters: usize) -> DetectorSpec {
    match kind {
        DetectorKind::Ml => DetectorSpec::Ml,
        DetectorKind::Bp => DetectorSpec::Bp { iterations: iters },
        DetectorKind::Abp => DetectorSpec::Abp { iterations: iters },
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Outcome<()> {
    let seed = require_seed(cli)?;
    let s = read_matrix(&a.matrix)?;
    let config = SimConfig { detector: detector_spec(a.detector, a.iters), eb_n0_db: grid(&a.ebn0)?, trials: a.trials, max_word_errors: a.max_errors, seed };
    let report = sim::run_wer(&s, &config)?;
    write_output(cli.out.as_deref(), &report.to_csv())?;
    if let Some(out) = &cli.out {
        let sidecar = out.with_extension("json");
        if sidecar != *out {
            write_output(Some(&sidecar), &to_json(&report))?;
        }
    }
    Ok(())
}

fn read_samples(path: &Path, n: usize) -> Outcome<Vec<Vec<Complex64>>> {
    let bad = |e: String| Failure::Input(format!("{}: {e}", path.display()));
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expect: Vec<String> = (1..=n).flat_map(|i| [format!("y{i}_re"), format!("y{i}_im")]).collect();
    if header.iter().collect::<Vec<_>>() != expect.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(bad(format!("expected header {}", expect.join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let v: Vec<f64> = rec.iter().map(|f| f.parse::<f64>().map_err(|_| bad(format!("row {}: bad number '{f}'", line + 1)))).collect::<Outcome<_>>()?;
        out.push(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    Ok(out)
}

fn detect(cli: &Cli, a: &DetectArgs) -> Outcome<()> {
    use rand::SeedableRng;
    let seed = require_seed(cli)?;
    let s = read_matrix(&a.matrix)?;
    let samples = read_samples(&a.samples, s.n_rows())?;
    let h = Complex64::new(a.h_re, a.h_im);
    let book = match a.detector {
        DetectorKind::Ml => Some(Codebook::new(&s)?),
        _ => None,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for y in samples {
        let obs = Observation::new(y, h, a.n0)?;
        let d = match a.detector {
            DetectorKind::Ml => book.as_ref().unwrap().detect(&obs, &mut rng)?,
            DetectorKind::Bp => bp_detect(&s, &obs, a.iters)?,
            DetectorKind::Abp => abp_detect(&s, &obs, a.iters)?,
        };
        let mut row: Vec<String> = d.symbols.iter().map(|x| x.index().to_string()).collect();
        row.push((d.tie as u8).to_string());
        rows.push(row);
    }
    let mut header: Vec<String> = (1..=s.n_cols()).map(|k| format!("x{k}")).collect();
    header.push("tie".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_output(cli.out.as_deref(), &csv_string(&header, rows))
}

fn run(cli: &Cli) -> Outcome<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Construct(a) => write_output(cli.out.as_deref(), &to_json(&construct(a)?)),
        Command::Optimize(a) => optimize(cli, a),
        Command::Distance(a) => distance_cmd(cli, a),
        Command::Enumerate(a) => enumerate(cli, a),
        Command::Bound(a) => bound(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Detect(a) => detect(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    eprintln!("config: {}", serde_json::to_string(&cli).expect("serializable"));
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Input(m) | Failure::Limit(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
