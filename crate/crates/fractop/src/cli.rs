//! Command-line front end: argument parsing, orchestration and report emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::automaton::{analyse, build_automaton, check_surviving_time_lemma, classify_equivalence, Analysed, Verdict, SIC_DEPTH};
use crate::dendrite::{analyse_dendrite, certify_dendrite, dimension_trend, CERT_DEPTH};
use crate::error::{Error, Result};
use crate::gasket::{augmentation_report, conformal_upper_bound, connectivity, validate_gasket, vertex_iteration, SChoice, Scheme};
use crate::graph::{check_good_assignment, refine, similarity_dimension, verify_compatibility, MapFamily, Scalar, WeightAssignment};
use crate::ifs::{compute_post_critical, verify_sic_asc, Ifs, IfsSpec, PostCriticalData};
use crate::metric::{check_boundary_lemma, metric_check, qs_triple_check};
use crate::report::Report;
use crate::sampling::sample_point_pairs;
use crate::svg;
use crate::word::{all_words, Word};

pub const THREADS_ENV: &str = "FRACTOP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "fractop", version, about = "Analysis of post-critically finite self-similar sets")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a system and report post-critical data, SIC/ASC estimates and structure hints.
    Validate {
        ifs: PathBuf,
        #[arg(long, default_value_t = SIC_DEPTH)]
        depth: usize,
    },
    #[command(subcommand)]
    Automaton(AutomatonCmd),
    /// Compare two systems through their topology automata.
    Classify {
        f: PathBuf,
        g: PathBuf,
        /// Triples for the quasisymmetry check.
        #[arg(long, default_value_t = 200)]
        triples: usize,
    },
    #[command(subcommand)]
    Metric(MetricCmd),
    #[command(subcommand)]
    Graph(GraphCmd),
    #[command(subcommand)]
    Dendrite(DendriteCmd),
    #[command(subcommand)]
    Gasket(GasketCmd),
    /// Write an SVG scene.
    Render(RenderArgs),
}

#[derive(Subcommand, Debug)]
pub enum AutomatonCmd {
    /// Build the topology automaton.
    Build {
        ifs: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Pairs for the surviving-time check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum MetricCmd {
    /// Distance sandwich, comparability and boundary-run checks.
    Check {
        ifs: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = SIC_DEPTH)]
        depth: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct GraphOpts {
    /// Assignment JSON `{"tau0": {"1-2": w, ...}, "R": [...]}`; uniform when absent.
    #[arg(long)]
    pub assign: Option<PathBuf>,
    /// `power:m` for `F^m`, `vertex:m` for the gasket vertex iteration.
    #[arg(long, default_value = "power:1", value_parser = parse_family)]
    pub family: FamilyArg,
    #[arg(short = 'n', default_value_t = 1)]
    pub n: usize,
}

#[derive(Subcommand, Debug)]
pub enum GraphCmd {
    /// Build the refined graph `G_n` and check the assignment.
    Refine {
        ifs: PathBuf,
        #[command(flatten)]
        opts: GraphOpts,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Pair budget for compatibility checks beyond the exhaustive cap.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum DendriteCmd {
    /// Upper bounds `s_m` for the conformal dimension of a dendrite.
    Dim {
        ifs: PathBuf,
        #[arg(short = 'm', default_value = "1..6", value_parser = parse_levels)]
        m: Levels,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        no_auto_halve: bool,
        /// Levels of the dendrite certificate.
        #[arg(long, default_value_t = CERT_DEPTH)]
        depth: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Uniform,
    General,
}

#[derive(Subcommand, Debug)]
pub enum GasketCmd {
    /// Upper bounds for the conformal dimension of a fractal gasket.
    Dim {
        ifs: PathBuf,
        #[arg(short = 'm', default_value = "1..20", value_parser = parse_levels)]
        m: Levels,
        #[arg(long, value_enum, default_value_t = SchemeArg::Uniform)]
        scheme: SchemeArg,
        /// `s` as a multiple of its lower bound (general scheme).
        #[arg(long, conflicts_with = "s")]
        s_factor: Option<f64>,
        /// A fixed `s` (general scheme).
        #[arg(long)]
        s: Option<f64>,
        /// Depth of the total-disconnection evidence.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Render `F_m` for the first `m` of the range.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scene {
    Iteration,
    Graph,
    MainTree,
    Automaton,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(value_enum)]
    pub scene: Scene,
    pub ifs: PathBuf,
    #[arg(short = 'o', long)]
    pub out: PathBuf,
    /// Iteration level for the `iteration` scene.
    #[arg(short = 'm', default_value_t = 1)]
    pub m: usize,
    #[command(flatten)]
    pub graph: GraphOpts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyArg {
    Power(usize),
    Vertex(usize),
}

impl std::fmt::Display for FamilyArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyArg::Power(m) => write!(f, "power:{m}"),
            FamilyArg::Vertex(m) => write!(f, "vertex:{m}"),
        }
    }
}

/// A list of levels given as a range flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Levels(pub Vec<usize>);

fn parse_levels(s: &str) -> std::result::Result<Levels, String> {
    parse_range(s).map(Levels)
}

/// Inclusive ranges `a..b`, single values and comma lists such as `1,3..5`.
pub fn parse_range(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("empty range".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_family(s: &str) -> std::result::Result<FamilyArg, String> {
    let (kind, m) = s.split_once(':').ok_or_else(|| format!("expected power:m or vertex:m, got {s:?}"))?;
    let m: usize = m.parse().map_err(|e| format!("{m:?}: {e}"))?;
    match kind {
        "power" if m >= 1 => Ok(FamilyArg::Power(m)),
        "vertex" => Ok(FamilyArg::Vertex(m)),
        "power" => Err("power family needs m ≥ 1".into()),
        _ => Err(format!("unknown family kind {kind:?}")),
    }
}

/// A finished command: the report and the exit status it implies.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    /// 0, or 3 when a consistency check inside the report failed.
    pub status: i32,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Outcome { report, status: 0 }
    }

    fn fail_if(mut self, failed: bool, why: impl Into<String>) -> Self {
        if failed {
            self.status = 3;
            self.report.warnings.push(why.into());
        }
        self
    }
}

/// Caps the global worker pool at `FRACTOP_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Error::Parse(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    if n == 0 {
        return Err(Error::DomainError(format!("{THREADS_ENV} must be positive")));
    }
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Parse(e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    check_flags(cli)?;
    let start = Instant::now();
    let mut out = dispatch(cli)?;
    if cli.timing {
        out.report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(out)
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(&cli));
    match result {
        Ok(out) => {
            if cli.json {
                println!("{}", out.report.to_json());
            } else {
                print!("{}", text_summary(&out.report));
            }
            for w in &out.report.warnings {
                eprintln!("warning: {w}");
            }
            out.status
        }
        Err(e) => {
            if cli.json {
                println!("{}", error_json(&command_name(&cli.command), &e));
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn error_json(command: &str, e: &Error) -> String {
    let kind = format!("{e:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string();
    let v = json!({
        "schema_version": crate::report::SCHEMA_VERSION,
        "command": command,
        "error": { "kind": kind, "message": e.to_string(), "exit_code": e.exit_code() },
    });
    serde_json::to_string_pretty(&v).expect("error report serializes")
}

pub fn command_name(c: &Command) -> String {
    match c {
        Command::Validate { .. } => "validate".into(),
        Command::Automaton(_) => "automaton build".into(),
        Command::Classify { .. } => "classify".into(),
        Command::Metric(_) => "metric check".into(),
        Command::Graph(_) => "graph refine".into(),
        Command::Dendrite(_) => "dendrite dim".into(),
        Command::Gasket(_) => "gasket dim".into(),
        Command::Render(r) => format!("render {}", scene_name(r.scene)),
    }
}

fn scene_name(s: Scene) -> &'static str {
    match s {
        Scene::Iteration => "iteration",
        Scene::Graph => "graph",
        Scene::MainTree => "main-tree",
        Scene::Automaton => "automaton",
    }
}

fn check_flags(cli: &Cli) -> Result<()> {
    let bad = |msg: String| Err(Error::DomainError(msg));
    match &cli.command {
        Command::Validate { depth, .. } | Command::Metric(MetricCmd::Check { depth, .. }) if *depth < 2 => {
            bad(format!("--depth must be at least 2, got {depth}"))
        }
        Command::Metric(MetricCmd::Check { samples: 0, .. }) => bad("--samples must be positive".into()),
        Command::Graph(GraphCmd::Refine { opts, .. }) => check_graph_opts(opts),
        Command::Dendrite(DendriteCmd::Dim { m, delta, c, depth, .. }) => {
            if m.0.contains(&0) {
                bad("-m values must be at least 1".into())
            } else if !(*delta > 0.0 && *delta < 1.0) {
                bad(format!("--delta must lie in (0, 1), got {delta}"))
            } else if !(*c > 0.0 && c.is_finite()) {
                bad(format!("--c must be positive, got {c}"))
            } else if *depth == 0 {
                bad("--depth must be at least 1".into())
            } else {
                Ok(())
            }
        }
        Command::Gasket(GasketCmd::Dim { scheme, s_factor, s, .. }) => {
            if *scheme == SchemeArg::Uniform && (s_factor.is_some() || s.is_some()) {
                bad("--s-factor and --s apply to the general scheme only".into())
            } else if s_factor.is_some_and(|f| !(f > 1.0 && f.is_finite())) {
                bad("--s-factor must exceed 1".into())
            } else if s.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                bad("--s must be positive".into())
            } else {
                Ok(())
            }
        }
        Command::Render(r) => check_graph_opts(&r.graph),
        _ => Ok(()),
    }
}

fn check_graph_opts(o: &GraphOpts) -> Result<()> {
    if o.n > 8 {
        return Err(Error::DomainError(format!("-n {} is beyond the supported depth 8", o.n)));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed;
    let name = command_name(&cli.command);
    match &cli.command {
        Command::Validate { ifs, depth } => validate(&name, ifs, *depth),
        Command::Automaton(AutomatonCmd::Build { ifs, dot, svg, samples }) => {
            automaton_build(&name, ifs, dot.as_deref(), svg.as_deref(), *samples, seed)
        }
        Command::Classify { f, g, triples } => classify(&name, f, g, *triples, seed),
        Command::Metric(MetricCmd::Check { ifs, samples, depth }) => metric(&name, ifs, *samples, *depth, seed),
        Command::Graph(GraphCmd::Refine { ifs, opts, svg, pairs }) => graph_refine(&name, ifs, opts, svg.as_deref(), *pairs, seed),
        Command::Dendrite(DendriteCmd::Dim { ifs, m, delta, c, no_auto_halve, depth, svg }) => {
            dendrite_dim(&name, ifs, &m.0, *delta, *c, !no_auto_halve, *depth, svg.as_deref())
        }
        Command::Gasket(GasketCmd::Dim { ifs, m, scheme, s_factor, s, depth, svg }) => {
            gasket_dim(&name, ifs, &m.0, *scheme, *s_factor, *s, *depth, svg.as_deref())
        }
        Command::Render(r) => render(&name, r),
    }
}

pub fn load_spec(path: &Path) -> Result<IfsSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    IfsSpec::from_json(&text)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn to_value(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn validate(name: &str, path: &Path, depth: usize) -> Result<Outcome> {
    let spec = load_spec(path)?;
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let sic = verify_sic_asc(&ifs, &pcd, depth)?;
    let gasket = match validate_gasket(&spec).and_then(|g| connectivity(&g, depth)) {
        Ok(c) => json!({ "gasket": true, "connectivity": c }),
        Err(e) => json!({ "gasket": false, "reason": e.to_string() }),
    };
    let dendrite = match certify_dendrite(&ifs, 2) {
        Ok(cert) => json!({ "dendrite": true, "certificate": cert }),
        Err(e) => json!({ "dendrite": false, "reason": e.to_string() }),
    };
    let results = json!({
        "n": ifs.n(),
        "ratios": ifs.ratios(),
        "similarity_dimension": similarity_dimension(&ifs.ratios()).ok(),
        "post_critical": pcd,
        "sic": sic,
        "gasket": gasket,
        "dendrite": dendrite,
    });
    Ok(Outcome::new(Report::new(name, &[&spec], results)))
}

fn automaton_build(name: &str, path: &Path, dot: Option<&Path>, svg_out: Option<&Path>, samples: usize, seed: u64) -> Result<Outcome> {
    let spec = load_spec(path)?;
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let a = build_automaton(&ifs, &pcd)?;
    if let Some(p) = dot {
        write_file(p, &a.to_dot())?;
    }
    if let Some(p) = svg_out {
        write_file(p, &svg::automaton_svg(&a))?;
    }
    let n = a.n;
    let transitions: Vec<Value> = a
        .states
        .iter()
        .enumerate()
        .map(|(s, st)| {
            let row: serde_json::Map<String, Value> = (0..n * n)
                .map(|l| (format!("{},{}", l / n + 1, l % n + 1), Value::String(a.states[a.delta[s][l]].to_string())))
                .collect();
            json!({ "state": st.to_string(), "delta": row })
        })
        .collect();
    let lemma = check_surviving_time_lemma(&ifs, &pcd, &a, samples, 6, seed)?;
    let failed = !lemma.ok();
    let results = json!({
        "n": n,
        "states": a.states.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "state_count": a.states.len(),
        "pair_states": a.pair_states(),
        "transitions": transitions,
        "surviving_time_check": lemma,
    });
    Ok(Outcome::new(Report::new(name, &[&spec], results)).fail_if(failed, "surviving times disagree with the cylinder geometry"))
}

fn classify(name: &str, f: &Path, g: &Path, triples: usize, seed: u64) -> Result<Outcome> {
    let (fs, gs) = (load_spec(f)?, load_spec(g)?);
    let c = classify_equivalence(&fs, &gs)?;
    let qs = match c.verdict {
        Verdict::Quasisymmetric { s } if triples > 0 => {
            let perm = c.isomorphism.as_ref().map(|i| i.perm.clone()).unwrap_or_default();
            Some(qs_triple_check(&analyse(&fs)?, &analyse(&gs)?, &perm, s, triples, seed)?)
        }
        _ => None,
    };
    let failed = qs.as_ref().is_some_and(|q| !q.holds);
    let results = json!({ "classification": c, "qs_check": qs });
    Ok(Outcome::new(Report::new(name, &[&fs, &gs], results)).fail_if(failed, "quasisymmetry ratio check failed"))
}

fn metric(name: &str, path: &Path, samples: usize, depth: usize, seed: u64) -> Result<Outcome> {
    let spec = load_spec(path)?;
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let sic = verify_sic_asc(&ifs, &pcd, depth)?;
    let automaton = build_automaton(&ifs, &pcd)?;
    let a = Analysed { ifs, pcd, sic, automaton };
    let mc = metric_check(&a, samples, seed)?;
    let pairs = sample_point_pairs(&a.ifs, samples, seed)?;
    let lemma = check_boundary_lemma(&a.ifs, &a.pcd, &pairs)?;
    let failed = !mc.violations.is_empty() || !lemma.holds;
    let mut results = to_value(&mc);
    results["boundary_lemma"] = to_value(&lemma);
    Ok(Outcome::new(Report::new(name, &[&spec], results)).fail_if(failed, "metric checks reported violations"))
}

/// The map family and the default assignment it implies.
fn family_and_default(spec: &IfsSpec, ifs: &Ifs, pcd: &PostCriticalData, fam: FamilyArg) -> Result<(MapFamily, WeightAssignment)> {
    match fam {
        FamilyArg::Power(m) => {
            let family = MapFamily::power(ifs.n(), m);
            let r = family.words.iter().map(|w| ifs.word_ratio(w)).collect();
            Ok((family, WeightAssignment::uniform(pcd.len(), r)))
        }
        FamilyArg::Vertex(m) => {
            let g = validate_gasket(spec)?;
            let it = vertex_iteration(&g, m)?;
            let r = vec![1.0 / (2 * m + 2) as f64; it.len()];
            Ok((it.family, WeightAssignment::uniform(pcd.len(), r)))
        }
    }
}

struct GraphSetup {
    spec: IfsSpec,
    ifs: Ifs,
    pcd: PostCriticalData,
    family: MapFamily,
    assign: WeightAssignment,
}

fn graph_setup(path: &Path, opts: &GraphOpts) -> Result<GraphSetup> {
    let spec = load_spec(path)?;
    let ifs = Ifs::new(spec.clone())?;
    let pcd = compute_post_critical(&ifs)?;
    let (family, default) = family_and_default(&spec, &ifs, &pcd, opts.family)?;
    let assign = match &opts.assign {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            WeightAssignment::from_json(&text)?
        }
        None => default,
    };
    Ok(GraphSetup { spec, ifs, pcd, family, assign })
}

fn exact_possible(w: &WeightAssignment) -> bool {
    w.tau0.values().chain(&w.r).all(|&x| <BigRational as Scalar>::from_f64(x).is_some())
}

fn graph_refine(name: &str, path: &Path, opts: &GraphOpts, svg_out: Option<&Path>, pairs: usize, seed: u64) -> Result<Outcome> {
    let st = graph_setup(path, opts)?;
    let (results, failed) = if exact_possible(&st.assign) {
        graph_results::<BigRational>(&st, opts.n, svg_out, pairs, seed, true)?
    } else {
        graph_results::<f64>(&st, opts.n, svg_out, pairs, seed, false)?
    };
    let mut results = results;
    results["family"] = json!(opts.family.to_string());
    Ok(Outcome::new(Report::new(name, &[&st.spec], results)).fail_if(failed, "assignment is not good or levels are not compatible"))
}

fn graph_results<S: Scalar>(st: &GraphSetup, n: usize, svg_out: Option<&Path>, pairs: usize, seed: u64, exact: bool) -> Result<(Value, bool)> {
    let w = st.assign.typed::<S>(st.pcd.len(), st.family.len())?;
    let good = check_good_assignment(&st.ifs, &st.pcd, &st.family, &w)?;
    let compat = (1..=n)
        .map(|k| verify_compatibility(&st.ifs, &st.pcd, &st.family, &w, k, Some(pairs), seed))
        .collect::<Result<Vec<_>>>()?;
    let g = refine(&st.ifs, &st.pcd, &st.family, &w, n)?;
    if let Some(p) = svg_out {
        write_file(p, &svg::graph_svg(&g))?;
    }
    let failed = !(good.compatible && good.edges_geodesic) || compat.iter().any(|c| !c.ok);
    let results = json!({
        "exact": exact,
        "family_size": st.family.len(),
        "level": n,
        "vertices": g.vertices.len(),
        "edges": g.edges.len(),
        "good_assignment": good,
        "compatibility": compat,
    });
    Ok((results, failed))
}

#[allow(clippy::too_many_arguments)]
fn dendrite_dim(name: &str, path: &Path, ms: &[usize], delta: f64, c: f64, auto_halve: bool, depth: usize, svg_out: Option<&Path>) -> Result<Outcome> {
    let spec = load_spec(path)?;
    let d = analyse_dendrite(&spec, depth)?;
    let rows = dimension_trend(&d, ms, delta, c, auto_halve)?;
    if let Some(p) = svg_out {
        write_file(p, &svg::main_tree_svg(&d.ifs, &d.system)?)?;
    }
    let mut report = Report::new(
        name,
        &[&spec],
        json!({
            "delta": delta,
            "c": c,
            "auto_halve": auto_halve,
            "certificate": d.certificate,
            "primary_arcs": d.system,
            "rows": rows,
        }),
    );
    for r in rows.iter().filter(|r| r.halvings > 0) {
        report.warnings.push(format!("m = {}: delta halved {} times to {}", r.m, r.halvings, r.delta_used));
    }
    Ok(Outcome::new(report))
}

#[allow(clippy::too_many_arguments)]
fn gasket_dim(
    name: &str,
    path: &Path,
    ms: &[usize],
    scheme: SchemeArg,
    s_factor: Option<f64>,
    s: Option<f64>,
    depth: usize,
    svg_out: Option<&Path>,
) -> Result<Outcome> {
    let spec = load_spec(path)?;
    let g = validate_gasket(&spec)?;
    let conn = connectivity(&g, depth)?;
    if let Some(p) = svg_out {
        write_file(p, &gasket_iteration_svg(&g, ms[0])?)?;
    }
    let scheme = match scheme {
        SchemeArg::Uniform => Scheme::Uniform,
        SchemeArg::General => Scheme::General,
    };
    let mut warnings = Vec::new();
    let (augmentation, rows) = if conn.connected {
        let aug = (scheme == Scheme::General).then(|| augmentation_report(&g)).transpose()?;
        let choice = match (s, s_factor) {
            (Some(s), _) => SChoice::Fixed(s),
            (None, f) => SChoice::Factor(f.unwrap_or(1.01)),
        };
        let rows = conformal_upper_bound(&g, ms, scheme, choice)?;
        for r in &rows {
            if let Some(cf) = r.closed_form.filter(|cf| (cf - r.dim).abs() > 1e-9) {
                warnings.push(format!("m = {}: dimension {} differs from closed form {cf}", r.m, r.dim));
            }
        }
        (aug, rows)
    } else {
        warnings.push(format!("Hata graph is disconnected; conformal dimension verdict {}", conn.verdict));
        (None, Vec::new())
    };
    let scheme_name = match scheme {
        Scheme::Uniform => "uniform",
        Scheme::General => "general",
    };
    let mut report = Report::new(
        name,
        &[&spec],
        json!({
            "scheme": scheme_name,
            "connectivity": conn,
            "conformal_dimension": conn.verdict,
            "augmentation": augmentation,
            "rows": rows,
        }),
    );
    let mismatch = warnings.iter().any(|w| w.contains("closed form"));
    report.warnings = warnings;
    Ok(Outcome { report, status: if mismatch { 3 } else { 0 } })
}

fn gasket_iteration_svg(g: &crate::gasket::GasketSpec, m: usize) -> Result<String> {
    let ifs = Ifs::new(g.spec.clone())?;
    let it = vertex_iteration(g, m)?;
    let comps = it.components.clone();
    Ok(svg::iteration_svg(&ifs, &svg::TRIANGLE, &it.family.words, |k| comps.iter().position(|c| c.contains(&k))))
}

fn render(name: &str, r: &RenderArgs) -> Result<Outcome> {
    let spec = load_spec(&r.ifs)?;
    let (body, details) = match r.scene {
        Scene::Iteration => match validate_gasket(&spec) {
            Ok(g) => (gasket_iteration_svg(&g, r.m)?, json!({ "m": r.m, "family": "vertex" })),
            Err(_) => {
                let ifs = Ifs::new(spec.clone())?;
                let words: Vec<Word> = all_words(ifs.n(), r.m);
                (svg::iteration_svg(&ifs, &svg::base_polygon(&ifs), &words, |_| None), json!({ "m": r.m, "family": "power" }))
            }
        },
        Scene::Graph => {
            let st = graph_setup(&r.ifs, &r.graph)?;
            let (text, v, e) = if exact_possible(&st.assign) {
                graph_scene::<BigRational>(&st, r.graph.n)?
            } else {
                graph_scene::<f64>(&st, r.graph.n)?
            };
            (text, json!({ "n": r.graph.n, "family": r.graph.family.to_string(), "vertices": v, "edges": e }))
        }
        Scene::MainTree => {
            let d = analyse_dendrite(&spec, CERT_DEPTH)?;
            (svg::main_tree_svg(&d.ifs, &d.system)?, json!({ "pstar": d.system.pstar.len(), "arcs": d.system.arcs.len() }))
        }
        Scene::Automaton => {
            let ifs = Ifs::new(spec.clone())?;
            let pcd = compute_post_critical(&ifs)?;
            let a = build_automaton(&ifs, &pcd)?;
            (svg::automaton_svg(&a), json!({ "states": a.states.len() }))
        }
    };
    write_file(&r.out, &body)?;
    let results = json!({
        "scene": scene_name(r.scene),
        "out": r.out.display().to_string(),
        "bytes": body.len(),
        "sha256": hex::encode(Sha256::digest(body.as_bytes())),
        "details": details,
    });
    Ok(Outcome::new(Report::new(name, &[&spec], results)))
}

fn graph_scene<S: Scalar>(st: &GraphSetup, n: usize) -> Result<(String, usize, usize)> {
    let w = st.assign.typed::<S>(st.pcd.len(), st.family.len())?;
    let g = refine(&st.ifs, &st.pcd, &st.family, &w, n)?;
    Ok((svg::graph_svg(&g), g.vertices.len(), g.edges.len()))
}

/// Plain-text rendering of a report: scalars as `key: value`, row lists as tables.
pub fn text_summary(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", r.command);
    for d in &r.spec_digest {
        let _ = writeln!(out, "  spec {d}");
    }
    if let Value::Object(map) = &r.results {
        for (k, v) in map {
            match v {
                Value::Array(rows) if rows.first().is_some_and(Value::is_object) => {
                    let _ = writeln!(out, "{k}:");
                    for row in rows {
                        let cells: Vec<String> = row
                            .as_object()
                            .into_iter()
                            .flatten()
                            .filter(|(_, x)| !x.is_array() && !x.is_object())
                            .map(|(c, x)| format!("{c}={}", scalar(x)))
                            .collect();
                        let _ = writeln!(out, "  {}", cells.join("  "));
                    }
                }
                Value::Array(a) => {
                    let _ = writeln!(out, "{k}: {}", serde_json::to_string(a).unwrap_or_default());
                }
                Value::Object(o) => {
                    let _ = writeln!(out, "{k}:");
                    for (c, x) in o.iter().filter(|(_, x)| !x.is_array() && !x.is_object()) {
                        let _ = writeln!(out, "  {c}: {}", scalar(x));
                    }
                }
                _ => {
                    let _ = writeln!(out, "{k}: {}", scalar(v));
                }
            }
        }
    }
    if let Some(t) = r.timing_ms {
        let _ = writeln!(out, "time: {t} ms");
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_range("3").unwrap(), vec![3]);
        assert_eq!(parse_range("1,4..5,2").unwrap(), vec![1, 2, 4, 5]);
        assert_eq!(parse_range("2..=3").unwrap(), vec![2, 3]);
        assert!(parse_range("5..1").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn families_parse() {
        assert_eq!(parse_family("power:2").unwrap(), FamilyArg::Power(2));
        assert_eq!(parse_family("vertex:0").unwrap(), FamilyArg::Vertex(0));
        assert!(parse_family("power:0").is_err());
        assert!(parse_family("tree:1").is_err());
    }

    #[test]
    fn flags_are_checked_before_work() {
        let e = run_from(["fractop", "dendrite", "dim", "missing.json", "--delta", "2"]).unwrap_err();
        assert!(matches!(e, Error::DomainError(_)));
        let e = run_from(["fractop", "dendrite", "dim", "missing.json"]).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn error_report_is_json() {
        let v: Value = serde_json::from_str(&error_json("validate", &Error::NotAGasket("x".into()))).unwrap();
        assert_eq!(v["error"]["kind"], "NotAGasket");
        assert_eq!(v["error"]["exit_code"], 2);
    }
}
