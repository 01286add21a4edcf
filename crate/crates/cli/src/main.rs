//! `barylab`: command-line front end for the optimal transport laboratory.
//!
//! Every command prints one line of JSON on stdout. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | bad input (flags, files, configs) |
//! | 3 | validation failure |
//! | 4 | solver failure |
//! | 5 | balance did not converge |

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use barylab::barycenter::{balance_potentials, solve_barycenter, BalanceOptions};
use barylab::lab::{
    config_hash, run_experiment, wasserstein_net, ExperimentConfig, ExperimentKind, NetConfig,
    RunOptions,
};
use barylab::spaces::{build_model_space, sample_good_measure, validate_metric, ModelSpec};
use barylab::transport::solve_w2;
use barylab::{DiscreteSpace, Error, GoodMeasureParams, Measure, SecondOrderLaw};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "barylab",
    version,
    about = "Discrete optimal transport and Wasserstein barycenter laboratory"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed. For `run` it overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file, or output directory for `run`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver tolerance [default: 1e-8]. For `run` it overrides both config tolerances.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Exponent slack of the stability experiments [default: 0.5].
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Format of the main output file [default: csv for `run`, json otherwise].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Directory for cached heat kernels.
    #[arg(long, global = true, env = "BARYLAB_CACHE")]
    cache: Option<PathBuf>,
}

impl Global {
    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model space and write it as JSON.
    Space(SpaceArgs),
    /// Write a measure on a space.
    Measure(MeasureArgs),
    /// Exact W2 between two measures.
    W2(W2Args),
    /// Barycenter of a second-order law.
    Barycenter(LawArgs),
    /// Balanced Kantorovich potentials for a law and its barycenter.
    Balance(BalanceArgs),
    /// Run an experiment from a TOML config.
    Run(RunArgs),
    /// Covering nets of the space of measures.
    Net(NetArgs),
    /// Validate a space file, a measure file or a config.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceKind {
    Interval,
    Circle,
    Sphere,
    Cone,
    Mesh,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long, value_enum)]
    kind: SpaceKind,
    /// Number of points (ignored for meshes).
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value_t = 1.0)]
    circumference: f64,
    /// Sphere radius, or slant radius of a cone.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Total cone angle in (0, 2π).
    #[arg(long, default_value_t = std::f64::consts::PI)]
    angle: f64,
    /// Triangle mesh file (`v x y z` / `f i j k`).
    #[arg(long)]
    mesh: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureKind {
    Uniform,
    Dirac,
    Weights,
    Good,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum)]
    kind: MeasureKind,
    /// Site of a Dirac mass.
    #[arg(long)]
    at: Option<usize>,
    /// Comma-separated raw weights.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Density bounds of a good measure.
    #[arg(long, default_value_t = 0.5)]
    m_lower: f64,
    #[arg(long, default_value_t = 2.0)]
    m_upper: f64,
    /// Comma-separated support of a good measure [default: all points].
    #[arg(long, value_delimiter = ',')]
    domain: Vec<usize>,
}

#[derive(Args)]
struct W2Args {
    #[arg(long)]
    space: PathBuf,
    /// Target measure file.
    mu: PathBuf,
    /// Source measure file.
    rho: PathBuf,
}

#[derive(Args)]
struct LawArgs {
    #[arg(long)]
    space: PathBuf,
    /// Law file (JSON), as an alternative to `--atom`.
    #[arg(long)]
    law: Option<PathBuf>,
    /// Atom as `path` or `path@weight`; repeat for more atoms.
    #[arg(long)]
    atom: Vec<String>,
}

#[derive(Args)]
struct BalanceArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Barycenter measure file [default: solved here].
    #[arg(long)]
    barycenter: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(required_unless_present_any = ["print_default", "reference"])]
    config: Option<PathBuf>,
    /// Print the default config of an experiment and exit.
    #[arg(long, value_name = "EXPERIMENT")]
    print_default: Option<String>,
    /// Print a reference page of every default config and exit.
    #[arg(long)]
    reference: bool,
    /// Skip SVG plots even when the config asks for them.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Args)]
struct NetArgs {
    #[arg(long)]
    space: PathBuf,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.4, 0.3])]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 200_000)]
    cap: usize,
    #[arg(long, default_value_t = 500)]
    probes: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// A space file, a measure file (with `--space`) or a `.toml` config.
    file: PathBuf,
    #[arg(long)]
    space: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
    extra: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidMetric(_) => 3,
            Error::Solver(_)
            | Error::InfeasiblePotentials(_)
            | Error::NotOptimal(_)
            | Error::NotBarycenter { .. }
            | Error::Disconnected(_)
            | Error::NetCap { .. } => 4,
            Error::BalanceNonConvergence { .. } => 5,
            _ => 2,
        };
        let extra = match &e {
            Error::BalanceNonConvergence {
                iterations,
                residual,
                gap,
                ..
            } => json!({ "iterations": iterations, "residual": residual, "gap": gap }),
            _ => Value::Null,
        };
        Failure {
            code,
            message: e.to_string(),
            extra,
        }
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
        extra: Value::Null,
    }
}

type CmdResult = std::result::Result<Value, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Space(_) => "space",
        Command::Measure(_) => "measure",
        Command::W2(_) => "w2",
        Command::Barycenter(_) => "barycenter",
        Command::Balance(_) => "balance",
        Command::Run(_) => "run",
        Command::Net(_) => "net",
        Command::Validate(_) => "validate",
    };
    let g = &cli.global;
    let result = check_global(g).and_then(|()| match &cli.command {
        Command::Space(a) => cmd_space(g, a),
        Command::Measure(a) => cmd_measure(g, a),
        Command::W2(a) => cmd_w2(g, a),
        Command::Barycenter(a) => cmd_barycenter(g, a),
        Command::Balance(a) => cmd_balance(g, a),
        Command::Run(a) => cmd_run(g, a),
        Command::Net(a) => cmd_net(g, a),
        Command::Validate(a) => cmd_validate(a),
    });
    match result {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(mut summary) => {
            summary["command"] = json!(name);
            let code = summary
                .get("exit_code")
                .and_then(Value::as_u64)
                .unwrap_or(0) as u8;
            println!("{summary}");
            ExitCode::from(code)
        }
        Err(f) => {
            let summary = json!({ "command": name, "ok": false, "exit_code": f.code, "error": f.message, "details": f.extra });
            println!("{summary}");
            eprintln!("barylab {name}: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn check_global(g: &Global) -> std::result::Result<(), Failure> {
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(bad_input(format!("--tol must be positive, got {t}")));
        }
    }
    if let Some(s) = g.sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(bad_input(format!("--sigma must be positive, got {s}")));
        }
    }
    if g.jobs == Some(0) {
        return Err(bad_input("--jobs must be at least 1"));
    }
    Ok(())
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> std::result::Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| bad_input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn out_path(g: &Global, default_stem: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| {
        PathBuf::from(match g.format() {
            Format::Json => format!("{default_stem}.json"),
            Format::Csv => format!("{default_stem}.csv"),
        })
    })
}

fn load_space(path: &Path) -> std::result::Result<DiscreteSpace, Failure> {
    Ok(DiscreteSpace::from_json(&read(path)?)?)
}

fn load_measure(path: &Path, space: &DiscreteSpace) -> std::result::Result<Measure, Failure> {
    Measure::from_file_json(&read(path)?, space)
        .map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn load_law(a: &LawArgs, space: &DiscreteSpace) -> std::result::Result<SecondOrderLaw, Failure> {
    let law = match (&a.law, a.atom.is_empty()) {
        (Some(p), true) => serde_json::from_str(&read(p)?)
            .map_err(|e| bad_input(format!("{}: {e}", p.display())))?,
        (None, false) => {
            let atoms = a
                .atom
                .iter()
                .map(|spec| {
                    let (path, weight) = match spec.rsplit_once('@') {
                        Some((p, w)) => (
                            p,
                            w.parse::<f64>()
                                .map_err(|_| bad_input(format!("bad atom weight in '{spec}'")))?,
                        ),
                        None => (spec.as_str(), 1.0),
                    };
                    Ok((load_measure(Path::new(path), space)?, weight))
                })
                .collect::<std::result::Result<Vec<_>, Failure>>()?;
            SecondOrderLaw::new(atoms)?
        }
        _ => return Err(bad_input("give either --law or at least one --atom")),
    };
    law.check_on(space)?;
    Ok(law)
}

fn csv_lines<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn cmd_space(g: &Global, a: &SpaceArgs) -> CmdResult {
    let spec = match a.kind {
        SpaceKind::Interval => ModelSpec::Interval { length: a.length },
        SpaceKind::Circle => ModelSpec::Circle {
            circumference: a.circumference,
        },
        SpaceKind::Sphere => ModelSpec::Sphere { radius: a.radius },
        SpaceKind::Cone => ModelSpec::Cone {
            angle: a.angle,
            radius: a.radius,
        },
        SpaceKind::Mesh => ModelSpec::MeshFile {
            path: a
                .mesh
                .clone()
                .ok_or_else(|| bad_input("--kind mesh needs --mesh"))?,
        },
    };
    let space = build_model_space(&spec, a.n)?;
    let report = validate_metric(&space);
    let path = out_path(g, "space");
    match g.format() {
        Format::Json => write(&path, &space.to_json()?)?,
        Format::Csv => {
            let n = space.point_count();
            write(
                &path,
                &csv_lines(
                    "i,j,distance",
                    (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .map(|(i, j)| format!("{i},{j},{:?}", space.dist(i, j))),
                ),
            )?
        }
    }
    Ok(json!({
        "ok": report.passed(),
        "exit_code": if report.passed() { 0 } else { 3 },
        "path": path,
        "label": space.label(),
        "points": space.point_count(),
        "diameter": space.diameter(),
        "validation": report.summary(),
    }))
}

fn cmd_measure(g: &Global, a: &MeasureArgs) -> CmdResult {
    let space = load_space(&a.space)?;
    let n = space.point_count();
    let measure = match a.kind {
        MeasureKind::Uniform => Measure::uniform(&space),
        MeasureKind::Dirac => {
            let at = a.at.ok_or_else(|| bad_input("--kind dirac needs --at"))?;
            if at >= n {
                return Err(bad_input(format!("--at {at} out of range for {n} points")));
            }
            Measure::dirac(n, at)
        }
        MeasureKind::Weights => barylab::spaces::make_measure(&space, &a.weights)?,
        MeasureKind::Good => {
            let params = GoodMeasureParams::new(a.m_lower, a.m_upper)?;
            let domain: Vec<usize> = if a.domain.is_empty() {
                (0..n).collect()
            } else {
                a.domain.clone()
            };
            sample_good_measure(&space, &params, &domain, g.seed.unwrap_or(1))?
        }
    };
    let path = out_path(g, "measure");
    match g.format() {
        Format::Json => write(&path, &measure.to_file_json(space.label())?)?,
        Format::Csv => write(
            &path,
            &csv_lines(
                "i,weight",
                measure
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(i, w)| format!("{i},{w:?}")),
            ),
        )?,
    }
    Ok(json!({ "ok": true, "path": path, "support": measure.support().len() }))
}

fn cmd_w2(g: &Global, a: &W2Args) -> CmdResult {
    let space = load_space(&a.space)?;
    let mu = load_measure(&a.mu, &space)?;
    let rho = load_measure(&a.rho, &space)?;
    let sol = solve_w2(&space, &mu, &rho)?;
    let tol = g.tol.unwrap_or(1e-8);
    let path = out_path(g, "w2");
    match g.format() {
        Format::Json => write(&path, &sol.to_json()?)?,
        Format::Csv => write(
            &path,
            &csv_lines(
                "from,to,mass",
                sol.plan
                    .entries
                    .iter()
                    .map(|(x, y, m)| format!("{x},{y},{m:?}")),
            ),
        )?,
    }
    let ok = sol.gap.abs() <= tol;
    Ok(json!({
        "ok": ok,
        "exit_code": if ok { 0 } else { 4 },
        "path": path,
        "value": sol.value,
        "w2": sol.w2,
        "gap": sol.gap,
        "flags": { "gap_within_tol": ok },
    }))
}

fn cmd_barycenter(g: &Global, a: &LawArgs) -> CmdResult {
    let space = load_space(&a.space)?;
    let law = load_law(a, &space)?;
    let res = solve_barycenter(&space, &law)?;
    let path = out_path(g, "barycenter");
    match g.format() {
        Format::Json => write(&path, &res.to_json()?)?,
        Format::Csv => write(
            &path,
            &csv_lines(
                "i,weight",
                res.measure
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(i, w)| format!("{i},{w:?}")),
            ),
        )?,
    }
    let worst_gap = res
        .per_atom_gaps
        .iter()
        .copied()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(json!({
        "ok": true,
        "path": path,
        "variance": res.variance_value,
        "gap": worst_gap,
        "flags": { "non_unique": res.solver_status.non_unique },
    }))
}

fn cmd_balance(g: &Global, a: &BalanceArgs) -> CmdResult {
    let space = load_space(&a.law.space)?;
    let law = load_law(&a.law, &space)?;
    let mu = match &a.barycenter {
        Some(p) => load_measure(p, &space)?,
        None => solve_barycenter(&space, &law)?.measure,
    };
    let opts = BalanceOptions {
        tol: g.tol.unwrap_or(1e-8),
        max_iters: a.max_iters,
    };
    let rep = balance_potentials(&space, &law, &mu, &opts)?;
    let path = out_path(g, "balance");
    match g.format() {
        Format::Json => write(
            &path,
            &serde_json::to_string_pretty(&rep).map_err(Error::from)?,
        )?,
        Format::Csv => {
            let header: Vec<String> = (0..rep.pairs.len()).map(|k| format!("psi_{k}")).collect();
            write(
                &path,
                &csv_lines(
                    &format!("y,{}", header.join(",")),
                    (0..space.point_count()).map(|y| {
                        let vals: Vec<String> = rep
                            .pairs
                            .iter()
                            .map(|p| format!("{:?}", p.psi[y]))
                            .collect();
                        format!("{y},{}", vals.join(","))
                    }),
                ),
            )?
        }
    }
    let worst_gap = rep
        .gaps
        .iter()
        .copied()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(json!({
        "ok": true,
        "path": path,
        "residual": rep.residual,
        "gap": worst_gap,
        "iterations": rep.iterations,
    }))
}

/// Markdown page listing every experiment's default config.
fn reference_page() -> std::result::Result<String, Failure> {
    let mut page = String::from(
        "# barylab experiment configs\n\n\
         A config names its `experiment`; every omitted key takes the default below.\n\
         Tables merge key by key, except that a table whose `kind` changes is replaced whole.\n",
    );
    for kind in ExperimentKind::ALL {
        page.push_str(&format!(
            "\n## {}\n\n```toml\n{}```\n",
            kind.name(),
            ExperimentConfig::default_for(kind).to_toml()?
        ));
    }
    Ok(page)
}

fn cmd_run(g: &Global, a: &RunArgs) -> CmdResult {
    if a.reference {
        print!("{}", reference_page()?);
        return Ok(Value::Null);
    }
    if let Some(kind) = &a.print_default {
        let kind = ExperimentKind::from_name(kind)?;
        print!("{}", ExperimentConfig::default_for(kind).to_toml()?);
        return Ok(Value::Null);
    }
    let path = a.config.as_ref().expect("clap enforces a config");
    let mut cfg = ExperimentConfig::from_toml_str(&read(path)?)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(sigma) = g.sigma {
        cfg.sigma = sigma;
    }
    if let Some(tol) = g.tol {
        cfg.tolerances.balance = tol;
        cfg.tolerances.deficit = tol;
    }
    cfg.validate()?;
    let out = run_experiment(
        &cfg,
        &RunOptions {
            jobs: g.jobs,
            cache_dir: g.cache.clone(),
        },
    )?;
    let report = &out.report;
    let dir = g
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let stem = cfg.experiment.name();
    let mut files = Vec::new();
    let mut emit = |name: String, contents: &str| -> std::result::Result<(), Failure> {
        let p = dir.join(name);
        write(&p, contents)?;
        files.push(p);
        Ok(())
    };
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(format!("{stem}.csv"), &report.to_csv()?)?,
        Format::Json => emit(
            format!("{stem}.rows.json"),
            &serde_json::to_string_pretty(report).map_err(Error::from)?,
        )?,
    }
    emit(format!("{stem}.json"), &report.sidecar_json()?)?;
    if !out.nets.is_empty() {
        emit(
            format!("{stem}.nets.json"),
            &serde_json::to_string_pretty(&out.nets).map_err(Error::from)?,
        )?;
    }
    let hash = config_hash(&report.config);
    for fig in plot::figures(report) {
        emit(
            format!("{stem}.{}.csv", fig.name),
            &fig.to_csv(&hash, report.seed),
        )?;
        if cfg.output.svg && !a.no_svg {
            let svg = fig.to_svg().replacen(
                "<rect",
                &format!("<!-- config_hash={hash} seed={} -->\n<rect", report.seed),
                1,
            );
            emit(format!("{stem}.{}.svg", fig.name), &svg)?;
        }
    }
    Ok(json!({
        "ok": true,
        "experiment": stem,
        "passed": report.passed(),
        "partial": report.partial,
        "rows": report.rows.len(),
        "config_hash": hash,
        "seed": report.seed,
        "flags": report.flags,
        "constants": report.constants,
        "files": files,
    }))
}

fn cmd_net(g: &Global, a: &NetArgs) -> CmdResult {
    let space = load_space(&a.space)?;
    let cfg = NetConfig {
        cap: a.cap,
        probes: a.probes,
        seed: g.seed.unwrap_or(1),
    };
    let nets = rayon_pool(g.jobs)?.install(|| {
        a.eps
            .iter()
            .map(|&e| wasserstein_net(&space, e, &cfg))
            .collect::<barylab::Result<Vec<_>>>()
    })?;
    let path = out_path(g, "nets");
    match g.format() {
        Format::Json => write(
            &path,
            &serde_json::to_string_pretty(&nets).map_err(Error::from)?,
        )?,
        Format::Csv => write(
            &path,
            &csv_lines(
                "epsilon,cardinality,m,lattice,max_probe_distance,verified",
                nets.iter().map(|n| {
                    format!(
                        "{:?},{},{},{},{:?},{}",
                        n.epsilon, n.cardinality, n.m, n.lattice, n.max_probe_distance, n.verified
                    )
                }),
            ),
        )?,
    }
    let verified = nets.iter().all(|n| n.verified);
    Ok(json!({
        "ok": verified,
        "exit_code": if verified { 0 } else { 3 },
        "path": path,
        "cardinalities": nets.iter().map(|n| n.cardinality).collect::<Vec<_>>(),
        "max_probe_distances": nets.iter().map(|n| n.max_probe_distance).collect::<Vec<_>>(),
        "flags": { "verified": verified },
    }))
}

fn rayon_pool(jobs: Option<usize>) -> std::result::Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build()
        .map_err(|e| bad_input(format!("thread pool: {e}")))
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let text = read(&a.file)?;
    if a.file.extension().is_some_and(|e| e == "toml") {
        let cfg = ExperimentConfig::from_toml_str(&text)?;
        let space = cfg.build_space()?;
        return Ok(
            json!({ "ok": true, "kind": "config", "experiment": cfg.experiment.name(), "points": space.point_count() }),
        );
    }
    if let Some(space_path) = &a.space {
        let space = load_space(space_path)?;
        return match Measure::from_file_json(&text, &space) {
            Ok(m) => Ok(json!({ "ok": true, "kind": "measure", "support": m.support().len() })),
            Err(e) => Ok(
                json!({ "ok": false, "exit_code": 3, "kind": "measure", "error": e.to_string() }),
            ),
        };
    }
    // read without the constructor's checks so that the report is complete
    let raw: DiscreteSpace =
        serde_json::from_str(&text).map_err(|e| bad_input(format!("{}: {e}", a.file.display())))?;
    let report = validate_metric(&raw);
    Ok(json!({
        "ok": report.passed(),
        "exit_code": if report.passed() { 0 } else { 3 },
        "kind": "space",
        "points": raw.point_count(),
        "validation": report.summary(),
        "flags": {
            "nonnegative": report.nonnegative,
            "zero_diagonal": report.zero_diagonal,
            "symmetric": report.symmetric,
            "triangle": report.triangle,
        },
    }))
}
