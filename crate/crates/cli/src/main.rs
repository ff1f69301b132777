use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};

use hyperreg::applications::{
    corner_census, corner_removal_check, find_ap, find_configuration, find_simplex_corner, ApplicationError,
    ConfigConfig, ConfigEngine, CornerEngine, Point,
};
use hyperreg::density::{embed_probability_exact, embed_probability_mc, DensityError, DensityTable, EstimatorConfig};
use hyperreg::io::{self, IoError, ReportFormat, RunManifest};
use hyperreg::lemma_lab::{run_corpus, LemmaCorpus, LemmaError, MeanSquareConfig};
use hyperreg::model::{random_hypergraph, ModelError};
use hyperreg::ratio::{self, Q};
use hyperreg::regularity::{
    build_error_function, exhaustive_family, reg_upper_bound, verify_error_function, BuildMode, ErrorFunction,
    EtaConfig, FaithfulParams, RegBoundConfig, RegularityError, ScheduleRefusal, DEFAULT_MAX_BITS,
};
use hyperreg::regularize::{color_bound, realized_counts, regularize, sample_map_vector, RegularizeError};
use hyperreg::removal::{removal_decision, RemovalConfig, RemovalError, UniformPattern};

/// Regularize colored partite hypergraphs, certify regularity, run the
/// removal procedure and search for corners and configurations.
#[derive(Parser, Debug)]
#[command(name = "hyperreg", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Root seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest exhaustive enumeration allowed.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    budget: u128,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Report path; stdout when absent. A manifest is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exact,
    Mc,
    Faithful,
    Empirical,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Random hypergraph with i.i.d. uniform colors.
    Gen {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        parts: Vec<usize>,
        /// Palette size per edge size, `b_1,...,b_k`.
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<usize>,
    },
    /// Recolor by traces over sampled vertices.
    Regularize {
        graph: PathBuf,
        /// Sizes of the maps `phi_1, ..., phi_{k-1}`; default all 1.
        #[arg(long, value_delimiter = ',')]
        maps: Option<Vec<usize>>,
        /// Also write a color-count report here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Relative densities, or the embedding probability of a complex.
    Density {
        graph: PathBuf,
        #[arg(long)]
        complex: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
    },
    /// Upper bound on the (k, h)-regularity with a checked error function.
    RegBound {
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        h: usize,
        /// Family size when the family is sampled.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 1 << 16)]
        family_limit: u128,
        /// Target epsilon in faithful mode.
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Samples per complex vertex in faithful mode.
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Run a lemma corpus and report both sides of every inequality.
    VerifyLemmas { corpus: PathBuf },
    /// Removal decision for a uniform pattern.
    Remove {
        graph: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        #[arg(long, value_delimiter = ',')]
        maps: Option<Vec<usize>>,
        /// Where to write the recolored graph in case (i).
        #[arg(long)]
        modified_out: Option<PathBuf>,
    },
    /// Corner `a + c E_{k+1}` in a subset of the simplex `T(N, k)`.
    FindCorner {
        points: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = CornerEngineArg::BruteForce)]
        engine: CornerEngineArg,
        /// Cross-check with the removal decision on the corner graph.
        #[arg(long)]
        removal_check: bool,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
    },
    /// Homothetic copy `a + cF` in a subset of the box `[N]_0^r`.
    FindConfig {
        points: PathBuf,
        /// Pattern points, `;`-separated tuples such as `0,0;1,0;0,1`.
        #[arg(long, allow_hyphen_values = true)]
        pattern: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = ConfigEngineArg::BruteForce)]
        engine: ConfigEngineArg,
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Arithmetic progression in a subset of `[N]_0`.
    FindAp {
        points: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = ConfigEngineArg::BruteForce)]
        engine: ConfigEngineArg,
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Evaluate the sample-size schedule of the regularity proof.
    Schedule {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        h: usize,
        /// Palette sizes `b_1,...,b_k` (big integers allowed).
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Arguments `n` of the top sample-size function.
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        at: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_BITS)]
        max_bits: u64,
    },
    /// Re-run a manifest and compare report digests.
    Replay { manifest: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CornerEngineArg {
    BruteForce,
    Pruned,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ConfigEngineArg {
    BruteForce,
    Reduction,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Budget(String),
    Assertion(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Assertion(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Budget(m) | CliError::Assertion(m) => m,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        invalid(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        invalid(e.to_string())
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::Budget { .. } => CliError::Budget(e.to_string()),
            _ => invalid(e.to_string()),
        }
    }
}

impl From<RegularizeError> for CliError {
    fn from(e: RegularizeError) -> Self {
        invalid(e.to_string())
    }
}

impl From<ScheduleRefusal> for CliError {
    fn from(e: ScheduleRefusal) -> Self {
        CliError::Budget(e.to_string())
    }
}

impl From<RegularityError> for CliError {
    fn from(e: RegularityError) -> Self {
        match e {
            RegularityError::Density(d) => d.into(),
            RegularityError::Schedule(s) => s.into(),
            RegularityError::TooLarge(_) => CliError::Budget(e.to_string()),
            RegularityError::InvalidErrorFunction { .. } => CliError::Assertion(e.to_string()),
            _ => invalid(e.to_string()),
        }
    }
}

impl From<LemmaError> for CliError {
    fn from(e: LemmaError) -> Self {
        match e {
            LemmaError::Density(d) => d.into(),
            LemmaError::Regularity(r) => r.into(),
            LemmaError::Refused(_) => CliError::Budget(e.to_string()),
            _ => invalid(e.to_string()),
        }
    }
}

impl From<RemovalError> for CliError {
    fn from(e: RemovalError) -> Self {
        match e {
            RemovalError::Density(d) => d.into(),
            RemovalError::Regularity(r) => r.into(),
            _ => invalid(e.to_string()),
        }
    }
}

impl From<ApplicationError> for CliError {
    fn from(e: ApplicationError) -> Self {
        match e {
            ApplicationError::Budget { .. } => CliError::Budget(e.to_string()),
            _ => invalid(e.to_string()),
        }
    }
}

/// Everything a command produces; nothing is written until it succeeds.
struct Run {
    report: Vec<u8>,
    /// Side artifacts such as a recolored graph.
    artifacts: Vec<(PathBuf, Vec<u8>)>,
    inputs: Vec<PathBuf>,
    /// Set when the command found a violated inequality.
    assertion: Option<String>,
}

fn rational(s: &str) -> Result<Q, CliError> {
    ratio::parse(s).ok_or_else(|| invalid(format!("not a rational number: {s:?}")))
}

fn big(s: &str) -> Result<BigUint, CliError> {
    s.trim().parse().map_err(|_| invalid(format!("not a non-negative integer: {s:?}")))
}

fn parse_pattern(s: &str) -> Result<Vec<Point>, CliError> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<Result<Point, _>>()
                .map_err(|_| invalid(format!("bad pattern point {t:?}")))
        })
        .collect()
}

fn format_of(g: &Global) -> ReportFormat {
    match g.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    }
}

fn render<T: Serialize>(g: &Global, value: &T) -> Result<Vec<u8>, CliError> {
    Ok(io::render_report(value, format_of(g))?)
}

fn require_json(g: &Global, what: &str) -> Result<(), CliError> {
    if g.format == Format::Csv {
        return Err(invalid(format!("{what} is only available as JSON")));
    }
    Ok(())
}

fn mode_or(g: &Global, default: Mode, allowed: &[Mode], cmd: &str) -> Result<Mode, CliError> {
    let m = g.mode.unwrap_or(default);
    if !allowed.contains(&m) {
        return Err(invalid(format!("--mode {m:?} is not supported by {cmd}").to_lowercase()));
    }
    Ok(m)
}

fn done(report: Vec<u8>, inputs: Vec<PathBuf>) -> Run {
    Run {
        report,
        artifacts: Vec::new(),
        inputs,
        assertion: None,
    }
}

fn execute(global: &Global, command: &Command) -> Result<Run, CliError> {
    match command {
        Command::Gen { r, k, parts, b } => {
            require_json(global, "a hypergraph")?;
            let g = random_hypergraph(*r, *k, b, parts, global.seed)?;
            Ok(done(io::hypergraph_json(&g).into_bytes(), vec![]))
        }
        Command::Regularize { graph, maps, stats } => {
            require_json(global, "a hypergraph")?;
            let g = io::load_hypergraph(graph)?;
            let sizes = maps.clone().unwrap_or_else(|| vec![1; g.k() - 1]);
            let phi = sample_map_vector(&g, &sizes, global.seed);
            let reg = regularize(&g, &phi)?;
            let mut run = done(io::hypergraph_json(&reg).into_bytes(), vec![graph.clone()]);
            if let Some(path) = stats {
                let rows: Vec<Value> = reg
                    .index_sets()
                    .iter()
                    .zip(realized_counts(&reg))
                    .map(|(idx, count)| {
                        let bound = g.b_vector().map(|b| {
                            let m = sizes.iter().copied().max().unwrap_or(0) as u64;
                            color_bound(g.r(), &b, m, idx.len()).to_string()
                        });
                        json!({"index": idx.to_string(), "colors": count, "palette": reg.palette(*idx), "bound": bound})
                    })
                    .collect();
                run.artifacts.push((path.clone(), io::render_report(&rows, ReportFormat::Json)?));
            }
            Ok(run)
        }
        Command::Density {
            graph,
            complex,
            samples,
            confidence,
        } => {
            let g = io::load_hypergraph(graph)?;
            let mode = mode_or(global, Mode::Exact, &[Mode::Exact, Mode::Mc], "density")?;
            let Some(cpath) = complex else {
                let table = DensityTable::new(&g);
                let mut rows = Vec::new();
                for &idx in g.index_sets() {
                    for (c, count) in table.total_colors(idx) {
                        let d = table.density(&c);
                        rows.push(json!({
                            "index": idx.to_string(),
                            "frame": c.frame().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                            "top": c.top(),
                            "count": count,
                            "density": ratio::fmt(&d.value),
                        }));
                    }
                }
                return Ok(done(render(global, &rows)?, vec![graph.clone()]));
            };
            let s = io::load_complex(cpath, &g)?;
            let inputs = vec![graph.clone(), cpath.clone()];
            let value = if mode == Mode::Exact {
                let p = embed_probability_exact(&g, &s, global.budget)?;
                json!({"mode": "exact", "probability": ratio::fmt(&p), "approx": ratio::to_f64(&p)})
            } else {
                let est = embed_probability_mc(
                    &g,
                    &s,
                    &EstimatorConfig {
                        samples: *samples,
                        seed: global.seed,
                        confidence: *confidence,
                    },
                )?;
                json!({"mode": "mc", "estimate": est})
            };
            Ok(done(render(global, &value)?, inputs))
        }
        Command::RegBound {
            graph,
            h,
            samples,
            family_limit,
            epsilon,
            m,
        } => {
            require_json(global, "a certificate")?;
            let g = io::load_hypergraph(graph)?;
            let mode = mode_or(global, Mode::Empirical, &[Mode::Empirical, Mode::Faithful], "reg-bound")?;
            let cert = if mode == Mode::Empirical {
                reg_upper_bound(
                    &g,
                    *h,
                    &RegBoundConfig {
                        family_limit: *family_limit,
                        samples: *samples,
                        seed: global.seed,
                        budget: global.budget,
                    },
                )?
            } else {
                // Below k = 2 the lower level is vertices only, where zero
                // slack is exact.
                if g.k() > 2 {
                    return Err(CliError::Budget(
                        "faithful mode needs a certified lower-level error function; only k <= 2 is supported".into(),
                    ));
                }
                let params = FaithfulParams {
                    lower: (g.k() >= 2).then(ErrorFunction::zero),
                    epsilon: rational(epsilon)?,
                    m: *m,
                    eta: EtaConfig {
                        h: *h,
                        budget: global.budget,
                        seed: global.seed,
                        ..Default::default()
                    },
                    sqrt_bits: 32,
                };
                let delta = build_error_function(&g, &BuildMode::Faithful(params))?;
                let family = exhaustive_family(&g, g.k(), *h, *family_limit)
                    .ok_or_else(|| CliError::Budget(format!("family exceeds --family-limit {family_limit}")))?;
                let mut cert = verify_error_function(&g, &delta, *h, &family, global.budget)?;
                cert.mode = "faithful".into();
                cert.family_exhaustive = true;
                cert
            };
            let mut run = done(render(global, &cert)?, vec![graph.clone()]);
            if !cert.passes {
                run.assertion = Some(format!("{} complexes violate the error function", cert.violations.len()));
            }
            Ok(run)
        }
        Command::VerifyLemmas { corpus } => {
            let c: LemmaCorpus = io::load_json(corpus)?;
            let rows = run_corpus(
                &c,
                &MeanSquareConfig {
                    budget: global.budget,
                    ..Default::default()
                },
            )?;
            let failed = rows.iter().filter(|r| !r.passed()).count();
            let mut run = done(render(global, &rows)?, vec![corpus.clone()]);
            if failed > 0 {
                run.assertion = Some(format!("{failed} inequality checks failed"));
            }
            Ok(run)
        }
        Command::Remove {
            graph,
            pattern,
            epsilon,
            maps,
            modified_out,
        } => {
            require_json(global, "a removal outcome")?;
            let g = io::load_hypergraph(graph)?;
            let f: UniformPattern = io::load_json(pattern)?;
            let cfg = RemovalConfig {
                map_sizes: maps.clone(),
                seed: global.seed,
                budget: global.budget,
            };
            let outcome = removal_decision(&g, &f, &rational(epsilon)?, &cfg)?;
            let mut run = done(render(global, &outcome)?, vec![graph.clone(), pattern.clone()]);
            if let (Some(path), Some(modified)) = (modified_out, &outcome.modified) {
                run.artifacts.push((path.clone(), io::hypergraph_json(modified).into_bytes()));
            }
            Ok(run)
        }
        Command::FindCorner {
            points,
            n,
            engine,
            removal_check,
            epsilon,
        } => {
            require_json(global, "a corner report")?;
            let s = io::load_simplex_set(points, *n)?;
            let engine = match engine {
                CornerEngineArg::BruteForce => CornerEngine::BruteForce,
                CornerEngineArg::Pruned => CornerEngine::Pruned,
            };
            let solution = find_simplex_corner(&s, engine, global.budget)?;
            let census = corner_census(&s, global.budget).ok();
            let mut value = json!({
                "n": s.n,
                "k": s.k,
                "size": s.len(),
                "solution": solution,
                "points": solution.as_ref().map(|x| x.points()),
                "census": census,
            });
            let mut run = done(Vec::new(), vec![points.clone()]);
            if *removal_check {
                let cfg = RemovalConfig {
                    map_sizes: None,
                    seed: global.seed,
                    budget: global.budget,
                };
                let check = corner_removal_check(&s, &rational(epsilon)?, &cfg)?;
                if !check.consistent {
                    run.assertion = Some("removal cross-check disagrees with the census".into());
                }
                value["removal_check"] = serde_json::to_value(&check).expect("serializable");
            }
            if solution.as_ref().is_some_and(|x| !x.verify(&s)) {
                run.assertion = Some("returned corner fails verification".into());
            }
            run.report = render(global, &value)?;
            Ok(run)
        }
        Command::FindConfig {
            points,
            pattern,
            n,
            engine,
            trials,
        } => {
            require_json(global, "a configuration report")?;
            let s = io::load_point_set(points, *n)?;
            let f = parse_pattern(pattern)?;
            let cfg = config(global, *engine, *trials);
            let res = find_configuration(&s, &f, &cfg)?;
            let verified = res.as_ref().map(|r| r.verify(&s, &f));
            let mut run = done(
                render(global, &json!({"n": s.n, "r": s.r, "pattern": f, "result": res, "verified": verified}))?,
                vec![points.clone()],
            );
            if verified == Some(false) {
                run.assertion = Some("returned configuration fails verification".into());
            }
            Ok(run)
        }
        Command::FindAp {
            points,
            length,
            n,
            engine,
            trials,
        } => {
            require_json(global, "a progression report")?;
            let s = io::load_point_set(points, *n)?;
            let res = find_ap(&s, *length, &config(global, *engine, *trials))?;
            let f: Vec<Point> = (0..*length as i64).map(|i| vec![i]).collect();
            let verified = res.as_ref().map(|r| r.verify(&s, &f));
            let mut run = done(
                render(global, &json!({"n": s.n, "length": length, "result": res, "verified": verified}))?,
                vec![points.clone()],
            );
            if verified == Some(false) {
                run.assertion = Some("returned progression fails verification".into());
            }
            Ok(run)
        }
        Command::Schedule {
            r,
            k,
            h,
            b,
            epsilon,
            at,
            max_bits,
        } => {
            require_json(global, "a schedule report")?;
            let b: Vec<BigUint> = b.iter().map(|x| big(x)).collect::<Result<_, _>>()?;
            let eps = rational(epsilon)?;
            let sched = hyperreg::regularity::faithful_schedule(*r, *k, *h, &b, &eps, *max_bits)?
                .with_max_steps(1 << 16);
            if *k < 2 {
                return Err(invalid("the schedule starts at k = 2"));
            }
            let constants = sched.constants()?;
            let top = k - 1;
            let n_tilde = sched.n_tilde(top, &[]);
            let values: Vec<Value> = at
                .iter()
                .map(|n| {
                    let n = big(n)?;
                    Ok(match sched.m(top, std::slice::from_ref(&n)) {
                        Ok(v) => json!({"n": n.to_string(), "bits": v.bits(), "value": v.to_string()}),
                        Err(e) => json!({"n": n.to_string(), "refused": e.reason}),
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let value = json!({
                "r": r, "k": k, "h": h,
                "b": b.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "epsilon": ratio::fmt(&eps),
                "constants": constants,
                "n_tilde": match n_tilde { Ok(v) => json!(v.to_string()), Err(e) => json!({"refused": e.reason}) },
                "m": values,
                "trace": sched.trace(),
            });
            Ok(done(render(global, &value)?, vec![]))
        }
        Command::Replay { .. } => Err(invalid("replay cannot be nested")),
    }
}

fn config(global: &Global, engine: ConfigEngineArg, trials: usize) -> ConfigConfig {
    ConfigConfig {
        engine: match engine {
            ConfigEngineArg::BruteForce => ConfigEngine::BruteForce,
            ConfigEngineArg::Reduction => ConfigEngine::Reduction,
        },
        trials,
        seed: global.seed,
        budget: global.budget,
    }
}

fn command_name(c: &Command) -> String {
    match serde_json::to_value(c).expect("serializable") {
        Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
        Value::String(s) => s,
        _ => String::new(),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn build_manifest(cli: &Cli, args: &[String], run: &Run) -> Result<RunManifest, CliError> {
    let mut m = RunManifest::new(&command_name(&cli.command), args.to_vec());
    if let Value::Object(params) = serde_json::to_value(&cli.command).expect("serializable") {
        if let Some(Value::Object(inner)) = params.into_values().next() {
            m.parameters = inner.into_iter().collect();
        }
    }
    m.parameters.insert("global".into(), serde_json::to_value(&cli.global).expect("serializable"));
    m.seeds.push(cli.global.seed);
    for input in &run.inputs {
        m.record_input(input)?;
    }
    m.report_digest = io::sha256_hex(&run.report);
    for (path, bytes) in &run.artifacts {
        m.parameters
            .insert(format!("artifact:{}", path.display()), json!(io::sha256_hex(bytes)));
    }
    Ok(m)
}

fn replay(manifest: &Path) -> Result<(), CliError> {
    let m: RunManifest = io::load_json(manifest)?;
    let mut argv = vec!["hyperreg".to_string()];
    argv.extend(m.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| invalid(e.to_string()))?;
    for (path, digest) in &m.inputs {
        let bytes = fs::read(path).map_err(|e| invalid(format!("{path}: {e}")))?;
        if &io::sha256_hex(&bytes) != digest {
            return Err(invalid(format!("input {path} changed since the manifest was written")));
        }
    }
    let run = execute(&cli.global, &cli.command)?;
    let digest = io::sha256_hex(&run.report);
    if digest != m.report_digest {
        return Err(CliError::Assertion(format!(
            "replay digest {digest} differs from recorded {}",
            m.report_digest
        )));
    }
    eprintln!("replay matches: {digest}");
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Replay { manifest } => replay(manifest),
        command => execute(&cli.global, command).and_then(|run| {
            for (path, bytes) in &run.artifacts {
                write(path, bytes)?;
            }
            match &cli.global.out {
                Some(out) => {
                    write(out, &run.report)?;
                    let manifest = build_manifest(&cli, &args, &run)?;
                    let bytes = io::render_report(&manifest, ReportFormat::Json)?;
                    write(&manifest_path(out), &bytes)?;
                }
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&run.report)
                        .map_err(|e| invalid(e.to_string()))?;
                }
            }
            match run.assertion {
                Some(msg) => Err(CliError::Assertion(msg)),
                None => Ok(()),
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
