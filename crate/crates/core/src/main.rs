use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use bellstrong::angle::{AngleConfig, AngleDeg};
use bellstrong::compare::compare;
use bellstrong::inequality::{
    evaluate, required_pairs, ChshAngles, PdfTable, ProbabilitySource, Settings, TableRow,
};
use bellstrong::lhv::{build_model, CountTally, LhvEnsemble, Method, TallyRecord};
use bellstrong::optimize::{optimize, Objective, SearchSpec};
use bellstrong::output::{
    fmt_num, fmt_opt, output_path, write_atomic, CsvTable, Document, Format, SimulationRecord,
};
use bellstrong::quantum::{ApparatusParams, QuantumModel};
use bellstrong::report::{InequalityKind, InequalityReport, Tolerance};
use bellstrong::theorem::{verify_theorem, TheoremSpec};
use bellstrong::Error;

const DEFAULT_EMISSIONS: u64 = 1_000_000;

#[derive(Parser)]
#[command(
    name = "bellstrong",
    version,
    about = "Two-channel Bell inequalities: evaluation, simulation and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one inequality on a probability source.
    Evaluate(EvaluateArgs),
    /// Simulate finite-N counts from a hidden-variable model and evaluate them.
    Simulate(SimulateArgs),
    /// Check the pointwise theorem numerically.
    VerifyTheorem(TheoremArgs),
    /// Search orientations for the strongest violation.
    Optimize(OptimizeArgs),
    /// Evaluate every inequality and compare each with CHSH.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct OutputOpts {
    /// TOML file supplying any of this command's options; flags win.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// `json` or `csv`.
    #[arg(long)]
    format: Option<String>,
    /// Output file; defaults to `$BELLSTRONG_OUTPUT_DIR/<command>.<ext>`, else stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct SourceOpts {
    /// `quantum`, `lhv:NAME`, `table:PATH` or `counts:PATH`.
    #[arg(long)]
    source: Option<String>,
    /// `quadrature` or `mc`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Detector solid angle in steradians.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    theta_deg: Option<f64>,
    /// Model parameter; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    #[serde(default)]
    param: Vec<String>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct AngleOpts {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long)]
    ch_phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chsh_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chsh_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chsh_a2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    chsh_b2: Option<f64>,
    /// Random pairs compared by the rotational symmetry check.
    #[arg(long)]
    symmetry_pairs: Option<usize>,
    /// Standard errors a sampled value must clear to count as a violation.
    #[arg(long)]
    sigmas: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct EvaluateArgs {
    #[arg(long)]
    inequality: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceOpts,
    #[command(flatten)]
    #[serde(flatten)]
    angles: AngleOpts,
    #[command(flatten)]
    #[serde(flatten)]
    output: OutputOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct SimulateArgs {
    #[arg(long)]
    inequality: Option<String>,
    /// Emissions per orientation pair.
    #[arg(long)]
    emissions: Option<u64>,
    /// Counts file (CSV); defaults to `$BELLSTRONG_OUTPUT_DIR/counts.csv`.
    #[arg(long, value_name = "PATH")]
    counts: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceOpts,
    #[command(flatten)]
    #[serde(flatten)]
    angles: AngleOpts,
    #[command(flatten)]
    #[serde(flatten)]
    output: OutputOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct TheoremArgs {
    /// Values of U and V, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    grid: Vec<f64>,
    #[arg(long)]
    n_random: Option<usize>,
    #[arg(long)]
    n_case_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flip the sign of the UV term; the check must then fail.
    #[arg(long)]
    #[serde(default)]
    mutate_uv_sign: bool,
    #[command(flatten)]
    #[serde(flatten)]
    output: OutputOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct OptimizeArgs {
    /// `ardehali29`, `strong23`, `chsh` or `rt32`.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    refine_iterations: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceOpts,
    #[command(flatten)]
    #[serde(flatten)]
    output: OutputOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceOpts,
    #[command(flatten)]
    #[serde(flatten)]
    angles: AngleOpts,
    #[command(flatten)]
    #[serde(flatten)]
    output: OutputOpts,
}

/// Overlays flags on the config file named by `--config`, if any.
fn with_config<T>(cli: T, config: Option<&Path>) -> anyhow::Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = config else { return Ok(cli) };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: toml::Table =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(known) = serde_json::to_value(T::default())? else {
        unreachable!()
    };
    let mut merged = serde_json::Map::new();
    for (k, v) in file {
        if !known.contains_key(&k) {
            bail!("{}: unknown key `{k}` for this command", path.display());
        }
        merged.insert(k, serde_json::to_value(v)?);
    }
    let Value::Object(flags) = serde_json::to_value(&cli)? else {
        unreachable!()
    };
    for (k, v) in flags {
        let unset = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        if !unset {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).with_context(|| format!("in {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
struct ResolvedSource {
    source: String,
    description: String,
    method: Method,
    seed: u64,
    eta: f64,
    omega: f64,
    theta_deg: f64,
    params: BTreeMap<String, String>,
}

fn parse_params(list: &[String]) -> anyhow::Result<BTreeMap<String, String>> {
    list.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow!("--param expects KEY=VALUE, got `{kv}`"))
        })
        .collect()
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        return serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing {}", path.display()));
    }
    csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

fn resolve_method(o: &SourceOpts, seed: u64) -> anyhow::Result<Method> {
    let m = match o.method.as_deref().unwrap_or("quadrature") {
        "quadrature" => Method::Quadrature {
            n_nodes: o.nodes.unwrap_or(Method::DEFAULT_NODES),
        },
        "mc" | "monte_carlo" => Method::MonteCarlo {
            n_samples: o.samples.unwrap_or(DEFAULT_EMISSIONS),
            seed,
        },
        other => bail!("unknown method `{other}`"),
    };
    m.validate()?;
    Ok(m)
}

fn lhv_model(
    spec: &str,
    params: &BTreeMap<String, String>,
) -> anyhow::Result<Arc<dyn LhvEnsemble>> {
    let name = spec
        .strip_prefix("lhv:")
        .ok_or_else(|| anyhow!("expected an `lhv:NAME` source, got `{spec}`"))?;
    Ok(build_model(name, params)?)
}

fn resolve_source(o: &SourceOpts) -> anyhow::Result<(ProbabilitySource, ResolvedSource)> {
    let spec = o.source.clone().unwrap_or_else(|| "quantum".into());
    let seed = o.seed.unwrap_or(0);
    let params = parse_params(&o.param)?;
    let method = resolve_method(o, seed)?;
    let (eta, omega, theta_deg) = (
        o.eta.unwrap_or(1.0),
        o.omega.unwrap_or(PI),
        o.theta_deg.unwrap_or(180.0),
    );
    if !params.is_empty() && !spec.starts_with("lhv:") {
        bail!("--param applies only to lhv sources");
    }
    let src = if spec == "quantum" {
        let p = ApparatusParams::from_solid_angle(eta, omega, theta_deg.to_radians())?;
        ProbabilitySource::Quantum(QuantumModel::new(p)?)
    } else if spec.starts_with("lhv:") {
        ProbabilitySource::lhv(lhv_model(&spec, &params)?, method)?
    } else if let Some(path) = spec.strip_prefix("table:") {
        let rows: Vec<TableRow> = read_rows(Path::new(path))?;
        ProbabilitySource::Table(PdfTable::new(&rows)?)
    } else if let Some(path) = spec.strip_prefix("counts:") {
        let rows: Vec<TallyRecord> = read_rows(Path::new(path))?;
        let tallies = rows
            .iter()
            .map(CountTally::from_record)
            .collect::<Result<Vec<_>, _>>()?;
        if tallies.is_empty() {
            bail!("{path}: no counts");
        }
        ProbabilitySource::Tallies(tallies)
    } else {
        bail!("unknown source `{spec}`; expected quantum, lhv:NAME, table:PATH or counts:PATH");
    };
    let resolved = ResolvedSource {
        source: spec,
        description: src.describe(),
        method,
        seed,
        eta,
        omega,
        theta_deg,
        params,
    };
    Ok((src, resolved))
}

fn resolve_settings(o: &AngleOpts, seed: u64) -> anyhow::Result<Settings> {
    let d = Settings::default();
    let c = d.config;
    let x = d.chsh;
    let angle = |v: Option<f64>, dflt: AngleDeg| v.map(AngleDeg::new).unwrap_or(Ok(dflt));
    Ok(Settings {
        config: AngleConfig {
            a: angle(o.a, c.a)?,
            b: angle(o.b, c.b)?,
            a_prime: angle(o.a_prime, c.a_prime)?,
            b_prime: angle(o.b_prime, c.b_prime)?,
            r: angle(o.r, c.r)?,
        },
        ch_phi: o.ch_phi.unwrap_or(d.ch_phi),
        chsh: ChshAngles {
            a: angle(o.chsh_a, x.a)?,
            b: angle(o.chsh_b, x.b)?,
            a2: angle(o.chsh_a2, x.a2)?,
            b2: angle(o.chsh_b2, x.b2)?,
        },
        tolerance: Tolerance {
            sigmas: o.sigmas.unwrap_or(d.tolerance.sigmas),
            ..d.tolerance
        },
        symmetry_pairs: o.symmetry_pairs.unwrap_or(d.symmetry_pairs),
        symmetry_seed: seed,
    })
}

/// Resolved format, destination and thread count, echoed with the config.
#[derive(Debug, Clone, Serialize)]
struct ResolvedOutput {
    format: Format,
    out: Option<PathBuf>,
    workers: usize,
}

fn resolve_output(o: &OutputOpts, command: &str) -> anyhow::Result<ResolvedOutput> {
    let format: Format = o.format.as_deref().unwrap_or("json").parse()?;
    if let Some(n) = o.workers {
        if n == 0 {
            bail!("--workers must be ≥ 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(ResolvedOutput {
        format,
        out: output_path(o.out.clone(), command, format),
        workers: rayon::current_num_threads(),
    })
}

fn label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn emit<T: Serialize>(
    out: &ResolvedOutput,
    doc: &Document<T>,
    csv: CsvTable,
) -> anyhow::Result<()> {
    let bytes = match out.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(doc)?;
            b.push(b'\n');
            b
        }
        Format::Csv => csv.to_bytes()?,
    };
    match &out.out {
        Some(p) => {
            write_atomic(p, &bytes).with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

const REPORT_COLUMNS: [&str; 12] = [
    "schema_version",
    "command",
    "inequality",
    "lhs",
    "bound",
    "direction",
    "violated",
    "violation_factor",
    "stderr",
    "n_samples",
    "seed",
    "config",
];

fn report_csv(doc: &Document<InequalityReport>, seed: u64) -> CsvTable {
    let r = &doc.result;
    let mut t = CsvTable::new(&REPORT_COLUMNS);
    t.push(vec![
        doc.schema_version.to_string(),
        doc.command.clone(),
        r.inequality.to_string(),
        fmt_num(r.lhs),
        fmt_num(r.bound),
        label(&r.direction),
        r.violated.to_string(),
        fmt_opt(r.violation_factor),
        fmt_num(r.stderr),
        r.n_samples.to_string(),
        seed.to_string(),
        doc.config.to_string(),
    ]);
    t
}

fn parse_kind(name: Option<&str>) -> anyhow::Result<InequalityKind> {
    Ok(name
        .ok_or_else(|| anyhow!("--inequality is required"))?
        .parse()?)
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<ExitCode> {
    let args = with_config(args.clone(), args.output.config.as_deref())?;
    let kind = parse_kind(args.inequality.as_deref())?;
    let (src, source) = resolve_source(&args.source)?;
    let settings = resolve_settings(&args.angles, source.seed)?;
    let out = resolve_output(&args.output, "evaluate")?;
    let report = evaluate(kind, &src, &settings)?;
    let seed = source.seed;
    let config = json!({
        "inequality": kind,
        "seed": seed,
        "source": source,
        "settings": settings,
        "output": out,
    });
    let doc = Document::new("evaluate", config, report);
    emit(&out, &doc, report_csv(&doc, seed))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let args = with_config(args.clone(), args.output.config.as_deref())?;
    let kind = parse_kind(args.inequality.as_deref())?;
    let o = &args.source;
    let spec = o.source.clone().unwrap_or_else(|| "lhv:sign".into());
    let params = parse_params(&o.param)?;
    let model = lhv_model(&spec, &params)?;
    let seed = o.seed.unwrap_or(0);
    let n = args.emissions.unwrap_or(DEFAULT_EMISSIONS);
    let settings = resolve_settings(&args.angles, seed)?;
    let out = resolve_output(&args.output, "simulate")?;
    let counts_path = args
        .counts
        .clone()
        .or_else(|| output_path(None, "counts", Format::Csv));

    let pairs = required_pairs(kind, &settings)?;
    let tallies = model.simulate(&pairs, n, seed)?;
    let records: Vec<TallyRecord> = tallies.iter().map(CountTally::to_record).collect();
    if let Some(p) = &counts_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        write_atomic(p, &bytes).with_context(|| format!("writing {}", p.display()))?;
        eprintln!("wrote {}", p.display());
    }
    let report = evaluate(kind, &ProbabilitySource::Tallies(tallies), &settings)?;

    let config = json!({
        "inequality": kind,
        "seed": seed,
        "source": spec,
        "model": model.name(),
        "params": params,
        "emissions": n,
        "counts": counts_path,
        "settings": settings,
        "output": out,
    });
    let doc = Document::new("simulate", config, report);
    let csv = report_csv(&doc, seed);
    let doc = Document {
        schema_version: doc.schema_version,
        command: doc.command,
        config: doc.config,
        result: SimulationRecord {
            counts_file: counts_path,
            counts: records,
            report: doc.result,
        },
    };
    emit(&out, &doc, csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_theorem(args: TheoremArgs) -> anyhow::Result<ExitCode> {
    let args = with_config(args.clone(), args.output.config.as_deref())?;
    let d = TheoremSpec::default();
    let spec = TheoremSpec {
        grid: if args.grid.is_empty() {
            d.grid
        } else {
            args.grid.clone()
        },
        n_random: args.n_random.unwrap_or(d.n_random),
        n_case_samples: args.n_case_samples.unwrap_or(d.n_case_samples),
        seed: args.seed.unwrap_or(d.seed),
        mutate_uv_sign: args.mutate_uv_sign,
    };
    let out = resolve_output(&args.output, "verify-theorem")?;
    let report = verify_theorem(&spec)?;
    let passed = report.passed;
    if let Some(c) = &report.counterexample {
        eprintln!(
            "counterexample at {} stage: value {} ({})",
            label(&c.stage),
            c.value,
            c.detail
        );
    }

    let config = json!({ "seed": spec.seed, "theorem": spec, "output": out });
    let doc = Document::new("verify-theorem", config, report);
    let r = &doc.result;
    let mut t = CsvTable::new(&[
        "schema_version",
        "command",
        "passed",
        "grid_points",
        "vertices_checked",
        "random_checked",
        "case_samples_checked",
        "min_vertex_z",
        "min_random_z",
        "max_identity_error",
        "max_linearity_error",
        "min_case_bound",
        "max_case_excess",
        "case_hits",
        "counterexample",
        "seed",
        "config",
    ]);
    t.push(vec![
        doc.schema_version.to_string(),
        doc.command.clone(),
        r.passed.to_string(),
        r.grid_points.to_string(),
        r.vertices_checked.to_string(),
        r.random_checked.to_string(),
        r.case_samples_checked.to_string(),
        fmt_opt(r.min_vertex_z),
        fmt_opt(r.min_random_z),
        fmt_num(r.max_identity_error),
        fmt_num(r.max_linearity_error),
        fmt_opt(r.min_case_bound),
        fmt_opt(r.max_case_excess),
        r.case_hits.map(|h| h.to_string()).join(";"),
        r.counterexample
            .as_ref()
            .map(|c| json!(c).to_string())
            .unwrap_or_default(),
        spec.seed.to_string(),
        doc.config.to_string(),
    ]);
    emit(&out, &doc, t)?;
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn param_names(o: Objective) -> &'static [&'static str] {
    match o {
        Objective::Strong23 => &["b", "a_prime", "b_prime", "r"],
        Objective::Simplified29 | Objective::Rt32 => &["b", "a_prime"],
        Objective::Chsh => &["b", "a2", "b2"],
    }
}

fn cmd_optimize(args: OptimizeArgs) -> anyhow::Result<ExitCode> {
    let args = with_config(args.clone(), args.output.config.as_deref())?;
    let objective: Objective = args.objective.as_deref().unwrap_or("ardehali29").parse()?;
    let grid_step = args.grid_step.unwrap_or(5.0);
    let refine_iterations = args.refine_iterations.unwrap_or(6);
    let (src, source) = resolve_source(&args.source)?;
    let out = resolve_output(&args.output, "optimize")?;
    let result = optimize(&SearchSpec {
        grid_step,
        refine_iterations,
        objective,
        source: src,
    })?;

    let config = json!({
        "seed": source.seed,
        "objective": objective,
        "grid_step": grid_step,
        "refine_iterations": refine_iterations,
        "source": source,
        "output": out,
    });
    let doc = Document::new("optimize", config, result);
    let names = param_names(objective);
    let mut header = vec![
        "schema_version",
        "command",
        "objective",
        "level",
        "step",
        "evaluated",
        "lhs",
    ];
    header.extend_from_slice(names);
    header.extend(["seed", "config"]);
    let mut t = CsvTable::new(&header);
    for row in &doc.result.trace {
        let mut cells = vec![
            doc.schema_version.to_string(),
            doc.command.clone(),
            label(&objective),
            row.level.to_string(),
            fmt_num(row.step),
            row.evaluated.to_string(),
            fmt_num(row.lhs),
        ];
        cells.extend(row.params.iter().map(|&p| fmt_num(p)));
        cells.push(source.seed.to_string());
        cells.push(doc.config.to_string());
        t.push(cells);
    }
    emit(&out, &doc, t)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<ExitCode> {
    let args = with_config(args.clone(), args.output.config.as_deref())?;
    let (src, source) = resolve_source(&args.source)?;
    let settings = resolve_settings(&args.angles, source.seed)?;
    let out = resolve_output(&args.output, "compare")?;
    let comparison = compare(&src, &settings)?;

    let config =
        json!({ "seed": source.seed, "source": source, "settings": settings, "output": out });
    let doc = Document::new("compare", config, comparison);
    let mut t = CsvTable::new(&[
        "schema_version",
        "command",
        "inequality",
        "lhs",
        "bound",
        "direction",
        "violated",
        "violation_factor",
        "stderr",
        "settings_required",
        "factor_ratio",
        "excess_ratio",
        "seed",
        "config",
    ]);
    for r in &doc.result.rows {
        t.push(vec![
            doc.schema_version.to_string(),
            doc.command.clone(),
            r.inequality.to_string(),
            fmt_num(r.lhs),
            fmt_num(r.bound),
            label(&r.direction),
            r.violated.to_string(),
            fmt_opt(r.violation_factor),
            fmt_num(r.stderr),
            r.settings_required
                .map(|n| n.to_string())
                .unwrap_or_default(),
            fmt_opt(r.factor_ratio),
            fmt_opt(r.excess_ratio),
            source.seed.to_string(),
            doc.config.to_string(),
        ]);
    }
    emit(&out, &doc, t)?;
    Ok(ExitCode::SUCCESS)
}

/// Exit status for a failed run: 1 when a check on the data failed, 2 for
/// anything the caller got wrong.
fn failure_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::DegenerateSource(_)
            | Error::SymmetryViolated { .. }
            | Error::AssumptionFailed(_),
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::VerifyTheorem(a) => cmd_verify_theorem(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure_code(&e))
        }
    }
}
