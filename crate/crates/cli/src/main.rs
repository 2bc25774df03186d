mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use theon::density::{
    equivalence_test, exact_feasible, phi, t_ind, Backend, Comparison, DensityEstimate, DistributionTable, ExactLimits,
    Mass, McSettings,
};
use theon::peon::{dependency_check, Theon, GALLERY};
use theon::quasitest::{counterexample_suite, disc_test, suite_passed, ucouple_test, Outcome, SuiteBudget, TestReport};
use theon::realization::{pull_theon, simulate_orders, RealizationFamily};
use theon::rng::derive_seed;
use theon::sampler::sample_structure;
use theon::space::{sample_point, subset_masks, VertexSet};
use theon::symbols::{Structure, StructureCode};

use config::{ExperimentConfig, TheonSpec};

#[derive(Parser)]
#[command(name = "theon", version, about = "Sample and analyse exchangeable random structures given by theons")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// TOML experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct TheonArgs {
    /// Gallery entry name.
    #[arg(long)]
    theon: Option<String>,
    /// Parameter of parametrized gallery entries.
    #[arg(long)]
    k: Option<usize>,
    /// Chamber reading of kqrO_0theon: direct or inverse.
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Args, Clone, Default)]
struct EngineArgs {
    /// auto, exact or mc.
    #[arg(long)]
    backend: Option<String>,
    /// Monte Carlo sample count (default 100000).
    #[arg(long)]
    samples: Option<u64>,
    /// Root seed of every random draw.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in theons.
    Gallery,
    /// Draw structures as JSON lines.
    Sample {
        #[command(flatten)]
        theon: TheonArgs,
        /// Vertex count (default: the largest arity).
        #[arg(long)]
        n: Option<usize>,
        /// Number of structures.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Root seed of every random draw.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Induced density of one structure.
    Density {
        #[command(flatten)]
        theon: TheonArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Structure: edge, nonedge, arc, triangle, path, empty[:n], complete[:n], JSON, or @file.
        #[arg(long)]
        structure: String,
        /// Report the isomorphism-class density instead of the labeled one.
        #[arg(long)]
        phi: bool,
    },
    /// Distribution of structures on n vertices as CSV.
    Table {
        #[command(flatten)]
        theon: TheonArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Vertex count (default: the largest arity).
        #[arg(long)]
        n: Option<usize>,
        /// Include structures of mass zero.
        #[arg(long)]
        full: bool,
    },
    /// Test whether two theons induce the same distribution on n vertices.
    Equiv {
        /// First gallery entry.
        #[arg(long)]
        a: String,
        /// Second gallery entry.
        #[arg(long)]
        b: String,
        /// Parameter of the first entry.
        #[arg(long)]
        ka: Option<usize>,
        /// Parameter of the second entry.
        #[arg(long)]
        kb: Option<usize>,
        /// Vertex count (default: the largest arity).
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        engine: EngineArgs,
        /// Level of the goodness-of-fit test.
        #[arg(long)]
        significance: Option<f64>,
    },
    /// Remove order variables by realization, or simulate them by an orientation.
    Realize {
        #[command(flatten)]
        theon: TheonArgs,
        #[arg(long, value_enum)]
        mode: RealizeMode,
        /// Largest simulated set size minus one (simulate-orders).
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Checks to run, comma separated; bare `--verify` runs all that apply.
        #[arg(long, value_enum, num_args = 0.., value_delimiter = ',')]
        verify: Option<Vec<Check>>,
        /// Random points per check.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Root seed of every random draw.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one quasirandomness test.
    Quasitest {
        #[command(flatten)]
        theon: TheonArgs,
        #[arg(long, value_enum)]
        property: Property,
        /// Largest pinned set size.
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Vertex count (default: the largest arity).
        #[arg(long)]
        n: Option<usize>,
        /// Bins per weight coordinate.
        #[arg(long, default_value_t = 2)]
        bins: usize,
        /// Pinned cells (disc only).
        #[arg(long, default_value_t = 16)]
        cells: usize,
        /// Samples in total (ucouple) or per cell (disc).
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Test level.
        #[arg(long)]
        significance: Option<f64>,
        /// Root seed of every random draw.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the counterexample suite.
    Suite {
        /// Root seed of every random draw.
        #[arg(long)]
        seed: Option<u64>,
        /// Use this sample count for every test instead of the defaults.
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RealizeMode {
    StripOrders,
    SimulateOrders,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    /// `f̂(ĝ(x))` recovers the weights and orders of `x` (strip-orders).
    Roundtrip,
    /// The result has the input's densities.
    Equiv,
    /// Predicates ignore every set of size at most the order degree (strip-orders).
    Rank,
    /// The interpreted theon agrees with the input pointwise (simulate-orders).
    Agreement,
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Disc,
    Ucouple,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(msg.into())
}

struct Ctx {
    json: bool,
    config: ExperimentConfig,
    out: Box<dyn Write>,
}

impl Ctx {
    fn theon(&self, args: &TheonArgs) -> Result<Theon> {
        let spec = match &args.theon {
            Some(name) => {
                let entry = GALLERY
                    .iter()
                    .find(|e| e.name == name)
                    .ok_or_else(|| usage(format!("unknown theon `{name}`; `theon gallery` lists them")))?;
                TheonSpec::Gallery {
                    name: name.clone(),
                    k: entry.default_k.map(|d| args.k.unwrap_or(d)),
                    convention: args.convention.clone(),
                }
            }
            None => self
                .config
                .theon
                .clone()
                .ok_or_else(|| usage("no theon given; pass --theon or a config with a [theon] table"))?,
        };
        spec.build()
    }

    fn n(&self, flag: Option<usize>, fallback: usize) -> usize {
        flag.or(self.config.n).unwrap_or(fallback)
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        flag.or(self.config.seed).ok_or_else(|| usage("this run is random; pass --seed"))
    }

    fn backend(&self, e: &EngineArgs) -> Result<Backend> {
        match e.backend.as_ref().or(self.config.backend.as_ref()) {
            Some(b) => b.parse().map_err(|e: theon::Error| usage(e.to_string())),
            None => Ok(Backend::Auto),
        }
    }

    /// Sampling settings; the seed may be omitted when every table is exact.
    fn mc(&self, e: &EngineArgs, backend: Backend, theons: &[&Theon], n: usize) -> Result<McSettings> {
        let samples = e.samples.or(self.config.samples).unwrap_or(McSettings::default().samples);
        let exact = match backend {
            Backend::Exact => true,
            Backend::MonteCarlo => false,
            Backend::Auto => theons.iter().all(|t| exact_feasible(t, n, &ExactLimits::default())),
        };
        let seed = if exact { e.seed.or(self.config.seed).unwrap_or(0) } else { self.seed(e.seed)? };
        Ok(McSettings { samples, seed })
    }

    fn significance(&self, flag: Option<f64>) -> f64 {
        flag.or(self.config.significance).unwrap_or(0.01)
    }

    fn emit(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    fn emit_json(&mut self, v: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v)?;
        self.emit(&text)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs a command; `Ok(false)` is a failed verdict.
fn run(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(w) = cli.workers.or(config.workers) {
        if w == 0 {
            bail!(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let out: Box<dyn Write> = match cli.out.as_ref().or(config.out.as_ref()) {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut ctx = Ctx { json: cli.json, config, out };
    let ok = match cli.command {
        Command::Gallery => gallery_cmd(&mut ctx)?,
        Command::Sample { theon, n, count, seed } => sample_cmd(&mut ctx, &theon, n, count, seed)?,
        Command::Density { theon, engine, structure, phi } => density_cmd(&mut ctx, &theon, &engine, &structure, phi)?,
        Command::Table { theon, engine, n, full } => table_cmd(&mut ctx, &theon, &engine, n, full)?,
        Command::Equiv { a, b, ka, kb, n, engine, significance } => {
            let a = TheonArgs { theon: Some(a), k: ka, convention: None };
            let b = TheonArgs { theon: Some(b), k: kb, convention: None };
            equiv_cmd(&mut ctx, &a, &b, n, &engine, significance)?
        }
        Command::Realize { theon, mode, ell, verify, trials, seed } => {
            realize_cmd(&mut ctx, &theon, mode, ell, verify, trials, seed)?
        }
        Command::Quasitest { theon, property, ell, n, bins, cells, trials, significance, seed } => {
            let th = ctx.theon(&theon)?;
            let n = ctx.n(n, th.language().max_arity());
            let sig = ctx.significance(significance);
            let seed = ctx.seed(seed)?;
            let report = match property {
                Property::Disc => disc_test(&th, ell, n, bins, cells, trials, sig, seed)?,
                Property::Ucouple => ucouple_test(&th, ell, n, bins, trials, sig, seed)?,
            };
            report_out(&mut ctx, &report, seed)?;
            !report.rejected()
        }
        Command::Suite { seed, trials } => suite_cmd(&mut ctx, seed, trials)?,
    };
    ctx.out.flush()?;
    Ok(ok)
}

fn gallery_cmd(ctx: &mut Ctx) -> Result<bool> {
    if ctx.json {
        let list: Vec<Value> = GALLERY
            .iter()
            .map(|e| json!({"name": e.name, "summary": e.summary, "default_k": e.default_k, "exact": e.exact}))
            .collect();
        ctx.emit_json(&Value::Array(list))?;
    } else {
        for e in GALLERY {
            let k = e.default_k.map(|k| format!(" (k = {k})")).unwrap_or_default();
            let exact = if e.exact { "exact" } else { "mc" };
            ctx.emit(&format!("{:<18} {:<6} {}{}", e.name, exact, e.summary, k))?;
        }
    }
    Ok(true)
}

fn sample_cmd(ctx: &mut Ctx, args: &TheonArgs, n: Option<usize>, count: u64, seed: Option<u64>) -> Result<bool> {
    let th = ctx.theon(args)?;
    let n = ctx.n(n, th.language().max_arity());
    let seed = ctx.seed(seed)?;
    let v = VertexSet::range(n);
    eprintln!("seed: {seed}");
    for i in 0..count {
        let m = sample_structure(&th, &v, derive_seed(seed, i))?;
        ctx.emit(&m.to_json())?;
    }
    Ok(true)
}

/// Parses a structure argument over the theon's language.
fn parse_structure(th: &Theon, spec: &str, size: Option<usize>) -> Result<Structure> {
    let lang = th.language().clone();
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return parse_structure(th, text.trim(), size);
    }
    if spec.trim_start().starts_with('{') {
        let mut v: Value = serde_json::from_str(spec).map_err(|e| usage(format!("structure JSON: {e}")))?;
        if let Value::Object(map) = &mut v {
            if !map.contains_key("language") {
                map.insert("language".into(), serde_json::to_value(lang.predicates())?);
            }
        }
        return Ok(Structure::from_json_value(&v)?);
    }
    let binary = || -> Result<usize> {
        match lang.predicates() {
            [p] if p.arity == 2 => Ok(0),
            _ => Err(usage(format!("`{spec}` needs a language with one binary predicate"))),
        }
    };
    let (name, arg) = match spec.split_once(':') {
        Some((a, b)) => (a, Some(b.parse::<usize>().map_err(|_| usage(format!("bad size in `{spec}`")))?)),
        None => (spec, None),
    };
    let sized = |fallback: usize| arg.or(size).unwrap_or(fallback);
    let graph = |n: usize, edges: &[(usize, usize)], symmetric: bool| -> Result<Structure> {
        let p = binary()?;
        let mut k = Structure::empty(lang.clone(), VertexSet::range(n));
        for &(a, b) in edges {
            k.insert(p, vec![a, b])?;
            if symmetric {
                k.insert(p, vec![b, a])?;
            }
        }
        Ok(k)
    };
    match name {
        "edge" => graph(2, &[(0, 1)], true),
        "nonedge" => graph(2, &[], true),
        "arc" => graph(2, &[(0, 1)], false),
        "triangle" => graph(3, &[(0, 1), (1, 2), (0, 2)], true),
        "path" => graph(3, &[(0, 1), (1, 2)], true),
        "empty" => Ok(Structure::empty(lang.clone(), VertexSet::range(sized(lang.max_arity())))),
        "complete" => {
            let n = sized(lang.max_arity());
            let mut k = Structure::empty(lang.clone(), VertexSet::range(n));
            for (i, p) in lang.predicates().iter().enumerate() {
                for t in theon::symbols::injective_tuples(n, p.arity) {
                    k.insert(i, t)?;
                }
            }
            Ok(k)
        }
        _ => Err(usage(format!(
            "unknown structure `{spec}`; use edge, nonedge, arc, triangle, path, empty[:n], complete[:n], JSON or @file"
        ))),
    }
}

fn estimate_json(d: &DensityEstimate) -> Value {
    json!({
        "value": d.exact.as_ref().map_or(json!(d.estimate), |r| json!(r.to_string())),
        "estimate": d.estimate,
        "ci": [d.ci.0, d.ci.1],
        "samples": d.samples,
        "exact": d.is_exact(),
    })
}

fn density_cmd(ctx: &mut Ctx, args: &TheonArgs, engine: &EngineArgs, spec: &str, want_phi: bool) -> Result<bool> {
    let th = ctx.theon(args)?;
    let parametrized =
        args.theon.as_ref().is_some_and(|t| GALLERY.iter().any(|e| e.name == t && e.default_k.is_some()));
    let size = if parametrized { None } else { args.k };
    let k = parse_structure(&th, spec, size)?;
    let backend = ctx.backend(engine)?;
    let mc = ctx.mc(engine, backend, &[&th], k.vertices().len())?;
    let limits = ExactLimits::default();
    let d = if want_phi { phi(&th, &k, backend, &limits, &mc)? } else { t_ind(&th, &k, backend, &limits, &mc)? };
    if ctx.json {
        let mut v = estimate_json(&d);
        v["structure"] = k.to_json_value();
        v["theon"] = json!(th.name());
        if !d.is_exact() {
            v["seed"] = json!(mc.seed);
        }
        ctx.emit_json(&v)?;
    } else {
        ctx.emit(&d.to_string())?;
    }
    Ok(true)
}

fn code_id(c: &StructureCode) -> String {
    c.0.iter().rev().map(|w| format!("{w:016x}")).collect::<Vec<_>>().join("")
}

fn table_cmd(ctx: &mut Ctx, args: &TheonArgs, engine: &EngineArgs, n: Option<usize>, full: bool) -> Result<bool> {
    let th = ctx.theon(args)?;
    let n = ctx.n(n, th.language().max_arity());
    let backend = ctx.backend(engine)?;
    let mc = ctx.mc(engine, backend, &[&th], n)?;
    let table = theon::density::distribution_on(&th, n, backend, &ExactLimits::default(), &mc)?;
    let rows: Vec<(StructureCode, Structure, Mass)> = if full {
        let all = table.full(theon::symbols::STRUCTURE_CAP)?;
        all.into_iter().map(|(k, m)| (k.code(&table.index), k, m)).collect()
    } else {
        table
            .entries
            .iter()
            .map(|(c, m)| {
                (c.clone(), Structure::from_code(&table.language, &table.vertices, &table.index, c), m.clone())
            })
            .collect()
    };
    if ctx.json {
        let list: Vec<Value> = rows
            .iter()
            .map(|(c, k, m)| {
                let mut v = estimate_json(&m.estimate());
                v["id"] = json!(code_id(c));
                v["structure"] = k.to_json_value();
                v
            })
            .collect();
        ctx.emit_json(
            &json!({"theon": th.name(), "n": n, "exact": table.is_exact(), "seed": seed_of(&table, &mc), "rows": list}),
        )?;
    } else {
        ctx.emit("structure-id,structure-json,value,ci-low,ci-high,exact")?;
        for (c, k, m) in &rows {
            let d = m.estimate();
            let value = d.exact.as_ref().map_or(d.estimate.to_string(), |r| r.to_string());
            let json = k.to_json().replace('"', "\"\"");
            ctx.emit(&format!("{},\"{}\",{},{},{},{}", code_id(c), json, value, d.ci.0, d.ci.1, d.is_exact()))?;
        }
    }
    Ok(true)
}

fn seed_of(table: &DistributionTable, mc: &McSettings) -> Option<u64> {
    (!table.is_exact()).then_some(mc.seed)
}

fn equiv_cmd(
    ctx: &mut Ctx,
    a: &TheonArgs,
    b: &TheonArgs,
    n: Option<usize>,
    engine: &EngineArgs,
    significance: Option<f64>,
) -> Result<bool> {
    let (ta, tb) = (ctx.theon(a)?, ctx.theon(b)?);
    let n = ctx.n(n, ta.language().max_arity());
    let backend = ctx.backend(engine)?;
    let mc = ctx.mc(engine, backend, &[&ta, &tb], n)?;
    let sig = ctx.significance(significance);
    let v = equivalence_test(&ta, &tb, n, backend, &ExactLimits::default(), &mc, sig)?;
    let verdict = if v.equivalent { "equivalent" } else { "not equivalent" };
    let detail = match (&v.tv_exact, v.p_value) {
        (Some(d), _) => format!("exact, tv={d}"),
        (None, Some(p)) => format!("p={p:.4}, tv={:.4}", v.tv),
        (None, None) => format!("tv={:.4}", v.tv),
    };
    if ctx.json {
        let comparison = match v.comparison {
            Comparison::Exact => "exact",
            Comparison::GoodnessOfFit => "goodness-of-fit",
            Comparison::TwoSample => "two-sample",
        };
        let witness =
            v.witness.as_ref().map(|(k, x, y)| json!({"structure": k.to_json_value(), "mass_a": x, "mass_b": y}));
        ctx.emit_json(&json!({
            "a": ta.name(), "b": tb.name(), "n": n, "equivalent": v.equivalent, "comparison": comparison,
            "tv": v.tv, "tv_exact": v.tv_exact.as_ref().map(|d| d.to_string()), "p_value": v.p_value,
            "significance": sig, "seed": (v.comparison != Comparison::Exact).then_some(mc.seed), "witness": witness,
        }))?;
    } else {
        ctx.emit(&format!("{verdict} ({detail})"))?;
        if let (false, Some((k, x, y))) = (v.equivalent, &v.witness) {
            ctx.emit(&format!("witness {}: {x} vs {y}", k.to_json()))?;
        }
    }
    Ok(v.equivalent)
}

fn realize_cmd(
    ctx: &mut Ctx,
    args: &TheonArgs,
    mode: RealizeMode,
    ell: usize,
    verify: Option<Vec<Check>>,
    trials: u64,
    seed: Option<u64>,
) -> Result<bool> {
    let th = ctx.theon(args)?;
    let applicable: &[Check] = match mode {
        RealizeMode::StripOrders => &[Check::Roundtrip, Check::Rank, Check::Equiv],
        RealizeMode::SimulateOrders => &[Check::Agreement, Check::Equiv],
    };
    let checks_wanted = match verify {
        None => Vec::new(),
        Some(v) if v.is_empty() => applicable.to_vec(),
        Some(v) => {
            if let Some(c) = v.iter().find(|c| !applicable.contains(c)) {
                let name = c.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default();
                return Err(usage(format!("check `{name}` does not apply to this mode")));
            }
            v
        }
    };
    let wants = |c: Check| checks_wanted.contains(&c);
    let seed =
        if !checks_wanted.is_empty() || matches!(mode, RealizeMode::SimulateOrders) { ctx.seed(seed)? } else { 0 };
    let n = th.language().max_arity();
    let mut checks: BTreeMap<String, Value> = BTreeMap::new();
    let mut ok = true;
    let result = match mode {
        RealizeMode::StripOrders => {
            let family = RealizationFamily::for_target(th.descriptor());
            let pulled = pull_theon(&family, &th)?;
            if wants(Check::Roundtrip) {
                let (recovered, degenerate) = round_trip(&family, n.min(family.max_level), trials, seed)?;
                checks.insert("roundtrip".into(), json!(recovered));
                checks.insert("roundtrip_degenerate".into(), json!(degenerate));
                ok &= recovered;
            }
            if wants(Check::Rank) {
                let mut indep = true;
                for p in pulled.peons() {
                    for s in subset_masks(p.arity(), Some(th.descriptor().degree.min(p.arity()))) {
                        indep &= dependency_check(p, s, trials, seed)?.independent;
                    }
                }
                checks.insert("low_sets_independent".into(), json!(indep));
                ok &= indep;
            }
            pulled
        }
        RealizeMode::SimulateOrders => {
            let bundle = simulate_orders(&th, ell, trials.min(1000), seed)?;
            if wants(Check::Agreement) {
                let agreement = bundle.agreement(trials, seed)?;
                checks.insert("agreement".into(), json!(agreement));
                ok &= agreement >= 0.999;
            }
            bundle.interpreted()?
        }
    };
    if wants(Check::Equiv) {
        let mc = McSettings { samples: 100_000, seed: derive_seed(seed, 1) };
        let v = equivalence_test(&th, &result, n, Backend::Auto, &ExactLimits::default(), &mc, 0.01)?;
        checks.insert("equivalent".into(), json!(v.equivalent));
        checks.insert("tv".into(), json!(v.tv));
        ok &= v.equivalent;
    }
    let language: Vec<String> =
        result.language().predicates().iter().map(|p| format!("{}/{}", p.name, p.arity)).collect();
    if ctx.json {
        ctx.emit_json(&json!({
            "input": th.name(), "result": result.name(), "descriptor": result.descriptor(),
            "language": language, "chamber_grid": result.is_chamber_grid(), "checks": checks, "seed": seed,
        }))?;
    } else {
        ctx.emit(&format!("{} over {} -> {} over {}", th.name(), th.descriptor(), result.name(), result.descriptor()))?;
        ctx.emit(&format!("language: {}", language.join(" ")))?;
        for (k, v) in &checks {
            ctx.emit(&format!("{k}: {v}"))?;
        }
    }
    Ok(ok)
}

/// Runs `ĝ` then `f̂` on random points over `n` vertices. Inputs with tied
/// rankings are counted and skipped.
fn round_trip(family: &RealizationFamily, n: usize, trials: u64, seed: u64) -> Result<(bool, u64)> {
    let v = VertexSet::range(n);
    let mut degenerate = 0;
    for s in 0..trials {
        let x = sample_point(&v, None, family.inverse_source(), derive_seed(seed, s))?;
        let g = family.hat_g(&x)?;
        let f = family.hat_f(&g.point)?;
        if g.degenerate + f.degenerate > 0 {
            degenerate += 1;
            continue;
        }
        for a in subset_masks(n, None) {
            let weights = (0..family.width).all(|c| f.point.weight(a, c).to_bits() == x.weight(a, c).to_bits());
            let orders = (0..family.degree).all(|j| f.point.order(a, j) == x.order(a, j));
            if !(weights && orders) {
                return Ok((false, degenerate));
            }
        }
    }
    Ok((true, degenerate))
}

fn report_out(ctx: &mut Ctx, r: &TestReport, seed: u64) -> Result<()> {
    if ctx.json {
        let mut v = serde_json::to_value(r)?;
        v["seed"] = json!(seed);
        ctx.emit_json(&v)
    } else {
        ctx.emit(&format!("{r}"))?;
        ctx.emit(&r.note)?;
        if let Some(w) = &r.witness {
            ctx.emit(&format!("witness: {w}"))?;
        }
        Ok(())
    }
}

fn suite_cmd(ctx: &mut Ctx, seed: Option<u64>, trials: Option<u64>) -> Result<bool> {
    let seed = ctx.seed(seed)?;
    let budget = trials.map_or_else(SuiteBudget::default, SuiteBudget::uniform);
    let entries = counterexample_suite(seed, &budget)?;
    let passed = suite_passed(&entries);
    if ctx.json {
        ctx.emit_json(&json!({"seed": seed, "passed": passed, "entries": entries}))?;
    } else {
        for e in &entries {
            let tag = match e.outcome {
                Outcome::Pass => "pass",
                Outcome::Fail => "FAIL",
                Outcome::Inconclusive => "inconclusive",
            };
            ctx.emit(&format!("{tag:<12} expected {:<10} {}", e.expected.to_string(), e.report))?;
        }
        ctx.emit(&format!("suite {} (seed {seed})", if passed { "passed" } else { "failed" }))?;
    }
    Ok(passed)
}
