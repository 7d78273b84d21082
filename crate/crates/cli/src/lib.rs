//! The `mofix` command line: `plan`, `analyze`, `compare`, `fuzz` and `dot`.
//!
//! [`execute`] returns the text a command prints; `main` only routes it and
//! maps [`CliError`] to an exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use mofix::engine::{CheckMap, EntryState};
use mofix::gen::{self, ProgramGen};
use mofix::wto::wto_of_program;
use mofix::{
    default_config, generate_fm_program, optimal_config, parse_cfg, run, run_reference, run_shadow,
    AbstractDomain, Cfg, CfgError, ConstState, EngineError, ExecOrder, FmProgram, IntervalState,
    Labels, MemoryConfiguration, NestingForest, Profile, RunOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "mofix",
    version,
    about = "Memory-optimal fixpoint computation over CFG files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the output here instead of stdout (for `fuzz`: the corpus directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the WTO, the FM program and the optimal memory configuration.
    Plan(PlanArgs),
    /// Run the analysis under one configuration.
    Analyze(AnalyzeArgs),
    /// Run the optimal and the default configuration and compare them.
    Compare(CompareArgs),
    /// Generate random CFGs and check them against every oracle.
    Fuzz(FuzzArgs),
    /// Graphviz rendering of a CFG.
    Dot(DotArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub json: bool,
    /// Also compute the maps declaratively and require equality.
    #[arg(long)]
    pub validate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Domain {
    Interval,
    Const,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Config {
    Default,
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Entry {
    Top,
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Overlay {
    Nesting,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, value_enum, default_value_t = Domain::Interval)]
    pub domain: Domain,
    /// Loop iterations allowed per head activation.
    #[arg(long, default_value_t = 10_000)]
    pub iter_cap: u32,
    /// Iterations that join before widening starts.
    #[arg(long, default_value_t = 0)]
    pub widen_delay: u32,
    #[arg(long, value_enum, default_value_t = Entry::Top)]
    pub entry_state: Entry,
}

impl EngineArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            iter_cap: self.iter_cap,
            widen_delay: self.widen_delay,
            entry_state: match self.entry_state {
                Entry::Top => EntryState::Top,
                Entry::Bottom => EntryState::Bottom,
            },
            ..RunOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Config::Optimal)]
    pub config: Config,
    /// Include live-value statistics.
    #[arg(long)]
    pub profile: bool,
    /// Include the full allocation event list in the profile.
    #[arg(long)]
    pub events: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 12)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0.15)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iter_cap: u32,
}

#[derive(Debug, Args)]
pub struct DotArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub overlay: Option<Overlay>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: CfgError },
    #[error(transparent)]
    Engine(EngineError),
    #[error("validity violation: {0}")]
    Validity(String),
    #[error("oracle mismatch: {0}")]
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Engine(EngineError::IterationCap { .. }) => 3,
            // undeclared variables are caught by the parser
            CliError::Engine(EngineError::Domain(_)) => 2,
            CliError::Validity(_) => 4,
            CliError::Oracle(_) => 5,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Engine(e)
    }
}

/// Runs one command and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Analyze(a) => analyze(a),
        Command::Compare(a) => compare(a),
        Command::Fuzz(a) => fuzz(a, cli.out.as_deref()),
        Command::Dot(a) => dot(a),
    }
}

pub fn load(path: &Path) -> Result<Cfg, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    };
    parse_cfg(&text).map_err(parse)?.build().map_err(parse)
}

/// The JSON report; every command that emits JSON uses these five keys.
#[derive(Debug, Serialize)]
pub struct Report {
    pub verdicts: BTreeMap<u64, bool>,
    pub wto: String,
    pub program: String,
    pub config: ConfigDump,
    pub profile: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct ConfigDump {
    pub dpost: BTreeMap<u64, u64>,
    pub achk: BTreeMap<u64, u64>,
    pub dpostl: BTreeMap<u64, Vec<u64>>,
    pub dprel: BTreeMap<u64, Vec<u64>>,
}

impl ConfigDump {
    fn new(m: &MemoryConfiguration, labels: &Labels) -> Self {
        let l = |v| labels.get(v);
        let set = |s: &[mofix::NodeId]| {
            let mut v: Vec<u64> = s.iter().map(|&x| l(x)).collect();
            v.sort_unstable();
            v
        };
        let nodes = || (0..m.node_count()).map(mofix::NodeId::new);
        ConfigDump {
            dpost: nodes().map(|u| (l(u), l(m.dpost(u)))).collect(),
            achk: nodes()
                .filter_map(|u| m.achk(u).map(|a| (l(u), l(a))))
                .collect(),
            dpostl: nodes().map(|u| (l(u), set(&m.dpostl(u)))).collect(),
            dprel: nodes()
                .filter_map(|u| m.dprel(u).map(|r| (l(u), set(&r))))
                .collect(),
        }
    }
}

struct Plan {
    cfg: Cfg,
    program: FmProgram,
    config: MemoryConfiguration,
}

impl Plan {
    fn new(cfg: Cfg) -> Self {
        let (program, config) = generate_fm_program(&cfg.graph, &cfg.checks);
        Plan {
            cfg,
            program,
            config,
        }
    }

    fn wto(&self) -> String {
        wto_of_program(&self.program)
            .display(&self.cfg.labels)
            .to_string()
    }

    fn program(&self) -> String {
        self.program.display(&self.cfg.labels).to_string()
    }

    fn report(&self, m: &MemoryConfiguration, ck: Option<&CheckMap>) -> Report {
        Report {
            verdicts: ck
                .map(|ck| {
                    ck.entries()
                        .map(|(u, b)| (self.cfg.labels.get(u), b))
                        .collect()
                })
                .unwrap_or_default(),
            wto: self.wto(),
            program: self.program(),
            config: ConfigDump::new(m, &self.cfg.labels),
            profile: serde_json::Value::Null,
        }
    }

    fn default_config(&self) -> MemoryConfiguration {
        default_config(&self.program, &self.cfg.checks)
    }

    /// The generated maps against the declarative definitions.
    fn oracle_check(&self) -> Result<(), CliError> {
        let w = wto_of_program(&self.program);
        let oracle = optimal_config(&self.cfg.graph, &w, &self.cfg.checks);
        if oracle == self.config {
            return Ok(());
        }
        let l = &self.cfg.labels;
        Err(CliError::Oracle(format!(
            "{}: generated maps\n{}differ from\n{}",
            self.cfg.name,
            self.config.render(l),
            oracle.render(l)
        )))
    }

    fn run(
        &self,
        domain: Domain,
        m: &MemoryConfiguration,
        opts: &RunOptions,
    ) -> Result<(CheckMap, Profile), CliError> {
        let prob = self.cfg.problem();
        let p = &self.program;
        Ok(match domain {
            Domain::Interval => {
                run::<IntervalState>(prob, p, m, opts).map(|r| (r.ck, r.profile))?
            }
            Domain::Const => run::<ConstState>(prob, p, m, opts).map(|r| (r.ck, r.profile))?,
        })
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn plan(a: &PlanArgs) -> Result<String, CliError> {
    let plan = Plan::new(load(&a.file)?);
    if a.validate {
        plan.oracle_check()?;
    }
    if a.json {
        return Ok(to_json(&plan.report(&plan.config, None)));
    }
    let l = &plan.cfg.labels;
    let w = wto_of_program(&plan.program);
    let nf = NestingForest::new(&w);
    let order: Vec<String> = ExecOrder::new(&w, &nf)
        .sequence()
        .iter()
        .map(|&v| l.get(v).to_string())
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "wto {}", plan.wto());
    let _ = writeln!(out, "order {}", order.join(" "));
    let _ = writeln!(out, "program {}", plan.program());
    out.push_str(&plan.config.render(l));
    Ok(out)
}

fn profile_json(p: &Profile, labels: &Labels, events: bool) -> serde_json::Value {
    let iterations: BTreeMap<u64, u32> = p
        .iterations_per_head
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(v, &k)| (labels.get(mofix::NodeId::new(v)), k))
        .collect();
    let mut v = json!({
        "peak_live": p.peak_live,
        "total_allocs": p.total_allocs,
        "peak_width": p.peak_width,
        "iterations_per_head": iterations,
    });
    if events {
        v["events"] = p
            .events
            .iter()
            .map(|e| {
                json!({
                    "step": e.step,
                    "kind": e.kind.name(),
                    "node": labels.get(e.node),
                    "site": labels.get(e.site),
                })
            })
            .collect();
    }
    v
}

fn profile_text(out: &mut String, p: &Profile, labels: &Labels) {
    let _ = writeln!(out, "peak_live {}", p.peak_live);
    let _ = writeln!(out, "total_allocs {}", p.total_allocs);
    let mut heads: Vec<(u64, u32)> = p
        .iterations_per_head
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(v, &k)| (labels.get(mofix::NodeId::new(v)), k))
        .collect();
    heads.sort_unstable();
    for (h, k) in heads {
        let _ = writeln!(out, "iterations {h} {k}");
    }
}

fn verdict_lines(out: &mut String, ck: &CheckMap, labels: &Labels) {
    let mut v: Vec<(u64, bool)> = ck.entries().map(|(u, b)| (labels.get(u), b)).collect();
    v.sort_unstable();
    for (u, b) in v {
        let _ = writeln!(out, "check {u} {b}");
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<String, CliError> {
    let plan = Plan::new(load(&a.file)?);
    let m = match a.config {
        Config::Optimal => plan.config.clone(),
        Config::Default => plan.default_config(),
    };
    let opts = RunOptions {
        record_events: a.events,
        ..a.engine.options()
    };
    let (ck, profile) = plan.run(a.engine.domain, &m, &opts)?;
    let l = &plan.cfg.labels;
    if a.json {
        let mut report = plan.report(&m, Some(&ck));
        if a.profile || a.events {
            report.profile = profile_json(&profile, l, a.events);
        }
        return Ok(to_json(&report));
    }
    let mut out = String::new();
    verdict_lines(&mut out, &ck, l);
    if a.profile {
        profile_text(&mut out, &profile, l);
    }
    Ok(out)
}

fn compare(a: &CompareArgs) -> Result<String, CliError> {
    let plan = Plan::new(load(&a.file)?);
    let opts = a.engine.options();
    let (opt_ck, opt) = plan.run(a.engine.domain, &plan.config, &opts)?;
    let (dflt_ck, dflt) = plan.run(a.engine.domain, &plan.default_config(), &opts)?;
    if opt_ck != dflt_ck {
        return Err(CliError::Validity(format!(
            "{}: verdicts differ between the optimal and the default configuration",
            plan.cfg.name
        )));
    }
    let ratio = opt.peak_live as f64 / dflt.peak_live.max(1) as f64;
    let l = &plan.cfg.labels;
    if a.json {
        let mut report = plan.report(&plan.config, Some(&opt_ck));
        report.profile = json!({
            "optimal": profile_json(&opt, l, false),
            "default": profile_json(&dflt, l, false),
            "ratio": ratio,
        });
        return Ok(to_json(&report));
    }
    let mut out = String::new();
    verdict_lines(&mut out, &opt_ck, l);
    let _ = writeln!(
        out,
        "peak_live optimal {} default {}",
        opt.peak_live, dflt.peak_live
    );
    let _ = writeln!(out, "ratio {ratio:.3}");
    Ok(out)
}

/// Everything `fuzz` checks on one instance, in one domain. Returns a
/// description of the first validity problem.
fn fuzz_one<D: AbstractDomain>(plan: &Plan, opts: &RunOptions) -> Result<Option<String>, CliError> {
    let prob = plan.cfg.problem();
    let p = &plan.program;
    let opt = run::<D>(prob, p, &plan.config, opts)?;
    let dflt = run::<D>(prob, p, &plan.default_config(), opts)?;
    let reference = run_reference::<D>(prob, &wto_of_program(p), &plan.cfg.checks, opts)?;
    if opt.ck != dflt.ck || opt.ck != reference.ck {
        return Ok(Some(format!(
            "{}: {} verdicts differ",
            plan.cfg.name,
            D::NAME
        )));
    }
    let shadow = run_shadow::<D>(prob, p, &plan.config, opts)?;
    if !shadow.valid {
        return Ok(Some(format!(
            "{}: {} shadow run flags {:?}",
            plan.cfg.name,
            D::NAME,
            shadow
        )));
    }
    Ok(None)
}

fn fuzz(a: &FuzzArgs, out_dir: Option<&Path>) -> Result<String, CliError> {
    if a.nodes == 0 {
        return Err(CliError::Usage("--nodes must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&a.edge_prob) {
        return Err(CliError::Usage("--edge-prob must lie in [0, 1]".into()));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let opts = RunOptions {
        iter_cap: a.iter_cap,
        ..RunOptions::default()
    };
    let pg = ProgramGen::default();
    let mut rng = gen::rng(a.seed);
    let (mut invalid, mut mismatched) = (Vec::new(), Vec::new());
    for i in 0..a.count {
        let doc = gen::random_document(&mut rng, &format!("fuzz{i}"), a.nodes, a.edge_prob, &pg);
        if let Some(dir) = out_dir {
            let path = dir.join(format!("fuzz_{i:04}.cfg"));
            std::fs::write(&path, doc.serialize())
                .map_err(|source| CliError::Io { path, source })?;
        }
        let cfg = doc.build().map_err(|source| CliError::Parse {
            path: PathBuf::from(&doc.name),
            source,
        })?;
        let plan = Plan::new(cfg);
        if let Err(CliError::Oracle(msg)) = plan.oracle_check() {
            mismatched.push(msg);
        }
        for problem in [
            fuzz_one::<IntervalState>(&plan, &opts)?,
            fuzz_one::<ConstState>(&plan, &opts)?,
        ]
        .into_iter()
        .flatten()
        {
            invalid.push(problem);
        }
    }
    let summary = format!(
        "{} instances ({} nodes, edge probability {}, seed {}): {} validity violations, {} oracle mismatches\n",
        a.count,
        a.nodes,
        a.edge_prob,
        a.seed,
        invalid.len(),
        mismatched.len()
    );
    if let Some(first) = mismatched.first() {
        return Err(CliError::Oracle(format!("{summary}{first}")));
    }
    if let Some(first) = invalid.first() {
        return Err(CliError::Validity(format!("{summary}{first}")));
    }
    Ok(summary)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot(a: &DotArgs) -> Result<String, CliError> {
    let cfg = load(&a.file)?;
    let l = &cfg.labels;
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(&cfg.name));
    let mut nodes: Vec<_> = cfg.graph.nodes().collect();
    nodes.sort_by_key(|&v| l.get(v));
    for &v in &nodes {
        let body: Vec<String> = cfg.programs[v.index()]
            .stmts()
            .iter()
            .map(|s| s.display(&cfg.vars).to_string())
            .collect();
        let mut label = l.get(v).to_string();
        if !body.is_empty() {
            label = format!("{label}\\n{}", dot_escape(&body.join("; ")));
        }
        let mut attrs = format!("label=\"{label}\"");
        if v == cfg.graph.entry() {
            attrs.push_str(", shape=box");
        }
        if cfg.checks[v.index()] {
            attrs.push_str(", peripheries=2");
        }
        let _ = writeln!(out, "  n{} [{attrs}];", l.get(v));
    }
    let mut edges: Vec<(u64, u64)> = cfg
        .graph
        .edges()
        .map(|(u, v)| (l.get(u), l.get(v)))
        .collect();
    edges.sort_unstable();
    for (u, v) in edges {
        let _ = writeln!(out, "  n{u} -> n{v};");
    }
    if a.overlay == Some(Overlay::Nesting) {
        let (p, _) = generate_fm_program(&cfg.graph, &cfg.checks);
        let nf = NestingForest::new(&wto_of_program(&p));
        let mut links: Vec<(u64, u64)> = cfg
            .graph
            .nodes()
            .filter_map(|v| nf.parent(v).map(|h| (l.get(h), l.get(v))))
            .collect();
        links.sort_unstable();
        for (h, v) in links {
            let _ = writeln!(out, "  n{h} -> n{v} [style=dashed, constraint=false];");
        }
    }
    out.push_str("}\n");
    Ok(out)
}
