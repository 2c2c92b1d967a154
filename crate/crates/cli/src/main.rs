//! Batch command-line front end over the analysis crate.
//!
//! Every command reads JSON files in the formats of [`format`], writes
//! machine-readable JSON to standard output (or plain text with
//! `--format table`), and uses stable exit codes: 0 success, 2 unreadable or
//! malformed input, 3 overlapping d-separation query sets, 4 precondition
//! violations between otherwise valid inputs. Outputs are deterministic for
//! a given configuration; `NOFINETUNE_SEED` overrides the audit seed.

use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use nofinetune_core::theorem::CandidateSpace;
use nofinetune_core::{
    classical_bound, is_bell_scenario, is_factorisable, is_faithful, no_disturbance,
    verify_theorem1, CiStatement, DagError, Inequality, MembershipResult, NoDisturbanceReport,
    Phenomenon, Rat, Scalar, TheoremConfig, TripleMode, VerificationReport, VertexSet,
};

use nofinetune_cli::format::{
    self, inequality_to_value, rat_to_str, read_json, to_pretty, DistRow, FormatError, GraphFile,
    InequalityFile, ModelFile, NumberMode, PhenomenonFile, ScenarioFile,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Disjoint(String),
    #[error("{0}")]
    Precondition(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Disjoint(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Parse(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "nofinetune", version)]
#[command(about = "Causal-structure analysis of two-party measurement phenomena")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VertexKind {
    /// Independent per-slot response functions.
    Pairs,
    /// One global assignment answering every measurement.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScanMode {
    /// Single variables on each side of the independence.
    Singletons,
    /// All disjoint nonempty variable subsets.
    FullSubsets,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether two node sets are d-separated in a graph.
    Dsep(DsepArgs),
    /// List every conditional independence of a distribution table.
    CiScan(CiScanArgs),
    /// Check the no-disturbance conditions of a phenomenon.
    NdCheck(NdCheckArgs),
    /// Decide polytope membership of a phenomenon, certificate included.
    PolytopeTest(PolytopeTestArgs),
    /// Maximize an inequality functional over a vertex set.
    ClassicalBound(ClassicalBoundArgs),
    /// Diagnose fine-tuning: phenomenon CIs with no structural explanation.
    FaithfulCheck(FaithfulCheckArgs),
    /// Exhaustively audit candidate causal structures for factorisability.
    VerifyTheorem1(VerifyArgs),
}

#[derive(Args)]
struct DsepArgs {
    /// Graph JSON file.
    graph: String,
    /// First node set (comma-separated or repeated).
    #[arg(long, required = true, value_delimiter = ',')]
    s1: Vec<String>,
    /// Second node set.
    #[arg(long, required = true, value_delimiter = ',')]
    s2: Vec<String>,
    /// Conditioning set; may be empty.
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
}

#[derive(Args)]
struct CiScanArgs {
    /// Distribution table JSON file (exact weights).
    table: String,
    #[arg(long, value_enum, default_value = "full-subsets")]
    mode: ScanMode,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct NdCheckArgs {
    /// Phenomenon JSON file.
    phenomenon: String,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct PolytopeTestArgs {
    /// Phenomenon JSON file (exact or float mode).
    phenomenon: String,
    #[arg(long, value_enum, default_value = "pairs")]
    vertices: VertexKind,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct ClassicalBoundArgs {
    /// Inequality JSON file.
    inequality: String,
    /// Scenario JSON file supplying the vertex set.
    scenario: String,
    #[arg(long, value_enum, default_value = "pairs")]
    vertices: VertexKind,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct FaithfulCheckArgs {
    /// Causal-model JSON file (graph, variables, joint).
    model: String,
    /// Phenomenon JSON file the model is supposed to explain.
    phenomenon: String,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for the per-survivor numeric trials. The NOFINETUNE_SEED
    /// environment variable overrides this flag.
    #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
    seed: u64,
    /// Random compatible models drawn per survivor.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Values per latent variable in the numeric trials.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    latent_card: u64,
    /// Worker threads for the audit; defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Restrict the candidate space to structures without direct edges or
    /// common causes between the two settings.
    #[arg(long)]
    no_xy_links: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Dsep(a) => cmd_dsep(a),
        Command::CiScan(a) => cmd_ci_scan(a),
        Command::NdCheck(a) => cmd_nd_check(a),
        Command::PolytopeTest(a) => cmd_polytope_test(a),
        Command::ClassicalBound(a) => cmd_classical_bound(a),
        Command::FaithfulCheck(a) => cmd_faithful_check(a),
        Command::VerifyTheorem1(a) => cmd_verify_theorem1(a),
    }
}

fn cmd_dsep(a: DsepArgs) -> Result<(), CliError> {
    let graph: GraphFile = read_json(&a.graph)?;
    let dag = graph.to_dag()?;
    match dag.d_separated(&a.s1, &a.s2, &a.z) {
        Ok(verdict) => {
            println!("{verdict}");
            Ok(())
        }
        Err(e @ DagError::Disjointness(_)) => Err(CliError::Disjoint(e.to_string())),
        Err(e) => Err(CliError::Precondition(e.to_string())),
    }
}

/// `A,B ⫫ X | Y` — the one-line reading of a CI statement.
fn statement_line(stmt: &CiStatement) -> String {
    let given = if stmt.z.is_empty() {
        String::new()
    } else {
        format!(" | {}", stmt.z.join(","))
    };
    format!("{} ⫫ {}{}", stmt.s1.join(","), stmt.s2.join(","), given)
}

fn cmd_ci_scan(a: CiScanArgs) -> Result<(), CliError> {
    let rows: Vec<DistRow> = read_json(&a.table)?;
    let dist = format::bare_table_to_dist(&rows)?;
    let names: Vec<String> = dist.vars().iter().map(|v| v.name().to_owned()).collect();
    let mode = match a.mode {
        ScanMode::Singletons => TripleMode::Singletons,
        ScanMode::FullSubsets => TripleMode::FullSubsets,
    };
    let statements = dist
        .ci_scan(&names, mode)
        .map_err(|e| CliError::Precondition(e.to_string()))?;
    match a.format {
        OutputFormat::Json => println!("{}", to_pretty(&json!({ "statements": statements }))),
        OutputFormat::Table => {
            for stmt in &statements {
                println!("{}", statement_line(stmt));
            }
            println!("{} conditional independences", statements.len());
        }
    }
    Ok(())
}

fn nd_report_value<T: Scalar>(
    report: &NoDisturbanceReport<T>,
    render: impl Fn(&T) -> Value,
) -> Value {
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "outcome_slot": v.outcome_slot,
                "measurement": v.measurement,
                "far_settings": [v.far_settings.0, v.far_settings.1],
                "deviation": render(&v.deviation),
            })
        })
        .collect();
    json!({ "holds": report.holds, "violations": violations })
}

fn print_nd<T: Scalar>(
    report: &NoDisturbanceReport<T>,
    format: OutputFormat,
    render: impl Fn(&T) -> Value,
) {
    match format {
        OutputFormat::Json => println!("{}", to_pretty(&nd_report_value(report, render))),
        OutputFormat::Table => {
            if report.holds {
                println!("no-disturbance: holds");
            } else {
                println!("no-disturbance: violated ({} conditionals shift)", report.violations.len());
                for v in &report.violations {
                    println!(
                        "  {} given {} shifts with the far setting {} vs {} by {}",
                        v.outcome_slot, v.measurement, v.far_settings.0, v.far_settings.1,
                        v.deviation
                    );
                }
            }
        }
    }
}

fn cmd_nd_check(a: NdCheckArgs) -> Result<(), CliError> {
    let file: PhenomenonFile = read_json(&a.phenomenon)?;
    match file.mode {
        NumberMode::Exact => {
            let p = file.to_exact()?;
            print_nd(&no_disturbance(&p), a.format, |r| Value::String(rat_to_str(r)));
        }
        NumberMode::Float => {
            let p = file.to_float()?;
            print_nd(&no_disturbance(&p), a.format, |x| json!(x));
        }
    }
    Ok(())
}

fn vertex_set<T: Scalar>(kind: VertexKind, p: &Phenomenon<T>) -> Result<VertexSet, CliError> {
    let set = match kind {
        VertexKind::Pairs => VertexSet::restricted_pairs(p),
        VertexKind::Global => VertexSet::global_assignments(p.scenario()),
    };
    set.map_err(|e| CliError::Precondition(e.to_string()))
}

fn membership_value<T: Scalar>(
    result: &MembershipResult<T>,
    vertices: usize,
    render: impl Fn(&T) -> Value + Copy,
) -> Value {
    match result {
        MembershipResult::Inside { weights } => json!({
            "inside": true,
            "vertices": vertices,
            "weights": weights.iter().map(render).collect::<Vec<_>>(),
        }),
        MembershipResult::Outside { witness, value, margin } => json!({
            "inside": false,
            "vertices": vertices,
            "value": render(value),
            "margin": render(margin),
            "witness": inequality_to_value(witness, render),
        }),
    }
}

fn print_membership<T: Scalar>(
    result: &MembershipResult<T>,
    vertices: usize,
    format: OutputFormat,
    render: impl Fn(&T) -> Value + Copy,
) {
    match format {
        OutputFormat::Json => {
            println!("{}", to_pretty(&membership_value(result, vertices, render)))
        }
        OutputFormat::Table => match result {
            MembershipResult::Inside { weights } => {
                let support = weights.iter().filter(|w| **w != T::zero()).count();
                println!("membership: inside ({vertices} vertices, mixture over {support})");
            }
            MembershipResult::Outside { witness, value, margin } => {
                println!("membership: outside ({vertices} vertices)");
                println!("  witness value  {value}");
                println!("  witness bound  {}", witness.bound);
                println!("  margin         {margin}");
            }
        },
    }
}

fn cmd_polytope_test(a: PolytopeTestArgs) -> Result<(), CliError> {
    let file: PhenomenonFile = read_json(&a.phenomenon)?;
    match file.mode {
        NumberMode::Exact => {
            let p = file.to_exact()?;
            let verts = vertex_set(a.vertices, &p)?;
            let result =
                is_factorisable(&p, &verts).map_err(|e| CliError::Precondition(e.to_string()))?;
            print_membership(&result, verts.len(), a.format, |r| Value::String(rat_to_str(r)));
        }
        NumberMode::Float => {
            let p = file.to_float()?;
            let verts = vertex_set(a.vertices, &p)?;
            let result =
                is_factorisable(&p, &verts).map_err(|e| CliError::Precondition(e.to_string()))?;
            print_membership(&result, verts.len(), a.format, |x| json!(x));
        }
    }
    Ok(())
}

fn cmd_classical_bound(a: ClassicalBoundArgs) -> Result<(), CliError> {
    let q: Inequality<Rat> = read_json::<InequalityFile>(&a.inequality)?.to_inequality()?;
    let scenario = read_json::<ScenarioFile>(&a.scenario)?.to_scenario()?;
    let verts = match a.vertices {
        VertexKind::Global => VertexSet::global_assignments(&scenario),
        VertexKind::Pairs => {
            let split = is_bell_scenario(&scenario, 2).ok_or_else(|| {
                CliError::Precondition(
                    "scenario does not split into two measurement sides; use --vertices global"
                        .to_owned(),
                )
            })?;
            VertexSet::bipartite_pairs(&scenario, &split.parts[0], &split.parts[1])
        }
    }
    .map_err(|e| CliError::Precondition(e.to_string()))?;
    let bound = classical_bound(&q, &verts).map_err(|e| CliError::Precondition(e.to_string()))?;
    match a.format {
        OutputFormat::Json => println!(
            "{}",
            to_pretty(&json!({ "bound": rat_to_str(&bound), "vertices": verts.len() }))
        ),
        OutputFormat::Table => {
            println!("classical bound: {bound} over {} vertices", verts.len())
        }
    }
    Ok(())
}

fn cmd_faithful_check(a: FaithfulCheckArgs) -> Result<(), CliError> {
    let model = read_json::<ModelFile>(&a.model)?.to_model()?;
    let p = read_json::<PhenomenonFile>(&a.phenomenon)?.to_exact()?;
    let report = is_faithful(&model, &p).map_err(|e| CliError::Precondition(e.to_string()))?;
    match a.format {
        OutputFormat::Json => println!(
            "{}",
            to_pretty(&json!({
                "faithful": report.faithful,
                "fine_tuned": report.fine_tuned_cis,
                "support_induced": report.support_induced_cis,
            }))
        ),
        OutputFormat::Table => {
            if report.faithful {
                println!("faithful: every conditional independence is structural");
            } else {
                println!("unfaithful: {} fine-tuned independences", report.fine_tuned_cis.len());
                for stmt in &report.fine_tuned_cis {
                    let support = if report.support_induced_cis.contains(stmt) {
                        "  (support-induced)"
                    } else {
                        ""
                    };
                    println!("  {}{support}", statement_line(stmt));
                }
            }
        }
    }
    Ok(())
}

/// Audit options resolved from flags and environment.
struct RunConfig {
    seed: u64,
    trials: usize,
    latent_card: usize,
    jobs: Option<usize>,
    restrict_settings: bool,
    output: OutputFormat,
}

impl RunConfig {
    fn resolve(a: &VerifyArgs) -> Result<Self, CliError> {
        let seed = match std::env::var("NOFINETUNE_SEED") {
            Ok(raw) => match raw.parse::<u64>() {
                Ok(s) if s >= 1 => s,
                _ => {
                    return Err(CliError::Parse(format!(
                        "NOFINETUNE_SEED must be a positive integer, got `{raw}`"
                    )))
                }
            },
            Err(_) => a.seed,
        };
        Ok(RunConfig {
            seed,
            trials: a.trials as usize,
            latent_card: a.latent_card as usize,
            jobs: a.jobs.map(|j| j as usize),
            restrict_settings: a.no_xy_links,
            output: a.format,
        })
    }
}

fn cmd_verify_theorem1(a: VerifyArgs) -> Result<(), CliError> {
    let run = RunConfig::resolve(&a)?;
    let config = TheoremConfig {
        seed: run.seed,
        trials: run.trials,
        latent_card: run.latent_card,
        space: if run.restrict_settings {
            CandidateSpace::no_xy_links()
        } else {
            CandidateSpace::full()
        },
    };
    let report = match run.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Precondition(format!("cannot build a {jobs}-thread pool: {e}")))?
            .install(|| verify_theorem1(&config)),
        None => verify_theorem1(&config),
    };
    match run.output {
        OutputFormat::Json => println!("{}", report.to_json()),
        OutputFormat::Table => print_report_table(&report),
    }
    Ok(())
}

fn print_report_table(report: &VerificationReport) {
    println!(
        "structural audit (seed {}, {} trials per survivor, latent cardinality {})",
        report.seed, report.trials, report.latent_card
    );
    println!();
    println!("  candidates   {:>9}", report.total_candidates);
    println!("  excluded     {:>9}", report.excluded_total());
    let ex = &report.excluded_per_step;
    println!("    step1      {:>9}  cross-side links or wide common causes", ex.step1);
    println!("    step2a     {:>9}  outcome-outcome edge beside setting access", ex.step2a);
    println!("    step2b     {:>9}  outcome-outcome edge beside far-side causes", ex.step2b);
    println!("    step3      {:>9}  edges from outcomes into settings", ex.step3);
    println!("    step4      {:>9}  collider-activating cause patterns", ex.step4);
    println!("  survivors    {:>9}", report.survivors.len());
    let mut classes: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    for s in &report.survivors {
        *classes.entry(s.proof_class.to_string()).or_default() += 1;
    }
    for (class, count) in &classes {
        println!("    {class:<12} {count:>7}");
    }
    let trials: usize = report.survivors.iter().map(|s| s.numeric_trials).sum();
    let clean = report.survivors.iter().filter(|s| s.all_factorisable).count();
    let nd_failures: usize = report.survivors.iter().map(|s| s.nd_failures).sum();
    println!();
    println!(
        "  numeric cross-check: {clean}/{} survivors factorisable across {trials} trials, \
         {nd_failures} no-disturbance failures",
        report.survivors.len()
    );
    println!("  verdict: {}", if report.theorem_holds { "holds" } else { "FAILS" });
}
