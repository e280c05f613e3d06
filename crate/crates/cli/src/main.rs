use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jrp_core::config::ScenarioDocument;
use jrp_core::evaluate::{Evaluator, Feasibility};
use jrp_core::optimizer::io::{
    centralized_solution, read_solution_csv, read_solutions_csv, write_agreements_csv, write_front_log_csv,
    write_generation_log_csv, write_solutions_csv,
};
use jrp_core::optimizer::{select_agreement, workflow_registry, FrontSolution, WorkflowOutcome};
use jrp_core::report::{write_evaluation_csv, write_simulation_csv};
use jrp_core::simulator::{
    error_metrics, run_validation, simulate, write_envelope_csv, write_error_csv, ErrorTable,
};
use jrp_core::Error;

/// Evaluate, simulate, validate and optimize joint spare-satellite
/// replenishment strategies.
#[derive(Parser, Debug)]
#[command(name = "jrp", version)]
struct Cli {
    /// Worker threads (default: all cores; 1 runs serially).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Scenario document (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic evaluation of the configured (or a saved) design.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Take the design from a solution CSV instead of [design].
        #[arg(long)]
        solution: Option<PathBuf>,
        /// 0-based data row of --solution.
        #[arg(long, default_value_t = 0, requires = "solution")]
        row: usize,
    },
    /// Monte Carlo simulation of the configured design.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Independent replications.
        #[arg(long)]
        replications: Option<usize>,
        /// Simulated years per replication.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Model-versus-simulation errors over random feasible instances.
    Validate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Constellation counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        /// Instances per constellation count.
        #[arg(long)]
        instances: Option<usize>,
        /// Replications per instance.
        #[arg(long)]
        replications: Option<usize>,
        /// Simulated years per replication.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Design search.
    Optimize {
        #[command(flatten)]
        cfg: ConfigArg,
        /// centralized or decentralized
        #[arg(long)]
        mode: Option<String>,
        /// Candidate evaluations.
        #[arg(long)]
        budget: Option<u64>,
        /// Skip the search and select agreements from a saved front CSV.
        #[arg(long)]
        front: Option<PathBuf>,
        /// Bargaining weights, comma separated; repeat for several.
        #[arg(long, value_parser = parse_weights)]
        weights: Vec<Weights>,
    },
}

#[derive(Debug, Clone)]
struct Weights(Vec<f64>);

fn parse_weights(s: &str) -> Result<Weights, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
        .collect::<Result<_, _>>()
        .map(Weights)
}

enum Failure {
    Input(String),
    Infeasible(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::UnknownStrategy { .. }
            | Error::ParkingNotBelowPlane { .. }
            | Error::ZeroRelativeDrift
            | Error::Csv(_) => Failure::Input(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", cli.out_dir.display())))?;
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Evaluate { cfg, solution, row } => evaluate(&load(&cfg.config)?, solution.as_deref(), row, out),
        Command::Simulate { cfg, replications, horizon } => {
            let mut doc = load(&cfg.config)?;
            override_simulation(&mut doc, replications, horizon, cli.seed);
            simulate_cmd(&doc, out)
        }
        Command::Validate { cfg, m, instances, replications, horizon } => {
            let mut doc = load(&cfg.config)?;
            override_simulation(&mut doc, replications, horizon, cli.seed);
            if let Some(m) = m {
                doc.validation.constellation_counts = m;
            }
            if let Some(n) = instances {
                doc.validation.instances_per_count = n;
            }
            if let Some(s) = cli.seed {
                doc.validation.seed = s;
            }
            validate_cmd(&doc, out)
        }
        Command::Optimize { cfg, mode, budget, front, weights } => {
            let mut doc = load(&cfg.config)?;
            if let Some(b) = budget {
                doc.optimizer.ga.budget = b;
                doc.optimizer.nsga.budget = b;
            }
            if let Some(s) = cli.seed {
                doc.optimizer.ga.seed = s;
                doc.optimizer.nsga.seed = s;
            }
            if !weights.is_empty() {
                doc.optimizer.weights = weights.into_iter().map(|w| w.0).collect();
            }
            match front {
                Some(path) => select_cmd(&doc, &path, out),
                None => optimize_cmd(&doc, mode.as_deref(), out),
            }
        }
    }
}

fn load(path: &Path) -> Result<ScenarioDocument, Failure> {
    Ok(ScenarioDocument::load(path)?)
}

fn override_simulation(doc: &mut ScenarioDocument, replications: Option<usize>, horizon: Option<f64>, seed: Option<u64>) {
    if let Some(r) = replications {
        doc.simulation.replications = r;
    }
    if let Some(h) = horizon {
        doc.simulation.horizon_years = h;
    }
    if let Some(s) = seed {
        doc.simulation.seed = s;
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn evaluator(doc: &ScenarioDocument) -> Result<Evaluator, Failure> {
    Ok(Evaluator::new(doc.evaluation_options())?)
}

fn flags_line(f: &Feasibility) -> String {
    f.flags()
        .iter()
        .enumerate()
        .map(|(k, ok)| format!("cond_{}={}", k + 1, u8::from(*ok)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn evaluate(doc: &ScenarioDocument, solution: Option<&Path>, row: usize, out: &Path) -> Outcome {
    let doc = match solution {
        Some(p) => {
            let file = File::open(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            doc.with_design(&read_solution_csv(file, row)?)
        }
        None => doc.clone(),
    };
    let sc = doc.scenario()?;
    let ev = evaluator(&doc)?;
    let (feasibility, eval) = ev.assess(&sc, &doc.thresholds)?;
    write_evaluation_csv(create(out, "evaluation.csv")?, eval.as_ref(), &feasibility).map_err(runtime)?;
    if let Some(e) = &eval {
        println!("{:>4} {:>9} {:>9} {:>9} {:>9} {:>10}", "j", "rho_pl", "rho_pk", "SL_pl", "SL_pk", "TESSAC_j");
        for (j, c) in e.constellations.iter().enumerate() {
            println!(
                "{:>4} {:>9.5} {:>9.5} {:>9.4} {:>9.4} {:>10.3}",
                j + 1,
                c.plane.fill_rate,
                c.parking.fill_rate,
                c.plane.mean_stock,
                c.parking.mean_stock,
                e.costs.tessac_per_constellation[j]
            );
        }
        println!("n_parking  {:.6e} orders/period/orbit", e.order_frequency_parking);
        println!("launch     {:.3} MUSD/yr", e.costs.launch_total);
        println!("TESSAC     {:.3} MUSD/yr", e.costs.tessac_total);
    }
    println!("{}", flags_line(&feasibility));
    if feasibility.is_feasible() {
        Ok(())
    } else {
        Err(Failure::Infeasible(feasibility.describe()))
    }
}

fn simulate_cmd(doc: &ScenarioDocument, out: &Path) -> Outcome {
    let sc = doc.scenario()?;
    let report = simulate(&sc, &doc.simulation)?;
    write_simulation_csv(create(out, "simulation.csv")?, &report).map_err(runtime)?;
    let fmt = |e: &jrp_core::simulator::Estimate| match (e.mean, e.std_err) {
        (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
        (Some(m), None) => format!("{m:.4} (no std err)"),
        _ => "undefined".into(),
    };
    println!(
        "{} replications × {} y (warm-up {} y), {} events",
        report.replications, report.horizon_years, report.warmup_years, report.events
    );
    for (j, c) in report.constellations.iter().enumerate() {
        println!("c{}: rho_plane {}  rho_parking {}", j + 1, fmt(&c.fill_rate_plane), fmt(&c.fill_rate_parking));
    }
    println!("TESSAC {} MUSD/yr", fmt(&report.tessac_total));
    // compare with the model when it is evaluable
    if let Ok(analytic) = evaluator(doc)?.evaluate(&sc) {
        let table = error_metrics(&analytic, &report);
        write_error_csv(create(out, "errors.csv")?, &[("design".to_string(), &table)]).map_err(runtime)?;
        print_summaries(&table);
    }
    Ok(())
}

fn print_summaries(t: &ErrorTable) {
    for (metric, v) in t.summaries() {
        match v {
            Some(v) => println!("  {metric:<15} {v:.3}"),
            None => println!("  {metric:<15} undefined"),
        }
    }
}

fn validate_cmd(doc: &ScenarioDocument, out: &Path) -> Outcome {
    let settings = doc.validation_settings();
    let ev = evaluator(doc)?;
    let report = run_validation(&settings, &ev)?;
    write_envelope_csv(create(out, "envelope.csv")?, &report).map_err(runtime)?;
    let tables: Vec<(String, &ErrorTable)> = report.instances.iter().map(|i| (i.id.clone(), &i.errors)).collect();
    write_error_csv(create(out, "instance_errors.csv")?, &tables).map_err(runtime)?;

    print!("{:<15}", "metric");
    for g in &report.groups {
        print!(" {:>10}", format!("m={}", g.m));
    }
    println!();
    for (k, metric) in jrp_core::simulator::errors::METRICS.iter().enumerate() {
        print!("{metric:<15}");
        for g in &report.groups {
            match g.means[k].1 {
                Some(v) => print!(" {v:>10.3}"),
                None => print!(" {:>10}", "undefined"),
            }
        }
        println!();
    }
    for g in &report.groups {
        let b = g.breaches();
        if !b.is_empty() {
            eprintln!("warning: m = {} outside the envelope on {}", g.m, b.join(", "));
        }
    }
    if !report.std_errors_reliable {
        eprintln!("warning: a single replication gives no standard errors; results are unreliable");
    }
    Ok(())
}

fn optimize_cmd(doc: &ScenarioDocument, mode: Option<&str>, out: &Path) -> Outcome {
    let problem = doc.problem()?;
    let settings = doc.workflow_settings();
    let ev = evaluator(doc)?;
    let registry = workflow_registry();
    let workflow = registry.create(mode.unwrap_or(registry.default_name()))?;
    match workflow.run(&problem, &ev, &settings) {
        Ok(WorkflowOutcome::Centralized(r)) => {
            write_generation_log_csv(create(out, "generations.csv")?, &r.log).map_err(runtime)?;
            if !r.feasibility.is_feasible() {
                return Err(Failure::Infeasible(format!(
                    "no feasible design in {} evaluations; best: {}",
                    r.evaluations,
                    r.feasibility.describe()
                )));
            }
            let sol = centralized_solution(&r).map_err(runtime)?;
            write_solutions_csv(create(out, "solution.csv")?, std::slice::from_ref(&sol)).map_err(runtime)?;
            println!("{} evaluations, {} distinct designs", r.evaluations, r.distinct_designs);
            print_solution(&sol);
            Ok(())
        }
        Ok(WorkflowOutcome::Decentralized { result, selections }) => {
            write_front_log_csv(create(out, "front_log.csv")?, &result.log).map_err(runtime)?;
            write_solutions_csv(create(out, "front.csv")?, &result.front).map_err(runtime)?;
            write_agreements_csv(create(out, "agreements.csv")?, &selections).map_err(runtime)?;
            println!("{} evaluations, front of {} designs", result.evaluations, result.front.len());
            print_selections(&selections);
            Ok(())
        }
        Err(Error::Optimization(m)) => Err(Failure::Infeasible(m)),
        Err(e) => Err(e.into()),
    }
}

fn select_cmd(doc: &ScenarioDocument, front_path: &Path, out: &Path) -> Outcome {
    let file = File::open(front_path).map_err(|e| Failure::Input(format!("{}: {e}", front_path.display())))?;
    let front = read_solutions_csv(file)?;
    if doc.optimizer.weights.is_empty() {
        return Err(Failure::Input("no bargaining weights given".into()));
    }
    let selections = doc
        .optimizer
        .weights
        .iter()
        .map(|w| Ok((w.clone(), select_agreement(&front, w)?.clone())))
        .collect::<Result<Vec<_>, Error>>()?;
    write_agreements_csv(create(out, "agreements.csv")?, &selections).map_err(runtime)?;
    print_selections(&selections);
    Ok(())
}

fn print_solution(s: &FrontSolution) {
    let d = &s.design;
    println!(
        "h_parking {} km, N_parking {}, U {}",
        d.shared.parking_altitude_km, d.shared.n_parking, d.shared.srop_slots
    );
    for (j, p) in d.policies.iter().enumerate() {
        println!(
            "  c{}: s={} Q={} S={}  TESSAC {:.3}",
            j + 1,
            p.reorder_point,
            p.batch_size,
            p.order_up_to,
            s.tessac[j]
        );
    }
    println!("TESSAC {:.3} MUSD/yr", s.tessac_total);
}

fn print_selections(selections: &[(Vec<f64>, FrontSolution)]) {
    for (w, s) in selections {
        println!("beta = {w:?}");
        print_solution(s);
    }
}
