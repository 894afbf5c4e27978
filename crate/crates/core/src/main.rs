use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use boolflow::harness::{
    dump_trajectory, emit_table, parameter_sweep, read_jsonl, run_experiment, run_on_instance,
    write_jsonl, ExperimentConfig, Instance, RunRecord, StartMode, SweepAxis, TableLayout,
};
use boolflow::integrators::{Scheme, Status, TauMode};
use boolflow::oracle::{exhaustive_min, DEFAULT_MAX_N};
use boolflow::polynomial::{random_poly, Domain, InstanceFile, InstanceSpec};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "boolflow",
    version,
    about = "Boolean polynomial minimization by penalty flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Run schemes on an instance, a generated cell or a config grid.
    Solve(SolveArgs),
    /// Exhaustive minimum of an instance.
    Oracle(OracleArgs),
    /// Rerun a config over values of one parameter.
    Sweep(SweepArgs),
    /// Render a run log as a table.
    Table(TableArgs),
    /// Record the iterates of one solve.
    Traj(TrajArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    coeff_lo: i64,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    coeff_hi: i64,
    #[arg(long, default_value_t = 1.0)]
    sparsity: f64,
    /// pm1 or binary.
    #[arg(long, default_value = "pm1", value_parser = parse_domain)]
    domain: Domain,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Overrides applied on top of a config.
#[derive(Args, Default)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated schemes or `all`.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme_list)]
    scheme: Vec<Vec<Scheme>>,
    /// Comma-separated penalty parameters.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Step schedule of the Lie scheme.
    #[arg(long)]
    tau_mode: Option<TauMode>,
    #[arg(long)]
    tau0: Option<f64>,
    /// Number of random starts; 1 starts from the origin.
    #[arg(long)]
    starts: Option<usize>,
    /// Largest n handed to the exhaustive oracle.
    #[arg(long)]
    max_n: Option<usize>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Store wall times in the records.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Instance file; overrides the config grid.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Single generated cell instead of the config grid.
    #[arg(long, requires = "d")]
    n: Option<u32>,
    #[arg(long, requires = "n")]
    d: Option<u32>,
    /// Run log to append to (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory file (.csv or .json); numbered per run when several.
    #[arg(long)]
    dump_traj: Option<PathBuf>,
    /// Print records as JSON lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// epsilon, gamma, m, c or tau.
    #[arg(long)]
    axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Single generated cell instead of the config grid.
    #[arg(long, requires = "d")]
    n: Option<u32>,
    #[arg(long, requires = "n")]
    d: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableArgs {
    /// Run log written by `solve --out`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, default_value = "table1")]
    layout: TableLayout,
    /// Keep only records at this penalty parameter.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrajArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, requires = "d")]
    n: Option<u32>,
    #[arg(long, requires = "n")]
    d: Option<u32>,
    /// Trajectory file (.csv or .json).
    #[arg(long)]
    out: PathBuf,
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    match s {
        "pm1" => Ok(Domain::Pm1),
        "binary" => Ok(Domain::Binary),
        _ => Err(format!("unknown domain `{s}` (pm1, binary)")),
    }
}

fn parse_scheme_list(s: &str) -> Result<Vec<Scheme>, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Scheme::ALL.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

impl RunArgs {
    fn config(&self) -> Res<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.scheme.is_empty() {
            let mut v: Vec<Scheme> = Vec::new();
            for s in self.scheme.iter().flatten() {
                if !v.contains(s) {
                    v.push(*s);
                }
            }
            cfg.schemes = v;
        }
        if !self.eps.is_empty() {
            cfg.epsilons = self.eps.clone();
        }
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(g) = self.gamma {
            cfg.params.gamma = g;
        }
        if let Some(m) = self.m {
            cfg.params.m = m;
        }
        if let Some(t) = self.tau_mode {
            cfg.lie.tau_mode = Some(t);
        }
        if self.tau0.is_some() {
            cfg.params.tau0 = self.tau0;
        }
        if let Some(k) = self.starts {
            cfg.n_starts = k.max(1);
            cfg.start = if k > 1 {
                StartMode::Random
            } else {
                StartMode::Zero
            };
        }
        if let Some(k) = self.max_n {
            cfg.oracle_max_n = k;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.record_timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_source(
    cfg: &mut ExperimentConfig,
    input: &Option<PathBuf>,
    n: Option<u32>,
    d: Option<u32>,
) -> Res<Vec<RunRecord>> {
    if let Some(path) = input {
        return Ok(run_on_instance(cfg, Instance::load(path)?)?);
    }
    if let (Some(n), Some(d)) = (n, d) {
        cfg.grid = vec![[n, d]];
    }
    Ok(run_experiment(cfg)?)
}

fn numbered(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("traj");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i}.{ext}"),
        None => format!("{stem}_{i}"),
    };
    path.with_file_name(name)
}

fn summary_line(r: &RunRecord) -> String {
    let opt = r
        .oracle_value
        .map(|v| format!(" opt={v}"))
        .unwrap_or_default();
    format!(
        "{:<8} n={:<3} d={:<2} eps={:<8e} {:<24} iter={:<6} delta={:.3e} obj={}{} bound={:.3e}",
        r.scheme.name(),
        r.n,
        r.d,
        r.epsilon,
        r.status.to_string(),
        r.iterations,
        r.delta,
        r.objective,
        opt,
        r.bound
    )
}

fn any_diverged(records: &[RunRecord]) -> bool {
    records.iter().any(|r| r.status == Status::Diverged)
}

fn cmd_generate(a: GenerateArgs) -> Res<bool> {
    let spec = InstanceSpec::new(a.n, a.d, a.seed)
        .with_coeff_range(a.coeff_lo, a.coeff_hi)
        .with_sparsity(a.sparsity);
    let poly = random_poly(&spec)?;
    let file = InstanceFile::from_poly(&poly)
        .with_domain(a.domain)
        .with_spec(spec);
    match a.out {
        Some(p) => {
            file.write(&p)?;
            eprintln!(
                "wrote {} ({} terms, sha256 {})",
                p.display(),
                file.terms.len(),
                file.content_hash()
            );
        }
        None => print!("{}", file.to_json()),
    }
    Ok(false)
}

fn cmd_solve(a: SolveArgs) -> Res<bool> {
    let mut cfg = a.run.config()?;
    cfg.keep_trajectories = a.dump_traj.is_some();
    let records = run_source(&mut cfg, &a.input, a.n, a.d)?;
    for r in &records {
        if a.json {
            println!("{}", r.to_json_line());
        } else {
            println!("{}", summary_line(r));
        }
    }
    if let Some(p) = &a.out {
        write_jsonl(&records, p, true)?;
    }
    if let Some(p) = &a.dump_traj {
        if records.len() == 1 {
            dump_trajectory(&records[0], p)?;
        } else {
            for (i, r) in records.iter().enumerate() {
                dump_trajectory(r, &numbered(p, i))?;
            }
        }
    }
    Ok(any_diverged(&records))
}

fn cmd_oracle(a: OracleArgs) -> Res<bool> {
    let inst = Instance::load(&a.input)?;
    let res = exhaustive_min(inst.problem.pm1(), a.max_n)?;
    if a.json {
        println!("{}", serde_json::to_string(&res)?);
    } else {
        let signs: Vec<String> = res
            .u_star
            .iter()
            .map(|x| if *x > 0.0 { "+".into() } else { "-".into() })
            .collect();
        println!(
            "min = {}  at [{}]  ({} of {} points attain it)",
            res.value,
            signs.join(""),
            res.count,
            res.size
        );
    }
    Ok(false)
}

fn cmd_sweep(a: SweepArgs) -> Res<bool> {
    let mut cfg = a.run.config()?;
    if let (Some(n), Some(d)) = (a.n, a.d) {
        cfg.grid = vec![[n, d]];
    }
    let out = parameter_sweep(&cfg, a.axis, &a.values)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!(
            "{:<8} {:>12} {:>6} {:>12} {:>10}  statuses",
            "scheme",
            a.axis.to_string(),
            "runs",
            "median_delta",
            "mean_iter"
        );
        for p in &out.points {
            let st: Vec<String> = p.statuses.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            println!(
                "{:<8} {:>12e} {:>6} {:>12.3e} {:>10.1}  {}",
                p.scheme.name(),
                p.value,
                p.runs,
                p.median_delta,
                p.mean_iterations,
                st.join(" ")
            );
        }
        for ((s, dt), (_, it)) in out.delta_trend.iter().zip(&out.iteration_trend) {
            println!("{s}: delta {dt:?}, iterations {it:?}");
        }
    }
    if let Some(p) = &a.out {
        write_jsonl(&out.records, p, true)?;
    }
    Ok(any_diverged(&out.records))
}

fn cmd_table(a: TableArgs) -> Res<bool> {
    let mut records = read_jsonl(&a.runs)?;
    if let Some(e) = a.eps {
        records.retain(|r| r.epsilon == e);
    }
    let text = emit_table(&records, a.layout)?;
    match a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(false)
}

fn cmd_traj(a: TrajArgs) -> Res<bool> {
    let mut cfg = a.run.config()?;
    if cfg.schemes.len() != 1 || cfg.epsilons.len() != 1 {
        return Err("traj needs exactly one --scheme and one --eps".into());
    }
    cfg.keep_trajectories = true;
    let records = run_source(&mut cfg, &a.input, a.n, a.d)?;
    if records.len() != 1 {
        return Err("traj needs a single instance (use --in or --n/--d)".into());
    }
    dump_trajectory(&records[0], &a.out)?;
    eprintln!("{}", summary_line(&records[0]));
    Ok(any_diverged(&records))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Table(a) => cmd_table(a),
        Command::Traj(a) => cmd_traj(a),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
