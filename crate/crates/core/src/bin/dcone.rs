use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dcone_core::elastica::{minimize, sweep_epsilon, write_profile_csv, Init, SolverConfig};
use dcone_core::linear_problem::{global_minimizer_search, interval_checks, IntervalCheck, LinearSolution};
use dcone_core::recovery::recovery_convergence;
use dcone_core::selftest::selftest;
use dcone_core::sphere_curve::{
    arclength_curve_from_graph, fmt_f64, read_curve_csv, read_curve_json, write_curve_csv,
};
use dcone_core::Error;

const EXIT_ASSERTION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_RUNTIME: u8 = 1;

#[derive(Parser)]
#[command(name = "dcone", version, about = "Folded-cone shapes: linear problem, elastica solver, recovery energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the linearized one-fold problem and check its bounds.
    LinearSolve(LinearArgs),
    /// Minimize the obstacle elastica at one obstacle height.
    Elastica(ElasticaArgs),
    /// Solve over decreasing obstacle heights and compare with the linear problem.
    Sweep(SweepArgs),
    /// Recovery energies of smoothed cones over a curve.
    Gamma(GammaArgs),
    /// Run the seeded check battery and print its report.
    Selftest(SelftestArgs),
}

#[derive(Args, Serialize)]
struct LinearArgs {
    /// Write the solution as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the sampled profile `s,h,kappa` as CSV.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Samples of the profile.
    #[arg(long, default_value_t = 4096)]
    profile_n: usize,
    /// Also run the one-fold against two-fold certificate.
    #[arg(long)]
    certify: bool,
    /// Directory for the run manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ElasticaArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// `one-bump`, `two-bump` or a CSV file with an `alpha` column.
    #[arg(long)]
    init: Option<String>,
    /// JSON file with any of `epsilon, n, max_iters, tol, penalty0, init`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    penalty0: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ElasticaConfig {
    epsilon: f64,
    n: usize,
    max_iters: usize,
    tol: f64,
    penalty0: f64,
    init: String,
}

impl Default for ElasticaConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            epsilon: 0.05,
            n: 2048,
            max_iters: s.max_iters,
            tol: s.tol,
            penalty0: s.penalty0,
            init: "one-bump".into(),
        }
    }
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02,0.01")]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().penalty0)]
    penalty0: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GammaArgs {
    /// Unit-speed curve of length 2 pi, as `param,x,y,z` CSV or curve JSON.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
    h_list: Vec<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SelftestArgs {
    /// Also write the report to `selftest.json` in this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    subcommand: &'a str,
    version: &'a str,
    config: &'a C,
    config_hash: String,
    threads: usize,
    started_unix_s: f64,
    wall_time_s: f64,
    outputs: Vec<String>,
}

/// Failure of a subcommand with its exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) | Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(EXIT_RUNTIME, e.to_string())
    }
}

type Outcome = std::result::Result<u8, Failure>;

struct Run {
    name: &'static str,
    out: PathBuf,
    started: Instant,
    started_unix_s: f64,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new(name: &'static str, out: &Path) -> Self {
        let started_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        Self {
            name,
            out: out.to_path_buf(),
            started: Instant::now(),
            started_unix_s,
            outputs: Vec::new(),
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn create(&mut self, path: PathBuf) -> Result<BufWriter<File>, Failure> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let f = File::create(&path)?;
        self.outputs.push(path);
        Ok(BufWriter::new(f))
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<(), Failure> {
        use std::io::Write;
        let mut w = self.create(path)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn finish<C: Serialize>(self, config: &C) -> Result<(), Failure> {
        let canonical = serde_json::to_string(config).map_err(Error::from)?;
        let hash = Sha256::digest(canonical.as_bytes());
        let manifest = Manifest {
            subcommand: self.name,
            version: env!("CARGO_PKG_VERSION"),
            config,
            config_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            threads: rayon::current_num_threads(),
            started_unix_s: self.started_unix_s,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn report_checks(checks: &[IntervalCheck]) -> bool {
    let mut ok = true;
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("failed: {} ({} {} {})", c.name, fmt_f64(c.value), c.relation, fmt_f64(c.bound));
        ok = false;
    }
    ok
}

fn linear_solve(args: LinearArgs) -> Outcome {
    let mut run = Run::new("linear-solve", &args.out);
    let sol = LinearSolution::solve()?;
    println!("s_hat = {}", sol.s_hat);
    println!("Lambda = {}", sol.lambda);
    println!("energy = {}", sol.energy);
    println!("fold_length = {}", sol.fold_length());
    let mut checks = interval_checks(&sol);
    if args.certify {
        let (_, cert) = global_minimizer_search()?;
        let two = cert.best_two_fold.as_ref().map_or(f64::INFINITY, |c| c.energy);
        println!("N=1 energy = {}", cert.one_fold.energy);
        println!("N=2 energy = {two}");
        if cert.passed() {
            println!("N=1 energy ≤ 67.4 < 80 ≤ N=2 energy");
        }
        checks.extend(cert.checks);
    }
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&sol).map_err(Error::from)?;
        run.write(p.clone(), &text)?;
    }
    if let Some(p) = &args.profile {
        let samples = sol.sample(args.profile_n)?;
        let w = run.create(p.clone())?;
        samples.write_csv(w)?;
    }
    if !run.outputs.is_empty() {
        run.finish(&args)?;
    }
    Ok(if report_checks(&checks) { 0 } else { EXIT_ASSERTION })
}

fn read_alpha_column(path: &Path) -> Result<Vec<f64>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(Error::from)?;
    let col = r
        .headers()
        .map_err(Error::from)?
        .iter()
        .position(|h| h.trim() == "alpha")
        .ok_or_else(|| Failure(EXIT_USAGE, format!("{}: no alpha column", path.display())))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(Error::from)?;
        let v = rec
            .get(col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Failure(EXIT_USAGE, format!("{}: bad alpha value", path.display())))?;
        out.push(v);
    }
    Ok(out)
}

fn elastica(args: ElasticaArgs) -> Outcome {
    let mut cfg = match &args.config {
        Some(p) => serde_json::from_str::<ElasticaConfig>(&fs::read_to_string(p)?)
            .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", p.display())))?,
        None => ElasticaConfig::default(),
    };
    if let Some(v) = args.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = &args.init {
        cfg.init = v.clone();
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    if let Some(v) = args.penalty0 {
        cfg.penalty0 = v;
    }
    let init = match cfg.init.as_str() {
        "one-bump" => Init::OneBump,
        "two-bump" => Init::TwoBump,
        file => Init::Profile(read_alpha_column(Path::new(file))?),
    };
    let solver = SolverConfig {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        penalty0: cfg.penalty0,
        init: Some(init),
    };
    let mut run = Run::new("elastica", &args.out);
    let code = match minimize(cfg.epsilon, cfg.n, &solver) {
        Ok(sol) => {
            let r = &sol.report;
            println!("energy = {}", r.final_energy);
            println!("lift_intervals = {}", r.lift_intervals.len());
            println!("lambda_hat = {}", r.lambda_hat);
            println!("converged = {}", r.converged);
            run.write(run.path("report.json"), &r.to_json()?)?;
            let w = run.create(run.path("profile.csv"))?;
            write_profile_csv(&sol.curve, w)?;
            let curve = arclength_curve_from_graph(&sol.curve.alpha, sol.curve.len())?;
            let w = run.create(run.path("curve.csv"))?;
            write_curve_csv(&curve, w)?;
            if r.converged {
                0
            } else {
                eprintln!("not converged: {}", r.message);
                EXIT_SOLVER
            }
        }
        Err(e @ (Error::InvalidConfig(_) | Error::DimensionMismatch { .. })) => {
            return Err(Failure(EXIT_USAGE, e.to_string()));
        }
        Err(e) => {
            eprintln!("{e}");
            let failed = serde_json::json!({
                "epsilon": cfg.epsilon,
                "n": cfg.n,
                "converged": false,
                "message": e.to_string(),
            });
            let text = serde_json::to_string_pretty(&failed).map_err(Error::from)?;
            run.write(run.path("report.json"), &text)?;
            EXIT_SOLVER
        }
    };
    run.finish(&cfg)?;
    Ok(code)
}

fn sweep(args: SweepArgs) -> Outcome {
    let mut run = Run::new("sweep", &args.out);
    let solver = SolverConfig {
        max_iters: args.max_iters,
        tol: args.tol,
        penalty0: args.penalty0,
        init: None,
    };
    let table = sweep_epsilon(&args.eps_list, args.n, &solver)?;
    let w = run.create(run.path("sweep.csv"))?;
    table.write_csv(w)?;
    let text = serde_json::to_string_pretty(&table).map_err(Error::from)?;
    run.write(run.path("sweep.json"), &text)?;
    for r in &table.rows {
        println!(
            "eps = {} converged = {} lifts = {} lift_length = {} energy_ratio = {}",
            r.epsilon, r.converged, r.lift_count, r.lift_length, r.energy_ratio
        );
    }
    run.finish(&args)?;
    Ok(if report_checks(&table.checks) { 0 } else { EXIT_ASSERTION })
}

fn gamma(args: GammaArgs) -> Outcome {
    let file = File::open(&args.curve)?;
    let curve = if args.curve.extension().is_some_and(|e| e == "json") {
        read_curve_json(file)?
    } else {
        read_curve_csv(file)?
    };
    let mut run = Run::new("gamma", &args.out);
    let table = recovery_convergence(&curve, &args.h_list)?;
    let w = run.create(run.path("recovery.csv"))?;
    table.write_csv(w)?;
    let text = serde_json::to_string_pretty(&table).map_err(Error::from)?;
    run.write(run.path("recovery.json"), &text)?;
    println!("limit_energy = {}", table.limit_energy);
    println!("fitted_a = {}", table.fitted_a);
    println!("slope = {}", table.slope);
    run.finish(&args)?;
    if table.slope_ok() {
        Ok(0)
    } else {
        eprintln!("failed: slope {} outside 1 +- {}", table.slope, dcone_core::recovery::SLOPE_TOL);
        Ok(EXIT_ASSERTION)
    }
}

fn selftest_cmd(args: SelftestArgs) -> Outcome {
    let report = selftest()?;
    let text = report.to_json()?;
    println!("{text}");
    if let Some(dir) = &args.out {
        let mut run = Run::new("selftest", dir);
        run.write(run.path("selftest.json"), &text)?;
        run.finish(&args)?;
    }
    Ok(if report_checks(&report.checks) { 0 } else { EXIT_ASSERTION })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("DCONE_THREADS") else {
        return Ok(());
    };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| Failure(EXIT_USAGE, format!("DCONE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| Failure(EXIT_RUNTIME, e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::LinearSolve(a) => linear_solve(a),
        Command::Elastica(a) => elastica(a),
        Command::Sweep(a) => sweep(a),
        Command::Gamma(a) => gamma(a),
        Command::Selftest(a) => selftest_cmd(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
