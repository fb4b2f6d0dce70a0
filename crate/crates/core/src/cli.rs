//! Command-line entry point. Every artifact embeds the resolved run
//! configuration; JSON goes to `<out>/<name>.json`, tables and paths to CSV
//! files whose first line is a `#` comment holding the same configuration.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hypotheses;
use crate::model::{self, InstanceFile, PresetParams, ProblemInstance};
use crate::multiplicity::{self, FindTwoOptions, FindTwoOutcome, ScanOptions, ScanReport};
use crate::optimizer::{self, MinimizeOptions, Minimum};
use crate::path::PeriodicPath;
use crate::plot::{self, Series};
use crate::verify::{self, CertifyOptions, NewtonOptions};
use crate::wellposed::{self, LabOptions, LabProblem, LevelOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "relosc", version, about = "Periodic solutions of relativistic oscillators by action minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Instance description file (JSON).
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// Built-in instance name.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Dimension for presets.
    #[arg(long, global = true, default_value_t = 1)]
    dim: usize,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// `lo:hi:count:log` or `lo:hi:count:lin`.
    #[arg(long = "lambda-grid", global = true)]
    lambda_grid: Option<String>,
    #[arg(long = "grid-n", global = true, default_value_t = 64)]
    grid_n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Stationarity tolerance in residual units.
    #[arg(long = "tol-grad", global = true, default_value_t = 1e-8)]
    tol_grad: f64,
    /// Relative value tolerance for global clusters.
    #[arg(long = "tol-value", global = true, default_value_t = 1e-8)]
    tol_value: f64,
    /// Distance threshold for clustering (default 1e-3·LT).
    #[arg(long = "tol-dist", global = true)]
    tol_dist: Option<f64>,
    /// Number of multistart starts.
    #[arg(long, global = true, default_value_t = 24)]
    starts: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the hypotheses on the instance.
    Check,
    /// Multistart minimization at one λ.
    Minimize {
        /// Write the iteration log of the best run as JSON lines.
        #[arg(long)]
        trace: bool,
    },
    /// Count global minima along a λ grid.
    Scan,
    /// Find two certified global minima.
    FindTwo {
        /// Also run the range check for plateau instances.
        #[arg(long = "range-check")]
        range_check: bool,
    },
    /// Certify a path given as CSV.
    Verify {
        #[arg(long)]
        path: PathBuf,
    },
    /// Periodic solutions by shooting.
    Shoot {
        /// Initial positions along the first axis, comma separated.
        #[arg(long = "u0", default_value = "-2,0,2")]
        u0: String,
        /// Initial momenta along the first axis, comma separated.
        #[arg(long = "w0", default_value = "-1,0,1")]
        w0: String,
        #[arg(long, default_value_t = 1024)]
        steps: usize,
    },
    /// Level-set minimization laboratory.
    Wellposed {
        #[arg(long, default_value = "quadratic")]
        lab: String,
        /// `lo:hi:count` levels for the continuity probe.
        #[arg(long = "r-grid", default_value = "0.25:4:21")]
        r_grid: String,
        /// Level for the well-posedness probe.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 16)]
        trials: usize,
    },
    /// SVG plots from earlier artifacts.
    Report {
        /// Directory holding the artifacts (default: --out).
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

/// Resolved configuration recorded in every artifact.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    subcommand: String,
    source: Value,
    instance: Option<ProblemInstance>,
    lambda: Option<f64>,
    lambda_grid: Option<Vec<f64>>,
    grid_n: usize,
    seed: u64,
    starts: usize,
    tol_grad: f64,
    tol_value: f64,
    tol_dist: Option<f64>,
    extra: Value,
}

struct Run {
    config: RunConfig,
    out: PathBuf,
}

impl Run {
    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        Ok(())
    }

    fn comment(&self) -> String {
        format!("config: {}", serde_json::to_string(&self.config).expect("serializable config"))
    }

    fn write_json(&self, name: &str, body: Value) -> Result<()> {
        let doc = json!({ "config": self.config, "result": body });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(self.out.join(name), text)?;
        Ok(())
    }

    fn write_path(&self, name: &str, p: &PeriodicPath) -> Result<()> {
        p.save_csv(&self.out.join(name), Some(&self.comment()))
    }

    fn write_table(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut f = fs::File::create(self.out.join(name))?;
        writeln!(f, "# {}", self.comment())?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("not a number: {v:?}"))))
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(usage(format!("grid {s:?} is not lo:hi:count[:log|lin]")));
    }
    let num = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("not a number in grid: {v:?}")));
    let count = parts[2].parse::<usize>().map_err(|_| usage(format!("bad grid count {:?}", parts[2])))?;
    let log = match parts.get(3) {
        None | Some(&"log") => true,
        Some(&"lin") => false,
        Some(other) => return Err(usage(format!("grid spacing must be log or lin, got {other:?}"))),
    };
    multiplicity::lambda_grid(num(parts[0])?, num(parts[1])?, count, log)
}

fn load_instance(common: &Common) -> Result<(Value, ProblemInstance)> {
    match (&common.instance, &common.preset) {
        (Some(_), Some(_)) => Err(usage("give either --instance or --preset, not both")),
        (None, None) => Err(usage("an instance is required (--instance FILE or --preset NAME)")),
        (None, Some(name)) => {
            let inst = model::preset(name, &PresetParams { dim: common.dim, z: None })?;
            Ok((json!({ "preset": name, "dim": common.dim }), inst))
        }
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Malformed(format!("cannot read instance file {}: {e}", path.display())))?;
            let inst = InstanceFile::parse(&text)?.build()?;
            Ok((json!({ "instance_file": path.display().to_string() }), inst))
        }
    }
}

fn minimize_options(common: &Common) -> Result<MinimizeOptions> {
    if common.grid_n < 4 {
        return Err(usage("--grid-n must be at least 4"));
    }
    if !(common.tol_grad > 0.0 && common.tol_value > 0.0) || common.tol_dist.is_some_and(|d| !(d > 0.0)) {
        return Err(usage("tolerances must be positive"));
    }
    if common.starts == 0 {
        return Err(usage("--starts must be at least 1"));
    }
    Ok(MinimizeOptions { grid_n: common.grid_n, stationarity_tol: common.tol_grad, seed: common.seed, ..Default::default() })
}

fn scan_options(common: &Common) -> Result<ScanOptions> {
    Ok(ScanOptions {
        minimize: minimize_options(common)?,
        starts: common.starts,
        value_rel_tol: common.tol_value,
        dist_tol: common.tol_dist,
        ..Default::default()
    })
}

fn certify_options(common: &Common) -> Result<CertifyOptions> {
    Ok(CertifyOptions { minimize: minimize_options(common)?, ..Default::default() })
}

fn require_lambda(common: &Common) -> Result<f64> {
    let l = common.lambda.ok_or_else(|| usage("--lambda is required"))?;
    if !l.is_finite() {
        return Err(usage("--lambda must be finite"));
    }
    Ok(l)
}

fn config(common: &Common, subcommand: &str, source: Value, instance: Option<ProblemInstance>) -> RunConfig {
    RunConfig {
        subcommand: subcommand.into(),
        source,
        instance,
        lambda: common.lambda,
        lambda_grid: None,
        grid_n: common.grid_n,
        seed: common.seed,
        starts: common.starts,
        tol_grad: common.tol_grad,
        tol_value: common.tol_value,
        tol_dist: common.tol_dist,
        extra: Value::Null,
    }
}

/// A subcommand ready to execute; construction performs all usage checks.
enum Job {
    Check(ProblemInstance),
    Minimize(ProblemInstance, f64, MinimizeOptions),
    Scan(ProblemInstance, Vec<f64>, ScanOptions),
    FindTwo(ProblemInstance, FindTwoOptions, bool),
    Verify(ProblemInstance, f64, PeriodicPath, CertifyOptions),
    Shoot(ProblemInstance, f64, Vec<(Vec<f64>, Vec<f64>)>, NewtonOptions),
    Wellposed(LabProblem, Vec<f64>, f64, usize),
    Report(PathBuf),
}

fn resolve(cli: &Cli) -> Result<(Job, Run)> {
    let c = &cli.common;
    let name = match &cli.command {
        Command::Check => "check",
        Command::Minimize { .. } => "minimize",
        Command::Scan => "scan",
        Command::FindTwo { .. } => "find-two",
        Command::Verify { .. } => "verify",
        Command::Shoot { .. } => "shoot",
        Command::Wellposed { .. } => "wellposed",
        Command::Report { .. } => "report",
    };
    if c.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let with_instance = |extra: Value| -> Result<(ProblemInstance, RunConfig)> {
        let (source, inst) = load_instance(c)?;
        let mut cfg = config(c, name, source, Some(inst.clone()));
        cfg.extra = extra;
        Ok((inst, cfg))
    };
    let (job, cfg) = match &cli.command {
        Command::Check => {
            let (inst, cfg) = with_instance(Value::Null)?;
            (Job::Check(inst), cfg)
        }
        Command::Minimize { trace } => {
            let (inst, cfg) = with_instance(json!({ "trace": trace }))?;
            let mut opts = minimize_options(c)?;
            opts.record_trace = *trace;
            (Job::Minimize(inst, require_lambda(c)?, opts), cfg)
        }
        Command::Scan => {
            let (inst, mut cfg) = with_instance(Value::Null)?;
            let grid = match &c.lambda_grid {
                Some(g) => parse_grid(g)?,
                None => multiplicity::default_grid(),
            };
            cfg.lambda_grid = Some(grid.clone());
            (Job::Scan(inst, grid, scan_options(c)?), cfg)
        }
        Command::FindTwo { range_check } => {
            let (inst, mut cfg) = with_instance(json!({ "range_check": range_check }))?;
            let mut opts = FindTwoOptions { scan: scan_options(c)?, certify: certify_options(c)?, ..Default::default() };
            if let Some(g) = &c.lambda_grid {
                opts.grid = parse_grid(g)?;
            }
            cfg.lambda_grid = Some(opts.grid.clone());
            (Job::FindTwo(inst, opts, *range_check), cfg)
        }
        Command::Verify { path } => {
            let (inst, cfg) = with_instance(json!({ "path": path.display().to_string() }))?;
            let p = PeriodicPath::load_csv(path)?;
            (Job::Verify(inst, require_lambda(c)?, p, certify_options(c)?), cfg)
        }
        Command::Shoot { u0, w0, steps } => {
            let (inst, cfg) = with_instance(json!({ "u0": u0, "w0": w0, "steps": steps }))?;
            let grid = verify::axis_grid(inst.dim, &parse_list(u0)?, &parse_list(w0)?);
            if *steps < 64 {
                return Err(usage("--steps must be at least 64"));
            }
            let path_nodes = (crate::path::MIN_NODES..=256)
                .rev()
                .find(|n| steps.is_multiple_of(*n))
                .ok_or_else(|| usage("--steps needs a divisor between 4 and 256"))?;
            let opts = NewtonOptions { steps: *steps, path_nodes, ..Default::default() };
            (Job::Shoot(inst, require_lambda(c)?, grid, opts), cfg)
        }
        Command::Wellposed { lab, r_grid, r, trials } => {
            let problem = LabProblem::from_name(lab)?;
            let parts: Vec<&str> = r_grid.split(':').collect();
            if parts.len() != 3 {
                return Err(usage(format!("--r-grid {r_grid:?} is not lo:hi:count")));
            }
            let grid = parse_grid(&format!("{}:lin", r_grid))?;
            let mut cfg = config(c, name, json!({ "lab": lab }), None);
            cfg.extra = json!({ "r_grid": grid, "r": r, "trials": trials });
            (Job::Wellposed(problem, grid, *r, *trials), cfg)
        }
        Command::Report { from } => {
            let dir = from.clone().unwrap_or_else(|| c.out.clone());
            if !dir.is_dir() {
                return Err(Error::Malformed(format!("artifact directory {} does not exist", dir.display())));
            }
            let cfg = config(c, name, json!({ "from": dir.display().to_string() }), None);
            (Job::Report(dir), cfg)
        }
    };
    Ok((job, Run { config: cfg, out: c.out.clone() }))
}

fn minimum_json(m: &Minimum) -> Value {
    serde_json::to_value(m.summary()).expect("serializable")
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn scan_table(run: &Run, scan: &ScanReport) -> Result<()> {
    let rows: Vec<Vec<String>> = scan
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                fmt(r.lambda),
                fmt(r.best_energy),
                r.n_global_clusters.to_string(),
                (scan.detected_index == Some(i)).to_string(),
            ]
        })
        .collect();
    run.write_table("scan.csv", &["lambda", "best_energy", "n_global_clusters", "detected"], &rows)
}

fn execute(job: Job, run: &Run) -> Result<i32> {
    match job {
        Job::Check(inst) => {
            let report = hypotheses::check_all(&inst, run.config.seed)?;
            run.prepare()?;
            run.write_json("check.json", serde_json::to_value(&report)?)?;
            for v in &report.verdicts {
                println!("{}: {:?} {}", v.hypothesis, v.status, v.detail);
            }
            Ok(if report.any_violated() { EXIT_FAILURE } else { EXIT_OK })
        }
        Job::Minimize(inst, lambda, opts) => {
            let results = optimizer::multistart(&inst, lambda, &opts, run.config.starts)?;
            let best = &results[0];
            run.prepare()?;
            run.write_json(
                "minimum.json",
                json!({
                    "minimum": minimum_json(best),
                    "starts": results.iter().map(Minimum::summary).collect::<Vec<_>>(),
                }),
            )?;
            run.write_path("minimum.csv", &best.path)?;
            if opts.record_trace {
                let mut f = fs::File::create(run.out.join("trace.jsonl"))?;
                for rec in &best.trace {
                    writeln!(f, "{}", serde_json::to_string(rec)?)?;
                }
            }
            println!("energy {:.12e} converged {}", best.total(), best.converged);
            Ok(if best.converged { EXIT_OK } else { EXIT_FAILURE })
        }
        Job::Scan(inst, grid, opts) => {
            let scan = multiplicity::lambda_scan(&inst, &grid, &opts)?;
            run.prepare()?;
            scan_table(run, &scan)?;
            run.write_json("scan.json", serde_json::to_value(&scan)?)?;
            if let Some(i) = scan.detected_index {
                for (k, m) in scan.records[i].global_minima.iter().enumerate() {
                    run.write_path(&format!("scan_detected_{k}.csv"), &m.path)?;
                }
            }
            println!("detected lambda: {:?}", scan.detected_lambda);
            Ok(EXIT_OK)
        }
        Job::FindTwo(inst, opts, range_check) => find_two(run, &inst, &opts, range_check),
        Job::Verify(inst, lambda, p, opts) => {
            let start = MinimizeOptions { max_iter: 0, ..opts.minimize.clone() };
            let given = optimizer::minimize(&inst, lambda, &p, &start)?;
            let residual = verify::el_residual(&inst, lambda, &given.path)?;
            let certificate = if given.converged {
                verify::certify(&given, &inst, lambda, &opts)?
            } else {
                verify::Certificate::rejected(lambda, format!("path is not stationary: {:.3e}", residual.max_norm))
            };
            run.prepare()?;
            let rows: Vec<Vec<String>> = residual
                .node_norms()
                .iter()
                .enumerate()
                .map(|(k, r)| vec![k.to_string(), fmt(given.path.time(k)), fmt(*r)])
                .collect();
            run.write_table("residual.csv", &["k", "t", "residual_norm"], &rows)?;
            run.write_json(
                "certificate.json",
                json!({ "residual_max_norm": residual.max_norm, "minimum": minimum_json(&given), "certificate": certificate }),
            )?;
            println!("certificate passed: {}", certificate.passed);
            Ok(if certificate.passed { EXIT_OK } else { EXIT_FAILURE })
        }
        Job::Shoot(inst, lambda, grid, opts) => {
            let rep = verify::solve_by_shooting(&inst, lambda, &grid, &opts)?;
            run.prepare()?;
            let roots: Vec<Value> = rep
                .roots
                .iter()
                .map(|r| json!({ "u0": r.u0, "w0": r.w0, "defect": r.defect, "start_index": r.start_index }))
                .collect();
            for (i, r) in rep.roots.iter().enumerate() {
                run.write_path(&format!("root_{i}.csv"), &r.path)?;
            }
            run.write_json("shoot.json", json!({ "roots": roots, "failures": rep.failures }))?;
            println!("{} root(s)", rep.roots.len());
            Ok(EXIT_OK)
        }
        Job::Wellposed(problem, grid, r, trials) => {
            let opts = LabOptions { seed: run.config.seed, ..Default::default() };
            let ab = wellposed::alpha_beta(&problem, &opts);
            let table = wellposed::continuity_probe(&problem, &grid, &opts)?;
            let probe = wellposed::wellposedness_probe(&problem, r, trials, run.config.seed)?;
            run.prepare()?;
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|row| {
                    let opt = |v: Option<f64>| v.map_or(String::new(), fmt);
                    match &row.outcome {
                        LevelOutcome::Solved { x, lambda, j, .. } => {
                            let mut v = vec![fmt(row.r), "solved".into()];
                            v.extend(x.iter().map(|c| fmt(*c)));
                            v.extend([fmt(*j), fmt(*lambda), opt(row.x_ratio), opt(row.j_ratio)]);
                            v
                        }
                        LevelOutcome::Stall { lambda_lo, lambda_hi, .. } => {
                            let mut v = vec![fmt(row.r), "stall".into()];
                            v.extend(std::iter::repeat_n(String::new(), problem_dim(&problem) + 1));
                            v.extend([fmt(0.5 * (lambda_lo + lambda_hi)), String::new(), String::new()]);
                            v
                        }
                    }
                })
                .collect();
            let mut header = vec!["r".to_string(), "status".to_string()];
            header.extend((1..=problem_dim(&problem)).map(|i| format!("x_{i}")));
            header.extend(["J".into(), "lambda".into(), "x_ratio".into(), "j_ratio".into()]);
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            run.write_table("continuity.csv", &header, &rows)?;
            let prow: Vec<Vec<String>> = probe
                .eps
                .iter()
                .zip(probe.max_distance.iter().zip(&probe.mean_distance))
                .map(|(e, (m, a))| vec![fmt(*e), fmt(*m), fmt(*a)])
                .collect();
            run.write_table("wellposedness.csv", &["eps", "max_distance", "mean_distance"], &prow)?;
            run.write_json("wellposed.json", json!({ "alpha_beta": ab, "continuity": table, "wellposedness": probe }))?;
            println!("alpha {} beta {} well-posed {} discontinuity {}", ab.alpha, ab.beta, probe.well_posed, table.discontinuity);
            Ok(EXIT_OK)
        }
        Job::Report(dir) => report(run, &dir),
    }
}

fn problem_dim(p: &LabProblem) -> usize {
    use wellposed::ScalarizedProblem;
    p.dim()
}

fn find_two(run: &Run, inst: &ProblemInstance, opts: &FindTwoOptions, range_check: bool) -> Result<i32> {
    let (outcome, range) = if range_check {
        let r = multiplicity::range_exclusion_driver(inst, opts)?;
        let summary = json!({
            "lambda": r.lambda,
            "min_norm": r.min_norm,
            "threshold": r.threshold,
            "zero_path_energy": r.zero_path_energy,
            "minimizer": r.minimizer.as_ref().map(minimum_json),
            "passed": r.passed,
        });
        (r.outcome, Some((summary, r.passed)))
    } else {
        (multiplicity::find_two_minima(inst, opts)?, None)
    };
    run.prepare()?;
    scan_table(run, outcome.scan())?;
    let (kind, body, ok) = match &outcome {
        FindTwoOutcome::Found(p) => {
            run.write_path("minimum_a.csv", &p.pair.0.path)?;
            run.write_path("minimum_b.csv", &p.pair.1.path)?;
            (
                "found",
                json!({
                    "lambda": p.lambda,
                    "onset_bracket": [p.onset_bracket.0, p.onset_bracket.1],
                    "energy_gap": p.energy_gap,
                    "separation": p.separation,
                    "minima": [minimum_json(&p.pair.0), minimum_json(&p.pair.1)],
                    "certificates": [p.certificates.0, p.certificates.1],
                }),
                true,
            )
        }
        FindTwoOutcome::NotDetected(_) => ("not-detected", Value::Null, false),
        FindTwoOutcome::Unbounded { report, .. } => ("unbounded", serde_json::to_value(report)?, false),
        FindTwoOutcome::CertificationFailed { lambda, certificates, .. } => {
            ("certification-failed", json!({ "lambda": lambda, "certificates": certificates }), false)
        }
    };
    let mut doc = json!({ "outcome": kind, "detail": body, "scan": outcome.scan() });
    let mut passed = ok;
    if let Some((summary, range_ok)) = range {
        doc["range_check"] = summary;
        passed &= range_ok;
    }
    run.write_json("find_two.json", doc)?;
    println!("find-two: {kind}");
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect());
    }
    Ok((header, rows))
}

fn report(run: &Run, dir: &Path) -> Result<i32> {
    let mut entries: Vec<PathBuf> =
        fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "csv")).collect();
    entries.sort();
    let mut written = Vec::new();
    run.prepare()?;
    let mut path_series = Vec::new();
    for file in &entries {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let (header, rows) = read_table(file)?;
        if stem == "scan" {
            let series = Series { name: "best energy".into(), points: rows.iter().map(|r| (r[0], r[1])).collect() };
            fs::write(run.out.join("energy_vs_lambda.svg"), plot::line_plot("Best energy", "lambda", "energy", &[series], true))?;
            written.push("energy_vs_lambda.svg");
        } else if stem == "residual" {
            let values: Vec<f64> = rows.iter().map(|r| r[2].max(1e-300).log10()).collect();
            fs::write(run.out.join("residual_histogram.svg"), plot::histogram("Residual norms", "log10 |r_k|", &values, 20))?;
            written.push("residual_histogram.svg");
        } else if header.first().map(String::as_str) == Some("t") && header.len() >= 2 {
            for (i, name) in header.iter().enumerate().skip(1) {
                path_series.push(Series {
                    name: format!("{stem} {name}"),
                    points: rows.iter().map(|r| (r[0], r[i])).collect(),
                });
            }
        }
    }
    if !path_series.is_empty() {
        fs::write(run.out.join("paths.svg"), plot::line_plot("Paths", "t", "u_i(t)", &path_series, false))?;
        written.push("paths.svg");
    }
    if written.is_empty() {
        return Err(Error::Malformed(format!("no plottable artifacts in {}", dir.display())));
    }
    println!("wrote {}", written.join(", "));
    Ok(EXIT_OK)
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_)
            | Error::UnknownPreset(_)
            | Error::Malformed(_)
            | Error::DimensionMismatch { .. }
            | Error::PeriodMismatch(..)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_)
    )
}

/// Parses `args` (program name first) and runs the subcommand; returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (job, run) = match resolve(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return if is_usage(&e) { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };
    let go = || match execute(job, &run) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    };
    match cli.common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        },
        None => go(),
    }
}
