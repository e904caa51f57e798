//! Command-line front end. Every run writes its data file plus a JSON
//! manifest (command, resolved parameters, seed, version, wall time), and
//! outputs are byte-identical for identical (config, seed) regardless of
//! the thread count.

use clap::{Args, Parser, Subcommand};
use nonpisot::algebra::{gcd_facts_check, pf_data, QLambda, ZLambda, LAMBDA};
use nonpisot::cocycle::{
    contracting_direction, det_limit_inward, ida_dimension, inward_lyapunov, jensen_integral,
    kron_algebra_real_dimension, outward_lyapunov, positivity_threshold, torus_mean_log_norm,
};
use nonpisot::config::{parse_str, Config};
use nonpisot::correlation::{base_system_solve, extend_table, CorrelationTable};
use nonpisot::diffraction::{bragg_scan, distribution_function, BraggClass};
use nonpisot::inflation::{balanced_weights, geometric_patch};
use nonpisot::mat::{c, C};
use nonpisot::verify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "nonpisot",
    version,
    about = "Inflation point sets, pair correlations, Fourier cocycles and \
             diffraction for the binary non-Pisot substitution 0 -> 0111, 1 -> 0",
    after_help = "Parameter precedence: command-line flags > config file \
                  (flat `key = value` lines, keys match the long flag names) \
                  > built-in defaults."
)]
struct Cli {
    /// Flat key=value config file supplying defaults for the flags below.
    #[arg(long, global = true)]
    config: Option<String>,
    /// RNG seed stamped into the manifest and used wherever sampling occurs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file path (defaults to <command>.<format> in the working directory).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    emit: Option<String>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the geometric patch of a given inflation level.
    Gen(GenArgs),
    /// Exact pair-correlation tables.
    Corr(CorrArgs),
    /// Exact ring facts and cocycle algebra dimensions.
    Algebra(AlgebraArgs),
    /// Lyapunov exponents of the inward and outward iterations.
    Lyapunov(LyapunovArgs),
    /// Torus-mean quadrature bounding the outward exponents.
    Torusmean(TorusmeanArgs),
    /// Diffraction: distribution function and Bragg scaling scans.
    #[command(subcommand)]
    Diffraction(DiffractionCmd),
    /// Run the full acceptance suite and print a pass/fail table.
    VerifyAll(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Inflation level L; the patch covers [-lambda^(2L+1), lambda^(2L+1)).
    #[arg(long)]
    level: Option<u32>,
    /// Tile weights: "balanced" or two comma-separated reals like "1,1".
    #[arg(long)]
    u: Option<String>,
}

#[derive(Args)]
struct CorrArgs {
    /// Emit only the exactly solved base table for |z| <= 1 + lambda.
    #[arg(long)]
    base: bool,
    /// Extend the table to all distances |z| <= bound (integer).
    #[arg(long)]
    bound: Option<i64>,
}

#[derive(Args)]
struct AlgebraArgs {
    /// Depth for the exact lambda-power gcd facts.
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Args)]
struct LyapunovArgs {
    /// inward | contracting | outward | det-inward | jensen
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    /// Iteration depth.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct TorusmeanArgs {
    /// Cocycle depth of the averaged product.
    #[arg(long)]
    n: Option<usize>,
    /// Refinement stop: difference between consecutive panel doublings.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum DiffractionCmd {
    /// Distribution function F(x) = int_0^x |S(k)|^2/(2r) dk.
    F(DiffFArgs),
    /// Bragg scaling of |S(k)/(2r)|^2 across patch levels.
    Scan(DiffScanArgs),
}

#[derive(Args)]
struct DiffFArgs {
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    xmax: Option<f64>,
    /// Number of output grid intervals.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
}

#[derive(Args)]
struct DiffScanArgs {
    #[arg(long)]
    u: Option<String>,
    /// Comma-separated list of frequencies.
    #[arg(long)]
    k: Option<String>,
    /// Inclusive level range "a..b" or a comma-separated list.
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Smaller patches and depths; same checks and (almost all) tolerances.
    #[arg(long)]
    quick: bool,
}

/// 17 significant digits, the full information content of an f64.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn q_str(v: &QLambda) -> String {
    format!("{}+{}*lambda", v.p, v.q)
}

struct Run {
    config: Config,
    seed: u64,
    out: Option<String>,
    emit: String,
    params: BTreeMap<String, Value>,
    started: Instant,
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError { message: message.into(), code: 2 }
}

impl Run {
    fn resolve_f64(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self
                .config
                .get_f64(key)
                .map_err(|e| invalid(e.to_string()))?
                .unwrap_or(default),
        };
        self.params.insert(key.into(), json!(v));
        Ok(v)
    }

    fn resolve_u32(&mut self, key: &str, flag: Option<u32>, default: u32) -> Result<u32, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self
                .config
                .get_u32(key)
                .map_err(|e| invalid(e.to_string()))?
                .unwrap_or(default),
        };
        self.params.insert(key.into(), json!(v));
        Ok(v)
    }

    fn resolve_usize(
        &mut self,
        key: &str,
        flag: Option<usize>,
        default: usize,
    ) -> Result<usize, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self
                .config
                .get_usize(key)
                .map_err(|e| invalid(e.to_string()))?
                .unwrap_or(default),
        };
        self.params.insert(key.into(), json!(v));
        Ok(v)
    }

    fn resolve_str(&mut self, key: &str, flag: Option<String>, default: &str) -> String {
        let v = flag
            .or_else(|| self.config.get(key).map(str::to_string))
            .unwrap_or_else(|| default.to_string());
        self.params.insert(key.into(), json!(v));
        v
    }

    fn write_output(&self, command: &str, ext: &str, data: &str) -> Result<String, CliError> {
        let path = self
            .out
            .clone()
            .unwrap_or_else(|| format!("{command}.{ext}"));
        std::fs::write(&path, data)
            .map_err(|e| invalid(format!("cannot write {path}: {e}")))?;
        let manifest = json!({
            "command": command,
            "parameters": self.params,
            "seed": self.seed,
            "format": ext,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_seconds": self.started.elapsed().as_secs_f64(),
            "output": path,
        });
        let manifest_path = format!("{path}.manifest.json");
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())
            .map_err(|e| invalid(format!("cannot write {manifest_path}: {e}")))?;
        Ok(path)
    }
}

fn parse_weights(spec: &str) -> Result<[C; 2], CliError> {
    if spec == "balanced" {
        return Ok(balanced_weights());
    }
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(invalid(format!(
            "weights must be \"balanced\" or two comma-separated reals, got {spec:?}"
        )));
    }
    let mut u = [c(0.0, 0.0); 2];
    for (i, p) in parts.iter().enumerate() {
        let v: f64 = p
            .trim()
            .parse()
            .map_err(|_| invalid(format!("cannot parse weight {p:?}")))?;
        u[i] = c(v, 0.0);
    }
    Ok(u)
}

fn parse_levels(spec: &str) -> Result<Vec<u32>, CliError> {
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| invalid(format!("bad level {a:?}")))?;
        let hi: u32 = b.trim().parse().map_err(|_| invalid(format!("bad level {b:?}")))?;
        if lo > hi {
            return Err(invalid(format!("empty level range {spec:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse().map_err(|_| invalid(format!("bad level {p:?}"))))
        .collect()
}

fn parse_k_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|p| p.trim().parse().map_err(|_| invalid(format!("bad frequency {p:?}"))))
        .collect()
}

fn corr_csv(table: &CorrelationTable) -> String {
    let mut out = String::from("z_a,z_b,z,nu00,nu01,nu10,nu11\n");
    for (z, vals) in &table.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            z.a,
            z.b,
            fmt17(z.to_f64()),
            q_str(&vals[0]),
            q_str(&vals[1]),
            q_str(&vals[2]),
            q_str(&vals[3]),
        );
    }
    out
}

fn run_gen(run: &mut Run, args: GenArgs) -> Result<(), CliError> {
    let level = run.resolve_u32("level", args.level, 3)?;
    let spec = run.resolve_str("u", args.u, "1,1");
    let u = parse_weights(&spec)?;
    let patch = geometric_patch(level, u);
    let data = if run.emit == "csv" {
        let mut out = String::from("pos_a,pos_b,pos,tile,weight_re,weight_im\n");
        for (idx, p) in patch.points.iter().enumerate() {
            let w = patch.weight_at(idx);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.a,
                p.b,
                fmt17(p.position_f64()),
                p.tile,
                fmt17(w.re),
                fmt17(w.im)
            );
        }
        out
    } else {
        let rows: Vec<Value> = patch
            .points
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let w = patch.weight_at(idx);
                json!({
                    "pos_a": p.a, "pos_b": p.b, "pos": p.position_f64(),
                    "tile": p.tile, "weight_re": w.re, "weight_im": w.im,
                })
            })
            .collect();
        serde_json::to_string_pretty(&json!({
            "level": level,
            "radius": patch.radius(),
            "origin_index": patch.origin_index,
            "points": rows,
        }))
        .unwrap()
    };
    let ext = run.emit.clone();
    let path = run.write_output("gen", &ext, &data)?;
    println!("gen: {} points (level {level}) -> {path}", patch.points.len());
    Ok(())
}

fn run_corr(run: &mut Run, args: CorrArgs) -> Result<(), CliError> {
    if args.base && args.bound.is_some() {
        return Err(invalid("--base and --bound are mutually exclusive"));
    }
    let base = base_system_solve();
    let (table, label) = if args.base || args.bound.is_none() && run.config.get("bound").is_none() {
        run.params.insert("base".into(), json!(true));
        (base, "base".to_string())
    } else {
        let bound = match args.bound {
            Some(b) => b,
            None => run
                .config
                .get_u64("bound")
                .map_err(|e| invalid(e.to_string()))?
                .unwrap_or(10) as i64,
        };
        if bound <= 0 {
            return Err(invalid("--bound must be positive"));
        }
        run.params.insert("bound".into(), json!(bound));
        (extend_table(&base, &ZLambda::new(bound, 0)), format!("bound {bound}"))
    };
    let data = if run.emit == "csv" {
        corr_csv(&table)
    } else {
        let rows: Vec<Value> = table
            .entries
            .iter()
            .map(|(z, vals)| {
                json!({
                    "z_a": z.a.to_string(), "z_b": z.b.to_string(), "z": z.to_f64(),
                    "nu00": q_str(&vals[0]), "nu01": q_str(&vals[1]),
                    "nu10": q_str(&vals[2]), "nu11": q_str(&vals[3]),
                })
            })
            .collect();
        serde_json::to_string_pretty(&rows).unwrap()
    };
    let ext = run.emit.clone();
    let path = run.write_output("corr", &ext, &data)?;
    println!("corr ({label}): {} distances -> {path}", table.entries.len());
    Ok(())
}

fn run_algebra(run: &mut Run, args: AlgebraArgs) -> Result<(), CliError> {
    let n = run.resolve_u32("n", args.n, 40)?;
    let gcd = gcd_facts_check(n);
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let sample: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..2.0)).collect();
    let pf = pf_data();
    let report = json!({
        "lambda": fmt17(LAMBDA),
        "gcd_facts_depth": n,
        "gcd_facts": match &gcd { Ok(()) => "ok".to_string(), Err(e) => e.clone() },
        "ida_dimension_len1": ida_dimension(1),
        "ida_dimension_len2": ida_dimension(2),
        "kron_algebra_real_dimension": kron_algebra_real_dimension(&sample),
        "kron_sample_ks": sample,
        "positivity_threshold": fmt17(positivity_threshold()),
        "density": fmt17(pf.density.to_f64()),
        "frequencies": [fmt17(pf.freq[0].to_f64()), fmt17(pf.freq[1].to_f64())],
    });
    let data = serde_json::to_string_pretty(&report).unwrap();
    let path = run.write_output("algebra", "json", &data)?;
    println!("algebra: gcd facts to n = {n} {} -> {path}", if gcd.is_ok() { "ok" } else { "FAILED" });
    if gcd.is_err() {
        return Err(CliError { message: "gcd facts failed".into(), code: 1 });
    }
    Ok(())
}

fn run_lyapunov(run: &mut Run, args: LyapunovArgs) -> Result<(), CliError> {
    let mode = run.resolve_str("mode", args.mode, "inward");
    let k = run.resolve_f64("k", args.k, 0.01)?;
    let n = run.resolve_usize("n", args.n, 300)?;
    let report = match mode.as_str() {
        "inward" => {
            let tr = inward_lyapunov(k, [c(1.0, 0.0), c(1.0, 0.0)], n);
            json!({ "mode": mode, "k": k, "n": n, "exponent": fmt17(tr.slope) })
        }
        "contracting" => {
            let res = contracting_direction(k, n).map_err(|e| invalid(e.to_string()))?;
            json!({
                "mode": mode, "k": k, "n": n,
                "exponent": fmt17(res.trace.slope),
                "direction": [
                    [fmt17(res.start_original[0].re), fmt17(res.start_original[0].im)],
                    [fmt17(res.start_original[1].re), fmt17(res.start_original[1].im)],
                ],
            })
        }
        "outward" => {
            let out = outward_lyapunov(k, n).map_err(|e| invalid(e.to_string()))?;
            json!({
                "mode": mode, "k": k, "n": n,
                "chi1": fmt17(out.chi1),
                "chi2": fmt17(out.chi2),
                "consistency": fmt17(out.consistency),
                "det_average": fmt17(out.det_average),
            })
        }
        "det-inward" => {
            let v = det_limit_inward(k, n).map_err(|e| invalid(e.to_string()))?;
            json!({ "mode": mode, "k": k, "n": n, "value": fmt17(v), "target": fmt17(3.0f64.ln()) })
        }
        "jensen" => {
            json!({ "mode": mode, "value": fmt17(jensen_integral()), "target": 0.0 })
        }
        other => return Err(invalid(format!("unknown lyapunov mode {other:?}"))),
    };
    let data = serde_json::to_string_pretty(&report).unwrap();
    let path = run.write_output("lyapunov", "json", &data)?;
    println!("lyapunov {mode}: -> {path}");
    Ok(())
}

fn run_torusmean(run: &mut Run, args: TorusmeanArgs) -> Result<(), CliError> {
    let n = run.resolve_usize("n", args.n, 4)?;
    let tol = run.resolve_f64("tol", args.tol, 1e-3)?;
    if n == 0 || tol <= 0.0 {
        return Err(invalid("torusmean needs n >= 1 and tol > 0"));
    }
    let result = torus_mean_log_norm(n, tol);
    let report = json!({
        "n": n,
        "tol": tol,
        "value": fmt17(result.value),
        "history": result.history.iter()
            .map(|&(panels, v)| json!([panels, fmt17(v)])).collect::<Vec<_>>(),
        "log_sqrt_lambda": fmt17(LAMBDA.ln() / 2.0),
        "gap": fmt17(LAMBDA.ln() / 2.0 - result.value),
    });
    let data = serde_json::to_string_pretty(&report).unwrap();
    let path = run.write_output("torusmean", "json", &data)?;
    println!("torusmean: value = {:.6} -> {path}", result.value);
    Ok(())
}

fn run_diffraction_f(run: &mut Run, args: DiffFArgs) -> Result<(), CliError> {
    let spec = run.resolve_str("u", args.u, "balanced");
    let u = parse_weights(&spec)?;
    let xmax = run.resolve_f64("xmax", args.xmax, 3.0)?;
    let grid = run.resolve_usize("grid", args.grid, 1500)?;
    let level = run.resolve_u32("level", args.level, 8)?;
    if xmax <= 0.0 || grid == 0 || level < 2 {
        return Err(invalid("diffraction F needs xmax > 0, grid >= 1, level >= 2"));
    }
    let curve = distribution_function(&u, xmax, grid, level);
    let prev = distribution_function(&u, xmax, grid, level - 1);
    let rel = ((curve.values.last().unwrap() - prev.values.last().unwrap())
        / curve.values.last().unwrap())
    .abs();
    if rel > 0.02 {
        eprintln!(
            "warning: levels {} and {level} differ by {:.2}% at x = {xmax}",
            level - 1,
            100.0 * rel
        );
    }
    let data = if run.emit == "csv" {
        let mut out = String::from("x,F,F_prev_level,delta\n");
        for i in 0..curve.xs.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt17(curve.xs[i]),
                fmt17(curve.values[i]),
                fmt17(prev.values[i]),
                fmt17(curve.values[i] - prev.values[i])
            );
        }
        out
    } else {
        serde_json::to_string_pretty(&json!({
            "level": level,
            "average_slope": fmt17(curve.average_slope),
            "panel_width": fmt17(curve.panel_width),
            "xs": curve.xs,
            "F": curve.values,
            "F_prev_level": prev.values,
        }))
        .unwrap()
    };
    let ext = run.emit.clone();
    let path = run.write_output("diffraction-f", &ext, &data)?;
    println!(
        "diffraction F: level {level}, F({xmax})/{xmax} = {:.5} -> {path}",
        curve.average_slope
    );
    Ok(())
}

fn run_diffraction_scan(run: &mut Run, args: DiffScanArgs) -> Result<(), CliError> {
    let spec = run.resolve_str("u", args.u, "1,1");
    let u = parse_weights(&spec)?;
    let k_spec = run.resolve_str("k", args.k, "0,0.5,1");
    let ks = parse_k_list(&k_spec)?;
    let level_spec = run.resolve_str("levels", args.levels, "5..9");
    let levels = parse_levels(&level_spec)?;
    let report = bragg_scan(&u, &ks, &levels);
    let rows: Vec<Value> = report
        .iter()
        .map(|p| {
            json!({
                "k": p.k,
                "class": match p.class { BraggClass::Bragg => "bragg", BraggClass::Continuous => "continuous" },
                "intensity": fmt17(p.intensity),
                "per_level": p.per_level.iter()
                    .map(|&(l, v)| json!([l, fmt17(v)])).collect::<Vec<_>>(),
            })
        })
        .collect();
    let data = serde_json::to_string_pretty(&rows).unwrap();
    let path = run.write_output("diffraction-scan", "json", &data)?;
    let bragg = report.iter().filter(|p| p.class == BraggClass::Bragg).count();
    println!("diffraction scan: {} frequencies, {bragg} Bragg -> {path}", report.len());
    Ok(())
}

fn run_verify(run: &mut Run, args: VerifyArgs) -> Result<(), CliError> {
    run.params.insert("quick".into(), json!(args.quick));
    let results = verify::run_all(args.quick);
    for r in &results {
        println!("{}", r.line());
    }
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "id": r.id, "name": r.name, "passed": r.passed,
                "measured": r.measured, "target": r.target, "seconds": r.seconds,
            })
        })
        .collect();
    let data = serde_json::to_string_pretty(&rows).unwrap();
    let path = run.write_output("verify-all", "json", &data)?;
    let failures = results.iter().filter(|r| !r.passed).count();
    println!(
        "verify-all: {}/{} passed -> {path}",
        results.len() - failures,
        results.len()
    );
    if failures > 0 {
        return Err(CliError { message: format!("{failures} criteria failed"), code: 1 });
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config {path}: {e}")))?;
            parse_str(&text).map_err(|e| invalid(e.to_string()))?
        }
        None => Config::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config
            .get_u64("seed")
            .map_err(|e| invalid(e.to_string()))?
            .unwrap_or(0),
    };
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
    }
    let emit = cli
        .emit
        .clone()
        .or_else(|| config.get("emit").map(str::to_string))
        .unwrap_or_else(|| "csv".to_string());
    if emit != "csv" && emit != "json" {
        return Err(invalid(format!("emit must be csv or json, got {emit:?}")));
    }
    let mut run = Run {
        config,
        seed,
        out: cli.out,
        emit,
        params: BTreeMap::new(),
        started: Instant::now(),
    };
    match cli.command {
        Command::Gen(a) => run_gen(&mut run, a),
        Command::Corr(a) => run_corr(&mut run, a),
        Command::Algebra(a) => run_algebra(&mut run, a),
        Command::Lyapunov(a) => run_lyapunov(&mut run, a),
        Command::Torusmean(a) => run_torusmean(&mut run, a),
        Command::Diffraction(DiffractionCmd::F(a)) => run_diffraction_f(&mut run, a),
        Command::Diffraction(DiffractionCmd::Scan(a)) => run_diffraction_scan(&mut run, a),
        Command::VerifyAll(a) => run_verify(&mut run, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
