//! Command-line experiment runner for the dyadic-tower laboratory.
//!
//! Every run is deterministic: identical flags and rng seed give
//! byte-identical output. Exit code 0 means success/PASS, 1 means a
//! verification FAIL, 2 means a usage error (unknown flags, malformed
//! matrix files, infeasible targets).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use carpenter_lab::error::Error;
use carpenter_lab::exact::{eq5_sides, eq6_sides, random_exact_matrix, ratio_bound_holds, QuadExt};
use carpenter_lab::flow::{self, predicted_diagonal, run as run_flow, SeedSpec};
use carpenter_lab::io;
use carpenter_lab::seeds::{self, NamedSeed};
use carpenter_lab::strategy::{ratio_report, synthesize_chain, GFunction, Heuristic};
use carpenter_lab::synth::{circulant_projection, horn_projection, DiagonalTarget};
use carpenter_lab::tower::{self, CMatrix, Level, ToleranceConfig};

const USAGE: &str = "\
carpenter-lab — dyadic matrix tower experiments

USAGE:
    carpenter-lab <COMMAND> [--flag value ...]

COMMANDS:
    iterate       run the rotation flow from a seed and emit its trace
    predict-diag  closed-form diagonal table vs the dense iteration
    contraction   step-ratio table for random seeds against lambda
    distance      lockstep two-seed distance-constancy check
    exact-check   exact Q(sqrt2) identity suite
    carpenter     synthesize a projection with a prescribed diagonal
    circulant     constant-diagonal projection in the Fourier basis
    strategy      prescribed-diagonal chain and its ratio report

COMMON FLAGS:
    --rng-seed <u64>      seed for every random draw
    --out <path>          write the artifact to a file instead of stdout
    --format <json|csv>   artifact format where both exist (default json)

The environment variable CARPENTER_MAX_LEVEL overrides the level cap (11).
Run `carpenter-lab <COMMAND> --help` for command flags.
";

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            // Bad inputs are usage errors; failed post-checks are
            // verification failures.
            Error::SynthesisFailure { .. } => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parsed `--key value` / `--key=value` flags.
struct Flags {
    values: BTreeMap<String, String>,
    help: bool,
}

impl Flags {
    fn parse(args: &[String], allowed: &[&str]) -> CliResult<Flags> {
        let mut values = BTreeMap::new();
        let mut help = false;
        let mut it = args.iter().peekable();
        while let Some(arg) = it.next() {
            if arg == "--help" || arg == "-h" {
                help = true;
                continue;
            }
            let Some(stripped) = arg.strip_prefix("--") else {
                return Err(Failure::usage(format!("unexpected argument `{arg}`")));
            };
            let (key, value) = match stripped.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let Some(v) = it.next() else {
                        return Err(Failure::usage(format!("flag --{stripped} needs a value")));
                    };
                    (stripped.to_string(), v.clone())
                }
            };
            if !allowed.contains(&key.as_str()) {
                return Err(Failure::usage(format!("unknown flag --{key}")));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(Failure::usage(format!("flag --{key} given twice")));
            }
        }
        Ok(Flags { values, help })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        self.get_parsed(key).map(|v| v.unwrap_or(default))
    }

    fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Failure::usage(format!("bad value `{raw}` for --{key}"))),
        }
    }

    fn get_str(&self, key: &str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    fn get_opt(&self, key: &str) -> Option<&String> {
        self.values.get(key)
    }
}

fn lambda_line() -> String {
    format!("lambda = {:.16} (5/4 - sqrt(2)/2)", flow::lambda())
}

/// Writes the artifact to `--out` (summary to stdout), or both to stdout.
fn emit(out: Option<&String>, artifact: &str, summary: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact)
                .map_err(|e| Failure::usage(format!("cannot write {path}: {e}")))?;
            print!("{summary}");
        }
        None => {
            print!("{summary}");
            print!("{artifact}");
        }
    }
    Ok(())
}

/// Builds a named seed at level `k` (default 1), or loads a matrix file —
/// whose own level wins unless `--k` was given and disagrees.
fn load_seed(spec: &str, k: Option<u32>, rng_seed: u64) -> CliResult<CMatrix> {
    if let Ok(named) = spec.parse::<NamedSeed>() {
        return Ok(named.build(k.unwrap_or(1), rng_seed)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::usage(format!(
            "seed `{spec}` is neither a named seed (diag01, identity, rand-sa, rand-proj) \
             nor a matrix file"
        )));
    }
    let matrix = io::read_matrix_file(path)?.into_cmatrix()?;
    if let Some(k) = k {
        if matrix.level().k() != k {
            return Err(Failure::usage(format!(
                "matrix file is at level {}, but --k {} was requested",
                matrix.level().k(),
                k
            )));
        }
    }
    Ok(matrix)
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("CARPENTER_MAX_LEVEL") {
        match raw.parse::<u32>() {
            Ok(max) => tower::set_max_level(max),
            Err(_) => {
                eprintln!("error: CARPENTER_MAX_LEVEL must be an integer, got `{raw}`");
                return ExitCode::from(2);
            }
        }
    }

    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprint!("{USAGE}");
        return ExitCode::from(2);
    };

    let rest = &args[1..];
    let outcome = match command.as_str() {
        "iterate" => cmd_iterate(rest),
        "predict-diag" => cmd_predict_diag(rest),
        "contraction" => cmd_contraction(rest),
        "distance" => cmd_distance(rest),
        "exact-check" => cmd_exact_check(rest),
        "carpenter" => cmd_carpenter(rest),
        "circulant" => cmd_circulant(rest),
        "strategy" => cmd_strategy(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        other => Err(Failure::usage(format!("unknown command `{other}`"))),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_iterate(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(
        args,
        &[
            "k",
            "seed-matrix",
            "max-level",
            "tol",
            "rng-seed",
            "out",
            "format",
        ],
    )?;
    if flags.help {
        println!(
            "iterate --k <level=1> --seed-matrix <name|path=diag01> --max-level <u32={}> \
             --tol <f64=1e-12> --rng-seed <u64=0> [--out <path>] [--format json|csv]",
            tower::max_level()
        );
        return Ok(());
    }
    let k: Option<u32> = flags.get_parsed("k")?;
    let max_level: u32 = flags.get("max-level", tower::max_level())?;
    let tol: f64 = flags.get("tol", 1e-12)?;
    let rng_seed: u64 = flags.get("rng-seed", 0)?;
    let seed_name = flags.get_str("seed-matrix", "diag01");
    let format = flags.get_str("format", "json");

    let seed = SeedSpec::new(load_seed(&seed_name, k, rng_seed)?)?;
    let k = seed.level().k();
    let (trace, _) = run_flow(&seed, max_level, tol)?;

    let artifact = match format.as_str() {
        "json" => trace.to_json(),
        "csv" => trace.to_csv(),
        other => return Err(Failure::usage(format!("unknown format `{other}`"))),
    };

    let bound = flow::lambda() + 1e-9;
    let max_ratio = trace.max_ratio();
    let mut summary = String::new();
    writeln!(summary, "{}", lambda_line()).unwrap();
    writeln!(
        summary,
        "iterate: seed={seed_name} k={k} steps={} truncated={}",
        trace.steps.len(),
        trace.truncated
    )
    .unwrap();
    match max_ratio {
        Some(r) => writeln!(summary, "max ratio = {r} (bound {bound})").unwrap(),
        None => writeln!(summary, "max ratio = undefined (no nonzero step distances)").unwrap(),
    }
    let pass = max_ratio.map_or(true, |r| r <= bound);
    writeln!(summary, "{}", if pass { "PASS" } else { "FAIL" }).unwrap();
    emit(flags.get_opt("out"), &artifact, &summary)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::check("a step ratio exceeded lambda + 1e-9"))
    }
}

fn cmd_predict_diag(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["k", "n", "seed-matrix", "rng-seed"])?;
    if flags.help {
        println!(
            "predict-diag --k <level=1> --n <steps=6> --seed-matrix <name|path=diag01> \
             --rng-seed <u64=0>"
        );
        return Ok(());
    }
    let k: Option<u32> = flags.get_parsed("k")?;
    let n_max: u32 = flags.get("n", 6)?;
    let rng_seed: u64 = flags.get("rng-seed", 0)?;
    let seed_name = flags.get_str("seed-matrix", "diag01");

    let matrix = load_seed(&seed_name, k, rng_seed)?;
    let k = matrix.level().k();
    let seed = SeedSpec::new(matrix.clone())?;
    let Some(d) = seed.real_diagonal().map(<[f64]>::to_vec) else {
        return Err(Failure::usage(
            "the closed form needs a seed with real diagonal",
        ));
    };

    println!("{}", lambda_line());
    println!("predict-diag: seed={seed_name} k={k} n=2..={n_max} (tolerance 1e-10)");
    let mut worst = 0.0f64;
    let mut current = matrix;
    for n in 2..=n_max {
        current = flow::step(&current)?;
        let predicted = predicted_diagonal(&d, k, n)?;
        let dense = current.diag_compress();
        let err = dense
            .values()
            .iter()
            .zip(predicted.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        worst = worst.max(err);
        println!("n={n} level={} max_err={err:e}", current.level().k());
    }
    let pass = worst <= 1e-10;
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "closed-form diagonal off by {worst:e}"
        )))
    }
}

fn cmd_contraction(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["samples", "rng-seed", "max-level", "out"])?;
    if flags.help {
        println!(
            "contraction --samples <usize=200> --rng-seed <u64=0> --max-level <u32={}> \
             [--out <path>]",
            tower::max_level()
        );
        return Ok(());
    }
    let samples: usize = flags.get("samples", 200)?;
    let rng_seed: u64 = flags.get("rng-seed", 0)?;
    let max_level: u32 = flags.get("max-level", tower::max_level())?;

    let bound = flow::lambda() + 1e-9;
    let mut table = String::from("sample,kind,k,max_ratio\n");
    let mut rng = seeds::rng_from_seed(rng_seed);
    let mut worst: Option<f64> = None;
    let mut failures = 0usize;
    for i in 0..samples {
        let k = 1 + (i % 3) as u32;
        let level = Level::new(k).map_err(Failure::from)?;
        let (kind, matrix) = match (i / 3) % 3 {
            0 => ("general", seeds::random_matrix(level, &mut rng)),
            1 => ("selfadjoint", seeds::random_selfadjoint(level, &mut rng)),
            _ => ("projection", seeds::random_projection(level, &mut rng)),
        };
        let (trace, _) = run_flow(&SeedSpec::new(matrix)?, max_level, 1e-300)?;
        for s in &trace.steps {
            if let Some(r) = s.ratio {
                if r > bound {
                    failures += 1;
                }
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
            }
        }
        let row_max = trace.max_ratio();
        writeln!(
            table,
            "{i},{kind},{k},{}",
            row_max.map(|r| r.to_string()).unwrap_or_default()
        )
        .unwrap();
    }

    let mut summary = String::new();
    writeln!(summary, "{}", lambda_line()).unwrap();
    writeln!(
        summary,
        "contraction: samples={samples} levels to {max_level}"
    )
    .unwrap();
    match worst {
        Some(w) => writeln!(summary, "max ratio over all seeds = {w} (bound {bound})").unwrap(),
        None => writeln!(summary, "no defined ratios").unwrap(),
    }
    let pass = failures == 0;
    writeln!(summary, "{}", if pass { "PASS" } else { "FAIL" }).unwrap();
    emit(flags.get_opt("out"), &table, &summary)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "{failures} step ratios exceeded lambda + 1e-9"
        )))
    }
}

fn cmd_distance(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["pairs", "k", "max-level", "rng-seed"])?;
    if flags.help {
        println!(
            "distance --pairs <usize=20> --k <level=2> --max-level <u32=10> --rng-seed <u64=0>"
        );
        return Ok(());
    }
    let pairs: usize = flags.get("pairs", 20)?;
    let k: u32 = flags.get("k", 2)?;
    let max_level: u32 = flags.get("max-level", 10.min(tower::max_level()))?;
    let rng_seed: u64 = flags.get("rng-seed", 0)?;

    println!("{}", lambda_line());
    println!("distance: pairs={pairs} k={k} levels to {max_level} (relative tolerance 1e-10)");
    let cfg = ToleranceConfig::default();
    let mut rng = seeds::rng_from_seed(rng_seed);
    let level = Level::new(k).map_err(Failure::from)?;
    let mut all_ok = true;
    for i in 0..pairs {
        let a = seeds::random_matrix(level, &mut rng);
        let b = seeds::random_matrix(level, &mut rng);
        let out = flow::verify_distance_scaling(&a, &b, max_level, &cfg)?;
        let max_rel = out
            .series
            .iter()
            .map(|s| {
                if out.reference == 0.0 {
                    *s
                } else {
                    (s - out.reference).abs() / out.reference
                }
            })
            .fold(0.0f64, f64::max);
        println!(
            "pair={i} reference={} max_rel_dev={max_rel:e}",
            out.reference
        );
        all_ok &= out.constant;
    }
    println!("{}", if all_ok { "PASS" } else { "FAIL" });
    if all_ok {
        Ok(())
    } else {
        Err(Failure::check("a lockstep distance series drifted"))
    }
}

fn cmd_exact_check(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["samples", "rng-seed"])?;
    if flags.help {
        println!("exact-check --samples <usize=50> --rng-seed <u64=7>");
        return Ok(());
    }
    let samples: usize = flags.get("samples", 50)?;
    let rng_seed: u64 = flags.get("rng-seed", 7)?;

    println!("{}", lambda_line());
    println!("exact lambda = {} (must be < 1 exactly)", QuadExt::lambda());
    let lambda_below_one =
        (QuadExt::from_int(1) - QuadExt::lambda()).sign() == std::cmp::Ordering::Greater;

    let mut rng = seeds::rng_from_seed(rng_seed);
    let mut verified = 0usize;
    let mut failed = 0usize;
    let mut ratio_checked = 0usize;
    for i in 0..samples {
        let b = random_exact_matrix(&mut rng);
        let five = eq5_sides(&b)?;
        let six = eq6_sides(&b)?;
        println!(
            "sample {i:02} first-step identity:  lhs = {}  rhs = {}  [{}]",
            five.lhs,
            five.rhs,
            if five.holds() { "ok" } else { "MISMATCH" }
        );
        println!(
            "sample {i:02} second-step identity: lhs = {}  rhs = {}  [{}]",
            six.lhs,
            six.rhs,
            if six.holds() { "ok" } else { "MISMATCH" }
        );
        for holds in [five.holds(), six.holds()] {
            if holds {
                verified += 1;
            } else {
                failed += 1;
            }
        }
        if let Some(ok) = ratio_bound_holds(&b)? {
            if !ok {
                failed += 1;
            }
            ratio_checked += 1;
        }
    }
    let pass = failed == 0 && lambda_below_one;
    println!("ratio bound checked exactly on {ratio_checked} seeds with nonzero denominator");
    if pass {
        println!("PASS: {verified} exact identities verified");
        Ok(())
    } else {
        println!("FAIL: {failed} exact checks failed");
        Err(Failure::check("exact identity mismatch"))
    }
}

fn cmd_carpenter(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["target", "out"])?;
    if flags.help {
        println!("carpenter --target <file with one diagonal value per line> [--out <path>]");
        return Ok(());
    }
    let Some(target_path) = flags.get_opt("target") else {
        return Err(Failure::usage("carpenter needs --target <file>"));
    };
    let text = std::fs::read_to_string(target_path)
        .map_err(|e| Failure::usage(format!("cannot read {target_path}: {e}")))?;
    let mut d: Vec<f64> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Failure::usage(format!("bad value `{line}` at line {}", idx + 1)))?;
        d.push(v);
    }

    let target = DiagonalTarget::new(d)?;
    let cfg = ToleranceConfig::default();
    let out = horn_projection(&target, &cfg)?;
    let general = out.matrix.to_general();

    let mut summary = String::new();
    writeln!(summary, "{}", lambda_line()).unwrap();
    writeln!(
        summary,
        "carpenter: N={} trace={} rotations={} (budget {})",
        target.len(),
        target.rank(),
        out.rotations,
        target.len() - 1
    )
    .unwrap();
    let diag_err = out
        .matrix
        .diagonal()
        .iter()
        .zip(target.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    writeln!(summary, "diagonal error = {diag_err:e} (tolerance 1e-9)").unwrap();
    writeln!(
        summary,
        "idempotence defect = {:e} (tolerance 1e-8)",
        out.matrix.idempotence_defect()
    )
    .unwrap();
    writeln!(
        summary,
        "symmetry defect = {:e}",
        out.matrix.symmetry_defect()
    )
    .unwrap();
    writeln!(summary, "PASS").unwrap();
    emit(flags.get_opt("out"), &io::format_auto(&general), &summary)
}

fn cmd_circulant(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["n", "m", "alpha", "out"])?;
    if flags.help {
        println!("circulant --n <size> (--m <rank> | --alpha <level in [0,1]>) [--out <path>]");
        return Ok(());
    }
    let n: usize = flags.get("n", 0)?;
    if n == 0 {
        return Err(Failure::usage("circulant needs --n <size>"));
    }
    let (m, alpha_note) = match (flags.get_opt("m"), flags.get_opt("alpha")) {
        (Some(_), Some(_)) => return Err(Failure::usage("give either --m or --alpha, not both")),
        (Some(raw), None) => {
            let m: usize = raw
                .parse()
                .map_err(|_| Failure::usage(format!("bad value `{raw}` for --m")))?;
            (m, None)
        }
        (None, Some(raw)) => {
            let alpha: f64 = raw
                .parse()
                .map_err(|_| Failure::usage(format!("bad value `{raw}` for --alpha")))?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Failure::usage("--alpha must lie in [0, 1]"));
            }
            // Only levels m/N are reachable with a constant diagonal; pick
            // the nearest and report the gap.
            let m = ((alpha * n as f64).round() as usize).min(n);
            (m, Some(alpha))
        }
        (None, None) => return Err(Failure::usage("circulant needs --m or --alpha")),
    };

    let p = circulant_projection(n, m)?;
    let mut summary = String::new();
    writeln!(
        summary,
        "circulant: n={n} m={m} diagonal={}",
        m as f64 / n as f64
    )
    .unwrap();
    if let Some(alpha) = alpha_note {
        writeln!(
            summary,
            "requested constant level {alpha}: best reachable is {m}/{n}, gap = {:e}",
            (m as f64 / n as f64 - alpha).abs()
        )
        .unwrap();
    }
    emit(flags.get_opt("out"), &io::format_auto(&p), &summary)
}

fn cmd_strategy(args: &[String]) -> CliResult<()> {
    let flags = Flags::parse(args, &["g", "k-min", "k-max", "heuristic", "out", "format"])?;
    if flags.help {
        println!(
            "strategy --g <linear|square|const:<v>|step:<t0>|path> --k-min <u32=2> \
             --k-max <u32=6> --heuristic <fresh|phase-align> [--out <path>] [--format json|csv]"
        );
        return Ok(());
    }
    let g_spec = flags.get_str("g", "linear");
    let g = match GFunction::parse(&g_spec) {
        Ok(g) => g,
        Err(parse_err) => {
            let path = Path::new(&g_spec);
            if !path.exists() {
                return Err(parse_err.into());
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {g_spec}: {e}")))?;
            let samples: Vec<f64> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.parse::<f64>()
                        .map_err(|_| Failure::usage(format!("bad sample `{l}` in {g_spec}")))
                })
                .collect::<CliResult<_>>()?;
            GFunction::from_samples(samples)?
        }
    };
    let k_min: u32 = flags.get("k-min", 2)?;
    let k_max: u32 = flags.get("k-max", 6)?;
    let heuristic = Heuristic::parse(&flags.get_str("heuristic", "fresh"))?;
    let format = flags.get_str("format", "json");

    let cfg = ToleranceConfig::default();
    let chain = synthesize_chain(&g, k_min, k_max, heuristic, &cfg)?;
    let report = ratio_report(&chain, &g.name(), heuristic.name())?;

    let artifact = match format.as_str() {
        "json" => report.to_json(),
        "csv" => report.to_csv(),
        other => return Err(Failure::usage(format!("unknown format `{other}`"))),
    };
    let mut summary = String::new();
    writeln!(summary, "{}", lambda_line()).unwrap();
    writeln!(
        summary,
        "strategy: g={} heuristic={} k={}..{}",
        g.name(),
        heuristic.name(),
        k_min,
        k_max
    )
    .unwrap();
    match report.limsup_estimate {
        Some(est) => writeln!(summary, "limsup estimate (tail max) = {est}").unwrap(),
        None => writeln!(
            summary,
            "limsup estimate undefined (no nonzero denominators)"
        )
        .unwrap(),
    }
    writeln!(
        summary,
        "chain verified: every level passed diagonal and idempotence checks"
    )
    .unwrap();
    emit(flags.get_opt("out"), &artifact, &summary)
}
