use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;

use super::{
    AnalyzeArgs, Cli, CliError, Command, ConfigOverrides, ExperimentArgs, RepeatArgs, RouteCommand, TeachArgs,
    EXIT_ACCEPTANCE, EXIT_INCOMPLETE, EXIT_IO, EXIT_TEACH,
};
use crate::error_model::{eigenvalues, stability_sweep, write_sweep_csv, StabilityVerdict, SweepRange};
use crate::io::write_atomic;
use crate::sim::experiments::{run_experiment, ExperimentOptions, NAMES};
use crate::sim::{run_multi_loop, Scenario, SimError, Simulator};
use crate::teach_repeat::{load_route, save_route, RouteFileError, TeachRepeatError};
use crate::types::SteeringMode;
use crate::vision::World;

type CliResult<T = ()> = Result<T, CliError>;

pub(super) fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Teach(a) => teach(cli, a),
        Command::Repeat(a) => repeat(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Experiment(a) => experiment(cli, a),
        Command::Route(RouteCommand::Inspect { file, summary }) => inspect(file, *summary),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_scenario(cli: &Cli, path: &Path) -> CliResult<Scenario> {
    let mut scenario = Scenario::from_json(&read_text(path)?)
        .map_err(|e| CliError::usage(format!("{}: invalid scenario: {e}", path.display())))?;
    if let Some(cfg) = &cli.config {
        let overrides: ConfigOverrides = serde_json::from_str(&read_text(cfg)?)
            .map_err(|e| CliError::usage(format!("{}: invalid config: {e}", cfg.display())))?;
        overrides.apply(&mut scenario);
    }
    scenario
        .validate()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(scenario)
}

/// Creates the output directory and refuses to clobber existing files
/// unless `--force` was given.
fn prepare_outputs(cli: &Cli, paths: &[PathBuf]) -> CliResult {
    fs::create_dir_all(&cli.out).map_err(|e| io_err(&cli.out, e))?;
    if !cli.force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(CliError::usage(format!(
                "{} already exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    write_atomic(path, bytes).map_err(|e| io_err(path, e))
}

fn seed_for(cli: &Cli, scenario: &Scenario) -> u64 {
    cli.seed.unwrap_or(scenario.seeds[0])
}

fn teach(cli: &Cli, args: &TeachArgs) -> CliResult {
    let scenario = load_scenario(cli, &args.scenario)?;
    let route_path = args.route.clone().unwrap_or_else(|| cli.out.join("route.route"));
    let world_path = world_path_for(&route_path);
    let profile_path = cli.out.join("profile.csv");
    prepare_outputs(cli, &[route_path.clone(), world_path.clone(), profile_path.clone()])?;

    let seed = seed_for(cli, &scenario);
    let bundle = scenario.build(seed).map_err(|e| match e {
        SimError::TeachRepeat(e @ (TeachRepeatError::Teach(_) | TeachRepeatError::NonPositiveVelocity { .. })) => {
            CliError::new(EXIT_TEACH, e.to_string())
        }
        SimError::Scenario(_) | SimError::Argument(_) => CliError::usage(e.to_string()),
        other => CliError::new(EXIT_TEACH, other.to_string()),
    })?;

    let mut world_json = Vec::new();
    bundle
        .world
        .write_json(&mut world_json)
        .map_err(|e| io_err(&world_path, e))?;
    let mut profile_csv = Vec::new();
    bundle
        .route
        .profile
        .write_csv(&mut profile_csv)
        .map_err(|e| io_err(&profile_path, e))?;

    save_route(&bundle.route, &route_path).map_err(|e| io_err(&route_path, e))?;
    write(&world_path, &world_json)?;
    write(&profile_path, &profile_csv)?;
    println!(
        "taught {} maps over {:.3} m ({} profile entries) -> {}",
        bundle.route.maps.len(),
        bundle.route.profile.total_length(),
        bundle.route.profile.entries().len(),
        route_path.display()
    );
    Ok(())
}

fn world_path_for(route: &Path) -> PathBuf {
    route.with_file_name("world.json")
}

fn repeat(cli: &Cli, args: &RepeatArgs) -> CliResult {
    let route = load_route(&args.route).map_err(|e| match e {
        RouteFileError::Io(io) => CliError::usage(format!("cannot read route {}: {io}", args.route.display())),
        other => CliError::usage(format!("{}: {other}", args.route.display())),
    })?;
    let scenario = load_scenario(cli, &args.scenario)?;
    let world_path = args.world.clone().unwrap_or_else(|| world_path_for(&args.route));
    let file = fs::File::open(&world_path)
        .map_err(|e| CliError::usage(format!("cannot read world {}: {e}", world_path.display())))?;
    let world = World::read_json(std::io::BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {e}", world_path.display())))?;

    let loops = args.loops.unwrap_or(scenario.loops);
    if loops == 0 {
        return Err(CliError::usage("--loops must be at least 1"));
    }
    let loop_paths: Vec<PathBuf> = (1..=loops)
        .map(|k| cli.out.join(format!("repeat_loop{k:03}.csv")))
        .collect();
    let summary_path = cli.out.join("summary.csv");
    let mut all = loop_paths.clone();
    all.push(summary_path.clone());
    prepare_outputs(cli, &all)?;

    let mut nav = if cli.config.is_some() {
        scenario.navigator
    } else {
        route.metadata.config
    };
    if args.disable_vision {
        nav.alpha = 0.0;
        nav.steering = SteeringMode::ProfileOnly;
    }
    let seed = seed_for(cli, &scenario);
    let usage = |e: SimError| CliError::usage(e.to_string());
    let mut sim = Simulator::new(
        &route,
        &world,
        scenario.corruption_for(seed),
        scenario.noise_for(seed),
        scenario.traversal,
    )
    .map_err(usage)?
    .with_nav_config(nav);
    let start = scenario.repeat_start(route.start_pose());
    let logs = run_multi_loop(&mut sim, start, loops).map_err(usage)?;

    let mut summary = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| io_err(&summary_path, e);
    summary.write_record(["loop", "end_error"]).map_err(csv_err)?;
    for (k, log) in logs.iter().enumerate() {
        let mut buf = Vec::new();
        log.write_csv(&mut buf).map_err(|e| io_err(&loop_paths[k], e))?;
        write(&loop_paths[k], &buf)?;
        summary
            .write_record([(k + 1).to_string(), log.loop_end_error.to_string()])
            .map_err(csv_err)?;
        info!("loop {} end error {:.4} m", k + 1, log.loop_end_error);
        println!("loop {:>3}: end error {:.4} m", k + 1, log.loop_end_error);
    }
    let bytes = summary.into_inner().map_err(|e| io_err(&summary_path, e))?;
    write(&summary_path, &bytes)?;

    match logs.last() {
        Some(last) if !last.completed() => Err(CliError::new(
            EXIT_INCOMPLETE,
            format!("traversal {} did not complete: {:?}", logs.len(), last.completion),
        )),
        _ => Ok(()),
    }
}

/// Parses `min:max:steps` into an inclusive sweep range.
pub fn parse_range(text: &str) -> Result<SweepRange, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, steps] = parts.as_slice() else {
        return Err(format!("range '{text}' must look like min:max:steps"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{s}' in range '{text}' is not a number"))
    };
    let (min, max) = (num(min)?, num(max)?);
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| format!("step count '{steps}' in range '{text}' is not a positive integer"))?;
    if !min.is_finite() || !max.is_finite() {
        return Err(format!("range '{text}' has non-finite bounds"));
    }
    if steps == 0 {
        return Err(format!("range '{text}' needs at least one step"));
    }
    if min > max {
        return Err(format!("range '{text}' has min greater than max"));
    }
    Ok(SweepRange::new(min, max, steps))
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> CliResult {
    let sweep = args.v_range.is_some() || args.omega_range.is_some() || args.l_range.is_some();
    if sweep {
        let range = |r: &Option<String>, point: Option<f64>, name: &str| -> CliResult<SweepRange> {
            match (r, point) {
                (Some(text), _) => parse_range(text).map_err(CliError::usage),
                (None, Some(x)) => Ok(SweepRange::new(x, x, 1)),
                (None, None) => Err(CliError::usage(format!("sweep needs --{name}-range or --{name}"))),
            }
        };
        let v = range(&args.v_range, args.v, "v")?;
        let omega = range(&args.omega_range, args.omega, "omega")?;
        let l = range(&args.l_range, args.l, "l")?;
        let rows = stability_sweep(v, omega, l).map_err(|e| CliError::usage(e.to_string()))?;
        let path = cli.out.join("stability_sweep.csv");
        prepare_outputs(cli, std::slice::from_ref(&path))?;
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).map_err(|e| io_err(&path, e))?;
        write(&path, &buf)?;
        let worst = rows.iter().map(|r| r.re_lambda1).fold(f64::NEG_INFINITY, f64::max);
        println!("{} grid points -> {}", rows.len(), path.display());
        println!("largest Re(lambda1): {worst:.6e}");
        return Ok(());
    }
    let (Some(v), Some(omega), Some(l)) = (args.v, args.omega, args.l) else {
        return Err(CliError::usage("analyze needs --v, --omega and --l, or sweep ranges"));
    };
    let e = eigenvalues(v, omega, l).map_err(|e| CliError::usage(e.to_string()))?;
    println!("lambda1 = {:+.9} {:+.9}i", e.lambda1.re, e.lambda1.im);
    println!("lambda2 = {:+.9} {:+.9}i", e.lambda2.re, e.lambda2.im);
    let verdict = match e.verdict() {
        StabilityVerdict::Stable => "stable",
        StabilityVerdict::Marginal => "marginal (straight-line)",
    };
    println!("verdict: {verdict}");
    Ok(())
}

fn experiment(cli: &Cli, args: &ExperimentArgs) -> CliResult {
    if !NAMES.contains(&args.name.as_str()) {
        return Err(CliError::usage(format!(
            "unknown experiment '{}'; valid names: {}",
            args.name,
            NAMES.join(", ")
        )));
    }
    if args.runs == 0 {
        return Err(CliError::usage("--runs must be at least 1"));
    }
    let opts = ExperimentOptions {
        seed: cli.seed.unwrap_or(0),
        runs: args.runs,
    };
    let verdict_path = cli.out.join("verdict.json");
    prepare_outputs(cli, std::slice::from_ref(&verdict_path))?;
    let report = run_experiment(&args.name, &opts).map_err(|e| CliError::usage(e.to_string()))?;
    let paths: Vec<PathBuf> = report.files.iter().map(|f| cli.out.join(&f.name)).collect();
    prepare_outputs(cli, &paths)?;
    for (f, p) in report.files.iter().zip(&paths) {
        write(p, &f.contents)?;
    }
    write(&verdict_path, report.verdict_json().as_bytes())?;
    for c in &report.checks {
        println!(
            "{} {}: {} (limit {}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit,
            c.detail
        );
    }
    if report.passed() {
        println!("{}: PASS", report.name);
        Ok(())
    } else {
        Err(CliError::new(
            EXIT_ACCEPTANCE,
            format!("{}: one or more checks failed", report.name),
        ))
    }
}

fn inspect(file: &Path, summary: bool) -> CliResult {
    let route = load_route(file).map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
    let text = if summary {
        let value = serde_json::json!({
            "metadata": route.metadata,
            "total_length": route.profile.total_length(),
            "profile_entries": route.profile.entries().len(),
            "maps": route.maps.len(),
            "observations": route.maps.iter().map(|m| m.observations.len()).sum::<usize>(),
        });
        serde_json::to_string_pretty(&value).map_err(|e| io_err(file, e))?
    } else {
        route.to_json().map_err(|e| io_err(file, e))?
    };
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::new(EXIT_IO, e.to_string())),
        _ => Ok(()),
    }
}
