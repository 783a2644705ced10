//! Canned desk-scale experiments. Each one runs a family of seeded
//! simulations in parallel, evaluates pass/fail checks and renders its data
//! as CSV files.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::derive_seed;
use super::{
    compare_to_model, estimate_route_l, run_multi_loop, NoiseModel, PlanSpec, Scenario, SimError, Simulator,
    StartOffset, TraversalLog, WorldSpec,
};
use crate::teach_repeat::PlanSegment;
use crate::types::SteeringMode;
use crate::vision::CorruptionModel;

pub const NAMES: [&str; 4] = ["exp1", "exp2-oval", "exp2-lemniscate", "exp3-noise"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentOptions {
    /// Base seed; per-run seeds are derived from it.
    pub seed: u64,
    /// Number of seeded runs for Monte Carlo checks.
    pub runs: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { seed: 0, runs: 100 }
    }
}

impl ExperimentOptions {
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| derive_seed(self.seed, 100 + i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            limit,
            detail: detail.into(),
        }
    }

    fn below(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            passed: value < limit,
            ..Self::at_most(name, value, limit, detail)
        }
    }

    fn at_least(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            passed: value >= limit,
            ..Self::at_most(name, value, limit, detail)
        }
    }

    fn above(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            passed: value > limit,
            ..Self::at_most(name, value, limit, detail)
        }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: passed as u8 as f64,
            limit: 1.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub runs: usize,
    pub checks: Vec<Check>,
    pub files: Vec<OutputFile>,
}

#[derive(Serialize)]
struct Verdict<'a> {
    experiment: &'a str,
    seed: u64,
    runs: usize,
    passed: bool,
    checks: &'a [Check],
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn verdict_json(&self) -> String {
        let v = Verdict {
            experiment: &self.name,
            seed: self.seed,
            runs: self.runs,
            passed: self.passed(),
            checks: &self.checks,
        };
        serde_json::to_string_pretty(&v).expect("verdict serializes") + "\n"
    }

    fn add_file(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push(OutputFile {
            name: name.into(),
            contents: contents.into(),
        });
    }
}

pub fn run_experiment(name: &str, opts: &ExperimentOptions) -> Result<ExperimentReport, SimError> {
    match name {
        "exp1" => exp1(opts),
        "exp2-oval" => exp2_oval(opts),
        "exp2-lemniscate" => exp2_lemniscate(opts),
        "exp3-noise" => exp3_noise(opts),
        other => Err(SimError::Argument(format!(
            "unknown experiment '{other}'; valid names: {}",
            NAMES.join(", ")
        ))),
    }
}

/// 10 m oval in a small room, repeated from 1 m behind and outside the
/// taught start.
pub fn oval_scenario() -> Scenario {
    Scenario {
        name: "oval".into(),
        world: WorldSpec::small_room(),
        plan: PlanSpec::Oval {
            length: 10.0,
            radius: 1.0,
            speed: 0.5,
            gap: 0.0,
        },
        start_offset: StartOffset {
            forward: -0.6,
            left: -0.8,
            heading: 0.0,
        },
        noise: NoiseModel::nominal(0),
        corruption: CorruptionModel::nominal(0),
        teach_corruption: None,
        navigator: Default::default(),
        camera: Default::default(),
        traversal: Default::default(),
        loops: 20,
        seeds: vec![0],
        descriptor_bits: crate::vision::DEFAULT_BITS,
    }
}

/// 17 m figure-eight with the same 1 m start offset.
pub fn lemniscate_scenario(world: WorldSpec) -> Scenario {
    Scenario {
        name: "lemniscate".into(),
        world,
        plan: PlanSpec::Lemniscate {
            length: 17.0,
            radius: 1.0,
            speed: 0.5,
            gap: 0.0,
        },
        loops: 1,
        ..oval_scenario()
    }
}

/// 20 m oval with 1.5 m start offset and heavily degraded appearance.
pub fn noisy_oval_scenario() -> Scenario {
    Scenario {
        name: "noisy-oval".into(),
        plan: PlanSpec::Oval {
            length: 20.0,
            radius: 2.0,
            speed: 0.5,
            gap: 0.0,
        },
        start_offset: StartOffset {
            forward: -0.9,
            left: -1.2,
            heading: 0.0,
        },
        corruption: heavy_corruption(),
        loops: 15,
        ..oval_scenario()
    }
}

pub fn heavy_corruption() -> CorruptionModel {
    CorruptionModel {
        bit_flip_prob: 0.1,
        dropout_prob: 0.5,
        clutter_rate: 20.0,
        pixel_noise_sigma: 1.0,
        seed: 0,
    }
}

/// Descriptors so scrambled that no histogram vote is ever conclusive.
pub fn blinding_corruption() -> CorruptionModel {
    CorruptionModel {
        bit_flip_prob: 0.5,
        dropout_prob: 0.5,
        clutter_rate: 20.0,
        pixel_noise_sigma: 1.0,
        seed: 0,
    }
}

/// 50 m loop, straight first, for the profile-only ablation. Odometric
/// drift scales with route length, so this loop shows it clearly.
pub fn large_loop_scenario() -> Scenario {
    let radius = 5.0;
    let straight = (50.0 - 2.0 * std::f64::consts::PI * radius) / 2.0;
    let line = PlanSegment::Straight {
        length: straight,
        speed: 0.5,
    };
    let arc = PlanSegment::Arc {
        radius,
        angle: std::f64::consts::PI,
        speed: 0.5,
    };
    Scenario {
        name: "large-loop".into(),
        plan: PlanSpec::Segments {
            segments: vec![line, arc, line, arc],
        },
        ..oval_scenario()
    }
}

/// Straight, a quarter turn of 0.25 m radius, straight: the turn needs
/// 2 rad/s, twice the correction authority.
pub fn sharp_turn_scenario() -> Scenario {
    Scenario {
        name: "sharp-turn".into(),
        plan: PlanSpec::Segments {
            segments: vec![
                PlanSegment::Straight {
                    length: 3.0,
                    speed: 0.5,
                },
                PlanSegment::Arc {
                    radius: 0.25,
                    angle: std::f64::consts::FRAC_PI_2,
                    speed: 0.5,
                },
                PlanSegment::Straight {
                    length: 8.0,
                    speed: 0.5,
                },
            ],
        },
        start_offset: StartOffset::default(),
        loops: 1,
        ..oval_scenario()
    }
}

/// Per-seed outcome of a multi-loop run.
#[derive(Debug, Clone)]
pub struct LoopSeries {
    pub seed: u64,
    pub initial_error: f64,
    pub errors: Vec<f64>,
    pub completed: bool,
    pub heading_only: bool,
    /// Mean visible-landmark depth along the taught route.
    pub feature_distance: f64,
    pub logs: Vec<TraversalLog>,
}

/// Teaches the scenario for `seed` and repeats it `scenario.loops` times.
pub fn run_series(scenario: &Scenario, seed: u64, keep_logs: bool) -> Result<LoopSeries, SimError> {
    let bundle = scenario.build(seed)?;
    let mut sim = Simulator::new(
        &bundle.route,
        &bundle.world,
        scenario.corruption_for(seed),
        scenario.noise_for(seed),
        scenario.traversal,
    )?;
    let start = scenario.repeat_start(bundle.route.start_pose());
    let logs = run_multi_loop(&mut sim, start, scenario.loops)?;
    Ok(LoopSeries {
        seed,
        initial_error: start.distance_to(&bundle.route.start_pose()),
        errors: logs.iter().map(|l| l.loop_end_error).collect(),
        completed: logs.len() == scenario.loops && logs.iter().all(TraversalLog::completed),
        heading_only: logs.iter().all(TraversalLog::forward_velocity_untouched),
        feature_distance: estimate_route_l(&bundle.world, &bundle.route, 0.5)?.meters(),
        logs: if keep_logs { logs } else { Vec::new() },
    })
}

fn run_many(scenario: &Scenario, seeds: &[u64], keep_first: bool) -> Result<Vec<LoopSeries>, SimError> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_series(scenario, s, keep_first && i == 0))
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// True when the loop-end errors from loop 2 on never grow, except for
/// fluctuations that stay under `floor`.
pub fn non_increasing_from_loop2(errors: &[f64], floor: f64) -> bool {
    errors
        .iter()
        .skip(1)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] <= w[0] || *w[1] < floor)
}

/// Convergence statistics over a set of multi-loop runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceStats {
    pub initial_error: f64,
    /// Largest per-loop median (over seeds) among loops 4 and later.
    pub worst_median_after_loop3: f64,
    pub non_increasing_fraction: f64,
    pub completed_fraction: f64,
    pub heading_only: bool,
}

pub fn convergence_stats(series: &[LoopSeries]) -> ConvergenceStats {
    let initial = series.iter().map(|s| s.initial_error).sum::<f64>() / series.len() as f64;
    let loops = series.iter().map(|s| s.errors.len()).min().unwrap_or(0);
    let worst = (3..loops)
        .map(|k| median(&mut series.iter().map(|s| s.errors[k]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let floor = 0.1 * initial;
    let mono = series
        .iter()
        .filter(|s| non_increasing_from_loop2(&s.errors, floor))
        .count();
    ConvergenceStats {
        initial_error: initial,
        worst_median_after_loop3: if loops > 3 { worst } else { f64::INFINITY },
        non_increasing_fraction: mono as f64 / series.len() as f64,
        completed_fraction: series.iter().filter(|s| s.completed).count() as f64 / series.len() as f64,
        heading_only: series.iter().all(|s| s.heading_only),
    }
}

fn convergence_checks(prefix: &str, stats: &ConvergenceStats) -> Vec<Check> {
    vec![
        Check::flag(
            &format!("{prefix}completed"),
            stats.completed_fraction == 1.0,
            format!("{:.0}% of runs completed every loop", 100.0 * stats.completed_fraction),
        ),
        Check::below(
            &format!("{prefix}median_error_after_loop3"),
            stats.worst_median_after_loop3,
            0.1 * stats.initial_error,
            "largest median loop-end error over loops 4 and later, meters",
        ),
        Check::at_least(
            &format!("{prefix}non_increasing_fraction"),
            stats.non_increasing_fraction,
            0.9,
            "fraction of seeds whose loop-end error does not grow from loop 2 on",
        ),
    ]
}

fn heading_only_check(all: bool) -> Check {
    Check::flag(
        "forward_velocity_from_profile",
        all,
        "every forward velocity command equals the taught profile value bit for bit",
    )
}

fn loop_errors_csv(series: &[LoopSeries]) -> String {
    let mut out = String::from("seed,loop,end_error\n");
    for s in series {
        for (k, e) in s.errors.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", s.seed, k + 1, e);
        }
    }
    out
}

fn loop_summary_csv(series: &[LoopSeries]) -> String {
    let loops = series.iter().map(|s| s.errors.len()).max().unwrap_or(0);
    let mut out = String::from("loop,median,p10,p90\n");
    for k in 0..loops {
        let mut v: Vec<f64> = series.iter().filter_map(|s| s.errors.get(k).copied()).collect();
        let m = median(&mut v);
        let _ = writeln!(out, "{},{},{},{}", k + 1, m, quantile(&v, 0.1), quantile(&v, 0.9));
    }
    out
}

fn log_csv(log: &TraversalLog) -> Result<Vec<u8>, SimError> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf)?;
    Ok(buf)
}

fn gnuplot_loops(title: &str, summary: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset title '{title}'\n\
         set xlabel 'loop'\nset ylabel 'loop-end error [m]'\nset logscale y\n\
         plot '{summary}' using 1:2 with linespoints title 'median', \\\n\
         \x20    '' using 1:3 with lines dashtype 2 title '10%', \\\n\
         \x20    '' using 1:4 with lines dashtype 2 title '90%'\n"
    )
}

fn gnuplot_trajectory(title: &str, files: &[&str]) -> String {
    let plots: Vec<String> = files
        .iter()
        .map(|f| format!("'{f}' using 2:3 with lines title '{f}'"))
        .collect();
    format!(
        "set datafile separator ','\nset title '{title}'\nset size ratio -1\n\
         set xlabel 'x [m]'\nset ylabel 'y [m]'\nplot {}\n",
        plots.join(", \\\n     ")
    )
}

fn new_report(name: &str, opts: &ExperimentOptions) -> ExperimentReport {
    ExperimentReport {
        name: name.into(),
        seed: opts.seed,
        runs: opts.runs,
        checks: Vec::new(),
        files: Vec::new(),
    }
}

/// Oval convergence over 20 loops.
pub fn exp2_oval(opts: &ExperimentOptions) -> Result<ExperimentReport, SimError> {
    let mut report = new_report("exp2-oval", opts);
    let series = run_many(&oval_scenario(), &opts.run_seeds(), true)?;
    let stats = convergence_stats(&series);
    report.checks.extend(convergence_checks("", &stats));
    report.checks.push(heading_only_check(stats.heading_only));

    let summary = loop_summary_csv(&series);
    report.add_file("loop_errors.csv", loop_errors_csv(&series));
    report.add_file("loop_summary.csv", summary);
    let first = &series[0];
    let mut traj = Vec::new();
    for (k, log) in first.logs.iter().enumerate().filter(|(k, _)| [0, 1, 2, 19].contains(k)) {
        let name = format!("trajectory_loop{:02}.csv", k + 1);
        report.add_file(name.clone(), log_csv(log)?);
        traj.push(name);
    }
    let refs: Vec<&str> = traj.iter().map(String::as_str).collect();
    report.add_file(
        "plot.gp",
        gnuplot_loops("oval loop-end error", "loop_summary.csv")
            + "pause -1\n"
            + &gnuplot_trajectory("oval trajectories", &refs),
    );
    Ok(report)
}

/// Small room against large hall on the figure-eight, paired by seed.
pub fn exp2_lemniscate(opts: &ExperimentOptions) -> Result<ExperimentReport, SimError> {
    let mut report = new_report("exp2-lemniscate", opts);
    let seeds = opts.run_seeds();
    let room = lemniscate_scenario(WorldSpec::small_room());
    let hall = lemniscate_scenario(WorldSpec::large_hall());

    let pairs: Vec<(f64, f64, f64, f64, bool)> = seeds
        .par_iter()
        .map(|&s| -> Result<_, SimError> {
            let a = run_series(&room, s, false)?;
            let b = run_series(&hall, s, false)?;
            let (la, lb) = (a.feature_distance, b.feature_distance);
            let ok = a.completed && b.completed && a.heading_only && b.heading_only;
            Ok((a.errors[0], b.errors[0], la, lb, ok))
        })
        .collect::<Result<_, _>>()?;

    let hall_worse = pairs.iter().filter(|p| p.1 > p.0).count();
    let l_room = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;
    let l_hall = pairs.iter().map(|p| p.3).sum::<f64>() / pairs.len() as f64;
    report.checks.push(Check::at_least(
        "hall_loop1_error_larger",
        hall_worse as f64 / pairs.len() as f64,
        0.9,
        "fraction of paired seeds where the large hall ends loop 1 farther from the start",
    ));
    report.checks.push(Check::flag(
        "hall_feature_distance_larger",
        l_hall > l_room,
        format!("mean feature distance {l_room:.2} m in the room, {l_hall:.2} m in the hall"),
    ));
    report.checks.push(Check::flag(
        "all_runs_completed",
        pairs.iter().all(|p| p.4),
        "every run finished and kept the profile forward velocity",
    ));

    let mut csv = String::from("seed,room_error,hall_error,room_l,hall_l\n");
    for (s, p) in seeds.iter().zip(&pairs) {
        let _ = writeln!(csv, "{s},{},{},{},{}", p.0, p.1, p.2, p.3);
    }
    report.add_file("paired_loop1.csv", csv);

    let agreement = model_agreement()?;
    report.checks.extend(agreement.checks);
    report.files.extend(agreement.files);
    Ok(report)
}

/// Outcome of comparing zero-noise traversals with the error model.
pub struct Agreement {
    pub checks: Vec<Check>,
    pub files: Vec<OutputFile>,
}

/// Zero-noise traversals of the oval and the figure-eight from a small
/// offset, compared with the error model through the first loop.
pub fn model_agreement() -> Result<Agreement, SimError> {
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let offset = StartOffset {
        forward: -0.15,
        left: 0.2,
        heading: 0.0,
    };
    for base in [oval_scenario(), lemniscate_scenario(WorldSpec::small_room())] {
        let sc = Scenario {
            noise: NoiseModel::NONE,
            corruption: CorruptionModel::NONE,
            start_offset: offset,
            loops: 1,
            ..base
        };
        let series = run_series(&sc, 0, true)?;
        let bundle = sc.build(0)?;
        let l = estimate_route_l(&bundle.world, &bundle.route, 0.5)?;
        let cmp = compare_to_model(&series.logs[0], &bundle.route, l)?;
        let tag = sc.plan.name();
        checks.push(Check::at_most(
            &format!("{tag}_model_norm_deviation"),
            cmp.max_norm_deviation,
            0.2,
            format!(
                "largest |predicted| - |simulated| error norm gap relative to the initial error (l = {:.2} m)",
                cmp.l
            ),
        ));
        checks.push(Check::above(
            &format!("{tag}_simulated_curved_decay_faster"),
            cmp.simulated_decay.curved - cmp.simulated_decay.straight,
            0.0,
            format!(
                "simulated decay rate {:.4}/s curved vs {:.4}/s straight",
                cmp.simulated_decay.curved, cmp.simulated_decay.straight
            ),
        ));
        checks.push(Check::above(
            &format!("{tag}_predicted_curved_decay_faster"),
            cmp.predicted_decay.curved - cmp.predicted_decay.straight,
            0.0,
            format!(
                "predicted decay rate {:.4}/s curved vs {:.4}/s straight",
                cmp.predicted_decay.curved, cmp.predicted_decay.straight
            ),
        ));
        checks.push(Check::flag(
            &format!("{tag}_heading_only"),
            series.heading_only,
            "forward velocity commands equal the profile values",
        ));
        let mut csv = String::from("t,sim_x,sim_y,pred_x,pred_y\n");
        for r in &cmp.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                r.t, r.simulated.x, r.simulated.y, r.predicted.x, r.predicted.y
            );
        }
        files.push(OutputFile {
            name: format!("model_vs_sim_{tag}.csv"),
            contents: csv.into_bytes(),
        });
    }
    Ok(Agreement { checks, files })
}

/// Profile-only, vision-only and combined steering.
pub fn exp1(opts: &ExperimentOptions) -> Result<ExperimentReport, SimError> {
    let mut report = new_report("exp1", opts);
    let seeds = opts.run_seeds();

    let mut profile_only = large_loop_scenario();
    profile_only.navigator.alpha = 0.0;
    profile_only.navigator.steering = SteeringMode::ProfileOnly;
    profile_only.traversal.max_deviation = None;
    profile_only.loops = 5;
    let drift = run_many(&profile_only, &seeds, true)?;
    let initial = drift[0].initial_error;
    let mut loop5: Vec<f64> = drift
        .iter()
        .map(|s| s.errors.get(4).copied().unwrap_or(f64::NAN))
        .collect();
    let exceeded = loop5.iter().filter(|&&e| e > 3.0 * initial).count();
    report.checks.push(Check::above(
        "profile_only_median_loop5_error",
        median(&mut loop5),
        3.0 * initial,
        format!(
            "median loop-5 end error, meters; {} of {} seeds exceed three times the initial error",
            exceeded,
            drift.len()
        ),
    ));
    let medians: Vec<f64> = (0..5)
        .map(|k| {
            median(
                &mut drift
                    .iter()
                    .filter_map(|s| s.errors.get(k).copied())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    report.checks.push(Check::flag(
        "profile_only_error_grows",
        medians.windows(2).all(|w| w[1] > w[0]),
        format!(
            "median loop-end error per loop: {}",
            medians.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(", ")
        ),
    ));

    let mut vision_only = sharp_turn_scenario();
    vision_only.navigator.steering = SteeringMode::VisionOnly;
    let sharp = run_many(&vision_only, &seeds, true)?;
    let stranded = sharp.iter().filter(|s| !s.completed).count();
    report.checks.push(Check::at_least(
        "vision_only_fails_sharp_turn",
        stranded as f64 / sharp.len() as f64,
        0.9,
        "fraction of vision-only runs flagged as not completing the route",
    ));
    let collapse = support_collapse(&sharp[0].logs[0], 3.0);
    report.checks.push(Check::flag(
        "vision_only_support_collapses_at_turn",
        collapse.after_turn < 0.25 * collapse.before_turn,
        format!(
            "mean vote support {:.1} before the turn, {:.1} after it",
            collapse.before_turn, collapse.after_turn
        ),
    ));

    let combined = run_many(&oval_scenario(), &seeds, false)?;
    let stats = convergence_stats(&combined);
    report.checks.extend(convergence_checks("combined_", &stats));
    report.checks.push(heading_only_check(
        stats.heading_only && drift.iter().chain(&sharp).all(|s| s.heading_only),
    ));

    report.add_file("profile_only_loop_errors.csv", loop_errors_csv(&drift));
    report.add_file("combined_loop_errors.csv", loop_errors_csv(&combined));
    report.add_file("combined_loop_summary.csv", loop_summary_csv(&combined));
    report.add_file(
        "profile_only_trajectory.csv",
        log_csv(&drift[0].logs[4.min(drift[0].logs.len() - 1)])?,
    );
    report.add_file("vision_only_trajectory.csv", log_csv(&sharp[0].logs[0])?);
    report.add_file(
        "plot.gp",
        gnuplot_trajectory(
            "steering ablations",
            &["profile_only_trajectory.csv", "vision_only_trajectory.csv"],
        ),
    );
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct SupportCollapse {
    pub before_turn: f64,
    pub after_turn: f64,
}

/// Mean histogram support before and after odometric distance `turn_at`.
pub fn support_collapse(log: &TraversalLog, turn_at: f64) -> SupportCollapse {
    let mean = |f: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = log
            .samples
            .iter()
            .filter(|s| f(s.d_est))
            .map(|s| s.support as f64)
            .collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    SupportCollapse {
        before_turn: mean(&|d| d < turn_at),
        after_turn: mean(&|d| d >= turn_at + 0.5),
    }
}

/// Convergence under heavy appearance corruption, and the blinded limit.
pub fn exp3_noise(opts: &ExperimentOptions) -> Result<ExperimentReport, SimError> {
    let mut report = new_report("exp3-noise", opts);
    let seeds = opts.run_seeds();
    let sc = noisy_oval_scenario();
    let series = run_many(&sc, &seeds, true)?;
    let steady: Vec<f64> = series.iter().map(steady_error).collect();
    let initial = series[0].initial_error;
    let good = steady.iter().filter(|&&e| e < 0.25 * initial).count();
    report.checks.push(Check::at_least(
        "heavy_corruption_converges",
        good as f64 / series.len() as f64,
        0.8,
        format!(
            "fraction of seeds with steady loop-end error below {:.3} m (25% of the initial offset)",
            0.25 * initial
        ),
    ));
    report.checks.push(Check::flag(
        "heavy_corruption_completed",
        series.iter().all(|s| s.completed),
        "every heavy-corruption run finished all loops",
    ));

    let blind_seeds: Vec<u64> = seeds.iter().copied().take(10).collect();
    let identical: Vec<(bool, bool)> = blind_seeds
        .par_iter()
        .map(|&s| -> Result<(bool, bool), SimError> {
            let blind = Scenario {
                corruption: blinding_corruption(),
                loops: 3,
                ..sc.clone()
            };
            let mut profile = Scenario { loops: 3, ..sc.clone() };
            profile.navigator.alpha = 0.0;
            profile.navigator.steering = SteeringMode::ProfileOnly;
            let a = run_series(&blind, s, true)?;
            let b = run_series(&profile, s, true)?;
            let never_conclusive = a.logs.iter().flat_map(|l| &l.samples).all(|x| x.kappa.is_none());
            Ok((same_trajectories(&a.logs, &b.logs), never_conclusive))
        })
        .collect::<Result<_, _>>()?;
    report.checks.push(Check::flag(
        "blinded_equals_profile_only",
        identical.iter().all(|p| p.0),
        "with every vote inconclusive, poses and commands match the profile-only run bit for bit",
    ));
    report.checks.push(Check::flag(
        "blinded_votes_inconclusive",
        identical.iter().all(|p| p.1),
        "no conclusive vote under blinding corruption",
    ));
    report
        .checks
        .push(heading_only_check(series.iter().all(|s| s.heading_only)));

    let mut csv = String::from("seed,steady_error\n");
    for (s, e) in series.iter().zip(&steady) {
        let _ = writeln!(csv, "{},{}", s.seed, e);
    }
    report.add_file("steady_errors.csv", csv);
    report.add_file("loop_errors.csv", loop_errors_csv(&series));
    report.add_file("loop_summary.csv", loop_summary_csv(&series));
    report.add_file(
        "plot.gp",
        gnuplot_loops("loop-end error under heavy corruption", "loop_summary.csv"),
    );
    Ok(report)
}

/// Median loop-end error over the last five loops.
pub fn steady_error(series: &LoopSeries) -> f64 {
    let n = series.errors.len();
    median(&mut series.errors[n.saturating_sub(5)..].to_vec())
}

/// Bitwise equality of poses, commands and odometry across two sets of logs.
pub fn same_trajectories(a: &[TraversalLog], b: &[TraversalLog]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.samples.len() == y.samples.len()
                && x.samples.iter().zip(&y.samples).all(|(p, q)| {
                    [p.t, p.pose.x, p.pose.y, p.pose.theta, p.d_est, p.v_cmd, p.omega_cmd]
                        .iter()
                        .zip([q.t, q.pose.x, q.pose.y, q.pose.theta, q.d_est, q.v_cmd, q.omega_cmd])
                        .all(|(u, v)| u.to_bits() == v.to_bits())
                })
        })
}
