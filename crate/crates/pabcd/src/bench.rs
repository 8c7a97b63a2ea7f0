//! Benchmark grids, performance profiles and speedup tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use log::warn;
use pabcd_core::solvers::{solve_serial, Mode, SolverParams, Termination};
use pabcd_core::{build_lasso, generate, CompositeProblem, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::exec::solve;
use crate::io::load_instance;

/// Relative gap used to turn a known or estimated optimum into `F_target`.
pub const TARGET_GAP: f64 = 1e-4;

/// Cap on repetitions added by `time_floor`.
pub const MAX_REPEATS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    Path(PathBuf),
    Generate(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub source: InstanceSource,
}

impl InstanceEntry {
    pub fn label(&self, index: usize) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.source {
            InstanceSource::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("instance{index}")),
            InstanceSource::Generate(g) => {
                format!("gen-{}x{}-p{}-s{}", g.rows, g.cols, g.nnz_per_col, g.seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    #[serde(default)]
    pub params: SolverParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

fn default_threads() -> Vec<usize> {
    vec![1]
}

fn default_runs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instances: Vec<InstanceEntry>,
    pub methods: Vec<MethodSpec>,
    /// Worker counts; each parallel method runs once per entry.
    #[serde(default = "default_threads")]
    pub threads: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Minimum cumulative solve time per cell, in seconds.
    #[serde(default)]
    pub time_floor: f64,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        anyhow::ensure!(cfg.runs >= 1, "runs must be at least 1");
        anyhow::ensure!(!cfg.threads.contains(&0), "thread counts must be positive");
        Ok(cfg)
    }
}

/// Aggregate over the runs of one (instance, method, τ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub instance: String,
    pub method: String,
    pub mode: Mode,
    pub tau: usize,
    pub runs: usize,
    pub mean_time: f64,
    pub mean_updates: f64,
    pub mean_final_objective: f64,
    /// Fraction of runs that reached `F_target`.
    pub success_rate: f64,
    pub f_target: Option<f64>,
    /// Load or solver error; the cell holds no runs.
    pub error: Option<String>,
}

impl CellResult {
    fn failed(instance: &str, method: &MethodSpec, tau: usize, err: String) -> Self {
        Self {
            instance: instance.to_string(),
            method: method.name.clone(),
            mode: method.params.mode,
            tau,
            runs: 0,
            mean_time: f64::NAN,
            mean_updates: f64::NAN,
            mean_final_objective: f64::NAN,
            success_rate: 0.0,
            f_target: None,
            error: Some(err),
        }
    }

    /// Counts as solved when every run hit the target.
    pub fn solved(&self) -> bool {
        self.error.is_none() && self.runs > 0 && self.success_rate == 1.0
    }
}

/// `F̃*` from a long serial run, for data without a known optimum.
pub fn estimate_optimum(p: &CompositeProblem, seed: u64) -> pabcd_core::Result<f64> {
    let params = SolverParams {
        mode: Mode::SerialActive,
        epsilon: 0.0,
        seed,
        ..Default::default()
    };
    Ok(solve_serial(p, &params)?.record.final_objective)
}

fn prepare(entry: &InstanceEntry) -> anyhow::Result<(CompositeProblem, f64)> {
    match &entry.source {
        InstanceSource::Generate(spec) => {
            let inst = generate(spec)?;
            Ok((inst.problem()?, inst.f_star))
        }
        InstanceSource::Path(path) => {
            let loaded = load_instance(path, None)
                .with_context(|| format!("loading {}", path.display()))?;
            let p = build_lasso(loaded.a, loaded.b, loaded.lambda)?;
            let f_star = match loaded.f_star {
                Some(f) => f,
                None => estimate_optimum(&p, 0)?,
            };
            Ok((p, f_star))
        }
    }
}

fn run_cell(
    p: &CompositeProblem,
    label: &str,
    method: &MethodSpec,
    tau: usize,
    f_target: f64,
    runs: usize,
    time_floor: f64,
) -> CellResult {
    let mut params = method.params.clone();
    params.tau = tau;
    params.f_target.get_or_insert(f_target);
    let base_seed = params.seed;

    let (mut time, mut updates, mut objective, mut hits) = (0.0, 0.0, 0.0, 0usize);
    let mut done = 0;
    let clock = Instant::now();
    while done < runs || (clock.elapsed().as_secs_f64() < time_floor && done < MAX_REPEATS) {
        params.seed = base_seed.wrapping_add(done as u64);
        match solve(p, &params, vec![0.0; p.n_vars()]) {
            Ok(out) => {
                let r = out.record;
                time += r.wall_time;
                updates += r.total_updates as f64;
                objective += r.final_objective;
                hits += usize::from(r.termination == Termination::TargetReached);
            }
            Err(e) => return CellResult::failed(label, method, tau, e.to_string()),
        }
        done += 1;
    }
    let n = done as f64;
    CellResult {
        instance: label.to_string(),
        method: method.name.clone(),
        mode: method.params.mode,
        tau,
        runs: done,
        mean_time: time / n,
        mean_updates: updates / n,
        mean_final_objective: objective / n,
        success_rate: hits as f64 / n,
        f_target: params.f_target,
        error: None,
    }
}

fn taus_for(mode: Mode, threads: &[usize]) -> Vec<usize> {
    if mode == Mode::SerialActive {
        vec![1]
    } else {
        threads.to_vec()
    }
}

/// Runs every cell in order, one at a time. Instances that fail to load
/// produce failed cells.
pub fn run_benchmark(cfg: &BenchConfig) -> Vec<CellResult> {
    let mut cells = Vec::new();
    for (index, entry) in cfg.instances.iter().enumerate() {
        let label = entry.label(index);
        let prepared = prepare(entry);
        for method in &cfg.methods {
            for tau in taus_for(method.params.mode, &cfg.threads) {
                let cell = match &prepared {
                    Ok((p, f_star)) => run_cell(
                        p,
                        &label,
                        method,
                        tau,
                        f_star * (1.0 + TARGET_GAP),
                        cfg.runs,
                        cfg.time_floor,
                    ),
                    Err(e) => CellResult::failed(&label, method, tau, format!("{e:#}")),
                };
                if let Some(e) = &cell.error {
                    warn!("{label} / {} / tau={tau}: {e}", method.name);
                }
                cells.push(cell);
            }
        }
    }
    cells
}

/// Point of a performance profile; `ratio` is `log₂(t / t_best)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub ratio: f64,
    pub fraction_solved: f64,
}

/// Performance profiles from `times[problem][method]`; non-finite entries
/// count as unsolved. Returns one step function per method.
pub fn performance_profile(times: &[Vec<f64>]) -> Vec<Vec<ProfilePoint>> {
    let methods = times.first().map_or(0, Vec::len);
    let problems = times.len() as f64;
    (0..methods)
        .map(|m| {
            let mut ratios: Vec<f64> = times
                .iter()
                .map(|row| {
                    let best = row
                        .iter()
                        .copied()
                        .filter(|t| t.is_finite())
                        .fold(f64::INFINITY, f64::min);
                    let t = row[m];
                    if t.is_finite() && best.is_finite() {
                        (t / best).log2()
                    } else {
                        f64::INFINITY
                    }
                })
                .filter(|r| r.is_finite())
                .collect();
            ratios.sort_by(f64::total_cmp);
            let mut points: Vec<ProfilePoint> = Vec::new();
            for (k, &r) in ratios.iter().enumerate() {
                let fraction_solved = (k + 1) as f64 / problems;
                match points.last_mut() {
                    Some(last) if last.ratio == r => last.fraction_solved = fraction_solved,
                    _ => points.push(ProfilePoint {
                        ratio: r,
                        fraction_solved,
                    }),
                }
            }
            points
        })
        .collect()
}

/// Mean-time matrix `[instance][method]` from cells at worker count `tau`,
/// with `+∞` for unsolved cells. Also returns the row and column labels.
pub fn time_matrix(cells: &[CellResult], tau: usize) -> (Vec<String>, Vec<String>, Vec<Vec<f64>>) {
    let mut instances: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for c in cells {
        if !instances.contains(&c.instance) {
            instances.push(c.instance.clone());
        }
        if !methods.contains(&c.method) {
            methods.push(c.method.clone());
        }
    }
    let mut times = vec![vec![f64::INFINITY; methods.len()]; instances.len()];
    for c in cells {
        let at_tau = c.tau == tau || (c.mode == Mode::SerialActive && c.tau == 1);
        if !at_tau || !c.solved() {
            continue;
        }
        let i = instances.iter().position(|s| *s == c.instance).expect("listed");
        let m = methods.iter().position(|s| *s == c.method).expect("listed");
        times[i][m] = c.mean_time;
    }
    (instances, methods, times)
}

/// `mean_time(τ=1) / mean_time(τ=k)` for one (instance, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub instance: String,
    pub method: String,
    pub base_time: f64,
    /// `(k, ratio)` for each `k > 1` present.
    pub ratios: Vec<(usize, f64)>,
}

impl SpeedupRow {
    /// `1T/kT = ratio` cells, e.g. `1T/4T = 3.9120`.
    pub fn formatted(&self) -> Vec<String> {
        self.ratios
            .iter()
            .map(|(k, r)| format!("1T/{k}T = {r:.4}"))
            .collect()
    }
}

pub fn speedup_table(cells: &[CellResult]) -> Vec<SpeedupRow> {
    let mut groups: BTreeMap<(String, String), Vec<&CellResult>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.error.is_none() && c.runs > 0) {
        groups
            .entry((c.instance.clone(), c.method.clone()))
            .or_default()
            .push(c);
    }
    let mut rows = Vec::new();
    for ((instance, method), group) in groups {
        let mut ks: Vec<usize> = group.iter().map(|c| c.tau).filter(|&k| k > 1).collect();
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() {
            continue;
        }
        let Some(base) = group.iter().find(|c| c.tau == 1) else {
            warn!("{instance} / {method}: no tau=1 cell, speedup omitted");
            continue;
        };
        let ratios = ks
            .into_iter()
            .filter_map(|k| group.iter().find(|c| c.tau == k))
            .map(|c| (c.tau, base.mean_time / c.mean_time))
            .collect();
        rows.push(SpeedupRow {
            instance,
            method,
            base_time: base.mean_time,
            ratios,
        });
    }
    rows
}

/// Everything a benchmark run emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<CellResult>,
    /// Per worker count: method labels and their profiles.
    pub profiles: Vec<ProfileSet>,
    pub speedups: Vec<SpeedupRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub tau: usize,
    pub methods: Vec<String>,
    pub curves: Vec<Vec<ProfilePoint>>,
}

pub fn report(cfg: &BenchConfig, cells: Vec<CellResult>) -> BenchReport {
    let profiles = cfg
        .threads
        .iter()
        .map(|&tau| {
            let (_, methods, times) = time_matrix(&cells, tau);
            ProfileSet {
                tau,
                methods,
                curves: performance_profile(&times),
            }
        })
        .collect();
    let speedups = speedup_table(&cells);
    BenchReport {
        cells,
        profiles,
        speedups,
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// JSON: one file. CSV: cells at `path`, plus `<stem>.profile.csv` and
/// `<stem>.speedup.csv` beside it. Returns the files written.
pub fn write_report(rep: &BenchReport, out: &OutputSpec) -> anyhow::Result<Vec<PathBuf>> {
    match out.format {
        OutputFormat::Json => {
            fs::write(&out.path, serde_json::to_string_pretty(rep)?)?;
            Ok(vec![out.path.clone()])
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(&out.path)?;
            w.write_record([
                "instance",
                "method",
                "mode",
                "tau",
                "runs",
                "mean_time",
                "mean_updates",
                "mean_final_objective",
                "success_rate",
                "f_target",
                "error",
            ])?;
            for c in &rep.cells {
                w.write_record([
                    c.instance.clone(),
                    c.method.clone(),
                    c.mode.as_str().to_string(),
                    c.tau.to_string(),
                    c.runs.to_string(),
                    c.mean_time.to_string(),
                    c.mean_updates.to_string(),
                    c.mean_final_objective.to_string(),
                    c.success_rate.to_string(),
                    c.f_target.map(|t| t.to_string()).unwrap_or_default(),
                    c.error.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;

            let profile_path = with_suffix(&out.path, "profile");
            let mut w = csv::Writer::from_path(&profile_path)?;
            w.write_record(["tau", "method", "log2_ratio", "fraction_solved"])?;
            for set in &rep.profiles {
                for (method, curve) in set.methods.iter().zip(&set.curves) {
                    for pt in curve {
                        w.write_record([
                            set.tau.to_string(),
                            method.clone(),
                            pt.ratio.to_string(),
                            pt.fraction_solved.to_string(),
                        ])?;
                    }
                }
            }
            w.flush()?;

            let speedup_path = with_suffix(&out.path, "speedup");
            let mut w = csv::Writer::from_path(&speedup_path)?;
            w.write_record(["instance", "method", "k", "ratio"])?;
            for row in &rep.speedups {
                for (k, r) in &row.ratios {
                    w.write_record([
                        row.instance.clone(),
                        row.method.clone(),
                        format!("1T/{k}T"),
                        format!("{r:.4}"),
                    ])?;
                }
            }
            w.flush()?;
            Ok(vec![out.path.clone(), profile_path, speedup_path])
        }
    }
}
