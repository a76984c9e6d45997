//! Experiment harness: sweeps an SNR grid over random channel drops for a
//! set of allocation schemes, aggregates per-cell statistics, and
//! serializes results reproducibly.
//!
//! One channel drop is reused across every SNR point and scheme so
//! comparisons are paired. The SNR axis holds the noise power at its
//! configured value and scales the per-user power budget, so
//! `snr = p_max / noise_power`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_ee_solve, baseline_rate_solve, BaselineScheme};
use crate::channel::{generate_user_population, Codebook};
use crate::clustering::{cluster_users, select_beams, BeamPlan};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::maxmin::{
    bisection, max_min_rate_solve, MaxminOptions, MaxminScheme,
};
use crate::noma::{Counters, Solution, Traces};
use crate::scalar::{fl, Scalar};

/// Allocation schemes the runner can sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    /// Joint detection and power optimization.
    Scheme1,
    /// Fixed zero-forcing detection, optimized power.
    Scheme2,
    /// Fixed zero-forcing detection with cluster-sequential cancellation.
    Scheme3,
    /// Fixed zero-forcing detection without weak-interference removal.
    Scheme4,
    /// Orthogonal half-slot transmission.
    Oma,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Scheme1,
        SchemeId::Scheme2,
        SchemeId::Scheme3,
        SchemeId::Scheme4,
        SchemeId::Oma,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeId::Scheme1 => "scheme1",
            SchemeId::Scheme2 => "scheme2",
            SchemeId::Scheme3 => "scheme3",
            SchemeId::Scheme4 => "scheme4",
            SchemeId::Oma => "oma",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeId> {
        SchemeId::ALL.into_iter().find(|id| id.label() == s)
    }
}

/// Quantities the runner records per drop and aggregates per cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Worst-user energy efficiency from the efficiency solve.
    MinEe,
    /// Sum spectral efficiency of the max-min rate allocation.
    SumSe,
    /// Worst-user rate of the max-min rate allocation.
    MinRate,
    /// Iteration counters of the efficiency solve, one metric row each.
    IterationCounts,
    /// Per-drop objective traces (JSON report only).
    Traces,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::MinEe,
        OutputKind::SumSe,
        OutputKind::MinRate,
        OutputKind::IterationCounts,
        OutputKind::Traces,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OutputKind::MinEe => "min_ee",
            OutputKind::SumSe => "sum_se",
            OutputKind::MinRate => "min_rate",
            OutputKind::IterationCounts => "iteration_counts",
            OutputKind::Traces => "traces",
        }
    }

    pub fn parse(s: &str) -> Option<OutputKind> {
        OutputKind::ALL.into_iter().find(|k| k.label() == s)
    }
}

/// Full description of one experiment sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(
    bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"),
    default
)]
pub struct ExperimentSpec<T: Scalar> {
    /// System parameters; `p_max` is overridden per SNR point.
    pub config: SystemConfig<T>,
    /// SNR points in dB, where `snr = p_max / noise_power`.
    pub snr_grid_db: Vec<T>,
    /// Channel drops per SNR point.
    pub n_drops: usize,
    /// Schemes to sweep, in emission order.
    pub schemes: Vec<SchemeId>,
    /// Root seed; every drop derives from it deterministically.
    pub seed: u64,
    /// Recorded outputs.
    pub outputs: Vec<OutputKind>,
    /// Candidate users drawn per beam before pairing.
    pub candidates_per_beam: usize,
    /// Redraw attempts when a drop leaves some beam underfilled.
    pub max_redraws: usize,
    /// Worker threads; 0 uses the global thread pool.
    pub workers: usize,
    /// Which beam subset of the codebook the analog stage selects.
    pub beam_family: usize,
}

impl<T: Scalar> Default for ExperimentSpec<T> {
    fn default() -> Self {
        Self {
            config: SystemConfig::default(),
            snr_grid_db: vec![T::zero(), fl(10.0), fl(20.0)],
            n_drops: 200,
            schemes: SchemeId::ALL.to_vec(),
            seed: 1,
            outputs: vec![OutputKind::MinEe, OutputKind::SumSe, OutputKind::MinRate],
            candidates_per_beam: 2,
            max_redraws: 50,
            workers: 0,
            beam_family: 0,
        }
    }
}

impl<T: Scalar> ExperimentSpec<T> {
    /// System configuration at one SNR point: the budget moves, the noise
    /// stays anchored.
    pub fn config_at(&self, snr_db: T) -> SystemConfig<T> {
        let snr = fl::<T>(10.0).powf(snr_db / fl(10.0));
        SystemConfig {
            p_max: snr * self.config.noise_power,
            ..self.config.clone()
        }
    }

    fn wants(&self, k: OutputKind) -> bool {
        self.outputs.contains(&k)
    }
}

/// One aggregated cell of the result table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct Row<T> {
    pub snr_db: T,
    pub scheme: SchemeId,
    pub metric: String,
    pub mean: T,
    pub stderr: T,
    pub n_effective_drops: usize,
}

/// Drops excluded from a cell, by cause.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct RejectionRow<T> {
    pub snr_db: T,
    pub scheme: SchemeId,
    /// Drops whose rate floor is unreachable within the budget.
    pub infeasible: usize,
    /// Drops the solver failed on for any other reason.
    pub failed: usize,
}

/// Per-drop detail kept when [`OutputKind::Traces`] is requested.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct DropDetail<T> {
    pub snr_db: T,
    pub scheme: SchemeId,
    pub drop: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ee: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_se: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_rate: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counters: Option<Counters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Traces<T>>,
}

/// Everything a sweep produces.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct RunOutput<T> {
    pub rows: Vec<Row<T>>,
    /// Cells that lost drops, omitted when clean.
    pub rejections: Vec<RejectionRow<T>>,
    /// Drops that never produced a clusterable population.
    pub undrawable_drops: usize,
    /// Per-drop details; empty unless traces were requested.
    pub drops: Vec<DropDetail<T>>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel seed for one drop attempt, decorrelated from neighbours.
pub fn drop_seed(seed: u64, drop: usize, attempt: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ drop as u64) ^ attempt as u64)
}

/// Values recorded for one (drop, SNR, scheme) cell.
#[derive(Clone, Debug)]
enum CellOutcome<T> {
    Solved(Box<DropRecord<T>>),
    Infeasible,
    Failed,
}

#[derive(Clone, Debug)]
struct DropRecord<T> {
    min_ee: Option<T>,
    sum_se: Option<T>,
    min_rate: Option<T>,
    counters: Option<Counters>,
    traces: Option<Traces<T>>,
}

fn solve_cell<T: Scalar>(
    spec: &ExperimentSpec<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: SchemeId,
    opts: &MaxminOptions<T>,
) -> CellOutcome<T> {
    let need_ee = spec.wants(OutputKind::MinEe)
        || spec.wants(OutputKind::IterationCounts)
        || spec.wants(OutputKind::Traces);
    let need_rate = spec.wants(OutputKind::SumSe) || spec.wants(OutputKind::MinRate);

    let ee_solve = |()| -> Result<Solution<T>> {
        match scheme {
            SchemeId::Scheme1 => bisection(plan, cfg, MaxminScheme::Joint, opts),
            SchemeId::Scheme2 => bisection(plan, cfg, MaxminScheme::ZfFixed, opts),
            SchemeId::Scheme3 => baseline_ee_solve(plan, cfg, BaselineScheme::Scheme3, opts),
            SchemeId::Scheme4 => baseline_ee_solve(plan, cfg, BaselineScheme::Scheme4, opts),
            SchemeId::Oma => baseline_ee_solve(plan, cfg, BaselineScheme::Oma, opts),
        }
    };
    let rate_solve = |()| -> Result<Solution<T>> {
        match scheme {
            SchemeId::Scheme1 => max_min_rate_solve(plan, cfg, MaxminScheme::Joint, opts),
            SchemeId::Scheme2 => max_min_rate_solve(plan, cfg, MaxminScheme::ZfFixed, opts),
            SchemeId::Scheme3 => baseline_rate_solve(plan, cfg, BaselineScheme::Scheme3, opts),
            SchemeId::Scheme4 => baseline_rate_solve(plan, cfg, BaselineScheme::Scheme4, opts),
            SchemeId::Oma => baseline_rate_solve(plan, cfg, BaselineScheme::Oma, opts),
        }
    };

    let mut rec = DropRecord {
        min_ee: None,
        sum_se: None,
        min_rate: None,
        counters: None,
        traces: None,
    };
    if need_ee {
        match ee_solve(()) {
            Ok(sol) => {
                rec.min_ee = Some(sol.min_ee);
                rec.counters = Some(sol.counters);
                if spec.wants(OutputKind::Traces) {
                    rec.traces = Some(sol.traces);
                }
            }
            Err(Error::Infeasible) => return CellOutcome::Infeasible,
            Err(_) => return CellOutcome::Failed,
        }
    }
    if need_rate {
        match rate_solve(()) {
            Ok(sol) => {
                rec.sum_se = Some(sol.sum_rate);
                rec.min_rate = Some(sol.min_rate);
            }
            Err(Error::Infeasible) => return CellOutcome::Infeasible,
            Err(_) => return CellOutcome::Failed,
        }
    }
    CellOutcome::Solved(Box::new(rec))
}

/// Outcome of one drop across the whole (SNR, scheme) grid; `None` when
/// no attempt produced a clusterable population.
type DropCells<T> = Option<Vec<Vec<CellOutcome<T>>>>;

fn run_drop<T: Scalar>(
    spec: &ExperimentSpec<T>,
    codebook: &Codebook<T>,
    beams: &[usize],
    configs: &[SystemConfig<T>],
    opts: &MaxminOptions<T>,
    drop: usize,
) -> DropCells<T> {
    let plan = (0..=spec.max_redraws).find_map(|attempt| {
        let seed = drop_seed(spec.seed, drop, attempt);
        let channels =
            generate_user_population(&spec.config, codebook, beams, spec.candidates_per_beam, seed)
                .ok()?;
        cluster_users(codebook, beams, &channels).ok()
    })?;
    let grid = configs
        .iter()
        .map(|cfg| {
            spec.schemes
                .iter()
                .map(|&scheme| solve_cell(spec, &plan, cfg, scheme, opts))
                .collect()
        })
        .collect();
    Some(grid)
}

fn mean_stderr<T: Scalar>(values: &[T]) -> (T, T) {
    let n = fl::<T>(values.len() as f64);
    let mean = values.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let ss = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .fold(T::zero(), |a, b| a + b);
    (mean, (ss / (n - T::one()) / n).sqrt())
}

const COUNTER_METRICS: [&str; 7] = [
    "bisection_iters",
    "alternation_rounds",
    "sca_rounds",
    "cccp_rounds",
    "subproblem_solves",
    "newton_steps",
    "rejected_steps",
];

fn counter_value(c: &Counters, name: &str) -> usize {
    match name {
        "bisection_iters" => c.bisection_iters,
        "alternation_rounds" => c.alternation_rounds,
        "sca_rounds" => c.sca_rounds,
        "cccp_rounds" => c.cccp_rounds,
        "subproblem_solves" => c.subproblem_solves,
        "newton_steps" => c.newton_steps,
        "rejected_steps" => c.rejected_steps,
        _ => unreachable!("unknown counter {name}"),
    }
}

/// Runs the sweep. Drops are solved in parallel; rows, rejections and
/// drop details are assembled in deterministic (SNR, scheme, drop) order
/// regardless of worker count.
pub fn run<T: Scalar>(spec: &ExperimentSpec<T>) -> Result<RunOutput<T>> {
    spec.config.validate()?;
    if spec.snr_grid_db.is_empty() {
        return Err(Error::InvalidConfig("empty SNR grid".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::InvalidConfig("no schemes selected".into()));
    }
    let codebook = Codebook::dft(spec.config.n_antennas, spec.config.codebook_size);
    let beams = select_beams(spec.config.codebook_size, spec.config.n_rf, spec.beam_family)?;
    let configs: Vec<SystemConfig<T>> = spec
        .snr_grid_db
        .iter()
        .map(|&s| spec.config_at(s))
        .collect();
    for cfg in &configs {
        cfg.validate()?;
    }
    let opts = MaxminOptions::default();

    let solve_all = || -> Vec<DropCells<T>> {
        use rayon::prelude::*;
        (0..spec.n_drops)
            .into_par_iter()
            .map(|drop| run_drop(spec, &codebook, &beams, &configs, &opts, drop))
            .collect()
    };
    let outcomes: Vec<DropCells<T>> = if spec.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::Solver(format!("thread pool: {e}")))?
            .install(solve_all)
    } else {
        solve_all()
    };

    let undrawable_drops = outcomes.iter().filter(|o| o.is_none()).count();
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    let mut drops = Vec::new();
    for (si, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        for (ki, &scheme) in spec.schemes.iter().enumerate() {
            let cells: Vec<(usize, &CellOutcome<T>)> = outcomes
                .iter()
                .enumerate()
                .filter_map(|(d, o)| o.as_ref().map(|grid| (d, &grid[si][ki])))
                .collect();
            let solved: Vec<(usize, &DropRecord<T>)> = cells
                .iter()
                .filter_map(|&(d, c)| match c {
                    CellOutcome::Solved(r) => Some((d, r.as_ref())),
                    _ => None,
                })
                .collect();
            let infeasible = cells
                .iter()
                .filter(|(_, c)| matches!(c, CellOutcome::Infeasible))
                .count();
            let failed = cells
                .iter()
                .filter(|(_, c)| matches!(c, CellOutcome::Failed))
                .count();
            if infeasible + failed > 0 {
                rejections.push(RejectionRow {
                    snr_db,
                    scheme,
                    infeasible,
                    failed,
                });
            }
            let mut push_metric = |metric: &str, values: Vec<T>| {
                if values.is_empty() {
                    return;
                }
                let (mean, stderr) = mean_stderr(&values);
                rows.push(Row {
                    snr_db,
                    scheme,
                    metric: metric.to_string(),
                    mean,
                    stderr,
                    n_effective_drops: values.len(),
                });
            };
            for kind in [OutputKind::MinEe, OutputKind::SumSe, OutputKind::MinRate] {
                if !spec.wants(kind) {
                    continue;
                }
                let pick = |r: &DropRecord<T>| match kind {
                    OutputKind::MinEe => r.min_ee,
                    OutputKind::SumSe => r.sum_se,
                    OutputKind::MinRate => r.min_rate,
                    _ => None,
                };
                push_metric(
                    kind.label(),
                    solved.iter().filter_map(|(_, r)| pick(r)).collect(),
                );
            }
            if spec.wants(OutputKind::IterationCounts) {
                for name in COUNTER_METRICS {
                    push_metric(
                        name,
                        solved
                            .iter()
                            .filter_map(|(_, r)| r.counters.as_ref())
                            .map(|c| fl(counter_value(c, name) as f64))
                            .collect(),
                    );
                }
            }
            if spec.wants(OutputKind::Traces) {
                for &(d, rec) in &solved {
                    drops.push(DropDetail {
                        snr_db,
                        scheme,
                        drop: d,
                        min_ee: rec.min_ee,
                        sum_se: rec.sum_se,
                        min_rate: rec.min_rate,
                        counters: rec.counters.clone(),
                        traces: rec.traces.clone(),
                    });
                }
            }
        }
    }
    Ok(RunOutput {
        rows,
        rejections,
        undrawable_drops,
        drops,
    })
}

/// `x` with 12 significant digits, stable across runs.
fn sig12<T: Scalar>(x: T) -> String {
    format!("{:.11e}", x.to_f64().unwrap_or(f64::NAN))
}

/// Writes the aggregate table as CSV with columns
/// `snr_db,scheme,metric,mean,stderr,n_effective_drops`.
pub fn write_csv<T: Scalar, W: Write>(rows: &[Row<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snr_db", "scheme", "metric", "mean", "stderr", "n_effective_drops"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            sig12(r.snr_db),
            r.scheme.label().to_string(),
            r.metric.clone(),
            sig12(r.mean),
            sig12(r.stderr),
            r.n_effective_drops.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Solver(format!("csv: {e}"))
}

pub fn csv_string<T: Scalar>(rows: &[Row<T>]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Solver(format!("csv utf8: {e}")))
}

/// Full JSON report: the spec, the CSV rows verbatim, rejection counts
/// and per-drop details when traces were requested.
#[derive(Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
struct Report<'a, T: Scalar> {
    spec: &'a ExperimentSpec<T>,
    rows: &'a [Row<T>],
    rejections: &'a [RejectionRow<T>],
    undrawable_drops: usize,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    drops: &'a [DropDetail<T>],
}

pub fn write_json<T: Scalar + Serialize, W: Write>(
    spec: &ExperimentSpec<T>,
    out_data: &RunOutput<T>,
    out: W,
) -> Result<()> {
    let report = Report {
        spec,
        rows: &out_data.rows,
        rejections: &out_data.rejections,
        undrawable_drops: out_data.undrawable_drops,
        drops: &out_data.drops,
    };
    serde_json::to_writer_pretty(out, &report)
        .map_err(|e| Error::Solver(format!("json: {e}")))?;
    Ok(())
}

pub fn json_string<T: Scalar + Serialize>(
    spec: &ExperimentSpec<T>,
    out_data: &RunOutput<T>,
) -> Result<String> {
    let mut buf = Vec::new();
    write_json(spec, out_data, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Solver(format!("json utf8: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec<f64> {
        ExperimentSpec {
            config: SystemConfig {
                n_antennas: 8,
                n_rf: 2,
                codebook_size: 8,
                ..SystemConfig::default()
            },
            snr_grid_db: vec![10.0, 20.0],
            n_drops: 3,
            schemes: vec![SchemeId::Scheme2, SchemeId::Oma],
            seed: 7,
            outputs: vec![OutputKind::MinEe, OutputKind::SumSe, OutputKind::MinRate],
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn snr_anchoring_moves_the_budget_not_the_noise() {
        let spec = ExperimentSpec::<f64>::default();
        let cfg = spec.config_at(20.0);
        assert!((cfg.p_max - 1.0).abs() < 1e-12);
        assert_eq!(cfg.noise_power, spec.config.noise_power);
        let cfg = spec.config_at(0.0);
        assert!((cfg.p_max - 0.01).abs() < 1e-15);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let spec = tiny_spec();
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        assert_eq!(csv_string(&a.rows).unwrap(), csv_string(&b.rows).unwrap());
        assert_eq!(
            json_string(&spec, &a).unwrap(),
            json_string(&spec, &b).unwrap()
        );
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut spec = tiny_spec();
        spec.workers = 1;
        let serial = run(&spec).unwrap();
        spec.workers = 4;
        let parallel = run(&spec).unwrap();
        assert_eq!(
            csv_string(&serial.rows).unwrap(),
            csv_string(&parallel.rows).unwrap()
        );
    }

    #[test]
    fn rows_cover_every_cell_in_order() {
        let spec = tiny_spec();
        let out = run(&spec).unwrap();
        let mut expect = Vec::new();
        for &snr in &spec.snr_grid_db {
            for &scheme in &spec.schemes {
                for metric in ["min_ee", "sum_se", "min_rate"] {
                    expect.push((snr, scheme, metric.to_string()));
                }
            }
        }
        let got: Vec<_> = out
            .rows
            .iter()
            .map(|r| (r.snr_db, r.scheme, r.metric.clone()))
            .collect();
        assert_eq!(got, expect);
        for r in &out.rows {
            assert!(r.n_effective_drops <= spec.n_drops);
            assert!(r.mean.is_finite());
            assert!(r.stderr >= 0.0);
        }
    }

    #[test]
    fn unreachable_floor_leaves_cells_missing_without_crashing() {
        let mut spec = tiny_spec();
        spec.config.r_min = 60.0;
        spec.snr_grid_db = vec![10.0];
        let out = run(&spec).unwrap();
        assert!(out.rows.is_empty());
        let rejected: usize = out
            .rejections
            .iter()
            .map(|r| r.infeasible + r.failed)
            .sum();
        assert_eq!(
            rejected + out.undrawable_drops * spec.schemes.len(),
            spec.n_drops * spec.schemes.len()
        );
        let csv = csv_string(&out.rows).unwrap();
        assert_eq!(csv.trim_end(), "snr_db,scheme,metric,mean,stderr,n_effective_drops");
    }

    #[test]
    fn traces_request_fills_drop_details() {
        let mut spec = tiny_spec();
        spec.n_drops = 2;
        spec.snr_grid_db = vec![10.0];
        spec.schemes = vec![SchemeId::Scheme2];
        spec.outputs = vec![OutputKind::MinEe, OutputKind::Traces, OutputKind::IterationCounts];
        let out = run(&spec).unwrap();
        assert!(!out.drops.is_empty());
        for d in &out.drops {
            let tr = d.traces.as_ref().expect("traces recorded");
            assert!(!tr.bisection.is_empty());
            assert!(d.counters.is_some());
        }
        assert!(out.rows.iter().any(|r| r.metric == "bisection_iters"));
        let json = json_string(&spec, &out).unwrap();
        assert!(json.contains("\"drops\""));
        assert!(json.contains("\"bisection\""));
    }

    #[test]
    fn spec_roundtrips_through_serde_with_defaults() {
        let spec = tiny_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back.snr_grid_db, spec.snr_grid_db);
        assert_eq!(back.schemes, spec.schemes);
        assert_eq!(back.seed, spec.seed);
        let sparse: ExperimentSpec<f64> =
            serde_json::from_str(r#"{"n_drops": 5, "schemes": ["scheme1", "oma"]}"#).unwrap();
        assert_eq!(sparse.n_drops, 5);
        assert_eq!(sparse.schemes, vec![SchemeId::Scheme1, SchemeId::Oma]);
        assert_eq!(sparse.config.n_antennas, 32);
    }

    #[test]
    fn scheme_and_output_labels_roundtrip() {
        for id in SchemeId::ALL {
            assert_eq!(SchemeId::parse(id.label()), Some(id));
        }
        for k in OutputKind::ALL {
            assert_eq!(OutputKind::parse(k.label()), Some(k));
        }
        assert_eq!(SchemeId::parse("scheme9"), None);
    }
}
