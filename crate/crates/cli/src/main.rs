//! Command line front end: `run` sweeps experiments, `oracle` validates
//! the solver against the brute-force grid on tiny instances, `codebook`
//! dumps analog beam patterns.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mmnoma::channel::{generate_user_population, steering_vector, Codebook};
use mmnoma::clustering::{cluster_users, select_beams};
use mmnoma::harness::{self, drop_seed, ExperimentSpec, OutputKind, SchemeId};
use mmnoma::linalg::inner;
use mmnoma::maxmin::{scheme2_solve, MaxminOptions};
use mmnoma::noma::{decoding_order, zf_detection, GainTable, InterferenceMap};
use mmnoma::oracle::{ee_grid_gap_bound, grid_maxmin_ee, power_grid};
use mmnoma::SystemConfig64;

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "MMNOMA_OUT_DIR";

#[derive(Parser)]
#[command(name = "mmnoma", version, about = "mmWave MIMO-NOMA uplink simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment sweep and write CSV/JSON results.
    Run(RunArgs),
    /// Compare the power solver against the brute-force grid oracle on
    /// tiny instances.
    Oracle(OracleArgs),
    /// Dump codebook beam patterns over a sine-space angle grid as CSV.
    Codebook(CodebookArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file whose keys mirror the experiment and system field names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $MMNOMA_OUT_DIR, then the working dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base name of the emitted `<name>.csv` / `<name>.json` pair.
    #[arg(long, default_value = "results")]
    name: String,

    #[arg(long)]
    n_antennas: Option<usize>,
    #[arg(long)]
    n_rf: Option<usize>,
    #[arg(long)]
    codebook_size: Option<usize>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    noise_power: Option<f64>,
    #[arg(long)]
    circuit_power: Option<f64>,
    #[arg(long)]
    amp_inefficiency: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    antenna_spacing: Option<f64>,

    /// SNR points in dB (repeatable or comma separated).
    #[arg(long = "snr-db", value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    n_drops: Option<usize>,
    /// Scheme selection: scheme1..scheme4, oma (repeatable or comma
    /// separated).
    #[arg(long = "scheme", value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Recorded outputs: min_ee, sum_se, min_rate, iteration_counts,
    /// traces.
    #[arg(long = "output", value_delimiter = ',')]
    output: Option<Vec<String>>,
    /// Capture per-drop objective traces in the JSON report.
    #[arg(long)]
    traces: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    candidates_per_beam: Option<usize>,
    #[arg(long)]
    max_redraws: Option<usize>,
    #[arg(long)]
    beam_family: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 8)]
    n_antennas: usize,
    #[arg(long, default_value_t = 2)]
    n_rf: usize,
    #[arg(long, default_value_t = 8)]
    codebook_size: usize,
    /// Grid points per user in the exhaustive search.
    #[arg(long, default_value_t = 20)]
    grid_points: usize,
    /// Number of random instances to check.
    #[arg(long, default_value_t = 3)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.05)]
    r_min: f64,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long, default_value_t = 32)]
    n_antennas: usize,
    #[arg(long, default_value_t = 32)]
    codebook_size: usize,
    #[arg(long, default_value_t = 0.5)]
    antenna_spacing: f64,
    /// Sample count of the sine-space angle grid.
    #[arg(long, default_value_t = 241)]
    angle_points: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(args) => run_cmd(args),
        Cmd::Oracle(args) => oracle_cmd(args),
        Cmd::Codebook(args) => codebook_cmd(args),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_schemes(names: &[String]) -> Result<Vec<SchemeId>> {
    names
        .iter()
        .map(|s| {
            SchemeId::parse(s)
                .with_context(|| format!("unknown scheme {s:?}; expected scheme1..scheme4 or oma"))
        })
        .collect()
}

fn parse_outputs(names: &[String]) -> Result<Vec<OutputKind>> {
    names
        .iter()
        .map(|s| {
            OutputKind::parse(s).with_context(|| {
                format!(
                    "unknown output {s:?}; expected min_ee, sum_se, min_rate, \
                     iteration_counts or traces"
                )
            })
        })
        .collect()
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec<f64>> {
    let mut spec: ExperimentSpec<f64> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentSpec::default(),
    };
    macro_rules! set {
        ($field:ident, $target:expr) => {
            if let Some(v) = args.$field {
                $target = v;
            }
        };
    }
    set!(n_antennas, spec.config.n_antennas);
    set!(n_rf, spec.config.n_rf);
    set!(codebook_size, spec.config.codebook_size);
    set!(n_paths, spec.config.n_paths);
    set!(noise_power, spec.config.noise_power);
    set!(circuit_power, spec.config.circuit_power);
    set!(amp_inefficiency, spec.config.amp_inefficiency);
    set!(r_min, spec.config.r_min);
    set!(antenna_spacing, spec.config.antenna_spacing);
    set!(n_drops, spec.n_drops);
    set!(seed, spec.seed);
    set!(workers, spec.workers);
    set!(candidates_per_beam, spec.candidates_per_beam);
    set!(max_redraws, spec.max_redraws);
    set!(beam_family, spec.beam_family);
    if let Some(snr) = &args.snr_db {
        spec.snr_grid_db = snr.clone();
    }
    if let Some(names) = &args.scheme {
        spec.schemes = parse_schemes(names)?;
    }
    if let Some(names) = &args.output {
        spec.outputs = parse_outputs(names)?;
    }
    if args.traces && !spec.outputs.contains(&OutputKind::Traces) {
        spec.outputs.push(OutputKind::Traces);
    }
    Ok(spec)
}

fn run_cmd(args: RunArgs) -> Result<()> {
    let spec = build_spec(&args)?;
    let out = harness::run(&spec)?;
    let dir = out_dir(args.out_dir);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join(format!("{}.csv", args.name));
    let json_path = dir.join(format!("{}.json", args.name));
    harness::write_csv(&out.rows, fs::File::create(&csv_path)?)?;
    harness::write_json(&spec, &out, fs::File::create(&json_path)?)?;
    println!(
        "wrote {} ({} rows) and {}",
        csv_path.display(),
        out.rows.len(),
        json_path.display()
    );
    for r in &out.rejections {
        println!(
            "rejected at snr {} dB, {}: {} infeasible, {} failed",
            r.snr_db,
            r.scheme.label(),
            r.infeasible,
            r.failed
        );
    }
    if out.undrawable_drops > 0 {
        println!(
            "{} drop(s) never produced a clusterable population",
            out.undrawable_drops
        );
    }
    Ok(())
}

fn oracle_cmd(args: OracleArgs) -> Result<()> {
    let cfg = SystemConfig64 {
        n_antennas: args.n_antennas,
        n_rf: args.n_rf,
        codebook_size: args.codebook_size,
        r_min: args.r_min,
        p_max: 10f64.powf(args.snr_db / 10.0) * SystemConfig64::default().noise_power,
        ..SystemConfig64::default()
    };
    cfg.validate()?;
    let codebook = Codebook::dft(cfg.n_antennas, cfg.codebook_size);
    let beams = select_beams(cfg.codebook_size, cfg.n_rf, 0)?;
    let opts = MaxminOptions::default();
    let mut checked = 0usize;
    let mut attempt = 0usize;
    let mut violations = 0usize;
    while checked < args.instances {
        attempt += 1;
        if attempt > args.instances * 200 {
            bail!("could not draw {} feasible instances", args.instances);
        }
        let seed = drop_seed(args.seed, checked, attempt);
        let Ok(channels) = generate_user_population(&cfg, &codebook, &beams, 2, seed) else {
            continue;
        };
        let Ok(plan) = cluster_users(&codebook, &beams, &channels) else {
            continue;
        };
        let Ok(det) = zf_detection(&plan) else {
            continue;
        };
        let order = decoding_order(&plan);
        let map = InterferenceMap::zf_weak(&order, plan.n_beams());
        let Ok(sol) = scheme2_solve(&plan, &cfg, &opts) else {
            continue;
        };
        let (eta_oracle, _) = grid_maxmin_ee(&det, &plan, &cfg, &map, args.grid_points)?;
        let gains = GainTable::build(&det, &plan, &cfg);
        let grid = power_grid(&cfg, args.grid_points);
        let bound = ee_grid_gap_bound(&gains, &map, &cfg, &grid);
        let ok = sol.min_ee >= eta_oracle - bound - opts.epsilon
            && sol.min_ee <= eta_oracle + bound + opts.epsilon;
        println!(
            "instance {checked}: solver {:.6} oracle {:.6} bound {:.6} -> {}",
            sol.min_ee,
            eta_oracle,
            bound,
            if ok { "within bound" } else { "OUTSIDE BOUND" }
        );
        if !ok {
            violations += 1;
        }
        checked += 1;
    }
    if violations > 0 {
        bail!("{violations} instance(s) fell outside the oracle bound");
    }
    println!("all {} instance(s) within the oracle bound", args.instances);
    Ok(())
}

fn codebook_cmd(args: CodebookArgs) -> Result<()> {
    if args.angle_points < 2 {
        bail!("angle-points must be at least 2");
    }
    let cb = Codebook::<f64>::dft(args.n_antennas, args.codebook_size);
    let mut text = String::from("column,sin_theta,gain\n");
    for k in 0..cb.size() {
        for s in 0..args.angle_points {
            let sine = -1.0 + 2.0 * s as f64 / (args.angle_points - 1) as f64;
            let a = steering_vector(args.n_antennas, args.antenna_spacing, sine.asin());
            let gain = inner(cb.column(k), &a).norm_sqr();
            text.push_str(&format!("{k},{sine},{gain}\n"));
        }
    }
    match &args.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
