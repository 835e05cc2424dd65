//! `gcim`: sweeps, analytical curves, rate tables and self-checks.

mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gcim_core::analysis::{
    complexity_counts, energy_saving, measured_complexity, AbepBreakdown, TABLE1, TABLE2,
};
use gcim_core::sim::{format_real, run_sweep, write_csv_atomic, DetectorChoice, SweepSpec};
use gcim_core::{Error, NoiseSplit, SystemConfig};

#[derive(Parser, Debug)]
#[command(
    name = "gcim",
    version,
    about = "FDA-MIMO index-modulation link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo BER sweep with analytical columns, written as CSV.
    Simulate(SimulateArgs),
    /// Analytical error-probability breakdown only.
    Abep(AbepArgs),
    /// Data rate, energy saving and detector complexity per configuration.
    Tables(TablesArgs),
    /// Runs the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; defaults to (4,2,8,8,8) with two receive antennas.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `A:B:STEP` or a comma-separated list; `inf` means noise-free.
    #[arg(long, default_value = "0:20:5")]
    snr: String,
    /// Overrides the configuration's noise split.
    #[arg(long, value_enum)]
    noise_split: Option<SplitArg>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DetectorArg::Dblc)]
    detector: DetectorArg,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct AbepArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TablesArgs {
    /// Extra configurations to report after the built-in table rows.
    #[arg(long)]
    config: Vec<PathBuf>,
    /// Seed for the instrumented complexity trial.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest p_total for which the ML search is actually run to count
    /// multiplications.
    #[arg(long, default_value_t = 16)]
    ml_count_max_bits: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DetectorArg {
    Ml,
    Dblc,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    #[value(name = "branch_n0")]
    BranchN0,
    #[value(name = "branch_n0_over_m")]
    BranchN0OverM,
}

impl From<SplitArg> for NoiseSplit {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::BranchN0 => NoiseSplit::PerBranchN0,
            SplitArg::BranchN0OverM => NoiseSplit::PerBranchN0OverM,
        }
    }
}

impl From<DetectorArg> for DetectorChoice {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Ml => DetectorChoice::Ml,
            DetectorArg::Dblc => DetectorChoice::Dblc,
            DetectorArg::Both => DetectorChoice::Both,
        }
    }
}

/// Failure while reading an input file, reported as a runtime error.
#[derive(Debug)]
struct InputIo(String);

impl std::fmt::Display for InputIo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputIo {}

fn parse_snr_value(s: &str) -> anyhow::Result<f64> {
    let t = s.trim();
    let v = match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::Sweep(format!("bad SNR value {t:?}")))?,
    };
    if v.is_nan() || v == f64::NEG_INFINITY {
        return Err(Error::Sweep(format!("bad SNR value {t:?}")).into());
    }
    Ok(v)
}

fn parse_snr_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (
                parse_snr_value(a)?,
                parse_snr_value(b)?,
                parse_snr_value(step)?,
            );
            if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && b >= a) {
                return Err(Error::Sweep(format!("bad SNR range {spec:?}")).into());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [list] => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_snr_value)
            .collect(),
        _ => Err(Error::Sweep(format!("bad SNR grid {spec:?}")).into()),
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<SystemConfig> {
    match path {
        None => Ok(SystemConfig::default_small()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| InputIo(format!("reading {}: {e}", p.display())))?;
            Ok(
                SystemConfig::from_json(&text)
                    .with_context(|| format!("config {}", p.display()))?,
            )
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            let tmp = p.with_extension("partial");
            std::fs::write(&tmp, text)
                .map_err(|e| InputIo(format!("writing {}: {e}", tmp.display())))?;
            std::fs::rename(&tmp, p)
                .map_err(|e| InputIo(format!("renaming to {}: {e}", p.display())))?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let config = load_config(args.common.config.as_deref())?;
    let grid = parse_snr_grid(&args.common.snr)?;
    let mut spec = SweepSpec::new(config, grid, args.trials, args.seed, args.detector.into());
    if let Some(s) = args.common.noise_split {
        spec.noise_split = s.into();
    }
    spec.workers = args.workers;
    spec.validate()?;
    let records = run_sweep(&spec)?;
    for r in &records {
        log::info!(
            "snr {} dB {}: ber {:.3e} (abep {:.3e}), {:.2?}",
            r.snr_db,
            r.detector,
            r.ber_total(),
            r.analytic.abep,
            r.wall_time
        );
    }
    match &args.common.out {
        Some(p) => write_csv_atomic(p, &records)?,
        None => emit(None, &gcim_core::sim::records_to_csv(&records)?)?,
    }
    Ok(())
}

pub const ABEP_HEADER: &str =
    "snr_db,p_e,p_e_printed,p_f,p_f1,p_e_w_i,p_e_w_q,p_c_i,p_c_q,p_c,p_w,p_qam,p1,p2,p3,p4,p5,abep";

fn abep(args: AbepArgs) -> anyhow::Result<()> {
    let mut config = load_config(args.common.config.as_deref())?;
    if let Some(s) = args.common.noise_split {
        config.noise_split = s.into();
    }
    let grid = parse_snr_grid(&args.common.snr)?;
    if grid.is_empty() {
        return Err(Error::Sweep("SNR grid is empty".into()).into());
    }
    let mut text = format!("{ABEP_HEADER}\n");
    for snr in grid {
        let a = AbepBreakdown::evaluate(&config, snr)?;
        let row = [
            a.snr_db,
            a.p_e,
            a.p_e_printed,
            a.p_f,
            a.p_f1,
            a.p_e_w_i,
            a.p_e_w_q,
            a.p_c_i,
            a.p_c_q,
            a.p_c,
            a.p_w,
            a.p_qam,
            a.p1,
            a.p2,
            a.p3,
            a.p4,
            a.p5,
            a.abep,
        ];
        let cells: Vec<String> = row.iter().copied().map(format_real).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    emit(args.common.out.as_deref(), &text)
}

pub const TABLES_HEADER: &str = "source,n_t,n_active,m_offsets,l_codes,j_qam,p_total,published,e_sav_pct,\
ml_formula,dblc_formula,ml_measured,dblc_measured,quoted_fopim,quoted_gscim,quoted_gcim_sm,quoted_sm";

fn table_row(
    source: &str,
    cfg: &SystemConfig,
    published: Option<usize>,
    quoted: [String; 4],
    args: &TablesArgs,
) -> anyhow::Result<String> {
    let c = complexity_counts(cfg);
    let (ml_meas, dblc_meas) = measured_complexity(cfg, args.seed, args.ml_count_max_bits)?;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let cells = [
        source.to_string(),
        cfg.n_t.to_string(),
        cfg.n_active.to_string(),
        cfg.m_offsets.to_string(),
        cfg.l_codes.to_string(),
        cfg.j_qam.to_string(),
        cfg.p_total().to_string(),
        opt(published.map(|p| p.to_string())),
        format!("{:.2}", energy_saving(cfg)),
        c.ml.to_string(),
        c.dblc.to_string(),
        opt(ml_meas.map(|m| m.to_string())),
        dblc_meas.to_string(),
    ];
    Ok(cells
        .into_iter()
        .chain(quoted)
        .collect::<Vec<_>>()
        .join(","))
}

fn tables(args: TablesArgs) -> anyhow::Result<()> {
    let mut text = format!("{TABLES_HEADER}\n");
    let from = |p: (usize, usize, usize, usize, usize)| SystemConfig::new(p.0, p.1, p.2, p.3, p.4);
    for row in TABLE2 {
        let quoted = row.quoted.map(|q| q.to_string());
        text.push_str(&table_row(
            "table2",
            &from(row.params)?,
            Some(row.published),
            quoted,
            &args,
        )?);
        text.push('\n');
    }
    for row in TABLE1 {
        let quoted = row.quoted.map(|q| format!("{q}"));
        text.push_str(&table_row(
            "table1",
            &from(row.params)?,
            None,
            quoted,
            &args,
        )?);
        text.push('\n');
    }
    for path in &args.config {
        let cfg = load_config(Some(path))?;
        let dash = || "-".to_string();
        text.push_str(&table_row(
            &path.display().to_string(),
            &cfg,
            None,
            [dash(), dash(), dash(), dash()],
            &args,
        )?);
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputIo>().is_some() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::MlGuard { .. }) => 4,
        Some(
            Error::Config(_)
            | Error::Sweep(_)
            | Error::BitLength { .. }
            | Error::RankOutOfRange { .. },
        ) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Abep(a) => abep(a),
        Command::Tables(a) => tables(a),
        Command::Verify(a) => {
            let failures = verify::run(a.trials, a.seed)?;
            if failures > 0 {
                bail!(anyhow!("{failures} verification check(s) failed"));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
