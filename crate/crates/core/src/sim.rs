//! Monte Carlo engine: seeded per-trial streams, parallel trials, per-field
//! BER, paired detector runs and CSV output.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::AbepBreakdown;
use crate::channel::{sample_channel, synth_paired, NoiseRealization};
use crate::config::{NoiseSplit, SystemConfig};
use crate::constellation::{build_constellation, Constellation};
use crate::detectors::{count_bit_errors, DblcDetector, ErrorCounts, MlDetector};
use crate::error::{Error, Result};
use crate::message::assemble_message;
use crate::scalar::Real;
use crate::spreading::{build_code_pools, CodePool};

pub const CSV_HEADER: &str =
    "snr_db,trials,ber_total,ber_freq,ber_code,ber_spatial,ber_realign,ber_qam,se_total,abep,p1,p2,p3,p4,p5,detector,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChoice {
    Ml,
    Dblc,
    Both,
}

impl DetectorChoice {
    fn kinds(self) -> &'static [DetectorKind] {
        match self {
            DetectorChoice::Ml => &[DetectorKind::Ml],
            DetectorChoice::Dblc => &[DetectorKind::Dblc],
            DetectorChoice::Both => &[DetectorKind::Ml, DetectorKind::Dblc],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Ml,
    Dblc,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Ml => "ml",
            DetectorKind::Dblc => "dblc",
        })
    }
}

/// A sweep over SNR points. `noise_split` overrides the configuration's.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub config: SystemConfig,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    pub master_seed: u64,
    pub detector: DetectorChoice,
    pub noise_split: NoiseSplit,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn new(
        config: SystemConfig,
        snr_grid_db: Vec<f64>,
        trials: u64,
        seed: u64,
        detector: DetectorChoice,
    ) -> Self {
        let noise_split = config.noise_split;
        Self {
            config,
            snr_grid_db,
            trials_per_point: trials,
            master_seed: seed,
            detector,
            noise_split,
            workers: None,
        }
    }

    pub fn effective_config(&self) -> SystemConfig {
        SystemConfig {
            noise_split: self.noise_split,
            ..self.config.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.trials_per_point == 0 {
            return Err(Error::Sweep("trials must be positive".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Sweep("SNR grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Sweep("SNR grid contains NaN".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Sweep("SNR grid must be sorted ascending".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Sweep("workers must be positive".into()));
        }
        if self.detector != DetectorChoice::Dblc {
            let p = self.config.p_total();
            if p > crate::detectors::ML_GUARD_BITS {
                return Err(Error::MlGuard {
                    p_total: p,
                    guard: crate::detectors::ML_GUARD_BITS,
                });
            }
        }
        Ok(())
    }
}

/// Simulated and analytical results for one (SNR, detector) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub trials: u64,
    pub detector: DetectorKind,
    pub seed: u64,
    pub p_total: usize,
    pub budget: crate::config::BitBudget,
    pub counts: ErrorCounts,
    pub analytic: AbepBreakdown,
    /// Trials where the ML metric exceeded the metric of the transmitted
    /// hypothesis or of the paired DBLC decision. Always zero for a correct
    /// exhaustive search.
    pub ml_optimality_violations: u64,
    pub rail_disagreements: u64,
    pub antenna_reassignments: u64,
    pub wall_time: Duration,
}

fn ratio(num: u64, trials: u64, width: usize) -> f64 {
    if width == 0 {
        0.0
    } else {
        num as f64 / (trials as f64 * width as f64)
    }
}

impl BerRecord {
    pub fn ber_total(&self) -> f64 {
        ratio(self.counts.total, self.trials, self.p_total)
    }
    pub fn ber_freq(&self) -> f64 {
        ratio(self.counts.freq, self.trials, self.budget.p_f)
    }
    pub fn ber_code(&self) -> f64 {
        ratio(self.counts.code, self.trials, self.budget.p_c)
    }
    pub fn ber_spatial(&self) -> f64 {
        ratio(self.counts.spatial, self.trials, self.budget.p_s)
    }
    pub fn ber_realign(&self) -> f64 {
        ratio(self.counts.realign, self.trials, self.budget.p_r)
    }
    pub fn ber_qam(&self) -> f64 {
        ratio(self.counts.qam, self.trials, self.budget.p_m)
    }

    /// `√(BER (1 - BER) / (trials p_total))`.
    pub fn se_total(&self) -> f64 {
        let b = self.ber_total();
        (b * (1.0 - b) / (self.trials as f64 * self.p_total as f64)).sqrt()
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let a = &self.analytic;
        vec![
            format_real(self.snr_db),
            self.trials.to_string(),
            format_real(self.ber_total()),
            format_real(self.ber_freq()),
            format_real(self.ber_code()),
            format_real(self.ber_spatial()),
            format_real(self.ber_realign()),
            format_real(self.ber_qam()),
            format_real(self.se_total()),
            format_real(a.abep),
            format_real(a.p1),
            format_real(a.p2),
            format_real(a.p3),
            format_real(a.p4),
            format_real(a.p5),
            self.detector.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Shortest round-trip text for `v`, switching to exponent notation outside
/// `[1e-4, 1e6)` so tiny probabilities stay readable.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Independent stream for `(seed, point, trial)`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    ml: ErrorCounts,
    dblc: ErrorCounts,
    violations: u64,
    rail: u64,
    reassigned: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.ml.merge(&o.ml);
        self.dblc.merge(&o.dblc);
        self.violations += o.violations;
        self.rail += o.rail;
        self.reassigned += o.reassigned;
        self
    }
}

struct Kit<T> {
    config: SystemConfig,
    pools: (CodePool, CodePool),
    constellation: Constellation<T>,
    dblc: DblcDetector<T>,
    ml: Option<MlDetector<T>>,
}

impl<T: Real> Kit<T> {
    fn new(config: SystemConfig, choice: DetectorChoice) -> Result<Self> {
        let pools = build_code_pools(&config)?;
        let constellation = build_constellation::<T>(config.j_qam)?;
        let dblc = DblcDetector::new(&config, (&pools.0, &pools.1), &constellation);
        let ml = match choice {
            DetectorChoice::Dblc => None,
            _ => Some(MlDetector::new(
                &config,
                (&pools.0, &pools.1),
                &constellation,
            )?),
        };
        Ok(Self {
            config,
            pools,
            constellation,
            dblc,
            ml,
        })
    }

    fn trial(&self, n0: f64, choice: DetectorChoice, rng: &mut ChaCha8Rng) -> Result<Tally> {
        let cfg = &self.config;
        let bits: Vec<u8> = (0..cfg.p_total())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let msg = assemble_message(&bits, cfg)?;
        let chan = sample_channel::<T, _>(cfg, rng);
        let noise = NoiseRealization::draw(cfg, rng);
        let pools = (&self.pools.0, &self.pools.1);
        let (branches, composite) =
            synth_paired(&msg, &chan, pools, &self.constellation, cfg, n0, &noise);
        let mut t = Tally::default();
        let mut dblc_bits = None;
        if choice != DetectorChoice::Ml {
            let res = self.dblc.detect(&branches, &chan)?;
            t.dblc = count_bit_errors(&msg, &res, cfg);
            t.rail = u64::from(res.rail_disagreement);
            t.reassigned = u64::from(res.antenna_reassigned);
            dblc_bits = Some(res.message.bits);
        }
        if let Some(ml) = &self.ml {
            let (res, metric) = ml.detect(&composite, &chan)?;
            t.ml = count_bit_errors(&msg, &res, cfg);
            let truth = ml.metric_of_bits(&composite.y, &chan, &bits)?;
            let mut ok = metric <= truth;
            if let Some(b) = &dblc_bits {
                ok &= metric <= ml.metric_of_bits(&composite.y, &chan, b)?;
            }
            t.violations = u64::from(!ok);
        }
        Ok(t)
    }
}

fn run_trials<T: Real>(kit: &Kit<T>, spec: &SweepSpec, point: u64, n0: f64) -> Result<Tally> {
    (0..spec.trials_per_point)
        .into_par_iter()
        .map(|t| {
            kit.trial(
                n0,
                spec.detector,
                &mut trial_rng(spec.master_seed, point, t),
            )
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

fn in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Sweep(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Simulates grid point `point` (its index in the grid, which keys the
/// random streams) at `snr_db`. Returns one record per detector.
pub fn run_point_typed<T: Real>(
    spec: &SweepSpec,
    point: usize,
    snr_db: f64,
) -> Result<Vec<BerRecord>> {
    spec.validate()?;
    let cfg = spec.effective_config();
    let kit = Kit::<T>::new(cfg.clone(), spec.detector)?;
    let n0 = cfg.noise_power(snr_db);
    let start = Instant::now();
    let tally = in_pool(spec.workers, || run_trials(&kit, spec, point as u64, n0))??;
    let wall_time = start.elapsed();
    let analytic = AbepBreakdown::evaluate(&cfg, snr_db)?;
    let p_total = cfg.p_total();
    if tally.violations > 0 {
        log::error!(
            "snr {snr_db} dB: ML metric exceeded a reference hypothesis in {} trials",
            tally.violations
        );
    } else if spec.detector != DetectorChoice::Dblc {
        log::info!(
            "snr {snr_db} dB: ML metric optimal on all {} trials",
            spec.trials_per_point
        );
    }
    if analytic.abep > 0.0 && analytic.abep < 1e-4 {
        let p = analytic.abep;
        let needed = (100.0 * (1.0 - p) / (p * p_total as f64)).ceil();
        log::warn!(
            "snr {snr_db} dB: analytical ABEP {p:e} is below 1e-4; about {needed:e} trials are needed for 10% relative MC error"
        );
    }
    Ok(spec
        .detector
        .kinds()
        .iter()
        .map(|&kind| BerRecord {
            snr_db,
            trials: spec.trials_per_point,
            detector: kind,
            seed: spec.master_seed,
            p_total,
            budget: cfg.budget(),
            counts: if kind == DetectorKind::Ml {
                tally.ml
            } else {
                tally.dblc
            },
            analytic,
            ml_optimality_violations: tally.violations,
            rail_disagreements: tally.rail,
            antenna_reassignments: tally.reassigned,
            wall_time,
        })
        .collect())
}

pub fn run_point(spec: &SweepSpec, point: usize, snr_db: f64) -> Result<Vec<BerRecord>> {
    run_point_typed::<f64>(spec, point, snr_db)
}

/// Runs every grid point in order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<BerRecord>> {
    spec.validate()?;
    let mut out = Vec::new();
    for (i, &snr) in spec.snr_grid_db.iter().enumerate() {
        out.extend(run_point(spec, i, snr)?);
    }
    Ok(out)
}

/// CSV text for `records`, header included.
pub fn records_to_csv(records: &[BerRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io {
        path: "<memory>".into(),
        detail: e.to_string(),
    };
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        detail: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// Writes the CSV next to `path` and renames it into place.
pub fn write_csv_atomic(path: &Path, records: &[BerRecord]) -> Result<()> {
    let text = records_to_csv(records)?;
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    tmp_name.push(format!(".{}.partial", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(text.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cfg: SystemConfig, grid: Vec<f64>, trials: u64, det: DetectorChoice) -> SweepSpec {
        SweepSpec::new(cfg, grid, trials, 42, det)
    }

    #[test]
    fn header_is_exact() {
        let r = records_to_csv(&[]).unwrap();
        assert_eq!(r, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn real_format_round_trips() {
        for v in [
            0.0,
            1.0,
            0.5,
            1e-4,
            9.99e-5,
            1.234e-99,
            123456.0,
            7e6,
            f64::INFINITY,
            0.018_150_8,
        ] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_real(1.5e-7), "1.5e-7");
        assert_eq!(format_real(0.25), "0.25");
    }

    #[test]
    fn validation() {
        let c = SystemConfig::p7();
        assert!(spec(c.clone(), vec![], 10, DetectorChoice::Dblc)
            .validate()
            .is_err());
        assert!(spec(c.clone(), vec![5.0, 0.0], 10, DetectorChoice::Dblc)
            .validate()
            .is_err());
        assert!(spec(c.clone(), vec![0.0], 0, DetectorChoice::Dblc)
            .validate()
            .is_err());
        assert!(matches!(
            spec(
                SystemConfig::default_small(),
                vec![0.0],
                1,
                DetectorChoice::Both
            )
            .validate(),
            Err(Error::MlGuard { .. })
        ));
        assert!(spec(c, vec![0.0, 0.0, 3.0], 1, DetectorChoice::Ml)
            .validate()
            .is_ok());
    }

    #[test]
    fn noise_free_zero_ber() {
        let s = spec(
            SystemConfig::p7(),
            vec![f64::INFINITY],
            2_000,
            DetectorChoice::Both,
        );
        for r in run_sweep(&s).unwrap() {
            assert_eq!(r.counts.total, 0);
            assert_eq!(r.ml_optimality_violations, 0);
        }
    }

    #[test]
    fn deterministic_across_workers() {
        let mut s = spec(
            SystemConfig::p7(),
            vec![0.0, 10.0],
            300,
            DetectorChoice::Both,
        );
        s.workers = Some(1);
        let a = records_to_csv(&run_sweep(&s).unwrap()).unwrap();
        s.workers = Some(4);
        let b = records_to_csv(&run_sweep(&s).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn field_sums_and_ratios() {
        let s = spec(
            SystemConfig::default_small(),
            vec![5.0],
            500,
            DetectorChoice::Dblc,
        );
        let r = &run_sweep(&s).unwrap()[0];
        let c = r.counts;
        assert_eq!(c.total, c.freq + c.code + c.spatial + c.realign + c.qam);
        assert_eq!(c.trials, 500);
        let b = r.ber_total();
        assert!((r.se_total() - (b * (1.0 - b) / (500.0 * 25.0)).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn single_precision_runs() {
        let s = spec(
            SystemConfig::p7(),
            vec![f64::INFINITY],
            200,
            DetectorChoice::Both,
        );
        for r in run_point_typed::<f32>(&s, 0, f64::INFINITY).unwrap() {
            assert_eq!(r.counts.total, 0);
        }
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let s = spec(SystemConfig::p7(), vec![10.0], 20, DetectorChoice::Dblc);
        let recs = run_sweep(&s).unwrap();
        write_csv_atomic(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_csv_atomic(&dir.path().join("missing/out.csv"), &recs).is_err());
    }
}
