//! Data rate, energy saving and detector complexity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_channel, synth_paired, NoiseRealization};
use crate::config::SystemConfig;
use crate::constellation::build_constellation;
use crate::detectors::{DblcDetector, MlDetector};
use crate::error::Result;
use crate::message::assemble_message;
use crate::spreading::build_code_pools;

pub fn data_rate(config: &SystemConfig) -> usize {
    config.p_total()
}

/// Share of bits carried by indices rather than symbol energy, in percent.
pub fn energy_saving(config: &SystemConfig) -> f64 {
    let b = config.budget();
    (1.0 - b.p_m as f64 / b.total() as f64) * 100.0
}

/// Multiplication counts per detection from the closed-form expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityCounts {
    /// `(N_T M N_R K + 2 N N_T M K + N_R K) 2^p`
    pub ml: u128,
    /// `2 K M N_R + (N_R + 1) K L N_T N + N J N_R`
    pub dblc: u128,
}

pub fn complexity_counts(config: &SystemConfig) -> ComplexityCounts {
    let (n_t, n, m, l, j) = (
        config.n_t as u128,
        config.n_active as u128,
        config.m_offsets as u128,
        config.l_codes as u128,
        config.j_qam as u128,
    );
    let (n_r, k) = (config.n_r as u128, config.k_chips as u128);
    let per_hyp = n_t * m * n_r * k + 2 * n * n_t * m * k + n_r * k;
    let ml = per_hyp
        .checked_shl(config.p_total() as u32)
        .unwrap_or(u128::MAX);
    let dblc = 2 * k * m * n_r + (n_r + 1) * k * l * n_t * n + n * j * n_r;
    ComplexityCounts { ml, dblc }
}

/// Multiplications the detectors actually perform for one seeded trial. ML
/// is `None` when `p_total` exceeds `ml_guard_bits`.
pub fn measured_complexity(
    config: &SystemConfig,
    seed: u64,
    ml_guard_bits: usize,
) -> Result<(Option<u64>, u64)> {
    let (pi, pq) = build_code_pools(config)?;
    let cons = build_constellation::<f64>(config.j_qam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..config.p_total())
        .map(|_| rng.random_range(0..2))
        .collect();
    let msg = assemble_message(&bits, config)?;
    let chan = sample_channel::<f64, _>(config, &mut rng);
    let noise = NoiseRealization::draw(config, &mut rng);
    let (branches, composite) = synth_paired(
        &msg,
        &chan,
        (&pi, &pq),
        &cons,
        config,
        config.noise_power(10.0),
        &noise,
    );
    let dblc = DblcDetector::new(config, (&pi, &pq), &cons)
        .detect(&branches, &chan)?
        .multiplications;
    let ml = match MlDetector::with_guard(config, (&pi, &pq), &cons, ml_guard_bits) {
        Ok(det) => Some(det.detect(&composite, &chan)?.0.multiplications),
        Err(crate::Error::MlGuard { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((ml, dblc))
}

/// Rate, energy and complexity summary for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEnergyReport {
    pub p_total: usize,
    /// `E_b = E_x E_c / p`.
    pub e_b: f64,
    pub e_sav: f64,
    pub ml_mults: u128,
    pub dblc_mults: u128,
}

impl RateEnergyReport {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let cons = build_constellation::<f64>(config.j_qam)?;
        let p = config.p_total();
        let c = complexity_counts(config);
        Ok(Self {
            p_total: p,
            e_b: cons.avg_energy * config.k_chips as f64 / p as f64,
            e_sav: energy_saving(config),
            ml_mults: c.ml,
            dblc_mults: c.dblc,
        })
    }
}

/// Energy-saving row with quoted competitor percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOneRow {
    /// `(N_T, N, M, L, J)`
    pub params: (usize, usize, usize, usize, usize),
    /// FOPIM, GSCIM, GCIM-SM, SM.
    pub quoted: [f64; 4],
}

/// Data-rate row: the published value for this scheme and quoted competitor
/// rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableTwoRow {
    pub params: (usize, usize, usize, usize, usize),
    pub published: usize,
    /// FOPIM, GSCIM, GCIM-SM, SM.
    pub quoted: [usize; 4],
}

pub const TABLE1: [TableOneRow; 4] = [
    TableOneRow {
        params: (4, 2, 8, 8, 8),
        quoted: [36.0, 36.0, 44.0, 68.0],
    },
    TableOneRow {
        params: (8, 2, 8, 8, 4),
        quoted: [24.0, 36.0, 48.0, 72.0],
    },
    TableOneRow {
        params: (4, 2, 12, 8, 4),
        quoted: [36.0, 44.0, 52.0, 76.0],
    },
    TableOneRow {
        params: (6, 3, 6, 4, 2),
        quoted: [52.0, 56.0, 64.0, 80.0],
    },
];

pub const TABLE2: [TableTwoRow; 4] = [
    TableTwoRow {
        params: (4, 2, 8, 8, 8),
        published: 25,
        quoted: [22, 16, 11, 5],
    },
    TableTwoRow {
        params: (6, 3, 6, 16, 8),
        published: 43,
        quoted: [27, 31, 13, 5],
    },
    TableTwoRow {
        params: (8, 4, 8, 16, 4),
        published: 56,
        quoted: [31, 34, 13, 5],
    },
    TableTwoRow {
        params: (5, 2, 12, 4, 4),
        published: 22,
        quoted: [25, 11, 8, 4],
    },
];
