//! Rayleigh MIMO channel, per-offset branch outputs and the composite
//! chip matrix seen by the exhaustive detector.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{NoiseSplit, PhaseMode, SystemConfig, SPEED_OF_LIGHT};
use crate::constellation::Constellation;
use crate::linalg::CMatrix;
use crate::message::TxMessage;
use crate::scalar::Real;
use crate::spreading::CodePool;

/// `N_R x (N_T M)` channel; column `(m-1)N_T + n - 1` (0-based) links
/// antenna `n` on offset `m` to every receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState<T> {
    pub h: CMatrix<T>,
    pub phase_mode: PhaseMode,
    n_t: usize,
}

impl<T: Real> ChannelState<T> {
    pub fn from_matrix(h: CMatrix<T>, n_t: usize, phase_mode: PhaseMode) -> Self {
        Self { h, phase_mode, n_t }
    }

    /// 0-based column index for 1-based offset `m` and antenna `n`.
    #[inline]
    pub fn column_index(&self, m: usize, n: usize) -> usize {
        (m - 1) * self.n_t + (n - 1)
    }

    pub fn link(&self, m: usize, n: usize) -> Vec<Complex<T>> {
        self.h.column(self.column_index(m, n))
    }
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R, std: f64) -> (f64, f64) {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    (a * std, b * std)
}

/// Draws `H` with i.i.d. `CN(0, σ²)` entries, row-major. In explicit phase
/// mode the geometric phase of each link is multiplied in afterwards.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
) -> ChannelState<T> {
    let cols = config.n_t * config.m_offsets;
    let std = (config.sigma2 / 2.0).sqrt();
    let mut h = CMatrix::zeros(config.n_r, cols);
    for r in 0..config.n_r {
        for c in 0..cols {
            let (re, im) = gaussian_pair(rng, std);
            h[(r, c)] = Complex::new(T::lit(re), T::lit(im));
        }
    }
    if config.phase_mode == PhaseMode::Explicit {
        let sin_t = config.theta_rad.sin();
        for r in 0..config.n_r {
            for m in 1..=config.m_offsets {
                for n in 1..=config.n_t {
                    let tau = (config.range_m
                        + (n as f64) * config.d_spacing * sin_t
                        + ((r + 1) as f64) * config.d_spacing * sin_t)
                        / SPEED_OF_LIGHT;
                    // Reduce the cycle count before scaling by 2π to keep
                    // the ~10^3-cycle carrier term accurate.
                    let cycles = ((config.f0 + config.offset_hz(m)) * tau).fract();
                    let phase = -2.0 * std::f64::consts::PI * cycles;
                    let rot = Complex::new(T::lit(phase.cos()), T::lit(phase.sin()));
                    let c = (m - 1) * config.n_t + (n - 1);
                    h[(r, c)] = h[(r, c)] * rot;
                }
            }
        }
    }
    ChannelState {
        h,
        phase_mode: config.phase_mode,
        n_t: config.n_t,
    }
}

/// Matched-filter output for each offset of the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutputs<T> {
    /// `M` matrices of size `N_R x K`.
    pub branches: Vec<CMatrix<T>>,
    /// Variance of each complex noise entry.
    pub noise_var_per_branch: T,
}

/// Pre-split chip matrix `Ỹ = √(P_S/N) H (G^I X^I + j G^Q X^Q) + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeOutput<T> {
    pub y: CMatrix<T>,
    pub noise_var: T,
}

/// Unit-variance complex Gaussian noise for every branch. Both output models
/// are built from one realisation so that detector comparisons are paired.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization<T> {
    pub unit: Vec<CMatrix<T>>,
}

impl<T: Real> NoiseRealization<T> {
    pub fn draw<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        let std = std::f64::consts::FRAC_1_SQRT_2;
        let unit = (0..config.m_offsets)
            .map(|_| {
                let mut v = CMatrix::zeros(config.n_r, config.k_chips);
                for r in 0..config.n_r {
                    for k in 0..config.k_chips {
                        let (re, im) = gaussian_pair(rng, std);
                        v[(r, k)] = Complex::new(T::lit(re), T::lit(im));
                    }
                }
                v
            })
            .collect();
        Self { unit }
    }
}

/// Branch and composite noise variances for total noise power `n0`.
pub fn noise_variances(config: &SystemConfig, n0: f64) -> (f64, f64) {
    let branch = match config.noise_split {
        NoiseSplit::PerBranchN0 => n0,
        NoiseSplit::PerBranchN0OverM => n0 / config.m_offsets as f64,
    };
    (branch, n0)
}

/// Chip sequence `d = x_re c_I + j x_im c_Q` of active antenna `idx`
/// (position in the message, not the antenna number).
pub fn chip_sequence<T: Real>(
    msg: &TxMessage,
    idx: usize,
    pools: (&CodePool, &CodePool),
    constellation: &Constellation<T>,
) -> Vec<Complex<T>> {
    let a = msg.antenna_set[idx];
    let x = constellation.points[msg.symbol_idx[idx]];
    let ci = pools.0.column_of(a, msg.code_idx_i[idx]);
    let cq = pools.1.column_of(a, msg.code_idx_q[idx]);
    (0..pools.0.k_chips())
        .map(|k| {
            let re = if pools.0.chip(k, ci) > 0 { x.re } else { -x.re };
            let im = if pools.1.chip(k, cq) > 0 { x.im } else { -x.im };
            Complex::new(re, im)
        })
        .collect()
}

/// Noise-free signal on each branch: `√(P_S/N) h_{ū_n,a_n} d_{a_n}^T` on the
/// N used offsets, zero elsewhere.
pub fn branch_signals<T: Real>(
    msg: &TxMessage,
    chan: &ChannelState<T>,
    pools: (&CodePool, &CodePool),
    constellation: &Constellation<T>,
    config: &SystemConfig,
) -> Vec<CMatrix<T>> {
    let amp = T::lit((config.ps_power / config.n_active as f64).sqrt());
    let mut out = vec![CMatrix::zeros(config.n_r, config.k_chips); config.m_offsets];
    let offsets = msg.realigned_offsets();
    let mut used = vec![false; config.m_offsets];
    for (idx, &m) in offsets.iter().enumerate() {
        assert!(!used[m - 1], "two active antennas on offset {m}");
        used[m - 1] = true;
        let h = chan.link(m, msg.antenna_set[idx]);
        let d = chip_sequence(msg, idx, pools, constellation);
        out[m - 1] = CMatrix::from_fn(config.n_r, config.k_chips, |r, k| h[r] * amp * d[k]);
    }
    out
}

/// Builds both receiver models from one noise realisation at total noise
/// power `n0`. The composite noise is the branch noise summed and rescaled to
/// variance `n0`.
pub fn synth_paired<T: Real>(
    msg: &TxMessage,
    chan: &ChannelState<T>,
    pools: (&CodePool, &CodePool),
    constellation: &Constellation<T>,
    config: &SystemConfig,
    n0: f64,
    noise: &NoiseRealization<T>,
) -> (BranchOutputs<T>, CompositeOutput<T>) {
    let (branch_var, comp_var) = noise_variances(config, n0);
    let signals = branch_signals(msg, chan, pools, constellation, config);
    let branch_std = T::lit(branch_var.sqrt());
    let mut composite = CMatrix::zeros(config.n_r, config.k_chips);
    let mut noise_sum = CMatrix::zeros(config.n_r, config.k_chips);
    let mut branches = Vec::with_capacity(config.m_offsets);
    for (sig, unit) in signals.into_iter().zip(&noise.unit) {
        composite.add_assign(&sig);
        let mut v = unit.clone();
        v.scale(branch_std);
        noise_sum.add_assign(&v);
        let mut y = sig;
        y.add_assign(&v);
        branches.push(y);
    }
    let summed_var = branch_var * config.m_offsets as f64;
    if summed_var > 0.0 {
        noise_sum.scale(T::lit((comp_var / summed_var).sqrt()));
        composite.add_assign(&noise_sum);
    }
    (
        BranchOutputs {
            branches,
            noise_var_per_branch: T::lit(branch_var),
        },
        CompositeOutput {
            y: composite,
            noise_var: T::lit(comp_var),
        },
    )
}

/// Branch outputs at `snr_db`, drawing noise from `rng`.
pub fn synth_branch_outputs<T: Real, R: Rng + ?Sized>(
    msg: &TxMessage,
    chan: &ChannelState<T>,
    pools: (&CodePool, &CodePool),
    constellation: &Constellation<T>,
    config: &SystemConfig,
    snr_db: f64,
    rng: &mut R,
) -> BranchOutputs<T> {
    let noise = NoiseRealization::draw(config, rng);
    synth_paired(
        msg,
        chan,
        pools,
        constellation,
        config,
        config.noise_power(snr_db),
        &noise,
    )
    .0
}

/// Composite output at `snr_db`. Given the same `rng` state it uses the same
/// noise realisation as [`synth_branch_outputs`].
pub fn synth_composite<T: Real, R: Rng + ?Sized>(
    msg: &TxMessage,
    chan: &ChannelState<T>,
    pools: (&CodePool, &CodePool),
    constellation: &Constellation<T>,
    config: &SystemConfig,
    snr_db: f64,
    rng: &mut R,
) -> CompositeOutput<T> {
    let noise = NoiseRealization::draw(config, rng);
    synth_paired(
        msg,
        chan,
        pools,
        constellation,
        config,
        config.noise_power(snr_db),
        &noise,
    )
    .1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_constellation;
    use crate::message::assemble_message;
    use crate::spreading::build_code_pools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_message(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> TxMessage {
        let bits: Vec<u8> = (0..cfg.p_total()).map(|_| rng.random_range(0..2)).collect();
        assemble_message(&bits, cfg).unwrap()
    }

    #[test]
    fn zero_variance_channel() {
        let mut cfg = SystemConfig::default_small();
        cfg.sigma2 = 0.0;
        let ch: ChannelState<f64> = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ch.h.norm_sqr(), 0.0);
    }

    #[test]
    fn channel_power_matches_variance() {
        let mut cfg = SystemConfig::default_small().with_n_r(4).unwrap();
        cfg.sigma2 = 2.5;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut samples = Vec::new();
        while samples.len() < 1_000_000 {
            let ch: ChannelState<f64> = sample_channel(&cfg, &mut rng);
            samples.extend(ch.h.as_slice().iter().map(|z| z.norm_sqr()));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 2.5).abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    }

    #[test]
    fn explicit_phase_keeps_magnitudes() {
        let mut cfg = SystemConfig::default_small();
        let a: ChannelState<f64> = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        cfg.phase_mode = PhaseMode::Explicit;
        let b: ChannelState<f64> = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_ne!(a.h, b.h);
        for (x, y) in a.h.as_slice().iter().zip(b.h.as_slice()) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_branches() {
        let cfg = SystemConfig::default_small();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let msg = random_message(&cfg, &mut rng);
            let ch: ChannelState<f64> = sample_channel(&cfg, &mut rng);
            let noise = NoiseRealization::draw(&cfg, &mut rng);
            let (br, comp) = synth_paired(&msg, &ch, (&pi, &pq), &cons, &cfg, 0.0, &noise);
            let used = msg.realigned_offsets();
            let amp2 = cfg.ps_power / cfg.n_active as f64;
            let mut sum = CMatrix::zeros(cfg.n_r, cfg.k_chips);
            for m in 1..=cfg.m_offsets {
                let y = &br.branches[m - 1];
                match used.iter().position(|&u| u == m) {
                    None => assert_eq!(y.norm_sqr(), 0.0),
                    Some(idx) => {
                        let h = ch.link(m, msg.antenna_set[idx]);
                        let x = cons.points[msg.symbol_idx[idx]];
                        let hn: f64 = h.iter().map(|z| z.norm_sqr()).sum();
                        let expect = amp2 * hn * x.norm_sqr() * cfg.k_chips as f64;
                        assert!((y.norm_sqr() - expect).abs() < 1e-10 * expect.max(1.0));
                        for r in 0..cfg.n_r {
                            for k in 0..cfg.k_chips {
                                let mag = amp2.sqrt() * h[r].norm() * x.norm();
                                assert!((y[(r, k)].norm() - mag).abs() < 1e-12);
                            }
                        }
                    }
                }
                sum.add_assign(y);
            }
            for (a, b) in sum.as_slice().iter().zip(comp.y.as_slice()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn composite_matches_elementwise_reconstruction() {
        let cfg = SystemConfig::p7();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let msg = random_message(&cfg, &mut rng);
        let ch: ChannelState<f64> = sample_channel(&cfg, &mut rng);
        let noise = NoiseRealization::draw(&cfg, &mut rng);
        let n0 = 0.3;
        let (_, comp) = synth_paired(&msg, &ch, (&pi, &pq), &cons, &cfg, n0, &noise);
        // Selection matrix G: one unit entry per active antenna.
        let cols = cfg.n_t * cfg.m_offsets;
        let offsets = msg.realigned_offsets();
        let amp = (cfg.ps_power / cfg.n_active as f64).sqrt();
        let branch_std = (n0 / cfg.m_offsets as f64).sqrt();
        for r in 0..cfg.n_r {
            for k in 0..cfg.k_chips {
                let mut acc = Complex::new(0.0, 0.0);
                for n in 0..cfg.n_active {
                    for c in 0..cols {
                        let g = if c == (offsets[n] - 1) * cfg.n_t + msg.antenna_set[n] - 1 {
                            1.0
                        } else {
                            0.0
                        };
                        let x = cons.points[msg.symbol_idx[n]];
                        let ci = (msg.antenna_set[n] - 1) * cfg.l_codes + msg.code_idx_i[n] - 1;
                        let cq = (msg.antenna_set[n] - 1) * cfg.l_codes + msg.code_idx_q[n] - 1;
                        let xi = x.re * f64::from(pi.chip(k, ci));
                        let xq = x.im * f64::from(pq.chip(k, cq));
                        acc += ch.h[(r, c)] * amp * Complex::new(g * xi, g * xq);
                    }
                }
                for m in 0..cfg.m_offsets {
                    acc += noise.unit[m][(r, k)] * branch_std;
                }
                assert!((comp.y[(r, k)] - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_levels_and_pairing() {
        let mut cfg = SystemConfig::default_small();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let msg = random_message(&cfg, &mut rng);
        let mut zero = SystemConfig::default_small();
        zero.sigma2 = 0.0;
        let ch: ChannelState<f64> = sample_channel(&zero, &mut rng);
        for split in [NoiseSplit::PerBranchN0OverM, NoiseSplit::PerBranchN0] {
            cfg.noise_split = split;
            let (mut bsum, mut csum, mut nb, mut nc) = (0.0, 0.0, 0usize, 0usize);
            for _ in 0..400 {
                let noise = NoiseRealization::draw(&cfg, &mut rng);
                let (br, comp) = synth_paired(&msg, &ch, (&pi, &pq), &cons, &cfg, 2.0, &noise);
                for b in &br.branches {
                    bsum += b.norm_sqr();
                    nb += cfg.n_r * cfg.k_chips;
                }
                csum += comp.y.norm_sqr();
                nc += cfg.n_r * cfg.k_chips;
            }
            let want_branch = if split == NoiseSplit::PerBranchN0 {
                2.0
            } else {
                2.0 / 8.0
            };
            assert!((bsum / nb as f64 / want_branch - 1.0).abs() < 0.02);
            assert!((csum / nc as f64 / 2.0 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn deterministic_for_same_stream() {
        let cfg = SystemConfig::default_small();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let msg = random_message(&cfg, &mut rng);
            let ch: ChannelState<f64> = sample_channel(&cfg, &mut rng);
            synth_branch_outputs(&msg, &ch, (&pi, &pq), &cons, &cfg, 5.0, &mut rng)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn signal_branch_dominates_at_high_snr() {
        let cfg = SystemConfig::default_small();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut wins = 0;
        for _ in 0..10_000 {
            let msg = random_message(&cfg, &mut rng);
            let ch: ChannelState<f64> = sample_channel(&cfg, &mut rng);
            let br = synth_branch_outputs(&msg, &ch, (&pi, &pq), &cons, &cfg, 40.0, &mut rng);
            let used = msg.realigned_offsets();
            let e: Vec<f64> = br.branches.iter().map(|b| b.norm_sqr()).collect();
            let min_sig = used.iter().map(|&m| e[m - 1]).fold(f64::INFINITY, f64::min);
            let max_noise = (1..=cfg.m_offsets)
                .filter(|m| !used.contains(m))
                .map(|m| e[m - 1])
                .fold(0.0, f64::max);
            if min_sig > max_noise {
                wins += 1;
            }
        }
        assert_eq!(wins, 10_000);
    }
}
