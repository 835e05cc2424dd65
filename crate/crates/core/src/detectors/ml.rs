//! Exhaustive maximum-likelihood search over every bit vector.

use num_complex::Complex;

use super::DetectionResult;
use crate::channel::{ChannelState, CompositeOutput};
use crate::config::SystemConfig;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, MulCounter};
use crate::message::{assemble_message, u128_to_bits, ClampFlags, TxMessage};
use crate::scalar::Real;
use crate::spreading::CodePool;

/// Largest `p_total` the exhaustive search accepts by default.
pub const ML_GUARD_BITS: usize = 24;

#[derive(Debug, Clone)]
pub struct MlDetector<T> {
    config: SystemConfig,
    /// `√(P_S/N) x_re c` per (symbol, in-phase column), `K` chips each.
    rows_i: Vec<Vec<T>>,
    /// `√(P_S/N) x_im c` per (symbol, quadrature column).
    rows_q: Vec<Vec<T>>,
    columns: usize,
}

impl<T: Real> MlDetector<T> {
    pub fn new(
        config: &SystemConfig,
        pools: (&CodePool, &CodePool),
        constellation: &Constellation<T>,
    ) -> Result<Self> {
        Self::with_guard(config, pools, constellation, ML_GUARD_BITS)
    }

    pub fn with_guard(
        config: &SystemConfig,
        pools: (&CodePool, &CodePool),
        constellation: &Constellation<T>,
        guard: usize,
    ) -> Result<Self> {
        let p = config.p_total();
        if p > guard {
            return Err(Error::MlGuard { p_total: p, guard });
        }
        let amp = T::lit((config.ps_power / config.n_active as f64).sqrt());
        let columns = config.code_columns();
        let k = config.k_chips;
        let table = |pool: &CodePool, rail: fn(Complex<T>) -> T| -> Vec<Vec<T>> {
            let mut out = Vec::with_capacity(constellation.order * columns);
            for x in &constellation.points {
                let a = rail(*x) * amp;
                for col in 0..columns {
                    out.push(
                        (0..k)
                            .map(|c| if pool.chip(c, col) > 0 { a } else { -a })
                            .collect(),
                    );
                }
            }
            out
        };
        Ok(Self {
            config: config.clone(),
            rows_i: table(pools.0, |x| x.re),
            rows_q: table(pools.1, |x| x.im),
            columns,
        })
    }

    /// `‖Ỹ − √(P_S/N) H (G^I X^I + j G^Q X^Q)‖²` for hypothesis `msg`,
    /// evaluated as dense matrix products.
    pub fn metric(
        &self,
        y: &CMatrix<T>,
        chan: &ChannelState<T>,
        msg: &TxMessage,
        counter: &mut MulCounter,
    ) -> T {
        let cfg = &self.config;
        let (n, k, n_r) = (cfg.n_active, cfg.k_chips, cfg.n_r);
        let cols = cfg.n_t * cfg.m_offsets;
        let l = cfg.l_codes;

        // Selection matrix G (cols x N), shared by both rails.
        let offsets = msg.realigned_offsets();
        let mut g = vec![T::zero(); cols * n];
        for j in 0..n {
            g[chan.column_index(offsets[j], msg.antenna_set[j]) * n + j] = T::one();
        }
        let x_i: Vec<&Vec<T>> = (0..n)
            .map(|j| {
                &self.rows_i[msg.symbol_idx[j] * self.columns
                    + (msg.antenna_set[j] - 1) * l
                    + msg.code_idx_i[j]
                    - 1]
            })
            .collect();
        let x_q: Vec<&Vec<T>> = (0..n)
            .map(|j| {
                &self.rows_q[msg.symbol_idx[j] * self.columns
                    + (msg.antenna_set[j] - 1) * l
                    + msg.code_idx_q[j]
                    - 1]
            })
            .collect();

        let mut w = vec![Complex::new(T::zero(), T::zero()); cols * k];
        for c in 0..cols {
            for t in 0..k {
                let (mut re, mut im) = (T::zero(), T::zero());
                for j in 0..n {
                    re = re + g[c * n + j] * x_i[j][t];
                    im = im + g[c * n + j] * x_q[j][t];
                }
                w[c * k + t] = Complex::new(re, im);
            }
        }
        counter.add(2 * n * cols * k);

        let mut residual = T::zero();
        for r in 0..n_r {
            for t in 0..k {
                let mut acc = Complex::new(T::zero(), T::zero());
                for c in 0..cols {
                    acc = acc + chan.h[(r, c)] * w[c * k + t];
                }
                residual = residual + (y[(r, t)] - acc).norm_sqr();
            }
        }
        counter.add(n_r * cols * k + n_r * k);
        residual
    }

    /// Residual of the bit vector `bits`.
    pub fn metric_of_bits(&self, y: &CMatrix<T>, chan: &ChannelState<T>, bits: &[u8]) -> Result<T> {
        let msg = assemble_message(bits, &self.config)?;
        Ok(self.metric(y, chan, &msg, &mut MulCounter::default()))
    }

    /// Argmin over all `2^p` bit vectors; equal metrics keep the smaller
    /// bit-vector value. Returns the decision and its metric.
    pub fn detect(
        &self,
        composite: &CompositeOutput<T>,
        chan: &ChannelState<T>,
    ) -> Result<(DetectionResult, T)> {
        let p = self.config.p_total();
        let mut counter = MulCounter::default();
        let mut best: Option<(TxMessage, T)> = None;
        for v in 0..(1u128 << p) {
            let msg = assemble_message(&u128_to_bits(v, p), &self.config)?;
            let m = self.metric(&composite.y, chan, &msg, &mut counter);
            if best.as_ref().is_none_or(|(_, b)| m < *b) {
                best = Some((msg, m));
            }
        }
        let (message, metric) = best.expect("at least one hypothesis");
        Ok((
            DetectionResult {
                message,
                clamped: ClampFlags::default(),
                rail_disagreement: false,
                antenna_reassigned: false,
                multiplications: counter.0,
            },
            metric,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, synth_paired, NoiseRealization};
    use crate::constellation::build_constellation;
    use crate::spreading::build_code_pools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn guard_rejects_large_search() {
        let cfg = SystemConfig::default_small();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let err = MlDetector::new(&cfg, (&pi, &pq), &cons).unwrap_err();
        assert_eq!(
            err,
            Error::MlGuard {
                p_total: 25,
                guard: ML_GUARD_BITS
            }
        );
    }

    #[test]
    fn noise_free_and_optimal() {
        let cfg = SystemConfig::p7();
        let (pi, pq) = build_code_pools(&cfg).unwrap();
        let cons = build_constellation::<f64>(cfg.j_qam).unwrap();
        let ml = MlDetector::new(&cfg, (&pi, &pq), &cons).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for snr in [f64::INFINITY, 5.0] {
            for _ in 0..100 {
                let bits: Vec<u8> = (0..7).map(|_| rng.random_range(0..2)).collect();
                let msg = assemble_message(&bits, &cfg).unwrap();
                let ch = sample_channel(&cfg, &mut rng);
                let noise = NoiseRealization::draw(&cfg, &mut rng);
                let (_, comp) = synth_paired(
                    &msg,
                    &ch,
                    (&pi, &pq),
                    &cons,
                    &cfg,
                    cfg.noise_power(snr),
                    &noise,
                );
                let (res, metric) = ml.detect(&comp, &ch).unwrap();
                let truth = ml.metric_of_bits(&comp.y, &ch, &bits).unwrap();
                assert!(metric <= truth);
                if snr.is_infinite() {
                    assert_eq!(res.message.bits, bits);
                    assert!(metric < 1e-20);
                }
                assert_eq!(res.multiplications, 13_312);
            }
        }
    }
}
