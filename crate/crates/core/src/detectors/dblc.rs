//! Three-stage detector: branch energies pick the offsets, despread argmax
//! picks antenna and codes, per-branch minimum distance picks the symbol.

use num_complex::Complex;

use super::DetectionResult;
use crate::channel::{BranchOutputs, ChannelState};
use crate::config::SystemConfig;
use crate::constellation::Constellation;
use crate::error::Result;
use crate::linalg::{CMatrix, MulCounter};
use crate::message::TxMessage;
use crate::scalar::Real;
use crate::spreading::{despread_counted, CodePool};

/// Antenna `b` and code `i` (both 1-based) of 1-based despread column `p`,
/// using `p = (b-1)L + i`.
pub fn split_column(p: usize, l_codes: usize) -> (usize, usize) {
    let rem = p % l_codes;
    if rem == 0 {
        (p / l_codes, l_codes)
    } else {
        (p / l_codes + 1, rem)
    }
}

/// Antenna and code decisions for one selected branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage2Decision {
    /// Offset pool position of the branch (1-based).
    pub offset: usize,
    pub antenna: usize,
    pub code_i: usize,
    pub code_q: usize,
    /// 1-based in-phase and quadrature argmax columns actually used.
    pub p_hat: usize,
    pub q_hat: usize,
    /// Unrestricted quadrature argmax disagreed on the antenna.
    pub rail_disagreement: bool,
    /// The branch lost its first-choice antenna to a stronger branch.
    pub reassigned: bool,
}

/// Stage-2 statistics of one branch.
struct BranchStats<T> {
    /// `g_b^H Z_p` per column with `g_b` the unit channel of the column's antenna.
    proj: Vec<Complex<T>>,
    i_stat: Vec<T>,
    q_stat: Vec<T>,
    /// Unit channel direction per antenna (0-based).
    unit: Vec<Vec<Complex<T>>>,
}

#[derive(Debug, Clone)]
pub struct DblcDetector<T> {
    config: SystemConfig,
    /// Both rails share one code assignment, so a single complex
    /// despreading serves the in-phase and quadrature statistics.
    pool: CodePool,
    /// Constellation scaled by `√(P_S/N)`.
    scaled: Vec<Complex<T>>,
}

fn argmax<T: Real>(v: impl Iterator<Item = (usize, T)>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, x) in v {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

impl<T: Real> DblcDetector<T> {
    pub fn new(
        config: &SystemConfig,
        pools: (&CodePool, &CodePool),
        constellation: &Constellation<T>,
    ) -> Self {
        assert_eq!(
            pools.0.code(0),
            pools.1.code(0),
            "rails must share one code assignment"
        );
        let amp = T::lit((config.ps_power / config.n_active as f64).sqrt());
        Self {
            config: config.clone(),
            pool: pools.0.clone(),
            scaled: constellation.points.iter().map(|&x| x * amp).collect(),
        }
    }

    /// Offsets of the `N` strongest branches, ascending, plus all branch
    /// energies. Equal energies favour the lower offset.
    pub fn stage1_freq(
        &self,
        outputs: &BranchOutputs<T>,
        counter: &mut MulCounter,
    ) -> (Vec<usize>, Vec<T>) {
        let energies: Vec<T> = outputs.branches.iter().map(|b| b.norm_sqr()).collect();
        counter.add(self.config.m_offsets * self.config.n_r * self.config.k_chips);
        let mut order: Vec<usize> = (0..energies.len()).collect();
        // Stable sort keeps the lower index first among equal energies.
        order.sort_by(|&a, &b| {
            energies[b]
                .partial_cmp(&energies[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut chosen: Vec<usize> = order[..self.config.n_active]
            .iter()
            .map(|&m| m + 1)
            .collect();
        chosen.sort_unstable();
        (chosen, energies)
    }

    fn branch_stats(
        &self,
        z: &CMatrix<T>,
        chan: &ChannelState<T>,
        offset: usize,
        counter: &mut MulCounter,
    ) -> BranchStats<T> {
        let cfg = &self.config;
        let n_r = cfg.n_r;
        let unit: Vec<Vec<Complex<T>>> = (1..=cfg.n_t)
            .map(|b| {
                let h = chan.link(offset, b);
                let norm = h.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt();
                if norm > T::zero() {
                    h.iter().map(|v| *v / norm).collect()
                } else {
                    h
                }
            })
            .collect();
        // Norms and scaling of every candidate antenna's channel.
        counter.add(2 * cfg.n_t * n_r);
        let cols = cfg.code_columns();
        let mut proj = Vec::with_capacity(cols);
        for p in 0..cols {
            let g = &unit[p / cfg.l_codes];
            let mut acc = Complex::new(T::zero(), T::zero());
            for r in 0..n_r {
                acc = acc + g[r].conj() * z[(r, p)];
            }
            proj.push(acc);
        }
        counter.add(n_r * cols);
        let i_stat = proj.iter().map(|a| a.re * a.re).collect();
        let q_stat = proj.iter().map(|a| a.im * a.im).collect();
        counter.add(2 * cols);
        BranchStats {
            proj,
            i_stat,
            q_stat,
            unit,
        }
    }

    /// Antenna and code decisions for each selected offset. Branches claim
    /// antennas in decreasing energy order; a branch whose best column
    /// belongs to an already claimed antenna takes its best column among the
    /// unclaimed antennas.
    fn stage2(
        &self,
        offsets: &[usize],
        energies: &[T],
        stats: &[BranchStats<T>],
    ) -> Vec<Stage2Decision> {
        let cfg = &self.config;
        let l = cfg.l_codes;
        let mut priority: Vec<usize> = (0..offsets.len()).collect();
        priority.sort_by(|&a, &b| {
            energies[offsets[b] - 1]
                .partial_cmp(&energies[offsets[a] - 1])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut claimed = vec![false; cfg.n_t];
        let mut out: Vec<Option<Stage2Decision>> = vec![None; offsets.len()];
        for &j in &priority {
            let s = &stats[j];
            let first = argmax(s.i_stat.iter().copied().enumerate()).expect("non-empty pool");
            let p0 = argmax(
                s.i_stat
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(p, _)| !claimed[p / l]),
            )
            .expect("N <= N_T leaves an unclaimed antenna");
            let (antenna, code_i) = split_column(p0 + 1, l);
            claimed[antenna - 1] = true;

            let q_global = argmax(s.q_stat.iter().copied().enumerate()).expect("non-empty pool");
            let block = (antenna - 1) * l..antenna * l;
            let q0 = argmax(block.clone().map(|p| (p, s.q_stat[p]))).expect("non-empty block");
            let (_, code_q) = split_column(q0 + 1, l);
            out[j] = Some(Stage2Decision {
                offset: offsets[j],
                antenna,
                code_i,
                code_q,
                p_hat: p0 + 1,
                q_hat: q0 + 1,
                rail_disagreement: split_column(q_global + 1, l).0 != antenna,
                reassigned: first != p0,
            });
        }
        out.into_iter()
            .map(|d| d.expect("every branch decided"))
            .collect()
    }

    /// Minimum-distance symbol from the rail-separated statistics of the
    /// chosen columns.
    fn stage3(
        &self,
        d: &Stage2Decision,
        s: &BranchStats<T>,
        chan: &ChannelState<T>,
        counter: &mut MulCounter,
    ) -> usize {
        let cfg = &self.config;
        let e_c = T::count(self.pool.e_c());
        let g = &s.unit[d.antenna - 1];
        let coeff = Complex::new(s.proj[d.p_hat - 1].re, s.proj[d.q_hat - 1].im) / e_c;
        let est: Vec<Complex<T>> = g.iter().map(|gr| *gr * coeff).collect();
        counter.add(cfg.n_r);
        let h = chan.link(d.offset, d.antenna);
        let mut best = (0, T::infinity());
        for (v, x) in self.scaled.iter().enumerate() {
            let mut metric = T::zero();
            for r in 0..cfg.n_r {
                metric = metric + (est[r] - *x * h[r]).norm_sqr();
            }
            if metric < best.1 {
                best = (v, metric);
            }
        }
        counter.add(2 * self.scaled.len() * cfg.n_r);
        best.0
    }

    /// Runs all three stages and assembles the decoded message.
    pub fn detect(
        &self,
        outputs: &BranchOutputs<T>,
        chan: &ChannelState<T>,
    ) -> Result<DetectionResult> {
        let (decisions, symbols, mults) = self.decide(outputs, chan)?;
        self.finalize(&decisions, &symbols, mults)
    }

    /// Stage outputs before reassembly: per-branch decisions (ascending
    /// offset) and their symbol indices.
    pub fn decide(
        &self,
        outputs: &BranchOutputs<T>,
        chan: &ChannelState<T>,
    ) -> Result<(Vec<Stage2Decision>, Vec<usize>, u64)> {
        let mut counter = MulCounter::default();
        let (offsets, energies) = self.stage1_freq(outputs, &mut counter);
        let mut stats = Vec::with_capacity(offsets.len());
        for &m in &offsets {
            let z = despread_counted(&outputs.branches[m - 1], &self.pool, &mut counter)?;
            stats.push(self.branch_stats(&z, chan, m, &mut counter));
        }
        let decisions = self.stage2(&offsets, &energies, &stats);
        let symbols = decisions
            .iter()
            .zip(&stats)
            .map(|(d, s)| self.stage3(d, s, chan, &mut counter))
            .collect();
        Ok((decisions, symbols, counter.0))
    }

    /// Orders the branch tuples by antenna and re-derives the bit vector.
    pub fn finalize(
        &self,
        decisions: &[Stage2Decision],
        symbols: &[usize],
        mults: u64,
    ) -> Result<DetectionResult> {
        let mut order: Vec<usize> = (0..decisions.len()).collect();
        order.sort_by_key(|&j| decisions[j].antenna);
        let offset_set: Vec<usize> = decisions.iter().map(|d| d.offset).collect();
        let antenna_set = order.iter().map(|&j| decisions[j].antenna).collect();
        // Decisions arrive in ascending offset order, so branch j is the
        // (j+1)-th smallest offset.
        let realign = order.iter().map(|&j| j + 1).collect();
        let code_idx_i = order.iter().map(|&j| decisions[j].code_i).collect();
        let code_idx_q = order.iter().map(|&j| decisions[j].code_q).collect();
        let symbol_idx = order.iter().map(|&j| symbols[j]).collect();
        let (message, clamped) = TxMessage::from_fields(
            &self.config,
            antenna_set,
            offset_set,
            realign,
            code_idx_i,
            code_idx_q,
            symbol_idx,
        )?;
        Ok(DetectionResult {
            message,
            clamped,
            rail_disagreement: decisions.iter().any(|d| d.rail_disagreement),
            antenna_reassigned: decisions.iter().any(|d| d.reassigned),
            multiplications: mults,
        })
    }
}
