//! Splitting a bit vector into the five index fields and back.
//!
//! Field order on the wire is spatial, frequency, realign, symbol, code.
//! Within a field bits are most-significant first. Symbol bits come as `N`
//! groups of `log2 J` (one per active antenna, ascending antenna order) and
//! code bits as `N` pairs of `log2 L` groups, in-phase first.

use crate::combinatorics::{
    rank_combination, rank_permutation, unrank_combination, unrank_permutation,
};
use crate::config::{BitBudget, SystemConfig};
use crate::error::{Error, Result};

/// One transmission interval's worth of index fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxMessage {
    pub bits: Vec<u8>,
    /// Active antennas, strictly increasing, 1-based.
    pub antenna_set: Vec<usize>,
    /// Selected offsets, strictly increasing, 1-based pool positions.
    pub offset_set: Vec<usize>,
    /// Permutation of `1..=N`; antenna `antenna_set[n]` uses
    /// `offset_set[realign[n] - 1]`.
    pub realign: Vec<usize>,
    /// In-phase code index per active antenna, 1-based.
    pub code_idx_i: Vec<usize>,
    /// Quadrature code index per active antenna, 1-based.
    pub code_idx_q: Vec<usize>,
    /// Constellation index per active antenna.
    pub symbol_idx: Vec<usize>,
}

/// Which decoded fields had to be clamped into the transmittable range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampFlags {
    pub spatial: bool,
    pub freq: bool,
    pub realign: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.spatial || self.freq || self.realign
    }
}

impl TxMessage {
    /// Offset pool position used by each active antenna (`ū_n`).
    pub fn realigned_offsets(&self) -> Vec<usize> {
        self.realign
            .iter()
            .map(|&r| self.offset_set[r - 1])
            .collect()
    }

    /// Builds a message from decoded fields, re-deriving the bit vector.
    /// Ranks beyond the field width are clamped to `2^width - 1` and flagged.
    pub fn from_fields(
        config: &SystemConfig,
        antenna_set: Vec<usize>,
        offset_set: Vec<usize>,
        realign: Vec<usize>,
        code_idx_i: Vec<usize>,
        code_idx_q: Vec<usize>,
        symbol_idx: Vec<usize>,
    ) -> Result<(Self, ClampFlags)> {
        let b = config.budget();
        let mut flags = ClampFlags::default();
        let clamp = |rank: u128, width: usize, flag: &mut bool| {
            let limit = 1u128 << width;
            if rank >= limit {
                *flag = true;
                limit - 1
            } else {
                rank
            }
        };
        let r_s = clamp(
            rank_combination(&antenna_set, config.n_t)?,
            b.p_s,
            &mut flags.spatial,
        );
        let r_f = clamp(
            rank_combination(&offset_set, config.m_offsets)?,
            b.p_f,
            &mut flags.freq,
        );
        let r_r = clamp(rank_permutation(&realign)?, b.p_r, &mut flags.realign);

        let mut bits = Vec::with_capacity(b.total());
        push_bits(&mut bits, r_s, b.p_s);
        push_bits(&mut bits, r_f, b.p_f);
        push_bits(&mut bits, r_r, b.p_r);
        let sym_w = config.j_qam.trailing_zeros() as usize;
        for &v in &symbol_idx {
            push_bits(&mut bits, v as u128, sym_w);
        }
        let code_w = config.l_codes.trailing_zeros() as usize;
        for (&ci, &cq) in code_idx_i.iter().zip(&code_idx_q) {
            push_bits(&mut bits, (ci - 1) as u128, code_w);
            push_bits(&mut bits, (cq - 1) as u128, code_w);
        }
        // Clamped fields are re-read so the message stays self-consistent.
        let msg = if flags.any() {
            assemble_message(&bits, config)?
        } else {
            TxMessage {
                bits,
                antenna_set,
                offset_set,
                realign,
                code_idx_i,
                code_idx_q,
                symbol_idx,
            }
        };
        Ok((msg, flags))
    }
}

/// Field boundaries within the bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldRanges {
    pub spatial: std::ops::Range<usize>,
    pub freq: std::ops::Range<usize>,
    pub realign: std::ops::Range<usize>,
    pub qam: std::ops::Range<usize>,
    pub code: std::ops::Range<usize>,
}

impl FieldRanges {
    pub fn new(b: &BitBudget) -> Self {
        let s = 0..b.p_s;
        let f = s.end..s.end + b.p_f;
        let r = f.end..f.end + b.p_r;
        let m = r.end..r.end + b.p_m;
        let c = m.end..m.end + b.p_c;
        FieldRanges {
            spatial: s,
            freq: f,
            realign: r,
            qam: m,
            code: c,
        }
    }
}

pub fn bits_to_u128(bits: &[u8]) -> u128 {
    bits.iter()
        .fold(0u128, |acc, &b| (acc << 1) | u128::from(b & 1))
}

pub fn push_bits(out: &mut Vec<u8>, value: u128, width: usize) {
    for i in (0..width).rev() {
        out.push(((value >> i) & 1) as u8);
    }
}

/// Bit vector of the integer `value`, `width` bits, MSB first.
pub fn u128_to_bits(value: u128, width: usize) -> Vec<u8> {
    let mut v = Vec::with_capacity(width);
    push_bits(&mut v, value, width);
    v
}

/// Maps `p_total` bits onto the five index fields.
pub fn assemble_message(bits: &[u8], config: &SystemConfig) -> Result<TxMessage> {
    let b = config.budget();
    if bits.len() != b.total() {
        return Err(Error::BitLength {
            expected: b.total(),
            got: bits.len(),
        });
    }
    let r = FieldRanges::new(&b);
    let n = config.n_active;
    let antenna_set = unrank_combination(bits_to_u128(&bits[r.spatial.clone()]), config.n_t, n)?;
    let offset_set = unrank_combination(bits_to_u128(&bits[r.freq.clone()]), config.m_offsets, n)?;
    let realign = unrank_permutation(bits_to_u128(&bits[r.realign.clone()]), n)?;

    let sym_w = config.j_qam.trailing_zeros() as usize;
    let symbol_idx = bits[r.qam.clone()]
        .chunks(sym_w.max(1))
        .take(n)
        .map(|c| {
            if sym_w == 0 {
                0
            } else {
                bits_to_u128(c) as usize
            }
        })
        .collect();

    let code_w = config.l_codes.trailing_zeros() as usize;
    let (mut code_idx_i, mut code_idx_q) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let code_bits = &bits[r.code.clone()];
    for k in 0..n {
        let base = 2 * k * code_w;
        code_idx_i.push(bits_to_u128(&code_bits[base..base + code_w]) as usize + 1);
        code_idx_q.push(bits_to_u128(&code_bits[base + code_w..base + 2 * code_w]) as usize + 1);
    }

    Ok(TxMessage {
        bits: bits.to_vec(),
        antenna_set,
        offset_set,
        realign,
        code_idx_i,
        code_idx_q,
        symbol_idx,
    })
}

/// Recomputes the bit vector from the message's index fields.
pub fn disassemble_message(msg: &TxMessage, config: &SystemConfig) -> Result<Vec<u8>> {
    let (m, _) = TxMessage::from_fields(
        config,
        msg.antenna_set.clone(),
        msg.offset_set.clone(),
        msg.realign.clone(),
        msg.code_idx_i.clone(),
        msg.code_idx_q.clone(),
        msg.symbol_idx.clone(),
    )?;
    Ok(m.bits)
}
