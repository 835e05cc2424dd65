//! Exhaustive ML and three-stage despreading detectors, plus bit-error
//! bookkeeping per index field.

mod dblc;
mod ml;

pub use dblc::{split_column, DblcDetector, Stage2Decision};
pub use ml::{MlDetector, ML_GUARD_BITS};

use crate::config::SystemConfig;
use crate::message::{ClampFlags, FieldRanges, TxMessage};

/// Decoded message plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub message: TxMessage,
    /// Decoded ranks that exceeded their field width and were clamped.
    pub clamped: ClampFlags,
    /// Some branch's quadrature-rail argmax pointed at a different antenna
    /// than its in-phase argmax.
    pub rail_disagreement: bool,
    /// Two branches claimed the same antenna and one was moved.
    pub antenna_reassigned: bool,
    /// Multiplications performed for this decision.
    pub multiplications: u64,
}

impl DetectionResult {
    pub fn bits(&self) -> &[u8] {
        &self.message.bits
    }
}

/// Bit-error tallies per field, accumulated over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub freq: u64,
    pub code: u64,
    pub spatial: u64,
    pub realign: u64,
    pub qam: u64,
    pub total: u64,
    pub trials: u64,
}

impl ErrorCounts {
    pub fn merge(&mut self, other: &ErrorCounts) {
        self.freq += other.freq;
        self.code += other.code;
        self.spatial += other.spatial;
        self.realign += other.realign;
        self.qam += other.qam;
        self.total += other.total;
        self.trials += other.trials;
    }
}

/// Hamming distance between two bit vectors per field, for one trial.
pub fn count_bit_errors_bits(tx: &[u8], rx: &[u8], config: &SystemConfig) -> ErrorCounts {
    let r = FieldRanges::new(&config.budget());
    let diff = |range: std::ops::Range<usize>| -> u64 {
        tx[range.clone()]
            .iter()
            .zip(&rx[range])
            .filter(|(a, b)| a != b)
            .count() as u64
    };
    let mut c = ErrorCounts {
        spatial: diff(r.spatial),
        freq: diff(r.freq),
        realign: diff(r.realign),
        qam: diff(r.qam),
        code: diff(r.code),
        total: 0,
        trials: 1,
    };
    c.total = c.spatial + c.freq + c.realign + c.qam + c.code;
    c
}

pub fn count_bit_errors(
    tx: &TxMessage,
    rx: &DetectionResult,
    config: &SystemConfig,
) -> ErrorCounts {
    count_bit_errors_bits(&tx.bits, rx.bits(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_tallies() {
        let cfg = SystemConfig::default_small();
        let tx: Vec<u8> = (0..25).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(
            count_bit_errors_bits(&tx, &tx, &cfg),
            ErrorCounts {
                trials: 1,
                ..Default::default()
            }
        );

        let inv: Vec<u8> = tx.iter().map(|b| 1 - b).collect();
        let c = count_bit_errors_bits(&tx, &inv, &cfg);
        assert_eq!(
            (c.total, c.spatial, c.freq, c.realign, c.qam, c.code),
            (25, 2, 4, 1, 6, 12)
        );

        let mut one = tx.clone();
        one[6] ^= 1;
        let c = count_bit_errors_bits(&tx, &one, &cfg);
        assert_eq!(
            c,
            ErrorCounts {
                realign: 1,
                total: 1,
                trials: 1,
                ..Default::default()
            }
        );
    }
}
