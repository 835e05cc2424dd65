//! Rectangular QAM with per-rail Gray labelling.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Unit-average-energy rectangular constellation of order `J = α·β`.
///
/// A symbol index `v` is read as `log2 α` in-phase label bits followed by
/// `log2 β` quadrature label bits, each Gray-decoded to an amplitude level.
/// For `J = 2` the antipodal pair lies on the diagonal so that both rails
/// carry energy; each rail is spread by its own code and a silent rail would
/// make its code index unrecoverable.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    pub order: usize,
    pub alpha: usize,
    pub beta: usize,
    pub points: Vec<Complex<T>>,
    /// Mean |x|^2 of `points`.
    pub avg_energy: T,
}

pub fn gray_encode(v: usize) -> usize {
    v ^ (v >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut v = g;
    while g > 0 {
        g >>= 1;
        v ^= g;
    }
    v
}

/// Builds the `J`-point constellation; `J` must be a power of two `>= 2`.
pub fn build_constellation<T: Real>(j_qam: usize) -> Result<Constellation<T>> {
    if j_qam < 2 || !j_qam.is_power_of_two() {
        return Err(Error::Domain {
            func: "build_constellation",
            detail: format!("order {j_qam} is not a power of two >= 2"),
        });
    }
    let bits = j_qam.trailing_zeros() as usize;
    let i_bits = bits.div_ceil(2);
    let q_bits = bits - i_bits;
    let alpha = 1usize << i_bits;
    let beta = 1usize << q_bits;

    let level = |label: usize, size: usize| -> f64 {
        (2 * gray_decode(label)) as f64 - (size as f64 - 1.0)
    };
    let raw_energy = ((alpha * alpha - 1) + (beta * beta - 1)) as f64 / 3.0;
    let scale = raw_energy.sqrt().recip();
    let rotate = beta == 1;

    let points = (0..j_qam)
        .map(|v| {
            let re = level(v >> q_bits, alpha) * scale;
            let im = level(v & (beta - 1), beta) * scale;
            if rotate {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                Complex::new(T::lit(re * r), T::lit(re * r))
            } else {
                Complex::new(T::lit(re), T::lit(im))
            }
        })
        .collect::<Vec<_>>();
    let avg_energy = points.iter().map(|p| p.norm_sqr()).sum::<T>() / T::count(j_qam);
    Ok(Constellation {
        order: j_qam,
        alpha,
        beta,
        points,
        avg_energy,
    })
}

impl<T: Real> Constellation<T> {
    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// In-phase amplitudes of all points, in index order.
    pub fn rail_i(&self) -> impl Iterator<Item = T> + '_ {
        self.points.iter().map(|p| p.re)
    }

    /// Quadrature amplitudes of all points, in index order.
    pub fn rail_q(&self) -> impl Iterator<Item = T> + '_ {
        self.points.iter().map(|p| p.im)
    }

    /// Index of the point closest to `z` (lowest index on ties).
    pub fn nearest(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (v, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = v;
            }
        }
        best
    }
}
