//! Adaptive 15-point Gauss-Kronrod integration.

use crate::error::{Error, Result};

// Tabulated nodes and weights, kept at their published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Equal-width pieces the range is cut into before adapting.
    pub initial_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
            initial_pieces: 8,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    // Differences at the level of round-off are not resolvable.
    let error = ((k - g) * h).abs().max(50.0 * f64::EPSILON * abs * h.abs());
    Piece { a, b, value, error }
}

/// `∫_a^b f(x) dx` to within `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!(
            "finite limits required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let n0 = opts.initial_pieces.max(1);
    let w = (b - a) / n0 as f64;
    let mut pieces: Vec<Piece> = (0..n0)
        .map(|i| {
            let lo = a + w * i as f64;
            let hi = if i + 1 == n0 { b } else { lo + w };
            kronrod(&mut f, lo, hi)
        })
        .collect();
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(value);
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "[{a}, {b}]: estimate {value:e} with error {error:e} after {} intervals",
                pieces.len()
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let worst = pieces.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be split further",
                worst.a, worst.b
            )));
        }
        pieces.push(kronrod(&mut f, worst.a, mid));
        pieces.push(kronrod(&mut f, mid, worst.b));
    }
}

/// `∫_a^∞ f(x) dx` through `x = a + scale·t/(1-t)`. `scale` should be of the
/// order of the integrand's spread.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Quadrature(format!(
            "scale must be positive, got {scale}"
        )));
    }
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + scale * t / one_minus;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (one_minus * one_minus)
            }
        },
        0.0,
        1.0,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let o = QuadOptions::default();
        let v = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0, &o).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_and_peaked() {
        let o = QuadOptions::default();
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, &o).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // Narrow Gaussian away from the centre of the range.
        let s = 1e-3;
        let v = integrate(
            |x: f64| (-(x - 0.3).powi(2) / (2.0 * s * s)).exp(),
            0.0,
            1.0,
            &o,
        )
        .unwrap();
        assert!((v / (s * (2.0 * std::f64::consts::PI).sqrt()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite() {
        let o = QuadOptions::default();
        let v = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, &o).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v =
            integrate_to_infinity(|x: f64| x.powi(4) * (-x / 7.0).exp(), 0.0, 30.0, &o).unwrap();
        assert!((v / (24.0 * 7f64.powi(5)) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reports_failure() {
        let o = QuadOptions {
            max_intervals: 10,
            ..QuadOptions::default()
        };
        assert!(integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, &o).is_err());
        assert!(integrate(|_| f64::NAN, 0.0, 1.0, &QuadOptions::default()).is_err());
    }
}
