//! Per-field bit-error probabilities and their width-weighted combination.

use crate::channel::noise_variances;
use crate::config::{BitBudget, SystemConfig};
use crate::constellation::build_constellation;
use crate::error::Result;
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
use crate::special::{
    bessel_i_scaled, ln_binomial, ln_gamma, log_sum_exp, q_function, regularized_incomplete_beta,
    regularized_lower_incomplete_gamma,
};

/// Variances entering the analytical chain at one SNR point. Every noise
/// term derives from the single per-branch noise variance, so the chain
/// follows the configured noise split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionParams {
    pub n0: f64,
    /// Complex noise variance of one branch entry.
    pub branch_var: f64,
    /// Per-real-dimension noise variance of a branch entry (`σ_2`).
    pub sigma2: f64,
    /// Per-real-dimension noise variance after despreading (`σ_3²`).
    pub sigma3_sq: f64,
    /// `P_S / N`.
    pub amp2: f64,
    pub e_c: f64,
    /// Channel variance `σ²`.
    pub chan_var: f64,
    /// `K N_R`: half the degrees of freedom of a branch energy.
    pub kn_r: usize,
    pub n_r: usize,
}

impl DistributionParams {
    pub fn new(config: &SystemConfig, snr_db: f64) -> Self {
        let n0 = config.noise_power(snr_db);
        let (branch_var, _) = noise_variances(config, n0);
        let e_c = config.k_chips as f64;
        Self {
            n0,
            branch_var,
            sigma2: branch_var / 2.0,
            sigma3_sq: e_c * branch_var / 2.0,
            amp2: config.ps_power / config.n_active as f64,
            e_c,
            chan_var: config.sigma2,
            kn_r: config.k_chips * config.n_r,
            n_r: config.n_r,
        }
    }

    /// Per-dimension variance of a signal branch entry for symbol energy `x2`.
    pub fn sigma1(&self, x2: f64) -> f64 {
        self.amp2 * x2 * self.chan_var / 2.0 + self.sigma2
    }

    /// Per-dimension variance of the despread signal mean for rail energy `a2`.
    pub fn sigma_s_sq(&self, a2: f64) -> f64 {
        self.e_c * self.e_c * self.amp2 * a2 * self.chan_var / 2.0
    }

    /// Per-dimension scale of the post-despreading symbol SNR.
    pub fn sigma5(&self, x2: f64) -> f64 {
        let num = self.e_c * self.amp2 * x2 * self.chan_var;
        if self.branch_var == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / (2.0 * self.branch_var)
        }
    }
}

fn tight() -> QuadOptions {
    // Branch-miss probabilities reach 1e-30 and below; only a relative
    // target is meaningful there.
    QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_intervals: 4000,
        initial_pieces: 16,
    }
}

/// `P(‖noise branch‖² > ‖signal branch‖²)` by integrating the density of
/// their difference over `y > 0`. Both energies are `2σ_i χ²_{2n}` with
/// `n = K N_R`.
pub fn pe_conditional_integrated(sigma1: f64, sigma2: f64, n: usize) -> Result<f64> {
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let a = sigma2 / (sigma1 + sigma2);
    let b = sigma1 / (sigma1 + sigma2);
    let ln_w: Vec<f64> = (0..n)
        .map(|i| {
            let i = i as f64;
            ln_gamma(2.0 * nf - i - 1.0) - ln_gamma(i + 1.0) - ln_gamma(nf - i)
                + (nf - i - 1.0) * b.ln()
                + nf * a.ln()
                - ln_gamma(nf)
        })
        .collect();
    // With z = y / (2σ_2) the density is e^{-z} sum_i w_i z^i.
    let mut buf = vec![0.0; n];
    let density = |z: f64| -> f64 {
        if z == 0.0 {
            return ln_w[0].exp();
        }
        let lz = z.ln();
        for (i, (slot, w)) in buf.iter_mut().zip(&ln_w).enumerate() {
            *slot = w + i as f64 * lz;
        }
        (log_sum_exp(&buf) - z).exp()
    };
    integrate_to_infinity(density, 0.0, nf, &tight())
}

/// The same probability as a regularised incomplete beta function:
/// `I_{σ_2/(σ_1+σ_2)}(n, n)`.
pub fn pe_conditional_beta(sigma1: f64, sigma2: f64, n: usize) -> Result<f64> {
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    regularized_incomplete_beta(n as f64, n as f64, sigma2 / (sigma1 + sigma2))
}

/// The closed form as printed alongside the density. It disagrees with the
/// integral (it yields 1/4 instead of 1/2 at equal variances for `n = 1`),
/// so it is reported for comparison only.
pub fn pe_conditional_printed(sigma1: f64, sigma2: f64, n: usize) -> f64 {
    if sigma2 == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let a = sigma2 / (sigma1 + sigma2);
    let b = sigma1 / (sigma1 + sigma2);
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let i = i as f64;
            let ln_beta = ln_gamma(nf) + ln_gamma(nf - i) - ln_gamma(2.0 * nf - i);
            nf * a.ln() + (nf - i - 1.0) * b.ln() - ln_beta - (2.0 * nf - i).ln()
        })
        .collect();
    log_sum_exp(&terms).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeReport {
    /// Integrated value, averaged over the constellation.
    pub p_e: f64,
    /// Printed closed form, averaged over the constellation.
    pub p_e_printed: f64,
}

/// Groups equal values (to 1e-12 relative) and counts them.
fn tally(values: impl Iterator<Item = f64>) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out
            .iter_mut()
            .find(|(u, _)| (u - v).abs() <= 1e-12 * u.abs().max(1e-300))
        {
            Some(e) => e.1 += 1,
            None => out.push((v, 1)),
        }
    }
    out
}

/// Branch-miss probability averaged over the `J` symbol energies.
pub fn pe_branch_miss(config: &SystemConfig, snr_db: f64) -> Result<PeReport> {
    let d = DistributionParams::new(config, snr_db);
    let cons = build_constellation::<f64>(config.j_qam)?;
    let (mut p_e, mut p_e_printed) = (0.0, 0.0);
    for (x2, count) in tally(cons.points.iter().map(|p| p.norm_sqr())) {
        let w = count as f64 / config.j_qam as f64;
        p_e += w * pe_conditional_integrated(d.sigma1(x2), d.sigma2, d.kn_r)?;
        p_e_printed += w * pe_conditional_printed(d.sigma1(x2), d.sigma2, d.kn_r);
    }
    Ok(PeReport { p_e, p_e_printed })
}

/// `1 - (1 - p)^n` without cancellation for tiny `p`.
fn one_minus_pow(p: f64, n: f64) -> f64 {
    if p >= 1.0 {
        return if n > 0.0 { 1.0 } else { 0.0 };
    }
    -(n * (-p).ln_1p()).exp_m1()
}

/// Union-style bound `P_f = 1 - (1 - P_e)^{(M-N)N}`.
pub fn pf_bound(p_e: f64, config: &SystemConfig) -> f64 {
    one_minus_pow(
        p_e,
        ((config.m_offsets - config.n_active) * config.n_active) as f64,
    )
}

/// `P_f1 = 1 - (1 - P_e)^{M-N}` for a single selected branch.
pub fn pf1_single(p_e: f64, config: &SystemConfig) -> f64 {
    one_minus_pow(p_e, (config.m_offsets - config.n_active) as f64)
}

/// `P_1 = 2^{p_f} P_f / (2 (2^{p_f} - 1))`, zero without frequency bits.
pub fn p1_freq_bits(p_f: f64, p_f_bits: usize) -> f64 {
    if p_f_bits == 0 {
        return 0.0;
    }
    let m = (p_f_bits as f64).exp2();
    m * p_f / (2.0 * (m - 1.0))
}

fn chi2_density_ln(t: f64, dof: f64) -> f64 {
    // ln of the χ²_dof density at t > 0.
    (dof / 2.0 - 1.0) * t.ln()
        - t / 2.0
        - (dof / 2.0) * std::f64::consts::LN_2
        - ln_gamma(dof / 2.0)
}

/// Probability that the signal column's norm beats all `columns - 1` noise
/// columns for rail energy `a2` (a probability of correct detection).
/// Nested integration: over the despread norm given the fading amplitude,
/// then over the fading amplitude.
pub fn pew_conditional(d: &DistributionParams, a2: f64, columns: usize) -> Result<f64> {
    if columns <= 1 {
        return Ok(1.0);
    }
    let others = (columns - 1) as i32;
    let ss = d.sigma_s_sq(a2);
    if ss == 0.0 {
        return Ok(1.0 / columns as f64);
    }
    if d.sigma3_sq == 0.0 {
        return Ok(1.0);
    }
    let nu = d.n_r as f64;
    let order = nu / 2.0 - 1.0;
    let rho = (ss / d.sigma3_sq).sqrt();
    let inner_opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 2000,
        initial_pieces: 8,
    };
    let mut err = None;

    // Inner: with t = u² in units of σ_3² and l = √λ, the noncentral density
    // is ½ e^{-(u-l)²/2} (u/l)^{ν/2-1} [e^{-ul} I_{ν/2-1}(ul)], times 2u du.
    let mut inner = |l: f64| -> f64 {
        let lo = (l - 13.0).max(0.0);
        let hi = l + 13.0;
        let res = integrate(
            |u: f64| {
                if u == 0.0 {
                    return 0.0;
                }
                let cdf =
                    regularized_lower_incomplete_gamma(nu / 2.0, u * u / 2.0).unwrap_or(f64::NAN);
                let bes = bessel_i_scaled(order, u * l).unwrap_or(f64::NAN);
                u * (-(u - l) * (u - l) / 2.0).exp() * (u / l).powf(order) * bes * cdf.powi(others)
            },
            lo,
            hi,
            &inner_opts,
        );
        match res {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    };

    // Middle: s = σ_s r with r chi-distributed on ν degrees of freedom.
    let ln_norm = -(nu / 2.0 - 1.0) * std::f64::consts::LN_2 - ln_gamma(nu / 2.0);
    let r_max = 13.0 + nu.sqrt();
    let value = integrate(
        |r: f64| {
            if r == 0.0 {
                return 0.0;
            }
            let pdf = ((nu - 1.0) * r.ln() - r * r / 2.0 + ln_norm).exp();
            pdf * inner(rho * r)
        },
        0.0,
        r_max,
        &QuadOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_intervals: 2000,
            initial_pieces: 8,
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(value?.clamp(0.0, 1.0))
}

/// Same probability via the marginal of the signal norm: with Gaussian
/// fading the signal column is zero-mean with per-dimension variance
/// `σ_s² + σ_3²`, a scaled central χ² on `N_R` degrees of freedom.
pub fn pew_conditional_collapsed(d: &DistributionParams, a2: f64, columns: usize) -> Result<f64> {
    if columns <= 1 {
        return Ok(1.0);
    }
    if d.sigma3_sq == 0.0 {
        return Ok(if d.sigma_s_sq(a2) > 0.0 {
            1.0
        } else {
            1.0 / columns as f64
        });
    }
    let nu = d.n_r as f64;
    let scale = (d.sigma_s_sq(a2) + d.sigma3_sq) / d.sigma3_sq;
    let others = (columns - 1) as i32;
    integrate_to_infinity(
        |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let cdf = regularized_lower_incomplete_gamma(nu / 2.0, t / 2.0).unwrap_or(f64::NAN);
            (chi2_density_ln(t / scale, nu) - scale.ln()).exp() * cdf.powi(others)
        },
        0.0,
        scale * nu.max(1.0),
        &QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 4000,
            initial_pieces: 16,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PewReport {
    /// Correct-detection probabilities per rail.
    pub p_e_w_i: f64,
    pub p_e_w_q: f64,
    /// Code-miss probabilities `1 - P_e^w` per rail.
    pub p_c_i: f64,
    pub p_c_q: f64,
}

impl PewReport {
    /// `P_C = (P_c^I + P_c^Q) / 2`.
    pub fn p_c(&self) -> f64 {
        0.5 * (self.p_c_i + self.p_c_q)
    }
}

/// Code detection probabilities averaged over each rail's amplitudes.
pub fn pew_code_correct(config: &SystemConfig, snr_db: f64) -> Result<PewReport> {
    let d = DistributionParams::new(config, snr_db);
    let cons = build_constellation::<f64>(config.j_qam)?;
    let cols = config.code_columns();
    let j = config.j_qam as f64;
    let rail = |vals: Vec<f64>| -> Result<f64> {
        let mut acc = 0.0;
        for (a2, count) in tally(vals.into_iter()) {
            acc += count as f64 / j * pew_conditional(&d, a2, cols)?;
        }
        Ok(acc)
    };
    let p_e_w_i = rail(cons.rail_i().map(|v| v * v).collect())?;
    let p_e_w_q = rail(cons.rail_q().map(|v| v * v).collect())?;
    Ok(PewReport {
        p_e_w_i,
        p_e_w_q,
        p_c_i: 1.0 - p_e_w_i,
        p_c_q: 1.0 - p_e_w_q,
    })
}

/// `P_2`, the code-bit error probability.
pub fn p2_code_bits(config: &SystemConfig, p_f1: f64, p_c: f64) -> f64 {
    let lnt = config.code_columns() as f64;
    let log2l = config.l_codes.trailing_zeros().max(1) as f64;
    (lnt - 1.0) / lnt * p_f1 + (1.0 - p_f1) * p_c / log2l
}

/// `P_w`, probability that a branch's antenna/code decision is wrong.
fn p_w(config: &SystemConfig, p_f1: f64, p_c: f64) -> f64 {
    let lnt = config.code_columns() as f64;
    (lnt - 1.0) / lnt * p_f1 + (1.0 - p_f1) * p_c
}

/// `P_3 = 1 - (1 - P_w)^N`; returns `(P_3, P_w)`.
pub fn p3_antenna_bits(config: &SystemConfig, p_f1: f64, p_c: f64) -> (f64, f64) {
    let pw = p_w(config, p_f1, p_c);
    (one_minus_pow(pw, config.n_active as f64), pw)
}

/// `P_4 = 1 - [(1 - P_f1)(1 - P_C)]^N`.
pub fn p4_realign_bits(config: &SystemConfig, p_f1: f64, p_c: f64) -> f64 {
    1.0 - ((1.0 - p_f1) * (1.0 - p_c)).powi(config.n_active as i32)
}

/// `P_5 = P_w / 2 + (1 - P_w) P_QAM`.
pub fn p5_from_qam(p_w: f64, p_qam: f64) -> f64 {
    0.5 * p_w + (1.0 - p_w) * p_qam
}

/// `P(x) = (1 - √(x/(1+x))) / 2`, written without cancellation.
pub fn p_of(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    let r = (x / (1.0 + x)).sqrt();
    0.5 / (1.0 + x) / (1.0 + r)
}

/// `(i, weight)` pairs of the Gray-coded PAM bit-error expansion for bit
/// `l` (1-based) of a `size`-level rail: the bit error is
/// `(2/size) sum_i weight_i Q((2i+1) d)`.
pub fn gray_pam_bit_terms(l: usize, size: usize) -> Vec<(usize, f64)> {
    let p = 1usize << (l - 1);
    let upper = size - size / (1 << l); // (1 - 2^{-l}) size
    (0..upper)
        .map(|i| {
            let sign = if (i * p / size).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            // floor(i 2^{l-1} / size + 1/2) = floor((2 i p + size) / (2 size))
            let round = (2 * i * p + size) / (2 * size);
            (i, sign * (p as f64 - round as f64))
        })
        .collect()
}

fn pam_geometry(alpha: usize, beta: usize) -> f64 {
    // 6 log2(αβ) / (α² + β² − 2)
    6.0 * ((alpha * beta) as f64).log2() / ((alpha * alpha + beta * beta) as f64 - 2.0)
}

/// Fading-averaged error probability of bit `l` on a `size`-level rail of an
/// `α x β` grid, closed form with `N_R`-fold diversity.
pub fn pam_bit_closed(
    l: usize,
    size: usize,
    alpha: usize,
    beta: usize,
    sigma5: f64,
    n_r: usize,
) -> f64 {
    let g = pam_geometry(alpha, beta);
    let mut acc = 0.0;
    for (i, w) in gray_pam_bit_terms(l, size) {
        let c = ((2 * i + 1) * (2 * i + 1)) as f64 * g * sigma5;
        let pc = p_of(c);
        let sum: f64 = (0..n_r)
            .map(|k| {
                (ln_binomial((n_r - 1 + k) as f64, k as f64)).exp() * (1.0 - pc).powi(k as i32)
            })
            .sum();
        acc += w * pc.powi(n_r as i32) * sum;
    }
    2.0 / size as f64 * acc
}

/// The same probability by integrating the AWGN expression against the
/// `2 N_R`-degree-of-freedom density of the instantaneous SNR.
pub fn pam_bit_integrated(
    l: usize,
    size: usize,
    alpha: usize,
    beta: usize,
    sigma5: f64,
    n_r: usize,
) -> Result<f64> {
    let g = pam_geometry(alpha, beta);
    let terms = gray_pam_bit_terms(l, size);
    if sigma5 == f64::INFINITY {
        return Ok(0.0);
    }
    if sigma5 == 0.0 {
        return Ok(2.0 / size as f64 * terms.iter().map(|(_, w)| w * 0.5).sum::<f64>());
    }
    let nr = n_r as f64;
    let ln_norm = -nr * std::f64::consts::LN_2 - ln_gamma(nr) - nr * sigma5.ln();
    let v = integrate_to_infinity(
        |gamma: f64| {
            if gamma == 0.0 && n_r > 1 {
                return 0.0;
            }
            let pdf = ((nr - 1.0) * gamma.ln() - gamma / (2.0 * sigma5) + ln_norm).exp();
            let cond: f64 = terms
                .iter()
                .map(|&(i, w)| w * q_function((2 * i + 1) as f64 * (g * gamma).sqrt()))
                .sum();
            pdf * cond
        },
        0.0,
        2.0 * sigma5 * nr,
        &QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
            initial_pieces: 16,
        },
    )?;
    Ok(2.0 / size as f64 * v)
}

/// Symbol-bit error probability with correct index detection.
pub fn p_qam(config: &SystemConfig, snr_db: f64) -> Result<f64> {
    let d = DistributionParams::new(config, snr_db);
    let cons = build_constellation::<f64>(config.j_qam)?;
    let (alpha, beta) = (cons.alpha, cons.beta);
    let bits_i = alpha.trailing_zeros() as usize;
    let bits_q = beta.trailing_zeros() as usize;
    let mut total = 0.0;
    for (x2, count) in tally(cons.points.iter().map(|p| p.norm_sqr())) {
        let s5 = d.sigma5(x2);
        let w = count as f64 / config.j_qam as f64;
        for l in 1..=bits_i {
            total += w * pam_bit_closed(l, alpha, alpha, beta, s5, d.n_r);
        }
        for l in 1..=bits_q {
            total += w * pam_bit_closed(l, beta, alpha, beta, s5, d.n_r);
        }
    }
    Ok(total / cons.bits_per_symbol() as f64)
}

/// Analytical breakdown at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbepBreakdown {
    pub snr_db: f64,
    pub p_e: f64,
    pub p_e_printed: f64,
    pub p_f: f64,
    pub p_f1: f64,
    pub p_e_w_i: f64,
    pub p_e_w_q: f64,
    pub p_c_i: f64,
    pub p_c_q: f64,
    pub p_c: f64,
    pub p_w: f64,
    pub p_qam: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub abep: f64,
}

/// `(P_1 p_f + P_2 p_c + P_3 p_s + P_4 p_r + P_5 p_m) / p_total`.
pub fn abep_total(p: [f64; 5], budget: &BitBudget) -> f64 {
    let total = budget.total();
    if total == 0 {
        return 0.0;
    }
    let weights = [budget.p_f, budget.p_c, budget.p_s, budget.p_r, budget.p_m];
    p.iter()
        .zip(weights)
        .map(|(p, w)| p * w as f64)
        .sum::<f64>()
        / total as f64
}

impl AbepBreakdown {
    pub fn evaluate(config: &SystemConfig, snr_db: f64) -> Result<Self> {
        let b = config.budget();
        let pe = pe_branch_miss(config, snr_db)?;
        let p_f = pf_bound(pe.p_e, config);
        let p_f1 = pf1_single(pe.p_e, config);
        let pew = pew_code_correct(config, snr_db)?;
        let p_c = pew.p_c();
        let p1 = p1_freq_bits(p_f, b.p_f);
        let p2 = p2_code_bits(config, p_f1, p_c);
        let (p3, p_w) = p3_antenna_bits(config, p_f1, p_c);
        let p4 = p4_realign_bits(config, p_f1, p_c);
        let pq = p_qam(config, snr_db)?;
        let p5 = p5_from_qam(p_w, pq);
        let c = |v: f64| v.clamp(0.0, 1.0);
        let ps = [c(p1), c(p2), c(p3), c(p4), c(p5)];
        Ok(Self {
            snr_db,
            p_e: c(pe.p_e),
            p_e_printed: c(pe.p_e_printed),
            p_f: c(p_f),
            p_f1: c(p_f1),
            p_e_w_i: c(pew.p_e_w_i),
            p_e_w_q: c(pew.p_e_w_q),
            p_c_i: c(pew.p_c_i),
            p_c_q: c(pew.p_c_q),
            p_c: c(p_c),
            p_w: c(p_w),
            p_qam: c(pq),
            p1: ps[0],
            p2: ps[1],
            p3: ps[2],
            p4: ps[3],
            p5: ps[4],
            abep: c(abep_total(ps, &b)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pe_equal_variance_is_half() {
        for n in [1, 2, 8, 64, 128] {
            let v = pe_conditional_integrated(0.7, 0.7, n).unwrap();
            assert!(close(v, 0.5, 1e-9), "{n}: {v}");
        }
        // The printed form gives 1/4 for a single degree of freedom pair.
        assert!(close(pe_conditional_printed(1.0, 1.0, 1), 0.25, 1e-15));
    }

    #[test]
    fn pe_integral_matches_incomplete_beta() {
        for &(s1, s2, n) in &[
            (2.0, 1.0, 1),
            (2.0, 1.0, 8),
            (5.0, 0.3, 16),
            (40.0, 1.0, 64),
            (1.3, 1.0, 200),
        ] {
            let a = pe_conditional_integrated(s1, s2, n).unwrap();
            let b = pe_conditional_beta(s1, s2, n).unwrap();
            assert!(((a - b) / b).abs() < 1e-8, "{s1} {s2} {n}: {a} vs {b}");
        }
    }

    #[test]
    fn pe_decreases_with_snr() {
        let cfg = SystemConfig::p7();
        let mut last = 1.0;
        for snr in [-10.0, -5.0, 0.0, 5.0, 10.0] {
            let p = pe_branch_miss(&cfg, snr).unwrap().p_e;
            assert!(p < last);
            last = p;
        }
        // P_S = 0 also zeroes N_0 through the SNR definition, so the
        // silent case sets the variances directly.
        let d = DistributionParams {
            branch_var: 1.0,
            sigma2: 0.5,
            sigma3_sq: 2.0,
            amp2: 0.0,
            ..DistributionParams::new(&cfg, 0.0)
        };
        assert!(close(
            pe_conditional_integrated(d.sigma1(1.0), d.sigma2, d.kn_r).unwrap(),
            0.5,
            1e-6
        ));
    }

    #[test]
    fn frequency_probabilities() {
        let cfg = SystemConfig::default_small();
        assert_eq!(pf_bound(0.0, &cfg), 0.0);
        assert_eq!(p1_freq_bits(0.0, 4), 0.0);
        assert!(close(p1_freq_bits(0.1, 4), 16.0 * 0.1 / 30.0, 1e-15));
        assert_eq!(p1_freq_bits(0.3, 0), 0.0);
        let square = SystemConfig::new(4, 2, 2, 8, 8).unwrap();
        assert_eq!(pf_bound(0.2, &square), 0.0);
        assert!(close(pf_bound(0.01, &cfg), 1.0 - 0.99f64.powi(12), 1e-15));
        assert!(close(pf1_single(0.01, &cfg), 1.0 - 0.99f64.powi(6), 1e-15));
    }

    #[test]
    fn combination_reductions() {
        let cfg = SystemConfig::default_small();
        let pc = 0.03;
        assert!(close(p2_code_bits(&cfg, 0.0, pc), pc / 3.0, 1e-15));
        assert!(close(
            p4_realign_bits(&cfg, 0.0, pc),
            1.0 - (1.0 - pc).powi(2),
            1e-15
        ));
        assert!(close(p2_code_bits(&cfg, 1.0, pc), 31.0 / 32.0, 1e-15));
        let mut one = cfg.clone();
        one.n_active = 1;
        // N = 1 is not a valid scheme configuration, but the formula is.
        let (p3, pw) = p3_antenna_bits(&one, 0.0, 0.2);
        assert!(close(pw, 0.2, 1e-15) && close(p3, 0.2, 1e-15));
        assert!(close(p5_from_qam(0.4, 0.0), 0.2, 1e-15));
    }

    #[test]
    fn pew_limits() {
        let cfg = SystemConfig::default_small();
        let d = DistributionParams::new(&cfg, 10.0);
        assert_eq!(pew_conditional(&d, 0.5, 1).unwrap(), 1.0);
        assert!(close(
            pew_conditional(&d, 0.0, 32).unwrap(),
            1.0 / 32.0,
            1e-15
        ));
        // Vanishing signal through the quadrature path.
        let v = pew_conditional(&d, 1e-14, 32).unwrap();
        assert!(close(v, 1.0 / 32.0, 1e-6), "{v}");
        let v = pew_conditional_collapsed(&d, 0.0, 32).unwrap();
        assert!(close(v, 1.0 / 32.0, 1e-9), "{v}");
    }

    #[test]
    fn pew_nested_matches_collapsed() {
        for n_r in [1, 2, 4] {
            let cfg = SystemConfig::default_small().with_n_r(n_r).unwrap();
            for snr in [-20.0, -10.0, 0.0, 10.0] {
                let d = DistributionParams::new(&cfg, snr);
                for a2 in [1.0 / 6.0, 1.5] {
                    let nested = pew_conditional(&d, a2, 32).unwrap();
                    let collapsed = pew_conditional_collapsed(&d, a2, 32).unwrap();
                    assert!(
                        close(nested, collapsed, 1e-8),
                        "N_R={n_r} snr={snr} a2={a2}: {nested} {collapsed}"
                    );
                }
            }
        }
    }

    #[test]
    fn p_of_values() {
        assert!(close(p_of(1.0), (1.0 - 0.5f64.sqrt()) / 2.0, 1e-16));
        assert!(close(p_of(1.0), 0.146_446_609_406_726_24, 1e-15));
        for x in [1e-12, 1e-3, 1.0, 1e3, 1e12] {
            let v = p_of(x);
            assert!(v > 0.0 && v < 0.5);
        }
        assert!(close(p_of(1e-14), 0.5, 1e-6));
        assert_eq!(p_of(f64::INFINITY), 0.0);
    }

    #[test]
    fn gray_pam_terms_4pam() {
        // 4-PAM: MSB (1/2)[Q(d) + Q(3d)], LSB (1/2)[2Q(d) + Q(3d) - Q(5d)].
        assert_eq!(gray_pam_bit_terms(1, 4), vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(gray_pam_bit_terms(2, 4), vec![(0, 2.0), (1, 1.0), (2, -1.0)]);
        assert_eq!(gray_pam_bit_terms(1, 2), vec![(0, 1.0)]);
    }

    #[test]
    fn pam_closed_matches_integral() {
        for (alpha, beta) in [(2usize, 1), (2, 2), (4, 2), (4, 4), (8, 4)] {
            for n_r in [1, 2, 3] {
                for s5 in [0.05, 1.0, 30.0, 2000.0] {
                    let bits = alpha.trailing_zeros() as usize;
                    for l in 1..=bits {
                        let c = pam_bit_closed(l, alpha, alpha, beta, s5, n_r);
                        let i = pam_bit_integrated(l, alpha, alpha, beta, s5, n_r).unwrap();
                        assert!(
                            close(c, i, 1e-8),
                            "{alpha}x{beta} N_R={n_r} s5={s5} l={l}: {c} {i}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn abep_weighting() {
        let b = SystemConfig::default_small().budget();
        assert_eq!(abep_total([0.0; 5], &b), 0.0);
        assert!(close(abep_total([1.0; 5], &b), 1.0, 1e-15));
        let p = [0.05333, 0.02, 0.01, 0.015, 0.008];
        let want = (0.05333 * 4.0 + 0.02 * 12.0 + 0.01 * 2.0 + 0.015 * 1.0 + 0.008 * 6.0) / 25.0;
        assert!(close(abep_total(p, &b), want, 1e-15));
    }

    #[test]
    fn breakdown_limits_and_monotonicity() {
        let cfg = SystemConfig::default_small();
        let mut last = f64::INFINITY;
        for snr in (0..=30).step_by(5) {
            let a = AbepBreakdown::evaluate(&cfg, snr as f64).unwrap();
            for v in [a.p1, a.p2, a.p3, a.p4, a.p5, a.abep, a.p_e, a.p_qam] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!(a.abep <= last, "{snr}");
            last = a.abep;
        }
        let inf = AbepBreakdown::evaluate(&cfg, f64::INFINITY).unwrap();
        assert_eq!((inf.p_qam, inf.abep), (0.0, 0.0));
    }
}
