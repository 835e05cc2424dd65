//! System parameters and the derived bit budget.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, factorial, floor_log2};
use crate::error::{config_err, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the carrier/steering phase of each link enters the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// The phase term is folded into the Rayleigh coefficient.
    #[default]
    Absorbed,
    /// The geometric phase `exp(-j2π(f0+Δf^m)τ)` is multiplied in explicitly.
    Explicit,
}

/// Per-branch noise level after the frequency-offset matched-filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSplit {
    /// Each of the M branches carries the full noise power N0.
    #[serde(rename = "branch_n0")]
    PerBranchN0,
    /// The total noise power N0 is split evenly across the M branches.
    #[default]
    #[serde(rename = "branch_n0_over_m")]
    PerBranchN0OverM,
}

/// Bit widths of the five index fields, in transmission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitBudget {
    pub p_s: usize,
    pub p_f: usize,
    pub p_r: usize,
    pub p_m: usize,
    pub p_c: usize,
}

impl BitBudget {
    pub fn total(&self) -> usize {
        self.p_s + self.p_f + self.p_r + self.p_m + self.p_c
    }
}

/// Computes the bit budget for `N_T` antennas with `N` active, an offset pool
/// of `M`, `L` Walsh codes per antenna and rail, and `J`-ary QAM.
pub fn derive_bit_budget(
    n_t: usize,
    n_active: usize,
    m_offsets: usize,
    l_codes: usize,
    j_qam: usize,
) -> Result<BitBudget> {
    if n_active <= 1 {
        return Err(config_err(format!(
            "n_active must exceed 1, got {n_active}"
        )));
    }
    if n_active > n_t {
        return Err(config_err(format!(
            "n_active ({n_active}) exceeds n_t ({n_t})"
        )));
    }
    if n_active > m_offsets {
        return Err(config_err(format!(
            "n_active ({n_active}) exceeds m_offsets ({m_offsets})"
        )));
    }
    if !l_codes.is_power_of_two() {
        return Err(config_err(format!(
            "l_codes must be a power of two, got {l_codes}"
        )));
    }
    if j_qam < 2 || !j_qam.is_power_of_two() {
        return Err(config_err(format!(
            "j_qam must be a power of two >= 2, got {j_qam}"
        )));
    }
    let log2 = |v: usize| v.trailing_zeros() as usize;
    Ok(BitBudget {
        p_s: floor_log2(binomial(n_t as u64, n_active as u64)) as usize,
        p_f: floor_log2(binomial(m_offsets as u64, n_active as u64)) as usize,
        p_r: floor_log2(factorial(n_active as u64)) as usize,
        p_m: n_active * log2(j_qam),
        p_c: 2 * n_active * log2(l_codes),
    })
}

/// Every scheme parameter needed by the transmitter, channel, detectors and
/// analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawConfig", try_from = "RawConfig")]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_active: usize,
    pub m_offsets: usize,
    pub l_codes: usize,
    pub j_qam: usize,
    pub n_r: usize,
    pub k_chips: usize,
    /// Transmit power P_S.
    pub ps_power: f64,
    /// Total noise power N_0. Sweeps overwrite it from the SNR.
    pub n0: f64,
    /// Per-entry variance of the Rayleigh coefficients.
    pub sigma2: f64,
    pub f0: f64,
    pub delta_f: f64,
    pub range_m: f64,
    pub theta_rad: f64,
    pub d_spacing: f64,
    pub phase_mode: PhaseMode,
    pub noise_split: NoiseSplit,
}

impl SystemConfig {
    /// Builds a configuration with the shipped defaults for everything but
    /// the five combinatorial parameters.
    pub fn new(
        n_t: usize,
        n_active: usize,
        m_offsets: usize,
        l_codes: usize,
        j_qam: usize,
    ) -> Result<Self> {
        derive_bit_budget(n_t, n_active, m_offsets, l_codes, j_qam)?;
        let f0 = 3.0e9;
        let cfg = Self {
            n_t,
            n_active,
            m_offsets,
            l_codes,
            j_qam,
            n_r: 2,
            k_chips: default_chips(l_codes, n_t),
            ps_power: 1.0,
            n0: 1.0,
            sigma2: 1.0,
            f0,
            delta_f: 20.0e3,
            range_m: 300.0,
            theta_rad: 60f64.to_radians(),
            d_spacing: SPEED_OF_LIGHT / (2.0 * f0),
            phase_mode: PhaseMode::Absorbed,
            noise_split: NoiseSplit::PerBranchN0OverM,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(N_T, N, M, L, J) = (4, 2, 8, 8, 8)` with two receive antennas.
    pub fn default_small() -> Self {
        Self::new(4, 2, 8, 8, 8).expect("default configuration is valid")
    }

    /// Smallest configuration used for exhaustive ML checks: seven bits per
    /// interval with BPSK and two codes per antenna.
    pub fn p7() -> Self {
        Self::new(2, 2, 2, 2, 2).expect("p7 configuration is valid")
    }

    pub fn with_n_r(mut self, n_r: usize) -> Result<Self> {
        self.n_r = n_r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_k_chips(mut self, k: usize) -> Result<Self> {
        self.k_chips = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        derive_bit_budget(
            self.n_t,
            self.n_active,
            self.m_offsets,
            self.l_codes,
            self.j_qam,
        )?;
        if self.n_r == 0 {
            return Err(config_err("n_r must be at least 1"));
        }
        if !self.k_chips.is_power_of_two() {
            return Err(config_err(format!(
                "k_chips must be a power of two, got {}",
                self.k_chips
            )));
        }
        if self.k_chips < self.l_codes * self.n_t {
            return Err(config_err(format!(
                "k_chips ({}) must be >= l_codes * n_t ({})",
                self.k_chips,
                self.l_codes * self.n_t
            )));
        }
        for (name, v) in [
            ("ps_power", self.ps_power),
            ("n0", self.n0),
            ("sigma2", self.sigma2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_err(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("f0", self.f0),
            ("delta_f", self.delta_f),
            ("d_spacing", self.d_spacing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(self.range_m.is_finite() && self.theta_rad.is_finite()) {
            return Err(config_err("range_m and theta_rad must be finite"));
        }
        Ok(())
    }

    pub fn budget(&self) -> BitBudget {
        derive_bit_budget(
            self.n_t,
            self.n_active,
            self.m_offsets,
            self.l_codes,
            self.j_qam,
        )
        .expect("validated configuration")
    }

    pub fn p_total(&self) -> usize {
        self.budget().total()
    }

    /// Columns in each Walsh code pool, `L * N_T`.
    pub fn code_columns(&self) -> usize {
        self.l_codes * self.n_t
    }

    /// Chip duration T_c = 1/Δf, so that every offset difference completes
    /// an integer number of cycles per chip.
    pub fn chip_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Offset of the m-th pool entry (1-based), linear increments.
    pub fn offset_hz(&self, m: usize) -> f64 {
        m as f64 * self.delta_f
    }

    /// N_0 implied by `SNR = 10 log10(P_S^2 / N_0)`; `+inf` dB gives zero noise.
    pub fn noise_power(&self, snr_db: f64) -> f64 {
        self.ps_power * self.ps_power / 10f64.powf(snr_db / 10.0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

/// `L * N_T` rounded up to the next power of two (Sylvester construction).
pub fn default_chips(l_codes: usize, n_t: usize) -> usize {
    (l_codes * n_t).next_power_of_two()
}

/// On-disk form: every key optional except the five scheme integers, unknown
/// keys rejected, derived widths checked when present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_t: usize,
    n_active: usize,
    m_offsets: usize,
    l_codes: usize,
    j_qam: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_chips: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_f: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_total: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ps_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase_mode: Option<PhaseMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_split: Option<NoiseSplit>,
}

impl TryFrom<RawConfig> for SystemConfig {
    type Error = crate::Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let mut cfg =
            SystemConfig::new(raw.n_t, raw.n_active, raw.m_offsets, raw.l_codes, raw.j_qam)?;
        if let Some(f0) = raw.f0 {
            cfg.f0 = f0;
            cfg.d_spacing = SPEED_OF_LIGHT / (2.0 * f0);
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = raw.$field { cfg.$field = v; } )* };
        }
        take!(
            n_r,
            k_chips,
            ps_power,
            n0,
            sigma2,
            delta_f,
            range_m,
            theta_rad,
            d_spacing,
            phase_mode,
            noise_split
        );
        cfg.validate()?;
        let b = cfg.budget();
        let derived = [
            ("p_s", raw.p_s, b.p_s),
            ("p_f", raw.p_f, b.p_f),
            ("p_r", raw.p_r, b.p_r),
            ("p_m", raw.p_m, b.p_m),
            ("p_c", raw.p_c, b.p_c),
            ("p_total", raw.p_total, b.total()),
        ];
        for (name, given, actual) in derived {
            if let Some(g) = given {
                if g != actual {
                    return Err(config_err(format!(
                        "{name} = {g} disagrees with the derived value {actual}"
                    )));
                }
            }
        }
        Ok(cfg)
    }
}

impl From<SystemConfig> for RawConfig {
    fn from(c: SystemConfig) -> Self {
        let b = c.budget();
        RawConfig {
            n_t: c.n_t,
            n_active: c.n_active,
            m_offsets: c.m_offsets,
            l_codes: c.l_codes,
            j_qam: c.j_qam,
            n_r: Some(c.n_r),
            k_chips: Some(c.k_chips),
            p_s: Some(b.p_s),
            p_f: Some(b.p_f),
            p_r: Some(b.p_r),
            p_m: Some(b.p_m),
            p_c: Some(b.p_c),
            p_total: Some(b.total()),
            ps_power: Some(c.ps_power),
            n0: Some(c.n0),
            sigma2: Some(c.sigma2),
            f0: Some(c.f0),
            delta_f: Some(c.delta_f),
            range_m: Some(c.range_m),
            theta_rad: Some(c.theta_rad),
            d_spacing: Some(c.d_spacing),
            phase_mode: Some(c.phase_mode),
            noise_split: Some(c.noise_split),
        }
    }
}
