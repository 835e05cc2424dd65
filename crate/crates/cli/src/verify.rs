//! Self-checks run by `gcim verify`: each prints one PASS/FAIL line.

use gcim_core::analysis::{
    complexity_counts, data_rate, measured_complexity, pam_bit_closed, pam_bit_integrated,
    pe_conditional_beta, pe_conditional_integrated, pew_conditional, pew_conditional_collapsed,
    AbepBreakdown, DistributionParams, TABLE2,
};
use gcim_core::message::{assemble_message, disassemble_message, u128_to_bits};
use gcim_core::sim::{run_sweep, DetectorChoice, SweepSpec};
use gcim_core::spreading::sylvester_hadamard;
use gcim_core::SystemConfig;

type Check = fn(u64, u64) -> anyhow::Result<Result<String, String>>;

fn table_rates(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    let mut got = Vec::new();
    for row in TABLE2 {
        let (a, b, c, d, e) = row.params;
        let p = data_rate(&SystemConfig::new(a, b, c, d, e)?);
        if p != row.published {
            return Ok(Err(format!("{:?}: {p} != {}", row.params, row.published)));
        }
        got.push(p.to_string());
    }
    Ok(Ok(got.join(",")))
}

fn round_trip(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    let cfg = SystemConfig::p7();
    let p = cfg.p_total();
    for v in 0..(1u128 << p) {
        let bits = u128_to_bits(v, p);
        let back = disassemble_message(&assemble_message(&bits, &cfg)?, &cfg)?;
        if back != bits {
            return Ok(Err(format!("vector {v} does not round-trip")));
        }
    }
    Ok(Ok(format!("{} vectors", 1u128 << p)))
}

fn walsh(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    for k in [1, 2, 4, 8, 16, 32, 64] {
        let h = sylvester_hadamard(k)?;
        for (i, a) in h.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                let dot: i64 = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| i64::from(x) * i64::from(y))
                    .sum();
                let want = if i == j { k as i64 } else { 0 };
                if dot != want {
                    return Ok(Err(format!("K={k} columns {i},{j}: {dot}")));
                }
            }
        }
    }
    Ok(Ok("K <= 64".into()))
}

fn noise_free(trials: u64, seed: u64) -> anyhow::Result<Result<String, String>> {
    for (cfg, det) in [
        (SystemConfig::p7(), DetectorChoice::Both),
        (SystemConfig::default_small(), DetectorChoice::Dblc),
    ] {
        let spec = SweepSpec::new(cfg, vec![f64::INFINITY], trials, seed, det);
        for r in run_sweep(&spec)? {
            if r.counts.total != 0 {
                return Ok(Err(format!(
                    "{} made {} bit errors",
                    r.detector, r.counts.total
                )));
            }
        }
    }
    Ok(Ok(format!("{trials} trials per detector")))
}

fn ml_optimality(trials: u64, seed: u64) -> anyhow::Result<Result<String, String>> {
    let spec = SweepSpec::new(
        SystemConfig::p7(),
        vec![10.0],
        trials,
        seed,
        DetectorChoice::Both,
    );
    let r = &run_sweep(&spec)?[0];
    if r.ml_optimality_violations == 0 {
        Ok(Ok(format!("{trials} paired trials")))
    } else {
        Ok(Err(format!("{} violations", r.ml_optimality_violations)))
    }
}

fn complexity(_: u64, seed: u64) -> anyhow::Result<Result<String, String>> {
    let cfg = SystemConfig::p7();
    let (ml, dblc) = measured_complexity(&cfg, seed, gcim_core::detectors::ML_GUARD_BITS)?;
    let f = complexity_counts(&cfg);
    let ok = ml.map(u128::from) == Some(f.ml)
        && (dblc as f64) <= 2.0 * f.dblc as f64
        && 2 * dblc as u128 >= f.dblc;
    let msg = format!(
        "ml {ml:?} (formula {}), dblc {dblc} (formula {})",
        f.ml, f.dblc
    );
    Ok(if ok { Ok(msg) } else { Err(msg) })
}

fn pe_oracles(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    let half = pe_conditional_integrated(0.8, 0.8, 64)?;
    if (half - 0.5).abs() > 1e-6 {
        return Ok(Err(format!("equal variance gives {half}")));
    }
    for snr in [0.0, 10.0, 20.0] {
        let cfg = SystemConfig::default_small();
        let d = DistributionParams::new(&cfg, snr);
        let (s1, s2) = (d.sigma1(1.0), d.sigma2);
        let a = pe_conditional_integrated(s1, s2, d.kn_r)?;
        let b = pe_conditional_beta(s1, s2, d.kn_r)?;
        if (a - b).abs() > 1e-8 * b.max(1e-300) && (a - b).abs() > 1e-12 {
            return Ok(Err(format!("snr {snr}: {a} vs {b}")));
        }
    }
    Ok(Ok("integral = incomplete beta; equal variance 1/2".into()))
}

fn pew_oracles(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    let cfg = SystemConfig::default_small();
    for snr in [0.0, 10.0, 20.0] {
        let d = DistributionParams::new(&cfg, snr);
        let a = pew_conditional(&d, 1.0 / 6.0, cfg.code_columns())?;
        let b = pew_conditional_collapsed(&d, 1.0 / 6.0, cfg.code_columns())?;
        if (a - b).abs() > 1e-8 {
            return Ok(Err(format!("snr {snr}: {a} vs {b}")));
        }
    }
    Ok(Ok("nested = collapsed".into()))
}

fn pam_oracles(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    for s5 in [0.1, 1.0, 10.0, 100.0] {
        for l in 1..=2 {
            let a = pam_bit_closed(l, 4, 4, 2, s5, 2);
            let b = pam_bit_integrated(l, 4, 4, 2, s5, 2)?;
            if (a - b).abs() > 1e-8 {
                return Ok(Err(format!("s5 {s5} bit {l}: {a} vs {b}")));
            }
        }
    }
    Ok(Ok("closed form = integral".into()))
}

fn abep_monotone(_: u64, _: u64) -> anyhow::Result<Result<String, String>> {
    let cfg = SystemConfig::default_small();
    let mut last = f64::INFINITY;
    for snr in (0..=30).step_by(2) {
        let a = AbepBreakdown::evaluate(&cfg, f64::from(snr))?.abep;
        if !(0.0..=1.0).contains(&a) || a > last {
            return Ok(Err(format!("{a} at {snr} dB after {last}")));
        }
        last = a;
    }
    Ok(Ok(format!("0-30 dB, {last:.3e} at 30 dB")))
}

const CHECKS: [(&str, Check); 10] = [
    ("table2_data_rates", table_rates),
    ("round_trip_p7", round_trip),
    ("walsh_orthogonality", walsh),
    ("noise_free_exactness", noise_free),
    ("ml_optimality", ml_optimality),
    ("complexity_counts", complexity),
    ("pe_oracle", pe_oracles),
    ("pew_oracle", pew_oracles),
    ("pam_oracle", pam_oracles),
    ("abep_monotone", abep_monotone),
];

/// Runs every check and returns the number of failures.
pub fn run(trials: u64, seed: u64) -> anyhow::Result<usize> {
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check(trials, seed)? {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    Ok(failures)
}
