use gcim_core::message::{assemble_message, disassemble_message, u128_to_bits};
use gcim_core::SystemConfig;
use proptest::prelude::*;

fn small_configs(max_bits: usize) -> Vec<SystemConfig> {
    let mut out = Vec::new();
    for n_t in 2..=5 {
        for n in 2..=n_t {
            for m in n..=6 {
                for l in [1, 2, 4] {
                    for j in [2, 4, 8] {
                        if let Ok(c) = SystemConfig::new(n_t, n, m, l, j) {
                            if c.p_total() <= max_bits {
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn exhaustive_round_trip_small_configs() {
    let configs = small_configs(12);
    assert!(configs.len() > 20);
    for cfg in configs {
        let p = cfg.p_total();
        for v in 0..(1u128 << p) {
            let bits = u128_to_bits(v, p);
            let msg = assemble_message(&bits, &cfg).unwrap();
            assert_eq!(
                disassemble_message(&msg, &cfg).unwrap(),
                bits,
                "{cfg:?} vector {v}"
            );
        }
    }
}

#[test]
fn wrong_length_is_rejected() {
    let cfg = SystemConfig::p7();
    assert!(assemble_message(&[0; 6], &cfg).is_err());
    assert!(assemble_message(&[0; 8], &cfg).is_err());
}

proptest! {
    #[test]
    fn random_bits_round_trip(seed in any::<u64>(), which in 0usize..4) {
        let cfg = [
            SystemConfig::default_small(),
            SystemConfig::new(6, 3, 6, 16, 8).unwrap(),
            SystemConfig::new(8, 4, 8, 16, 4).unwrap(),
            SystemConfig::new(5, 2, 12, 4, 4).unwrap(),
        ][which].clone();
        let p = cfg.p_total();
        let bits: Vec<u8> = (0..p).map(|i| ((seed.rotate_left(i as u32 * 7) ^ (i as u64 * 0x9E37)) & 1) as u8).collect();
        let msg = assemble_message(&bits, &cfg).unwrap();
        prop_assert_eq!(msg.antenna_set.len(), cfg.n_active);
        prop_assert!(msg.antenna_set.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(msg.offset_set.iter().all(|&m| (1..=cfg.m_offsets).contains(&m)));
        prop_assert!(msg.antenna_set.iter().all(|&a| (1..=cfg.n_t).contains(&a)));
        prop_assert_eq!(disassemble_message(&msg, &cfg).unwrap(), bits);
    }
}
