//! Walsh-Hadamard code pools and despreading.

use num_complex::Complex;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, MulCounter};
use crate::scalar::Real;

/// Sylvester-ordered Hadamard matrix of order `k` (rows are Walsh codes).
pub fn sylvester_hadamard(k: usize) -> Result<Vec<Vec<i8>>> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::Domain {
            func: "sylvester_hadamard",
            detail: format!("order {k} is not a power of two"),
        });
    }
    let mut h = vec![vec![1i8]];
    while h.len() < k {
        let n = h.len();
        let mut next = vec![vec![0i8; 2 * n]; 2 * n];
        for r in 0..n {
            for c in 0..n {
                let v = h[r][c];
                next[r][c] = v;
                next[r][c + n] = v;
                next[r + n][c] = v;
                next[r + n][c + n] = -v;
            }
        }
        h = next;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rail {
    InPhase,
    Quadrature,
}

/// `K x (L*N_T)` matrix of ±1 chips. Antenna `n` (1-based) owns columns
/// `(n-1)L+1 ..= nL`; column `p` (1-based) is Hadamard row `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodePool {
    chips: Vec<i8>,
    k: usize,
    columns: usize,
    l_codes: usize,
    pub rail: Rail,
}

impl CodePool {
    pub fn k_chips(&self) -> usize {
        self.k
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Code energy `E_c = sum_k c_k^2 = K`.
    pub fn e_c(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn chip(&self, k: usize, column: usize) -> i8 {
        self.chips[k * self.columns + column]
    }

    /// 0-based column for antenna `antenna` and code index `code`, both 1-based.
    pub fn column_of(&self, antenna: usize, code: usize) -> usize {
        (antenna - 1) * self.l_codes + (code - 1)
    }

    pub fn code(&self, column: usize) -> Vec<i8> {
        (0..self.k).map(|k| self.chip(k, column)).collect()
    }

    /// Integer inner product of two columns.
    pub fn correlate(&self, a: usize, b: usize) -> i64 {
        (0..self.k)
            .map(|k| i64::from(self.chip(k, a)) * i64::from(self.chip(k, b)))
            .sum()
    }
}

/// Builds the in-phase and quadrature pools. Both rails share one assignment;
/// they are told apart by I/Q rather than by code.
pub fn build_code_pools(config: &SystemConfig) -> Result<(CodePool, CodePool)> {
    let columns = config.code_columns();
    let k = config.k_chips;
    if k < columns {
        return Err(Error::Config(format!(
            "k_chips ({k}) < l_codes * n_t ({columns})"
        )));
    }
    let h = sylvester_hadamard(k)?;
    let chips = (0..k)
        .flat_map(|chip| h[..columns].iter().map(move |row| row[chip]))
        .collect();
    let i = CodePool {
        chips,
        k,
        columns,
        l_codes: config.l_codes,
        rail: Rail::InPhase,
    };
    let q = CodePool {
        rail: Rail::Quadrature,
        ..i.clone()
    };
    Ok((i, q))
}

/// `Y = y * C`: correlates every row of the `N_R x K` branch matrix with
/// every code column.
pub fn despread<T: Real>(branch: &CMatrix<T>, pool: &CodePool) -> Result<CMatrix<T>> {
    despread_counted(branch, pool, &mut MulCounter::default())
}

pub fn despread_counted<T: Real>(
    branch: &CMatrix<T>,
    pool: &CodePool,
    counter: &mut MulCounter,
) -> Result<CMatrix<T>> {
    if branch.cols() != pool.k {
        return Err(Error::Dimension(format!(
            "branch has {} chips, pool has {}",
            branch.cols(),
            pool.k
        )));
    }
    let mut out = CMatrix::zeros(branch.rows(), pool.columns);
    for r in 0..branch.rows() {
        let row = branch.row(r);
        for p in 0..pool.columns {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, z) in row.iter().enumerate() {
                // ±1 chips: a sign flip, but it is still the product the
                // receiver performs.
                if pool.chip(k, p) > 0 {
                    acc = acc + z;
                } else {
                    acc = acc - z;
                }
            }
            out[(r, p)] = acc;
        }
    }
    counter.add(branch.rows() * pool.k * pool.columns);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn base_step() {
        assert_eq!(
            sylvester_hadamard(2).unwrap(),
            vec![vec![1, 1], vec![1, -1]]
        );
        assert!(sylvester_hadamard(6).is_err());
        assert!(sylvester_hadamard(0).is_err());
    }

    #[test]
    fn rows_orthogonal() {
        for k in [1, 2, 4, 8, 16, 32, 64] {
            let h = sylvester_hadamard(k).unwrap();
            for a in 0..k {
                for b in 0..k {
                    let dot: i64 = (0..k)
                        .map(|i| i64::from(h[a][i]) * i64::from(h[b][i]))
                        .sum();
                    assert_eq!(dot, if a == b { k as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn pools_cover_hadamard_rows() {
        let cfg = SystemConfig::new(2, 2, 2, 2, 4).unwrap();
        assert_eq!(cfg.k_chips, 4);
        let (i, q) = build_code_pools(&cfg).unwrap();
        let h = sylvester_hadamard(4).unwrap();
        for (col, row) in h.iter().enumerate() {
            assert_eq!(&i.code(col), row);
        }
        assert_eq!(i.chips, q.chips);
        assert_eq!(i.e_c(), 4);
        assert_eq!(i.column_of(2, 1), 2);
    }

    #[test]
    fn default_pool_shape() {
        let (i, _) = build_code_pools(&SystemConfig::default_small()).unwrap();
        assert_eq!((i.k_chips(), i.columns()), (32, 32));
        for a in 0..32 {
            for b in 0..32 {
                assert_eq!(i.correlate(a, b), if a == b { 32 } else { 0 });
            }
        }
    }

    #[test]
    fn rejects_short_codes() {
        let mut cfg = SystemConfig::default_small();
        cfg.k_chips = 16;
        assert!(build_code_pools(&cfg).is_err());
    }

    #[test]
    fn noise_free_column_isolated() {
        let cfg = SystemConfig::default_small();
        let (pool, _) = build_code_pools(&cfg).unwrap();
        let h = [Complex::new(0.3, -1.1), Complex::new(-0.7, 0.2)];
        let amp = 0.5f64.sqrt() * 0.75;
        let col = pool.column_of(2, 3);
        let y = CMatrix::from_fn(2, 32, |r, k| h[r] * amp * f64::from(pool.chip(k, col)));
        let z = despread(&y, &pool).unwrap();
        for p in 0..32 {
            for r in 0..2 {
                let expect = if p == col {
                    h[r] * amp * 32.0
                } else {
                    Complex::new(0.0, 0.0)
                };
                assert!((z[(r, p)] - expect).norm() < 1e-12);
            }
        }
        assert_eq!(
            despread(&CMatrix::<f64>::zeros(2, 32), &pool).unwrap(),
            CMatrix::zeros(2, 32)
        );
    }

    #[test]
    fn matches_naive_product_and_is_linear() {
        let cfg = SystemConfig::default_small();
        let (pool, _) = build_code_pools(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rand_mat = || {
            CMatrix::from_fn(2, 32, |_, _| {
                Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
        };
        let x = rand_mat();
        let y = rand_mat();
        let zx = despread(&x, &pool).unwrap();
        // Triple-loop oracle.
        for r in 0..2 {
            for p in 0..32 {
                let mut acc = Complex::new(0.0, 0.0);
                for k in 0..32 {
                    acc += x[(r, k)] * f64::from(pool.code(p)[k]);
                }
                assert!((zx[(r, p)] - acc).norm() < 1e-12);
            }
        }
        let (a, b) = (Complex::new(0.3, 1.2), Complex::new(-2.0, 0.5));
        let combo = CMatrix::from_fn(2, 32, |r, k| a * x[(r, k)] + b * y[(r, k)]);
        let zy = despread(&y, &pool).unwrap();
        let zc = despread(&combo, &pool).unwrap();
        for r in 0..2 {
            for p in 0..32 {
                assert!((zc[(r, p)] - (a * zx[(r, p)] + b * zy[(r, p)])).norm() < 1e-10);
            }
        }
        assert!(despread(&CMatrix::<f64>::zeros(2, 16), &pool).is_err());
    }
}
