//! Exact rational re-implementation of the loss-rate floor sum, used as an
//! independent oracle for the floating-point implementation.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use ira_core::floor::UcpDescriptor;

fn int(n: u64) -> BigInt {
    BigInt::from(n)
}

fn ratio(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * int(n - i) / int(i + 1))
}

fn falling(m: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * int(m - i))
}

fn factorial(n: u64) -> BigInt {
    falling(n, n)
}

/// `p` as an exact decimal fraction, e.g. `0.51` -> `51/100`.
pub fn decimal(p: f64) -> BigRational {
    let scaled = (p * 1e6).round() as i64;
    BigRational::new(BigInt::from(scaled), int(1_000_000))
}

/// `Pr(u ∈ S | m)` in exact arithmetic, clamped to 1.
pub fn pr_exact(
    m: u64,
    ucp: &UcpDescriptor,
    n_v: u64,
    dist: &[(usize, BigRational)],
) -> BigRational {
    let nu = ucp.nu() as u64;
    if m < nu || ucp.mu as u64 > n_v || ucp.max_degree() as u64 > n_v {
        return BigRational::zero();
    }
    let mut a = ratio(falling(m, nu));
    let mut d = BigRational::new(BigInt::one(), int(n_v));
    for (degree, count) in ucp.degrees() {
        let p = dist
            .iter()
            .find(|(l, _)| *l == degree)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero);
        a = a * num_traits::pow(p, count as usize) / ratio(factorial(count as u64));
        let edges = int(n_v) * binomial(n_v - 1, degree as u64 - 1);
        d *= ratio(num_traits::pow(edges, count as usize));
    }
    let b = ratio(binomial(n_v - 1, ucp.mu as u64 - 1));
    let c = ratio(int(ucp.iso_count));
    let pr = a * b * c / d * BigRational::new(int(nu), int(m));
    if pr > BigRational::one() {
        BigRational::one()
    } else {
        pr
    }
}

/// `Σ_{m=2}^{m_max} Σ_S Pr(u ∈ S | m) λ^m / m!` exactly; the caller applies `e^{-λ}`.
pub fn floor_sum_without_exp(
    catalog: &[UcpDescriptor],
    dist: &[(usize, BigRational)],
    n_v: u64,
    lambda: &BigRational,
    m_max: u64,
) -> BigRational {
    let mut total = BigRational::zero();
    let mut weight = lambda.clone();
    for m in 2..=m_max {
        weight = weight * lambda / ratio(int(m));
        let conditional = catalog.iter().fold(BigRational::zero(), |acc, s| {
            acc + pr_exact(m, s, n_v, dist)
        });
        total += conditional * &weight;
    }
    total
}

/// Loss-rate floor from the exact sum, with `e^{-λ}` applied in double precision.
pub fn floor_oracle(
    catalog: &[UcpDescriptor],
    dist: &[(usize, f64)],
    n_v: u64,
    lambda: f64,
    m_max: u64,
) -> f64 {
    let dist: Vec<(usize, BigRational)> = dist.iter().map(|&(d, p)| (d, decimal(p))).collect();
    let lam = decimal(lambda);
    floor_sum_without_exp(catalog, &dist, n_v, &lam, m_max)
        .to_f64()
        .expect("finite")
        * (-lambda).exp()
}

/// True when `a` and `b` agree to `digits` significant digits.
pub fn agree_to_digits(a: f64, b: f64, digits: i32) -> bool {
    (a - b).abs() <= 5.0 * 10f64.powi(-digits) * b.abs()
}
