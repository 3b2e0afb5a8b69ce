//! Analytical approximation of the packet loss rate in the error-floor region.
//!
//! The loss rate of a tagged user is approximated by a truncated union bound
//! over dominant unresolvable collision patterns (UCPs), conditioned on the
//! number `m` of users active in a virtual-frame span, which is
//! Poisson(`n_p G`):
//!
//! ```text
//! p ≈ Σ_{m≥2} Σ_S a(m,ν,Λ) b(n_v,μ) c(S) / d(n_v,ν) · ν/m · e^{-n_p G} (n_p G)^m / m!
//! ```
//!
//! The asynchronous frame is mapped onto `n_v = ⌊T_f / T_v⌋` disjoint
//! vulnerable periods of length `T_v = 2 φ T_p`, where `φ` is the fraction of a
//! packet that must be interference-free for a single collision to be
//! survivable.

pub mod catalog;
pub mod oracle;

use thiserror::Error;

use crate::channel::symbol_mutual_information;
use crate::model::{DegreeDistribution, SystemConfig, PACKET_DURATION};

pub use catalog::{builtin_catalog, parse_catalog, UcpDescriptor};
pub use oracle::count_configurations;

/// Poisson tail mass below which the `m`-sum may stop.
pub const TAIL_TOLERANCE: f64 = 1e-15;
/// Relative contribution of the last `m` term below which the sum may stop.
pub const TERM_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloorError {
    #[error("rate {rate} exceeds the interference-free capacity {clean_capacity}; vulnerable fraction is {phi}")]
    RateAboveCleanCapacity {
        rate: f64,
        clean_capacity: f64,
        phi: f64,
    },
    #[error("vulnerable fraction is zero: a single interferer is never fatal")]
    DegenerateVulnerablePeriod,
    #[error("pattern needs {mu} collision sets but only {n_v} vulnerable periods exist")]
    InfeasiblePattern { mu: u32, n_v: u64 },
    #[error("m-sum did not converge before m = {m}")]
    NonconvergentTruncation { m: u64 },
    #[error("enumeration over {n_periods} periods too large ({leaves} leaves)")]
    EnumerationTooLarge { n_periods: usize, leaves: f64 },
    #[error("invalid UCP catalog: {0}")]
    InvalidCatalog(String),
    #[error("empty UCP catalog")]
    EmptyCatalog,
    #[error("load must be non-negative and finite, got {0}")]
    InvalidLoad(f64),
}

/// How a single interferer affects a packet at the given rate and SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `R ≤ I₁`: even a fully overlapping interferer is survivable (`φ = 0`).
    InterferenceTolerant,
    /// `I₁ < R < I₀`.
    Partial,
    /// `R = I₀`: only collision-free packets decode (`φ = 1`).
    CollisionChannel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VulnerableFraction {
    pub phi: f64,
    pub regime: Regime,
}

/// Solves `φ I₀ + (1 - φ) I₁ = R` for the vulnerable fraction, clamped at 0,
/// with `I₀ = log2(1 + ρ)` and `I₁ = log2(1 + ρ / (1 + ρ))`.
pub fn vulnerable_fraction(snr_linear: f64, rate: f64) -> Result<VulnerableFraction, FloorError> {
    let clean = symbol_mutual_information(snr_linear, 0);
    let hit = symbol_mutual_information(snr_linear, 1);
    if rate > clean {
        return Err(FloorError::RateAboveCleanCapacity {
            rate,
            clean_capacity: clean,
            phi: 1.0,
        });
    }
    let phi = ((rate - hit) / (clean - hit)).clamp(0.0, 1.0);
    let regime = if rate <= hit {
        Regime::InterferenceTolerant
    } else if rate >= clean {
        Regime::CollisionChannel
    } else {
        Regime::Partial
    };
    Ok(VulnerableFraction { phi, regime })
}

/// Number of disjoint vulnerable periods `⌊T_f / (2 φ T_p)⌋` in a virtual frame.
pub fn vp_count(vf_span: f64, phi: f64) -> Result<u64, FloorError> {
    if phi <= 0.0 {
        return Err(FloorError::DegenerateVulnerablePeriod);
    }
    Ok((vf_span / (2.0 * phi * PACKET_DURATION)).floor() as u64)
}

/// Vulnerable-period quantities derived from a system configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorParams {
    pub phi: f64,
    pub regime: Regime,
    /// Vulnerable period `2 φ T_p`.
    pub t_v: f64,
    /// Disjoint vulnerable periods per virtual frame; `None` when `φ = 0`.
    pub n_v: Option<u64>,
    /// Virtual frame span in packet durations.
    pub n_p: f64,
}

impl FloorParams {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self, FloorError> {
        let VulnerableFraction { phi, regime } = vulnerable_fraction(cfg.snr_linear, cfg.rate)?;
        let n_v = match vp_count(cfg.vf_span, phi) {
            Ok(n) => Some(n),
            Err(FloorError::DegenerateVulnerablePeriod) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            phi,
            regime,
            t_v: 2.0 * phi * PACKET_DURATION,
            n_v,
            n_p: cfg.vf_span,
        })
    }
}

/// `ln C(n, k)` as a sum of logarithms; `-inf` when `k > n`.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn ln_term_a(m: u64, ucp: &UcpDescriptor, dist: &DegreeDistribution) -> f64 {
    let nu = ucp.nu() as u64;
    if m < nu {
        return f64::NEG_INFINITY;
    }
    let mut acc = ln_binomial(m, nu) + ln_factorial(nu);
    for (d, count) in ucp.degrees() {
        let p = dist.probability(d);
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += count as f64 * p.ln() - ln_factorial(count as u64);
    }
    acc
}

fn ln_term_d(n_v: u64, ucp: &UcpDescriptor) -> f64 {
    let ln_nv = (n_v as f64).ln();
    let mut acc = -ln_nv;
    for (d, count) in ucp.degrees() {
        acc += count as f64 * (ln_nv + ln_binomial(n_v - 1, d as u64 - 1));
    }
    acc
}

/// Ways of picking the users of `ucp` among `m` users drawn from `dist`:
/// `C(m, ν) ν! Π_l Λ_l^{ν_l} / ν_l!`. Zero when `m < ν` or a needed degree
/// has no mass.
pub fn term_a(m: u64, ucp: &UcpDescriptor, dist: &DegreeDistribution) -> f64 {
    ln_term_a(m, ucp, dist).exp()
}

/// Ways of choosing the `μ - 1` other vulnerable periods of a pattern
/// containing the tagged user: `C(n_v - 1, μ - 1)`.
pub fn term_b(n_v: u64, mu: u32) -> Result<f64, FloorError> {
    if mu == 0 || mu as u64 > n_v {
        return Err(FloorError::InfeasiblePattern { mu, n_v });
    }
    Ok(ln_binomial(n_v - 1, mu as u64 - 1).exp())
}

/// Total ways the users of `ucp` can place their replicas on `n_v`
/// vulnerable periods: `(1/n_v) Π_l (n_v C(n_v - 1, l - 1))^{ν_l}`.
pub fn term_d(n_v: u64, ucp: &UcpDescriptor) -> f64 {
    ln_term_d(n_v, ucp).exp()
}

/// Probability that the tagged user belongs to an instance of `ucp` given `m`
/// users in the virtual-frame span, and whether it had to be clamped to 1.
fn pr_user_in_ucp_checked(
    m: u64,
    ucp: &UcpDescriptor,
    n_v: u64,
    dist: &DegreeDistribution,
) -> Result<(f64, bool), FloorError> {
    let nu = ucp.nu() as u64;
    if ucp.mu == 0 || ucp.mu as u64 > n_v {
        return Err(FloorError::InfeasiblePattern { mu: ucp.mu, n_v });
    }
    if m < nu || m == 0 || ucp.max_degree() as u64 > n_v {
        return Ok((0.0, false));
    }
    let ln_b = ln_binomial(n_v - 1, ucp.mu as u64 - 1);
    let ln_pr = ln_term_a(m, ucp, dist) + ln_b + (ucp.iso_count as f64).ln() - ln_term_d(n_v, ucp)
        + (nu as f64).ln()
        - (m as f64).ln();
    let pr = ln_pr.exp();
    if pr.is_nan() {
        return Ok((0.0, false));
    }
    Ok((pr.min(1.0), pr > 1.0))
}

/// `Pr(u ∈ S | m) = a b c / d · ν / m`, clamped to `[0, 1]`.
pub fn pr_user_in_ucp(
    m: u64,
    ucp: &UcpDescriptor,
    n_v: u64,
    dist: &DegreeDistribution,
) -> Result<f64, FloorError> {
    pr_user_in_ucp_checked(m, ucp, n_v, dist).map(|(p, _)| p)
}

/// Poisson(`lambda`) probabilities for `m = 0, 1, 2, ...`.
struct PoissonPmf {
    lambda: f64,
    ln_lambda: f64,
    m: u64,
    ln_pmf: f64,
}

impl PoissonPmf {
    fn new(lambda: f64) -> Self {
        Self {
            lambda,
            ln_lambda: lambda.ln(),
            m: 0,
            ln_pmf: -lambda,
        }
    }
}

impl Iterator for PoissonPmf {
    type Item = (u64, f64);

    fn next(&mut self) -> Option<(u64, f64)> {
        let m = self.m;
        if m > 0 {
            self.ln_pmf += self.ln_lambda - (m as f64).ln();
        }
        self.m += 1;
        let pmf = if self.lambda == 0.0 {
            if m == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.ln_pmf.exp()
        };
        Some((m, pmf))
    }
}

/// Result of a truncated `m`-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorEstimate {
    pub plr: f64,
    /// Last `m` included in the sum.
    pub last_m: u64,
    /// Number of `Pr(u ∈ S | m)` evaluations clamped to 1.
    pub clamped: u64,
}

/// Sums `Σ_{m≥2} f(m) Poisson(m; λ)` with the adaptive truncation rule, then
/// adds `extra_terms` more terms.
fn poisson_mixture(
    lambda: f64,
    extra_terms: u64,
    mut conditional: impl FnMut(u64) -> Result<(f64, u64), FloorError>,
) -> Result<FloorEstimate, FloorError> {
    let cap = (lambda + 12.0 * lambda.sqrt() + 50.0).ceil() as u64;
    let mut plr = 0.0;
    let mut clamped = 0;
    let mut stop_at: Option<u64> = None;
    for (m, pmf) in PoissonPmf::new(lambda).skip(2) {
        let (f, c) = conditional(m)?;
        clamped += c;
        let term = f * pmf;
        plr += term;
        if let Some(stop) = stop_at {
            if m >= stop {
                return Ok(FloorEstimate {
                    plr,
                    last_m: m,
                    clamped,
                });
            }
            continue;
        }
        // Poisson tail beyond m, bounded by a geometric series once m > λ.
        let next = pmf * lambda / (m + 1) as f64;
        let tail = if (m as f64) > lambda {
            next / (1.0 - lambda / (m + 2) as f64)
        } else {
            f64::INFINITY
        };
        if tail < TAIL_TOLERANCE && term <= TERM_TOLERANCE * plr {
            if extra_terms == 0 {
                return Ok(FloorEstimate {
                    plr,
                    last_m: m,
                    clamped,
                });
            }
            stop_at = Some(m + extra_terms);
        } else if m >= cap {
            return Err(FloorError::NonconvergentTruncation { m });
        }
    }
    unreachable!("Poisson iterator is infinite")
}

/// Patterns of `catalog` that can occur under `dist` with `n_v` periods.
fn feasible<'a>(
    catalog: &'a [UcpDescriptor],
    dist: &DegreeDistribution,
    n_v: u64,
) -> Vec<&'a UcpDescriptor> {
    catalog
        .iter()
        .filter(|s| {
            s.degrees()
                .all(|(d, _)| dist.probability(d) > 0.0 && d as u64 <= n_v)
                && s.mu as u64 <= n_v
        })
        .collect()
}

fn check_load(load: f64) -> Result<(), FloorError> {
    if load.is_finite() && load >= 0.0 {
        Ok(())
    } else {
        Err(FloorError::InvalidLoad(load))
    }
}

/// Error-floor approximation for a configuration, distribution and catalog.
#[derive(Debug, Clone)]
pub struct FloorModel {
    pub params: FloorParams,
    dist: DegreeDistribution,
    catalog: Vec<UcpDescriptor>,
}

impl FloorModel {
    /// Keeps only the catalog rows feasible under `dist`.
    pub fn new(
        cfg: &SystemConfig,
        dist: &DegreeDistribution,
        catalog: &[UcpDescriptor],
    ) -> Result<Self, FloorError> {
        if catalog.is_empty() {
            return Err(FloorError::EmptyCatalog);
        }
        let params = FloorParams::from_config(cfg)?;
        let catalog = match params.n_v {
            Some(n_v) => feasible(catalog, dist, n_v).into_iter().cloned().collect(),
            None => Vec::new(),
        };
        Ok(Self {
            params,
            dist: dist.clone(),
            catalog,
        })
    }

    /// Catalog rows that contribute under this distribution.
    pub fn active_catalog(&self) -> &[UcpDescriptor] {
        &self.catalog
    }

    /// `Σ_S Pr(u ∈ S | m)` and the number of clamped terms.
    pub fn conditional(&self, m: u64) -> Result<(f64, u64), FloorError> {
        let Some(n_v) = self.params.n_v else {
            return Ok((0.0, 0));
        };
        let mut sum = 0.0;
        let mut clamped = 0;
        for s in &self.catalog {
            let (p, c) = pr_user_in_ucp_checked(m, s, n_v, &self.dist)?;
            sum += p;
            clamped += c as u64;
        }
        Ok((sum, clamped))
    }

    pub fn estimate(&self, load: f64) -> Result<FloorEstimate, FloorError> {
        self.estimate_with_extra_terms(load, 0)
    }

    /// Like [`estimate`](Self::estimate) but keeps `extra_terms` more terms
    /// of the `m`-sum after the truncation rule fires.
    pub fn estimate_with_extra_terms(
        &self,
        load: f64,
        extra_terms: u64,
    ) -> Result<FloorEstimate, FloorError> {
        check_load(load)?;
        if self.params.n_v.is_none() || self.catalog.is_empty() || load == 0.0 {
            return Ok(FloorEstimate {
                plr: 0.0,
                last_m: 1,
                clamped: 0,
            });
        }
        poisson_mixture(self.params.n_p * load, extra_terms, |m| self.conditional(m))
    }
}

/// Packet loss rate approximation at load `load` for any degree distribution.
pub fn plr_floor(
    load: f64,
    cfg: &SystemConfig,
    dist: &DegreeDistribution,
    catalog: &[UcpDescriptor],
) -> Result<f64, FloorError> {
    Ok(FloorModel::new(cfg, dist, catalog)?.estimate(load)?.plr)
}

/// Packet loss rate approximation for the regular distribution `x^degree`,
/// using the closed-form `a = C(m, ν)` and `d = (n_v C(n_v-1, d-1))^ν / n_v`.
/// Catalog rows with users of another degree are ignored.
pub fn plr_regular(
    load: f64,
    cfg: &SystemConfig,
    degree: usize,
    catalog: &[UcpDescriptor],
) -> Result<f64, FloorError> {
    check_load(load)?;
    if catalog.is_empty() {
        return Err(FloorError::EmptyCatalog);
    }
    let params = FloorParams::from_config(cfg)?;
    let Some(n_v) = params.n_v else {
        return Ok(0.0);
    };
    let rows: Vec<&UcpDescriptor> = catalog
        .iter()
        .filter(|s| {
            s.regular_degree() == Some(degree) && s.mu as u64 <= n_v && degree as u64 <= n_v
        })
        .collect();
    if rows.is_empty() || load == 0.0 {
        return Ok(0.0);
    }
    let ln_nv = (n_v as f64).ln();
    let ln_edges = ln_nv + ln_binomial(n_v - 1, degree as u64 - 1);
    let estimate = poisson_mixture(params.n_p * load, 0, |m| {
        let mut sum = 0.0;
        let mut clamped = 0;
        for s in &rows {
            let nu = s.nu() as f64;
            let numerator = nu.ln()
                + ln_binomial(m, s.nu() as u64)
                + ln_binomial(n_v - 1, s.mu as u64 - 1)
                + (s.iso_count as f64).ln();
            let denominator = (m as f64).ln() - ln_nv + nu * ln_edges;
            let pr = (numerator - denominator).exp();
            clamped += (pr > 1.0) as u64;
            sum += pr.min(1.0);
        }
        Ok((sum, clamped))
    })?;
    Ok(estimate.plr)
}

/// Packet loss rate approximation keeping only the pattern of two degree-`d`
/// users colliding on all their replicas.
pub fn plr_two_user(load: f64, cfg: &SystemConfig, degree: usize) -> Result<f64, FloorError> {
    check_load(load)?;
    let params = FloorParams::from_config(cfg)?;
    let Some(n_v) = params.n_v else {
        return Ok(0.0);
    };
    if degree as u64 > n_v || load == 0.0 {
        return Ok(0.0);
    }
    let edges = n_v as f64 * ln_binomial(n_v - 1, degree as u64 - 1).exp();
    let estimate = poisson_mixture(params.n_p * load, 0, |m| {
        let m = m as f64;
        let pairs = m * (m - 1.0) / 2.0;
        let pr = pairs / edges * (2.0 / m);
        Ok((pr.min(1.0), (pr > 1.0) as u64))
    })?;
    Ok(estimate.plr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::distributions::*;
    use proptest::prelude::*;

    fn cfg(rate: f64, vf_span: f64) -> SystemConfig {
        SystemConfig::from_db(6.0, rate, vf_span)
    }

    fn ucp(name: &str) -> UcpDescriptor {
        builtin_catalog()
            .into_iter()
            .find(|s| s.name == name)
            .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn vulnerable_fraction_reference_scenarios() {
        let snr = cfg(1.5, 200.0).snr_linear;
        let f = vulnerable_fraction(snr, 1.5).unwrap();
        assert!((f.phi - 0.44).abs() < 0.005);
        assert_eq!(f.regime, Regime::Partial);
        assert!((vulnerable_fraction(snr, 2.0).unwrap().phi - 0.78).abs() < 0.006);
    }

    #[test]
    fn vulnerable_fraction_regimes() {
        let snr = 10f64.powf(0.6);
        let hit = symbol_mutual_information(snr, 1);
        let clean = symbol_mutual_information(snr, 0);
        let f = vulnerable_fraction(snr, hit * 0.9).unwrap();
        assert_eq!((f.phi, f.regime), (0.0, Regime::InterferenceTolerant));
        let f = vulnerable_fraction(snr, clean).unwrap();
        assert_eq!((f.phi, f.regime), (1.0, Regime::CollisionChannel));
        assert!(matches!(
            vulnerable_fraction(snr, clean + 0.1),
            Err(FloorError::RateAboveCleanCapacity { phi, .. }) if phi == 1.0
        ));
    }

    #[test]
    fn vulnerable_period_counts() {
        let snr = 10f64.powf(0.6);
        let phi15 = vulnerable_fraction(snr, 1.5).unwrap().phi;
        let phi20 = vulnerable_fraction(snr, 2.0).unwrap().phi;
        assert_eq!(vp_count(200.0, phi15), Ok(225));
        assert_eq!(vp_count(200.0, phi20), Ok(127));
        assert_eq!(vp_count(100.0, phi15), Ok(112));
        assert_eq!(
            vp_count(200.0, 0.0),
            Err(FloorError::DegenerateVulnerablePeriod)
        );
    }

    #[test]
    fn floor_params_for_interference_tolerant_rate() {
        let p = FloorParams::from_config(&cfg(0.5, 200.0)).unwrap();
        assert_eq!(p.n_v, None);
        assert_eq!(p.t_v, 0.0);
        assert_eq!(
            plr_floor(0.1, &cfg(0.5, 200.0), &ira2(), &builtin_catalog()),
            Ok(0.0)
        );
    }

    #[test]
    fn term_a_values() {
        assert!(rel(term_a(2, &ucp("S1"), &ira2()), 1.0) < 1e-14);
        assert!(rel(term_a(5, &ucp("S1"), &ira2()), 10.0) < 1e-14);
        // C(4,3) 3! (0.263^2 / 2!) (0.344 / 1!)
        let expected = 4.0 * 6.0 * (0.263f64.powi(2) / 2.0) * 0.344;
        assert!(rel(term_a(4, &ucp("S4"), &lambda1()), expected) < 1e-13);
        assert!((term_a(4, &ucp("S4"), &lambda1()) - 0.2856).abs() < 1e-4);
        assert_eq!(term_a(1, &ucp("S1"), &ira2()), 0.0);
        assert_eq!(term_a(4, &ucp("S2"), &ira2()), 0.0);
    }

    #[test]
    fn term_b_values() {
        assert!(rel(term_b(225, 2).unwrap(), 224.0) < 1e-14);
        assert_eq!(term_b(225, 1).unwrap(), 1.0);
        assert!(rel(term_b(4, 4).unwrap(), 1.0) < 1e-14);
        assert_eq!(
            term_b(3, 4),
            Err(FloorError::InfeasiblePattern { mu: 4, n_v: 3 })
        );
    }

    #[test]
    fn term_d_values() {
        assert!(rel(term_d(225, &ucp("S1")), 225.0 * 224.0 * 224.0) < 1e-13);
        let c = 224.0 * 223.0 / 2.0;
        assert!(rel(term_d(225, &ucp("S2")), (225.0f64 * c).powi(2) / 225.0) < 1e-13);
        let empty = UcpDescriptor::two_user(2);
        assert!(rel(term_d(10, &empty), 10.0 * 9.0 * 9.0) < 1e-13);
    }

    #[test]
    fn pr_user_in_two_user_pattern() {
        let p = pr_user_in_ucp(2, &ucp("S1"), 225, &ira2()).unwrap();
        assert!(rel(p, 1.0 / (225.0 * 224.0)) < 1e-13);
        assert!((p - 1.984e-5).abs() < 1e-8);
        assert_eq!(pr_user_in_ucp(2, &ucp("S3"), 225, &ira2()), Ok(0.0));
        assert_eq!(pr_user_in_ucp(10, &ucp("S2"), 225, &ira2()), Ok(0.0));
    }

    #[test]
    fn pr_is_clamped_for_tiny_frames() {
        // With 2 vulnerable periods and many users the approximation exceeds 1.
        let p = pr_user_in_ucp(60, &ucp("S1"), 2, &ira2()).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn two_user_closed_form() {
        let c = cfg(1.5, 200.0);
        let p = plr_two_user(0.1, &c, 2).unwrap();
        let expected = (20.0 - 1.0 + (-20f64).exp()) / (225.0 * 224.0);
        assert!(rel(p, expected) < 1e-12);
        assert!((p - 3.77e-4).abs() < 1e-6);
    }

    #[test]
    fn singleton_catalog_matches_two_user() {
        let c = cfg(1.5, 200.0);
        for g in [0.01, 0.1, 0.5, 1.0] {
            let a = plr_floor(g, &c, &ira2(), &[ucp("S1")]).unwrap();
            let b = plr_two_user(g, &c, 2).unwrap();
            assert!(rel(a, b) < 1e-12, "G = {g}: {a} vs {b}");
        }
    }

    #[test]
    fn ira2_uses_only_its_patterns() {
        let c = cfg(1.5, 200.0);
        let model = FloorModel::new(&c, &ira2(), &builtin_catalog()).unwrap();
        let names: Vec<_> = model
            .active_catalog()
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        assert_eq!(names, ["S1", "S3", "S12"]);
        let lambda2_names: Vec<_> = FloorModel::new(&c, &lambda2(), &builtin_catalog())
            .unwrap()
            .active_catalog()
            .iter()
            .map(|s| s.name.clone())
            .collect();
        assert_eq!(lambda2_names, ["S1", "S3", "S5", "S6", "S11", "S12"]);
    }

    #[test]
    fn vanishing_load() {
        let c = cfg(1.5, 200.0);
        let mut prev = f64::INFINITY;
        for g in [1e-2, 1e-3, 1e-4, 1e-5] {
            let p = plr_floor(g, &c, &ira2(), &builtin_catalog()).unwrap();
            assert!(p < prev && p > 0.0);
            prev = p;
        }
        assert_eq!(plr_floor(0.0, &c, &ira2(), &builtin_catalog()), Ok(0.0));
        // Leading behaviour: (n_p G)^2 e^{-n_p G} / (2 n_v (n_v - 1)).
        let lam: f64 = 200.0 * 1e-5;
        let lead = lam * lam * (-lam).exp() / (2.0 * 225.0 * 224.0);
        let p = plr_two_user(1e-5, &c, 2).unwrap();
        assert!(rel(p, lead) < 0.01);
    }

    #[test]
    fn extending_the_sum_changes_nothing() {
        let c = cfg(1.5, 200.0);
        let model = FloorModel::new(&c, &lambda1(), &builtin_catalog()).unwrap();
        for g in [0.05, 0.3, 1.0] {
            let base = model.estimate(g).unwrap();
            let longer = model.estimate_with_extra_terms(g, 10).unwrap();
            assert_eq!(longer.last_m, base.last_m + 10);
            assert!(rel(longer.plr, base.plr) < 1e-12);
        }
    }

    #[test]
    fn input_validation() {
        let c = cfg(1.5, 200.0);
        assert_eq!(
            plr_floor(0.1, &c, &ira2(), &[]),
            Err(FloorError::EmptyCatalog)
        );
        assert!(matches!(
            plr_floor(-1.0, &c, &ira2(), &builtin_catalog()),
            Err(FloorError::InvalidLoad(_))
        ));
        assert!(matches!(
            plr_floor(0.1, &cfg(3.0, 200.0), &ira2(), &builtin_catalog()),
            Err(FloorError::RateAboveCleanCapacity { .. })
        ));
    }

    proptest! {
        #[test]
        fn phi_is_monotone(snr_db in -5.0f64..20.0, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let snr = 10f64.powf(snr_db / 10.0);
            let clean = symbol_mutual_information(snr, 0);
            let hit = symbol_mutual_information(snr, 1);
            let (lo, hi) = (r1.min(r2), r1.max(r2));
            prop_assume!(hi - lo > 1e-9);
            let rate = |x: f64| hit + x * (clean - hit);
            let a = vulnerable_fraction(snr, rate(lo)).unwrap().phi;
            let b = vulnerable_fraction(snr, rate(hi)).unwrap().phi;
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            prop_assert!(a < b);
        }

        #[test]
        fn phi_decreases_with_snr(snr_db in 0.0f64..20.0, step in 0.1f64..5.0, frac in 0.05f64..0.95) {
            let snr = 10f64.powf(snr_db / 10.0);
            let better = 10f64.powf((snr_db + step) / 10.0);
            let hit = symbol_mutual_information(better, 1).max(symbol_mutual_information(snr, 1));
            let clean = symbol_mutual_information(snr, 0);
            prop_assume!(clean > hit);
            let rate = hit + frac * (clean - hit);
            let a = vulnerable_fraction(snr, rate).unwrap().phi;
            let b = vulnerable_fraction(better, rate).unwrap().phi;
            prop_assert!(b < a);
        }

        #[test]
        fn pr_is_a_probability(m in 0u64..=50, idx in 0usize..12, n_v in prop::sample::select(vec![112u64, 127, 225])) {
            let s = &builtin_catalog()[idx];
            for dist in [ira2(), ira3(), lambda1(), lambda2()] {
                let p = pr_user_in_ucp(m, s, n_v, &dist).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn growing_the_catalog_never_lowers_the_floor(g in 0.01f64..1.0, k in 1usize..12) {
            let c = cfg(1.5, 200.0);
            let cat = builtin_catalog();
            let small = plr_floor(g, &c, &lambda1(), &cat[..k]).unwrap();
            let big = plr_floor(g, &c, &lambda1(), &cat[..k + 1]).unwrap();
            prop_assert!(big >= small * (1.0 - 1e-13));
        }
    }
}
