//! Brute-force count of the labeled configurations realizing a UCP.
//!
//! Every user of the pattern picks a set of `degree` distinct vulnerable
//! periods out of `n`. A configuration realizes the pattern when exactly
//! `mu` periods are used, no used period holds a single replica, the users
//! form one connected cluster, and no proper subset of users is stuck on
//! its own (the pattern is dominant). Summed over all choices of the `mu`
//! periods, the count is `C(n, mu) * c(S)`.

use super::catalog::UcpDescriptor;
use super::FloorError;

/// Largest number of vulnerable periods the enumeration accepts.
pub const MAX_ENUMERATION_PERIODS: usize = 10;

/// Upper bound on enumerated leaves before giving up.
const MAX_LEAVES: f64 = 1e10;

/// Exhaustively counts configurations of `ucp` over `n_periods` labeled
/// vulnerable periods.
pub fn count_configurations(ucp: &UcpDescriptor, n_periods: usize) -> Result<u64, FloorError> {
    if n_periods > MAX_ENUMERATION_PERIODS {
        return Err(FloorError::EnumerationTooLarge {
            n_periods,
            leaves: f64::INFINITY,
        });
    }
    let degrees: Vec<usize> = ucp
        .degrees()
        .flat_map(|(d, n)| std::iter::repeat_n(d, n as usize))
        .collect();
    if degrees.len() > 16 {
        return Err(FloorError::EnumerationTooLarge {
            n_periods,
            leaves: f64::INFINITY,
        });
    }
    if degrees.iter().any(|&d| d > n_periods) {
        return Ok(0);
    }

    let leaves: f64 = degrees
        .iter()
        .map(|&d| exact_binomial(n_periods as u64, d as u64) as f64)
        .product();
    if leaves > MAX_LEAVES {
        return Err(FloorError::EnumerationTooLarge { n_periods, leaves });
    }

    let subsets: Vec<Vec<u16>> = (0..=n_periods)
        .map(|k| {
            (0u16..1 << n_periods)
                .filter(|m| m.count_ones() as usize == k)
                .collect()
        })
        .collect();

    let mut search = Search {
        degrees: &degrees,
        subsets: &subsets,
        n_periods,
        mu: ucp.mu,
        masks: vec![0; degrees.len()],
        count: 0,
    };
    search.descend(0, 0);
    Ok(search.count)
}

struct Search<'a> {
    degrees: &'a [usize],
    subsets: &'a [Vec<u16>],
    n_periods: usize,
    mu: u32,
    masks: Vec<u16>,
    count: u64,
}

impl Search<'_> {
    fn descend(&mut self, user: usize, union: u16) {
        if union.count_ones() > self.mu {
            return;
        }
        if user == self.degrees.len() {
            if union.count_ones() == self.mu && self.realizes_pattern() {
                self.count += 1;
            }
            return;
        }
        for &m in &self.subsets[self.degrees[user]] {
            self.masks[user] = m;
            self.descend(user + 1, union | m);
        }
    }

    fn realizes_pattern(&self) -> bool {
        let all = (1u32 << self.masks.len()) - 1;
        stuck(&self.masks, all, self.n_periods)
            && connected(&self.masks)
            && (1..all).all(|subset| !stuck(&self.masks, subset, self.n_periods))
    }
}

/// True when, looking only at the users in `subset`, every replica shares its
/// period with another replica of the subset.
fn stuck(masks: &[u16], subset: u32, n_periods: usize) -> bool {
    (0..n_periods).all(|p| {
        let occupancy = masks
            .iter()
            .enumerate()
            .filter(|&(u, m)| subset & (1 << u) != 0 && m & (1 << p) != 0)
            .count();
        occupancy != 1
    })
}

fn connected(masks: &[u16]) -> bool {
    let mut reached = 1u32;
    let mut frontier = vec![0usize];
    while let Some(u) = frontier.pop() {
        for (v, &m) in masks.iter().enumerate() {
            if reached & (1 << v) == 0 && masks[u] & m != 0 {
                reached |= 1 << v;
                frontier.push(v);
            }
        }
    }
    reached.count_ones() as usize == masks.len()
}

/// `C(n, k)` in exact integer arithmetic.
pub fn exact_binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floor::catalog::builtin_catalog;

    fn row(name: &str) -> UcpDescriptor {
        builtin_catalog()
            .into_iter()
            .find(|s| s.name == name)
            .unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(exact_binomial(6, 2), 15);
        assert_eq!(exact_binomial(224, 2), 24_976);
        assert_eq!(exact_binomial(3, 5), 0);
        assert_eq!(exact_binomial(10, 0), 1);
    }

    #[test]
    fn two_user_pattern_on_six_periods() {
        assert_eq!(count_configurations(&row("S1"), 6).unwrap(), 15);
    }

    #[test]
    fn three_user_cycle_on_six_periods() {
        assert_eq!(count_configurations(&row("S3"), 6).unwrap(), 120);
    }

    #[test]
    fn four_cycle_on_six_periods() {
        // Three labeled 4-cycles times 4! user labelings per choice of periods.
        assert_eq!(count_configurations(&row("S12"), 6).unwrap(), 1080);
    }

    #[test]
    fn non_dominant_patterns_are_not_counted() {
        // Two degree-2 users on three periods cannot be stuck; two pairs of
        // identical users form two S1 copies and are not connected.
        let ucp = UcpDescriptor::new("x", vec![0, 2], 3, 1).err();
        assert!(ucp.is_some());
        let four = UcpDescriptor::new("y", vec![0, 4], 2, 1).unwrap();
        assert_eq!(count_configurations(&four, 5).unwrap(), 0);
    }

    #[test]
    fn too_many_periods() {
        assert!(matches!(
            count_configurations(&row("S1"), 11),
            Err(FloorError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn degree_larger_than_periods() {
        assert_eq!(count_configurations(&row("S5"), 3).unwrap(), 0);
    }
}
