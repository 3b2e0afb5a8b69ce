//! Dominant unresolvable collision patterns (UCPs) and their catalog.

use serde::Deserialize;

use super::FloorError;

/// A dominant unresolvable collision pattern.
///
/// `profile[i]` is the number of users with `i + 1` replicas, so the profile
/// of two degree-2 users is `[0, 2, 0, 0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcpDescriptor {
    pub name: String,
    profile: Vec<u32>,
    /// Number of replica-collision sets.
    pub mu: u32,
    /// Number of labeled configurations realizing the pattern on a fixed set
    /// of `mu` vulnerable periods.
    pub iso_count: u64,
}

impl UcpDescriptor {
    pub fn new(
        name: impl Into<String>,
        profile: Vec<u32>,
        mu: u32,
        iso_count: u64,
    ) -> Result<Self, FloorError> {
        let ucp = Self {
            name: name.into(),
            profile,
            mu,
            iso_count,
        };
        ucp.validate()?;
        Ok(ucp)
    }

    /// The pattern of two degree-`d` users whose replicas all collide pairwise.
    pub fn two_user(degree: usize) -> Self {
        let mut profile = vec![0; degree.max(2)];
        profile[degree - 1] = 2;
        Self {
            name: format!("two-user-d{degree}"),
            profile,
            mu: degree as u32,
            iso_count: 1,
        }
    }

    fn validate(&self) -> Result<(), FloorError> {
        let bad = |msg: String| Err(FloorError::InvalidCatalog(format!("{}: {msg}", self.name)));
        if self.nu() == 0 {
            return bad("empty profile".into());
        }
        if self.profile.first().copied().unwrap_or(0) != 0 {
            return bad("users of degree 1 are not allowed".into());
        }
        if self.mu == 0 {
            return bad("mu must be at least 1".into());
        }
        if self.replica_count() < 2 * self.mu as u64 {
            return bad(format!(
                "{} replicas cannot fill {} collision sets of at least two",
                self.replica_count(),
                self.mu
            ));
        }
        if self.iso_count == 0 {
            return bad("isomorphism count must be at least 1".into());
        }
        Ok(())
    }

    pub fn profile(&self) -> &[u32] {
        &self.profile
    }

    /// Number of users in the pattern.
    pub fn nu(&self) -> u32 {
        self.profile.iter().sum()
    }

    pub fn users_of_degree(&self, degree: usize) -> u32 {
        degree
            .checked_sub(1)
            .and_then(|i| self.profile.get(i))
            .copied()
            .unwrap_or(0)
    }

    /// `(degree, user count)` for every degree present in the pattern.
    pub fn degrees(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.profile
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (i + 1, n))
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().map(|(d, _)| d).max().unwrap_or(0)
    }

    pub fn replica_count(&self) -> u64 {
        self.degrees().map(|(d, n)| d as u64 * n as u64).sum()
    }

    /// `Some(d)` when every user has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let mut it = self.degrees();
        match (it.next(), it.next()) {
            (Some((d, _)), None) => Some(d),
            _ => None,
        }
    }
}

/// The twelve dominant UCPs with at most four replica-collision sets.
pub fn builtin_catalog() -> Vec<UcpDescriptor> {
    const ROWS: [(&str, [u32; 4], u32, u64); 12] = [
        ("S1", [0, 2, 0, 0], 2, 1),
        ("S2", [0, 0, 2, 0], 3, 1),
        ("S3", [0, 3, 0, 0], 3, 6),
        ("S4", [0, 2, 1, 0], 3, 6),
        ("S5", [0, 0, 0, 2], 4, 1),
        ("S6", [0, 2, 0, 1], 4, 6),
        ("S7", [0, 1, 2, 0], 4, 12),
        ("S8", [0, 1, 1, 1], 4, 12),
        ("S9", [0, 0, 3, 0], 4, 24),
        ("S10", [0, 0, 2, 1], 4, 12),
        ("S11", [0, 3, 0, 1], 4, 24),
        ("S12", [0, 4, 0, 0], 4, 72),
    ];
    ROWS.iter()
        .map(|&(name, profile, mu, c)| {
            UcpDescriptor::new(name, profile.to_vec(), mu, c).expect("valid row")
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    ucp: Vec<CatalogRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogRow {
    name: String,
    profile: Vec<u32>,
    mu: u32,
    c: u64,
}

/// Parses a catalog file: a TOML array of `[[ucp]]` tables with keys
/// `name`, `profile`, `mu` and `c`.
pub fn parse_catalog(text: &str) -> Result<Vec<UcpDescriptor>, FloorError> {
    let file: CatalogFile =
        toml::from_str(text).map_err(|e| FloorError::InvalidCatalog(e.to_string()))?;
    if file.ucp.is_empty() {
        return Err(FloorError::InvalidCatalog("catalog has no rows".into()));
    }
    file.ucp
        .into_iter()
        .map(|row| UcpDescriptor::new(row.name, row.profile, row.mu, row.c))
        .collect()
}
