//! Fixed-magnetization sector of an `N`-site spin-1/2 chain.
//!
//! A configuration is a bitmask: bit `i` (least significant bit = site 0)
//! is set when site `i` carries an up spin (an excitation). The Hamiltonian
//! and the collision channel both conserve the number of set bits, so all
//! dynamics lives inside one sector of `binomial(N, q)` configurations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sites are packed into a `u64`.
pub const MAX_SITES: usize = 64;

/// Refuse sectors whose dense density matrix would not fit in memory anyway.
pub const MAX_DIMENSION: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_excitations: usize,
    states: Vec<u64>,
    index_of: HashMap<u64, usize>,
    /// For each site, the sector indices whose configuration has that bit set.
    occupied: Vec<Vec<usize>>,
}

impl SectorBasis {
    /// Enumerate all `N`-site configurations with exactly `q` excitations,
    /// in ascending bitmask order.
    pub fn new(n_sites: usize, n_excitations: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid(format!(
                "chain needs at least 2 sites, got {n_sites}"
            )));
        }
        if n_sites > MAX_SITES {
            return Err(Error::invalid(format!(
                "at most {MAX_SITES} sites are supported, got {n_sites}"
            )));
        }
        if n_excitations > n_sites {
            return Err(Error::invalid(format!(
                "{n_excitations} excitations do not fit in {n_sites} sites"
            )));
        }
        let dim = binomial(n_sites, n_excitations);
        if dim > MAX_DIMENSION as u128 {
            return Err(Error::invalid(format!(
                "sector dimension {dim} exceeds the dense limit {MAX_DIMENSION}"
            )));
        }

        let states = enumerate_sector(n_sites, n_excitations);
        debug_assert_eq!(states.len() as u128, dim);

        let index_of = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let occupied = (0..n_sites)
            .map(|site| {
                states
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s >> site & 1 == 1)
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();

        Ok(Self {
            n_sites,
            n_excitations,
            states,
            index_of,
            occupied,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index_of.get(&mask).copied()
    }

    /// Whether `other` describes the same sector.
    pub fn same_sector(&self, other: &SectorBasis) -> bool {
        self.n_sites == other.n_sites && self.n_excitations == other.n_excitations
    }

    /// Sector indices of configurations with an excitation on `site`.
    pub fn occupied_indices(&self, site: usize) -> Result<&[usize]> {
        self.check_site(site)?;
        Ok(&self.occupied[site])
    }

    /// `σᶻ` eigenvalue (+1 up, −1 down) of `site` in configuration `index`.
    #[inline]
    pub fn z_sign(&self, index: usize, site: usize) -> i8 {
        if self.states[index] >> site & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Diagonal of `σᶻ_site` in this sector.
    pub fn sigma_z_diagonal<T: Real>(&self, site: usize) -> Result<Vec<T>> {
        self.check_site(site)?;
        Ok((0..self.dimension())
            .map(|k| T::lit(f64::from(self.z_sign(k, site))))
            .collect())
    }

    /// Ordered index pairs `(k, l)` connected by moving one excitation across
    /// the bond `(i, i + 1)`. Each pair carries the matrix element 2 of
    /// `σˣσˣ + σʸσʸ`.
    pub fn hop_elements(&self, bond: usize) -> Result<Vec<(usize, usize)>> {
        if bond + 1 >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                what: "bond",
                index: bond,
                limit: self.n_sites - 1,
            });
        }
        let pair = 0b11u64 << bond;
        let mut out = Vec::new();
        for (k, &s) in self.states.iter().enumerate() {
            // exactly one of the two bond sites is occupied
            if (s & pair).count_ones() == 1 {
                let l = self.index_of[&(s ^ pair)];
                out.push((k, l));
            }
        }
        Ok(out)
    }

    /// Sector index of the configuration with excitations exactly on `sites`.
    pub fn index_of_sites(&self, sites: &[usize]) -> Result<usize> {
        let mut mask = 0u64;
        for &site in sites {
            self.check_site(site)?;
            if mask >> site & 1 == 1 {
                return Err(Error::invalid(format!("site {site} listed twice")));
            }
            mask |= 1 << site;
        }
        if sites.len() != self.n_excitations {
            return Err(Error::invalid(format!(
                "{} initial sites given for a sector with q = {}",
                sites.len(),
                self.n_excitations
            )));
        }
        Ok(self.index_of[&mask])
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                what: "site",
                index: site,
                limit: self.n_sites,
            });
        }
        Ok(())
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Gosper's hack: successive masks with the same popcount, ascending.
fn enumerate_sector(n_sites: usize, q: usize) -> Vec<u64> {
    if q == 0 {
        return vec![0];
    }
    let limit: u128 = 1u128 << n_sites;
    let mut out = Vec::new();
    let mut s: u128 = (1u128 << q) - 1;
    while s < limit {
        out.push(s as u64);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimensions() {
        assert_eq!(SectorBasis::new(41, 1).unwrap().dimension(), 41);
        assert_eq!(SectorBasis::new(20, 2).unwrap().dimension(), 190);
        assert_eq!(SectorBasis::new(3, 3).unwrap().dimension(), 1);
        assert_eq!(SectorBasis::new(5, 0).unwrap().dimension(), 1);
    }

    #[test]
    fn two_site_sector() {
        let b = SectorBasis::new(2, 1).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        // site 0 is up only in 0b01
        assert_eq!(b.sigma_z_diagonal::<f64>(0).unwrap(), vec![1.0, -1.0]);
        assert_eq!(b.sigma_z_diagonal::<f64>(1).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(b.hop_elements(0).unwrap(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn saturated_sector() {
        let b = SectorBasis::new(3, 3).unwrap();
        assert_eq!(b.sigma_z_diagonal::<f64>(1).unwrap(), vec![1.0]);
        assert!(b.hop_elements(0).unwrap().is_empty());
        assert!(b.hop_elements(1).unwrap().is_empty());
    }

    #[test]
    fn three_site_single_hop() {
        let b = SectorBasis::new(3, 1).unwrap();
        // states 001, 010, 100: bond (0,1) connects 001 <-> 010 only
        assert_eq!(b.hop_elements(0).unwrap(), vec![(0, 1), (1, 0)]);
        assert_eq!(b.hop_elements(1).unwrap(), vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            SectorBasis::new(3, 4),
            Err(Error::InvalidArguments(_))
        ));
        assert!(matches!(
            SectorBasis::new(1, 0),
            Err(Error::InvalidArguments(_))
        ));
        let b = SectorBasis::new(4, 2).unwrap();
        assert!(matches!(
            b.sigma_z_diagonal::<f64>(4),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            b.hop_elements(3),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(b.index_of_sites(&[1, 1]).is_err());
        assert!(b.index_of_sites(&[1]).is_err());
        assert_eq!(b.state(b.index_of_sites(&[0, 3]).unwrap()), 0b1001);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(41, 1), 41);
        assert_eq!(binomial(20, 2), 190);
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    proptest! {
        #[test]
        fn sector_invariants(n in 2usize..11, q_frac in 0.0f64..=1.0) {
            let q = ((n as f64) * q_frac).round() as usize;
            let b = SectorBasis::new(n, q).unwrap();
            prop_assert_eq!(b.dimension() as u128, binomial(n, q));
            prop_assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            for (k, &s) in b.states().iter().enumerate() {
                prop_assert_eq!(s.count_ones() as usize, q);
                prop_assert_eq!(b.index_of(s), Some(k));
                let total: i32 = (0..n).map(|i| i32::from(b.z_sign(k, i))).sum();
                prop_assert_eq!(total, 2 * q as i32 - n as i32);
            }
            for bond in 0..n - 1 {
                let pairs = b.hop_elements(bond).unwrap();
                for &(k, l) in &pairs {
                    prop_assert!(k != l);
                    prop_assert!(pairs.contains(&(l, k)));
                    prop_assert_eq!(b.state(k) ^ b.state(l), 0b11u64 << bond);
                }
            }
        }
    }
}
