//! The σ_z product basis of an N-spin chain.
//!
//! Basis states are addressed by an integer index in `[0, 2^N)`. Site 1 (index 0
//! internally) is the most significant bit, and a cleared bit means spin up
//! (σ_z = +1). Index 0 is therefore the all-up state and `2^N - 1` the all-down
//! state.
//!
//! Density matrices are vectorized row-major: the pair `(σ, η)` lives at
//! `index(σ) * 2^N + index(η)`.

use crate::error::{Error, Result};

/// Largest chain handled by the dense representation.
pub const MAX_SITES: usize = 16;

#[inline]
pub fn basis_dim(n_sites: usize) -> usize {
    1usize << n_sites
}

/// Bit mask selecting `site` (0-based) inside a basis index.
#[inline]
pub fn site_mask(site: usize, n_sites: usize) -> usize {
    1usize << (n_sites - 1 - site)
}

/// σ_z eigenvalue of `site` in basis state `index`.
#[inline]
pub fn spin_at(index: usize, site: usize, n_sites: usize) -> i8 {
    if index & site_mask(site, n_sites) == 0 {
        1
    } else {
        -1
    }
}

/// Number of up spins in basis state `index`.
#[inline]
pub fn up_count(index: usize, n_sites: usize) -> u32 {
    n_sites as u32 - index.count_ones()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() || spins.len() > MAX_SITES {
            return Err(Error::InvalidConfiguration(format!(
                "length {} outside 1..={MAX_SITES}",
                spins.len()
            )));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfiguration(format!(
                "orientation {bad} is not ±1"
            )));
        }
        Ok(Self { spins })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn index(&self) -> usize {
        config_to_index(self)
    }
}

pub fn index_to_config(index: usize, n_sites: usize) -> Result<SpinConfiguration> {
    if n_sites == 0 || n_sites > MAX_SITES || index >= basis_dim(n_sites) {
        return Err(Error::IndexOutOfRange { index, n_sites });
    }
    let spins = (0..n_sites).map(|j| spin_at(index, j, n_sites)).collect();
    Ok(SpinConfiguration { spins })
}

pub fn config_to_index(cfg: &SpinConfiguration) -> usize {
    cfg.spins
        .iter()
        .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == -1))
}

/// Label `(σ, η)` of the projector `|σ⟩⟨η|`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisPair {
    bra: SpinConfiguration,
    ket: SpinConfiguration,
}

impl BasisPair {
    pub fn new(bra: SpinConfiguration, ket: SpinConfiguration) -> Result<Self> {
        if bra.n_sites() != ket.n_sites() {
            return Err(Error::shape(
                format!("{} sites", bra.n_sites()),
                format!("{} sites", ket.n_sites()),
            ));
        }
        Ok(Self { bra, ket })
    }

    pub fn from_indices(bra: usize, ket: usize, n_sites: usize) -> Result<Self> {
        Ok(Self {
            bra: index_to_config(bra, n_sites)?,
            ket: index_to_config(ket, n_sites)?,
        })
    }

    pub fn bra(&self) -> &SpinConfiguration {
        &self.bra
    }

    pub fn ket(&self) -> &SpinConfiguration {
        &self.ket
    }

    pub fn n_sites(&self) -> usize {
        self.bra.n_sites()
    }
}

pub fn pair_index(p: &BasisPair) -> usize {
    (config_to_index(&p.bra) << p.n_sites()) | config_to_index(&p.ket)
}

/// Inverse of [`pair_index`] on raw indices.
#[inline]
pub fn split_pair_index(pair: usize, n_sites: usize) -> (usize, usize) {
    (pair >> n_sites, pair & (basis_dim(n_sites) - 1))
}
