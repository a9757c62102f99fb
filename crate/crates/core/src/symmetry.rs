//! Site-permutation symmetry of the periodic chain: the translation/reflection
//! group, its action on basis states and projector labels, and orbit counting.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{basis_dim, config_to_index, site_mask, BasisPair, SpinConfiguration};
use crate::lindblad::Liouvillian;

/// Bijection of the sites; `map[i]` is where site `i` is sent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SitePermutation {
    map: Vec<usize>,
}

impl SitePermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &d in &map {
            if d >= n || std::mem::replace(&mut seen[d], true) {
                return Err(Error::Domain(format!("{map:?} is not a permutation")));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// T: site i → i+1 (mod N).
    pub fn translation(n: usize) -> Self {
        Self {
            map: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }

    /// R: site i → N−1−i.
    pub fn reflection(n: usize) -> Self {
        Self {
            map: (0..n).rev().collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0; self.map.len()];
        for (i, &d) in self.map.iter().enumerate() {
            map[d] = i;
        }
        Self { map }
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.map.len()];
        let mut cycles = 0;
        for start in 0..self.map.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.map[i];
            }
        }
        cycles
    }

    pub fn apply(&self, cfg: &SpinConfiguration) -> SpinConfiguration {
        let mut spins = vec![0i8; cfg.n_sites()];
        for (i, &s) in cfg.spins().iter().enumerate() {
            spins[self.map[i]] = s;
        }
        SpinConfiguration::new(spins).expect("permuted configuration stays valid")
    }

    /// Action on a raw basis index.
    pub fn apply_index(&self, index: usize) -> usize {
        let n = self.map.len();
        let mut out = 0;
        for (i, &d) in self.map.iter().enumerate() {
            if index & site_mask(i, n) != 0 {
                out |= site_mask(d, n);
            }
        }
        out
    }
}

pub fn translation_apply(cfg: &SpinConfiguration) -> SpinConfiguration {
    SitePermutation::translation(cfg.n_sites()).apply(cfg)
}

pub fn reflection_apply(cfg: &SpinConfiguration) -> SpinConfiguration {
    SitePermutation::reflection(cfg.n_sites()).apply(cfg)
}

/// Finite permutation group together with its action tables on basis indices.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    n_sites: usize,
    elements: Vec<SitePermutation>,
    /// `index_maps[g][s]` = index of g(s).
    index_maps: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn from_elements(elements: Vec<SitePermutation>) -> Result<Self> {
        let n_sites = elements
            .first()
            .map(SitePermutation::n_sites)
            .ok_or_else(|| Error::Domain("empty group".into()))?;
        if elements.iter().any(|g| g.n_sites() != n_sites) {
            return Err(Error::Domain("mixed permutation lengths".into()));
        }
        let dim = basis_dim(n_sites);
        let index_maps = elements
            .iter()
            .map(|g| (0..dim).map(|s| g.apply_index(s)).collect())
            .collect();
        Ok(Self {
            n_sites,
            elements,
            index_maps,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[SitePermutation] {
        &self.elements
    }

    pub fn index_map(&self, g: usize) -> &[usize] {
        &self.index_maps[g]
    }

    pub fn index_maps(&self) -> &[Vec<usize>] {
        &self.index_maps
    }

    pub fn contains(&self, p: &SitePermutation) -> bool {
        self.elements.contains(p)
    }

    pub fn is_closed(&self) -> bool {
        let set: HashSet<_> = self.elements.iter().collect();
        self.elements.iter().all(|a| {
            set.contains(&a.inverse()) && self.elements.iter().all(|b| set.contains(&a.compose(b)))
        })
    }

    /// g ρ g†, i.e. out[g(a), g(b)] = ρ[a, b].
    pub fn conjugate(&self, g: usize, rho: &DensityMatrix) -> DensityMatrix {
        let dim = rho.dim();
        let map = &self.index_maps[g];
        let mut out = DensityMatrix::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                out[(map[a], map[b])] = rho[(a, b)];
            }
        }
        out
    }

    /// (1/|G|) Σ_g g ρ g†.
    pub fn symmetrize(&self, rho: &DensityMatrix) -> DensityMatrix {
        let mut acc = DensityMatrix::zeros(rho.dim());
        for g in 0..self.order() {
            acc += &self.conjugate(g, rho);
        }
        acc.scale_mut(Complex64::new(1.0 / self.order() as f64, 0.0));
        acc
    }
}

/// Translations and reflections of the periodic chain: Z_2 for N = 2, D_2N for N ≥ 3.
pub fn build_group(n_sites: usize) -> Result<SymmetryGroup> {
    if n_sites < 2 {
        return Err(Error::Domain(format!("symmetry group needs N ≥ 2, got {n_sites}")));
    }
    let t = SitePermutation::translation(n_sites);
    let r = SitePermutation::reflection(n_sites);
    let mut elements: Vec<SitePermutation> = Vec::with_capacity(2 * n_sites);
    let mut power = SitePermutation::identity(n_sites);
    for _ in 1..=n_sites {
        power = t.compose(&power);
        for g in [power.clone(), r.compose(&power)] {
            if !elements.contains(&g) {
                elements.push(g);
            }
        }
    }
    let expected = if n_sites == 2 { 2 } else { 2 * n_sites };
    debug_assert_eq!(elements.len(), expected);
    SymmetryGroup::from_elements(elements)
}

/// Partition of all 4^N projector labels into orbits under simultaneous action.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    n_sites: usize,
    orbit_of: Vec<u32>,
    representatives: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl OrbitTable {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Orbit id of a pair index.
    pub fn orbit_of(&self, pair: usize) -> usize {
        self.orbit_of[pair] as usize
    }

    /// Smallest pair index in each orbit.
    pub fn representative(&self, orbit: usize) -> BasisPair {
        let (s, e) = crate::hilbert::split_pair_index(self.representatives[orbit], self.n_sites);
        BasisPair::from_indices(s, e, self.n_sites).expect("in range")
    }

    pub fn representative_index(&self, orbit: usize) -> usize {
        self.representatives[orbit]
    }

    /// Pair indices of one orbit, ascending.
    pub fn members(&self, orbit: usize) -> &[usize] {
        &self.members[orbit]
    }

    pub fn size(&self, orbit: usize) -> usize {
        self.members[orbit].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// CSV with header `pair_index,orbit_id,orbit_size`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_index,orbit_id,orbit_size\n");
        for (p, &o) in self.orbit_of.iter().enumerate() {
            let _ = writeln!(out, "{p},{o},{}", self.members[o as usize].len());
        }
        out
    }
}

pub fn orbit_table(group: &SymmetryGroup) -> OrbitTable {
    let n = group.n_sites();
    let dim = basis_dim(n);
    let unassigned = u32::MAX;
    let mut orbit_of = vec![unassigned; dim * dim];
    let mut representatives = Vec::new();
    let mut members = Vec::new();
    for p in 0..dim * dim {
        if orbit_of[p] != unassigned {
            continue;
        }
        let id = representatives.len() as u32;
        let (s, e) = (p >> n, p & (dim - 1));
        let mut orbit = Vec::new();
        for map in group.index_maps() {
            let q = (map[s] << n) | map[e];
            if orbit_of[q] == unassigned {
                orbit_of[q] = id;
                orbit.push(q);
            }
        }
        orbit.sort_unstable();
        representatives.push(p);
        members.push(orbit);
    }
    OrbitTable {
        n_sites: n,
        orbit_of,
        representatives,
        members,
    }
}

/// dim I_G by Burnside's lemma: (1/|G|) Σ_g 4^{cycles(g)}.
pub fn invariant_dimension(group: &SymmetryGroup) -> u64 {
    let total: u128 = group
        .elements()
        .iter()
        .map(|g| 4u128.pow(g.cycle_count() as u32))
        .sum();
    (total / group.order() as u128) as u64
}

/// (1/|G|) Σ_g |gσ⟩⟨gη|.
pub fn symmetrized_projector(p: &BasisPair, group: &SymmetryGroup) -> DensityMatrix {
    let dim = basis_dim(p.n_sites());
    let (s, e) = (config_to_index(p.bra()), config_to_index(p.ket()));
    let w = Complex64::new(1.0 / group.order() as f64, 0.0);
    let mut out = DensityMatrix::zeros(dim);
    for map in group.index_maps() {
        out[(map[s], map[e])] += w;
    }
    out
}

/// max_g ‖g L[ρ] g† − L[g ρ g†]‖_F / ‖ρ‖_F over `samples` seeded random ρ.
pub fn weak_symmetry_residual(
    liouvillian: &Liouvillian,
    group: &SymmetryGroup,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let dim = liouvillian.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let rho = DensityMatrix::random(dim, &mut rng);
        let l_rho = liouvillian.apply(&rho)?;
        for g in 0..group.order() {
            let lhs = group.conjugate(g, &l_rho);
            let rhs = liouvillian.apply(&group.conjugate(g, &rho))?;
            worst = worst.max((&lhs - &rhs).frobenius_norm() / rho.frobenius_norm());
        }
    }
    Ok(worst)
}

/// Weak-symmetry residual on 20 fixed random test matrices.
pub fn check_weak_symmetry(liouvillian: &Liouvillian, group: &SymmetryGroup) -> Result<f64> {
    weak_symmetry_residual(liouvillian, group, 20, 0x5eed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::index_to_config;

    fn cfg(s: &[i8]) -> SpinConfiguration {
        SpinConfiguration::new(s.to_vec()).unwrap()
    }

    #[test]
    fn translation_examples() {
        assert_eq!(translation_apply(&cfg(&[1, -1, 1])), cfg(&[1, 1, -1]));
        assert_eq!(translation_apply(&cfg(&[-1, -1, -1])), cfg(&[-1, -1, -1]));
        for n in 2..=6 {
            for k in 0..basis_dim(n) {
                let start = index_to_config(k, n).unwrap();
                let mut c = start.clone();
                for _ in 0..n {
                    c = translation_apply(&c);
                }
                assert_eq!(c, start);
            }
        }
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflection_apply(&cfg(&[1, -1, -1])), cfg(&[-1, -1, 1]));
        assert_eq!(reflection_apply(&cfg(&[1, -1, 1])), cfg(&[1, -1, 1]));
        for n in 2..=8 {
            for k in 0..basis_dim(n) {
                let c = index_to_config(k, n).unwrap();
                assert_eq!(reflection_apply(&reflection_apply(&c)), c);
            }
        }
    }

    #[test]
    fn index_action_matches_configuration_action() {
        let g = build_group(5).unwrap();
        for (gi, p) in g.elements().iter().enumerate() {
            for k in 0..32 {
                let c = index_to_config(k, 5).unwrap();
                assert_eq!(p.apply(&c).index(), g.index_map(gi)[k]);
            }
        }
    }

    #[test]
    fn group_orders() {
        assert!(build_group(1).is_err());
        assert_eq!(build_group(2).unwrap().order(), 2);
        for n in 3..=8 {
            let g = build_group(n).unwrap();
            assert_eq!(g.order(), 2 * n);
            let distinct: HashSet<_> = g.elements().iter().collect();
            assert_eq!(distinct.len(), 2 * n);
            assert!(g.is_closed());
        }
    }

    #[test]
    fn three_sites_give_full_symmetric_group() {
        let g = build_group(3).unwrap();
        let perms: HashSet<Vec<usize>> = g.elements().iter().map(|p| p.map().to_vec()).collect();
        let mut all = HashSet::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    if a != b && b != c && a != c {
                        all.insert(vec![a, b, c]);
                    }
                }
            }
        }
        assert_eq!(perms, all);
    }

    #[test]
    fn permutation_validation() {
        assert!(SitePermutation::new(vec![0, 0, 1]).is_err());
        assert!(SitePermutation::new(vec![0, 3, 1]).is_err());
        assert!(SitePermutation::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn orbit_examples() {
        let t2 = orbit_table(&build_group(2).unwrap());
        assert_eq!(t2.len(), 10);
        assert_eq!(t2.size(t2.orbit_of(0)), 1);
        let t4 = orbit_table(&build_group(4).unwrap());
        assert_eq!(t4.sizes().iter().sum::<usize>(), 256);
        assert_eq!(t4.representative_index(0), 0);
    }

    #[test]
    fn burnside_hand_value() {
        assert_eq!(invariant_dimension(&build_group(3).unwrap()), 20);
    }

    #[test]
    fn csv_export() {
        let t = orbit_table(&build_group(2).unwrap());
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("pair_index,orbit_id,orbit_size"));
        assert_eq!(lines.count(), 16);
    }

    #[test]
    fn projector_examples() {
        let g = build_group(2).unwrap();
        let single = BasisPair::from_indices(0, 0, 2).unwrap();
        assert_eq!(symmetrized_projector(&single, &g), DensityMatrix::projector(4, 0, 0));

        // (+1,-1) is index 1; its swap (-1,+1) is index 2
        let p = BasisPair::from_indices(1, 1, 2).unwrap();
        let m = symmetrized_projector(&p, &g);
        assert_eq!(m[(1, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(2, 2)], Complex64::new(0.5, 0.0));
        assert!((m.frobenius_norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projector_trace_and_commutation() {
        let g = build_group(4).unwrap();
        for (s, e) in [(0, 0), (3, 3), (1, 6), (5, 10)] {
            let p = BasisPair::from_indices(s, e, 4).unwrap();
            let m = symmetrized_projector(&p, &g);
            let want = if s == e { 1.0 } else { 0.0 };
            assert!((m.trace() - Complex64::new(want, 0.0)).norm() < 1e-15);
            for gi in 0..g.order() {
                assert!((&g.conjugate(gi, &m) - &m).frobenius_norm() < 1e-14);
            }
        }
    }
}
