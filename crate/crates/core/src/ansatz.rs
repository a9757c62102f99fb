//! RBM density-operator ansatz and its group-symmetrized version.
//!
//! Matrix elements are
//!
//! ```text
//! ρ(σ,η) = 8 exp(Σ a_j σ_j + Σ a*_j η_j)
//!          Π_l cosh(c_l + Σ W_li σ_i + Σ W*_li η_i)
//!          Π_m cosh(b_m + Σ X_mi σ_i) Π_m cosh(b*_m + Σ X*_mi η_i)
//! ```
//!
//! The variational vector χ is real: every complex parameter contributes its real
//! and imaginary part in adjacent slots, in the order (a, b, c, W, X) with W and
//! X row-major. With the Hermitian-c constraint the imaginary parts of c are not
//! free and are left out of χ, which makes ρ(σ,η) = ρ(η,σ)* exactly.
//!
//! All evaluation happens in the log domain. Entries are returned as
//! `exp(log ρ − shift)` with one global shift, recorded as `log_scale`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{basis_dim, config_to_index, spin_at, BasisPair};
use crate::symmetry::{build_group, orbit_table, OrbitTable, SymmetryGroup};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
const LN_8: f64 = 2.0794415416798357;
/// Largest log-modulus that can be exponentiated without overflow.
const MAX_LOG: f64 = 709.0;
/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.01;

/// Number of hidden units `density · n_sites`, which must be a whole number.
pub fn hidden_units(n_sites: usize, density: f64) -> Result<usize> {
    let m = density * n_sites as f64;
    let rounded = m.round();
    if !(density >= 0.0) || (m - rounded).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "hidden density {density} with N={n_sites} gives non-integral unit count {m}"
        )));
    }
    Ok(rounded as usize)
}

/// Complex parameter count (2α+1)N + 2αN² for M = L = αN.
pub fn param_count(n_sites: usize, alpha: f64) -> Result<usize> {
    let m = hidden_units(n_sites, alpha)?;
    Ok(n_sites + 2 * m + n_sites * 2 * m)
}

/// Seeded random parameters with Hermitian-c structure and M = αN, L = βN.
pub fn init_params(n_sites: usize, alpha: f64, beta: f64, seed: u64) -> Result<RbmParameters> {
    RbmParameters::random(n_sites, alpha, beta, true, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    n_visible: usize,
    n_hidden: usize,
    n_mixing: usize,
    hermitian_c: bool,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    w: Vec<Complex64>,
    x: Vec<Complex64>,
}

impl RbmParameters {
    pub fn zeros(n_visible: usize, n_hidden: usize, n_mixing: usize, hermitian_c: bool) -> Self {
        Self {
            n_visible,
            n_hidden,
            n_mixing,
            hermitian_c,
            a: vec![ZERO; n_visible],
            b: vec![ZERO; n_hidden],
            c: vec![ZERO; n_mixing],
            w: vec![ZERO; n_mixing * n_visible],
            x: vec![ZERO; n_hidden * n_visible],
        }
    }

    /// Seeded uniform initialization on [-0.01, 0.01] for every free real component.
    pub fn random(n_visible: usize, alpha: f64, beta: f64, hermitian_c: bool, seed: u64) -> Result<Self> {
        let m = hidden_units(n_visible, alpha)?;
        let l = hidden_units(n_visible, beta)?;
        let mut p = Self::zeros(n_visible, m, l, hermitian_c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chi: Vec<f64> = (0..p.n_real())
            .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
            .collect();
        p.set_real(&chi)?;
        Ok(p)
    }

    pub fn from_real(
        n_visible: usize,
        n_hidden: usize,
        n_mixing: usize,
        hermitian_c: bool,
        chi: &[f64],
    ) -> Result<Self> {
        let mut p = Self::zeros(n_visible, n_hidden, n_mixing, hermitian_c);
        p.set_real(chi)?;
        Ok(p)
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    /// M
    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// L
    pub fn n_mixing(&self) -> usize {
        self.n_mixing
    }

    pub fn hermitian_c(&self) -> bool {
        self.hermitian_c
    }

    pub fn n_complex(&self) -> usize {
        let (n, m, l) = (self.n_visible, self.n_hidden, self.n_mixing);
        n + m + l + n * (l + m)
    }

    /// Length of χ.
    pub fn n_real(&self) -> usize {
        2 * self.n_complex() - if self.hermitian_c { self.n_mixing } else { 0 }
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }
    pub fn b(&self) -> &[Complex64] {
        &self.b
    }
    pub fn c(&self) -> &[Complex64] {
        &self.c
    }
    /// L×N, row-major.
    pub fn w(&self) -> &[Complex64] {
        &self.w
    }
    /// M×N, row-major.
    pub fn x(&self) -> &[Complex64] {
        &self.x
    }

    pub fn to_real(&self) -> Vec<f64> {
        let mut chi = Vec::with_capacity(self.n_real());
        let push = |chi: &mut Vec<f64>, z: &Complex64| {
            chi.push(z.re);
            chi.push(z.im);
        };
        self.a.iter().for_each(|z| push(&mut chi, z));
        self.b.iter().for_each(|z| push(&mut chi, z));
        for z in &self.c {
            chi.push(z.re);
            if !self.hermitian_c {
                chi.push(z.im);
            }
        }
        self.w.iter().for_each(|z| push(&mut chi, z));
        self.x.iter().for_each(|z| push(&mut chi, z));
        chi
    }

    pub fn set_real(&mut self, chi: &[f64]) -> Result<()> {
        if chi.len() != self.n_real() {
            return Err(Error::shape(format!("{} real parameters", self.n_real()), chi.len()));
        }
        if chi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        let mut it = chi.iter().copied();
        let mut next = || it.next().expect("length checked");
        for z in self.a.iter_mut().chain(self.b.iter_mut()) {
            *z = Complex64::new(next(), next());
        }
        for z in &mut self.c {
            let re = next();
            let im = if self.hermitian_c { 0.0 } else { next() };
            *z = Complex64::new(re, im);
        }
        for z in self.w.iter_mut().chain(self.x.iter_mut()) {
            *z = Complex64::new(next(), next());
        }
        Ok(())
    }

    /// χ ← χ + step · direction
    pub fn add_real(&mut self, direction: &[f64], step: f64) -> Result<()> {
        let mut chi = self.to_real();
        if direction.len() != chi.len() {
            return Err(Error::shape(chi.len(), direction.len()));
        }
        for (x, d) in chi.iter_mut().zip(direction) {
            *x += step * d;
        }
        self.set_real(&chi)
    }
}

/// The invariant subspace I_G of a chain: its group and orbit partition.
#[derive(Debug)]
pub struct InvariantSpace {
    group: SymmetryGroup,
    orbits: OrbitTable,
}

impl InvariantSpace {
    pub fn new(n_sites: usize) -> Result<Self> {
        let group = build_group(n_sites)?;
        let orbits = orbit_table(&group);
        Ok(Self { group, orbits })
    }

    pub fn from_group(group: SymmetryGroup) -> Self {
        let orbits = orbit_table(&group);
        Self { group, orbits }
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn orbits(&self) -> &OrbitTable {
        &self.orbits
    }
}

#[derive(Debug, Clone)]
pub enum AnsatzKind {
    Plain,
    Invariant(Arc<InvariantSpace>),
}

impl AnsatzKind {
    pub fn invariant(n_sites: usize) -> Result<Self> {
        Ok(Self::Invariant(Arc::new(InvariantSpace::new(n_sites)?)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnsatzKind::Plain => "rbm",
            AnsatzKind::Invariant(_) => "invariant",
        }
    }

    pub fn group(&self) -> Option<&SymmetryGroup> {
        match self {
            AnsatzKind::Plain => None,
            AnsatzKind::Invariant(space) => Some(space.group()),
        }
    }
}

/// ln cosh z, stable for large |Re z|.
pub fn ln_cosh(z: Complex64) -> Result<Complex64> {
    let z = if z.re < 0.0 { -z } else { z };
    let tail = Complex64::new(1.0, 0.0) + (-2.0 * z).exp();
    if tail.norm() == 0.0 {
        return Err(Error::NumericSingularity { re: z.re, im: z.im });
    }
    Ok(z + tail.ln() - std::f64::consts::LN_2)
}

fn stable_tanh(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -stable_tanh(-z);
    }
    let e = (-2.0 * z).exp();
    (Complex64::new(1.0, 0.0) - e) / (Complex64::new(1.0, 0.0) + e)
}

/// Per-configuration quantities shared by every pair.
struct Precomputed<'a> {
    p: &'a RbmParameters,
    n: usize,
    spins: Vec<f64>,
    a_dot: Vec<Complex64>,
    w_dot: Vec<Complex64>,
    hidden_ln: Vec<Complex64>,
    hidden_tanh: Vec<Complex64>,
}

impl<'a> Precomputed<'a> {
    fn new(p: &'a RbmParameters) -> Result<Self> {
        let n = p.n_visible;
        let dim = basis_dim(n);
        let (m, l) = (p.n_hidden, p.n_mixing);
        let mut spins = Vec::with_capacity(dim * n);
        let mut a_dot = Vec::with_capacity(dim);
        let mut w_dot = Vec::with_capacity(dim * l);
        let mut hidden_ln = Vec::with_capacity(dim);
        let mut hidden_tanh = Vec::with_capacity(dim * m);
        for s in 0..dim {
            let sv: Vec<f64> = (0..n).map(|j| f64::from(spin_at(s, j, n))).collect();
            let dot = |row: &[Complex64]| -> Complex64 { row.iter().zip(&sv).map(|(w, &x)| w * x).sum() };
            a_dot.push(dot(&p.a));
            for li in 0..l {
                w_dot.push(dot(&p.w[li * n..(li + 1) * n]));
            }
            let mut ln_sum = ZERO;
            for mi in 0..m {
                let theta = p.b[mi] + dot(&p.x[mi * n..(mi + 1) * n]);
                ln_sum += ln_cosh(theta)?;
                hidden_tanh.push(stable_tanh(theta));
            }
            hidden_ln.push(ln_sum);
            spins.extend_from_slice(&sv);
        }
        Ok(Self {
            p,
            n,
            spins,
            a_dot,
            w_dot,
            hidden_ln,
            hidden_tanh,
        })
    }

    #[inline]
    fn mixing_arg(&self, s: usize, e: usize, li: usize) -> Complex64 {
        let l = self.p.n_mixing;
        self.p.c[li] + self.w_dot[s * l + li] + self.w_dot[e * l + li].conj()
    }

    fn log_element(&self, s: usize, e: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(LN_8, 0.0)
            + self.a_dot[s]
            + self.a_dot[e].conj()
            + self.hidden_ln[s]
            + self.hidden_ln[e].conj();
        for li in 0..self.p.n_mixing {
            acc += ln_cosh(self.mixing_arg(s, e, li))?;
        }
        Ok(acc)
    }

    /// ∂ ln ρ(s,e) / ∂χ_k for every real slot k, written into `out`.
    fn log_derivatives(&self, s: usize, e: usize, out: &mut [Complex64]) {
        let n = self.n;
        let (m, l) = (self.p.n_hidden, self.p.n_mixing);
        let ss = &self.spins[s * n..(s + 1) * n];
        let es = &self.spins[e * n..(e + 1) * n];
        let mut k = 0;
        let mut put = |v: Complex64| {
            out[k] = v;
            k += 1;
        };
        for j in 0..n {
            put(Complex64::new(ss[j] + es[j], 0.0));
            put(I * (ss[j] - es[j]));
        }
        let ts = &self.hidden_tanh[s * m..(s + 1) * m];
        let te = &self.hidden_tanh[e * m..(e + 1) * m];
        for mi in 0..m {
            let (u, v) = (ts[mi], te[mi].conj());
            put(u + v);
            put(I * (u - v));
        }
        let mix: Vec<Complex64> = (0..l).map(|li| stable_tanh(self.mixing_arg(s, e, li))).collect();
        for &t in &mix {
            put(t);
            if !self.p.hermitian_c {
                put(I * t);
            }
        }
        for &t in &mix {
            for i in 0..n {
                put(t * (ss[i] + es[i]));
                put(I * t * (ss[i] - es[i]));
            }
        }
        for mi in 0..m {
            let (u, v) = (ts[mi], te[mi].conj());
            for i in 0..n {
                put(u * ss[i] + v * es[i]);
                put(I * (u * ss[i] - v * es[i]));
            }
        }
        debug_assert_eq!(k, out.len());
    }
}

/// ln ρ_χ(σ,η) of the plain RBM.
pub fn rbm_log_element(params: &RbmParameters, pair: &BasisPair) -> Result<Complex64> {
    if pair.n_sites() != params.n_visible {
        return Err(Error::shape(params.n_visible, pair.n_sites()));
    }
    Precomputed::new(params)?.log_element(config_to_index(pair.bra()), config_to_index(pair.ket()))
}

/// How ansatz values are laid out: one entry per basis pair, or one per orbit.
#[derive(Debug, Clone)]
enum Layout {
    Pairs,
    Orbits(Arc<InvariantSpace>),
}

/// Scaled evaluation of an ansatz and, optionally, its tangent vectors.
///
/// The represented matrix is `exp(log_scale) · matrix()`.
#[derive(Debug, Clone)]
pub struct AnsatzSample {
    n_sites: usize,
    layout: Layout,
    log_scale: f64,
    peak_pair: (usize, usize),
    values: Vec<Complex64>,
    n_params: usize,
    tangents: Vec<Complex64>,
}

impl AnsatzSample {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Number of independent entries: 4^N for the plain kind, dim I_G for the invariant one.
    pub fn n_entries(&self) -> usize {
        self.values.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn has_tangents(&self) -> bool {
        !self.tangents.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Tangent row of entry `i` (one value per real parameter).
    pub fn tangent_row(&self, i: usize) -> &[Complex64] {
        &self.tangents[i * self.n_params..(i + 1) * self.n_params]
    }

    /// Number of basis pairs sharing entry `i`.
    pub fn weight(&self, i: usize) -> usize {
        match &self.layout {
            Layout::Pairs => 1,
            Layout::Orbits(space) => space.orbits().size(i),
        }
    }

    fn expand(&self, entry: impl Fn(usize) -> Complex64) -> DensityMatrix {
        let dim = basis_dim(self.n_sites);
        match &self.layout {
            Layout::Pairs => {
                DensityMatrix::from_vec(dim, (0..dim * dim).map(entry).collect()).expect("dim²")
            }
            Layout::Orbits(space) => {
                let orbits = space.orbits();
                DensityMatrix::from_vec(dim, (0..dim * dim).map(|p| entry(orbits.orbit_of(p))).collect())
                    .expect("dim²")
            }
        }
    }

    /// Scaled dense matrix.
    pub fn matrix(&self) -> DensityMatrix {
        self.expand(|i| self.values[i])
    }

    /// Scaled dense ∂ρ/∂χ_k.
    pub fn tangent_matrix(&self, k: usize) -> DensityMatrix {
        self.expand(|i| self.tangents[i * self.n_params + k])
    }

    /// Sum of a full matrix over the pairs of each entry, aligned with `values()`.
    pub fn entry_sums(&self, m: &DensityMatrix) -> Vec<Complex64> {
        let data = m.as_slice();
        match &self.layout {
            Layout::Pairs => data.to_vec(),
            Layout::Orbits(space) => {
                let orbits = space.orbits();
                (0..orbits.len())
                    .map(|o| orbits.members(o).iter().map(|&p| data[p]).sum())
                    .collect()
            }
        }
    }

    /// Real gradient-style projection: 2 Re ⟨∂ρ/∂χ_k, m⟩ for every k.
    pub fn project(&self, m: &DensityMatrix) -> Vec<f64> {
        let sums = self.entry_sums(m);
        let mut out = vec![0.0; self.n_params];
        for (i, s) in sums.iter().enumerate() {
            for (o, t) in out.iter_mut().zip(self.tangent_row(i)) {
                *o += 2.0 * (t.re * s.re + t.im * s.im);
            }
        }
        out
    }

    /// Frobenius norm² of the scaled matrix.
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) as f64 * v.norm_sqr())
            .sum()
    }
}

/// Evaluate the ansatz; `gauge_shift` multiplies every returned entry by
/// `exp(gauge_shift)` (and lowers `log_scale` to compensate).
pub fn evaluate(
    params: &RbmParameters,
    kind: &AnsatzKind,
    with_tangents: bool,
    gauge_shift: f64,
) -> Result<AnsatzSample> {
    let n = params.n_visible;
    if let AnsatzKind::Invariant(space) = kind {
        if space.group().n_sites() != n {
            return Err(Error::shape(format!("group on {n} sites"), space.group().n_sites()));
        }
    }
    let pre = Precomputed::new(params)?;
    let dim = basis_dim(n);
    let logs: Vec<Complex64> = (0..dim * dim)
        .into_par_iter()
        .map(|p| pre.log_element(p / dim, p % dim))
        .collect::<Result<_>>()?;
    let (peak, peak_re) = logs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, z)| if z.re > bv { (i, z.re) } else { (bi, bv) });
    if !peak_re.is_finite() {
        return Err(Error::NonFinite("ansatz log-amplitudes"));
    }
    let gauge = gauge_shift.exp();
    if !gauge.is_normal() {
        return Err(Error::Domain(format!("gauge shift {gauge_shift} is outside f64 range")));
    }
    let n_params = if with_tangents { params.n_real() } else { 0 };

    let pair_value = |p: usize, row: Option<&mut [Complex64]>| -> Complex64 {
        let v = (logs[p] - peak_re).exp() * gauge;
        if let Some(row) = row {
            pre.log_derivatives(p / dim, p % dim, row);
            for t in row.iter_mut() {
                *t *= v;
            }
        }
        v
    };

    let (layout, values, tangents) = match kind {
        AnsatzKind::Plain => {
            let mut tangents = vec![ZERO; dim * dim * n_params];
            let values: Vec<Complex64> = if with_tangents {
                tangents
                    .par_chunks_mut(n_params)
                    .enumerate()
                    .map(|(p, row)| pair_value(p, Some(row)))
                    .collect()
            } else {
                (0..dim * dim).into_par_iter().map(|p| pair_value(p, None)).collect()
            };
            (Layout::Pairs, values, tangents)
        }
        AnsatzKind::Invariant(space) => {
            let orbits = space.orbits();
            let n_orbits = orbits.len();
            let mut tangents = vec![ZERO; n_orbits * n_params];
            let orbit_entry = |o: usize, acc: Option<&mut [Complex64]>| -> Complex64 {
                let members = orbits.members(o);
                let inv = 1.0 / members.len() as f64;
                let mut v = ZERO;
                match acc {
                    Some(acc) => {
                        let mut row = vec![ZERO; n_params];
                        for &p in members {
                            v += pair_value(p, Some(&mut row));
                            for (a, r) in acc.iter_mut().zip(&row) {
                                *a += r;
                            }
                        }
                        for a in acc.iter_mut() {
                            *a *= inv;
                        }
                    }
                    None => {
                        for &p in members {
                            v += pair_value(p, None);
                        }
                    }
                }
                v * inv
            };
            let values: Vec<Complex64> = if with_tangents {
                tangents
                    .par_chunks_mut(n_params)
                    .enumerate()
                    .map(|(o, acc)| orbit_entry(o, Some(acc)))
                    .collect()
            } else {
                (0..n_orbits).into_par_iter().map(|o| orbit_entry(o, None)).collect()
            };
            (Layout::Orbits(space.clone()), values, tangents)
        }
    };
    Ok(AnsatzSample {
        n_sites: n,
        layout,
        log_scale: peak_re - gauge_shift,
        peak_pair: (peak / dim, peak % dim),
        values,
        n_params,
        tangents,
    })
}

fn unscaled(sample: &AnsatzSample) -> Result<Complex64> {
    if sample.log_scale > MAX_LOG {
        return Err(Error::Overflow {
            bra: sample.peak_pair.0,
            ket: sample.peak_pair.1,
            log_modulus: sample.log_scale,
        });
    }
    Ok(Complex64::new(sample.log_scale.exp(), 0.0))
}

/// Unscaled ansatz matrix. Fails with [`Error::Overflow`] when an entry exceeds f64 range.
pub fn dense_matrix(params: &RbmParameters, kind: &AnsatzKind) -> Result<DensityMatrix> {
    let sample = evaluate(params, kind, false, 0.0)?;
    let scale = unscaled(&sample)?;
    let mut m = sample.matrix();
    m.scale_mut(scale);
    Ok(m)
}

/// Unscaled ∂ρ/∂χ_k for every real slot k.
pub fn tangent_vectors(params: &RbmParameters, kind: &AnsatzKind) -> Result<Vec<DensityMatrix>> {
    let sample = evaluate(params, kind, true, 0.0)?;
    let scale = unscaled(&sample)?;
    Ok((0..sample.n_params())
        .map(|k| {
            let mut t = sample.tangent_matrix(k);
            t.scale_mut(scale);
            t
        })
        .collect())
}
