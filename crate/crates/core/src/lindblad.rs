//! Dissipative XYZ chain: Hamiltonian, Liouvillian, adjoint Liouvillian and the
//! RK4 reference integrator.
//!
//! The generator is
//!
//! ```text
//! L[ρ] = -i[H, ρ] + γ Σ_j (σ⁻_j ρ σ⁺_j - ½{σ⁺_j σ⁻_j, ρ})
//! H    = Σ_i Σ_k (J_k σ^k_i σ^k_{i+1} + B_k σ^k_i)      (periodic, σ_{N+1} = σ_1)
//! ```
//!
//! with σ⁻ = |↓⟩⟨↑|. Both superoperators are applied entry by entry using the
//! basis index arithmetic of [`crate::hilbert`]; no 4^N × 4^N matrix is formed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{basis_dim, site_mask, spin_at, up_count, MAX_SITES};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Rows below this dimension are processed serially.
const PAR_MIN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    n_sites: usize,
    coupling: [f64; 3],
    field: [f64; 3],
    gamma: f64,
}

impl LindbladModel {
    pub fn new(n_sites: usize, coupling: [f64; 3], field: [f64; 3], gamma: f64) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n_sites) {
            return Err(Error::Domain(format!("chain length {n_sites} outside 2..={MAX_SITES}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("decay rate must be positive, got {gamma}")));
        }
        if coupling.iter().chain(&field).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("model couplings"));
        }
        Ok(Self {
            n_sites,
            coupling,
            field,
            gamma,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// (J_x, J_y, J_z)
    pub fn coupling(&self) -> [f64; 3] {
        self.coupling
    }

    /// (B_x, B_y, B_z)
    pub fn field(&self) -> [f64; 3] {
        self.field
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        basis_dim(self.n_sites)
    }

    pub fn liouvillian(&self) -> Liouvillian {
        Liouvillian::new(self.n_sites, xyz_hamiltonian(self), self.gamma)
            .expect("xyz Hamiltonian is Hermitian by construction")
    }
}

/// Row-compressed complex operator on the spin basis.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    /// Build from the action on basis kets: `column(c)` lists `(r, ⟨r|A|c⟩)`.
    /// Repeated rows are summed and exact zeros dropped.
    pub fn from_columns(dim: usize, mut column: impl FnMut(usize, &mut Vec<(usize, Complex64)>)) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        let mut buf = Vec::new();
        for c in 0..dim {
            buf.clear();
            column(c, &mut buf);
            for &(r, v) in &buf {
                rows[r].push((c, v));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != ZERO);
            *row = merged;
        }
        Self { dim, rows }
    }

    pub fn from_dense(m: &DensityMatrix) -> Self {
        let dim = m.dim();
        let rows = (0..dim)
            .map(|r| {
                (0..dim)
                    .filter(|&c| m[(r, c)] != ZERO)
                    .map(|c| (c, m[(r, c)]))
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    pub fn to_dense(&self) -> DensityMatrix {
        let mut m = DensityMatrix::zeros(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex64)] {
        &self.rows[r]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.to_dense().hermiticity_residual() <= tol
    }
}

/// Sparse form of the periodic XYZ Hamiltonian with uniform field.
pub fn xyz_hamiltonian(model: &LindbladModel) -> SparseOperator {
    let n = model.n_sites;
    let [jx, jy, jz] = model.coupling;
    let [bx, by, bz] = model.field;
    // σ^y|s⟩ = p(s)|s̄⟩ with p = i for up, -i for down
    let y_phase = |s: i8| if s == 1 { I } else { -I };
    SparseOperator::from_columns(basis_dim(n), |c, out| {
        let mut diag = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            let (si, sj) = (spin_at(c, i, n), spin_at(c, j, n));
            let flipped = c ^ site_mask(i, n) ^ site_mask(j, n);
            diag += jz * f64::from(si * sj) + bz * f64::from(si);
            out.push((flipped, Complex64::new(jx, 0.0) + jy * y_phase(si) * y_phase(sj)));
            let single = c ^ site_mask(i, n);
            out.push((single, Complex64::new(bx, 0.0) + by * y_phase(si)));
        }
        out.push((c, Complex64::new(diag, 0.0)));
    })
}

/// Dense Hamiltonian matrix in the σ_z basis.
pub fn build_hamiltonian(model: &LindbladModel) -> DensityMatrix {
    xyz_hamiltonian(model).to_dense()
}

/// Precomputed generator for repeated application.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n_sites: usize,
    hamiltonian: SparseOperator,
    gamma: f64,
    up: Vec<u32>,
}

impl Liouvillian {
    /// `n_sites` may be 1 here; the chain-length restriction lives in [`LindbladModel`].
    pub fn new(n_sites: usize, hamiltonian: SparseOperator, gamma: f64) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Domain(format!("{n_sites} sites")));
        }
        let dim = basis_dim(n_sites);
        if hamiltonian.dim() != dim {
            return Err(Error::shape(dim, hamiltonian.dim()));
        }
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::Domain("Hamiltonian is not Hermitian".into()));
        }
        Ok(Self {
            n_sites,
            hamiltonian,
            gamma,
            up: (0..dim).map(|s| up_count(s, n_sites)).collect(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        basis_dim(self.n_sites)
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.check_dim(self.dim())?;
        let mut out = DensityMatrix::zeros(self.dim());
        self.apply_into(rho, &mut out, false);
        Ok(out)
    }

    pub fn apply_adjoint(&self, a: &DensityMatrix) -> Result<DensityMatrix> {
        a.check_dim(self.dim())?;
        let mut out = DensityMatrix::zeros(self.dim());
        self.apply_into(a, &mut out, true);
        Ok(out)
    }

    fn apply_into(&self, rho: &DensityMatrix, out: &mut DensityMatrix, adjoint: bool) {
        let dim = self.dim();
        let src = rho.as_slice();
        let row_op = |(r, dst): (usize, &mut [Complex64])| self.fill_row(src, r, dst, adjoint);
        if dim >= PAR_MIN_DIM {
            out.as_mut_slice().par_chunks_mut(dim).enumerate().for_each(row_op);
        } else {
            out.as_mut_slice().chunks_mut(dim).enumerate().for_each(row_op);
        }
    }

    fn fill_row(&self, src: &[Complex64], r: usize, dst: &mut [Complex64], adjoint: bool) {
        let n = self.n_sites;
        let dim = dst.len();
        let gamma = self.gamma;
        // -i[H,ρ] for L, +i[H,A] for L†
        let phase = if adjoint { I } else { -I };
        let h_row = self.hamiltonian.row(r);
        for (c, slot) in dst.iter_mut().enumerate() {
            let mut left = ZERO;
            for &(k, h) in h_row {
                left += h * src[k * dim + c];
            }
            // (ρH)[r,c] = Σ_k ρ[r,k] conj(H[c,k]) for Hermitian H
            let mut right = ZERO;
            for &(k, h) in self.hamiltonian.row(c) {
                right += src[r * dim + k] * h.conj();
            }
            let mut acc = phase * (left - right);

            let anti = 0.5 * gamma * f64::from(self.up[r] + self.up[c]);
            acc -= anti * src[r * dim + c];

            // L: jump term fills (↓,↓) from (↑,↑); L†: fills (↑,↑) from (↓,↓)
            let mut jump = ZERO;
            for j in 0..n {
                let m = site_mask(j, n);
                let (rb, cb) = (r & m != 0, c & m != 0);
                if adjoint {
                    if !rb && !cb {
                        jump += src[(r | m) * dim + (c | m)];
                    }
                } else if rb && cb {
                    jump += src[(r & !m) * dim + (c & !m)];
                }
            }
            *slot = acc + gamma * jump;
        }
    }
}

pub fn apply_liouvillian(rho: &DensityMatrix, model: &LindbladModel) -> Result<DensityMatrix> {
    model.liouvillian().apply(rho)
}

pub fn apply_adjoint_liouvillian(a: &DensityMatrix, model: &LindbladModel) -> Result<DensityMatrix> {
    model.liouvillian().apply_adjoint(a)
}

/// One classical fourth-order Runge-Kutta step of dρ/dt = L[ρ].
pub fn rk4_step(rho: &DensityMatrix, dt: f64, liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let half = Complex64::new(0.5 * dt, 0.0);
    let k1 = liouvillian.apply(rho)?;
    let mut probe = rho.clone();
    probe.axpy(half, &k1);
    let k2 = liouvillian.apply(&probe)?;
    probe.clone_from(rho);
    probe.axpy(half, &k2);
    let k3 = liouvillian.apply(&probe)?;
    probe.clone_from(rho);
    probe.axpy(Complex64::new(dt, 0.0), &k3);
    let k4 = liouvillian.apply(&probe)?;

    let mut next = rho.clone();
    let w = dt / 6.0;
    next.axpy(Complex64::new(w, 0.0), &k1);
    next.axpy(Complex64::new(2.0 * w, 0.0), &k2);
    next.axpy(Complex64::new(2.0 * w, 0.0), &k3);
    next.axpy(Complex64::new(w, 0.0), &k4);
    if !next.is_finite() {
        return Err(Error::NonFinite("RK4 state"));
    }
    Ok(next)
}

/// Integrate `n_steps` RK4 steps, calling `observer(n, n·dt, ρ_n)` after each one.
pub fn evolve_rk(
    rho0: &DensityMatrix,
    dt: f64,
    n_steps: usize,
    liouvillian: &Liouvillian,
    mut observer: impl FnMut(usize, f64, &DensityMatrix),
) -> Result<DensityMatrix> {
    let mut rho = rho0.clone();
    for n in 1..=n_steps {
        rho = rk4_step(&rho, dt, liouvillian)?;
        observer(n, n as f64 * dt, &rho);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn single_site(gamma: f64) -> Liouvillian {
        Liouvillian::new(1, SparseOperator::zeros(2), gamma).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(LindbladModel::new(1, [0.0; 3], [0.0; 3], 1.0).is_err());
        assert!(LindbladModel::new(3, [0.0; 3], [0.0; 3], 0.0).is_err());
        assert!(LindbladModel::new(3, [f64::NAN, 0.0, 0.0], [0.0; 3], 1.0).is_err());
    }

    #[test]
    fn zeeman_hamiltonian() {
        let m = LindbladModel::new(2, [0.0; 3], [0.0, 0.0, 1.0], 1.0).unwrap();
        let h = build_hamiltonian(&m);
        let expected = [2.0, 0.0, 0.0, -2.0];
        for r in 0..4 {
            for cc in 0..4 {
                let want = if r == cc { expected[r] } else { 0.0 };
                assert_eq!(h[(r, cc)], c(want));
            }
        }
    }

    #[test]
    fn two_site_bond_counted_twice() {
        let m = LindbladModel::new(2, [1.0, 0.0, 0.0], [0.0; 3], 1.0).unwrap();
        let h = build_hamiltonian(&m);
        // 2 σx⊗σx: anti-diagonal of 2s
        for r in 0..4 {
            for cc in 0..4 {
                let want = if r + cc == 3 { 2.0 } else { 0.0 };
                assert_eq!(h[(r, cc)], c(want));
            }
        }
    }

    #[test]
    fn hamiltonian_exactly_hermitian() {
        let m = LindbladModel::new(5, [1.4, 2.0, 1.0], [-1.0, 1.0, 0.1], 1.0).unwrap();
        let h = build_hamiltonian(&m);
        assert_eq!(h.hermiticity_residual(), 0.0);
    }

    #[test]
    fn single_site_decay() {
        let l = single_site(1.0);
        let up = DensityMatrix::projector(2, 0, 0);
        let out = l.apply(&up).unwrap();
        assert_eq!(out[(1, 1)], c(1.0));
        assert_eq!(out[(0, 0)], c(-1.0));
        assert_eq!(out[(0, 1)], c(0.0));
        assert_eq!(out[(1, 0)], c(0.0));
    }

    #[test]
    fn single_site_adjoint() {
        let l = single_site(1.0);
        let up = DensityMatrix::projector(2, 0, 0);
        let out = l.apply_adjoint(&up).unwrap();
        assert_eq!(out, &up * -1.0);
    }

    #[test]
    fn all_down_is_dark() {
        let m = LindbladModel::new(3, [0.0; 3], [0.0; 3], 1.0).unwrap();
        let d = m.dim();
        let rho = DensityMatrix::projector(d, d - 1, d - 1);
        let out = apply_liouvillian(&rho, &m).unwrap();
        assert_eq!(out.frobenius_norm(), 0.0);
    }

    #[test]
    fn adjoint_annihilates_identity() {
        let m = LindbladModel::new(4, [1.3, 0.1, 1.0], [0.7, 0.3, 0.1], 1.0).unwrap();
        let out = apply_adjoint_liouvillian(&DensityMatrix::identity(m.dim()), &m).unwrap();
        assert!(out.frobenius_norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let m = LindbladModel::new(3, [1.0; 3], [0.0; 3], 1.0).unwrap();
        let bad = DensityMatrix::zeros(4);
        assert!(matches!(apply_liouvillian(&bad, &m), Err(Error::Shape { .. })));
        assert!(matches!(apply_adjoint_liouvillian(&bad, &m), Err(Error::Shape { .. })));
    }

    #[test]
    fn adjoint_pairing() {
        let m = LindbladModel::new(3, [1.4, 2.0, 1.0], [-1.0, 1.0, 0.1], 1.0).unwrap();
        let l = m.liouvillian();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = DensityMatrix::random(m.dim(), &mut rng);
            let b = DensityMatrix::random(m.dim(), &mut rng);
            let lhs = l.apply_adjoint(&a).unwrap().inner(&b);
            let rhs = a.inner(&l.apply(&b).unwrap());
            assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn trace_annihilation_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..=6 {
            let m = LindbladModel::new(n, [1.1, 0.5, 1.0], [-0.6, 0.2, 0.1], 1.0).unwrap();
            let l = m.liouvillian();
            let rho = DensityMatrix::random(m.dim(), &mut rng);
            let out = l.apply(&rho).unwrap();
            assert!(out.trace().norm() <= 1e-12 * rho.frobenius_norm());
            let lhs = out.adjoint();
            let rhs = l.apply(&rho.adjoint()).unwrap();
            assert!((&lhs - &rhs).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn rk4_fixed_point() {
        let m = LindbladModel::new(3, [0.0; 3], [0.0; 3], 1.0).unwrap();
        let d = m.dim();
        let rho = DensityMatrix::projector(d, d - 1, d - 1);
        let next = rk4_step(&rho, 0.01, &m.liouvillian()).unwrap();
        assert_eq!(next, rho);
    }

    #[test]
    fn rk4_rejects_bad_step() {
        let m = LindbladModel::new(2, [0.0; 3], [0.0; 3], 1.0).unwrap();
        assert!(rk4_step(&DensityMatrix::maximally_mixed(2), 0.0, &m.liouvillian()).is_err());
    }

    #[test]
    fn rk4_single_site_exponential_decay() {
        let l = single_site(1.0);
        let rho0 = DensityMatrix::projector(2, 0, 0);
        let mut worst: f64 = 0.0;
        let fin = evolve_rk(&rho0, 1e-2, 500, &l, |_, t, rho| {
            worst = worst.max((rho[(0, 0)].re - (-t).exp()).abs());
            worst = worst.max((rho[(1, 1)].re - (1.0 - (-t).exp())).abs());
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
        assert!((fin.trace() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn evolve_zero_steps_and_call_count() {
        let m = LindbladModel::new(2, [1.0, 0.5, 0.2], [0.1, 0.0, 0.3], 1.0).unwrap();
        let l = m.liouvillian();
        let rho0 = DensityMatrix::maximally_mixed(2);
        let mut calls = 0;
        let same = evolve_rk(&rho0, 0.01, 0, &l, |_, _, _| calls += 1).unwrap();
        assert_eq!(same, rho0);
        assert_eq!(calls, 0);
        let mut last_t = 0.0;
        evolve_rk(&rho0, 0.01, 37, &l, |n, t, _| {
            calls += 1;
            assert_eq!(n, calls);
            last_t = t;
        })
        .unwrap();
        assert_eq!(calls, 37);
        assert!((last_t - 0.37).abs() < 1e-15);
    }

    #[test]
    fn rk4_preserves_trace() {
        let m = LindbladModel::new(4, [1.3, 0.1, 1.0], [0.7, 0.3, 0.1], 1.0).unwrap();
        let l = m.liouvillian();
        let mut rho = DensityMatrix::maximally_mixed(4);
        for _ in 0..50 {
            rho = rk4_step(&rho, 1e-2, &l).unwrap();
            assert!((rho.trace() - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rk4_order_four() {
        let m = LindbladModel::new(2, [1.4, 2.0, 1.0], [-1.0, 1.0, 0.1], 1.0).unwrap();
        let l = m.liouvillian();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho0 = DensityMatrix::random_hermitian(4, &mut rng);
        // reference: many tiny steps to the same final time
        let t = 0.2;
        let reference = evolve_rk(&rho0, t / 2000.0, 2000, &l, |_, _, _| {}).unwrap();
        let err = |h: f64| {
            let one = rk4_step(&rho0, h, &l).unwrap();
            let fine = evolve_rk(&rho0, h / 100.0, 100, &l, |_, _, _| {}).unwrap();
            (&one - &fine).frobenius_norm()
        };
        let (e1, e2) = (err(t), err(t / 2.0));
        // local error O(h^5): ratio ~32; global order 4 checked below
        let local = (e1 / e2).log2();
        assert!(local > 4.5 && local < 5.5, "local exponent {local}");

        let global = |steps: usize| {
            let out = evolve_rk(&rho0, t / steps as f64, steps, &l, |_, _, _| {}).unwrap();
            (&out - &reference).frobenius_norm()
        };
        let order = (global(4) / global(8)).log2();
        assert!((3.7..=4.3).contains(&order), "global order {order}");
    }
}
