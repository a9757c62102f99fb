//! Dense reference implementations built from Kronecker products.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use olnqs::ansatz::RbmParameters;
use olnqs::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(k: usize) -> CMat {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match k {
        0 => CMat::from_row_slice(2, 2, &[z, one, one, z]),
        1 => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        2 => CMat::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => unreachable!(),
    }
}

/// |↓⟩⟨↑| with basis state 0 = up.
pub fn lowering() -> CMat {
    let z = c(0.0, 0.0);
    CMat::from_row_slice(2, 2, &[z, z, c(1.0, 0.0), z])
}

/// `op` acting on `site` (site 0 is the leftmost tensor factor).
pub fn site_op(op: &CMat, site: usize, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for j in 0..n {
        let f = if j == site { op.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

pub fn dense_hamiltonian(n: usize, jc: [f64; 3], b: [f64; 3]) -> CMat {
    let d = 1 << n;
    let mut h = CMat::zeros(d, d);
    for i in 0..n {
        let j = (i + 1) % n;
        for k in 0..3 {
            let p = pauli(k);
            h += site_op(&p, i, n) * site_op(&p, j, n) * c(jc[k], 0.0);
            h += site_op(&p, i, n) * c(b[k], 0.0);
        }
    }
    h
}

/// Superoperator on row-major vec(ρ), where vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
pub fn dense_liouvillian(n: usize, jc: [f64; 3], b: [f64; 3], gamma: f64) -> CMat {
    let d = 1 << n;
    let id = CMat::identity(d, d);
    let h = dense_hamiltonian(n, jc, b);
    let mut m = (h.kronecker(&id) - id.kronecker(&h.transpose())) * c(0.0, -1.0);
    for j in 0..n {
        let l = site_op(&lowering(), j, n);
        let ldl = l.adjoint() * &l;
        let term = l.kronecker(&l.conjugate())
            - (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * c(0.5, 0.0);
        m += term * c(gamma, 0.0);
    }
    m
}

pub fn to_cmat(rho: &DensityMatrix) -> CMat {
    let d = rho.dim();
    CMat::from_row_slice(d, d, rho.as_slice())
}

pub fn from_cmat(m: &CMat) -> DensityMatrix {
    DensityMatrix::from_fn(m.nrows(), |r, col| m[(r, col)])
}

pub fn vec_row_major(rho: &DensityMatrix) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub fn unvec(v: &nalgebra::DVector<Complex64>, d: usize) -> DensityMatrix {
    DensityMatrix::from_vec(d, v.as_slice().to_vec()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_model(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3], f64) {
    let mut v = || rng.random_range(-1.5..1.5);
    let j = [v(), v(), v()];
    let b = [v(), v(), v()];
    let gamma = 0.3 + rng.random_range(0.0..1.0);
    (j, b, gamma)
}

/// Spin value (+1 up, −1 down) of `site` in basis state `s`; site 0 is the most significant bit.
pub fn spin(s: usize, site: usize, n: usize) -> f64 {
    if s >> (n - 1 - site) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Direct product-of-cosh evaluation of the plain RBM density matrix.
pub fn rbm_direct(p: &RbmParameters) -> DensityMatrix {
    let n = p.n_visible();
    let (m, l) = (p.n_hidden(), p.n_mixing());
    let d = 1 << n;
    DensityMatrix::from_fn(d, |s, e| {
        let sv: Vec<f64> = (0..n).map(|j| spin(s, j, n)).collect();
        let ev: Vec<f64> = (0..n).map(|j| spin(e, j, n)).collect();
        let mut log = c(8f64.ln(), 0.0);
        for j in 0..n {
            log += p.a()[j] * sv[j] + p.a()[j].conj() * ev[j];
        }
        let mut prod = c(1.0, 0.0);
        for li in 0..l {
            let mut arg = p.c()[li];
            for i in 0..n {
                arg += p.w()[li * n + i] * sv[i] + p.w()[li * n + i].conj() * ev[i];
            }
            prod *= arg.cosh();
        }
        for mi in 0..m {
            let mut u = p.b()[mi];
            let mut v = p.b()[mi].conj();
            for i in 0..n {
                u += p.x()[mi * n + i] * sv[i];
                v += p.x()[mi * n + i].conj() * ev[i];
            }
            prod *= u.cosh() * v.cosh();
        }
        log.exp() * prod
    })
}

/// Parameters drawn uniformly from [−scale, scale] in every real slot.
pub fn random_params(n: usize, alpha: f64, hermitian_c: bool, scale: f64, seed: u64) -> RbmParameters {
    let mut p = RbmParameters::random(n, alpha, alpha, hermitian_c, seed).unwrap();
    let mut r = rng(seed ^ 0xabcd);
    let chi: Vec<f64> = (0..p.n_real()).map(|_| r.random_range(-scale..scale)).collect();
    p.set_real(&chi).unwrap();
    p
}

pub fn max_abs_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
