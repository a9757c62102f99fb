//! Dense complex square matrices in the row-major vectorization of [`crate::hilbert`].

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::basis_dim;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// I / 2^N.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let dim = basis_dim(n_sites);
        let mut m = Self::identity(dim);
        m.scale_mut(Complex64::new(1.0 / dim as f64, 0.0));
        m
    }

    /// |bra⟩⟨ket| for raw basis indices.
    pub fn projector(dim: usize, bra: usize, ket: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(bra, ket)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::shape(format!("{} entries", dim * dim), data.len()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Entries with independent standard-uniform real and imaginary parts in [-1, 1].
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        Self::from_fn(dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// (A + A†)/2 of a random matrix.
    pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let a = Self::random(dim, rng);
        let mut h = &a + &a.adjoint();
        h.scale_mut(Complex64::new(0.5, 0.0));
        h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major vectorization.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Frobenius inner product ⟨A, B⟩ = Σ conj(A) B.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// ‖ρ − ρ†‖_F.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += (self[(r, c)] - self[(c, r)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn scale_mut(&mut self, s: Complex64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Dense product; used for small checks only.
    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        out
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::shape(format!("{dim}x{dim}"), format!("{0}x{0}", self.dim)));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for DensityMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &DensityMatrix {
    type Output = DensityMatrix;
    fn add(self, rhs: &DensityMatrix) -> DensityMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&DensityMatrix> for DensityMatrix {
    fn add_assign(&mut self, rhs: &DensityMatrix) {
        self.axpy(Complex64::new(1.0, 0.0), rhs);
    }
}

impl Sub for &DensityMatrix {
    type Output = DensityMatrix;
    fn sub(self, rhs: &DensityMatrix) -> DensityMatrix {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), rhs);
        out
    }
}

impl Mul<Complex64> for &DensityMatrix {
    type Output = DensityMatrix;
    fn mul(self, s: Complex64) -> DensityMatrix {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }
}

impl Mul<f64> for &DensityMatrix {
    type Output = DensityMatrix;
    fn mul(self, s: f64) -> DensityMatrix {
        self * Complex64::new(s, 0.0)
    }
}
