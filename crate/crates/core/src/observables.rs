//! Physical quantities: magnetization, trajectory distances and symmetry residuals.
//!
//! Every function here is invariant under a global rescaling of ρ.

use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{basis_dim, site_mask, spin_at};
use crate::symmetry::SymmetryGroup;

const MIN_TRACE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Magnetization {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Magnetization {
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn trace_normalize(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let tr = rho.trace();
    if tr.norm() < MIN_TRACE {
        return Err(Error::DegenerateTrace(tr.norm()));
    }
    Ok(rho * tr.inv())
}

fn n_sites_of(rho: &DensityMatrix) -> Result<usize> {
    let dim = rho.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::shape("2^N rows", dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Complex ⟨σ^k_j⟩ for every site j, trace-normalized.
fn site_expectations(rho: &DensityMatrix) -> Result<Vec<[Complex64; 3]>> {
    let n = n_sites_of(rho)?;
    let tr = rho.trace();
    if tr.norm() < MIN_TRACE {
        return Err(Error::DegenerateTrace(tr.norm()));
    }
    let dim = basis_dim(n);
    let i = Complex64::new(0.0, 1.0);
    let out = (0..n)
        .map(|j| {
            let m = site_mask(j, n);
            let (mut x, mut y, mut z) = (Complex64::default(), Complex64::default(), Complex64::default());
            for b in 0..dim {
                let flipped = b ^ m;
                // Tr[σ^k ρ] = Σ_b ⟨a|σ^k|b⟩ ρ[b, a]
                x += rho[(b, flipped)];
                let up = spin_at(b, j, n) == 1;
                y += if up { i } else { -i } * rho[(b, flipped)];
                z += f64::from(spin_at(b, j, n)) * rho[(b, b)];
            }
            [x / tr, y / tr, z / tr]
        })
        .collect();
    Ok(out)
}

/// Site-resolved ⟨σ^x_j⟩, ⟨σ^y_j⟩, ⟨σ^z_j⟩ (real parts).
pub fn site_magnetization(rho: &DensityMatrix) -> Result<Vec<Magnetization>> {
    Ok(site_expectations(rho)?
        .into_iter()
        .map(|[x, y, z]| Magnetization {
            x: x.re,
            y: y.re,
            z: z.re,
        })
        .collect())
}

/// (1/N) Σ_j Tr[σ^k_j ρ] / Tr ρ; returns the magnetization and the largest
/// imaginary residue seen, which vanishes for Hermitian ρ.
pub fn mean_magnetization_with_residue(rho: &DensityMatrix) -> Result<(Magnetization, f64)> {
    let sites = site_expectations(rho)?;
    let n = sites.len() as f64;
    let mut sum = [Complex64::default(); 3];
    for s in &sites {
        for k in 0..3 {
            sum[k] += s[k];
        }
    }
    let residue = sum.iter().map(|z| (z.im / n).abs()).fold(0.0, f64::max);
    Ok((
        Magnetization {
            x: sum[0].re / n,
            y: sum[1].re / n,
            z: sum[2].re / n,
        },
        residue,
    ))
}

pub fn mean_magnetization(rho: &DensityMatrix) -> Result<Magnetization> {
    Ok(mean_magnetization_with_residue(rho)?.0)
}

/// Frobenius distance of the trace-normalized operands, with its natural log.
pub fn frobenius_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::shape(a.dim(), b.dim()));
    }
    let d = (&trace_normalize(a)? - &trace_normalize(b)?).frobenius_norm();
    Ok((d, d.ln()))
}

/// max_g ‖g ρ g† − ρ‖_F / ‖ρ‖_F.
pub fn symmetry_residual(rho: &DensityMatrix, group: &SymmetryGroup) -> f64 {
    let norm = rho.frobenius_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let dim = rho.dim();
    let mut worst: f64 = 0.0;
    for map in group.index_maps() {
        let mut acc = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                acc += (rho[(map[a], map[b])] - rho[(a, b)]).norm_sqr();
            }
        }
        worst = worst.max(acc.sqrt() / norm);
    }
    worst
}
