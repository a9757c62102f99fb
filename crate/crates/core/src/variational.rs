//! Optimization loops for the ansatz parameters.
//!
//! The primary scheme is the pseudoinverse TDVP update
//! `χ ← χ + Δt(𝒩) S⁺f`, with `S_ij = 2 Re⟨∂_iρ, ∂_jρ⟩`, `f_i = 2 Re⟨∂_iρ, L[ρ]⟩`,
//! `𝒩 = ‖S⁺f‖₂` and the step clamp `Δt(𝒩) = Δt/𝒩` for `𝒩 ≥ 1`.
//! Steepest descent on the two residual costs, and its S-preconditioned
//! variant, are available as alternatives.

use nalgebra::{DMatrix, DVector};

use crate::ansatz::{evaluate, AnsatzKind, AnsatzSample, RbmParameters};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::basis_dim;
use crate::lindblad::Liouvillian;
use crate::observables::{mean_magnetization, symmetry_residual, Magnetization};

pub const DEFAULT_RCOND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct VariationalState {
    pub params: RbmParameters,
    pub kind: AnsatzKind,
    pub iteration: usize,
    /// Accumulated physical time in units of 1/γ.
    pub time: f64,
}

impl VariationalState {
    pub fn new(params: RbmParameters, kind: AnsatzKind) -> Self {
        Self {
            params,
            kind,
            iteration: 0,
            time: 0.0,
        }
    }
}

/// Telemetry for one iteration. Observables describe the state the step was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub time: f64,
    pub step_norm: f64,
    pub dt_eff: f64,
    pub cost: f64,
    pub magnetization: Magnetization,
    pub ln_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdvpSettings {
    pub dt_base: f64,
    pub rcond: f64,
    /// Extra log-scale injected into the ansatz evaluation. Zero in production;
    /// every report field is independent of it.
    pub gauge_shift: f64,
}

impl Default for TdvpSettings {
    fn default() -> Self {
        Self {
            dt_base: 1e-2,
            rcond: DEFAULT_RCOND,
            gauge_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// ‖L[ρ]‖² / ‖ρ‖²
    Normalized,
    /// ‖L[ρ]‖²
    Unnormalized,
}

fn real_part_dot(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// S_ij = ⟨O_i ρ, O_j ρ⟩ + ⟨O_j ρ, O_i ρ⟩ from dense tangent matrices.
pub fn assemble_s(tangents: &[DensityMatrix], rho: &DensityMatrix) -> Result<DMatrix<f64>> {
    for t in tangents {
        t.check_dim(rho.dim())?;
    }
    let p = tangents.len();
    let mut s = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = 2.0 * real_part_dot(tangents[i].as_slice(), tangents[j].as_slice());
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// f_i = 2 Re⟨O_i ρ, L[ρ]⟩ from dense tangent matrices.
pub fn assemble_f(tangents: &[DensityMatrix], l_rho: &DensityMatrix) -> Result<DVector<f64>> {
    for t in tangents {
        t.check_dim(l_rho.dim())?;
    }
    Ok(DVector::from_iterator(
        tangents.len(),
        tangents.iter().map(|t| 2.0 * real_part_dot(t.as_slice(), l_rho.as_slice())),
    ))
}

/// Real design matrix A = √2 [√w Re T; √w Im T] with S = AᵀA.
fn design_matrix(sample: &AnsatzSample) -> DMatrix<f64> {
    let rows = sample.n_entries();
    let p = sample.n_params();
    let mut a = DMatrix::<f64>::zeros(2 * rows, p);
    for i in 0..rows {
        let w = (2.0 * sample.weight(i) as f64).sqrt();
        for (k, t) in sample.tangent_row(i).iter().enumerate() {
            a[(i, k)] = w * t.re;
            a[(rows + i, k)] = w * t.im;
        }
    }
    a
}

/// S from a sample, using orbit weights for the invariant layout.
pub fn sample_s(sample: &AnsatzSample) -> DMatrix<f64> {
    let a = design_matrix(sample);
    a.tr_mul(&a)
}

/// Least-squares form (A, b) of the TDVP system: S = AᵀA and f = Aᵀb,
/// where `m` is the full matrix whose projection gives f.
pub fn tangent_system(sample: &AnsatzSample, m: &DensityMatrix) -> Result<(DMatrix<f64>, DVector<f64>)> {
    m.check_dim(basis_dim(sample.n_sites()))?;
    let rows = sample.n_entries();
    let sums = sample.entry_sums(m);
    let mut b = DVector::zeros(2 * rows);
    for (i, z) in sums.iter().enumerate() {
        let w = sample.weight(i) as f64;
        let k = (2.0 / w).sqrt();
        b[i] = k * z.re;
        b[rows + i] = k * z.im;
    }
    Ok((design_matrix(sample), b))
}

/// Minimal-norm least-squares solution A⁺b, discarding singular values
/// σ ≤ √rcond · σ_max. In exact arithmetic this equals
/// `pseudo_solve(AᵀA, Aᵀb, rcond)`, but it never forms AᵀA and so keeps twice
/// the significant digits.
pub fn least_squares_solve(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::shape(format!("{} rows", b.len()), a.nrows()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear system"));
    }
    let p = a.ncols();
    if p == 0 || a.nrows() == 0 {
        return Ok(DVector::zeros(p));
    }
    let a_ref = faer::MatRef::from_column_major_slice(a.as_slice(), a.nrows(), p);
    let svd = a_ref
        .thin_svd()
        .map_err(|_| Error::NonFinite("singular value decomposition"))?;
    let sigma = svd.S().column_vector();
    let cutoff = rcond.sqrt() * sigma.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut coeffs = svd.U().transpose() * faer::ColRef::from_slice(b.as_slice());
    for (c, &s) in coeffs.iter_mut().zip(sigma.iter()) {
        *c = if s > cutoff && s != 0.0 { *c / s } else { 0.0 };
    }
    let z = svd.V() * coeffs;
    Ok(DVector::from_iterator(p, z.iter().copied()))
}

/// Pseudoinverse solve S⁺f for symmetric S. Spectral components with
/// |λ| ≤ `rcond · max|λ|` are discarded; for a symmetric matrix the |λ| are its
/// singular values.
pub fn pseudo_solve(s: &DMatrix<f64>, f: &DVector<f64>, rcond: f64) -> Result<DVector<f64>> {
    if s.nrows() != s.ncols() || s.nrows() != f.len() {
        return Err(Error::shape(
            format!("{0}x{0} system", f.len()),
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    if s.iter().chain(f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear system"));
    }
    if f.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let asym = (s - s.transpose()).amax();
    if asym > 1e-10 * s.amax() {
        return Err(Error::Domain(format!("pseudo_solve needs a symmetric matrix (asymmetry {asym:e})")));
    }
    let eig = s.clone().symmetric_eigen();
    let cutoff = rcond * eig.eigenvalues.amax();
    let mut coeffs = eig.eigenvectors.tr_mul(f);
    for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c = if lambda.abs() > cutoff && lambda != 0.0 { *c / lambda } else { 0.0 };
    }
    Ok(&eig.eigenvectors * coeffs)
}

/// Δt(𝒩) = Δt/𝒩 for 𝒩 ≥ 1, Δt otherwise.
pub fn adaptive_step(dt_base: f64, step_norm: f64) -> f64 {
    if step_norm >= 1.0 {
        dt_base / step_norm
    } else {
        dt_base
    }
}

pub fn cost_unnormalized(rho: &DensityMatrix, liouvillian: &Liouvillian) -> Result<f64> {
    Ok(liouvillian.apply(rho)?.frobenius_norm_sqr())
}

pub fn cost_normalized(rho: &DensityMatrix, liouvillian: &Liouvillian) -> Result<f64> {
    let norm = rho.frobenius_norm_sqr();
    if norm == 0.0 {
        return Err(Error::Domain("cost of the zero matrix".into()));
    }
    Ok(cost_unnormalized(rho, liouvillian)? / norm)
}

fn with_iteration<T>(n: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Iteration { .. } => e,
        e => Error::Iteration {
            n,
            source: Box::new(e),
        },
    })
}

/// Cost and its gradient from a sample that carries tangents.
fn sample_cost_gradient(
    sample: &AnsatzSample,
    liouvillian: &Liouvillian,
    which: CostKind,
) -> Result<(f64, Vec<f64>, DensityMatrix)> {
    let rho = sample.matrix();
    let l_rho = liouvillian.apply(&rho)?;
    let ll_rho = liouvillian.apply_adjoint(&l_rho)?;
    let residual = l_rho.frobenius_norm_sqr();
    let grad_main = sample.project(&ll_rho);
    match which {
        CostKind::Normalized => {
            let norm = sample.norm_sqr();
            if norm == 0.0 {
                return Err(Error::Domain("cost of the zero matrix".into()));
            }
            let cost = residual / norm;
            let grad_norm = sample.project(&rho);
            let grad = grad_main
                .iter()
                .zip(&grad_norm)
                .map(|(g, h)| (g - cost * h) / norm)
                .collect();
            Ok((cost, grad, rho))
        }
        CostKind::Unnormalized => {
            let scale = (2.0 * sample.log_scale()).exp();
            if !scale.is_finite() {
                return Err(Error::NonFinite("unnormalized cost scale"));
            }
            let grad = grad_main.iter().map(|g| g * scale).collect();
            Ok((residual * scale, grad, rho))
        }
    }
}

/// ∇_χ C for real χ. Only the unnormalized cost depends on the absolute scale of ρ.
pub fn cost_gradient(
    params: &RbmParameters,
    kind: &AnsatzKind,
    liouvillian: &Liouvillian,
    which: CostKind,
) -> Result<Vec<f64>> {
    let sample = evaluate(params, kind, true, 0.0)?;
    Ok(sample_cost_gradient(&sample, liouvillian, which)?.1)
}

/// Cost of the ansatz at `params`, unscaled.
pub fn ansatz_cost(
    params: &RbmParameters,
    kind: &AnsatzKind,
    liouvillian: &Liouvillian,
    which: CostKind,
) -> Result<f64> {
    let sample = evaluate(params, kind, false, 0.0)?;
    let rho = sample.matrix();
    match which {
        CostKind::Normalized => cost_normalized(&rho, liouvillian),
        CostKind::Unnormalized => {
            Ok(cost_unnormalized(&rho, liouvillian)? * (2.0 * sample.log_scale()).exp())
        }
    }
}

fn debug_check_invariance(state: &VariationalState) {
    if cfg!(debug_assertions) {
        if let AnsatzKind::Invariant(space) = &state.kind {
            if let Ok(sample) = evaluate(&state.params, &state.kind, false, 0.0) {
                let r = symmetry_residual(&sample.matrix(), space.group());
                debug_assert!(r < 1e-10, "invariant iterate lost symmetry: {r:e}");
            }
        }
    }
}

fn tdvp_iterate_full(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    settings: &TdvpSettings,
) -> Result<StepOutcome> {
    let n = state.iteration;
    with_iteration(n, (|| {
        let sample = evaluate(&state.params, &state.kind, true, settings.gauge_shift)?;
        let rho = sample.matrix();
        let l_rho = liouvillian.apply(&rho)?;
        let (a, b) = tangent_system(&sample, &l_rho)?;
        let z = least_squares_solve(&a, &b, settings.rcond)?;
        let step_norm = z.norm();
        let dt_eff = adaptive_step(settings.dt_base, step_norm);

        let cost = l_rho.frobenius_norm_sqr() / sample.norm_sqr();
        let magnetization = mean_magnetization(&rho)?;
        let mut next = state.clone();
        next.params.add_real(z.as_slice(), dt_eff)?;
        next.iteration += 1;
        next.time += dt_eff;
        debug_check_invariance(&next);
        let report = IterationReport {
            iteration: n,
            time: state.time,
            step_norm,
            dt_eff,
            cost,
            magnetization,
            ln_distance: None,
        };
        check_report(&report)?;
        Ok(StepOutcome { next, report, rho })
    })())
}

fn gradient_descent_iterate_full(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    d_nu: f64,
    which: CostKind,
) -> Result<StepOutcome> {
    let n = state.iteration;
    with_iteration(n, (|| {
        let sample = evaluate(&state.params, &state.kind, true, 0.0)?;
        let (cost, grad, rho) = sample_cost_gradient(&sample, liouvillian, which)?;
        let step_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut next = state.clone();
        next.params.add_real(&grad, -d_nu)?;
        next.iteration += 1;
        next.time += d_nu;
        debug_check_invariance(&next);
        let report = IterationReport {
            iteration: n,
            time: state.time,
            step_norm,
            dt_eff: d_nu,
            cost,
            magnetization: mean_magnetization(&rho)?,
            ln_distance: None,
        };
        check_report(&report)?;
        Ok(StepOutcome { next, report, rho })
    })())
}

fn natural_gradient_iterate_full(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    settings: &TdvpSettings,
    which: CostKind,
) -> Result<StepOutcome> {
    let n = state.iteration;
    with_iteration(n, (|| {
        let sample = evaluate(&state.params, &state.kind, true, settings.gauge_shift)?;
        let (cost, grad, rho) = sample_cost_gradient(&sample, liouvillian, which)?;
        let mut s = sample_s(&sample);
        if which == CostKind::Normalized {
            // bring S to the same scale as ∇C
            s /= sample.norm_sqr();
        } else {
            s *= (2.0 * sample.log_scale()).exp();
        }
        let z = pseudo_solve(&s, &DVector::from_vec(grad), settings.rcond)?;
        let step_norm = z.norm();
        let dt_eff = adaptive_step(settings.dt_base, step_norm);
        let mut next = state.clone();
        next.params.add_real(z.as_slice(), -dt_eff)?;
        next.iteration += 1;
        next.time += dt_eff;
        debug_check_invariance(&next);
        let report = IterationReport {
            iteration: n,
            time: state.time,
            step_norm,
            dt_eff,
            cost,
            magnetization: mean_magnetization(&rho)?,
            ln_distance: None,
        };
        check_report(&report)?;
        Ok(StepOutcome { next, report, rho })
    })())
}

/// Result of one iteration. `rho` is the evaluated state the report describes,
/// up to a positive scale.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: VariationalState,
    pub report: IterationReport,
    pub rho: DensityMatrix,
}

/// One pseudoinverse TDVP iteration.
pub fn tdvp_iterate(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    settings: &TdvpSettings,
) -> Result<(VariationalState, IterationReport)> {
    tdvp_iterate_full(state, liouvillian, settings).map(|o| (o.next, o.report))
}

/// One steepest-descent step χ ← χ − dν ∇C.
pub fn gradient_descent_iterate(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    d_nu: f64,
    which: CostKind,
) -> Result<(VariationalState, IterationReport)> {
    gradient_descent_iterate_full(state, liouvillian, d_nu, which).map(|o| (o.next, o.report))
}

/// S-preconditioned descent: χ ← χ − Δt(𝒩) S⁺∇C with 𝒩 = ‖S⁺∇C‖.
pub fn natural_gradient_iterate(
    state: &VariationalState,
    liouvillian: &Liouvillian,
    settings: &TdvpSettings,
    which: CostKind,
) -> Result<(VariationalState, IterationReport)> {
    natural_gradient_iterate_full(state, liouvillian, settings, which).map(|o| (o.next, o.report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Tdvp(TdvpSettings),
    GradientDescent { d_nu: f64, cost: CostKind },
    NaturalGradient { settings: TdvpSettings, cost: CostKind },
}

impl Scheme {
    pub fn step(&self, state: &VariationalState, liouvillian: &Liouvillian) -> Result<StepOutcome> {
        match *self {
            Scheme::Tdvp(ref s) => tdvp_iterate_full(state, liouvillian, s),
            Scheme::GradientDescent { d_nu, cost } => {
                gradient_descent_iterate_full(state, liouvillian, d_nu, cost)
            }
            Scheme::NaturalGradient { ref settings, cost } => {
                natural_gradient_iterate_full(state, liouvillian, settings, cost)
            }
        }
    }
}

fn check_report(r: &IterationReport) -> Result<()> {
    let fields = [r.time, r.step_norm, r.dt_eff, r.cost, r.magnetization.x, r.magnetization.y, r.magnetization.z];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iteration report"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_step_branches() {
        assert_eq!(adaptive_step(0.01, 2.0), 0.005);
        assert_eq!(adaptive_step(0.01, 0.5), 0.01);
        assert_eq!(adaptive_step(0.01, 1.0), 0.01);
        assert_eq!(adaptive_step(0.01, 0.0), 0.01);
    }

    #[test]
    fn pseudo_solve_rank_deficient() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let f = DVector::from_vec(vec![4.0, 3.0]);
        let z = pseudo_solve(&s, &f, DEFAULT_RCOND).unwrap();
        assert_relative_eq!(z[0], 2.0, epsilon = 1e-14);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn pseudo_solve_invertible() {
        let s = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let z = pseudo_solve(&s, &f, DEFAULT_RCOND).unwrap();
        let expected = s.clone().try_inverse().unwrap() * &f;
        assert!((z - expected).norm() < 1e-10);
    }

    #[test]
    fn pseudo_solve_errors() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        let f = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(pseudo_solve(&s, &f, 1e-12), Err(Error::NonFinite(_))));
        let f3 = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(pseudo_solve(&DMatrix::identity(2, 2), &f3, 1e-12).is_err());
        let zero = pseudo_solve(&DMatrix::zeros(2, 2), &f, 1e-12).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(pseudo_solve(&skew, &f, 1e-12), Err(Error::Domain(_))));
    }

    #[test]
    fn orthonormal_tangents_give_twice_identity() {
        let d = 2;
        let t: Vec<DensityMatrix> = (0..4).map(|k| DensityMatrix::projector(d, k / 2, k % 2)).collect();
        let s = assemble_s(&t, &DensityMatrix::identity(d)).unwrap();
        assert_eq!(s, DMatrix::identity(4, 4) * 2.0);
    }

    #[test]
    fn imaginary_overlap_projects_out() {
        let t = vec![DensityMatrix::projector(2, 0, 0)];
        let l = &DensityMatrix::projector(2, 0, 0) * num_complex::Complex64::new(0.0, 3.0);
        assert_eq!(assemble_f(&t, &l).unwrap()[0], 0.0);
    }
}
