use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{debug, info};

use crate::ansatz::{evaluate, AnsatzKind, RbmParameters};
use crate::checkpoint::Checkpoint;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::lindblad::{rk4_step, LindbladModel, Liouvillian};
use crate::observables::{frobenius_distance, mean_magnetization, trace_normalize, Magnetization};
use crate::variational::{cost_normalized, Scheme, TdvpSettings, VariationalState};

use super::config::{ExperimentConfig, Mode, RkInit};

pub const TRAJECTORY_HEADER: &str = "n,t,Mx,My,Mz,cost,step_norm,dt_eff,ln_d_rk";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations: usize,
    pub time: f64,
    pub magnetization: Magnetization,
    pub cost: f64,
    /// ln of the trace-normalized distance to the RK state after the same number of steps.
    pub ln_distance: Option<f64>,
    pub converged: bool,
}

struct Row {
    n: usize,
    t: f64,
    m: Magnetization,
    cost: f64,
    step_norm: f64,
    dt_eff: f64,
    ln_d: Option<f64>,
}

fn write_row(w: &mut impl Write, r: &Row) -> std::io::Result<()> {
    let ln_d = r.ln_d.map(|v| v.to_string()).unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{},{:e},{:e},{},{}",
        r.n, r.t, r.m.x, r.m.y, r.m.z, r.cost, r.step_norm, r.dt_eff, ln_d
    )
}

pub fn rk_initial_state(n_sites: usize, init: RkInit) -> DensityMatrix {
    let dim = 1usize << n_sites;
    match init {
        RkInit::MaximallyMixed => DensityMatrix::maximally_mixed(n_sites),
        RkInit::AllUp => DensityMatrix::projector(dim, 0, 0),
        RkInit::AllDown => DensityMatrix::projector(dim, dim - 1, dim - 1),
    }
}

pub fn build_liouvillian(cfg: &ExperimentConfig) -> Result<Liouvillian> {
    let model = LindbladModel::new(cfg.n_sites, cfg.coupling, cfg.field, cfg.gamma)
        .map_err(|e| Error::config(None, e.to_string()))?;
    Ok(model.liouvillian())
}

pub fn scheme_for(cfg: &ExperimentConfig) -> Option<Scheme> {
    let settings = TdvpSettings {
        dt_base: cfg.dt_base,
        rcond: cfg.rcond,
        gauge_shift: 0.0,
    };
    match cfg.mode {
        Mode::Rk => None,
        Mode::Rbm | Mode::Invariant => Some(Scheme::Tdvp(settings)),
        Mode::Gradient => Some(Scheme::GradientDescent {
            d_nu: cfg.dt_base,
            cost: cfg.cost,
        }),
        Mode::NaturalGradient => Some(Scheme::NaturalGradient { settings, cost: cfg.cost }),
    }
}

pub fn initial_state(cfg: &ExperimentConfig) -> Result<VariationalState> {
    if let Some(path) = &cfg.resume {
        let state = Checkpoint::read(path)?.into_state()?;
        if state.params.n_visible() != cfg.n_sites {
            return Err(Error::config(
                None,
                format!("checkpoint has {} sites, config has {}", state.params.n_visible(), cfg.n_sites),
            ));
        }
        return Ok(state);
    }
    let invariant = match cfg.mode {
        Mode::Invariant => true,
        Mode::Rbm => false,
        _ => cfg.gradient_ansatz_invariant,
    };
    let params = RbmParameters::random(cfg.n_sites, cfg.alpha, cfg.beta, cfg.hermitian_c, cfg.seed)
        .map_err(|e| Error::config(None, e.to_string()))?;
    let kind = if invariant {
        AnsatzKind::invariant(cfg.n_sites)?
    } else {
        AnsatzKind::Plain
    };
    Ok(VariationalState::new(params, kind))
}

struct RkReference<'a> {
    rho: DensityMatrix,
    steps: usize,
    dt: f64,
    liouvillian: &'a Liouvillian,
}

impl RkReference<'_> {
    /// RK state after `n` steps; `n` never decreases between calls.
    fn at(&mut self, n: usize) -> Result<&DensityMatrix> {
        while self.steps < n {
            self.rho = rk4_step(&self.rho, self.dt, self.liouvillian)?;
            self.steps += 1;
        }
        Ok(&self.rho)
    }
}

/// Runs one experiment and writes `trajectory.csv` and `summary.txt` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    let liouvillian = build_liouvillian(cfg)?;
    let mut csv = BufWriter::new(File::create(cfg.out.join("trajectory.csv"))?);
    writeln!(csv, "{TRAJECTORY_HEADER}")?;

    let outcome = match scheme_for(cfg) {
        None => run_rk(cfg, &liouvillian, &mut csv),
        Some(scheme) => run_variational(cfg, &liouvillian, scheme, &mut csv),
    };
    csv.flush()?;
    let summary = outcome?;
    write_summary(&cfg.out.join("summary.txt"), cfg, &summary, start.elapsed().as_secs_f64())?;
    Ok(summary)
}

fn run_rk(cfg: &ExperimentConfig, liouvillian: &Liouvillian, csv: &mut impl Write) -> Result<RunSummary> {
    let mut rho = rk_initial_state(cfg.n_sites, cfg.rk_init);
    let mut converged = false;
    let mut n = 0;
    while n < cfg.max_iters {
        let step = (|| {
            let cost = cost_normalized(&rho, liouvillian)?;
            if cost < cfg.cost_threshold {
                return Ok(None);
            }
            let next = rk4_step(&rho, cfg.dt_base, liouvillian)?;
            if !next.is_finite() {
                return Err(Error::NonFinite("RK state"));
            }
            let row = Row {
                n,
                t: n as f64 * cfg.dt_base,
                m: mean_magnetization(&rho)?,
                cost,
                step_norm: (&next - &rho).frobenius_norm(),
                dt_eff: cfg.dt_base,
                ln_d: None,
            };
            Ok(Some((next, row)))
        })()
        .map_err(|e| Error::Iteration {
            n,
            source: Box::new(e),
        })?;
        let Some((next, row)) = step else {
            converged = true;
            break;
        };
        write_row(csv, &row)?;
        if n % 100 == 0 {
            debug!("rk step {n}: cost {:e}", row.cost);
        }
        rho = next;
        n += 1;
    }
    let cost = cost_normalized(&rho, liouvillian).map_err(|e| Error::Iteration {
        n,
        source: Box::new(e),
    })?;
    converged |= cost < cfg.cost_threshold;
    if cfg.dump_density {
        write_density_csv(&cfg.out.join("density_rk.csv"), &rho)?;
    }
    info!("rk finished after {n} steps, cost {cost:e}");
    Ok(RunSummary {
        iterations: n,
        time: n as f64 * cfg.dt_base,
        magnetization: mean_magnetization(&rho)?,
        cost,
        ln_distance: None,
        converged,
    })
}

fn run_variational(
    cfg: &ExperimentConfig,
    liouvillian: &Liouvillian,
    scheme: Scheme,
    csv: &mut impl Write,
) -> Result<RunSummary> {
    let mut state = initial_state(cfg)?;
    let mut reference = cfg.rk_reference.then(|| RkReference {
        rho: rk_initial_state(cfg.n_sites, cfg.rk_init),
        steps: 0,
        dt: cfg.dt_base,
        liouvillian,
    });
    let first = state.iteration;
    let mut converged = false;
    while state.iteration < first + cfg.max_iters {
        let out = scheme.step(&state, liouvillian)?;
        let n = out.report.iteration;
        let ln_d = match reference.as_mut() {
            Some(r) => Some(frobenius_distance(&out.rho, r.at(n)?)?.1),
            None => None,
        };
        let report = &out.report;
        write_row(
            csv,
            &Row {
                n,
                t: report.time,
                m: report.magnetization,
                cost: report.cost,
                step_norm: report.step_norm,
                dt_eff: report.dt_eff,
                ln_d,
            },
        )?;
        if n % 100 == 0 {
            info!("iteration {n}: cost {:e}, step norm {:e}", report.cost, report.step_norm);
        }
        if report.cost < cfg.cost_threshold {
            converged = true;
            break;
        }
        state = out.next;
        if cfg.checkpoint_every > 0 && state.iteration % cfg.checkpoint_every == 0 {
            Checkpoint::from_state(&state, cfg.seed).write(&cfg.out.join("checkpoint.txt"))?;
        }
    }
    Checkpoint::from_state(&state, cfg.seed).write(&cfg.out.join("checkpoint.txt"))?;

    let n = state.iteration;
    let final_eval = (|| {
        let rho = evaluate(&state.params, &state.kind, false, 0.0)?.matrix();
        let cost = cost_normalized(&rho, liouvillian)?;
        let m = mean_magnetization(&rho)?;
        let ln_d = match reference.as_mut() {
            Some(r) => Some(frobenius_distance(&rho, r.at(n)?)?.1),
            None => None,
        };
        if cfg.dump_density {
            write_density_csv(&cfg.out.join("density.csv"), &rho)?;
            if let Some(r) = reference.as_mut() {
                write_density_csv(&cfg.out.join("density_rk.csv"), r.at(n)?)?;
            }
        }
        Ok::<_, Error>((cost, m, ln_d))
    })();
    let (cost, magnetization, ln_distance) = final_eval.map_err(|e| Error::Iteration {
        n,
        source: Box::new(e),
    })?;
    Ok(RunSummary {
        iterations: n - first,
        time: state.time,
        magnetization,
        cost,
        ln_distance,
        converged: converged || cost < cfg.cost_threshold,
    })
}

/// `bra,ket,re,im` rows of the trace-normalized matrix.
pub fn write_density_csv(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let rho = trace_normalize(rho)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "bra,ket,re,im")?;
    let d = rho.dim();
    for r in 0..d {
        for c in 0..d {
            let v = rho[(r, c)];
            writeln!(w, "{r},{c},{},{}", v.re, v.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, cfg: &ExperimentConfig, s: &RunSummary, wall: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "seed = {}", cfg.seed)?;
    writeln!(w, "iterations = {}", s.iterations)?;
    writeln!(w, "time = {}", s.time)?;
    writeln!(w, "converged = {}", s.converged)?;
    writeln!(w, "final_Mx = {}", s.magnetization.x)?;
    writeln!(w, "final_My = {}", s.magnetization.y)?;
    writeln!(w, "final_Mz = {}", s.magnetization.z)?;
    writeln!(w, "final_cost = {:e}", s.cost)?;
    if let Some(d) = s.ln_distance {
        writeln!(w, "final_ln_d_rk = {d}")?;
        writeln!(w, "# ln_d_rk compares trace-normalized operators")?;
    }
    writeln!(w, "wall_time_s = {wall:.3}")?;
    writeln!(w, "\n[config]")?;
    write!(w, "{}", cfg.to_text())?;
    w.flush()?;
    Ok(())
}
