//! Initial ensembles: bath coordinates and subsystem matrix elements.

use crate::adiabatic::build_frame;
use crate::bracket::StructureKind;
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_error, CMatrix, C64};
use crate::models::{Model, Thermostat};
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

/// Metropolis sweeps discarded before the first sample.
pub const BURN_IN_SWEEPS: usize = 1000;
/// Metropolis sweeps between retained samples.
pub const THINNING_SWEEPS: usize = 10;
/// Acceptance window targeted while adapting the proposal width.
pub const ACCEPTANCE_WINDOW: (f64, f64) = (0.3, 0.6);
/// A walker farther than this from the origin is treated as escaping.
pub const RUNAWAY_RADIUS: f64 = 1e6;
/// Matrix elements below this magnitude count as zero.
pub const ELEMENT_TOL: f64 = 1e-14;

/// A walker whose potential keeps falling by more than this many `k_BT`
/// per coordinate below its burn-in minimum is treated as escaping.
pub const RUNAWAY_DEPTH: f64 = 50.0;

const ADAPT_INTERVAL: usize = 25;

/// One trajectory start: bath coordinates, adiabatic pair and initial weight.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub x0: Vec<f64>,
    pub pair0: (usize, usize),
    pub w0: C64,
    /// Index of the bath sample this condition was drawn from.
    pub sample: usize,
}

/// How initial pairs `(β, β′)` are chosen among the nonzero elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSampling {
    /// One pair, uniform over nonzero elements.
    #[default]
    Uniform,
    /// One pair, with probability proportional to `|W_ββ′|`.
    Magnitude,
    /// Every nonzero pair, each as its own trajectory.
    Enumerate,
}

fn gaussian(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::Invalid(format!("normal distribution with sd {sd}: {e}")))
}

/// Canonical bath configurations at temperature `T`.
///
/// Momenta are Maxwell distributed. Positions come from the exact Gaussian
/// when the model reports a harmonic bath and from a Metropolis walker on
/// `V(Q)` otherwise. Thermostat positions start at zero and thermostat
/// momenta are drawn from their own Maxwell distributions.
pub fn sample_canonical<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    temperature: f64,
    k_b: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if !(temperature > 0.0) || !(k_b > 0.0) {
        return Err(Error::Invalid(format!("canonical sampling needs T > 0 and k_B > 0, got {temperature}, {k_b}")));
    }
    let s = model.structure();
    if s.kind() == StructureKind::Spin {
        return Err(Error::Invalid("canonical sampling needs canonical momenta; use sphere sampling for spins".into()));
    }
    let kt = k_b * temperature;
    let (qr, pr) = (s.position_range(), s.momentum_range());
    let positions = match model.harmonic_frequency() {
        Some(w) if w > 0.0 => {
            let dist = gaussian((kt / (model.mass() * w * w)).sqrt())?;
            (0..count).map(|_| (0..qr.len()).map(|_| dist.sample(rng)).collect()).collect()
        }
        Some(_) => return Err(Error::NonConfining),
        None => metropolis_positions(model, 1.0 / kt, qr.len(), count, rng)?,
    };
    let p_dist = gaussian((model.mass() * kt).sqrt())?;
    let thermostat_masses = match model.thermostat() {
        Thermostat::None => vec![],
        Thermostat::Nose { m_eta, .. } => vec![m_eta],
        Thermostat::Nhc { m_eta1, m_eta2, .. } => vec![m_eta1, m_eta2],
    };
    let eta_dists = thermostat_masses.iter().map(|m| gaussian((m * kt).sqrt())).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(count);
    for q in positions {
        let mut x = vec![0.0; s.dimension()];
        for (k, v) in qr.clone().zip(q) {
            x[k] = v;
        }
        for k in pr.clone() {
            x[k] = p_dist.sample(rng);
        }
        for (k, d) in s.thermostat_momentum_range().zip(&eta_dists) {
            x[k] = d.sample(rng);
        }
        out.push(x);
    }
    Ok(out)
}

/// Random-walk Metropolis samples of `exp(−βV(Q))`.
///
/// The walker starts at the origin. During burn-in the proposal width is
/// rescaled every few sweeps to keep the acceptance rate inside
/// [`ACCEPTANCE_WINDOW`]; it is then frozen. Samples are taken every
/// [`THINNING_SWEEPS`] sweeps. A walker that leaves [`RUNAWAY_RADIUS`] or
/// whose potential keeps sinking (see [`RUNAWAY_DEPTH`]) signals a
/// non-confining potential.
pub fn metropolis_positions<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    beta: f64,
    dof: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let mut q = vec![0.0; dof];
    let mut v = model.potential(&q);
    if !v.is_finite() {
        return Err(Error::NonFinite("potential at the origin"));
    }
    let mut width = beta.recip().sqrt().max(1e-6);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let sweep = |q: &mut Vec<f64>, v: &mut f64, width: f64, rng: &mut R| -> Result<(usize, usize)> {
        let mut acc = 0;
        for k in 0..dof {
            let old = q[k];
            q[k] = old + width * (2.0 * rng.random::<f64>() - 1.0);
            let trial = model.potential(q);
            let delta = beta * (trial - *v);
            if trial.is_finite() && (delta <= 0.0 || rng.random::<f64>() < (-delta).exp()) {
                *v = trial;
                acc += 1;
            } else {
                q[k] = old;
            }
        }
        let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > RUNAWAY_RADIUS || !v.is_finite() || width > RUNAWAY_RADIUS {
            return Err(Error::NonConfining);
        }
        Ok((acc, dof))
    };
    let (mut first_min, mut second_min) = (v, f64::INFINITY);
    for n in 0..BURN_IN_SWEEPS {
        let (a, p) = sweep(&mut q, &mut v, width, rng)?;
        if n < BURN_IN_SWEEPS / 2 {
            first_min = first_min.min(v);
        } else {
            second_min = second_min.min(v);
        }
        accepted += a;
        proposed += p;
        if (n + 1) % ADAPT_INTERVAL == 0 {
            let rate = accepted as f64 / proposed as f64;
            if rate > ACCEPTANCE_WINDOW.1 {
                width *= 1.5;
            } else if rate < ACCEPTANCE_WINDOW.0 {
                width *= 0.6;
            }
            accepted = 0;
            proposed = 0;
        }
    }
    let floor = RUNAWAY_DEPTH * dof.max(1) as f64;
    if beta * (first_min - second_min) > floor {
        return Err(Error::NonConfining);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..THINNING_SWEEPS {
            sweep(&mut q, &mut v, width, rng)?;
            if beta * (second_min - v) > floor {
                return Err(Error::NonConfining);
            }
        }
        out.push(q.clone());
    }
    Ok(out)
}

/// Ground-state Wigner function of a harmonic oscillator:
/// independent Gaussians with `Var(Q) = ħ/(2Mω)` and `Var(P) = ħMω/2`.
pub fn sample_wigner_gaussian<R: Rng + ?Sized>(
    mass: f64,
    omega: f64,
    hbar: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if !(omega > 0.0) || !(mass > 0.0) || !(hbar > 0.0) {
        return Err(Error::Invalid(format!("Wigner sampling needs M, ω, ħ > 0, got {mass}, {omega}, {hbar}")));
    }
    let q = gaussian((hbar / (2.0 * mass * omega)).sqrt())?;
    let p = gaussian((0.5 * hbar * mass * omega).sqrt())?;
    Ok((0..count).map(|_| (q.sample(rng), p.sample(rng))).collect())
}

/// Wigner samples laid out as full coordinate vectors of a harmonic model.
pub fn sample_wigner_coordinates<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let s = model.structure();
    if s.kind() != StructureKind::Canonical {
        return Err(Error::Invalid("Wigner sampling needs a canonical bath without thermostats".into()));
    }
    let omega = model
        .harmonic_frequency()
        .ok_or_else(|| Error::Invalid(format!("model {} has no harmonic bath frequency", model.name())))?;
    let d = s.dof();
    let mut out = vec![vec![0.0; 2 * d]; count];
    for k in 0..d {
        for (x, (q, p)) in out.iter_mut().zip(sample_wigner_gaussian(model.mass(), omega, model.hbar(), count, rng)?) {
            x[k] = q;
            x[d + k] = p;
        }
    }
    Ok(out)
}

/// Uniform points on the unit sphere.
pub fn sample_sphere<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<[f64; 3]> {
    (0..count).map(|_| UnitSphere.sample(rng)).collect()
}

/// Check that `rho` is a Hermitian, unit-trace, nonzero matrix of size `n`.
pub fn validate_density(rho: &CMatrix, n: usize) -> Result<()> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { context: "initial subsystem matrix", expected: n, found: rho.nrows() });
    }
    if rho.iter().all(|z| z.norm() <= ELEMENT_TOL) {
        return Err(Error::Invalid("initial subsystem matrix is zero".into()));
    }
    if hermiticity_error(rho) > 1e-10 {
        return Err(Error::Invalid("initial subsystem matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::Invalid(format!("initial subsystem matrix has trace {tr}, expected 1")));
    }
    Ok(())
}

/// The diabatic matrix `rho` expressed in the adiabatic frame at `q`.
pub fn adiabatic_elements<M: Model + ?Sized>(model: &M, rho: &CMatrix, q: &[f64]) -> Result<CMatrix> {
    let frame = build_frame(model, q, None)?;
    Ok(frame.vectors.adjoint() * rho * &frame.vectors)
}

/// Initial conditions for one bath sample `x0`.
///
/// `Uniform` and `Magnitude` return one condition whose weight is the
/// element divided by its selection probability. `Enumerate` returns one
/// condition per nonzero element with the element itself as weight.
pub fn initial_subsystem<M: Model + ?Sized, R: Rng + ?Sized>(
    model: &M,
    rho: &CMatrix,
    x0: &[f64],
    sample: usize,
    mode: PairSampling,
    rng: &mut R,
) -> Result<Vec<InitialCondition>> {
    validate_density(rho, model.subsystem_dim())?;
    let q = &x0[model.structure().position_range()];
    let w = adiabatic_elements(model, rho, q)?;
    let n = w.nrows();
    let nonzero: Vec<((usize, usize), C64)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|p| (p, w[p]))
        .filter(|(_, z)| z.norm() > ELEMENT_TOL)
        .collect();
    if nonzero.is_empty() {
        return Err(Error::Invalid("initial subsystem matrix has no nonzero adiabatic elements".into()));
    }
    let make = |pair0, w0| InitialCondition { x0: x0.to_vec(), pair0, w0, sample };
    Ok(match mode {
        PairSampling::Enumerate => nonzero.into_iter().map(|(p, z)| make(p, z)).collect(),
        PairSampling::Uniform => {
            let k = nonzero.len();
            let (p, z) = nonzero[rng.random_range(0..k)];
            vec![make(p, z * k as f64)]
        }
        PairSampling::Magnitude => {
            let total: f64 = nonzero.iter().map(|(_, z)| z.norm()).sum();
            let mut u = rng.random::<f64>() * total;
            let mut chosen = nonzero[nonzero.len() - 1];
            for &(p, z) in &nonzero {
                if u < z.norm() {
                    chosen = (p, z);
                    break;
                }
                u -= z.norm();
            }
            let (p, z) = chosen;
            vec![make(p, z / z.norm() * total)]
        }
    })
}
