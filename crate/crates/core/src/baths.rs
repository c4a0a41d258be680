//! Langevin and Nosé–Hoover baths as replacements for the Hamiltonian step.
//!
//! Every integrator is a symmetric composition around the velocity-Verlet
//! core of [`classical_step`]. Langevin dynamics wraps it with exact
//! Ornstein–Uhlenbeck half steps; Nosé–Hoover and its two-link chain wrap it
//! with thermostat half steps. Each step is therefore time reversible, and
//! with zero friction the Langevin map reproduces the Hamiltonian path bit for bit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::adiabatic::AdiabaticFrame;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::models::{Model, Thermostat};
use crate::sstp::classical_step;

/// Friction and temperature of a Langevin bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinParams {
    pub zeta: f64,
    pub temperature: f64,
    pub k_b: f64,
}

impl LangevinParams {
    pub fn new(zeta: f64, temperature: f64, k_b: f64) -> Result<Self> {
        if !(zeta >= 0.0) || !(temperature > 0.0) || !(k_b > 0.0) {
            return Err(Error::Invalid(format!(
                "Langevin parameters need zeta >= 0 and T, k_B > 0 (got {zeta}, {temperature}, {k_b})"
            )));
        }
        Ok(Self { zeta, temperature, k_b })
    }

    pub fn kt(&self) -> f64 {
        self.k_b * self.temperature
    }

    /// Per-step momentum-impulse variance `2 k_B T ζ dt` of the white noise.
    pub fn impulse_variance(&self, dt: f64) -> f64 {
        2.0 * self.kt() * self.zeta * dt
    }
}

fn ou_half_step(p: &mut [f64], mass: f64, params: &LangevinParams, h: f64, rng: &mut ChaCha8Rng) {
    let decay = (-params.zeta * h / mass).exp();
    let spread = ((1.0 - decay * decay) * mass * params.kt()).sqrt();
    for pk in p {
        let xi: f64 = rng.sample(StandardNormal);
        *pk = decay * *pk + spread * xi;
    }
}

/// One Langevin step `Q̇ = P/M`, `Ṗ = −(ζ/M)P + F̄ + ℛ`, split as
/// OU(dt/2) · Verlet(dt) · OU(dt/2) with exact Ornstein–Uhlenbeck substeps.
pub fn langevin_step<M: Model + ?Sized>(
    model: &M,
    x: &mut [f64],
    pair: (usize, usize),
    frame: &AdiabaticFrame,
    params: &LangevinParams,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<AdiabaticFrame> {
    let pr = model.structure().momentum_range();
    let m = model.mass();
    ou_half_step(&mut x[pr.clone()], m, params, 0.5 * dt, rng);
    let next = classical_step(model, x, pair, frame, dt)?;
    ou_half_step(&mut x[pr], m, params, 0.5 * dt, rng);
    Ok(next)
}

fn nose_params<M: Model + ?Sized>(model: &M) -> Result<(f64, f64, usize)> {
    match model.thermostat() {
        Thermostat::Nose { m_eta, kt, n } => Ok((m_eta, kt, n)),
        _ => Err(Error::Invalid(format!("model {} has no Nosé thermostat", model.name()))),
    }
}

fn nhc_params<M: Model + ?Sized>(model: &M) -> Result<(f64, f64, f64, usize)> {
    match model.thermostat() {
        Thermostat::Nhc { m_eta1, m_eta2, kt, n } => Ok((m_eta1, m_eta2, kt, n)),
        _ => Err(Error::Invalid(format!("model {} has no Nosé–Hoover chain", model.name()))),
    }
}

fn twice_kinetic(x: &[f64], pr: std::ops::Range<usize>, m: f64) -> f64 {
    x[pr].iter().map(|p| p * p / m).sum()
}

fn nose_thermostat<M: Model + ?Sized>(x: &mut [f64], model: &M, m_eta: f64, kt: f64, n: usize, h: f64) {
    let s = model.structure();
    let (pr, qe, pe) = (s.momentum_range(), s.thermostat_position_range().start, s.thermostat_momentum_range().start);
    let m = model.mass();
    let nkt = n as f64 * kt;
    x[pe] += 0.5 * h * (twice_kinetic(x, pr.clone(), m) - nkt);
    let scale = (-x[pe] / m_eta * h).exp();
    for k in pr.clone() {
        x[k] *= scale;
    }
    x[qe] += x[pe] / m_eta * h;
    x[pe] += 0.5 * h * (twice_kinetic(x, pr, m) - nkt);
}

/// Thermostat force `F_{Q_η} = P²/M − N k_B T` on the Nosé momentum.
pub fn nose_force<M: Model + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    let (_, kt, n) = nose_params(model)?;
    Ok(twice_kinetic(x, model.structure().momentum_range(), model.mass()) - n as f64 * kt)
}

/// One Nosé–Hoover step, thermostat(dt/2) · Verlet(dt) · thermostat(dt/2).
pub fn nose_hoover_step<M: Model + ?Sized>(
    model: &M,
    x: &mut [f64],
    pair: (usize, usize),
    frame: &AdiabaticFrame,
    dt: f64,
) -> Result<AdiabaticFrame> {
    let (m_eta, kt, n) = nose_params(model)?;
    nose_thermostat(x, model, m_eta, kt, n, 0.5 * dt);
    let next = classical_step(model, x, pair, frame, dt)?;
    nose_thermostat(x, model, m_eta, kt, n, 0.5 * dt);
    Ok(next)
}

/// Second-link force `F_{Q_η2} = P_η1²/M_η1 − k_B T`.
pub fn chain_force<M: Model + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    let (m1, _, kt, _) = nhc_params(model)?;
    let p1 = x[model.structure().thermostat_momentum_range().start];
    Ok(p1 * p1 / m1 - kt)
}

#[allow(clippy::too_many_arguments)]
fn chain_thermostat<M: Model + ?Sized>(x: &mut [f64], model: &M, m1: f64, m2: f64, kt: f64, n: usize, h: f64) {
    let s = model.structure();
    let pr = s.momentum_range();
    let (q1, p1) = (s.thermostat_position_range().start, s.thermostat_momentum_range().start);
    let (q2, p2) = (q1 + 1, p1 + 1);
    let m = model.mass();
    let nkt = n as f64 * kt;
    x[p2] += 0.5 * h * (x[p1] * x[p1] / m1 - kt);
    let quarter = (-0.25 * h * x[p2] / m2).exp();
    x[p1] *= quarter;
    x[p1] += 0.5 * h * (twice_kinetic(x, pr.clone(), m) - nkt);
    x[p1] *= quarter;

    let scale = (-h * x[p1] / m1).exp();
    for k in pr.clone() {
        x[k] *= scale;
    }
    x[q1] += h * x[p1] / m1;
    x[q2] += h * x[p2] / m2;

    x[p1] *= quarter;
    x[p1] += 0.5 * h * (twice_kinetic(x, pr, m) - nkt);
    x[p1] *= quarter;
    x[p2] += 0.5 * h * (x[p1] * x[p1] / m1 - kt);
}

/// One two-link Nosé–Hoover chain step, chain(dt/2) · Verlet(dt) · chain(dt/2).
pub fn nhc_step<M: Model + ?Sized>(
    model: &M,
    x: &mut [f64],
    pair: (usize, usize),
    frame: &AdiabaticFrame,
    dt: f64,
) -> Result<AdiabaticFrame> {
    let (m1, m2, kt, n) = nhc_params(model)?;
    chain_thermostat(x, model, m1, m2, kt, n, 0.5 * dt);
    let next = classical_step(model, x, pair, frame, dt)?;
    chain_thermostat(x, model, m1, m2, kt, n, 0.5 * dt);
    Ok(next)
}

/// Phase-space compressibility: `−N P_η/M_η`, or `−N P_η1/M_η1 − P_η2/M_η2` for the chain.
pub fn compressibility<M: Model + ?Sized>(model: &M, x: &[f64]) -> f64 {
    let pe = model.structure().thermostat_momentum_range();
    match model.thermostat() {
        Thermostat::None => 0.0,
        Thermostat::Nose { m_eta, n, .. } => -(n as f64) * x[pe.start] / m_eta,
        Thermostat::Nhc { m_eta1, m_eta2, n, .. } => {
            -(n as f64) * x[pe.start] / m_eta1 - x[pe.start + 1] / m_eta2
        }
    }
}

/// Thermostat-free extended energy `H^T = P²/2M + V + Σ P_η²/2M_η` (no `Q_η` terms).
pub fn thermostat_free_energy<M: Model + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    let s = model.structure();
    let mut e = model.classical_energy(x)?;
    let qe = &x[s.thermostat_position_range()];
    match model.thermostat() {
        Thermostat::None => {}
        Thermostat::Nose { kt, n, .. } => e -= n as f64 * kt * qe[0],
        Thermostat::Nhc { kt, n, .. } => e -= n as f64 * kt * qe[0] + kt * qe[1],
    }
    Ok(e)
}

fn thermostat_kt<M: Model + ?Sized>(model: &M) -> Result<f64> {
    match model.thermostat() {
        Thermostat::Nose { kt, .. } | Thermostat::Nhc { kt, .. } => Ok(kt),
        Thermostat::None => Err(Error::Invalid(format!("model {} has no thermostat", model.name()))),
    }
}

/// The bracketed order-ħ factor
/// `(1 − e^{−β(E_α′−E_α)})/(E_α − E_α′) + (β/2)(1 + e^{−β(E_α′−E_α)})`,
/// continuous (zero) at `E_α = E_α′`.
pub fn order_one_factor(beta: f64, e_a: f64, e_ap: f64) -> f64 {
    let gap = e_ap - e_a;
    if gap == 0.0 {
        return 0.0;
    }
    let em1 = (-beta * gap).exp_m1();
    em1 / gap + 0.5 * beta * (2.0 + em1)
}

/// Stationary density of the thermostatted QCLE, up to normalisation.
///
/// Order 0 (diagonal pairs only) is `exp(−β H^T_α)` with
/// `H^T_α = P²/2M + V + E_α + Σ P_η²/2M_η`, the function annihilated by
/// `iL_α + κ`. Order 1 (off-diagonal pairs only) is
/// `−i (P/M)·d_{αα′} W⁽⁰⁾_{αα}` times [`order_one_factor`].
pub fn stationary_weight<M: Model + ?Sized>(
    model: &M,
    frame: &AdiabaticFrame,
    x: &[f64],
    order: u32,
    pair: (usize, usize),
) -> Result<C64> {
    let kt = thermostat_kt(model)?;
    let beta = 1.0 / kt;
    let (a, ap) = pair;
    let n = frame.n();
    for idx in [a, ap] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    let w0 = |alpha: usize| -> Result<f64> {
        Ok((-beta * (thermostat_free_energy(model, x)? + frame.energies[alpha])).exp())
    };
    match order {
        0 if a == ap => Ok(C64::new(w0(a)?, 0.0)),
        0 => Err(Error::Invalid("order-0 stationary weight is diagonal".into())),
        1 if a != ap => {
            let p = &x[model.structure().momentum_range()];
            let m = model.mass();
            let vd: C64 = p.iter().zip(frame.coupling(a, ap)).map(|(pk, dk)| *dk * (pk / m)).sum();
            let factor = order_one_factor(beta, frame.energies[a], frame.energies[ap]);
            Ok(C64::new(0.0, -1.0) * vd * w0(a)? * factor)
        }
        1 => Err(Error::Invalid("order-1 stationary weight needs an off-diagonal pair".into())),
        _ => Err(Error::Invalid(format!("stationary weight order must be 0 or 1, got {order}"))),
    }
}
