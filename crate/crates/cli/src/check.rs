//! Invariant suites behind `qclsim check`.
//!
//! Every suite returns a list of [`CheckItem`]s, each a measured value
//! compared with a bound. Sizes are chosen so that `check all` finishes in a
//! few seconds on an optimised build.

use std::f64::consts::PI;

use qclsim_core::adiabatic::build_frame;
use qclsim_core::baths::{compressibility, langevin_step, nhc_step, nose_hoover_step, stationary_weight, thermostat_free_energy};
use qclsim_core::bracket::mixed_triple;
use qclsim_core::linalg::{max_abs, pauli_x, pauli_y, pauli_z};
use qclsim_core::models::HamiltonianField;
use qclsim_core::rng::sampling_rng;
use qclsim_core::sampling::{sample_canonical, sample_sphere, sample_wigner_gaussian};
use qclsim_core::spin::{adiabatic_spin_propagate, mean_surface_gradient, norm, spin_step};
use qclsim_core::sstp::{classical_step, momentum_jump, sstp_step, trajectory_energy, JumpOutcome};
use qclsim_core::{
    build_spin_frame, jacobi_residual, parse_field, quasi_lie_bracket, AdiabaticFrame, LangevinParams, Model,
    NhcExtension, NoseExtension, OperatorField, PolyField, SpinBathModel, SpinState, StepConfig, StructureKind,
    TrajectoryState, TwoLevelHarmonic, TwoLevelQuartic, C64,
};
use rand::Rng;
use serde::Serialize;

use crate::CliError;

pub const SUITES: [&str; 6] = ["bracket", "adiabatic", "jump", "thermostat", "spin", "sampling"];

/// How a measured value is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
}

fn item(suite: &'static str, name: &'static str, value: f64, relation: Relation, bound: f64) -> CheckItem {
    let passed = match relation {
        Relation::Below => value < bound,
        Relation::Above => value > bound,
    };
    CheckItem { suite, name, passed, value, relation, bound }
}

fn failed(suite: &'static str, name: &'static str, e: qclsim_core::Error) -> CheckItem {
    log::error!("{suite}/{name}: {e}");
    CheckItem { suite, name, passed: false, value: f64::NAN, relation: Relation::Below, bound: 0.0 }
}

/// Run `suite` (one of [`SUITES`] or `all`).
pub fn run_suite(suite: &str) -> Result<Vec<CheckItem>, CliError> {
    let items = match suite {
        "all" => SUITES.iter().map(|s| run_suite(s)).collect::<Result<Vec<_>, _>>()?.concat(),
        "bracket" => bracket_suite(),
        "adiabatic" => adiabatic_suite(),
        "jump" => jump_suite(),
        "thermostat" => thermostat_suite(),
        "spin" => spin_suite(),
        "sampling" => sampling_suite(),
        other => return Err(CliError::Usage(format!("unknown suite `{other}`; expected one of {SUITES:?} or all"))),
    };
    Ok(items)
}

fn quartic(gamma0: f64) -> TwoLevelQuartic {
    TwoLevelQuartic::new(1.0, 1.0, 1.0, gamma0, 1.0, 1.0).expect("valid quartic parameters")
}

fn harmonic(gamma0: f64) -> TwoLevelHarmonic {
    TwoLevelHarmonic::new(1.0, gamma0, 1.0, 1.0, 1.0).expect("valid harmonic parameters")
}

/// Catalog models with a few probe fields over their coordinates.
fn catalog() -> Vec<(Box<dyn Model>, [&'static str; 2])> {
    vec![
        (Box::new(quartic(0.7)), ["Q*sigma_z + P^2*sigma_x", "Q*P*sigma_y - Q^3"]),
        (Box::new(harmonic(0.3)), ["P*sigma_z", "Q^2*sigma_x + P"]),
        (Box::new(SpinBathModel::default()), ["Sx*sigma_y + Sz", "Sy*Sz*sigma_x"]),
        (
            Box::new(NoseExtension::new(quartic(0.5), 1.3, 0.8, 1, 1.0).expect("valid Nosé parameters")),
            ["Qeta*sigma_x + P", "Peta*Q*sigma_z"],
        ),
        (
            Box::new(NhcExtension::new(harmonic(0.4), 0.7, 1.1, 1.2, 1, 1.0).expect("valid chain parameters")),
            ["Peta2*P*sigma_z", "Qeta1*sigma_y + Peta1^2"],
        ),
    ]
}

fn random_point<R: Rng>(model: &dyn Model, rng: &mut R) -> Vec<f64> {
    let s = model.structure();
    if s.kind() == StructureKind::Spin {
        return sample_sphere(1, rng)[0].to_vec();
    }
    (0..s.dimension()).map(|_| rng.random_range(-1.5..1.5)).collect()
}

/// Largest antisymmetry and energy self-bracket residuals over `points`
/// random points per catalog model.
pub fn catalog_bracket_residuals(points: usize, seed: u64) -> qclsim_core::Result<(f64, f64)> {
    let mut rng = sampling_rng(seed);
    let (mut anti, mut selfb) = (0.0_f64, 0.0_f64);
    for (model, probes) in catalog() {
        let s = model.structure();
        let h = HamiltonianField(model.as_ref());
        let fields = probes.iter().map(|p| parse_field(p, &s)).collect::<qclsim_core::Result<Vec<_>>>()?;
        let hbar = model.hbar();
        for _ in 0..points {
            let x = random_point(model.as_ref(), &mut rng);
            selfb = selfb.max(quasi_lie_bracket(&h, &h, &s, &x, hbar)?.max_abs());
            let pairs: [(&dyn OperatorField, &dyn OperatorField); 3] =
                [(&h, &fields[0]), (&h, &fields[1]), (&fields[0], &fields[1])];
            for (a, b) in pairs {
                let ab = quasi_lie_bracket(a, b, &s, &x, hbar)?.value;
                let ba = quasi_lie_bracket(b, a, &s, &x, hbar)?.value;
                anti = anti.max(max_abs(&(ab + ba)));
            }
        }
    }
    Ok((anti, selfb))
}

/// Jacobi residuals: `(worst classical, worst quantum, designated mixed)`.
pub fn jacobi_dichotomy(triples: usize, seed: u64) -> qclsim_core::Result<(f64, f64, f64)> {
    let mut rng = sampling_rng(seed);
    let s = qclsim_core::StructureMatrix::canonical(1);
    let mut classical = 0.0_f64;
    let mut quantum = 0.0_f64;
    for _ in 0..triples {
        let [a, b, c] = [random_scalar(&mut rng), random_scalar(&mut rng), random_scalar(&mut rng)];
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        classical = classical.max(jacobi_residual(&a, &b, &c, &s, &x, 1.0)?);
    }
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    for _ in 0..triples {
        let mut constant = || {
            let m = paulis.iter().fold(qclsim_core::CMatrix::zeros(2, 2), |acc, p| {
                acc + p * C64::new(rng.random_range(-1.0..1.0), 0.0)
            });
            PolyField::constant(2, m)
        };
        let (a, b, c) = (constant(), constant(), constant());
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        quantum = quantum.max(jacobi_residual(&a, &b, &c, &s, &x, 1.0)?);
    }
    let [m1, m2, m3] = mixed_triple();
    let mixed = jacobi_residual(&m1, &m2, &m3, &s, &[1.0, 1.0], 1.0)?;
    Ok((classical, quantum, mixed))
}

/// A random scalar polynomial of degree at most two in each of `Q` and `P`.
fn random_scalar<R: Rng>(rng: &mut R) -> PolyField {
    let mut f = PolyField::zero(2, 1);
    for _ in 0..2 {
        let powers = [rng.random_range(0..3u32), rng.random_range(0..3u32)];
        f = f.with_term(rng.random_range(-1.0..1.0), &powers, qclsim_core::CMatrix::identity(1, 1));
    }
    f
}

fn bracket_suite() -> Vec<CheckItem> {
    const S: &str = "bracket";
    let mut out = Vec::new();
    match catalog_bracket_residuals(10, 1) {
        Ok((anti, selfb)) => {
            out.push(item(S, "antisymmetry", anti, Relation::Below, 1e-10));
            out.push(item(S, "energy_self_bracket", selfb, Relation::Below, 1e-10));
        }
        Err(e) => out.push(failed(S, "catalog", e)),
    }
    match jacobi_dichotomy(5, 2) {
        Ok((c, q, m)) => {
            out.push(item(S, "jacobi_classical", c, Relation::Below, qclsim_core::bracket::JACOBI_TOLERANCE));
            out.push(item(S, "jacobi_quantum", q, Relation::Below, qclsim_core::bracket::JACOBI_TOLERANCE));
            out.push(item(S, "jacobi_mixed", m, Relation::Above, 10.0 * qclsim_core::bracket::JACOBI_TOLERANCE));
        }
        Err(e) => out.push(failed(S, "jacobi", e)),
    }
    out
}

/// Relative energy drift over `steps` adiabatic steps and the largest
/// coordinate error after running the same number of steps backwards.
pub fn adiabatic_conservation(steps: usize, dt: f64) -> qclsim_core::Result<(f64, f64)> {
    let m = quartic(0.7);
    let x0 = vec![0.8, -0.3];
    let mut st = TrajectoryState::new(x0.clone(), (0, 1), sampling_rng(0));
    let mut frame = build_frame(&m, &x0[..1], None)?;
    let cfg = StepConfig::adiabatic(dt);
    let e0 = trajectory_energy(&m, &frame, &st)?;
    let mut drift = 0.0_f64;
    for _ in 0..steps {
        sstp_step(&m, &mut st, &mut frame, &cfg)?;
        drift = drift.max((trajectory_energy(&m, &frame, &st)? - e0).abs() / e0.abs());
    }
    st.x[1] = -st.x[1];
    for _ in 0..steps {
        sstp_step(&m, &mut st, &mut frame, &cfg)?;
    }
    st.x[1] = -st.x[1];
    let back = st.x.iter().zip(&x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((drift, back))
}

fn adiabatic_suite() -> Vec<CheckItem> {
    const S: &str = "adiabatic";
    match adiabatic_conservation(10_000, 1e-3) {
        Ok((drift, back)) => vec![
            item(S, "energy_drift", drift, Relation::Below, 1e-6),
            item(S, "time_reversal", back, Relation::Below, 1e-10),
        ],
        Err(e) => vec![failed(S, "conservation", e)],
    }
}

/// Worst relative energy error of successful jumps and the number of
/// draws whose frustration disagrees with the discriminant sign.
pub fn jump_conservation(draws: usize, seed: u64) -> qclsim_core::Result<(f64, usize)> {
    let mut rng = sampling_rng(seed);
    let mut worst = 0.0_f64;
    let mut misclassified = 0;
    for _ in 0..draws {
        let d = rng.random_range(1..4usize);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-3 {
            continue;
        }
        let d_hat: Vec<f64> = raw.iter().map(|v| v / n).collect();
        let mass = rng.random_range(0.2..5.0);
        let de = rng.random_range(-3.0..3.0);
        let along: f64 = p.iter().zip(&d_hat).map(|(a, b)| a * b).sum();
        let disc = along * along + 2.0 * mass * de;
        match momentum_jump(&p, &d_hat, de, mass)? {
            JumpOutcome::Jumped(q) => {
                if disc < 0.0 {
                    misclassified += 1;
                }
                let k0: f64 = p.iter().map(|v| v * v).sum::<f64>() / (2.0 * mass);
                let k1: f64 = q.iter().map(|v| v * v).sum::<f64>() / (2.0 * mass);
                worst = worst.max((k1 - k0 - de).abs() / k0.max(k1).max(1.0));
            }
            JumpOutcome::Frustrated => {
                if disc >= 0.0 {
                    misclassified += 1;
                }
            }
        }
    }
    Ok((worst, misclassified))
}

fn jump_suite() -> Vec<CheckItem> {
    const S: &str = "jump";
    match jump_conservation(10_000, 3) {
        Ok((worst, wrong)) => vec![
            item(S, "energy_conservation", worst, Relation::Below, 1e-12),
            item(S, "frustration_classification", wrong as f64, Relation::Below, 0.5),
        ],
        Err(e) => vec![failed(S, "momentum_jump", e)],
    }
}

type Step<M> = fn(&M, &mut [f64], (usize, usize), &AdiabaticFrame, f64) -> qclsim_core::Result<AdiabaticFrame>;

/// Relative drift of the conserved extended energy over `steps` steps, and
/// the largest gap between `∫κ dt` and `β ΔH^T` along the way, with
/// `H^T` the thermostat-free energy on the lower surface.
pub fn extended_energy_drift<M: Model>(
    model: &M,
    x0: &[f64],
    step: Step<M>,
    steps: usize,
    dt: f64,
) -> qclsim_core::Result<(f64, f64)> {
    let qr = model.structure().position_range();
    let kt = match model.thermostat() {
        qclsim_core::Thermostat::Nose { kt, .. } | qclsim_core::Thermostat::Nhc { kt, .. } => kt,
        qclsim_core::Thermostat::None => 1.0,
    };
    let mut x = x0.to_vec();
    let mut f = build_frame(model, &x[qr.clone()], None)?;
    let energy = |x: &[f64], f: &AdiabaticFrame| -> qclsim_core::Result<f64> {
        Ok(model.classical_energy(x)? + f.energies[0])
    };
    let e0 = energy(&x, &f)?;
    let ht0 = thermostat_free_energy(model, &x)? + f.energies[0];
    let mut kappa_integral = 0.0;
    let mut kappa = compressibility(model, &x);
    let (mut drift, mut gap) = (0.0_f64, 0.0_f64);
    for _ in 0..steps {
        f = step(model, &mut x, (0, 0), &f, dt)?;
        let next = compressibility(model, &x);
        kappa_integral += 0.5 * dt * (kappa + next);
        kappa = next;
        drift = drift.max(((energy(&x, &f)? - e0) / e0).abs());
        let ht = thermostat_free_energy(model, &x)? + f.energies[0];
        gap = gap.max((kappa_integral - (ht - ht0) / kt).abs());
    }
    Ok((drift, gap))
}

/// `(iL + κ)W / scale` for the order-0 stationary weight at `x`, with
/// derivatives by central differences.
pub fn stationarity_residual<M: Model>(model: &M, x: &[f64]) -> qclsim_core::Result<f64> {
    let s = model.structure();
    let qr = s.position_range();
    let weight = |y: &[f64]| -> qclsim_core::Result<f64> {
        let f = build_frame(model, &y[qr.clone()], None)?;
        Ok(stationary_weight(model, &f, y, 0, (0, 0))?.re)
    };
    let frame = build_frame(model, &x[qr.clone()], None)?;
    let mut grad = model.classical_gradient(x)?;
    for (k, f) in qr.clone().zip(&frame.forces[0]) {
        grad[k] -= f;
    }
    let flow = s.flow(x, &grad)?;
    let mut residual = compressibility(model, x) * weight(x)?;
    let mut scale = residual.abs();
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        y[i] = x[i] + h;
        let up = weight(&y)?;
        y[i] = x[i] - h;
        let down = weight(&y)?;
        y[i] = x[i];
        let term = flow[i] * (up - down) / (2.0 * h);
        residual += term;
        scale += term.abs();
    }
    Ok((residual / scale).abs())
}

fn thermostat_suite() -> Vec<CheckItem> {
    const S: &str = "thermostat";
    let mut out = Vec::new();

    let m = quartic(0.5);
    let params = LangevinParams::new(0.0, 1.0, 1.0).expect("valid Langevin parameters");
    let mut rng = sampling_rng(4);
    let (mut xa, mut xb) = (vec![0.3, -0.6], vec![0.3, -0.6]);
    let identity = (|| -> qclsim_core::Result<f64> {
        let mut fa = build_frame(&m, &xa[..1], None)?;
        let mut fb = fa.clone();
        let mut worst = 0.0_f64;
        for _ in 0..1000 {
            fa = langevin_step(&m, &mut xa, (0, 0), &fa, &params, 0.01, &mut rng)?;
            fb = classical_step(&m, &mut xb, (0, 0), &fb, 0.01)?;
            worst = worst.max(xa.iter().zip(&xb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        Ok(worst)
    })();
    match identity {
        Ok(v) => out.push(item(S, "langevin_zero_friction_identity", v, Relation::Below, f64::MIN_POSITIVE)),
        Err(e) => out.push(failed(S, "langevin_zero_friction_identity", e)),
    }

    let nose = NoseExtension::new(harmonic(0.3), 1.0, 1.0, 1, 1.0).expect("valid Nosé parameters");
    match extended_energy_drift(&nose, &[1.0, 0.0, 0.5, 0.2], nose_hoover_step, 20_000, 1e-3) {
        Ok((drift, gap)) => {
            out.push(item(S, "nose_extended_energy", drift, Relation::Below, 1e-6));
            out.push(item(S, "nose_compressibility_integral", gap, Relation::Below, 1e-5));
        }
        Err(e) => out.push(failed(S, "nose_extended_energy", e)),
    }
    let chain = NhcExtension::new(harmonic(0.3), 1.0, 0.5, 1.0, 1, 1.0).expect("valid chain parameters");
    match extended_energy_drift(&chain, &[1.0, 0.0, 0.0, 0.5, 0.2, -0.3], nhc_step, 20_000, 1e-3) {
        Ok((drift, _)) => out.push(item(S, "nhc_extended_energy", drift, Relation::Below, 1e-5)),
        Err(e) => out.push(failed(S, "nhc_extended_energy", e)),
    }

    let stat = NoseExtension::new(quartic(0.7), 1.3, 0.8, 1, 1.0).expect("valid Nosé parameters");
    let mut rng = sampling_rng(5);
    let worst = (0..10).try_fold(0.0_f64, |acc, _| {
        let x = random_point(&stat, &mut rng);
        stationarity_residual(&stat, &x).map(|r| acc.max(r))
    });
    match worst {
        Ok(v) => out.push(item(S, "order_zero_stationarity", v, Relation::Below, 1e-6)),
        Err(e) => out.push(failed(S, "order_zero_stationarity", e)),
    }
    out
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Geometric phase error of a closed latitude loop against the solid angle.
pub fn loop_phase_error(theta: f64, b: f64, steps: usize) -> qclsim_core::Result<f64> {
    let m = SpinBathModel::new(0.0, 0.0, 1.0, 0.8, b, 1.0)?;
    let s0 = unit(theta, 0.3);
    let rate = -b + s0[2];
    let dt = 2.0 * PI / rate.abs() / steps as f64;
    let mut st = SpinState::new(s0, (0, 1))?;
    let mut frame = build_spin_frame(&m, &s0)?;
    for _ in 0..steps {
        adiabatic_spin_propagate(&mut st, &m, &mut frame, dt)?;
    }
    let solid = 2.0 * PI * (1.0 - theta.cos()) * rate.signum();
    Ok((st.phase_geo - C64::from_polar(1.0, -solid)).norm())
}

/// `| |S| − 1 |` after `steps` mean-surface steps of the default spin model.
pub fn casimir_drift(steps: usize) -> qclsim_core::Result<f64> {
    let m = SpinBathModel::default();
    let mut s = unit(1.0, 0.3);
    for _ in 0..steps {
        s = spin_step(&s, |x| mean_surface_gradient(&m, x, (0, 1)), 0.01)?;
    }
    Ok((norm(&s) - 1.0).abs())
}

/// Distance of `S(π/(2b))` from `(0,1,0)` for precession about `z` from `(1,0,0)`.
pub fn precession_error(b: f64, steps: usize) -> qclsim_core::Result<f64> {
    let dt = PI / (2.0 * b) / steps as f64;
    let mut s = [1.0, 0.0, 0.0];
    for _ in 0..steps {
        s = spin_step(&s, |_| Ok([0.0, 0.0, b]), dt)?;
    }
    Ok(s[0].abs().max((s[1] - 1.0).abs()).max(s[2].abs()))
}

fn spin_suite() -> Vec<CheckItem> {
    const S: &str = "spin";
    let mut out = Vec::new();
    match casimir_drift(100_000) {
        Ok(v) => out.push(item(S, "casimir", v, Relation::Below, 1e-12)),
        Err(e) => out.push(failed(S, "casimir", e)),
    }
    match precession_error(1.7, 1000) {
        Ok(v) => out.push(item(S, "precession", v, Relation::Below, 1e-8)),
        Err(e) => out.push(failed(S, "precession", e)),
    }
    match loop_phase_error(PI / 3.0, 0.0, 4000) {
        Ok(v) => out.push(item(S, "geometric_phase", v, Relation::Below, 1e-4)),
        Err(e) => out.push(failed(S, "geometric_phase", e)),
    }
    out
}

fn mean_square(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    s / n as f64
}

fn sampling_suite() -> Vec<CheckItem> {
    const S: &str = "sampling";
    let mut out = Vec::new();
    let mut rng = sampling_rng(6);
    let n = 20_000;
    let h = TwoLevelHarmonic::new(1.0, 0.0, 1.3, 0.8, 1.0).expect("valid harmonic parameters");
    match sample_canonical(&h, 1.5, 1.0, n, &mut rng) {
        Ok(xs) => {
            let p2 = mean_square(xs.iter().map(|x| x[1])) / 0.8;
            let q2 = mean_square(xs.iter().map(|x| x[0])) * 0.8 * 1.3 * 1.3;
            out.push(item(S, "canonical_kinetic", (p2 / 1.5 - 1.0).abs(), Relation::Below, 0.03));
            out.push(item(S, "canonical_potential", (q2 / 1.5 - 1.0).abs(), Relation::Below, 0.03));
        }
        Err(e) => out.push(failed(S, "canonical", e)),
    }
    let quartic = quartic(0.0);
    match sample_canonical(&quartic, 1.0, 1.0, 5000, &mut rng) {
        Ok(xs) => {
            let p2 = mean_square(xs.iter().map(|x| x[1]));
            out.push(item(S, "metropolis_kinetic", (p2 - 1.0).abs(), Relation::Below, 0.06));
        }
        Err(e) => out.push(failed(S, "metropolis", e)),
    }
    match sample_wigner_gaussian(2.0, 1.5, 1.0, n, &mut rng) {
        Ok(qp) => {
            let q2 = mean_square(qp.iter().map(|v| v.0)) / (1.0 / (2.0 * 2.0 * 1.5));
            let p2 = mean_square(qp.iter().map(|v| v.1)) / (0.5 * 2.0 * 1.5);
            out.push(item(S, "wigner_variances", (q2 - 1.0).abs().max((p2 - 1.0).abs()), Relation::Below, 0.03));
        }
        Err(e) => out.push(failed(S, "wigner", e)),
    }
    let sphere = sample_sphere(n, &mut rng);
    let off = sphere.iter().map(|s| (norm(s) - 1.0).abs()).fold(0.0, f64::max);
    let mean_z = sphere.iter().map(|s| s[2]).sum::<f64>() / n as f64;
    out.push(item(S, "sphere_unit", off, Relation::Below, 1e-12));
    out.push(item(S, "sphere_isotropy", mean_z.abs(), Relation::Below, 4.0 / (3.0 * n as f64).sqrt()));
    out
}

/// Human-readable summary, one line per item.
pub fn summary(items: &[CheckItem]) -> String {
    let mut text = String::new();
    for i in items {
        let rel = match i.relation {
            Relation::Below => "<",
            Relation::Above => ">",
        };
        let mark = if i.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{mark} {}/{}: {:.3e} {rel} {:.1e}\n", i.suite, i.name, i.value, i.bound));
    }
    let passed = items.iter().filter(|i| i.passed).count();
    text.push_str(&format!("{passed}/{} checks passed\n", items.len()));
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nonsense"), Err(CliError::Usage(_))));
    }

    #[test]
    fn fast_suites_pass() {
        for suite in ["bracket", "adiabatic", "jump", "spin", "sampling", "thermostat"] {
            let items = run_suite(suite).unwrap();
            assert!(!items.is_empty());
            for i in &items {
                assert!(i.passed, "{i:?}");
            }
        }
    }

    #[test]
    fn item_relations() {
        assert!(item("s", "n", 1.0, Relation::Below, 2.0).passed);
        assert!(!item("s", "n", 3.0, Relation::Below, 2.0).passed);
        assert!(item("s", "n", 3.0, Relation::Above, 2.0).passed);
        assert!(!item("s", "n", f64::NAN, Relation::Above, 2.0).passed);
    }
}
