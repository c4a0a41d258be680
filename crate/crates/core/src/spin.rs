//! Classical spin evolution and the adiabatic spin-bath propagator.
//!
//! A spin bath is a unit three-vector `S` whose flow is `Ṡ = ∇H × S`. The
//! integrator splits this flow into rotations about the coordinate axes and
//! composes them symmetrically, so `|S|` is preserved to rounding error and
//! the map is time-reversible.

use crate::adiabatic::{build_spin_frame, SpinFrame};
use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, matrix_element, C64};
use crate::models::Model;
use num_complex::ComplexFloat;

/// Tolerance on `|S| − 1` for inputs to the spin routines.
pub const UNIT_TOL: f64 = 1e-8;

const MIDPOINT_TOL: f64 = 1e-15;
const MIDPOINT_MAX_ITER: usize = 60;

/// State of one adiabatic spin-bath trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub s: [f64; 3],
    pub pair: (usize, usize),
    pub phase_dyn: C64,
    pub phase_geo: C64,
    pub weight: f64,
}

impl SpinState {
    pub fn new(s: [f64; 3], pair: (usize, usize)) -> Result<Self> {
        check_unit(&s)?;
        Ok(Self { s, pair, phase_dyn: C64::new(1.0, 0.0), phase_geo: C64::new(1.0, 0.0), weight: 1.0 })
    }

    /// Combined phase `phase_dyn · phase_geo`.
    pub fn phase(&self) -> C64 {
        self.phase_dyn * self.phase_geo
    }
}

pub fn norm(s: &[f64; 3]) -> f64 {
    (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
}

fn check_unit(s: &[f64; 3]) -> Result<()> {
    let n = norm(s);
    if !n.is_finite() {
        return Err(Error::NonFinite("spin vector"));
    }
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitVector(n));
    }
    Ok(())
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Spin flow `Ṡ = ∇H × S`.
pub fn spin_velocity(grad: &[f64; 3], s: &[f64; 3]) -> [f64; 3] {
    cross(grad, s)
}

/// Right-handed rotation of `s` about coordinate axis `axis` by `angle`.
pub fn rotate(s: &[f64; 3], axis: usize, angle: f64) -> [f64; 3] {
    let (sn, cs) = angle.sin_cos();
    let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut out = *s;
    out[i] = cs * s[i] - sn * s[j];
    out[j] = sn * s[i] + cs * s[j];
    out
}

fn axis_substep<G>(s: &[f64; 3], axis: usize, h: f64, grad: &mut G) -> Result<[f64; 3]>
where
    G: FnMut(&[f64; 3]) -> Result<[f64; 3]>,
{
    let mut angle = h * grad(s)?[axis];
    for _ in 0..MIDPOINT_MAX_ITER {
        let end = rotate(s, axis, angle);
        let mid = [0.5 * (s[0] + end[0]), 0.5 * (s[1] + end[1]), 0.5 * (s[2] + end[2])];
        let next = h * grad(&mid)?[axis];
        if !next.is_finite() {
            return Err(Error::NonFinite("spin gradient"));
        }
        let converged = (next - angle).abs() <= MIDPOINT_TOL * (1.0 + angle.abs());
        angle = next;
        if converged {
            break;
        }
    }
    Ok(rotate(s, axis, angle))
}

/// One step of the rotation-splitting spin integrator.
///
/// The step is the symmetric composition `X(dt/2) Y(dt/2) Z(dt) Y(dt/2) X(dt/2)`.
/// Each factor rotates `S` about one coordinate axis by the matching gradient
/// component times the substep, with the gradient evaluated at the chord
/// midpoint of the rotation. The midpoint keeps the rotation-axis component
/// of `S` unchanged.
pub fn spin_step<G>(s: &[f64; 3], mut grad: G, dt: f64) -> Result<[f64; 3]>
where
    G: FnMut(&[f64; 3]) -> Result<[f64; 3]>,
{
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("spin step needs dt > 0, got {dt}")));
    }
    let mut out = *s;
    for (axis, h) in [(0, 0.5 * dt), (1, 0.5 * dt), (2, dt), (1, 0.5 * dt), (0, 0.5 * dt)] {
        out = axis_substep(&out, axis, h, &mut grad)?;
    }
    let n = norm(&out);
    Ok(out.map(|v| v / n))
}

/// Gradient of the mean surface `H^{αα′} = V(S) + ½(E_α + E_α′)` with respect to `S`.
pub fn mean_surface_gradient<M: Model + ?Sized>(model: &M, s: &[f64; 3], pair: (usize, usize)) -> Result<[f64; 3]> {
    let (_, vectors) = eigh(&model.h_matrix(s));
    let n = vectors.ncols();
    if pair.0 >= n || pair.1 >= n {
        return Err(Error::IndexOutOfRange { index: pair.0.max(pair.1), dim: n });
    }
    let dv = model.potential_gradient(s);
    let dh = model.dh(s);
    let mut g = [0.0; 3];
    for k in 0..3 {
        let de = matrix_element(&vectors, &dh[k], pair.0, pair.0).re + matrix_element(&vectors, &dh[k], pair.1, pair.1).re;
        g[k] = dv[k] + 0.5 * de;
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite("spin gradient"))
    }
}

/// Mean-surface energy `V(S) + ½(E_α + E_α′)` from a frame at `S`.
pub fn spin_surface_energy<M: Model + ?Sized>(model: &M, frame: &SpinFrame, pair: (usize, usize)) -> f64 {
    model.potential(&frame.frame.config) + 0.5 * (frame.frame.energies[pair.0] + frame.frame.energies[pair.1])
}

/// Advance an adiabatic spin trajectory by `dt`.
///
/// `frame` must hold the frame at `state.s`; on return it holds the frame at
/// the new spin. The dynamical phase uses the Bohr frequency averaged over
/// the step. The geometric phase uses the trapezoid average of the rates
/// `Im d^S_{αα}` along the chord `ΔS`, so each increment is a pure phase.
pub fn adiabatic_spin_propagate<M: Model + ?Sized>(
    state: &mut SpinState,
    model: &M,
    frame: &mut SpinFrame,
    dt: f64,
) -> Result<()> {
    let (a, ap) = state.pair;
    if a != ap && frame.frame.is_degenerate(a, ap) {
        return Err(Error::Degenerate(a.min(ap), a.max(ap)));
    }
    let start = state.s;
    let end = spin_step(&start, |s| mean_surface_gradient(model, s, state.pair), dt)?;
    let next = build_spin_frame(model, &end)?;
    if a != ap {
        if next.frame.is_degenerate(a, ap) {
            return Err(Error::Degenerate(a.min(ap), a.max(ap)));
        }
        let hbar = model.hbar();
        let omega = 0.5
            * ((frame.frame.energies[a] - frame.frame.energies[ap]) + (next.frame.energies[a] - next.frame.energies[ap]))
            / hbar;
        state.phase_dyn *= C64::from_polar(1.0, -omega * dt);
        let ds = [end[0] - start[0], end[1] - start[1], end[2] - start[2]];
        let rates_start = frame.geo_rates(&ds);
        let rates_end = next.geo_rates(&ds);
        let dphi = 0.5 * ((rates_start[a] + rates_end[a]) - (rates_start[ap] + rates_end[ap]));
        state.phase_geo *= C64::from_polar(1.0, -dphi);
    }
    if !(state.phase_dyn.is_finite() && state.phase_geo.is_finite()) {
        return Err(Error::NonFinite("spin phases"));
    }
    state.s = end;
    *frame = next;
    Ok(())
}

/// One first-order transition term for a spin trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinTransitionTerm {
    pub target: (usize, usize),
    pub first_index: bool,
    pub from: usize,
    pub to: usize,
    /// `dt · d^S·(𝓑ˢ∇H_S)` with the same conjugation convention as the
    /// canonical sampler.
    pub factor: C64,
    /// Direction `½ΔE · 𝓑ˢ d^S` of the derivative part of the term.
    pub shift: [C64; 3],
}

/// First-order terms plus the magnitude of the higher-order operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinTransitionTerms {
    pub terms: Vec<SpinTransitionTerm>,
    /// `max |𝒮_{αα′,ββ′}|` over target pairs, for diagnostics.
    pub higher_order: f64,
    /// `max |d^S·𝓑ˢ∇H_S|` over the same targets, the rate counterpart of `factor`.
    pub first_order: f64,
}

impl SpinTransitionTerms {
    /// Ratio of higher-order to first-order magnitudes; zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.first_order == 0.0 {
            if self.higher_order == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.higher_order / self.first_order
        }
    }
}

fn cdot(a: &[C64], b: &[f64; 3]) -> C64 {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// `a · (𝓑ˢ b) = a · (b × S)` for complex vectors.
fn bracket_contract(a: &[C64], b: &[C64], s: &[f64; 3]) -> C64 {
    let bs = [b[1] * s[2] - b[2] * s[1], b[2] * s[0] - b[0] * s[2], b[0] * s[1] - b[1] * s[0]];
    a.iter().zip(bs.iter()).map(|(x, y)| *x * *y).sum()
}

fn bracket_apply(d: &[C64], s: &[f64; 3]) -> [C64; 3] {
    [d[1] * s[2] - d[2] * s[1], d[2] * s[0] - d[0] * s[2], d[0] * s[1] - d[1] * s[0]]
}

/// First-order spin transition terms at the current state, and the size of
/// the higher-order operator that the branch sampler leaves out.
pub fn spin_transition_terms<M: Model + ?Sized>(
    model: &M,
    frame: &SpinFrame,
    state: &SpinState,
    dt: f64,
) -> Result<SpinTransitionTerms> {
    let f = &frame.frame;
    let n = f.n();
    let (a, ap) = state.pair;
    if a >= n || ap >= n {
        return Err(Error::IndexOutOfRange { index: a.max(ap), dim: n });
    }
    let s = &state.s;
    let dv = model.potential_gradient(s);
    let s_dot = spin_velocity(&[dv[0], dv[1], dv[2]], s);
    let de = |x: usize, y: usize| f.energies[x] - f.energies[y];

    let mut terms = Vec::with_capacity(2 * n.saturating_sub(1));
    let mut first_order = 0.0_f64;
    for first_index in [true, false] {
        let from = if first_index { a } else { ap };
        for to in (0..n).filter(|&b| b != from) {
            if f.is_degenerate(from, to) {
                return Err(Error::Degenerate(from.min(to), from.max(to)));
            }
            let d = f.coupling(from, to);
            let rate = cdot(d, &s_dot);
            let shift = bracket_apply(d, s).map(|z| z * (0.5 * de(from, to)));
            let (factor, shift) = if first_index {
                (rate.conj() * dt, shift.map(|z| z.conj()))
            } else {
                (rate * dt, shift)
            };
            first_order = first_order.max(rate.abs());
            let target = if first_index { (to, ap) } else { (a, to) };
            terms.push(SpinTransitionTerm { target, first_index, from, to, factor, shift });
        }
    }

    let mut higher_order = 0.0_f64;
    let grad_sum: Vec<C64> = (0..3).map(|k| C64::new(-(f.forces[a][k] + f.forces[ap][k]), 0.0)).collect();
    let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    for b in 0..n {
        for bp in 0..n {
            let mut total = C64::new(0.0, 0.0);
            if ap == bp {
                for sg in 0..n {
                    total += 0.5 * de(a, sg) * bracket_contract(f.coupling(a, sg), f.coupling(sg, b), s);
                }
                total -= 0.5 * bracket_contract(&grad_sum, f.coupling(a, b), s);
            }
            if a == b {
                for sg in 0..n {
                    total += 0.5
                        * de(ap, sg)
                        * bracket_contract(&conj(f.coupling(ap, sg)), &conj(f.coupling(sg, bp)), s);
                }
                total -= 0.5 * bracket_contract(&grad_sum, &conj(f.coupling(ap, bp)), s);
            }
            total += 0.5 * de(a, b) * bracket_contract(f.coupling(a, b), &conj(f.coupling(ap, bp)), s);
            total += 0.5 * de(ap, bp) * bracket_contract(&conj(f.coupling(ap, bp)), f.coupling(a, b), s);
            higher_order = higher_order.max(total.abs());
        }
    }
    Ok(SpinTransitionTerms { terms, higher_order, first_order })
}

/// Root of `g` in the bracket `[lo, hi]` by the Illinois variant of
/// regula falsi, falling back to the bracket end with the smaller `|g|`.
fn refine_root<F: Fn(f64) -> f64>(g: &F, mut lo: f64, mut glo: f64, mut hi: f64, mut ghi: f64) -> f64 {
    if glo == 0.0 {
        return lo;
    }
    let mut side = 0;
    for _ in 0..100 {
        if ghi == 0.0 || (hi - lo).abs() <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
        let mid = (lo * ghi - hi * glo) / (ghi - glo);
        let mid = if mid.is_finite() && (mid - lo) * (mid - hi) < 0.0 { mid } else { 0.5 * (lo + hi) };
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            ghi = gm;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Spin after a transition from `old` to `new` pair along the tangent
/// direction `dir`, chosen on the great circle through `S` and `dir` as the
/// nearest point where the mean-surface energy of `new` equals that of
/// `old` at `S`. `None` when no such point exists (a frustrated jump).
pub fn spin_jump<M: Model + ?Sized>(
    model: &M,
    s: &[f64; 3],
    dir: &[f64; 3],
    old: (usize, usize),
    new: (usize, usize),
) -> Result<Option<[f64; 3]>> {
    let along: f64 = dir.iter().zip(s).map(|(a, b)| a * b).sum();
    let mut t = [dir[0] - along * s[0], dir[1] - along * s[1], dir[2] - along * s[2]];
    let tn = norm(&t);
    if tn == 0.0 || !tn.is_finite() {
        return Err(Error::NoTransitionDirection);
    }
    t.iter_mut().for_each(|v| *v /= tn);
    let energy = |x: &[f64; 3], pair: (usize, usize)| -> f64 {
        let e = eigvalsh(&model.h_matrix(x));
        model.potential(x) + 0.5 * (e[pair.0] + e[pair.1])
    };
    let target = energy(s, old);
    let at = |lam: f64| -> [f64; 3] {
        let (sn, cs) = lam.sin_cos();
        [cs * s[0] + sn * t[0], cs * s[1] + sn * t[1], cs * s[2] + sn * t[2]]
    };
    let g = |lam: f64| energy(&at(lam), new) - target;
    let g0 = g(0.0);
    if g0 == 0.0 {
        return Ok(Some(*s));
    }
    if !g0.is_finite() {
        return Err(Error::NonFinite("spin jump energy"));
    }
    const SCAN: usize = 64;
    let h = std::f64::consts::PI / SCAN as f64;
    let mut prev = [g0, g0];
    for k in 1..=SCAN {
        for (slot, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            let lam = sign * k as f64 * h;
            let gk = g(lam);
            if gk == 0.0 || gk.signum() != prev[slot].signum() {
                let best = refine_root(&g, sign * (k - 1) as f64 * h, prev[slot], lam, gk);
                let out = at(best);
                let n = norm(&out);
                return Ok(Some(out.map(|v| v / n)));
            }
            prev[slot] = gk;
        }
    }
    Ok(None)
}

/// One spin SSTP step: adiabatic propagation, then, with `transitions`,
/// one branch sampled with the same measure as the canonical sampler.
///
/// A jump moves `S` with [`spin_jump`] along the real part of the
/// coupling direction `𝓑ˢd^S`. Frustrated jumps leave the state and the
/// weight unchanged.
pub fn spin_sstp_step<M: Model + ?Sized, R: rand::Rng + ?Sized>(
    model: &M,
    state: &mut SpinState,
    frame: &mut SpinFrame,
    dt: f64,
    transitions: bool,
    rng: &mut R,
) -> Result<crate::sstp::StepOutcome> {
    let mut outcome = crate::sstp::StepOutcome::default();
    adiabatic_spin_propagate(state, model, frame, dt)?;
    if !transitions {
        return Ok(outcome);
    }
    let terms = spin_transition_terms(model, frame, state, dt)?;
    if terms.terms.is_empty() {
        return Ok(outcome);
    }
    let k = terms.terms.len();
    let cand = &terms.terms[rng.random_range(0..k)];
    let f = cand.factor;
    outcome.large_factor = f.norm() >= 1.0;
    if f.norm() == 0.0 {
        return Ok(outcome);
    }
    let (p_jump, q_stay) = crate::sstp::branch_probabilities(f);
    let dir = cand.shift.map(|z| z.re);
    let landing = match spin_jump(model, &state.s, &dir, state.pair, cand.target) {
        Ok(v) => v,
        Err(Error::NoTransitionDirection) => return Ok(outcome),
        Err(e) => return Err(e),
    };
    match landing {
        None => outcome.frustrated = true,
        Some(s_new) => {
            if rng.random::<f64>() < p_jump {
                state.s = s_new;
                state.pair = cand.target;
                state.weight *= f.norm() * k as f64 / p_jump;
                state.phase_dyn *= f / f.norm();
                *frame = build_spin_frame(model, &s_new)?;
                outcome.jumped = true;
            } else {
                state.weight /= q_stay;
            }
        }
    }
    Ok(outcome)
}
