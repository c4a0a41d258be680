//! Adiabatic frames: eigen-decomposition of `ĥ` at a configuration together
//! with Hellmann–Feynman forces and nonadiabatic coupling vectors.
//!
//! Two-level real-symmetric operators use the closed-form mixing angle. All
//! other operators are diagonalised numerically; off-diagonal couplings then
//! come from the off-diagonal Hellmann–Feynman identity and diagonal ones
//! from central differences of eigenvectors held in the canonical gauge.
//!
//! Eigenvector signs are matched to a reference frame when one is supplied,
//! which keeps real frames continuous along a trajectory. Complex phases are
//! never rotated, so the diagonal couplings stay consistent with the stored
//! vectors and carry the geometric phase.

use crate::bracket::fd_step;
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, matrix_element, overlap, CMatrix, C64};
use crate::models::Model;

/// Eigenvalues, eigenvectors, forces and couplings of `ĥ` at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticFrame {
    /// Ascending eigenvalues `E_α`.
    pub energies: Vec<f64>,
    /// Eigenvectors `|α⟩` as columns.
    pub vectors: CMatrix,
    /// `forces[α][k] = −∂E_α/∂q_k`.
    pub forces: Vec<Vec<f64>>,
    /// Flattened `d_{αβ,k} = ⟨α|∂_k β⟩`, index `(α·n + β)·dim + k`.
    pub couplings: Vec<C64>,
    /// Positions at which the frame was built.
    pub config: Vec<f64>,
    /// Unordered pairs whose surfaces are closer than the degeneracy tolerance.
    pub degenerate: Vec<(usize, usize)>,
    pub hbar: f64,
}

/// Relative degeneracy tolerance, scaled by `max|E|`.
pub const DEGENERACY_TOL: f64 = 1e-8;

impl AdiabaticFrame {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn dim(&self) -> usize {
        self.config.len()
    }

    /// The coupling vector `d_{αβ}`.
    pub fn coupling(&self, a: usize, b: usize) -> &[C64] {
        let (n, d) = (self.n(), self.dim());
        let start = (a * n + b) * d;
        &self.couplings[start..start + d]
    }

    pub fn is_degenerate(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.degenerate.contains(&key)
    }

    fn check_index(&self, a: usize) -> Result<()> {
        if a < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: a, dim: self.n() })
        }
    }

    /// Ground-state-first matrix element `⟨α|m|β⟩`.
    pub fn element(&self, m: &CMatrix, a: usize, b: usize) -> C64 {
        matrix_element(&self.vectors, m, a, b)
    }
}

/// Builds the frame of `model` at positions `q`.
///
/// With a `reference`, each eigenvector's sign is chosen so that its overlap
/// with the matching reference vector has non-negative real part.
pub fn build_frame<M: Model + ?Sized>(
    model: &M,
    q: &[f64],
    reference: Option<&AdiabaticFrame>,
) -> Result<AdiabaticFrame> {
    if q.len() != model.bath_dim() {
        return Err(Error::DimensionMismatch {
            context: "frame configuration",
            expected: model.bath_dim(),
            found: q.len(),
        });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frame configuration"));
    }
    let h = model.h_matrix(q);
    let dh = model.dh(q);
    let n = h.nrows();
    let mut frame = if n == 2 && model.real_symmetric() {
        two_level_frame(&h, &dh, q, model.hbar())
    } else {
        numeric_frame(model, &h, &dh, q)
    };
    if let Some(r) = reference {
        align_signs(&mut frame, r);
    }
    let finite = frame.energies.iter().all(|e| e.is_finite())
        && frame.forces.iter().flatten().all(|f| f.is_finite())
        && frame.couplings.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if finite {
        Ok(frame)
    } else {
        Err(Error::NonFinite("adiabatic frame"))
    }
}

fn degenerate_pairs(energies: &[f64]) -> Vec<(usize, usize)> {
    let scale = energies.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let tol = DEGENERACY_TOL * scale;
    let mut out = Vec::new();
    for a in 0..energies.len() {
        for b in a + 1..energies.len() {
            if (energies[a] - energies[b]).abs() <= tol {
                out.push((a, b));
            }
        }
    }
    out
}

fn hf_forces(vectors: &CMatrix, dh: &[CMatrix]) -> Vec<Vec<f64>> {
    (0..vectors.ncols())
        .map(|a| dh.iter().map(|g| -matrix_element(vectors, g, a, a).re).collect())
        .collect()
}

fn two_level_frame(h: &CMatrix, dh: &[CMatrix], q: &[f64], hbar: f64) -> AdiabaticFrame {
    let mean = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let delta = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = h[(0, 1)].re;
    let r = delta.hypot(off);
    let theta = off.atan2(delta);
    let (s, co) = (0.5 * theta).sin_cos();
    let vectors = CMatrix::from_row_slice(2, 2, &[c(-s), c(co), c(co), c(s)]);
    let energies = vec![mean - r, mean + r];
    let degenerate = degenerate_pairs(&energies);
    let d = q.len();
    let mut couplings = vec![c(0.0); 4 * d];
    if degenerate.is_empty() {
        for (k, g) in dh.iter().enumerate() {
            let d_delta = 0.5 * (g[(0, 0)].re - g[(1, 1)].re);
            let d_off = g[(0, 1)].re;
            let half_dtheta = 0.5 * (delta * d_off - off * d_delta) / (r * r);
            couplings[d + k] = c(half_dtheta);
            couplings[2 * d + k] = c(-half_dtheta);
        }
    }
    AdiabaticFrame {
        forces: hf_forces(&vectors, dh),
        energies,
        vectors,
        couplings,
        config: q.to_vec(),
        degenerate,
        hbar,
    }
}

fn numeric_frame<M: Model + ?Sized>(model: &M, h: &CMatrix, dh: &[CMatrix], q: &[f64]) -> AdiabaticFrame {
    let (energies, vectors) = eigh(h);
    let n = energies.len();
    let d = q.len();
    let degenerate = degenerate_pairs(&energies);
    let mut couplings = vec![c(0.0); n * n * d];
    for a in 0..n {
        for b in 0..n {
            if a == b || degenerate.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            let gap = energies[b] - energies[a];
            for (k, g) in dh.iter().enumerate() {
                couplings[(a * n + b) * d + k] = matrix_element(&vectors, g, a, b) / gap;
            }
        }
    }
    let mut qs = q.to_vec();
    for k in 0..d {
        let step = fd_step(q[k]);
        qs[k] = q[k] + step;
        let (_, up) = eigh(&model.h_matrix(&qs));
        qs[k] = q[k] - step;
        let (_, down) = eigh(&model.h_matrix(&qs));
        qs[k] = q[k];
        for a in 0..n {
            let diff = overlap(&vectors, a, &up, a) - overlap(&vectors, a, &down, a);
            couplings[(a * n + a) * d + k] = diff / (2.0 * step);
        }
    }
    AdiabaticFrame {
        forces: hf_forces(&vectors, dh),
        energies,
        vectors,
        couplings,
        config: q.to_vec(),
        degenerate,
        hbar: model.hbar(),
    }
}

fn align_signs(frame: &mut AdiabaticFrame, reference: &AdiabaticFrame) {
    let n = frame.n();
    let d = frame.dim();
    let signs: Vec<f64> = (0..n)
        .map(|a| if overlap(&reference.vectors, a, &frame.vectors, a).re < 0.0 { -1.0 } else { 1.0 })
        .collect();
    if signs.iter().all(|&s| s > 0.0) {
        return;
    }
    for (a, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            for e in frame.vectors.column_mut(a).iter_mut() {
                *e = -*e;
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let s = signs[a] * signs[b];
            for k in 0..d {
                frame.couplings[(a * n + b) * d + k] *= s;
            }
        }
    }
}

/// `(E_α − E_α′)/ħ`.
pub fn bohr_frequency(frame: &AdiabaticFrame, a: usize, a_prime: usize) -> Result<f64> {
    frame.check_index(a)?;
    frame.check_index(a_prime)?;
    Ok((frame.energies[a] - frame.energies[a_prime]) / frame.hbar)
}

/// Shift vector `(E_α − E_β) d_{αβ} / ((P/M)·d_{αβ})` along the real part of the coupling.
pub fn shift_vector(frame: &AdiabaticFrame, a: usize, b: usize, p: &[f64], mass: f64) -> Result<Vec<f64>> {
    frame.check_index(a)?;
    frame.check_index(b)?;
    if p.len() != frame.dim() {
        return Err(Error::DimensionMismatch {
            context: "shift vector momentum",
            expected: frame.dim(),
            found: p.len(),
        });
    }
    let de = frame.energies[a] - frame.energies[b];
    let d: Vec<f64> = frame.coupling(a, b).iter().map(|z| z.re).collect();
    if de == 0.0 {
        return Ok(vec![0.0; d.len()]);
    }
    let proj: f64 = p.iter().zip(&d).map(|(pi, di)| pi / mass * di).sum();
    if proj == 0.0 || !proj.is_finite() {
        return Err(Error::NoTransitionDirection);
    }
    Ok(d.iter().map(|di| de * di / proj).collect())
}

/// Frame over the three spin components plus the geometric-phase vectors
/// `φ_α = −i d^S_{αα}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFrame {
    pub frame: AdiabaticFrame,
    pub geo: Vec<[f64; 3]>,
}

impl SpinFrame {
    /// Geometric-phase rates `φ_α·Ṡ` for every surface.
    pub fn geo_rates(&self, s_dot: &[f64; 3]) -> Vec<f64> {
        self.geo.iter().map(|g| g.iter().zip(s_dot).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Frame of a spin-bath model at the unit spin vector `s`, in the canonical gauge.
pub fn build_spin_frame<M: Model + ?Sized>(model: &M, s: &[f64; 3]) -> Result<SpinFrame> {
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotUnitVector(norm));
    }
    let frame = build_frame(model, s, None)?;
    let geo = (0..frame.n())
        .map(|a| {
            let d = frame.coupling(a, a);
            [d[0].im, d[1].im, d[2].im]
        })
        .collect();
    Ok(SpinFrame { frame, geo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::models::{SpinBathModel, TwoLevelHarmonic, TwoLevelQuartic};

    fn quartic(gamma0: f64) -> TwoLevelQuartic {
        TwoLevelQuartic::new(1.0, 1.0, 1.0, gamma0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn frame_at_origin() {
        let m = TwoLevelQuartic::new(1.5, 1.0, 1.0, 0.6, 1.0, 1.0).unwrap();
        let f = build_frame(&m, &[0.0], None).unwrap();
        assert!((f.energies[0] + 1.5).abs() < 1e-15 && (f.energies[1] - 1.5).abs() < 1e-15);
        assert!((f.coupling(0, 1)[0].norm() - 0.6 / 3.0).abs() < 1e-15);
        assert!(f.forces[0][0].abs() < 1e-15 && f.forces[1][0].abs() < 1e-15);
    }

    #[test]
    fn uncoupled_frame_has_no_couplings() {
        let m = quartic(0.0);
        for q in [-2.0, 0.0, 0.3, 5.0] {
            let f = build_frame(&m, &[q], None).unwrap();
            assert!(f.couplings.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn eigen_equation_and_antihermitian_couplings() {
        let m = quartic(0.8);
        for q in [-1.3, 0.2, 0.9] {
            let f = build_frame(&m, &[q], None).unwrap();
            let h = m.h_matrix(&[q]);
            for a in 0..2 {
                let r = &h * f.vectors.column(a) - f.vectors.column(a) * c(f.energies[a]);
                assert!(r.norm() < 1e-10);
            }
            assert!((f.coupling(0, 1)[0] + f.coupling(1, 0)[0].conj()).norm() < 1e-15);
            assert_eq!(f.coupling(0, 0)[0].norm(), 0.0);
        }
    }

    #[test]
    fn forces_match_energy_differences() {
        let m = quartic(1.7);
        let q = 0.37;
        let f = build_frame(&m, &[q], None).unwrap();
        let h = 1e-5;
        let up = build_frame(&m, &[q + h], None).unwrap();
        let down = build_frame(&m, &[q - h], None).unwrap();
        for a in 0..2 {
            let fd = -(up.energies[a] - down.energies[a]) / (2.0 * h);
            assert!((f.forces[a][0] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn off_diagonal_hellmann_feynman_identity() {
        let m = quartic(1.1);
        let q = -0.45;
        let f = build_frame(&m, &[q], None).unwrap();
        let dh = &m.dh(&[q])[0];
        let lhs = f.coupling(0, 1)[0] * (f.energies[1] - f.energies[0]);
        assert!((lhs - f.element(dh, 0, 1)).norm() < 1e-6);
    }

    #[test]
    fn numeric_path_agrees_with_analytic_couplings() {
        let m = quartic(0.9);
        let q = [0.7];
        let analytic = build_frame(&m, &q, None).unwrap();
        let h = m.h_matrix(&q);
        let numeric = numeric_frame(&m, &h, &m.dh(&q), &q);
        let sign = overlap(&analytic.vectors, 0, &numeric.vectors, 0).re.signum()
            * overlap(&analytic.vectors, 1, &numeric.vectors, 1).re.signum();
        let diff = analytic.coupling(0, 1)[0] - numeric.coupling(0, 1)[0] * sign;
        assert!(diff.norm() < 1e-10);
        assert!(numeric.coupling(0, 0)[0].norm() < 1e-8);
    }

    #[test]
    fn reference_alignment_keeps_overlaps_positive() {
        let m = quartic(3.0);
        let mut prev = build_frame(&m, &[-3.0], None).unwrap();
        let mut q = -3.0;
        while q < 3.0 {
            q += 0.01;
            let next = build_frame(&m, &[q], Some(&prev)).unwrap();
            for a in 0..2 {
                assert!(overlap(&prev.vectors, a, &next.vectors, a).re > 0.0);
            }
            let dc = (next.coupling(0, 1)[0] - prev.coupling(0, 1)[0]).norm();
            assert!(dc < 0.1, "coupling jumped by {dc} at {q}");
            prev = next;
        }
    }

    #[test]
    fn degeneracy_flagged() {
        let m = TwoLevelQuartic::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = build_frame(&m, &[0.0], None).unwrap();
        assert!(f.is_degenerate(0, 1) && f.is_degenerate(1, 0));
        assert!(f.couplings.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn bohr_frequencies() {
        let m = quartic(2.0);
        let f = build_frame(&m, &[0.0], None).unwrap();
        assert_eq!(bohr_frequency(&f, 1, 1).unwrap(), 0.0);
        assert_eq!(bohr_frequency(&f, 0, 1).unwrap(), -2.0);
        assert_eq!(bohr_frequency(&f, 1, 0).unwrap(), 2.0);
        assert!(bohr_frequency(&f, 0, 2).is_err());
    }

    fn one_d_frame(e: [f64; 2], d01: f64) -> AdiabaticFrame {
        AdiabaticFrame {
            energies: e.to_vec(),
            vectors: CMatrix::identity(2, 2),
            forces: vec![vec![0.0]; 2],
            couplings: vec![c(0.0), c(d01), c(-d01), c(0.0)],
            config: vec![0.0],
            degenerate: vec![],
            hbar: 1.0,
        }
    }

    #[test]
    fn shift_vectors() {
        let f = one_d_frame([3.0, 0.0], 0.5);
        let s = shift_vector(&f, 0, 1, &[2.0], 1.0).unwrap();
        assert!((s[0] - 1.5).abs() < 1e-15);
        let flat = one_d_frame([1.0, 1.0], 0.5);
        assert_eq!(shift_vector(&flat, 0, 1, &[2.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(shift_vector(&f, 0, 1, &[0.0], 1.0), Err(Error::NoTransitionDirection));
    }

    #[test]
    fn shift_vector_orthogonal_momentum_in_two_dimensions() {
        let f = AdiabaticFrame {
            energies: vec![1.0, 0.0],
            vectors: CMatrix::identity(2, 2),
            forces: vec![vec![0.0; 2]; 2],
            couplings: vec![c(0.0), c(0.0), c(1.0), c(0.0), c(-1.0), c(0.0), c(0.0), c(0.0)],
            config: vec![0.0; 2],
            degenerate: vec![],
            hbar: 1.0,
        };
        assert_eq!(shift_vector(&f, 0, 1, &[0.0, 3.0], 1.0), Err(Error::NoTransitionDirection));
    }

    #[test]
    fn spin_frame_without_coupling_is_flat() {
        let m = SpinBathModel::new(1.0, 0.5, 0.3, 0.0, 1.0, 1.0).unwrap();
        let f = build_spin_frame(&m, &[0.0, 0.6, 0.8]).unwrap();
        assert!(f.frame.couplings.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn spin_frame_rejects_non_unit_spin() {
        let m = SpinBathModel::new(1.0, 0.5, 0.3, 0.2, 1.0, 1.0).unwrap();
        assert!(matches!(build_spin_frame(&m, &[0.0, 0.0, 2.0]), Err(Error::NotUnitVector(_))));
    }

    #[test]
    fn spin_frame_diagonal_couplings_are_imaginary() {
        let m = SpinBathModel::new(0.7, 0.4, 0.2, 1.1, 1.0, 1.0).unwrap();
        for s in [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.48, -0.6, 0.64], [-0.36, 0.48, -0.8]] {
            let f = build_spin_frame(&m, &s).unwrap();
            for a in 0..2 {
                assert!(f.frame.coupling(a, a).iter().all(|z| z.re.abs() < 1e-8));
            }
        }
    }

    #[test]
    fn aligned_spin_frame_coupling_matches_eigenvector_differences() {
        let m = SpinBathModel::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let s = [1.0, 0.0, 0.0];
        let f = build_spin_frame(&m, &s).unwrap();
        let (_, v0) = eigh(&m.h_matrix(&s));
        let h = 1e-4;
        let mut ds = [c(0.0); 3];
        for (k, slot) in ds.iter_mut().enumerate() {
            let mut up = s;
            up[k] += h;
            let mut down = s;
            down[k] -= h;
            let (_, vu) = eigh(&m.h_matrix(&up));
            let (_, vd) = eigh(&m.h_matrix(&down));
            *slot = (overlap(&v0, 0, &vu, 1) - overlap(&v0, 0, &vd, 1)) / (2.0 * h);
        }
        for k in 0..3 {
            assert!((f.frame.coupling(0, 1)[k] - ds[k]).norm() < 1e-7);
        }
        let magnitude = ds.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((magnitude - 0.5_f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn harmonic_model_frame_matches_quartic_frame() {
        let a = TwoLevelHarmonic::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let b = TwoLevelQuartic::new(1.0, 1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let fa = build_frame(&a, &[0.4], None).unwrap();
        let fb = build_frame(&b, &[0.4], None).unwrap();
        assert_eq!(fa.energies, fb.energies);
        assert!(max_abs(&(fa.vectors - fb.vectors)) == 0.0);
    }
}
