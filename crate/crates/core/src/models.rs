//! Catalog of model Hamiltonians.
//!
//! Every model splits its Hamiltonian into a scalar classical part and an
//! adiabatic operator `ĥ` acting on the subsystem. The classical coordinate
//! vector follows the layout of the model's [`StructureMatrix`]: positions
//! first, then any thermostat positions, then the matching momenta. A spin
//! model uses the three spin components and nothing else.

use std::fmt;

use crate::adiabatic::AdiabaticFrame;
use crate::bracket::{OperatorField, StructureKind, StructureMatrix};
use crate::error::{Error, Result};
use crate::linalg::{c, pauli_x, pauli_y, pauli_z, CMatrix};

/// Thermostat attached to a model's extended phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thermostat {
    None,
    Nose { m_eta: f64, kt: f64, n: usize },
    Nhc { m_eta1: f64, m_eta2: f64, kt: f64, n: usize },
}

pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn subsystem_dim(&self) -> usize;

    fn hbar(&self) -> f64;

    /// Bath mass; unused by spin models.
    fn mass(&self) -> f64 {
        1.0
    }

    fn structure(&self) -> StructureMatrix;

    /// Number of coordinates `ĥ` depends on.
    fn bath_dim(&self) -> usize {
        self.structure().position_range().len()
    }

    /// Adiabatic operator at the bath positions (or spin vector).
    fn h_matrix(&self, q: &[f64]) -> CMatrix;

    /// `∂ĥ/∂q_k` for every position coordinate.
    fn dh(&self, q: &[f64]) -> Vec<CMatrix>;

    /// Classical potential of the positions.
    fn potential(&self, q: &[f64]) -> f64;

    fn potential_gradient(&self, q: &[f64]) -> Vec<f64>;

    fn thermostat(&self) -> Thermostat {
        Thermostat::None
    }

    /// Angular frequency when the classical potential is exactly `½Mω²q²`.
    fn harmonic_frequency(&self) -> Option<f64> {
        None
    }

    /// Whether `ĥ` is real symmetric at every configuration.
    fn real_symmetric(&self) -> bool {
        true
    }

    /// Kinetic, potential and thermostat energy of a full coordinate vector.
    fn classical_energy(&self, x: &[f64]) -> Result<f64> {
        let s = self.structure();
        check_coords(&s, x)?;
        let m = self.mass();
        let kinetic: f64 = x[s.momentum_range()].iter().map(|p| p * p / (2.0 * m)).sum();
        let mut e = kinetic + self.potential(&x[s.position_range()]);
        let qe = &x[s.thermostat_position_range()];
        let pe = &x[s.thermostat_momentum_range()];
        match self.thermostat() {
            Thermostat::None => {}
            Thermostat::Nose { m_eta, kt, n } => {
                e += pe[0] * pe[0] / (2.0 * m_eta) + n as f64 * kt * qe[0];
            }
            Thermostat::Nhc { m_eta1, m_eta2, kt, n } => {
                e += pe[0] * pe[0] / (2.0 * m_eta1) + pe[1] * pe[1] / (2.0 * m_eta2);
                e += n as f64 * kt * qe[0] + kt * qe[1];
            }
        }
        Ok(e)
    }

    /// Gradient of [`Model::classical_energy`] over the full coordinate vector.
    fn classical_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.structure();
        check_coords(&s, x)?;
        let mut g = vec![0.0; x.len()];
        for (k, v) in s.position_range().zip(self.potential_gradient(&x[s.position_range()])) {
            g[k] = v;
        }
        let m = self.mass();
        for k in s.momentum_range() {
            g[k] = x[k] / m;
        }
        let qe = s.thermostat_position_range();
        let pe = s.thermostat_momentum_range();
        match self.thermostat() {
            Thermostat::None => {}
            Thermostat::Nose { m_eta, kt, n } => {
                g[qe.start] = n as f64 * kt;
                g[pe.start] = x[pe.start] / m_eta;
            }
            Thermostat::Nhc { m_eta1, m_eta2, kt, n } => {
                g[qe.start] = n as f64 * kt;
                g[qe.start + 1] = kt;
                g[pe.start] = x[pe.start] / m_eta1;
                g[pe.start + 1] = x[pe.start + 1] / m_eta2;
            }
        }
        Ok(g)
    }
}

fn check_coords(s: &StructureMatrix, x: &[f64]) -> Result<()> {
    if x.len() != s.dimension() {
        return Err(Error::DimensionMismatch {
            context: "model coordinates",
            expected: s.dimension(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `classical_energy + ½(E_α + E_α′)` on the surface of `pair`.
pub fn surface_energy<M: Model + ?Sized>(
    model: &M,
    frame: &AdiabaticFrame,
    pair: (usize, usize),
    x: &[f64],
) -> Result<f64> {
    let n = frame.energies.len();
    for idx in [pair.0, pair.1] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    Ok(model.classical_energy(x)? + 0.5 * (frame.energies[pair.0] + frame.energies[pair.1]))
}

/// The full operator-valued Hamiltonian `H(X) = H_cl(X)·1 + ĥ(q)` as a field
/// over the model's coordinate vector.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianField<'a, M: ?Sized>(pub &'a M);

impl<M: Model + ?Sized> OperatorField for HamiltonianField<'_, M> {
    fn coord_dim(&self) -> usize {
        self.0.structure().dimension()
    }

    fn subsystem_dim(&self) -> usize {
        self.0.subsystem_dim()
    }

    fn evaluate(&self, x: &[f64]) -> CMatrix {
        let s = self.0.structure();
        let e = self.0.classical_energy(x).unwrap_or(f64::NAN);
        let n = self.0.subsystem_dim();
        self.0.h_matrix(&x[s.position_range()]) + CMatrix::identity(n, n) * c(e)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        let s = self.0.structure();
        let g = self.0.classical_gradient(x).ok()?;
        let n = self.0.subsystem_dim();
        let mut out: Vec<CMatrix> = g.iter().map(|&v| CMatrix::identity(n, n) * c(v)).collect();
        for (k, d) in s.position_range().zip(self.0.dh(&x[s.position_range()])) {
            out[k] += d;
        }
        Some(out)
    }
}

/// Two-level subsystem on a quartic double well,
/// `ĥ = −ħΩσ_x − ħγ₀Qσ_z`, `V = (a/4)Q⁴ − (b/2)Q²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelQuartic {
    pub omega: f64,
    pub a_q: f64,
    pub b_q: f64,
    pub gamma0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl TwoLevelQuartic {
    pub fn new(omega: f64, a_q: f64, b_q: f64, gamma0: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Invalid(format!("mass must be positive, got {mass}")));
        }
        if !(a_q > 0.0) {
            return Err(Error::Invalid(format!("quartic coefficient must be positive, got {a_q}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { omega, a_q, b_q, gamma0, mass, hbar })
    }
}

impl Model for TwoLevelQuartic {
    fn name(&self) -> &'static str {
        "two_level_quartic"
    }
    fn subsystem_dim(&self) -> usize {
        2
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn structure(&self) -> StructureMatrix {
        StructureMatrix::canonical(1)
    }
    fn h_matrix(&self, q: &[f64]) -> CMatrix {
        pauli_x() * c(-self.hbar * self.omega) + pauli_z() * c(-self.hbar * self.gamma0 * q[0])
    }
    fn dh(&self, _q: &[f64]) -> Vec<CMatrix> {
        vec![pauli_z() * c(-self.hbar * self.gamma0)]
    }
    fn potential(&self, q: &[f64]) -> f64 {
        let q2 = q[0] * q[0];
        0.25 * self.a_q * q2 * q2 - 0.5 * self.b_q * q2
    }
    fn potential_gradient(&self, q: &[f64]) -> Vec<f64> {
        vec![self.a_q * q[0].powi(3) - self.b_q * q[0]]
    }
}

/// Two-level subsystem on a harmonic bath coordinate,
/// `ĥ = −ħΩσ_x − ħγ₀Qσ_z`, `V = ½Mω²Q²`. With `ω = 0` the bath is a free particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelHarmonic {
    pub omega: f64,
    pub gamma0: f64,
    pub bath_frequency: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl TwoLevelHarmonic {
    pub fn new(omega: f64, gamma0: f64, bath_frequency: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Invalid(format!("mass must be positive, got {mass}")));
        }
        if !(bath_frequency >= 0.0) {
            return Err(Error::Invalid(format!("bath frequency must be non-negative, got {bath_frequency}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { omega, gamma0, bath_frequency, mass, hbar })
    }
}

impl Model for TwoLevelHarmonic {
    fn name(&self) -> &'static str {
        "two_level_harmonic"
    }
    fn subsystem_dim(&self) -> usize {
        2
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn structure(&self) -> StructureMatrix {
        StructureMatrix::canonical(1)
    }
    fn h_matrix(&self, q: &[f64]) -> CMatrix {
        pauli_x() * c(-self.hbar * self.omega) + pauli_z() * c(-self.hbar * self.gamma0 * q[0])
    }
    fn dh(&self, _q: &[f64]) -> Vec<CMatrix> {
        vec![pauli_z() * c(-self.hbar * self.gamma0)]
    }
    fn potential(&self, q: &[f64]) -> f64 {
        0.5 * self.mass * self.bath_frequency.powi(2) * q[0] * q[0]
    }
    fn potential_gradient(&self, q: &[f64]) -> Vec<f64> {
        vec![self.mass * self.bath_frequency.powi(2) * q[0]]
    }
    fn harmonic_frequency(&self) -> Option<f64> {
        Some(self.bath_frequency)
    }
}

/// Two-level subsystem coupled to one classical spin,
/// `ĥ(S) = −Ωσ_x − c₁bσ_z − μS·σ`, classical part `−c₂bS_z + S_z²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBathModel {
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu: f64,
    pub b_field: f64,
    pub hbar: f64,
}

impl SpinBathModel {
    pub fn new(omega: f64, c1: f64, c2: f64, mu: f64, b_field: f64, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { omega, c1, c2, mu, b_field, hbar })
    }
}

impl Default for SpinBathModel {
    /// Ω = 1, c₁ = c₂ = 1, μ = 0.5, b = 1, ħ = 1.
    fn default() -> Self {
        Self { omega: 1.0, c1: 1.0, c2: 1.0, mu: 0.5, b_field: 1.0, hbar: 1.0 }
    }
}

impl Model for SpinBathModel {
    fn name(&self) -> &'static str {
        "spin_bath"
    }
    fn subsystem_dim(&self) -> usize {
        2
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn structure(&self) -> StructureMatrix {
        StructureMatrix::spin()
    }
    fn h_matrix(&self, s: &[f64]) -> CMatrix {
        pauli_x() * c(-self.omega - self.mu * s[0])
            + pauli_y() * c(-self.mu * s[1])
            + pauli_z() * c(-self.c1 * self.b_field - self.mu * s[2])
    }
    fn dh(&self, _s: &[f64]) -> Vec<CMatrix> {
        vec![pauli_x() * c(-self.mu), pauli_y() * c(-self.mu), pauli_z() * c(-self.mu)]
    }
    fn potential(&self, s: &[f64]) -> f64 {
        -self.c2 * self.b_field * s[2] + 0.5 * s[2] * s[2]
    }
    fn potential_gradient(&self, s: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, -self.c2 * self.b_field + s[2]]
    }
    fn real_symmetric(&self) -> bool {
        self.mu == 0.0
    }
}

/// Nosé extended system `Hᴺ = H + P_η²/2M_η + N k_B T Q_η`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoseExtension<M> {
    pub base: M,
    pub m_eta: f64,
    pub temperature: f64,
    pub n: usize,
    pub k_b: f64,
}

impl<M: Model> NoseExtension<M> {
    pub fn new(base: M, m_eta: f64, temperature: f64, n: usize, k_b: f64) -> Result<Self> {
        if base.structure().kind() != StructureKind::Canonical {
            return Err(Error::Invalid("Nosé extension needs a canonical base model".into()));
        }
        if !(m_eta > 0.0 && temperature > 0.0 && k_b > 0.0) {
            return Err(Error::Invalid("Nosé mass, temperature and k_B must be positive".into()));
        }
        Ok(Self { base, m_eta, temperature, n, k_b })
    }

    pub fn kt(&self) -> f64 {
        self.k_b * self.temperature
    }
}

/// Two-link Nosé–Hoover chain
/// `H + Σ P_ηk²/2M_ηk + N k_B T Q_η1 + k_B T Q_η2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NhcExtension<M> {
    pub base: M,
    pub m_eta1: f64,
    pub m_eta2: f64,
    pub temperature: f64,
    pub n: usize,
    pub k_b: f64,
}

impl<M: Model> NhcExtension<M> {
    pub fn new(base: M, m_eta1: f64, m_eta2: f64, temperature: f64, n: usize, k_b: f64) -> Result<Self> {
        if base.structure().kind() != StructureKind::Canonical {
            return Err(Error::Invalid("chain extension needs a canonical base model".into()));
        }
        if !(m_eta1 > 0.0 && m_eta2 > 0.0 && temperature > 0.0 && k_b > 0.0) {
            return Err(Error::Invalid("chain masses, temperature and k_B must be positive".into()));
        }
        Ok(Self { base, m_eta1, m_eta2, temperature, n, k_b })
    }

    pub fn kt(&self) -> f64 {
        self.k_b * self.temperature
    }
}

macro_rules! delegate_base {
    () => {
        fn subsystem_dim(&self) -> usize {
            self.base.subsystem_dim()
        }
        fn hbar(&self) -> f64 {
            self.base.hbar()
        }
        fn mass(&self) -> f64 {
            self.base.mass()
        }
        fn bath_dim(&self) -> usize {
            self.base.bath_dim()
        }
        fn h_matrix(&self, q: &[f64]) -> CMatrix {
            self.base.h_matrix(q)
        }
        fn dh(&self, q: &[f64]) -> Vec<CMatrix> {
            self.base.dh(q)
        }
        fn potential(&self, q: &[f64]) -> f64 {
            self.base.potential(q)
        }
        fn potential_gradient(&self, q: &[f64]) -> Vec<f64> {
            self.base.potential_gradient(q)
        }
        fn harmonic_frequency(&self) -> Option<f64> {
            self.base.harmonic_frequency()
        }
        fn real_symmetric(&self) -> bool {
            self.base.real_symmetric()
        }
    };
}

impl<M: Model> Model for NoseExtension<M> {
    fn name(&self) -> &'static str {
        "nose"
    }
    fn structure(&self) -> StructureMatrix {
        StructureMatrix::nose(self.base.bath_dim())
    }
    fn thermostat(&self) -> Thermostat {
        Thermostat::Nose { m_eta: self.m_eta, kt: self.kt(), n: self.n }
    }
    delegate_base!();
}

impl<M: Model> Model for NhcExtension<M> {
    fn name(&self) -> &'static str {
        "nhc"
    }
    fn structure(&self) -> StructureMatrix {
        StructureMatrix::nhc(self.base.bath_dim())
    }
    fn thermostat(&self) -> Thermostat {
        Thermostat::Nhc { m_eta1: self.m_eta1, m_eta2: self.m_eta2, kt: self.kt(), n: self.n }
    }
    delegate_base!();
}

impl Model for Box<dyn Model> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn structure(&self) -> StructureMatrix {
        (**self).structure()
    }
    fn thermostat(&self) -> Thermostat {
        (**self).thermostat()
    }
    fn classical_energy(&self, x: &[f64]) -> Result<f64> {
        (**self).classical_energy(x)
    }
    fn classical_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).classical_gradient(x)
    }
    fn subsystem_dim(&self) -> usize {
        (**self).subsystem_dim()
    }
    fn hbar(&self) -> f64 {
        (**self).hbar()
    }
    fn mass(&self) -> f64 {
        (**self).mass()
    }
    fn bath_dim(&self) -> usize {
        (**self).bath_dim()
    }
    fn h_matrix(&self, q: &[f64]) -> CMatrix {
        (**self).h_matrix(q)
    }
    fn dh(&self, q: &[f64]) -> Vec<CMatrix> {
        (**self).dh(q)
    }
    fn potential(&self, q: &[f64]) -> f64 {
        (**self).potential(q)
    }
    fn potential_gradient(&self, q: &[f64]) -> Vec<f64> {
        (**self).potential_gradient(q)
    }
    fn harmonic_frequency(&self) -> Option<f64> {
        (**self).harmonic_frequency()
    }
    fn real_symmetric(&self) -> bool {
        (**self).real_symmetric()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::build_frame;
    use crate::linalg::{hermiticity_error, max_abs};

    fn quartic() -> TwoLevelQuartic {
        TwoLevelQuartic::new(1.0, 4.0, 2.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quartic_matrix_at_origin_and_unit_coupling() {
        let m = quartic();
        let h0 = m.h_matrix(&[0.0]);
        assert!(max_abs(&(h0 + pauli_x())) == 0.0);
        let h1 = m.h_matrix(&[1.0]);
        let expected = CMatrix::from_row_slice(2, 2, &[c(-2.0), c(-1.0), c(-1.0), c(2.0)]);
        assert!(max_abs(&(h1 - expected)) < 1e-15);
    }

    #[test]
    fn spin_model_decoupled_limit() {
        let m = SpinBathModel::new(1.3, 0.0, 0.7, 0.0, 2.0, 1.0).unwrap();
        let s = [0.6, 0.0, 0.8];
        assert!(max_abs(&(m.h_matrix(&s) + pauli_x() * c(1.3))) < 1e-15);
        let expected = -0.7 * 2.0 * 0.8 + 0.5 * 0.64;
        assert!((m.classical_energy(&s).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn classical_energies() {
        let m = quartic();
        assert_eq!(m.classical_energy(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(m.classical_energy(&[1.0, 2.0]).unwrap(), 2.0);

        let free = TwoLevelHarmonic::new(1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let nose = NoseExtension::new(free, 1.0, 2.0, 1, 1.0).unwrap();
        assert_eq!(nose.classical_energy(&[0.0, 1.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(nose.classical_energy(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn surface_energies() {
        let m = quartic();
        let x = [0.0, 0.5];
        let frame = build_frame(&m, &x[..1], None).unwrap();
        let e_cl = m.classical_energy(&x).unwrap();
        assert!((surface_energy(&m, &frame, (0, 1), &x).unwrap() - e_cl).abs() < 1e-15);
        let diag = surface_energy(&m, &frame, (0, 0), &x).unwrap();
        assert!((diag - (e_cl + frame.energies[0])).abs() < 1e-15);
        assert!(surface_energy(&m, &frame, (0, 2), &x).is_err());
    }

    #[test]
    fn quartic_eigenvalues_match_closed_form() {
        let m = quartic();
        for q in [-1.5, -0.2, 0.0, 0.7, 2.0] {
            let f = build_frame(&m, &[q], None).unwrap();
            let r = (m.omega.powi(2) + (m.gamma0 * q).powi(2)).sqrt();
            assert!((f.energies[0] + r).abs() < 1e-12);
            assert!((f.energies[1] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(TwoLevelQuartic::new(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(TwoLevelQuartic::new(1.0, 1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        let base = TwoLevelHarmonic::new(1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(NoseExtension::new(base, 0.0, 1.0, 1, 1.0).is_err());
    }

    #[test]
    fn hamiltonian_field_gradient_matches_differences() {
        use crate::bracket::{field_gradient, FnField};
        let base = TwoLevelHarmonic::new(0.8, 0.6, 1.1, 1.3, 1.0).unwrap();
        let model = NhcExtension::new(base, 0.7, 1.9, 1.4, 1, 1.0).unwrap();
        let field = HamiltonianField(&model);
        let x = [0.3, 0.2, -0.4, 0.9, -0.5, 0.6];
        let numeric = FnField::new(6, 2, |y: &[f64]| field.evaluate(y));
        let ga = field_gradient(&field, &x).unwrap();
        let gn = field_gradient(&numeric, &x).unwrap();
        for (a, n) in ga.iter().zip(&gn) {
            assert!(max_abs(&(a - n)) < 1e-8);
        }
        assert!(hermiticity_error(&field.evaluate(&x)) < 1e-15);
    }
}
