//! Classical, quantum and quasi-Lie brackets of operator-valued phase-space
//! functions over arbitrary antisymmetric structure matrices.
//!
//! Every bracket is evaluated pointwise. Gradients come from the field when it
//! supplies them analytically and from central differences otherwise. The
//! quasi-Lie bracket is signed so that `∂W/∂t = -quasi_lie_bracket(H, W)`; for
//! scalar fields this makes it the negative of the Poisson bracket, and the
//! classical Liouville equation `∂f/∂t = {H, f}` is recovered.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, c, commutator, max_abs, CMatrix, C64, I};

/// Which family of bracket a [`StructureMatrix`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    /// Constant symplectic matrix over `(Q_1..Q_d, P_1..P_d)`.
    Canonical,
    /// `B_ab = Σ_c ε_abc S_c` over the spin components `(S_x, S_y, S_z)`.
    Spin,
    /// Nosé bracket over `(Q_1..Q_d, Q_η, P_1..P_d, P_η)`.
    Nose,
    /// Two-link Nosé–Hoover chain over `(Q_1..Q_d, Q_η1, Q_η2, P_1..P_d, P_η1, P_η2)`.
    Nhc,
}

impl StructureKind {
    pub fn label(self) -> &'static str {
        match self {
            StructureKind::Canonical => "canonical",
            StructureKind::Spin => "spin",
            StructureKind::Nose => "nose",
            StructureKind::Nhc => "nhc",
        }
    }
}

/// An antisymmetric, possibly coordinate-dependent, matrix defining a
/// classical bracket `A ←∇ B ∇→ C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureMatrix {
    kind: StructureKind,
    dof: usize,
}

impl StructureMatrix {
    pub fn canonical(dof: usize) -> Self {
        Self { kind: StructureKind::Canonical, dof }
    }

    pub fn spin() -> Self {
        Self { kind: StructureKind::Spin, dof: 3 }
    }

    pub fn nose(dof: usize) -> Self {
        Self { kind: StructureKind::Nose, dof }
    }

    pub fn nhc(dof: usize) -> Self {
        Self { kind: StructureKind::Nhc, dof }
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    /// Number of physical bath positions `d` (3 spin components for the spin bracket).
    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            StructureKind::Canonical => 2 * self.dof,
            StructureKind::Spin => 3,
            StructureKind::Nose => 2 * self.dof + 2,
            StructureKind::Nhc => 2 * self.dof + 4,
        }
    }

    /// Indices of the physical positions (the spin components for the spin bracket).
    pub fn position_range(&self) -> Range<usize> {
        match self.kind {
            StructureKind::Spin => 0..3,
            _ => 0..self.dof,
        }
    }

    /// Indices of the physical momenta; empty for the spin bracket.
    pub fn momentum_range(&self) -> Range<usize> {
        let d = self.dof;
        match self.kind {
            StructureKind::Canonical => d..2 * d,
            StructureKind::Spin => 3..3,
            StructureKind::Nose => d + 1..2 * d + 1,
            StructureKind::Nhc => d + 2..2 * d + 2,
        }
    }

    /// Indices of the thermostat positions `Q_η`.
    pub fn thermostat_position_range(&self) -> Range<usize> {
        let d = self.dof;
        match self.kind {
            StructureKind::Nose => d..d + 1,
            StructureKind::Nhc => d..d + 2,
            _ => 0..0,
        }
    }

    /// Indices of the thermostat momenta `P_η`.
    pub fn thermostat_momentum_range(&self) -> Range<usize> {
        let d = self.dof;
        match self.kind {
            StructureKind::Nose => 2 * d + 1..2 * d + 2,
            StructureKind::Nhc => 2 * d + 2..2 * d + 4,
            _ => 0..0,
        }
    }

    /// Equations of motion `Ẋ = B(X) ∇H` for a scalar gradient.
    pub fn flow(&self, x: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        check_dim("flow gradient", self.dimension(), grad.len())?;
        let b = self.evaluate(x)?;
        Ok((0..b.nrows())
            .map(|i| (0..b.ncols()).map(|j| b[(i, j)] * grad[j]).sum())
            .collect())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        check_dim("structure matrix point", n, x.len())?;
        let d = self.dof;
        let mut b = DMatrix::zeros(n, n);
        let mut set = |i: usize, j: usize, v: f64| {
            b[(i, j)] = v;
            b[(j, i)] = -v;
        };
        match self.kind {
            StructureKind::Canonical => {
                for i in 0..d {
                    set(i, d + i, 1.0);
                }
            }
            StructureKind::Spin => {
                set(0, 1, x[2]);
                set(0, 2, -x[1]);
                set(1, 2, x[0]);
            }
            StructureKind::Nose => {
                let (q_eta, p0, p_eta) = (d, d + 1, 2 * d + 1);
                for i in 0..d {
                    set(i, p0 + i, 1.0);
                    set(p0 + i, p_eta, -x[p0 + i]);
                }
                set(q_eta, p_eta, 1.0);
            }
            StructureKind::Nhc => {
                let (q_eta1, q_eta2) = (d, d + 1);
                let (p0, p_eta1, p_eta2) = (d + 2, 2 * d + 2, 2 * d + 3);
                for i in 0..d {
                    set(i, p0 + i, 1.0);
                    set(p0 + i, p_eta1, -x[p0 + i]);
                }
                set(q_eta1, p_eta1, 1.0);
                set(q_eta2, p_eta2, 1.0);
                set(p_eta1, p_eta2, -x[p_eta1]);
            }
        }
        Ok(b)
    }
}

/// A Hermitian-matrix-valued function of classical coordinates.
pub trait OperatorField: Send + Sync {
    /// Length of the coordinate vector.
    fn coord_dim(&self) -> usize;

    /// Dimension `n` of the subsystem Hilbert space.
    fn subsystem_dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> CMatrix;

    /// Analytic gradient, one `n×n` matrix per coordinate, when available.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<CMatrix>> {
        None
    }

    fn contains(&self, _x: &[f64]) -> bool {
        true
    }
}

impl<T: OperatorField + ?Sized> OperatorField for &T {
    fn coord_dim(&self) -> usize {
        (**self).coord_dim()
    }
    fn subsystem_dim(&self) -> usize {
        (**self).subsystem_dim()
    }
    fn evaluate(&self, x: &[f64]) -> CMatrix {
        (**self).evaluate(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        (**self).gradient(x)
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

impl<T: OperatorField + ?Sized> OperatorField for Box<T> {
    fn coord_dim(&self) -> usize {
        (**self).coord_dim()
    }
    fn subsystem_dim(&self) -> usize {
        (**self).subsystem_dim()
    }
    fn evaluate(&self, x: &[f64]) -> CMatrix {
        (**self).evaluate(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        (**self).gradient(x)
    }
    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }
}

/// Central-difference step `cbrt(ε)·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Gradient of `field` at `x`, analytic when the field provides one.
pub fn field_gradient<F: OperatorField + ?Sized>(field: &F, x: &[f64]) -> Result<Vec<CMatrix>> {
    let grad = match field.gradient(x) {
        Some(g) => g,
        None => central_gradient(field, x),
    };
    if grad.iter().all(all_finite) {
        Ok(grad)
    } else {
        Err(Error::NonFinite("field gradient"))
    }
}

fn central_gradient<F: OperatorField + ?Sized>(field: &F, x: &[f64]) -> Vec<CMatrix> {
    let mut xs = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            xs[i] = x[i] + h;
            let up = field.evaluate(&xs);
            xs[i] = x[i] - h;
            let down = field.evaluate(&xs);
            xs[i] = x[i];
            (up - down) / c(2.0 * h)
        })
        .collect()
}

/// An evaluated bracket together with the point it was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketResult {
    pub value: CMatrix,
    pub point: Vec<f64>,
}

impl BracketResult {
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.value)
    }
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, found })
    }
}

fn check_pair<A, B>(a: &A, b: &B, structure: &StructureMatrix, x: &[f64]) -> Result<()>
where
    A: OperatorField + ?Sized,
    B: OperatorField + ?Sized,
{
    let dim = structure.dimension();
    check_dim("first field coordinates", dim, a.coord_dim())?;
    check_dim("second field coordinates", dim, b.coord_dim())?;
    check_dim("bracket point", dim, x.len())?;
    check_dim("subsystem dimension", a.subsystem_dim(), b.subsystem_dim())?;
    if !a.contains(x) || !b.contains(x) {
        return Err(Error::OutOfDomain(format!("{x:?}")));
    }
    Ok(())
}

fn contract(ga: &[CMatrix], bm: &DMatrix<f64>, gb: &[CMatrix], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for (i, gi) in ga.iter().enumerate() {
        for (j, gj) in gb.iter().enumerate() {
            let bij = bm[(i, j)];
            if bij != 0.0 {
                out += gi * gj * c(bij);
            }
        }
    }
    out
}

/// `Σ_IJ (∇_I a) B_IJ (∇_J b)` with matrix-ordered products.
pub fn poisson_bracket<A, B>(
    a: &A,
    b: &B,
    structure: &StructureMatrix,
    x: &[f64],
) -> Result<BracketResult>
where
    A: OperatorField + ?Sized,
    B: OperatorField + ?Sized,
{
    check_pair(a, b, structure, x)?;
    let bm = structure.evaluate(x)?;
    let ga = field_gradient(a, x)?;
    let gb = field_gradient(b, x)?;
    let value = contract(&ga, &bm, &gb, a.subsystem_dim());
    finite(value, x)
}

/// `(i/ħ)[a,b] − ½ (a ←∇B∇→ b) + ½ (b ←∇B∇→ a)`.
pub fn quasi_lie_bracket<A, B>(
    a: &A,
    b: &B,
    structure: &StructureMatrix,
    x: &[f64],
    hbar: f64,
) -> Result<BracketResult>
where
    A: OperatorField + ?Sized,
    B: OperatorField + ?Sized,
{
    if !(hbar > 0.0) {
        return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
    }
    check_pair(a, b, structure, x)?;
    let n = a.subsystem_dim();
    let bm = structure.evaluate(x)?;
    let ga = field_gradient(a, x)?;
    let gb = field_gradient(b, x)?;
    let av = a.evaluate(x);
    let bv = b.evaluate(x);
    let quantum = commutator(&av, &bv) * (I / hbar);
    let ab = contract(&ga, &bm, &gb, n);
    let ba = contract(&gb, &bm, &ga, n);
    let value = quantum - ab * c(0.5) + ba * c(0.5);
    finite(value, x)
}

fn finite(value: CMatrix, x: &[f64]) -> Result<BracketResult> {
    if all_finite(&value) {
        Ok(BracketResult { value, point: x.to_vec() })
    } else {
        Err(Error::NonFinite("bracket value"))
    }
}

/// Step for the five-point stencil of nested brackets, `ε^{1/5}·max(1, |x|)`.
pub fn stencil_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.2) * x.abs().max(1.0)
}

/// Values at or below this are treated as a vanishing Jacobi residual.
pub const JACOBI_TOLERANCE: f64 = 1e-6;

/// The field `x ↦ quasi_lie_bracket(a, b)(x)`, differentiated with a
/// five-point stencil so it can appear inside another bracket.
pub struct BracketField<'a, A: ?Sized, B: ?Sized> {
    pub a: &'a A,
    pub b: &'a B,
    pub structure: StructureMatrix,
    pub hbar: f64,
}

impl<A, B> BracketField<'_, A, B>
where
    A: OperatorField + ?Sized,
    B: OperatorField + ?Sized,
{
    fn eval_checked(&self, x: &[f64]) -> Result<CMatrix> {
        quasi_lie_bracket(self.a, self.b, &self.structure, x, self.hbar).map(|r| r.value)
    }

    fn stencil_gradient(&self, x: &[f64]) -> Result<Vec<CMatrix>> {
        let mut xs = x.to_vec();
        let mut grad = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let h = stencil_step(x[i]);
            let mut at = |k: f64| -> Result<CMatrix> {
                xs[i] = x[i] + k * h;
                if !(self.a.contains(&xs) && self.b.contains(&xs)) {
                    return Err(Error::OutOfDomain(format!("stencil point {xs:?}")));
                }
                let v = self.eval_checked(&xs);
                xs[i] = x[i];
                v
            };
            let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
            grad.push((m2 - p2 + (p1 - m1) * c(8.0)) / c(12.0 * h));
        }
        Ok(grad)
    }
}

impl<A, B> OperatorField for BracketField<'_, A, B>
where
    A: OperatorField + ?Sized,
    B: OperatorField + ?Sized,
{
    fn coord_dim(&self) -> usize {
        self.a.coord_dim()
    }

    fn subsystem_dim(&self) -> usize {
        self.a.subsystem_dim()
    }

    fn evaluate(&self, x: &[f64]) -> CMatrix {
        let n = self.subsystem_dim();
        self.eval_checked(x)
            .unwrap_or_else(|_| CMatrix::from_element(n, n, C64::new(f64::NAN, f64::NAN)))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        let n = self.subsystem_dim();
        Some(self.stencil_gradient(x).unwrap_or_else(|_| {
            vec![CMatrix::from_element(n, n, C64::new(f64::NAN, f64::NAN)); x.len()]
        }))
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.a.contains(x) && self.b.contains(x)
    }
}

/// Max-element magnitude of the cyclic sum
/// `[a1,[a2,a3]] + [a3,[a1,a2]] + [a2,[a3,a1]]` of quasi-Lie brackets.
pub fn jacobi_residual<A1, A2, A3>(
    a1: &A1,
    a2: &A2,
    a3: &A3,
    structure: &StructureMatrix,
    x: &[f64],
    hbar: f64,
) -> Result<f64>
where
    A1: OperatorField,
    A2: OperatorField,
    A3: OperatorField,
{
    let inner = |a: &dyn OperatorField, b: &dyn OperatorField| -> Result<CMatrix> {
        let field = BracketField { a, b, structure: *structure, hbar };
        // surface stencil failures as errors rather than NaN gradients
        field.stencil_gradient(x)?;
        Ok(field.evaluate(x))
    };
    let nested = |outer: &dyn OperatorField, a: &dyn OperatorField, b: &dyn OperatorField| {
        inner(a, b)?;
        let field = BracketField { a, b, structure: *structure, hbar };
        quasi_lie_bracket(outer, &field, structure, x, hbar).map(|r| r.value)
    };
    let (a1, a2, a3): (&dyn OperatorField, &dyn OperatorField, &dyn OperatorField) = (a1, a2, a3);
    let sum = nested(a1, a2, a3)? + nested(a3, a1, a2)? + nested(a2, a3, a1)?;
    Ok(max_abs(&sum))
}

/// The triple `(Qσ_z, P²σ_x, Qσ_x)` over one canonical pair, whose quasi-Lie
/// brackets violate the Jacobi identity.
pub fn mixed_triple() -> [PolyField; 3] {
    use crate::linalg::{pauli_x, pauli_z};
    [
        PolyField::zero(2, 2).with_term(1.0, &[1, 0], pauli_z()),
        PolyField::zero(2, 2).with_term(1.0, &[0, 2], pauli_x()),
        PolyField::zero(2, 2).with_term(1.0, &[1, 0], pauli_x()),
    ]
}

/// One term `c · Π x_i^{k_i} · M` of a [`PolyField`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coeff: f64,
    pub powers: Vec<u32>,
    pub matrix: CMatrix,
}

/// Sum of monomials in the coordinates times constant Hermitian matrices,
/// with an exact gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    coord_dim: usize,
    n: usize,
    terms: Vec<PolyTerm>,
}

impl PolyField {
    pub fn zero(coord_dim: usize, n: usize) -> Self {
        Self { coord_dim, n, terms: Vec::new() }
    }

    /// Coordinate-independent matrix.
    pub fn constant(coord_dim: usize, matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        Self::zero(coord_dim, n).with_term(1.0, &[], matrix)
    }

    /// Scalar monomial `coeff · Π x_i^{powers_i}` times the `n×n` identity.
    pub fn monomial(coord_dim: usize, n: usize, coeff: f64, powers: &[u32]) -> Self {
        Self::zero(coord_dim, n).with_term(coeff, powers, CMatrix::identity(n, n))
    }

    /// Adds `coeff · Π x_i^{powers_i} · matrix`; missing trailing powers are zero.
    pub fn with_term(mut self, coeff: f64, powers: &[u32], matrix: CMatrix) -> Self {
        assert!(powers.len() <= self.coord_dim, "more powers than coordinates");
        assert_eq!(matrix.nrows(), self.n, "term matrix has wrong dimension");
        let mut p = powers.to_vec();
        p.resize(self.coord_dim, 0);
        self.terms.push(PolyTerm { coeff, powers: p, matrix });
        self
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    fn monomial_value(powers: &[u32], x: &[f64]) -> f64 {
        powers.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
    }
}

impl OperatorField for PolyField {
    fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    fn subsystem_dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for t in &self.terms {
            out += &t.matrix * c(t.coeff * Self::monomial_value(&t.powers, x));
        }
        out
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        let mut grad = vec![CMatrix::zeros(self.n, self.n); self.coord_dim];
        for t in &self.terms {
            for (i, g) in grad.iter_mut().enumerate() {
                let k = t.powers[i];
                if k == 0 {
                    continue;
                }
                let mut p = t.powers.clone();
                p[i] -= 1;
                let d = t.coeff * k as f64 * Self::monomial_value(&p, x);
                *g += &t.matrix * c(d);
            }
        }
        Some(grad)
    }
}

/// Field defined by closures; without a gradient closure it is differentiated
/// numerically.
pub struct FnField<F, G = fn(&[f64]) -> Vec<CMatrix>> {
    coord_dim: usize,
    n: usize,
    value: F,
    grad: Option<G>,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> CMatrix + Send + Sync,
{
    pub fn new(coord_dim: usize, n: usize, value: F) -> Self {
        Self { coord_dim, n, value, grad: None }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(&[f64]) -> CMatrix + Send + Sync,
    G: Fn(&[f64]) -> Vec<CMatrix> + Send + Sync,
{
    pub fn with_gradient(coord_dim: usize, n: usize, value: F, grad: G) -> Self {
        Self { coord_dim, n, value, grad: Some(grad) }
    }
}

impl<F, G> OperatorField for FnField<F, G>
where
    F: Fn(&[f64]) -> CMatrix + Send + Sync,
    G: Fn(&[f64]) -> Vec<CMatrix> + Send + Sync,
{
    fn coord_dim(&self) -> usize {
        self.coord_dim
    }
    fn subsystem_dim(&self) -> usize {
        self.n
    }
    fn evaluate(&self, x: &[f64]) -> CMatrix {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        self.grad.as_ref().map(|g| g(x))
    }
}
