//! Small dense complex linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest element magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `⟨u|v⟩` for the columns `a` of `u` and `b` of `v`.
pub fn overlap(u: &CMatrix, a: usize, v: &CMatrix, b: usize) -> C64 {
    u.column(a).dotc(&v.column(b))
}

/// `⟨α|m|β⟩` with `α`, `β` columns of `basis`.
pub fn matrix_element(basis: &CMatrix, m: &CMatrix, a: usize, b: usize) -> C64 {
    basis.column(a).dotc(&(m * basis.column(b)))
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// 2×2 matrices use the closed Bloch-vector form, whose eigenvectors have a
/// real non-negative first component. Larger matrices go through the
/// iterative solver in nalgebra and get the gauge from [`fix_canonical_gauge`].
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    if h.nrows() == 2 {
        return eigh_2x2(h);
    }
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    fix_canonical_gauge(&mut vectors);
    (energies, vectors)
}

/// Ascending eigenvalues of a Hermitian matrix, without eigenvectors.
pub fn eigvalsh(h: &CMatrix) -> Vec<f64> {
    if h.nrows() == 2 {
        let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
        let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
        let r = (az * az + h[(0, 1)].norm_sqr()).sqrt();
        return vec![a0 - r, a0 + r];
    }
    let mut e: Vec<f64> = nalgebra::SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn eigh_2x2(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let ax = 0.5 * (h[(0, 1)].re + h[(1, 0)].re);
    let ay = 0.5 * (h[(1, 0)].im - h[(0, 1)].im);
    let r = (ax * ax + ay * ay + az * az).sqrt();
    if r == 0.0 {
        return (vec![a0, a0], identity(2));
    }
    let (nx, ny, nz) = (ax / r, ay / r, az / r);
    let cos_half = (0.5 * (1.0 + nz)).max(0.0).sqrt();
    let sin_half = (0.5 * (1.0 - nz)).max(0.0).sqrt();
    let rho = (nx * nx + ny * ny).sqrt();
    let azimuth = if rho > 0.0 {
        C64::new(nx / rho, ny / rho)
    } else {
        c(1.0)
    };
    // lower state anti-aligned with the Bloch vector, upper state aligned
    let vectors = CMatrix::from_row_slice(
        2,
        2,
        &[c(sin_half), c(cos_half), -azimuth * cos_half, azimuth * sin_half],
    );
    (vec![a0 - r, a0 + r], vectors)
}

/// Rotate each column so its first non-negligible component is real and positive.
pub fn fix_canonical_gauge(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        if let Some(z) = col.iter().copied().find(|z| z.norm() > 1e-8) {
            let g = z.conj() / z.norm();
            for e in col.iter_mut() {
                *e *= g;
            }
        }
    }
}

/// Rotate each column of `v` so that its overlap with the matching column of
/// `reference` is real and positive.
pub fn align_gauge(v: &mut CMatrix, reference: &CMatrix) {
    for a in 0..v.ncols() {
        let o = overlap(reference, a, v, a);
        if o.norm() > 1e-12 {
            let g = o.conj() / o.norm();
            for e in v.column_mut(a).iter_mut() {
                *e *= g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&m + m.adjoint()) * c(0.5)
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        for (n, seed) in [(2, 1), (2, 2), (3, 3), (4, 4)] {
            let h = random_hermitian(n, seed);
            let (e, v) = eigh(&h);
            assert!(e.windows(2).all(|w| w[0] <= w[1]));
            for a in 0..n {
                let r = &h * v.column(a) - v.column(a) * c(e[a]);
                assert!(r.norm() < 1e-12, "residual {}", r.norm());
            }
            let unit = v.adjoint() * &v - identity(n);
            assert!(max_abs(&unit) < 1e-12);
        }
    }

    #[test]
    fn two_level_gauge_has_real_first_component() {
        let h = random_hermitian(2, 9);
        let (_, v) = eigh(&h);
        for a in 0..2 {
            assert!(v[(0, a)].im.abs() < 1e-15 && v[(0, a)].re >= 0.0);
        }
    }

    #[test]
    fn align_makes_overlap_positive() {
        let h = random_hermitian(3, 11);
        let (_, v) = eigh(&h);
        let mut w = v.map(|z| z * C64::from_polar(1.0, 0.7));
        align_gauge(&mut w, &v);
        for a in 0..3 {
            let o = overlap(&v, a, &w, a);
            assert!((o - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_full_decomposition() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.3), C64::new(0.2, -0.7), C64::new(0.2, 0.7), c(-1.1)]);
        let (e, _) = eigh(&h);
        for (a, b) in eigvalsh(&h).iter().zip(&e) {
            assert!((a - b).abs() < 1e-14);
        }
        let h3 = CMatrix::from_row_slice(3, 3, &[c(1.0), c(0.5), c(0.0), c(0.5), c(2.0), c(0.1), c(0.0), c(0.1), c(-1.0)]);
        let (e3, _) = eigh(&h3);
        for (a, b) in eigvalsh(&h3).iter().zip(&e3) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_algebra() {
        let lhs = commutator(&pauli_x(), &pauli_y());
        let rhs = pauli_z() * C64::new(0.0, 2.0);
        assert!(max_abs(&(lhs - rhs)) < 1e-15);
    }
}
