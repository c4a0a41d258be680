//! Named operator fields built from a small product grammar.
//!
//! An expression is a list of products joined by `+` or `-`, each product a
//! list of factors joined by `*`. A factor is a real number, a coordinate
//! name with an optional `^power`, or one of `identity`, `sigma_x`,
//! `sigma_y`, `sigma_z`. Examples: `Q*sigma_z`, `P^2*sigma_x`,
//! `0.5*P^2 + 0.5*Q^2`, `-Sz`.
//!
//! Coordinate names follow the structure layout: `Q`, `P` for one canonical
//! pair (`Q1..Qd`, `P1..Pd` in general), `Qeta`, `Peta` for a Nosé
//! thermostat, `Qeta1`, `Qeta2`, `Peta1`, `Peta2` for a chain, and `Sx`,
//! `Sy`, `Sz` for a spin.

use crate::adiabatic::AdiabaticFrame;
use crate::bracket::{OperatorField, PolyField, StructureKind, StructureMatrix};
use crate::error::{Error, Result};
use crate::linalg::{matrix_element, pauli_x, pauli_y, pauli_z, CMatrix, C64};

/// Coordinate names and their indices for a structure layout.
pub fn coordinate_names(s: &StructureMatrix) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    if s.kind() == StructureKind::Spin {
        for (k, n) in ["Sx", "Sy", "Sz"].iter().enumerate() {
            out.push((n.to_string(), k));
        }
        return out;
    }
    let d = s.dof();
    for (prefix, range) in [("Q", s.position_range()), ("P", s.momentum_range())] {
        for (k, i) in range.enumerate() {
            out.push((format!("{prefix}{}", k + 1), i));
            if d == 1 {
                out.push((prefix.to_string(), i));
            }
        }
    }
    let (qe, pe) = (s.thermostat_position_range(), s.thermostat_momentum_range());
    match s.kind() {
        StructureKind::Nose => {
            out.push(("Qeta".into(), qe.start));
            out.push(("Peta".into(), pe.start));
        }
        StructureKind::Nhc => {
            for (k, (q, p)) in qe.zip(pe).enumerate() {
                out.push((format!("Qeta{}", k + 1), q));
                out.push((format!("Peta{}", k + 1), p));
            }
        }
        _ => {}
    }
    out
}

fn matrix_named(name: &str) -> Option<CMatrix> {
    match name {
        "identity" | "I" => Some(CMatrix::identity(2, 2)),
        "sigma_x" => Some(pauli_x()),
        "sigma_y" => Some(pauli_y()),
        "sigma_z" => Some(pauli_z()),
        _ => None,
    }
}

/// Rewrite binary `a-b` as `a+-b`, leaving exponents such as `1e-3` alone.
fn split_minus(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len() + 4);
    for (i, &ch) in chars.iter().enumerate() {
        if ch == '-' && i > 0 {
            let prev = chars[i - 1];
            let exponent = matches!(prev, 'e' | 'E') && i >= 2 && chars[i - 2].is_ascii_digit();
            if !matches!(prev, '+' | '*' | '^') && !exponent {
                out.push('+');
            }
        }
        out.push(ch);
    }
    out
}

/// Parse a 2×2 operator field over the coordinates of `structure`.
pub fn parse_field(expr: &str, structure: &StructureMatrix) -> Result<PolyField> {
    let names = coordinate_names(structure);
    let dim = structure.dimension();
    let unknown = |t: &str| Error::Invalid(format!("unknown field factor `{t}` in `{expr}`"));
    let mut field = PolyField::zero(dim, 2);
    let cleaned = split_minus(&expr.replace(' ', ""));
    if cleaned.is_empty() {
        return Err(Error::Invalid("empty field expression".into()));
    }
    for product in cleaned.split('+') {
        let (sign, body) = match product.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, product),
        };
        if body.is_empty() {
            return Err(Error::Invalid(format!("empty term in `{expr}`")));
        }
        let mut coeff = sign;
        let mut powers = vec![0u32; dim];
        let mut matrix = CMatrix::identity(2, 2);
        for factor in body.split('*') {
            if let Ok(v) = factor.parse::<f64>() {
                coeff *= v;
            } else if let Some(m) = matrix_named(factor) {
                matrix *= m;
            } else {
                let (base, power) = match factor.split_once('^') {
                    Some((b, p)) => (b, p.parse::<u32>().map_err(|_| unknown(factor))?),
                    None => (factor, 1),
                };
                let &(_, idx) = names.iter().find(|(n, _)| n == base).ok_or_else(|| unknown(factor))?;
                powers[idx] += power;
            }
        }
        field = field.with_term(coeff, &powers, matrix);
    }
    Ok(field)
}

/// A quantity whose adiabatic matrix elements are averaged over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// A diabatic operator field of the full coordinates.
    Field(PolyField),
    /// Projector onto adiabatic state `k`.
    AdiabaticPopulation(usize),
}

impl Observable {
    /// Parse `adiabatic_<k>` or a field expression.
    pub fn parse(name: &str, structure: &StructureMatrix, subsystem_dim: usize) -> Result<Self> {
        if let Some(k) = name.strip_prefix("adiabatic_") {
            let k: usize = k.parse().map_err(|_| Error::Invalid(format!("bad adiabatic population `{name}`")))?;
            if k >= subsystem_dim {
                return Err(Error::IndexOutOfRange { index: k, dim: subsystem_dim });
            }
            return Ok(Self::AdiabaticPopulation(k));
        }
        if subsystem_dim != 2 {
            return Err(Error::Invalid("field observables are defined for two-level subsystems".into()));
        }
        parse_field(name, structure).map(Self::Field)
    }

    /// `χ_{α′α} = ⟨α′|χ(x)|α⟩` for the trajectory pair `(α, α′)`.
    pub fn element(&self, frame: &AdiabaticFrame, x: &[f64], pair: (usize, usize)) -> C64 {
        let (a, ap) = pair;
        match self {
            Self::Field(f) => matrix_element(&frame.vectors, &f.evaluate(x), ap, a),
            Self::AdiabaticPopulation(k) => {
                if a == *k && ap == *k {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::mixed_triple;
    use crate::linalg::{c, max_abs};

    #[test]
    fn parses_the_mixed_triple() {
        let s = StructureMatrix::canonical(1);
        let parsed = ["Q*sigma_z", "P^2*sigma_x", "Q*sigma_x"].map(|e| parse_field(e, &s).unwrap());
        for (p, m) in parsed.iter().zip(mixed_triple().iter()) {
            for x in [[0.3, -1.2], [1.0, 1.0]] {
                assert!(max_abs(&(p.evaluate(&x) - m.evaluate(&x))) == 0.0);
            }
        }
    }

    #[test]
    fn sums_coefficients_and_signs() {
        let s = StructureMatrix::canonical(1);
        let f = parse_field("0.5*P^2 + 0.5*Q^2 - Q*P*sigma_z", &s).unwrap();
        let v = f.evaluate(&[2.0, 3.0]);
        assert!((v[(0, 0)] - c(6.5 - 6.0)).norm() < 1e-15);
        assert!((v[(1, 1)] - c(6.5 + 6.0)).norm() < 1e-15);
    }

    #[test]
    fn thermostat_and_spin_names() {
        let nose = StructureMatrix::nose(1);
        let f = parse_field("Qeta*Peta", &nose).unwrap();
        assert_eq!(f.evaluate(&[0.0, 2.0, 0.0, 3.0])[(0, 0)], c(6.0));
        let nhc = StructureMatrix::nhc(1);
        let f = parse_field("Peta2", &nhc).unwrap();
        assert_eq!(f.evaluate(&[0.0, 0.0, 0.0, 0.0, 0.0, 4.0])[(1, 1)], c(4.0));
        let spin = StructureMatrix::spin();
        let f = parse_field("Sz*sigma_x", &spin).unwrap();
        assert_eq!(f.evaluate(&[0.0, 0.0, 0.5])[(0, 1)], c(0.5));
    }

    #[test]
    fn rejects_unknown_names() {
        let s = StructureMatrix::canonical(1);
        assert_eq!(parse_field("1e-3*Q", &s).unwrap().terms()[0].coeff, 1e-3);
        for bad in ["R", "Q^x", "sigma_w", "", "Q+", "Sx", "Q--P"] {
            assert!(parse_field(bad, &s).is_err(), "{bad}");
        }
        assert!(Observable::parse("adiabatic_2", &s, 2).is_err());
        assert!(Observable::parse("adiabatic_1", &s, 2).is_ok());
    }
}
