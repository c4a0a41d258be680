//! Run configuration.
//!
//! A run is described by a TOML file. Unknown keys anywhere are rejected.
//!
//! ```toml
//! seed = 7
//! output = "out/rabi"
//! observables = ["sigma_z", "identity", "adiabatic_0"]
//!
//! [model]
//! name = "two_level_quartic"
//! omega = 1.0
//! a = 1.0
//! b = 1.0
//! gamma0 = 0.5
//!
//! [bath]
//! type = "none"
//!
//! [dynamics]
//! dt = 0.01
//! n_steps = 1000
//! n_traj = 2000
//! transitions = "on"
//! frustrated_policy = "reject"
//! stride = 10
//!
//! [initial]
//! subsystem = [[1.0, 0.0], [0.0, 0.0]]
//! bath = "canonical"
//! temperature = 0.5
//! pairs = "uniform"
//! ```

use std::path::PathBuf;

use qclsim_core::sampling::validate_density;
use qclsim_core::{
    CMatrix, FrustratedPolicy, LangevinParams, Model, NhcExtension, NoseExtension, Observable, PairSampling,
    SpinBathModel, StructureKind, TwoLevelHarmonic, TwoLevelQuartic, C64,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub observables: Vec<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub bath: BathConfig,
    pub dynamics: DynamicsConfig,
    pub initial: InitialConfig,
}

/// Model catalog entry and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `ĥ = −ħΩσ_x − ħγ₀Qσ_z`, `V = (a/4)Q⁴ − (b/2)Q²`.
    TwoLevelQuartic {
        omega: f64,
        a: f64,
        b: f64,
        gamma0: f64,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        hbar: f64,
    },
    /// `ĥ = −ħΩσ_x − ħγ₀Qσ_z`, `V = ½Mω²Q²`.
    TwoLevelHarmonic {
        omega: f64,
        gamma0: f64,
        bath_frequency: f64,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        hbar: f64,
    },
    /// `ĥ(S) = −Ωσ_x − c₁bσ_z − μS·σ`, classical part `−c₂bS_z + S_z²/2`.
    SpinBath {
        omega: f64,
        c1: f64,
        c2: f64,
        mu: f64,
        b: f64,
        #[serde(default = "one")]
        hbar: f64,
    },
}

/// Bath back-end attached to the model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathConfig {
    /// Plain Hamiltonian bath.
    #[default]
    None,
    Langevin {
        zeta: f64,
        temperature: f64,
        #[serde(default = "one")]
        k_b: f64,
    },
    Nose {
        m_eta: f64,
        temperature: f64,
        #[serde(default = "one")]
        k_b: f64,
    },
    Nhc {
        m_eta1: f64,
        m_eta2: f64,
        temperature: f64,
        #[serde(default = "one")]
        k_b: f64,
    },
    /// Classical spin; required by `spin_bath`.
    Spin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    #[default]
    Reject,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Number of bath samples.
    pub n_traj: usize,
    pub transitions: Switch,
    #[serde(default)]
    pub frustrated_policy: PolicyConfig,
    /// Output every `stride` steps.
    #[serde(default = "one_usize")]
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathSampling {
    Canonical,
    Wigner,
    Point,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairConfig {
    #[default]
    Uniform,
    Magnitude,
    Enumerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Real part of the subsystem density matrix, row by row.
    pub subsystem: Vec<Vec<f64>>,
    /// Imaginary part; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem_imag: Option<Vec<Vec<f64>>>,
    pub bath: BathSampling,
    /// Temperature of canonical sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "one")]
    pub k_b: f64,
    /// Full coordinate vector for `bath = "point"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub pairs: PairConfig,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.dynamics;
        if !(d.dt > 0.0 && d.dt.is_finite()) {
            return Err(invalid(format!("dynamics.dt must be positive and finite, got {}", d.dt)));
        }
        if d.n_steps < 1 || d.n_traj < 1 || d.stride < 1 {
            return Err(invalid("dynamics.n_steps, n_traj and stride must be at least 1"));
        }
        if self.observables.is_empty() {
            return Err(invalid("at least one observable is required"));
        }
        let model = self.build_model()?;
        let structure = model.structure();
        for name in &self.observables {
            Observable::parse(name, &structure, model.subsystem_dim()).map_err(|e| invalid(e.to_string()))?;
        }
        validate_density(&self.density()?, model.subsystem_dim()).map_err(|e| invalid(e.to_string()))?;

        let spin = structure.kind() == StructureKind::Spin;
        let init = &self.initial;
        match init.bath {
            BathSampling::Sphere if !spin => return Err(invalid("sphere sampling needs the spin_bath model")),
            BathSampling::Canonical | BathSampling::Wigner if spin => {
                return Err(invalid("spin_bath initial conditions use sphere or point sampling"))
            }
            BathSampling::Canonical => match init.temperature {
                Some(t) if t > 0.0 && init.k_b > 0.0 => {}
                _ => return Err(invalid("canonical sampling needs initial.temperature > 0 and k_b > 0")),
            },
            BathSampling::Wigner => {
                if !matches!(self.model, ModelConfig::TwoLevelHarmonic { .. }) || self.bath != BathConfig::None {
                    return Err(invalid("Wigner sampling needs two_level_harmonic without a thermostat"));
                }
            }
            BathSampling::Point => {
                let p = init.point.as_ref().ok_or_else(|| invalid("point sampling needs initial.point"))?;
                if p.len() != structure.dimension() || p.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!(
                        "initial.point needs {} finite coordinates, got {}",
                        structure.dimension(),
                        p.len()
                    )));
                }
            }
            BathSampling::Sphere => {}
        }
        if let BathConfig::Langevin { zeta, temperature, k_b } = self.bath {
            LangevinParams::new(zeta, temperature, k_b).map_err(|e| invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// The configured model with its thermostat, if any.
    pub fn build_model(&self) -> Result<Box<dyn Model>, CliError> {
        let err = |e: qclsim_core::Error| invalid(e.to_string());
        let spin = matches!(self.model, ModelConfig::SpinBath { .. });
        if spin != (self.bath == BathConfig::Spin) {
            return Err(invalid("the spin_bath model goes with bath type \"spin\" and only with it"));
        }
        let base: Box<dyn Model> = match self.model {
            ModelConfig::TwoLevelQuartic { omega, a, b, gamma0, mass, hbar } => {
                Box::new(TwoLevelQuartic::new(omega, a, b, gamma0, mass, hbar).map_err(err)?)
            }
            ModelConfig::TwoLevelHarmonic { omega, gamma0, bath_frequency, mass, hbar } => {
                Box::new(TwoLevelHarmonic::new(omega, gamma0, bath_frequency, mass, hbar).map_err(err)?)
            }
            ModelConfig::SpinBath { omega, c1, c2, mu, b, hbar } => {
                Box::new(SpinBathModel::new(omega, c1, c2, mu, b, hbar).map_err(err)?)
            }
        };
        let n = base.bath_dim();
        Ok(match self.bath {
            BathConfig::None | BathConfig::Langevin { .. } | BathConfig::Spin => base,
            BathConfig::Nose { m_eta, temperature, k_b } => {
                Box::new(NoseExtension::new(base, m_eta, temperature, n, k_b).map_err(err)?)
            }
            BathConfig::Nhc { m_eta1, m_eta2, temperature, k_b } => {
                Box::new(NhcExtension::new(base, m_eta1, m_eta2, temperature, n, k_b).map_err(err)?)
            }
        })
    }

    /// The initial subsystem density matrix.
    pub fn density(&self) -> Result<CMatrix, CliError> {
        let re = &self.initial.subsystem;
        let n = re.len();
        let zeros = vec![vec![0.0; n]; n];
        let im = self.initial.subsystem_imag.as_ref().unwrap_or(&zeros);
        if im.len() != n || re.iter().chain(im).any(|row| row.len() != n) {
            return Err(invalid("initial.subsystem must be a square matrix (and subsystem_imag the same shape)"));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| C64::new(re[i][j], im[i][j])))
    }

    pub fn pair_sampling(&self) -> PairSampling {
        match self.initial.pairs {
            PairConfig::Uniform => PairSampling::Uniform,
            PairConfig::Magnitude => PairSampling::Magnitude,
            PairConfig::Enumerate => PairSampling::Enumerate,
        }
    }

    pub fn frustrated_policy(&self) -> FrustratedPolicy {
        match self.dynamics.frustrated_policy {
            PolicyConfig::Reject => FrustratedPolicy::Reject,
            PolicyConfig::Reverse => FrustratedPolicy::Reverse,
        }
    }

    pub fn langevin(&self) -> Option<LangevinParams> {
        match self.bath {
            BathConfig::Langevin { zeta, temperature, k_b } => Some(LangevinParams { zeta, temperature, k_b }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RABI: &str = r#"
seed = 11
output = "out"
observables = ["sigma_z", "identity"]

[model]
name = "two_level_quartic"
omega = 1.0
a = 1.0
b = 1.0
gamma0 = 0.0

[dynamics]
dt = 0.01
n_steps = 100
n_traj = 10
transitions = "off"

[initial]
subsystem = [[1.0, 0.0], [0.0, 0.0]]
bath = "canonical"
temperature = 1.0
pairs = "enumerate"
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml(RABI).unwrap();
        assert_eq!(cfg.bath, BathConfig::None);
        assert_eq!(cfg.dynamics.stride, 1);
        assert_eq!(cfg.dynamics.frustrated_policy, PolicyConfig::Reject);
        assert_eq!(cfg.initial.k_b, 1.0);
        assert!(matches!(cfg.model, ModelConfig::TwoLevelQuartic { mass, hbar, .. } if mass == 1.0 && hbar == 1.0));
        assert_eq!(cfg.build_model().unwrap().name(), "two_level_quartic");
    }

    #[test]
    fn json_and_toml_round_trip() {
        let cfg = RunConfig::from_toml(RABI).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
        let toml_text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&toml_text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for (from, to) in [
            ("seed = 11", "seed = 11\ncolour = 1"),
            ("gamma0 = 0.0", "gamma0 = 0.0\ngamma1 = 0.0"),
            ("transitions = \"off\"", "transitions = \"off\"\nspeed = 2"),
            ("pairs = \"enumerate\"", "pairs = \"enumerate\"\nmode = 1"),
        ] {
            let text = RABI.replace(from, to);
            assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Config(_))), "{to}");
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("dt = 0.01", "dt = 0.0"),
            ("n_steps = 100", "n_steps = 0"),
            ("n_traj = 10", "n_traj = 0"),
            ("transitions = \"off\"", "transitions = \"maybe\""),
            ("\"sigma_z\", ", "\"sigma_q\", "),
            ("[[1.0, 0.0], [0.0, 0.0]]", "[[1.0, 0.0], [0.0, 1.0]]"),
            ("bath = \"canonical\"", "bath = \"sphere\""),
            ("temperature = 1.0", "temperature = -1.0"),
            ("name = \"two_level_quartic\"", "name = \"three_level\""),
        ] {
            let text = RABI.replace(from, to);
            assert_ne!(text, RABI);
            assert!(RunConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn thermostats_and_spin() {
        let nose = RABI.replace("[dynamics]", "[bath]\ntype = \"nose\"\nm_eta = 2.0\ntemperature = 1.0\n\n[dynamics]");
        let cfg = RunConfig::from_toml(&nose).unwrap();
        assert_eq!(cfg.build_model().unwrap().structure().dimension(), 4);

        let spin = RABI
            .replace("name = \"two_level_quartic\"\nomega = 1.0\na = 1.0\nb = 1.0\ngamma0 = 0.0", "name = \"spin_bath\"\nomega = 1.0\nc1 = 1.0\nc2 = 1.0\nmu = 0.5\nb = 1.0")
            .replace("[dynamics]", "[bath]\ntype = \"spin\"\n\n[dynamics]")
            .replace("bath = \"canonical\"\ntemperature = 1.0", "bath = \"sphere\"");
        let cfg = RunConfig::from_toml(&spin).unwrap();
        assert_eq!(cfg.build_model().unwrap().name(), "spin_bath");
        // the spin model without a spin bath is inconsistent
        assert!(RunConfig::from_toml(&spin.replace("type = \"spin\"", "type = \"none\"")).is_err());
    }

    #[test]
    fn complex_density() {
        let text = RABI
            .replace("[[1.0, 0.0], [0.0, 0.0]]", "[[0.5, 0.5], [0.5, 0.5]]\nsubsystem_imag = [[0.0, -0.1], [0.1, 0.0]]");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.density().unwrap()[(0, 1)], C64::new(0.5, -0.1));
        let bad = text.replace("[[0.0, -0.1], [0.1, 0.0]]", "[[0.0, 0.1], [0.1, 0.0]]");
        assert!(RunConfig::from_toml(&bad).is_err());
    }
}
