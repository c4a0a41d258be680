//! Run orchestration and output files.
//!
//! `series.csv` has one header line and one row per output time. Columns, in
//! order: `t`; for each observable `name`, the three columns `name:mean_re`,
//! `name:mean_im`, `name:stderr`; then `mean_abs_weight`, `energy_drift`,
//! `casimir_drift`. Numbers use Rust's shortest round-trip scientific form,
//! so reading them back gives the same `f64`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use qclsim_core::rng::sampling_rng;
use qclsim_core::sampling::{initial_subsystem, sample_canonical, sample_sphere, sample_wigner_coordinates};
use qclsim_core::{
    run_ensemble, EnsembleEstimate, EnsembleSpec, Error, InitialCondition, Model, Observable, Propagator, StepConfig,
    StructureKind,
};
use serde::{Deserialize, Serialize};

use crate::config::{BathSampling, RunConfig, Switch};
use crate::CliError;

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config: RunConfig,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub n_samples: usize,
    pub n_trajectories: usize,
    pub columns: Vec<String>,
}

fn runtime(e: Error) -> CliError {
    match e {
        Error::TrajectoryFailed { index, reason } => CliError::Numerical { index, reason },
        Error::NonConfining => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

/// Bath samples and initial conditions, drawn sequentially from stream 0.
pub fn initial_conditions(cfg: &RunConfig, model: &dyn Model) -> Result<Vec<InitialCondition>, CliError> {
    let mut rng = sampling_rng(cfg.seed);
    let n = cfg.dynamics.n_traj;
    let init = &cfg.initial;
    let xs: Vec<Vec<f64>> = match init.bath {
        BathSampling::Canonical => {
            let t = init.temperature.ok_or_else(|| CliError::Config("missing initial.temperature".into()))?;
            sample_canonical(model, t, init.k_b, n, &mut rng).map_err(runtime)?
        }
        BathSampling::Wigner => sample_wigner_coordinates(model, n, &mut rng).map_err(runtime)?,
        BathSampling::Point => {
            let p = init.point.clone().ok_or_else(|| CliError::Config("missing initial.point".into()))?;
            vec![p; n]
        }
        BathSampling::Sphere => sample_sphere(n, &mut rng).into_iter().map(|s| s.to_vec()).collect(),
    };
    let rho = cfg.density()?;
    let mode = cfg.pair_sampling();
    let mut out = Vec::with_capacity(n);
    for (i, x) in xs.iter().enumerate() {
        out.extend(initial_subsystem(model, &rho, x, i, mode, &mut rng).map_err(runtime)?);
    }
    Ok(out)
}

/// Run the configured ensemble on `threads` workers.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<EnsembleEstimate, CliError> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let observables = cfg
        .observables
        .iter()
        .map(|o| Observable::parse(o, &model.structure(), model.subsystem_dim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let transitions = cfg.dynamics.transitions == Switch::On;
    let propagator = if model.structure().kind() == StructureKind::Spin {
        Propagator::Spin { dt: cfg.dynamics.dt, transitions }
    } else {
        Propagator::Sstp(StepConfig {
            dt: cfg.dynamics.dt,
            transitions,
            frustrated: cfg.frustrated_policy(),
            langevin: cfg.langevin(),
        })
    };
    let initial = initial_conditions(cfg, model.as_ref())?;
    log::info!("{} trajectories from {} bath samples on {threads} workers", initial.len(), cfg.dynamics.n_traj);
    let spec = EnsembleSpec {
        model: model.as_ref(),
        propagator,
        n_steps: cfg.dynamics.n_steps,
        stride: cfg.dynamics.stride,
        observables: &observables,
        seed: cfg.seed,
        threads,
    };
    run_ensemble(&spec, &initial).map_err(runtime)
}

pub fn columns(observables: &[String]) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for o in observables {
        for suffix in ["mean_re", "mean_im", "stderr"] {
            cols.push(format!("{o}:{suffix}"));
        }
    }
    cols.extend(["mean_abs_weight", "energy_drift", "casimir_drift"].map(String::from));
    cols
}

/// Render the estimate as CSV text.
pub fn series_csv(observables: &[String], est: &EnsembleEstimate) -> Result<String, CliError> {
    let io = |e: csv::Error| CliError::Runtime(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns(observables)).map_err(io)?;
    for (t, time) in est.times.iter().enumerate() {
        let mut row = vec![format!("{time:e}")];
        for (m, e) in est.mean[t].iter().zip(&est.stderr[t]) {
            row.extend([format!("{:e}", m.re), format!("{:e}", m.im), format!("{e:e}")]);
        }
        row.extend([est.mean_abs_weight[t], est.energy_drift[t], est.casimir_drift[t]].map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Run and write `series.csv` and `meta.json` under `out_dir`.
pub fn run_to_dir(cfg: &RunConfig, out_dir: &Path, threads: usize) -> Result<Meta, CliError> {
    let start = Instant::now();
    let est = execute(cfg, threads)?;
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;
    fs::write(out_dir.join("series.csv"), series_csv(&cfg.observables, &est)?).map_err(io)?;
    let meta = Meta {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        n_samples: est.n_samples,
        n_trajectories: est.n_trajectories,
        columns: columns(&cfg.observables),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out_dir.join("meta.json"), json + "\n").map_err(io)?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qclsim_core::C64;

    #[test]
    fn csv_quotes_names_and_round_trips_numbers() {
        let est = EnsembleEstimate {
            times: vec![0.0, 0.1],
            mean: vec![vec![C64::new(1.0 / 3.0, -2e-300)], vec![C64::new(f64::MAX, 0.0)]],
            stderr: vec![vec![0.0], vec![1.25e-7]],
            mean_abs_weight: vec![1.0, 1.5],
            energy_drift: vec![0.0, 3.0e-9],
            casimir_drift: vec![0.0, 0.0],
            n_samples: 1,
            n_trajectories: 1,
        };
        let names = vec!["0.5*P^2, quoted".to_string()];
        let text = series_csv(&names, &est).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, columns(&names));
        let rows: Vec<Vec<f64>> =
            r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows[0], vec![0.0, 1.0 / 3.0, -2e-300, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(rows[1], vec![0.1, f64::MAX, 0.0, 1.25e-7, 1.5, 3.0e-9, 0.0]);
        assert!(!text.contains('\r'));
    }
}
