//! Ensemble estimates from independent trajectories.
//!
//! Each trajectory contributes, at every recorded time,
//! `w0 · weight · phase · χ_{α′α}(x)` for every observable. The estimate is
//! the sum over trajectories divided by the number of bath samples; with
//! enumerated pairs one sample spawns several trajectories.
//!
//! Standard errors come from splitting the samples into ten contiguous
//! blocks and use the real part of the block means. Trajectories run in
//! fixed chunks that never straddle a block; chunk sums are merged in chunk
//! order, so the result is the same for any number of worker threads.

use rayon::prelude::*;

use crate::adiabatic::{build_frame, build_spin_frame};
use crate::error::{Error, Result};
use crate::fields::Observable;
use crate::linalg::C64;
use crate::models::Model;
use crate::rng::trajectory_rng;
use crate::sampling::InitialCondition;
use crate::spin::{norm, spin_sstp_step, spin_surface_energy, SpinState};
use crate::sstp::{sstp_step, trajectory_energy, StepConfig, TrajectoryState};

/// Number of blocks used for standard errors.
pub const N_BLOCKS: usize = 10;
/// Bath samples per parallel work unit.
pub const CHUNK_SAMPLES: usize = 32;

/// Recorded contributions of one trajectory on the output time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub sample: usize,
    /// `values[t][o]` is the contribution to observable `o` at time index `t`.
    pub values: Vec<Vec<C64>>,
    pub abs_weight: Vec<f64>,
    pub energy: Vec<f64>,
    /// `| |S| − 1 |` for spin trajectories, zero otherwise.
    pub casimir: Vec<f64>,
}

/// Per-time means, standard errors and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<Vec<C64>>,
    pub stderr: Vec<Vec<f64>>,
    pub mean_abs_weight: Vec<f64>,
    /// `Σ|E(t) − E(0)| / Σ|E(0)|` over trajectories.
    pub energy_drift: Vec<f64>,
    /// Largest `| |S| − 1 |` over trajectories.
    pub casimir_drift: Vec<f64>,
    pub n_samples: usize,
    pub n_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Sums {
    values: Vec<Vec<C64>>,
    abs_weight: Vec<f64>,
    energy_dev: Vec<f64>,
    energy_ref: f64,
    casimir: Vec<f64>,
    n_traj: usize,
}

impl Sums {
    fn new(n_times: usize, n_obs: usize) -> Self {
        Self {
            values: vec![vec![C64::new(0.0, 0.0); n_obs]; n_times],
            abs_weight: vec![0.0; n_times],
            energy_dev: vec![0.0; n_times],
            energy_ref: 0.0,
            casimir: vec![0.0; n_times],
            n_traj: 0,
        }
    }

    fn add(&mut self, r: &TrajectoryRecord) {
        for (acc, v) in self.values.iter_mut().zip(&r.values) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += *x;
            }
        }
        let e0 = r.energy.first().copied().unwrap_or(0.0);
        self.energy_ref += e0.abs();
        for t in 0..self.abs_weight.len() {
            self.abs_weight[t] += r.abs_weight[t];
            self.energy_dev[t] += (r.energy[t] - e0).abs();
            self.casimir[t] = self.casimir[t].max(r.casimir[t]);
        }
        self.n_traj += 1;
    }

    fn merge(&mut self, o: &Sums) {
        for (acc, v) in self.values.iter_mut().zip(&o.values) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += *x;
            }
        }
        self.energy_ref += o.energy_ref;
        for t in 0..self.abs_weight.len() {
            self.abs_weight[t] += o.abs_weight[t];
            self.energy_dev[t] += o.energy_dev[t];
            self.casimir[t] = self.casimir[t].max(o.casimir[t]);
        }
        self.n_traj += o.n_traj;
    }
}

/// Block-structured running sums over trajectory records.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateAccumulator {
    n_samples: usize,
    n_times: usize,
    n_obs: usize,
    blocks: Vec<Sums>,
}

impl EstimateAccumulator {
    pub fn new(n_samples: usize, n_times: usize, n_obs: usize) -> Self {
        let nb = N_BLOCKS.min(n_samples).max(1);
        Self { n_samples, n_times, n_obs, blocks: vec![Sums::new(n_times, n_obs); nb] }
    }

    /// Block holding bath sample `sample`.
    pub fn block_of(&self, sample: usize) -> usize {
        sample * self.blocks.len() / self.n_samples.max(1)
    }

    fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.blocks.len()];
        for s in 0..self.n_samples {
            sizes[self.block_of(s)] += 1;
        }
        sizes
    }

    pub fn add(&mut self, r: &TrajectoryRecord) -> Result<()> {
        if r.sample >= self.n_samples {
            return Err(Error::IndexOutOfRange { index: r.sample, dim: self.n_samples });
        }
        let shape_ok = r.values.len() == self.n_times
            && r.values.iter().all(|v| v.len() == self.n_obs)
            && r.abs_weight.len() == self.n_times
            && r.energy.len() == self.n_times
            && r.casimir.len() == self.n_times;
        if !shape_ok {
            return Err(Error::Invalid("trajectory record does not match the time grid".into()));
        }
        let b = self.block_of(r.sample);
        self.blocks[b].add(r);
        Ok(())
    }

    fn merge_block(&mut self, block: usize, sums: &Sums) {
        self.blocks[block].merge(sums);
    }

    pub fn finish(self, times: &[f64]) -> Result<EnsembleEstimate> {
        let mut total = Sums::new(self.n_times, self.n_obs);
        for b in &self.blocks {
            total.merge(b);
        }
        if self.n_samples == 0 || total.n_traj == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if times.len() != self.n_times {
            return Err(Error::DimensionMismatch { context: "estimate time grid", expected: self.n_times, found: times.len() });
        }
        let n = self.n_samples as f64;
        let mean: Vec<Vec<C64>> = total.values.iter().map(|v| v.iter().map(|z| *z / n).collect()).collect();
        let sizes = self.block_sizes();
        let nb = self.blocks.len();
        let stderr = (0..self.n_times)
            .map(|t| {
                (0..self.n_obs)
                    .map(|o| {
                        if nb < 2 {
                            return 0.0;
                        }
                        let m = mean[t][o].re;
                        let ss: f64 = self
                            .blocks
                            .iter()
                            .zip(&sizes)
                            .map(|(b, &k)| (b.values[t][o].re / k as f64 - m).powi(2))
                            .sum();
                        (ss / (nb * (nb - 1)) as f64).sqrt()
                    })
                    .collect()
            })
            .collect();
        let nt = total.n_traj as f64;
        let energy_drift = total
            .energy_dev
            .iter()
            .map(|d| if total.energy_ref > 0.0 { d / total.energy_ref } else { d / nt })
            .collect();
        Ok(EnsembleEstimate {
            times: times.to_vec(),
            mean,
            stderr,
            mean_abs_weight: total.abs_weight.iter().map(|w| w / nt).collect(),
            energy_drift,
            casimir_drift: total.casimir,
            n_samples: self.n_samples,
            n_trajectories: total.n_traj,
        })
    }
}

/// Estimate from stored records; the number of samples is one more than
/// the largest sample index.
pub fn estimate(records: &[TrajectoryRecord], times: &[f64]) -> Result<EnsembleEstimate> {
    let first = records.first().ok_or(Error::EmptyEnsemble)?;
    let n_samples = records.iter().map(|r| r.sample).max().unwrap_or(0) + 1;
    let n_obs = first.values.first().map_or(0, |v| v.len());
    let mut acc = EstimateAccumulator::new(n_samples, times.len(), n_obs);
    for r in records {
        acc.add(r)?;
    }
    acc.finish(times)
}

/// How trajectories are advanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator {
    /// Canonical or thermostatted bath with SSTP branching.
    Sstp(StepConfig),
    /// Single classical spin; transitions use the first-order spin terms.
    Spin { dt: f64, transitions: bool },
}

impl Propagator {
    pub fn dt(&self) -> f64 {
        match self {
            Self::Sstp(c) => c.dt,
            Self::Spin { dt, .. } => *dt,
        }
    }
}

/// Everything needed to run an ensemble apart from the initial conditions.
pub struct EnsembleSpec<'a, M: ?Sized> {
    pub model: &'a M,
    pub propagator: Propagator,
    pub n_steps: usize,
    /// Record every `stride` steps (time zero is always recorded).
    pub stride: usize,
    pub observables: &'a [Observable],
    pub seed: u64,
    pub threads: usize,
}

impl<M: ?Sized> EnsembleSpec<'_, M> {
    pub fn times(&self) -> Vec<f64> {
        let stride = self.stride.max(1);
        (0..=self.n_steps / stride).map(|k| (k * stride) as f64 * self.propagator.dt()).collect()
    }
}

fn failed(index: usize, e: impl ToString) -> Error {
    Error::TrajectoryFailed { index, reason: e.to_string() }
}

fn check_finite(index: usize, values: &[C64], weight: f64, energy: f64) -> Result<()> {
    let ok = values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && weight.is_finite() && energy.is_finite();
    if ok {
        Ok(())
    } else {
        Err(failed(index, "non-finite value in trajectory record"))
    }
}

/// Run trajectory `index` from `ic` and record it on the spec's time grid.
pub fn run_trajectory<M: Model + ?Sized>(
    spec: &EnsembleSpec<'_, M>,
    index: usize,
    ic: &InitialCondition,
) -> Result<TrajectoryRecord> {
    let stride = spec.stride.max(1);
    let n_times = spec.n_steps / stride + 1;
    let mut rec = TrajectoryRecord {
        sample: ic.sample,
        values: Vec::with_capacity(n_times),
        abs_weight: Vec::with_capacity(n_times),
        energy: Vec::with_capacity(n_times),
        casimir: Vec::with_capacity(n_times),
    };
    let model = spec.model;
    match spec.propagator {
        Propagator::Sstp(cfg) => {
            let qr = model.structure().position_range();
            let mut st = TrajectoryState::new(ic.x0.clone(), ic.pair0, trajectory_rng(spec.seed, index));
            let mut frame = build_frame(model, &ic.x0[qr], None).map_err(|e| failed(index, e))?;
            for step in 0..=spec.n_steps {
                if step > 0 {
                    sstp_step(model, &mut st, &mut frame, &cfg).map_err(|e| failed(index, e))?;
                }
                if step % stride == 0 {
                    let amp = ic.w0 * st.weight * st.phase;
                    let values: Vec<C64> =
                        spec.observables.iter().map(|o| amp * o.element(&frame, &st.x, st.pair)).collect();
                    let e = trajectory_energy(model, &frame, &st).map_err(|e| failed(index, e))?;
                    check_finite(index, &values, st.weight, e)?;
                    rec.values.push(values);
                    rec.abs_weight.push(st.weight.abs());
                    rec.energy.push(e);
                    rec.casimir.push(0.0);
                }
            }
        }
        Propagator::Spin { dt, transitions } => {
            if ic.x0.len() != 3 {
                return Err(failed(index, "spin initial condition needs three coordinates"));
            }
            let s0 = [ic.x0[0], ic.x0[1], ic.x0[2]];
            let mut st = SpinState::new(s0, ic.pair0).map_err(|e| failed(index, e))?;
            let mut frame = build_spin_frame(model, &s0).map_err(|e| failed(index, e))?;
            let mut rng = trajectory_rng(spec.seed, index);
            for step in 0..=spec.n_steps {
                if step > 0 {
                    spin_sstp_step(model, &mut st, &mut frame, dt, transitions, &mut rng).map_err(|e| failed(index, e))?;
                }
                if step % stride == 0 {
                    let amp = ic.w0 * st.weight * st.phase();
                    let values: Vec<C64> =
                        spec.observables.iter().map(|o| amp * o.element(&frame.frame, &st.s, st.pair)).collect();
                    let e = spin_surface_energy(model, &frame, st.pair);
                    check_finite(index, &values, st.weight, e)?;
                    rec.values.push(values);
                    rec.abs_weight.push(st.weight.abs());
                    rec.energy.push(e);
                    rec.casimir.push((norm(&st.s) - 1.0).abs());
                }
            }
        }
    }
    Ok(rec)
}

fn check_grouping(initial: &[InitialCondition]) -> Result<usize> {
    let mut expected = 0;
    for ic in initial {
        if ic.sample == expected {
            expected += 1;
        } else if ic.sample + 1 != expected {
            return Err(Error::Invalid("initial conditions must be grouped by consecutive sample index from 0".into()));
        }
    }
    Ok(expected)
}

/// Run every initial condition and reduce to an [`EnsembleEstimate`].
///
/// Trajectory `i` (position in `initial`) uses random stream `i + 1` of the
/// master seed. The first failing trajectory in index order is reported as
/// [`Error::TrajectoryFailed`].
pub fn run_ensemble<M: Model + Sync + ?Sized>(
    spec: &EnsembleSpec<'_, M>,
    initial: &[InitialCondition],
) -> Result<EnsembleEstimate> {
    if initial.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(spec.propagator.dt() > 0.0) || spec.n_steps == 0 {
        return Err(Error::Invalid("ensemble needs dt > 0 and at least one step".into()));
    }
    let n_samples = check_grouping(initial)?;
    let times = spec.times();
    let n_obs = spec.observables.len();
    let mut acc = EstimateAccumulator::new(n_samples, times.len(), n_obs);

    let mut chunks: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
    let mut start = 0;
    while start < initial.len() {
        let first_sample = initial[start].sample;
        let block = acc.block_of(first_sample);
        let mut end = start;
        while end < initial.len() {
            let s = initial[end].sample;
            if s - first_sample >= CHUNK_SAMPLES || acc.block_of(s) != block {
                break;
            }
            end += 1;
        }
        chunks.push((block, start..end));
        start = end;
    }

    let run_chunk = |(block, range): &(usize, std::ops::Range<usize>)| -> Result<(usize, Sums)> {
        let mut sums = Sums::new(times.len(), n_obs);
        for i in range.clone() {
            let rec = run_trajectory(spec, i, &initial[i])?;
            sums.add(&rec);
        }
        Ok((*block, sums))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let partials: Vec<Result<(usize, Sums)>> = pool.install(|| chunks.par_iter().map(run_chunk).collect());
    for p in partials {
        let (block, sums) = p?;
        acc.merge_block(block, &sums);
    }
    acc.finish(&times)
}
