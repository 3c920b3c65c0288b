//! Time-discrete L² gradient flow: the stiff linear part of the energy is
//! implicit, everything else (including the connectedness penalty) explicit.

mod models;

pub use models::{CurvatureImplicit, CurvatureModel, GradientModel, SegmentationModel};

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::connectivity::{ComponentDecomposition, DualGraph};
use crate::error::{Error, Result};
use crate::field::PhaseField;
use crate::functionals::EnergyBreakdown;
use crate::mesh::Mesh;
use crate::penalty::{analyze_band_with_averages, penalty_energy, penalty_variation, BandConfig};
use crate::sparse::{solve_cg, LinearOperator, SolveStats, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub tau: f64,
    /// Step size during the first `warmup_steps` steps.
    pub tau_init: f64,
    pub warmup_steps: usize,
    pub max_steps: usize,
    /// Stop once `‖u_{k+1} - u_k‖_{M_L} / τ < theta_stop`.
    pub theta_stop: f64,
    pub solver: SolverConfig,
    /// Keep an energy record every `log_every` steps (the final state is always recorded).
    pub log_every: usize,
    /// Keep a snapshot every `snapshot_every` steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

impl FlowConfig {
    /// Defaults with step `tau`: warmup at `tau / 50` for 500 steps,
    /// `theta_stop = 1e-4`.
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            tau_init: tau / 50.0,
            warmup_steps: 500,
            max_steps: 20_000,
            theta_stop: 1e-4,
            solver: SolverConfig::default(),
            log_every: 1,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.tau_init > 0.0) || !self.tau_init.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tau_init must be positive, got {}",
                self.tau_init
            )));
        }
        if !(self.theta_stop > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "theta_stop must be positive, got {}",
                self.theta_stop
            )));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be at least 1".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::InvalidConfig("solver tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    /// Step size used for step `k` (0-based).
    pub fn step_size(&self, k: usize) -> f64 {
        if k < self.warmup_steps {
            self.tau_init
        } else {
            self.tau
        }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self::with_tau(1e-5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Stationary,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Stationary => "stationary",
            StopReason::MaxSteps => "max-steps",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

/// Energies and observables of the state `u_step`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyBreakdown,
    /// Unscaled `C̄` per band.
    pub band_penalty: Vec<f64>,
    /// Interface component count per band.
    pub components: Vec<usize>,
    /// `‖u_{step+1} - u_step‖_{M_L} / τ`; `None` for the final state.
    pub rate: Option<f64>,
    pub solver_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<StepRecord>,
    /// Component counts per band for every visited state, final state included.
    pub components: Vec<Vec<usize>>,
    pub stop: StopReason,
    /// Number of steps taken.
    pub steps: usize,
    /// Steps whose total energy exceeded the previous one.
    pub upticks: usize,
    /// Wall time spent in the penalty pipeline (averages through variation).
    pub pipeline_time: Duration,
    pub total_time: Duration,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }

    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("trajectory always holds the final record")
    }

    pub fn is_stationary(&self) -> bool {
        self.stop == StopReason::Stationary
    }

    /// Fraction of the run's wall time spent in the penalty pipeline.
    pub fn pipeline_share(&self) -> f64 {
        let total = self.total_time.as_secs_f64();
        if total > 0.0 {
            self.pipeline_time.as_secs_f64() / total
        } else {
            0.0
        }
    }
}

/// Interface component counts of `band` over every visited state.
pub fn component_count_series(trajectory: &Trajectory, band: usize) -> Vec<usize> {
    trajectory.components.iter().map(|c| c[band]).collect()
}

/// Penalty pipeline result for all bands at one state.
#[derive(Clone, Debug)]
pub struct PenaltyState {
    pub decompositions: Vec<ComponentDecomposition>,
    /// Unscaled `C̄` per band.
    pub energies: Vec<f64>,
    /// `Σ a ε^(-p) C̄` over bands.
    pub scaled_energy: f64,
    /// `Σ a ε^(-p) δC̄`; `None` when every prefactor is zero.
    pub force: Option<Vec<f64>>,
}

impl PenaltyState {
    pub fn component_counts(&self) -> Vec<usize> {
        self.decompositions.iter().map(|d| d.num_components()).collect()
    }
}

/// Runs the penalty pipeline for every band on the same field. Bands are
/// evaluated concurrently; the variation is skipped for bands whose
/// prefactor is zero or whose interface is connected (it vanishes there).
pub fn penalty_state(
    mesh: &Mesh,
    graph: &DualGraph,
    field: &PhaseField,
    bands: &[BandConfig],
) -> Result<PenaltyState> {
    let averages = mesh.element_averages(field.values());
    let run = |cfg: &BandConfig| -> Result<(ComponentDecomposition, f64, Option<Vec<f64>>)> {
            let d = analyze_band_with_averages(mesh, graph, field.revision(), &averages, cfg)?;
            let e = penalty_energy(&d);
            let g = if cfg.prefactor() != 0.0 && d.num_components() >= 2 {
                Some(penalty_variation(&d, field, mesh, cfg)?)
            } else {
                None
            };
            Ok((d, e, g))
    };
    let per_band: Vec<_> = if bands.len() > 1 && rayon::current_num_threads() > 1 {
        bands.par_iter().map(run).collect()
    } else {
        bands.iter().map(run).collect()
    };
    let mut state = PenaltyState {
        decompositions: Vec::with_capacity(bands.len()),
        energies: Vec::with_capacity(bands.len()),
        scaled_energy: 0.0,
        force: None,
    };
    for (cfg, r) in bands.iter().zip(per_band) {
        let (d, e, g) = r?;
        let pre = cfg.prefactor();
        if pre != 0.0 {
            state.scaled_energy += pre * e;
        }
        if let Some(g) = g {
            let force = state.force.get_or_insert_with(|| vec![0.0; g.len()]);
            for (f, v) in force.iter_mut().zip(&g) {
                *f += pre * v;
            }
        }
        state.decompositions.push(d);
        state.energies.push(e);
    }
    Ok(state)
}

/// `ε M_L + τ A`.
struct StepOperator<'a> {
    implicit: &'a dyn LinearOperator,
    mass: &'a [f64],
    eps: f64,
    tau: f64,
}

impl LinearOperator for StepOperator<'_> {
    fn dim(&self) -> usize {
        self.mass.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.implicit.apply(x, y);
        for i in 0..x.len() {
            y[i] = self.eps * self.mass[i] * x[i] + self.tau * y[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.implicit
            .diagonal()
            .iter()
            .zip(self.mass)
            .map(|(a, m)| self.eps * m + self.tau * a)
            .collect()
    }
}

/// Increment `δ = u_{k+1} - u_k` solving `(ε M_L + τ A) δ = -τ (∇E + force)`,
/// with `δ = 0` on the model's fixed nodes.
fn solve_increment<M: GradientModel + ?Sized>(
    model: &M,
    u: &[f64],
    gradient: &[f64],
    force: Option<&[f64]>,
    tau: f64,
    solver: SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    let rhs: Vec<f64> = match force {
        Some(f) => gradient.iter().zip(f).map(|(g, f)| -tau * (g + f)).collect(),
        None => gradient.iter().map(|g| -tau * g).collect(),
    };
    let implicit = model.implicit_operator(u);
    let op = StepOperator {
        implicit: implicit.as_ref(),
        mass: &model.operators().lumped_mass,
        eps: model.eps(),
        tau,
    };
    solve_cg(&op, &rhs, model.fixed_nodes(), solver)
}

/// One semi-implicit Euler step
/// `ε M_L (u_{k+1} - u_k) = -τ (A (u_{k+1} - u_k) + ∇E(u_k) + force)`,
/// where `force` is the already scaled explicit penalty variation at `u_k`.
pub fn semi_implicit_step<M: GradientModel + ?Sized>(
    u: &PhaseField,
    model: &M,
    force: Option<&[f64]>,
    tau: f64,
    solver: SolverConfig,
) -> Result<PhaseField> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    let n = model.operators().num_nodes();
    if u.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: u.len(),
        });
    }
    if let Some(f) = force {
        if f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: f.len(),
            });
        }
    }
    let (_, gradient) = model.evaluate(u.values())?;
    let (delta, _) = solve_increment(model, u.values(), &gradient, force, tau, solver)?;
    let next: Vec<f64> = u.values().iter().zip(&delta).map(|(a, d)| a + d).collect();
    Ok(PhaseField::new(next))
}

fn lumped_norm(v: &[f64], mass: &[f64]) -> f64 {
    v.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
}

/// Runs the flow from `initial` until stationary or `max_steps`, re-running the
/// penalty pipeline on every state.
pub fn run_flow<M: GradientModel + ?Sized>(
    config: &FlowConfig,
    model: &M,
    mesh: &Mesh,
    graph: &DualGraph,
    initial: PhaseField,
    bands: &[BandConfig],
) -> Result<Trajectory> {
    run_flow_observed(config, model, mesh, graph, initial, bands, &mut |_| {})
}

/// [`run_flow`] that also hands every logged record to `observer` as soon as
/// it is produced.
pub fn run_flow_observed<M: GradientModel + ?Sized>(
    config: &FlowConfig,
    model: &M,
    mesh: &Mesh,
    graph: &DualGraph,
    initial: PhaseField,
    bands: &[BandConfig],
    observer: &mut dyn FnMut(&StepRecord),
) -> Result<Trajectory> {
    config.validate()?;
    for b in bands {
        b.validate()?;
    }
    let n = model.operators().num_nodes();
    if initial.len() != n || mesh.num_nodes() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: initial.len(),
        });
    }
    if let Some(v) = initial.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("initial field is not finite at node {v}")));
    }

    let start = Instant::now();
    let mut pipeline_time = Duration::ZERO;
    let mass = &model.operators().lumped_mass;
    let mut u = initial;
    let mut time = 0.0;
    let mut snapshots = vec![Snapshot {
        step: 0,
        time,
        values: u.values().to_vec(),
    }];
    let mut records = Vec::new();
    let mut components = Vec::new();
    let mut upticks = 0;
    let mut previous_total: Option<f64> = None;
    let mut stop = StopReason::MaxSteps;
    let mut step = 0;

    let evaluate = |u: &PhaseField, pipeline_time: &mut Duration| -> Result<_> {
        let t0 = Instant::now();
        let penalty = penalty_state(mesh, graph, u, bands)?;
        *pipeline_time += t0.elapsed();
        let (mut energy, gradient) = model.evaluate(u.values())?;
        energy.penalty = penalty.scaled_energy;
        energy.total += penalty.scaled_energy;
        Ok((penalty, energy, gradient))
    };

    loop {
        let (penalty, energy, gradient) = evaluate(&u, &mut pipeline_time)?;
        components.push(penalty.component_counts());
        if let Some(prev) = previous_total {
            if energy.total > prev + 1e-12 * prev.abs() {
                upticks += 1;
            }
        }
        previous_total = Some(energy.total);
        let mut record = StepRecord {
            step,
            time,
            energy,
            band_penalty: penalty.energies.clone(),
            components: penalty.component_counts(),
            rate: None,
            solver_iterations: 0,
        };
        if step == config.max_steps {
            observer(&record);
            records.push(record);
            break;
        }

        let tau = config.step_size(step);
        let (delta, stats) =
            solve_increment(model, u.values(), &gradient, penalty.force.as_deref(), tau, config.solver)?;
        let rate = lumped_norm(&delta, mass) / tau;
        let next: Vec<f64> = u.values().iter().zip(&delta).map(|(a, d)| a + d).collect();
        step += 1;
        if next.iter().any(|v| !v.is_finite()) || !rate.is_finite() {
            return Err(Error::NonFiniteField { step });
        }
        record.rate = Some(rate);
        record.solver_iterations = stats.iterations;
        if (step - 1) % config.log_every == 0 {
            observer(&record);
            records.push(record);
        }
        u = PhaseField::new(next);
        time += tau;
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step,
                time,
                values: u.values().to_vec(),
            });
        }
        if rate < config.theta_stop {
            stop = StopReason::Stationary;
            let (penalty, energy, _) = evaluate(&u, &mut pipeline_time)?;
            components.push(penalty.component_counts());
            if energy.total > previous_total.unwrap() + 1e-12 * energy.total.abs() {
                upticks += 1;
            }
            let record = StepRecord {
                step,
                time,
                energy,
                band_penalty: penalty.energies.clone(),
                components: penalty.component_counts(),
                rate: None,
                solver_iterations: 0,
            };
            observer(&record);
            records.push(record);
            break;
        }
    }

    if snapshots.last().map(|s| s.step) != Some(step) {
        snapshots.push(Snapshot {
            step,
            time,
            values: u.into_values(),
        });
    }
    Ok(Trajectory {
        snapshots,
        records,
        components,
        stop,
        steps: step,
        upticks,
        pipeline_time,
        total_time: start.elapsed(),
    })
}
