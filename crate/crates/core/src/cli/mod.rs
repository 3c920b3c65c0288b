//! Experiment driver behind the `simulate` binary.

mod config;

pub use config::{
    parse_config, parse_config_str, ExperimentConfig, ExperimentKind, ImageSource, ImplicitChoice,
    InitialShape, Preset, WellChoice,
};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connectivity::{build_dual_graph, decompose_components, extract_interface, DualGraph};
use crate::error::{Error, Result};
use crate::field::PhaseField;
use crate::flow::{
    component_count_series, penalty_state, run_flow_observed, CurvatureImplicit, CurvatureModel, FlowConfig,
    SegmentationModel, StepRecord, Trajectory,
};
use crate::functionals::{
    disks_image, dumbbell_profile, fidelity, flower_field, two_disks_image, DumbbellShape, ModelParams,
    ReferenceImage, WellVariant,
};
use crate::io::{decomposition_cell_data, read_nodal_csv, write_energy_log, write_nodal_csv, write_vtk};
use crate::mesh::{assemble_p1, build_square_mesh, Mesh, P1Operators, Square};
use crate::penalty::{analyze_band, BandConfig};
use crate::sparse::SolverConfig;

/// Mesh, operators and dual graph of one configuration.
pub struct Setup {
    pub mesh: Mesh,
    pub ops: P1Operators,
    pub graph: DualGraph,
}

pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let mesh = build_square_mesh(cfg.n, Square::centered(cfg.domain_half))?;
    let ops = assemble_p1(&mesh)?;
    let graph = build_dual_graph(&mesh, cfg.length_scale);
    Ok(Setup { mesh, ops, graph })
}

pub fn well_variant(cfg: &ExperimentConfig) -> WellVariant {
    match (cfg.well, cfg.kind) {
        (WellChoice::Symmetric, _) => WellVariant::Symmetric,
        (WellChoice::Shifted, _) => WellVariant::Shifted,
        (WellChoice::Auto, ExperimentKind::Segmentation) => WellVariant::Shifted,
        (WellChoice::Auto, _) => WellVariant::Symmetric,
    }
}

pub fn model_params(cfg: &ExperimentConfig) -> ModelParams {
    ModelParams {
        eps: cfg.eps,
        lambda: cfg.lambda,
        h0: cfg.h0,
        eta: cfg.eta,
        well: well_variant(cfg),
        sigma: cfg.sigma,
    }
}

/// Penalty bands with amplitude `amplitude` and the configured exponent.
pub fn bands(cfg: &ExperimentConfig, amplitude: f64) -> Result<Vec<BandConfig>> {
    let p = cfg.effective_exponent();
    let mut out = vec![BandConfig::new(cfg.alpha, cfg.beta, cfg.eps)?
        .with_amplitude(amplitude)
        .with_exponent(p)];
    if let Some((a, b)) = cfg.band2 {
        out.push(BandConfig::new(a, b, cfg.eps)?.with_amplitude(amplitude).with_exponent(p));
    }
    Ok(out)
}

pub fn flow_config(cfg: &ExperimentConfig) -> FlowConfig {
    FlowConfig {
        tau: cfg.tau,
        tau_init: cfg.effective_tau_init(),
        warmup_steps: cfg.warmup_steps,
        max_steps: cfg.max_steps,
        theta_stop: cfg.theta_stop,
        solver: SolverConfig {
            tol: cfg.solver_tol,
            max_iter: cfg.solver_max_iter,
        },
        log_every: cfg.log_every,
        snapshot_every: cfg.snapshot_every,
    }
}

pub fn reference_image(cfg: &ExperimentConfig, mesh: &Mesh) -> Result<ReferenceImage> {
    match cfg.image {
        ImageSource::TwoDisks => two_disks_image(mesh, cfg.disk_radius, cfg.disk_separation, cfg.image_width),
        ImageSource::File => {
            let path = cfg.image_file.as_deref().expect("checked by the config parser");
            let values = read_nodal_csv(path, mesh.num_nodes())?;
            ReferenceImage::new(values, format!("file {}", path.display()))
        }
    }
}

pub fn initial_field(cfg: &ExperimentConfig, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut u = match cfg.initial {
        InitialShape::Flower => {
            let f = flower_field(mesh, cfg.initial_width)?;
            match well_variant(cfg) {
                WellVariant::Shifted => f,
                WellVariant::Symmetric => f.into_iter().map(|v| 2.0 * v - 1.0).collect(),
            }
        }
        InitialShape::Dumbbell => dumbbell_profile(
            mesh,
            &DumbbellShape {
                bulb_radius: cfg.bulb_radius,
                separation: cfg.bulb_separation,
                neck_width: cfg.neck_width,
            },
            cfg.eps,
        )?,
        InitialShape::File => {
            read_nodal_csv(cfg.initial_file.as_deref().expect("checked by the config parser"), mesh.num_nodes())?
        }
    };
    if cfg.initial_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (v, &b) in u.iter_mut().zip(mesh.boundary_mask()) {
            let r: f64 = rng.gen_range(-1.0..=1.0);
            if !b {
                *v += cfg.initial_noise * r;
            }
        }
    }
    Ok(u)
}

/// Number of connected components of `{u_T > level}` (elements adjacent
/// across an edge are connected).
pub fn superlevel_components(mesh: &Mesh, graph: &DualGraph, u: &[f64], level: f64) -> usize {
    let avg = mesh.element_averages(u);
    let set: Vec<usize> = (0..avg.len()).filter(|&t| avg[t] > level).collect();
    decompose_components(graph, &set).num_components()
}

/// Outcome of a constrained run and, optionally, its unconstrained twin.
pub struct FlowReport {
    pub constrained: Trajectory,
    pub unconstrained: Option<Trajectory>,
    pub bands: Vec<BandConfig>,
}

/// Prints every `every`-th logged record to stderr; `every = 0` is silent.
fn progress_printer(label: &'static str, every: usize) -> impl FnMut(&StepRecord) {
    move |r: &StepRecord| {
        if every > 0 && r.step % every == 0 {
            eprintln!(
                "[{label}] step {} t {:.6e} E {:.6} penalty {:.4e} M {:?} rate {} cg {}",
                r.step,
                r.time,
                r.energy.total,
                r.energy.penalty,
                r.components,
                r.rate.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}")),
                r.solver_iterations
            );
        }
    }
}

fn run_pair<F>(cfg: &ExperimentConfig, progress: usize, run: F) -> Result<FlowReport>
where
    F: Fn(&[BandConfig], &mut dyn FnMut(&StepRecord)) -> Result<Trajectory>,
{
    let bands_on = bands(cfg, cfg.amplitude)?;
    let constrained = run(&bands_on, &mut progress_printer("constrained", progress))?;
    let unconstrained = if cfg.compare_unconstrained {
        let bands_off = bands(cfg, 0.0)?;
        Some(run(&bands_off, &mut progress_printer("unconstrained", progress))?)
    } else {
        None
    };
    Ok(FlowReport {
        constrained,
        unconstrained,
        bands: bands_on,
    })
}

pub fn run_segmentation(cfg: &ExperimentConfig, setup: &Setup, progress: usize) -> Result<FlowReport> {
    let image = reference_image(cfg, &setup.mesh)?;
    let params = ModelParams {
        well: WellVariant::Shifted,
        ..model_params(cfg)
    };
    let model = SegmentationModel::new(&setup.ops, &image.values, params)?;
    let u0 = initial_field(cfg, &setup.mesh)?;
    let fc = flow_config(cfg);
    run_pair(cfg, progress, |bands, obs| {
        run_flow_observed(&fc, &model, &setup.mesh, &setup.graph, PhaseField::new(u0.clone()), bands, obs)
    })
}

pub fn run_curvature(cfg: &ExperimentConfig, setup: &Setup, progress: usize) -> Result<FlowReport> {
    let implicit = match cfg.implicit {
        ImplicitChoice::GaussNewton => CurvatureImplicit::GaussNewton,
        ImplicitChoice::Biharmonic => CurvatureImplicit::Biharmonic,
    };
    let model = CurvatureModel::new(
        &setup.ops,
        model_params(cfg),
        setup.mesh.boundary_mask().to_vec(),
        implicit,
    )?;
    let u0 = initial_field(cfg, &setup.mesh)?;
    let fc = flow_config(cfg);
    run_pair(cfg, progress, |bands, obs| {
        run_flow_observed(&fc, &model, &setup.mesh, &setup.graph, PhaseField::new(u0.clone()), bands, obs)
    })
}

/// Fidelity cost `η ∫ g_1²` of setting `u ≡ 0` where `g_1` holds only the
/// right-hand disk of the two-disk image.
pub fn disk_removal_cost(cfg: &ExperimentConfig, setup: &Setup) -> Result<f64> {
    let g = disks_image(
        &setup.mesh,
        &[[0.5 * cfg.disk_separation, 0.0]],
        cfg.disk_radius,
        cfg.image_width,
    )?;
    let zero = vec![0.0; setup.mesh.num_nodes()];
    Ok(fidelity(&zero, &g.values, &setup.ops, cfg.eta)?.0)
}

/// Number of image disks whose centre region (radius r/2) has mean `u > 0.5`.
pub fn disks_retained(cfg: &ExperimentConfig, mesh: &Mesh, u: &[f64]) -> usize {
    let c = 0.5 * cfg.disk_separation;
    [[-c, 0.0], [c, 0.0]]
        .iter()
        .filter(|center| {
            let (sum, count) = mesh
                .nodes()
                .iter()
                .zip(u)
                .filter(|(p, _)| (p[0] - center[0]).hypot(p[1] - center[1]) < 0.5 * cfg.disk_radius)
                .fold((0.0, 0usize), |(s, k), (_, v)| (s + v, k + 1));
            count > 0 && sum / count as f64 > 0.5
        })
        .count()
}

/// Ordered `key: value` summary lines plus whether the run counts as a success.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub lines: Vec<(String, String)>,
    pub success: bool,
}

impl Summary {
    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

fn summarize_trajectory(s: &mut Summary, prefix: &str, t: &Trajectory, mesh: &Mesh, graph: &DualGraph, level: f64) {
    let r = t.final_record();
    let e = &r.energy;
    s.push(format!("{prefix}stop_reason"), t.stop.as_str());
    s.push(format!("{prefix}steps"), t.steps);
    s.push(format!("{prefix}final_time"), r.time);
    s.push(format!("{prefix}energy_total"), e.total);
    s.push(format!("{prefix}energy_perimeter"), e.perimeter);
    s.push(format!("{prefix}energy_curvature"), e.curvature);
    s.push(format!("{prefix}energy_fidelity"), e.fidelity);
    s.push(format!("{prefix}energy_penalty"), e.penalty);
    for (b, (p, c)) in r.band_penalty.iter().zip(&r.components).enumerate() {
        s.push(format!("{prefix}band{b}_penalty"), p);
        s.push(format!("{prefix}band{b}_components"), c);
        let series = component_count_series(t, b);
        s.push(format!("{prefix}band{b}_max_components"), series.iter().max().copied().unwrap_or(0));
        let first = series.iter().position(|&m| m >= 2);
        s.push(
            format!("{prefix}band{b}_first_split_step"),
            first.map_or_else(|| "none".to_string(), |k| k.to_string()),
        );
    }
    s.push(
        format!("{prefix}superlevel_components"),
        superlevel_components(mesh, graph, &t.final_snapshot().values, level),
    );
    s.push(format!("{prefix}energy_upticks"), t.upticks);
    s.push(format!("{prefix}pipeline_time_share"), t.pipeline_share());
    s.push(format!("{prefix}wall_seconds"), t.total_time.as_secs_f64());
}

fn write_run(out: &Path, tag: &str, t: &Trajectory, setup: &Setup, bands: &[BandConfig]) -> Result<()> {
    write_energy_log(&out.join(format!("energy{tag}.csv")), &t.records, bands.len())?;
    for snap in &t.snapshots {
        let field = PhaseField::new(snap.values.clone());
        let mut cells = Vec::new();
        for b in bands {
            let avg = setup.mesh.element_averages(field.values());
            let d = decompose_components(&setup.graph, &extract_interface(&avg, b.alpha, b.beta));
            cells.push(decomposition_cell_data(&d));
        }
        let names: Vec<(String, String)> = (0..bands.len())
            .map(|b| (format!("interface_band{b}"), format!("component_band{b}")))
            .collect();
        let mut cell_fields: Vec<(&str, &[i64])> = Vec::new();
        for ((fname, cname), (flag, comp)) in names.iter().zip(&cells) {
            cell_fields.push((fname, flag));
            cell_fields.push((cname, comp));
        }
        let path = out.join(format!("snapshot{tag}_{:07}.vtk", snap.step));
        write_vtk(&path, &setup.mesh, &[("u", &snap.values)], &cell_fields)?;
    }
    write_nodal_csv(&out.join(format!("final{tag}.csv")), &setup.mesh, "u", &t.final_snapshot().values)
}

fn mesh_info(cfg: &ExperimentConfig, setup: &Setup) -> Summary {
    let mut s = Summary {
        success: true,
        ..Default::default()
    };
    let m = &setup.mesh;
    s.push("kind", cfg.kind.as_str());
    s.push("nodes", m.num_nodes());
    s.push("elements", m.num_elements());
    s.push("interior_edges", m.interior_edges().len());
    s.push("boundary_nodes", m.boundary_nodes().len());
    s.push("min_diameter", m.min_diameter());
    s.push("max_diameter", m.max_diameter());
    s.push("total_area", m.total_area());
    s
}

fn penalty_probe(cfg: &ExperimentConfig, setup: &Setup) -> Result<Summary> {
    let u = match &cfg.probe_field {
        Some(p) => read_nodal_csv(p, setup.mesh.num_nodes())?,
        None => initial_field(cfg, &setup.mesh)?,
    };
    let field = PhaseField::new(u);
    let bands = bands(cfg, cfg.amplitude)?;
    let mut s = Summary {
        success: true,
        ..Default::default()
    };
    s.push("kind", cfg.kind.as_str());
    for (b, band) in bands.iter().enumerate() {
        let d = analyze_band(&setup.mesh, &setup.graph, &field, band)?;
        s.push(format!("band{b}_interval"), format!("[{}, {}]", band.alpha, band.beta));
        s.push(format!("band{b}_components"), d.num_components());
        for (j, w) in d.masses.iter().enumerate() {
            s.push(format!("band{b}_mass{j}"), w);
        }
        for (i, j, dist, path) in d.pairs() {
            s.push(format!("band{b}_distance{i}_{j}"), dist);
            s.push(format!("band{b}_path_length{i}_{j}"), path.len());
        }
        s.push(format!("band{b}_penalty"), crate::penalty::penalty_energy(&d));
    }
    let state = penalty_state(&setup.mesh, &setup.graph, &field, &bands)?;
    s.push("scaled_penalty", state.scaled_energy);
    Ok(s)
}

/// Runs the configured experiment, writing all artifacts into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    run_experiment_with_progress(cfg, out, 0)
}

/// [`run_experiment`] printing every `progress`-th logged step to stderr.
pub fn run_experiment_with_progress(cfg: &ExperimentConfig, out: &Path, progress: usize) -> Result<Summary> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cfg_path = out.join("config.txt");
    fs::write(&cfg_path, cfg.to_text()).map_err(|e| Error::io(&cfg_path, e))?;
    let setup = build_setup(cfg)?;
    let summary = match cfg.kind {
        ExperimentKind::MeshInfo => mesh_info(cfg, &setup),
        ExperimentKind::PenaltyProbe => penalty_probe(cfg, &setup)?,
        ExperimentKind::Segmentation | ExperimentKind::CurvatureFlow => {
            let seg = cfg.kind == ExperimentKind::Segmentation;
            let report = if seg {
                run_segmentation(cfg, &setup, progress)?
            } else {
                run_curvature(cfg, &setup, progress)?
            };
            let level = if seg { 0.5 } else { 0.0 };
            let mut s = Summary::default();
            s.push("kind", cfg.kind.as_str());
            summarize_trajectory(&mut s, "", &report.constrained, &setup.mesh, &setup.graph, level);
            write_run(out, "", &report.constrained, &setup, &report.bands)?;
            if let Some(free) = &report.unconstrained {
                summarize_trajectory(&mut s, "unconstrained_", free, &setup.mesh, &setup.graph, level);
                write_run(out, "_unconstrained", free, &setup, &report.bands)?;
                let increase = report.constrained.final_record().energy.perimeter - free.final_record().energy.perimeter;
                s.push("perimeter_increase", increase);
            }
            if seg {
                let u = &report.constrained.final_snapshot().values;
                s.push("disks_retained", disks_retained(cfg, &setup.mesh, u));
                s.push("removal_cost_measured", disk_removal_cost(cfg, &setup)?);
                s.push(
                    "removal_cost_reference",
                    cfg.eta * std::f64::consts::PI * cfg.disk_radius * cfg.disk_radius,
                );
                s.push("bridge_reference", 2.0 * (cfg.disk_separation - 2.0 * cfg.disk_radius));
            }
            s.success = report.constrained.is_stationary();
            s
        }
    };
    let path = out.join("summary.txt");
    fs::write(&path, summary.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
