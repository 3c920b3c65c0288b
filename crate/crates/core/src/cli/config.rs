//! Plain `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Segmentation,
    CurvatureFlow,
    PenaltyProbe,
    MeshInfo,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Segmentation => "segmentation",
            ExperimentKind::CurvatureFlow => "curvature-flow",
            ExperimentKind::PenaltyProbe => "penalty-probe",
            ExperimentKind::MeshInfo => "mesh-info",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "segmentation" => Ok(Self::Segmentation),
            "curvature-flow" => Ok(Self::CurvatureFlow),
            "penalty-probe" => Ok(Self::PenaltyProbe),
            "mesh-info" => Ok(Self::MeshInfo),
            _ => Err(format!(
                "unknown experiment kind {s:?} (expected segmentation, curvature-flow, penalty-probe or mesh-info)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellChoice {
    /// Shifted well for segmentation, symmetric otherwise.
    Auto,
    Symmetric,
    Shifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialShape {
    Flower,
    Dumbbell,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageSource {
    TwoDisks,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitChoice {
    GaussNewton,
    Biharmonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Table1Large,
    Table1Small,
    Dumbbell2d,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Table1Large => "table1-large",
            Preset::Table1Small => "table1-small",
            Preset::Dumbbell2d => "dumbbell2d",
        }
    }

    /// `key = value` lines of the preset, applied on top of the defaults.
    pub fn text(self) -> &'static str {
        match self {
            Preset::Table1Large => TABLE1_COMMON_AND_LARGE,
            Preset::Table1Small => TABLE1_SMALL,
            Preset::Dumbbell2d => DUMBBELL_2D,
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table1-large" => Ok(Self::Table1Large),
            "table1-small" => Ok(Self::Table1Small),
            "dumbbell2d" => Ok(Self::Dumbbell2d),
            _ => Err(format!(
                "unknown preset {s:?} (expected table1-large, table1-small or dumbbell2d)"
            )),
        }
    }
}

const TABLE1_COMMON_AND_LARGE: &str = "\
kind = segmentation
n = 128
domain_half = 0.5
eps = 0.01
eta = 10.5
amplitude = 0.4
exponent = 0
alpha = 0.9
beta = 1.2
image = two-disks
disk_radius = 0.16
disk_separation = 0.6
initial = flower
tau = 5e-6
compare_unconstrained = true
";

const TABLE1_SMALL: &str = "\
kind = segmentation
n = 128
domain_half = 0.5
eps = 0.01
eta = 10.5
amplitude = 0.4
exponent = 0
alpha = 0.9
beta = 1.2
image = two-disks
disk_radius = 0.11
disk_separation = 0.6
initial = flower
tau = 5e-6
compare_unconstrained = true
";

const DUMBBELL_2D: &str = "\
kind = curvature-flow
n = 128
domain_half = 0.6
eps = 0.03
lambda = 0.1
h0 = 6
sigma = 1
amplitude = 1
exponent = 1
alpha = 0.85
beta = 0.95
band2_alpha = -0.95
band2_beta = -0.85
initial = dumbbell
bulb_radius = 0.2
bulb_separation = 0.64
neck_width = 0.12
tau = 1e-5
max_steps = 1500
compare_unconstrained = true
";

/// Every experiment setting. [`ExperimentConfig::default`] documents the
/// defaults; [`ExperimentConfig::entries`] lists every key.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Cells per side of the structured mesh.
    pub n: usize,
    /// The domain is `[-domain_half, domain_half]²`.
    pub domain_half: f64,
    pub eps: f64,
    pub eta: f64,
    pub lambda: f64,
    pub h0: f64,
    pub sigma: f64,
    pub well: WellChoice,
    /// Penalty amplitude `a`.
    pub amplitude: f64,
    /// Exponent `p` of `a ε^(-p)`; `None` picks 0 for segmentation and 1 otherwise.
    pub exponent: Option<i32>,
    pub alpha: f64,
    pub beta: f64,
    /// Optional second band.
    pub band2: Option<(f64, f64)>,
    /// Uniform dual-graph length scale replacing the element diameters.
    pub length_scale: Option<f64>,
    pub image: ImageSource,
    pub image_file: Option<PathBuf>,
    pub disk_radius: f64,
    pub disk_separation: f64,
    /// Smoothing width of the synthetic image; 0 is a sharp indicator.
    pub image_width: f64,
    pub initial: InitialShape,
    pub initial_file: Option<PathBuf>,
    pub initial_width: f64,
    /// Amplitude of uniform noise added to the initial field (interior nodes).
    pub initial_noise: f64,
    pub bulb_radius: f64,
    pub bulb_separation: f64,
    pub neck_width: f64,
    /// Field analysed by the penalty probe; the initial field when unset.
    pub probe_field: Option<PathBuf>,
    pub tau: f64,
    /// `None` means `tau / 50`.
    pub tau_init: Option<f64>,
    pub warmup_steps: usize,
    pub max_steps: usize,
    pub theta_stop: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub implicit: ImplicitChoice,
    pub log_every: usize,
    pub snapshot_every: usize,
    /// Also run with `amplitude = 0` and report the difference.
    pub compare_unconstrained: bool,
    /// Seed of the noise generator.
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Segmentation,
            n: 128,
            domain_half: 0.5,
            eps: 0.01,
            eta: 10.5,
            lambda: 0.1,
            h0: 6.0,
            sigma: 1.0,
            well: WellChoice::Auto,
            amplitude: 0.4,
            exponent: None,
            alpha: 0.9,
            beta: 1.2,
            band2: None,
            length_scale: None,
            image: ImageSource::TwoDisks,
            image_file: None,
            disk_radius: 0.16,
            disk_separation: 0.6,
            image_width: 0.0,
            initial: InitialShape::Flower,
            initial_file: None,
            initial_width: 0.0,
            initial_noise: 0.0,
            bulb_radius: 0.2,
            bulb_separation: 0.64,
            neck_width: 0.12,
            probe_field: None,
            tau: 2e-5,
            tau_init: None,
            warmup_steps: 500,
            max_steps: 20_000,
            theta_stop: 1e-4,
            solver_tol: 1e-10,
            solver_max_iter: 5000,
            implicit: ImplicitChoice::GaussNewton,
            log_every: 1,
            snapshot_every: 0,
            compare_unconstrained: false,
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_opt<T: FromStr>(v: &str) -> std::result::Result<Option<T>, String> {
    if v == "none" || v == "auto" {
        Ok(None)
    } else {
        parse_num(v).map(Some)
    }
}

fn parse_path(v: &str) -> Option<PathBuf> {
    (v != "none").then(|| PathBuf::from(v))
}

fn show_opt<T: fmt::Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), |x| x.to_string())
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

impl ExperimentConfig {
    /// Sets one key. Band 2 endpoints are stored separately until validation
    /// pairs them up.
    fn set(&mut self, key: &str, v: &str, band2: &mut (Option<f64>, Option<f64>)) -> std::result::Result<(), String> {
        match key {
            "kind" => self.kind = v.parse()?,
            "n" => self.n = parse_num(v)?,
            "domain_half" => self.domain_half = parse_num(v)?,
            "eps" => self.eps = parse_num(v)?,
            "eta" => self.eta = parse_num(v)?,
            "lambda" => self.lambda = parse_num(v)?,
            "h0" => self.h0 = parse_num(v)?,
            "sigma" => self.sigma = parse_num(v)?,
            "well" => {
                self.well = match v {
                    "auto" => WellChoice::Auto,
                    "symmetric" => WellChoice::Symmetric,
                    "shifted" => WellChoice::Shifted,
                    _ => return Err(format!("expected auto, symmetric or shifted, got {v:?}")),
                }
            }
            "amplitude" => self.amplitude = parse_num(v)?,
            "exponent" => self.exponent = parse_opt(v)?,
            "alpha" => self.alpha = parse_num(v)?,
            "beta" => self.beta = parse_num(v)?,
            "band2_alpha" => band2.0 = parse_opt(v)?,
            "band2_beta" => band2.1 = parse_opt(v)?,
            "length_scale" => self.length_scale = parse_opt(v)?,
            "image" => {
                self.image = match v {
                    "two-disks" => ImageSource::TwoDisks,
                    "file" => ImageSource::File,
                    _ => return Err(format!("expected two-disks or file, got {v:?}")),
                }
            }
            "image_file" => self.image_file = parse_path(v),
            "disk_radius" => self.disk_radius = parse_num(v)?,
            "disk_separation" => self.disk_separation = parse_num(v)?,
            "image_width" => self.image_width = parse_num(v)?,
            "initial" => {
                self.initial = match v {
                    "flower" => InitialShape::Flower,
                    "dumbbell" => InitialShape::Dumbbell,
                    "file" => InitialShape::File,
                    _ => return Err(format!("expected flower, dumbbell or file, got {v:?}")),
                }
            }
            "initial_file" => self.initial_file = parse_path(v),
            "initial_width" => self.initial_width = parse_num(v)?,
            "initial_noise" => self.initial_noise = parse_num(v)?,
            "bulb_radius" => self.bulb_radius = parse_num(v)?,
            "bulb_separation" => self.bulb_separation = parse_num(v)?,
            "neck_width" => self.neck_width = parse_num(v)?,
            "probe_field" => self.probe_field = parse_path(v),
            "tau" => self.tau = parse_num(v)?,
            "tau_init" => self.tau_init = parse_opt(v)?,
            "warmup_steps" => self.warmup_steps = parse_num(v)?,
            "max_steps" => self.max_steps = parse_num(v)?,
            "theta_stop" => self.theta_stop = parse_num(v)?,
            "solver_tol" => self.solver_tol = parse_num(v)?,
            "solver_max_iter" => self.solver_max_iter = parse_num(v)?,
            "implicit" => {
                self.implicit = match v {
                    "gauss-newton" => ImplicitChoice::GaussNewton,
                    "biharmonic" => ImplicitChoice::Biharmonic,
                    _ => return Err(format!("expected gauss-newton or biharmonic, got {v:?}")),
                }
            }
            "log_every" => self.log_every = parse_num(v)?,
            "snapshot_every" => self.snapshot_every = parse_num(v)?,
            "compare_unconstrained" => self.compare_unconstrained = parse_bool(v)?,
            "seed" => self.seed = parse_num(v)?,
            "output" => self.output = PathBuf::from(v),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order. Feeding the result
    /// back through [`parse_config_str`] reproduces the configuration.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let well = match self.well {
            WellChoice::Auto => "auto",
            WellChoice::Symmetric => "symmetric",
            WellChoice::Shifted => "shifted",
        };
        let image = match self.image {
            ImageSource::TwoDisks => "two-disks",
            ImageSource::File => "file",
        };
        let initial = match self.initial {
            InitialShape::Flower => "flower",
            InitialShape::Dumbbell => "dumbbell",
            InitialShape::File => "file",
        };
        let implicit = match self.implicit {
            ImplicitChoice::GaussNewton => "gauss-newton",
            ImplicitChoice::Biharmonic => "biharmonic",
        };
        vec![
            ("kind", self.kind.as_str().into()),
            ("n", self.n.to_string()),
            ("domain_half", self.domain_half.to_string()),
            ("eps", self.eps.to_string()),
            ("eta", self.eta.to_string()),
            ("lambda", self.lambda.to_string()),
            ("h0", self.h0.to_string()),
            ("sigma", self.sigma.to_string()),
            ("well", well.into()),
            ("amplitude", self.amplitude.to_string()),
            ("exponent", show_opt(&self.exponent, "auto")),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("band2_alpha", show_opt(&self.band2.map(|b| b.0), "none")),
            ("band2_beta", show_opt(&self.band2.map(|b| b.1), "none")),
            ("length_scale", show_opt(&self.length_scale, "none")),
            ("image", image.into()),
            ("image_file", show_path(&self.image_file)),
            ("disk_radius", self.disk_radius.to_string()),
            ("disk_separation", self.disk_separation.to_string()),
            ("image_width", self.image_width.to_string()),
            ("initial", initial.into()),
            ("initial_file", show_path(&self.initial_file)),
            ("initial_width", self.initial_width.to_string()),
            ("initial_noise", self.initial_noise.to_string()),
            ("bulb_radius", self.bulb_radius.to_string()),
            ("bulb_separation", self.bulb_separation.to_string()),
            ("neck_width", self.neck_width.to_string()),
            ("probe_field", show_path(&self.probe_field)),
            ("tau", self.tau.to_string()),
            ("tau_init", show_opt(&self.tau_init, "auto")),
            ("warmup_steps", self.warmup_steps.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("theta_stop", self.theta_stop.to_string()),
            ("solver_tol", self.solver_tol.to_string()),
            ("solver_max_iter", self.solver_max_iter.to_string()),
            ("implicit", implicit.into()),
            ("log_every", self.log_every.to_string()),
            ("snapshot_every", self.snapshot_every.to_string()),
            ("compare_unconstrained", self.compare_unconstrained.to_string()),
            ("seed", self.seed.to_string()),
            ("output", self.output.display().to_string()),
        ]
    }

    /// `key = value` text of [`ExperimentConfig::entries`].
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Exponent actually used: the configured one, else 0 for segmentation and 1 otherwise.
    pub fn effective_exponent(&self) -> i32 {
        self.exponent.unwrap_or(match self.kind {
            ExperimentKind::Segmentation => 0,
            _ => 1,
        })
    }

    pub fn effective_tau_init(&self) -> f64 {
        self.tau_init.unwrap_or(self.tau / 50.0)
    }

    /// Checks cross-field invariants; the message names the offending key.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("{key} must be positive, got {v}")))
            }
        };
        let non_negative = |key: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("{key} must be non-negative, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(("n", "n must be at least 1".into()));
        }
        positive("domain_half", self.domain_half)?;
        positive("eps", self.eps)?;
        non_negative("eta", self.eta)?;
        non_negative("lambda", self.lambda)?;
        if !self.h0.is_finite() {
            return Err(("h0", "h0 must be finite".into()));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(("sigma", format!("sigma must be 1 or -1, got {}", self.sigma)));
        }
        non_negative("amplitude", self.amplitude)?;
        if !(self.alpha < self.beta) {
            return Err((
                "beta",
                format!("band requires alpha < beta, got alpha = {}, beta = {}", self.alpha, self.beta),
            ));
        }
        if let Some((a, b)) = self.band2 {
            if !(a < b) {
                return Err((
                    "band2_beta",
                    format!("band requires band2_alpha < band2_beta, got {a} and {b}"),
                ));
            }
        }
        if let Some(l) = self.length_scale {
            positive("length_scale", l)?;
        }
        positive("disk_radius", self.disk_radius)?;
        positive("disk_separation", self.disk_separation)?;
        non_negative("image_width", self.image_width)?;
        non_negative("initial_width", self.initial_width)?;
        non_negative("initial_noise", self.initial_noise)?;
        positive("bulb_radius", self.bulb_radius)?;
        positive("bulb_separation", self.bulb_separation)?;
        positive("neck_width", self.neck_width)?;
        if self.image == ImageSource::File && self.image_file.is_none() {
            return Err(("image_file", "image = file requires image_file".into()));
        }
        if self.initial == InitialShape::File && self.initial_file.is_none() {
            return Err(("initial_file", "initial = file requires initial_file".into()));
        }
        positive("tau", self.tau)?;
        if let Some(t) = self.tau_init {
            positive("tau_init", t)?;
        }
        positive("theta_stop", self.theta_stop)?;
        positive("solver_tol", self.solver_tol)?;
        if self.solver_max_iter == 0 {
            return Err(("solver_max_iter", "solver_max_iter must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(("log_every", "log_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applies `text` on top of `base`; diagnostics carry `path` and the line number.
fn apply_text(base: ExperimentConfig, text: &str, path: &Path) -> Result<(ExperimentConfig, Vec<(&'static str, usize)>)> {
    let mut cfg = base;
    let mut band2 = (cfg.band2.map(|b| b.0), cfg.band2.map(|b| b.1));
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected `key = value`, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        cfg.set(key, value, &mut band2).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{key}: {message}"),
        })?;
        if let Some(k) = KEYS.iter().find(|k| **k == key) {
            lines.push((*k, line));
        }
    }
    cfg.band2 = match band2 {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            let line = lines
                .iter()
                .rev()
                .find(|(k, _)| k.starts_with("band2_"))
                .map_or(0, |(_, l)| *l);
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "band2_alpha and band2_beta must be set together".into(),
            });
        }
    };
    Ok((cfg, lines))
}

const KEYS: &[&str] = &[
    "kind", "n", "domain_half", "eps", "eta", "lambda", "h0", "sigma", "well", "amplitude", "exponent",
    "alpha", "beta", "band2_alpha", "band2_beta", "length_scale", "image", "image_file", "disk_radius",
    "disk_separation", "image_width", "initial", "initial_file", "initial_width", "initial_noise",
    "bulb_radius", "bulb_separation", "neck_width", "probe_field", "tau", "tau_init", "warmup_steps",
    "max_steps", "theta_stop", "solver_tol", "solver_max_iter", "implicit", "log_every",
    "snapshot_every", "compare_unconstrained", "seed", "output",
];

/// Parses configuration text: defaults, then the preset, then `text`.
pub fn parse_config_str(text: &str, path: &Path, preset: Option<Preset>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = preset {
        let name = PathBuf::from(format!("<preset {}>", p.as_str()));
        cfg = apply_text(cfg, p.text(), &name)?.0;
    }
    let (cfg, lines) = apply_text(cfg, text, path)?;
    cfg.check().map_err(|(key, message)| Error::Parse {
        path: path.to_path_buf(),
        // the last line that set the offending key, 0 when it came from a default or preset
        line: lines.iter().rev().find(|(k, _)| *k == key).map_or(0, |(_, l)| *l),
        message,
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, preset: Option<Preset>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path, preset)
}
