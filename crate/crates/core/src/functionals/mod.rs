//! Phase-field energies and their variations with respect to nodal values.
//!
//! Nonlinear terms use the vertex quadrature rule with the lumped mass, so
//! every returned gradient is the exact derivative of the returned energy.

mod images;

pub use images::{
    circle_profile, disks_image, dumbbell_profile, flower_field, flower_radius, line_profile,
    two_disks_image,
    DumbbellShape, ReferenceImage,
};

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::mesh::P1Operators;
use crate::sparse::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellVariant {
    /// `W(u) = (u² - 1)² / 4`, wells at ±1.
    Symmetric,
    /// `W(u) = u² (u - 1)² / 4`, wells at 0 and 1.
    Shifted,
}

impl WellVariant {
    /// `c₀ = ∫ √(2W)` between the wells.
    pub fn c0(self) -> f64 {
        match self {
            WellVariant::Symmetric => 2.0 * SQRT_2 / 3.0,
            WellVariant::Shifted => SQRT_2 / 12.0,
        }
    }
}

/// `(W, W', W'')` at `u`.
pub fn double_well(u: f64, variant: WellVariant) -> (f64, f64, f64) {
    match variant {
        WellVariant::Symmetric => {
            let s = u * u - 1.0;
            (0.25 * s * s, u * s, 3.0 * u * u - 1.0)
        }
        WellVariant::Shifted => {
            let v = u * (u - 1.0);
            (
                0.25 * v * v,
                0.5 * v * (2.0 * u - 1.0),
                0.5 * (6.0 * u * u - 6.0 * u + 1.0),
            )
        }
    }
}

/// Energy terms of one state. `perimeter` is the unweighted `S_ε`; `penalty`
/// is the scaled connectedness penalty; `total` is what the flow decreases.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub perimeter: f64,
    pub curvature: f64,
    pub fidelity: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub eps: f64,
    /// Weight of the perimeter term in the curvature energy.
    pub lambda: f64,
    /// Spontaneous curvature.
    pub h0: f64,
    /// Fidelity weight of the segmentation energy.
    pub eta: f64,
    pub well: WellVariant,
    /// Sign in front of `W'(u)/ε` inside the curvature residual.
    pub sigma: f64,
}

impl ModelParams {
    pub fn segmentation(eps: f64, eta: f64) -> Self {
        Self {
            eps,
            lambda: 0.0,
            h0: 0.0,
            eta,
            well: WellVariant::Shifted,
            sigma: 1.0,
        }
    }

    pub fn curvature(eps: f64, lambda: f64, h0: f64) -> Self {
        Self {
            eps,
            lambda,
            h0,
            eta: 0.0,
            well: WellVariant::Symmetric,
            sigma: 1.0,
        }
    }

    pub fn c0(&self) -> f64 {
        self.well.c0()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::InvalidConfig(format!("sigma must be +1 or -1, got {}", self.sigma)));
        }
        if !self.h0.is_finite() {
            return Err(Error::InvalidConfig("h0 must be finite".into()));
        }
        Ok(())
    }
}

fn check_len(u: &[f64], ops: &P1Operators) -> Result<()> {
    if u.len() != ops.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: ops.num_nodes(),
            found: u.len(),
        });
    }
    Ok(())
}

/// `S_ε(u) = (1/c₀) ∫ (ε/2)|∇u|² + W(u)/ε` and its gradient
/// `(1/c₀)(ε K u + M_L W'(u)/ε)`.
pub fn modica_mortola(u: &[f64], ops: &P1Operators, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    check_len(u, ops)?;
    let eps = params.eps;
    let inv_c0 = 1.0 / params.c0();
    let ku = ops.stiffness.mul_vec(u);
    let mut well = 0.0;
    let mut grad = Vec::with_capacity(u.len());
    for ((&ui, &m), &kui) in u.iter().zip(&ops.lumped_mass).zip(&ku) {
        let (w, dw, _) = double_well(ui, params.well);
        well += m * w;
        grad.push(inv_c0 * (eps * kui + m * dw / eps));
    }
    let energy = inv_c0 * (0.5 * eps * dot(u, &ku) + well / eps);
    Ok((energy, grad))
}

/// `Δ_h u = -M_L⁻¹ K u`; natural (Neumann) boundary behaviour.
pub fn discrete_laplacian(u: &[f64], ops: &P1Operators) -> Vec<f64> {
    let mut out = ops.stiffness.mul_vec(u);
    for (v, &m) in out.iter_mut().zip(&ops.lumped_mass) {
        *v = -*v / m;
    }
    out
}

/// Nodal curvature residual `r = -ε Δ_h u + σ W'(u)/ε - H₀ (1 - u²)/√2` and
/// its pointwise derivative factor `σ W''(u)/ε + √2 H₀ u`.
pub(crate) fn curvature_residual(u: &[f64], ops: &P1Operators, params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let eps = params.eps;
    let mut r = ops.stiffness.mul_vec(u);
    let mut d = Vec::with_capacity(u.len());
    for ((ri, &ui), &m) in r.iter_mut().zip(u).zip(&ops.lumped_mass) {
        let (_, dw, ddw) = double_well(ui, WellVariant::Symmetric);
        *ri = eps * *ri / m + params.sigma * dw / eps - params.h0 * (1.0 - ui * ui) / SQRT_2;
        d.push(params.sigma * ddw / eps + SQRT_2 * params.h0 * ui);
    }
    (r, d)
}

/// Curvature part `(1/(c₀ε)) rᵀ M_L r` alone, with its gradient.
pub fn willmore_term(u: &[f64], ops: &P1Operators, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    check_len(u, ops)?;
    let scale = 1.0 / (params.c0() * params.eps);
    let (r, d) = curvature_residual(u, ops, params);
    let energy = scale * r.iter().zip(&ops.lumped_mass).map(|(r, m)| m * r * r).sum::<f64>();
    // ∇ = (2/(c₀ε)) (ε K r + M_L d r)
    let kr = ops.stiffness.mul_vec(&r);
    let grad = kr
        .iter()
        .zip(&r)
        .zip(&d)
        .zip(&ops.lumped_mass)
        .map(|(((kr, r), d), m)| 2.0 * scale * (params.eps * kr + m * d * r))
        .collect();
    Ok((energy, grad))
}

/// Curvature energy with spontaneous curvature and perimeter penalty,
/// `(1/(c₀ε)) ∫ r² + λ S_ε`, on the symmetric well.
pub fn curvature_energy(u: &[f64], ops: &P1Operators, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let p = curvature_params(params)?;
    let (wil, mut grad) = willmore_term(u, ops, &p)?;
    if p.lambda == 0.0 {
        return Ok((wil, grad));
    }
    let (per, gper) = modica_mortola(u, ops, &p)?;
    for (g, gp) in grad.iter_mut().zip(&gper) {
        *g += p.lambda * gp;
    }
    Ok((wil + p.lambda * per, grad))
}

pub(crate) fn curvature_params(params: &ModelParams) -> Result<ModelParams> {
    params.validate()?;
    Ok(ModelParams {
        well: WellVariant::Symmetric,
        ..*params
    })
}

/// `η (u - g)ᵀ M (u - g)` and its gradient `2η M (u - g)`.
pub fn fidelity(u: &[f64], g: &[f64], ops: &P1Operators, eta: f64) -> Result<(f64, Vec<f64>)> {
    check_len(u, ops)?;
    check_len(g, ops)?;
    let diff: Vec<f64> = u.iter().zip(g).map(|(a, b)| a - b).collect();
    let mdiff = ops.mass.mul_vec(&diff);
    let energy = eta * dot(&diff, &mdiff);
    Ok((energy, mdiff.into_iter().map(|v| 2.0 * eta * v).collect()))
}

/// `S_ε(u) + η ∫ |u - g|²` on the shifted well.
pub fn segmentation_energy(
    u: &[f64],
    g: &[f64],
    ops: &P1Operators,
    params: &ModelParams,
) -> Result<(f64, Vec<f64>)> {
    params.validate()?;
    let p = ModelParams {
        well: WellVariant::Shifted,
        ..*params
    };
    let (per, mut grad) = modica_mortola(u, ops, &p)?;
    let (fid, gfid) = fidelity(u, g, ops, p.eta)?;
    for (a, b) in grad.iter_mut().zip(&gfid) {
        *a += b;
    }
    Ok((per + fid, grad))
}
