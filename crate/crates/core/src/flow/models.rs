//! Energies driven by the flow, each paired with the linear operator that is
//! treated implicitly.

use crate::error::{Error, Result};
use crate::functionals::{
    curvature_params, curvature_residual, fidelity, modica_mortola, willmore_term, EnergyBreakdown,
    ModelParams, WellVariant,
};
use crate::mesh::P1Operators;
use crate::sparse::{CsrMatrix, LinearOperator};

/// A smooth energy `E(u)` for the flow, without the connectedness penalty.
pub trait GradientModel: Sync {
    /// Interface width `ε`; the flow's inner product is `ε M_L`.
    fn eps(&self) -> f64;

    fn operators(&self) -> &P1Operators;

    /// Energy terms and the gradient `∂E/∂u_k`.
    fn evaluate(&self, u: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)>;

    /// Symmetric positive semidefinite operator `A` treated implicitly at the
    /// state `u`. The step solves `(ε M_L + τ A) δ = -τ (∇E + force)`.
    fn implicit_operator<'a>(&'a self, u: &[f64]) -> Box<dyn LinearOperator + Sync + 'a>;

    /// Nodes clamped to their initial value.
    fn fixed_nodes(&self) -> Option<&[bool]> {
        None
    }
}

/// `S_ε(u) + η ∫ |u - g|²` on the shifted well, with `(ε/c₀) K` implicit.
pub struct SegmentationModel<'a> {
    ops: &'a P1Operators,
    image: &'a [f64],
    params: ModelParams,
    implicit: CsrMatrix,
}

impl<'a> SegmentationModel<'a> {
    pub fn new(ops: &'a P1Operators, image: &'a [f64], params: ModelParams) -> Result<Self> {
        params.validate()?;
        if image.len() != ops.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: ops.num_nodes(),
                found: image.len(),
            });
        }
        let params = ModelParams {
            well: WellVariant::Shifted,
            ..params
        };
        let zeros = vec![0.0; ops.num_nodes()];
        let implicit = ops
            .stiffness
            .scaled_plus_diagonal(params.eps / params.c0(), &zeros);
        Ok(Self {
            ops,
            image,
            params,
            implicit,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

impl GradientModel for SegmentationModel<'_> {
    fn eps(&self) -> f64 {
        self.params.eps
    }

    fn operators(&self) -> &P1Operators {
        self.ops
    }

    fn evaluate(&self, u: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (perimeter, mut grad) = modica_mortola(u, self.ops, &self.params)?;
        let (fid, gfid) = fidelity(u, self.image, self.ops, self.params.eta)?;
        for (g, f) in grad.iter_mut().zip(&gfid) {
            *g += f;
        }
        let energy = EnergyBreakdown {
            perimeter,
            fidelity: fid,
            total: perimeter + fid,
            ..Default::default()
        };
        Ok((energy, grad))
    }

    fn implicit_operator<'b>(&'b self, _u: &[f64]) -> Box<dyn LinearOperator + Sync + 'b> {
        Box::new(&self.implicit)
    }
}

/// Which part of the curvature energy's Hessian is taken implicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureImplicit {
    /// Gauss–Newton matrix `(2/(c₀ε)) Jᵀ M_L J` of the residual, with
    /// `J = ε M_L⁻¹ K + diag(d)`, plus `λ (ε/c₀) K`.
    GaussNewton,
    /// Only the biharmonic part `(2ε/c₀) K M_L⁻¹ K`, plus `λ (ε/c₀) K`.
    Biharmonic,
}

/// Curvature energy with spontaneous curvature and perimeter weight `λ` on the
/// symmetric well, with the boundary nodes clamped.
pub struct CurvatureModel<'a> {
    ops: &'a P1Operators,
    params: ModelParams,
    fixed: Vec<bool>,
    implicit: CurvatureImplicit,
    /// `Σ_k K_ki² / m_k`, the diagonal of `K M_L⁻¹ K`.
    biharmonic_diagonal: Vec<f64>,
}

impl<'a> CurvatureModel<'a> {
    pub fn new(
        ops: &'a P1Operators,
        params: ModelParams,
        fixed: Vec<bool>,
        implicit: CurvatureImplicit,
    ) -> Result<Self> {
        let params = curvature_params(&params)?;
        if fixed.len() != ops.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: ops.num_nodes(),
                found: fixed.len(),
            });
        }
        let m = &ops.lumped_mass;
        let biharmonic_diagonal = (0..ops.num_nodes())
            .map(|i| ops.stiffness.row(i).map(|(k, v)| v * v / m[k]).sum())
            .collect();
        Ok(Self {
            ops,
            params,
            fixed,
            implicit,
            biharmonic_diagonal,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

impl GradientModel for CurvatureModel<'_> {
    fn eps(&self) -> f64 {
        self.params.eps
    }

    fn operators(&self) -> &P1Operators {
        self.ops
    }

    fn evaluate(&self, u: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (curvature, mut grad) = willmore_term(u, self.ops, &self.params)?;
        let (perimeter, gper) = modica_mortola(u, self.ops, &self.params)?;
        let lambda = self.params.lambda;
        if lambda != 0.0 {
            for (g, p) in grad.iter_mut().zip(&gper) {
                *g += lambda * p;
            }
        }
        let energy = EnergyBreakdown {
            perimeter,
            curvature,
            total: curvature + lambda * perimeter,
            ..Default::default()
        };
        Ok((energy, grad))
    }

    fn implicit_operator<'b>(&'b self, u: &[f64]) -> Box<dyn LinearOperator + Sync + 'b> {
        let d = match self.implicit {
            CurvatureImplicit::GaussNewton => curvature_residual(u, self.ops, &self.params).1,
            CurvatureImplicit::Biharmonic => vec![0.0; u.len()],
        };
        Box::new(GaussNewtonOperator {
            model: self,
            d,
        })
    }

    fn fixed_nodes(&self) -> Option<&[bool]> {
        Some(&self.fixed)
    }
}

struct GaussNewtonOperator<'a> {
    model: &'a CurvatureModel<'a>,
    d: Vec<f64>,
}

impl GaussNewtonOperator<'_> {
    fn scale(&self) -> f64 {
        let p = &self.model.params;
        2.0 / (p.c0() * p.eps)
    }

    fn perimeter_scale(&self) -> f64 {
        let p = &self.model.params;
        p.lambda * p.eps / p.c0()
    }
}

impl LinearOperator for GaussNewtonOperator<'_> {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ops = self.model.ops;
        let m = &ops.lumped_mass;
        let eps = self.model.params.eps;
        let n = x.len();
        let mut kx = vec![0.0; n];
        ops.stiffness.mul_vec_into(x, &mut kx);
        // J x = ε M⁻¹ K x + d x, then Jᵀ M J x = ε K (J x) + d M (J x)
        let jx: Vec<f64> = (0..n).map(|i| eps * kx[i] / m[i] + self.d[i] * x[i]).collect();
        ops.stiffness.mul_vec_into(&jx, y);
        let (s, sp) = (self.scale(), self.perimeter_scale());
        for i in 0..n {
            y[i] = s * (eps * y[i] + self.d[i] * m[i] * jx[i]) + sp * kx[i];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let ops = self.model.ops;
        let m = &ops.lumped_mass;
        let eps = self.model.params.eps;
        let kd = ops.stiffness.diagonal();
        let (s, sp) = (self.scale(), self.perimeter_scale());
        (0..self.d.len())
            .map(|i| {
                let d = self.d[i];
                s * (eps * eps * self.model.biharmonic_diagonal[i] + 2.0 * eps * kd[i] * d + m[i] * d * d)
                    + sp * kd[i]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assemble_p1, build_square_mesh, Square};

    fn dense(op: &dyn LinearOperator) -> Vec<Vec<f64>> {
        let n = op.dim();
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let mut col = vec![0.0; n];
                op.apply(&e, &mut col);
                col
            })
            .collect()
    }

    #[test]
    fn gauss_newton_operator_is_symmetric_with_exact_diagonal() {
        let mesh = build_square_mesh(5, Square::centered(0.5)).unwrap();
        let ops = assemble_p1(&mesh).unwrap();
        let params = ModelParams::curvature(0.1, 0.3, 2.0);
        let model = CurvatureModel::new(
            &ops,
            params,
            mesh.boundary_mask().to_vec(),
            CurvatureImplicit::GaussNewton,
        )
        .unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|p| (3.0 * p[0]).sin() * p[1].cos()).collect();
        let op = model.implicit_operator(&u);
        let a = dense(op.as_ref());
        let diag = op.diagonal();
        for i in 0..a.len() {
            assert!((a[i][i] - diag[i]).abs() < 1e-9 * a[i][i].abs().max(1.0));
            for j in 0..i {
                assert!((a[i][j] - a[j][i]).abs() < 1e-9 * a[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn gauss_newton_matches_residual_jacobian() {
        // (2/(c₀ε)) Jᵀ M J x equals the Gauss–Newton product built from finite
        // differences of the residual
        let mesh = build_square_mesh(4, Square::centered(0.5)).unwrap();
        let ops = assemble_p1(&mesh).unwrap();
        let params = ModelParams::curvature(0.2, 0.0, 1.5);
        let model = CurvatureModel::new(
            &ops,
            params,
            vec![false; mesh.num_nodes()],
            CurvatureImplicit::GaussNewton,
        )
        .unwrap();
        let u: Vec<f64> = mesh.nodes().iter().map(|p| 0.6 * p[0] - 0.3 * p[1]).collect();
        let x: Vec<f64> = (0..u.len()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let h = 1e-6;
        let shifted = |s: f64| {
            let v: Vec<f64> = u.iter().zip(&x).map(|(a, b)| a + s * b).collect();
            curvature_residual(&v, &ops, model.params()).0
        };
        let (rp, rm) = (shifted(h), shifted(-h));
        let jx: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let mjx: Vec<f64> = jx.iter().zip(&ops.lumped_mass).map(|(a, m)| a * m).collect();
        let op = model.implicit_operator(&u);
        let mut y = vec![0.0; u.len()];
        op.apply(&x, &mut y);
        let scale = 2.0 / (params.c0() * params.eps);
        // xᵀ A x = scale · (J x)ᵀ M (J x)
        let lhs: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = scale * jx.iter().zip(&mjx).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs());
    }
}
