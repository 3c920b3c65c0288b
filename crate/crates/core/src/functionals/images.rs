//! Synthetic reference images and initial phase fields.

use std::f64::consts::SQRT_2;

use super::WellVariant;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Nodal image `g` with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceImage {
    pub values: Vec<f64>,
    /// How the image was produced (generator parameters or source file).
    pub provenance: String,
}

impl ReferenceImage {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidConfig(format!(
                "image value {v} at node {i} outside [0, 1]"
            )));
        }
        Ok(Self {
            values,
            provenance: provenance.into(),
        })
    }
}

fn bounding_box(mesh: &Mesh) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in mesh.nodes() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn check_disk_inside(mesh: &Mesh, center: [f64; 2], radius: f64) -> Result<()> {
    let (lo, hi) = bounding_box(mesh);
    let inside = (0..2).all(|k| center[k] - radius >= lo[k] && center[k] + radius <= hi[k]);
    if !(radius > 0.0) || !inside {
        return Err(Error::InvalidConfig(format!(
            "disk at ({}, {}) with radius {radius} does not fit in the domain",
            center[0], center[1]
        )));
    }
    Ok(())
}

/// Sharp (`width == 0`) or `½(1 + tanh(d / width))` smoothed indicator of a
/// region with signed distance `d` (positive inside).
fn indicator(d: f64, width: f64) -> f64 {
    if width > 0.0 {
        0.5 * (1.0 + (d / width).tanh())
    } else if d > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Indicator of a union of equal disks.
pub fn disks_image(mesh: &Mesh, centers: &[[f64; 2]], radius: f64, width: f64) -> Result<ReferenceImage> {
    for &c in centers {
        check_disk_inside(mesh, c, radius)?;
    }
    let values = mesh
        .nodes()
        .iter()
        .map(|p| {
            let d = centers
                .iter()
                .map(|c| radius - (p[0] - c[0]).hypot(p[1] - c[1]))
                .fold(f64::NEG_INFINITY, f64::max);
            indicator(d, width)
        })
        .collect();
    ReferenceImage::new(
        values,
        format!("disks(radius={radius}, centers={centers:?}, width={width})"),
    )
}

/// Two disks of radius `radius` centred at `(±separation/2, 0)`.
pub fn two_disks_image(mesh: &Mesh, radius: f64, separation: f64, width: f64) -> Result<ReferenceImage> {
    let half = 0.5 * separation;
    if !(radius < half) {
        return Err(Error::InvalidConfig(format!(
            "disks of radius {radius} overlap at center distance {separation}"
        )));
    }
    disks_image(mesh, &[[-half, 0.0], [half, 0.0]], radius, width)
}

/// Boundary radius `0.25 + 0.15 cos(5θ)` of the flower-shaped initial set.
pub fn flower_radius(theta: f64) -> f64 {
    0.25 + 0.15 * (5.0 * theta).cos()
}

/// Indicator of `{r < 0.25 + 0.15 cos(5θ)}` (polar coordinates about the
/// origin); smoothed radially when `width > 0`.
pub fn flower_field(mesh: &Mesh, width: f64) -> Result<Vec<f64>> {
    let (lo, hi) = bounding_box(mesh);
    if lo[0] > -0.4 || lo[1] > -0.4 || hi[0] < 0.4 || hi[1] < 0.4 {
        return Err(Error::InvalidConfig("flower of radius 0.4 does not fit in the domain".into()));
    }
    Ok(mesh
        .nodes()
        .iter()
        .map(|p| {
            let r = p[0].hypot(p[1]);
            let theta = p[1].atan2(p[0]);
            indicator(flower_radius(theta) - r, width)
        })
        .collect())
}

/// Optimal one-dimensional profile at signed distance `d` (positive on the
/// `+1` / `1` side).
fn optimal_profile(d: f64, eps: f64, variant: WellVariant) -> f64 {
    match variant {
        WellVariant::Symmetric => (d / (SQRT_2 * eps)).tanh(),
        WellVariant::Shifted => 0.5 * (1.0 + (d / (2.0 * SQRT_2 * eps)).tanh()),
    }
}

/// Optimal profile of a disk (positive phase inside).
pub fn circle_profile(mesh: &Mesh, center: [f64; 2], radius: f64, eps: f64, variant: WellVariant) -> Vec<f64> {
    mesh.nodes()
        .iter()
        .map(|p| optimal_profile(radius - (p[0] - center[0]).hypot(p[1] - center[1]), eps, variant))
        .collect()
}

/// Optimal profile of the straight interface `x = x0` (positive phase for `x > x0`).
pub fn line_profile(mesh: &Mesh, x0: f64, eps: f64, variant: WellVariant) -> Vec<f64> {
    mesh.nodes()
        .iter()
        .map(|p| optimal_profile(p[0] - x0, eps, variant))
        .collect()
}

/// Two disks on the x-axis joined by a straight neck.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumbbellShape {
    pub bulb_radius: f64,
    /// Distance between bulb centres.
    pub separation: f64,
    pub neck_width: f64,
}

impl DumbbellShape {
    /// Signed distance bound, positive inside (exact away from the junctions).
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let c = 0.5 * self.separation;
        let left = self.bulb_radius - (p[0] + c).hypot(p[1]);
        let right = self.bulb_radius - (p[0] - c).hypot(p[1]);
        // box [-c, c] x [-w/2, w/2]
        let qx = p[0].abs() - c;
        let qy = p[1].abs() - 0.5 * self.neck_width;
        let outside = qx.max(0.0).hypot(qy.max(0.0));
        let neck = -(outside + qx.max(qy).min(0.0));
        left.max(right).max(neck)
    }
}

/// Symmetric-well profile of a dumbbell, clamped to `-1` on the boundary.
pub fn dumbbell_profile(mesh: &Mesh, shape: &DumbbellShape, eps: f64) -> Result<Vec<f64>> {
    let (lo, hi) = bounding_box(mesh);
    let extent = 0.5 * shape.separation + shape.bulb_radius;
    if !(shape.bulb_radius > 0.0 && shape.neck_width > 0.0 && shape.neck_width < 2.0 * shape.bulb_radius)
        || -extent < lo[0]
        || extent > hi[0]
        || -shape.bulb_radius < lo[1]
        || shape.bulb_radius > hi[1]
    {
        return Err(Error::InvalidConfig(format!("dumbbell {shape:?} does not fit in the domain")));
    }
    Ok(mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            if mesh.is_boundary(v) {
                -1.0
            } else {
                optimal_profile(shape.signed_distance(p), eps, WellVariant::Symmetric)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_square_mesh, Square};

    #[test]
    fn flower_radii() {
        assert!((flower_radius(0.0) - 0.4).abs() < 1e-15);
        assert!((flower_radius(std::f64::consts::PI / 5.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_disks_values() {
        let mesh = build_square_mesh(64, Square::centered(0.5)).unwrap();
        let g = two_disks_image(&mesh, 0.16, 0.6, 0.0).unwrap();
        for (p, &v) in mesh.nodes().iter().zip(&g.values) {
            let inside = (p[0] - 0.3).hypot(p[1]) < 0.16 || (p[0] + 0.3).hypot(p[1]) < 0.16;
            assert_eq!(v, if inside { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        let mesh = build_square_mesh(8, Square::centered(0.5)).unwrap();
        assert!(two_disks_image(&mesh, 0.3, 0.8, 0.0).is_err());
        assert!(disks_image(&mesh, &[[0.45, 0.0]], 0.1, 0.0).is_err());
        let small = build_square_mesh(8, Square::centered(0.3)).unwrap();
        assert!(flower_field(&small, 0.0).is_err());
    }

    #[test]
    fn image_range_checked() {
        assert!(ReferenceImage::new(vec![0.0, 1.1], "test").is_err());
        assert!(ReferenceImage::new(vec![0.0, 1.0, 0.5], "test").is_ok());
    }

    #[test]
    fn dumbbell_distance() {
        let s = DumbbellShape {
            bulb_radius: 0.2,
            separation: 0.6,
            neck_width: 0.1,
        };
        assert!((s.signed_distance([0.3, 0.0]) - 0.2).abs() < 1e-15);
        assert!((s.signed_distance([0.0, 0.0]) - 0.05).abs() < 1e-15);
        assert!((s.signed_distance([0.0, 0.15]) + 0.1).abs() < 1e-15);
        assert!(s.signed_distance([0.0, 0.4]) < 0.0);
    }
}
