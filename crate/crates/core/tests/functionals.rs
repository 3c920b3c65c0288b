mod common;

use std::f64::consts::PI;

use phasefield_topo::functionals::{
    circle_profile, curvature_energy, fidelity, line_profile, modica_mortola, segmentation_energy,
    willmore_term, ModelParams, WellVariant,
};
use phasefield_topo::mesh::{assemble_p1, build_square_mesh, Square};
use proptest::prelude::*;

fn check_directions(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    u: &[f64],
    rng: &mut rand_chacha::ChaCha8Rng,
    directions: usize,
) -> Result<(), TestCaseError> {
    let (_, grad) = f(u);
    for _ in 0..directions {
        let dir = common::random_direction(rng, u.len());
        let exact = common::dot(&grad, &dir);
        let fd = common::directional_fd(|v| f(v).0, u, &dir, 1e-6);
        let rel = (fd - exact).abs() / exact.abs().max(1e-8);
        prop_assert!(rel <= 1e-5, "fd {fd} vs {exact}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn perimeter_variation(seed in any::<u64>(), shifted in any::<bool>()) {
        let fx = common::fixture(16);
        let mut rng = common::rng(seed);
        let u = common::smooth_field(&fx.mesh, &mut rng);
        let mut p = ModelParams::curvature(0.05, 0.0, 0.0);
        if shifted {
            p.well = WellVariant::Shifted;
        }
        check_directions(|v| modica_mortola(v, &fx.ops, &p).unwrap(), &u, &mut rng, 5)?;
    }

    #[test]
    fn curvature_variation(seed in any::<u64>(), h0 in -4.0f64..4.0, lambda in 0.0f64..1.0) {
        let fx = common::fixture(16);
        let mut rng = common::rng(seed);
        let u = common::smooth_field(&fx.mesh, &mut rng);
        let p = ModelParams::curvature(0.08, lambda, h0);
        check_directions(|v| curvature_energy(v, &fx.ops, &p).unwrap(), &u, &mut rng, 5)?;
    }

    #[test]
    fn fidelity_and_segmentation_variation(seed in any::<u64>()) {
        let fx = common::fixture(16);
        let mut rng = common::rng(seed);
        let u = common::smooth_field(&fx.mesh, &mut rng);
        let g = common::smooth_field(&fx.mesh, &mut rng);
        check_directions(|v| fidelity(v, &g, &fx.ops, 3.0).unwrap(), &u, &mut rng, 3)?;
        let p = ModelParams::segmentation(0.05, 10.5);
        check_directions(|v| segmentation_energy(v, &g, &fx.ops, &p).unwrap(), &u, &mut rng, 3)?;
    }

    #[test]
    fn energies_are_non_negative(seed in any::<u64>()) {
        let fx = common::fixture(12);
        let mut rng = common::rng(seed);
        let u = common::smooth_field(&fx.mesh, &mut rng);
        let p = ModelParams::curvature(0.05, 0.5, 1.0);
        prop_assert!(modica_mortola(&u, &fx.ops, &p).unwrap().0 >= 0.0);
        prop_assert!(curvature_energy(&u, &fx.ops, &p).unwrap().0 >= 0.0);
        prop_assert!(fidelity(&u, &u, &fx.ops, 1.0).unwrap().0 == 0.0);
    }
}

#[test]
fn circle_perimeter() {
    let mesh = build_square_mesh(128, Square::centered(0.5)).unwrap();
    let ops = assemble_p1(&mesh).unwrap();
    for (variant, eps) in [(WellVariant::Symmetric, 0.02), (WellVariant::Shifted, 0.01)] {
        let u = circle_profile(&mesh, [0.0, 0.0], 0.3, eps, variant);
        let p = ModelParams {
            well: variant,
            ..ModelParams::curvature(eps, 0.0, 0.0)
        };
        let s = modica_mortola(&u, &ops, &p).unwrap().0;
        assert!((s / (0.6 * PI) - 1.0).abs() < 0.03, "{variant:?}: {s}");
    }
}

#[test]
fn straight_interface_length() {
    let mesh = build_square_mesh(128, Square::centered(0.5)).unwrap();
    let ops = assemble_p1(&mesh).unwrap();
    let u = line_profile(&mesh, 0.05, 0.02, WellVariant::Symmetric);
    let s = modica_mortola(&u, &ops, &ModelParams::curvature(0.02, 0.0, 0.0)).unwrap().0;
    assert!((s - 1.0).abs() < 0.02, "{s}");
}

#[test]
fn straight_interface_has_little_curvature_energy() {
    let mesh = build_square_mesh(128, Square::centered(0.5)).unwrap();
    let ops = assemble_p1(&mesh).unwrap();
    let p = ModelParams::curvature(0.02, 0.0, 0.0);
    let line = willmore_term(&line_profile(&mesh, 0.05, 0.02, WellVariant::Symmetric), &ops, &p).unwrap().0;
    let circle = willmore_term(&circle_profile(&mesh, [0.0, 0.0], 0.3, 0.02, WellVariant::Symmetric), &ops, &p)
        .unwrap()
        .0;
    // a circle of radius R carries about 2π/R
    assert!((circle / (2.0 * PI / 0.3) - 1.0).abs() < 0.1, "{circle}");
    assert!(line < 0.05 * circle, "{line}");
}
