use super::*;
use crate::field::PlanarMatrixField;
use crate::grid::PlateGrid;
use crate::material::EnergyDensity;
use crate::prestrain::{PrestrainSpec, Rect};
use crate::tensor::{rotation_from_axis_angle, Mat3};

fn svk() -> EnergyDensity {
    EnergyDensity::svk(1.0, 1.0).unwrap()
}

fn bent_spec() -> PrestrainSpec {
    PrestrainSpec::new(
        PlanarMatrixField::constant(Mat3::diag([0.3, -0.2, 0.1])),
        PlanarMatrixField::polynomial(&[
            (Mat3::diag([1.0, 0.0, 0.0]), [0, 2]),
            (Mat3::diag([0.0, 1.0, 0.0]), [2, 0]),
        ])
        .unwrap(),
        3.0,
        Rect::unit_square(),
    )
    .unwrap()
}

/// A smooth, mildly nonlinear deformation of the rescaled plate.
fn wavy(grid: &PlateGrid, h: f64) -> Deformation3D {
    Deformation3D::from_fn(grid, |p, t| {
        let [x, y] = p;
        let x3 = h * t;
        [
            x + 0.01 * (x * y).sin() - 0.05 * x3 * y,
            y + 0.02 * x * x - 0.04 * x3 * x,
            0.05 * (x * x + y * y) + x3 * (1.0 + 0.01 * x3),
        ]
    })
}

#[test]
fn identity_lift_has_zero_energy_and_gradient() {
    let grid = PlateGrid::new(Rect::unit_square(), 6, 5, 3).unwrap();
    let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    for density in [svk(), EnergyDensity::Dist2] {
        for h in [0.5, 0.125, 1.0 / 128.0] {
            let u = Deformation3D::identity_lift(&grid, h);
            let e = evaluate_energy(&u, &grid, &spec, density, h).unwrap();
            assert!(e.total.abs() <= 1e-14, "{} {h}: {}", density.name(), e.total);
            let g = energy_gradient(&u, &grid, &spec, density, h).unwrap();
            let gmax = g.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
            // thickness derivatives carry a 1/h factor, which amplifies roundoff
            // in the (exactly zero) strain; the bound is therefore stated for h·g
            let bound = if h >= 0.125 { 1e-13 } else { 1e-13 / h * 0.125 };
            assert!(gmax <= bound, "{} {h}: {gmax}", density.name());
        }
    }
}

#[test]
fn rigid_motions_leave_energy_unchanged() {
    let grid = PlateGrid::new(Rect::unit_square(), 8, 7, 3).unwrap();
    let spec = bent_spec();
    let h = 0.1;
    let u = wavy(&grid, h);
    let energy = PlateEnergy::new(&grid, &spec, svk(), h).unwrap();
    let base = energy.value(&u).unwrap();
    assert!(base > 0.0);
    for (axis, angle, c) in [
        ([1.0, 2.0, -0.5], 0.7, [1.0, -2.0, 3.0]),
        ([0.0, 0.0, 1.0], 2.9, [0.0, 0.5, 0.0]),
        ([-1.0, 0.3, 0.3], -1.4, [10.0, 0.0, -7.0]),
    ] {
        let r = rotation_from_axis_angle(axis, angle);
        let moved = energy.value(&u.rigid_motion(&r, c)).unwrap();
        assert!((moved - base).abs() <= 1e-12 * base, "{moved} vs {base}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let grid = PlateGrid::new(Rect::new([0.0, 1.0], [-0.5, 0.5]).unwrap(), 6, 6, 3).unwrap();
    let spec = bent_spec();
    let h = 0.2;
    let u = wavy(&grid, h);
    let energy = PlateEnergy::new(&grid, &spec, svk(), h).unwrap();
    let g = energy.gradient(&u).unwrap();
    let dir: Vec<[f64; 3]> = (0..grid.node_count())
        .map(|n| {
            let s = n as f64;
            [(s * 0.37).sin(), (s * 1.3).cos(), (s * 0.11 + 0.5).sin()]
        })
        .collect();
    let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).sum();
    let shifted = |t: f64| {
        let mut v = u.clone();
        for (x, d) in v.values.iter_mut().zip(&dir) {
            for c in 0..3 {
                x[c] += t * d[c];
            }
        }
        energy.value(&v).unwrap()
    };
    let mut errors = Vec::new();
    for t in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-9, 1e-11] {
        let fd = (shifted(t) - shifted(-t)) / (2.0 * t);
        errors.push((fd - analytic).abs() / analytic.abs());
    }
    let best = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{errors:?}");
    // truncation error dominates for large steps, roundoff for tiny ones
    assert!(errors[0] > 10.0 * best && errors[7] > 10.0 * best, "{errors:?}");
}

#[test]
fn gradient_is_translation_orthogonal() {
    let grid = PlateGrid::new(Rect::unit_square(), 7, 6, 4).unwrap();
    let spec = bent_spec();
    let h = 0.05;
    let g = energy_gradient(&wavy(&grid, h), &grid, &spec, svk(), h).unwrap();
    let scale = g.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs()));
    for c in 0..3 {
        let s: f64 = g.iter().map(|v| v[c]).sum();
        assert!(s.abs() <= 1e-12 * scale.max(1.0), "{s}");
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let grid = PlateGrid::new(Rect::unit_square(), 9, 8, 3).unwrap();
    let spec = bent_spec();
    let h = 0.1;
    let u = wavy(&grid, h);
    let par = PlateEnergy::new(&grid, &spec, svk(), h).unwrap();
    let seq = par.clone().with_execution(crate::exec::Execution::Sequential);
    assert_eq!(par.value(&u).unwrap().to_bits(), seq.value(&u).unwrap().to_bits());
    assert_eq!(par.gradient(&u).unwrap(), seq.gradient(&u).unwrap());
}

#[test]
fn dist2_rejects_inverted_elements() {
    let grid = PlateGrid::new(Rect::unit_square(), 5, 5, 2).unwrap();
    let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    let h = 0.1;
    let mirrored = Deformation3D::from_fn(&grid, |p, t| [p[0], p[1], -h * t]);
    let err = evaluate_energy(&mirrored, &grid, &spec, EnergyDensity::Dist2, h).unwrap_err();
    assert_eq!(err.category(), "degenerate-element");
    let report = evaluate_energy(&mirrored, &grid, &spec, svk(), h).unwrap();
    assert_eq!(report.inverted, grid.node_count());
    assert!(report.min_det < 0.0);
}

#[test]
fn zero_energy_characterization_for_dist2() {
    let grid = PlateGrid::new(Rect::unit_square(), 8, 8, 3).unwrap();
    let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    let h = 0.1;
    let area = spec.omega.area();
    let c = EnergyDensity::Dist2.nondegeneracy_constant();
    let r = rotation_from_axis_angle([0.2, 1.0, 0.4], 0.9);
    let rigid = Deformation3D::identity_lift(&grid, h).rigid_motion(&r, [1.0, 2.0, 3.0]);
    let e = evaluate_energy(&rigid, &grid, &spec, EnergyDensity::Dist2, h).unwrap();
    assert!(e.total <= 1e-24 && e.max_dist2 <= 1e-24);
    let bent = wavy(&grid, h);
    let e = evaluate_energy(&bent, &grid, &spec, EnergyDensity::Dist2, h).unwrap();
    // a positive total forces some point off SO(3), and the total is bounded by the worst point
    assert!(e.total > 0.0 && e.max_dist2 > 0.0);
    assert!(e.total <= c * area * e.max_dist2 * (1.0 + 1e-12));
}

#[test]
fn shape_mismatch_is_rejected() {
    let grid = PlateGrid::new(Rect::unit_square(), 5, 5, 2).unwrap();
    let other = PlateGrid::new(Rect::unit_square(), 6, 5, 2).unwrap();
    let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    let u = Deformation3D::identity_lift(&other, 0.1);
    assert!(evaluate_energy(&u, &grid, &spec, svk(), 0.1).is_err());
    assert!(PlateEnergy::new(&grid, &spec, svk(), 0.0).is_err());
}

#[test]
fn rotation_diagnostic_is_equivariant() {
    let grid = PlateGrid::new(Rect::unit_square(), 7, 7, 3).unwrap();
    let spec = bent_spec();
    let h = 0.1;
    let energy = PlateEnergy::new(&grid, &spec, svk(), h).unwrap();

    let id = rotation_field_diagnostic(&energy, &Deformation3D::identity_lift(&grid, h)).unwrap();
    assert!(id.rotations.iter().all(|r| (*r - Mat3::IDENTITY).max_abs() < 1e-3));

    let flat = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    let flat_energy = PlateEnergy::new(&grid, &flat, svk(), h).unwrap();
    let d = rotation_field_diagnostic(&flat_energy, &Deformation3D::identity_lift(&grid, h)).unwrap();
    assert!(d.misfit <= 1e-28 && d.max_angle <= 1e-12);
    assert!(d.rotations.iter().all(|r| (*r - Mat3::IDENTITY).max_abs() < 1e-14));

    let u = wavy(&grid, h);
    let q = rotation_from_axis_angle([1.0, -1.0, 0.5], 0.8);
    let a = rotation_field_diagnostic(&energy, &u).unwrap();
    let b = rotation_field_diagnostic(&energy, &u.rigid_motion(&q, [0.3, 0.0, -1.0])).unwrap();
    for (ra, rb) in a.rotations.iter().zip(&b.rotations) {
        assert!((q * *ra - *rb).max_abs() < 1e-10);
    }
    assert!((a.misfit - b.misfit).abs() < 1e-10 * a.misfit.max(1e-300));
}

#[test]
fn scaled_displacement_of_identity_is_zero() {
    let grid = PlateGrid::new(Rect::unit_square(), 5, 6, 3).unwrap();
    let v = scaled_displacement(&Deformation3D::identity_lift(&grid, 0.1), &grid, 3.0, 0.1).unwrap();
    assert!(v.values.iter().flatten().all(|c| c.abs() < 1e-12));
}

#[test]
fn affine_alignment_ignores_affine_offsets() {
    let plane = crate::grid::PlanarGrid::new(Rect::unit_square(), 9, 9).unwrap();
    let base: Vec<f64> = (0..plane.len()).map(|k| {
        let [x, y] = plane.point(k / 9, k % 9);
        x * x * y - 0.3 * y * y
    }).collect();
    let shifted: Vec<f64> = (0..plane.len()).map(|k| {
        let [x, y] = plane.point(k / 9, k % 9);
        base[k] + 2.0 - 0.5 * x + 3.0 * y
    }).collect();
    assert!(relative_l2_affine_aligned(&shifted, &base, &plane) < 1e-12);
}

#[test]
fn minimizer_descends_and_reaches_zero_for_flat_metric() {
    let grid = PlateGrid::new(Rect::unit_square(), 6, 6, 3).unwrap();
    let spec = PrestrainSpec::flat(3.0, Rect::unit_square()).unwrap();
    let h = 0.2;
    let u0 = Deformation3D::from_fn(&grid, |p, t| {
        [p[0] + 0.01 * p[1] * p[1], p[1], h * t + 0.01 * p[0] * p[1]]
    });
    let opts = crate::optimize::LbfgsOptions { max_iter: 3000, first_step: 1e-3, ..Default::default() };
    let out = minimize_energy(&u0, &grid, &spec, svk(), h, &opts).unwrap();
    assert!(out.breakdown.total <= out.initial.total);
    assert!(out.breakdown.total < 1e-12, "{}", out.breakdown.total);
    assert!(out.log.windows(2).all(|w| w[1].energy <= w[0].energy));
}
