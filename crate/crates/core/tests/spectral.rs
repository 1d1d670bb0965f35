mod common;

use common::{cos_mode, field, rng, sin_mode, small_grid, wide_field};
use num_complex::Complex64;
use primix::grid::GridSpec;
use primix::snapshot;
use primix::spectral::{
    enumerate_modes, from_physical, project, to_physical, ModeIndex, PhysicalField, Polarization,
    SpectralField,
};
use primix::Error;
use proptest::prelude::*;
use rand::Rng;

/// Direct evaluation of the series for component `c` at one point.
fn eval(f: &SpectralField, c: usize, x: f64, y: f64, z: f64) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for (m, n, k) in f.modes() {
        let v = f.get(c, m, n, k);
        if v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ph = Complex64::from_polar(1.0, g.kx_unit() * (m as f64 * x + n as f64 * y));
        acc += (v * ph).re * (g.kz_unit() * k as f64 * z).cos();
    }
    acc
}

/// Arbitrary Hermitian field, not projected.
fn hermitian(g: &GridSpec, seed: u64) -> SpectralField {
    let mut r = rng(seed);
    let mut f = SpectralField::zeros(g);
    for c in 0..2 {
        for (m, n, k) in SpectralField::zeros(g).modes() {
            let v = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            f.set(c, m, n, k, v);
        }
    }
    f.symmetrize();
    f
}

#[test]
fn zero_field_maps_to_zero_samples() {
    let g = GridSpec::desk();
    assert!(to_physical(&SpectralField::zeros(&g))
        .data
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn single_cosine_samples_and_coefficients() {
    let g = GridSpec::desk();
    let f = cos_mode(&g, 1, 1, 0, 0, 1.0);
    let p = to_physical(&f);
    for i in 0..g.nx {
        for l in 0..g.nz_grid() {
            let (x, _, _) = p.point(i, 3, l);
            assert!(p.get(0, i, 3, l).abs() < 1e-15);
            assert!((p.get(1, i, 3, l) - x.cos()).abs() < 1e-14);
        }
    }
    let s = PhysicalField::from_fn(&g, |c, x, _, _| if c == 1 { x.cos() } else { 0.0 });
    let back = from_physical(&s).unwrap();
    assert!((back.get(1, 1, 0, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    assert!((back.get(1, -1, 0, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    assert!((&back - &f).max_abs() < 1e-15);
}

#[test]
fn round_trip_on_random_fields() {
    for g in [GridSpec::desk(), small_grid()] {
        for s in 0..5 {
            let f = wide_field(&g, s);
            let back = from_physical(&to_physical(&f)).unwrap();
            assert!((&back - &f).max_abs() <= 1e-12 * f.max_abs());
            let p = to_physical(&f);
            let again = to_physical(&back);
            let err = p
                .data
                .iter()
                .zip(&again.data)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(err <= 1e-12 * f.max_abs() * 10.0);
        }
    }
}

#[test]
fn samples_agree_with_direct_evaluation() {
    let g = small_grid();
    let f = wide_field(&g, 9);
    let p = to_physical(&f);
    for &(i, j, l) in &[(0, 0, 0), (3, 5, 2), (7, 1, 7), (4, 4, 4)] {
        let (x, y, z) = p.point(i, j, l);
        for c in 0..2 {
            assert!((p.get(c, i, j, l) - eval(&f, c, x, y, z)).abs() < 1e-13);
        }
    }
}

#[test]
fn odd_samples_are_rejected() {
    let g = GridSpec::desk();
    let s = PhysicalField::from_fn(&g, |_, x, _, z| x.cos() * z.sin());
    assert!(matches!(from_physical(&s), Err(Error::NotEven { .. })));
}

#[test]
fn constant_samples_land_on_the_mean_and_are_projected_away() {
    let g = GridSpec::desk();
    let s = PhysicalField::from_fn(&g, |c, _, _, _| if c == 0 { 2.5 } else { 0.0 });
    let f = from_physical(&s).unwrap();
    assert!((f.get(0, 0, 0, 0).re - 2.5).abs() < 1e-14);
    assert!(f.mean_residual() > 0.0);
    assert!(project(&f).max_abs() < 1e-14);
}

#[test]
fn eigenvalue_examples() {
    let g = GridSpec::desk();
    let e = ModeIndex {
        m: 1,
        n: 0,
        k: 0,
        pol: Polarization::Minus,
    };
    assert_eq!(e.eigenvalue(&g), 1.0);
    let idx = ModeIndex {
        m: 1,
        n: 2,
        k: 3,
        pol: Polarization::Minus,
    };
    assert!((idx.eigenvalue(&g) - 14.0).abs() < 1e-12);
    // -Δ applied numerically by central differences
    let f = idx.basis_field(&g);
    let h = 1e-3;
    let (x, y, z) = (0.41, 1.3, 0.27);
    for c in 0..2 {
        let v = eval(&f, c, x, y, z);
        if v.abs() < 1e-3 {
            continue;
        }
        let lap = (eval(&f, c, x + h, y, z)
            + eval(&f, c, x - h, y, z)
            + eval(&f, c, x, y + h, z)
            + eval(&f, c, x, y - h, z)
            + eval(&f, c, x, y, z + h)
            + eval(&f, c, x, y, z - h)
            - 6.0 * v)
            / (h * h);
        assert!((-lap / v - 14.0).abs() < 1e-4, "{}", -lap / v);
    }
    let shallow = GridSpec {
        depth: std::f64::consts::PI,
        ..g
    };
    let lambda1 = enumerate_modes(&shallow)
        .iter()
        .map(|(_, l)| *l)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(lambda1, 1.0);
    assert_eq!(shallow.lambda1(), 1.0);
}

#[test]
fn single_cosine_norm_matches_quadrature() {
    let g = GridSpec::desk();
    let f = cos_mode(&g, 1, 1, 0, 0, 1.0);
    let want = (g.volume() / 2.0).sqrt();
    assert!((f.l2_norm() - want).abs() < 1e-13 * want);
    let n = 64;
    let h = g.length / n as f64;
    let q: f64 = (0..n).map(|i| (i as f64 * h).cos().powi(2)).sum::<f64>() * h * g.length * g.depth;
    assert!((q.sqrt() - want).abs() < 1e-12 * want);
}

#[test]
fn parseval_against_direct_quadrature() {
    // direct evaluation on a grid twice as fine in every direction
    let g = small_grid();
    for s in 0..3 {
        let f = wide_field(&g, 40 + s);
        let (nx, nz) = (2 * g.nx, 4 * (g.nz - 1));
        let (hx, hz) = (g.length / nx as f64, g.depth / nz as f64);
        let mut q = 0.0;
        for i in 0..nx {
            for j in 0..nx {
                for l in 0..nz {
                    let (x, y, z) = (i as f64 * hx, j as f64 * hx, l as f64 * hz);
                    q += eval(&f, 0, x, y, z).powi(2) + eval(&f, 1, x, y, z).powi(2);
                }
            }
        }
        let q = (q * hx * hx * hz).sqrt();
        assert!(
            (f.l2_norm() - q).abs() <= 1e-10 * q,
            "{} vs {q}",
            f.l2_norm()
        );
    }
}

#[test]
fn poincare_is_tight_on_the_first_mode() {
    let g = GridSpec::desk();
    let (idx, lambda) = enumerate_modes(&g)[0];
    let f = idx.basis_field(&g) * 0.3;
    let lhs = f.l2_norm();
    let rhs = f.sobolev_norm(1) / lambda.sqrt();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs);
}

#[test]
fn projection_examples() {
    let g = GridSpec::desk();
    assert!(project(&cos_mode(&g, 0, 1, 0, 0, 1.0)).max_abs() < 1e-16);
    let shear = cos_mode(&g, 1, 1, 0, 0, 1.0);
    assert_eq!(project(&shear), shear);
}

#[test]
fn primed_norm_examples() {
    let g = GridSpec::desk();
    assert_eq!(SpectralField::zeros(&g).primed_norm(), 0.0);
    let f = field(&g, 3);
    let flat = GridSpec { delta: 0.0, ..g };
    let f0 = SpectralField::from_raw(&flat, f.raw().to_vec()).unwrap();
    assert_eq!(f0.primed_norm(), f0.l2_norm());
    // single (1,1,0) mode, δ = 1, m = 2: (1 + |κ|²)·amplitude·√(Vol/2)
    let one = GridSpec { delta: 1.0, ..g };
    let a = 0.6;
    let mut s = SpectralField::zeros(&one);
    s.set_pair(0, 1, -1, 0, Complex64::new(a / 2.0, 0.0));
    s.set_pair(1, 1, -1, 0, Complex64::new(a / 2.0, 0.0));
    let want = (1.0 + 2.0) * a * 2f64.sqrt() * (one.volume() / 2.0).sqrt();
    assert!((s.primed_norm() - want).abs() < 1e-12 * want);
}

#[test]
fn sine_and_cosine_modes_have_equal_norms() {
    let g = GridSpec::desk();
    let c = cos_mode(&g, 1, 2, 1, 3, 1.0);
    let s = sin_mode(&g, 1, 2, 1, 3, 1.0);
    assert!((c.l2_norm() - s.l2_norm()).abs() < 1e-13);
    assert!(c.inner(&s).abs() < 1e-13);
}

#[test]
fn snapshot_round_trip_with_timestamp() {
    let g = GridSpec::desk();
    let f = wide_field(&g, 77);
    let mut buf = Vec::new();
    snapshot::write(&mut buf, &f, Some(3.5)).unwrap();
    assert_eq!(&buf[..4], b"PEQS");
    assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
    assert_eq!(f64::from_le_bytes(buf[8..16].try_into().unwrap()), g.length);
    let (back, t) = snapshot::read(&mut buf.as_slice()).unwrap();
    assert_eq!(back, f);
    assert_eq!(t, Some(3.5));
    let (back, t) = snapshot::decode(&snapshot::encode(&f, None)).unwrap();
    assert_eq!((back, t), (f, None));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent_and_orthogonal(s in 0u64..1_000_000) {
        let g = small_grid();
        let v = hermitian(&g, s);
        let p = project(&v);
        let norm = v.l2_norm();
        prop_assert!((&project(&p) - &p).l2_norm() <= 1e-12 * norm);
        prop_assert!(p.inner(&(&v - &p)).abs() <= 1e-12 * norm * norm);
        prop_assert!(p.barotropic_divergence() <= 1e-12 * norm);
        prop_assert!(p.satisfies_invariants(1e-12 * norm));
    }

    #[test]
    fn poincare_holds(s in 0u64..1_000_000) {
        let g = GridSpec::desk();
        let f = wide_field(&g, s);
        prop_assert!(f.l2_norm() <= f.sobolev_norm(1) / g.lambda1().sqrt() * (1.0 + 1e-14));
    }

    #[test]
    fn round_trip_identity(s in 0u64..1_000_000) {
        let g = small_grid();
        let f = wide_field(&g, s);
        let back = from_physical(&to_physical(&f)).unwrap();
        prop_assert!((&back - &f).max_abs() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn snapshot_round_trip(s in 0u64..1_000_000, t in proptest::option::of(-1e6f64..1e6)) {
        let g = small_grid();
        let f = wide_field(&g, s);
        let (back, tt) = snapshot::decode(&snapshot::encode(&f, t)).unwrap();
        prop_assert_eq!(back, f);
        prop_assert_eq!(tt, t);
    }
}
