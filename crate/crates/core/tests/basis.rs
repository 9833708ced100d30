use std::f64::consts::PI;

use achns::basis::{Basis, ScalarSpectral, TorusGrid, VectorSpectral};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn basis(n: usize, l: f64) -> Basis {
    Basis::new(TorusGrid::new(l, 1.3 * l, n, n).unwrap())
}

fn band_limited(b: &Basis, values: &[f64]) -> Vec<Complex64> {
    let mut c = b.forward(values).unwrap();
    b.truncate(&mut c, b.dealiased());
    c
}

fn grid_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(v in grid_values(16)) {
        let b = basis(16, 2.0 * PI);
        let back = b.to_grid(&b.to_spectral(&v).unwrap());
        let err = v.iter().zip(&back).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12, "round-trip error {err}");
    }

    #[test]
    fn parseval(f in grid_values(16), g in grid_values(16)) {
        let b = basis(16, 3.0);
        let grid = b.inner(&f, &g);
        let spec = b.spectral_inner(&b.forward(&f).unwrap(), &b.forward(&g).unwrap());
        prop_assert!((grid - spec).abs() <= 1e-10 * (1.0 + grid.abs()), "{grid} vs {spec}");
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(vx in grid_values(16), vy in grid_values(16)) {
        let b = basis(16, 2.0 * PI);
        let p = b.vector_to_spectral([&vx, &vy]).unwrap();
        prop_assert!(b.divergence_defect(&p) <= 1e-12);
        let pp = b.leray_project(&p);
        let diff = (0..2)
            .flat_map(|a| p.c[a].iter().zip(&pp.c[a]).map(|(x, y)| (x - y).norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn dealiased_products_are_exact_galerkin_products(f in grid_values(16), g in grid_values(16)) {
        let b = basis(16, 2.0 * PI);
        let (fh, gh) = (band_limited(&b, &f), band_limited(&b, &g));
        let (fg, gg) = (b.inverse(&fh).unwrap(), b.inverse(&gh).unwrap());
        let prod: Vec<f64> = fg.iter().zip(&gg).map(|(x, y)| x * y).collect();
        let pseudo = band_limited(&b, &prod);
        let band = b.dealiased().order().to_vec();
        let mut worst: f64 = 0.0;
        for &k in &band {
            let (k1, k2) = b.integer_mode(k);
            let mut exact = Complex64::new(0.0, 0.0);
            for &p in &band {
                let (p1, p2) = b.integer_mode(p);
                if let Some(q) = b.index_of(k1 - p1, k2 - p2) {
                    if b.dealiased().contains(q) {
                        exact += fh[p] * gh[q];
                    }
                }
            }
            worst = worst.max((exact - pseudo[k]).norm());
        }
        prop_assert!(worst <= 1e-14, "aliasing error {worst}");
    }

    #[test]
    fn band_derivatives_are_exact(a in -1.0f64..1.0, c in -1.0f64..1.0, m1 in -5i64..=5, m2 in -5i64..=5) {
        let b = basis(16, 2.0 * PI);
        let g = *b.grid();
        let (k1, k2) = (2.0 * PI * m1 as f64 / g.lx, 2.0 * PI * m2 as f64 / g.ly);
        let f = g.sample(|x, y| a * (k1 * x + k2 * y).cos() + c * (k1 * x + k2 * y).sin());
        let fx = b.grid_derivative(&f, 0).unwrap();
        let fy = b.grid_derivative(&f, 1).unwrap();
        let ex = g.sample(|x, y| -a * k1 * (k1 * x + k2 * y).sin() + c * k1 * (k1 * x + k2 * y).cos());
        let ey = g.sample(|x, y| -a * k2 * (k1 * x + k2 * y).sin() + c * k2 * (k1 * x + k2 * y).cos());
        for (u, v) in fx.iter().zip(&ex).chain(fy.iter().zip(&ey)) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn divergence_of_gradient_is_the_laplacian_symbol() {
    let b = basis(16, 5.0);
    let g = *b.grid();
    let f = b.to_spectral(&g.sample(|x, y| (x * 1.2566370614359172).sin() * (y * 0.9666438934122440).cos())).unwrap();
    let lap = b.div(&b.grad(&f));
    for i in 0..b.len() {
        let [k1, k2] = b.diff_wavevector(i);
        let expected = -(k1 * k1 + k2 * k2) * f.c[i];
        assert!((lap.c[i] - expected).norm() <= 1e-12);
    }
}

#[test]
fn shell_mode_sets_are_symmetric_prefixes() {
    let b = basis(32, 2.0 * PI);
    let full = b.dealiased().order().to_vec();
    for n in [1, 2, 5, 9, 13, 40, 100] {
        let set = b.shell_modes(n);
        assert!(set.len() >= n);
        assert_eq!(set.order(), &full[..set.len()]);
        for &i in set.order() {
            let (m1, m2) = b.integer_mode(i);
            assert!(set.contains(b.index_of(-m1, -m2).unwrap()), "({m1},{m2}) without its conjugate");
        }
    }
}

#[test]
fn shell_projections_of_real_fields_stay_real() {
    let b = basis(16, 2.0 * PI);
    let g = *b.grid();
    let f = g.sample(|x, y| (x + 2.0 * y).sin() + 0.3 * (3.0 * x).cos());
    let strict = b.project_scalar(&b.to_spectral(&f).unwrap(), 7);
    assert!(strict.c.iter().filter(|z| z.norm() > 0.0).count() <= 7);
    let p = b.project(&f, &b.shell_modes(7)).unwrap();
    for i in 0..b.len() {
        let (m1, m2) = b.integer_mode(i);
        if let Some(j) = b.index_of(-m1, -m2) {
            assert!((p.c[i] - p.c[j].conj()).norm() <= 1e-15);
        }
    }
    let zero = ScalarSpectral::zeros(b.len());
    assert_eq!(b.h1_norm_sq(&zero), 0.0);
    assert_eq!(b.vector_norm_sq(&VectorSpectral::zeros(b.len())), 0.0);
}

#[test]
fn point_evaluation_agrees_with_band_interpolant_off_grid() {
    let b = basis(16, 2.0 * PI);
    let g = *b.grid();
    let f = |x: f64, y: f64| (x).cos() * (2.0 * PI * 2.0 * y / g.ly).sin() + 0.5;
    let c = b.to_spectral(&g.sample(f)).unwrap();
    let ev = b.evaluator(&[&c.c], None);
    for p in [[0.123, 4.56], [5.9, 0.01], [3.3, 7.7]] {
        assert!((ev.eval(p)[0] - f(p[0], p[1])).abs() <= 1e-12);
    }
}
