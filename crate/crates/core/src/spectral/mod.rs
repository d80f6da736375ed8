//! Periodic grids, Fourier transforms and the field containers shared by
//! every solver component.
//!
//! The Fourier transform is normalized as `u_hat(xi) = int u(y) e^{-i xi y} dy`
//! and approximated by `dy * DFT` (with the phase of the grid origin); the
//! inverse carries `(2 pi)^{-1}` per axis.

pub mod fft;
mod field;
mod grid;

pub use field::{
    density, density_from_fourier_slice, forward_1d, inverse_1d, Axis, DensityField, Direction,
    PhaseField, Representation,
};
pub(crate) use field::transform_v;
pub use grid::{Grid1, PhaseGrid};

use num_complex::Complex64;

/// Raw DFT coefficients of real samples.
pub(crate) fn real_spectrum(values: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = values.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft::fft(&mut c, false);
    c
}

/// Raw DFT coefficients of complex samples.
pub(crate) fn complex_spectrum(values: &[Complex64]) -> Vec<Complex64> {
    let mut c = values.to_vec();
    fft::fft(&mut c, false);
    c
}

/// Trigonometric interpolant of periodic samples evaluated at `grid points + shift`,
/// from raw DFT coefficients `coeffs`, each multiplied by `multiplier(k)`.
pub(crate) fn shifted_from_spectrum(
    coeffs: &[Complex64],
    grid: &Grid1,
    shift: f64,
    multiplier: impl Fn(f64) -> Complex64,
) -> Vec<Complex64> {
    let ks = grid.symbol_frequencies();
    let mut out: Vec<Complex64> = coeffs
        .iter()
        .zip(&ks)
        .map(|(c, &k)| c * multiplier(k) * Complex64::from_polar(1.0, k * shift))
        .collect();
    fft::ifft_normalized(&mut out);
    out
}

/// Spectral derivative of periodic real samples.
pub fn spectral_derivative(values: &[f64], grid: &Grid1) -> Vec<f64> {
    let c = real_spectrum(values);
    shifted_from_spectrum(&c, grid, 0.0, |k| Complex64::new(0.0, k))
        .into_iter()
        .map(|z| z.re)
        .collect()
}

/// Evaluate the trigonometric interpolant of periodic samples at arbitrary points.
pub fn interpolate_periodic(values: &[Complex64], grid: &Grid1, at: &[f64]) -> Vec<Complex64> {
    let n = grid.len();
    let mut c = values.to_vec();
    fft::fft(&mut c, false);
    let ks = grid.symbol_frequencies();
    let nyq = grid.nyquist_index();
    let kn = grid.frequency(nyq).abs();
    at.iter()
        .map(|&x| {
            let y = x - grid.origin();
            let mut s = Complex64::new(0.0, 0.0);
            for m in 0..n {
                if m == nyq {
                    s += c[m] * (kn * y).cos();
                } else {
                    s += c[m] * Complex64::from_polar(1.0, ks[m] * y);
                }
            }
            s / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn phase_grid(nx: usize, nv: usize) -> PhaseGrid {
        PhaseGrid::build(nx, 2.0 * PI, 0.0, nv, 12.0).unwrap()
    }

    #[test]
    fn pure_mode_lands_in_one_bin() {
        let l = 3.0;
        let g = Grid1::new(64, l, 0.0).unwrap();
        let u: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&y| Complex64::from_polar(1.0, 2.0 * PI * y / l))
            .collect();
        let uh = forward_1d(&g, &u);
        for (m, c) in uh.iter().enumerate() {
            if m == 1 {
                assert!((c - Complex64::new(l, 0.0)).norm() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12, "bin {m}: {c}");
            }
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let g = Grid1::centered(256, 40.0).unwrap();
        let u: Vec<Complex64> = g
            .points()
            .iter()
            .map(|&y| Complex64::new((-0.5 * y * y).exp(), 0.0))
            .collect();
        let uh = forward_1d(&g, &u);
        let mut err: f64 = 0.0;
        for (m, c) in uh.iter().enumerate() {
            let xi = g.frequency(m);
            let want = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
            err = err.max((c - want).norm());
        }
        assert!(err <= 1e-8, "max error {err:e}");
    }

    #[test]
    fn phase_field_roundtrip() {
        let grid = phase_grid(32, 16);
        let f = PhaseField::from_complex_fn(grid, |x, v| {
            Complex64::new(x.sin() * (-v * v).exp(), (2.0 * x).cos() * v * (-v * v).exp())
        });
        for axis in [Axis::X, Axis::V, Axis::Both] {
            let back = f
                .transform(axis, Direction::Forward)
                .unwrap()
                .transform(axis, Direction::Inverse)
                .unwrap();
            let err = f.max_abs_difference(&back).unwrap();
            assert!(err <= 1e-12 * f.max_abs(), "{axis:?}: {err:e}");
            assert_eq!(back.repr(), Representation::Physical);
        }
    }

    #[test]
    fn transforming_twice_is_a_representation_error() {
        let f = PhaseField::zeros(phase_grid(8, 8));
        let fx = f.transform(Axis::X, Direction::Forward).unwrap();
        assert!(matches!(
            fx.transform(Axis::X, Direction::Forward),
            Err(crate::Error::Representation { .. })
        ));
        assert!(matches!(
            f.transform(Axis::V, Direction::Inverse),
            Err(crate::Error::Representation { .. })
        ));
        assert!(fx.transform(Axis::Both, Direction::Forward).is_err());
        assert_eq!(
            fx.transform(Axis::V, Direction::Forward).unwrap().repr(),
            Representation::FourierXV
        );
    }

    #[test]
    fn density_of_separable_field() {
        let grid = phase_grid(16, 64);
        let h = |v: f64| (-v * v / 2.0).exp();
        let f = PhaseField::from_fn(grid, |x, v| (1.0 + 0.3 * x.cos()) * h(v));
        let rho = density(&f).unwrap();
        let hv: f64 = grid.gv.points().iter().map(|&v| h(v)).sum::<f64>() * grid.gv.spacing();
        for (i, &x) in grid.gx.points().iter().enumerate() {
            assert!((rho.data()[i] - (1.0 + 0.3 * x.cos()) * hv).abs() < 1e-13);
        }
        let zero = density(&PhaseField::zeros(grid)).unwrap();
        assert!(zero.data().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn density_of_modulated_maxwellian() {
        let l = 4.0 * PI;
        let grid = PhaseGrid::build(32, l, 0.0, 128, 20.0).unwrap();
        let f = PhaseField::from_fn(grid, |x, v| {
            (1.0 + 0.1 * (2.0 * PI * x / l).cos()) * (-v * v / 2.0).exp() / (2.0 * PI).sqrt()
        });
        let rho = density(&f).unwrap();
        for (i, &x) in grid.gx.points().iter().enumerate() {
            let want = 1.0 + 0.1 * (2.0 * PI * x / l).cos();
            assert!((rho.data()[i] - want).abs() <= 1e-10, "{}", rho.data()[i] - want);
        }
        assert!((rho.mass() - f.mass()).abs() <= 1e-10 * f.mass());
    }

    #[test]
    fn density_requires_physical_representation() {
        let f = PhaseField::zeros(phase_grid(8, 8))
            .transform(Axis::V, Direction::Forward)
            .unwrap();
        assert!(density(&f).is_err());
    }

    #[test]
    fn tail_check_reports_violations() {
        let grid = phase_grid(8, 32);
        let narrow = PhaseField::from_fn(grid, |_, v| (-v * v).exp());
        assert!(narrow.check_tail(1e-8).is_none());
        let wide = PhaseField::from_fn(grid, |_, v| (-0.01 * v * v).exp());
        let r = wide.check_tail(1e-8).unwrap();
        assert!(r > 0.5);
    }

    #[test]
    fn interpolation_reproduces_band_limited_function() {
        let g = Grid1::new(16, 2.0 * PI, 0.0).unwrap();
        let f = |x: f64| (3.0 * x).sin() + 0.5 * (x).cos();
        let vals: Vec<Complex64> = g.points().iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        let at = [0.123, 1.7, 5.9, 7.0];
        for (z, &x) in interpolate_periodic(&vals, &g, &at).iter().zip(&at) {
            assert!((z.re - f(x)).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
        let d = spectral_derivative(&vals.iter().map(|c| c.re).collect::<Vec<_>>(), &g);
        for (di, &x) in d.iter().zip(&g.points()) {
            assert!((di - (3.0 * (3.0 * x).cos() - 0.5 * x.sin())).abs() < 1e-12);
        }
    }

    fn smooth_field(grid: PhaseGrid, coeffs: &[(f64, f64)]) -> PhaseField {
        let lx = grid.gx.length();
        PhaseField::from_complex_fn(grid, |x, v| {
            let mut s = Complex64::new(0.0, 0.0);
            for (k, &(a, b)) in coeffs.iter().enumerate() {
                let kx = 2.0 * PI * (k as f64 + 1.0) / lx;
                s += Complex64::new(a, b) * Complex64::from_polar(1.0, kx * x);
            }
            s * (-(v - 0.3) * (v - 0.3)).exp()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_holds(
            log_nx in 2u32..7, log_nv in 2u32..7,
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..3),
        ) {
            let grid = PhaseGrid::build(1 << log_nx, 5.0, -1.0, 1 << log_nv, 9.0).unwrap();
            let f = smooth_field(grid, &coeffs);
            let n0 = f.l2_norm();
            for axis in [Axis::X, Axis::V, Axis::Both] {
                let n1 = f.transform(axis, Direction::Forward).unwrap().l2_norm();
                prop_assert!((n0 - n1).abs() <= 1e-12 * n0.max(1e-300));
            }
        }

        #[test]
        fn density_two_routes_agree(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4),
        ) {
            let grid = PhaseGrid::build(32, 6.0, 0.0, 64, 10.0).unwrap();
            let mut f = smooth_field(grid, &coeffs);
            f.project_real();
            f.set_real_valued(true);
            let a = density(&f).unwrap();
            let b = density_from_fourier_slice(&f).unwrap();
            let scale = a.max_abs().max(1e-300);
            prop_assert!(a.max_abs_difference(&b) <= 1e-12 * scale);
        }
    }
}
