use std::f64::consts::PI;

use synfocus::oracles::{disk_sinogram, eval_phantom, fixture_table, write_fixture};
use synfocus::{spherical_mean_quadrature, AnalyticPhantom};

/// Closed form of the sphere integral of an isotropic Gaussian whose center is `d` from the sphere's.
fn gaussian_sphere_integral(s: f64, d: f64, t: f64) -> f64 {
    2.0 * PI * t * s * s / d * ((-(t - d).powi(2) / (2.0 * s * s)).exp() - (-(t + d).powi(2) / (2.0 * s * s)).exp())
}

#[test]
fn gaussian_sphere_integrals_match_the_closed_form() {
    let p = AnalyticPhantom::gaussian(3, [0.1, -0.05, 0.2], 0.2, 1.0).unwrap();
    let z = [1.1, 0.3, -0.4];
    let d = ((1.0f64).powi(2) + 0.35f64.powi(2) + 0.6f64.powi(2)).sqrt();
    for t in [d - 0.5, d - 0.2, d, d + 0.1, d + 0.4] {
        let exact = gaussian_sphere_integral(0.2, d, t);
        let got = spherical_mean_quadrature(&p, &z, t, 2048).unwrap();
        assert!((got - exact).abs() <= 1e-8 * exact, "t = {t}: {got} vs {exact}");
    }
}

#[test]
fn gaussian_line_integrals_match_numerical_quadrature() {
    let p = AnalyticPhantom::gaussian(2, [0.1, -0.2, 0.0], 0.15, 2.0).unwrap();
    for (angle, offset) in [(0.0, 0.0), (0.7, 0.1), (2.0, -0.3)] {
        let (s, c) = f64::sin_cos(angle);
        // midpoint rule along the line, far past the Gaussian's support
        let n = 20000;
        let h = 4.0 / n as f64;
        let sum: f64 = (0..n)
            .map(|k| {
                let u = -2.0 + (k as f64 + 0.5) * h;
                eval_phantom(&p, &[offset * c - u * s, offset * s + u * c, 0.0])
            })
            .sum::<f64>()
            * h;
        let exact = disk_sinogram(&p, angle, offset).unwrap();
        assert!((sum - exact).abs() <= 1e-10 * exact.abs().max(1e-3), "{sum} vs {exact}");
    }
    let centered = AnalyticPhantom::gaussian(2, [0.0; 3], 0.2, 1.0).unwrap();
    assert!((disk_sinogram(&centered, 1.3, 0.0).unwrap() - 0.2 * (2.0 * PI).sqrt()).abs() < 1e-14);
}

#[test]
fn disk_chords() {
    let p = AnalyticPhantom::ball(2, [0.1, 0.0, 0.0], 0.3, 2.0).unwrap();
    assert!((disk_sinogram(&p, 0.0, 0.1).unwrap() - 1.2).abs() < 1e-15);
    assert_eq!(disk_sinogram(&p, 0.0, 0.4).unwrap(), 0.0);
    assert_eq!(disk_sinogram(&p, 0.0, -0.2).unwrap(), 0.0);
    let sphere = AnalyticPhantom::ball(3, [0.0; 3], 0.3, 1.0).unwrap();
    assert!(disk_sinogram(&sphere, 0.0, 0.0).is_err());
}

#[test]
fn fixture_dump_has_one_row_per_pair() {
    let p = AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0).unwrap();
    let centers = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
    let radii = [1.9, 2.0, 2.1];
    let rows = fixture_table(&p, &centers, &radii, 256).unwrap();
    let mut buf = Vec::new();
    write_fixture(&mut buf, &p, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# phantom: Gaussian"));
    assert_eq!(lines[1], "z0,z1,z2,t,value");
    assert_eq!(lines.len(), 2 + 6);
    for (line, row) in lines[2..].iter().zip(&rows) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v.to_bits(), row.value.to_bits());
    }
    // the two transducers are related by a rotation about the Gaussian's center
    for k in 0..3 {
        assert!((rows[k].value - rows[3 + k].value).abs() <= 1e-10 * rows[k].value);
    }
}

#[test]
fn too_few_nodes_or_bad_radius_are_rejected() {
    let p = AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0).unwrap();
    assert!(spherical_mean_quadrature(&p, &[1.0, 0.0, 0.0], 0.5, 63).is_err());
    assert!(spherical_mean_quadrature(&p, &[1.0, 0.0, 0.0], 0.0, 64).is_err());
}
