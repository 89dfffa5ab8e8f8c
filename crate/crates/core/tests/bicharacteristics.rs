use horizonlab::geometry::{ergosphere_null_covector, Family, FrameField};
use horizonlab::metric::{vortex_metric, Domain, SpacetimeMetric};
use horizonlab::ode::{bisect, Integrator, OdeOptions};
use horizonlab::rays::{
    hamiltonian, integrate_planar_orbit, integrate_ray, lift_time_direction, planar_orbit, OrbitOptions, PhasePoint,
    PlanarOrbit, RayOptions,
};
use horizonlab::Result;

fn vortex_annulus(a: f64, b: f64) -> SpacetimeMetric {
    vortex_metric(a, b)
        .unwrap()
        .with_domain(Domain::Annulus { r_min: 0.3, r_max: 4.0 })
}

fn vortex_null_start(a: f64, b: f64, x: [f64; 2], xi: [f64; 2]) -> PhasePoint {
    // xi0 from the null condition, choosing the root of larger magnitude
    let m = vortex_metric(a, b).unwrap();
    let g = m.eval(&x).unwrap();
    let qa = g.get(0, 0);
    let qb = 2.0 * (g.get(0, 1) * xi[0] + g.get(0, 2) * xi[1]);
    let qc = g.spatial_quadratic(&xi);
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let xi0 = (-qb - disc) / (2.0 * qa);
    PhasePoint::new(0.0, &x, xi0, &xi)
}

#[test]
fn null_constraint_is_conserved_on_vortex_rays() {
    let m = vortex_metric(1.0, 1.0).unwrap();
    let starts = [
        vortex_null_start(1.0, 1.0, [2.0, 0.5], [0.3, -1.0]),
        vortex_null_start(1.0, 1.0, [-1.5, 1.0], [1.0, 0.2]),
        vortex_null_start(1.0, 1.0, [0.0, 3.0], [0.0, 1.0]),
    ];
    for p0 in &starts {
        assert!(hamiltonian(&m, p0).unwrap().abs() < 1e-13);
        let path = integrate_ray(&m, p0, 2.0, &RayOptions::default()).unwrap();
        assert!(path.samples.len() > 5);
        assert!(path.max_residual() < 1e-8, "residual {}", path.max_residual());
        assert!(path.xi0_drift() < 1e-12);
    }
}

#[test]
fn ergosphere_ray_moves_inward() {
    let m = vortex_metric(1.0, 1.0).unwrap();
    let y = [2f64.sqrt(), 0.0];
    let b = ergosphere_null_covector(&m, &y, 1e-8).unwrap();
    let p0 = PhasePoint::new(0.0, &y, 0.0, &b);
    let path = integrate_ray(&m, &p0, 0.05, &RayOptions::default()).unwrap();
    for s in &path.samples[1..] {
        let delta = m.spatial_det(&s.point.x).unwrap();
        assert!(delta <= 1e-12, "delta {delta}");
    }
    let end = &path.samples.last().unwrap().point.x;
    assert!(end[0].hypot(end[1]) < 2f64.sqrt());
}

/// Radius along `orbit` reached between samples, located with trial steps.
fn orbit_point_at_radius(field: &FrameField, orbit: &PlanarOrbit, r: f64) -> [f64; 2] {
    let family = orbit.family;
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let f = field.direction(&[y[0], y[1]], family)?;
        dy.copy_from_slice(&f);
        Ok(())
    };
    let radius = |p: &[f64]| p[0].hypot(p[1]);
    let k = orbit
        .points
        .windows(2)
        .position(|w| (radius(&w[0]) - r) * (radius(&w[1]) - r) <= 0.0)
        .expect("radius not bracketed by the orbit");
    let it = Integrator::new(&rhs, 0.0, &orbit.points[k], OdeOptions::default()).unwrap();
    let h = orbit.sigma[k + 1] - orbit.sigma[k];
    let hit = bisect(|s| it.trial(s).ok().map(|y| radius(&y) - r), 0.0, h, 1e-14);
    let y = it.trial(hit).unwrap();
    [y[0], y[1]]
}

#[test]
fn ray_projection_matches_planar_orbit() {
    let m = vortex_annulus(1.0, 1.0);
    let field = FrameField::from_probe(&m, &[1.2, 0.0]).unwrap();
    let x = [0.0, 1.25];
    let covs = field.null_covectors(&x).unwrap();
    for (family, xi) in [
        (Family::Plus, covs.xi_plus),
        (Family::Minus, [-covs.xi_minus[0], -covs.xi_minus[1]]),
    ] {
        let p0 = PhasePoint::new(0.0, &x, 0.0, &xi);
        let path = integrate_ray(&m, &p0, 0.2, &RayOptions::default()).unwrap();
        let orbit = planar_orbit(&field, &x, family, 3.0, &OrbitOptions::default()).unwrap();
        let mut worst = 0.0f64;
        for s in &path.samples[1..] {
            let p = &s.point.x;
            let q = orbit_point_at_radius(&field, &orbit, p[0].hypot(p[1]));
            worst = worst.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
        assert!(worst < 1e-6, "{family:?}: distance {worst}");
    }
}

/// Simpson quadrature of `dtheta/dr = (AB + r sqrt(A^2+B^2-r^2)) / (r (A^2 - r^2))`.
fn polar_theta(a: f64, b: f64, r0: f64, r1: f64) -> f64 {
    let f = |r: f64| (a * b + r * (a * a + b * b - r * r).sqrt()) / (r * (a * a - r * r));
    let n = 2000;
    let h = (r1 - r0) / n as f64;
    let mut s = f(r0) + f(r1);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(r0 + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn plus_orbit_follows_polar_form() {
    let (a, b) = (1.0, 1.0);
    let m = vortex_metric(a, b).unwrap();
    let orbit = integrate_planar_orbit(&m, &[1.3, 0.0], Family::Plus, 1.5, &OrbitOptions::default()).unwrap();
    let mut theta = 0.0;
    let mut prev = orbit.points[0];
    let mut worst = 0.0f64;
    for p in &orbit.points[1..] {
        theta += (prev[0] * p[1] - prev[1] * p[0]).atan2(prev[0] * p[0] + prev[1] * p[1]);
        prev = *p;
        let r = p[0].hypot(p[1]);
        worst = worst.max((theta - polar_theta(a, b, 1.3, r)).abs());
    }
    assert!(prev[0].hypot(prev[1]) < 1.1);
    assert!(worst < 1e-6, "polar residual {worst}");
}

#[test]
fn time_direction_dichotomy_on_many_samples() {
    let m = vortex_annulus(1.0, 1.0);
    let field = FrameField::from_probe(&m, &[1.0, 0.0]).unwrap();
    let opts = OrbitOptions {
        ode: OdeOptions {
            h_max: 0.01,
            ..OrbitOptions::default().ode
        },
        ..OrbitOptions::default()
    };
    let mut total = 0;
    for family in Family::BOTH {
        for &r in &[0.6, 1.0, 1.3] {
            let orbit = planar_orbit(&field, &[r, 0.0], family, 6.0, &opts).unwrap();
            let lift = lift_time_direction(&field, &orbit).unwrap();
            total += lift.len();
            assert!(lift.iter().all(|l| l.sign == family.sign()));
        }
    }
    assert!(total >= 1000, "{total} samples");
}
