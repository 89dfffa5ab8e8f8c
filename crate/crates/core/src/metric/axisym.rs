use std::sync::Arc;

use super::{Domain, MetricModel, MetricTensor, SpacetimeMetric};
use crate::error::{Error, Result};

const PHI_TOL: f64 = 1e-10;
const PHI_SAMPLES: usize = 8;
const PLANE_SAMPLES: usize = 12;

/// Rows of the Jacobian `d(t, r, theta, phi) / d(t, x1, x2, x3)` at the
/// spherical point `(r, theta, phi)`.
fn spherical_jacobian(r: f64, theta: f64, phi: f64) -> [[f64; 4]; 4] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, st * cp, st * sp, ct],
        [0.0, ct * cp / r, ct * sp / r, -st / r],
        [0.0, -sp / (r * st), cp / (r * st), 0.0],
    ]
}

/// Components of a 3D metric in spherical coordinates `(t, r, theta, phi)`.
fn spherical_components(model: &dyn MetricModel, r: f64, theta: f64, phi: f64) -> Result<[[f64; 4]; 4]> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let x = [r * st * cp, r * st * sp, r * ct];
    let g = model.components(&x)?;
    let j = spherical_jacobian(r, theta, phi);
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut s = 0.0;
            for m in 0..4 {
                for n in 0..4 {
                    s += j[a][m] * g.get(m, n) * j[b][n];
                }
            }
            out[a][b] = s;
        }
    }
    Ok(out)
}

#[derive(Debug)]
struct Reduced {
    base: Arc<dyn MetricModel>,
}

impl MetricModel for Reduced {
    fn n_space(&self) -> usize {
        2
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        let s = spherical_components(self.base.as_ref(), x[0], x[1], 0.0)?;
        let mut g = MetricTensor::zeros(2);
        for a in 0..3 {
            for b in a..3 {
                g.set(a, b, s[a][b]);
            }
        }
        Ok(g)
    }

    fn family(&self) -> &str {
        "axisymmetric_reduction"
    }
}

/// Reduces an axisymmetric 3D metric to the meridian plane.
///
/// The returned metric lives in coordinates `(r, theta)` (polar angle) and
/// gives `a^{jk}` acting on `(dS/dr, dS/dtheta)` for surfaces independent of
/// the azimuth, together with the time components. Axisymmetry is checked by
/// comparing spherical components at several azimuths over the region
/// `[r_lo, r_hi] x [theta_lo, theta_hi]`.
pub fn axisym_reduce(
    metric: &SpacetimeMetric,
    r_range: (f64, f64),
    theta_range: (f64, f64),
) -> Result<SpacetimeMetric> {
    if metric.n_space() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: metric.n_space(),
        });
    }
    let (r_lo, r_hi) = r_range;
    let (t_lo, t_hi) = theta_range;
    if !(r_lo > 0.0 && r_hi > r_lo && t_lo > 0.0 && t_hi > t_lo && t_hi < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!(
            "reduction region must satisfy 0 < r_lo < r_hi and 0 < theta_lo < theta_hi < pi, got r in [{r_lo}, {r_hi}], theta in [{t_lo}, {t_hi}]"
        )));
    }
    let model = metric.model().as_ref();
    let mut deviation: f64 = 0.0;
    for i in 0..PLANE_SAMPLES {
        let r = r_lo + (r_hi - r_lo) * (i as f64 + 0.5) / PLANE_SAMPLES as f64;
        for k in 0..PLANE_SAMPLES {
            let th = t_lo + (t_hi - t_lo) * (k as f64 + 0.5) / PLANE_SAMPLES as f64;
            let reference = spherical_components(model, r, th, 0.0)?;
            let scale = reference.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for m in 1..PHI_SAMPLES {
                let phi = 2.0 * std::f64::consts::PI * m as f64 / PHI_SAMPLES as f64 + 0.1;
                let s = spherical_components(model, r, th, phi)?;
                for a in 0..4 {
                    for b in 0..4 {
                        deviation = deviation.max((s[a][b] - reference[a][b]).abs() / scale);
                    }
                }
            }
        }
    }
    if deviation > PHI_TOL {
        return Err(Error::NotAxisymmetric { deviation });
    }
    Ok(SpacetimeMetric::new(
        Arc::new(Reduced {
            base: metric.model().clone(),
        }),
        Domain::Box {
            lo: vec![r_lo, t_lo],
            hi: vec![r_hi, t_hi],
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{gordon_metric, minkowski, AffineField, FlowSpec, FnField, ScalarField};

    const REGION: ((f64, f64), (f64, f64)) = ((0.5, 2.0), (0.3, 2.8));

    #[test]
    fn minkowski_reduction() {
        let red = axisym_reduce(&minkowski(3), REGION.0, REGION.1).unwrap();
        for &(r, th) in &[(0.7, 0.5), (1.5, 2.0)] {
            let g = red.eval(&[r, th]).unwrap();
            assert!((g.get(1, 1) + 1.0).abs() < 1e-14);
            assert!(g.get(1, 2).abs() < 1e-14);
            assert!((g.get(2, 2) + 1.0 / (r * r)).abs() < 1e-14);
            assert!((g.get(0, 0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_gordon_flow_has_no_cross_term() {
        let flow = FlowSpec::new(Arc::new(AffineField::radial_linear(3, 0.2))).with_index(ScalarField::Constant(1.5));
        let m = gordon_metric(flow).unwrap();
        let red = axisym_reduce(&m, REGION.0, REGION.1).unwrap();
        for &(r, th) in &[(0.7, 0.5), (1.5, 2.0), (1.1, 1.2)] {
            let g = red.eval(&[r, th]).unwrap();
            assert!(g.get(1, 2).abs() < 1e-13);
            assert!(g.is_symmetric(0.0));
        }
    }

    #[test]
    fn swirling_flow_is_axisymmetric() {
        let swirl = FnField {
            n: 3,
            f: Arc::new(|x: &[f64]| [-0.2 * x[1], 0.2 * x[0], 0.1]),
        };
        let m = gordon_metric(FlowSpec::new(Arc::new(swirl)).with_index(ScalarField::Constant(1.3))).unwrap();
        assert!(axisym_reduce(&m, REGION.0, REGION.1).is_ok());
    }

    #[test]
    fn uniform_cross_flow_is_rejected() {
        let flow =
            FlowSpec::new(Arc::new(AffineField::uniform(3, &[0.3, 0.0, 0.0]))).with_index(ScalarField::Constant(1.5));
        let m = gordon_metric(flow).unwrap();
        assert!(matches!(
            axisym_reduce(&m, REGION.0, REGION.1),
            Err(Error::NotAxisymmetric { .. })
        ));
    }

    #[test]
    fn planar_metric_is_rejected() {
        assert!(matches!(
            axisym_reduce(&minkowski(2), REGION.0, REGION.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
