use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 8;

/// Closed planar curve stored as ordered samples; the last sample connects
/// back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    points: Vec<[f64; 2]>,
}

impl ClosedCurve {
    /// Builds a curve from ordered samples. A repeated closing sample is
    /// dropped. The curve counts as open when the closing gap exceeds ten
    /// times the largest gap between consecutive samples.
    pub fn new(mut points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() >= 2 {
            let (a, b) = (points[0], points[points.len() - 1]);
            if dist(&a, &b) <= 1e-14 * (1.0 + a[0].abs() + a[1].abs()) {
                points.pop();
            }
        }
        if points.len() < MIN_SAMPLES {
            return Err(Error::MalformedCurve(format!(
                "{} samples, need at least {MIN_SAMPLES}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::MalformedCurve("non-finite sample".into()));
        }
        let max_gap = points.windows(2).map(|w| dist(&w[0], &w[1])).fold(0.0f64, f64::max);
        let closing = dist(&points[0], &points[points.len() - 1]);
        if max_gap == 0.0 || closing > 10.0 * max_gap {
            return Err(Error::MalformedCurve(format!(
                "curve is open: closing gap {closing:e}, largest step {max_gap:e}"
            )));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced samples of the circle of radius `r` about the
    /// origin, counterclockwise from angle `phase`.
    pub fn circle(r: f64, n: usize, phase: f64) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn at(&self, i: isize) -> [f64; 2] {
        let n = self.points.len() as isize;
        self.points[i.rem_euclid(n) as usize]
    }

    /// Shoelace area, positive for counterclockwise ordering.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }

    /// Unit tangents from fourth-order periodic central differences in the
    /// sample index.
    pub fn tangents(&self) -> Vec<[f64; 2]> {
        (0..self.points.len() as isize)
            .map(|i| {
                let (p2, p1, m1, m2) = (self.at(i + 2), self.at(i + 1), self.at(i - 1), self.at(i - 2));
                let t = [
                    (-p2[0] + 8.0 * p1[0] - 8.0 * m1[0] + m2[0]) / 12.0,
                    (-p2[1] + 8.0 * p1[1] - 8.0 * m1[1] + m2[1]) / 12.0,
                ];
                let n = t[0].hypot(t[1]);
                [t[0] / n, t[1] / n]
            })
            .collect()
    }

    /// Unit normals pointing away from the enclosed region.
    pub fn outward_normals(&self) -> Vec<[f64; 2]> {
        let orient = if self.signed_area() >= 0.0 { 1.0 } else { -1.0 };
        self.tangents()
            .into_iter()
            .map(|t| [orient * t[1], -orient * t[0]])
            .collect()
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[0].hypot(p[1]))
    }

    pub fn mean_radius(&self) -> f64 {
        self.radii().sum::<f64>() / self.points.len() as f64
    }

    /// Largest `| |x| - r |` over the samples.
    pub fn max_radial_deviation(&self, r: f64) -> f64 {
        self.radii().map(|q| (q - r).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x1,x2")?;
        for p in &self.points {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut pts = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("x1")) {
                continue;
            }
            let mut it = line.split(',').map(|s| s.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => pts.push([a, b]),
                _ => {
                    return Err(Error::MalformedCurve(format!(
                        "line {}: expected two numbers",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(pts)
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
