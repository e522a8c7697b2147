//! Quasi-unitary constellations for the MDC-QOSTBC differential scheme.
//!
//! A symbol set keeps every MDC-QOSTBC codeword quasi-unitary when all points
//! sit on one hyperbola `x y = nu` and have unit average power. Points are
//! placed on `L = M/2` concentric circles with `sum r_i^2 = L`; each circle
//! meets the hyperbola in up to four points `A, B, C = -A, D = -B`, and only
//! an antipodal pair (`A/C` or `B/D`) may share a circle.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Which antipodal pair of hyperbola intersections a circle carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    /// `A` (angle `phi0`, nearest the real axis) and `C = -A`.
    AC,
    /// `B` (angle `pi/2 - phi0`, nearest the imaginary axis) and `D = -B`.
    BD,
}

impl Branch {
    pub fn flipped(self) -> Self {
        match self {
            Branch::AC => Branch::BD,
            Branch::BD => Branch::AC,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntersectionPoint {
    A,
    B,
    C,
    D,
}

/// One constellation point described by its circle and hyperbola branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirclePointParam {
    pub circle: usize,
    pub radius: f64,
    /// Angle of the first-quadrant (for `nu >= 0`) representative `A` or `B`.
    pub theta: f64,
    pub point: IntersectionPoint,
}

impl CirclePointParam {
    pub fn new(circle: usize, radius: f64, nu: f64, point: IntersectionPoint) -> Result<Self> {
        let phi0 = base_angle(radius, nu)?;
        let theta = match point {
            IntersectionPoint::A | IntersectionPoint::C => phi0,
            IntersectionPoint::B | IntersectionPoint::D => std::f64::consts::FRAC_PI_2 - phi0,
        };
        Ok(CirclePointParam {
            circle,
            radius,
            theta,
            point,
        })
    }

    pub fn to_complex(&self) -> C64 {
        let z = C64::from_polar(self.radius, self.theta);
        match self.point {
            IntersectionPoint::A | IntersectionPoint::B => z,
            IntersectionPoint::C | IntersectionPoint::D => -z,
        }
    }
}

/// Angle in `[-pi/4, pi/4]` of intersection `A` of `x y = nu` with the circle
/// of radius `r`.
fn base_angle(r: f64, nu: f64) -> Result<f64> {
    let s = 2.0 * nu / (r * r);
    if !s.is_finite() || s.abs() > 1.0 {
        return Err(Error::Infeasible(format!(
            "hyperbola x*y = {nu} does not meet the circle of radius {r}"
        )));
    }
    Ok(0.5 * s.asin())
}

/// Antipodal pair on circle `r` for the given branch, with exact axis points
/// when `nu = 0`.
fn circle_pair(r: f64, nu: f64, branch: Branch) -> Result<[C64; 2]> {
    let z = if nu == 0.0 {
        match branch {
            Branch::AC => C64::new(r, 0.0),
            Branch::BD => C64::new(0.0, r),
        }
    } else {
        let p = match branch {
            Branch::AC => IntersectionPoint::A,
            Branch::BD => IntersectionPoint::B,
        };
        CirclePointParam::new(0, r, nu, p)?.to_complex()
    };
    Ok([z, -z])
}

/// `M` points `z_k = x_k + j y_k` with their hyperbola constant and radii.
///
/// Points are stored circle by circle: `points[2i]` and `points[2i+1]` are
/// the antipodal pair on circle `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstellationSet {
    points: Vec<C64>,
    nu: f64,
    radii: Vec<f64>,
}

impl ConstellationSet {
    /// Places one antipodal pair per circle.
    pub fn from_circles(nu: f64, radii: &[f64], branches: &[Branch]) -> Result<Self> {
        if radii.len() != branches.len() {
            return Err(Error::Dimension(format!(
                "{} radii but {} branch choices",
                radii.len(),
                branches.len()
            )));
        }
        let mut points = Vec::with_capacity(2 * radii.len());
        for (&r, &b) in radii.iter().zip(branches) {
            points.extend(circle_pair(r, nu, b)?);
        }
        Ok(ConstellationSet {
            points,
            nu,
            radii: radii.to_vec(),
        })
    }

    /// Wraps arbitrary points without enforcing any design criterion; radii
    /// are read off the even-indexed points. Use [`check_criteria`] to audit.
    pub fn from_points(points: Vec<C64>, nu: f64) -> Self {
        let radii = points.iter().step_by(2).map(|z| z.norm()).collect();
        ConstellationSet { points, nu, radii }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Branch of each circle, read from the stored points.
    pub fn branches(&self) -> Vec<Branch> {
        self.points
            .iter()
            .step_by(2)
            .map(|z| if z.re.abs() >= z.im.abs() { Branch::AC } else { Branch::BD })
            .collect()
    }

    pub fn scaled(&self, g: f64) -> Self {
        ConstellationSet {
            points: self.points.iter().map(|z| z * g).collect(),
            nu: self.nu * g * g,
            radii: self.radii.iter().map(|r| r * g).collect(),
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Header `M nu`, then one `x y` line per point at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {:.16e}\n", self.points.len(), self.nu);
        for z in &self.points {
            let _ = writeln!(out, "{:.16e} {:.16e}", z.re, z.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty constellation file".into()))?;
        let (m, nu) = parse_pair(header)?;
        if m < 0.0 || m.fract() != 0.0 {
            return Err(Error::Parse(format!("bad point count {m}")));
        }
        let points = lines
            .map(|l| parse_pair(l).map(|(x, y)| C64::new(x, y)))
            .collect::<Result<Vec<_>>>()?;
        if points.len() != m as usize {
            return Err(Error::Parse(format!("header says {m} points, file has {}", points.len())));
        }
        Ok(Self::from_points(points, nu))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_pair(line: &str) -> Result<(f64, f64)> {
    let mut it = line.split_whitespace().map(|v| {
        v.parse::<f64>()
            .map_err(|e| Error::Parse(format!("'{v}': {e}")))
    });
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(Error::Parse(format!("expected two numbers, got '{line}'"))),
    }
}

/// Closed-form four-point set: `{+r1, -r1, +j r2, -j r2}` with
/// `r1 = sqrt(1/3)`, `r2 = sqrt(5/3)` and `nu = 0`.
pub fn closed_form_m4() -> ConstellationSet {
    let r1 = (1.0f64 / 3.0).sqrt();
    let r2 = (5.0f64 / 3.0).sqrt();
    ConstellationSet::from_circles(0.0, &[r1, r2], &[Branch::AC, Branch::BD]).expect("nu = 0 is always feasible")
}

/// Pair metric `(dx)^2 - (dy)^2` before raising to `N_T`.
#[inline]
pub fn pair_metric(p: C64, q: C64) -> f64 {
    let d = p - q;
    d.re * d.re - d.im * d.im
}

/// `min_{k != l} [(x_k - x_l)^2 - (y_k - y_l)^2]^{N_T}`.
pub fn objective(points: &[C64], n_t: usize) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    let mut best = f64::INFINITY;
    for (k, &p) in points.iter().enumerate() {
        for &q in &points[k + 1..] {
            best = best.min(pair_metric(p, q).powi(n_t as i32));
        }
    }
    Ok(best)
}

/// Coding gain of the MDC-QOSTBC with `k` symbols over this constellation:
/// `N_T det_min^{1/N_T}` with `det_min = objective / K^{N_T}`.
pub fn mdc_coding_gain(points: &[C64], n_t: usize, k: usize) -> Result<f64> {
    let obj = objective(points, n_t)?;
    Ok(n_t as f64 * obj.abs().powf(1.0 / n_t as f64) / k as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriteriaReport {
    /// `max_k |x_k y_k - nu|`.
    pub quasi_unitary_residual: f64,
    /// `|mean(x_k^2 + y_k^2) - 1|`.
    pub power_residual: f64,
    /// `|sum r_i^2 - L|`.
    pub radii_residual: f64,
    /// `min_{k != l} |(dx)^2 - (dy)^2|`.
    pub min_pair_metric: f64,
    /// Smallest distance between two points.
    pub min_distance: f64,
    pub tol: f64,
}

impl CriteriaReport {
    pub fn quasi_unitary_ok(&self) -> bool {
        self.quasi_unitary_residual <= self.tol
    }

    pub fn power_ok(&self) -> bool {
        self.power_residual <= self.tol && self.radii_residual <= self.tol
    }

    pub fn performance_ok(&self) -> bool {
        self.min_pair_metric > self.tol
    }

    pub fn distinct_ok(&self) -> bool {
        self.min_distance > self.tol
    }

    pub fn all_pass(&self) -> bool {
        self.quasi_unitary_ok() && self.power_ok() && self.performance_ok() && self.distinct_ok()
    }

    pub fn lines(&self) -> Vec<String> {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        vec![
            format!(
                "{}  quasi-unitary  max|x*y - nu| = {:.3e}",
                mark(self.quasi_unitary_ok()),
                self.quasi_unitary_residual
            ),
            format!(
                "{}  power          |E|z|^2 - 1| = {:.3e}, |sum r^2 - L| = {:.3e}",
                mark(self.power_ok()),
                self.power_residual,
                self.radii_residual
            ),
            format!(
                "{}  performance    min|dx^2 - dy^2| = {:.6e}",
                mark(self.performance_ok()),
                self.min_pair_metric
            ),
            format!("{}  distinct       min distance = {:.3e}", mark(self.distinct_ok()), self.min_distance),
        ]
    }
}

pub fn check_criteria(set: &ConstellationSet, tol: f64) -> CriteriaReport {
    let pts = set.points();
    let quasi_unitary_residual = pts.iter().map(|z| (z.re * z.im - set.nu()).abs()).fold(0.0, f64::max);
    let power_residual = if pts.is_empty() { f64::INFINITY } else { (set.mean_power() - 1.0).abs() };
    let radii_residual = (set.radii().iter().map(|r| r * r).sum::<f64>() - set.radii().len() as f64).abs();
    let mut min_pair_metric = f64::INFINITY;
    let mut min_distance = f64::INFINITY;
    for (k, &p) in pts.iter().enumerate() {
        for &q in &pts[k + 1..] {
            min_pair_metric = min_pair_metric.min(pair_metric(p, q).abs());
            min_distance = min_distance.min((p - q).norm());
        }
    }
    if pts.len() < 2 {
        min_pair_metric = 0.0;
        min_distance = 0.0;
    }
    CriteriaReport {
        quasi_unitary_residual,
        power_residual,
        radii_residual,
        min_pair_metric,
        min_distance,
        tol,
    }
}

/// Square QAM with unit average power, Gray order is irrelevant here.
pub fn qam(m: usize) -> Result<Vec<C64>> {
    let side = (m as f64).sqrt().round() as usize;
    if side < 2 || side * side != m {
        return Err(Error::Config(format!("QAM size {m} is not a square of at least 4")));
    }
    let levels: Vec<f64> = (0..side).map(|i| 2.0 * i as f64 - (side as f64 - 1.0)).collect();
    let pts: Vec<C64> = levels
        .iter()
        .flat_map(|&re| levels.iter().map(move |&im| C64::new(re, im)))
        .collect();
    let p = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
    Ok(pts.into_iter().map(|z| z / p.sqrt()).collect())
}

/// Unit-circle PSK starting at angle `offset`.
pub fn psk(m: usize, offset: f64) -> Result<Vec<C64>> {
    if m < 2 {
        return Err(Error::Config(format!("PSK size {m} must be at least 2")));
    }
    Ok((0..m)
        .map(|i| C64::from_polar(1.0, offset + 2.0 * std::f64::consts::PI * i as f64 / m as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn closed_form_radii_and_power() {
        let set = closed_form_m4();
        assert!((set.radii()[0] - 0.5773502691896258).abs() < 1e-15);
        assert!((set.radii()[1] - 1.2909944487358056).abs() < 1e-15);
        assert!((set.mean_power() - 1.0).abs() < 1e-15);
        assert_eq!(set.points()[0], C64::new(set.radii()[0], 0.0));
        assert_eq!(set.points()[3], C64::new(0.0, -set.radii()[1]));
        assert!(check_criteria(&set, 1e-9).all_pass());
    }

    #[test]
    fn closed_form_objective_balances_both_terms() {
        let set = closed_form_m4();
        let (r1, r2) = (set.radii()[0], set.radii()[1]);
        assert!(((4.0 * r1 * r1).abs() - (r1 * r1 - r2 * r2).abs()).abs() < 1e-14);
        let obj = objective(set.points(), 4).unwrap();
        assert!((obj - (4.0f64 / 3.0).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn objective_examples() {
        assert!(objective(&[C64::new(1.0, 0.0)], 4).is_err());
        let dup = [C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(-1.0, 0.0)];
        assert_eq!(objective(&dup, 4).unwrap(), 0.0);
        let r = 0.8;
        let pair = [C64::new(r, 0.0), C64::new(-r, 0.0)];
        assert!((objective(&pair, 4).unwrap() - (2.0 * r).powi(8)).abs() < 1e-12);
    }

    #[test]
    fn same_circle_pairing_is_degenerate() {
        let r = 1.0;
        let pts = [C64::new(r, 0.0), C64::new(0.0, r), C64::new(-r, 0.0), C64::new(0.0, -r)];
        assert_eq!(objective(&pts, 4).unwrap(), 0.0);
    }

    #[test]
    fn qpsk_violates_hyperbola() {
        let pts = psk(4, FRAC_PI_4).unwrap();
        let set = ConstellationSet::from_points(pts.clone(), 0.0);
        let rep = check_criteria(&set, 1e-9);
        assert!(!rep.quasi_unitary_ok());
        assert!((rep.quasi_unitary_residual - 0.5).abs() < 1e-12);
        let products: Vec<f64> = pts.iter().map(|z| z.re * z.im).collect();
        assert!(products.iter().any(|&p| p > 0.49) && products.iter().any(|&p| p < -0.49));
    }

    #[test]
    fn scaled_set_fails_power() {
        let set = closed_form_m4().scaled(1.1);
        let rep = check_criteria(&set, 1e-9);
        assert!(!rep.power_ok());
        assert!((rep.power_residual - 0.21).abs() < 1e-12);
        assert!(rep.quasi_unitary_ok());
    }

    #[test]
    fn hyperbola_points_respect_nu() {
        let nu = 0.15;
        let set = ConstellationSet::from_circles(nu, &[0.7, 1.2], &[Branch::AC, Branch::BD]).unwrap();
        for z in set.points() {
            assert!((z.re * z.im - nu).abs() < 1e-12);
        }
        let a = CirclePointParam::new(0, 0.7, nu, IntersectionPoint::A).unwrap();
        let b = CirclePointParam::new(0, 0.7, nu, IntersectionPoint::B).unwrap();
        assert!(a.theta >= 0.0 && a.theta <= PI / 4.0);
        assert!((a.theta + b.theta - PI / 2.0).abs() < 1e-15);
        let c = CirclePointParam::new(0, 0.7, nu, IntersectionPoint::C).unwrap();
        assert!((a.to_complex() + c.to_complex()).norm() < 1e-15);
    }

    #[test]
    fn hyperbola_can_miss_circle() {
        assert!(matches!(
            ConstellationSet::from_circles(2.0, &[1.0, 1.0], &[Branch::AC, Branch::BD]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn text_format() {
        let set = closed_form_m4();
        let text = set.to_text();
        assert!(text.starts_with("4 0.0000000000000000e0\n"));
        assert!(text.contains("5.7735026918962573e-1"));
        let back = ConstellationSet::from_text(&text).unwrap();
        assert_eq!(back, set);
        assert!(ConstellationSet::from_text("3 0\n1 0\n").is_err());
        assert!(ConstellationSet::from_text("1 0\n1 0 0\n").is_err());
    }

    #[test]
    fn qam_and_psk_have_unit_power() {
        for m in [4, 16, 64] {
            let p = qam(m).unwrap();
            assert_eq!(p.len(), m);
            let pw = p.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((pw - 1.0).abs() < 1e-12);
        }
        assert!(qam(8).is_err());
        assert!((psk(8, 0.0).unwrap()[2] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn coding_gain_of_closed_form() {
        let g = mdc_coding_gain(closed_form_m4().points(), 4, 4).unwrap();
        assert!((g - 4.0 / 3.0).abs() < 1e-12);
    }
}
