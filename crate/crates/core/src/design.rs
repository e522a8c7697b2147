//! Numerical max-min constellation design.
//!
//! The search space is reduced to the circle radii (plus a discrete branch
//! choice per circle). Radii are parameterized so that both the power
//! constraint `sum r_i^2 = L` and the hyperbola reachability bound
//! `r_i^2 >= 2|nu|` hold for every parameter value, and the exact max-min
//! objective is polished by restarted Nelder-Mead from many random starts.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constellation::{mdc_coding_gain, objective, Branch, ConstellationSet};
use crate::error::{Error, Result};

/// Radii closer than this are treated as equal when breaking ties.
const RADIUS_TIE_TOL: f64 = 1e-7;
/// Relative objective difference below which two optima are tied.
const OBJECTIVE_TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DesignOutcome {
    pub set: ConstellationSet,
    pub objective: f64,
    pub branches: Vec<Branch>,
}

/// Best constellation of `m` points on the hyperbola `x y = nu` for `n_t`
/// transmit antennas, over `starts` random initializations.
///
/// Each start is seeded from `(seed, start index)`, so the result does not
/// depend on how starts are scheduled across threads.
pub fn optimize(m: usize, nu: f64, n_t: usize, starts: usize, seed: u64) -> Result<ConstellationSet> {
    optimize_detailed(m, nu, n_t, starts, seed).map(|o| o.set)
}

pub fn optimize_detailed(m: usize, nu: f64, n_t: usize, starts: usize, seed: u64) -> Result<DesignOutcome> {
    if m < 4 || !m.is_multiple_of(2) {
        return Err(Error::InvalidSize(m));
    }
    if starts == 0 {
        return Err(Error::Config("at least one start is required".into()));
    }
    if !nu.is_finite() || 2.0 * nu.abs() >= 1.0 {
        return Err(Error::Infeasible(format!(
            "x*y = {nu} needs r^2 >= {} on every circle, but unit average power allows at most mean r^2 = 1",
            2.0 * nu.abs()
        )));
    }
    let l = m / 2;
    let patterns = branch_patterns(l, n_t.is_multiple_of(2));
    let param = RadiusParam { l, nu };

    let per_start: Vec<Option<DesignOutcome>> = (0..starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64);
            let mut best: Option<DesignOutcome> = None;
            for pattern in &patterns {
                let x0: Vec<f64> = (0..l - 1).map(|_| rng.random_range(0.0..FRAC_PI_2)).collect();
                let f = |x: &[f64]| {
                    ConstellationSet::from_circles(nu, &param.radii(x), pattern)
                        .and_then(|s| objective(s.points(), n_t))
                        .unwrap_or(f64::NEG_INFINITY)
                };
                let x = polish(&f, x0);
                if let Some(cand) = canonical_outcome(&param.radii(&x), pattern, nu, n_t) {
                    best = pick(best, cand);
                }
            }
            best
        })
        .collect();

    per_start
        .into_iter()
        .flatten()
        .fold(None, pick)
        .ok_or_else(|| Error::Infeasible(format!("no feasible constellation found for M={m}, nu={nu}")))
}

/// Coding gain of the best `m`-point set at each `nu`, for the MDC-QOSTBC
/// with `k` symbols per codeword.
pub fn gain_sweep(m: usize, nus: &[f64], n_t: usize, k: usize, starts: usize, seed: u64) -> Result<Vec<GainRow>> {
    nus.iter()
        .map(|&nu| {
            let out = optimize_detailed(m, nu, n_t, starts, seed)?;
            Ok(GainRow {
                nu,
                objective: out.objective,
                coding_gain: mdc_coding_gain(out.set.points(), n_t, k)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainRow {
    pub nu: f64,
    pub objective: f64,
    pub coding_gain: f64,
}

/// Maps `L - 1` unconstrained angles to radii with `sum r_i^2 = L` and
/// `r_i^2 >= 2|nu|`.
struct RadiusParam {
    l: usize,
    nu: f64,
}

impl RadiusParam {
    fn radii(&self, angles: &[f64]) -> Vec<f64> {
        // squared hyperspherical coordinates give a point on the simplex
        let mut w = Vec::with_capacity(self.l);
        let mut rest = 1.0;
        for &a in angles {
            let c2 = a.cos().powi(2);
            w.push(rest * c2);
            rest *= 1.0 - c2;
        }
        w.push(rest);
        let floor = 2.0 * self.nu.abs();
        let spread = self.l as f64 * (1.0 - floor);
        w.into_iter().map(|wi| (floor + spread * wi).sqrt()).collect()
    }
}

/// All per-circle branch assignments; with `mirror_symmetric` the first circle
/// is pinned to `AC`, since swapping every branch mirrors the set across
/// `y = x` and leaves an even-power objective unchanged.
fn branch_patterns(l: usize, mirror_symmetric: bool) -> Vec<Vec<Branch>> {
    let count = if mirror_symmetric { 1usize << (l - 1) } else { 1usize << l };
    (0..count)
        .map(|bits| {
            (0..l)
                .map(|i| if (bits >> (l - 1 - i)) & 1 == 1 { Branch::BD } else { Branch::AC })
                .collect()
        })
        .collect()
}

/// Sorts circles by radius and, for even `n_t`, mirrors so the smallest
/// circle carries the `AC` pair.
fn canonical_outcome(radii: &[f64], pattern: &[Branch], nu: f64, n_t: usize) -> Option<DesignOutcome> {
    let mut circles: Vec<(f64, Branch)> = radii.iter().copied().zip(pattern.iter().copied()).collect();
    circles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if n_t.is_multiple_of(2) && circles[0].1 == Branch::BD {
        for c in &mut circles {
            c.1 = c.1.flipped();
        }
    }
    let radii: Vec<f64> = circles.iter().map(|c| c.0).collect();
    let branches: Vec<Branch> = circles.iter().map(|c| c.1).collect();
    let set = ConstellationSet::from_circles(nu, &radii, &branches).ok()?;
    let obj = objective(set.points(), n_t).ok()?;
    obj.is_finite().then_some(DesignOutcome {
        set,
        objective: obj,
        branches,
    })
}

/// Keeps the better outcome; ties go to the lexicographically smaller
/// (radii, branches), then to the incumbent.
fn pick(best: Option<DesignOutcome>, cand: DesignOutcome) -> Option<DesignOutcome> {
    let Some(cur) = best else { return Some(cand) };
    let scale = cur.objective.abs().max(cand.objective.abs()).max(f64::MIN_POSITIVE);
    let diff = (cand.objective - cur.objective) / scale;
    if diff > OBJECTIVE_TIE_TOL {
        return Some(cand);
    }
    if diff < -OBJECTIVE_TIE_TOL {
        return Some(cur);
    }
    let order = cand
        .set
        .radii()
        .iter()
        .zip(cur.set.radii())
        .map(|(a, b)| {
            if (a - b).abs() <= RADIUS_TIE_TOL {
                Ordering::Equal
            } else {
                a.total_cmp(b)
            }
        })
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
        .then_with(|| cand.branches.cmp(&cur.branches));
    if order == Ordering::Less {
        Some(cand)
    } else {
        Some(cur)
    }
}

/// Restarted Nelder-Mead maximization until a restart stops improving.
fn polish(f: &impl Fn(&[f64]) -> f64, x0: Vec<f64>) -> Vec<f64> {
    if x0.is_empty() {
        return x0;
    }
    let mut x = x0;
    let mut fx = f(&x);
    let mut step = 0.25;
    let mut stale = 0;
    for _ in 0..60 {
        let (nx, nf) = nelder_mead_max(f, &x, step, 4000);
        let gain = nf - fx;
        if nf >= fx {
            x = nx;
            fx = nf;
        }
        if gain <= 1e-15 * fx.abs().max(1e-300) {
            stale += 1;
            if stale >= 3 {
                break;
            }
            step *= 0.1;
        } else {
            stale = 0;
        }
        step = step.max(1e-9);
    }
    x
}

/// One Nelder-Mead run (maximizing) from an axis-aligned simplex.
fn nelder_mead_max(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), -f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = -f(&x);
        simplex.push((x, v));
    }
    // minimizing g = -f
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    for _ in 0..max_iter {
        order(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < 1e-14 || (worst.is_finite() && (worst - best).abs() <= 1e-16 * best.abs().max(1e-300)) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = toward(-alpha);
        let fr = -f(&xr);
        if fr < simplex[0].1 {
            let xe = toward(-gamma);
            let fe = -f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(-rho);
                let fc = -f(&xc);
                (xc, fc)
            } else {
                let xc = toward(rho);
                let fc = -f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *v = -f(x);
                }
            }
        }
    }
    order(&mut simplex);
    let (x, v) = simplex.swap_remove(0);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{check_criteria, closed_form_m4};

    #[test]
    fn radius_param_is_always_feasible() {
        let p = RadiusParam { l: 4, nu: 0.1 };
        for angles in [[0.0, 0.0, 0.0], [1.0, -2.0, 7.0], [0.3, 0.3, 0.3]] {
            let r = p.radii(&angles);
            let s: f64 = r.iter().map(|x| x * x).sum();
            assert!((s - 4.0).abs() < 1e-12);
            assert!(r.iter().all(|x| x * x >= 0.2 - 1e-15));
        }
    }

    #[test]
    fn patterns_pin_first_circle_for_even_power() {
        let p = branch_patterns(3, true);
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|b| b[0] == Branch::AC));
        assert_eq!(branch_patterns(3, false).len(), 8);
    }

    #[test]
    fn recovers_closed_form() {
        let set = optimize(4, 0.0, 4, 20, 1).unwrap();
        let cf = closed_form_m4();
        for (a, b) in set.radii().iter().zip(cf.radii()) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", set.radii(), cf.radii());
        }
        for (a, b) in set.points().iter().zip(cf.points()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn results_pass_criteria() {
        for (m, nu) in [(4, 0.0), (4, 0.1), (8, 0.0), (8, 0.15)] {
            let set = optimize(m, nu, 4, 8, 3).unwrap();
            assert!(check_criteria(&set, 1e-9).all_pass(), "m={m} nu={nu}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(optimize(5, 0.0, 4, 4, 0), Err(Error::InvalidSize(5))));
        assert!(matches!(optimize(2, 0.0, 4, 4, 0), Err(Error::InvalidSize(2))));
        assert!(matches!(optimize(4, 2.0, 4, 4, 0), Err(Error::Infeasible(_))));
        assert!(matches!(optimize(4, 0.0, 4, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = optimize(8, 0.05, 4, 6, 42).unwrap();
        let b = optimize(8, 0.05, 4, 6, 42).unwrap();
        assert_eq!(a, b);
    }
}
