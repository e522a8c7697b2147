use dstm::constellation::*;
use dstm::design::*;

const M2_GOLDEN: &str = include_str!("data/m2.txt");

/// Eight-point radii at nu = 0 with the smallest gaps equalized:
/// `(2 r1)^2 = r2^2 - r1^2 = r3^2 - r2^2 = (r3 - r1)^2 = (r4 - r2)^2`
/// and `sum r^2 = 4`.
fn m2_oracle() -> [f64; 4] {
    let s5 = 5f64.sqrt();
    let r1 = 1.0 / (6.0 + s5).sqrt();
    [r1, s5 * r1, 3.0 * r1, (2.0 + s5) * r1]
}

#[test]
fn golden_eight_point_set_matches_hand_solution() {
    let set = ConstellationSet::from_text(M2_GOLDEN).unwrap();
    assert_eq!(set.len(), 8);
    assert_eq!(set.nu(), 0.0);
    for (r, o) in set.radii().iter().zip(m2_oracle()) {
        assert!((r - o).abs() < 1e-9, "{r} vs {o}");
    }
    assert!(check_criteria(&set, 1e-9).all_pass());
    // points sit on the axes
    assert!(set.points().iter().all(|z| z.re == 0.0 || z.im == 0.0));
    let sum_sq: f64 = m2_oracle().iter().map(|r| r * r).sum();
    assert!((sum_sq - 4.0).abs() < 1e-12);
    let r1 = m2_oracle()[0];
    let obj = objective(set.points(), 4).unwrap();
    assert!((obj - (4.0 * r1 * r1).powi(4)).abs() < 1e-12, "{obj}");
}

#[test]
fn eight_point_optimum_agrees_across_seeds() {
    let objs: Vec<f64> = [1u64, 99]
        .iter()
        .map(|&s| optimize_detailed(8, 0.0, 4, 30, s).unwrap().objective)
        .collect();
    let golden = objective(ConstellationSet::from_text(M2_GOLDEN).unwrap().points(), 4).unwrap();
    for o in objs {
        assert!((o - golden).abs() < 1e-6 * golden, "{o} vs {golden}");
    }
}

#[test]
fn four_point_optimum_is_locally_maximal() {
    let best = closed_form_m4();
    let base = objective(best.points(), 4).unwrap();
    let r1 = best.radii()[0];
    for d in [-1e-3, 1e-3] {
        // stay on the power constraint
        let a = r1 + d;
        let b = (2.0 - a * a).sqrt();
        let moved = ConstellationSet::from_circles(0.0, &[a, b], &[Branch::AC, Branch::BD]).unwrap();
        assert!(objective(moved.points(), 4).unwrap() < base);
    }
    for nu in [-1e-3, 1e-3] {
        let moved = ConstellationSet::from_circles(nu, best.radii(), &best.branches()).unwrap();
        assert!(objective(moved.points(), 4).unwrap() <= base);
    }
}

#[test]
fn single_point_sweep_matches_design() {
    let row = gain_sweep(4, &[0.0], 4, 4, 20, 3).unwrap();
    let direct = optimize_detailed(4, 0.0, 4, 20, 3).unwrap();
    assert_eq!(row.len(), 1);
    assert_eq!(row[0].objective, direct.objective);
    assert!((row[0].coding_gain - 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn gain_falls_as_nu_grows() {
    let rows = gain_sweep(4, &[0.0, 0.1, 0.2, 0.3], 4, 4, 20, 1).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].coding_gain <= w[0].coding_gain, "{rows:?}");
    }
}

#[test]
fn infeasible_nu_is_reported() {
    assert!(matches!(optimize(4, 2.0, 4, 5, 1), Err(dstm::Error::Infeasible(_))));
    assert!(matches!(optimize(5, 0.0, 4, 5, 1), Err(dstm::Error::InvalidSize(5))));
}
