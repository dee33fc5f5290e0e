use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplexconf::conformal::{conformal_quantile, region_contains, region_widths, PredictionRegion};
use simplexconf::dirichlet::{log_density, sample, MeanPrecision};
use simplexconf::hdr::*;
use simplexconf::regression::DesignRow;
use simplexconf::simulation::ScenarioSpec;
use simplexconf::CompositionalVector;

fn mp(mu: &[f64], phi: f64) -> MeanPrecision {
    MeanPrecision::new(mu.to_vec(), phi).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, parts: usize) -> MeanPrecision {
    let raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.3..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MeanPrecision::new(raw.iter().map(|v| v / total).collect(), rng.random_range(8.0..150.0)).unwrap()
}

// Threshold covering roughly 1 − alpha of the law's own draws.
fn typical_q(m: &MeanPrecision, alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    let scores: Vec<f64> = (0..400).map(|_| nll_score(&sample(m, rng), m).unwrap()).collect();
    conformal_quantile(&scores, alpha).unwrap().value
}

fn uniform_on_simplex(rng: &mut ChaCha8Rng) -> CompositionalVector {
    sample(&mp(&[1.0 / 3.0; 3], 3.0), rng)
}

#[test]
fn score_examples() {
    let y = CompositionalVector::new(vec![0.37, 0.63]).unwrap();
    assert!(nll_score(&y, &mp(&[0.5, 0.5], 2.0)).unwrap().abs() < 1e-14);
    let c = CompositionalVector::new(vec![1.0 / 3.0; 3]).unwrap();
    assert!((nll_score(&c, &mp(&[1.0 / 3.0; 3], 6.0)).unwrap() + 1.491655).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let m = random_params(&mut rng, 3);
        let y = sample(&m, &mut rng);
        assert!((nll_score(&y, &m).unwrap() + log_density(&y, &m).unwrap()).abs() < 1e-14);
    }
    assert!(nll_score_parts(&[0.0, 1.0], &mp(&[0.5, 0.5], 2.0)).is_err());
}

#[test]
fn level_examples() {
    let level = level_threshold(&mp(&[1.0 / 3.0; 3], 3.0), -(2f64.ln()));
    assert!(level.w.iter().all(|w| w.abs() < 1e-15));
    assert!(level.t_star.abs() < 1e-14);
    assert!(level.satisfied_by(&[0.1, 0.2, 0.7]));

    let m = mp(&[0.2, 0.3, 0.5], 12.0);
    let mut last = f64::INFINITY;
    for q in [-3.0, -1.0, 0.0, 2.5] {
        let t = level_threshold(&m, q).t_star;
        assert!(t < last);
        last = t;
    }
    let l = level_threshold(&m, 1.0);
    assert!((l.w_total - l.w.iter().sum::<f64>()).abs() < 1e-12);
}

#[test]
fn level_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    for _ in 0..1000 {
        let m = random_params(&mut rng, 3);
        let q = typical_q(&m, rng.random_range(0.05..0.9), &mut rng);
        let y = sample(&random_params(&mut rng, 3), &mut rng);
        let level = level_threshold(&m, q);
        let s = nll_score(&y, &m).unwrap();
        let grid = PredictionRegion::LevelSetGrid(LevelSetGrid {
            accepted: Vec::new(),
            floor: floor_polytope_from_tau(vec![0.0; 3], level.clone()),
            points_per_axis: 2,
            level: level.clone(),
        });
        if (s <= q) == region_contains(&grid, &y) {
            agree += 1;
        } else {
            assert!((s - q).abs() < 1e-10 * q.abs().max(1.0), "score {s} vs q {q}");
        }
    }
    assert!(agree >= 995);
}

#[test]
fn floor_equation_examples() {
    let w = [2.0, 2.0, 2.0];
    for rho in [0.01, 1.0, 37.0] {
        let f0 = floor_equation(rho, &w, 6.0, -5.0, 0).unwrap();
        for i in 1..3 {
            assert_eq!(floor_equation(rho, &w, 6.0, -5.0, i).unwrap(), f0);
        }
    }
    assert!(floor_equation(0.0, &w, 6.0, -5.0, 0).is_err());
    assert!(floor_equation(1.0, &[2.0, -0.5, 1.0], 2.5, -5.0, 0).is_err());

    // Direct transcription of the residual in ρ.
    let direct = |rho: f64, w: &[f64], t: f64, i: usize| {
        let big: f64 = w.iter().sum();
        let wi = w[i];
        wi * rho.ln() + (big - wi) * (1.0 + rho).ln() - big * (wi * rho + (big - wi) * (1.0 + rho)).ln()
            + w.iter().map(|v| v * v.ln()).sum::<f64>()
            - t
    };
    let w = [1.5, 4.0, 2.2];
    for rho in [1e-3, 0.5, 2.0, 300.0] {
        for i in 0..3 {
            let a = floor_equation(rho, &w, 7.7, -4.0, i).unwrap();
            assert!((a - direct(rho, &w, -4.0, i)).abs() < 1e-10, "rho {rho} i {i}");
        }
    }
}

#[test]
fn floor_matches_bisection_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let m = random_params(&mut rng, 3);
        let q = typical_q(&m, 0.1, &mut rng);
        let level = level_threshold(&m, q);
        for i in 0..3 {
            let solve = solve_floor(&level, i);
            assert_eq!(solve.status, FloorStatus::Solved);
            let f = |u: f64| floor_equation(u.exp(), &level.w, level.w_total, level.t_star, i).unwrap();
            let (mut lo, mut hi) = (-60.0f64, 60.0f64);
            assert!(f(lo) < 0.0 && f(hi) > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let rho = (0.5 * (lo + hi)).exp();
            let got = solve.rho.unwrap();
            assert!((got - rho).abs() <= 1e-8 * rho.max(1.0), "{got} vs {rho}");
        }
    }
}

#[test]
fn floor_matches_brute_force_minimum() {
    let m = mp(&[1.0 / 3.0; 3], 9.0);
    for y_ref in [[0.6, 0.2, 0.2], [0.15, 0.35, 0.5], [0.45, 0.3, 0.25]] {
        let q = nll_score(&CompositionalVector::new(y_ref.to_vec()).unwrap(), &m).unwrap();
        let level = level_threshold(&m, q);
        let n = 2000;
        let mut min = [f64::INFINITY; 3];
        for i in 1..n {
            for j in 1..n - i {
                let y = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                if level.satisfied_by(&y) {
                    for k in 0..3 {
                        min[k] = min[k].min(y[k]);
                    }
                }
            }
        }
        let floor = floor_polytope(&m, q);
        for k in 0..3 {
            assert!((floor.tau[k] - min[k]).abs() < 2e-3, "{:?} vs {:?}", floor.tau, min);
        }
        assert!((floor.tau[0] - floor.tau[1]).abs() < 1e-12 && (floor.tau[1] - floor.tau[2]).abs() < 1e-12);
    }
}

#[test]
fn floor_contains_exact_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let m = random_params(&mut rng, 3);
        let q = typical_q(&m, 0.1, &mut rng);
        let floor = floor_polytope(&m, q);
        assert!(!floor.any_fallback());
        let mut accepted = 0;
        while accepted < 10_000 {
            let y = sample(&m, &mut rng);
            if floor.level.satisfied_by(y.parts()) {
                accepted += 1;
                assert!(floor.contains(y.parts()), "{y:?} outside floors {:?}", floor.tau);
            }
        }
        // Uniform proposals reach the boundary of the set too.
        for _ in 0..20_000 {
            let y = uniform_on_simplex(&mut rng);
            if floor.level.satisfied_by(y.parts()) {
                assert!(floor.contains(y.parts()));
            }
        }
    }
}

#[test]
fn floor_fallbacks() {
    let m = mp(&[0.05, 0.45, 0.5], 10.0);
    let floor = floor_polytope(&m, 1.0);
    assert_eq!(floor.tau, vec![0.0; 3]);
    assert!(floor.status.iter().all(|s| *s == FloorStatus::NonPositiveWeight));

    let m = mp(&[0.3, 0.3, 0.4], 30.0);
    let unbounded = floor_polytope(&m, f64::INFINITY);
    assert_eq!(unbounded.tau, vec![0.0; 3]);
    assert!(unbounded.status.iter().all(|s| *s == FloorStatus::Unbounded));

    // A threshold below the score at the mode leaves the exact set empty.
    let mode = CompositionalVector::new((0..3).map(|j| (m.shape(j) - 1.0) / (m.phi() - 3.0)).collect()).unwrap();
    let below = nll_score(&mode, &m).unwrap() - 1.0;
    let empty = floor_polytope(&m, below);
    assert!(empty.status.iter().all(|s| *s == FloorStatus::BracketFailure));
    assert_eq!(empty.tau, vec![0.0; 3]);
}

#[test]
fn floors_nested_in_q() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = random_params(&mut rng, 3);
        let q0 = typical_q(&m, 0.5, &mut rng);
        let mut last = floor_polytope(&m, q0).tau;
        for step in 1..20 {
            let tau = floor_polytope(&m, q0 + 0.25 * f64::from(step)).tau;
            for (a, b) in tau.iter().zip(&last) {
                assert!(a <= b);
            }
            last = tau;
        }
    }
}

#[test]
fn floors_permute_with_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let m = random_params(&mut rng, 4);
        let q = typical_q(&m, 0.1, &mut rng);
        let perm = [2, 0, 3, 1];
        let a = floor_polytope(&m, q).tau;
        let b = floor_polytope(&m.permuted(&perm), q).tau;
        for (k, &p) in perm.iter().enumerate() {
            assert!((b[k] - a[p]).abs() < 1e-10, "{a:?} {b:?}");
        }
    }
}

#[test]
fn interior_grid_examples() {
    let level = level_threshold(&mp(&[1.0 / 3.0; 3], 6.0), f64::INFINITY);
    let zero = floor_polytope_from_tau(vec![0.0; 3], level.clone());
    let pts = interior_grid(&zero, 3);
    assert_eq!(pts.len(), 6);
    let rounded: Vec<Vec<f64>> =
        pts.iter().map(|p| p.parts().iter().map(|v| (v * 2.0).round() / 2.0).collect()).collect();
    for expect in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]] {
        assert!(rounded.iter().any(|p| p == &expect), "{expect:?} missing");
    }
    assert!(pts.iter().all(|p| p.parts().iter().all(|v| *v >= 1e-12)));

    let floor = floor_polytope_from_tau(vec![0.1, 0.25, 0.05], level);
    let mut last = 0;
    for m in [2, 5, 10, 20] {
        let pts = interior_grid(&floor, m);
        assert!(pts.len() >= last);
        last = pts.len();
        for p in &pts {
            assert!((p.parts().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.parts().iter().zip(&floor.tau).all(|(v, t)| *v >= t - 1e-12));
        }
    }
    assert_eq!(simplexconf::simulation::full_simplex_grid(3, 100).len(), 5050);
    assert_eq!(simplexconf::simulation::full_simplex_grid(4, 20).len(), 1540);
}

#[test]
fn grid_containment_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let m = random_params(&mut rng, 3);
        let q = typical_q(&m, 0.1, &mut rng);
        let grid = grid_region(&m, q, 60);
        assert!(!grid.accepted.is_empty());
        for p in &grid.accepted {
            assert!(grid.level.satisfied_by(p.parts()));
            assert!(nll_score(p, &m).unwrap() <= q + 1e-9);
            assert!(grid.floor.contains(p.parts()) || p.parts().iter().zip(&grid.floor.tau).all(|(v, t)| *v >= t - 1e-12));
        }
        let gw = region_widths(&PredictionRegion::LevelSetGrid(grid.clone()));
        let fw = region_widths(&PredictionRegion::FloorPolytope(grid.floor.clone()));
        assert!(gw.iter().zip(&fw).all(|(g, f)| g <= f));
    }
}

#[test]
fn grid_widths_converge_in_m() {
    let spec = ScenarioSpec::named("1a").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let x: Vec<f64> = (0..2).map(|_| rng.random()).collect();
        let m = simplexconf::regression::linear_predictors(&DesignRow::shared(&x), &spec.coefficients).unwrap();
        let q = typical_q(&m, 0.1, &mut rng);
        let coarse = grid_region(&m, q, 50).widths();
        let fine = grid_region(&m, q, 200).widths();
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() <= 0.02, "{coarse:?} vs {fine:?}");
        }
    }
}

proptest! {
    #[test]
    fn floor_equation_increasing(w in prop::collection::vec(0.01f64..50.0, 3..5), t in -40.0f64..0.0, i in 0usize..3) {
        let big: f64 = w.iter().sum();
        let first = floor_equation(1e-6, &w, big, t, i).unwrap();
        let mut last = first;
        for k in 1..=120 {
            let rho = 10f64.powf(-6.0 + 0.1 * f64::from(k));
            let v = floor_equation(rho, &w, big, t, i).unwrap();
            prop_assert!(v >= last - 1e-12 * (1.0 + last.abs()), "decreasing at rho = {rho}");
            last = v;
        }
        prop_assert!(last > first);
    }
}
