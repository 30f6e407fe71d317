mod common;

use common::{max_abs_diff, small, BellmanOracle};
use execqvi::{
    solver::DEFAULT_INTENSITY_CAP, Action, Discretization, ModelParams, RecoveryKind, Solution,
    Solver, SolverOptions, Sweep,
};

fn solve_all(p: &ModelParams, sweep: Sweep) -> Solution {
    let opts = SolverOptions {
        keep_surfaces: true,
        sweep,
        ..SolverOptions::default()
    };
    Solver::new(p, opts).unwrap().solve().unwrap()
}

fn surfaces(sol: &Solution) -> Vec<Vec<f64>> {
    sol.surfaces
        .as_ref()
        .unwrap()
        .iter()
        .map(|s| s.values().to_vec())
        .collect()
}

fn variants() -> Vec<ModelParams> {
    let mut out = Vec::new();
    for kind in [RecoveryKind::Weak, RecoveryKind::Strong] {
        out.push(small(kind, 4.0, 0.03));
        out.push(ModelParams {
            lambda_l: 40.0,
            l_max: 2.0,
            delta_t: 0.01,
            lambda_bar2: 0.4,
            ..small(kind, 5.0, 0.3)
        });
        out.push(ModelParams {
            theta1: 1.0,
            theta2: 1.5,
            lambda_bar1: 3.0,
            delta_t: 0.005,
            ..small(kind, 4.0, 0.2)
        });
        out.push(ModelParams {
            theta2: 0.5,
            ..small(kind, 4.0, 0.02)
        });
    }
    out
}

#[test]
fn matches_brute_force_oracle() {
    for p in variants() {
        let sol = solve_all(&p, Sweep::GaussSeidel);
        let oracle = BellmanOracle::new(&p, DEFAULT_INTENSITY_CAP);
        assert_eq!(oracle.n_xi, sol.disc.n_xi);
        let want = oracle.solve();
        let got = surfaces(&sol);
        for (k, (a, b)) in got.iter().zip(&want).enumerate() {
            let e = max_abs_diff(a, b);
            assert!(e < 1e-8, "{:?} k={k} err={e}", p.recovery_kind);
        }
    }
}

#[test]
fn jacobi_reaches_the_same_fixed_point() {
    let p = ModelParams {
        lambda_l: 5.0,
        l_max: 2.0,
        ..small(RecoveryKind::Weak, 4.0, 0.02)
    };
    let a = surfaces(&solve_all(&p, Sweep::GaussSeidel));
    let b = surfaces(&solve_all(&p, Sweep::Jacobi));
    for (x, y) in a.iter().zip(&b) {
        assert!(max_abs_diff(x, y) < 1e-7);
    }
}

#[test]
fn no_recovery_linear_impact_closed_form() {
    // Nothing recovers, so a sale of z at inventory x costs x θ1 z for good.
    // Selling one lot at a time is cheapest: θ1 (X + (X-1) + ... + 1).
    for x0 in [1.0, 3.0, 5.0] {
        let p = ModelParams {
            lambda_bar1: 0.0,
            ..small(RecoveryKind::Weak, x0, 0.01)
        };
        let sol = solve_all(&p, Sweep::GaussSeidel);
        let want = -p.theta1 * x0 * (x0 + 1.0) / 2.0;
        for s in &sol.surfaces.as_ref().unwrap()[..sol.disc.n_t] {
            let got = s.get(sol.disc.n_x, 0);
            assert!((got - want).abs() < 1e-9, "x0={x0} got {got} want {want}");
        }
    }
}

#[test]
fn zero_impact_gives_zero_value() {
    let p = ModelParams {
        theta1: 0.0,
        ..small(RecoveryKind::Strong, 6.0, 0.05)
    };
    let sol = solve_all(&p, Sweep::GaussSeidel);
    for s in sol.surfaces.as_ref().unwrap() {
        assert!(s.values().iter().all(|v| v.abs() < 1e-9));
    }
}

#[test]
fn obstacle_inequality_holds() {
    for p in variants() {
        let sol = solve_all(&p, Sweep::GaussSeidel);
        let d = &sol.disc;
        // the terminal surface is a forced block sale and is exempt
        for s in &sol.surfaces.as_ref().unwrap()[..d.n_t] {
            for i_x in 1..=d.n_x {
                for i_xi in 0..=d.n_xi {
                    for z in 1..=i_x {
                        let (t, _) = d.impact_after_sale(i_xi, z);
                        let m = s.get(i_x - z, t) - d.x_at(i_x) * d.impact_of(z);
                        assert!(s.get(i_x, i_xi) >= m - 1e-10, "{} {} {} {}", i_x, i_xi, s.get(i_x, i_xi), m);
                    }
                }
            }
        }
    }
}

#[test]
fn value_grows_with_time_to_go() {
    for kind in [RecoveryKind::Weak, RecoveryKind::Strong] {
        let p = ModelParams {
            lambda_l: 2.0,
            l_max: 1.0,
            ..small(kind, 5.0, 0.1)
        };
        let s = surfaces(&solve_all(&p, Sweep::GaussSeidel));
        for k in 0..s.len() - 1 {
            for (a, b) in s[k].iter().zip(&s[k + 1]) {
                assert!(*a >= b - 1e-8);
            }
        }
    }
}

#[test]
fn faster_recovery_never_hurts() {
    for kind in [RecoveryKind::Weak, RecoveryKind::Strong] {
        let slow = ModelParams {
            lambda_bar1: 0.5,
            ..small(kind, 5.0, 0.1)
        };
        let fast = ModelParams {
            lambda_bar1: 1.0,
            ..slow.clone()
        };
        let a = surfaces(&solve_all(&slow, Sweep::GaussSeidel));
        let b = surfaces(&solve_all(&fast, Sweep::GaussSeidel));
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.iter().zip(y) {
                assert!(*u <= v + 1e-8);
            }
        }
    }
}

#[test]
fn limit_orders_never_hurt() {
    let base = small(RecoveryKind::Weak, 5.0, 0.1);
    let with = ModelParams {
        lambda_l: 5.0,
        l_max: 3.0,
        ..base.clone()
    };
    let a = surfaces(&solve_all(&base, Sweep::GaussSeidel));
    let b = surfaces(&solve_all(&with, Sweep::GaussSeidel));
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in x.iter().zip(y) {
            assert!(*v >= u - 1e-8);
        }
    }
}

#[test]
fn concave_grid_covers_every_sale_sequence() {
    let p = ModelParams {
        theta2: 0.5,
        ..small(RecoveryKind::Weak, 4.0, 1.0)
    };
    let d = Discretization::new(&p).unwrap();
    assert_eq!(d.xi_max, common::brute_force_xi_max(&p, 4));
    assert_eq!(d.xi_max, 8.0);
    assert!(!d.convex_impact());
}

#[test]
fn convex_grid_covers_every_sale_sequence() {
    let p = ModelParams {
        theta1: 1.0,
        theta2: 1.5,
        ..small(RecoveryKind::Weak, 5.0, 1.0)
    };
    let d = Discretization::new(&p).unwrap();
    assert!(common::brute_force_xi_max(&p, 5) <= d.xi_max);
}

#[test]
fn policy_matches_surface_argmax() {
    let p = ModelParams {
        lambda_l: 40.0,
        l_max: 2.0,
        delta_t: 0.01,
        ..small(RecoveryKind::Weak, 5.0, 0.3)
    };
    let sol = solve_all(&p, Sweep::GaussSeidel);
    let d = &sol.disc;
    let s = sol.surfaces.as_ref().unwrap();
    for (k, surf) in s.iter().enumerate().take(d.n_t) {
        for i_x in 0..=d.n_x {
            for i_xi in 0..=d.n_xi {
                let v = surf.get(i_x, i_xi);
                if let Action::MarketSell(z) = sol.policy.get(k, i_x, i_xi) {
                    let (t, _) = d.impact_after_sale(i_xi, z as usize);
                    let m = surf.get(i_x - z as usize, t) - d.x_at(i_x) * d.impact_of(z as usize);
                    assert!((m - v).abs() < 1e-9);
                }
            }
        }
    }
}
