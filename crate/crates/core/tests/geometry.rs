//! Closed-form connection and curvature tables against the coordinate oracles.

mod common;

use common::*;
use walker_core::connection::{
    connection_frame, connection_frame_oracle, cotton_oracle, curvature_frame, curvature_frame_from_oracle,
    frame_brackets, is_locally_conformally_flat, torsion_residual,
};
use walker_core::grid::BoxGrid;
use walker_core::{Point, Sign};

#[test]
fn connection_matches_koszul_oracle() {
    let mut r = rng(1);
    for f in CORPUS {
        for eps in SIGNS {
            let m = metric(eps, f);
            for _ in 0..100 {
                let p = point(&mut r);
                let closed = connection_frame(&m, p).unwrap();
                let oracle = connection_frame_oracle(&m, p).unwrap();
                assert!(closed.max_abs_diff(&oracle) <= 1e-9, "{f} at {p:?}");
                assert!(closed.unlisted_max() <= 1e-9);
                assert!(oracle.unlisted_max() <= 1e-9);
                assert!(closed.metric_compatibility_residual(eps) <= 1e-9);
                assert!(torsion_residual(&closed, &frame_brackets(&m, p).unwrap()) <= 1e-9);
            }
        }
    }
}

#[test]
fn curvature_matches_riemann_oracle() {
    let mut r = rng(2);
    for f in CORPUS {
        for eps in SIGNS {
            let m = metric(eps, f);
            for _ in 0..100 {
                let p = point(&mut r);
                let closed = curvature_frame(&m, p).unwrap();
                let oracle = curvature_frame_from_oracle(&m, p).unwrap();
                assert!(closed.max_abs_diff(&oracle) <= 1e-6, "{f} at {p:?}");
                assert!(closed.unlisted_max() <= 1e-9);
                assert!(oracle.symmetry_residuals(eps).max() <= 1e-6);
            }
        }
    }
}

#[test]
fn cotton_agrees_with_lcf_verdict() {
    let grid = BoxGrid::new(Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0), BoxGrid::DEFAULT_COUNTS)
        .unwrap()
        .points();
    for (f, lcf) in [("x^2", true), ("y*x^2 + sin(y)*x + exp(y)", true), ("x^3", false), ("exp(x)", false)] {
        for eps in SIGNS {
            let m = metric(eps, f);
            let verdict = is_locally_conformally_flat(&m, &grid, 1e-9).unwrap();
            let cotton = grid.iter().map(|&p| cotton_oracle(&m, p).unwrap().max_norm()).fold(0.0, f64::max);
            assert_eq!(verdict.holds, lcf, "{f}");
            assert_eq!(cotton <= 1e-5, lcf, "{f}: cotton {cotton:e}");
        }
    }
}

#[test]
fn cotton_regression_for_cubic() {
    // Only C_yyx = -C_yxy = -ε f_xxx / 2 survive; f_xxx = 6.
    for eps in SIGNS {
        let c = cotton_oracle(&metric(eps, "x^3"), Point::new(0.2, 0.4, -0.1)).unwrap();
        assert!((c.0[2][2][1] + eps.value() * 3.0).abs() < 1e-5);
        assert!((c.0[2][1][2] - eps.value() * 3.0).abs() < 1e-5);
        assert!((c.max_norm() - 3.0).abs() < 1e-5);
    }
}

#[test]
fn flat_ambient_has_vanishing_curvature_everywhere() {
    let m = metric(Sign::Minus, "3*x + y^2");
    let mut r = rng(3);
    for _ in 0..20 {
        let oracle = curvature_frame_from_oracle(&m, point(&mut r)).unwrap();
        assert!(oracle.entries.iter().flatten().flatten().flatten().all(|c| c.abs() <= 1e-6));
    }
}
