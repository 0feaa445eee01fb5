//! Property-based invariants on small grids: symmetry identities, quadrature
//! structure, exchange-format round trips.

use proptest::prelude::*;
use scalarfield_core::functional::{energy, j_lambda};
use scalarfield_core::grid::{build_grid, GridRef, SymmetryClass};
use scalarfield_core::{read_field_csv, write_field_csv, Field, NonlinearityModel, SplitScheme};

fn scheme() -> SplitScheme {
    SplitScheme::with_parameters(&NonlinearityModel::cubic(3), 0.5, 2.0).unwrap()
}

fn radial() -> GridRef {
    build_grid(SymmetryClass::Radial { n: 3 }, 8.0, 0.25).unwrap()
}

fn tau_grid() -> GridRef {
    build_grid(SymmetryClass::O2Tau { n: 4, m: 2 }, 6.0, 0.5).unwrap()
}

fn bump_field(grid: &GridRef, params: &[(f64, f64, f64)]) -> Field {
    Field::from_fn(grid, |c| {
        let r2: f64 = c.iter().map(|x| x * x).sum();
        let r = r2.sqrt();
        params
            .iter()
            .map(|(c0, w, a)| a * (-((r - c0) / w).powi(2)).exp())
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn family_is_odd_in_t(t in -6.0f64..6.0, lam in 0.75f64..1.0) {
        let s = scheme();
        let plus = s.f_lambda(lam, t).unwrap();
        let minus = s.f_lambda(lam, -t).unwrap();
        prop_assert_eq!(plus, -minus);
    }

    #[test]
    fn family_orders_in_lambda(t in -6.0f64..6.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let s = scheme();
        let lo = s.lambda0 + (1.0 - s.lambda0) * a.min(b);
        let hi = s.lambda0 + (1.0 - s.lambda0) * a.max(b);
        prop_assert!(s.big_f_lambda(lo, t).unwrap() <= s.big_f_lambda(hi, t).unwrap());
    }

    #[test]
    fn energy_is_even_and_ordered(
        c0 in 0.5f64..4.0,
        w in 0.5f64..2.0,
        amp in -3.0f64..3.0,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let s = scheme();
        let g = radial();
        let u = bump_field(&g, &[(c0, w, amp)]);
        let mut neg = u.clone();
        neg.scale(-1.0);
        let lam = s.lambda0 + (1.0 - s.lambda0) * a.min(b);
        let lam_hi = s.lambda0 + (1.0 - s.lambda0) * a.max(b);
        prop_assert_eq!(
            j_lambda(&u, &s, lam).unwrap(),
            j_lambda(&neg, &s, lam).unwrap()
        );
        prop_assert!(j_lambda(&u, &s, lam).unwrap() >= j_lambda(&u, &s, lam_hi).unwrap());
        prop_assert!(energy(&u, &s, lam).unwrap().b >= 0.0);
    }

    #[test]
    fn tau_projection_idempotent(
        ax in 0.2f64..2.0,
        by in 0.2f64..2.0,
        amp in -2.0f64..2.0,
    ) {
        let g = tau_grid();
        let u = Field::from_fn(&g, |c| {
            amp * (ax * c[0] - by * c[1]) * (-(c[0] * c[0] + c[1] * c[1]) / 4.0).exp()
        });
        let p = u.project_tau().unwrap();
        prop_assert_eq!(p.tau_defect().unwrap(), 0.0);
        let pp = p.project_tau().unwrap();
        prop_assert_eq!(p.values(), pp.values());
        // projection is an L2 contraction
        prop_assert!(p.l2_sq() <= u.l2_sq() + 1e-12 * u.l2_sq().max(1.0));
    }

    #[test]
    fn csv_round_trip(c0 in 0.0f64..5.0, w in 0.3f64..2.0, amp in -4.0f64..4.0) {
        let g = radial();
        let u = bump_field(&g, &[(c0, w, amp)]);
        let mut buf = Vec::new();
        write_field_csv(&u, &mut buf).unwrap();
        let back = read_field_csv(&g, buf.as_slice()).unwrap();
        prop_assert_eq!(u.values(), back.values());
        // a second pass is byte-identical
        let mut buf2 = Vec::new();
        write_field_csv(&back, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn lattice_shifts_commute_with_quadrature(
        shift in -40i64..40,
        w in 0.5f64..2.0,
        amp in -3.0f64..3.0,
    ) {
        let g = build_grid(SymmetryClass::Line, 30.0, 0.25).unwrap();
        let u = Field::from_fn(&g, |c| {
            let s: f64 = c[0] / w;
            if s.abs() >= 1.0 { 0.0 } else { amp * (1.0 - s * s).powi(3) }
        });
        let v = u.shift_nodes(0, shift).unwrap();
        prop_assert_eq!(u.l2_sq(), v.l2_sq());
        prop_assert_eq!(
            g.integrate(u.values()).unwrap(),
            g.integrate(v.values()).unwrap()
        );
    }

    #[test]
    fn quadrature_is_linear(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c0 in 0.5f64..4.0,
    ) {
        let g = radial();
        let u = bump_field(&g, &[(c0, 1.0, 1.0)]);
        let v = bump_field(&g, &[(c0 * 0.5, 0.8, -1.0)]);
        let mixed: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let lhs = g.integrate(&mixed).unwrap();
        let rhs = a * g.integrate(u.values()).unwrap() + b * g.integrate(v.values()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }
}
