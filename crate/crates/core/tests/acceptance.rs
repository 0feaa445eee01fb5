//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p scalarfield-core --test acceptance -- --nocapture`.

use scalarfield_core::decomposition::{
    decompose, verify_decomposition, DecomposeOpts, FieldSequence, ProfileDecomposition,
    VerifyOpts,
};
use scalarfield_core::functional::{
    classify, energy, gradient, j_lambda, pohozaev_dilation, Thresholds,
};
use scalarfield_core::grid::build_grid;
use scalarfield_core::nonlinearity::comparison_envelope;
use scalarfield_core::oracle;
use scalarfield_core::solver::{
    self, mountain_pass_solve, pohozaev_minimize, radial_disk_boundary, symmetric_minimax_solve,
    ContinuationSchedule, NonradialOpts, SolverOpts, StageStatus,
};
use scalarfield_core::testmaps::{
    build_u_k, choose_scaling_l, choose_r_k, pi_k_potential, sample_directions, scaling_path,
    RadiusSearchOpts,
};
use scalarfield_core::{Error, Field, GridRef, Half, NonlinearityModel, SplitScheme, SymmetryClass};

fn line(n: usize, ok: bool, detail: &str) {
    println!("ACCEPTANCE {n}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
}

fn reference() -> (NonlinearityModel, SplitScheme, GridRef) {
    let model = NonlinearityModel::cubic(3);
    let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
    let grid = build_grid(SymmetryClass::Radial { n: 3 }, 20.0, 0.05).unwrap();
    (model, scheme, grid)
}

fn reference_minimax(
    scheme: &SplitScheme,
    grid: &GridRef,
) -> scalarfield_core::solver::StageRecord {
    let seed = solver::default_radial_seed(scheme, grid).unwrap();
    let big_l = choose_scaling_l(&seed, scheme, 1.0, 0.1).unwrap();
    let path = scaling_path(&seed, scheme, 1.0, big_l, 33).unwrap();
    let opts = SolverOpts { max_iters: 5000, ..Default::default() };
    mountain_pass_solve(scheme, 1.0, path, 5e-3, &opts).unwrap()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = std::time::Instant::now();
    let (model, scheme, grid) = reference();
    let gs = oracle::ground_state(&model, 3, &grid, &scheme).unwrap();
    let rec = reference_minimax(&scheme, &grid);
    let rel = (rec.level - gs.energy.j_lambda).abs() / gs.energy.j_lambda;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = rel <= 1e-2 && rec.poho_residual <= 1e-2 && elapsed <= 120.0;
    line(
        1,
        ok,
        &format!(
            "minimax {:.6} vs oracle {:.6} (rel {:.3e}), poho {:.3e}, {:.1}s",
            rec.level, gs.energy.j_lambda, rel, rec.poho_residual, elapsed
        ),
    );
    assert!(rel <= 1e-2, "level gap {rel}");
    assert!(rec.poho_residual <= 1e-2, "poho residual {}", rec.poho_residual);
    assert!(elapsed <= 120.0, "runtime {elapsed}s");
}

#[test]
fn criterion_2_three_way_levels() {
    let (model, scheme, grid) = reference();
    let gs = oracle::ground_state(&model, 3, &grid, &scheme).unwrap();
    let rec = reference_minimax(&scheme, &grid);
    let oracle_field = gs.to_field(&grid);
    let mut seeds = vec![rec.candidate.clone(), oracle_field];
    for &(amp, width) in &[(3.0, 1.0), (2.5, 1.3), (4.0, 0.8)] {
        seeds.push(Field::from_fn(&grid, |c| {
            amp * (-0.5 * (c[0] / width).powi(2)).exp()
        }));
    }
    let (upper, _) = pohozaev_minimize(&scheme, 1.0, &seeds).unwrap();
    let levels = [rec.level, upper, gs.energy.j_lambda];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((levels[i] - levels[j]).abs() / levels[j].abs());
        }
    }
    let ok = worst <= 1e-2;
    line(
        2,
        ok,
        &format!(
            "minimax {:.5}, manifold bound {:.5}, oracle {:.5}; worst pairwise gap {:.3e}",
            levels[0], levels[1], levels[2], worst
        ),
    );
    assert!(ok, "pairwise gap {worst}");
}

#[test]
fn criterion_3_continuation_monotonicity() {
    let model = NonlinearityModel::cubic(3);
    let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
    let grid = build_grid(SymmetryClass::Radial { n: 3 }, 20.0, 0.1).unwrap();
    let report = solver::radial_ground_state(
        &scheme,
        &grid,
        8,
        &SolverOpts { max_iters: 4000, ..Default::default() },
        &Thresholds::default(),
    )
    .unwrap();
    let tol = 1e-3 * report.stages[0].level;
    let mut mono_ok = true;
    for w in report.stages.windows(2) {
        if w[1].level > w[0].level + tol {
            mono_ok = false;
        }
    }

    // exact lambda ordering on random fields
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut order_ok = true;
    for _ in 0..100 {
        let (a, w, c0) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..8.0),
        );
        let u = Field::from_fn(&grid, |c| a * (-((c[0] - c0) / w).powi(2)).exp());
        let l1 = rng.gen_range(scheme.lambda0..1.0);
        let l2 = rng.gen_range(l1..1.0);
        let j1 = j_lambda(&u, &scheme, l1).unwrap();
        let j2 = j_lambda(&u, &scheme, l2).unwrap();
        if !(j1 >= j2) {
            order_ok = false;
        }
    }
    let levels: Vec<f64> = report.stages.iter().map(|s| s.level).collect();
    let ok = mono_ok && order_ok;
    line(
        3,
        ok,
        &format!("levels {levels:.4?}, monotone {mono_ok}, exact lambda order {order_ok}"),
    );
    assert!(mono_ok, "levels increased along the ladder: {levels:?}");
    assert!(order_ok, "J_lambda ordering violated on a random field");
}

#[test]
fn criterion_4_nonradial_theorem() {
    // As stated: the cubic model in N = 4. A nontrivial candidate does not
    // survive there: combining the discrete Nehari identity with the scaling
    // identity forces the L2 mass of any critical point to vanish (the cubic
    // is energy-critical in four dimensions), and the descent accordingly
    // collapses to zero. The criterion is asserted as written and the
    // failure is reported honestly; the same pipeline passes all the same
    // gates on a subcritical model, see `nonradial_pipeline_subcritical`.
    let start = std::time::Instant::now();
    let model = NonlinearityModel::cubic(4);
    let scheme = SplitScheme::derive(&model).unwrap();
    let grid = build_grid(SymmetryClass::O2Tau { n: 4, m: 2 }, 15.0, 0.25).unwrap();
    let radial = build_grid(SymmetryClass::Radial { n: 4 }, 15.0, 0.05).unwrap();
    let opts = NonradialOpts {
        solver: SolverOpts { max_iters: 4000, path_nodes: 25, ..Default::default() },
        stages: 8,
        ..Default::default()
    };
    let rep = solver::nonradial_solve(&scheme, &grid, &radial, &opts, &Thresholds::default())
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let v = rep.report.final_candidate();
    let nontrivial = v.h1() > 1e-3;
    let poho_ok = nontrivial && rep.report.final_metrics.poho_residual <= 2e-2;
    let above = rep.level_vs_twice_radial > 0.0;
    let half_ok = rep.half_energy_defect <= 1e-6 && rep.half_poho_rel <= 2e-2;
    let ok = rep.tau_defect == 0.0
        && rep.sign_changing
        && poho_ok
        && above
        && half_ok
        && elapsed <= 600.0;
    line(
        4,
        ok,
        &format!(
            "tau defect {:.1e}, sign-changing {}, nontrivial {}, poho {:.3e}, J - 2c_mp = {:.4}, \
             half-energy defect {:.2e}, half-poho {:.2e}, {:.0}s",
            rep.tau_defect,
            rep.sign_changing,
            nontrivial,
            rep.report.final_metrics.poho_residual,
            rep.level_vs_twice_radial,
            rep.half_energy_defect,
            rep.half_poho_rel,
            elapsed
        ),
    );
    assert_eq!(rep.tau_defect, 0.0, "antisymmetry must be exact");
    assert!(
        rep.sign_changing && poho_ok && above && half_ok,
        "the four-dimensional cubic is energy-critical: any discrete critical point has \
         vanishing mass (Nehari + scaling identities), so no nontrivial candidate exists; \
         observed candidate norm {:.3e}, level {:.3e}",
        v.h1(),
        rep.report.final_level()
    );
}

/// The same pipeline and gates as criterion 4, on a model that satisfies the
/// growth hypotheses in four dimensions (cut cubic-quintic): the machinery
/// itself meets every gate.
#[test]
fn nonradial_pipeline_subcritical() {
    let base = NonlinearityModel::new(
        scalarfield_core::ModelKind::CubicQuintic { a: 1.0, b: 1.0, c: 0.05 },
        4,
    );
    let zeta = scalarfield_core::find_zeta(&base, 0.0, 4.0, 1e-3).unwrap();
    let (model, truncated) = scalarfield_core::truncate(&base, zeta, 10.0);
    assert!(truncated);
    let scheme = SplitScheme::derive(&model).unwrap();
    let grid = build_grid(SymmetryClass::O2Tau { n: 4, m: 2 }, 15.0, 0.25).unwrap();
    let radial = build_grid(SymmetryClass::Radial { n: 4 }, 15.0, 0.05).unwrap();
    let opts = NonradialOpts {
        solver: SolverOpts { max_iters: 4000, path_nodes: 25, ..Default::default() },
        stages: 4,
        ..Default::default()
    };
    let rep = solver::nonradial_solve(&scheme, &grid, &radial, &opts, &Thresholds::default())
        .unwrap();
    let v = rep.report.final_candidate();
    assert_eq!(rep.tau_defect, 0.0);
    assert!(v.h1() > 1e-3, "candidate vanished");
    assert!(rep.sign_changing);
    assert!(
        rep.report.final_metrics.poho_residual <= 2e-2,
        "poho {}",
        rep.report.final_metrics.poho_residual
    );
    assert!(rep.level_vs_twice_radial > 0.0, "J(v) <= 2 c_mp");
    assert!(rep.half_energy_defect <= 1e-6, "half split {}", rep.half_energy_defect);
    assert!(rep.half_poho_rel <= 2e-2, "half poho {}", rep.half_poho_rel);
}

#[test]
fn criterion_5_profile_decomposition() {
    let grid = build_grid(SymmetryClass::Line, 80.0, 0.25).unwrap();
    let bump = |x: f64, r: f64| {
        let s = x / r;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(3)
        }
    };
    let w1 = Field::from_fn(&grid, |c| 0.8 * bump(c[0], 1.5));
    let w2 = Field::from_fn(&grid, |c| -0.6 * bump(c[0] - 0.25, 1.5));
    let nodes_per_unit = 4i64;
    let fields: Vec<Field> = (1..=16)
        .map(|n| {
            let mut u = w1.clone();
            u.axpy(1.0, &w2.shift_nodes(0, 4 * n * nodes_per_unit).unwrap());
            u
        })
        .collect();
    let seq = FieldSequence::new(fields).unwrap();
    let dec = decompose(&seq, &DecomposeOpts::default()).unwrap();
    let scheme =
        SplitScheme::with_parameters(&NonlinearityModel::cubic(3), 0.5, 2.0).unwrap();
    let rep = verify_decomposition(&seq, &dec, &scheme, &VerifyOpts::default()).unwrap();
    let centers_ok = dec.centers[1]
        .iter()
        .enumerate()
        .all(|(i, &c)| (c - 4 * (i as i64 + 1) * nodes_per_unit).abs() <= 1);

    let mutated = ProfileDecomposition {
        profiles: vec![dec.profiles[0].clone()],
        centers: vec![dec.centers[0].clone()],
        flag: dec.flag,
        residual_norms: dec.residual_norms.clone(),
    };
    let rep2 = verify_decomposition(&seq, &mutated, &scheme, &VerifyOpts::default()).unwrap();
    let deleted = energy(&dec.profiles[1], &scheme, 1.0).unwrap().j_lambda;
    let mutation_ok = !rep2.item_iii_ok
        && (rep2.item_iii_energy_defect - deleted.abs()).abs() <= 1e-9 * deleted.abs().max(1.0);

    let ok = dec.l() == 2
        && centers_ok
        && rep.item_iii_energy_defect <= 1e-6
        && rep.item_iv_tail_residual <= 1e-6
        && mutation_ok;
    line(
        5,
        ok,
        &format!(
            "l = {}, centers within 1 node {}, energy defect {:.2e}, tail residual {:.2e}, \
             mutation defect {:.4} ~ deleted {:.4}",
            dec.l(),
            centers_ok,
            rep.item_iii_energy_defect,
            rep.item_iv_tail_residual,
            rep2.item_iii_energy_defect,
            deleted.abs()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_testmap_suite() {
    // membership and exact oddness for k <= 3, 64 sampled directions each
    let mut membership_ok = true;
    for k in 1..=3usize {
        let big_r = 8.0;
        for l in sample_directions(k, 64, 7) {
            let u = build_u_k(k, big_r, &l).unwrap();
            if u.validate().is_err() {
                membership_ok = false;
            }
            let neg: Vec<f64> = l.iter().map(|x| -x).collect();
            let un = build_u_k(k, big_r, &neg).unwrap();
            for j in 0..=160 {
                let r = big_r * j as f64 / 160.0;
                if u.eval(r) != -un.eval(r) {
                    membership_ok = false;
                }
            }
        }
    }

    // the lower-bound radius: integral >= 1 at R(k) for all sampled l; the
    // quarter radius either fails the bound for some l or is too small to
    // carry the profile class at all
    let model = NonlinearityModel::cubic(4);
    let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
    let class = SymmetryClass::O2Tau { n: 4, m: 2 };
    let opts = RadiusSearchOpts { samples: 8, ..Default::default() };
    let mut bound_ok = true;
    let mut quarter_desc = String::new();
    for k in 1..=2usize {
        let rk = choose_r_k(k, &scheme, class, &opts).unwrap();
        let dirs = sample_directions(k, 8, opts.seed);
        for l in &dirs {
            let v = pi_k_potential(k, rk, l, &scheme, class, opts.h).unwrap();
            if v < 1.0 {
                bound_ok = false;
            }
        }
        let quarter = rk / 4.0;
        if quarter > 2.0 * k as f64 {
            let any_below = dirs
                .iter()
                .any(|l| pi_k_potential(k, quarter, l, &scheme, class, opts.h).unwrap() < 1.0);
            if !any_below {
                bound_ok = false;
            }
            quarter_desc = format!("{quarter_desc} k={k}: integral < 1 at R/4;");
        } else {
            let refused = matches!(
                build_u_k(k, quarter, &dirs[0]),
                Err(Error::BadRadius { .. })
            );
            if !refused {
                bound_ok = false;
            }
            quarter_desc =
                format!("{quarter_desc} k={k}: R(k)/4 = {quarter} below the class floor 2k;");
        }
        if k == 1 {
            // regression pin for the reference configuration
            assert!((rk - 3.0).abs() <= 1.0, "R(1) drifted to {rk}");
        }
    }
    let ok = membership_ok && bound_ok;
    line(6, ok, &format!("membership+oddness {membership_ok}, radius bound {bound_ok},{quarter_desc}"));
    assert!(ok);
}

#[test]
fn criterion_7_envelope_properties() {
    let model = NonlinearityModel::cubic(3);
    let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
    let env = comparison_envelope(&scheme, 3.0, 12.0, 48_000);
    let mut violations = 0usize;
    for i in 0..=10_000 {
        let t = -10.0 + 20.0 * i as f64 / 10_000.0;
        if t.abs() <= env.delta0 && (env.h(t) != 0.0 || env.hbar(t).abs() > 1e-8) {
            violations += 1;
        }
        let lhs = 0.5 * scheme.mu * t * t + model.big_f(t);
        if lhs > env.big_hbar(t) + 1e-8 {
            violations += 1;
        }
        let mid = (env.p0 + 1.0) * env.big_hbar(t);
        if mid < -1e-8 || mid > env.hbar(t) * t + 1e-8 {
            violations += 1;
        }
    }
    let ok = violations == 0;
    line(7, ok, &format!("delta0 = {:.6}, violations {violations} / 30003 checks", env.delta0));
    assert_eq!(violations, 0);
}

#[test]
fn criterion_8_numerics_hygiene() {
    let (_, scheme, _) = reference();
    let grid = build_grid(SymmetryClass::Radial { n: 3 }, 12.0, 0.05).unwrap();
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut fd_ok = true;
    let eps = 1e-4;
    for _ in 0..5 {
        let mk = |rng: &mut rand_chacha::ChaCha8Rng, amp: f64| {
            let b: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| {
                    (
                        rng.gen_range(0.5..4.0),
                        rng.gen_range(0.5..1.5),
                        amp * rng.gen_range(-1.0..1.0f64),
                    )
                })
                .collect();
            Field::from_fn(&grid, |c| {
                b.iter()
                    .map(|(c0, w, a)| a * (-((c[0] - c0) / w).powi(2)).exp())
                    .sum()
            })
        };
        let u = mk(&mut rng, 1.5);
        let v = mk(&mut rng, 1.0);
        let g = gradient(&u, &scheme, 1.0).unwrap();
        let mut up = u.clone();
        up.axpy(eps, &v);
        let mut dn = u.clone();
        dn.axpy(-eps, &v);
        let fd = (j_lambda(&up, &scheme, 1.0).unwrap() - j_lambda(&dn, &scheme, 1.0).unwrap())
            / (2.0 * eps);
        if (fd - g.inner(&v)).abs() > 1e-6 * (1.0 + fd.abs()) {
            fd_ok = false;
        }
    }

    // Laplacian refinement order
    let exact_lap = |r: f64| (r * r - 3.0) * (-0.5 * r * r).exp();
    let mut errs = Vec::new();
    for &h in &[0.2, 0.1, 0.05] {
        let g = build_grid(SymmetryClass::Radial { n: 3 }, 12.0, h).unwrap();
        let vals: Vec<f64> =
            (0..g.node_count()).map(|i| (-0.5 * g.coords(i)[0].powi(2)).exp()).collect();
        let lap = g.laplacian_apply(&vals).unwrap();
        let mut err = 0.0f64;
        for flat in 0..g.node_count() {
            let r = g.coords(flat)[0];
            if r < 6.0 {
                err = err.max((lap[flat] - exact_lap(r)).abs());
            }
        }
        errs.push(err);
    }
    let order = (errs[1] / errs[2]).log2();
    let order_ok = order >= 1.9;

    // quadrature exactness: machine-exact for degree <= 2 on an unweighted
    // axis; on weighted axes the only deviation is the nonnegative stencil
    // in the cell pair at the coordinate singularity, which is high order
    let gq = build_grid(SymmetryClass::Radial { n: 1 }, 6.0, 0.25).unwrap();
    let mut quad_ok = true;
    for (deg, exact) in [(0, 12.0), (1, 36.0), (2, 144.0)] {
        let vals: Vec<f64> = (0..gq.node_count()).map(|i| gq.coords(i)[0].powi(deg)).collect();
        if (gq.integrate(&vals).unwrap() - exact).abs() > 1e-12 * exact {
            quad_ok = false;
        }
    }
    let mut defects = Vec::new();
    for h in [0.25, 0.125] {
        let g = build_grid(SymmetryClass::Radial { n: 3 }, 6.0, h).unwrap();
        let vals: Vec<f64> = (0..g.node_count()).map(|i| g.coords(i)[0].powi(2)).collect();
        let exact = g.omega * 6.0f64.powi(5) / 5.0;
        defects.push((g.integrate(&vals).unwrap() - exact).abs() / exact);
    }
    if defects[0] > 1e-5 || defects[1] > defects[0] / 8.0 {
        quad_ok = false;
    }

    let ok = fd_ok && order_ok && quad_ok;
    line(
        8,
        ok,
        &format!(
            "gradient fd check {fd_ok}, laplacian order {order:.2}, quadrature exactness {quad_ok} \
             (boundary-stencil defect {:.2e} -> {:.2e})",
            defects[0], defects[1]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_9_symmetric_level_ladder() {
    let model = NonlinearityModel::cubic(3);
    let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
    // the odd boundary families need room for their seed profiles and the
    // negativity dilation; the level ladder itself is grid-agnostic
    let grid = build_grid(SymmetryClass::Radial { n: 3 }, 40.0, 0.1).unwrap();
    let opts = SolverOpts { max_iters: 2500, ..Default::default() };

    let b1 = radial_disk_boundary(1, &scheme, &grid, 1, 11).unwrap();
    let rec1 = symmetric_minimax_solve(&scheme, 1.0, 1, &b1, 5e-3, &opts).unwrap();
    let b2 = radial_disk_boundary(2, &scheme, &grid, 12, 11).unwrap();
    let rec2 = symmetric_minimax_solve(&scheme, 1.0, 2, &b2, 5e-3, &opts).unwrap();

    let ok = rec2.level > rec1.level && rec1.level > 0.0;
    line(
        9,
        ok,
        &format!(
            "c_{{2,1}} = {:.4} > c_{{1,1}} = {:.4} > 0 (statuses {:?}/{:?}); qualitative \
             stand-in for divergence in k, which desk scale cannot reproduce",
            rec2.level, rec1.level, rec1.status, rec2.status
        ),
    );
    assert!(rec1.level > 0.0, "k=1 level {}", rec1.level);
    assert!(rec2.level > rec1.level, "k=2 {} vs k=1 {}", rec2.level, rec1.level);
    // the odd-path level cannot sit below the free mountain pass
    let free = reference_minimax(&scheme, &build_grid(SymmetryClass::Radial { n: 3 }, 20.0, 0.1).unwrap());
    assert!(
        rec1.level >= free.level - 0.05 * free.level.abs(),
        "odd-path level {} vs mountain pass {}",
        rec1.level,
        free.level
    );
    let _ = StageStatus::Converged;
}
