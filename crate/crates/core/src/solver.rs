//! Minimax descent: mountain-pass paths, odd disk maps, lambda-continuation,
//! and the Pohozaev-manifold cross-check.
//!
//! The path solver repeatedly pulls down the energy-maximal node by projected
//! gradient descent with Armijo backtracking on the node and its neighbours,
//! re-parametrizing by arc length to keep the nodes spread. Continuation
//! warm-starts each stage from the previous candidate through its scaling
//! path. Odd disk maps store a fundamental half; the other half is implied by
//! negation, so oddness is exact at every iterate.

use crate::error::{Error, Result};
use crate::field::{Field, Half};
use crate::functional::{
    classify, energy, gradient, j_lambda, pohozaev_dilation, ClassifyMetrics, Thresholds,
};
use crate::grid::{GridRef, SymmetryClass};
use crate::nonlinearity::SplitScheme;
use crate::testmaps::{
    build_u_k, choose_r_k, choose_scaling_l, cutoff_chi, scaling_path, Path, RadiusSearchOpts,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Knobs for one descent stage.
#[derive(Debug, Clone)]
pub struct SolverOpts {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub path_nodes: usize,
    pub reparam_every: usize,
    pub seed: u64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self { grad_tol: 5e-3, max_iters: 5000, path_nodes: 33, reparam_every: 10, seed: 42 }
    }
}

/// How a stage ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Converged,
    IterationCap,
    NoDescent,
}

/// Outcome of one minimax stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub lambda: f64,
    pub level: f64,
    pub iterations: usize,
    pub grad_residual: f64,
    pub poho_residual: f64,
    pub status: StageStatus,
    #[serde(skip)]
    pub candidate: Field,
    #[serde(skip)]
    pub path: Option<Path>,
}

/// The lambda ladder with its per-stage tolerance schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationSchedule {
    pub lambdas: Vec<f64>,
    pub tolerances: Vec<f64>,
}

impl ContinuationSchedule {
    /// Geometric approach to 1 from lambda0 in `stages` steps, the tolerance
    /// ladder tightening toward `final_tol`.
    pub fn geometric(lambda0: f64, stages: usize, final_tol: f64) -> Self {
        assert!(stages >= 1);
        let mut lambdas = Vec::with_capacity(stages);
        for i in 0..stages - 1 {
            lambdas.push(1.0 - (1.0 - lambda0) * 0.5f64.powi(i as i32));
        }
        lambdas.push(1.0);
        let tolerances = (0..stages)
            .map(|i| {
                if stages == 1 {
                    final_tol
                } else {
                    final_tol * 10f64.powf((stages - 1 - i) as f64 / (stages - 1) as f64)
                }
            })
            .collect();
        Self { lambdas, tolerances }
    }

    pub fn single(lambda: f64, tol: f64) -> Self {
        Self { lambdas: vec![lambda], tolerances: vec![tol] }
    }
}

/// Full continuation outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub stages: Vec<StageRecord>,
    pub monotone_ok: bool,
    pub max_monotonicity_violation: f64,
    pub final_metrics: ClassifyMetrics,
    pub floor_r0: f64,
    pub floor_rho0: f64,
    pub wall_time_ms: u128,
}

impl SolveReport {
    pub fn final_candidate(&self) -> &Field {
        &self.stages.last().expect("at least one stage").candidate
    }

    pub fn final_level(&self) -> f64 {
        self.stages.last().expect("at least one stage").level
    }
}

fn project(field: &mut Field) {
    field.enforce_dirichlet();
    if field.grid().class.has_tau_pair() {
        *field = field.project_tau().expect("tau grid");
    }
}

/// One Armijo-backtracked descent step on a single node. The move length is
/// capped by `max_move` so a node cannot hop across the energy ridge between
/// its neighbours (the functional is unbounded below past the barrier), and
/// the energy-maximal node descends only transversally to the supplied path
/// tangent, which pins it to the ridge instead of letting it slide off.
/// Returns the accepted step size, or None when no decrease was possible.
fn descend_node(
    u: &mut Field,
    scheme: &SplitScheme,
    lambda: f64,
    step: &mut f64,
    max_move: f64,
    tangent: Option<&Field>,
) -> Result<Option<f64>> {
    let g = gradient(u, scheme, lambda)?;
    let mut d = sobolev_direction(&g, 2.0 * scheme.mu, 1e-6, 100);
    if let Some(tau) = tangent {
        let t2 = tau.inner(tau);
        if t2 > 0.0 {
            d.axpy(-d.inner(tau) / t2, tau);
        }
    }
    let slope = g.inner(&d);
    if slope <= 0.0 {
        return Ok(None);
    }
    let dn = d.l2();
    let j0 = j_lambda(u, scheme, lambda)?;
    let mut s = (*step).min(max_move.max(1e-300) / dn.max(1e-300));
    for _ in 0..40 {
        let mut trial = u.clone();
        trial.axpy(-s, &d);
        project(&mut trial);
        let jt = j_lambda(&trial, scheme, lambda)?;
        if jt <= j0 - 1e-4 * s * slope {
            *u = trial;
            *step = (s * 1.5).min(4.0);
            return Ok(Some(s));
        }
        s *= 0.5;
    }
    Ok(None)
}

fn grad_residual(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<f64> {
    let g = gradient(u, scheme, lambda)?;
    Ok(g.l2() / u.l2().max(1e-300))
}

/// Sobolev gradient: solve `(-Delta_w + c) d = g` by conjugate gradients in
/// the weighted inner product. Preconditioning the descent direction with
/// the inverse linearized operator removes the grid-scale stiffness of the
/// plain flow.
fn sobolev_direction(g: &Field, c: f64, rel_tol: f64, max_cg: usize) -> Field {
    let grid = g.grid().clone();
    let apply = |x: &Field| -> Field {
        let mut out = grid.neg_laplacian_weighted(x.values());
        for (flat, v) in out.iter_mut().enumerate() {
            if !grid.is_dirichlet(flat) {
                *v += c * x.values()[flat];
            }
        }
        Field::from_values(&grid, out).expect("shape preserved")
    };
    let mut d = Field::zeros(&grid);
    let mut r = g.clone();
    let mut p = r.clone();
    let mut rs = r.inner(&r);
    let target = rel_tol * rel_tol * rs.max(1e-300);
    for _ in 0..max_cg {
        if rs <= target {
            break;
        }
        let ap = apply(&p);
        let denom = p.inner(&ap);
        if denom <= 0.0 {
            break;
        }
        let alpha = rs / denom;
        d.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rs_new = r.inner(&r);
        let beta = rs_new / rs;
        rs = rs_new;
        let mut p_next = r.clone();
        p_next.axpy(beta, &p);
        p = p_next;
    }
    d
}

/// Locally convergent finish at the saddle: minimize the preconditioned
/// residual norm `R(u) = <F, M^-1 F>/2` with `F` the weighted gradient field
/// and `M = -Delta_w + 2 mu`. Near a nondegenerate critical point R is
/// locally convex, so plain descent closes the last gap the constrained flow
/// cannot.
fn residual_descent(
    seed: &Field,
    scheme: &SplitScheme,
    lambda: f64,
    grad_tol: f64,
    max_iters: usize,
) -> Result<(Field, f64)> {
    let c = 2.0 * scheme.mu;
    let grid = seed.grid().clone();
    let jac_apply = |u: &Field, v: &Field| -> Result<Field> {
        let mut out = grid.neg_laplacian_weighted(v.values());
        for (flat, o) in out.iter_mut().enumerate() {
            if !grid.is_dirichlet(flat) {
                *o -= scheme.f_lambda_prime(lambda, u.values()[flat]) * v.values()[flat];
            }
        }
        let f = Field::from_values(&grid, out)?;
        if grid.class.has_tau_pair() {
            f.project_tau()
        } else {
            Ok(f)
        }
    };
    let r_of = |f: &Field| -> (f64, Field) {
        let z = sobolev_direction(f, c, 1e-6, 100);
        (0.5 * f.inner(&z), z)
    };
    let mut u = seed.clone();
    let mut best_res = grad_residual(&u, scheme, lambda)?;
    let mut best_u = u.clone();
    let mut step = 1.0f64;
    for _ in 0..max_iters {
        let f = gradient(&u, scheme, lambda)?;
        let res = f.l2() / u.l2().max(1e-300);
        if res < best_res {
            best_res = res;
            best_u = u.clone();
        }
        if res < grad_tol {
            break;
        }
        let (r0, z) = r_of(&f);
        let dr = jac_apply(&u, &z)?;
        let slope = dr.inner(&dr);
        if slope <= 0.0 || !slope.is_finite() {
            break;
        }
        let mut s = step;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = u.clone();
            trial.axpy(-s, &dr);
            project(&mut trial);
            let ft = gradient(&trial, scheme, lambda)?;
            let (rt, _) = r_of(&ft);
            if rt <= r0 - 1e-4 * s * slope {
                u = trial;
                step = (s * 2.0).min(4.0);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((best_u, best_res))
}

/// One tangential Sobolev descent step along the scaling manifold, with
/// re-dilation when the constraint drifts. Returns whether a step was taken.
fn manifold_step(
    u: &mut Field,
    scheme: &SplitScheme,
    lambda: f64,
    step: &mut f64,
) -> Result<bool> {
    let n = u.grid().ambient_dim();
    let g = gradient(u, scheme, lambda)?;
    let dp = pohozaev_grad(u, scheme, lambda)?;
    let d_raw = sobolev_direction(&g, 2.0 * scheme.mu, 1e-6, 100);
    let dp_pre = sobolev_direction(&dp, 2.0 * scheme.mu, 1e-6, 100);
    let mut d = d_raw.clone();
    let denom = dp.inner(&dp_pre);
    if denom.abs() > 0.0 {
        d.axpy(-dp.inner(&d_raw) / denom, &dp_pre);
    }
    let slope = g.inner(&d);
    if slope <= 0.0 || !slope.is_finite() {
        return Ok(false);
    }
    let j0 = j_lambda(u, scheme, lambda)?;
    let mut s = *step;
    for _ in 0..40 {
        let mut trial = u.clone();
        trial.axpy(-s, &d);
        project(&mut trial);
        let jt = j_lambda(&trial, scheme, lambda)?;
        if jt <= j0 - 1e-4 * s * slope {
            *u = trial;
            *step = (s * 1.5).min(2.0);
            let e = energy(u, scheme, lambda)?;
            if e.p_lambda.abs() > 1e-3 * e.kinetic.max(1e-300) {
                if let Some(t) = pohozaev_dilation(&e, n) {
                    *u = u.dilate(t);
                    project(u);
                }
            }
            return Ok(true);
        }
        s *= 0.5;
    }
    Ok(false)
}

/// Weighted representation of the scaling-functional gradient,
/// `(N-2) * (-Delta_w u) - N * f^lambda(u)`.
fn pohozaev_grad(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<Field> {
    let grid = u.grid();
    let nf = grid.ambient_dim() as f64;
    let mut out = grid.neg_laplacian_weighted(u.values());
    for (flat, g) in out.iter_mut().enumerate() {
        if !grid.is_dirichlet(flat) {
            *g = (nf - 2.0) * *g - nf * scheme.f_lambda_raw(lambda, u.values()[flat]);
        }
    }
    let f = Field::from_values(grid, out)?;
    if grid.class.has_tau_pair() {
        f.project_tau()
    } else {
        Ok(f)
    }
}

/// Descend the energy on the scaling manifold: gradient steps projected
/// tangentially to the constraint, with closed-form re-dilation whenever the
/// constraint drifts. On the manifold the minimax level is an infimum, so
/// plain descent converges; the constraint multiplier vanishes at genuine
/// critical points, which the full-gradient stopping test certifies.
fn manifold_polish(
    seed: &Field,
    scheme: &SplitScheme,
    lambda: f64,
    grad_tol: f64,
    max_iters: usize,
) -> Result<(Field, usize, f64)> {
    let n = seed.grid().ambient_dim();
    let mut u = seed.clone();
    if let Some(t) = pohozaev_dilation(&energy(&u, scheme, lambda)?, n) {
        if (t - 1.0).abs() > 1e-12 {
            u = u.dilate(t);
            project(&mut u);
        }
    }
    let mut step = 0.05f64;
    let mut residual = f64::INFINITY;
    let mut best: Option<(f64, Field)> = None;
    let mut iters_used = max_iters;
    let mut last_mark = (0usize, f64::INFINITY);
    for iter in 0..max_iters {
        residual = grad_residual(&u, scheme, lambda)?;
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, u.clone()));
        }
        if residual < grad_tol {
            iters_used = iter;
            break;
        }
        // hand over to the residual stage once the constrained flow stalls
        if residual < 0.99 * last_mark.1 {
            last_mark = (iter, residual);
        } else if iter - last_mark.0 > 60 {
            iters_used = iter;
            break;
        }
        let g = gradient(&u, scheme, lambda)?;
        let dp = pohozaev_grad(&u, scheme, lambda)?;
        let d_raw = sobolev_direction(&g, 2.0 * scheme.mu, 1e-6, 100);
        let dp_pre = sobolev_direction(&dp, 2.0 * scheme.mu, 1e-6, 100);
        let mut d = d_raw.clone();
        let denom = dp.inner(&dp_pre);
        if denom.abs() > 0.0 {
            d.axpy(-dp.inner(&d_raw) / denom, &dp_pre);
        }
        let slope = g.inner(&d);
        if slope <= 0.0 {
            break;
        }
        let j0 = j_lambda(&u, scheme, lambda)?;
        let mut s = step;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.axpy(-s, &d);
            project(&mut trial);
            let jt = j_lambda(&trial, scheme, lambda)?;
            if jt <= j0 - 1e-4 * s * slope {
                u = trial;
                step = (s * 1.5).min(2.0);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
        let e = energy(&u, scheme, lambda)?;
        if e.p_lambda.abs() > 1e-3 * e.kinetic.max(1e-300) {
            if let Some(t) = pohozaev_dilation(&e, n) {
                u = u.dilate(t);
                project(&mut u);
            }
        }
    }
    // the discrete critical point does not sit exactly on the discrete
    // scaling manifold; a final dilation sweep minimizing the gradient
    // residual itself removes the leftover normal offset
    let (mut best_res, mut best_u) = best.unwrap_or((residual, u));
    if best_res >= grad_tol {
        let (u2, r2) = residual_descent(&best_u, scheme, lambda, grad_tol, 400)?;
        if r2 < best_res {
            best_res = r2;
            best_u = u2;
        }
    }
    for &span in &[0.02f64, 0.005] {
        let mut improved = None;
        for j in -8i32..=8 {
            let t = 1.0 + span * j as f64 / 8.0;
            if t <= 0.0 || j == 0 {
                continue;
            }
            let mut trial = best_u.dilate(t);
            project(&mut trial);
            let r = grad_residual(&trial, scheme, lambda)?;
            if r < best_res {
                best_res = r;
                improved = Some(trial);
            }
        }
        if let Some(t) = improved {
            best_u = t;
        }
    }
    Ok((best_u, iters_used, best_res))
}

/// Arc-length re-parametrization in the weighted L2 metric, endpoints fixed.
fn reparametrize(path: &mut Path) {
    let n = path.nodes.len();
    if n < 3 {
        return;
    }
    let mut cum = vec![0.0f64];
    for w in path.nodes.windows(2) {
        let mut diff = w[1].clone();
        diff.axpy(-1.0, &w[0]);
        cum.push(cum.last().unwrap() + diff.l2());
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return;
    }
    let mut out = Vec::with_capacity(n);
    out.push(path.nodes[0].clone());
    let mut seg = 0usize;
    for j in 1..n - 1 {
        let target = total * j as f64 / (n - 1) as f64;
        while seg + 2 < n && cum[seg + 1] < target {
            seg += 1;
        }
        let len = (cum[seg + 1] - cum[seg]).max(1e-300);
        let w = (target - cum[seg]) / len;
        let mut node = path.nodes[seg].lerp(&path.nodes[seg + 1], w.clamp(0.0, 1.0));
        project(&mut node);
        out.push(node);
    }
    out.push(path.nodes[n - 1].clone());
    path.nodes = out;
}

/// Deform a discrete admissible path until the energy-maximal node is an
/// approximate critical point.
pub fn mountain_pass_solve(
    scheme: &SplitScheme,
    lambda: f64,
    mut path: Path,
    grad_tol: f64,
    opts: &SolverOpts,
) -> Result<StageRecord> {
    let n = path.nodes.len();
    if n < 3 {
        return Err(Error::Config("path needs at least 3 nodes".into()));
    }
    let end_energy = j_lambda(&path.nodes[n - 1], scheme, lambda)?;
    if end_energy >= 0.0 {
        return Err(Error::BrokenPath);
    }
    let mut energies: Vec<f64> = path
        .nodes
        .iter()
        .map(|u| j_lambda(u, scheme, lambda))
        .collect::<Result<_>>()?;
    let mut steps = vec![0.1f64; n];
    let mut status = StageStatus::IterationCap;
    let path_budget = (opts.max_iters / 4).clamp(100.min(opts.max_iters), 600);
    let mut iterations = path_budget;
    let mut residual = f64::INFINITY;
    let mut level_trace: Vec<f64> = Vec::new();
    // nodes below the endpoint energy have already connected across the
    // barrier; descending them further only chases the functional to -inf
    let floor = end_energy;

    for iter in 0..path_budget {
        // the polygonal path can hide its ridge crossing between nodes:
        // probe segment midpoints and pull a node onto any hotter midpoint
        let mut hot_seg = None;
        let mut hot_energy = f64::NEG_INFINITY;
        for j in 0..n - 1 {
            let mut mid = path.nodes[j].lerp(&path.nodes[j + 1], 0.5);
            project(&mut mid);
            let jm = j_lambda(&mid, scheme, lambda)?;
            if jm > hot_energy {
                hot_energy = jm;
                hot_seg = Some((j, mid));
            }
        }
        let node_max = (1..n - 1)
            .map(|j| energies[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some((j, mid)) = hot_seg {
            if hot_energy > node_max {
                let target = if j == 0 {
                    j + 1
                } else if j + 1 == n - 1 {
                    j
                } else if energies[j] <= energies[j + 1] {
                    j
                } else {
                    j + 1
                };
                path.nodes[target] = mid;
                energies[target] = hot_energy;
            }
        }
        let m = (1..n - 1)
            .max_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap())
            .unwrap();
        residual = grad_residual(&path.nodes[m], scheme, lambda)?;
        if residual < grad_tol {
            status = StageStatus::Converged;
            iterations = iter;
            break;
        }
        let arc: f64 = path
            .nodes
            .windows(2)
            .map(|w| {
                let mut d = w[1].clone();
                d.axpy(-1.0, &w[0]);
                d.l2()
            })
            .sum();
        let cap = 0.5 * arc / (n - 1) as f64;
        let mut any = false;
        for j in [m.saturating_sub(1), m, m + 1] {
            if j == 0 || j >= n - 1 {
                continue;
            }
            if j != m && energies[j] <= floor {
                continue;
            }
            // every touched node descends transversally to its local
            // tangent: full-gradient steps on the climbing node's
            // neighbours dig a cliff beside the ridge and break the
            // polygonal barrier
            let tangent = {
                let mut tau = path.nodes[j + 1].clone();
                tau.axpy(-1.0, &path.nodes[j - 1]);
                Some(tau)
            };
            if descend_node(
                &mut path.nodes[j],
                scheme,
                lambda,
                &mut steps[j],
                cap,
                tangent.as_ref(),
            )?
            .is_some()
            {
                energies[j] = j_lambda(&path.nodes[j], scheme, lambda)?;
                any = true;
            }
        }
        if !any {
            status = StageStatus::NoDescent;
            iterations = iter;
            break;
        }
        if (iter + 1) % opts.reparam_every == 0 {
            reparametrize(&mut path);
            for (j, u) in path.nodes.iter().enumerate() {
                energies[j] = j_lambda(u, scheme, lambda)?;
            }
        }
        let current_max = (1..n - 1)
            .map(|j| energies[j])
            .fold(f64::NEG_INFINITY, f64::max);
        level_trace.push(current_max);
        if iter >= 100 {
            let recent = &level_trace[iter - 50..];
            let spread = recent.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - recent.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            if spread < 1e-3 * current_max.abs().max(1e-12) {
                iterations = iter + 1;
                break;
            }
        }
    }

    let m = (1..n - 1)
        .max_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap())
        .unwrap();
    let mut candidate = path.nodes[m].clone();
    let mut total_iters = iterations;
    if status != StageStatus::Converged {
        // ridge tracking has localized the saddle; finish by constrained
        // descent on the scaling manifold, where the level is an infimum
        let budget = opts.max_iters.saturating_sub(iterations).max(100);
        match manifold_polish(&candidate, scheme, lambda, grad_tol, budget) {
            Ok((polished, extra, res)) => {
                let jp = j_lambda(&polished, scheme, lambda)?;
                if jp.is_finite() && jp > 0.0 {
                    candidate = polished;
                    path.nodes[m] = candidate.clone();
                    energies[m] = jp;
                    residual = res;
                    total_iters = iterations + extra;
                    if res < grad_tol {
                        status = StageStatus::Converged;
                    }
                }
            }
            Err(_) => {}
        }
    }
    if status == StageStatus::Converged {
        // replace the deformed path by the optimal scaling path through the
        // candidate: single interior maximum at the candidate by construction
        if let Ok(opt) = warm_start_path(&candidate, scheme, lambda, n, 1e-2) {
            path = opt;
            let m_new = path
                .nodes
                .iter()
                .enumerate()
                .map(|(j, u)| (j, j_lambda(u, scheme, lambda).unwrap_or(f64::NEG_INFINITY)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(j, _)| j)
                .unwrap_or(n / 2);
            if m_new > 0 && m_new < path.nodes.len() - 1 {
                path.nodes[m_new] = candidate.clone();
            }
        }
    }
    let e = energy(&candidate, scheme, lambda)?;
    Ok(StageRecord {
        lambda,
        level: j_lambda(&candidate, scheme, lambda)?,
        iterations: total_iters,
        grad_residual: residual.min(grad_residual(&candidate, scheme, lambda)?),
        poho_residual: e.p_lambda.abs() / e.kinetic.max(1e-300),
        status,
        candidate,
        path: Some(path),
    })
}

/// Rebuild an admissible path at a new lambda through a candidate, dilating
/// it onto the Pohozaev manifold first.
pub fn warm_start_path(
    candidate: &Field,
    scheme: &SplitScheme,
    lambda: f64,
    n_nodes: usize,
    margin: f64,
) -> Result<Path> {
    let e = energy(candidate, scheme, lambda)?;
    let n = candidate.grid().ambient_dim();
    let t = pohozaev_dilation(&e, n).ok_or(Error::BadBase(e.lambda * e.potential_f1 - e.potential_f2))?;
    let mut w = candidate.dilate(t);
    project(&mut w);
    let big_l = choose_scaling_l(&w, scheme, lambda, margin)?;
    let mut path = scaling_path(&w, scheme, lambda, big_l, n_nodes)?;
    for node in &mut path.nodes {
        project(node);
    }
    Ok(path)
}

/// Sampled surrogate for the uniform mountain-pass floor: sweep spheres of
/// random smooth fields and report the radius with the best worst-case
/// energy. A heuristic diagnostic, recorded but never used as a proof.
pub fn estimate_floor(
    scheme: &SplitScheme,
    grid: &GridRef,
    seed: u64,
    samples_per_radius: usize,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_inf = grid.axes[0].r_inf();
    let mut best = (0.0f64, f64::NEG_INFINITY);
    for i in 0..12 {
        let radius = 0.05 * (2.0f64).powf(i as f64 * 0.5);
        let mut worst = f64::INFINITY;
        for _ in 0..samples_per_radius {
            let centers: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.0..0.5 * r_inf),
                        rng.gen_range(0.5..2.0),
                        rng.gen_range(-1.0..1.0f64),
                    )
                })
                .collect();
            let mut u = Field::from_fn(grid, |c| {
                let r2: f64 = c.iter().map(|x| x * x).sum();
                let r = r2.sqrt();
                centers
                    .iter()
                    .map(|(c0, w, a)| a * (-((r - c0) / w).powi(2)).exp())
                    .sum()
            });
            project(&mut u);
            let norm = u.h1();
            if norm <= 0.0 {
                continue;
            }
            u.scale(radius / norm);
            if let Ok(j) = j_lambda(&u, scheme, 1.0) {
                worst = worst.min(j);
            }
        }
        if worst > best.1 {
            best = (radius, worst);
        }
    }
    (best.0, best.1.max(0.0))
}

/// Run the lambda ladder with warm starts, recording the level sequence and
/// its monotonicity defect.
pub fn continuation_solve(
    scheme: &SplitScheme,
    schedule: &ContinuationSchedule,
    seed_path: Path,
    opts: &SolverOpts,
    thresholds: &Thresholds,
) -> Result<SolveReport> {
    let start = std::time::Instant::now();
    let grid = seed_path.nodes[0].grid().clone();
    let (floor_r0, floor_rho0) = estimate_floor(scheme, &grid, opts.seed, 8);

    let mut stages: Vec<StageRecord> = Vec::new();
    let mut path = seed_path;
    let mut mono_violation = 0.0f64;
    let mut worklist: Vec<(f64, f64, bool)> = schedule
        .lambdas
        .iter()
        .zip(&schedule.tolerances)
        .map(|(&l, &t)| (l, t, false))
        .collect();
    worklist.reverse();

    while let Some((lambda, tol, refined)) = worklist.pop() {
        // a path built for another stage may not dip negative at this
        // lambda; rebuild through its barrier node when that happens
        let end_ok = j_lambda(path.nodes.last().unwrap(), scheme, lambda)? < 0.0;
        if !end_ok {
            let barrier = path
                .nodes
                .iter()
                .skip(1)
                .max_by(|a, b| {
                    j_lambda(a, scheme, lambda)
                        .unwrap_or(f64::NEG_INFINITY)
                        .partial_cmp(&j_lambda(b, scheme, lambda).unwrap_or(f64::NEG_INFINITY))
                        .unwrap()
                })
                .cloned()
                .expect("nonempty path");
            path = warm_start_path(&barrier, scheme, lambda, opts.path_nodes, 1e-2)?;
        }
        let record = mountain_pass_solve(scheme, lambda, path.clone(), tol, opts)?;
        if record.status != StageStatus::Converged && !refined {
            // isolated difficult lambda: refine the ladder around it once
            if let Some(prev) = stages.last().map(|s| s.lambda) {
                let mid = 0.5 * (prev + lambda);
                if (mid - lambda).abs() > 1e-9 && (mid - prev).abs() > 1e-9 {
                    worklist.push((lambda, tol, true));
                    worklist.push((mid, tol, true));
                    continue;
                }
            }
        }
        if let Some(prev) = stages.last() {
            let rise = record.level - prev.level;
            mono_violation = mono_violation.max(rise);
        }
        match warm_start_path(&record.candidate, scheme, lambda, opts.path_nodes, floor_rho0.max(1e-3)) {
            Ok(p) => path = p,
            Err(_) => path = record.path.clone().expect("solver keeps the path"),
        }
        stages.push(record);
    }

    let tol0 = 1e-3 * stages.first().map(|s| s.level).unwrap_or(1.0).abs();
    let monotone_ok = mono_violation <= tol0.max(1e-12);
    let last = stages.last().expect("at least one stage");
    let final_metrics = classify(&last.candidate, scheme, last.lambda, thresholds)?;
    Ok(SolveReport {
        stages,
        monotone_ok,
        max_monotonicity_violation: mono_violation,
        final_metrics,
        floor_r0,
        floor_rho0,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Dilation factors along one boundary ray, half of them resolving the
/// ray's energy peak (the closed-form scaling maximum), the rest reaching
/// the boundary image.
fn ray_dilations(b: &Field, scheme: &SplitScheme, lambda: f64, count: usize) -> Result<Vec<f64>> {
    let e = energy(b, scheme, lambda)?;
    let n = b.grid().ambient_dim();
    let t_star = pohozaev_dilation(&e, n).unwrap_or(0.5).min(0.9);
    let split = (2.0 * t_star).min(0.75);
    let inner = count / 2;
    let mut out = Vec::with_capacity(count);
    for j in 1..=inner {
        out.push(split * j as f64 / inner as f64);
    }
    for j in 1..=count - inner {
        out.push(split + (1.0 - split) * j as f64 / (count - inner) as f64);
    }
    Ok(out)
}

/// Symmetric minimax stage: k = 1 descends an odd path with a fixed negative
/// boundary image; k = 2 descends an odd loop of scaling rays, the stored
/// half of the disk map, with the other half implied by negation.
pub fn symmetric_minimax_solve(
    scheme: &SplitScheme,
    lambda: f64,
    k: usize,
    boundary: &[Field],
    grad_tol: f64,
    opts: &SolverOpts,
) -> Result<StageRecord> {
    match k {
        1 => {
            let grid = boundary[0].grid().clone();
            let n = opts.path_nodes;
            let end = boundary[0].clone();
            // fill the odd path with the dilation ray through the boundary
            // image, nodes concentrated around the ray's energy peak
            let mut nodes = Vec::with_capacity(n);
            nodes.push(Field::zeros(&grid));
            for &rho in &ray_dilations(&end, scheme, lambda, n - 1)? {
                let mut f = end.dilate(rho);
                project(&mut f);
                nodes.push(f);
            }
            nodes[n - 1] = end.clone();
            mountain_pass_solve(scheme, lambda, Path { nodes }, grad_tol, opts)
        }
        2 => disk_solve(scheme, lambda, boundary, grad_tol, opts),
        _ => Err(Error::UnsupportedK(k)),
    }
}

/// Symmetric minimax for k = 2: an odd loop of base fields held on the
/// scaling manifold, the implied disk being the union of their scaling rays.
/// On the manifold the norm is bounded below, so the loop cannot slip
/// through zero the way a polygonal disk can (linear interpolation between
/// nearly antipodal ridge fields passes through low-energy states and
/// collapses the sampled minimax to the first level).
fn disk_solve(
    scheme: &SplitScheme,
    lambda: f64,
    boundary: &[Field],
    grad_tol: f64,
    opts: &SolverOpts,
) -> Result<StageRecord> {
    let n_theta = boundary.len();
    let n = boundary[0].grid().ambient_dim();
    let to_manifold = |f: &Field| -> Result<Option<Field>> {
        let e = energy(f, scheme, lambda)?;
        match pohozaev_dilation(&e, n) {
            Some(t) => {
                let mut v = f.dilate(t);
                project(&mut v);
                Ok(Some(v))
            }
            None => Ok(None),
        }
    };
    let mut loop_fields: Vec<Field> = Vec::with_capacity(n_theta);
    for b in boundary {
        let jf = j_lambda(b, scheme, lambda)?;
        if jf >= 0.0 {
            return Err(Error::BadEndpoint(jf));
        }
        loop_fields.push(
            to_manifold(b)?.ok_or(Error::BadBase(0.0))?,
        );
    }
    let wrap = |fields: &[Field], j: i64| -> Field {
        let m = n_theta as i64;
        let mut idx = j.rem_euclid(2 * m);
        let mut flip = false;
        if idx >= m {
            idx -= m;
            flip = true;
        }
        let mut f = fields[idx as usize].clone();
        if flip {
            f.scale(-1.0);
        }
        f
    };

    let mut energies: Vec<f64> = loop_fields
        .iter()
        .map(|u| j_lambda(u, scheme, lambda))
        .collect::<Result<_>>()?;
    let mut steps = vec![0.05f64; n_theta];
    let mut status = StageStatus::IterationCap;
    let mut iterations = opts.max_iters;
    let mut residual = f64::INFINITY;

    for iter in 0..opts.max_iters {
        // angular midpoint watch, on the manifold; throttled with a margin
        // so the replacement and the descent do not cycle against each other
        let node_max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let watch = iter % 3 == 0;
        let mut hot: Option<(usize, Field, f64, bool)> = None;
        for j in 0..if watch { n_theta } else { 0 } {
            let here = &loop_fields[j];
            let next = wrap(&loop_fields, j as i64 + 1);
            let mid_raw = here.lerp(&next, 0.5);
            if let Some(mid) = to_manifold(&mid_raw)? {
                let jm = j_lambda(&mid, scheme, lambda)?;
                if jm > node_max * (1.0 + 1e-3) + 1e-9
                    && hot.as_ref().map_or(true, |h| jm > h.2)
                {
                    let jj = (j + 1) % n_theta;
                    let seam = j + 1 == n_theta;
                    if energies[j] <= energies[jj] {
                        hot = Some((j, mid, jm, false));
                    } else {
                        hot = Some((jj, mid, jm, seam));
                    }
                }
            }
        }
        if let Some((target, mid, jm, flip)) = hot {
            let mut f = mid;
            if flip {
                f.scale(-1.0);
            }
            loop_fields[target] = f;
            energies[target] = jm;
        }

        let m = (0..n_theta)
            .max_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap())
            .unwrap();
        residual = grad_residual(&loop_fields[m], scheme, lambda)?;
        if residual < grad_tol {
            status = StageStatus::Converged;
            iterations = iter;
            break;
        }
        let mut any = false;
        for off in [-1i64, 0, 1] {
            let t = (m as i64 + off).rem_euclid(n_theta as i64) as usize;
            let flip = (m as i64 + off) != t as i64 && off != 0 && {
                // crossing the seam lands on the negated representative
                let raw = m as i64 + off;
                raw < 0 || raw >= n_theta as i64
            };
            let mut field = loop_fields[t].clone();
            if flip {
                field.scale(-1.0);
            }
            if manifold_step(&mut field, scheme, lambda, &mut steps[t])? {
                if flip {
                    field.scale(-1.0);
                }
                loop_fields[t] = field;
                energies[t] = j_lambda(&loop_fields[t], scheme, lambda)?;
                any = true;
            }
        }
        if !any {
            status = StageStatus::NoDescent;
            iterations = iter;
            break;
        }
        if (iter + 1) % opts.reparam_every == 0 {
            // redistribute the loop by arc length around the odd seam so the
            // sign rotation cannot concentrate in one angular gap
            let anchor = (0..n_theta)
                .max_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap())
                .unwrap();
            let mut chain: Vec<Field> = Vec::with_capacity(n_theta + 1);
            for k in 0..n_theta {
                let idx = (anchor + k) % n_theta;
                let mut f = loop_fields[idx].clone();
                if anchor + k >= n_theta {
                    f.scale(-1.0);
                }
                chain.push(f);
            }
            let mut closing = loop_fields[anchor].clone();
            closing.scale(-1.0);
            chain.push(closing);
            let mut cum = vec![0.0f64];
            for w in chain.windows(2) {
                let mut d = w[1].clone();
                d.axpy(-1.0, &w[0]);
                cum.push(cum.last().unwrap() + d.l2());
            }
            let total = *cum.last().unwrap();
            if total > 0.0 {
                let mut fresh = loop_fields.clone();
                for k in 1..n_theta {
                    let target = total * k as f64 / n_theta as f64;
                    let mut seg = 0usize;
                    while seg + 2 < chain.len() && cum[seg + 1] < target {
                        seg += 1;
                    }
                    let len = (cum[seg + 1] - cum[seg]).max(1e-300);
                    let w = ((target - cum[seg]) / len).clamp(0.0, 1.0);
                    let mixed = chain[seg].lerp(&chain[seg + 1], w);
                    if let Some(on_manifold) = to_manifold(&mixed)? {
                        let idx = (anchor + k) % n_theta;
                        let mut f = on_manifold;
                        if anchor + k >= n_theta {
                            f.scale(-1.0);
                        }
                        fresh[idx] = f;
                    }
                }
                loop_fields = fresh;
                for (j, u) in loop_fields.iter().enumerate() {
                    energies[j] = j_lambda(u, scheme, lambda)?;
                }
            }
        }
    }

    let m = (0..n_theta)
        .max_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap())
        .unwrap();
    let candidate = loop_fields[m].clone();
    let e = energy(&candidate, scheme, lambda)?;
    Ok(StageRecord {
        lambda,
        level: energies[m],
        iterations,
        grad_residual: residual.min(grad_residual(&candidate, scheme, lambda)?),
        poho_residual: e.p_lambda.abs() / e.kinetic.max(1e-300),
        status,
        candidate,
        path: None,
    })
}

/// Dilate each admissible seed onto the Pohozaev manifold and return the
/// lowest resulting energy: an independent upper bound for the minimax level.
pub fn pohozaev_minimize(
    scheme: &SplitScheme,
    lambda: f64,
    seeds: &[Field],
) -> Result<(f64, Field)> {
    let mut best: Option<(f64, Field)> = None;
    for seed in seeds {
        let e = energy(seed, scheme, lambda)?;
        let n = seed.grid().ambient_dim();
        let Some(t) = pohozaev_dilation(&e, n) else {
            continue;
        };
        let level = crate::functional::dilation_energy(&e, n, t);
        if best.as_ref().map_or(true, |(b, _)| level < *b) {
            best = Some((level, seed.dilate(t)));
        }
    }
    best.ok_or(Error::NoAdmissibleSeed)
}

/// Default radial seed: a Gaussian bump swept over a few amplitudes and
/// widths until the nonlinear potential is positive, then dilated onto the
/// Pohozaev manifold.
pub fn default_radial_seed(scheme: &SplitScheme, grid: &GridRef) -> Result<Field> {
    let zeta = scheme.zeta;
    for &amp in &[1.5 * zeta, 2.0 * zeta, 1.0 * zeta, 3.0 * zeta] {
        for &width in &[1.0, 1.5, 2.0] {
            let u = Field::from_fn(grid, |c| {
                let r2: f64 = c.iter().map(|x| x * x).sum();
                amp * (-0.5 * r2 / (width * width)).exp()
            });
            let e = energy(&u, scheme, 1.0)?;
            let n = grid.ambient_dim();
            if let Some(t) = pohozaev_dilation(&e, n) {
                let r_span = grid.axes[0].r_inf();
                if t * 4.0 * width < r_span {
                    return Ok(u.dilate(t));
                }
            }
        }
    }
    Err(Error::NoAdmissibleSeed)
}

/// Evaluate the antisymmetric block test map dilated by `t` directly on the
/// solve grid (closed form, no interpolation).
pub fn pi_k_seed_on_grid(
    k: usize,
    big_r: f64,
    l: &[f64],
    zeta: f64,
    grid: &GridRef,
    t: f64,
) -> Result<Field> {
    if !grid.class.has_tau_pair() {
        return Err(Error::WrongSymmetryClass(grid.class.label()));
    }
    let u = build_u_k(k, big_r, l)?;
    let d = grid.dim();
    let mut f = Field::from_fn(grid, |c| {
        let r1 = c[0] / t;
        let r2 = c[1] / t;
        let psi = (u.eval(r1) - u.eval(r2)) * cutoff_chi(big_r, r1) * cutoff_chi(big_r, r2);
        let tail = if d == 3 { u.eval(c[2] / t).abs() } else { 1.0 };
        zeta * psi * tail
    });
    project(&mut f);
    Ok(f)
}

/// Certificates attached to a nonradial solve.
#[derive(Debug, Clone, Serialize)]
pub struct NonradialReport {
    pub report: SolveReport,
    pub radial_level: f64,
    pub tau_defect: f64,
    pub sign_max: f64,
    pub sign_min: f64,
    pub sign_changing: bool,
    pub level_vs_twice_radial: f64,
    pub half_energy_defect: f64,
    pub half_poho_rel: f64,
    pub profile_radius: f64,
}

/// Options shared by the nonradial pipeline.
#[derive(Debug, Clone)]
pub struct NonradialOpts {
    pub solver: SolverOpts,
    pub stages: usize,
    pub radius: Option<f64>,
    pub radius_search: RadiusSearchOpts,
}

impl Default for NonradialOpts {
    fn default() -> Self {
        Self {
            solver: SolverOpts::default(),
            stages: 8,
            radius: None,
            radius_search: RadiusSearchOpts::default(),
        }
    }
}

/// Full nonradial pipeline: radial reference level, antisymmetric seed from
/// the block test map, continuation in the antisymmetric class, and the
/// sign-change / half-restriction certificates.
pub fn nonradial_solve(
    scheme: &SplitScheme,
    grid: &GridRef,
    radial_grid: &GridRef,
    opts: &NonradialOpts,
    thresholds: &Thresholds,
) -> Result<NonradialReport> {
    match grid.class {
        SymmetryClass::O1Tau { n, m } => {
            if n < 5 || n == 2 * m {
                return Err(Error::Config(format!(
                    "first block class requires N >= 5 and N - 2M != 0, got N={n}, M={m}"
                )));
            }
        }
        SymmetryClass::O2Tau { n, m } => {
            if n - 2 * m == 1 {
                return Err(Error::Config(format!(
                    "second block class requires N - 2M != 1, got N={n}, M={m}"
                )));
            }
        }
        _ => return Err(Error::WrongSymmetryClass(grid.class.label())),
    }

    // radial reference level through the same continuation machinery
    let radial_seed = default_radial_seed(scheme, radial_grid)?;
    let big_l = choose_scaling_l(&radial_seed, scheme, scheme.lambda0, 0.1)?;
    let radial_path =
        scaling_path(&radial_seed, scheme, scheme.lambda0, big_l, opts.solver.path_nodes)?;
    let schedule =
        ContinuationSchedule::geometric(scheme.lambda0, opts.stages, opts.solver.grad_tol);
    let radial_report =
        continuation_solve(scheme, &schedule, radial_path, &opts.solver, thresholds)?;
    let radial_level = radial_report.final_level();

    // antisymmetric seed: dilated block test map, shrunk to fit the grid
    let big_r = match opts.radius {
        Some(r) => r,
        None => choose_r_k(1, scheme, grid.class, &opts.radius_search)?,
    };
    let support = big_r * big_r + big_r + 1.0;
    let fit = (grid.axes[0].r_inf() / support).min(1.0);
    let mut seed = pi_k_seed_on_grid(1, big_r, &[1.0], scheme.zeta, grid, fit)?;
    {
        let e = energy(&seed, scheme, scheme.lambda0)?;
        if let Some(t) = pohozaev_dilation(&e, grid.ambient_dim()) {
            if t < 1.0 {
                seed = seed.dilate(t);
                project(&mut seed);
            }
        }
    }
    let big_l = choose_scaling_l(&seed, scheme, scheme.lambda0, 0.1)?;
    let seed_path = scaling_path(&seed, scheme, scheme.lambda0, big_l, opts.solver.path_nodes)?;
    let mut seed_path = seed_path;
    for node in &mut seed_path.nodes {
        project(node);
    }

    let report = continuation_solve(scheme, &schedule, seed_path, &opts.solver, thresholds)?;
    let v = report.final_candidate().clone();
    let tau_defect = v.tau_defect()?;
    let (sign_max, sign_min) = (v.max(), v.min());
    // absolute threshold on the problem scale, so a collapse to zero is not
    // certified as sign-changing on rounding noise
    let floor = 1e-6 * scheme.zeta;
    let sign_changing = sign_max > floor && sign_min < -floor;

    let e = energy(&v, scheme, 1.0)?;
    let chi1 = v.half_restriction(Half::First)?;
    let e1 = energy(&chi1, scheme, 1.0)?;
    let half_energy_defect =
        (e1.j_lambda - 0.5 * e.j_lambda).abs() / e.j_lambda.abs().max(1e-300);
    let half_poho_rel = e1.p_lambda.abs() / e.kinetic.max(1e-300);

    Ok(NonradialReport {
        radial_level,
        tau_defect,
        sign_max,
        sign_min,
        sign_changing,
        level_vs_twice_radial: report.final_level() - 2.0 * radial_level,
        half_energy_defect,
        half_poho_rel,
        profile_radius: big_r,
        report,
    })
}

/// Boundary fields for the radial symmetric minimax at a given k: the seed
/// family on the angular grid the disk solver samples, with the profile
/// radius and dilation certified over exactly those directions.
pub fn radial_disk_boundary(
    k: usize,
    scheme: &SplitScheme,
    grid: &GridRef,
    n_theta: usize,
    _seed: u64,
) -> Result<Vec<Field>> {
    let dirs: Vec<Vec<f64>> = match k {
        1 => vec![vec![1.0]],
        2 => (0..n_theta)
            .map(|j| {
                let theta = std::f64::consts::PI * j as f64 / n_theta as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => return Err(Error::UnsupportedK(k)),
    };
    let r_inf = grid.axes[0].r_inf();
    // joint search: grow the profile radius until the dilation pushing every
    // sampled image negative fits inside the grid
    let all_negative = |big_r: f64, t: f64| -> Result<bool> {
        for l in &dirs {
            let u = build_u_k(k, big_r, l)?;
            let f = Field::from_fn(grid, |c| scheme.zeta * u.eval(c[0] / t));
            if j_lambda(&f, scheme, scheme.lambda0)? >= -1e-3 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut big_r = 2.0 * k as f64 + 1.0;
    let (profile_radius, dilation) = 'radius: loop {
        if big_r > r_inf / 2.0 {
            return Err(Error::DilationCapExceeded(r_inf / 2.0));
        }
        let t_cap = r_inf / big_r;
        let mut t = 1.0f64;
        let found = loop {
            if all_negative(big_r, t)? {
                break true;
            }
            t *= 2.0;
            if t > t_cap {
                break false;
            }
        };
        if !found {
            big_r *= 1.5;
            continue 'radius;
        }
        if t > 1.0 {
            let (mut lo, mut hi) = (t / 2.0, t);
            for _ in 0..10 {
                let mid = 0.5 * (lo + hi);
                if all_negative(big_r, mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            t = hi;
        }
        break (big_r, t);
    };
    dirs.iter()
        .map(|l| {
            let u = build_u_k(k, profile_radius, l)?;
            Ok(Field::from_fn(grid, |c| scheme.zeta * u.eval(c[0] / dilation)))
        })
        .collect()
}

/// Convenience driver for the radial ground-state pipeline.
pub fn radial_ground_state(
    scheme: &SplitScheme,
    grid: &GridRef,
    stages: usize,
    opts: &SolverOpts,
    thresholds: &Thresholds,
) -> Result<SolveReport> {
    let seed = default_radial_seed(scheme, grid)?;
    let big_l = choose_scaling_l(&seed, scheme, scheme.lambda0, 0.1)?;
    let path = scaling_path(&seed, scheme, scheme.lambda0, big_l, opts.path_nodes)?;
    let schedule = ContinuationSchedule::geometric(scheme.lambda0, stages, opts.grad_tol);
    continuation_solve(scheme, &schedule, path, opts, thresholds)
}

/// Check that the directions produced for the boundary are genuinely odd
/// pairs; used by the tests and the disk boundary assembly.
pub fn directions_are_odd_pairs(dirs: &[Vec<f64>]) -> bool {
    dirs.len() >= 2
        && dirs[0].iter().zip(&dirs[1]).all(|(a, b)| *a == -*b)
}

#[allow(unused_imports)]
use crate::testmaps::BoundaryMap;
