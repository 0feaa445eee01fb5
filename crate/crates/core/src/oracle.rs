//! Independent radial oracle: adaptive Runge-Kutta shooting for
//! `u'' + (N-1)/r u' + f(u) = 0`, with amplitude bisection for the positive
//! ground state and node-count bisection for excited profiles.
//!
//! This path shares no discretization with the minimax solver; it is the
//! cross-check the solver is measured against.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{energy, EnergyBreakdown};
use crate::grid::GridRef;
use crate::nonlinearity::{NonlinearityModel, SplitScheme};

/// Terminal behaviour of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// |u| + |u'| fell below the decay floor with constant sign on the tail
    Decays,
    /// u crossed zero with speed above the floor (amplitude too large for the
    /// current node target)
    Crosses,
    /// the trajectory turned back while away from zero, or ran to r_max
    /// without decaying (amplitude too small)
    BlowsUp,
}

/// One integrated trajectory: accepted step nodes `(r, u, u')`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, f64, f64)>,
    pub outcome: Outcome,
    pub crossings: usize,
    /// radius where the decay criterion fired, when it did
    pub decay_radius: Option<f64>,
}

impl Trajectory {
    /// Cubic-Hermite evaluation of u at radius r; zero beyond the last sample.
    pub fn eval(&self, r: f64) -> f64 {
        let s = &self.samples;
        if r <= s[0].0 {
            return s[0].1;
        }
        let last = s[s.len() - 1].0;
        if r >= last {
            return 0.0;
        }
        let mut lo = 0usize;
        let mut hi = s.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if s[mid].0 <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (r0, u0, d0) = s[lo];
        let (r1, u1, d1) = s[lo + 1];
        let h = r1 - r0;
        let t = (r - r0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * h * d1
    }
}

const DECAY_EPS: f64 = 1e-8;

struct Shot {
    too_large: bool,
    trajectory: Trajectory,
}

/// Core integrator: runs until the trajectory either exceeds `target_nodes`
/// sign changes, turns away from zero after the final crossing, decays, or
/// reaches `r_max`.
fn shoot_counting(
    model: &NonlinearityModel,
    n: u32,
    alpha: f64,
    r_max: f64,
    rtol: f64,
    target_nodes: usize,
) -> Result<Shot> {
    let nf = n as f64;
    let rhs = |r: f64, y: [f64; 2]| [y[1], -(nf - 1.0) / r * y[1] - model.f(y[0])];

    // two-term series start to step over the 1/r term
    let r0 = 1e-4;
    let mut r = r0;
    let f_alpha = model.f(alpha);
    let mut y = [alpha - f_alpha * r0 * r0 / (2.0 * nf), -f_alpha * r0 / nf];
    let mut h: f64 = 1e-3;
    let mut samples = vec![(r, y[0], y[1])];
    let mut crossings = 0usize;
    let mut peaked = false;

    while r < r_max {
        if h < 1e-12 {
            return Err(Error::StiffnessFailure(r));
        }
        let h_eff = h.min(r_max - r);
        let (y_new, err) = rk45_step(&rhs, r, y, h_eff);
        let scale = rtol * (1.0 + y[0].abs().max(y[1].abs()));
        if err <= scale {
            let y_prev = y;
            r += h_eff;
            y = y_new;
            samples.push((r, y[0], y[1]));
            if y_prev[0].signum() != y[0].signum() && y_prev[0] != 0.0 {
                crossings += 1;
                peaked = false;
                if crossings > target_nodes {
                    return Ok(Shot {
                        too_large: true,
                        trajectory: Trajectory {
                            samples,
                            outcome: Outcome::Crosses,
                            crossings,
                            decay_radius: None,
                        },
                    });
                }
            }
            // |u| shrinking means u*u' < 0; growth after a shrink phase means
            // the trajectory turned away from zero
            if y[0] * y[1] < 0.0 {
                peaked = true;
            } else if peaked && y[0] * y[1] > 0.0 && crossings == target_nodes {
                return Ok(Shot {
                    too_large: false,
                    trajectory: Trajectory {
                        samples,
                        outcome: Outcome::BlowsUp,
                        crossings,
                        decay_radius: None,
                    },
                });
            }
            if y[0].abs() < DECAY_EPS && y[1].abs() < DECAY_EPS {
                let decay_radius = Some(r);
                return Ok(Shot {
                    too_large: false,
                    trajectory: Trajectory {
                        samples,
                        outcome: Outcome::Decays,
                        crossings,
                        decay_radius,
                    },
                });
            }
        }
        let grow = if err == 0.0 { 5.0 } else { 0.9 * (scale / err).powf(0.2) };
        h *= grow.clamp(0.2, 5.0);
    }
    Ok(Shot {
        too_large: false,
        trajectory: Trajectory {
            samples,
            outcome: Outcome::BlowsUp,
            crossings,
            decay_radius: None,
        },
    })
}

/// Integrate one shot and classify its outcome for the ground-state target.
pub fn shoot(
    model: &NonlinearityModel,
    n: u32,
    alpha: f64,
    r_max: f64,
    rtol: f64,
) -> Result<Trajectory> {
    Ok(shoot_counting(model, n, alpha, r_max, rtol, 0)?.trajectory)
}

/// Profile from a converged shot, with its invariants evaluated on a grid.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub alpha: f64,
    pub nodes: usize,
    pub decay_verified: bool,
    pub trajectory: Trajectory,
    pub energy: EnergyBreakdown,
}

impl ShootingResult {
    pub fn to_field(&self, grid: &GridRef) -> Field {
        Field::from_fn(grid, |c| self.trajectory.eval(c[0]))
    }
}

/// Amplitude bisection for the profile with a prescribed number of sign
/// changes; `nodes = 0` is the positive ground state.
pub fn bound_state(
    model: &NonlinearityModel,
    n: u32,
    nodes: usize,
    grid: &GridRef,
    scheme: &SplitScheme,
) -> Result<ShootingResult> {
    let r_max = grid.axes[0].r_inf().max(30.0) * 2.0;
    let rtol = 1e-10;
    // geometric sweep for the first amplitude whose shot exceeds the target
    // crossing count
    let mut lo = None;
    let mut hi = None;
    let mut a = 0.05;
    while a < 1e4 {
        let shot = shoot_counting(model, n, a, r_max, 1e-8, nodes)?;
        if shot.too_large {
            hi = Some(a);
            break;
        }
        lo = Some(a);
        a *= 1.25;
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        _ => return Err(Error::NoBracket(0.05, 1e4)),
    };
    while (hi - lo) / hi.max(1.0) > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if shoot_counting(model, n, mid, r_max, rtol, nodes)?.too_large {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut traj = shoot_counting(model, n, alpha, r_max, rtol, nodes)?.trajectory;
    // at the bisection limit the trajectory follows the decaying solution
    // until the remaining amplitude error takes over; cut the profile where
    // the target sign structure is complete and the state is tiny
    let cut = 1e-6;
    let mut crossings_seen = 0usize;
    let mut cut_at = None;
    for (i, w) in traj.samples.windows(2).enumerate() {
        if w[0].1.signum() != w[1].1.signum() && w[0].1 != 0.0 {
            crossings_seen += 1;
        }
        if crossings_seen == nodes && w[1].1.abs() <= cut && w[1].2.abs() <= cut {
            cut_at = Some(i + 1);
            break;
        }
    }
    let decay_verified = if let Some(i) = cut_at {
        traj.decay_radius = Some(traj.samples[i].0);
        traj.samples.truncate(i + 1);
        traj.outcome = Outcome::Decays;
        traj.crossings = nodes;
        true
    } else {
        traj.outcome == Outcome::Decays && traj.crossings == nodes
    };
    let field = Field::from_fn(grid, |c| traj.eval(c[0]));
    let e = energy(&field, scheme, 1.0)?;
    Ok(ShootingResult {
        alpha,
        nodes: traj.crossings,
        decay_verified,
        trajectory: traj,
        energy: e,
    })
}

/// The positive radial ground state by undershoot/overshoot bisection.
pub fn ground_state(
    model: &NonlinearityModel,
    n: u32,
    grid: &GridRef,
    scheme: &SplitScheme,
) -> Result<ShootingResult> {
    bound_state(model, n, 0, grid, scheme)
}

type Rhs<'a> = &'a dyn Fn(f64, [f64; 2]) -> [f64; 2];

/// One Dormand-Prince 5(4) step; returns the fifth-order solution and the
/// embedded error estimate.
fn rk45_step(rhs: Rhs, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let add = |y: [f64; 2], terms: &[(f64, [f64; 2])]| {
        let mut out = y;
        for (c, k) in terms {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
        out
    };
    let k1 = rhs(r, y);
    let k2 = rhs(r + h / 5.0, add(y, &[(A21, k1)]));
    let k3 = rhs(r + 3.0 * h / 10.0, add(y, &[(A31, k1), (A32, k2)]));
    let k4 = rhs(r + 4.0 * h / 5.0, add(y, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = rhs(
        r + 8.0 * h / 9.0,
        add(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]),
    );
    let k6 = rhs(
        r + h,
        add(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
    );
    let y5 = add(y, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    let k7 = rhs(r + h, y5);
    let err = {
        let e0 = h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]);
        let e1 = h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]);
        e0.abs().max(e1.abs())
    };
    (y5, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, SymmetryClass};

    fn setup() -> (NonlinearityModel, GridRef, SplitScheme) {
        let model = NonlinearityModel::cubic(3);
        let grid = build_grid(SymmetryClass::Radial { n: 3 }, 20.0, 0.05).unwrap();
        let scheme = SplitScheme::with_parameters(&model, 0.5, 2.0).unwrap();
        (model, grid, scheme)
    }

    #[test]
    fn small_amplitude_is_undershoot_side() {
        let (model, ..) = setup();
        let t = shoot(&model, 3, 0.1, 40.0, 1e-10).unwrap();
        assert_ne!(t.outcome, Outcome::Decays);
        assert_eq!(t.crossings, 0);
    }

    #[test]
    fn large_amplitude_overshoots() {
        let (model, ..) = setup();
        let t = shoot(&model, 3, 10.0, 40.0, 1e-10).unwrap();
        assert_eq!(t.outcome, Outcome::Crosses);
    }

    #[test]
    fn ground_state_profile() {
        let (model, grid, scheme) = setup();
        let gs = ground_state(&model, 3, &grid, &scheme).unwrap();
        assert_eq!(gs.nodes, 0);
        assert!(gs.decay_verified, "outcome {:?}", gs.trajectory.outcome);
        // positivity up to the decay radius
        for &(r, u, _) in &gs.trajectory.samples {
            if r < gs.trajectory.decay_radius.unwrap_or(f64::MAX) {
                assert!(u > -1e-9, "u({r}) = {u}");
            }
        }
        // Pohozaev residual small relative to the kinetic term
        let rel = gs.energy.p_lambda.abs() / gs.energy.kinetic;
        assert!(rel <= 1e-3, "poho residual {rel}");
        assert!(gs.energy.j_lambda > 0.0);
    }

    #[test]
    fn ground_state_grid_independence() {
        let (model, grid, scheme) = setup();
        let coarse = ground_state(&model, 3, &grid, &scheme).unwrap();
        let fine_grid = build_grid(SymmetryClass::Radial { n: 3 }, 40.0, 0.025).unwrap();
        let fine = ground_state(&model, 3, &fine_grid, &scheme).unwrap();
        let rel = (coarse.energy.j_lambda - fine.energy.j_lambda).abs() / fine.energy.j_lambda;
        assert!(rel <= 3e-3, "energy drift {rel}");
        // amplitude stability to many digits
        assert!((coarse.alpha - fine.alpha).abs() < 1e-6 * coarse.alpha);
    }

    #[test]
    fn excited_states_energy_ladder() {
        let (model, grid, scheme) = setup();
        let e0 = ground_state(&model, 3, &grid, &scheme).unwrap();
        let e1 = bound_state(&model, 3, 1, &grid, &scheme).unwrap();
        let e2 = bound_state(&model, 3, 2, &grid, &scheme).unwrap();
        assert_eq!(e1.nodes, 1);
        assert_eq!(e2.nodes, 2);
        assert!(e1.energy.j_lambda > e0.energy.j_lambda);
        assert!(e2.energy.j_lambda > e1.energy.j_lambda);
        assert!(e1.alpha > e0.alpha);
    }
}
