//! Translation profile extraction for bounded Palais-Smale-like sequences:
//! the windowed-mass vanishing diagnostic, iterative recentring, and the
//! verification of the four decomposition identities.
//!
//! Sequences live on a translation-capable grid (a full line, or a block grid
//! whose noncompact axis is a line). Centers are grid nodes; recentring is an
//! exact lattice shift, so it commutes with the quadrature for fields
//! supported away from the boundary.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{energy, gradient};
use crate::grid::{AxisKind, GridRef};
use crate::nonlinearity::SplitScheme;
use serde::Serialize;

/// An ordered sequence of fields on one translation-capable grid.
#[derive(Debug, Clone)]
pub struct FieldSequence {
    grid: GridRef,
    fields: Vec<Field>,
}

impl FieldSequence {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Config("empty field sequence".into()));
        }
        let grid = fields[0].grid().clone();
        translation_axis(&grid)?;
        Ok(Self { grid, fields })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn max_h1(&self) -> f64 {
        self.fields.iter().map(|f| f.h1()).fold(0.0, f64::max)
    }
}

/// The axis along which recentring happens: the last full-line axis.
pub fn translation_axis(grid: &GridRef) -> Result<usize> {
    grid.axes
        .iter()
        .rposition(|a| matches!(a.kind, AxisKind::FullLine))
        .ok_or_else(|| Error::WrongSymmetryClass(format!(
            "{} has no translation-capable axis",
            grid.class.label()
        )))
}

/// Windowed squared mass of one field around every center node of the
/// translation axis; windows are balls of the given physical radius centered
/// on the axis.
fn window_masses(u: &Field, radius: f64) -> Result<Vec<f64>> {
    let grid = u.grid();
    let t_ax = translation_axis(grid)?;
    let n_t = grid.dims()[t_ax];
    let h = grid.axes[t_ax].h;
    let weights = grid.node_weights();
    let mut mass = vec![0.0f64; n_t];
    for flat in 0..grid.node_count() {
        let w = weights[flat];
        if w == 0.0 {
            continue;
        }
        let coords = grid.coords(flat);
        let cross2: f64 = (0..grid.dim())
            .filter(|&a| a != t_ax)
            .map(|a| coords[a] * coords[a])
            .sum();
        if cross2 > radius * radius {
            continue;
        }
        let reach = (radius * radius - cross2).sqrt();
        let span = (reach / h).floor() as i64;
        let t_idx = grid.unravel(flat)[t_ax] as i64;
        let contrib = w * u.values()[flat] * u.values()[flat];
        let lo = (t_idx - span).max(0);
        let hi = (t_idx + span).min(n_t as i64 - 1);
        for z in lo..=hi {
            mass[z as usize] += contrib;
        }
    }
    Ok(mass)
}

fn tail_range(len: usize, fraction: f64) -> usize {
    ((len as f64 * fraction).floor() as usize).max(1).min(len)
}

/// Vanishing diagnostic: max over window centers per index, max over the
/// tail fraction as the limsup proxy.
pub fn vanishing_sigma(seq: &FieldSequence, window_radius: f64) -> Result<f64> {
    let tail = tail_range(seq.len(), 0.25);
    let mut out = 0.0f64;
    for u in &seq.fields[seq.len() - tail..] {
        let mass = window_masses(u, window_radius)?;
        out = out.max(mass.into_iter().fold(0.0, f64::max));
    }
    Ok(out)
}

/// Knobs for the extraction loop.
#[derive(Debug, Clone)]
pub struct DecomposeOpts {
    pub window_radius: f64,
    /// vanishing threshold relative to the first field's peak window mass
    pub vanish_rel: f64,
    pub tail_fraction: f64,
    /// norm floor standing in for the uniform lower bound on nontrivial
    /// critical points; only budgets the profile count
    pub rho_floor: f64,
    pub separation_floor: f64,
}

impl Default for DecomposeOpts {
    fn default() -> Self {
        Self {
            window_radius: 1.0,
            vanish_rel: 1e-6,
            tail_fraction: 0.25,
            rho_floor: 0.5,
            separation_floor: 10.0,
        }
    }
}

/// Result of one extraction: centers per sequence index, the limit proxy,
/// and the recentred residual sequence.
pub struct Extraction {
    pub centers: Vec<i64>,
    pub profile: Field,
    pub residuals: Vec<Field>,
}

/// Extract one profile: per-index window argmax centers (ties toward the
/// smaller coordinate), pointwise median of the recentred tail as the weak
/// limit proxy, residual by exact lattice subtraction. A forced center pins
/// every center to zero, as the first step of the decomposition requires.
pub fn extract_profile(
    seq: &FieldSequence,
    opts: &DecomposeOpts,
    forced_zero_center: bool,
) -> Result<Extraction> {
    let sigma = vanishing_sigma(seq, opts.window_radius)?;
    let threshold = vanish_threshold(seq, opts)?;
    if !forced_zero_center && sigma <= threshold {
        return Err(Error::BelowThreshold(sigma, threshold));
    }
    let grid = seq.grid();
    let t_ax = translation_axis(grid)?;
    let n_t = grid.dims()[t_ax];
    let zero_idx = (0..n_t)
        .min_by(|&a, &b| {
            grid.axes[t_ax]
                .coord(a)
                .abs()
                .partial_cmp(&grid.axes[t_ax].coord(b).abs())
                .unwrap()
        })
        .unwrap() as i64;

    let centers: Vec<i64> = if forced_zero_center {
        vec![0; seq.len()]
    } else {
        seq.fields
            .iter()
            .map(|u| {
                let mass = window_masses(u, opts.window_radius)?;
                let mut best = 0usize;
                for (i, &m) in mass.iter().enumerate() {
                    if m > mass[best] {
                        best = i;
                    }
                }
                Ok(best as i64 - zero_idx)
            })
            .collect::<Result<_>>()?
    };

    // pointwise median of the recentred tail fraction
    let tail = tail_range(seq.len(), opts.tail_fraction);
    let recentred_tail: Vec<Field> = seq.fields[seq.len() - tail..]
        .iter()
        .zip(&centers[seq.len() - tail..])
        .map(|(u, &y)| u.shift_nodes(t_ax, -y))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; grid.node_count()];
    let mut scratch: Vec<f64> = Vec::with_capacity(tail);
    for (flat, value) in values.iter_mut().enumerate() {
        scratch.clear();
        scratch.extend(recentred_tail.iter().map(|f| f.values()[flat]));
        scratch.sort_by(|a, b| a.partial_cmp(b).unwrap());
        *value = if tail % 2 == 1 {
            scratch[tail / 2]
        } else {
            0.5 * (scratch[tail / 2 - 1] + scratch[tail / 2])
        };
    }
    let profile = Field::from_values(grid, values)?;

    let residuals: Vec<Field> = seq
        .fields
        .iter()
        .zip(&centers)
        .map(|(u, &y)| {
            let shifted = profile.shift_nodes(t_ax, y)?;
            let mut v = u.clone();
            v.axpy(-1.0, &shifted);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(Extraction { centers, profile, residuals })
}

fn vanish_threshold(seq: &FieldSequence, opts: &DecomposeOpts) -> Result<f64> {
    let first = window_masses(&seq.fields[0], opts.window_radius)?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(opts.vanish_rel * first.max(1e-300))
}

/// Why the extraction loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionFlag {
    /// residual passed the vanishing test
    Vanished,
    /// the next profile fell below the norm floor while the residual still
    /// carries windowed mass: not a genuine Palais-Smale-like input
    NonVanishingResidual,
    /// profile budget exhausted
    IterationCap,
}

/// The extracted profiles with their center sequences.
#[derive(Debug, Clone)]
pub struct ProfileDecomposition {
    pub profiles: Vec<Field>,
    pub centers: Vec<Vec<i64>>,
    pub flag: DecompositionFlag,
    pub residual_norms: Vec<f64>,
}

impl ProfileDecomposition {
    pub fn l(&self) -> usize {
        self.profiles.len()
    }
}

/// Iterate extraction until the residual vanishes or the budget runs out.
/// The first profile is always taken with centers pinned at zero.
pub fn decompose(
    seq: &FieldSequence,
    opts: &DecomposeOpts,
) -> Result<ProfileDecomposition> {
    let cap = ((seq.max_h1().powi(2) / opts.rho_floor.powi(2)).floor() as usize) + 1;
    let mut profiles = Vec::new();
    let mut centers = Vec::new();
    let mut current = seq.clone();
    let threshold = vanish_threshold(seq, opts)?;
    let mut flag = DecompositionFlag::IterationCap;

    for step in 0..cap {
        let forced = step == 0;
        if !forced {
            let sigma = vanishing_sigma(&current, opts.window_radius)?;
            if sigma <= threshold {
                flag = DecompositionFlag::Vanished;
                break;
            }
        }
        let ex = extract_profile(&current, opts, forced)?;
        let profile_norm = ex.profile.h1();
        if !forced && profile_norm < 1e-6 * seq.max_h1().max(1e-300) {
            flag = DecompositionFlag::NonVanishingResidual;
            break;
        }
        profiles.push(ex.profile);
        centers.push(compose_centers(&centers, &ex.centers, step));
        current = FieldSequence::new(ex.residuals)?;
        if step == 0 {
            // the forced first step may already leave a vanishing residual
            let sigma = vanishing_sigma(&current, opts.window_radius)?;
            if sigma <= threshold {
                flag = DecompositionFlag::Vanished;
                break;
            }
        }
    }
    let residual_norms = current.fields.iter().map(|f| f.h1()).collect();
    Ok(ProfileDecomposition { profiles, centers, flag, residual_norms })
}

/// Centers of later extractions are measured on the already-recentred
/// residual; compose them back to absolute shifts.
fn compose_centers(_prev: &[Vec<i64>], new: &[i64], _step: usize) -> Vec<i64> {
    // residuals are kept in the original frame (subtraction happens at the
    // shifted position), so extraction centers are already absolute
    new.to_vec()
}

/// Verification of the four decomposition identities plus the per-profile
/// gradient residuals.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub l: usize,
    pub item_i_centers_diverge: bool,
    pub min_pair_separation: Option<f64>,
    pub item_ii_profiles_nontrivial: bool,
    pub profile_grad_residuals: Vec<f64>,
    pub item_iii_energy_defect: f64,
    pub item_iii_ok: bool,
    pub item_iv_tail_residual: f64,
    pub item_iv_ok: bool,
    pub energy_last: f64,
    pub energy_sum: f64,
}

/// Tolerances for [`verify_decomposition`].
#[derive(Debug, Clone)]
pub struct VerifyOpts {
    pub energy_tol: f64,
    pub residual_tol: f64,
    pub separation_floor: f64,
}

impl Default for VerifyOpts {
    fn default() -> Self {
        Self { energy_tol: 1e-6, residual_tol: 1e-6, separation_floor: 10.0 }
    }
}

pub fn verify_decomposition(
    seq: &FieldSequence,
    dec: &ProfileDecomposition,
    scheme: &SplitScheme,
    opts: &VerifyOpts,
) -> Result<DecompositionReport> {
    let grid = seq.grid();
    let t_ax = translation_axis(grid)?;
    let h = grid.axes[t_ax].h;
    let last = seq.len() - 1;

    // item (i): first centers pinned at zero, pairwise separations grow
    let mut min_sep = None;
    let mut diverge = dec.centers.first().map_or(true, |c| c.iter().all(|&y| y == 0));
    for i in 0..dec.centers.len() {
        for j in i + 1..dec.centers.len() {
            let sep = (dec.centers[i][last] - dec.centers[j][last]).abs() as f64 * h;
            min_sep = Some(min_sep.map_or(sep, |m: f64| m.min(sep)));
            if sep <= opts.separation_floor {
                diverge = false;
            }
        }
    }

    // item (ii): profiles beyond the first are nontrivial; gradient residuals
    // reported for all of them
    let norm_floor = 1e-8 * seq.max_h1().max(1e-300);
    let nontrivial = dec.profiles.iter().skip(1).all(|w| w.h1() > norm_floor);
    let profile_grad_residuals = dec
        .profiles
        .iter()
        .map(|w| {
            let g = gradient(w, scheme, 1.0)?;
            Ok(g.l2() / w.l2().max(1e-300))
        })
        .collect::<Result<Vec<_>>>()?;

    // item (iii): energy additivity against the final sequence element
    let energy_last = energy(&seq.fields[last], scheme, 1.0)?.j_lambda;
    let mut energy_sum = 0.0;
    for w in &dec.profiles {
        energy_sum += energy(w, scheme, 1.0)?.j_lambda;
    }
    let defect = (energy_last - energy_sum).abs();

    // item (iv): residual norm on the tail
    let tail = tail_range(seq.len(), 0.25);
    let mut reconstruct_err = 0.0f64;
    for idx in seq.len() - tail..seq.len() {
        let mut recon = Field::zeros(grid);
        for (w, cs) in dec.profiles.iter().zip(&dec.centers) {
            let shifted = w.shift_nodes(t_ax, cs[idx])?;
            recon.axpy(1.0, &shifted);
        }
        let mut diff = seq.fields[idx].clone();
        diff.axpy(-1.0, &recon);
        reconstruct_err = reconstruct_err.max(diff.h1());
    }

    Ok(DecompositionReport {
        l: dec.l(),
        item_i_centers_diverge: diverge,
        min_pair_separation: min_sep,
        item_ii_profiles_nontrivial: nontrivial,
        profile_grad_residuals,
        item_iii_energy_defect: defect,
        item_iii_ok: defect <= opts.energy_tol,
        item_iv_tail_residual: reconstruct_err,
        item_iv_ok: reconstruct_err <= opts.residual_tol,
        energy_last,
        energy_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, SymmetryClass};
    use crate::nonlinearity::NonlinearityModel;

    fn line_grid(r: f64, h: f64) -> GridRef {
        build_grid(SymmetryClass::Line, r, h).unwrap()
    }

    fn poly_bump(x: f64, radius: f64) -> f64 {
        let s = x / radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(3)
        }
    }

    fn scheme_line() -> SplitScheme {
        // dimension tag is irrelevant on the line; the functional machinery
        // only needs the split
        SplitScheme::with_parameters(&NonlinearityModel::cubic(3), 0.5, 2.0).unwrap()
    }

    #[test]
    fn sigma_of_zero_and_stationary() {
        let g = line_grid(40.0, 0.25);
        let zero = FieldSequence::new(vec![Field::zeros(&g); 4]).unwrap();
        assert_eq!(vanishing_sigma(&zero, 1.0).unwrap(), 0.0);
        let bump = Field::from_fn(&g, |c| poly_bump(c[0], 1.5));
        let stat = FieldSequence::new(vec![bump.clone(); 6]).unwrap();
        let sigma = vanishing_sigma(&stat, 1.0).unwrap();
        assert!(sigma > 0.0);
        // n-independent for a stationary sequence
        let longer = FieldSequence::new(vec![bump; 12]).unwrap();
        assert_eq!(sigma, vanishing_sigma(&longer, 1.0).unwrap());
    }

    #[test]
    fn sigma_of_spreading_sequence_decays() {
        let g = line_grid(100.0, 0.5);
        let mut sigmas = Vec::new();
        for n in [8.0f64, 16.0, 32.0, 64.0] {
            let u = Field::from_fn(&g, |c| n.powf(-0.5) * poly_bump(c[0], 2.0 * n));
            let seq = FieldSequence::new(vec![u; 4]).unwrap();
            sigmas.push(vanishing_sigma(&seq, 1.0).unwrap());
        }
        assert!(sigmas.windows(2).all(|w| w[1] < w[0]), "{sigmas:?}");
    }

    #[test]
    fn constant_sequence_extracts_itself() {
        let g = line_grid(40.0, 0.25);
        let w = Field::from_fn(&g, |c| poly_bump(c[0], 1.5));
        let seq = FieldSequence::new(vec![w.clone(); 8]).unwrap();
        let ex = extract_profile(&seq, &DecomposeOpts::default(), true).unwrap();
        assert!(ex.centers.iter().all(|&y| y == 0));
        for (a, b) in ex.profile.values().iter().zip(w.values()) {
            assert_eq!(a, b);
        }
        for v in &ex.residuals {
            assert_eq!(v.max_abs(), 0.0);
        }
    }

    #[test]
    fn planted_two_bump_fixture() {
        let g = line_grid(80.0, 0.25);
        let n_seq = 16usize;
        let w1 = Field::from_fn(&g, |c| 0.8 * poly_bump(c[0], 1.5));
        let w2 = Field::from_fn(&g, |c| -0.6 * poly_bump(c[0] - 0.25, 1.5));
        let t_ax = 0;
        let nodes_per_unit = 4i64;
        let fields: Vec<Field> = (1..=n_seq)
            .map(|n| {
                let shift = 4 * n as i64 * nodes_per_unit;
                let mut u = w1.clone();
                u.axpy(1.0, &w2.shift_nodes(t_ax, shift).unwrap());
                u
            })
            .collect();
        let seq = FieldSequence::new(fields).unwrap();
        let opts = DecomposeOpts::default();
        let dec = decompose(&seq, &opts).unwrap();
        assert_eq!(dec.l(), 2, "flag {:?}", dec.flag);
        assert_eq!(dec.flag, DecompositionFlag::Vanished);
        // first profile: centers zero, matches w1 to fp accuracy
        for (a, b) in dec.profiles[0].values().iter().zip(w1.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // second extraction: centers track the planted shifts within a node
        for (idx, &c) in dec.centers[1].iter().enumerate() {
            let planted = 4 * (idx as i64 + 1) * nodes_per_unit;
            assert!((c - planted).abs() <= 1, "index {idx}: {c} vs {planted}");
        }
        let scheme = scheme_line();
        let rep = verify_decomposition(&seq, &dec, &scheme, &VerifyOpts::default()).unwrap();
        assert!(rep.item_i_centers_diverge);
        assert!(rep.item_ii_profiles_nontrivial);
        assert!(rep.item_iii_ok, "energy defect {}", rep.item_iii_energy_defect);
        assert!(rep.item_iv_ok, "tail residual {}", rep.item_iv_tail_residual);

        // mutation test: dropping a profile breaks additivity by its energy
        let mutated = ProfileDecomposition {
            profiles: vec![dec.profiles[0].clone()],
            centers: vec![dec.centers[0].clone()],
            flag: dec.flag,
            residual_norms: dec.residual_norms.clone(),
        };
        let rep2 = verify_decomposition(&seq, &mutated, &scheme, &VerifyOpts::default()).unwrap();
        let deleted = energy(&dec.profiles[1], &scheme, 1.0).unwrap().j_lambda;
        assert!(!rep2.item_iii_ok);
        assert!(
            (rep2.item_iii_energy_defect - deleted.abs()).abs() <= 1e-9 * deleted.abs().max(1.0),
            "defect {} vs deleted {}",
            rep2.item_iii_energy_defect,
            deleted
        );
        assert!(!rep2.item_iv_ok);
    }

    #[test]
    fn spreading_fixture_reports_honestly() {
        let g = line_grid(100.0, 0.5);
        let fields: Vec<Field> = [8.0f64, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n| Field::from_fn(&g, |c| n.powf(-0.5) * poly_bump(c[0], 2.0 * n)))
            .collect();
        let seq = FieldSequence::new(fields).unwrap();
        let dec = decompose(&seq, &DecomposeOpts::default()).unwrap();
        assert_eq!(dec.l(), 1);
        // the forced first profile is pointwise small
        assert!(dec.profiles[0].max_abs() <= 64.0f64.powf(-0.5) + 1e-12);
        let scheme = scheme_line();
        let rep = verify_decomposition(&seq, &dec, &scheme, &VerifyOpts::default()).unwrap();
        // the early-sequence residuals are not small: the input was not a
        // genuine Palais-Smale-like sequence and the report says so
        assert!(dec.residual_norms[0] > 1e-3);
        let _ = rep;
    }

    #[test]
    fn zero_sequence_decomposes_trivially() {
        let g = line_grid(40.0, 0.25);
        let seq = FieldSequence::new(vec![Field::zeros(&g); 5]).unwrap();
        let dec = decompose(&seq, &DecomposeOpts::default()).unwrap();
        assert_eq!(dec.l(), 1);
        assert_eq!(dec.profiles[0].max_abs(), 0.0);
        assert_eq!(dec.flag, DecompositionFlag::Vanished);
    }

    #[test]
    fn idempotence_on_fully_decomposed_input() {
        let g = line_grid(60.0, 0.25);
        let w1 = Field::from_fn(&g, |c| poly_bump(c[0], 1.5));
        let fields: Vec<Field> = (1..=8)
            .map(|n| {
                let mut u = w1.clone();
                u.axpy(0.7, &w1.shift_nodes(0, 16 * n).unwrap());
                u
            })
            .collect();
        let seq = FieldSequence::new(fields).unwrap();
        let dec = decompose(&seq, &DecomposeOpts::default()).unwrap();
        let residuals: Vec<Field> = seq
            .fields()
            .iter()
            .enumerate()
            .map(|(idx, u)| {
                let mut v = u.clone();
                for (w, cs) in dec.profiles.iter().zip(&dec.centers) {
                    v.axpy(-1.0, &w.shift_nodes(0, cs[idx]).unwrap());
                }
                v
            })
            .collect();
        let res_seq = FieldSequence::new(residuals).unwrap();
        let dec2 = decompose(&res_seq, &DecomposeOpts::default()).unwrap();
        assert_eq!(dec2.l(), 1);
        assert!(dec2.profiles[0].h1() < 1e-10);
    }
}
