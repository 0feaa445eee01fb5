//! Nonlinearity models and the positive/negative splitting that drives the
//! parameter family `f^lambda = lambda*f1 - f2`.
//!
//! A model carries `f` and its primitive `F`. The split extracts
//! `f1(t) = max{f(t) + 2*mu*t, 0}` (odd extension), `f2 = f1 - f`, so that
//! `F2(t) >= mu*t^2` and the family `J_lambda = A - lambda*B` is monotone in
//! lambda. Built-in closed-form models keep the primitives exact; tabulated
//! models use exact piecewise-linear primitives.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use serde::Serialize;

/// Piecewise-linear scalar function on `t >= 0` with exact primitive.
/// Odd extension is applied for negative arguments by the callers.
#[derive(Debug, Clone)]
pub struct LinearTable {
    ts: Vec<f64>,
    ys: Vec<f64>,
    /// primitive at each breakpoint, prim[0] = 0
    prim: Vec<f64>,
}

impl LinearTable {
    pub fn new(ts: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ts.len() != ys.len() || ts.len() < 2 {
            return Err(Error::Parse("tabulated nonlinearity needs >= 2 samples".into()));
        }
        if ts[0] != 0.0 {
            return Err(Error::Parse("tabulated nonlinearity must start at t = 0".into()));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("tabulated abscissae must be strictly increasing".into()));
        }
        let mut prim = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            let dt = ts[i] - ts[i - 1];
            prim[i] = prim[i - 1] + 0.5 * (ys[i] + ys[i - 1]) * dt;
        }
        Ok(Self { ts, ys, prim })
    }

    fn segment(&self, t: f64) -> usize {
        debug_assert!(t >= 0.0);
        match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.ts.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.ts.len() - 2),
        }
    }

    /// Linear interpolation; linear extrapolation beyond the last breakpoint.
    pub fn value(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// Exact primitive of the interpolant, zero at zero.
    pub fn primitive(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let s = t - t0;
        self.prim[i] + y0 * s + 0.5 * (y1 - y0) / (t1 - t0) * s * s
    }

    /// Table for `max{self(t) + 2*mu*t, 0}` with breakpoints refined at the
    /// zero crossings, so the clamp is exact segment-wise.
    fn clamped_shift(&self, two_mu: f64) -> Self {
        let g = |i: usize| self.ys[i] + two_mu * self.ts[i];
        let mut ts = Vec::with_capacity(self.ts.len() + 8);
        let mut ys = Vec::with_capacity(self.ts.len() + 8);
        ts.push(self.ts[0]);
        ys.push(g(0).max(0.0));
        for i in 1..self.ts.len() {
            let (a, b) = (g(i - 1), g(i));
            if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
                let root = self.ts[i - 1] + (self.ts[i] - self.ts[i - 1]) * (-a) / (b - a);
                ts.push(root);
                ys.push(0.0);
            }
            ts.push(self.ts[i]);
            ys.push(b.max(0.0));
        }
        Self::new(ts, ys).expect("refined table is well-formed")
    }
}

/// How `f` and `F` are evaluated.
#[derive(Clone)]
pub enum ModelKind {
    /// f(t) = -a t + b t^3
    Cubic { a: f64, b: f64 },
    /// f(t) = -a t + b t^3 - c t^5
    CubicQuintic { a: f64, b: f64, c: f64 },
    /// piecewise-linear samples of f on t >= 0, odd extension
    Table(LinearTable),
    /// inner model cut to zero outside [-zeta1, zeta1]
    Truncated { inner: Box<ModelKind>, zeta1: f64 },
    /// arbitrary odd f with its primitive, both exact closures
    Custom {
        f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        big_f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for ModelKind {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.write_str(&self.tag())
    }
}

impl ModelKind {
    fn f(&self, t: f64) -> f64 {
        match self {
            ModelKind::Cubic { a, b } => -a * t + b * t.powi(3),
            ModelKind::CubicQuintic { a, b, c } => -a * t + b * t.powi(3) - c * t.powi(5),
            ModelKind::Table(tab) => t.signum() * tab.value(t.abs()),
            ModelKind::Truncated { inner, zeta1 } => {
                if t.abs() > *zeta1 {
                    0.0
                } else {
                    inner.f(t)
                }
            }
            ModelKind::Custom { f, .. } => f(t),
        }
    }

    fn big_f(&self, t: f64) -> f64 {
        let s = t.abs();
        match self {
            ModelKind::Cubic { a, b } => -a * s * s / 2.0 + b * s.powi(4) / 4.0,
            ModelKind::CubicQuintic { a, b, c } => {
                -a * s * s / 2.0 + b * s.powi(4) / 4.0 - c * s.powi(6) / 6.0
            }
            ModelKind::Table(tab) => tab.primitive(s),
            ModelKind::Truncated { inner, zeta1 } => inner.big_f(s.min(*zeta1)),
            ModelKind::Custom { big_f, .. } => big_f(s),
        }
    }

    fn f_prime(&self, t: f64) -> f64 {
        match self {
            ModelKind::Cubic { a, b } => -a + 3.0 * b * t * t,
            ModelKind::CubicQuintic { a, b, c } => -a + 3.0 * b * t * t - 5.0 * c * t.powi(4),
            ModelKind::Table(tab) => {
                let s = t.abs().max(1e-12);
                let i = tab.segment(s);
                (tab.ys[i + 1] - tab.ys[i]) / (tab.ts[i + 1] - tab.ts[i])
            }
            ModelKind::Truncated { inner, zeta1 } => {
                if t.abs() > *zeta1 {
                    0.0
                } else {
                    inner.f_prime(t)
                }
            }
            ModelKind::Custom { f, .. } => {
                let h = 1e-6 * (1.0 + t.abs());
                (f(t + h) - f(t - h)) / (2.0 * h)
            }
        }
    }

    fn tag(&self) -> String {
        match self {
            ModelKind::Cubic { .. } => "cubic-minus-linear".into(),
            ModelKind::CubicQuintic { .. } => "cubic-quintic".into(),
            ModelKind::Table(_) => "tabulated".into(),
            ModelKind::Truncated { inner, .. } => format!("truncated({})", inner.tag()),
            ModelKind::Custom { .. } => "custom".into(),
        }
    }
}

/// A candidate Berestycki-Lions nonlinearity together with the ambient
/// dimension it is meant for.
#[derive(Debug, Clone)]
pub struct NonlinearityModel {
    pub kind: ModelKind,
    pub dim: u32,
}

impl NonlinearityModel {
    pub fn new(kind: ModelKind, dim: u32) -> Self {
        Self { kind, dim }
    }

    /// The reference model f(t) = -t + t^3.
    pub fn cubic(dim: u32) -> Self {
        Self::new(ModelKind::Cubic { a: 1.0, b: 1.0 }, dim)
    }

    pub fn f(&self, t: f64) -> f64 {
        self.kind.f(t)
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        self.kind.f_prime(t)
    }

    pub fn big_f(&self, t: f64) -> f64 {
        self.kind.big_f(t)
    }

    pub fn tag(&self) -> String {
        self.kind.tag()
    }
}

/// Linearization weight at zero: `mu = -1/2 * limsup_{t->0} f(t)/t`,
/// estimated on dyadic scales `t0 * 2^-j` with the max of the last
/// eight scales standing in for the limsup.
pub fn derive_mu(model: &NonlinearityModel, t0: f64, j_max: u32) -> Result<f64> {
    let tail = 8.min(j_max as usize + 1);
    let mut ratios = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let t = t0 * 0.5f64.powi(j as i32);
        ratios.push(model.f(t) / t);
    }
    let limsup = ratios[ratios.len() - tail..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !limsup.is_finite() || limsup >= 0.0 {
        return Err(Error::NotNegativeDefiniteAtZero(limsup));
    }
    Ok(-0.5 * limsup)
}

/// Search the bracket for a witness of `F(zeta) > 0`. Returns the scan point
/// maximizing `F` (ties toward smaller t); the paper only needs existence, so
/// a well-conditioned witness is preferred over the infimum.
pub fn find_zeta(model: &NonlinearityModel, t_min: f64, t_max: f64, step: f64) -> Result<f64> {
    let n = ((t_max - t_min) / step).round() as usize;
    let mut best_t = f64::NAN;
    let mut best_f = 0.0;
    for i in 0..=n {
        let t = t_min + i as f64 * step;
        if t <= 0.0 {
            continue;
        }
        let v = model.big_f(t);
        if v > best_f {
            best_f = v;
            best_t = t;
        }
    }
    if best_f > 0.0 {
        Ok(best_t)
    } else {
        Err(Error::NoPositivePrimitive(t_min, t_max))
    }
}

/// Midpoint rule for the subordination parameter: `lambda0` is the midpoint
/// of `(F2(zeta)/F1(zeta), 1)`.
pub fn find_lambda0(f1_zeta: f64, f2_zeta: f64) -> Result<f64> {
    if f1_zeta <= f2_zeta {
        return Err(Error::SplitNotSubordinate { f1: f1_zeta, f2: f2_zeta });
    }
    Ok(0.5 * (f2_zeta / f1_zeta + 1.0))
}

/// Truncation at the first zero of `f` above `zeta` (bisection to 1e-10).
/// Returns the model unchanged with `truncated = false` when `f` has no zero
/// in the bracket.
pub fn truncate(
    model: &NonlinearityModel,
    zeta: f64,
    bracket_hi: f64,
) -> (NonlinearityModel, bool) {
    let step = 1e-3;
    let n = ((bracket_hi - zeta) / step).ceil() as usize;
    let mut lo = zeta;
    let mut f_lo = model.f(lo);
    let mut root = None;
    for i in 1..=n {
        let t = zeta + i as f64 * step;
        let ft = model.f(t);
        if f_lo == 0.0 {
            root = Some(lo);
            break;
        }
        if f_lo.signum() != ft.signum() {
            // bisect [lo, t]
            let (mut a, mut b) = (lo, t);
            let mut fa = f_lo;
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                let fm = model.f(m);
                if fm == 0.0 {
                    a = m;
                    break;
                }
                if fa.signum() == fm.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            root = Some(0.5 * (a + b));
            break;
        }
        lo = t;
        f_lo = ft;
    }
    match root {
        Some(zeta1) => (
            NonlinearityModel::new(
                ModelKind::Truncated { inner: Box::new(model.kind.clone()), zeta1 },
                model.dim,
            ),
            true,
        ),
        None => (model.clone(), false),
    }
}

/// The split `f = f1 - f2` with its parameter family.
#[derive(Debug, Clone)]
pub struct SplitScheme {
    pub model: NonlinearityModel,
    pub mu: f64,
    pub zeta: f64,
    pub lambda0: f64,
    f1_repr: SplitRepr,
}

#[derive(Debug, Clone)]
enum SplitRepr {
    /// closed-form primitive of `max{f(t) + 2 mu t, 0}` via sign breakpoints
    /// of the polynomial; pairs are the intervals on t >= 0 where f1 > 0
    Poly { positive: Vec<(f64, f64)> },
    Table(LinearTable),
}

impl SplitScheme {
    /// Build the split for a model with explicit `mu` and `zeta`.
    pub fn with_parameters(model: &NonlinearityModel, mu: f64, zeta: f64) -> Result<Self> {
        let f1_repr = match &model.kind {
            ModelKind::Cubic { a, b } => {
                Self::poly_repr(&[(1, 2.0 * mu - a), (3, *b)])
            }
            ModelKind::CubicQuintic { a, b, c } => {
                Self::poly_repr(&[(1, 2.0 * mu - a), (3, *b), (5, -c)])
            }
            ModelKind::Table(tab) => SplitRepr::Table(tab.clamped_shift(2.0 * mu)),
            ModelKind::Truncated { .. } | ModelKind::Custom { .. } => {
                // sample densely, then the exact piecewise-linear machinery
                // takes over for the primitive of the clamped shift
                let t_hi = 4.0 * zeta.max(1.0) + 8.0;
                let n = 20_000usize;
                let hs = t_hi / n as f64;
                let ts: Vec<f64> = (0..=n).map(|i| i as f64 * hs).collect();
                let ys: Vec<f64> = ts.iter().map(|&t| model.f(t)).collect();
                let tab = LinearTable::new(ts, ys).expect("dense table");
                SplitRepr::Table(tab.clamped_shift(2.0 * mu))
            }
        };
        let mut scheme = Self { model: model.clone(), mu, zeta, lambda0: 0.0, f1_repr };
        let lambda0 = find_lambda0(scheme.big_f1(zeta), scheme.big_f2(zeta))?;
        scheme.lambda0 = lambda0;
        Ok(scheme)
    }

    /// Full pipeline: estimate `mu`, find a `zeta` witness, fix `lambda0`.
    pub fn derive(model: &NonlinearityModel) -> Result<Self> {
        let mu = derive_mu(model, 1.0, 40)?;
        let zeta = find_zeta(model, 0.0, 4.0, 1e-3)?;
        Self::with_parameters(model, mu, zeta)
    }

    /// Sign intervals of an odd polynomial `sum c_k t^k` (odd k only) on t >= 0.
    fn poly_repr(terms: &[(u32, f64)]) -> SplitRepr {
        let eval = |t: f64| -> f64 { terms.iter().map(|&(k, c)| c * t.powi(k as i32)).sum() };
        // scan for sign changes on a fine grid, refine by bisection
        let t_hi = 64.0;
        let n = 64_000usize;
        let h = t_hi / n as f64;
        let mut positive: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<f64> = None;
        let mut prev_t = 0.0;
        let mut prev_v = 0.0;
        for i in 1..=n {
            let t = i as f64 * h;
            let v = eval(t);
            let crossed = prev_v <= 0.0 && v > 0.0 || prev_v > 0.0 && v <= 0.0;
            if crossed {
                let (mut a, mut b) = (prev_t, t);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if (eval(m) > 0.0) == (v > 0.0) {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                let root = 0.5 * (a + b);
                if v > 0.0 {
                    open = Some(root);
                } else if let Some(start) = open.take() {
                    positive.push((start, root));
                }
            }
            prev_t = t;
            prev_v = v;
        }
        if let Some(start) = open {
            positive.push((start, f64::INFINITY));
        }
        if positive.is_empty() && eval(h) > 0.0 {
            positive.push((0.0, f64::INFINITY));
        }
        SplitRepr::Poly { positive }
    }

    fn poly_antiderivative(&self, t: f64) -> f64 {
        match &self.model.kind {
            ModelKind::Cubic { a, b } => {
                let c1 = 2.0 * self.mu - a;
                c1 * t * t / 2.0 + b * t.powi(4) / 4.0
            }
            ModelKind::CubicQuintic { a, b, c } => {
                let c1 = 2.0 * self.mu - a;
                c1 * t * t / 2.0 + b * t.powi(4) / 4.0 - c * t.powi(6) / 6.0
            }
            _ => unreachable!("poly antiderivative only for polynomial kinds"),
        }
    }

    /// `f1(t) = max{f(t) + 2 mu t, 0}` for t >= 0, odd extension below.
    pub fn f1(&self, t: f64) -> f64 {
        let s = t.abs();
        let raw = self.model.f(s) + 2.0 * self.mu * s;
        t.signum() * raw.max(0.0)
    }

    /// `f2 = f1 - f`, pointwise identity.
    pub fn f2(&self, t: f64) -> f64 {
        self.f1(t) - self.model.f(t)
    }

    /// Primitive of f1, exact per representation; even function.
    pub fn big_f1(&self, t: f64) -> f64 {
        let s = t.abs();
        match &self.f1_repr {
            SplitRepr::Poly { positive } => {
                let mut acc = 0.0;
                for &(a, b) in positive {
                    if s <= a {
                        break;
                    }
                    let hi = s.min(b);
                    acc += self.poly_antiderivative(hi) - self.poly_antiderivative(a);
                }
                acc
            }
            SplitRepr::Table(tab) => tab.primitive(s),
        }
    }

    /// Primitive of f2; even, satisfies `F2(t) >= mu t^2`.
    pub fn big_f2(&self, t: f64) -> f64 {
        self.big_f1(t) - self.model.big_f(t)
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        if lambda < self.lambda0 - 1e-12 || lambda > 1.0 + 1e-12 {
            return Err(Error::LambdaOutOfRange(lambda, self.lambda0));
        }
        Ok(())
    }

    pub fn f_lambda(&self, lambda: f64, t: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(lambda * self.f1(t) - self.f2(t))
    }

    pub fn big_f_lambda(&self, lambda: f64, t: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(lambda * self.big_f1(t) - self.big_f2(t))
    }

    /// Unchecked pointwise family evaluation, for hot loops that have already
    /// validated lambda.
    #[inline]
    pub fn f_lambda_raw(&self, lambda: f64, t: f64) -> f64 {
        lambda * self.f1(t) - self.f2(t)
    }

    /// Derivative of the family member, away from the clamp kinks.
    #[inline]
    pub fn f_lambda_prime(&self, lambda: f64, t: f64) -> f64 {
        let s = t.abs();
        let active = self.model.f(s) + 2.0 * self.mu * s > 0.0;
        let f1p = if active { self.model.f_prime(s) + 2.0 * self.mu } else { 0.0 };
        let f2p = f1p - self.model.f_prime(s);
        lambda * f1p - f2p
    }

    #[inline]
    pub fn big_f1_raw(&self, t: f64) -> f64 {
        self.big_f1(t)
    }

    #[inline]
    pub fn big_f2_raw(&self, t: f64) -> f64 {
        self.big_f2(t)
    }
}

/// Comparison envelope: `h(t) = max{mu t + f(t), 0}`, its `t^{p0}`-monotone
/// majorant `hbar`, and the primitive `Hbar`, all on a dense sample grid.
#[derive(Debug, Clone)]
pub struct ComparisonEnvelope {
    pub p0: f64,
    pub delta0: f64,
    ts: Vec<f64>,
    hbar: Vec<f64>,
    big_hbar: Vec<f64>,
    mu: f64,
    model: NonlinearityModel,
}

impl ComparisonEnvelope {
    pub fn h(&self, t: f64) -> f64 {
        let s = t.abs();
        let raw = self.mu * s + self.model.f(s);
        t.signum() * raw.max(0.0)
    }

    pub fn hbar(&self, t: f64) -> f64 {
        t.signum() * interp(&self.ts, &self.hbar, t.abs())
    }

    pub fn big_hbar(&self, t: f64) -> f64 {
        interp(&self.ts, &self.big_hbar, t.abs())
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let h = xs[1] - xs[0];
    let i = ((x / h).floor() as usize).min(xs.len() - 2);
    let w = (x - xs[i]) / h;
    ys[i] * (1.0 - w) + ys[i + 1] * w
}

/// Build the envelope for exponent `p0` on `[0, t_max]`.
pub fn comparison_envelope(
    scheme: &SplitScheme,
    p0: f64,
    t_max: f64,
    n: usize,
) -> ComparisonEnvelope {
    let model = scheme.model.clone();
    let mu = scheme.mu;
    let h_of = |s: f64| (mu * s + model.f(s)).max(0.0);
    let hq = t_max / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * hq).collect();
    let mut ratio_max = 0.0f64;
    let mut hbar = Vec::with_capacity(n + 1);
    hbar.push(0.0);
    for &t in &ts[1..] {
        ratio_max = ratio_max.max(h_of(t) / t.powf(p0));
        hbar.push(t.powf(p0) * ratio_max);
    }
    let big_hbar = crate::quad::cumulative_simpson(&hbar, hq);
    let mut delta0 = 0.0;
    for (i, &t) in ts.iter().enumerate() {
        if h_of(t) > 0.0 {
            break;
        }
        delta0 = t;
        let _ = i;
    }
    ComparisonEnvelope { p0, delta0, ts, hbar, big_hbar, mu, model }
}

/// Evidence-carrying verdict for the growth and sign conditions.
#[derive(Debug, Clone, Serialize)]
pub struct BlReport {
    pub odd_ok: bool,
    pub odd_max_defect: f64,
    pub f2_ok: bool,
    pub mu_estimate: Option<f64>,
    pub liminf_ratio: f64,
    pub f3_ok: bool,
    pub f3_prime_ok: bool,
    pub f3_tail_ratios: Vec<f64>,
    pub f4_ok: bool,
    pub zeta_witness: Option<f64>,
    pub continuity_max_jump: f64,
}

impl BlReport {
    pub fn all_pass(&self) -> bool {
        self.odd_ok && self.f2_ok && self.f3_ok && self.f4_ok
    }
}

/// Sampled check of the four structural conditions: oddness, negative-definite
/// linearization at zero, subcritical growth for the model's dimension, and a
/// positive-primitive witness.
pub fn validate_bl(model: &NonlinearityModel, t_probe_max: f64, f3_tol: f64) -> BlReport {
    let n_probe = 2000;
    let mut odd_max_defect = 0.0f64;
    let mut continuity_max_jump = 0.0f64;
    let mut prev = model.f(0.0);
    for i in 0..=n_probe {
        let t = t_probe_max * i as f64 / n_probe as f64;
        let v = model.f(t);
        odd_max_defect = odd_max_defect.max((v + model.f(-t)).abs());
        continuity_max_jump = continuity_max_jump.max((v - prev).abs());
        prev = v;
    }
    let scale = (1.0f64).max(model.f(t_probe_max).abs());
    let odd_ok = odd_max_defect <= 1e-12 * scale;

    let mu = derive_mu(model, 1.0, 40).ok();
    let mut liminf_ratio = f64::INFINITY;
    for j in 0..=40 {
        let t = 0.5f64.powi(j);
        liminf_ratio = liminf_ratio.min(model.f(t) / t);
    }
    let f2_ok = mu.is_some() && liminf_ratio.is_finite();

    let p_crit = (model.dim as f64 + 2.0) / (model.dim as f64 - 2.0);
    let mut tail = Vec::new();
    for j in 0..=24 {
        let t = 2.0f64.powi(j) * t_probe_max.max(1.0);
        tail.push(model.f(t) / t.powf(p_crit));
    }
    let last = &tail[tail.len() - 3..];
    let f3_ok = last.iter().all(|r| r.abs() <= f3_tol);
    let f3_prime_ok = last.iter().all(|r| *r <= f3_tol);

    let zeta_witness = find_zeta(model, 0.0, 4.0, 1e-3).ok();
    let f4_ok = zeta_witness.is_some();

    BlReport {
        odd_ok,
        odd_max_defect,
        f2_ok,
        mu_estimate: mu,
        liminf_ratio,
        f3_ok,
        f3_prime_ok,
        f3_tail_ratios: tail[tail.len() - 3..].to_vec(),
        f4_ok,
        zeta_witness,
        continuity_max_jump,
    }
}

/// Cross-check a primitive by quadrature of `f` (used in tests and the
/// nonlinearity check command).
pub fn primitive_defect(model: &NonlinearityModel, t: f64) -> f64 {
    let f = |s: f64| model.f(s);
    (adaptive_simpson(&f, 0.0, t, 1e-10) - model.big_f(t)).abs()
}
