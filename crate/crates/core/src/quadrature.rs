//! Adaptive Gauss–Kronrod (7/15) quadrature over a list of panels.
//!
//! Nodes are strictly interior to each panel, so integrands never get
//! evaluated at panel endpoints. Endpoints flagged as singular are treated
//! as inverse-square-root singularities and removed with `x = a + t²`
//! (or `x = b − t²`) before the rule is applied.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const XK7: [f64; 4] = [0.960_491_268_708_020_3, 0.774_596_669_241_483_4, 0.434_243_749_346_802_6, 0.0];
const WK7: [f64; 4] =
    [0.104_656_226_026_467_3, 0.268_488_089_868_333_4, 0.401_397_414_775_962_2, 0.450_916_538_658_474_1];
const WG3: [f64; 2] = [5.0 / 9.0, 8.0 / 9.0];

/// Embedded Gauss–Kronrod pair used on each subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// 3-point Gauss inside 7-point Kronrod; cheaper on smooth panels.
    Gk7,
    #[default]
    Gk15,
}

impl Rule {
    fn nodes(self) -> (&'static [f64], &'static [f64], &'static [f64]) {
        match self {
            Rule::Gk7 => (&XK7, &WK7, &WG3),
            Rule::Gk15 => (&XGK, &WGK, &WG),
        }
    }

    fn points(self) -> usize {
        match self {
            Rule::Gk7 => 7,
            Rule::Gk15 => 15,
        }
    }
}

/// An integration interval. `singular_lo` / `singular_hi` mark endpoints
/// where the integrand may blow up like `1/√(x − a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub singular_lo: bool,
    pub singular_hi: bool,
}

impl Panel {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, singular_lo: false, singular_hi: false }
    }

    pub fn singular(lo: f64, hi: f64, singular_lo: bool, singular_hi: bool) -> Self {
        Self { lo, hi, singular_lo, singular_hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub rule: Rule,
}

impl QuadOptions {
    pub const fn new(abs_tol: f64, max_evals: usize) -> Self {
        Self { abs_tol, rel_tol: 0.0, max_evals, rule: Rule::Gk15 }
    }

    pub const fn with_rule(self, rule: Rule) -> Self {
        Self { rule, ..self }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self::new(1e-6, 100_000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// An integrand evaluation point. `gap_lo` / `gap_hi` are the distances to
/// the ends of the originating panel, computed without cancellation when
/// the square-root substitution is active, and `panel` is that panel's
/// index in the caller's list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub gap_lo: f64,
    pub gap_hi: f64,
    pub panel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MapKind {
    Identity,
    SqrtLo,
    SqrtHi,
    /// `x = lo + w·t²(3 − 2t)`, square-root smoothing at both ends.
    SqrtBoth,
}

#[derive(Debug, Clone, Copy)]
struct Map {
    kind: MapKind,
    lo: f64,
    hi: f64,
    panel: usize,
}

impl Map {
    /// Node and Jacobian at parameter `t`.
    #[inline]
    fn apply(self, t: f64) -> (Node, f64) {
        let width = self.hi - self.lo;
        let (x, gap_lo, gap_hi, jac) = match self.kind {
            MapKind::Identity => (t, t - self.lo, self.hi - t, 1.0),
            MapKind::SqrtLo => {
                let u = t * t;
                (self.lo + u, u, width - u, 2.0 * t)
            }
            MapKind::SqrtHi => {
                let u = t * t;
                (self.hi - u, width - u, u, 2.0 * t)
            }
            MapKind::SqrtBoth => {
                let s = 1.0 - t;
                let gap_lo = width * t * t * (3.0 - 2.0 * t);
                let gap_hi = width * s * s * (1.0 + 2.0 * t);
                let x = if t <= 0.5 { self.lo + gap_lo } else { self.hi - gap_hi };
                (x, gap_lo, gap_hi, 6.0 * width * t * s)
            }
        };
        (Node { x, gap_lo, gap_hi, panel: self.panel }, jac)
    }
}

/// Result of [`integrate_adaptive_vec`]: one value per component and a
/// single error estimate summed over components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralVec<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    map: Map,
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> Segment<N> {
    fn x_range(&self) -> (f64, f64) {
        let (na, _) = self.map.apply(self.a);
        let (nb, _) = self.map.apply(self.b);
        (na.x.min(nb.x), na.x.max(nb.x))
    }
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<const N: usize, F: FnMut(&Node) -> [f64; N]>(
    f: &mut F,
    rule: Rule,
    map: Map,
    a: f64,
    b: f64,
) -> ([f64; N], f64) {
    let (xk, wk, wg) = rule.nodes();
    let pairs = xk.len() - 1;
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| {
        let (node, jac) = map.apply(t);
        let mut v = f(&node);
        for c in v.iter_mut() {
            let scaled = *c * jac;
            *c = if scaled.is_finite() { scaled } else { 0.0 };
        }
        v
    };

    let fc = eval(center);
    let mut fv1 = [[0.0; N]; 7];
    let mut fv2 = [[0.0; N]; 7];
    for j in 0..pairs {
        let dx = half * xk[j];
        fv1[j] = eval(center - dx);
        fv2[j] = eval(center + dx);
    }

    let mut value = [0.0; N];
    let mut total_err = 0.0;
    for c in 0..N {
        let mut res_k = fc[c] * wk[pairs];
        let mut res_g = fc[c] * wg[wg.len() - 1];
        let mut res_abs = res_k.abs();
        for j in 0..pairs {
            let (f1, f2) = (fv1[j][c], fv2[j][c]);
            res_k += wk[j] * (f1 + f2);
            res_abs += wk[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += wg[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = wk[pairs] * (fc[c] - mean).abs();
        for j in 0..pairs {
            res_asc += wk[j] * ((fv1[j][c] - mean).abs() + (fv2[j][c] - mean).abs());
        }
        value[c] = res_k * half;
        let res_abs = res_abs * half.abs();
        let res_asc = res_asc * half.abs();
        let mut err = ((res_k - res_g) * half).abs();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * res_abs);
        }
        total_err += err;
    }
    (value, total_err)
}

fn initial_segments(panels: &[Panel]) -> Vec<(Map, f64, f64)> {
    let mut out = Vec::with_capacity(panels.len() * 2);
    for (i, p) in panels.iter().enumerate() {
        if !(p.hi > p.lo) {
            continue;
        }
        let map = |kind| Map { kind, lo: p.lo, hi: p.hi, panel: i };
        match (p.singular_lo, p.singular_hi) {
            (false, false) => out.push((map(MapKind::Identity), p.lo, p.hi)),
            (true, false) => out.push((map(MapKind::SqrtLo), 0.0, p.width().sqrt())),
            (false, true) => out.push((map(MapKind::SqrtHi), 0.0, p.width().sqrt())),
            (true, true) => out.push((map(MapKind::SqrtBoth), 0.0, 1.0)),
        }
    }
    out
}

/// Integrate `f` over the union of `panels`, refining the panel with the
/// largest error estimate until the total error meets
/// `max(abs_tol, rel_tol·|value|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, panels: &[Panel], opts: &QuadOptions) -> Result<Integral> {
    let r = integrate_nodes(|n| [f(n.x)], panels, opts)?;
    Ok(Integral { value: r.value[0], error: r.error, evaluations: r.evaluations })
}

/// Vector-valued [`integrate_adaptive`]: all components share the nodes,
/// and the relative target applies to the sum of their magnitudes.
pub fn integrate_adaptive_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    panels: &[Panel],
    opts: &QuadOptions,
) -> Result<IntegralVec<N>> {
    integrate_nodes(|n| f(n.x), panels, opts)
}

/// [`integrate_adaptive_vec`] with the full [`Node`] passed to the
/// integrand, for integrands that need the exact distance to a singular
/// panel end.
pub fn integrate_nodes<const N: usize, F: FnMut(&Node) -> [f64; N]>(
    mut f: F,
    panels: &[Panel],
    opts: &QuadOptions,
) -> Result<IntegralVec<N>> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    // Running totals over the heap; segments below roundoff leave the heap
    // and keep contributing their value, but their error no longer blocks
    // convergence.
    let mut value = [0.0; N];
    let mut error = 0.0;
    let mut settled_error = 0.0;
    let add = |acc: &mut [f64; N], v: &[f64; N], sign: f64| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += sign * b;
        }
    };

    for (map, a, b) in initial_segments(panels) {
        let (v, e) = gauss_kronrod(&mut f, opts.rule, map, a, b);
        evaluations += opts.rule.points();
        add(&mut value, &v, 1.0);
        error += e;
        heap.push(Segment { map, a, b, value: v, error: e });
    }

    loop {
        let magnitude: f64 = value.iter().map(|v| v.abs()).sum();
        let target = opts.abs_tol.max(opts.rel_tol * magnitude);
        let done = |value, error| IntegralVec { value, error, evaluations };
        let Some(worst) = heap.pop() else {
            return Ok(done(value, error + settled_error));
        };
        if error <= target {
            return Ok(done(value, error + settled_error));
        }
        if evaluations + 2 * opts.rule.points() > opts.max_evals {
            let (worst_lo, worst_hi) = worst.x_range();
            return Err(Error::Quadrature {
                evaluations,
                estimate: value.iter().sum(),
                error: error + settled_error,
                worst_lo,
                worst_hi,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (xa, xb) = worst.x_range();
        error -= worst.error;
        if !(mid > worst.a && mid < worst.b) || xb - xa < 64.0 * f64::EPSILON * (1.0 + xa.abs().max(xb.abs())) {
            settled_error += worst.error;
            continue;
        }
        add(&mut value, &worst.value, -1.0);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gauss_kronrod(&mut f, opts.rule, worst.map, a, b);
            add(&mut value, &v, 1.0);
            error += e;
            heap.push(Segment { map: worst.map, a, b, value: v, error: e });
        }
        evaluations += 2 * opts.rule.points();
        error = error.max(0.0);
    }
}
