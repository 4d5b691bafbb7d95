//! Gauss–Legendre quadrature: globally adaptive bisection on finite
//! intervals, a mapped rule for semi-infinite ranges, fixed tensor rules for
//! rectangles and nested rules for discs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Number of Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Refinement budget; exceeding it is a quadrature failure.
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: crate::TOL.quad_abs,
            rel_tol: crate::TOL.quad_rel,
            order: 16,
            max_panels: 20_000,
        }
    }
}

impl QuadSpec {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadSpec {
            abs_tol,
            ..QuadSpec::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 || self.order > MAX_ORDER {
            return Err(Error::domain(
                "order",
                format!("Gauss-Legendre order must lie in 2..={MAX_ORDER}"),
            ));
        }
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || self.abs_tol + self.rel_tol == 0.0 {
            return Err(Error::domain("tol", "tolerances must be >= 0 and not both zero"));
        }
        Ok(())
    }
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule of the given order.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static RULES: [OnceLock<GaussLegendre>; MAX_ORDER + 1] =
            [const { OnceLock::new() }; MAX_ORDER + 1];
        assert!((1..=MAX_ORDER).contains(&n), "unsupported Gauss-Legendre order {n}");
        RULES[n].get_or_init(|| GaussLegendre::new(n))
    }

    fn apply<F>(&self, f: &mut F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x)?;
        }
        Ok(s * half)
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn panel<F>(rule: &GaussLegendre, f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let whole = rule.apply(f, a, b)?;
    let value = rule.apply(f, a, m)? + rule.apply(f, m, b)?;
    if !value.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Panel {
        a,
        b,
        value,
        err: (whole - value).abs(),
    })
}

/// Adaptive integral of a fallible integrand over `[breaks[0], breaks[last]]`,
/// with the listed interior points used as initial panel boundaries.
pub fn try_integrate_breaks<F>(mut f: F, breaks: &[f64], spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    if breaks.len() < 2 {
        return Err(Error::domain("breaks", "need at least two interval endpoints"));
    }
    if breaks.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("breaks", "interval endpoints must be finite"));
    }
    let rule = GaussLegendre::cached(spec.order);
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] != w[0] {
            heap.push(panel(rule, &mut f, w[0], w[1])?);
        }
    }
    let mut count = heap.len();
    loop {
        let (total, err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if count >= spec.max_panels {
            return Err(Error::Quadrature(format!(
                "panel budget {} exhausted on [{}, {}]: estimate {total:e}, error {err:e}",
                spec.max_panels,
                breaks[0],
                breaks[breaks.len() - 1]
            )));
        }
        let Some(worst) = heap.pop() else {
            return Ok(0.0);
        };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        heap.push(panel(rule, &mut f, worst.a, m)?);
        heap.push(panel(rule, &mut f, m, worst.b)?);
        count += 1;
    }
}

pub fn try_integrate<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    try_integrate_breaks(f, &[a, b], spec)
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_breaks(|x| Ok(f(x)), &[a, b], spec)
}

/// `∫_a^∞ f(t) dt` through `t = a + L·s/(1 − s)`; `scale` is `L`.
pub fn try_integrate_semi_infinite<F>(mut f: F, a: f64, scale: f64, spec: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::domain("scale", "semi-infinite map scale must be positive"));
    }
    try_integrate_breaks(
        |s| {
            let one_minus = 1.0 - s;
            let t = a + scale * s / one_minus;
            let v = f(t)?;
            if v == 0.0 {
                return Ok(0.0);
            }
            Ok(v * scale / (one_minus * one_minus))
        },
        &[0.0, 0.5, 1.0],
        spec,
    )
}

/// Tensor Gauss–Legendre rule on a rectangle, `sub × sub` sub-rectangles of
/// `order²` points each.
pub fn try_integrate_rect<F>(
    mut f: F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    order: usize,
    sub: usize,
) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let rule = GaussLegendre::cached(order);
    let sub = sub.max(1);
    let hx = (x1 - x0) / sub as f64;
    let hy = (y1 - y0) / sub as f64;
    let mut total = 0.0;
    for i in 0..sub {
        let cx = x0 + (i as f64 + 0.5) * hx;
        for j in 0..sub {
            let cy = y0 + (j as f64 + 0.5) * hy;
            let mut s = 0.0;
            for (xn, xw) in rule.nodes.iter().zip(&rule.weights) {
                let x = cx + 0.5 * hx * xn;
                for (yn, yw) in rule.nodes.iter().zip(&rule.weights) {
                    s += xw * yw * f(x, cy + 0.5 * hy * yn)?;
                }
            }
            total += s * 0.25 * hx * hy;
        }
    }
    Ok(total)
}

/// Nested adaptive integral over the disc `|z − c| ≤ radius` in polar
/// coordinates; `radial_breaks` are extra radii where the integrand bends.
pub fn try_integrate_disc<F>(
    mut f: F,
    (cx, cy): (f64, f64),
    radius: f64,
    radial_breaks: &[f64],
    spec: &QuadSpec,
) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut breaks = vec![0.0];
    breaks.extend(radial_breaks.iter().copied().filter(|&r| r > 0.0 && r < radius));
    breaks.push(radius);
    let inner = QuadSpec {
        abs_tol: spec.abs_tol / (10.0 * radius.max(1.0)),
        rel_tol: spec.rel_tol,
        ..*spec
    };
    let tau = std::f64::consts::TAU;
    try_integrate_breaks(
        |r| {
            if r == 0.0 {
                return Ok(0.0);
            }
            let ring = try_integrate_breaks(
                |t| f(cx + r * t.cos(), cy + r * t.sin()),
                &[0.0, 0.25 * tau, 0.5 * tau, 0.75 * tau, tau],
                &inner,
            )?;
            Ok(r * ring)
        },
        &breaks,
        spec,
    )
}
