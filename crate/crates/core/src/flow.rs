//! Backward flow of the marked generating functions.
//!
//! `G(t, x, v)` solves `du_k/dt = B_k(u, v) + B̄_k(u)`, `u(0) = x`. Evaluated
//! at `x = 1`, component `k` is the joint generating function of the
//! marked-event counters up to time `t` for a single type-`k` ancestor.
//!
//! The production path is fixed-step classical Runge-Kutta. [`picard`]
//! computes successive approximations with quadrature and is meant as an
//! independent check.

use crate::error::{Error, Result};
use crate::extinction::{self, DEFAULT_MAX_ITER};
use crate::model::{MarkAssignment, MarkedSets, ProcessSpec, WeightedLaws};

/// Largest excursion outside the unit box tolerated after a step.
pub const MAX_CLAMP: f64 = 1e-6;

/// Default step is `STEP_SCALE / theta_max`.
pub const STEP_SCALE: f64 = 0.01;

/// Horizon cap for [`limit`], in units of `1 / theta_max`.
pub const LIMIT_HORIZON_CAP: f64 = (1u64 << 20) as f64;

/// Grid density of the Picard quadrature, in nodes per unit time.
pub const PICARD_NODES_PER_UNIT: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub g: Vec<f64>,
    pub t: f64,
    pub steps_taken: u64,
    pub max_clamp: f64,
}

/// Right-hand side of the flow at `u`.
pub fn drift(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    u: &[f64],
) -> Result<Vec<f64>> {
    spec.check_point(u)?;
    let laws = WeightedLaws::new(spec, marks, vals)?;
    let mut out = vec![0.0; spec.dim()];
    laws.drift_into(u, &mut out);
    Ok(out)
}

/// Number of steps used by default on `[0, t]`: the step is at most
/// `min(0.01 / theta_max, t / 100)` and divides `t` exactly.
pub fn default_steps(spec: &ProcessSpec, t: f64) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let h = (STEP_SCALE / spec.theta_max()).min(t / 100.0);
    (t / h - 1e-9).ceil().max(1.0) as u64
}

/// Fixed-step RK4 integrator for one set of mark values.
#[derive(Debug, Clone)]
pub struct Flow<'a> {
    laws: WeightedLaws<'a>,
}

impl<'a> Flow<'a> {
    pub fn new(spec: &'a ProcessSpec, marks: &MarkedSets, vals: &MarkAssignment) -> Result<Self> {
        Ok(Self {
            laws: WeightedLaws::new(spec, marks, vals)?,
        })
    }

    pub fn laws(&self) -> &WeightedLaws<'a> {
        &self.laws
    }

    /// Advances `x` by `steps` steps of size `h`, projecting onto the unit
    /// box after every step. Returns the largest excursion removed.
    pub fn advance(&self, x: &mut [f64], h: f64, steps: u64) -> Result<f64> {
        let d = x.len();
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        let mut k3 = vec![0.0; d];
        let mut k4 = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        let mut max_clamp: f64 = 0.0;
        for _ in 0..steps {
            self.laws.drift_into(x, &mut k1);
            for i in 0..d {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            self.laws.drift_into(&tmp, &mut k2);
            for i in 0..d {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            self.laws.drift_into(&tmp, &mut k3);
            for i in 0..d {
                tmp[i] = x[i] + h * k3[i];
            }
            self.laws.drift_into(&tmp, &mut k4);
            for i in 0..d {
                let next = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                let clamped = next.clamp(0.0, 1.0);
                max_clamp = max_clamp.max((next - clamped).abs());
                x[i] = clamped;
            }
            if max_clamp > MAX_CLAMP {
                return Err(Error::ClampExceeded {
                    excursion: max_clamp,
                });
            }
        }
        Ok(max_clamp)
    }

    /// `G(t, x0)` with `steps` equal steps.
    pub fn solve(&self, x0: &[f64], t: f64, steps: u64) -> Result<FlowResult> {
        self.laws.spec().check_point(x0)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be finite and nonnegative, got {t}"),
            });
        }
        let mut g = x0.to_vec();
        if t == 0.0 || steps == 0 {
            return Ok(FlowResult {
                g,
                t,
                steps_taken: 0,
                max_clamp: 0.0,
            });
        }
        let max_clamp = self.advance(&mut g, t / steps as f64, steps)?;
        Ok(FlowResult {
            g,
            t,
            steps_taken: steps,
            max_clamp,
        })
    }
}

/// Integrates the flow from `x0` to time `t`. With `h = None` the default
/// step rule applies; otherwise the step is shrunk until it divides `t`.
pub fn integrate(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    x0: &[f64],
    t: f64,
    h: Option<f64>,
) -> Result<FlowResult> {
    let steps = match h {
        None => default_steps(spec, t),
        Some(h) if h > 0.0 => {
            if t > 0.0 {
                (t / h - 1e-9).ceil().max(1.0) as u64
            } else {
                0
            }
        }
        Some(h) => {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("step must be positive, got {h}"),
            })
        }
    };
    Flow::new(spec, marks, vals)?.solve(x0, t, steps)
}

/// Constants of the successive-approximation error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardParams {
    /// `sum_k theta_k`.
    pub m: f64,
    /// l1 Lipschitz constant of the nonlinear part on the unit box.
    pub l: f64,
    pub d: usize,
}

impl PicardParams {
    pub fn new(laws: &WeightedLaws<'_>) -> Self {
        Self {
            m: laws.spec().theta_sum(),
            l: laws.reaction_lipschitz(),
            d: laws.dim(),
        }
    }

    /// Bound on `||u^{(n+1)}(t) - u^{(n)}(t)||_1`:
    /// `M (d L)^n t^{n+1} / (n+1)!`.
    pub fn bound(&self, n: u32, t: f64) -> f64 {
        let dl = self.d as f64 * self.l;
        let mut b = self.m * t;
        for i in 1..=n {
            b *= dl * t / f64::from(i + 1);
        }
        b
    }
}

/// Values at time `t` of the Picard iterates `u^{(0)}, ..., u^{(n)}`.
///
/// `u^{(0)}_k(s) = x_k e^{-theta_k s}` and
/// `u^{(n)}_k(s) = e^{-theta_k s} [x_k + int_0^s e^{theta_k r} H_k(u^{(n-1)}(r)) dr]`
/// with `H_k` the drift minus its linear `-theta_k u_k` term. Integrals use
/// composite Simpson on a uniform grid.
pub fn picard_sequence(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    x0: &[f64],
    t: f64,
    n: u32,
) -> Result<Vec<Vec<f64>>> {
    spec.check_point(x0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be finite and nonnegative, got {t}"),
        });
    }
    let laws = WeightedLaws::new(spec, marks, vals)?;
    let d = spec.dim();
    if t == 0.0 {
        return Ok(vec![x0.to_vec(); n as usize + 1]);
    }
    let mut intervals = (t * PICARD_NODES_PER_UNIT).ceil() as usize;
    intervals = intervals.max(2);
    if intervals % 2 == 1 {
        intervals += 1;
    }
    let h = t / intervals as f64;
    let nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
    let thetas: Vec<f64> = spec.laws().iter().map(|l| l.theta).collect();

    // path[i][k] = current iterate at node i
    let mut path: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| (0..d).map(|k| x0[k] * (-thetas[k] * s).exp()).collect())
        .collect();
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(path[intervals].clone());

    let mut integrand = vec![0.0; intervals + 1];
    let mut cumulative = vec![0.0; intervals + 1];
    for _ in 0..n {
        let mut next = vec![vec![0.0; d]; intervals + 1];
        for k in 0..d {
            for (i, &s) in nodes.iter().enumerate() {
                integrand[i] = (thetas[k] * s).exp() * laws.reaction(k, &path[i]);
            }
            cumulative_simpson(&integrand, h, &mut cumulative);
            for (i, &s) in nodes.iter().enumerate() {
                next[i][k] = (-thetas[k] * s).exp() * (x0[k] + cumulative[i]);
            }
        }
        path = next;
        out.push(path[intervals].clone());
    }
    Ok(out)
}

/// The `n`-th Picard iterate at time `t`.
pub fn picard(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    x0: &[f64],
    t: f64,
    n: u32,
) -> Result<Vec<f64>> {
    Ok(picard_sequence(spec, marks, vals, x0, t, n)?
        .pop()
        .expect("sequence holds n + 1 iterates"))
}

/// Running integral of sampled values on a uniform grid with an even number
/// of intervals. Even nodes use composite Simpson; odd nodes add a
/// three-point quadratic rule over their last interval.
fn cumulative_simpson(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len() - 1;
    out[0] = 0.0;
    let mut i = 2;
    while i <= n {
        out[i] = out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        out[i - 1] = out[i - 2] + h / 12.0 * (5.0 * f[i - 2] + 8.0 * f[i - 1] - f[i]);
        i += 2;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResult {
    pub g: Vec<f64>,
    /// Horizon at which successive checkpoints agreed.
    pub horizon: f64,
    pub marked_root: Vec<f64>,
    pub steps_taken: u64,
}

/// `lim_{t -> inf} G(t, 1, v)`, found by doubling the horizon until two
/// successive checkpoints differ by at most `tol` in l1. The result must agree
/// with the marked root within `10 tol`.
pub fn limit(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    tol: f64,
) -> Result<LimitResult> {
    vals.require_below_one(marks)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let flow = Flow::new(spec, marks, vals)?;
    let theta_max = spec.theta_max();
    let h = STEP_SCALE / theta_max;
    let steps_per_unit = (1.0 / STEP_SCALE) as u64;
    let cap = LIMIT_HORIZON_CAP / theta_max;

    let root =
        extinction::marked_root(spec, marks, vals, (tol * 1e-3).min(1e-12), DEFAULT_MAX_ITER)?
            .ensure_converged()?
            .q_marked;

    let mut g = vec![1.0; spec.dim()];
    let mut horizon = 1.0 / theta_max;
    let mut steps_taken = steps_per_unit;
    flow.advance(&mut g, h, steps_per_unit)?;
    loop {
        if horizon >= cap {
            return Err(Error::HorizonCap {
                horizon,
                flow: g,
                root,
            });
        }
        let prev = g.clone();
        // doubling from T to 2T takes as many steps as reaching T did
        flow.advance(&mut g, h, steps_taken)?;
        steps_taken *= 2;
        horizon *= 2.0;
        let diff: f64 = g.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        if diff <= tol {
            break;
        }
    }
    let gap = g
        .iter()
        .zip(&root)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if gap > 10.0 * tol {
        return Err(Error::LimitMismatch { flow: g, root });
    }
    Ok(LimitResult {
        g,
        horizon,
        marked_root: root,
        steps_taken,
    })
}
