//! Bounded limited-memory quasi-Newton minimization (Byrd-Lu-Nocedal-Zhu)
//! with forward-difference gradients.
//!
//! Each iteration walks the projected-gradient path to a generalized Cauchy
//! point, minimizes the quadratic model over the free variables (direct
//! primal method), and line-searches the resulting direction under strong
//! Wolfe conditions. Gradients are forward differences with the step
//! clipped (and flipped) at the bounds, so the objective is never evaluated
//! outside the box. Every objective call counts against `max_fun`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::VecDeque;

use crate::{Error, Result};

/// Hyper-parameters of one local solve.
#[derive(Clone, Debug)]
pub struct LocalConfig {
    /// Objective evaluation budget (gradient evaluations included).
    pub max_fun: usize,
    /// Forward-difference step.
    pub fd_step: f64,
    /// Relative improvement threshold: stop when
    /// (f_k - f_{k+1}) <= ftol * max(|f_k|, |f_{k+1}|, 1).
    pub ftol: f64,
    /// Projected-gradient infinity-norm threshold.
    pub gtol: f64,
    /// Stored curvature pairs.
    pub memory: usize,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self { max_fun: 10_000, fd_step: 1e-6, ftol: 1e-8, gtol: 1e-12, memory: 10 }
    }
}

impl LocalConfig {
    fn validate(&self) -> Result<()> {
        if self.max_fun == 0 || self.memory == 0 {
            return Err(Error::Config("max_fun and memory must be positive".into()));
        }
        if !(self.fd_step > 0.0) || !(self.ftol > 0.0) || !(self.gtol > 0.0) {
            return Err(Error::Config("tolerances and fd step must be positive".into()));
        }
        Ok(())
    }
}

/// Per-parameter closed intervals.
#[derive(Clone, Debug)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        for &(l, u) in intervals {
            if !(l <= u) {
                return Err(Error::Config(format!("bound interval [{l}, {u}] is empty")));
            }
        }
        Ok(Self {
            lower: DVector::from_iterator(intervals.len(), intervals.iter().map(|b| b.0)),
            upper: DVector::from_iterator(intervals.len(), intervals.iter().map(|b| b.1)),
        })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.len() == 0
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn clamp(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        (0..x.len()).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }
}

/// Why the solve stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative improvement fell below ftol.
    Ftol,
    /// Projected gradient fell below gtol.
    Gtol,
    /// Evaluation budget exhausted.
    MaxFun,
    /// Line search failed twice in a row (no descent possible).
    LineSearchStalled,
}

#[derive(Clone, Debug)]
pub struct LocalResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub n_fun_evals: usize,
    pub reason: StopReason,
    /// (outer iteration, best objective so far).
    pub trace: Vec<(usize, f64)>,
}

enum Halt {
    Budget,
    Fail(Error),
}

type EvalOutcome<T> = std::result::Result<T, Halt>;

/// Objective wrapper: counts evaluations, enforces bounds, tracks the best
/// point, and turns non-finite values into hard errors.
struct Evaluator<'a> {
    func: &'a mut dyn FnMut(&[f64]) -> Result<f64>,
    bounds: &'a Bounds,
    used: usize,
    cap: usize,
    best: Option<(DVector<f64>, f64)>,
}

impl<'a> Evaluator<'a> {
    fn eval(&mut self, x: &DVector<f64>) -> EvalOutcome<f64> {
        if !self.bounds.contains(x) {
            return Err(Halt::Fail(Error::Numerical(
                "objective queried outside bounds".into(),
            )));
        }
        if self.used >= self.cap {
            return Err(Halt::Budget);
        }
        self.used += 1;
        let f = (self.func)(x.as_slice()).map_err(Halt::Fail)?;
        if !f.is_finite() {
            return Err(Halt::Fail(Error::Numerical(format!(
                "objective returned non-finite value {f} at {:?}",
                x.as_slice()
            ))));
        }
        if self.best.as_ref().is_none_or(|(_, fb)| f < *fb) {
            self.best = Some((x.clone(), f));
        }
        Ok(f)
    }

    /// Forward difference with the step clipped to stay inside the box
    /// (flips to a backward step at the upper bound).
    fn fd_gradient(&mut self, x: &DVector<f64>, fx: f64, step: f64) -> EvalOutcome<DVector<f64>> {
        let n = x.len();
        let mut g = DVector::zeros(n);
        let mut xh = x.clone();
        for i in 0..n {
            let room_up = self.bounds.upper[i] - x[i];
            let room_down = x[i] - self.bounds.lower[i];
            let h = if room_up >= step {
                step
            } else if room_down >= step {
                -step
            } else if room_up >= room_down {
                room_up
            } else {
                -room_down
            };
            if h == 0.0 {
                continue; // degenerate interval: variable is fixed
            }
            xh[i] = (x[i] + h).clamp(self.bounds.lower[i], self.bounds.upper[i]);
            let h_actual = xh[i] - x[i];
            if h_actual == 0.0 {
                xh[i] = x[i];
                continue;
            }
            let fh = self.eval(&xh)?;
            xh[i] = x[i];
            g[i] = (fh - fx) / h_actual;
        }
        Ok(g)
    }
}

struct Workspace {
    x: DVector<f64>,
    g: DVector<f64>,
    f: f64,
    theta: f64,
    w_mat: DMatrix<f64>,
    m_mat: DMatrix<f64>,
    s_store: VecDeque<DVector<f64>>,
    y_store: VecDeque<DVector<f64>>,
}

impl Workspace {
    fn clear_curvature(&mut self) {
        self.s_store.clear();
        self.y_store.clear();
        self.w_mat = DMatrix::zeros(self.x.len(), 1);
        self.m_mat = DMatrix::zeros(1, 1);
        self.theta = 1.0;
    }

    fn inf_norm_projected_gradient(&self, bounds: &Bounds) -> f64 {
        (0..self.x.len())
            .map(|i| {
                let step = self.x[i] - self.g[i];
                if step < bounds.lower[i] {
                    (bounds.lower[i] - self.x[i]).abs()
                } else if step > bounds.upper[i] {
                    (bounds.upper[i] - self.x[i]).abs()
                } else {
                    self.g[i].abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// W = [Y, theta S]; M = inv([[-D, L^T], [L, theta S^T S]]).
    fn update_w_m(&mut self) {
        let k = self.s_store.len();
        let n = self.x.len();
        let s_mat = DMatrix::from_fn(n, k, |i, j| self.s_store[j][i]);
        let y_mat = DMatrix::from_fn(n, k, |i, j| self.y_store[j][i]);
        self.w_mat = DMatrix::zeros(n, 2 * k);
        self.w_mat.view_mut((0, 0), (n, k)).copy_from(&y_mat);
        self.w_mat.view_mut((0, k), (n, k)).copy_from(&s_mat.scale(self.theta));
        let s_tr_y = s_mat.transpose() * &y_mat;
        let d_vec = s_tr_y.diagonal();
        let mut l_mat = s_tr_y.lower_triangle();
        l_mat.set_diagonal(&DVector::from_element(k, 0.0));
        let mut m_inv = DMatrix::zeros(2 * k, 2 * k);
        m_inv.view_mut((0, 0), (k, k)).set_diagonal(&(-&d_vec));
        m_inv.view_mut((k, 0), (k, k)).copy_from(&l_mat);
        m_inv.view_mut((0, k), (k, k)).copy_from(&l_mat.transpose());
        m_inv
            .view_mut((k, k), (k, k))
            .copy_from(&(s_mat.transpose() * &s_mat).scale(self.theta));
        match m_inv.try_inverse() {
            Some(inv) => self.m_mat = inv,
            // numerically singular middle matrix: drop the history
            None => self.clear_curvature(),
        }
    }

    /// Generalized Cauchy point: walk the projected-gradient path through
    /// the breakpoints of the box.
    fn cauchy_point(&self, bounds: &Bounds) -> (DVector<f64>, DVector<f64>, Vec<usize>) {
        let n = self.x.len();
        let mut t = DVector::zeros(n);
        let mut d = DVector::zeros(n);
        for i in 0..n {
            t[i] = if self.g[i] < 0.0 {
                (self.x[i] - bounds.upper[i]) / self.g[i]
            } else if self.g[i] > 0.0 {
                (self.x[i] - bounds.lower[i]) / self.g[i]
            } else {
                f64::INFINITY
            };
            d[i] = if t[i] < f64::EPSILON { 0.0 } else { -self.g[i] };
        }
        let mut x_cp = self.x.clone();
        let mut order: Vec<usize> = (0..n).filter(|&i| t[i] > 0.0).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));

        let mut p = self.w_mat.transpose() * &d;
        let mut c = DVector::zeros(p.len());
        let mut df = -d.dot(&d);
        let mut ddf = -self.theta * df - p.dot(&(&self.m_mat * &p));
        let mut dt_min = if ddf > 0.0 { -df / ddf } else { f64::INFINITY };
        let mut t_old = 0.0;
        let mut idx = 0;
        let mut t_b = if order.is_empty() { f64::INFINITY } else { t[order[0]] };

        while idx < order.len() && dt_min >= t_b - t_old {
            let b = order[idx];
            let dt_b = t_b - t_old;
            x_cp[b] = if d[b] > 0.0 { bounds.upper[b] } else { bounds.lower[b] };
            let z_b = x_cp[b] - self.x[b];
            c += p.scale(dt_b);
            let g_b = self.g[b];
            let w_b = self.w_mat.row(b).transpose();
            df += dt_b * ddf + g_b * (g_b + self.theta * z_b - w_b.dot(&(&self.m_mat * &c)));
            ddf -= g_b
                * (self.theta * g_b
                    - 2.0 * w_b.dot(&(&self.m_mat * &p))
                    - g_b * w_b.dot(&(&self.m_mat * &w_b)));
            p += w_b.scale(g_b);
            d[b] = 0.0;
            dt_min = if ddf > 0.0 { (-df / ddf).max(0.0) } else { f64::INFINITY };
            t_old = t_b;
            idx += 1;
            t_b = if idx < order.len() { t[order[idx]] } else { f64::INFINITY };
        }
        if dt_min.is_finite() {
            let t_final = t_old + dt_min.max(0.0);
            for i in 0..n {
                if t[i] >= t_b {
                    x_cp[i] =
                        (self.x[i] + t_final * d[i]).clamp(bounds.lower[i], bounds.upper[i]);
                }
            }
            c += p.scale(dt_min.max(0.0));
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| x_cp[i] < bounds.upper[i] && x_cp[i] > bounds.lower[i])
            .collect();
        (x_cp, c, free)
    }

    /// Direct primal subspace minimization over the free variables.
    fn subspace_min(
        &self,
        bounds: &Bounds,
        x_cp: &DVector<f64>,
        c: &DVector<f64>,
        free: &[usize],
    ) -> DVector<f64> {
        let n = self.x.len();
        let z_mat = DMatrix::from_fn(n, free.len(), |i, j| if i == free[j] { 1.0 } else { 0.0 });
        let r_hat = z_mat.transpose()
            * (&self.g + (x_cp - &self.x).scale(self.theta) - &self.w_mat * (&self.m_mat * c));
        let w_tr_z = self.w_mat.transpose() * &z_mat;
        let n_mat = DMatrix::identity(self.m_mat.nrows(), self.m_mat.ncols())
            - (&self.m_mat * (&w_tr_z * w_tr_z.transpose())).unscale(self.theta);
        let rhs = &self.m_mat * (&w_tr_z * &r_hat);
        let d_hat = match n_mat.lu().solve(&rhs) {
            Some(v) => {
                -(&r_hat + (w_tr_z.transpose() * v).unscale(self.theta)).unscale(self.theta)
            }
            None => -r_hat.unscale(self.theta), // fall back to scaled steepest descent
        };
        let mut alpha_star: f64 = 1.0;
        for (j, &i) in free.iter().enumerate() {
            if d_hat[j] > 0.0 {
                alpha_star = alpha_star.min((bounds.upper[i] - x_cp[i]) / d_hat[j]);
            } else if d_hat[j] < 0.0 {
                alpha_star = alpha_star.min((bounds.lower[i] - x_cp[i]) / d_hat[j]);
            }
        }
        let mut x_bar = x_cp.clone();
        for (j, &i) in free.iter().enumerate() {
            x_bar[i] = (x_bar[i] + alpha_star * d_hat[j]).clamp(bounds.lower[i], bounds.upper[i]);
        }
        x_bar
    }

    fn step_direction(&self, bounds: &Bounds) -> DVector<f64> {
        let (x_cp, c, free) = self.cauchy_point(bounds);
        let x_bar = if free.is_empty() {
            x_cp
        } else {
            self.subspace_min(bounds, &x_cp, &c, &free)
        };
        x_bar - &self.x
    }

    fn max_step(&self, bounds: &Bounds, d: &DVector<f64>) -> f64 {
        let mut max_step = f64::INFINITY;
        for i in 0..self.x.len() {
            if d[i] > 0.0 {
                max_step = max_step.min((bounds.upper[i] - self.x[i]) / d[i]);
            } else if d[i] < 0.0 {
                max_step = max_step.min((bounds.lower[i] - self.x[i]) / d[i]);
            }
        }
        max_step
    }
}

struct LinePoint {
    alpha: f64,
    f: f64,
    g: DVector<f64>,
    dphi: f64,
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

/// Evaluate objective and directional derivative at x + alpha d.
fn probe(
    ev: &mut Evaluator,
    x: &DVector<f64>,
    d: &DVector<f64>,
    alpha: f64,
    fd_step: f64,
) -> EvalOutcome<LinePoint> {
    let mut xa = x + d.scale(alpha);
    ev.bounds.clamp(&mut xa); // rounding dust at the box faces
    let f = ev.eval(&xa)?;
    let g = ev.fd_gradient(&xa, f, fd_step)?;
    let dphi = g.dot(d);
    Ok(LinePoint { alpha, f, g, dphi })
}

/// Shrink [lo, hi] until the strong Wolfe conditions hold.
#[allow(clippy::too_many_arguments)]
fn zoom(
    ev: &mut Evaluator,
    x: &DVector<f64>,
    d: &DVector<f64>,
    f0: f64,
    dphi0: f64,
    fd_step: f64,
    mut lo: LinePoint,
    mut hi: LinePoint,
) -> EvalOutcome<Option<LinePoint>> {
    for _ in 0..30 {
        // quadratic interpolation, safeguarded toward the midpoint
        let mut alpha = {
            let denom = 2.0 * (hi.f - lo.f - lo.dphi * (hi.alpha - lo.alpha));
            if denom.abs() > 1e-300 {
                lo.alpha - lo.dphi * (hi.alpha - lo.alpha).powi(2) / denom
            } else {
                0.5 * (lo.alpha + hi.alpha)
            }
        };
        let (a_min, a_max) = if lo.alpha < hi.alpha {
            (lo.alpha, hi.alpha)
        } else {
            (hi.alpha, lo.alpha)
        };
        let width = a_max - a_min;
        if width < 1e-16 {
            break;
        }
        if !alpha.is_finite() || alpha < a_min + 0.1 * width || alpha > a_max - 0.1 * width {
            alpha = 0.5 * (lo.alpha + hi.alpha);
        }
        let pt = probe(ev, x, d, alpha, fd_step)?;
        if pt.f > f0 + WOLFE_C1 * pt.alpha * dphi0 || pt.f >= lo.f {
            hi = pt;
        } else {
            if pt.dphi.abs() <= -WOLFE_C2 * dphi0 {
                return Ok(Some(pt));
            }
            if pt.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = pt;
        }
    }
    // no strongly-admissible point found; keep lo if it at least descends
    if lo.f < f0 && lo.alpha > 0.0 {
        Ok(Some(lo))
    } else {
        Ok(None)
    }
}

/// Strong Wolfe line search (bracketing phase). Returns None when no
/// acceptable step exists along d.
fn strong_wolfe(
    ev: &mut Evaluator,
    x: &DVector<f64>,
    d: &DVector<f64>,
    f0: f64,
    dphi0: f64,
    max_step: f64,
    fd_step: f64,
) -> EvalOutcome<Option<LinePoint>> {
    if dphi0 >= 0.0 || max_step <= 0.0 {
        return Ok(None);
    }
    let origin = || LinePoint { alpha: 0.0, f: f0, g: DVector::zeros(0), dphi: dphi0 };
    let mut prev: Option<LinePoint> = None;
    let mut alpha = max_step.min(1.0);
    for i in 0..20 {
        let pt = probe(ev, x, d, alpha, fd_step)?;
        let prev_f = prev.as_ref().map_or(f0, |p| p.f);
        if pt.f > f0 + WOLFE_C1 * alpha * dphi0 || (i > 0 && pt.f >= prev_f) {
            let lo = prev.unwrap_or_else(origin);
            return zoom(ev, x, d, f0, dphi0, fd_step, lo, pt);
        }
        if pt.dphi.abs() <= -WOLFE_C2 * dphi0 {
            return Ok(Some(pt));
        }
        if pt.dphi >= 0.0 {
            let hi = prev.unwrap_or_else(origin);
            return zoom(ev, x, d, f0, dphi0, fd_step, pt, hi);
        }
        if alpha >= max_step {
            // bound-limited step that still descends with negative slope
            return Ok(Some(pt));
        }
        alpha = (2.0 * pt.alpha).min(max_step);
        prev = Some(pt);
    }
    Ok(prev.filter(|p| p.f < f0))
}

/// Minimize `func` over the box from `x0`.
pub fn local_optimize(
    func: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &Bounds,
    config: &LocalConfig,
) -> Result<LocalResult> {
    config.validate()?;
    if x0.len() != bounds.len() {
        return Err(Error::Dimension { expected: bounds.len(), got: x0.len() });
    }
    let mut ev = Evaluator { func, bounds, used: 0, cap: config.max_fun, best: None };
    let mut x = DVector::from_column_slice(x0);
    bounds.clamp(&mut x);

    fn finish(
        best: Option<(DVector<f64>, f64)>,
        used: usize,
        reason: StopReason,
        trace: Vec<(usize, f64)>,
    ) -> Result<LocalResult> {
        let (x, f) = best
            .ok_or_else(|| Error::Numerical("optimizer stopped before any evaluation".into()))?;
        Ok(LocalResult { x, f, n_fun_evals: used, reason, trace })
    }

    macro_rules! check {
        ($expr:expr, $trace:ident) => {
            match $expr {
                Ok(v) => v,
                Err(Halt::Budget) => return finish(ev.best, ev.used, StopReason::MaxFun, $trace),
                Err(Halt::Fail(e)) => return Err(e),
            }
        };
    }

    let mut trace: Vec<(usize, f64)> = Vec::new();
    let f = check!(ev.eval(&x), trace);
    let g = check!(ev.fd_gradient(&x, f, config.fd_step), trace);
    let n = x.len();
    let mut ws = Workspace {
        x,
        g,
        f,
        theta: 1.0,
        w_mat: DMatrix::zeros(n, 1),
        m_mat: DMatrix::zeros(1, 1),
        s_store: VecDeque::new(),
        y_store: VecDeque::new(),
    };
    trace.push((0, ws.f));
    let mut consecutive_failures = 0usize;

    for iteration in 1..=10_000usize {
        if ws.inf_norm_projected_gradient(bounds) < config.gtol {
            return finish(ev.best, ev.used, StopReason::Gtol, trace);
        }
        let d = ws.step_direction(bounds);
        let max_step = ws.max_step(bounds, &d);
        let dphi0 = ws.g.dot(&d);
        let searched = check!(
            strong_wolfe(&mut ev, &ws.x, &d, ws.f, dphi0, max_step, config.fd_step),
            trace
        );
        match searched {
            Some(pt) => {
                consecutive_failures = 0;
                let mut x_new = &ws.x + d.scale(pt.alpha);
                bounds.clamp(&mut x_new);
                let g_new = if pt.g.len() == n {
                    pt.g
                } else {
                    check!(ev.fd_gradient(&x_new, pt.f, config.fd_step), trace)
                };
                let s = &x_new - &ws.x;
                let y = &g_new - &ws.g;
                let sy = s.dot(&y);
                let yy = y.dot(&y);
                if sy > f64::EPSILON * yy {
                    ws.s_store.push_back(s);
                    ws.y_store.push_back(y);
                    ws.theta = yy / sy;
                    if ws.s_store.len() > config.memory {
                        ws.s_store.pop_front();
                        ws.y_store.pop_front();
                    }
                    ws.update_w_m();
                }
                let f_prev = ws.f;
                ws.x = x_new;
                ws.g = g_new;
                ws.f = pt.f;
                trace.push((iteration, ws.f));
                if f_prev - ws.f <= config.ftol * f_prev.abs().max(ws.f.abs()).max(1.0) {
                    return finish(ev.best, ev.used, StopReason::Ftol, trace);
                }
            }
            None => {
                consecutive_failures += 1;
                if consecutive_failures >= 2 || ws.s_store.is_empty() {
                    return finish(ev.best, ev.used, StopReason::LineSearchStalled, trace);
                }
                ws.clear_curvature();
            }
        }
    }
    finish(ev.best, ev.used, StopReason::MaxFun, trace)
}
