//! Independent reference integrator.
//!
//! Classical method of steps again, but with none of the series machinery:
//! the delay equation is reduced to the first-order system over
//! `y = (u, u', ..., u^(n-1))` and integrated with fixed-step explicit
//! fourth-order Runge-Kutta. Delayed lookups read the history expression for
//! times at or before `t0` and a cubic Hermite interpolant over the already
//! computed nodes otherwise; delayed derivative lookups of order `n` (the
//! neutral case) read the Hermite's derivative, which is one order less
//! accurate and still far inside the tolerances this oracle backs.
//!
//! Requiring the step to stay at or below the smallest delay keeps every
//! lookup behind the last completed node, stage points included.

use crate::error::{Error, Result};
use crate::model::{DelayModel, Expr};
use crate::solver::PiecewiseSolution;

/// Uniform-step trajectory with value and slope per node, evaluable anywhere
/// in `[t0 - max delay, T]` via Hermite interpolation and the history.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    t0: f64,
    terminal: f64,
    h: f64,
    history_span: f64,
    /// History derivatives `phi, phi', ...` for pre-`t0` evaluation.
    phi: Vec<Expr>,
    nodes: Vec<f64>,
    /// State per node, component `c` holding `u^(c)`.
    values: Vec<Vec<f64>>,
    /// Time derivative of the state per node.
    slopes: Vec<Vec<f64>>,
}

impl DenseTrajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn terminal(&self) -> f64 {
        self.terminal
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Builds a trajectory by sampling closed-form value and derivative
    /// functions, for cross-checks against known solutions. No history is
    /// attached; evaluation below `t0` stays out of domain.
    pub fn tabulate(
        t0: f64,
        terminal: f64,
        h: f64,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(terminal > t0) || !(h > 0.0) {
            return Err(Error::ModelInvariant(
                "tabulation needs terminal > t0 and a positive step".into(),
            ));
        }
        let steps = ((terminal - t0) / h - 1e-9).ceil().max(1.0) as usize;
        let h_eff = (terminal - t0) / steps as f64;
        let mut nodes = Vec::with_capacity(steps + 1);
        let mut values = Vec::with_capacity(steps + 1);
        let mut slopes = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = t0 + k as f64 * h_eff;
            nodes.push(t);
            values.push(vec![u(t)]);
            slopes.push(vec![du(t)]);
        }
        Ok(DenseTrajectory {
            t0,
            terminal,
            h: h_eff,
            history_span: 0.0,
            phi: vec![Expr::Const(u(t0))],
            nodes,
            values,
            slopes,
        })
    }

    /// Hermite value (or derivative) of component `comp` at `s`, which must
    /// lie within the computed span. The final completed interval serves
    /// points that float rounding pushes marginally past its node. During
    /// integration `values` runs one node ahead of `slopes`; only intervals
    /// with both endpoints slope-backed are eligible.
    fn hermite(&self, s: f64, comp: usize, derivative: bool) -> f64 {
        debug_assert!(self.slopes.len() >= 2);
        let last = self.values.len().min(self.slopes.len()) - 2;
        let idx = (((s - self.t0) / self.h).floor() as usize).min(last);
        let t_k = self.nodes[idx];
        let th = (s - t_k) / self.h;
        let y0 = self.values[idx][comp];
        let y1 = self.values[idx + 1][comp];
        let d0 = self.slopes[idx][comp];
        let d1 = self.slopes[idx + 1][comp];
        if derivative {
            let a = 6.0 * th * th - 6.0 * th;
            let b = 3.0 * th * th - 4.0 * th + 1.0;
            let c = -6.0 * th * th + 6.0 * th;
            let d = 3.0 * th * th - 2.0 * th;
            (a * y0 + c * y1) / self.h + b * d0 + d * d1
        } else {
            let th2 = th * th;
            let th3 = th2 * th;
            let a = 2.0 * th3 - 3.0 * th2 + 1.0;
            let b = th3 - 2.0 * th2 + th;
            let c = -2.0 * th3 + 3.0 * th2;
            let d = th3 - th2;
            a * y0 + c * y1 + b * self.h * d0 + d * self.h * d1
        }
    }

    /// Evaluates `u` at `t`; history below `t0`, interpolant above.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let eps = 1e-9 * (self.terminal - self.t0).abs().max(1.0);
        if t < self.t0 - self.history_span - eps || t > self.terminal + eps {
            return Err(Error::OutOfDomain {
                t,
                lo: self.t0 - self.history_span,
                hi: self.terminal,
            });
        }
        if t <= self.t0 {
            return self.phi[0].eval_time(t);
        }
        Ok(self.hermite(t.min(self.terminal), 0, false))
    }
}

struct Integrator<'a> {
    model: &'a DelayModel,
    delays: Vec<f64>,
    traj: DenseTrajectory,
}

impl Integrator<'_> {
    /// Delayed lookup `u^(p)(s)`, from the history or the computed nodes.
    fn delayed(&self, s: f64, p: usize) -> Result<f64> {
        if s <= self.traj.t0 {
            return self.traj.phi[p].eval_time(s);
        }
        let n = self.model.order as usize;
        if p < n {
            Ok(self.traj.hermite(s, p, false))
        } else {
            Ok(self.traj.hermite(s, n - 1, true))
        }
    }

    /// Right-hand side of the first-order system at `(t, y)`.
    fn sys_rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.model.order as usize;
        let mut out = Vec::with_capacity(n);
        for c in 0..n - 1 {
            out.push(y[c + 1]);
        }
        let top = self.model.rhs.eval_with(t, &mut |p, i| {
            if i == 0 {
                Ok(y[p as usize])
            } else {
                self.delayed(t - self.delays[i - 1], p as usize)
            }
        })?;
        out.push(top);
        Ok(out)
    }
}

/// Integrates the model with fixed step `h` (shrunk to divide the domain
/// evenly) and returns the dense trajectory.
pub fn rk_solve(m: &DelayModel, h: f64) -> Result<DenseTrajectory> {
    m.check_structure()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::ModelInvariant(format!("step {h} must be positive")));
    }
    let n = m.order as usize;
    let span = m.terminal - m.t0;
    let steps = (span / h - 1e-9).ceil().max(1.0) as usize;
    let h_eff = span / steps as f64;
    let delays = m.delay_values();
    if let Some(min_delay) = delays.iter().copied().reduce(f64::min) {
        if h_eff > min_delay * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { h: h_eff, min_delay });
        }
    }

    let mut phi = vec![m.history.clone()];
    for _ in 0..n {
        let next = phi.last().unwrap().differentiate_time()?;
        phi.push(next);
    }

    let y0: Vec<f64> = match &m.initial {
        Some(ic) => ic.clone(),
        None => (0..n)
            .map(|p| phi[p].eval_time(m.t0))
            .collect::<Result<Vec<_>>>()?,
    };

    let traj = DenseTrajectory {
        t0: m.t0,
        terminal: m.terminal,
        h: h_eff,
        history_span: m.history_span(),
        phi,
        nodes: vec![m.t0],
        values: vec![y0],
        slopes: Vec::new(),
    };
    let mut ig = Integrator { model: m, delays, traj };
    let s0 = ig.sys_rhs(m.t0, &ig.traj.values[0].clone())?;
    ig.traj.slopes.push(s0);

    for k in 0..steps {
        let t = m.t0 + k as f64 * h_eff;
        let t_next = m.t0 + (k + 1) as f64 * h_eff;
        let y = ig.traj.values[k].clone();
        let k1 = ig.traj.slopes[k].clone();
        let k2 = ig.sys_rhs(t + 0.5 * h_eff, &axpy(&y, 0.5 * h_eff, &k1))?;
        let k3 = ig.sys_rhs(t + 0.5 * h_eff, &axpy(&y, 0.5 * h_eff, &k2))?;
        let k4 = ig.sys_rhs(t_next, &axpy(&y, h_eff, &k3))?;
        let mut y_next = y;
        for c in 0..n {
            y_next[c] += h_eff / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            if !y_next[c].is_finite() {
                return Err(Error::NonFiniteState { t: t_next });
            }
        }
        ig.traj.nodes.push(t_next);
        ig.traj.values.push(y_next);
        let s_next = ig.sys_rhs(t_next, &ig.traj.values[k + 1].clone())?;
        if s_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        ig.traj.slopes.push(s_next);
    }

    Ok(ig.traj)
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect()
}

/// One comparison sample.
#[derive(Debug, Clone, Copy)]
pub struct CompareRow {
    pub t: f64,
    pub left: f64,
    pub right: f64,
    pub diff: f64,
}

/// Uniform-grid comparison between a piecewise solution and a trajectory.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub max_abs_diff: f64,
    pub argmax: f64,
    pub table: Vec<CompareRow>,
}

/// Samples both solutions over the overlap of their domains with the given
/// step and reports the largest absolute deviation.
pub fn compare(
    sol: &PiecewiseSolution,
    traj: &DenseTrajectory,
    step: f64,
) -> Result<CompareReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::ModelInvariant(format!("comparison step {step} must be positive")));
    }
    let lo = sol.schedule().t0().max(traj.t0());
    let hi = sol.schedule().terminal().min(traj.terminal());
    if hi < lo {
        return Err(Error::ModelInvariant("solution domains do not overlap".into()));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut table = Vec::with_capacity(count + 1);
    let mut max_abs_diff = 0.0f64;
    let mut argmax = lo;
    for k in 0..=count {
        let t = lo + k as f64 * step;
        let left = sol.eval(t)?;
        let right = traj.eval(t)?;
        let diff = left - right;
        if diff.abs() > max_abs_diff {
            max_abs_diff = diff.abs();
            argmax = t;
        }
        table.push(CompareRow { t, left, right, diff });
    }
    Ok(CompareReport { max_abs_diff, argmax, table })
}
