//! The method-of-steps driver.
//!
//! [`solve`] walks the segment schedule left to right. On each segment the
//! delay terms refer only to history or to segments already computed, so the
//! delay equation restricts to an ordinary initial value problem there; the
//! compiled recurrence produces its Taylor coefficients about the segment's
//! left endpoint. Seeds come from the previous segment's endpoint derivatives
//! (or from the history at the first segment), which makes the assembled
//! piecewise polynomial C^{n-1} at the junctions by construction.
//!
//! The segment cap guarding grid explosion can be raised or lowered through
//! the `DDE_DTM_SEGMENT_CAP` environment variable.

use crate::error::{Error, Result};
use crate::lowering::{compile_rhs, rhs_coefficients, run_plan};
use crate::model::{DelayModel, DelaySpec, Expr, OrderSpec};
use crate::schedule::{DelaySource, Located, SegmentSchedule, DEFAULT_SEGMENT_CAP};
use crate::series::TruncatedSeries;

/// Environment variable overriding the segment cap.
pub const SEGMENT_CAP_ENV: &str = "DDE_DTM_SEGMENT_CAP";

/// Coefficient-wise residual threshold the computed segments are expected to
/// satisfy; see [`PiecewiseSolution::residuals`].
pub const RESIDUAL_TOL: f64 = 1e-8;

fn segment_cap() -> usize {
    std::env::var(SEGMENT_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SEGMENT_CAP)
}

/// Builds the segment schedule the model's delays call for: the rational gcd
/// grid when every delay is exact, the enumerated sigma grid otherwise.
pub fn build_schedule(m: &DelayModel) -> Result<SegmentSchedule> {
    let cap = segment_cap();
    let exact: Option<Vec<_>> = m.delays.iter().map(DelaySpec::exact).collect();
    match exact {
        Some(rs) => SegmentSchedule::commensurate_with_cap(m.t0, m.terminal, &rs, cap),
        None => SegmentSchedule::sigma_grid_with_cap(m.t0, m.terminal, &m.delay_values(), cap),
    }
}

/// The assembled solution: one polynomial per segment, history elsewhere.
#[derive(Debug, Clone)]
pub struct PiecewiseSolution {
    model: DelayModel,
    schedule: SegmentSchedule,
    segments: Vec<TruncatedSeries>,
    residuals: Vec<f64>,
    warnings: Vec<String>,
}

impl PiecewiseSolution {
    pub fn model(&self) -> &DelayModel {
        &self.model
    }

    pub fn schedule(&self) -> &SegmentSchedule {
        &self.schedule
    }

    pub fn history(&self) -> &Expr {
        &self.model.history
    }

    /// Segment series in order; segment `j` is `segments()[j - 1]`, centered
    /// at its interval's left endpoint.
    pub fn segments(&self) -> &[TruncatedSeries] {
        &self.segments
    }

    /// Per-segment coefficient residuals: how far the computed series is from
    /// satisfying its segment ODE order by order, relative to the right-hand
    /// side's largest coefficient. Rounding noise in practice; anything near
    /// [`RESIDUAL_TOL`] signals a defect.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Evaluates the solution, falling back to the history for `t <= t0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self.schedule.locate(t)? {
            Located::History => self.model.history.eval_time(t),
            Located::Segment(j) => Ok(self.segments[j - 1].eval(t)),
        }
    }

    /// Inclusive uniform samples over `[start, end]`; `start == end` yields a
    /// single sample.
    pub fn sample(&self, start: f64, end: f64, step: f64) -> Result<Vec<(f64, f64)>> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::ModelInvariant(format!("sample step {step} must be positive")));
        }
        if end < start {
            return Err(Error::ModelInvariant(format!(
                "sample range [{start}, {end}] is reversed"
            )));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        let mut out = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let t = start + k as f64 * step;
            out.push((t, self.eval(t)?));
        }
        Ok(out)
    }
}

/// See [`PiecewiseSolution::eval`].
pub fn eval_solution(sol: &PiecewiseSolution, t: f64) -> Result<f64> {
    sol.eval(t)
}

/// See [`PiecewiseSolution::sample`].
pub fn sample(
    sol: &PiecewiseSolution,
    start: f64,
    end: f64,
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    sol.sample(start, end, step)
}

/// Solves the model over its whole domain.
pub fn solve(model: &DelayModel) -> Result<PiecewiseSolution> {
    model.check_structure()?;
    let plan = compile_rhs(model)?;
    let schedule = build_schedule(model)?;
    let segs = schedule.segment_count();
    let n = model.order as usize;

    if let OrderSpec::PerSegment(list) = &model.trunc {
        if list.len() != segs {
            return Err(Error::ModelInvariant(format!(
                "per-segment order list has {} entr(ies) but the schedule has {} segment(s)",
                list.len(),
                segs
            )));
        }
    }
    let orders: Vec<usize> =
        (1..=segs).map(|j| model.trunc_for_segment(j, segs).unwrap()).collect();

    let delays = model.delay_values();
    let mut warnings: Vec<String> = schedule.warnings().to_vec();
    let mut segments: Vec<TruncatedSeries> = Vec::with_capacity(segs);
    let mut residuals: Vec<f64> = Vec::with_capacity(segs);

    for j in 1..=segs {
        let center = schedule.center(j);
        let n_j = orders[j - 1];

        let seed: Vec<f64> = if j == 1 {
            match &model.initial {
                Some(ic) => {
                    let mut fact = 1.0;
                    ic.iter()
                        .enumerate()
                        .map(|(i, v)| {
                            if i > 0 {
                                fact *= i as f64;
                            }
                            v / fact
                        })
                        .collect()
                }
                None => {
                    let phi = model.history.eval_series(center, n)?;
                    (0..n).map(|i| phi.coeff(i)).collect()
                }
            }
        } else {
            let shifted = segments[j - 2].taylor_shift(center);
            (0..n).map(|i| shifted.coeff(i)).collect()
        };

        let kmax = n_j - n;
        let mut slots = Vec::with_capacity(plan.slots().len());
        for slot in plan.slots() {
            let tau = delays[slot.delay - 1];
            let p = slot.deriv as usize;
            let series = match schedule.source(j, slot.delay) {
                DelaySource::History => {
                    // Expanding the history directly about the lookup point
                    // makes the delayed image a pure relabeling.
                    let lookup = center - tau;
                    let phi = model.history.eval_series(lookup, n_j + p)?;
                    phi.delayed_term_aligned(p, center, n_j)?
                }
                DelaySource::Segment { index: l, shift } => {
                    let src = &segments[l - 1];
                    if src.order() < kmax + p {
                        warnings.push(format!(
                            "segment {j}: delayed stream (delay {}, derivative {p}) reads {} \
                             coefficients but source segment {l} has order {}; the tail is \
                             zero-padded",
                            slot.delay,
                            kmax + 1,
                            src.order()
                        ));
                    }
                    if shift == 0.0 {
                        src.delayed_term_aligned(p, center, n_j)?
                    } else {
                        src.delayed_term(p, tau, center, n_j)?
                    }
                }
            };
            slots.push(series);
        }

        let u = run_plan(&plan, center, &slots, &seed, n_j, j)?;
        let f = rhs_coefficients(&plan, center, &slots, u.coeffs(), kmax)?;
        residuals.push(residual_gap(n, u.coeffs(), &f));
        segments.push(u);
    }

    Ok(PiecewiseSolution { model: model.clone(), schedule, segments, residuals, warnings })
}

/// Largest gap between the derivative stream of the computed series and the
/// recomputed right-hand side coefficients, relative to the latter's scale.
fn residual_gap(n: usize, u: &[f64], f: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for (k, fk) in f.iter().enumerate() {
        let mut fall = 1.0;
        for m in (k + 1)..=(k + n) {
            fall *= m as f64;
        }
        let lhs = fall * u[k + n];
        worst = worst.max((lhs - fk).abs());
        scale = scale.max(fk.abs());
    }
    worst / scale
}
