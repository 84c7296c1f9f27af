//! Compiles a right-hand side into a coefficient recurrence.
//!
//! The solver never manipulates the expression tree while marching. Instead
//! [`compile_rhs`] lowers the tree once into a [`RecurrencePlan`]: a
//! straight-line program over coefficient streams, one instruction per tree
//! node, operands always earlier in the list. Running the plan produces the
//! transform `F(k)` of the right-hand side order by order, which closes the
//! recurrence `U(k+n) = (k! / (k+n)!) * F(k)` for the segment's unknown.
//!
//! The recurrence is explicit as long as coefficient `k` of every stream is
//! computable from unknown coefficients at indices at most `k + n - 1`. Sums,
//! products, and delayed terms satisfy that bound structurally; division and
//! exp close over their own output stream, so their inputs must not involve
//! the unknown at the current time at all. `compile_rhs` rejects the
//! constructs that would break the bound instead of attempting per-order
//! implicit solves.

use crate::error::{Error, Result};
use crate::model::{DelayModel, Expr};
use crate::series::{TruncatedSeries, DIVISION_FLOOR};

/// Any coefficient beyond this magnitude is reported as blow-up rather than
/// propagated into meaningless arithmetic.
pub const COEFF_LIMIT: f64 = 1e100;

/// A delayed stream the plan needs per segment: the `deriv`-th derivative of
/// the unknown at `t - tau_delay`, supplied as a known series by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    /// 1-based delay index into the model's delay list.
    pub delay: usize,
    pub deriv: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum Instr {
    Const(f64),
    Time,
    /// Derivative stream of the segment unknown, order below the equation's.
    Unknown(u32),
    Slot(usize),
    Neg(usize),
    Scale(usize, f64),
    Add(Vec<usize>),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Exp(usize),
}

/// Straight-line coefficient program for one right-hand side. Compiled once
/// per model; segments differ only in the slot series and the center handed
/// to [`run_plan`].
#[derive(Debug, Clone)]
pub struct RecurrencePlan {
    order: u32,
    slots: Vec<Slot>,
    instrs: Vec<Instr>,
    out: usize,
}

impl RecurrencePlan {
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Delayed streams the caller must bind, in slot order.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn instruction_count(&self) -> usize {
        self.instrs.len()
    }
}

struct Compiler {
    order: u32,
    slots: Vec<Slot>,
    instrs: Vec<Instr>,
}

impl Compiler {
    fn emit(&mut self, i: Instr) -> usize {
        self.instrs.push(i);
        self.instrs.len() - 1
    }

    fn slot_index(&mut self, delay: usize, deriv: u32) -> usize {
        let key = Slot { delay, deriv };
        match self.slots.iter().position(|s| *s == key) {
            Some(i) => i,
            None => {
                self.slots.push(key);
                self.slots.len() - 1
            }
        }
    }

    fn lower(&mut self, e: &Expr) -> Result<usize> {
        Ok(match e {
            Expr::Const(c) => self.emit(Instr::Const(*c)),
            Expr::Time => self.emit(Instr::Time),
            Expr::State { deriv, delay: 0 } => {
                if *deriv >= self.order {
                    return Err(Error::ImplicitRecurrence);
                }
                self.emit(Instr::Unknown(*deriv))
            }
            Expr::State { deriv, delay } => {
                let s = self.slot_index(*delay, *deriv);
                self.emit(Instr::Slot(s))
            }
            Expr::Add(children) => {
                let regs = children
                    .iter()
                    .map(|c| self.lower(c))
                    .collect::<Result<Vec<_>>>()?;
                self.emit(Instr::Add(regs))
            }
            Expr::Sub(l, r) => {
                let a = self.lower(l)?;
                let b = self.lower(r)?;
                self.emit(Instr::Sub(a, b))
            }
            Expr::Mul(children) => {
                // Constant factors fold into one scale; the rest chain into
                // binary convolutions, which recovers the q-fold product sum
                // associatively.
                let mut factor = 1.0;
                let mut regs = Vec::new();
                for c in children {
                    match c {
                        Expr::Const(v) => factor *= v,
                        other => regs.push(self.lower(other)?),
                    }
                }
                match regs.split_first() {
                    None => self.emit(Instr::Const(factor)),
                    Some((&first, rest)) => {
                        let mut acc = first;
                        for &r in rest {
                            acc = self.emit(Instr::Mul(acc, r));
                        }
                        if factor != 1.0 {
                            acc = self.emit(Instr::Scale(acc, factor));
                        }
                        acc
                    }
                }
            }
            Expr::Div(l, r) => {
                if r.contains_current_state() {
                    return Err(Error::UnsupportedCurrentStateDenominator);
                }
                let a = self.lower(l)?;
                let b = self.lower(r)?;
                self.emit(Instr::Div(a, b))
            }
            Expr::Pow(b, k) => match k {
                0 => self.emit(Instr::Const(1.0)),
                _ => {
                    let base = self.lower(b)?;
                    let mut acc = base;
                    for _ in 1..*k {
                        acc = self.emit(Instr::Mul(acc, base));
                    }
                    acc
                }
            },
            Expr::Exp(a) => {
                if a.contains_current_state() {
                    return Err(Error::UnsupportedCurrentStateInExp);
                }
                let r = self.lower(a)?;
                self.emit(Instr::Exp(r))
            }
            Expr::Neg(a) => {
                let r = self.lower(a)?;
                self.emit(Instr::Neg(r))
            }
        })
    }
}

/// Lowers the model's right-hand side. Fails on the constructs that would
/// make the coefficient recurrence implicit: the equation-order derivative of
/// the current unknown anywhere, or the current unknown inside a denominator
/// or exp argument.
pub fn compile_rhs(m: &DelayModel) -> Result<RecurrencePlan> {
    let mut c = Compiler { order: m.order, slots: Vec::new(), instrs: Vec::new() };
    let out = c.lower(&m.rhs)?;
    Ok(RecurrencePlan { order: m.order, slots: c.slots, instrs: c.instrs, out })
}

/// Marches the recurrence for one segment.
///
/// `slots` bind the plan's delayed streams in order, every series centered at
/// `center` (the segment's left endpoint). `init` holds the seed coefficients
/// `U(0..n)`. Returns the unknown's series of order `n_trunc` about `center`.
/// `segment` is a 1-based label used only in blow-up errors; pass 1 when
/// running a plan outside a schedule.
pub fn run_plan(
    plan: &RecurrencePlan,
    center: f64,
    slots: &[TruncatedSeries],
    init: &[f64],
    n_trunc: usize,
    segment: usize,
) -> Result<TruncatedSeries> {
    let n = plan.order as usize;
    if slots.len() != plan.slots.len() {
        return Err(Error::ModelInvariant(format!(
            "plan needs {} slot series, got {}",
            plan.slots.len(),
            slots.len()
        )));
    }
    if init.len() != n {
        return Err(Error::ModelInvariant(format!(
            "plan needs {} seed coefficient(s), got {}",
            n,
            init.len()
        )));
    }
    if n_trunc < n {
        return Err(Error::ModelInvariant(format!(
            "truncation order {n_trunc} is below the equation order {n}"
        )));
    }
    for (i, v) in init.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteCoefficient { segment, index: i });
        }
    }

    let kmax = n_trunc - n;
    let mut u = init.to_vec();
    u.reserve(kmax + 1);
    let mut regs: Vec<Vec<f64>> = vec![Vec::with_capacity(kmax + 1); plan.instrs.len()];

    for k in 0..=kmax {
        for ri in 0..plan.instrs.len() {
            let v = eval_instr(&plan.instrs[ri], ri, k, &regs, &u, center, slots)?;
            regs[ri].push(v);
        }
        let f_k = regs[plan.out][k];
        let factor = (1..=n).fold(1.0, |acc, m| acc / (k + m) as f64);
        let next = f_k * factor;
        if !next.is_finite() || next.abs() > COEFF_LIMIT {
            return Err(Error::NonFiniteCoefficient { segment, index: n + k });
        }
        u.push(next);
    }
    TruncatedSeries::new(center, u)
}

/// Recomputes the right-hand side coefficients `F(0..=kmax)` for an already
/// solved segment, `u` being the segment's full coefficient vector. Used for
/// residual reporting; requires `kmax + order <= u.len()` so the derivative
/// streams never read past the known coefficients.
pub fn rhs_coefficients(
    plan: &RecurrencePlan,
    center: f64,
    slots: &[TruncatedSeries],
    u: &[f64],
    kmax: usize,
) -> Result<Vec<f64>> {
    let mut regs: Vec<Vec<f64>> = vec![Vec::with_capacity(kmax + 1); plan.instrs.len()];
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        for ri in 0..plan.instrs.len() {
            let v = eval_instr(&plan.instrs[ri], ri, k, &regs, u, center, slots)?;
            regs[ri].push(v);
        }
        out.push(regs[plan.out][k]);
    }
    Ok(out)
}

/// Computes coefficient `k` of instruction `ri`. Operand streams already
/// hold indices `0..=k`; the instruction's own stream holds `0..k`, which is
/// exactly what the division and exp recurrences read back.
fn eval_instr(
    instr: &Instr,
    ri: usize,
    k: usize,
    regs: &[Vec<f64>],
    u: &[f64],
    center: f64,
    slots: &[TruncatedSeries],
) -> Result<f64> {
    Ok(match instr {
        Instr::Const(c) => {
            if k == 0 {
                *c
            } else {
                0.0
            }
        }
        Instr::Time => match k {
            0 => center,
            1 => 1.0,
            _ => 0.0,
        },
        Instr::Unknown(p) => {
            let p = *p as usize;
            // Explicitness bound: producing U(k+n) may read up to U(k+n-1),
            // and u holds exactly that many entries here.
            debug_assert!(k + p < u.len());
            let mut fall = 1.0;
            for m in (k + 1)..=(k + p) {
                fall *= m as f64;
            }
            fall * u[k + p]
        }
        Instr::Slot(s) => slots[*s].coeff(k),
        Instr::Neg(a) => -regs[*a][k],
        Instr::Scale(a, c) => c * regs[*a][k],
        Instr::Add(v) => v.iter().map(|&a| regs[a][k]).sum(),
        Instr::Sub(a, b) => regs[*a][k] - regs[*b][k],
        Instr::Mul(a, b) => (0..=k).map(|l| regs[*a][l] * regs[*b][k - l]).sum(),
        Instr::Div(a, b) => {
            let den0 = regs[*b][0];
            if k == 0 {
                let floor = DIVISION_FLOOR * regs[*a][0].abs().max(1.0);
                if den0.abs() < floor {
                    return Err(Error::DivisionBySmallLeadingCoefficient {
                        leading: den0,
                        floor,
                    });
                }
                regs[*a][0] / den0
            } else {
                let own = &regs[ri];
                let mut s = regs[*a][k];
                for l in 1..=k {
                    s -= regs[*b][l] * own[k - l];
                }
                s / den0
            }
        }
        Instr::Exp(a) => {
            if k == 0 {
                regs[*a][0].exp()
            } else {
                let own = &regs[ri];
                let mut s = 0.0;
                for l in 1..=k {
                    s += l as f64 * regs[*a][l] * own[k - l];
                }
                s / k as f64
            }
        }
    })
}
