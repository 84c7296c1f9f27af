//! Model description: right-hand side AST, history function, delays, domain.
//!
//! A [`DelayModel`] is the validated form of a model file (see the parser in
//! [`crate::parse`]). The right-hand side is a small expression tree over
//! constants, `t`, and state references `u`, `u'`, `u[i]`, `u''[i]`, where a
//! bracketed index selects delay `tau_i` (1-based) and no brackets means the
//! current time. The history expression uses the same grammar restricted to
//! functions of `t`.
//!
//! The module also hosts the expression evaluators everything else leans on:
//! pointwise evaluation with a state lookup callback (the integrator path),
//! series evaluation about a center (history slots, residuals), and symbolic
//! time differentiation (history derivatives for neutral lookups).

use std::fmt;

use crate::error::{Error, Result};
use crate::schedule::Rational;
use crate::series::TruncatedSeries;

/// Expression tree for right-hand sides and history functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// The time variable `t`.
    Time,
    /// `u^(deriv)` evaluated at `t - tau_delay`; `delay == 0` is the current
    /// time.
    State { deriv: u32, delay: usize },
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power with a non-negative literal exponent.
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn contains_state(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::State { .. }))
    }

    /// True if the unknown at the current time (`delay == 0`) occurs anywhere
    /// in this subtree.
    pub fn contains_current_state(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::State { delay: 0, .. }))
    }

    fn any(&self, pred: &mut impl FnMut(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Const(_) | Expr::Time | Expr::State { .. } => false,
            Expr::Add(children) | Expr::Mul(children) => {
                children.iter().any(|c| c.any(pred))
            }
            Expr::Sub(l, r) | Expr::Div(l, r) => l.any(pred) || r.any(pred),
            Expr::Pow(b, _) => b.any(pred),
            Expr::Exp(a) | Expr::Neg(a) => a.any(pred),
        }
    }

    /// Calls `f` on every node of the tree, parents before children.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Time | Expr::State { .. } => {}
            Expr::Add(children) | Expr::Mul(children) => {
                children.iter().for_each(|c| c.visit(f))
            }
            Expr::Sub(l, r) | Expr::Div(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Pow(b, _) => b.visit(f),
            Expr::Exp(a) | Expr::Neg(a) => a.visit(f),
        }
    }

    /// Evaluates at time `t`, resolving every state reference through
    /// `state(deriv, delay)`. Division by zero follows IEEE semantics; the
    /// callers watch for non-finite results.
    pub fn eval_with(
        &self,
        t: f64,
        state: &mut impl FnMut(u32, usize) -> Result<f64>,
    ) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::State { deriv, delay } => state(*deriv, *delay)?,
            Expr::Add(children) => {
                let mut s = 0.0;
                for c in children {
                    s += c.eval_with(t, state)?;
                }
                s
            }
            Expr::Sub(l, r) => l.eval_with(t, state)? - r.eval_with(t, state)?,
            Expr::Mul(children) => {
                let mut p = 1.0;
                for c in children {
                    p *= c.eval_with(t, state)?;
                }
                p
            }
            Expr::Div(l, r) => l.eval_with(t, state)? / r.eval_with(t, state)?,
            Expr::Pow(b, k) => b.eval_with(t, state)?.powi(*k as i32),
            Expr::Exp(a) => a.eval_with(t, state)?.exp(),
            Expr::Neg(a) => -a.eval_with(t, state)?,
        })
    }

    /// Evaluates a state-free expression at `t`.
    pub fn eval_time(&self, t: f64) -> Result<f64> {
        self.eval_with(t, &mut |_, _| {
            Err(Error::ModelInvariant(
                "expression depends on the unknown where a function of t is required".into(),
            ))
        })
    }

    /// Expands a state-free expression as a series about `center`, truncated
    /// at order `n` and zero-padded to exactly that order.
    pub fn eval_series(&self, center: f64, n: usize) -> Result<TruncatedSeries> {
        let s = match self {
            Expr::Const(c) => TruncatedSeries::constant(center, *c),
            Expr::Time => TruncatedSeries::time_var(center),
            Expr::State { .. } => {
                return Err(Error::ModelInvariant(
                    "expression depends on the unknown where a function of t is required".into(),
                ))
            }
            Expr::Add(children) => {
                let mut acc = TruncatedSeries::constant(center, 0.0);
                for c in children {
                    acc = acc.add(&c.eval_series(center, n)?)?;
                }
                acc
            }
            Expr::Sub(l, r) => l.eval_series(center, n)?.sub(&r.eval_series(center, n)?)?,
            Expr::Mul(children) => {
                let mut acc = TruncatedSeries::constant(center, 1.0);
                for c in children {
                    acc = acc.mul(&c.eval_series(center, n)?, n)?;
                }
                acc
            }
            Expr::Div(l, r) => l.eval_series(center, n)?.div(&r.eval_series(center, n)?, n)?,
            Expr::Pow(b, k) => {
                let base = b.eval_series(center, n)?;
                let mut acc = TruncatedSeries::constant(center, 1.0);
                for _ in 0..*k {
                    acc = acc.mul(&base, n)?;
                }
                acc
            }
            Expr::Exp(a) => a.eval_series(center, n)?.exp_series(n),
            Expr::Neg(a) => a.eval_series(center, n)?.neg(),
        };
        Ok(s.pad_to(n))
    }

    /// Symbolic d/dt of a state-free expression, with light constant folding
    /// so repeated differentiation stays small.
    pub fn differentiate_time(&self) -> Result<Expr> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Time => Expr::Const(1.0),
            Expr::State { .. } => {
                return Err(Error::ModelInvariant(
                    "cannot differentiate an expression containing the unknown".into(),
                ))
            }
            Expr::Add(children) => {
                let parts = children
                    .iter()
                    .map(Expr::differentiate_time)
                    .collect::<Result<Vec<_>>>()?;
                sum_of(parts)
            }
            Expr::Sub(l, r) => {
                sub_of(l.differentiate_time()?, r.differentiate_time()?)
            }
            Expr::Mul(children) => {
                let mut terms = Vec::new();
                for i in 0..children.len() {
                    let mut factors = Vec::new();
                    for (j, c) in children.iter().enumerate() {
                        factors.push(if i == j { c.differentiate_time()? } else { c.clone() });
                    }
                    terms.push(product_of(factors));
                }
                sum_of(terms)
            }
            Expr::Div(l, r) => {
                // (l'r - lr') / r^2
                let num = sub_of(
                    product_of(vec![l.differentiate_time()?, (**r).clone()]),
                    product_of(vec![(**l).clone(), r.differentiate_time()?]),
                );
                Expr::Div(Box::new(num), Box::new(Expr::Pow(r.clone(), 2)))
            }
            Expr::Pow(b, k) => match k {
                0 => Expr::Const(0.0),
                _ => product_of(vec![
                    Expr::Const(*k as f64),
                    Expr::Pow(b.clone(), k - 1),
                    b.differentiate_time()?,
                ]),
            },
            Expr::Exp(a) => product_of(vec![a.differentiate_time()?, self.clone()]),
            Expr::Neg(a) => match a.differentiate_time()? {
                Expr::Const(c) => Expr::Const(-c),
                d => Expr::Neg(Box::new(d)),
            },
        })
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn sum_of(parts: Vec<Expr>) -> Expr {
    let mut parts: Vec<Expr> = parts.into_iter().filter(|p| !is_zero(p)).collect();
    match parts.len() {
        0 => Expr::Const(0.0),
        1 => parts.pop().unwrap(),
        _ => Expr::Add(parts),
    }
}

fn sub_of(l: Expr, r: Expr) -> Expr {
    if is_zero(&r) {
        l
    } else if is_zero(&l) {
        Expr::Neg(Box::new(r))
    } else {
        Expr::Sub(Box::new(l), Box::new(r))
    }
}

fn product_of(factors: Vec<Expr>) -> Expr {
    if factors.iter().any(is_zero) {
        return Expr::Const(0.0);
    }
    let mut factors: Vec<Expr> = factors.into_iter().filter(|f| !is_one(f)).collect();
    match factors.len() {
        0 => Expr::Const(1.0),
        1 => factors.pop().unwrap(),
        _ => Expr::Mul(factors),
    }
}

/// Operator precedence levels used by the printer. Higher binds tighter.
/// `Sign` sits between `Power` and `Atom` because the grammar derives unary
/// minus inside `atom`, so `-t` is a valid power base while `t^2` is not.
#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Prec {
    Sum,
    Product,
    Power,
    Sign,
    Atom,
}

fn prec(e: &Expr) -> Prec {
    match e {
        Expr::Add(_) | Expr::Sub(..) => Prec::Sum,
        Expr::Mul(_) | Expr::Div(..) => Prec::Product,
        Expr::Pow(..) => Prec::Power,
        Expr::Neg(_) => Prec::Sign,
        Expr::Const(c) if *c < 0.0 => Prec::Sign,
        Expr::Const(_) | Expr::Time | Expr::State { .. } | Expr::Exp(_) => Prec::Atom,
    }
}

impl fmt::Display for Expr {
    /// Prints in the grammar the parser accepts; parsing the output yields
    /// the same tree back. Parentheses appear exactly where reparsing would
    /// otherwise regroup: right operands of `-` and `/` at the same level,
    /// non-atoms under `^` and unary minus.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &Expr, min: Prec) -> fmt::Result {
            if prec(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Time => write!(f, "t"),
            Expr::State { deriv, delay } => {
                write!(f, "u")?;
                for _ in 0..*deriv {
                    write!(f, "'")?;
                }
                if *delay > 0 {
                    write!(f, "[{delay}]")?;
                }
                Ok(())
            }
            Expr::Add(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    // Later summands must not start with their own +/- split.
                    paren(f, c, if i == 0 { Prec::Sum } else { Prec::Product })?;
                }
                Ok(())
            }
            Expr::Sub(l, r) => {
                paren(f, l, Prec::Sum)?;
                write!(f, " - ")?;
                paren(f, r, Prec::Product)
            }
            Expr::Mul(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    paren(f, c, if i == 0 { Prec::Product } else { Prec::Power })?;
                }
                Ok(())
            }
            Expr::Div(l, r) => {
                paren(f, l, Prec::Product)?;
                write!(f, "/")?;
                paren(f, r, Prec::Power)
            }
            Expr::Pow(b, k) => {
                paren(f, b, Prec::Sign)?;
                write!(f, "^{k}")
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                paren(f, a, Prec::Sign)
            }
        }
    }
}

/// How a delay was written: exact fractions and bare integers schedule on the
/// rational gcd grid, decimal floats on the enumerated sigma grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySpec {
    Exact(Rational),
    Float(f64),
}

impl DelaySpec {
    pub fn value(&self) -> f64 {
        match self {
            DelaySpec::Exact(r) => r.to_f64(),
            DelaySpec::Float(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<Rational> {
        match self {
            DelaySpec::Exact(r) => Some(*r),
            DelaySpec::Float(_) => None,
        }
    }
}

impl fmt::Display for DelaySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelaySpec::Exact(r) => write!(f, "{r}"),
            DelaySpec::Float(v) => {
                // Keep a decimal point so the value reparses as a float.
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
        }
    }
}

/// Truncation order: one order for every segment, or one per segment.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderSpec {
    Uniform(usize),
    PerSegment(Vec<usize>),
}

/// Default truncation order when the model file does not set `N`.
pub const DEFAULT_TRUNCATION: usize = 16;

/// Coarse class of a model, by what its right-hand side references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    /// No delayed terms at all.
    Ode,
    /// Delayed terms of derivative order below the equation order.
    Delayed,
    /// A delayed term carries the equation's highest derivative.
    Neutral,
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelClass::Ode => "ODE",
            ModelClass::Delayed => "delayed",
            ModelClass::Neutral => "neutral",
        })
    }
}

/// Non-fatal findings from [`DelayModel::validate`]. Each names a construct
/// the recurrence compiler will reject, so surfacing them early gives the
/// error a model-level home before lowering runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostic {
    CurrentStateInDenominator,
    CurrentStateInExpArgument,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnostic::CurrentStateInDenominator => {
                "a denominator depends on the unknown at the current time"
            }
            Diagnostic::CurrentStateInExpArgument => {
                "an exp argument depends on the unknown at the current time"
            }
        })
    }
}

/// A validated initial value problem for one scalar delay equation
/// `u^(n)(t) = f(t, u, delayed terms)` on `(t0, T]` with history `u = phi`
/// on `[t0 - max delay, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    /// Equation order `n >= 1` (the derivative solved for).
    pub order: u32,
    /// The delays, 1-based from the expression grammar's `u[i]`.
    pub delays: Vec<DelaySpec>,
    pub rhs: Expr,
    /// History `phi(t)`, a function of `t` only.
    pub history: Expr,
    pub t0: f64,
    /// Right end of the integration domain, `T > t0`.
    pub terminal: f64,
    pub trunc: OrderSpec,
    /// Optional `u(t0), u'(t0), ..., u^(n-1)(t0)`; must agree with the
    /// history's derivatives to 1e-9 relative.
    pub initial: Option<Vec<f64>>,
}

impl DelayModel {
    /// Structural invariants, checked for models built in code; the parser
    /// enforces the same set with line/column positions.
    pub fn check_structure(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::ModelInvariant("equation order must be at least 1".into()));
        }
        if !(self.terminal > self.t0) {
            return Err(Error::ModelInvariant(format!(
                "domain end {} must exceed start {}",
                self.terminal, self.t0
            )));
        }
        for (i, d) in self.delays.iter().enumerate() {
            if !(d.value() > 0.0) || !d.value().is_finite() {
                return Err(Error::ModelInvariant(format!("delay {} is not positive", i + 1)));
            }
            if self.delays[..i].iter().any(|e| e.value() == d.value()) {
                return Err(Error::ModelInvariant(format!(
                    "delay {} duplicates an earlier delay",
                    i + 1
                )));
            }
        }
        let n = self.order;
        let mut err = None;
        self.rhs.visit(&mut |e| {
            if let Expr::State { deriv, delay } = e {
                if *delay > self.delays.len() {
                    err.get_or_insert(Error::ModelInvariant(format!(
                        "delay index {delay} out of range (model has {} delay(s))",
                        self.delays.len()
                    )));
                } else if *delay == 0 && *deriv >= n {
                    err.get_or_insert(Error::ModelInvariant(format!(
                        "derivative order {deriv} of the current-time unknown must stay below \
                         the equation order {n}"
                    )));
                } else if *deriv > n {
                    err.get_or_insert(Error::ModelInvariant(format!(
                        "derivative order {deriv} exceeds the equation order {n}"
                    )));
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if self.history.contains_state() {
            return Err(Error::ModelInvariant("history must be a function of t only".into()));
        }
        match &self.trunc {
            OrderSpec::Uniform(nt) => self.check_trunc_order(*nt)?,
            OrderSpec::PerSegment(list) => {
                if list.is_empty() {
                    return Err(Error::ModelInvariant("empty per-segment order list".into()));
                }
                for nt in list {
                    self.check_trunc_order(*nt)?;
                }
            }
        }
        if let Some(ic) = &self.initial {
            if ic.len() != n as usize {
                return Err(Error::ModelInvariant(format!(
                    "expected {} initial value(s), got {}",
                    n,
                    ic.len()
                )));
            }
            self.check_initial_consistency(ic)?;
        }
        Ok(())
    }

    fn check_trunc_order(&self, nt: usize) -> Result<()> {
        if nt < self.order as usize {
            return Err(Error::ModelInvariant(format!(
                "truncation order {nt} is below the equation order {}",
                self.order
            )));
        }
        Ok(())
    }

    /// Initial values must equal the history's derivatives at `t0` to 1e-9
    /// relative: they seed the same first segment the history would.
    fn check_initial_consistency(&self, ic: &[f64]) -> Result<()> {
        let phi = self.history.eval_series(self.t0, self.order as usize)?;
        let mut factorial = 1.0;
        for (i, given) in ic.iter().enumerate() {
            if !given.is_finite() {
                return Err(Error::ModelInvariant(format!(
                    "initial value {i} is not finite"
                )));
            }
            if i > 0 {
                factorial *= i as f64;
            }
            let derived = phi.coeff(i) * factorial;
            if (given - derived).abs() > 1e-9 * derived.abs().max(1.0) {
                return Err(Error::ModelInvariant(format!(
                    "initial value {given} at position {i} disagrees with the history \
                     derivative {derived}"
                )));
            }
        }
        Ok(())
    }

    /// Classifies by the delayed derivative orders the right-hand side uses.
    pub fn classify(&self) -> ModelClass {
        let n = self.order;
        let mut class = ModelClass::Ode;
        self.rhs.visit(&mut |e| {
            if let Expr::State { deriv, delay } = e {
                if *delay > 0 {
                    if *deriv == n {
                        class = ModelClass::Neutral;
                    } else if class == ModelClass::Ode {
                        class = ModelClass::Delayed;
                    }
                }
            }
        });
        class
    }

    /// Collects the constructs the recurrence compiler cannot lower. An empty
    /// list means `compile_rhs` will accept the model.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        self.rhs.visit(&mut |e| match e {
            Expr::Div(_, den) if den.contains_current_state() => {
                if !diags.contains(&Diagnostic::CurrentStateInDenominator) {
                    diags.push(Diagnostic::CurrentStateInDenominator);
                }
            }
            Expr::Exp(arg) if arg.contains_current_state() => {
                if !diags.contains(&Diagnostic::CurrentStateInExpArgument) {
                    diags.push(Diagnostic::CurrentStateInExpArgument);
                }
            }
            _ => {}
        });
        diags
    }

    /// Largest delay; zero for delay-free models.
    pub fn history_span(&self) -> f64 {
        self.delays.iter().map(DelaySpec::value).fold(0.0, f64::max)
    }

    /// Float values of all delays, 1-based index shifted down by one.
    pub fn delay_values(&self) -> Vec<f64> {
        self.delays.iter().map(DelaySpec::value).collect()
    }

    /// Truncation order for 1-based segment `j` given the segment count;
    /// `None` if a per-segment list does not match that count.
    pub fn trunc_for_segment(&self, j: usize, segments: usize) -> Option<usize> {
        match &self.trunc {
            OrderSpec::Uniform(n) => Some(*n),
            OrderSpec::PerSegment(list) if list.len() == segments => Some(list[j - 1]),
            OrderSpec::PerSegment(_) => None,
        }
    }
}

/// Canonical model file form; `parse_model` of the output returns an equal
/// model.
pub fn print_model(m: &DelayModel) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "order = {}", m.order);
    let delays: Vec<String> = m.delays.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "delays = [{}]", delays.join(", "));
    let _ = writeln!(out, "rhs = \"{}\"", m.rhs);
    let _ = writeln!(out, "history = \"{}\"", m.history);
    let _ = writeln!(out, "t0 = {}", m.t0);
    let _ = writeln!(out, "T = {}", m.terminal);
    match &m.trunc {
        OrderSpec::Uniform(n) => {
            let _ = writeln!(out, "N = {n}");
        }
        OrderSpec::PerSegment(list) => {
            let items: Vec<String> = list.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "N = [{}]", items.join(", "));
        }
    }
    if let Some(ic) = &m.initial {
        let items: Vec<String> = ic.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "ic = [{}]", items.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(deriv: u32, delay: usize) -> Expr {
        Expr::State { deriv, delay }
    }

    fn hutchinson_rhs() -> Expr {
        // u * (2 - 4*u[1])
        Expr::Mul(vec![
            state(0, 0),
            Expr::Sub(
                Box::new(Expr::Const(2.0)),
                Box::new(Expr::Mul(vec![Expr::Const(4.0), state(0, 1)])),
            ),
        ])
    }

    fn hutchinson() -> DelayModel {
        DelayModel {
            order: 1,
            delays: vec![DelaySpec::Exact(Rational::new(1, 10).unwrap())],
            rhs: hutchinson_rhs(),
            history: Expr::Const(1.0),
            t0: 0.0,
            terminal: 0.5,
            trunc: OrderSpec::PerSegment(vec![3, 4, 5, 6, 7]),
            initial: None,
        }
    }

    #[test]
    fn structural_check_accepts_the_logistic_model() {
        assert!(hutchinson().check_structure().is_ok());
        assert_eq!(hutchinson().classify(), ModelClass::Delayed);
        assert!(hutchinson().validate().is_empty());
    }

    #[test]
    fn classification_spots_neutral_terms() {
        let mut m = hutchinson();
        m.rhs = Expr::Add(vec![state(0, 0), state(1, 1)]);
        assert_eq!(m.classify(), ModelClass::Neutral);
        m.rhs = state(0, 0);
        assert_eq!(m.classify(), ModelClass::Ode);
    }

    #[test]
    fn structural_check_rejects_bad_references() {
        let mut m = hutchinson();
        m.rhs = state(0, 2);
        assert!(m.check_structure().is_err(), "delay index out of range");
        let mut m = hutchinson();
        m.rhs = state(1, 0);
        assert!(m.check_structure().is_err(), "current derivative at order n");
        let mut m = hutchinson();
        m.rhs = state(2, 1);
        assert!(m.check_structure().is_err(), "delayed derivative above n");
        let mut m = hutchinson();
        m.history = state(0, 0);
        assert!(m.check_structure().is_err(), "state in history");
        let mut m = hutchinson();
        m.delays = vec![
            DelaySpec::Float(0.5),
            DelaySpec::Exact(Rational::new(1, 2).unwrap()),
        ];
        assert!(m.check_structure().is_err(), "duplicate delay values");
        let mut m = hutchinson();
        m.trunc = OrderSpec::Uniform(0);
        assert!(m.check_structure().is_err(), "truncation below order");
    }

    #[test]
    fn validation_flags_current_state_in_denominator_and_exp() {
        let mut m = hutchinson();
        m.rhs = Expr::Div(Box::new(Expr::Const(1.0)), Box::new(state(0, 0)));
        assert_eq!(m.validate(), vec![Diagnostic::CurrentStateInDenominator]);
        m.rhs = Expr::Exp(Box::new(state(0, 0)));
        assert_eq!(m.validate(), vec![Diagnostic::CurrentStateInExpArgument]);
        // Delayed terms in a denominator are fine.
        m.rhs = Expr::Div(Box::new(state(1, 1)), Box::new(state(0, 1)));
        assert!(m.validate().is_empty());
    }

    #[test]
    fn initial_values_must_match_the_history() {
        let mut m = hutchinson();
        m.initial = Some(vec![1.0]);
        assert!(m.check_structure().is_ok());
        m.initial = Some(vec![1.001]);
        assert!(m.check_structure().is_err());
        // History t^2 at t0 = 1 has derivatives (1, 2) for a second-order model.
        let m2 = DelayModel {
            order: 2,
            delays: vec![DelaySpec::Exact(Rational::new(1, 2).unwrap())],
            rhs: state(0, 1),
            history: Expr::Pow(Box::new(Expr::Time), 2),
            t0: 1.0,
            terminal: 2.0,
            trunc: OrderSpec::Uniform(8),
            initial: Some(vec![1.0, 2.0]),
        };
        assert!(m2.check_structure().is_ok());
    }

    #[test]
    fn eval_with_resolves_states_through_the_callback() {
        let rhs = hutchinson_rhs();
        // u = 3, u(t - tau) = 0.25: 3 * (2 - 1) = 3.
        let v = rhs
            .eval_with(0.7, &mut |d, i| {
                Ok(match (d, i) {
                    (0, 0) => 3.0,
                    (0, 1) => 0.25,
                    _ => unreachable!(),
                })
            })
            .unwrap();
        assert_relative_eq!(v, 3.0);
    }

    #[test]
    fn series_evaluation_matches_pointwise_evaluation() {
        // exp(2t) * (1 + t)^2 / (3 - t) about 0.5
        let e = Expr::Div(
            Box::new(Expr::Mul(vec![
                Expr::Exp(Box::new(Expr::Mul(vec![Expr::Const(2.0), Expr::Time]))),
                Expr::Pow(Box::new(Expr::Add(vec![Expr::Const(1.0), Expr::Time])), 2),
            ])),
            Box::new(Expr::Sub(Box::new(Expr::Const(3.0)), Box::new(Expr::Time))),
        );
        let s = e.eval_series(0.5, 24).unwrap();
        assert_eq!(s.order(), 24);
        for i in 0..11 {
            let t = 0.3 + 0.04 * i as f64;
            assert_relative_eq!(s.eval(t), e.eval_time(t).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn symbolic_derivative_matches_finite_differences() {
        let e = Expr::Div(
            Box::new(Expr::Exp(Box::new(Expr::Neg(Box::new(Expr::Time))))),
            Box::new(Expr::Add(vec![Expr::Const(2.0), Expr::Pow(Box::new(Expr::Time), 2)])),
        );
        let d = e.differentiate_time().unwrap();
        let h = 1e-6;
        for i in 0..9 {
            let t = -1.0 + 0.25 * i as f64;
            let fd = (e.eval_time(t + h).unwrap() - e.eval_time(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(d.eval_time(t).unwrap(), fd, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn printer_output_is_grammar_shaped() {
        assert_eq!(hutchinson_rhs().to_string(), "u*(2 - 4*u[1])");
        let e = Expr::Sub(
            Box::new(Expr::Time),
            Box::new(Expr::Add(vec![Expr::Const(1.0), Expr::Time])),
        );
        assert_eq!(e.to_string(), "t - (1 + t)");
        let e = Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Time), 2)));
        assert_eq!(e.to_string(), "-(t^2)");
        // Unary minus is an atom, so it may stand bare under a power.
        let e = Expr::Pow(Box::new(Expr::Neg(Box::new(Expr::Time))), 2);
        assert_eq!(e.to_string(), "-t^2");
        let e = Expr::Div(
            Box::new(Expr::Time),
            Box::new(Expr::Mul(vec![Expr::Const(2.0), Expr::Time])),
        );
        assert_eq!(e.to_string(), "t/(2*t)");
        let e = Expr::State { deriv: 2, delay: 3 };
        assert_eq!(e.to_string(), "u''[3]");
    }
}
