//! Parsing for model files and right-hand side expressions.
//!
//! A model file is a list of `key = value` lines with `#` comments. The two
//! expression-valued keys (`rhs`, `history`) hold a quoted expression in the
//! grammar
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := atom ('^' uint)?
//! atom     := number | 't' | stateref | '(' expr ')' | 'exp(' expr ')' | '-' atom
//! stateref := 'u' primes? ('[' uint ']')?
//! ```
//!
//! Expression errors carry the line and column of the offending token inside
//! the original file, so a model file diagnostic points at the file, not at
//! an extracted substring. Columns count bytes from 1.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{DelayModel, DelaySpec, Expr, OrderSpec, DEFAULT_TRUNCATION};
use crate::schedule::Rational;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Time,
    UVar,
    Prime,
    ExpName,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    End,
}

#[derive(Debug, Clone, Copy)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

/// Tokenizes expression source. `col0` is the column of the first byte of
/// `src` in its file line, so token columns land in the original file.
fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = col0 + i;
        let b = bytes[i];
        match b {
            b' ' | b'\t' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b'[' | b']' | b'\'' => {
                let tok = match b {
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'^' => Tok::Caret,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b'[' => Tok::LBracket,
                    b']' => Tok::RBracket,
                    _ => Tok::Prime,
                };
                toks.push(Spanned { tok, col });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut integer = true;
                if i < bytes.len() && bytes[i] == b'.' {
                    integer = false;
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(syntax(line, col0 + i, "expected a digit after `.`"));
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Consume an exponent part only when one actually follows;
                // `2exp(t)` must leave the `e` for the name that starts there.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integer = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(line, col, format!("invalid number `{text}`")))?;
                toks.push(Spanned { tok: Tok::Num { value, integer }, col });
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let name = &src[start..i];
                let tok = match name {
                    "t" => Tok::Time,
                    "u" => Tok::UVar,
                    "exp" => Tok::ExpName,
                    _ => return Err(syntax(line, col, format!("unknown name `{name}`"))),
                };
                toks.push(Spanned { tok, col });
            }
            _ => {
                return Err(syntax(line, col, format!("unexpected character `{}`", b as char)));
            }
        }
    }
    toks.push(Spanned { tok: Tok::End, col: col0 + bytes.len() });
    Ok(toks)
}

/// Reference limits active while parsing a model file's expressions. Absent
/// for bare [`parse_expr`], which checks grammar only.
#[derive(Clone, Copy)]
struct RefCtx {
    delays: usize,
    order: u32,
    history: bool,
}

struct ExprParser {
    toks: Vec<Spanned>,
    i: usize,
    line: usize,
    ctx: Option<RefCtx>,
}

impl ExprParser {
    fn peek(&self) -> Spanned {
        self.toks[self.i]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.i];
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn parse_full(&mut self) -> Result<Expr> {
        let e = self.parse_sum()?;
        let t = self.peek();
        if t.tok != Tok::End {
            return Err(syntax(self.line, t.col, "expected an operator or end of expression"));
        }
        Ok(e)
    }

    fn parse_sum(&mut self) -> Result<Expr> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    acc = match acc {
                        Expr::Add(mut v) => {
                            v.push(rhs);
                            Expr::Add(v)
                        }
                        other => Expr::Add(vec![other, rhs]),
                    };
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    let rhs = self.parse_factor()?;
                    acc = match acc {
                        Expr::Mul(mut v) => {
                            v.push(rhs);
                            Expr::Mul(v)
                        }
                        other => Expr::Mul(vec![other, rhs]),
                    };
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.parse_factor()?;
                    acc = Expr::Div(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let t = self.bump();
            let k = match t.tok {
                Tok::Num { value, integer: true }
                    if value >= 0.0 && value <= u32::MAX as f64 =>
                {
                    value as u32
                }
                _ => return Err(Error::NonIntegerExponent { line: self.line, col: t.col }),
            };
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num { value, .. } => Ok(Expr::Const(value)),
            Tok::Time => Ok(Expr::Time),
            Tok::UVar => self.parse_stateref(t.col),
            Tok::Minus => {
                let inner = self.parse_atom()?;
                Ok(match inner {
                    Expr::Const(c) => Expr::Const(-c),
                    other => Expr::Neg(Box::new(other)),
                })
            }
            Tok::LParen => {
                let e = self.parse_sum()?;
                self.expect_close(Tok::RParen, ")")?;
                Ok(e)
            }
            Tok::ExpName => {
                let open = self.bump();
                if open.tok != Tok::LParen {
                    return Err(syntax(self.line, open.col, "expected `(` after `exp`"));
                }
                let e = self.parse_sum()?;
                self.expect_close(Tok::RParen, ")")?;
                Ok(Expr::Exp(Box::new(e)))
            }
            _ => Err(syntax(self.line, t.col, "expected an expression")),
        }
    }

    fn expect_close(&mut self, tok: Tok, name: &str) -> Result<()> {
        let t = self.bump();
        if t.tok != tok {
            return Err(syntax(self.line, t.col, format!("expected `{name}`")));
        }
        Ok(())
    }

    fn parse_stateref(&mut self, ucol: usize) -> Result<Expr> {
        if let Some(ctx) = self.ctx {
            if ctx.history {
                return Err(Error::HistoryContainsState { line: self.line, col: ucol });
            }
        }
        let mut deriv = 0u32;
        while self.peek().tok == Tok::Prime {
            self.bump();
            deriv += 1;
        }
        let mut delay = 0usize;
        if self.peek().tok == Tok::LBracket {
            self.bump();
            let t = self.bump();
            delay = match t.tok {
                Tok::Num { value, integer: true }
                    if value >= 1.0 && value <= u32::MAX as f64 =>
                {
                    value as usize
                }
                _ => match self.ctx {
                    Some(ctx) => {
                        let index = match t.tok {
                            Tok::Num { value, integer: true } => value as usize,
                            _ => {
                                return Err(syntax(
                                    self.line,
                                    t.col,
                                    "expected an integer delay index",
                                ))
                            }
                        };
                        return Err(Error::UnknownDelayIndex {
                            line: self.line,
                            col: t.col,
                            index,
                            delays: ctx.delays,
                        });
                    }
                    None => {
                        return Err(syntax(self.line, t.col, "expected an integer delay index"))
                    }
                },
            };
            self.expect_close(Tok::RBracket, "]")?;
        }
        if let Some(ctx) = self.ctx {
            if delay > ctx.delays {
                return Err(Error::UnknownDelayIndex {
                    line: self.line,
                    col: ucol,
                    index: delay,
                    delays: ctx.delays,
                });
            }
            let max = if delay == 0 { ctx.order - 1 } else { ctx.order };
            if deriv > max {
                return Err(Error::DerivativeOrderTooHigh {
                    line: self.line,
                    col: ucol,
                    deriv,
                    max,
                });
            }
        }
        Ok(Expr::State { deriv, delay })
    }
}

fn parse_expr_at(src: &str, line: usize, col0: usize, ctx: Option<RefCtx>) -> Result<Expr> {
    let toks = lex(src, line, col0)?;
    let mut p = ExprParser { toks, i: 0, line, ctx };
    p.parse_full()
}

/// Parses a standalone expression. Grammar checks only; delay indices and
/// derivative orders are validated against a model by [`parse_model`].
pub fn parse_expr(src: &str) -> Result<Expr> {
    parse_expr_at(src, 1, 1, None)
}

/// One raw `key = value` line, positions included.
struct RawEntry {
    value: String,
    line: usize,
    value_col: usize,
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, b) in line.bytes().enumerate() {
        match b {
            b'"' => in_quote = !in_quote,
            b'#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

const KNOWN_KEYS: [&str; 8] = ["order", "delays", "rhs", "history", "t0", "T", "N", "ic"];

fn collect_entries(src: &str) -> Result<HashMap<String, RawEntry>> {
    let mut entries: HashMap<String, RawEntry> = HashMap::new();
    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        let stripped = strip_comment(raw);
        if stripped.trim().is_empty() {
            continue;
        }
        let eq = stripped
            .find('=')
            .ok_or_else(|| syntax(line, 1, "expected `key = value`"))?;
        let key = stripped[..eq].trim();
        if key.is_empty() {
            return Err(syntax(line, 1, "expected a key before `=`"));
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(syntax(line, 1, format!("unknown key `{key}`")));
        }
        let rest = &stripped[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        let value = rest.trim();
        if value.is_empty() {
            return Err(syntax(line, eq + 2, format!("key `{key}` has no value")));
        }
        let value_col = eq + lead + 2;
        if entries
            .insert(key.to_string(), RawEntry { value: value.to_string(), line, value_col })
            .is_some()
        {
            return Err(syntax(line, 1, format!("duplicate key `{key}`")));
        }
    }
    Ok(entries)
}

fn require<'a>(
    entries: &'a HashMap<String, RawEntry>,
    key: &str,
) -> Result<&'a RawEntry> {
    entries
        .get(key)
        .ok_or_else(|| Error::ModelInvariant(format!("model is missing key `{key}`")))
}

fn parse_f64(e: &RawEntry, what: &str) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| syntax(e.line, e.value_col, format!("invalid {what} `{}`", e.value)))?;
    if !v.is_finite() {
        return Err(syntax(e.line, e.value_col, format!("{what} must be finite")));
    }
    Ok(v)
}

fn bracket_items(e: &RawEntry) -> Result<Vec<&str>> {
    let v = e.value.as_str();
    if !v.starts_with('[') || !v.ends_with(']') || v.len() < 2 {
        return Err(syntax(e.line, e.value_col, "expected a bracketed list"));
    }
    let inner = v[1..v.len() - 1].trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(str::trim).collect())
}

fn is_integer_literal(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn parse_delay_item(item: &str, e: &RawEntry) -> Result<DelaySpec> {
    let bad = |msg: String| syntax(e.line, e.value_col, msg);
    if let Some((num, den)) = item.split_once('/') {
        let p: i64 = num
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid fraction numerator in `{item}`")))?;
        let q: i64 = den
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid fraction denominator in `{item}`")))?;
        let r = Rational::new(p, q).map_err(|_| bad(format!("zero denominator in `{item}`")))?;
        return Ok(DelaySpec::Exact(r));
    }
    if is_integer_literal(item) {
        let n: i64 = item
            .parse()
            .map_err(|_| bad(format!("integer delay `{item}` out of range")))?;
        return Ok(DelaySpec::Exact(Rational::from_integer(n)));
    }
    let v: f64 = item.parse().map_err(|_| bad(format!("invalid delay `{item}`")))?;
    if !v.is_finite() {
        return Err(bad(format!("delay `{item}` is not finite")));
    }
    Ok(DelaySpec::Float(v))
}

/// Extracts the expression between quotes and the column just past the
/// opening quote.
fn quoted_body(e: &RawEntry, key: &str) -> Result<(String, usize)> {
    let v = e.value.as_str();
    if v.len() < 2 || !v.starts_with('"') || !v.ends_with('"') {
        return Err(syntax(e.line, e.value_col, format!("`{key}` must be a quoted expression")));
    }
    let body = &v[1..v.len() - 1];
    if body.contains('"') {
        return Err(syntax(e.line, e.value_col, format!("stray quote inside `{key}`")));
    }
    Ok((body.to_string(), e.value_col + 1))
}

/// Parses a model file and validates it end to end. See the module docs for
/// the format; `N` defaults to 16 and `ic` is optional.
pub fn parse_model(src: &str) -> Result<DelayModel> {
    let entries = collect_entries(src)?;

    let order_entry = require(&entries, "order")?;
    let order: u32 = order_entry.value.parse().map_err(|_| {
        syntax(order_entry.line, order_entry.value_col, "invalid equation order")
    })?;
    if order < 1 {
        return Err(syntax(
            order_entry.line,
            order_entry.value_col,
            "equation order must be at least 1",
        ));
    }

    let delays_entry = require(&entries, "delays")?;
    let delays = bracket_items(delays_entry)?
        .into_iter()
        .map(|item| parse_delay_item(item, delays_entry))
        .collect::<Result<Vec<_>>>()?;

    let rhs_entry = require(&entries, "rhs")?;
    let (rhs_src, rhs_col) = quoted_body(rhs_entry, "rhs")?;
    let ctx = RefCtx { delays: delays.len(), order, history: false };
    let rhs = parse_expr_at(&rhs_src, rhs_entry.line, rhs_col, Some(ctx))?;

    let history_entry = require(&entries, "history")?;
    let (hist_src, hist_col) = quoted_body(history_entry, "history")?;
    let hctx = RefCtx { history: true, ..ctx };
    let history = parse_expr_at(&hist_src, history_entry.line, hist_col, Some(hctx))?;

    let t0 = parse_f64(require(&entries, "t0")?, "number")?;
    let terminal = parse_f64(require(&entries, "T")?, "number")?;

    let trunc = match entries.get("N") {
        None => OrderSpec::Uniform(DEFAULT_TRUNCATION),
        Some(e) if e.value.starts_with('[') => {
            let list = bracket_items(e)?
                .into_iter()
                .map(|item| {
                    item.parse::<usize>().map_err(|_| {
                        syntax(e.line, e.value_col, format!("invalid truncation order `{item}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            OrderSpec::PerSegment(list)
        }
        Some(e) => OrderSpec::Uniform(e.value.parse::<usize>().map_err(|_| {
            syntax(e.line, e.value_col, format!("invalid truncation order `{}`", e.value))
        })?),
    };

    let initial = match entries.get("ic") {
        None => None,
        Some(e) => Some(
            bracket_items(e)?
                .into_iter()
                .map(|item| {
                    item.parse::<f64>().map_err(|_| {
                        syntax(e.line, e.value_col, format!("invalid initial value `{item}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let model = DelayModel { order, delays, rhs, history, t0, terminal, trunc, initial };
    model.check_structure()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{print_model, ModelClass};

    const LOGISTIC: &str = "\
# logistic growth with a lagged crowding term
order = 1
delays = [1/10]
rhs = \"u * (2 - 4*u[1])\"   # delayed logistic
history = \"1\"
t0 = 0
T = 0.5
N = [3, 4, 5, 6, 7]
";

    #[test]
    fn parses_a_model_file() {
        let m = parse_model(LOGISTIC).unwrap();
        assert_eq!(m.order, 1);
        assert_eq!(m.delays.len(), 1);
        assert_eq!(m.delays[0].exact().unwrap().to_f64(), 0.1);
        assert_eq!(m.t0, 0.0);
        assert_eq!(m.terminal, 0.5);
        assert_eq!(m.trunc, OrderSpec::PerSegment(vec![3, 4, 5, 6, 7]));
        assert_eq!(m.classify(), ModelClass::Delayed);
        assert_eq!(m.rhs.to_string(), "u*(2 - 4*u[1])");
    }

    #[test]
    fn printed_model_reparses_to_the_same_model() {
        let m = parse_model(LOGISTIC).unwrap();
        let printed = print_model(&m);
        let again = parse_model(&printed).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn neutral_file_parses_and_classifies() {
        let src = "\
order = 1
delays = [2, 1]
rhs = \"u * (0.45*(1 - u[1]/3) + 0.3*u'[2]/u[2])\"
history = \"2.3\"
t0 = 0
T = 2
N = 20
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.classify(), ModelClass::Neutral);
        assert!(m.delays.iter().all(|d| d.exact().is_some()));
        let again = parse_model(&print_model(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn float_delays_and_default_truncation() {
        let src = "\
order = 1
delays = [3.0, 3.141592653589793]
rhs = \"-u[2]\"
history = \"0.5\"
t0 = 0
T = 9
ic = [0.5]
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.trunc, OrderSpec::Uniform(DEFAULT_TRUNCATION));
        assert!(m.delays.iter().all(|d| d.exact().is_none()));
        assert_eq!(m.initial, Some(vec![0.5]));
        let again = parse_model(&print_model(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn expression_grammar_corners() {
        // Power binds after unary minus, which the grammar folds into atoms.
        let e = parse_expr("-t^2").unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::Neg(Box::new(Expr::Time))), 2));
        let e = parse_expr("-3^2").unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::Const(-3.0)), 2));
        // Left association across mixed products.
        let e = parse_expr("t/t*t").unwrap();
        assert_eq!(
            e,
            Expr::Mul(vec![Expr::Div(Box::new(Expr::Time), Box::new(Expr::Time)), Expr::Time])
        );
        // Number followed by a name is not implicit multiplication.
        assert!(parse_expr("2exp(t)").is_err());
        // Exponent notation in literals still lexes as one number.
        let e = parse_expr("2e-2").unwrap();
        assert_eq!(e, Expr::Const(0.02));
        let e = parse_expr("u''[3]").unwrap();
        assert_eq!(e, Expr::State { deriv: 2, delay: 3 });
    }

    #[test]
    fn printed_expressions_reparse_identically() {
        for src in [
            "u*(2 - 4*u[1])",
            "u * (0.45*(1 - u[1]/3) + 0.3*u'[2]/u[2])",
            "t - (1 + t)",
            "-t^2",
            "exp(-2*t) + t^3/(1 + u)",
            "1 - 2 - 3",
            "2*t*u - -u[1]",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = e.to_string();
            let again = parse_expr(&printed).unwrap();
            assert_eq!(e, again, "round trip through `{printed}`");
        }
    }

    #[test]
    fn reference_errors_carry_positions() {
        let src = "\
order = 1
delays = [1/10]
rhs = \"u * u[2]\"
history = \"1\"
t0 = 0
T = 1
";
        match parse_model(src) {
            Err(Error::UnknownDelayIndex { line, col, index, delays }) => {
                assert_eq!(line, 3);
                assert_eq!(index, 2);
                assert_eq!(delays, 1);
                assert!(col > 8, "column inside the quoted value, got {col}");
            }
            other => panic!("expected an unknown delay index error, got {other:?}"),
        }

        let src = src.replace("u * u[2]", "u'");
        match parse_model(&src) {
            Err(Error::DerivativeOrderTooHigh { deriv: 1, max: 0, .. }) => {}
            other => panic!("expected a derivative order error, got {other:?}"),
        }

        let src = "\
order = 1
delays = []
rhs = \"u\"
history = \"u\"
t0 = 0
T = 1
";
        match parse_model(src) {
            Err(Error::HistoryContainsState { line: 4, .. }) => {}
            other => panic!("expected a history error, got {other:?}"),
        }
    }

    #[test]
    fn exponent_must_be_an_unsigned_integer() {
        match parse_expr("u^2.5") {
            Err(Error::NonIntegerExponent { line: 1, col: 3 }) => {}
            other => panic!("expected a non-integer exponent error, got {other:?}"),
        }
        assert!(parse_expr("u^t").is_err());
        assert!(parse_expr("u^-2").is_err());
        assert!(parse_expr("u^2").is_ok());
    }

    #[test]
    fn file_shape_errors() {
        assert!(matches!(
            parse_model("order 1\n"),
            Err(Error::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_model("order = 1\norder = 2\n"),
            Err(Error::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_model("bogus = 1\n"),
            Err(Error::Syntax { line: 1, .. })
        ));
        let missing = parse_model("order = 1\n");
        assert!(matches!(missing, Err(Error::ModelInvariant(_))));
        // Comment markers inside quoted expressions are part of the value.
        let src = "\
order = 1
delays = []
rhs = \"t\"  # fine here
history = \"2\"
t0 = 0
T = 1
";
        assert!(parse_model(src).is_ok());
        assert!(parse_model(&src.replace("[]", "[3/0]")).is_err());
        assert!(parse_model(&src.replace("T = 1", "T = -1")).is_err());
    }

    #[test]
    fn duplicate_delay_values_are_rejected_across_forms() {
        let src = "\
order = 1
delays = [1/2, 0.5]
rhs = \"u[1] + u[2]\"
history = \"1\"
t0 = 0
T = 1
";
        assert!(parse_model(src).is_err());
    }
}
