//! Tri-state zero and constancy decisions.
//!
//! A decision is symbolic when the canonical form settles it. Otherwise the
//! expression is sampled at Halton points of the domain and compared against
//! a tolerance relative to the propagated rounding-error bound, so only
//! values lost in cancellation count as zero.

use std::fmt;

use super::canon::{normalize_poly, to_poly};
use super::{differentiate, eval, eval_scaled, normalize, Bindings, EvalError, Expr, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for TriState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriState::Yes => "yes",
            TriState::No => "no",
            TriState::Unknown => "unknown",
        })
    }
}

/// How a decision was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    Symbolic,
    Numeric,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::Symbolic => "symbolic",
            Grade::Numeric => "numeric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub state: TriState,
    pub grade: Grade,
}

impl Decision {
    pub fn symbolic(state: TriState) -> Self {
        Decision {
            state,
            grade: Grade::Symbolic,
        }
    }

    pub fn numeric(state: TriState) -> Self {
        Decision {
            state,
            grade: Grade::Numeric,
        }
    }

    pub fn is_yes(&self) -> bool {
        self.state == TriState::Yes
    }

    pub fn is_no(&self) -> bool {
        self.state == TriState::No
    }

    pub fn is_unknown(&self) -> bool {
        self.state == TriState::Unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// Closed interval; `None` unless `lo < hi` and both are finite.
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo.is_finite() && hi.is_finite() && lo < hi).then_some(Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Point at fraction `u ∈ (0, 1)` of the interval.
    pub fn at(&self, u: f64) -> f64 {
        self.lo + u * self.width()
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval {
            lo: 1.0,
            hi: 2.0,
            lo_closed: true,
            hi_closed: true,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPolicy {
    pub samples: usize,
    pub tolerance: f64,
    /// Points where some base of a negative power is smaller than this are
    /// skipped.
    pub min_denominator: f64,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            samples: 64,
            tolerance: 1e-9,
            min_denominator: 1e-6,
        }
    }
}

/// Radical inverse of `index` in `base`: the `index`-th Halton coordinate.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Fills extra bindings (beyond the sampled variable) at a sample point.
pub type Binder<'a> = &'a dyn Fn(f64, &mut Bindings) -> Result<(), EvalError>;

fn no_binder(_: f64, _: &mut Bindings) -> Result<(), EvalError> {
    Ok(())
}

fn sample_zero(e: &Expr, var: &str, domain: &Interval, policy: &SamplingPolicy, bind: Binder) -> TriState {
    let mut valid = 0usize;
    let mut bindings = Bindings::new();
    for i in 1..=policy.samples as u64 {
        let x = domain.at(halton(i, 2));
        bindings.clear();
        bindings.insert(var.to_string(), x);
        if bind(x, &mut bindings).is_err() {
            continue;
        }
        let Ok(s) = eval_scaled(e, &bindings) else {
            continue;
        };
        if s.min_denominator < policy.min_denominator {
            continue;
        }
        valid += 1;
        if s.value.abs() > policy.tolerance * s.scale {
            return TriState::No;
        }
    }
    if valid == 0 {
        TriState::Unknown
    } else {
        TriState::Yes
    }
}

/// Decides `e ≡ 0` on `domain`.
pub fn is_identically_zero(e: &Expr, var: &str, domain: &Interval) -> Decision {
    is_identically_zero_with(e, var, domain, &SamplingPolicy::default(), &no_binder)
}

pub fn is_identically_zero_with(
    e: &Expr,
    var: &str,
    domain: &Interval,
    policy: &SamplingPolicy,
    bind: Binder,
) -> Decision {
    let p = normalize_poly(&to_poly(e));
    if p.is_zero() {
        return Decision::symbolic(TriState::Yes);
    }
    if !p.depends_on(var) && p.as_constant().is_some() {
        return Decision::symbolic(TriState::No);
    }
    let n = super::canon::render(&p);
    Decision::numeric(sample_zero(&n, var, domain, policy, bind))
}

/// Value of an expression found to be constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstValue {
    /// Normalized symbolic value when it is free of the variable.
    pub expr: Option<Expr>,
    pub approx: f64,
}

impl ConstValue {
    pub fn exact(&self) -> Option<&Rational> {
        self.expr.as_ref().and_then(Expr::as_rational)
    }
}

/// Decides whether `e` is constant in `var` on `domain`.
pub fn is_constant(e: &Expr, var: &str, domain: &Interval) -> (Decision, Option<ConstValue>) {
    is_constant_with(e, var, domain, &SamplingPolicy::default(), &no_binder, &|x| {
        differentiate(x, var)
    })
}

/// Constancy with a caller-supplied derivative (for expressions carrying
/// formal symbols whose derivatives are not the plain partial).
pub fn is_constant_with(
    e: &Expr,
    var: &str,
    domain: &Interval,
    policy: &SamplingPolicy,
    bind: Binder,
    derivative: &dyn Fn(&Expr) -> Expr,
) -> (Decision, Option<ConstValue>) {
    let n = normalize(e);
    let free = n.variables().is_empty();
    if free {
        let approx = eval(&n, &Bindings::new()).unwrap_or(f64::NAN);
        let value = ConstValue {
            expr: Some(n),
            approx,
        };
        return (Decision::symbolic(TriState::Yes), Some(value));
    }
    let d = is_identically_zero_with(&derivative(&n), var, domain, policy, bind);
    if !d.is_yes() {
        return (d, None);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut bindings = Bindings::new();
    for i in 1..=policy.samples as u64 {
        let x = domain.at(halton(i, 2));
        bindings.clear();
        bindings.insert(var.to_string(), x);
        if bind(x, &mut bindings).is_err() {
            continue;
        }
        if let Ok(v) = eval(&n, &bindings) {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return (Decision { state: TriState::Unknown, grade: d.grade }, None);
    }
    let value = ConstValue {
        expr: None,
        approx: sum / count as f64,
    };
    (d, Some(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn e(s: &str) -> Expr {
        parse(s, "x").unwrap()
    }

    #[test]
    fn zero_decisions() {
        let d = Interval::default();
        assert_eq!(
            is_identically_zero(&e("(x+1)^2 - x^2 - 2*x - 1"), "x", &d),
            Decision::symbolic(TriState::Yes)
        );
        assert_eq!(is_identically_zero(&e("x^2"), "x", &d).state, TriState::No);
        assert_eq!(
            is_identically_zero(&e("exp(x) - exp(x)"), "x", &d),
            Decision::symbolic(TriState::Yes)
        );
    }

    #[test]
    fn unevaluable_everywhere_is_unknown() {
        let d = Interval::default();
        let r = is_identically_zero(&e("log(-x) - x"), "x", &d);
        assert_eq!(r.state, TriState::Unknown);
    }

    #[test]
    fn numeric_fallback_beyond_expansion_cap() {
        let d = Interval::default();
        let r = is_identically_zero(&e("(x+1)^13 - (x+1)^12*(x+1)"), "x", &d);
        assert!(r.is_yes());
    }

    #[test]
    fn constancy() {
        let d = Interval::default();
        let (dec, v) = is_constant(&e("3"), "x", &d);
        assert!(dec.is_yes());
        assert_eq!(v.unwrap().exact(), Some(&Rational::from_integer(3.into())));
        let (dec, v) = is_constant(&e("exp(x)/exp(x)"), "x", &d);
        assert!(dec.is_yes());
        assert_eq!(v.unwrap().approx, 1.0);
        let (dec, v) = is_constant(&e("x^2"), "x", &d);
        assert!(dec.is_no());
        assert!(v.is_none());
    }

    #[test]
    fn halton_sequence() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }
}
