//! Symbolic expressions over a small grammar: rationals, variables, named
//! constants, `+ - * / ^`, `exp` and `log`.
//!
//! [`Expr`] is the user-facing tree. All simplification happens on an
//! internal canonical form (see `canon`), and [`normalize`] renders that form
//! back into a tree, so structural equality of normalized trees is the
//! notion of symbolic equality used throughout the crate.

mod calculus;
pub(crate) mod canon;
mod decide;
mod eval;
mod parse;
mod print;

use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use canon::sign_convention_holds;
pub use calculus::{antiderivative, differentiate, substitute, CannotIntegrate};
pub use decide::{
    halton, is_constant, is_constant_with, Binder, is_identically_zero, is_identically_zero_with,
    ConstValue, Decision, Grade, Interval, SamplingPolicy, TriState,
};
pub use eval::{eval, eval_scaled, Bindings, EvalError, Scaled};

pub use parse::{parse, parse_with, ParseError};

/// Exact rational number used for every constant in an expression.
pub type Rational = BigRational;

/// Multinomial expansion of `(a + b + ...)^k` is only performed for `k` up to
/// this bound; larger powers stay folded and equality falls back to sampling.
pub const EXPANSION_CAP: u32 = 12;

/// Symbolic expression tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Constant(Rational),
    /// A symbol that is not differentiated: `e` or a user parameter.
    Named(String),
    Variable(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Constant(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn constant(q: Rational) -> Expr {
        Expr::Constant(q)
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Variable(name.to_string())
    }

    pub fn named(name: &str) -> Expr {
        Expr::Named(name.to_string())
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn log(self) -> Expr {
        Expr::Log(Box::new(self))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Power(Box::new(self), Box::new(exponent))
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Expr::int(n))
    }

    pub fn powq(self, q: Rational) -> Expr {
        self.pow(Expr::Constant(q))
    }

    pub fn recip(self) -> Expr {
        self.powi(-1)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Expr::Constant(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Constant(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Constant(q) if q.is_one())
    }

    /// True when `name` occurs as a variable anywhere in the tree.
    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Constant(_) | Expr::Named(_) => false,
            Expr::Variable(v) => v == name,
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().any(|x| x.depends_on(name)),
            Expr::Power(b, e) => b.depends_on(name) || e.depends_on(name),
            Expr::Exp(a) | Expr::Log(a) | Expr::Neg(a) => a.depends_on(name),
        }
    }

    /// Names of all variables in the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Constant(_) | Expr::Named(_) => {}
                Expr::Variable(v) => out.push(v.clone()),
                Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| walk(x, out)),
                Expr::Power(b, p) => {
                    walk(b, out);
                    walk(p, out);
                }
                Expr::Exp(a) | Expr::Log(a) | Expr::Neg(a) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Named(_) | Expr::Variable(_) => 1,
            Expr::Sum(xs) | Expr::Product(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Expr::Power(b, e) => 1 + b.size() + e.size(),
            Expr::Exp(a) | Expr::Log(a) | Expr::Neg(a) => 1 + a.size(),
        }
    }
}

/// Canonical form of `e`. Total and idempotent.
pub fn normalize(e: &Expr) -> Expr {
    canon::render(&canon::normalize_poly(&canon::to_poly(e)))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::to_text(self))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(q: Rational) -> Self {
        Expr::Constant(q)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        let mut terms = match self {
            Expr::Sum(xs) => xs,
            other => vec![other],
        };
        match rhs {
            Expr::Sum(xs) => terms.extend(xs),
            other => terms.push(other),
        }
        Expr::Sum(terms)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut factors = match self {
            Expr::Product(xs) => xs,
            other => vec![other],
        };
        match rhs {
            Expr::Product(xs) => factors.extend(xs),
            other => factors.push(other),
        }
        Expr::Product(factors)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Expr) -> Expr {
        self * rhs.recip()
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
