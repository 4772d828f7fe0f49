//! Differentiation, table-driven antiderivatives and substitution.

use num_traits::{One, Zero};
use thiserror::Error;

use super::canon::{self, normalize_poly, pow, to_poly, Atom, Mono, Poly};
use super::{normalize, Expr, Rational, EXPANSION_CAP};

/// The rule base has no entry for this integrand.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no antiderivative rule applies to `{0}`")]
pub struct CannotIntegrate(pub String);

const U_VAR: &str = "%u";

fn diff_atom(a: &Atom, var: &str) -> Poly {
    match a {
        Atom::Var(v) if v == var => Poly::one(),
        Atom::Var(_) | Atom::Named(_) | Atom::Root(_) => Poly::zero(),
        Atom::Log(u) => {
            let du = diff_poly(u, var);
            if du.is_zero() {
                du
            } else {
                du.mul(&pow(u, &-Rational::one()))
            }
        }
        Atom::Base(b) => diff_poly(b, var),
    }
}

fn diff_mono(m: &Mono, var: &str) -> Poly {
    let mut out = Poly::zero();
    for (a, e) in &m.factors {
        let da = diff_atom(a, var);
        if da.is_zero() {
            continue;
        }
        let mut rest = m.clone();
        let reduced = e - Rational::one();
        if reduced.is_zero() {
            rest.factors.remove(a);
        } else {
            rest.factors.insert(a.clone(), reduced);
        }
        out = out.add(&da.mul_mono(e, &rest));
    }
    if let Some(arg) = &m.exp {
        let darg = diff_poly(arg, var);
        if !darg.is_zero() {
            out = out.add(&darg.mul_mono(&Rational::one(), m));
        }
    }
    out
}

pub(crate) fn diff_poly(p: &Poly, var: &str) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out = out.add(&diff_mono(m, var).scale(c));
    }
    out
}

/// Derivative of `e` with respect to `var`, normalized.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    canon::render(&normalize_poly(&diff_poly(&to_poly(e), var)))
}

/// Replaces every occurrence of the variable `var` by `replacement` and
/// normalizes the result.
pub fn substitute(e: &Expr, var: &str, replacement: &Expr) -> Expr {
    normalize(&replace(e, var, replacement))
}

fn replace(e: &Expr, var: &str, r: &Expr) -> Expr {
    match e {
        Expr::Variable(v) if v == var => r.clone(),
        Expr::Constant(_) | Expr::Named(_) | Expr::Variable(_) => e.clone(),
        Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| replace(x, var, r)).collect()),
        Expr::Product(xs) => Expr::Product(xs.iter().map(|x| replace(x, var, r)).collect()),
        Expr::Power(b, p) => Expr::Power(Box::new(replace(b, var, r)), Box::new(replace(p, var, r))),
        Expr::Exp(a) => Expr::Exp(Box::new(replace(a, var, r))),
        Expr::Log(a) => Expr::Log(Box::new(replace(a, var, r))),
        Expr::Neg(a) => Expr::Neg(Box::new(replace(a, var, r))),
    }
}

/// `p = a + b*var` with `a`, `b` free of `var` and `b != 0`.
fn linear_parts(p: &Poly, var: &str) -> Option<(Poly, Poly)> {
    let x = Atom::Var(var.to_string());
    let mut a = Poly::zero();
    let mut b = Poly::zero();
    for (m, c) in &p.terms {
        if !m.depends_on(var) {
            a.add_term(c.clone(), m.clone());
            continue;
        }
        if m.factors.get(&x) != Some(&Rational::one()) {
            return None;
        }
        let mut rest = m.clone();
        rest.factors.remove(&x);
        if rest.depends_on(var) {
            return None;
        }
        b.add_term(c.clone(), rest);
    }
    (!b.is_zero()).then_some((a, b))
}

fn recip(p: &Poly) -> Poly {
    pow(p, &-Rational::one())
}

/// `∫ base^r d(var)` for `base = a + b*var`.
fn integrate_linear_power(base: &Poly, b: &Poly, r: &Rational) -> Poly {
    if *r == -Rational::one() {
        canon::log_poly(base).mul(&recip(b))
    } else {
        let r1 = r + Rational::one();
        pow(base, &r1).mul(&recip(b)).scale(&r1.recip())
    }
}

fn integrate_term(c: &Rational, m: &Mono, var: &str) -> Option<Poly> {
    let mut constant = Mono::one();
    let mut dep: Vec<(Atom, Rational)> = Vec::new();
    for (a, e) in &m.factors {
        if a.depends_on(var) {
            dep.push((a.clone(), e.clone()));
        } else {
            constant.factors.insert(a.clone(), e.clone());
        }
    }
    let mut dep_exp = None;
    match &m.exp {
        Some(arg) if arg.depends_on(var) => dep_exp = Some(arg.clone()),
        Some(arg) => constant.exp = Some(arg.clone()),
        None => {}
    }
    let outer = Poly::from_mono(c.clone(), constant);
    let x = Atom::Var(var.to_string());

    let inner = match (dep.as_slice(), dep_exp) {
        ([], None) => Poly::var(var),
        ([], Some(arg)) => {
            let (_, k) = linear_parts(&arg, var)?;
            Poly::exp_of(arg).mul(&recip(&k))
        }
        ([(a, r)], None) if *a == x => {
            if *r == -Rational::one() {
                canon::log_poly(&Poly::var(var))
            } else {
                let r1 = r + Rational::one();
                Poly::atom_pow(x, r1.clone()).scale(&r1.recip())
            }
        }
        ([(Atom::Base(base), r)], None) => {
            let (_, b) = linear_parts(base, var)?;
            integrate_linear_power(base, &b, r)
        }
        ([(a0, e0), (a1, e1)], None) => {
            // x^k * (a + b x)^r with k a small positive integer: u = a + b x
            let (k, base, r) = match (a0, a1) {
                (ax, Atom::Base(base)) if *ax == x => (e0, base, e1),
                (Atom::Base(base), ax) if *ax == x => (e1, base, e0),
                _ => return None,
            };
            if !k.is_integer() || *k <= Rational::zero() || *k > Rational::from_integer(EXPANSION_CAP.into()) {
                return None;
            }
            let (a, b) = linear_parts(base, var)?;
            let u = Poly::var(U_VAR);
            let binv = recip(&b);
            let x_of_u = u.sub(&a).mul(&binv);
            let integrand = pow(&x_of_u, k)
                .mul(&Poly::atom_pow(Atom::Var(U_VAR.into()), r.clone()))
                .mul(&binv);
            let in_u = antiderivative_poly(&normalize_poly(&integrand), U_VAR)?;
            let back = replace(&canon::render(&in_u), U_VAR, &canon::render(base));
            to_poly(&back)
        }
        _ => return None,
    };
    Some(outer.mul(&inner))
}

fn antiderivative_poly(p: &Poly, var: &str) -> Option<Poly> {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out = out.add(&integrate_term(c, m, var)?);
    }
    Some(normalize_poly(&out))
}

/// Antiderivative with the integration constant fixed to zero.
///
/// Covers linear combinations of `x^r`, `(a + b x)^r`, `exp(k x + c)` and
/// `x^n (a + b x)^r` for positive integer `n`. Anything else is
/// [`CannotIntegrate`].
pub fn antiderivative(e: &Expr, var: &str) -> Result<Expr, CannotIntegrate> {
    // term by term before combining over a common denominator, which would
    // hide the rule-base shapes
    let raw = to_poly(e);
    antiderivative_poly(&raw, var)
        .or_else(|| antiderivative_poly(&normalize_poly(&raw), var))
        .map(|r| canon::render(&r))
        .ok_or_else(|| CannotIntegrate(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with;

    fn p(s: &str) -> Expr {
        parse_with(s, &["x"], &["k"]).unwrap()
    }

    fn n(s: &str) -> Expr {
        normalize(&p(s))
    }

    #[test]
    fn derivative_rules() {
        assert_eq!(differentiate(&p("x^2"), "x"), n("2*x"));
        assert_eq!(differentiate(&p("exp(k*x)"), "x"), n("k*exp(k*x)"));
        assert_eq!(differentiate(&p("log(x)"), "x"), n("x^(-1)"));
        assert_eq!(differentiate(&p("(1+2*x)^(1/2)"), "x"), n("(1+2*x)^(-1/2)"));
        assert_eq!(differentiate(&p("k"), "x"), Expr::zero());
    }

    #[test]
    fn antiderivative_rules() {
        assert_eq!(antiderivative(&p("1"), "x").unwrap(), n("x"));
        assert_eq!(antiderivative(&p("x^(-1)"), "x").unwrap(), n("log(x)"));
        assert_eq!(antiderivative(&p("3*x^2"), "x").unwrap(), n("x^3"));
        assert_eq!(antiderivative(&p("exp(2*x+1)"), "x").unwrap(), n("exp(2*x+1)/2"));
        assert_eq!(antiderivative(&p("1/(1+2*x)"), "x").unwrap(), n("log(x+1/2)/2"));
        assert!(antiderivative(&p("exp(x^2)"), "x").is_err());
        assert!(antiderivative(&p("log(x)"), "x").is_err());
    }

    #[test]
    fn u_substitution_round_trip() {
        for s in ["x*(1+x)^(1/2)", "x^2/(3+2*x)", "x*(1+x)^-2", "x^3*(2-x)^(5/3)"] {
            let e = p(s);
            let f = antiderivative(&e, "x").unwrap();
            assert_eq!(differentiate(&f, "x"), normalize(&e), "{s}: {f}");
        }
    }

    #[test]
    fn substitution() {
        assert_eq!(substitute(&p("x^2"), "x", &p("x+1")), n("(x+1)^2"));
        assert_eq!(substitute(&p("exp(x)"), "x", &Expr::zero()), Expr::one());
        assert_eq!(substitute(&p("k*x"), "x", &p("x")), n("k*x"));
    }
}
