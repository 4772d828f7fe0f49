use std::collections::HashMap;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::{Expr, Rational};

pub type Bindings = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound symbol `{0}`")]
    Unbound(String),
}

/// Value of an evaluation together with the bookkeeping the sampling
/// tolerance policy needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub value: f64,
    /// First-order bound on the accumulated rounding error, in units of
    /// machine epsilon. Large only where the tree cancels.
    pub scale: f64,
    /// Smallest magnitude of any base raised to a negative power.
    pub min_denominator: f64,
}

fn q_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Evaluates `e` in double precision.
pub fn eval(e: &Expr, bindings: &Bindings) -> Result<f64, EvalError> {
    eval_scaled(e, bindings).map(|s| s.value)
}

pub fn eval_scaled(e: &Expr, bindings: &Bindings) -> Result<Scaled, EvalError> {
    let mut min_denominator = f64::INFINITY;
    let (value, scale) = walk(e, bindings, &mut min_denominator)?;
    Ok(Scaled {
        value,
        scale,
        min_denominator,
    })
}

fn finite(v: f64, what: &str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("non-finite value in {what}")))
    }
}

/// `(value, error bound)`; every operation adds one rounding of its result.
fn walk(e: &Expr, b: &Bindings, min_den: &mut f64) -> Result<(f64, f64), EvalError> {
    let (v, err) = match e {
        Expr::Constant(q) => (q_to_f64(q), 0.0),
        Expr::Named(n) => match b.get(n) {
            Some(v) => (*v, 0.0),
            None if n == "e" => (std::f64::consts::E, 0.0),
            None => return Err(EvalError::Unbound(n.clone())),
        },
        Expr::Variable(n) => (*b.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?, 0.0),
        Expr::Sum(xs) => {
            let (mut acc, mut err) = (0.0, 0.0);
            for x in xs {
                let (v, e) = walk(x, b, min_den)?;
                acc += v;
                err += e;
            }
            (acc, err)
        }
        Expr::Product(xs) => {
            let parts = xs.iter().map(|x| walk(x, b, min_den)).collect::<Result<Vec<_>, _>>()?;
            let acc: f64 = parts.iter().map(|p| p.0).product();
            // d(prod) = sum_i err_i * prod_{j != i} |v_j|
            let err = (0..parts.len())
                .map(|i| {
                    let others: f64 = parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.0.abs()).product();
                    parts[i].1 * others
                })
                .sum();
            (acc, err)
        }
        Expr::Neg(a) => {
            let (v, e) = walk(a, b, min_den)?;
            (-v, e)
        }
        Expr::Exp(a) => {
            let (v, e) = walk(a, b, min_den)?;
            let r = v.exp();
            (r, r * e)
        }
        Expr::Log(a) => {
            let (v, e) = walk(a, b, min_den)?;
            if v <= 0.0 {
                return Err(EvalError::Domain(format!("log of non-positive value {v}")));
            }
            *min_den = min_den.min(v);
            (v.ln(), e / v)
        }
        Expr::Power(base, ex) => {
            let (bv, be) = walk(base, b, min_den)?;
            match ex.as_ref() {
                Expr::Constant(q) => {
                    let r = pow_rational(bv, q, min_den)?;
                    let e = if bv == 0.0 { be } else { (q_to_f64(q) * r / bv).abs() * be };
                    (r, e)
                }
                other => {
                    let (ev, ee) = walk(other, b, min_den)?;
                    if bv <= 0.0 {
                        return Err(EvalError::Domain(format!(
                            "non-positive base {bv} with symbolic exponent"
                        )));
                    }
                    let r = bv.powf(ev);
                    (r, r.abs() * ((ev / bv).abs() * be + bv.ln().abs() * ee))
                }
            }
        }
    };
    let v = finite(v, "evaluation")?;
    Ok((v, err + v.abs()))
}

fn pow_rational(base: f64, q: &Rational, min_den: &mut f64) -> Result<f64, EvalError> {
    if q.is_negative() {
        if base == 0.0 {
            return Err(EvalError::Domain("division by zero".into()));
        }
        *min_den = min_den.min(base.abs());
    }
    if q.is_integer() {
        let k = q.to_integer().to_i32().ok_or_else(|| EvalError::Domain("exponent overflow".into()))?;
        return Ok(base.powi(k));
    }
    let qf = q_to_f64(q);
    if base >= 0.0 {
        return Ok(base.powf(qf));
    }
    let den_odd = (q.denom() % 2u32) != Zero::zero();
    if den_odd {
        let mag = (-base).powf(qf);
        let num_odd = (q.numer() % 2u32) != Zero::zero();
        Ok(if num_odd { -mag } else { mag })
    } else {
        Err(EvalError::Domain(format!("even root of negative value {base}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn at(s: &str, x: f64) -> Result<f64, EvalError> {
        let mut b = Bindings::new();
        b.insert("x".into(), x);
        eval(&parse(s, "x").unwrap(), &b)
    }

    #[test]
    fn evaluates_basic_forms() {
        assert_eq!(at("x^2+1", 2.0).unwrap(), 5.0);
        assert_eq!(at("exp(0)", 0.0).unwrap(), 1.0);
        assert!((at("(-8)^(1/3)", 0.0).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(at("log(x)", -1.0), Err(EvalError::Domain(_))));
        assert!(matches!(at("1/x", 0.0), Err(EvalError::Domain(_))));
        assert!(matches!(at("x^(1/2)", -1.0), Err(EvalError::Domain(_))));
        let e = parse("x + 1", "x").unwrap();
        assert_eq!(eval(&e, &Bindings::new()), Err(EvalError::Unbound("x".into())));
    }

    #[test]
    fn tracks_denominators() {
        let mut b = Bindings::new();
        b.insert("x".into(), 0.5);
        let s = eval_scaled(&parse("1/x + x^3", "x").unwrap(), &b).unwrap();
        assert_eq!(s.min_denominator, 0.5);
        assert_eq!(s.value, 2.125);
        // a handful of roundings of magnitude about 2, no cancellation
        assert!(s.scale > 2.125 && s.scale < 20.0, "{}", s.scale);
        let c = eval_scaled(&parse("(x+1)^2 - x^2 - 2*x - 1", "x").unwrap(), &b).unwrap();
        assert!(c.value.abs() < 1e-15 && c.scale > 4.0);
    }
}
