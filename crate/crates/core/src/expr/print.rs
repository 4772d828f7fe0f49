//! Text output in the same grammar the parser accepts, with minimal
//! parentheses.

use num_traits::{One, Signed, Zero};

use super::{Expr, Rational};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_ATOM: u8 = 4;

pub(super) fn to_text(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, 0, &mut out);
    out
}

fn rational_text(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn exponent_text(q: &Rational) -> String {
    let mag = q.abs();
    let sign = if q.is_negative() { "-" } else { "" };
    if mag.is_integer() {
        format!("{sign}{}", mag.numer())
    } else {
        format!("{sign}({}/{})", mag.numer(), mag.denom())
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Sum(xs) if xs.len() > 1 => PREC_SUM,
        Expr::Sum(_) => PREC_ATOM,
        Expr::Product(xs) if xs.len() > 1 => PREC_PRODUCT,
        Expr::Product(_) => PREC_ATOM,
        Expr::Neg(_) => PREC_SUM,
        Expr::Constant(q) if q.is_negative() => PREC_SUM,
        Expr::Constant(q) if !q.is_integer() => PREC_PRODUCT,
        Expr::Power(_, ex) => match ex.as_ref() {
            Expr::Constant(q) if q.is_negative() => PREC_PRODUCT,
            Expr::Constant(_) => PREC_ATOM - 1,
            _ => PREC_ATOM,
        },
        _ => PREC_ATOM,
    }
}

fn write_wrapped(e: &Expr, min_prec: u8, out: &mut String) {
    if precedence(e) < min_prec {
        out.push('(');
        write_expr(e, 0, out);
        out.push(')');
    } else {
        write_expr(e, min_prec, out);
    }
}

/// Splits a sum term into (is_negative, magnitude) for `a - b` printing.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Neg(a) => Some((**a).clone()),
        Expr::Constant(q) if q.is_negative() => Some(Expr::Constant(-q.clone())),
        Expr::Product(xs) => match xs.first() {
            Some(Expr::Constant(q)) if q.is_negative() => {
                let mut rest = xs.clone();
                let mag = -q.clone();
                if mag.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::Constant(mag);
                }
                Some(match rest.len() {
                    0 => Expr::one(),
                    1 => rest.pop().unwrap_or_else(Expr::one),
                    _ => Expr::Product(rest),
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_expr(e: &Expr, _ctx: u8, out: &mut String) {
    match e {
        Expr::Constant(q) => out.push_str(&rational_text(q)),
        Expr::Named(n) | Expr::Variable(n) => out.push_str(n),
        Expr::Sum(xs) => {
            if xs.is_empty() {
                out.push('0');
            }
            for (i, t) in xs.iter().enumerate() {
                if i == 0 {
                    write_wrapped(t, PREC_SUM, out);
                    continue;
                }
                match negated(t) {
                    Some(mag) => {
                        out.push_str(" - ");
                        write_wrapped(&mag, PREC_PRODUCT, out);
                    }
                    None => {
                        out.push_str(" + ");
                        write_wrapped(t, PREC_SUM, out);
                    }
                }
            }
        }
        Expr::Product(xs) => write_product(xs, out),
        Expr::Power(_, ex) if matches!(ex.as_ref(), Expr::Constant(q) if q.is_negative()) => {
            write_product(std::slice::from_ref(e), out)
        }
        Expr::Power(b, ex) => match ex.as_ref() {
            Expr::Constant(q) => {
                write_base(b, out);
                out.push('^');
                out.push_str(&exponent_text(q));
            }
            other => {
                let rewritten = Expr::Exp(Box::new(Expr::Product(vec![
                    other.clone(),
                    Expr::Log(b.clone()),
                ])));
                write_expr(&rewritten, 0, out);
            }
        },
        Expr::Exp(a) => {
            out.push_str("exp(");
            write_expr(a, 0, out);
            out.push(')');
        }
        Expr::Log(a) => {
            out.push_str("log(");
            write_expr(a, 0, out);
            out.push(')');
        }
        Expr::Neg(a) => {
            out.push('-');
            write_wrapped(a, PREC_ATOM - 1, out);
        }
    }
}

fn write_base(b: &Expr, out: &mut String) {
    let bare = match b {
        Expr::Constant(q) => q.is_integer() && !q.is_negative(),
        Expr::Named(_) | Expr::Variable(_) | Expr::Exp(_) | Expr::Log(_) => true,
        Expr::Sum(xs) | Expr::Product(xs) => xs.len() == 1 && matches!(xs[0], Expr::Variable(_)),
        _ => false,
    };
    if bare {
        write_expr(b, PREC_ATOM, out);
    } else {
        out.push('(');
        write_expr(b, 0, out);
        out.push(')');
    }
}

fn write_product(xs: &[Expr], out: &mut String) {
    if xs.is_empty() {
        out.push('1');
        return;
    }
    let mut numer: Vec<&Expr> = Vec::new();
    let mut denom: Vec<Expr> = Vec::new();
    for x in xs {
        match x {
            Expr::Power(b, ex) => match ex.as_ref() {
                Expr::Constant(q) if q.is_negative() => {
                    let mag = -q.clone();
                    if mag.is_one() {
                        denom.push((**b).clone());
                    } else {
                        denom.push(Expr::Power(b.clone(), Box::new(Expr::Constant(mag))));
                    }
                }
                _ => numer.push(x),
            },
            _ => numer.push(x),
        }
    }
    if numer.is_empty() {
        out.push('1');
    }
    let mut sep = "";
    for (i, f) in numer.iter().enumerate() {
        out.push_str(sep);
        sep = "*";
        if i == 0 {
            match f {
                Expr::Constant(q) if -q == Rational::one() && numer.len() > 1 => {
                    out.push('-');
                    sep = "";
                }
                Expr::Constant(q) if !q.is_zero() => out.push_str(&rational_text(q)),
                _ => write_wrapped(f, PREC_ATOM - 1, out),
            }
        } else {
            write_wrapped(f, PREC_ATOM - 1, out);
        }
    }
    for d in &denom {
        out.push('/');
        write_wrapped(d, PREC_ATOM - 1, out);
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{normalize, parse, parse_with, Expr};

    fn round(s: &str) -> String {
        normalize(&parse(s, "x").unwrap()).to_string()
    }

    #[test]
    fn prints_minimal_parentheses() {
        assert_eq!(round("x^2 + 1"), "x^2 + 1");
        assert_eq!(round("exp(2*x)/x"), "exp(2*x)/x");
        assert_eq!(round("x - 1"), "x - 1");
        assert_eq!(round("x^(1/2)"), "x^(1/2)");
        assert_eq!(round("x^(-1/2)"), "1/x^(1/2)");
        assert_eq!(round("3/2*x"), "3/2*x");
    }

    #[test]
    fn printed_text_reparses() {
        for s in [
            "(x+1)^(3/2) - 2*x",
            "-x^2 + 4*(x+1)^-3",
            "exp(-x/3)*x^(2/3) - log(x+2)",
            "(-2)^(1/2) + 7^(1/3)*x",
            "1/(x^2+2) - 5/3",
        ] {
            let e = normalize(&parse(s, "x").unwrap());
            let back = parse(&e.to_string(), "x").unwrap();
            assert_eq!(normalize(&back), e, "{s} -> {e}");
        }
    }

    #[test]
    fn two_symbol_generators_print() {
        let e = parse_with("t*(y+1) - 2/3", &["t", "y"], &[]).unwrap();
        let n = normalize(&e);
        let back = parse_with(&n.to_string(), &["t", "y"], &[]).unwrap();
        assert_eq!(normalize(&back), n);
        assert_eq!(Expr::rational(-1, 2).to_string(), "-1/2");
    }
}
