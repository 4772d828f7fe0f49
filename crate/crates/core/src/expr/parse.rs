//! Recursive-descent parser.
//!
//! ```text
//! expr     := term (("+"|"-") term)*
//! term     := factor (("*"|"/") factor)*
//! factor   := "-"? atom ("^" exponent)?
//! atom     := NUMBER | IDENT | "(" expr ")" | ("exp"|"log") "(" expr ")"
//! exponent := "-"? (NUMBER | "(" "-"? NUMBER ("/" NUMBER)? ")")
//! ```
//!
//! `-a^b` reads as `-(a^b)`. The identifier `e` is Euler's number unless it is
//! declared as a variable.

use num_bigint::BigInt;
use num_traits::{Num, Zero};
use thiserror::Error;

use super::{Expr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown symbol `{name}` at position {position}")]
    UnknownSymbol { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(q) => format!("number `{q}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let int_part = &text[start..i];
            let mut frac_part = "";
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                let fs = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                frac_part = &text[fs..i];
            }
            let digits = format!("{int_part}{frac_part}");
            let digits = if digits.is_empty() { "0".to_string() } else { digits };
            let numer = BigInt::from_str_radix(&digits, 10).map_err(|_| ParseError::Syntax {
                position: start,
                expected: vec!["number".into()],
                found: text[start..i].to_string(),
            })?;
            let denom = num_traits::pow::pow(BigInt::from(10), frac_part.len());
            out.push((Tok::Num(Rational::new(numer, denom)), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(ParseError::Syntax {
                position: i,
                expected: vec!["number".into(), "identifier".into(), "operator".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    constants: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(Expr::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.remove(0) } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    factors.push(self.factor()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    factors.push(self.factor()?.recip());
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 { factors.remove(0) } else { Expr::Product(factors) })
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negate = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let mut base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let q = self.exponent()?;
            base = base.powq(q);
        }
        Ok(if negate { Expr::Neg(Box::new(base)) } else { base })
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(q)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        let mut sign = false;
        if *self.peek() == Tok::Op('-') {
            self.bump();
            sign = true;
        }
        let q = match self.peek() {
            Tok::Num(_) => self.number()?,
            Tok::Op('(') => {
                self.bump();
                let mut inner_sign = false;
                if *self.peek() == Tok::Op('-') {
                    self.bump();
                    inner_sign = true;
                }
                let mut q = self.number()?;
                if *self.peek() == Tok::Op('/') {
                    self.bump();
                    let pos = self.offset();
                    let d = self.number()?;
                    if d.is_zero() {
                        return Err(ParseError::Syntax {
                            position: pos,
                            expected: vec!["nonzero denominator".into()],
                            found: "0".into(),
                        });
                    }
                    q /= d;
                }
                self.expect(')')?;
                if inner_sign {
                    -q
                } else {
                    q
                }
            }
            _ => return Err(self.error(&["number", "`(`"])),
        };
        Ok(if sign { -q } else { q })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.offset();
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(Expr::Constant(q))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "exp" || name == "log" {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(if name == "exp" { arg.exp() } else { arg.log() });
                }
                if self.vars.contains(&name.as_str()) {
                    Ok(Expr::Variable(name))
                } else if self.constants.contains(&name.as_str()) || name == "e" {
                    Ok(Expr::Named(name))
                } else {
                    Err(ParseError::UnknownSymbol { name, position: pos })
                }
            }
            _ => Err(self.error(&["number", "identifier", "`(`"])),
        }
    }
}

/// Parses `text` as an expression in the single variable `var`.
pub fn parse(text: &str, var: &str) -> Result<Expr, ParseError> {
    parse_with(text, &[var], &[])
}

/// Parses `text` allowing the listed variables and named constants.
pub fn parse_with(text: &str, vars: &[&str], constants: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        vars,
        constants,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_grammar_directly() {
        let e = parse("x^2 + 1", "x").unwrap();
        assert_eq!(e, Expr::Sum(vec![Expr::var("x").powi(2), Expr::int(1)]));
        let e = parse("exp(2*x)/x", "x").unwrap();
        assert_eq!(
            e,
            Expr::Product(vec![
                Expr::Product(vec![Expr::int(2), Expr::var("x")]).exp(),
                Expr::var("x").powi(-1),
            ])
        );
    }

    #[test]
    fn rejects_foreign_symbols() {
        assert_eq!(
            parse("x + t", "x"),
            Err(ParseError::UnknownSymbol {
                name: "t".into(),
                position: 4
            })
        );
        assert!(matches!(parse("x * y", "x"), Err(ParseError::UnknownSymbol { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("x + * 2", "x") {
            Err(ParseError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(x + 1", "x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x^y", "x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x # 1", "x"), Err(ParseError::Syntax { position: 2, .. })));
        assert!(matches!(parse("exp x", "x"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn exponents_and_decimals() {
        assert_eq!(parse("x^(-3)", "x").unwrap(), Expr::var("x").powi(-3));
        assert_eq!(parse("x^-3", "x").unwrap(), Expr::var("x").powi(-3));
        assert_eq!(parse("x^(1/2)", "x").unwrap(), Expr::var("x").powq(Rational::new(1.into(), 2.into())));
        assert_eq!(parse("0.25", "x").unwrap(), Expr::rational(1, 4));
        assert_eq!(parse("-x^2", "x").unwrap(), -(Expr::var("x").powi(2)));
    }

    #[test]
    fn named_constants() {
        let e = parse_with("k*x + e", &["x"], &["k"]).unwrap();
        assert_eq!(
            e,
            Expr::Sum(vec![
                Expr::Product(vec![Expr::named("k"), Expr::var("x")]),
                Expr::named("e")
            ])
        );
    }
}
