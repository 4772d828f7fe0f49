//! Point-symmetry generators `τ ∂t + η ∂y` of `y'' + F(y) = 0` per case.

use std::fmt;

use thiserror::Error;

use crate::expr::{eval, normalize, substitute, Bindings, Expr};
use crate::oracle::residual::{ResidualReport, T, Y};
use crate::transform::TransformData;

use super::{CaseTag, Param};

/// `cos(ωt)` and `sin(ωt)` as formal symbols, for time dependence the
/// expression grammar cannot spell.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub omega: Expr,
}

impl Harmonic {
    pub fn cos_symbol(&self) -> &'static str {
        "%cos"
    }

    pub fn sin_symbol(&self) -> &'static str {
        "%sin"
    }

    pub fn omega_value(&self) -> f64 {
        eval(&self.omega, &Bindings::new()).unwrap_or(f64::NAN)
    }

    fn spell(&self, text: String) -> String {
        let w = if self.omega.is_one() {
            "t".to_string()
        } else {
            format!("{}*t", self.omega)
        };
        text.replace("%cos", &format!("cos({w})")).replace("%sin", &format!("sin({w})"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    /// Coefficients in `(t, y)`.
    pub tau: Expr,
    pub eta: Expr,
    pub harmonic: Option<Harmonic>,
    /// Coefficients in `(t, x)`, when `Φ` is symbolic.
    pub tau_x: Option<Expr>,
    pub eta_x: Option<Expr>,
    pub residual: Option<ResidualReport>,
}

impl SymmetryGenerator {
    pub fn new(tau: Expr, eta: Expr) -> Self {
        SymmetryGenerator {
            tau: normalize(&tau),
            eta: normalize(&eta),
            harmonic: None,
            tau_x: None,
            eta_x: None,
            residual: None,
        }
    }

    fn harmonic(tau: Expr, eta: Expr, omega: Expr) -> Self {
        SymmetryGenerator {
            harmonic: Some(Harmonic { omega }),
            ..SymmetryGenerator::new(tau, eta)
        }
    }

    /// Whether the coefficients are plain grammar expressions.
    pub fn is_printable(&self) -> bool {
        self.harmonic.is_none()
    }

    pub fn is_time_translation(&self) -> bool {
        self.tau.is_one() && self.eta.is_zero()
    }

    pub fn certified(&self) -> bool {
        self.residual.as_ref().is_some_and(|r| r.pass)
    }

    fn spell(&self, e: &Expr) -> String {
        match &self.harmonic {
            Some(h) => h.spell(e.to_string()),
            None => e.to_string(),
        }
    }

    pub fn tau_text(&self) -> String {
        self.spell(&self.tau)
    }

    pub fn eta_text(&self) -> String {
        self.spell(&self.eta)
    }

    pub fn tau_x_text(&self) -> Option<String> {
        self.tau_x.as_ref().map(|e| self.spell(e))
    }

    pub fn eta_x_text(&self) -> Option<String> {
        self.eta_x.as_ref().map(|e| self.spell(e))
    }
}

fn field(tau: &str, d: char, eta: &str) -> String {
    match (tau, eta) {
        ("0", "0") => "0".to_string(),
        (_, "0") => format!("({tau})∂t"),
        ("0", _) => format!("({eta})∂{d}"),
        _ => format!("({tau})∂t + ({eta})∂{d}"),
    }
}

impl fmt::Display for SymmetryGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&field(&self.tau_text(), 'y', &self.eta_text()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no symbolic transformation to pull the generator back through")]
pub struct PullbackUnavailable;

/// `τ_x = τ(t, Φ(x))`, `η_x = η(t, Φ(x)) / M(x)`.
pub fn pullback_generator(gen: &SymmetryGenerator, data: &TransformData) -> Result<SymmetryGenerator, PullbackUnavailable> {
    let (Some(m), Some(phi)) = (&data.m, &data.phi) else {
        return Err(PullbackUnavailable);
    };
    let mut out = gen.clone();
    out.tau_x = Some(substitute(&gen.tau, Y, phi));
    out.eta_x = Some(normalize(&(substitute(&gen.eta, Y, phi) / m.clone())));
    Ok(out)
}

/// `(t, x)` form of a pulled-back generator.
pub fn pulled_back_text(gen: &SymmetryGenerator) -> Option<String> {
    Some(field(&gen.tau_x_text()?, 'x', &gen.eta_x_text()?))
}

fn t() -> Expr {
    Expr::var(T)
}

fn y() -> Expr {
    Expr::var(Y)
}

fn sqrt(p: &Param, scale: i64) -> Expr {
    match &p.exact {
        Some(e) => normalize(&(Expr::int(scale) * e.clone()).powq(crate::expr::Rational::new(1.into(), 2.into()))),
        None => Param::approx((scale as f64 * p.value).sqrt()).expr(),
    }
}

/// The sl(2,R) triple `a ∂t + a'/2 (y + c) ∂y` with `a''' + 4 α a' = 0`.
fn sl2(alpha: &Param, shift: &Param) -> Vec<SymmetryGenerator> {
    let u = y() + shift.expr();
    let half = Expr::rational(1, 2);
    let mut out = vec![SymmetryGenerator::new(Expr::one(), Expr::zero())];
    if alpha.is_zero() {
        out.push(SymmetryGenerator::new(Expr::int(2) * t(), u.clone()));
        out.push(SymmetryGenerator::new(t().powi(2), t() * u));
    } else if alpha.value > 0.0 {
        // a = cos(ωt), sin(ωt) with ω = 2 sqrt(α)
        let w = sqrt(alpha, 4);
        let h = Harmonic { omega: w.clone() };
        let (c, s) = (Expr::var(h.cos_symbol()), Expr::var(h.sin_symbol()));
        out.push(SymmetryGenerator::harmonic(
            c.clone(),
            -(half.clone() * w.clone() * s.clone() * u.clone()),
            w.clone(),
        ));
        out.push(SymmetryGenerator::harmonic(s, half * w.clone() * c * u, w));
    } else {
        let k = sqrt(&alpha.neg(), 4);
        for sign in [1i64, -1] {
            let a = (Expr::int(sign) * k.clone() * t()).exp();
            out.push(SymmetryGenerator::new(
                a.clone(),
                Expr::int(sign) * half.clone() * k.clone() * a * u.clone(),
            ));
        }
    }
    out
}

/// Solution translations `u(t) ∂y` with `u'' + a u = 0`.
fn translations(slope: &Param) -> Vec<SymmetryGenerator> {
    let mut out = vec![SymmetryGenerator::new(Expr::one(), Expr::zero())];
    if slope.is_zero() {
        out.push(SymmetryGenerator::new(Expr::zero(), Expr::one()));
        out.push(SymmetryGenerator::new(Expr::zero(), t()));
    } else if slope.value > 0.0 {
        let w = sqrt(slope, 1);
        let h = Harmonic { omega: w.clone() };
        out.push(SymmetryGenerator::harmonic(Expr::zero(), Expr::var(h.cos_symbol()), w.clone()));
        out.push(SymmetryGenerator::harmonic(Expr::zero(), Expr::var(h.sin_symbol()), w));
    } else {
        let k = sqrt(&slope.neg(), 1);
        for sign in [1i64, -1] {
            out.push(SymmetryGenerator::new(Expr::zero(), (Expr::int(sign) * k.clone() * t()).exp()));
        }
    }
    out
}

/// Generators of a classified case in `(t, y)`. Complete except for the
/// linear case, where the eight-dimensional algebra is represented by time
/// translation and the two solution translations.
pub fn generators_for(case: &CaseTag) -> Vec<SymmetryGenerator> {
    let dt = SymmetryGenerator::new(Expr::one(), Expr::zero());
    match case {
        CaseTag::Generic => vec![dt],
        CaseTag::PowerLaw { n, alpha, beta } => {
            // t ∂t + 2/(1-n) (y + α/β) ∂y
            let k = Expr::int(2) / (Expr::one() - n.expr());
            let eta = k * (y() + alpha.expr() / beta.expr());
            vec![dt, SymmetryGenerator::new(t(), eta)]
        }
        CaseTag::Exponential { gamma } => {
            vec![dt, SymmetryGenerator::new(t(), Expr::int(-2) / gamma.expr())]
        }
        CaseTag::InverseCube { shift, .. } => sl2(&Param::zero(), shift),
        CaseTag::ErmakovPinney { alpha, shift, .. } => sl2(alpha, shift),
        CaseTag::Linear { slope, .. } => translations(slope),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_with, Interval};
    use crate::transform::LienardInput;

    fn ty(s: &str) -> Expr {
        normalize(&parse_with(s, &[T, Y], &[]).unwrap())
    }

    #[test]
    fn catalogue_entries() {
        let g = generators_for(&CaseTag::Generic);
        assert_eq!(g.len(), 1);
        assert!(g[0].is_time_translation());

        let g = generators_for(&CaseTag::Exponential { gamma: Param::int(2) });
        assert_eq!((g[1].tau.clone(), g[1].eta.clone()), (ty("t"), ty("-1")));

        let g = generators_for(&CaseTag::PowerLaw {
            n: Param::int(3),
            alpha: Param::int(0),
            beta: Param::int(1),
        });
        assert_eq!((g[1].tau.clone(), g[1].eta.clone()), (ty("t"), ty("-y")));

        let g = generators_for(&CaseTag::InverseCube {
            shift: Param::int(1),
            strength: Param::int(1),
        });
        assert_eq!(g.len(), 3);
        assert_eq!(g[2].eta, ty("t*y + t"));
    }

    #[test]
    fn harmonic_generators_print_with_trig_names() {
        let g = generators_for(&CaseTag::ErmakovPinney {
            alpha: Param::int(1),
            beta: Param::int(1),
            shift: Param::int(0),
        });
        assert_eq!(g.len(), 3);
        assert!(!g[1].is_printable());
        assert_eq!(g[1].tau_text(), "cos(2*t)");
        assert_eq!(g[1].eta_text(), "-sin(2*t)*y");
        assert_eq!(g[2].eta_text(), "cos(2*t)*y");
    }

    #[test]
    fn pullbacks() {
        let input = LienardInput::parse("1/x", "x/2", Interval::default()).unwrap();
        let data = TransformData::new(&input);
        let dt = pullback_generator(&SymmetryGenerator::new(Expr::one(), Expr::zero()), &data).unwrap();
        assert_eq!((dt.tau_x.unwrap(), dt.eta_x.unwrap()), (Expr::one(), Expr::zero()));
        let g = pullback_generator(&SymmetryGenerator::new(t(), -y()), &data).unwrap();
        assert_eq!(g.eta_x.clone().unwrap(), normalize(&parse_with("-x/2", &["x"], &[]).unwrap()));
        assert_eq!(pulled_back_text(&g).unwrap(), "(t)∂t + (-1/2*x)∂x");

        let input = LienardInput::parse("0", "x^3", Interval::default()).unwrap();
        let data = TransformData::new(&input);
        let g = pullback_generator(&SymmetryGenerator::new(t(), -y()), &data).unwrap();
        assert_eq!(g.eta_x.clone().unwrap(), normalize(&parse_with("-x", &["x"], &[]).unwrap()));

        let input = LienardInput::parse("x", "x", Interval::default()).unwrap();
        let data = TransformData::new(&input);
        assert_eq!(pullback_generator(&g, &data), Err(PullbackUnavailable));
    }
}
