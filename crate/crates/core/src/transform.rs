//! The change of dependent variable `y = Φ(x)` with `Φ' = M = exp(∫f)`,
//! which turns `x'' + f(x) x'^2 + g(x) = 0` into `y'' + F(y) = 0` with
//! `F(Φ(x)) = M(x) g(x)`.
//!
//! `Φ` is never inverted. Quantities in `y` are carried as functions of `x`
//! and differentiated with `d/dy = M^-1 d/dx`. When `∫f` or `∫M` leaves the
//! antiderivative rule base, the missing function becomes a formal symbol
//! whose derivative is known and whose value comes from quadrature.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{
    antiderivative, differentiate, eval, is_constant_with, is_identically_zero_with, normalize, parse, Bindings,
    ConstValue, Decision, EvalError, Expr, Interval, ParseError, SamplingPolicy,
};
use crate::oracle::quadrature::{expr_integrand, quadrature_m, Cumulative, QuadratureM};

/// The independent variable of every input.
pub const VAR: &str = "x";
/// Stands for `M(x)` when `∫f` has no symbolic antiderivative.
pub const M_SYMBOL: &str = "%M";
/// Stands for `Φ(x)` when `∫M` has no symbolic antiderivative.
pub const PHI_SYMBOL: &str = "%Phi";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("f: {0}")]
    F(ParseError),
    #[error("g: {0}")]
    G(ParseError),
    #[error("{which} may only depend on `x`, found `{name}`")]
    ForeignVariable { which: &'static str, name: String },
}

/// `x'' + f(x) x'^2 + g(x) = 0` on a sampling domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LienardInput {
    pub f: Expr,
    pub g: Expr,
    pub domain: Interval,
}

impl LienardInput {
    pub fn new(f: Expr, g: Expr, domain: Interval) -> Result<Self, InputError> {
        for (which, e) in [("f", &f), ("g", &g)] {
            if let Some(name) = e.variables().into_iter().find(|v| v != VAR) {
                return Err(InputError::ForeignVariable { which, name });
            }
        }
        Ok(LienardInput { f, g, domain })
    }

    pub fn parse(f: &str, g: &str, domain: Interval) -> Result<Self, InputError> {
        let f = parse(f, VAR).map_err(InputError::F)?;
        let g = parse(g, VAR).map_err(InputError::G)?;
        LienardInput::new(f, g, domain)
    }
}

/// `M = exp(∫f)`, or `None` when `f` is outside the rule base.
pub fn integrating_factor(f: &Expr) -> Option<Expr> {
    antiderivative(&normalize(f), VAR).ok().map(|a| normalize(&a.exp()))
}

/// `Φ = ∫M`, or `None` when either integral is outside the rule base.
pub fn phi(f: &Expr) -> Option<Expr> {
    integrating_factor(f).and_then(|m| antiderivative(&m, VAR).ok())
}

/// `G = M g`, the force of the canonical equation as a function of `x`. With
/// no symbolic `M` the result carries [`M_SYMBOL`].
pub fn pullback_force(input: &LienardInput) -> Expr {
    let m = integrating_factor(&input.f).unwrap_or_else(|| Expr::var(M_SYMBOL));
    normalize(&(m * input.g.clone()))
}

/// Everything the classifier needs about the change of variable.
#[derive(Debug, Clone)]
pub struct TransformData {
    pub f: Expr,
    /// Symbolic `M`.
    pub m: Option<Expr>,
    /// Symbolic `Φ`.
    pub phi: Option<Expr>,
    /// `G = M g`.
    pub g: Expr,
    pub domain: Interval,
    numeric_m: Option<Arc<QuadratureM>>,
    numeric_phi: Option<Arc<Cumulative>>,
}

impl TransformData {
    pub fn new(input: &LienardInput) -> Self {
        Self::build(input, true)
    }

    /// `M` and `Φ` by quadrature only, even where the rule base applies.
    pub fn numeric(input: &LienardInput) -> Self {
        Self::build(input, false)
    }

    fn build(input: &LienardInput, symbolic: bool) -> Self {
        let f = normalize(&input.f);
        let m = integrating_factor(&f).filter(|_| symbolic);
        let phi = m.as_ref().and_then(|m| antiderivative(m, VAR).ok());
        let origin = input.domain.lo;
        let numeric_m = m.is_none().then(|| Arc::new(quadrature_m(&f, VAR, origin)));
        let numeric_phi = phi.is_none().then(|| {
            let integrand = match (&m, &numeric_m) {
                (Some(m), _) => expr_integrand(m, VAR),
                (None, Some(q)) => q.clone().into_integrand(),
                (None, None) => unreachable!("M is either symbolic or numeric"),
            };
            Arc::new(Cumulative::new(integrand, origin))
        });
        TransformData {
            g: normalize(&(m.clone().unwrap_or_else(|| Expr::var(M_SYMBOL)) * input.g.clone())),
            f,
            m,
            phi,
            domain: input.domain,
            numeric_m,
            numeric_phi,
        }
    }

    /// Both `M` and `Φ` are symbolic.
    pub fn is_symbolic(&self) -> bool {
        self.m.is_some() && self.phi.is_some()
    }

    /// `M` as an expression, formal when numeric.
    pub fn m_expr(&self) -> Expr {
        self.m.clone().unwrap_or_else(|| Expr::var(M_SYMBOL))
    }

    /// `Φ` as an expression, formal when numeric.
    pub fn phi_expr(&self) -> Expr {
        self.phi.clone().unwrap_or_else(|| Expr::var(PHI_SYMBOL))
    }

    /// `d/dx` that knows `d%M/dx = f %M` and `d%Phi/dx = M`.
    pub fn derivative(&self, e: &Expr) -> Expr {
        let mut parts = vec![differentiate(e, VAR)];
        if self.m.is_none() && e.depends_on(M_SYMBOL) {
            let dm = self.f.clone() * Expr::var(M_SYMBOL);
            parts.push(differentiate(e, M_SYMBOL) * dm);
        }
        if self.phi.is_none() && e.depends_on(PHI_SYMBOL) {
            parts.push(differentiate(e, PHI_SYMBOL) * self.m_expr());
        }
        if parts.len() == 1 {
            return parts.pop().unwrap_or_else(Expr::zero);
        }
        normalize(&Expr::Sum(parts))
    }

    /// `d/dy = M^-1 d/dx`.
    pub fn d_dy(&self, e: &Expr) -> Expr {
        normalize(&(self.derivative(e) / self.m_expr()))
    }

    pub fn m_at(&self, x: f64) -> Result<f64, EvalError> {
        match (&self.m, &self.numeric_m) {
            (Some(m), _) => eval(m, &point(x)),
            (None, Some(q)) => q.at(x).map_err(|e| EvalError::Domain(e.to_string())),
            (None, None) => unreachable!("M is either symbolic or numeric"),
        }
    }

    pub fn phi_at(&self, x: f64) -> Result<f64, EvalError> {
        match (&self.phi, &self.numeric_phi) {
            (Some(p), _) => eval(p, &point(x)),
            (None, Some(q)) => q.at(x).map_err(|e| EvalError::Domain(e.to_string())),
            (None, None) => unreachable!("Φ is either symbolic or numeric"),
        }
    }

    /// Binds `x` and the values of any formal symbols.
    pub fn bind(&self, x: f64, b: &mut Bindings) -> Result<(), EvalError> {
        b.insert(VAR.to_string(), x);
        if self.m.is_none() {
            b.insert(M_SYMBOL.to_string(), self.m_at(x)?);
        }
        if self.phi.is_none() {
            b.insert(PHI_SYMBOL.to_string(), self.phi_at(x)?);
        }
        Ok(())
    }

    pub fn eval_at(&self, e: &Expr, x: f64) -> Result<f64, EvalError> {
        let mut b = Bindings::new();
        self.bind(x, &mut b)?;
        eval(e, &b)
    }

    pub fn is_zero(&self, e: &Expr, policy: &SamplingPolicy) -> Decision {
        let bind = |x: f64, b: &mut Bindings| self.bind(x, b);
        is_identically_zero_with(e, VAR, &self.domain, policy, &bind)
    }

    pub fn is_constant(&self, e: &Expr, policy: &SamplingPolicy) -> (Decision, Option<ConstValue>) {
        let bind = |x: f64, b: &mut Bindings| self.bind(x, b);
        let derivative = |e: &Expr| self.derivative(e);
        is_constant_with(e, VAR, &self.domain, policy, &bind, &derivative)
    }

    /// Potential `V` with `V' = F`, as a function of `x`: `∫ M G dx`.
    pub fn potential(&self) -> Option<Expr> {
        let m = self.m.as_ref()?;
        antiderivative(&normalize(&(m.clone() * self.g.clone())), VAR).ok()
    }
}

fn point(x: f64) -> Bindings {
    let mut b = Bindings::new();
    b.insert(VAR.to_string(), x);
    b
}

/// `H'(Φ(x))` from `H(Φ(x))`.
pub fn d_dy(e: &Expr, data: &TransformData) -> Expr {
    data.d_dy(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("force or its derivative vanishes identically")]
pub struct DegenerateForce;

/// `K = F F'' / F'^2` along `y = Φ(x)`. Constant exactly for power-law and
/// exponential forces: `(n - 1) / n` for `(α + βy)^n` and `1` for `e^{γy}`.
pub fn invariant_k(data: &TransformData) -> Result<Expr, DegenerateForce> {
    let policy = SamplingPolicy::default();
    let f1 = data.d_dy(&data.g);
    if data.is_zero(&data.g, &policy).is_yes() || data.is_zero(&f1, &policy).is_yes() {
        return Err(DegenerateForce);
    }
    let f2 = data.d_dy(&f1);
    Ok(normalize(&(data.g.clone() * f2 / f1.powi(2))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_with, Rational};

    fn e(s: &str) -> Expr {
        parse(s, VAR).unwrap()
    }

    fn n(s: &str) -> Expr {
        normalize(&e(s))
    }

    fn data(f: &str, g: &str) -> TransformData {
        TransformData::new(&LienardInput::parse(f, g, Interval::default()).unwrap())
    }

    #[test]
    fn integrating_factors() {
        assert_eq!(integrating_factor(&e("0")), Some(Expr::one()));
        let m = integrating_factor(&e("1/x")).unwrap();
        assert_eq!(m, n("x"));
        assert_eq!(normalize(&(differentiate(&m, VAR) / m)), n("1/x"));
        let m = integrating_factor(&e("1")).unwrap();
        assert_eq!(m, n("exp(x)"));
        assert_eq!(normalize(&(differentiate(&m, VAR) / m)), Expr::one());
        assert_eq!(integrating_factor(&e("exp(x^2)")), None);
    }

    #[test]
    fn transformations() {
        assert_eq!(phi(&e("0")), Some(n("x")));
        let p = phi(&e("1/x")).unwrap();
        assert_eq!(p, n("x^2/2"));
        assert_eq!(differentiate(&p, VAR), n("x"));
        let p = phi(&e("1")).unwrap();
        assert_eq!(p, n("exp(x)"));
        // M = exp(x^2/2) has no elementary antiderivative
        assert_eq!(phi(&e("x")), None);
    }

    #[test]
    fn pullbacks() {
        let g = |f: &str, g: &str| pullback_force(&LienardInput::parse(f, g, Interval::default()).unwrap());
        assert_eq!(g("0", "x^3"), n("x^3"));
        assert_eq!(g("1/x", "x/2"), n("x^2/2"));
        assert_eq!(g("1", "exp(-4*x)"), n("exp(-3*x)"));
        assert_eq!(g("exp(x^2)", "x"), normalize(&(Expr::var(M_SYMBOL) * e("x"))));
    }

    #[test]
    fn derivative_along_y() {
        let d = data("0", "x^3");
        assert_eq!(d.d_dy(&d.g), n("3*x^2"));
        for f in ["0", "1/x", "1", "2", "-1/x", "3/x"] {
            let d = data(f, "x");
            assert!(d.is_zero(&normalize(&(d.d_dy(&d.phi_expr()) - Expr::one())), &SamplingPolicy::default()).is_yes());
        }
        let d = data("1/x", "x/2");
        assert_eq!(d.d_dy(&n("x^2/2")), Expr::one());
    }

    #[test]
    fn k_values() {
        assert_eq!(invariant_k(&data("0", "exp(3*x)")).unwrap(), Expr::one());
        assert_eq!(invariant_k(&data("0", "x^2")).unwrap(), Expr::rational(1, 2));
        assert_eq!(invariant_k(&data("0", "x^-3")).unwrap(), Expr::rational(4, 3));
        assert_eq!(invariant_k(&data("0", "0")), Err(DegenerateForce));
        assert_eq!(invariant_k(&data("0", "5")), Err(DegenerateForce));
    }

    #[test]
    fn k_identities_with_symbolic_parameters() {
        // F = (a + b y)^n and F = exp(c y) with a, b, c named constants
        let p = |s: &str| parse_with(s, &["x"], &["a", "b", "c"]).unwrap();
        for k in [2i64, 3, -2, 5] {
            let g = p(&format!("(a + b*x)^{k}"));
            let f1 = differentiate(&g, VAR);
            let f2 = differentiate(&f1, VAR);
            let kk = normalize(&(g * f2 / f1.powi(2)));
            assert_eq!(kk, Expr::constant(Rational::new((k - 1).into(), k.into())), "n = {k}");
        }
        let g = p("exp(c*x)");
        let f1 = differentiate(&g, VAR);
        let f2 = differentiate(&f1, VAR);
        assert_eq!(normalize(&(g * f2 / f1.powi(2))), Expr::one());
    }

    #[test]
    fn k_matches_direct_computation_when_f_vanishes() {
        for g in ["x^3 + x", "exp(x) + x^2", "(1 + 2*x)^(1/2)", "x*log(x)"] {
            let d = data("0", g);
            let ge = n(g);
            let g1 = differentiate(&ge, VAR);
            let g2 = differentiate(&g1, VAR);
            assert_eq!(invariant_k(&d).unwrap(), normalize(&(ge * g2 / g1.powi(2))), "{g}");
        }
    }

    #[test]
    fn round_trip_through_pullback() {
        // g := F(Φ)/M gives back G = F(Φ)
        for (f, force) in [("1/x", "y^3"), ("1", "exp(2*y)"), ("2", "y + y^-3"), ("-1/x", "(1 + y)^(1/2)")] {
            let fe = e(f);
            let m = integrating_factor(&fe).unwrap();
            let p = phi(&fe).unwrap();
            let fy = parse(force, "y").unwrap();
            let along = crate::expr::substitute(&fy, "y", &p);
            let g = normalize(&(along.clone() / m));
            let input = LienardInput::new(fe, g, Interval::default()).unwrap();
            assert_eq!(pullback_force(&input), along, "{f}, {force}");
        }
    }

    #[test]
    fn numeric_mode() {
        // f = x has M = exp(x^2/2) but no symbolic Φ
        let d = data("x", "x");
        assert!(d.m.is_some() && d.phi.is_none());
        let h = 1e-5;
        let slope = (d.phi_at(1.5 + h).unwrap() - d.phi_at(1.5 - h).unwrap()) / (2.0 * h);
        assert!((slope - d.m_at(1.5).unwrap()).abs() < 1e-6);
        let policy = SamplingPolicy::default();
        assert!(d.is_zero(&normalize(&(d.d_dy(&d.phi_expr()) - Expr::one())), &policy).is_yes());
        // f = exp(x^2) has neither
        let d = data("exp(x^2)", "x");
        assert!(d.m.is_none());
        assert_eq!(d.m_at(d.domain.lo).unwrap(), 1.0);
        let dm = d.derivative(&d.m_expr());
        let x = 1.3;
        let fd = (d.m_at(x + h).unwrap() - d.m_at(x - h).unwrap()) / (2.0 * h);
        assert!((d.eval_at(&dm, x).unwrap() - fd).abs() < 1e-5 * fd.abs());
        assert!(d.is_zero(&normalize(&(d.d_dy(&d.phi_expr()) - Expr::one())), &policy).is_yes());
    }

    #[test]
    fn m_is_positive_on_the_domain() {
        for f in ["0", "1/x", "-3", "x", "-2/x", "exp(x^2)"] {
            let d = data(f, "x");
            for i in 0..16 {
                let x = d.domain.at(i as f64 / 15.0);
                assert!(d.m_at(x).unwrap() > 0.0, "{f} at {x}");
            }
        }
    }

    #[test]
    fn rejects_other_variables() {
        assert!(matches!(
            LienardInput::parse("x + t", "x", Interval::default()),
            Err(InputError::F(ParseError::UnknownSymbol { .. }))
        ));
        let err = LienardInput::new(e("x"), Expr::var("t"), Interval::default()).unwrap_err();
        assert_eq!(err, InputError::ForeignVariable { which: "g", name: "t".into() });
    }

    #[test]
    fn numeric_transform_matches_symbolic() {
        let input = LienardInput::parse("1/x", "x/2", Interval::default()).unwrap();
        let (sym, num) = (TransformData::new(&input), TransformData::numeric(&input));
        assert!(num.m.is_none() && num.phi.is_none());
        for x in [1.0, 1.5, 2.0] {
            assert!((sym.m_at(x).unwrap() - num.m_at(x).unwrap()).abs() < 1e-9);
            // Φ by quadrature starts at the domain's left end
            let shift = sym.phi_at(1.0).unwrap();
            assert!((sym.phi_at(x).unwrap() - shift - num.phi_at(x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn potential_along_phi() {
        // F = y^-3 via f = 1: V = -1/(2 y^2) = -exp(-2x)/2
        let d = data("1", "exp(-4*x)");
        assert_eq!(d.potential().unwrap(), n("-exp(-2*x)/2"));
    }
}
