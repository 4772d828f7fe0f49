//! Adaptive Simpson quadrature and memoized cumulative integrals.

use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::expr::{eval, Bindings, EvalError, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge on [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error("integrand undefined: {0}")]
    Integrand(#[from] EvalError),
}

const MAX_DEPTH: u32 = 48;

/// Integrand evaluable at a point.
pub type Integrand = Arc<dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync>;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn panel<F>(f: &F, a: f64, b: f64, fa: f64, fb: f64) -> Result<Panel, QuadratureError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let m = 0.5 * (a + b);
    let fm = checked(f, m)?;
    Ok(Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
    })
}

fn checked<F>(f: &F, x: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("non-finite integrand at {x}")).into())
    }
}

fn refine<F>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let m = 0.5 * (p.a + p.b);
    let left = panel(f, p.a, m, p.fa, p.fm)?;
    let right = panel(f, m, p.b, p.fm, p.fb)?;
    let delta = left.whole + right.whole - p.whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left.whole + right.whole + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(QuadratureError::NoConvergence { lo: p.a, hi: p.b });
    }
    Ok(refine(f, left, 0.5 * tol, depth - 1)? + refine(f, right, 0.5 * tol, depth - 1)?)
}

/// `∫_a^b f` to relative tolerance `rel_tol` (absolute below unit scale).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb) = (checked(&f, a)?, checked(&f, b)?);
    let coarse = panel(&f, a, b, fa, fb)?;
    let scale = coarse.whole.abs().max((b - a).abs() * (fa.abs() + fb.abs() + coarse.fm.abs()) / 3.0);
    let tol = rel_tol * scale.max(1.0);
    refine(&f, coarse, tol, MAX_DEPTH)
}

/// `x -> ∫_origin^x integrand`, memoized on a grid of spacing `step`.
pub struct Cumulative {
    integrand: Integrand,
    origin: f64,
    step: f64,
    rel_tol: f64,
    // node values at origin + k*step for k >= 0 and k <= 0
    forward: Mutex<Vec<f64>>,
    backward: Mutex<Vec<f64>>,
}

impl std::fmt::Debug for Cumulative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cumulative")
            .field("origin", &self.origin)
            .field("step", &self.step)
            .finish()
    }
}

/// Grid spacing of the memoized node values.
pub const GRID_STEP: f64 = 1.0 / 64.0;

/// Relative tolerance of every quadrature panel.
pub const QUADRATURE_TOL: f64 = 1e-10;

impl Cumulative {
    pub fn new(integrand: Integrand, origin: f64) -> Self {
        Cumulative {
            integrand,
            origin,
            step: GRID_STEP,
            rel_tol: QUADRATURE_TOL,
            forward: Mutex::new(vec![0.0]),
            backward: Mutex::new(vec![0.0]),
        }
    }

    fn node(&self, k: i64) -> Result<f64, QuadratureError> {
        let (cache, sign) = if k >= 0 { (&self.forward, 1.0) } else { (&self.backward, -1.0) };
        let idx = k.unsigned_abs() as usize;
        let mut nodes = cache.lock().expect("quadrature cache poisoned");
        while nodes.len() <= idx {
            let j = nodes.len() as f64;
            let a = self.origin + sign * (j - 1.0) * self.step;
            let b = self.origin + sign * j * self.step;
            let piece = adaptive_simpson(&*self.integrand, a, b, self.rel_tol)?;
            let last = *nodes.last().unwrap_or(&0.0);
            nodes.push(last + piece);
        }
        Ok(nodes[idx])
    }

    pub fn at(&self, x: f64) -> Result<f64, QuadratureError> {
        if !x.is_finite() {
            return Err(EvalError::Domain(format!("non-finite abscissa {x}")).into());
        }
        let k = ((x - self.origin) / self.step).round() as i64;
        let base = self.node(k)?;
        let xk = self.origin + k as f64 * self.step;
        Ok(base + adaptive_simpson(&*self.integrand, xk, x, self.rel_tol)?)
    }
}

/// Integrand from an expression in `var`.
pub fn expr_integrand(e: &Expr, var: &str) -> Integrand {
    let e = e.clone();
    let var = var.to_string();
    Arc::new(move |x| {
        let mut b = Bindings::new();
        b.insert(var.clone(), x);
        eval(&e, &b)
    })
}

/// Numeric integrating factor `M(x) = exp(∫_origin^x f)`.
#[derive(Debug)]
pub struct QuadratureM {
    log_m: Cumulative,
}

impl QuadratureM {
    pub fn at(&self, x: f64) -> Result<f64, QuadratureError> {
        Ok(self.log_m.at(x)?.exp())
    }
}

/// Integrating factor of `f` by quadrature from `origin` (where it equals 1).
pub fn quadrature_m(f: &Expr, var: &str, origin: f64) -> QuadratureM {
    QuadratureM {
        log_m: Cumulative::new(expr_integrand(f, var), origin),
    }
}

fn to_eval(e: QuadratureError) -> EvalError {
    match e {
        QuadratureError::Integrand(e) => e,
        other => EvalError::Domain(other.to_string()),
    }
}

impl QuadratureM {
    /// The factor as an integrand, for nesting into `∫M`.
    pub fn into_integrand(self: Arc<Self>) -> Integrand {
        Arc::new(move |x| self.at(x).map_err(to_eval))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(|x| Ok(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        let v = adaptive_simpson(|x| Ok(1.0 / x), 1.0, 3.0, 1e-12).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-11);
        assert_eq!(adaptive_simpson(|_| Ok(1.0), 2.0, 2.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = adaptive_simpson(|x| Ok(x * x), 0.0, 2.0, 1e-12).unwrap();
        let b = adaptive_simpson(|x| Ok(x * x), 2.0, 0.0, 1e-12).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn integrating_factor_by_quadrature() {
        let m = quadrature_m(&parse("0", "x").unwrap(), "x", 0.0);
        assert_eq!(m.at(1.7).unwrap(), 1.0);
        let m = quadrature_m(&parse("1", "x").unwrap(), "x", 0.0);
        assert!((m.at(1.0).unwrap() - std::f64::consts::E).abs() < 1e-9);
        // exp(x^2)*0 + 1/x integrates to log(x) from 1, so M(2) = 2
        let m = quadrature_m(&parse("exp(x^2)*0 + 1/x", "x").unwrap(), "x", 1.0);
        assert!((m.at(2.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((m.at(0.5).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pole_fails_to_integrate() {
        let m = quadrature_m(&parse("1/x", "x").unwrap(), "x", 1.0);
        assert!(m.at(-1.0).is_err());
    }

    #[test]
    fn nested_cumulative() {
        let m = Arc::new(quadrature_m(&parse("1", "x").unwrap(), "x", 0.0));
        let phi = Cumulative::new(m.into_integrand(), 0.0);
        assert!((phi.at(1.0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }
}
