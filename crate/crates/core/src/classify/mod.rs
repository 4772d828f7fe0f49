//! Classification of the symmetry algebra of `y'' + F(y) = 0` from the
//! pullback `G(x) = F(Φ(x))`.
//!
//! The decision tree runs in a fixed order, each test a tri-state decision
//! recorded in the trace:
//!
//! 1. `G ≡ 0`: linear, zero force.
//! 2. `F'' ≡ 0`: linear, eight-dimensional.
//! 3. `K = F F''/F'^2` constant: `K = 1` is exponential, otherwise a power
//!    `n = 1/(1 - K)` with `n = -3` the inverse cube.
//! 4. Ermakov-Pinney: with `u = -5 F''/F'''`, both `du/dy ≡ 1` and
//!    `F - u F' - u^2 F''/3 ≡ 0`.
//! 5. Otherwise generic.
//!
//! An `Unknown` anywhere stops the descent and the report falls back to the
//! generic verdict, which never overstates the algebra.

mod generators;

use std::fmt;

use num_integer::Integer;
use num_traits::One;

use crate::expr::{eval, normalize, Bindings, ConstValue, Decision, Expr, Grade, Rational, SamplingPolicy, TriState};
use crate::oracle::residual::{numeric_constancy, symmetry_residual};
use crate::transform::{LienardInput, TransformData};

pub use generators::{
    generators_for, pullback_generator, pulled_back_text, Harmonic, PullbackUnavailable, SymmetryGenerator,
};

/// Extracted parameter: exact when every decision behind it was symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub exact: Option<Expr>,
    pub value: f64,
}

impl Param {
    pub fn exact(e: Expr) -> Self {
        let e = normalize(&e);
        let value = eval(&e, &Bindings::new()).unwrap_or(f64::NAN);
        Param { exact: Some(e), value }
    }

    pub fn approx(value: f64) -> Self {
        Param { exact: None, value }
    }

    pub fn int(n: i64) -> Self {
        Param::exact(Expr::int(n))
    }

    pub fn zero() -> Self {
        Param::int(0)
    }

    fn from_const(c: &ConstValue) -> Self {
        match &c.expr {
            Some(e) => Param::exact(e.clone()),
            None => Param::approx(c.approx),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.exact.as_ref().and_then(Expr::as_rational)
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(e) => e.is_zero(),
            None => self.value == 0.0,
        }
    }

    /// Exact expression, or the binary value of the approximation.
    pub fn expr(&self) -> Expr {
        match &self.exact {
            Some(e) => e.clone(),
            None => Rational::from_float(self.value).map(Expr::constant).unwrap_or_else(Expr::zero),
        }
    }

    pub fn neg(&self) -> Param {
        match &self.exact {
            Some(e) => Param::exact(-e.clone()),
            None => Param::approx(-self.value),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(e) => write!(f, "{e}"),
            None => write!(f, "{:.12}", self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearKind {
    Zero,
    Constant,
    Homogeneous,
    Affine,
}

impl fmt::Display for LinearKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearKind::Zero => "zero",
            LinearKind::Constant => "constant",
            LinearKind::Homogeneous => "homogeneous",
            LinearKind::Affine => "affine",
        })
    }
}

/// The force family, with parameters relative to the chosen `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseTag {
    Generic,
    /// `F = (α + β y)^n`.
    PowerLaw { n: Param, alpha: Param, beta: Param },
    /// `F = A e^{γ y}`.
    Exponential { gamma: Param },
    /// `F = strength / (y + shift)^3`.
    InverseCube { shift: Param, strength: Param },
    /// `F = α (y + shift) + β / (y + shift)^3`.
    ErmakovPinney { alpha: Param, beta: Param, shift: Param },
    /// `F = slope y + offset`.
    Linear { kind: LinearKind, slope: Param, offset: Param },
}

impl CaseTag {
    pub fn dimension(&self) -> u32 {
        match self {
            CaseTag::Generic => 1,
            CaseTag::PowerLaw { .. } | CaseTag::Exponential { .. } => 2,
            CaseTag::InverseCube { .. } | CaseTag::ErmakovPinney { .. } => 3,
            CaseTag::Linear { .. } => 8,
        }
    }

    pub fn algebra(&self) -> &'static str {
        match self.dimension() {
            1 => "A1",
            2 => "A2",
            3 => "A3,8 = sl(2,R)",
            _ => "sl(3,R)",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseTag::Generic => "generic",
            CaseTag::PowerLaw { .. } => "power-law",
            CaseTag::Exponential { .. } => "exponential",
            CaseTag::InverseCube { .. } => "inverse-cube",
            CaseTag::ErmakovPinney { .. } => "ermakov-pinney",
            CaseTag::Linear { .. } => "linear",
        }
    }

    /// Named parameters in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, &Param)> {
        match self {
            CaseTag::Generic => vec![],
            CaseTag::PowerLaw { n, alpha, beta } => vec![("n", n), ("alpha", alpha), ("beta", beta)],
            CaseTag::Exponential { gamma } => vec![("gamma", gamma)],
            CaseTag::InverseCube { shift, strength } => vec![("c", shift), ("strength", strength)],
            CaseTag::ErmakovPinney { alpha, beta, shift } => vec![("alpha", alpha), ("beta", beta), ("c", shift)],
            CaseTag::Linear { slope, offset, .. } => vec![("slope", slope), ("offset", offset)],
        }
    }

    /// Whether every parameter is exact.
    pub fn is_exact(&self) -> bool {
        self.params().iter().all(|(_, p)| p.exact.is_some())
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        if let CaseTag::Linear { kind, .. } = self {
            write!(f, " ({kind})")?;
        }
        let params = self.params();
        if !params.is_empty() {
            let parts: Vec<String> = params.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            write!(f, " [{}]", parts.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub test: String,
    pub decision: Decision,
}

/// Printed transform, `None` where only quadrature is available.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSummary {
    pub m: Option<Expr>,
    pub phi: Option<Expr>,
    /// `None` when `G` involves the numeric `M`.
    pub g: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub case: CaseTag,
    pub generators: Vec<SymmetryGenerator>,
    pub trace: Vec<TraceEntry>,
    pub transform: TransformSummary,
    /// Some decision was `Unknown`; `case` is the safe fallback.
    pub inconclusive: bool,
    pub notes: Vec<String>,
}

impl SymmetryReport {
    pub fn dimension(&self) -> u32 {
        self.case.dimension()
    }

    pub fn algebra(&self) -> &'static str {
        self.case.algebra()
    }

    /// No `Yes` in the trace relied on sampling, and every parameter is exact.
    pub fn is_symbolic(&self) -> bool {
        !self.inconclusive
            && self.case.is_exact()
            && self
                .trace
                .iter()
                .all(|t| t.decision.state != TriState::Yes || t.decision.grade == Grade::Symbolic)
    }

    /// Every generator passed its residual check.
    pub fn certified(&self) -> bool {
        self.generators.iter().all(SymmetryGenerator::certified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub policy: SamplingPolicy,
    pub residual_samples: usize,
    pub residual_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            policy: SamplingPolicy::default(),
            residual_samples: 100,
            residual_tol: 1e-8,
        }
    }
}

/// The descent stopped on an `Unknown`.
struct Stop;

struct Run<'a> {
    data: &'a TransformData,
    options: &'a ClassifyOptions,
    trace: Vec<TraceEntry>,
    notes: Vec<String>,
}

impl Run<'_> {
    fn record(&mut self, test: &str, decision: Decision) -> Result<bool, Stop> {
        self.trace.push(TraceEntry {
            test: test.to_string(),
            decision,
        });
        match decision.state {
            TriState::Yes => Ok(true),
            TriState::No => Ok(false),
            TriState::Unknown => Err(Stop),
        }
    }

    fn zero(&mut self, test: &str, e: &Expr) -> Result<bool, Stop> {
        let d = self.data.is_zero(e, &self.options.policy);
        self.record(test, d)
    }

    /// Constancy, with a pure sampling fallback when the derivative route
    /// cannot decide.
    fn constant(&mut self, test: &str, e: &Expr) -> Result<Option<Param>, Stop> {
        let (mut d, mut value) = self.data.is_constant(e, &self.options.policy);
        if d.is_unknown() {
            let n = normalize(e);
            let (s, v) = numeric_constancy(
                |x| self.data.eval_at(&n, x),
                &self.data.domain,
                self.options.policy.samples.max(16),
                self.options.policy.tolerance,
            );
            d = Decision::numeric(s);
            value = v.map(|approx| ConstValue { expr: None, approx });
        }
        if self.record(test, d)? {
            Ok(Some(value.map(|v| Param::from_const(&v)).unwrap_or_else(|| Param::approx(f64::NAN))))
        } else {
            Ok(None)
        }
    }

    fn classify(&mut self) -> Result<CaseTag, Stop> {
        let data = self.data;
        let g = data.g.clone();
        if self.zero("G == 0", &g)? {
            return Ok(CaseTag::Linear {
                kind: LinearKind::Zero,
                slope: Param::zero(),
                offset: Param::zero(),
            });
        }
        let f1 = data.d_dy(&g);
        let f2 = data.d_dy(&f1);
        if self.zero("F'' == 0", &f2)? {
            return self.linear(&g, &f1);
        }
        let k = normalize(&(g.clone() * f2.clone() / f1.clone().powi(2)));
        if let Some(k) = self.constant("K constant", &k)? {
            return self.constant_k(&g, &f1, k);
        }
        if let Some(case) = self.ermakov_pinney(&g, &f1, &f2)? {
            return Ok(case);
        }
        Ok(CaseTag::Generic)
    }

    fn linear(&mut self, g: &Expr, f1: &Expr) -> Result<CaseTag, Stop> {
        let Some(slope) = self.constant("F' constant", f1)? else {
            self.notes.push("F'' vanishes but F' is not constant".into());
            return Ok(CaseTag::Generic);
        };
        let offset_expr = normalize(&(g.clone() - slope.expr() * self.data.phi_expr()));
        let Some(offset) = self.constant("F - F' y constant", &offset_expr)? else {
            self.notes.push("F is not affine in y".into());
            return Ok(CaseTag::Generic);
        };
        let kind = match (slope.is_zero(), offset.is_zero()) {
            (true, true) => LinearKind::Zero,
            (true, false) => LinearKind::Constant,
            (false, true) => LinearKind::Homogeneous,
            (false, false) => LinearKind::Affine,
        };
        Ok(CaseTag::Linear { kind, slope, offset })
    }

    fn constant_k(&mut self, g: &Expr, f1: &Expr, k: Param) -> Result<CaseTag, Stop> {
        let is_one = match k.as_rational() {
            Some(q) => q.is_one(),
            None => (k.value - 1.0).abs() < K_TOLERANCE,
        };
        if is_one {
            let ratio = normalize(&(f1.clone() / g.clone()));
            let Some(gamma) = self.constant("F'/F constant", &ratio)? else {
                self.notes.push("K = 1 but F'/F is not constant".into());
                return Ok(CaseTag::Generic);
            };
            return Ok(CaseTag::Exponential { gamma });
        }
        let n = match k.as_rational() {
            Some(q) => Param::exact(Expr::constant((Rational::one() - q).recip())),
            None => Param::approx(1.0 / (1.0 - k.value)),
        };
        // n G / F' = y + α/β and G (F'/(n G))^n = β^n
        let ne = n.expr();
        let shift_expr = normalize(&(ne.clone() * g.clone() / f1.clone() - self.data.phi_expr()));
        let Some(shift) = self.constant("power shift constant", &shift_expr)? else {
            self.notes.push("constant K but the power base is not affine in y".into());
            return Ok(CaseTag::Generic);
        };
        let amp_expr = normalize(&(g.clone() * (f1.clone() / (ne.clone() * g.clone())).pow(ne.clone())));
        let Some(amplitude) = self.constant("power amplitude constant", &amp_expr)? else {
            self.notes.push("constant K but the power amplitude varies".into());
            return Ok(CaseTag::Generic);
        };
        let minus_three = n.as_rational().map_or((n.value + 3.0).abs() < K_TOLERANCE, |q| *q == Rational::from_integer((-3).into()));
        if minus_three {
            return Ok(CaseTag::InverseCube {
                shift,
                strength: amplitude,
            });
        }
        // β = A^(1/n); a negative amplitude with no real root means F = -(α + βy)^n
        let odd = n.as_rational().is_some_and(|q| q.numer().is_odd());
        let negative = amplitude.value < 0.0;
        if negative && !odd {
            self.notes.push("power law with negative amplitude: F = -(alpha + beta y)^n".into());
        }
        let magnitude = if negative && !odd { amplitude.neg() } else { amplitude.clone() };
        let beta = match (&magnitude.exact, n.as_rational()) {
            (Some(a), Some(q)) => Param::exact(a.clone().powq(q.recip())),
            _ => Param::approx(magnitude.value.abs().powf(1.0 / n.value) * magnitude.value.signum()),
        };
        let alpha = match (&shift.exact, &beta.exact) {
            (Some(s), Some(b)) => Param::exact(s.clone() * b.clone()),
            _ => Param::approx(shift.value * beta.value),
        };
        Ok(CaseTag::PowerLaw { n, alpha, beta })
    }

    fn ermakov_pinney(&mut self, g: &Expr, f1: &Expr, f2: &Expr) -> Result<Option<CaseTag>, Stop> {
        let data = self.data;
        let f3 = data.d_dy(f2);
        if self.zero("F''' == 0", &f3)? {
            return Ok(None);
        }
        let u = normalize(&(Expr::int(-5) * f2.clone() / f3));
        let du = normalize(&(data.d_dy(&u) - Expr::one()));
        if !self.zero("du/dy == 1", &du)? {
            return Ok(None);
        }
        let identity = normalize(
            &(g.clone() - u.clone() * f1.clone() - u.clone().powi(2) * f2.clone() / Expr::int(3)),
        );
        if !self.zero("F - u F' - u^2 F''/3 == 0", &identity)? {
            return Ok(None);
        }
        let beta_expr = normalize(&(f2.clone() * u.clone().powi(5) / Expr::int(12)));
        let alpha_expr = normalize(&(f1.clone() + f2.clone() * u.clone() / Expr::int(4)));
        let shift_expr = normalize(&(u - data.phi_expr()));
        let (Some(beta), Some(alpha), Some(shift)) = (
            self.constant("EP beta constant", &beta_expr)?,
            self.constant("EP alpha constant", &alpha_expr)?,
            self.constant("EP shift constant", &shift_expr)?,
        ) else {
            self.notes.push("Ermakov-Pinney identities hold but a parameter varies".into());
            return Ok(None);
        };
        if alpha.is_zero() {
            return Ok(Some(CaseTag::InverseCube { shift, strength: beta }));
        }
        Ok(Some(CaseTag::ErmakovPinney { alpha, beta, shift }))
    }
}

/// Numeric `K` within this distance of a special value takes that value.
pub const K_TOLERANCE: f64 = 1e-7;

/// Runs the decision tree, emits the generators, pulls them back to `x` and
/// certifies each against the prolonged symmetry condition.
pub fn classify_with(data: &TransformData, options: &ClassifyOptions) -> SymmetryReport {
    let mut run = Run {
        data,
        options,
        trace: Vec::new(),
        notes: Vec::new(),
    };
    let (case, inconclusive) = match run.classify() {
        Ok(case) => (case, false),
        Err(Stop) => {
            run.notes.push("a decision was inconclusive; reporting the generic algebra".into());
            (CaseTag::Generic, true)
        }
    };
    if matches!(case, CaseTag::Linear { .. }) {
        run.notes
            .push("dimension 8: time translation and the two solution translations are listed".into());
    }
    let mut generators = generators_for(&case);
    for gen in &mut generators {
        if let Ok(pulled) = pullback_generator(gen, data) {
            *gen = pulled;
        }
        gen.residual = Some(symmetry_residual(gen, data, options.residual_samples, options.residual_tol));
    }
    let printable = |e: &Expr| {
        let vars = e.variables();
        vars.iter().all(|v| v == crate::transform::VAR).then(|| e.clone())
    };
    SymmetryReport {
        case,
        generators,
        trace: run.trace,
        transform: TransformSummary {
            m: data.m.clone(),
            phi: data.phi.clone(),
            g: printable(&data.g),
        },
        inconclusive,
        notes: run.notes,
    }
}

pub fn classify(input: &LienardInput) -> SymmetryReport {
    classify_with(&TransformData::new(input), &ClassifyOptions::default())
}

#[cfg(test)]
mod tests;
