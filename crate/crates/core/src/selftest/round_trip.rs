//! Random instances built backwards: pick a canonical force `F` from the
//! catalogue and an `f` with closed-form `M` and `Φ`, then set
//! `g = F(Φ(x)) / M(x)`.

use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::classify::{CaseTag, LinearKind};
use crate::expr::{eval_scaled, halton, normalize, parse_with, substitute, Bindings, Expr, Interval, Rational};
use crate::transform::{LienardInput, VAR};

const SEED: u64 = 0x11e_a7d;
/// Parameters are `p/q` with `|p|, |q| <= 9`.
const BOUND: i64 = 9;
/// Accepted instances keep every pole this far from the domain and stay
/// below this magnitude there.
const POLE_CLEARANCE: f64 = 0.2;
const MAGNITUDE: f64 = 1e6;
const PROBES: u64 = 65;

/// Case and exact parameters an instance was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    Generic,
    PowerLaw { n: Rational, alpha: Rational, beta: Rational },
    Exponential { gamma: Rational },
    InverseCube { shift: Rational, strength: Rational },
    ErmakovPinney { alpha: Rational, beta: Rational, shift: Rational },
    Linear { slope: Rational, offset: Rational },
}

impl Expected {
    pub fn case_name(&self) -> &'static str {
        match self {
            Expected::Generic => "generic",
            Expected::PowerLaw { .. } => "power-law",
            Expected::Exponential { .. } => "exponential",
            Expected::InverseCube { .. } => "inverse-cube",
            Expected::ErmakovPinney { .. } => "ermakov-pinney",
            Expected::Linear { .. } => "linear",
        }
    }

    fn params(&self) -> Vec<(&'static str, Rational)> {
        match self.clone() {
            Expected::Generic => vec![],
            Expected::PowerLaw { n, alpha, beta } => vec![("n", n), ("alpha", alpha), ("beta", beta)],
            Expected::Exponential { gamma } => vec![("gamma", gamma)],
            Expected::InverseCube { shift, strength } => vec![("c", shift), ("strength", strength)],
            Expected::ErmakovPinney { alpha, beta, shift } => vec![("alpha", alpha), ("beta", beta), ("c", shift)],
            Expected::Linear { slope, offset } => vec![("slope", slope), ("offset", offset)],
        }
    }

    /// Exact agreement of case and parameters. Inexact parameters count as
    /// agreement only in value.
    pub fn compare(&self, case: &CaseTag) -> Result<(), String> {
        if case.name() != self.case_name() {
            return Err(format!("expected {}, got {case}", self.case_name()));
        }
        if let (Expected::Linear { slope, offset }, CaseTag::Linear { kind, .. }) = (self, case) {
            let want = match (slope.is_zero(), offset.is_zero()) {
                (true, true) => LinearKind::Zero,
                (true, false) => LinearKind::Constant,
                (false, true) => LinearKind::Homogeneous,
                (false, false) => LinearKind::Affine,
            };
            if *kind != want {
                return Err(format!("expected {want}, got {kind}"));
            }
        }
        for ((name, want), (_, got)) in self.params().iter().zip(case.params()) {
            let ok = match got.as_rational() {
                Some(q) => q == want,
                None => {
                    let w = crate::expr::Expr::constant(want.clone());
                    let w = crate::expr::eval(&w, &Bindings::new()).unwrap_or(f64::NAN);
                    (got.value - w).abs() <= 1e-9 * (1.0 + w.abs())
                }
            };
            if !ok {
                return Err(format!("{name}: expected {want}, got {got}"));
            }
        }
        Ok(())
    }
}

/// The `f` families with closed-form `M = exp(∫f)` and `Φ = ∫M`.
#[derive(Debug, Clone, PartialEq)]
pub enum Friction {
    Zero,
    Constant(Rational),
    Reciprocal,
    ScaledReciprocal(Rational),
}

impl Friction {
    fn text(&self) -> String {
        match self {
            Friction::Zero => "0".into(),
            Friction::Constant(c) => format!("({c})"),
            Friction::Reciprocal => "1/x".into(),
            Friction::ScaledReciprocal(c) => format!("({c})/x"),
        }
    }

    /// `(M, Φ)` written out by hand.
    fn closed_forms(&self) -> (String, String) {
        match self {
            Friction::Zero => ("1".into(), "x".into()),
            Friction::Constant(c) => (format!("exp(({c})*x)"), format!("exp(({c})*x)/({c})")),
            Friction::Reciprocal => ("x".into(), "x^2/2".into()),
            Friction::ScaledReciprocal(c) => {
                let c1 = c + Rational::from_integer(1.into());
                (format!("x^({c})"), format!("x^({c1})/({c1})"))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub friction: Friction,
    /// Canonical force in `y`.
    pub force: Expr,
    pub input: LienardInput,
    pub expected: Expected,
}

impl RandomInstance {
    pub fn key(&self) -> &'static str {
        match self.expected {
            Expected::ErmakovPinney { .. } => "ep",
            Expected::PowerLaw { .. } => "power",
            Expected::Exponential { .. } => "exp",
            _ => self.expected.case_name(),
        }
    }

    pub fn label(&self) -> String {
        format!("F = {}, f = {}", self.force, self.friction.text())
    }
}

fn rational(rng: &mut StdRng) -> Rational {
    Rational::new(rng.gen_range(-BOUND..=BOUND).into(), rng.gen_range(1..=BOUND).into())
}

fn nonzero(rng: &mut StdRng) -> Rational {
    loop {
        let q = rational(rng);
        if !q.is_zero() {
            return q;
        }
    }
}

fn positive(rng: &mut StdRng) -> Rational {
    let q = nonzero(rng);
    if q < Rational::zero() {
        -q
    } else {
        q
    }
}

fn friction(rng: &mut StdRng) -> Friction {
    match rng.gen_range(0..4) {
        0 => Friction::Zero,
        1 => Friction::Constant(nonzero(rng)),
        2 => Friction::Reciprocal,
        _ => loop {
            let c = nonzero(rng);
            if c != Rational::from_integer((-1).into()) {
                break Friction::ScaledReciprocal(c);
            }
        },
    }
}

/// A catalogue force as text in `y`, its expected tag, and whether the
/// power base must stay positive (non-integer exponents).
fn force(rng: &mut StdRng) -> (String, Expected, Option<String>) {
    match rng.gen_range(0..6) {
        0 => {
            let n = loop {
                let n = nonzero(rng);
                if n != Rational::from_integer(1.into()) && n != Rational::from_integer((-3).into()) {
                    break n;
                }
            };
            let (alpha, beta) = (rational(rng), positive(rng));
            let base = format!("({alpha}) + ({beta})*y");
            let guard = (!n.is_integer()).then(|| base.clone());
            (format!("({base})^({n})"), Expected::PowerLaw { n, alpha, beta }, guard)
        }
        1 => {
            let (a, gamma) = (nonzero(rng), nonzero(rng));
            (format!("({a})*exp(({gamma})*y)"), Expected::Exponential { gamma }, None)
        }
        2 => {
            let (strength, shift) = (nonzero(rng), rational(rng));
            (format!("({strength})*(y + ({shift}))^(-3)"), Expected::InverseCube { shift, strength }, None)
        }
        3 => {
            let (alpha, beta, shift) = (nonzero(rng), nonzero(rng), rational(rng));
            (
                format!("({alpha})*(y + ({shift})) + ({beta})*(y + ({shift}))^(-3)"),
                Expected::ErmakovPinney { alpha, beta, shift },
                None,
            )
        }
        4 => {
            let (slope, offset) = (rational(rng), rational(rng));
            (format!("({slope})*y + ({offset})"), Expected::Linear { slope, offset }, None)
        }
        _ => {
            let (a, b) = (nonzero(rng), nonzero(rng));
            (format!("({a})*exp(y) + ({b})*y^2"), Expected::Generic, None)
        }
    }
}

fn in_y(text: &str) -> Expr {
    parse_with(text, &["y"], &[]).expect("catalogue forces parse")
}

fn in_x(text: &str) -> Expr {
    parse_with(text, &[VAR], &[]).expect("closed forms parse")
}

/// Defined, away from poles and moderate across the domain.
fn well_behaved(e: &Expr, domain: &Interval, positive: bool) -> bool {
    let mut b = Bindings::new();
    (0..PROBES).all(|i| {
        let x = domain.at(if i == 0 { 0.0 } else { halton(i, 2) });
        b.insert(VAR.to_string(), x);
        eval_scaled(e, &b).is_ok_and(|s| {
            s.min_denominator >= POLE_CLEARANCE && s.value.abs() <= MAGNITUDE && (!positive || s.value > 0.0)
        })
    })
}

/// `count` accepted instances from a fixed seed. Draws whose force is
/// undefined, singular or huge on the domain are redrawn.
pub fn random_instances(count: usize) -> Vec<RandomInstance> {
    let mut rng = StdRng::seed_from_u64(SEED);
    let domain = Interval::default();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let fr = friction(&mut rng);
        let (text, expected, base) = force(&mut rng);
        let (m, phi) = fr.closed_forms();
        let (m, phi) = (in_x(&m), in_x(&phi));
        let canonical = in_y(&text);
        let g = normalize(&(substitute(&canonical, "y", &phi) / m));
        if !well_behaved(&g, &domain, false) {
            continue;
        }
        if let Some(base) = base {
            if !well_behaved(&substitute(&in_y(&base), "y", &phi), &domain, true) {
                continue;
            }
        }
        let Ok(input) = LienardInput::new(in_x(&fr.text()), g, domain) else {
            continue;
        };
        out.push(RandomInstance {
            friction: fr,
            force: normalize(&canonical),
            input,
            expected,
        });
    }
    out
}
