use super::*;
use crate::expr::{differentiate, parse_with, Interval};

fn run(f: &str, g: &str) -> SymmetryReport {
    classify(&LienardInput::parse(f, g, Interval::default()).unwrap())
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn rational(p: &Param) -> Rational {
    p.as_rational().cloned().unwrap_or_else(|| panic!("inexact parameter {p}"))
}

#[test]
fn seeded_table() {
    let cases = [
        ("0", "x^3", "power-law", 2),
        ("0", "exp(2*x)", "exponential", 2),
        ("0", "x^(-3)", "inverse-cube", 3),
        ("0", "x + x^(-3)", "ermakov-pinney", 3),
        ("0", "x", "linear", 8),
        ("1/x", "x/2", "linear", 8),
        ("1", "exp(-4*x)", "inverse-cube", 3),
        ("0", "exp(x) + x^2", "generic", 1),
    ];
    for (f, g, name, dim) in cases {
        let r = run(f, g);
        assert_eq!((r.case.name(), r.dimension()), (name, dim), "{f}, {g}: {:?}", r.trace);
        assert!(!r.inconclusive);
        assert!(r.generators.iter().any(SymmetryGenerator::is_time_translation));
        assert!(r.certified(), "{f}, {g}: {:?}", r.generators);
    }
}

#[test]
fn seeded_parameters() {
    match run("0", "x^3").case {
        CaseTag::PowerLaw { n, alpha, beta } => {
            assert_eq!((rational(&n), rational(&alpha), rational(&beta)), (q(3, 1), q(0, 1), q(1, 1)));
        }
        other => panic!("{other}"),
    }
    match run("0", "exp(2*x)").case {
        CaseTag::Exponential { gamma } => assert_eq!(rational(&gamma), q(2, 1)),
        other => panic!("{other}"),
    }
    match run("0", "x^(-3)").case {
        CaseTag::InverseCube { shift, strength } => {
            assert_eq!((rational(&shift), rational(&strength)), (q(0, 1), q(1, 1)));
        }
        other => panic!("{other}"),
    }
    match run("0", "x + x^(-3)").case {
        CaseTag::ErmakovPinney { alpha, beta, shift } => {
            assert_eq!((rational(&alpha), rational(&beta), rational(&shift)), (q(1, 1), q(1, 1), q(0, 1)));
        }
        other => panic!("{other}"),
    }
    match run("1/x", "x/2").case {
        CaseTag::Linear { kind, slope, offset } => {
            assert_eq!(kind, LinearKind::Homogeneous);
            assert_eq!((rational(&slope), rational(&offset)), (q(1, 1), q(0, 1)));
        }
        other => panic!("{other}"),
    }
    // Φ = exp(x) turns exp(-3x) into y^-3
    match run("1", "exp(-4*x)").case {
        CaseTag::InverseCube { shift, strength } => {
            assert_eq!((rational(&shift), rational(&strength)), (q(0, 1), q(1, 1)));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn power_parameters() {
    let power = |g: &str| match run("0", g).case {
        CaseTag::PowerLaw { n, alpha, beta } => (rational(&n), rational(&alpha), rational(&beta)),
        other => panic!("{g}: {other}"),
    };
    assert_eq!(power("(1 + 2*x)^2"), (q(2, 1), q(1, 1), q(2, 1)));
    assert_eq!(power("x^2"), (q(2, 1), q(0, 1), q(1, 1)));
    assert_eq!(power("(3*x - 1)^(1/2)"), (q(1, 2), q(-1, 1), q(3, 1)));
}

#[test]
fn ermakov_pinney_shifted() {
    // 4(x + 1) + 7(x + 1)^-3
    match run("0", "4*(x + 1) + 7*(x + 1)^(-3)").case {
        CaseTag::ErmakovPinney { alpha, beta, shift } => {
            assert_eq!((rational(&alpha), rational(&beta), rational(&shift)), (q(4, 1), q(7, 1), q(1, 1)));
        }
        other => panic!("{other}"),
    }
    let r = run("0", "exp(x) + x^2");
    assert!(r.trace.iter().any(|t| t.test.starts_with("F - u F'") && t.decision.is_no())
        || r.trace.iter().any(|t| t.test == "du/dy == 1" && t.decision.is_no()));
}

#[test]
fn ermakov_pinney_identities_hold_for_symbolic_parameters() {
    // F = a u + b u^-3 in u = y + c, with a, b, c named constants
    let p = |s: &str| parse_with(s, &["y"], &["a", "b", "c"]).unwrap();
    let f = p("a*(y + c) + b*(y + c)^(-3)");
    let d = |e: &Expr| differentiate(e, "y");
    let (f1, f2) = (d(&f), d(&d(&f)));
    let f3 = d(&f2);
    let u = normalize(&(Expr::int(-5) * f2.clone() / f3));
    assert_eq!(u, normalize(&p("y + c")));
    assert_eq!(d(&u), Expr::one());
    let identity = f.clone() - u.clone() * f1.clone() - u.clone().powi(2) * f2.clone() / Expr::int(3);
    assert_eq!(normalize(&identity), Expr::zero());
    assert_eq!(normalize(&(f2.clone() * u.clone().powi(5) / Expr::int(12))), p("b"));
    assert_eq!(normalize(&(f1 + f2 * u / Expr::int(4))), p("a"));
}

#[test]
fn linear_subcases() {
    let kind = |f: &str, g: &str| match run(f, g).case {
        CaseTag::Linear { kind, .. } => kind,
        other => panic!("{other}"),
    };
    assert_eq!(kind("0", "0"), LinearKind::Zero);
    assert_eq!(kind("0", "3"), LinearKind::Constant);
    assert_eq!(kind("0", "5*x"), LinearKind::Homogeneous);
    assert_eq!(kind("0", "x + 2"), LinearKind::Affine);
    assert_eq!(kind("0", "-x"), LinearKind::Homogeneous);
}

#[test]
fn branch_order_is_recorded() {
    let r = run("0", "exp(x) + x^2");
    let tests: Vec<&str> = r.trace.iter().map(|t| t.test.as_str()).collect();
    assert_eq!(&tests[..3], &["G == 0", "F'' == 0", "K constant"]);
    assert!(r.trace.iter().all(|t| !t.decision.is_unknown()));
    let r = run("0", "x^3");
    assert!(r.trace[0].decision.is_no() && r.trace[1].decision.is_no() && r.trace[2].decision.is_yes());
    assert!(r.is_symbolic());
}

#[test]
fn numeric_route_without_symbolic_transform() {
    // f = x: M = exp(x^2/2) symbolic, Φ only by quadrature; g = M^-1 Φ^-3 is
    // not writable, but g = exp(-x^2/2) gives F = 1, a constant force
    let r = run("x", "exp(-x^2/2)");
    assert_eq!(r.dimension(), 8, "{:?}", r.trace);
    assert!(r.transform.phi.is_none());
    assert!(r.certified());
    // M itself numeric: f = exp(x^2), g = 0 is still the free particle
    let r = run("exp(x^2)", "0");
    assert_eq!(r.dimension(), 8);
}

#[test]
fn scaling_keeps_dimension() {
    for (f, g) in [("0", "x^3"), ("0", "exp(2*x)"), ("0", "x + x^(-3)"), ("1", "exp(-4*x)"), ("0", "exp(x) + x^2")] {
        let base = run(f, g).dimension();
        for c in ["1/3", "2", "7"] {
            assert_eq!(run(f, &format!("{c}*({g})")).dimension(), base, "{c} * {g}");
        }
    }
}

#[test]
fn harmonic_generators_certify() {
    // α = -1 gives exponential time dependence, α = 2 trigonometric
    for g in ["-x + x^(-3)", "2*x + 3*x^(-3)", "x + 1", "-4*x"] {
        let r = run("0", g);
        assert!(r.certified(), "{g}: {:?}", r.generators);
    }
}

#[test]
fn generators_pull_back() {
    let r = run("1/x", "x/2");
    let dt = &r.generators[0];
    assert_eq!(dt.tau_x, Some(Expr::one()));
    assert_eq!(dt.eta_x, Some(Expr::zero()));
    let r = run("0", "x^3");
    let g = &r.generators[1];
    // Φ = x, so the coefficients carry over unchanged
    assert_eq!(g.tau_x.as_ref(), Some(&g.tau));
    assert_eq!(g.eta_x, Some(crate::expr::substitute(&g.eta, "y", &Expr::var("x"))));
}
