//! Randomized property suites of the expression core.

use crate::expr::{
    antiderivative, differentiate, eval, eval_scaled, normalize, parse, sign_convention_holds, Bindings, Expr, Rational,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Seeded generator; `EXPR_SEED` shifts every suite to a different stream.
fn rng_for(suite: u64) -> StdRng {
    let shift = std::env::var("EXPR_SEED").ok().and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
    StdRng::seed_from_u64(suite.wrapping_add(shift.wrapping_mul(1000)))
}

fn small_rational(rng: &mut StdRng) -> Rational {
    let num: i64 = rng.gen_range(-5..=5);
    let den: i64 = rng.gen_range(1..=4);
    Rational::new(num.into(), den.into())
}

fn exponent(rng: &mut StdRng) -> Rational {
    const CHOICES: [(i64, i64); 10] = [(2, 1), (3, 1), (-1, 1), (-2, 1), (1, 2), (-1, 2), (1, 3), (3, 2), (-3, 1), (2, 3)];
    let (n, d) = CHOICES[rng.gen_range(0..CHOICES.len())];
    Rational::new(n.into(), d.into())
}

fn tree(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expr::var("x")
        } else {
            Expr::constant(small_rational(rng))
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 | 1 => Expr::Sum((0..rng.gen_range(2..=3)).map(|_| tree(rng, d)).collect()),
        2 | 3 => Expr::Product((0..rng.gen_range(2..=3)).map(|_| tree(rng, d)).collect()),
        4 => tree(rng, d).powq(exponent(rng)),
        5 => {
            if rng.gen_bool(0.5) {
                tree(rng, d).exp()
            } else {
                tree(rng, d).log()
            }
        }
        _ => Expr::Neg(Box::new(tree(rng, d))),
    }
}

fn point(x: f64) -> Bindings {
    let mut b = Bindings::new();
    b.insert("x".into(), x);
    b
}

fn at(e: &Expr, x: f64) -> Option<f64> {
    eval(e, &point(x)).ok().filter(|v| v.is_finite())
}


/// Normalizing twice changes nothing.
pub fn idempotent_normalization(count: usize) -> Result<(), String> {
    let mut rng = rng_for(11);
    for _ in 0..count {
        let e = tree(&mut rng, 4);
        let n = normalize(&e);
        if normalize(&n) != n {
            return Err(format!("{e} is not stable under normalization"));
        }
    }
    Ok(())
}

/// Printed trees, raw and normalized, parse back to the same canonical form.
pub fn parser_round_trip(count: usize) -> Result<(), String> {
    let mut rng = rng_for(12);
    for _ in 0..count {
        let e = tree(&mut rng, 4);
        let back = parse(&e.to_string(), "x").map_err(|err| format!("{e}: {err}"))?;
        if normalize(&back) != normalize(&e) {
            return Err(format!("{e} does not reparse"));
        }
        let n = normalize(&e);
        let back = parse(&n.to_string(), "x").map_err(|err| format!("{n}: {err}"))?;
        if normalize(&back) != n {
            return Err(format!("{e:?} -> {n} does not reparse"));
        }
    }
    Ok(())
}

/// Expressions defined, and away from singularities, at every probe point.
fn well_defined(rng: &mut StdRng, points: &[f64]) -> Expr {
    loop {
        let e = tree(rng, 4);
        if !e.depends_on("x") {
            continue;
        }
        let ok = points.iter().all(|&x| {
            let near = [x - 1e-2, x, x + 1e-2];
            let defined = near
                .iter()
                .all(|&p| at(&e, p).is_some_and(|v| v.abs() < 1e4) && sign_convention_holds(&e, &point(p)));
            // steep spots sit next to a pole
            defined && ((at(&e, near[2]).unwrap() - at(&e, near[0]).unwrap()) / 2e-2).abs() < 1e3
        });
        if ok {
            return e;
        }
    }
}


/// Largest relative error of the derivative against a central difference.
pub fn derivative_against_difference(count: usize, points: usize) -> Result<f64, String> {
    let mut rng = rng_for(13);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let xs: Vec<f64> = (0..points).map(|_| rng.gen_range(0.5..2.5)).collect();
        let e = well_defined(&mut rng, &xs);
        let d = differentiate(&e, "x");
        for &x in &xs {
            let fd = (at(&e, x + h).unwrap() - at(&e, x - h).unwrap()) / (2.0 * h);
            let value = at(&d, x).ok_or_else(|| format!("d/dx {e} = {d} undefined at {x}"))?;
            let err = (value - fd).abs() / (1.0 + value.abs());
            worst = worst.max(err);
            if err >= 1e-6 {
                return Err(format!("{e}: d = {d}, x = {x}, {value} vs {fd}"));
            }
        }
    }
    Ok(worst)
}

/// Normalization preserves values at well-defined points.
pub fn evaluation_commutes(count: usize) -> Result<(), String> {
    let mut rng = rng_for(14);
    for _ in 0..count {
        let xs: Vec<f64> = (0..5).map(|_| rng.gen_range(0.5..2.5)).collect();
        let e = well_defined(&mut rng, &xs);
        let n = normalize(&e);
        for &x in &xs {
            let a = eval_scaled(&e, &point(x)).map_err(|err| format!("{e}: {err}"))?;
            let b = eval_scaled(&n, &point(x)).map_err(|err| format!("{n}: {err}"))?;
            let scale = 1.0 + a.scale.max(b.scale);
            if (a.value - b.value).abs() > 1e-12 * scale {
                return Err(format!("{e} -> {n} at {x}: {} vs {}", a.value, b.value));
            }
        }
    }
    Ok(())
}

fn linear(rng: &mut StdRng) -> Expr {
    let a = small_rational(rng);
    let mut b = small_rational(rng);
    if b == Rational::from_integer(0.into()) {
        b = Rational::from_integer(1.into());
    }
    Expr::Sum(vec![Expr::constant(a), Expr::Product(vec![Expr::constant(b), Expr::var("x")])])
}

fn rule_base_term(rng: &mut StdRng) -> Expr {
    let c = Expr::constant(small_rational(rng));
    let body = match rng.gen_range(0..4) {
        0 => Expr::var("x").powq(exponent(rng)),
        1 => linear(rng).powq(exponent(rng)),
        2 => linear(rng).exp(),
        _ => Expr::Product(vec![
            Expr::var("x").powi(rng.gen_range(1..=3)),
            linear(rng).powq(exponent(rng)),
        ]),
    };
    Expr::Product(vec![c, body])
}


/// Antiderivatives of rule-base sums differentiate back exactly.
pub fn antiderivative_round_trip(count: usize) -> Result<(), String> {
    let mut rng = rng_for(15);
    for _ in 0..count {
        let e = Expr::Sum((0..rng.gen_range(1..=3)).map(|_| rule_base_term(&mut rng)).collect());
        let f = antiderivative(&e, "x").map_err(|err| format!("{e}: {err}"))?;
        if normalize(&differentiate(&f, "x")) != normalize(&e) {
            return Err(format!("{e}: {f}"));
        }
    }
    Ok(())
}
