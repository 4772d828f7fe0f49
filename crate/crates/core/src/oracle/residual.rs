//! Residual checks: transformation consistency, prolonged symmetry
//! condition and numeric constancy.

use crate::classify::SymmetryGenerator;
use crate::expr::{differentiate, eval_scaled, halton, normalize, Bindings, EvalError, Expr, Interval, TriState};
use crate::oracle::ode::{energy_drift, integrate_lienard, State, Trajectory, Truncation, POLE_GUARD};
use crate::transform::{LienardInput, TransformData};

/// Formal symbols of the prolonged condition.
pub const T: &str = "t";
pub const Y: &str = "y";
pub const Y_DOT: &str = "p";
const FORCE: &str = "%F";
const FORCE_SLOPE: &str = "%dF";

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// Sample point of the maximum.
    pub argmax: Vec<f64>,
    pub n_samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn from_samples(samples: impl IntoIterator<Item = (f64, Vec<f64>)>, tolerance: f64) -> Self {
        let mut max_abs = 0.0f64;
        let mut argmax = Vec::new();
        let mut n_samples = 0;
        for (r, at) in samples {
            n_samples += 1;
            let r = if r.is_nan() { f64::INFINITY } else { r };
            if argmax.is_empty() || r > max_abs {
                max_abs = r;
                argmax = at;
            }
        }
        ResidualReport {
            max_abs,
            argmax,
            n_samples,
            tolerance,
            pass: n_samples > 0 && max_abs < tolerance,
        }
    }
}

/// Solution of the original equation mapped into canonical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformationCheck {
    pub trajectory: Trajectory,
    /// `(y, y')` at every trajectory time.
    pub mapped: Vec<(f64, f64)>,
    pub residual: ResidualReport,
    /// Set when the comparison stopped early because the difference stencil
    /// no longer resolves the solution (steep approach to a pole or blow-up).
    pub unresolved: Option<Truncation>,
}

impl TransformationCheck {
    /// Time up to which the comparison ran.
    pub fn resolved_until(&self) -> f64 {
        match (&self.unresolved, self.trajectory.last()) {
            (Some(cut), _) => cut.time,
            (None, Some((t, _))) => t,
            (None, None) => 0.0,
        }
    }

    /// Drift of the canonical energy `y'^2/2 + V` over the resolved part,
    /// with `V` the symbolic potential in `x`. `None` when `V` is unavailable.
    pub fn energy_drift(&self, data: &TransformData) -> Option<Result<f64, EvalError>> {
        let v = data.potential()?;
        let end = self.resolved_until();
        let resolved = Trajectory {
            times: self.trajectory.times.iter().copied().take_while(|&t| t <= end).collect(),
            states: Vec::new(),
            ..self.trajectory.clone()
        };
        let n = resolved.times.len();
        let states = self.trajectory.states[..n]
            .iter()
            .zip(&self.mapped)
            .map(|(s, &(_, dy))| State {
                position: s.position,
                velocity: dy,
            })
            .collect();
        let resolved = Trajectory { states, ..resolved };
        Some(energy_drift(&resolved, |x| data.eval_at(&v, x)))
    }
}

/// `y = Φ(x)`, `y' = M(x) x'` along a trajectory.
pub fn map_to_canonical(traj: &Trajectory, data: &TransformData) -> Result<Vec<(f64, f64)>, EvalError> {
    traj.states
        .iter()
        .map(|s| Ok((data.phi_at(s.position)?, data.m_at(s.position)? * s.velocity)))
        .collect()
}

/// Share of the tolerance the discretization error may take.
pub const RESOLUTION: f64 = 0.1;

/// Integrates the original equation, maps the solution through `Φ` and
/// checks `d/dt (M x') + M g = 0` by central differences at interior points.
///
/// The derivative of `y'` uses the fourth-order five-point stencil. The
/// same residual computed on a run with step `h/2` separates discretization
/// error, which shrinks with the step, from a wrong transformation, which
/// does not. Their difference, scaled by `16/15`, estimates the numerical
/// part of the coarse residual. The comparison ends at the first point where
/// that estimate reaches [`RESOLUTION`] of `tol`: beyond it integrator and
/// stencil no longer resolve the solution (steep approach to a pole or a
/// blow-up), and a small residual there would certify nothing.
pub fn check_transformation(
    input: &LienardInput,
    data: &TransformData,
    x0: f64,
    v0: f64,
    t_end: f64,
    h: f64,
    tol: f64,
) -> Result<TransformationCheck, EvalError> {
    let trajectory = integrate_lienard(input, x0, v0, t_end, h);
    let mapped = map_to_canonical(&trajectory, data)?;
    let fine = integrate_lienard(input, x0, v0, t_end, h / 2.0);
    let fine_mapped = map_to_canonical(&fine, data)?;
    let coarse = residual_series(&trajectory, &mapped, data, h)?;
    let refined = residual_series(&fine, &fine_mapped, data, h / 2.0)?;
    let mut samples = Vec::new();
    let mut unresolved = None;
    for (i, r) in coarse.iter().enumerate() {
        let Some(r) = r else { continue };
        let resolved = refined
            .get(2 * i)
            .copied()
            .flatten()
            .is_some_and(|q| (r - q).abs() * 16.0 / 15.0 < RESOLUTION * tol);
        if !resolved {
            unresolved = Some(Truncation {
                time: trajectory.times[i],
                reason: "step no longer resolves the solution".into(),
            });
            break;
        }
        samples.push((r.abs(), vec![trajectory.times[i]]));
    }
    Ok(TransformationCheck {
        residual: ResidualReport::from_samples(samples, tol),
        trajectory,
        mapped,
        unresolved,
    })
}

/// Signed `d/dt y' + G` at every point with a full five-point stencil.
fn residual_series(
    traj: &Trajectory,
    mapped: &[(f64, f64)],
    data: &TransformData,
    h: f64,
) -> Result<Vec<Option<f64>>, EvalError> {
    let v = |i: usize| mapped[i].1;
    (0..mapped.len())
        .map(|i| {
            if i < 2 || i + 2 >= mapped.len() {
                return Ok(None);
            }
            let accel = (-v(i + 2) + 8.0 * v(i + 1) - 8.0 * v(i - 1) + v(i - 2)) / (12.0 * h);
            Ok(Some(accel + data.eval_at(&data.g, traj.states[i].position)?))
        })
        .collect()
}

/// Time derivative aware of the harmonic symbols of a generator.
fn d_t(gen: &SymmetryGenerator, e: &Expr) -> Expr {
    let mut parts = vec![differentiate(e, T)];
    if let Some(h) = &gen.harmonic {
        let (c, s) = (h.cos_symbol(), h.sin_symbol());
        parts.push(differentiate(e, c) * -(h.omega.clone() * Expr::var(s)));
        parts.push(differentiate(e, s) * h.omega.clone() * Expr::var(c));
    }
    normalize(&Expr::Sum(parts))
}

/// `D = ∂t + y' ∂y` on functions of `(t, y)`.
fn total(gen: &SymmetryGenerator, e: &Expr) -> Expr {
    normalize(&(d_t(gen, e) + Expr::var(Y_DOT) * differentiate(e, Y)))
}

/// The second-prolongation condition for `y'' + F(y) = 0`, with `F` and
/// `F'` as formal symbols: `η⁽²⁾ + η F'` on `y'' = -F`.
pub fn prolonged_condition(gen: &SymmetryGenerator) -> Expr {
    let p = Expr::var(Y_DOT);
    let force = Expr::var(FORCE);
    let d_tau = total(gen, &gen.tau);
    let eta1 = normalize(&(total(gen, &gen.eta) - p.clone() * d_tau.clone()));
    let eta2 = total(gen, &eta1) - force.clone() * differentiate(&eta1, Y_DOT) + force * d_tau;
    normalize(&(eta2 + gen.eta.clone() * Expr::var(FORCE_SLOPE)))
}

/// Box of the residual samples.
pub const TIME_RANGE: (f64, f64) = (-2.0, 2.0);
pub const VELOCITY_RANGE: (f64, f64) = (-2.0, 2.0);

/// Maximum of the prolonged symmetry condition over Halton points in
/// `t × y × y'`, with `y = Φ(x)` for `x` in the transform domain.
pub fn symmetry_residual(gen: &SymmetryGenerator, data: &TransformData, samples: usize, tol: f64) -> ResidualReport {
    let condition = prolonged_condition(gen);
    let slope = data.d_dy(&data.g);
    let domain = data.domain;
    let lerp = |(lo, hi): (f64, f64), u: f64| lo + u * (hi - lo);
    let mut points = Vec::new();
    let mut index = 0u64;
    // skipped points still advance the sequence
    while points.len() < samples && index < 20 * samples as u64 + 20 {
        index += 1;
        let t = lerp(TIME_RANGE, halton(index, 2));
        let x = domain.at(halton(index, 3));
        let p = lerp(VELOCITY_RANGE, halton(index, 5));
        let Some(values) = force_values(data, &slope, x) else {
            continue;
        };
        let mut b = Bindings::new();
        b.insert(T.into(), t);
        b.insert(Y.into(), values.0);
        b.insert(Y_DOT.into(), p);
        b.insert(FORCE.into(), values.1);
        b.insert(FORCE_SLOPE.into(), values.2);
        if let Some(h) = &gen.harmonic {
            let w = h.omega_value() * t;
            b.insert(h.cos_symbol().into(), w.cos());
            b.insert(h.sin_symbol().into(), w.sin());
        }
        let r = eval_scaled(&condition, &b).map(|s| s.value.abs()).unwrap_or(f64::NAN);
        points.push((r, vec![t, values.0, p]));
    }
    ResidualReport::from_samples(points, tol)
}

/// `(Φ, F, F')` at `x`, or `None` inside the pole guard band.
fn force_values(data: &TransformData, slope: &Expr, x: f64) -> Option<(f64, f64, f64)> {
    let mut b = Bindings::new();
    data.bind(x, &mut b).ok()?;
    let g = eval_scaled(&data.g, &b).ok()?;
    let s = eval_scaled(slope, &b).ok()?;
    if g.min_denominator.min(s.min_denominator) < POLE_GUARD {
        return None;
    }
    Some((data.phi_at(x).ok()?, g.value, s.value))
}

/// Constancy by sampling alone: constant when the spread of values over
/// `n` Halton points is below `tol` relative to the mean.
pub fn numeric_constancy<F>(e: F, domain: &Interval, n: usize, tol: f64) -> (TriState, Option<f64>)
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    assert!(n >= 16, "at least 16 samples");
    let values: Vec<f64> = (1..=n as u64)
        .filter_map(|i| e(domain.at(halton(i, 2))).ok().filter(|v| v.is_finite()))
        .collect();
    if values.len() * 2 < n {
        return (TriState::Unknown, None);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if (hi - lo) / (1.0 + mean.abs()) < tol {
        (TriState::Yes, Some(mean))
    } else {
        (TriState::No, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::SymmetryGenerator;
    use crate::expr::parse_with;

    fn ty(s: &str) -> Expr {
        parse_with(s, &[T, Y], &[]).unwrap()
    }

    fn data(f: &str, g: &str) -> TransformData {
        TransformData::new(&LienardInput::parse(f, g, Interval::default()).unwrap())
    }

    #[test]
    fn time_translation_is_exact() {
        let gen = SymmetryGenerator::new(Expr::one(), Expr::zero());
        assert_eq!(prolonged_condition(&gen), Expr::zero());
        let r = symmetry_residual(&gen, &data("0", "exp(x) + x^2"), 100, 1e-8);
        assert!(r.pass && r.max_abs == 0.0 && r.n_samples == 100);
    }

    #[test]
    fn exponential_scaling_generator() {
        let gen = SymmetryGenerator::new(ty("t"), ty("-1"));
        let r = symmetry_residual(&gen, &data("0", "exp(2*x)"), 100, 1e-8);
        assert!(r.max_abs < 1e-12, "{r:?}");
    }

    #[test]
    fn wrong_generator_fails() {
        let gen = SymmetryGenerator::new(ty("t"), ty("-y"));
        let r = symmetry_residual(&gen, &data("0", "exp(x)"), 100, 1e-8);
        assert!(!r.pass && r.max_abs > 1e-2);
    }

    #[test]
    fn constancy_by_sampling() {
        let d = Interval::default();
        let ratio = |x: f64| Ok(x.exp() / x.exp());
        let (s, v) = numeric_constancy(ratio, &d, 64, 1e-9);
        assert_eq!(s, TriState::Yes);
        assert!((v.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(numeric_constancy(Ok, &d, 64, 1e-9).0, TriState::No);
        let undefined = |_: f64| Err(EvalError::Domain("nowhere".into()));
        assert_eq!(numeric_constancy(undefined, &d, 64, 1e-9).0, TriState::Unknown);
    }

    #[test]
    fn k_of_generic_force_is_not_constant() {
        let td = data("0", "exp(x) + x^2");
        let k = crate::transform::invariant_k(&td).unwrap();
        let (s, _) = numeric_constancy(|x| td.eval_at(&k, x), &td.domain, 64, 1e-9);
        assert_eq!(s, TriState::No);
    }

    #[test]
    fn transformation_of_the_identity_map() {
        let input = LienardInput::parse("0", "x^3", Interval::default()).unwrap();
        let td = TransformData::new(&input);
        let c = check_transformation(&input, &td, 1.0, 0.0, 5.0, 1e-3, 1e-6).unwrap();
        assert!(c.residual.pass, "{:?}", c.residual);
        assert!(c.trajectory.truncated.is_none() && c.unresolved.is_none());
    }

    #[test]
    fn steep_pole_approach_ends_the_comparison() {
        // x + x^-3 always falls into the pole at 0
        let input = LienardInput::parse("0", "x + x^(-3)", Interval::default()).unwrap();
        let td = TransformData::new(&input);
        let c = check_transformation(&input, &td, 2.0, 0.0, 5.0, 1e-3, 1e-6).unwrap();
        assert!(c.residual.pass, "{:?}", c.residual);
        assert!(c.energy_drift(&td).unwrap().unwrap() < 1e-7);
        assert!(c.trajectory.truncated.is_some());
        let stop = c.unresolved.unwrap().time;
        assert!(stop > 0.5 && stop < c.trajectory.truncated.unwrap().time, "{stop}");
    }

    #[test]
    fn wrong_transformation_is_caught() {
        // claim Φ = x for f = 1/x
        let input = LienardInput::parse("1/x", "x/2", Interval::default()).unwrap();
        let wrong = TransformData::new(&LienardInput::parse("0", "x/2", Interval::default()).unwrap());
        let c = check_transformation(&input, &wrong, 1.0, 0.0, 5.0, 1e-3, 1e-6).unwrap();
        assert!(!c.residual.pass && c.residual.max_abs > 1e-2);
    }
}
