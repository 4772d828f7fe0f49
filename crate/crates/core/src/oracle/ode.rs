//! Classical fixed-step Runge-Kutta for autonomous `q'' = a(q, q')`.

use crate::expr::{eval_scaled, Bindings, EvalError, Expr};
use crate::transform::{LienardInput, VAR};

/// States closer than this to a pole of the right-hand side end the run.
pub const POLE_GUARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub position: f64,
    pub velocity: f64,
}

/// Why a run stopped before `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub step: f64,
    pub order: u32,
    /// Set when the run hit a pole or left the real domain.
    pub truncated: Option<Truncation>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        self.times.last().copied().zip(self.states.last().copied())
    }
}

/// Acceleration as a function of position and velocity.
pub trait Acceleration {
    fn accel(&self, q: f64, v: f64) -> Result<f64, EvalError>;
}

impl<F> Acceleration for F
where
    F: Fn(f64, f64) -> Result<f64, EvalError>,
{
    fn accel(&self, q: f64, v: f64) -> Result<f64, EvalError> {
        self(q, v)
    }
}

fn derivative(a: &dyn Acceleration, s: State) -> Result<State, EvalError> {
    let acc = a.accel(s.position, s.velocity)?;
    if !acc.is_finite() {
        return Err(EvalError::Domain("non-finite acceleration".into()));
    }
    Ok(State {
        position: s.velocity,
        velocity: acc,
    })
}

fn axpy(s: State, h: f64, d: State) -> State {
    State {
        position: s.position + h * d.position,
        velocity: s.velocity + h * d.velocity,
    }
}

fn rk4_step(a: &dyn Acceleration, s: State, h: f64) -> Result<State, EvalError> {
    let k1 = derivative(a, s)?;
    let k2 = derivative(a, axpy(s, 0.5 * h, k1))?;
    let k3 = derivative(a, axpy(s, 0.5 * h, k2))?;
    let k4 = derivative(a, axpy(s, h, k3))?;
    let out = State {
        position: s.position + h / 6.0 * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position),
        velocity: s.velocity + h / 6.0 * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity),
    };
    if out.position.is_finite() && out.velocity.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::Domain("state overflow".into()))
    }
}

/// Fourth-order integration from `(q0, v0)` at `t = 0` to `t_end`.
///
/// A failing right-hand side truncates the trajectory at the last good
/// state instead of aborting.
pub fn rk4(a: &dyn Acceleration, q0: f64, v0: f64, t_end: f64, h: f64) -> Trajectory {
    assert!(h > 0.0 && t_end >= 0.0, "step must be positive");
    let steps = (t_end / h).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        step: h,
        order: 4,
        truncated: None,
    };
    let mut s = State {
        position: q0,
        velocity: v0,
    };
    if let Err(e) = derivative(a, s) {
        traj.truncated = Some(Truncation {
            time: 0.0,
            reason: e.to_string(),
        });
        return traj;
    }
    traj.times.push(0.0);
    traj.states.push(s);
    for i in 1..=steps {
        match rk4_step(a, s, h) {
            Ok(next) => s = next,
            Err(e) => {
                traj.truncated = Some(Truncation {
                    time: (i - 1) as f64 * h,
                    reason: e.to_string(),
                });
                break;
            }
        }
        traj.times.push(i as f64 * h);
        traj.states.push(s);
    }
    traj
}

/// `-(f q'^2 + g)` with a guard band around poles of `f` and `g`.
struct LienardRhs<'a> {
    f: &'a Expr,
    g: &'a Expr,
    guard: f64,
}

impl Acceleration for LienardRhs<'_> {
    fn accel(&self, q: f64, v: f64) -> Result<f64, EvalError> {
        let mut b = Bindings::new();
        b.insert(VAR.to_string(), q);
        let f = eval_scaled(self.f, &b)?;
        let g = eval_scaled(self.g, &b)?;
        if f.min_denominator.min(g.min_denominator) < self.guard {
            return Err(EvalError::Domain(format!("pole guard reached at x = {q}")));
        }
        Ok(-(f.value * v * v + g.value))
    }
}

/// Integrates `x'' + f(x) x'^2 + g(x) = 0`.
pub fn integrate_lienard(input: &LienardInput, x0: f64, v0: f64, t_end: f64, h: f64) -> Trajectory {
    let rhs = LienardRhs {
        f: &input.f,
        g: &input.g,
        guard: POLE_GUARD,
    };
    rk4(&rhs, x0, v0, t_end, h)
}

/// Integrates `y'' + F(y) = 0` for an evaluable force.
pub fn integrate_canonical<F>(force: F, y0: f64, v0: f64, t_end: f64, h: f64) -> Trajectory
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let rhs = move |y: f64, _v: f64| force(y).map(|f| -f);
    rk4(&rhs, y0, v0, t_end, h)
}

/// Largest `|E(t) - E(0)| / (1 + |E(0)|)` along a trajectory, with
/// `E = v^2 / 2 + potential(q)`.
pub fn energy_drift<P>(traj: &Trajectory, potential: P) -> Result<f64, EvalError>
where
    P: Fn(f64) -> Result<f64, EvalError>,
{
    let mut e0 = None;
    let mut worst: f64 = 0.0;
    for s in &traj.states {
        let e = 0.5 * s.velocity * s.velocity + potential(s.position)?;
        let base = *e0.get_or_insert(e);
        worst = worst.max((e - base).abs() / (1.0 + base.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Interval};

    fn input(f: &str, g: &str) -> LienardInput {
        LienardInput::new(parse(f, "x").unwrap(), parse(g, "x").unwrap(), Interval::default()).unwrap()
    }

    #[test]
    fn free_particle() {
        let t = integrate_lienard(&input("0", "0"), 0.0, 1.0, 1.0, 1e-3);
        let (tf, s) = t.last().unwrap();
        assert!((tf - 1.0).abs() < 1e-12);
        assert!((s.position - 1.0).abs() < 1e-10);
        assert!(t.truncated.is_none());
    }

    #[test]
    fn harmonic_oscillator() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let h = 1e-3;
        let t = integrate_lienard(&input("0", "x"), 1.0, 0.0, half_pi, h);
        // the grid end sits within h/2 of pi/2, where x = cos t has slope -1
        let (tf, s) = t.last().unwrap();
        assert!((s.position - tf.cos()).abs() < 1e-8);
        assert!((half_pi - tf).abs() <= 0.5 * h);
    }

    #[test]
    fn inverse_cube_energy() {
        let t = integrate_lienard(&input("0", "x^-3"), 1.0, 0.0, 0.5, 1e-3);
        assert!(t.truncated.is_none());
        let drift = energy_drift(&t, |x| Ok(-0.5 / (x * x))).unwrap();
        assert!(drift < 1e-9, "{drift}");
    }

    #[test]
    fn pole_truncates() {
        // x'' = -1/x^3 from rest at x = 1 reaches x = 0 at t = 1
        let t = integrate_lienard(&input("0", "x^-3"), 1.0, 0.0, 5.0, 1e-3);
        let cut = t.truncated.as_ref().expect("pole");
        assert!(cut.time < 1.0);
        assert!(t.states.iter().all(|s| s.position >= POLE_GUARD));
    }

    #[test]
    fn canonical_forms() {
        let t = integrate_canonical(|_| Ok(0.0), 0.0, 2.0, 1.0, 1e-3);
        assert!((t.last().unwrap().1.position - 2.0).abs() < 1e-10);
        let t = integrate_canonical(Ok, 0.0, 1.0, 2.0, 1e-3);
        for (tt, s) in t.times.iter().zip(&t.states) {
            assert!((s.position - tt.sin()).abs() < 1e-10);
        }
        let t = integrate_canonical(|y: f64| Ok(y.exp()), 0.0, 0.0, 5.0, 1e-3);
        assert!(energy_drift(&t, |y| Ok(y.exp())).unwrap() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let t = integrate_canonical(Ok, 1.0, 0.0, 1.0, h);
            let (tf, s) = t.last().unwrap();
            (s.position - tf.cos()).abs()
        };
        let hs = [1e-2, 5e-3, 2.5e-3];
        for w in hs.windows(2) {
            let ratio = err(w[0]) / err(w[1]);
            assert!(ratio >= 8.0 * 0.9, "ratio {ratio}");
        }
    }
}
