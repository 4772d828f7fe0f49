//! Running the pipeline for one configuration and rendering the result.

use std::fmt::Write;

use serde_json::{json, Value};

use lienard_core::classify::{classify_with, pulled_back_text, ClassifyOptions, SymmetryGenerator, SymmetryReport};
use lienard_core::expr::{normalize, substitute, Expr, SamplingPolicy};
use lienard_core::oracle::residual::{check_transformation, ResidualReport, TransformationCheck};
use lienard_core::selftest::{RESIDUAL_SAMPLES, STEP, T_END};
use lienard_core::transform::TransformData;

use crate::config::{Config, Mode};

/// Initial velocity of the verification trajectory; it starts at the
/// domain midpoint.
const V0: f64 = 0.0;

/// Identifiers standing for `cos(ωt)` and `sin(ωt)` in parseable output.
pub const COS_NAME: &str = "cos_wt";
pub const SIN_NAME: &str = "sin_wt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Certain,
    Inconclusive,
}

pub struct Report {
    pub symmetry: SymmetryReport,
    pub check: Option<Result<TransformationCheck, String>>,
    x0: f64,
}

impl Report {
    pub fn run(config: &Config) -> Self {
        let data = match config.mode {
            Mode::SymbolicFirst => TransformData::new(&config.input),
            Mode::NumericOnly => TransformData::numeric(&config.input),
        };
        let options = ClassifyOptions {
            policy: SamplingPolicy {
                samples: config.samples,
                tolerance: config.tolerances.constancy,
                ..SamplingPolicy::default()
            },
            residual_samples: RESIDUAL_SAMPLES,
            residual_tol: config.tolerances.residual,
        };
        let symmetry = classify_with(&data, &options);
        let domain = config.input.domain;
        let x0 = 0.5 * (domain.lo + domain.hi);
        let check = config.verify.then(|| {
            check_transformation(&config.input, &data, x0, V0, T_END, STEP, config.tolerances.transform)
                .map_err(|e| e.to_string())
        });
        Report { symmetry, check, x0 }
    }

    /// Certain when no decision was unknown, every generator certified and,
    /// under `--verify`, the transformation check passed.
    pub fn outcome(&self) -> Outcome {
        let verified = match &self.check {
            None => true,
            Some(Ok(c)) => c.residual.pass,
            Some(Err(_)) => false,
        };
        if !self.symmetry.inconclusive && self.symmetry.certified() && verified {
            Outcome::Certain
        } else {
            Outcome::Inconclusive
        }
    }

    pub fn to_json(&self, config: &Config) -> Value {
        let r = &self.symmetry;
        let printed = |e: &Option<Expr>| e.as_ref().map_or_else(|| json!("numeric"), |e| json!(e.to_string()));
        let params: serde_json::Map<String, Value> = r
            .case
            .params()
            .into_iter()
            .map(|(name, p)| {
                let exact = p.exact.as_ref().map(Expr::to_string);
                (name.to_string(), json!({ "exact": exact, "value": p.value }))
            })
            .collect();
        let mut case = json!({ "name": r.case.name(), "params": params });
        if let lienard_core::classify::CaseTag::Linear { kind, .. } = &r.case {
            case["kind"] = json!(kind.to_string());
        }
        let domain = config.input.domain;
        let mut out = json!({
            "input": {
                "f": config.f_text,
                "g": config.g_text,
                "f_normalized": normalize(&config.input.f).to_string(),
                "g_normalized": normalize(&config.input.g).to_string(),
            },
            "config": {
                "domain": [domain.lo, domain.hi],
                "mode": config.mode.to_string(),
                "verify": config.verify,
                "samples": config.samples,
                "tolerances": {
                    "constancy": config.tolerances.constancy,
                    "residual": config.tolerances.residual,
                    "transform": config.tolerances.transform,
                },
                "residual_samples": RESIDUAL_SAMPLES,
                "trajectory": { "x0": self.x0, "v0": V0, "t_end": T_END, "step": STEP },
            },
            "transform": {
                "M": printed(&r.transform.m),
                "Phi": printed(&r.transform.phi),
                "G": printed(&r.transform.g),
            },
            "case": case,
            "algebra": r.algebra(),
            "dimension": r.dimension(),
            "symbolic": r.is_symbolic(),
            "inconclusive": r.inconclusive,
            "generators": r.generators.iter().map(generator_json).collect::<Vec<_>>(),
            "decision_trace": r.trace.iter().map(|t| json!({
                "test": t.test,
                "decision": t.decision.state.to_string(),
                "grade": t.decision.grade.to_string(),
            })).collect::<Vec<_>>(),
            "notes": r.notes,
        });
        if let Some(check) = &self.check {
            out["verification"] = json!({
                "generators": r.generators.iter().map(|g| g.residual.as_ref().map(residual_json)).collect::<Vec<_>>(),
                "transformation": match check {
                    Ok(c) => json!({
                        "residual": residual_json(&c.residual),
                        "compared_until": c.resolved_until(),
                        "truncated": c.trajectory.truncated.as_ref().map(|t| json!({ "time": t.time, "reason": t.reason })),
                    }),
                    Err(e) => json!({ "error": e }),
                },
            });
        }
        out
    }

    pub fn to_text(&self, config: &Config) -> String {
        let r = &self.symmetry;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "equation: x'' + ({}) x'^2 + ({}) = 0, sampled on {}",
            config.f_text, config.g_text, config.input.domain
        );
        let shown = |e: &Option<Expr>| e.as_ref().map_or_else(|| "numeric (quadrature)".to_string(), Expr::to_string);
        let _ = writeln!(s, "M   = {}", shown(&r.transform.m));
        let _ = writeln!(s, "Phi = {}", shown(&r.transform.phi));
        let _ = writeln!(s, "G   = {}", shown(&r.transform.g));
        let _ = writeln!(s, "case: {}", r.case);
        let _ = writeln!(s, "algebra: {} (dimension {})", r.algebra(), r.dimension());
        let grade = if r.inconclusive {
            "inconclusive"
        } else if r.is_symbolic() {
            "symbolic"
        } else {
            "numeric"
        };
        let _ = writeln!(s, "resolution: {grade}");
        let _ = writeln!(s, "generators:");
        for g in &r.generators {
            let x = pulled_back_text(g).unwrap_or_else(|| "(no symbolic pullback)".into());
            let mark = if g.certified() { "ok" } else { "FAILED" };
            let residual = g.residual.as_ref().map_or(f64::NAN, |x| x.max_abs);
            let _ = writeln!(s, "  {g}\n      in x: {x}\n      residual {residual:.1e} {mark}");
        }
        let _ = writeln!(s, "decision trace:");
        for t in &r.trace {
            let _ = writeln!(s, "  {}: {} ({})", t.test, t.decision.state, t.decision.grade);
        }
        for n in &r.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if let Some(check) = &self.check {
            match check {
                Ok(c) => {
                    let _ = writeln!(
                        s,
                        "transformation check from x0 = {}: residual {:.1e} over t <= {:.3} {}",
                        self.x0,
                        c.residual.max_abs,
                        c.resolved_until(),
                        if c.residual.pass { "ok" } else { "FAILED" }
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "transformation check failed: {e}");
                }
            }
        }
        s
    }
}

fn residual_json(r: &ResidualReport) -> Value {
    json!({
        "max_abs": r.max_abs,
        "argmax": r.argmax,
        "n_samples": r.n_samples,
        "tolerance": r.tolerance,
        "pass": r.pass,
    })
}

/// Coefficient in the expression grammar, harmonic symbols renamed.
fn parseable(g: &SymmetryGenerator, e: &Expr) -> String {
    match &g.harmonic {
        Some(h) => {
            let e = substitute(e, h.cos_symbol(), &Expr::var(COS_NAME));
            substitute(&e, h.sin_symbol(), &Expr::var(SIN_NAME)).to_string()
        }
        None => e.to_string(),
    }
}

fn generator_json(g: &SymmetryGenerator) -> Value {
    let harmonic = g.harmonic.as_ref().map(|h| {
        json!({ "omega": h.omega.to_string(), "cos": COS_NAME, "sin": SIN_NAME })
    });
    json!({
        "t_y": g.to_string(),
        "t_x": pulled_back_text(g),
        "tau": parseable(g, &g.tau),
        "eta": parseable(g, &g.eta),
        "tau_x": g.tau_x.as_ref().map(|e| parseable(g, e)),
        "eta_x": g.eta_x.as_ref().map(|e| parseable(g, e)),
        "harmonic": harmonic,
        "residual": g.residual.as_ref().map(residual_json),
    })
}
