//! Stage orchestration: solve → orbit → hypotheses → independence → eval →
//! bounds → probe.

use std::fmt::Write as _;
use std::time::Instant;

use mahler::bounds::{dirichlet_exponent, exponents, thresholds, trdeg_bounds, Params, Theorem};
use mahler::evaluator::{eval_diagonal, eval_general, make_point, PointStyle};
use mahler::independence::{certify, ConditionB};
use mahler::orbit::{check_hypotheses, compute_orbit, Iterate, OrbitCertificate};
use mahler::probe::{find_relation, measure_consistency, RelationQuery};
use mahler::system::{explicit_diagonal_series, residual, solve_series};
use mahler::{Ball, Dyadic, Error, Rational};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::problem::{rational_string, Settings, System};
use crate::report;

/// Iterations allowed before the orbit must reach the certified basin.
const MAX_ORBIT_ITER: usize = 64;
/// Extra bits demanded of values handed to the lattice.
const PROBE_GUARD_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Orbit,
    Check,
    Eval,
    Bounds,
    Probe,
    Full,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Orbit => "orbit",
            Command::Check => "check",
            Command::Eval => "eval",
            Command::Bounds => "bounds",
            Command::Probe => "probe",
            Command::Full => "full",
        }
    }

    fn stages(self) -> &'static [StageKind] {
        use StageKind::*;
        match self {
            Command::Solve => &[Solve],
            Command::Orbit => &[Orbit],
            Command::Check => &[Orbit, Hypotheses, Independence],
            Command::Eval => &[Orbit, Hypotheses, Eval],
            Command::Bounds => &[Bounds],
            Command::Probe => &[Orbit, Hypotheses, Eval, Bounds, Probe],
            Command::Full => &[Solve, Orbit, Hypotheses, Independence, Eval, Bounds, Probe],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StageKind {
    Solve,
    Orbit,
    Hypotheses,
    Independence,
    Eval,
    Bounds,
    Probe,
}

impl StageKind {
    fn name(self) -> &'static str {
        match self {
            StageKind::Solve => "solve",
            StageKind::Orbit => "orbit",
            StageKind::Hypotheses => "hypotheses",
            StageKind::Independence => "independence",
            StageKind::Eval => "eval",
            StageKind::Bounds => "bounds",
            StageKind::Probe => "probe",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    NotApplicable,
    Skipped,
    HypothesisFailure,
    Error,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotApplicable => "not_applicable",
            Status::Skipped => "skipped",
            Status::HypothesisFailure => "hypothesis_failure",
            Status::Error => "error",
        }
    }
}

fn classify(e: &Error) -> Status {
    match e {
        Error::DivergenceNotRuledOut(_) | Error::OrbitHitsZero(_) | Error::Inconclusive(_) | Error::HypothesisViolated(_) => {
            Status::HypothesisFailure
        }
        _ => Status::Error,
    }
}

struct StageOut {
    status: Status,
    body: Value,
}

impl StageOut {
    fn ok(body: Value) -> Self {
        StageOut { status: Status::Ok, body }
    }

    fn failed(e: &Error) -> Self {
        StageOut { status: classify(e), body: json!({ "error": e.to_string() }) }
    }

    fn skipped(reason: &str) -> Self {
        StageOut { status: Status::Skipped, body: json!({ "reason": reason }) }
    }
}

pub struct Outcome {
    pub stages: Map<String, Value>,
    pub exit_code: i32,
    pub text: String,
}

struct Runner<'a> {
    system: &'a System,
    y: &'a Rational,
    settings: &'a Settings,
    orbit: Option<OrbitCertificate>,
    hypotheses_ok: bool,
    hypotheses_checked: bool,
    independent: Option<bool>,
    values: Option<(Vec<Ball>, bool)>,
    params: Option<Params>,
    text: String,
}

pub fn run(command: Command, system: &System, y: &Rational, settings: &Settings, timing: bool) -> Outcome {
    let mut r = Runner { system, y, settings, orbit: None, hypotheses_ok: false, hypotheses_checked: false, independent: None, values: None, params: None, text: String::new() };
    let mut stages = Map::new();
    let mut worst = Status::Ok;
    for &kind in command.stages() {
        let start = Instant::now();
        let out = match kind {
            StageKind::Solve => r.solve(),
            StageKind::Orbit => r.orbit(),
            StageKind::Hypotheses => r.hypotheses(),
            StageKind::Independence => r.independence(),
            StageKind::Eval => r.eval(),
            StageKind::Bounds => r.bounds(),
            StageKind::Probe => r.probe(),
        };
        let elapsed = start.elapsed();
        if out.status != Status::Ok {
            let _ = writeln!(r.text, "[{}] {}", kind.name(), out.status.name());
            if let Some(e) = out.body.get("error").and_then(Value::as_str) {
                let _ = writeln!(r.text, "  {e}");
            }
        }
        worst = worst.max(out.status);
        let mut body = match out.body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        body.insert("status".into(), json!(out.status.name()));
        if timing {
            body.insert("elapsed_ms".into(), json!(elapsed.as_secs_f64() * 1e3));
        }
        stages.insert(kind.name().into(), Value::Object(body));
    }
    let exit_code = match worst {
        Status::Error => 1,
        Status::HypothesisFailure => 2,
        _ => 0,
    };
    Outcome { stages, exit_code, text: r.text }
}

fn iterate_json(w: &Iterate, prec: u32) -> Value {
    match w.as_exact() {
        Some(q) => report::exact(q),
        None => report::ball(&w.to_ball(prec)),
    }
}

impl Runner<'_> {
    fn solve(&mut self) -> StageOut {
        let ms = self.system.general();
        let order = self.settings.truncation;
        let sol = match solve_series(&ms, order) {
            Ok(s) => s,
            Err(e) => return StageOut::failed(&e),
        };
        let residual_zero = match residual(&ms, &sol, order) {
            Ok(r) => r.iter().all(|s| s.is_zero()),
            Err(e) => return StageOut::failed(&e),
        };
        let agrees = self.system.diagonal().map(|ds| explicit_diagonal_series(ds, order) == sol);
        let series: Vec<Vec<String>> =
            sol.series.iter().map(|s| s.coeffs().iter().map(rational_string).collect()).collect();
        let _ = writeln!(
            self.text,
            "Series solved to order {order}: residual {}{}",
            if residual_zero { "vanishes exactly" } else { "DOES NOT vanish" },
            match agrees {
                Some(true) => "; matches the closed form",
                Some(false) => "; DIFFERS from the closed form",
                None => "",
            }
        );
        let status = if residual_zero && agrees != Some(false) { Status::Ok } else { Status::Error };
        StageOut {
            status,
            body: json!({
                "order": order,
                "residual_zero": residual_zero,
                "agrees_with_closed_form": agrees,
                "series": series,
            }),
        }
    }

    fn orbit(&mut self) -> StageOut {
        let prec = self.settings.precision_bits;
        match compute_orbit(self.system.p(), self.y, MAX_ORBIT_ITER, prec) {
            Ok(o) => {
                let _ = writeln!(
                    self.text,
                    "Orbit of y = {}: enters |z| ≤ {} after {} step(s) (contraction {})",
                    rational_string(self.y),
                    rational_string(o.basin_radius()),
                    o.m(),
                    rational_string(o.contraction())
                );
                let body = json!({
                    "iterations_to_basin": o.m(),
                    "basin_radius": report::exact(o.basin_radius()),
                    "contraction": report::exact(o.contraction()),
                    "exact": o.exact(),
                    "iterates": o.iterates().iter().map(|w| iterate_json(w, prec)).collect::<Vec<_>>(),
                });
                self.orbit = Some(o);
                StageOut::ok(body)
            }
            Err(e) => StageOut::failed(&e),
        }
    }

    fn hypotheses(&mut self) -> StageOut {
        let Some(orbit) = &self.orbit else {
            return StageOut::skipped("no orbit");
        };
        let ms = self.system.general();
        match check_hypotheses(&ms, orbit) {
            Ok(rep) => {
                let all = rep.all_ok();
                let _ = writeln!(
                    self.text,
                    "Hypotheses along the orbit (w_m ≠ 0, det A(w_m) ≠ 0, a(w_m) ≠ 0, tail included): {}",
                    if all { "certified".to_string() } else { format!("FAIL at iterate {}", rep.failing_index.unwrap_or(0)) }
                );
                let body = json!({
                    "nonzero_ok": rep.nonzero_ok,
                    "det_a_ok": rep.det_a_ok,
                    "a_ok": rep.a_ok,
                    "all_ok": all,
                    "failing_index": rep.failing_index,
                    "iterates_checked": rep.orbit.iterates().len(),
                });
                self.hypotheses_ok = all;
                self.hypotheses_checked = true;
                self.orbit = Some(rep.orbit);
                StageOut { status: if all { Status::Ok } else { Status::HypothesisFailure }, body }
            }
            Err(e) => StageOut::failed(&e),
        }
    }

    fn independence(&mut self) -> StageOut {
        let Some(ds) = self.system.diagonal() else {
            return StageOut {
                status: Status::NotApplicable,
                body: json!({ "reason": "the criterion covers diagonal systems only" }),
            };
        };
        match certify(ds) {
            Ok(c) => {
                let b = match &c.condition_b {
                    ConditionB::Holds => json!({ "status": "holds" }),
                    ConditionB::Fails { s, g } => json!({
                        "status": "fails",
                        "s": s.iter().map(rational_string).collect::<Vec<_>>(),
                        "g": report::poly(g),
                    }),
                    ConditionB::NotAttempted => json!({ "status": "not_attempted" }),
                };
                let _ = writeln!(
                    self.text,
                    "Independence criterion: q linearly independent: {}; condition (a): {} (pivot degrees {:?}); condition (b): {}; conclusion: {}",
                    c.linear_ok,
                    if c.condition_a.holds() { "holds" } else { "fails" },
                    c.condition_a.pivot_degrees(),
                    b["status"].as_str().unwrap_or(""),
                    if c.conclusion { "algebraically independent over C(z)" } else { "not established" }
                );
                let body = json!({
                    "linear_independence": c.linear_ok,
                    "condition_a": { "holds": c.condition_a.holds(), "pivot_degrees": c.condition_a.pivot_degrees() },
                    "condition_b": b,
                    "conclusion": c.conclusion,
                });
                self.independent = Some(c.conclusion);
                StageOut { status: if c.conclusion { Status::Ok } else { Status::HypothesisFailure }, body }
            }
            Err(e @ (Error::NotPolynomial | Error::DegreeTooSmall(_))) => {
                StageOut { status: Status::NotApplicable, body: json!({ "reason": e.to_string() }) }
            }
            Err(e) => StageOut::failed(&e),
        }
    }

    fn evaluate(&self, tol: &Rational) -> Result<(Vec<Ball>, bool), Error> {
        let orbit = self.orbit.as_ref().expect("orbit computed");
        match self.system {
            System::Diagonal(ds) => Ok((eval_diagonal(ds, orbit, tol)?, true)),
            System::General(ms) => {
                let g = eval_general(ms, orbit, self.settings.truncation, tol)?;
                Ok((g.values, g.certified))
            }
        }
    }

    fn eval(&mut self) -> StageOut {
        if self.orbit.is_none() || !self.hypotheses_ok {
            return StageOut::skipped("orbit hypotheses not certified");
        }
        let (values, certified) = match self.evaluate(&self.settings.tol) {
            Ok(v) => v,
            Err(e) => return StageOut::failed(&e),
        };
        let style = if self.settings.theorem == 2 { PointStyle::Theorem2 } else { PointStyle::Theorem1 };
        let prec = values[0].prec();
        let yb = Ball::from_rational(self.y, prec);
        let point = match make_point(&values, style, Some(&yb), certified) {
            Ok(p) => p,
            Err(e) => return StageOut::failed(&e),
        };
        for (i, v) in values.iter().enumerate() {
            let (mid, rad) = report::ball_strings(v);
            let _ = writeln!(self.text, "f_{}(y) = {mid} ± {rad}{}", i + 1, if certified { "" } else { " (heuristic radius)" });
        }
        let body = json!({
            "tol": report::exact(&self.settings.tol),
            "certified": certified,
            "values": values.iter().map(report::ball).collect::<Vec<_>>(),
            "point": {
                "style": match style { PointStyle::Theorem1 => "(1 : f_1(y) : … : f_n(y))", PointStyle::Theorem2 => "(1 : y : f_1(y) : … : f_n(y))" },
                "coords": point.coords.iter().map(report::ball).collect::<Vec<_>>(),
            },
        });
        self.values = Some((values, certified));
        StageOut::ok(body)
    }

    fn bounds(&mut self) -> StageOut {
        let p = self.system.p();
        let Some(delta) = p.ord_zero() else {
            return StageOut::failed(&Error::InvalidArgument("p vanishes identically".into()));
        };
        let n = self.system.n() as u32;
        let params = match Params::new(n, p.degree() as u64, delta as u64) {
            Ok(pr) => pr,
            Err(e) => return StageOut::failed(&e),
        };
        self.params = Some(params);
        let prec = self.settings.precision_bits;
        let th = thresholds(&params, prec);
        let tb = trdeg_bounds(&params, prec);
        let rho = match params.rho_exact() {
            Some(q) => report::exact(&q),
            None => report::ball(&params.rho(prec)),
        };
        let mut exps = Vec::new();
        for theorem in [Theorem::T1, Theorem::T2, Theorem::T3] {
            for k in 0..n {
                let entry = match exponents(theorem, &params, k, &self.settings.epsilon, prec) {
                    Ok(rep) => json!({
                        "theorem": theorem.number(),
                        "k": k,
                        "admissible": true,
                        "inner": report::ball(&rep.inner),
                        "bracket": report::ball(&rep.bracket),
                        "degree_exp": report::ball(&rep.degree_exp),
                    }),
                    Err(Error::NotAdmissible { .. }) => json!({ "theorem": theorem.number(), "k": k, "admissible": false }),
                    Err(e) => return StageOut::failed(&e),
                };
                exps.push(entry);
            }
        }
        let dirichlet = dirichlet_exponent(&params);
        // Theorem 3 additionally needs f_i(0) = 0.
        let vanish_at_zero = solve_series(&self.system.general(), 0)
            .ok()
            .map(|sol| sol.series.iter().all(|f| f.coeff(0).is_zero()));
        let t = &mut self.text;
        let _ = writeln!(t, "Parameters: n = {n}, d = deg p = {}, δ = ord p = {delta}, ρ = log d / log δ", params.d);
        let _ = writeln!(t, "Theorem 1: admissible dimensions k < n + 1 − ρ = {}", th.t1.mid_decimal(12));
        let _ = writeln!(t, "Theorem 2: admissible dimensions k < n + 1 − 2ρ = {}", th.t2.mid_decimal(12));
        let _ = writeln!(t, "Theorem 3: admissible dimensions k < 2n + 1 − ρ(n + 1) = {}", th.t3.mid_decimal(12));
        for e in &exps {
            if e["admissible"] == json!(true) {
                let _ = writeln!(
                    t,
                    "  Theorem {} measure, k = {}: log Dist ≥ −C (h + d^{})^{} · d^{}",
                    e["theorem"],
                    e["k"],
                    e["inner"]["mid"].as_str().map(short).unwrap_or_default(),
                    e["bracket"]["mid"].as_str().map(short).unwrap_or_default(),
                    e["degree_exp"]["mid"].as_str().map(short).unwrap_or_default()
                );
            }
        }
        let _ = writeln!(t, "Corollary 1: trdeg Q(f_1(y), …, f_n(y)) ≥ {}", tb.cor1);
        if let Some(v) = tb.cor2 {
            let _ = writeln!(t, "Corollary 2 (ρ < 2): trdeg Q(f_1(y), …, f_n(y)) = {v}");
        }
        let _ = writeln!(t, "Corollary 3: trdeg Q(y, f_1(y), …, f_n(y)) ≥ {}", tb.cor3);
        if let Some(v) = tb.cor4 {
            let _ = writeln!(t, "Corollary 4 (ρ < 3/2): trdeg Q(y, f_1(y), …, f_n(y)) ≥ {v}");
        }
        let _ = writeln!(
            t,
            "Theorem 3: trdeg Q(f_1(y), …, f_n(y)) ≥ {} (ceiling {}, floor + 1 {})",
            tb.thm3_real.mid_decimal(12),
            tb.thm3_ceil,
            tb.thm3_floor_plus_one
        );
        match dirichlet {
            Some(v) => {
                let _ = writeln!(t, "Dirichlet-type measure exponent (d = δ): {v}");
            }
            None => {
                let _ = writeln!(t, "Dirichlet-type measure exponent: not available (d ≠ δ)");
            }
        }
        StageOut::ok(json!({
            "n": n,
            "d": params.d,
            "delta": params.delta,
            "p_is_polynomial": p.is_polynomial(),
            "epsilon": report::exact(&self.settings.epsilon),
            "rho": rho,
            "thresholds": { "theorem1": report::ball(&th.t1), "theorem2": report::ball(&th.t2), "theorem3": report::ball(&th.t3) },
            "exponents": exps,
            "trdeg": {
                "corollary1": tb.cor1,
                "corollary2": tb.cor2,
                "corollary3": tb.cor3,
                "corollary4": tb.cor4,
                "theorem3_real": report::ball(&tb.thm3_real),
                "theorem3_ceil": tb.thm3_ceil,
                "theorem3_floor_plus_one": tb.thm3_floor_plus_one,
            },
            "dirichlet_exponent": dirichlet,
            "hypotheses_verified": {
                "orbit_and_nonvanishing": self.hypotheses_checked.then_some(self.hypotheses_ok),
                "algebraic_independence": self.independent,
                "values_vanish_at_zero": vanish_at_zero,
            },
        }))
    }

    fn probe(&mut self) -> StageOut {
        if self.values.is_none() {
            return StageOut::skipped("no evaluated values");
        }
        let s = self.settings;
        let bits = s.precision_bits;
        let sharp_tol = Dyadic::pow2(-i64::from(2 * bits + PROBE_GUARD_BITS)).to_rational();
        let tol = if sharp_tol < s.tol { sharp_tol } else { s.tol.clone() };
        let (values, certified) = match self.evaluate(&tol) {
            Ok(v) => v,
            Err(e) => return StageOut::failed(&e),
        };
        let query = RelationQuery {
            values: values.clone(),
            max_degree: s.max_degree,
            max_height: BigInt::from(s.max_height),
            precision_bits: bits,
        };
        let rel = match find_relation(&query) {
            Ok(r) => r,
            Err(e) => return StageOut::failed(&e),
        };
        match &rel.found {
            Some(p) => {
                let _ = writeln!(self.text, "Relation probe (D = {}, H = {}, {bits} bits): found {p}", s.max_degree, s.max_height);
            }
            None => {
                let _ = writeln!(
                    self.text,
                    "Relation probe (D = {}, H = {}, {bits} bits): none (best ln|P(x)| ≈ {:.3}; {} candidate(s) failed the doubled-precision check)",
                    s.max_degree, s.max_height, rel.best_log_abs, rel.diagnostics.rejected
                );
            }
        }
        let relation = json!({
            "found": rel.found.as_ref().map(|p| p.to_string()),
            "value_at_point": rel.value_at_point.as_ref().map(report::ball),
            "best_log_abs": report::approx(rel.best_log_abs),
            "lattice_dim": rel.diagnostics.lattice_dim,
            "candidates_examined": rel.diagnostics.candidates_examined,
            "first_row_log2": report::approx(rel.diagnostics.first_row_log2),
            "hermite_log2": report::approx(rel.diagnostics.hermite_log2),
            "rejected_candidates": rel.diagnostics.rejected,
        });
        let consistency = self.consistency(&values);
        StageOut::ok(json!({
            "values_certified": certified,
            "max_degree": s.max_degree,
            "max_height": s.max_height,
            "precision_bits": bits,
            "relation": relation,
            "consistency": consistency,
        }))
    }

    fn consistency(&mut self, values: &[Ball]) -> Value {
        let s = self.settings;
        let theorem = Theorem::from_number(s.theorem).expect("validated");
        if theorem == Theorem::T2 {
            return json!({ "status": "skipped", "reason": "the Theorem 2 point also contains y" });
        }
        let Some(params) = self.params else {
            return json!({ "status": "skipped", "reason": "no bound parameters" });
        };
        let report = match exponents(theorem, &params, params.n - 1, &s.epsilon, 128) {
            Ok(r) => r,
            Err(e) => return json!({ "status": "skipped", "reason": e.to_string() }),
        };
        let r = match measure_consistency(values, &report, s.max_degree, s.max_height, s.trials, s.seed) {
            Ok(r) => r,
            Err(e) => return json!({ "status": "error", "reason": e.to_string() }),
        };
        let c_supplied = s.c.to_f64().unwrap_or(f64::INFINITY);
        let covers = r.fitted_c.map(|c| c <= c_supplied);
        let _ = writeln!(
            self.text,
            "Measure consistency (Theorem {}, k = n − 1, {} sample(s), seed {}): fitted C ≈ {}, {} violation(s){}",
            theorem.number(),
            r.scatter.len(),
            r.seed,
            r.fitted_c.map(|c| format!("{c:.4}")).unwrap_or_else(|| "n/a".into()),
            r.violations,
            match covers {
                Some(true) => format!("; C = {} suffices", rational_string(&s.c)),
                Some(false) => format!("; C = {} is too small", rational_string(&s.c)),
                None => String::new(),
            }
        );
        json!({
            "status": "ok",
            "theorem": theorem.number(),
            "k": params.n - 1,
            "seed": r.seed,
            "trials": r.trials,
            "exhaustive": r.exhaustive,
            "fitted_c": r.fitted_c.map(report::approx),
            "supplied_c": report::exact(&s.c),
            "supplied_c_suffices": covers,
            "violations": r.violations,
            "consistent": r.is_consistent(),
            "scatter": r.scatter.iter().map(|p| json!({
                "degree": p.degree,
                "height": p.height.to_string(),
                "shape": report::approx(p.shape),
                "log_abs": report::approx(p.log_abs),
            })).collect::<Vec<_>>(),
        })
    }
}

fn short(s: &str) -> String {
    let v: f64 = s.parse().unwrap_or(f64::NAN);
    let t = format!("{v:.6}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.into() }
}
