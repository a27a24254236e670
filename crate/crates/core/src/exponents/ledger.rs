use super::{exponent_plan_f64, f, int, ExponentError, ExponentPlan};
use crate::constants::ImplicitConstants;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LedgerParams {
    pub n: usize,
    pub tau: f64,
    pub gamma: f64,
    pub big_r: f64,
    pub r: f64,
    pub s: f64,
    /// Bound on `|h|_{C^3}`; absorbed in the constant table, recorded for reference.
    pub m_bound: f64,
    pub eps: f64,
    pub constants: ImplicitConstants,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self { n: 2, tau: 2.0, gamma: 0.5, big_r: 1.0, r: 1.0, s: 1.0, m_bound: 1.0, eps: 1e-3, constants: ImplicitConstants::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Exact rational margin, passes iff positive. Independent of `ε`.
    Structural,
    /// `ε^e < C`, compared in `log10`.
    Power,
    /// Plain `lhs < rhs`.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub id: String,
    pub kind: RowKind,
    pub statement: String,
    /// Structural: the margin. Power: `e·log10 ε`. Direct: the left side.
    pub lhs: f64,
    /// Structural: 0. Power: `log10 C`. Direct: the right side.
    pub rhs: f64,
    /// Exact margin or exponent as a fraction.
    pub exact: Option<String>,
    /// `log10` of the largest `ε` passing the row, for power rows with `e > 0`.
    pub log10_threshold: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionLedger {
    pub params: LedgerParams,
    pub a_seq: Vec<String>,
    pub a: String,
    pub b: String,
    pub simplified: String,
    pub rows: Vec<ConditionRow>,
    pub passed: bool,
    /// Row with the smallest threshold (first in order on ties).
    pub binding: Option<String>,
    /// `log10 ε₀`, `None` when some row fails for every small `ε`.
    pub log10_eps0: Option<f64>,
}

fn structural(id: &str, statement: String, margin: BigRational) -> ConditionRow {
    ConditionRow {
        id: id.into(),
        kind: RowKind::Structural,
        statement,
        lhs: f(&margin),
        rhs: 0.0,
        exact: Some(margin.to_string()),
        log10_threshold: None,
        passed: margin.is_positive(),
    }
}

/// `ε^e < C` with `log10 C = log_c`.
fn power(id: &str, statement: String, e: BigRational, log_c: f64, eps: f64) -> ConditionRow {
    let ef = f(&e);
    let lhs = ef * eps.log10();
    let log10_threshold = if e.is_positive() { Some(log_c / ef) } else { None };
    let passed = if e.is_zero() { log_c > 0.0 } else { lhs < log_c };
    ConditionRow { id: id.into(), kind: RowKind::Power, statement, lhs, rhs: log_c, exact: Some(e.to_string()), log10_threshold, passed }
}

fn direct(id: &str, statement: String, lhs: f64, rhs: f64) -> ConditionRow {
    ConditionRow { id: id.into(), kind: RowKind::Direct, statement, lhs, rhs, exact: None, log10_threshold: None, passed: lhs < rhs }
}

/// Evaluates the primed conditions, the `(A_j)` clauses and the radius shape
/// behind `(B_j)` with the plan's exponents. Periods take their worst case
/// `T_j = ε^{-a_j(n-1)} r₀^{-2}` and `m = ε^{-a}`, `r₀ = ε^b`, `s_j = s`.
pub fn condition_ledger(params: &LedgerParams) -> Result<ConditionLedger, ExponentError> {
    let plan = exponent_plan_f64(params.n, params.tau)?;
    let rows = ledger_rows(&plan, params);
    let passed = rows.iter().all(|r| r.passed);
    let blocked = rows.iter().any(|r| match r.kind {
        RowKind::Structural => !r.passed,
        RowKind::Power => r.log10_threshold.is_none() && !r.passed,
        RowKind::Direct => false,
    });
    let mut binding = None;
    let mut best = f64::INFINITY;
    for r in &rows {
        if let Some(t) = r.log10_threshold {
            if t < best {
                best = t;
                binding = Some(r.id.clone());
            }
        }
    }
    let log10_eps0 = if blocked { None } else { Some(best) };
    Ok(ConditionLedger {
        params: params.clone(),
        a_seq: plan.a_seq.iter().map(|x| x.to_string()).collect(),
        a: plan.a.to_string(),
        b: plan.b.to_string(),
        simplified: plan.simplified.to_string(),
        rows,
        passed,
        binding: if blocked { None } else { binding },
        log10_eps0,
    })
}

fn ledger_rows(p: &ExponentPlan, q: &LedgerParams) -> Vec<ConditionRow> {
    let n = p.n;
    let nn = int(n as i64);
    let tau = &p.tau;
    let (a, b) = (&p.a, &p.b);
    let aj = |j: usize| p.a_j(j).clone();
    let two = int(2);
    let one = int(1);
    let lc = q.constants.threshold.log10();
    let ls = q.constants.smallness.log10();
    let eps = q.eps;
    let mut rows = Vec::new();

    for j in 1..n {
        let max_a = (1..=j).map(aj).max().unwrap();
        rows.push(structural("(i')", format!("a_{} - 2nτ max a_i - 4τb > 0, j = {j}", j + 1), aj(j + 1) - &two * &nn * tau * max_a - int(4) * tau * b));
    }
    for j in 1..n {
        rows.push(structural("(ii')", format!("1 - 2nτ a_{j} - 4τb > 0"), &one - &two * &nn * tau * aj(j) - int(4) * tau * b));
    }
    for j in 1..n {
        rows.push(structural("(iii')", format!("(τ-1) a_{j} - 2b > 0"), (tau - &one) * aj(j) - &two * b));
    }
    for j in 1..=n {
        rows.push(structural("(iv')", format!("a_{j} - a > 0"), aj(j) - a));
    }
    rows.push(structural("(v')", "a_1 - 2b > 0".into(), aj(1) - &two * b));
    for j in 1..=n {
        let m = &one - a - (&two * &nn - &one) * aj(j) - &nn * aj(1) - int(6) * b;
        rows.push(structural("(vi')", format!("1 - a - (2n-1) a_{j} - n a_1 - 6b > 0"), m));
    }
    rows.push(structural("(vii')", "1 - n a_n - 2b > 0".into(), &one - &nn * aj(n) - &two * b));

    for j in 1..n {
        let e = tau * aj(j);
        let c = lc + q.gamma.log10();
        rows.push(power("(viii')", format!("ε < γ^(1/(τ a_{j}))"), e, c, eps));
    }
    rows.push(power("(ix')", "ε < γ^(1/b)".into(), b.clone(), lc + q.gamma.log10(), eps));
    rows.push(power("(x')", "ε < R^(1/b)".into(), b.clone(), lc + q.big_r.log10(), eps));
    for j in 1..=n {
        let e = &nn * aj(j) + &two * b;
        rows.push(power("(xi')", format!("ε < min(r,s)^(1/(n a_{j} + 2b))"), e, lc + q.r.min(q.s).log10(), eps));
    }

    // T_j = ε^{-t_j}, r_j = ε^{ρ_j} at the worst-case period.
    let t = |j: usize| aj(j) * (&nn - &one) + &two * b;
    let rho = |j: usize| aj(j) + t(j);
    for j in 1..=n {
        let lhs = &one - a - t(j);
        let rhs = rho(1) + rho(j);
        let what = if j == 1 { "r_1^2".to_string() } else { format!("r_1 r_{j}") };
        rows.push(power(&format!("(A_{j})"), format!("m T_{j} ε < {what}"), lhs - rhs, ls, eps));
        rows.push(power(&format!("(A_{j})"), format!("m T_{j} r_{j} < s"), aj(j) - a, ls + q.s.log10(), eps));
        rows.push(power(&format!("(A_{j})"), format!("r_{j} < s"), rho(j), ls + q.s.log10(), eps));
    }
    // Nested windows need r_{j+1} < 2 r_j / 3, worst case T_{j+1} = 1.
    for j in 1..n {
        let e = aj(j + 1) - rho(j);
        rows.push(power(&format!("(B_{j})"), format!("r_{} < 2 r_{j} / 3", j + 1), e, (2.0f64 / 3.0).log10() + ls, eps));
    }
    rows
}

/// The clauses of the vector-field smallness conditions for a concrete run:
/// `m T_j ε̃ < c r_j`, `m T_j r_j < c s_j`, `r_j < c s_j`.
pub fn tilde_a_conditions(
    m: usize,
    periods: &[f64],
    eps_tilde: f64,
    rs: &[f64],
    ss: &[f64],
    constants: &ImplicitConstants,
) -> Vec<ConditionRow> {
    let c = constants.smallness;
    let mf = m as f64;
    let mut rows = Vec::new();
    for (j, ((&t, &r), &s)) in periods.iter().zip(rs).zip(ss).enumerate() {
        let id = format!("(Ã_{})", j + 1);
        rows.push(direct(&id, format!("m T ε̃ < r, stage {}", j + 1), mf * t * eps_tilde, c * r));
        rows.push(direct(&id, format!("m T r < s, stage {}", j + 1), mf * t * r, c * s));
        rows.push(direct(&id, format!("0 < r < s, stage {}", j + 1), r, c * s));
        if !(r > 0.0) {
            rows.last_mut().unwrap().passed = false;
        }
    }
    rows
}

impl ConditionLedger {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let _ = writeln!(out, "n = {}  tau = {}  gamma = {}  R = {}  r = {}  s = {}  M = {}  eps = {:e}", p.n, p.tau, p.gamma, p.big_r, p.r, p.s, p.m_bound, p.eps);
        let _ = writeln!(out, "a_j = [{}]  a = b = {}  (simplified {})", self.a_seq.join(", "), self.a, self.simplified);
        let w = self.rows.iter().map(|r| r.statement.chars().count()).max().unwrap_or(0);
        let _ = writeln!(out, "{:<8} {:<w$} {:>14} {:>14} {:>14}  {}", "row", "condition", "lhs", "rhs", "log10 eps max", "ok");
        for r in &self.rows {
            let pad = w - r.statement.chars().count();
            let th = r.log10_threshold.map_or("-".to_string(), |t| format!("{t:.6}"));
            let _ = writeln!(
                out,
                "{:<8} {}{} {:>14.6e} {:>14.6e} {:>14}  {}",
                r.id,
                r.statement,
                " ".repeat(pad),
                r.lhs,
                r.rhs,
                th,
                if r.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "ledger {}", if self.passed { "passes" } else { "fails" });
        match (&self.binding, self.log10_eps0) {
            (Some(b), Some(e)) => {
                let _ = writeln!(out, "binding {b}  log10 eps0 = {e:.6}");
            }
            _ => {
                let _ = writeln!(out, "no eps0: a row fails for every small eps");
            }
        }
        out
    }
}
