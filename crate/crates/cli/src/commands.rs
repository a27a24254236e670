use crate::output::{num, opt_num, Manifest, RunDir};
use clap::Args;
use nekolab::constants::ImplicitConstants;
use nekolab::diophantine::{dirichlet_approx_with, DirichletOptions, PeriodicVector, SearchStrategy};
use nekolab::dynamics::{integrate, stability_time, DynamicsError, IntegratorOptions, Scheme};
use nekolab::exponents::{condition_ledger, exponent_plan_f64, tilde_a_conditions, LedgerParams, RowKind};
use nekolab::steepness::{prevalence_mc, sdm_check, SdmOptions};
use nekolab::trig_hamiltonian::{
    normal_form, two_frequency_case, AnalyticDomain, HamiltonianJson, NormalFormOptions, TrigPolyHamiltonian,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub struct Context {
    pub root: PathBuf,
    pub args: Vec<String>,
    pub config_file: Option<String>,
}

type Outcome = Result<u8, String>;

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("--{name}: cannot parse {p:?} as a number")))
        .collect()
}

fn load(path: &Path) -> Result<HamiltonianJson, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Grade-0 part and the unscaled grade-1+ part.
fn split(j: &HamiltonianJson) -> Result<(TrigPolyHamiltonian, TrigPolyHamiltonian), String> {
    let h = TrigPolyHamiltonian::from_json_scaled(j, 0.0).map_err(|e| e.to_string())?;
    let full = TrigPolyHamiltonian::from_json(j).map_err(|e| e.to_string())?;
    let f = full.checked_sub(&h).map_err(|e| e.to_string())?;
    Ok((h, f))
}

fn finish(run: RunDir, ctx: &Context, command: &str, seed: Option<u64>, params: &impl Serialize) -> Result<(), String> {
    let parameters = serde_json::to_value(params).map_err(|e| e.to_string())?;
    let m = Manifest {
        tool: "nekolab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        args: &ctx.args,
        seed,
        created: chrono::Utc::now().to_rfc3339(),
        config_file: ctx.config_file.clone(),
        parameters,
        files: Vec::new(),
    };
    let path = run.finish(m).map_err(|e| e.to_string())?;
    println!("run directory: {}", path.display());
    Ok(())
}

fn io(e: std::io::Error) -> String {
    e.to_string()
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxArgs {
    /// Direction, comma separated.
    #[arg(long = "v", allow_hyphen_values = true)]
    pub v: String,
    /// Quality parameter `Q > 1`.
    #[arg(long = "Q")]
    pub q: f64,
    /// auto, brute-force or continued-fraction.
    #[arg(long, default_value = "auto")]
    pub strategy: String,
    #[arg(long, default_value_t = 53)]
    pub bits: u32,
}

pub fn approx(a: &ApproxArgs, ctx: &Context) -> Outcome {
    let v = parse_list("v", &a.v)?;
    let strategy = match a.strategy.as_str() {
        "auto" => SearchStrategy::Auto,
        "brute-force" => SearchStrategy::BruteForce,
        "continued-fraction" => SearchStrategy::ContinuedFraction,
        s => return Err(format!("unknown strategy {s:?}")),
    };
    let opts = DirichletOptions { precision_bits: a.bits, strategy, ..Default::default() };
    let cert = dirichlet_approx_with(&v, a.q, &opts).map_err(|e| e.to_string())?;
    let json = cert.to_json();
    println!("{}", serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?);
    let mut run = RunDir::create(&ctx.root, "approx").map_err(io)?;
    run.json("certificate.json", &json).map_err(io)?;
    finish(run, ctx, "approx", None, a)?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct NfArgs {
    /// Hamiltonian JSON; grade-g terms are scaled by eps^g. Without it the
    /// built-in two-frequency case is used.
    #[arg(long)]
    pub h: Option<PathBuf>,
    /// The built-in case needs a tiny ε for its narrow second window.
    #[arg(long, default_value_t = 1e-15)]
    pub eps: f64,
    /// Steps per stage.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub truncation: usize,
    /// Periodic frequencies `p1,p2[/T];...` (with --h).
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    /// Action widths per stage (with --h).
    #[arg(long)]
    pub r: Option<String>,
    /// Angle widths per stage (with --h).
    #[arg(long)]
    pub s: Option<String>,
    /// Radius of the real action ball (with --h).
    #[arg(long = "big-r", default_value_t = 1.0)]
    pub big_r: f64,
}

fn parse_omegas(s: &str) -> Result<Vec<PeriodicVector>, String> {
    s.split(';')
        .map(|part| {
            let (num, t) = match part.split_once('/') {
                Some((a, b)) => (a, b.trim().parse::<i64>().map_err(|_| format!("--omega: bad period in {part:?}"))?),
                None => (part, 1),
            };
            let ints: Vec<i64> = num
                .split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| format!("--omega: bad integer in {part:?}")))
                .collect::<Result<_, _>>()?;
            PeriodicVector::from_ratio(&ints, t).map_err(|e| e.to_string())
        })
        .collect()
}

pub fn nf(a: &NfArgs, ctx: &Context) -> Outcome {
    let (ham, omegas, doms) = match &a.h {
        None => two_frequency_case(a.eps),
        Some(path) => {
            let j = load(path)?;
            let ham = TrigPolyHamiltonian::from_json_scaled(&j, a.eps).map_err(|e| e.to_string())?;
            let omegas = parse_omegas(a.omega.as_deref().ok_or("--omega is required with --h")?)?;
            let rs = parse_list("r", a.r.as_deref().ok_or("--r is required with --h")?)?;
            let ss = parse_list("s", a.s.as_deref().ok_or("--s is required with --h")?)?;
            if rs.len() != omegas.len() || ss.len() != omegas.len() {
                return Err("--omega, --r and --s need one entry per stage".into());
            }
            let doms = rs
                .iter()
                .zip(&ss)
                .map(|(&r, &s)| AnalyticDomain::new(r, s, a.big_r).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            (ham, omegas, doms)
        }
    };
    let opts = NormalFormOptions { steps: a.steps, truncation: a.truncation, ..Default::default() };
    let res = normal_form(&ham, &omegas, &doms, &opts).map_err(|e| e.to_string())?;

    let periods: Vec<f64> = omegas.iter().map(|w| nekolab::diophantine::rational_to_f64(&w.real_period())).collect();
    let eps_tilde = res.stages.first().map_or(0.0, |s| s.input_norm);
    let rs: Vec<f64> = doms.iter().map(|d| d.r).collect();
    let ss: Vec<f64> = doms.iter().map(|d| d.s).collect();
    let smallness = tilde_a_conditions(a.steps, &periods, eps_tilde, &rs, &ss, &ImplicitConstants::default());

    let mut run = RunDir::create(&ctx.root, "nf").map_err(io)?;
    run.csv(
        "steps.csv",
        &["stage", "step", "remainder_norm", "contraction", "predicted_factor", "tail", "generator_norm"],
        res.steps.iter().map(|s| {
            vec![
                s.stage.to_string(),
                s.step.to_string(),
                num(s.remainder_norm),
                num(s.contraction),
                num(s.predicted_factor),
                num(s.tail),
                num(s.generator_norm),
            ]
        }),
    )
    .map_err(io)?;
    run.csv(
        "stages.csv",
        &["stage", "input_norm", "output_norm", "carried_norm", "steps_taken"],
        res.stages.iter().map(|s| {
            vec![s.stage.to_string(), num(s.input_norm), num(s.output_norm), num(s.carried_norm), s.steps_taken.to_string()]
        }),
    )
    .map_err(io)?;
    run.json(
        "normal_form.json",
        &serde_json::json!({
            "resonant": res.resonant.to_json(),
            "remainder": res.remainder.to_json(),
            "stages": res.stages,
            "smallness": smallness,
        }),
    )
    .map_err(io)?;
    for s in &res.stages {
        println!("stage {}: input {} output {} ({} steps)", s.stage, num(s.input_norm), num(s.output_norm), s.steps_taken);
    }
    for r in smallness.iter().filter(|r| !r.passed) {
        println!("smallness clause fails: {} ({} >= {})", r.statement, num(r.lhs), num(r.rhs));
    }
    finish(run, ctx, "nf", None, a)?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct SdmArgs {
    #[arg(long)]
    pub h: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 11.0)]
    pub tau: f64,
    #[arg(long = "Lmax", alias = "lmax", default_value_t = 3)]
    pub l_max: u32,
    /// Grid steps per axis.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Random points in the ball per subspace.
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shifts for the prevalence estimate; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    /// γ values for the prevalence estimate.
    #[arg(long, default_value = "0.5,0.25,0.125,0.0625,0.03125")]
    pub gammas: String,
}

pub fn sdm(a: &SdmArgs, ctx: &Context) -> Outcome {
    let (h, f) = split(&load(&a.h)?)?;
    if !f.is_zero() {
        return Err("SDM checks need an integrable h (no graded terms)".into());
    }
    let opts = SdmOptions {
        gamma: a.gamma,
        tau: a.tau,
        l_max: a.l_max,
        grid_res: a.grid,
        random_points: a.points,
        radius: a.radius,
        seed: a.seed,
    };
    let rep = sdm_check(&h, &opts).map_err(|e| e.to_string())?;
    let table = if a.samples > 0 {
        let gammas = parse_list("gammas", &a.gammas)?;
        Some(prevalence_mc(&h, &gammas, a.samples, a.seed, &opts).map_err(|e| e.to_string())?)
    } else {
        None
    };

    let mut run = RunDir::create(&ctx.root, "sdm").map_err(io)?;
    run.csv(
        "subspaces.csv",
        &["label", "k", "level", "gradient_norm", "sigma_min", "critical_gamma", "passed", "worst_point"],
        rep.records.iter().map(|r| {
            vec![
                r.label.clone(),
                r.k.to_string(),
                r.level.to_string(),
                num(r.gradient_norm),
                num(r.sigma_min),
                num(r.critical_gamma),
                r.passed.to_string(),
                r.worst_point.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "),
            ]
        }),
    )
    .map_err(io)?;
    run.json("sdm.json", &rep).map_err(io)?;
    if let Some(t) = &table {
        run.csv(
            "prevalence.csv",
            &["gamma", "bad", "fraction", "sigma", "seed", "samples"],
            t.rows.iter().map(|r| {
                vec![num(r.gamma), r.bad.to_string(), num(r.fraction), num(r.sigma), t.seed.to_string(), t.samples.to_string()]
            }),
        )
        .map_err(io)?;
        println!("prevalence: fitted C = {} (fraction <= C gamma^1/2), monotone {}", num(t.fitted_constant()), t.is_monotone());
    }
    println!("sdm: {} (critical gamma {})", rep.status, num(rep.critical_gamma));
    if let Some(v) = rep.first_violation() {
        println!(
            "violation on subspace {} (complement {:?}) at {:?}: gradient {} sigma {}",
            v.label, v.complement_generators, v.worst_point, num(v.gradient_norm), num(v.sigma_min)
        );
    }
    finish(run, ctx, "sdm", Some(a.seed), a)?;
    Ok(if rep.passed { 0 } else { 1 })
}

#[derive(Debug, Args, Serialize)]
pub struct DriftArgs {
    #[arg(long)]
    pub h: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub theta0: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub i0: String,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e3)]
    pub horizon: f64,
    /// strang or euler.
    #[arg(long, default_value = "strang")]
    pub scheme: String,
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long)]
    pub stop_at_escape: bool,
}

fn trace_rows(tr: &nekolab::dynamics::DriftTrace) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, &t) in tr.times.iter().enumerate() {
        let tt = num(t);
        for (k, x) in tr.actions[i].iter().enumerate() {
            rows.push(vec![tt.clone(), format!("I{}", k + 1), num(*x)]);
        }
        for (k, x) in tr.angles[i].iter().enumerate() {
            rows.push(vec![tt.clone(), format!("theta{}", k + 1), num(*x)]);
        }
        rows.push(vec![tt.clone(), "drift".into(), num(tr.drift[i])]);
        rows.push(vec![tt, "energy_error".into(), num(tr.energy_error[i])]);
    }
    rows
}

pub fn drift(a: &DriftArgs, ctx: &Context) -> Outcome {
    let (h, f) = split(&load(&a.h)?)?;
    let ham = h.checked_add(&f.scale(a.eps)).map_err(|e| e.to_string())?;
    let scheme: Scheme = a.scheme.parse()?;
    let opts = IntegratorOptions {
        dt: a.dt,
        horizon: a.horizon,
        scheme,
        stride: a.stride,
        delta: Some(a.delta),
        stop_at_escape: a.stop_at_escape,
    };
    let theta0 = parse_list("theta0", &a.theta0)?;
    let i0 = parse_list("i0", &a.i0)?;
    let (trace, failure) = match integrate(&ham, &theta0, &i0, &opts) {
        Ok(t) => (t, None),
        Err(DynamicsError::Aborted { time, reason, partial }) => (*partial, Some(format!("aborted at t = {time}: {reason}"))),
        Err(e) => return Err(e.to_string()),
    };
    let mut run = RunDir::create(&ctx.root, "drift").map_err(io)?;
    run.csv("trace.csv", &["t", "series", "value"], trace_rows(&trace)).map_err(io)?;
    run.json(
        "summary.json",
        &serde_json::json!({
            "max_drift": trace.max_drift,
            "max_energy_error": trace.max_energy_error,
            "escape_time": trace.escape_time,
            "censored": trace.censored,
            "final_time": trace.final_time,
            "failure": failure,
        }),
    )
    .map_err(io)?;
    println!(
        "max drift {} max energy error {} escape time {}",
        num(trace.max_drift),
        num(trace.max_energy_error),
        trace.escape_time.map_or("censored".to_string(), num)
    );
    finish(run, ctx, "drift", None, a)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(0),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long)]
    pub h: PathBuf,
    /// Decreasing list of ε.
    #[arg(long)]
    pub eps: String,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub theta0: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub i0: String,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e6)]
    pub horizon: f64,
    #[arg(long, default_value = "strang")]
    pub scheme: String,
}

pub fn scaling(a: &ScalingArgs, ctx: &Context) -> Outcome {
    let (h, f) = split(&load(&a.h)?)?;
    let eps = parse_list("eps", &a.eps)?;
    let opts = IntegratorOptions {
        dt: a.dt,
        horizon: a.horizon,
        scheme: a.scheme.parse()?,
        stride: usize::MAX,
        ..Default::default()
    };
    let theta0 = parse_list("theta0", &a.theta0)?;
    let i0 = parse_list("i0", &a.i0)?;
    let table = stability_time(&h, &f, &theta0, &i0, &eps, a.delta, &opts).map_err(|e| e.to_string())?;
    let mut run = RunDir::create(&ctx.root, "scaling").map_err(io)?;
    run.csv(
        "scaling.csv",
        &["epsilon", "t_star", "censored", "max_drift"],
        table.rows.iter().map(|r| vec![num(r.epsilon), opt_num(r.t_star), r.censored.to_string(), num(r.max_drift)]),
    )
    .map_err(io)?;
    run.json("fit.json", &table.fit).map_err(io)?;
    for r in &table.rows {
        println!("eps {} t* {}", num(r.epsilon), r.t_star.map_or("censored".to_string(), num));
    }
    match &table.fit {
        Some(fit) => println!("log-log slope {} (r^2 {})", num(fit.slope), num(fit.r_squared)),
        None => println!("no fit: fewer than two uncensored rows"),
    }
    finish(run, ctx, "scaling", None, a)?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentsArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    pub big_r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    pub m_bound: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
}

pub fn exponents(a: &ExponentsArgs, ctx: &Context) -> Outcome {
    let plan = exponent_plan_f64(a.n, a.tau).map_err(|e| e.to_string())?;
    let params = LedgerParams {
        n: a.n,
        tau: a.tau,
        gamma: a.gamma,
        big_r: a.big_r,
        r: a.r,
        s: a.s,
        m_bound: a.m_bound,
        eps: a.eps,
        constants: ImplicitConstants::default(),
    };
    let ledger = condition_ledger(&params).map_err(|e| e.to_string())?;
    let seq: Vec<String> = plan.a_seq.iter().enumerate().map(|(j, x)| format!("a_{}={x}", j + 1)).collect();
    println!("{}  a=b={}  simplified={}", seq.join("  "), plan.a, plan.simplified);
    print!("{}", ledger.to_table());

    let mut run = RunDir::create(&ctx.root, "exponents").map_err(io)?;
    run.json("plan.json", &plan.to_json()).map_err(io)?;
    run.json("ledger.json", &ledger).map_err(io)?;
    run.csv(
        "ledger.csv",
        &["row", "kind", "condition", "lhs", "rhs", "exact", "log10_threshold", "passed"],
        ledger.rows.iter().map(|r| {
            let kind = match r.kind {
                RowKind::Structural => "structural",
                RowKind::Power => "power",
                RowKind::Direct => "direct",
            };
            vec![
                r.id.clone(),
                kind.into(),
                r.statement.clone(),
                num(r.lhs),
                num(r.rhs),
                r.exact.clone().unwrap_or_default(),
                opt_num(r.log10_threshold),
                r.passed.to_string(),
            ]
        }),
    )
    .map_err(io)?;
    finish(run, ctx, "exponents", None, a)?;
    Ok(0)
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Run directory containing manifest.json.
    pub run: PathBuf,
}
