//! One builder per experiment kind. Each returns a result table and a JSON
//! summary; nothing here touches the filesystem.

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use shrinkball::posterior::{
    over_replicates, posterior_ball_mass, ratio_certificate, rb_log_ball_mass, run_sampler, simulate_data,
    GibbsSettings, ReplicateSummary, SamplerKind,
};
use shrinkball::prior::{class_g_check, GlobalFamily, LocalFamily, SparseVector};
use shrinkball::quad::{integrate, QuadOptions};
use shrinkball::smallball::{
    conditional_mc, dickey_reduce, dirichlet_reduce, global_only_exact, lasso_ub_integral, naive_mc, rate_fit,
    shifted_ball_bounds, simplex_mc, BallQuery, ConcentrationEstimate, ConditionalOptions, EstimateMethod,
    PriorModel, RadiusSchedule, RateModel,
};
use shrinkball::specfun::{
    erfc_and_bounds, ln_gamma, log_erfc, truncated_gamma_ratio, weighted_noncentral_chi2_logcdf,
    WeightedChiSquareSpec,
};
use shrinkball::{Error, LogProb, RngStream};

use crate::config::{ExperimentConfig, ExperimentKind, MethodChoice};
use crate::output::{Cell, Table};

/// Failure of an experiment, split by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            RunError::Numeric(e.to_string())
        } else {
            RunError::Config(e.to_string())
        }
    }
}

pub struct RunOutput {
    pub table: Table,
    pub summary: Value,
}

/// Runs the experiment described by an already validated config.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let root = RngStream::new(cfg.seed);
    match cfg.kind() {
        ExperimentKind::Concentration => concentration(cfg, root),
        ExperimentKind::RateScan => rate_scan(cfg, root),
        ExperimentKind::Posterior => posterior(cfg, root),
        ExperimentKind::Certificate => certificate(cfg, root),
        ExperimentKind::VerifyLemmas => verify_lemmas(cfg, root),
    }
}

struct Cellwise {
    n: usize,
    t: f64,
    theta0: SparseVector,
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cellwise>, RunError> {
    let radius = radius(cfg)?;
    cfg.n_grid
        .iter()
        .map(|&n| {
            let t = radius.radius(n);
            let theta0 = cfg.theta0_spec.build(n, t).map_err(RunError::Config)?;
            Ok(Cellwise { n, t, theta0 })
        })
        .collect()
}

fn radius(cfg: &ExperimentConfig) -> Result<RadiusSchedule, RunError> {
    cfg.radius.ok_or_else(|| RunError::Config("radius is required".into()))
}

fn prior(cfg: &ExperimentConfig, n: usize) -> Result<PriorModel, RunError> {
    cfg.prior_at(n).map_err(RunError::Config)
}

fn estimate(
    cfg: &ExperimentConfig,
    prior: &PriorModel,
    q: &BallQuery,
    stream: RngStream,
) -> Result<ConcentrationEstimate, RunError> {
    let b = &cfg.budgets;
    let opts = ConditionalOptions { proposal: cfg.scale_proposal };
    let est = match (cfg.method, prior) {
        (MethodChoice::LassoUb, _) => {
            let v = lasso_ub_integral(q.n(), q.center().l2_norm_sq(), q.w(), 1.0)?;
            ConcentrationEstimate {
                log_p: LogProb::clamped(v),
                log_se: 0.0,
                method: EstimateMethod::BoundUpper,
                budget: 0,
                failures: 0,
                zero_hits: false,
            }
        }
        (MethodChoice::NaiveMc, _) | (_, PriorModel::PointMass(_)) => naive_mc(prior, q, b.mc_samples, stream)?,
        (MethodChoice::Exact, PriorModel::GlobalLocal(p)) => global_only_exact(p, q, b.quad_points)?,
        (MethodChoice::ConditionalMc, PriorModel::GlobalLocal(p)) => {
            conditional_mc(p, q, b.scale_samples, stream, &opts)?
        }
        (MethodChoice::Auto, PriorModel::GlobalLocal(p)) => {
            if p.local == LocalFamily::DiracOne && p.global.has_density() {
                global_only_exact(p, q, b.quad_points)?
            } else {
                conditional_mc(p, q, b.scale_samples, stream, &opts)?
            }
        }
    };
    Ok(est)
}

fn estimates(cfg: &ExperimentConfig, root: RngStream) -> Result<Vec<(Cellwise, ConcentrationEstimate)>, RunError> {
    cells(cfg)?
        .into_par_iter()
        .map(|c| {
            let q = BallQuery::new(c.theta0.clone(), c.t)?;
            let e = estimate(cfg, &prior(cfg, c.n)?, &q, root.substream(c.n as u64))?;
            Ok((c, e))
        })
        .collect()
}

fn concentration(cfg: &ExperimentConfig, root: RngStream) -> Result<RunOutput, RunError> {
    let mut table = Table::new(vec![
        "n", "t", "theta0_norm", "log_p", "log_se", "method", "budget", "failures", "zero_hits",
    ]);
    for (c, e) in estimates(cfg, root)? {
        table.push(vec![
            c.n.into(),
            c.t.into(),
            c.theta0.l2_norm().into(),
            e.log_p.value().into(),
            e.log_se.into(),
            e.method.as_str().into(),
            e.budget.into(),
            e.failures.into(),
            e.zero_hits.into(),
        ]);
    }
    Ok(RunOutput { table, summary: json!({}) })
}

fn rate_scan(cfg: &ExperimentConfig, root: RngStream) -> Result<RunOutput, RunError> {
    let mut table = Table::new(vec!["n", "log_p", "log_se", "method"]);
    let mut pairs = Vec::new();
    for (c, e) in estimates(cfg, root)? {
        pairs.push((c.n as f64, e.log_p.value()));
        table.push(vec![c.n.into(), e.log_p.value().into(), e.log_se.into(), e.method.as_str().into()]);
    }
    let fits: serde_json::Map<String, Value> = [RateModel::PowerOfN, RateModel::SqrtN, RateModel::LogN]
        .into_iter()
        .map(|m| {
            let name = serde_json::to_value(m).expect("enum serializes").as_str().unwrap_or_default().to_string();
            let v = match rate_fit(&pairs, m) {
                Ok(f) => json!(f),
                Err(e) => json!({ "error": e.to_string() }),
            };
            (name, v)
        })
        .collect();
    Ok(RunOutput { table, summary: json!({ "fits": fits }) })
}

/// Draws of the Rao-Blackwellized log mass averaged per chain.
const RB_DRAWS: usize = 200;

fn posterior(cfg: &ExperimentConfig, root: RngStream) -> Result<RunOutput, RunError> {
    let b = &cfg.budgets;
    let settings = GibbsSettings { iters: b.mcmc_iters, burn_in: b.mcmc_burn, thin: b.mcmc_thin };
    let name = cfg.sampler(cfg.n_grid[0]).map_err(RunError::Config)?.name();

    struct Rep {
        mass: f64,
        mcse: f64,
        rb: Option<f64>,
        ess_norm: f64,
        ess_global: f64,
    }
    let per_n: Vec<(Cellwise, Vec<Rep>)> = cells(cfg)?
        .into_par_iter()
        .map(|c| {
            let kind = cfg.sampler(c.n).map_err(RunError::Config)?;
            let with_rb = !matches!(kind, SamplerKind::SpikeSlab { .. });
            let reps = over_replicates(b.replicates, root.substream(c.n as u64), |_, s| {
                let inst = simulate_data(&c.theta0, s.labeled("data"));
                let chain = run_sampler(&kind, &inst, settings, s.labeled("chain"))?;
                let bm = posterior_ball_mass(&chain, &c.theta0, c.t);
                let rb = if with_rb { Some(rb_log_ball_mass(&chain, &inst, c.t, RB_DRAWS)?.0.value()) } else { None };
                Ok(Rep {
                    mass: bm.mass,
                    mcse: bm.mcse,
                    rb,
                    ess_norm: chain.diagnostics.ess_norm,
                    ess_global: chain.diagnostics.ess_global,
                })
            })?;
            Ok((c, reps))
        })
        .collect::<Result<_, RunError>>()?;

    let mut table = Table::new(vec![
        "n", "replicate", "radius", "ball_mass", "mcse", "log_mass_rb", "ess_norm", "ess_global",
    ]);
    let mut summary = Vec::new();
    for (c, reps) in &per_n {
        for (r, rep) in reps.iter().enumerate() {
            table.push(vec![
                c.n.into(),
                r.into(),
                c.t.into(),
                rep.mass.into(),
                rep.mcse.into(),
                rep.rb.map_or(Cell::Text(String::new()), Cell::Num),
                rep.ess_norm.into(),
                rep.ess_global.into(),
            ]);
        }
        let masses: Vec<f64> = reps.iter().map(|r| r.mass).collect();
        let rbs: Vec<f64> = reps.iter().filter_map(|r| r.rb).collect();
        summary.push(json!({
            "n": c.n,
            "radius": c.t,
            "theta0_norm": c.theta0.l2_norm(),
            "ball_mass": ReplicateSummary::of(&masses),
            "log_mass_rb": (!rbs.is_empty()).then(|| ReplicateSummary::of(&rbs)),
        }));
    }
    Ok(RunOutput { table, summary: json!({ "sampler": name, "per_n": summary }) })
}

fn certificate(cfg: &ExperimentConfig, root: RngStream) -> Result<RunOutput, RunError> {
    let outer = cfg.outer_radius.ok_or_else(|| RunError::Config("outer_radius is required".into()))?;
    let rows: Vec<_> = cells(cfg)?
        .into_par_iter()
        .map(|c| {
            let prior = prior(cfg, c.n)?;
            let budget = match prior {
                PriorModel::GlobalLocal(_) => cfg.budgets.scale_samples,
                PriorModel::PointMass(_) => cfg.budgets.mc_samples,
            };
            let rc = ratio_certificate(&prior, &c.theta0, c.t, outer.radius(c.n), budget, root.substream(c.n as u64))?;
            Ok((c.n, rc))
        })
        .collect::<Result<_, RunError>>()?;
    let mut table = Table::new(vec!["n", "t_n", "r_n", "log_p_small", "log_p_big", "log_certificate"]);
    for (n, rc) in rows {
        table.push(vec![
            n.into(),
            rc.t_n.into(),
            rc.r_n.into(),
            rc.log_p_small.value().into(),
            rc.log_p_big.value().into(),
            rc.log_certificate.into(),
        ]);
    }
    Ok(RunOutput { table, summary: json!({}) })
}

struct Check {
    lemma: &'static str,
    case: String,
    value: f64,
    reference: f64,
    pass: bool,
}

impl Check {
    fn new(lemma: &'static str, case: impl Into<String>, value: f64, reference: f64, pass: bool) -> Self {
        Check { lemma, case: case.into(), value, reference, pass }
    }
}

/// Slack for comparing exact log-probabilities across the sandwich.
const EXACT_SLACK: f64 = 1e-9;

fn shifted_ball_checks(root: RngStream) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for k in 0..10u64 {
        let mut rng = root.substream(k).rng();
        let n = rng.random_range(2..=8usize);
        let equal = k % 2 == 1;
        let q = if equal { rng.random_range(1..=n.min(3)) } else { 1 };
        let sigma: Vec<f64> = if equal {
            vec![rng.random_range(0.5..2.0); n]
        } else {
            (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
        };
        let values: Vec<f64> = (0..q).map(|_| rng.random_range(1.0..3.0)).collect();
        let theta0 = SparseVector::new(n, (0..q).collect(), values)?;
        let t = rng.random_range(0.2..0.95) * theta0.l2_norm() / 4.0;
        let w = t * t;

        let centered = WeightedChiSquareSpec::new(sigma.clone(), vec![0.0; n], w)?;
        let log_c = weighted_noncentral_chi2_logcdf(&centered)?.log_p.value();
        let nc: Vec<f64> = (0..n).map(|j| theta0.get(j).powi(2) / sigma[j]).collect();
        let shifted = WeightedChiSquareSpec::new(sigma.clone(), nc, w)?;
        let log_s = weighted_noncentral_chi2_logcdf(&shifted)?.log_p.value();

        let f = shifted_ball_bounds(&sigma, &theta0, t)?;
        let case = format!("config {k} (n={n}, q={q})");
        let lower = f.log_lower + log_c;
        out.push(Check::new("shifted-ball-lower", case.clone(), lower, log_s, lower <= log_s + EXACT_SLACK));
        if let Some(u) = f.log_upper {
            let upper = u + log_c;
            out.push(Check::new("shifted-ball-upper", case, log_s, upper, log_s <= upper + EXACT_SLACK));
        }
    }
    Ok(out)
}

fn truncated_gamma_checks() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let ns: [u64; 7] = [100, 200, 500, 1000, 2000, 5000, 10_000];
    let rules: [(&str, fn(u64) -> f64); 2] =
        [("a=1", |_| 1.0), ("a=n/(2e)", |n| n as f64 / (2.0 * std::f64::consts::E))];
    for (rule, a_of) in rules {
        let xi: Vec<f64> = ns.iter().map(|&n| truncated_gamma_ratio(n, a_of(n))).collect::<Result<_, _>>()?;
        let deficit = |i: usize| (ns[i] as f64).sqrt() * (1.0 - xi[i]);
        let cap = 2.0 * deficit(0);
        for (i, &n) in ns.iter().enumerate() {
            out.push(Check::new("truncated-gamma-range", format!("{rule} n={n}"), xi[i], 1.0, xi[i] > 0.0 && xi[i] <= 1.0));
            if i > 0 {
                out.push(Check::new(
                    "truncated-gamma-increasing",
                    format!("{rule} n={n}"),
                    xi[i],
                    xi[i - 1],
                    xi[i] >= xi[i - 1],
                ));
                out.push(Check::new("truncated-gamma-deficit", format!("{rule} n={n}"), deficit(i), cap, deficit(i) <= cap));
            }
        }
    }
    let n = 10u64;
    let a = n as f64 / (2.0 * std::f64::consts::E);
    let num = integrate(|t: f64| t.powf(-(n as f64) / 2.0) * (-a / (2.0 * t)).exp(), 0.0, 1.0, QuadOptions::default())?;
    let m = n as f64 / 2.0 - 1.0;
    let direct = num.value / (ln_gamma(m)? + m * (2.0 / a).ln()).exp();
    let xi = truncated_gamma_ratio(n, a)?;
    out.push(Check::new("truncated-gamma-quadrature", "n=10 a=n/(2e)", xi, direct, (xi - direct).abs() <= 1e-9 * direct));
    Ok(out)
}

fn erfc_checks(deltas: &[f64]) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for &d in deltas {
        let mut lower_margin = f64::INFINITY;
        let mut upper_margin = f64::INFINITY;
        for i in 0..=196 {
            let x = 2.0 + 0.5 * i as f64;
            let b = erfc_and_bounds(x, d)?;
            let le = log_erfc(x.sqrt());
            if let Some(lo) = b.lower {
                lower_margin = lower_margin.min(le - lo.ln());
            }
            upper_margin = upper_margin.min(b.upper.ln() - le);
        }
        out.push(Check::new("erfc-lower", format!("delta={d}"), lower_margin, 0.0, lower_margin > 0.0));
        out.push(Check::new("erfc-upper", format!("delta={d}"), upper_margin, 0.0, upper_margin > 0.0));
    }
    Ok(out)
}

fn simplex_checks(samples: u64, root: RngStream) -> Result<Vec<Check>, Error> {
    (3..=6usize)
        .into_par_iter()
        .map(|n| {
            let al = vec![0.5; n];
            let s = root.substream(n as u64);
            let want = dirichlet_reduce(|t| (-t).exp(), &al)?;
            let (m, se) = simplex_mc(|x| (-x.iter().sum::<f64>()).exp(), &al, samples, s.labeled("dirichlet"))?;
            let d = Check::new("dirichlet", format!("n={n}"), want, m, (want - m).abs() <= 3.0 * se);

            let qs: Vec<f64> = (1..=n).map(|j| j as f64).collect();
            let want = dickey_reduce(1.0, &qs)?;
            let e = n as f64 / 2.0 - 1.0;
            let (m, se) = simplex_mc(
                |x| (x.iter().zip(&qs).map(|(a, q)| a * q).sum::<f64>() + 1.0).powf(-e),
                &al,
                samples,
                s.labeled("dickey"),
            )?;
            let k = Check::new("dickey", format!("n={n}"), want, m, (want - m).abs() <= 3.0 * se);
            Ok(vec![d, k])
        })
        .collect::<Result<Vec<_>, Error>>()
        .map(|v| v.into_iter().flatten().collect())
}

fn class_g_checks() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for (name, g, m) in [
        ("half-cauchy(1) M=4", GlobalFamily::HalfCauchy { scale: 1.0 }, 4.0),
        ("exponential(1) M=3", GlobalFamily::Exponential { rate: 1.0 }, 3.0),
    ] {
        let r = class_g_check(&g, m, 10_000)?;
        out.push(Check::new("class-g-upper", name, r.max_density.1, m, r.holds_upper));
        out.push(Check::new("class-g-lower", name, r.min_density_unit.1, 1.0 / m, r.holds_lower));
    }
    Ok(out)
}

fn verify_lemmas(cfg: &ExperimentConfig, root: RngStream) -> Result<RunOutput, RunError> {
    let mut checks = shifted_ball_checks(root.labeled("shifted-ball"))?;
    checks.extend(truncated_gamma_checks()?);
    checks.extend(erfc_checks(&cfg.erfc_deltas)?);
    checks.extend(simplex_checks(cfg.budgets.mc_samples, root.labeled("simplex"))?);
    checks.extend(class_g_checks()?);

    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut table = Table::new(vec!["lemma", "case", "value", "reference", "pass"]);
    for c in checks.iter() {
        table.push(vec![c.lemma.into(), c.case.clone().into(), c.value.into(), c.reference.into(), c.pass.into()]);
    }
    Ok(RunOutput { table, summary: json!({ "checks": checks.len(), "failed": failed }) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Magnitude, Placement, Theta0Spec};
    use shrinkball::prior::GLPrior;

    fn iid(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind: Some(kind),
            prior: Some(GLPrior::iid_normal(1).into()),
            n_grid: vec![5, 50, 200],
            radius: Some(RadiusSchedule::SqrtN { factor: 0.8 }),
            ..Default::default()
        }
    }

    #[test]
    fn concentration_rows_follow_grid() {
        let out = run(&iid(ExperimentKind::Concentration)).unwrap();
        assert_eq!(out.table.rows.len(), 3);
        let rows = out.table.sorted();
        assert_eq!(rows[0][0], "5");
        assert_eq!(rows[2][0], "200");
    }

    #[test]
    fn placement_does_not_matter() {
        let mut cfg = iid(ExperimentKind::Concentration);
        cfg.n_grid = vec![20];
        cfg.radius = Some(RadiusSchedule::Fixed { t: 2.0 });
        cfg.budgets.scale_samples = 200;
        let mut logs = Vec::new();
        for placement in [Placement::Leading, Placement::Trailing, Placement::Spread] {
            cfg.theta0_spec = Theta0Spec { q: 3, magnitude: Magnitude::Constant { value: 1.5 }, placement };
            logs.push(run(&cfg).unwrap().table.sorted()[0][3].clone());
        }
        assert!(logs.windows(2).all(|w| w[0] == w[1]), "{logs:?}");
    }

    #[test]
    fn certificate_decreases_for_iid_normal() {
        let mut cfg = iid(ExperimentKind::Certificate);
        cfg.n_grid = vec![100, 400, 1600];
        cfg.radius = Some(RadiusSchedule::LogLaw { a: 2.0 });
        cfg.outer_radius = Some(RadiusSchedule::SqrtN { factor: 1.0 });
        cfg.theta0_spec = Theta0Spec { q: 1, magnitude: Magnitude::RadiusMultiple { factor: 4.0 }, placement: Placement::Leading };
        cfg.budgets.scale_samples = 200;
        let out = run(&cfg).unwrap();
        let cert: Vec<f64> = out.table.sorted().iter().map(|r| r[5].parse().unwrap()).collect();
        assert!(cert.windows(2).all(|w| w[1] < w[0]), "{cert:?}");
    }

    #[test]
    fn lemma_suite_passes_on_defaults() {
        let mut cfg = ExperimentConfig { kind: Some(ExperimentKind::VerifyLemmas), ..Default::default() };
        cfg.budgets.mc_samples = 50_000;
        let out = run(&cfg).unwrap();
        let bad: Vec<_> = out.table.sorted().into_iter().filter(|r| r[4] != "true").collect();
        assert!(bad.is_empty(), "{bad:?}");
    }
}
