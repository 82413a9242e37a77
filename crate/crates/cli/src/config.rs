//! Experiment configuration: a single JSON document.

use serde::{Deserialize, Serialize};
use shrinkball::posterior::{minimax_radius, SamplerKind};
use shrinkball::prior::{GlobalFamily, LocalFamily, SparseVector};
use shrinkball::smallball::{PriorModel, RadiusSchedule, ScaleProposal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Concentration,
    Posterior,
    VerifyLemmas,
    RateScan,
    Certificate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Posterior => "posterior",
            ExperimentKind::VerifyLemmas => "verify-lemmas",
            ExperimentKind::RateScan => "rate-scan",
            ExperimentKind::Certificate => "certificate",
        }
    }
}

/// Size of each nonzero entry of `θ₀` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Magnitude {
    /// Every nonzero entry equals `value`.
    Constant { value: f64 },
    /// `‖θ₀‖ = factor · t(n)`, spread evenly over the support.
    RadiusMultiple { factor: f64 },
    /// `‖θ₀‖ = factor · √(A q ln(n/q))`.
    MinimaxMultiple { factor: f64, a: f64 },
    /// `‖θ₀‖² = factor · ln n`.
    LogN { factor: f64 },
    /// `‖θ₀‖² = ln n · (ln ln n)²`.
    LogLogLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Indices `0..q`.
    #[default]
    Leading,
    /// Indices `n−q..n`.
    Trailing,
    /// Evenly spaced indices.
    Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theta0Spec {
    pub q: usize,
    pub magnitude: Magnitude,
    #[serde(default)]
    pub placement: Placement,
}

impl Default for Theta0Spec {
    fn default() -> Self {
        Theta0Spec { q: 0, magnitude: Magnitude::Constant { value: 0.0 }, placement: Placement::Leading }
    }
}

impl Theta0Spec {
    /// Resolves `θ₀` in dimension `n` for ball radius `t`.
    pub fn build(&self, n: usize, t: f64) -> Result<SparseVector, String> {
        if self.q > n {
            return Err(format!("theta0_spec.q = {} exceeds n = {n}", self.q));
        }
        if self.q == 0 {
            return Ok(SparseVector::zeros(n));
        }
        let qf = self.q as f64;
        let nf = n as f64;
        let norm = match self.magnitude {
            Magnitude::Constant { value } => return self.place(n, vec![value; self.q]),
            Magnitude::RadiusMultiple { factor } => factor * t,
            Magnitude::MinimaxMultiple { factor, a } => {
                factor * minimax_radius(n, self.q, a).map_err(|e| e.to_string())?
            }
            Magnitude::LogN { factor } => (factor * nf.ln()).sqrt(),
            Magnitude::LogLogLog => (nf.ln() * nf.ln().ln().powi(2)).sqrt(),
        };
        self.place(n, vec![norm / qf.sqrt(); self.q])
    }

    fn place(&self, n: usize, values: Vec<f64>) -> Result<SparseVector, String> {
        let q = values.len();
        let support: Vec<usize> = match self.placement {
            Placement::Leading => (0..q).collect(),
            Placement::Trailing => (n - q..n).collect(),
            Placement::Spread => (0..q).map(|i| i * n / q).collect(),
        };
        SparseVector::new(n, support, values).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub mc_samples: u64,
    pub scale_samples: u64,
    pub quad_points: usize,
    pub mcmc_iters: usize,
    pub mcmc_burn: usize,
    pub mcmc_thin: usize,
    pub replicates: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            mc_samples: 100_000,
            scale_samples: 2000,
            quad_points: 400,
            mcmc_iters: 3000,
            mcmc_burn: 600,
            mcmc_thin: 5,
            replicates: 20,
        }
    }
}

/// Dimension-dependent plug-in global variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TauSchedule {
    /// `τₙ = factor / ln n`.
    InverseLogN { factor: f64 },
    /// `τₙ = factor · n^power`.
    PowerOfN { factor: f64, power: f64 },
}

impl TauSchedule {
    pub fn tau(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            TauSchedule::InverseLogN { factor } => factor / nf.ln(),
            TauSchedule::PowerOfN { factor, power } => factor * nf.powf(power),
        }
    }
}

/// How concentration rows are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    /// Quadrature where available, conditional Monte Carlo for other
    /// global-local priors, naive Monte Carlo for the point-mass mixture.
    #[default]
    Auto,
    Exact,
    ConditionalMc,
    NaiveMc,
    /// The exponential-local upper-bound integral (constant 1).
    LassoUb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub prior: Option<PriorModel>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub radius: Option<RadiusSchedule>,
    /// Larger radius of the ratio certificate.
    #[serde(default)]
    pub outer_radius: Option<RadiusSchedule>,
    /// Replaces the plug-in global variance per dimension.
    #[serde(default)]
    pub plugin_tau: Option<TauSchedule>,
    #[serde(default)]
    pub theta0_spec: Theta0Spec,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub method: MethodChoice,
    /// Scale draws for conditional Monte Carlo.
    #[serde(default)]
    pub scale_proposal: ScaleProposal,
    /// Tolerances `δ` for the erfc envelope check.
    #[serde(default = "default_deltas")]
    pub erfc_deltas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.5]
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Findings {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Findings {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.kind.unwrap_or(ExperimentKind::Concentration)
    }

    /// The configured prior in dimension `n`, with the plug-in schedule applied.
    pub fn prior_at(&self, n: usize) -> Result<PriorModel, String> {
        let p = self.prior.as_ref().ok_or("prior is required")?.with_n(n);
        Ok(match (p, self.plugin_tau) {
            (PriorModel::GlobalLocal(mut g), Some(s)) => {
                g.global = GlobalFamily::PluginDirac { tau_n: s.tau(n) };
                PriorModel::GlobalLocal(g)
            }
            (p, _) => p,
        })
    }

    /// Sampler matching the configured prior in dimension `n`.
    pub fn sampler(&self, n: usize) -> Result<SamplerKind, String> {
        match self.prior_at(n)? {
            PriorModel::PointMass(p) => Ok(SamplerKind::SpikeSlab { prior: p }),
            PriorModel::GlobalLocal(p) => Ok(match (p.local, &p.global) {
                (LocalFamily::Exponential { lambda }, GlobalFamily::PluginDirac { tau_n }) => {
                    SamplerKind::PluginLasso { lambda, tau_n: *tau_n }
                }
                (LocalFamily::Exponential { lambda }, g) => SamplerKind::BayesLasso { lambda, global: g.clone() },
                (LocalFamily::DiracOne, g) if g.has_density() => SamplerKind::GlobalOnly { global: g.clone() },
                (LocalFamily::DiracOne, _) => {
                    return Err("no sampler for unit local scales with a plug-in global scale".into())
                }
            }),
        }
    }
}

/// Structural checks plus warnings where a configured bound does not apply.
pub fn validate(cfg: &ExperimentConfig) -> Findings {
    let mut f = Findings::default();
    let kind = cfg.kind();
    let err = |f: &mut Findings, m: String| f.errors.push(m);

    if kind != ExperimentKind::VerifyLemmas {
        if cfg.n_grid.is_empty() {
            err(&mut f, "n_grid must not be empty".into());
        }
        if cfg.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            err(&mut f, "n_grid must be strictly increasing".into());
        }
        if cfg.n_grid.first().is_some_and(|&n| n == 0) {
            err(&mut f, "n_grid entries must be positive".into());
        }
        match &cfg.prior {
            None => err(&mut f, "prior is required".into()),
            Some(p) => {
                if let Err(e) = p.validate() {
                    err(&mut f, format!("prior: {e}"));
                }
            }
        }
        match &cfg.radius {
            None => err(&mut f, "radius is required".into()),
            Some(r) => {
                if let Err(e) = r.validate() {
                    err(&mut f, format!("radius: {e}"));
                }
            }
        }
    }
    let b = &cfg.budgets;
    if b.mc_samples == 0
        || b.scale_samples == 0
        || b.quad_points == 0
        || b.mcmc_iters == 0
        || b.mcmc_thin == 0
        || b.replicates == 0
    {
        err(&mut f, "all budgets must be positive".into());
    }
    if b.mcmc_burn >= b.mcmc_iters {
        err(&mut f, "budgets.mcmc_burn must be below budgets.mcmc_iters".into());
    }
    if kind == ExperimentKind::Certificate {
        match cfg.outer_radius {
            None => err(&mut f, "certificate experiments need outer_radius".into()),
            Some(r) => {
                if let Err(e) = r.validate() {
                    err(&mut f, format!("outer_radius: {e}"));
                }
            }
        }
    }
    if let Some(s) = cfg.plugin_tau {
        let plugin = matches!(&cfg.prior, Some(PriorModel::GlobalLocal(p)) if matches!(p.global, GlobalFamily::PluginDirac { .. }));
        if !plugin {
            err(&mut f, "plugin_tau needs a global-local prior with a plug-in global variance".into());
        }
        if let Some(&n) = cfg.n_grid.iter().find(|&&n| !(s.tau(n) > 0.0 && s.tau(n).is_finite())) {
            err(&mut f, format!("plugin_tau gives a non-positive variance at n = {n}"));
        }
    }
    if kind == ExperimentKind::Posterior && f.is_ok() {
        if let Some(&n) = cfg.n_grid.first() {
            if let Err(e) = cfg.sampler(n) {
                err(&mut f, e);
            }
        }
    }
    if let ScaleProposal::Defensive { tau_range: (lo, hi), psi_rate } = cfg.scale_proposal {
        if !(lo > 0.0 && hi > lo && hi.is_finite() && psi_rate > 0.0 && psi_rate.is_finite()) {
            err(&mut f, "scale_proposal needs 0 < tau_range[0] < tau_range[1] and psi_rate > 0".into());
        }
    }
    if cfg.erfc_deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        err(&mut f, "erfc_deltas must lie in (0, 1)".into());
    }
    if cfg.method == MethodChoice::LassoUb {
        if cfg.theta0_spec.q != 1 {
            err(&mut f, "the exponential-local bound evaluators assume θ₀ has exactly one nonzero entry".into());
        }
        if !matches!(cfg.prior, Some(PriorModel::GlobalLocal(ref p)) if matches!(p.local, LocalFamily::Exponential { .. })) {
            f.warnings.push("lasso-ub evaluates a bound for exponential local scales; the configured prior differs".into());
        }
    }
    if cfg.method == MethodChoice::Exact {
        if let Some(PriorModel::GlobalLocal(p)) = &cfg.prior {
            if p.local != LocalFamily::DiracOne || !p.global.has_density() {
                err(&mut f, "method exact needs unit local scales and a global density".into());
            }
        } else {
            err(&mut f, "method exact needs a global-local prior".into());
        }
    }
    if !f.is_ok() || kind == ExperimentKind::VerifyLemmas {
        return f;
    }

    let radius = cfg.radius.expect("checked above");
    for &n in &cfg.n_grid {
        let t = radius.radius(n);
        match cfg.theta0_spec.build(n, t) {
            Err(e) => err(&mut f, format!("n = {n}: {e}")),
            Ok(th) if th.q() > 0 => {
                if t >= th.l2_norm() / 4.0 {
                    f.warnings.push(format!(
                        "n = {n}: t = {t:.6} ≥ ‖θ₀‖/4 = {:.6}; the shifted-ball upper factor does not apply",
                        th.l2_norm() / 4.0
                    ));
                }
            }
            Ok(_) => {}
        }
    }
    if let Some(PriorModel::PointMass(p)) = &cfg.prior {
        if matches!(cfg.method, MethodChoice::Exact | MethodChoice::ConditionalMc) {
            err(&mut f, format!("method {:?} is not available for the point-mass mixture (n = {})", cfg.method, p.n));
        }
    }
    f
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            prior: None,
            n_grid: Vec::new(),
            radius: None,
            outer_radius: None,
            plugin_tau: None,
            theta0_spec: Theta0Spec::default(),
            budgets: Budgets::default(),
            method: MethodChoice::Auto,
            scale_proposal: ScaleProposal::Prior,
            erfc_deltas: default_deltas(),
            seed: 0,
            output_path: None,
        }
    }
}
