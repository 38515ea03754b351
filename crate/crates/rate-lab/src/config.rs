//! Flat `key = value` experiment configuration.
//!
//! Unknown keys and duplicate keys are errors; `#` starts a comment. The
//! full key set is documented in the repository README and mirrored by
//! [`ExperimentConfig::echo`], which serializes the resolved
//! configuration back out for reports.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use specfda::filter::Filter;
use specfda::kernel::{Kernel1, Kernel2};
use specfda::synth::{HRule, MScheme, XiRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Mean,
    Covariance,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Mean => "mean",
            Task::Covariance => "covariance",
        }
    }
}

/// How the fit's regularization parameter is chosen per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaPolicy {
    /// Closed-form rate-optimal schedule from `(n, m, smoothness, decay)`.
    Oracle,
    Fixed(f64),
    /// Grid search by held-out-curve validation.
    GridCv(Vec<f64>),
}

impl LambdaPolicy {
    fn parse(s: &str) -> Result<LambdaPolicy> {
        if s == "oracle" {
            return Ok(LambdaPolicy::Oracle);
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            return Ok(LambdaPolicy::Fixed(v.parse()?));
        }
        if let Some(v) = s.strip_prefix("cv:") {
            let vals = v
                .split(',')
                .map(|x| x.parse::<f64>().map_err(Into::into))
                .collect::<Result<Vec<f64>>>()?;
            return Ok(LambdaPolicy::GridCv(vals));
        }
        bail!("bad lambda policy {s:?}; expected oracle | fixed:<v> | cv:<v1,v2,...>")
    }

    fn echo(&self) -> String {
        match self {
            LambdaPolicy::Oracle => "oracle".into(),
            LambdaPolicy::Fixed(v) => format!("fixed:{v}"),
            LambdaPolicy::GridCv(vs) => format!(
                "cv:{}",
                vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

/// Which computational route covariance fits take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovPath {
    /// Tensor-basis route for product-of-BrownianMin kernels, dense
    /// otherwise.
    Auto,
    Dense,
    Operator,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub task: Task,
    pub kernel: Kernel1,
    pub kernel_spec: String,
    pub kernel2: Option<Kernel2>,
    pub kernel2_spec: String,
    pub filter: Filter,
    pub alpha: f64,
    pub alpha1: f64,
    pub b: f64,
    pub b1: f64,
    pub n_list: Vec<usize>,
    pub m_target: f64,
    pub m_scheme: MScheme,
    pub m_scheme_spec: String,
    pub reps: usize,
    pub sigma0: f64,
    pub seed: u64,
    pub lambda: LambdaPolicy,
    pub eta: LambdaPolicy,
    pub h_rule: HRule,
    pub h_rule_spec: String,
    pub xi: XiRule,
    pub xi_spec: String,
    pub kl_modes: usize,
    pub truncation: usize,
    pub norm_grid: usize,
    pub norm_grid2: usize,
    pub pair_cap: usize,
    pub cov_path: CovPath,
    pub tensor_modes: usize,
    pub slope_target: Option<f64>,
    pub slope_tol: f64,
    pub gamma_list: Vec<f64>,
    pub ratio_threshold: f64,
    pub slope_gap_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Mean,
            kernel: Kernel1::BrownianMin,
            kernel_spec: "brownian".into(),
            kernel2: None,
            kernel2_spec: String::new(),
            filter: Filter::SpectralCutoff,
            alpha: 0.5,
            alpha1: 0.5,
            b: 2.0,
            b1: 2.0,
            n_list: vec![25, 50, 100, 200],
            m_target: 5.0,
            m_scheme: MScheme::Constant,
            m_scheme_spec: "constant".into(),
            reps: 50,
            sigma0: 0.5,
            seed: 0,
            lambda: LambdaPolicy::Oracle,
            eta: LambdaPolicy::Oracle,
            h_rule: HRule::FixedUnit,
            h_rule_spec: "unit".into(),
            xi: XiRule::Polynomial { decay: 2.0 },
            xi_spec: "poly:2".into(),
            kl_modes: specfda::consts::DEFAULT_KL_MODES,
            truncation: specfda::consts::DEFAULT_TRUNCATION,
            norm_grid: specfda::consts::DEFAULT_NORM_GRID,
            norm_grid2: specfda::consts::DEFAULT_NORM_GRID2,
            pair_cap: specfda::consts::DEFAULT_PAIR_CAP,
            cov_path: CovPath::Auto,
            tensor_modes: 400,
            slope_target: None,
            slope_tol: 0.15,
            gamma_list: vec![],
            ratio_threshold: 0.7,
            slope_gap_tol: 0.02,
        }
    }
}

fn parse_kernel1(s: &str) -> Result<Kernel1> {
    if s == "brownian" {
        return Ok(Kernel1::BrownianMin);
    }
    if let Some(v) = s.strip_prefix("gaussian:") {
        return Ok(Kernel1::gaussian(v.parse()?)?);
    }
    if let Some(v) = s.strip_prefix("matern:") {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 2 {
            bail!("matern kernel needs matern:<smoothness>:<lengthscale>");
        }
        return Ok(Kernel1::matern(parts[0].parse()?, parts[1].parse()?)?);
    }
    bail!("bad kernel {s:?}; expected brownian | gaussian:<bw> | matern:<nu>:<ls>")
}

fn parse_kernel2(s: &str) -> Result<Kernel2> {
    if let Some(v) = s.strip_prefix("product:") {
        return Ok(Kernel2::product(parse_kernel1(v)?));
    }
    if let Some(v) = s.strip_prefix("direct:") {
        return Ok(Kernel2::direct(parse_kernel1(v)?)?);
    }
    bail!("bad pair kernel {s:?}; expected product:<kernel> | direct:<kernel>")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(Into::into))
        .collect()
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format. Every key is optional except
    /// `task`; defaults mirror [`ExperimentConfig::default`].
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", ln + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if seen.insert(key.clone(), value).is_some() {
                bail!("line {}: duplicate key {key:?}", ln + 1);
            }
        }

        let mut cfg = ExperimentConfig::default();
        let mut task_seen = false;
        for (key, value) in &seen {
            let ctx = || format!("key {key:?}");
            match key.as_str() {
                "task" => {
                    cfg.task = match value.as_str() {
                        "mean" => Task::Mean,
                        "covariance" => Task::Covariance,
                        other => bail!("bad task {other:?}; expected mean | covariance"),
                    };
                    task_seen = true;
                }
                "kernel" => {
                    cfg.kernel = parse_kernel1(value).with_context(ctx)?;
                    cfg.kernel_spec = value.clone();
                }
                "kernel2" => {
                    cfg.kernel2 = Some(parse_kernel2(value).with_context(ctx)?);
                    cfg.kernel2_spec = value.clone();
                }
                "filter" => cfg.filter = Filter::from_name(value)?,
                "alpha" => cfg.alpha = value.parse().with_context(ctx)?,
                "alpha1" => cfg.alpha1 = value.parse().with_context(ctx)?,
                "b" => cfg.b = value.parse().with_context(ctx)?,
                "b1" => cfg.b1 = value.parse().with_context(ctx)?,
                "n_list" => cfg.n_list = parse_list(value).with_context(ctx)?,
                "m" => cfg.m_target = value.parse().with_context(ctx)?,
                "m_scheme" => {
                    cfg.m_scheme = if value == "constant" {
                        MScheme::Constant
                    } else if let Some(v) = value.strip_prefix("twopoint:") {
                        let parts: Vec<&str> = v.split(':').collect();
                        if parts.len() != 3 {
                            bail!("twopoint scheme needs twopoint:<lo>:<hi>:<fraction>");
                        }
                        MScheme::TwoPoint {
                            lo: parts[0].parse().with_context(ctx)?,
                            hi: parts[1].parse().with_context(ctx)?,
                            fraction: parts[2].parse().with_context(ctx)?,
                        }
                    } else {
                        bail!("bad m_scheme {value:?}");
                    };
                    cfg.m_scheme_spec = value.clone();
                }
                "reps" => cfg.reps = value.parse().with_context(ctx)?,
                "sigma0" => cfg.sigma0 = value.parse().with_context(ctx)?,
                "seed" => cfg.seed = value.parse().with_context(ctx)?,
                "lambda" => cfg.lambda = LambdaPolicy::parse(value)?,
                "eta" => cfg.eta = LambdaPolicy::parse(value)?,
                "h_rule" => {
                    cfg.h_rule = if value == "unit" {
                        HRule::FixedUnit
                    } else if value == "zero" {
                        HRule::Explicit(vec![0.0])
                    } else if let Some(v) = value.strip_prefix("poly:") {
                        HRule::Polynomial {
                            decay: v.parse().with_context(ctx)?,
                        }
                    } else {
                        bail!("bad h_rule {value:?}; expected unit | zero | poly:<decay>");
                    };
                    cfg.h_rule_spec = value.clone();
                }
                "xi" => {
                    cfg.xi = parse_xi(value).with_context(ctx)?;
                    cfg.xi_spec = value.clone();
                }
                "kl_modes" => cfg.kl_modes = value.parse().with_context(ctx)?,
                "truncation" => cfg.truncation = value.parse().with_context(ctx)?,
                "norm_grid" => cfg.norm_grid = value.parse().with_context(ctx)?,
                "norm_grid2" => cfg.norm_grid2 = value.parse().with_context(ctx)?,
                "pair_cap" => cfg.pair_cap = value.parse().with_context(ctx)?,
                "cov_path" => {
                    cfg.cov_path = match value.as_str() {
                        "auto" => CovPath::Auto,
                        "dense" => CovPath::Dense,
                        "operator" => CovPath::Operator,
                        other => bail!("bad cov_path {other:?}"),
                    }
                }
                "tensor_modes" => cfg.tensor_modes = value.parse().with_context(ctx)?,
                "slope_target" => cfg.slope_target = Some(value.parse().with_context(ctx)?),
                "slope_tol" => cfg.slope_tol = value.parse().with_context(ctx)?,
                "gamma_list" => cfg.gamma_list = parse_list(value).with_context(ctx)?,
                "ratio_threshold" => cfg.ratio_threshold = value.parse().with_context(ctx)?,
                "slope_gap_tol" => cfg.slope_gap_tol = value.parse().with_context(ctx)?,
                other => bail!("unknown key {other:?}"),
            }
        }
        if !task_seen {
            bail!("missing required key \"task\"");
        }
        if cfg.reps < 1 {
            bail!("reps must be at least 1");
        }
        if cfg.n_list.is_empty() {
            bail!("n_list must not be empty");
        }
        if cfg.task == Task::Covariance && cfg.kernel2.is_none() {
            cfg.kernel2 = Some(Kernel2::product(cfg.kernel));
            cfg.kernel2_spec = format!("product:{}", cfg.kernel_spec);
        }
        Ok(cfg)
    }

    /// Resolved configuration as sorted key/value pairs for reporting.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = vec![
            ("task".into(), self.task.name().into()),
            ("kernel".into(), self.kernel_spec.clone()),
            ("filter".into(), self.filter.name().into()),
            ("alpha".into(), self.alpha.to_string()),
            ("alpha1".into(), self.alpha1.to_string()),
            ("b".into(), self.b.to_string()),
            ("b1".into(), self.b1.to_string()),
            (
                "n_list".into(),
                self.n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("m".into(), self.m_target.to_string()),
            ("m_scheme".into(), self.m_scheme_spec.clone()),
            ("reps".into(), self.reps.to_string()),
            ("sigma0".into(), self.sigma0.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("lambda".into(), self.lambda.echo()),
            ("eta".into(), self.eta.echo()),
            ("h_rule".into(), self.h_rule_spec.clone()),
            ("xi".into(), self.xi_spec.clone()),
            ("kl_modes".into(), self.kl_modes.to_string()),
            ("truncation".into(), self.truncation.to_string()),
            ("norm_grid".into(), self.norm_grid.to_string()),
            ("norm_grid2".into(), self.norm_grid2.to_string()),
            ("pair_cap".into(), self.pair_cap.to_string()),
            ("tensor_modes".into(), self.tensor_modes.to_string()),
            ("slope_tol".into(), self.slope_tol.to_string()),
        ];
        if !self.kernel2_spec.is_empty() {
            kv.push(("kernel2".into(), self.kernel2_spec.clone()));
        }
        if let Some(t) = self.slope_target {
            kv.push(("slope_target".into(), t.to_string()));
        }
        if !self.gamma_list.is_empty() {
            kv.push((
                "gamma_list".into(),
                self.gamma_list
                    .iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
        }
        kv.sort();
        kv
    }
}

fn parse_xi(s: &str) -> Result<XiRule> {
    if s == "none" {
        return Ok(XiRule::Finite(vec![]));
    }
    if let Some(v) = s.strip_prefix("poly:") {
        let parts: Vec<&str> = v.split(':').collect();
        match parts.len() {
            1 => {
                return Ok(XiRule::Polynomial {
                    decay: parts[0].parse()?,
                })
            }
            2 => {
                // scaled polynomial sugar: expands to an explicit vector
                let decay: f64 = parts[0].parse()?;
                let scale: f64 = parts[1].parse()?;
                if decay <= 1.0 {
                    bail!("polynomial variance decay must exceed 1, got {decay}");
                }
                let v: Vec<f64> = (1..=specfda::consts::DEFAULT_KL_MODES)
                    .map(|k| scale * (k as f64).powf(-decay))
                    .collect();
                return Ok(XiRule::Finite(v));
            }
            _ => bail!("bad xi rule {s:?}"),
        }
    }
    if let Some(v) = s.strip_prefix("finite:") {
        return Ok(XiRule::Finite(parse_list(v)?));
    }
    bail!("bad xi rule {s:?}; expected poly:<q> | poly:<q>:<scale> | finite:<v,..> | none")
}
