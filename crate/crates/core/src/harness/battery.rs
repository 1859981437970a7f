use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::calibrate::{double_bootstrap_decision, double_bootstrap_rule, lm_bootstrap_pvalue, BootstrapConfig};
use crate::error::{invalid, Result};
use crate::frictionless::{aj_test, cauchy_combine_equal, kernel_moments, lm_test, AjConfig, LmConfig};
use crate::model::{JumpTestReport, Method, ObservedPath};
use crate::noise::{la_test, noisy_cauchy, pa_test, tsrsv_spot, LaConfig, PaConfig, WeightKind};
use crate::rng;

/// One method of a battery with its own `(k, p)` where relevant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self { method, k: None, p: None }
    }

    pub fn with_k(method: Method, k: usize) -> Self {
        Self { method, k: Some(k), p: None }
    }

    /// Table label: `AJ-2`, `CC-3`, `LM`, `AJJ`, `LA`, `CCN`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Aj | Method::Cc => format!("{}-{}", self.method.label(), self.k.unwrap_or(2)),
            Method::Pa => "AJJ".into(),
            m => m.label().into(),
        }
    }

    fn aj_config(&self, tuning: &Tuning) -> Result<AjConfig> {
        let mut cfg = AjConfig::new(self.p.unwrap_or(4.0), self.k.unwrap_or(2))?;
        cfg.kernel_mc_paths = tuning.kernel_mc_paths;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LmCalibration {
    #[default]
    Bootstrap,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaTuning {
    pub p: u32,
    /// Pre-averaging window; when absent, `⌈theta/√Δ⌉`.
    #[serde(default)]
    pub k_n: Option<usize>,
    /// Block length; when absent, `⌈Δ^{-a}⌉`.
    #[serde(default)]
    pub r_n: Option<usize>,
    pub theta: f64,
    pub a: f64,
}

impl Default for PaTuning {
    fn default() -> Self {
        Self { p: 4, k_n: None, r_n: None, theta: 1.0, a: 0.85 }
    }
}

impl PaTuning {
    pub fn config(&self, delta: f64) -> Result<PaConfig> {
        let k_n = self.k_n.unwrap_or((self.theta / delta.sqrt()).ceil() as usize);
        let r_n = self.r_n.unwrap_or(delta.powf(-self.a).ceil() as usize);
        PaConfig::new(self.p, k_n, r_n, WeightKind::Sine, WeightKind::SinePower { a: 2.0 }, delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaTuning {
    pub lambda: f64,
    #[serde(default)]
    pub m_n: Option<usize>,
}

impl Default for LaTuning {
    fn default() -> Self {
        Self { lambda: 1.0, m_n: None }
    }
}

impl LaTuning {
    pub fn config(&self, delta: f64) -> Result<LaConfig> {
        let mut cfg = LaConfig::for_grid(delta, self.lambda)?;
        if let Some(m) = self.m_n {
            cfg.m_n = m;
        }
        Ok(cfg)
    }
}

/// Tuning shared by every method of a battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    #[serde(default)]
    pub lm: LmConfig,
    #[serde(default)]
    pub lm_calibration: LmCalibration,
    #[serde(default)]
    pub pa: PaTuning,
    #[serde(default)]
    pub la: LaTuning,
    /// Monte Carlo budget for the AJ kernel variance.
    #[serde(default = "default_kernel_paths")]
    pub kernel_mc_paths: usize,
}

fn default_kernel_paths() -> usize {
    AjConfig::default().kernel_mc_paths
}

impl Default for Tuning {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            lm_calibration: LmCalibration::default(),
            pa: PaTuning::default(),
            la: LaTuning::default(),
            kernel_mc_paths: default_kernel_paths(),
        }
    }
}

/// Result of one method on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub label: String,
    pub report: JumpTestReport,
    /// `(p̂*, p̂**)` when the decision comes from the double bootstrap.
    #[serde(skip)]
    pub double: Option<(f64, Vec<f64>)>,
}

impl MethodOutcome {
    /// Level-`level` decision: the double-bootstrap rule for the calibrated
    /// local-average test, `p ≤ level` otherwise.
    pub fn rejects(&self, level: f64) -> bool {
        match &self.double {
            Some((p_star, p2)) => double_bootstrap_rule(*p_star, p2, level).0,
            None => self.report.rejects(level),
        }
    }
}

/// Shared per-path intermediates, so combinations reuse their components.
struct Cache<'a> {
    path: &'a ObservedPath,
    tuning: &'a Tuning,
    bootstrap: BootstrapConfig,
    aj: HashMap<(usize, u64), JumpTestReport>,
    lm: Option<JumpTestReport>,
    pa: Option<JumpTestReport>,
    la: Option<MethodOutcome>,
}

impl Cache<'_> {
    fn aj(&mut self, spec: &MethodSpec) -> Result<JumpTestReport> {
        let cfg = spec.aj_config(self.tuning)?;
        let key = (cfg.k, cfg.p.to_bits());
        if let Some(r) = self.aj.get(&key) {
            return Ok(r.clone());
        }
        let moments = kernel_moments(&cfg, None)?;
        let r = aj_test(self.path, &cfg, &moments)?;
        self.aj.insert(key, r.clone());
        Ok(r)
    }

    fn lm(&mut self) -> Result<JumpTestReport> {
        if let Some(r) = &self.lm {
            return Ok(r.clone());
        }
        let mut r = lm_test(self.path, &self.tuning.lm)?;
        if self.tuning.lm_calibration == LmCalibration::Bootstrap {
            let p = lm_bootstrap_pvalue(self.path, &self.tuning.lm, &self.bootstrap)?;
            r.tuning.insert("asymptotic_pvalue".into(), r.pvalue);
            r.tuning.insert("bootstrap_b1".into(), self.bootstrap.b1 as f64);
            r.pvalue = p;
        }
        self.lm = Some(r.clone());
        Ok(r)
    }

    fn pa(&mut self) -> Result<JumpTestReport> {
        if let Some(r) = &self.pa {
            return Ok(r.clone());
        }
        let cfg = self.tuning.pa.config(self.path.delta())?;
        let r = pa_test(self.path, &cfg)?;
        self.pa = Some(r.clone());
        Ok(r)
    }

    fn la(&mut self) -> Result<MethodOutcome> {
        if let Some(r) = &self.la {
            return Ok(r.clone());
        }
        let cfg = self.tuning.la.config(self.path.delta())?;
        let spot = tsrsv_spot(self.path, &cfg)?;
        let mut report = la_test(self.path, &cfg, &spot)?;
        let d = double_bootstrap_decision(self.path, &cfg, &self.bootstrap)?;
        report.tuning.insert("asymptotic_pvalue".into(), report.pvalue);
        report.tuning.insert("p_star".into(), d.p_star);
        report.tuning.insert("threshold".into(), d.threshold);
        report.tuning.insert("bootstrap_b1".into(), self.bootstrap.b1 as f64);
        report.tuning.insert("bootstrap_b2".into(), self.bootstrap.b2 as f64);
        report.pvalue = d.adjusted_pvalue;
        let outcome = MethodOutcome {
            label: "LA".into(),
            report,
            double: Some((d.p_star, d.stage2_pvalues)),
        };
        self.la = Some(outcome.clone());
        Ok(outcome)
    }
}

fn combined(method: Method, t: f64, p: f64, p_a: f64, p_b: f64, names: (&str, &str)) -> JumpTestReport {
    JumpTestReport::new(method, t, t, p).tune(names.0, p_a).tune(names.1, p_b)
}

/// Runs `methods` on one path. `seed` drives every bootstrap draw.
pub fn evaluate(
    path: &ObservedPath,
    methods: &[MethodSpec],
    tuning: &Tuning,
    bootstrap: &BootstrapConfig,
    seed: u64,
) -> Result<Vec<MethodOutcome>> {
    if methods.is_empty() {
        return invalid("no methods requested");
    }
    let bootstrap = BootstrapConfig { seed: rng::derive(seed, rng::tag::BOOTSTRAP), ..*bootstrap };
    let mut cache =
        Cache { path, tuning, bootstrap, aj: HashMap::new(), lm: None, pa: None, la: None };
    methods
        .iter()
        .map(|spec| {
            let label = spec.label();
            let outcome = |report| MethodOutcome { label: label.clone(), report, double: None };
            Ok(match spec.method {
                Method::Aj => outcome(cache.aj(spec)?),
                Method::Lm => outcome(cache.lm()?),
                Method::Cc => {
                    let (a, l) = (cache.aj(spec)?, cache.lm()?);
                    let (t, p) = cauchy_combine_equal(&[a.pvalue, l.pvalue])?;
                    let mut r = combined(Method::Cc, t, p, a.pvalue, l.pvalue, ("p_aj", "p_lm"));
                    r.location = l.location;
                    r.tuning.insert("k".into(), spec.k.unwrap_or(2) as f64);
                    r.tuning.insert("p".into(), spec.p.unwrap_or(4.0));
                    outcome(r)
                }
                Method::Pa => outcome(cache.pa()?),
                Method::La => MethodOutcome { label, ..cache.la()? },
                Method::Ccn => {
                    let (a, l) = (cache.pa()?, cache.la()?);
                    let (t, p) = noisy_cauchy(a.pvalue, l.report.pvalue)?;
                    let mut r =
                        combined(Method::Ccn, t, p, a.pvalue, l.report.pvalue, ("p_pa", "p_la"));
                    r.location = l.report.location;
                    outcome(r)
                }
            })
        })
        .collect()
}
