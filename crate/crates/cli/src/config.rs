use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Heat1d,
    Heat2d,
    Telegraph,
    EvoltimeBench,
    ComplexityReport,
    EpsilonSweep,
    OrderStudy,
}

impl Kind {
    pub fn is_frontend(self) -> bool {
        matches!(self, Kind::Heat1d | Kind::Heat2d | Kind::Telegraph)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Heat1d => "heat1d",
            Kind::Heat2d => "heat2d",
            Kind::Telegraph => "telegraph",
            Kind::EvoltimeBench => "evoltime-bench",
            Kind::ComplexityReport => "complexity-report",
            Kind::EpsilonSweep => "epsilon-sweep",
            Kind::OrderStudy => "order-study",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionName {
    Integral,
    SinglePoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PRuleName {
    Spectral,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorName {
    Auto,
    Eigen,
    Chebyshev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormName {
    Displayed,
    Consistent,
}

/// One formula or one per axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn per_axis(&self, d: usize) -> Result<Vec<String>, String> {
        match self {
            OneOrMany::One(s) => Ok(vec![s.clone(); d]),
            OneOrMany::Many(v) if v.len() == d => Ok(v.clone()),
            OneOrMany::Many(v) => Err(format!("a: expected 1 or {d} formulas, got {}", v.len())),
        }
    }
}

/// Dirichlet traces of the telegraph fields, formulas in `t`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traces {
    pub u_left: Option<String>,
    pub u_right: Option<String>,
    pub v_left: Option<String>,
    pub v_right: Option<String>,
}

/// A single JSON experiment description. Which fields are required depends
/// on `kind`; unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Problem analysed by `epsilon-sweep` and `complexity-report`.
    pub base: Option<Kind>,

    pub nx: Option<usize>,
    pub nt: Option<usize>,
    pub dt: Option<f64>,
    /// Heat: `dt = c h^2`. Telegraph: `dt = c h^{2-1/beta}`.
    pub dt_rule: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub horizon: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,

    /// Diffusivity: heat `a_k(t)` (one or per axis), telegraph `a(t)`.
    pub a: Option<OneOrMany>,
    /// Multiply `a` by epsilon so that `a/epsilon` stays fixed across a sweep.
    #[serde(default)]
    pub scale_a_by_epsilon: bool,
    pub u0: Option<String>,
    pub v0: Option<String>,
    /// Heat Dirichlet data `g(t, x[, y])`.
    pub boundary: Option<String>,
    pub traces: Option<Traces>,
    pub boundary_form: Option<FormName>,

    pub k: Option<f64>,
    pub np: Option<usize>,
    pub max_np: Option<usize>,
    pub reconstruction: Option<ReconstructionName>,
    pub p_diamond_rule: Option<PRuleName>,
    pub propagator: Option<PropagatorName>,

    pub seed: Option<u64>,
    pub matrices: Option<usize>,
    pub dim: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub remark_a: Option<Vec<f64>>,

    pub betas: Option<Vec<f64>>,
    pub nx_list: Option<Vec<usize>>,
}

fn default_delta() -> f64 {
    1e-2
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn req<T: Copy>(v: Option<T>, name: &str, kind: Kind) -> Result<T, String> {
        v.ok_or_else(|| format!("{}: missing required field {name:?}", kind.name()))
    }

    pub fn req_str<'a>(v: &'a Option<String>, name: &str, kind: Kind) -> Result<&'a str, String> {
        v.as_deref().ok_or_else(|| format!("{}: missing required field {name:?}", kind.name()))
    }

    /// Field-level checks that do not depend on the kind.
    pub fn check_common(&self) -> Result<(), String> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("delta = {} must lie in (0,1)", self.delta));
        }
        for (name, v) in [("dt", self.dt), ("dt_rule", self.dt_rule), ("epsilon", self.epsilon), ("horizon", self.horizon)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(format!("{name} = {x} must be positive"));
                }
            }
        }
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(format!("k = {k} must be positive"));
            }
        }
        for (name, v) in [("np", self.np), ("max_np", self.max_np)] {
            if let Some(n) = v {
                if n < 4 || !n.is_power_of_two() {
                    return Err(format!("{name} = {n} must be a power of two >= 4"));
                }
            }
        }
        if let Some(es) = &self.epsilons {
            if es.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err("epsilons must all be positive".into());
            }
        }
        Ok(())
    }
}
