use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ch::{DataKind, ProblemSpec, SolverConfig, WarmStart};
use crate::descent::StopMetric;
use crate::spectral::{Dealias, SpectralField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DealiasKey {
    #[default]
    None,
    ThreeHalves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricKey {
    #[default]
    IncrementSup,
    ResidualNorm,
}

impl From<MetricKey> for StopMetric {
    fn from(m: MetricKey) -> Self {
        match m {
            MetricKey::IncrementSup => StopMetric::IncrementSup,
            MetricKey::ResidualNorm => StopMetric::ResidualNorm,
        }
    }
}

/// Flat TOML run configuration. Every key is optional; the defaults are the
/// standard experiment settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub delta0: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub k_hat: usize,
    pub n_0: usize,
    pub f_center: [f64; 2],
    pub ustar_center: [f64; 2],
    pub f_data: DataKind,
    pub ustar_data: DataKind,
    pub mobility_constant: Option<f64>,
    /// `"zero"` or a field CSV path (relative to the config file).
    pub v0: String,
    pub warm_start: bool,
    pub dealias: DealiasKey,
    pub strict_inner: bool,
    pub outer_metric: MetricKey,
    pub inner_metric: MetricKey,
    pub output_dir: PathBuf,
    /// Used by the theory checks only.
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 128,
            length: 1.0,
            delta0: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            sigma: 1.0,
            tol_outer: 1e-6,
            tol_inner: 1e-6,
            k_hat: 1000,
            n_0: 1000,
            f_center: [0.25, 0.25],
            ustar_center: [0.75, 0.75],
            f_data: DataKind::Blob,
            ustar_data: DataKind::Blob,
            mobility_constant: None,
            v0: "zero".into(),
            warm_start: true,
            dealias: DealiasKey::None,
            strict_inner: false,
            outer_metric: MetricKey::IncrementSup,
            inner_metric: MetricKey::IncrementSup,
            output_dir: PathBuf::from("out"),
            seed: 0,
            base_dir: PathBuf::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text, &path.display().to_string())?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("`{key}` {why}")));
        if !(self.n >= 4 && self.n.is_power_of_two()) {
            return bad("n", "must be a power of two >= 4");
        }
        for (key, value) in [
            ("length", self.length),
            ("delta0", self.delta0),
            ("lambda", self.lambda),
            ("sigma", self.sigma),
            ("tol_outer", self.tol_outer),
            ("tol_inner", self.tol_inner),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(key, "must be positive");
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", "must be non-negative");
        }
        if self.k_hat == 0 {
            return bad("k_hat", "must be at least 1");
        }
        if self.n_0 == 0 {
            return bad("n_0", "must be at least 1");
        }
        if let Some(c) = self.mobility_constant {
            if !(c > 0.0 && c.is_finite()) {
                return bad("mobility_constant", "must be positive");
            }
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec {
            n: self.n,
            length: self.length,
            delta0: self.delta0,
            lambda: self.lambda,
            gamma: self.gamma,
            f_center: (self.f_center[0], self.f_center[1]),
            ustar_center: (self.ustar_center[0], self.ustar_center[1]),
            f_data: self.f_data,
            ustar_data: self.ustar_data,
            mobility_constant: self.mobility_constant,
        }
    }

    pub fn dealias(&self) -> Dealias {
        match self.dealias {
            DealiasKey::None => Dealias::None,
            DealiasKey::ThreeHalves => Dealias::ThreeHalves,
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let v0 = match self.v0.trim() {
            "zero" => None,
            path => {
                let path = self.base_dir.join(path);
                let field = SpectralField::load_csv(&path)?;
                if field.grid().n() != self.n {
                    return Err(Error::Config(format!(
                        "`v0` field {} has n = {}, config has n = {}",
                        path.display(),
                        field.grid().n(),
                        self.n
                    )));
                }
                Some(field)
            }
        };
        Ok(SolverConfig {
            sigma: self.sigma,
            tol_outer: self.tol_outer,
            tol_inner: self.tol_inner,
            k_hat: self.k_hat,
            n_0: self.n_0,
            outer_metric: self.outer_metric.into(),
            inner_metric: self.inner_metric.into(),
            warm_start: if self.warm_start {
                WarmStart::Iterate
            } else {
                WarmStart::Cold
            },
            strict_inner: self.strict_inner,
            v0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_standard_defaults() {
        let c = RunConfig::parse("", "test").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(
            (c.n, c.length, c.delta0, c.lambda, c.gamma, c.sigma),
            (128, 1.0, 0.1, 1.0, 0.0, 1.0)
        );
        assert_eq!(
            (c.tol_outer, c.tol_inner, c.k_hat, c.n_0),
            (1e-6, 1e-6, 1000, 1000)
        );
        assert_eq!((c.f_center, c.ustar_center), ([0.25, 0.25], [0.75, 0.75]));
        assert!(c.warm_start);
        assert_eq!(c.solver_config().unwrap(), SolverConfig::default());
        assert_eq!(c.problem_spec(), ProblemSpec::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("delta_zero = 0.1", "test").unwrap_err();
        assert!(err.to_string().contains("delta_zero"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in ["delta0 = -1.0", "n = 100", "sigma = 0.0", "k_hat = 0"] {
            assert!(
                matches!(RunConfig::parse(text, "t"), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn overrides_are_read() {
        let c = RunConfig::parse(
            "n = 32\ndelta0 = 0.01\nf_data = \"zero\"\nwarm_start = false\ndealias = \"three_halves\"",
            "t",
        )
        .unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.f_data, DataKind::Zero);
        assert_eq!(c.dealias(), Dealias::ThreeHalves);
        assert_eq!(c.solver_config().unwrap().warm_start, WarmStart::Cold);
    }
}
