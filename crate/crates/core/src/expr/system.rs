use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Matrix, State, SystemModel};
use crate::systems::Params;
use crate::validate::validate_system;

use super::{eval_jet_order, parse_with, Expr, ExprError, Symbols};

/// Declarative definition of a system through expressions.
///
/// ```toml
/// variables = ["v", "u"]
/// params = { k = 1.0, gamma = 2.0 }
/// flux = ["-u", "k*v^(-gamma)"]
/// entropy = "u*u/2 + k*v^(1-gamma)/(gamma-1)"
/// entropy_flux = "u*k*v^(-gamma)"
/// domain = ["v"]
/// samples = [[1.0, 0.0], [0.5, -1.0]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprSystemConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Dimension; may be omitted when `variables` is given.
    #[serde(default)]
    pub n: Option<usize>,
    /// Optional names for `u1 … un`.
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default)]
    pub params: Params,
    pub flux: Vec<String>,
    pub entropy: String,
    #[serde(default)]
    pub entropy_flux: Option<String>,
    /// Each expression must be strictly positive at admissible states.
    #[serde(default)]
    pub domain: Vec<String>,
    /// States on which the definition is validated before use.
    #[serde(default)]
    pub samples: Vec<Vec<f64>>,
}

/// A [`SystemModel`] whose derivatives come from forward-mode jets.
#[derive(Debug, Clone)]
pub struct ExprSystem {
    name: String,
    n: usize,
    params: Params,
    flux: Vec<Expr>,
    entropy: Expr,
    entropy_flux: Option<Expr>,
    domain: Vec<Expr>,
}

impl ExprSystem {
    /// Parses a definition without running validation.
    pub fn from_config(config: &ExprSystemConfig) -> Result<Self> {
        let n = match (config.n, config.variables.len()) {
            (Some(n), 0) => n,
            (None, 0) => {
                return Err(ExprError::Definition("declare `n` or `variables`".into()).into())
            }
            (None, k) => k,
            (Some(n), k) if n == k => n,
            (Some(n), k) => {
                return Err(ExprError::Definition(format!(
                    "n = {n} but {k} variable names declared"
                ))
                .into())
            }
        };
        if n == 0 {
            return Err(ExprError::Definition("n must be positive".into()).into());
        }
        if config.flux.len() != n {
            return Err(ExprError::Definition(format!(
                "expected {n} flux components, got {}",
                config.flux.len()
            ))
            .into());
        }
        let param_names: Vec<String> = config.params.keys().cloned().collect();
        let symbols = Symbols::new(n, &config.variables, &param_names);
        let parse = |src: &str| parse_with(src, &symbols);
        Ok(ExprSystem {
            name: config.name.clone().unwrap_or_else(|| "custom".to_string()),
            n,
            params: config.params.clone(),
            flux: config.flux.iter().map(|s| parse(s)).collect::<std::result::Result<_, _>>()?,
            entropy: parse(&config.entropy)?,
            entropy_flux: config.entropy_flux.as_deref().map(parse).transpose()?,
            domain: config.domain.iter().map(|s| parse(s)).collect::<std::result::Result<_, _>>()?,
        })
    }

    fn jet(&self, e: &Expr, u: &State, order: u8) -> Result<super::Jet> {
        Ok(eval_jet_order(e, u.as_slice(), &self.params, order)?)
    }
}

impl SystemModel for ExprSystem {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn flux(&self, u: &State) -> Result<State> {
        let vals = self
            .flux
            .iter()
            .map(|e| self.jet(e, u, 0).map(|j| j.value))
            .collect::<Result<Vec<_>>>()?;
        crate::model::finite_vec(State::from_vec(vals), "flux", u)
    }
    fn jacobian(&self, u: &State) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.n, self.n);
        for (i, e) in self.flux.iter().enumerate() {
            let j = self.jet(e, u, 1)?;
            for (k, g) in j.gradient.iter().enumerate() {
                m[(i, k)] = *g;
            }
        }
        crate::model::finite_mat(m, "jacobian", u)
    }
    fn entropy(&self, u: &State) -> Result<f64> {
        crate::model::finite_scalar(self.jet(&self.entropy, u, 0)?.value, "entropy", u)
    }
    fn entropy_gradient(&self, u: &State) -> Result<State> {
        let j = self.jet(&self.entropy, u, 1)?;
        crate::model::finite_vec(State::from_vec(j.gradient), "entropy gradient", u)
    }
    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        crate::model::finite_mat(self.jet(&self.entropy, u, 2)?.hessian(), "entropy Hessian", u)
    }
    fn has_entropy_flux(&self) -> bool {
        self.entropy_flux.is_some()
    }
    fn entropy_flux(&self, u: &State) -> Result<f64> {
        match &self.entropy_flux {
            Some(e) => crate::model::finite_scalar(self.jet(e, u, 0)?.value, "entropy flux", u),
            None => Err(Error::EntropyFluxUnavailable),
        }
    }
    fn in_domain(&self, u: &State) -> bool {
        u.len() == self.n
            && u.iter().all(|x| x.is_finite())
            && self
                .domain
                .iter()
                .all(|e| matches!(self.jet(e, u, 0), Ok(j) if j.value > 0.0))
    }
}

/// Parses a definition and validates it on its declared samples.
pub fn build_system(config: &ExprSystemConfig) -> Result<ExprSystem> {
    let system = ExprSystem::from_config(config)?;
    if config.samples.is_empty() {
        return Err(ExprError::Definition("declare at least one sample state".into()).into());
    }
    let samples: Vec<State> = config
        .samples
        .iter()
        .map(|s| State::from_vec(s.clone()))
        .collect();
    let report = validate_system(&system, &samples)?;
    if let Some((sample, reason)) = report.first_failure() {
        return Err(Error::Validation {
            state: sample.state.iter().copied().collect(),
            reason: reason.to_string(),
        });
    }
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p_system_config() -> ExprSystemConfig {
        ExprSystemConfig {
            name: Some("p_system_expr".into()),
            n: None,
            variables: vec!["v".into(), "u".into()],
            params: [("k".to_string(), 1.0), ("gamma".to_string(), 2.0)].into_iter().collect(),
            flux: vec!["-u".into(), "k*v^(-gamma)".into()],
            entropy: "u*u/2 + k*v^(1-gamma)/(gamma-1)".into(),
            entropy_flux: Some("u*k*v^(-gamma)".into()),
            domain: vec!["v".into()],
            samples: vec![vec![1.0, 0.0], vec![0.5, -1.2], vec![2.0, 0.7]],
        }
    }

    #[test]
    fn p_system_definition_builds() {
        let sys = build_system(&p_system_config()).unwrap();
        assert_eq!(sys.dim(), 2);
        assert!(sys.in_domain(&State::from_vec(vec![0.1, 3.0])));
        assert!(!sys.in_domain(&State::from_vec(vec![-0.1, 3.0])));
    }

    #[test]
    fn indefinite_entropy_rejected() {
        let mut cfg = p_system_config();
        cfg.entropy = "u1*u2".into();
        cfg.entropy_flux = None;
        let err = build_system(&cfg).unwrap_err();
        match err {
            Error::Validation { reason, .. } => {
                assert!(reason.contains("not positive definite"), "{reason}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_definitions_rejected() {
        let mut cfg = p_system_config();
        cfg.flux.pop();
        assert!(build_system(&cfg).is_err());
        let mut cfg = p_system_config();
        cfg.entropy = "u*u/2 + rho".into();
        assert!(matches!(
            build_system(&cfg),
            Err(Error::Expr(ExprError::UnknownIdentifier { .. }))
        ));
        let mut cfg = p_system_config();
        cfg.samples.clear();
        assert!(build_system(&cfg).is_err());
        let mut cfg = p_system_config();
        cfg.entropy_flux = Some("u*k*v^(-gamma) + 1e-3*u*u".into());
        assert!(matches!(build_system(&cfg), Err(Error::Validation { .. })));
    }
}
