use super::design::DesignMatrix;
use super::inference::FamilyKind;
use super::irls::{fit_logistic, fit_modified_poisson};
use super::linear::fit_linear;
use super::model::{FitOptions, ModelFit};
use crate::data::ColumnKind;
use crate::error::Result;
use crate::registry::{Named, Registry};

/// A regression family that can be fitted to a design and a response.
pub trait GlmFamily: Named + Send + Sync {
    fn kind(&self) -> FamilyKind;

    /// Column kind the response must have.
    fn response_kind(&self) -> ColumnKind;

    fn fit(&self, x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit>;
}

pub struct Linear;
pub struct Logistic;
pub struct ModifiedPoisson;

impl Named for Linear {
    fn name(&self) -> &'static str {
        FamilyKind::Linear.name()
    }
}

impl GlmFamily for Linear {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Linear
    }
    fn response_kind(&self) -> ColumnKind {
        ColumnKind::Continuous
    }
    fn fit(&self, x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
        fit_linear(x, y, opts)
    }
}

impl Named for Logistic {
    fn name(&self) -> &'static str {
        FamilyKind::Logistic.name()
    }
}

impl GlmFamily for Logistic {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Logistic
    }
    fn response_kind(&self) -> ColumnKind {
        ColumnKind::Binary
    }
    fn fit(&self, x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
        fit_logistic(x, y, opts)
    }
}

impl Named for ModifiedPoisson {
    fn name(&self) -> &'static str {
        FamilyKind::PoissonRobust.name()
    }
}

impl GlmFamily for ModifiedPoisson {
    fn kind(&self) -> FamilyKind {
        FamilyKind::PoissonRobust
    }
    fn response_kind(&self) -> ColumnKind {
        ColumnKind::Binary
    }
    fn fit(&self, x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
        fit_modified_poisson(x, y, opts)
    }
}

pub fn family_registry() -> Registry<dyn GlmFamily> {
    let mut reg: Registry<dyn GlmFamily> = Registry::new("family");
    reg.register(Box::new(Linear))
        .register(Box::new(Logistic))
        .register(Box::new(ModifiedPoisson));
    reg
}

/// Family for an outcome: linear for continuous; modified Poisson when the
/// binary prevalence exceeds `threshold`, logistic otherwise.
pub fn choose_family(kind: ColumnKind, prevalence: Option<f64>, threshold: f64) -> FamilyKind {
    match (kind, prevalence) {
        (ColumnKind::Binary, Some(p)) if p > threshold => FamilyKind::PoissonRobust,
        (ColumnKind::Binary, _) => FamilyKind::Logistic,
        _ => FamilyKind::Linear,
    }
}
