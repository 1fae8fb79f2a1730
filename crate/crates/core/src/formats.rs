//! JSON exchange formats for models and covariance sequences.
//!
//! Matrices are row-major arrays of arrays. Parse failures carry the line
//! and column reported by the JSON reader.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::Mat;
use crate::model::SvarModel;
use crate::moments::CovarianceSequence;
use crate::restrictions::{
    compile_noise, compile_system, CompileOptions, NoiseParametrization, NoiseRestrictionSet, RestrictionSpec,
    SystemRestrictionSet,
};

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Identity when absent.
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Mat<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Mat<f64>>,
    #[serde(rename = "B")]
    pub b: Mat<f64>,
    #[serde(default)]
    pub restrictions: RestrictionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_parametrization: Option<NoiseParametrization>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn from_model(m: &SvarModel<f64>, restrictions: RestrictionSpec) -> Self {
        ModelFile {
            n: m.n(),
            p: m.p(),
            q: m.q(),
            a0: Some(m.a0().clone()),
            a: m.a_plus().to_vec(),
            b: m.b().clone(),
            restrictions,
            noise_parametrization: None,
        }
    }

    pub fn to_model(&self) -> Result<SvarModel<f64>> {
        if self.a.len() != self.p {
            return Err(Error::ShapeMismatch(format!(
                "p = {} but {} lag matrices given",
                self.p,
                self.a.len()
            )));
        }
        let a0 = self.a0.clone().unwrap_or_else(|| Mat::identity(self.n));
        let m = SvarModel::new(a0, self.a.clone(), self.b.clone())?;
        if m.n() != self.n || m.q() != self.q {
            return Err(Error::ShapeMismatch(format!(
                "declared n = {}, q = {} but matrices give n = {}, q = {}",
                self.n,
                self.q,
                m.n(),
                m.q()
            )));
        }
        Ok(m)
    }

    pub fn parametrization(&self, m: &SvarModel<f64>) -> NoiseParametrization {
        self.noise_parametrization
            .unwrap_or_else(|| NoiseParametrization::default_for(m.a0_is_identity(), &self.restrictions))
    }

    pub fn noise_restrictions(&self, m: &SvarModel<f64>, opts: CompileOptions) -> Result<NoiseRestrictionSet<f64>> {
        compile_noise(&self.restrictions.noise, self.n, self.q, self.parametrization(m), opts)
    }

    pub fn system_restrictions(&self, opts: CompileOptions) -> Result<SystemRestrictionSet<f64>> {
        compile_system(&self.restrictions.system, self.n, self.p, opts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceFile {
    pub n: usize,
    pub h: usize,
    /// `γ(0), ..., γ(h)`.
    pub gammas: Vec<Mat<f64>>,
    /// Lag length for the Yule-Walker system, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "RestrictionSpec::is_empty")]
    pub restrictions: RestrictionSpec,
}

impl CovarianceFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn from_sequence(cov: &CovarianceSequence<f64>) -> Self {
        CovarianceFile {
            n: cov.n(),
            h: cov.horizon(),
            gammas: cov.gammas().to_vec(),
            p: None,
            restrictions: RestrictionSpec::default(),
        }
    }

    pub fn to_sequence(&self) -> Result<CovarianceSequence<f64>> {
        if self.gammas.len() != self.h + 1 {
            return Err(Error::ShapeMismatch(format!(
                "h = {} needs {} matrices, got {}",
                self.h,
                self.h + 1,
                self.gammas.len()
            )));
        }
        let cov = CovarianceSequence::new(self.gammas.clone())?;
        if cov.n() != self.n {
            return Err(Error::ShapeMismatch(format!("declared n = {} but γ(0) is {}x{}", self.n, cov.n(), cov.n())));
        }
        Ok(cov)
    }
}
