//! The `cert-v1` certificate document.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ProofJob;
use crate::exprlang::Precision;
use crate::normalize::{LimitMethod, NormalizedFunction};
use crate::polycore::{Polynomial, PositivityEvidence, PositivityMethod};

pub const SCHEMA: &str = "cert-v1";

/// Serde helpers writing `f64` with 17 significant digits.
pub(crate) mod sig17 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn render(v: f64) -> String {
        if v.is_finite() {
            format!("{v:.16e}")
        } else {
            "null".to_string()
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(render(*v)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<f64>::deserialize(d)
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let list = format!("[{}]", v.iter().map(|x| render(*x)).collect::<Vec<_>>().join(", "));
            let raw = RawValue::from_string(list).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<f64>::deserialize(d)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("malformed certificate at `{path}`: {message}")]
    Malformed { path: String, message: String },
}

impl CertError {
    fn at(path: &str, message: impl Into<String>) -> Self {
        CertError::Malformed {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Proved,
    RefutedCandidate,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Proved => "proved",
            Verdict::RefutedCandidate => "refuted-candidate",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizedRecord {
    #[serde(with = "sig17")]
    pub alpha: f64,
    pub alpha_method: LimitMethod,
    #[serde(with = "sig17")]
    pub beta: f64,
    pub beta_method: LimitMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyRecord {
    pub degree: usize,
    /// Constant term first.
    #[serde(with = "sig17::vec")]
    pub coeffs: Vec<f64>,
}

impl From<&Polynomial> for PolyRecord {
    fn from(p: &Polynomial) -> Self {
        Self {
            degree: p.degree(),
            coeffs: p.coeffs().to_vec(),
        }
    }
}

impl PolyRecord {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.coeffs.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemezRecord {
    pub converged: bool,
    pub iterations: usize,
    #[serde(with = "sig17::vec")]
    pub reference: Vec<f64>,
    #[serde(with = "sig17::vec")]
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityRecord {
    pub method: PositivityMethod,
    pub certified: bool,
    pub root_count: usize,
    #[serde(with = "sig17")]
    pub sample_point: f64,
    #[serde(with = "sig17")]
    pub sample_value: f64,
    #[serde(with = "sig17")]
    pub rational_slack: f64,
}

impl From<&PositivityEvidence> for PositivityRecord {
    fn from(e: &PositivityEvidence) -> Self {
        Self {
            method: e.method,
            certified: e.certified,
            root_count: e.root_count,
            sample_point: e.sample_point,
            sample_value: e.sample_value,
            rational_slack: e.rational_slack,
        }
    }
}

/// Sampled re-estimate of `max |g - P|`; a lower bound of the true norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualRecord {
    #[serde(with = "sig17")]
    pub value: f64,
    #[serde(with = "sig17")]
    pub argmax: f64,
    pub points: usize,
}

/// A point where `g` was observed negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    #[serde(with = "sig17")]
    pub x: f64,
    #[serde(with = "sig17")]
    pub g: f64,
    pub reason: String,
}

impl Witness {
    pub fn new(x: f64, g: f64, reason: &str) -> Self {
        Self {
            x,
            g,
            reason: reason.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofCertificate {
    pub schema: String,
    pub tool: ToolInfo,
    pub timestamp: String,
    pub precision: Precision,
    pub job: ProofJob,
    pub normalized: NormalizedRecord,
    pub poly: Option<PolyRecord>,
    pub remez: Option<RemezRecord>,
    #[serde(with = "sig17::opt")]
    pub eps_raw: Option<f64>,
    #[serde(with = "sig17::opt")]
    pub eps_cert: Option<f64>,
    pub positivity: Option<PositivityRecord>,
    pub residual_check: Option<ResidualRecord>,
    pub witness: Option<Witness>,
    pub verdict: Verdict,
    /// `sha256:` of the document with `timestamp` and `digest` blanked.
    pub digest: String,
}

impl ProofCertificate {
    pub(crate) fn skeleton(job: &ProofJob, norm: &NormalizedFunction) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            tool: ToolInfo {
                name: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            timestamp: String::new(),
            precision: job.precision,
            job: job.clone(),
            normalized: NormalizedRecord {
                alpha: norm.alpha.value.to_f64(),
                alpha_method: norm.alpha.method,
                beta: norm.beta.value.to_f64(),
                beta_method: norm.beta.method,
            },
            poly: None,
            remez: None,
            eps_raw: None,
            eps_cert: None,
            positivity: None,
            residual_check: None,
            witness: None,
            verdict: Verdict::Inconclusive,
            digest: String::new(),
        }
    }

    /// Stamps the time and the content digest.
    pub(crate) fn sealed(mut self) -> Self {
        self.timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        self.digest = self.compute_digest();
        self
    }

    pub fn compute_digest(&self) -> String {
        let mut blank = self.clone();
        blank.timestamp.clear();
        blank.digest.clear();
        let bytes = serde_json::to_vec(&blank).expect("certificate serializes");
        format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Parses and structurally validates a certificate document.
    pub fn from_json(text: &str) -> Result<Self, CertError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cert: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CertError::at(&path, e.into_inner().to_string())
        })?;
        cert.validate()?;
        Ok(cert)
    }

    /// Structural checks that do not need any function evaluation.
    pub fn validate(&self) -> Result<(), CertError> {
        if self.schema != SCHEMA {
            return Err(CertError::at("schema", format!("expected {SCHEMA:?}, got {:?}", self.schema)));
        }
        let job = &self.job;
        if !(job.a.is_finite() && job.b.is_finite() && job.a < job.b) {
            return Err(CertError::at("job.b", "interval must satisfy a < b"));
        }
        if self.precision != job.precision {
            return Err(CertError::at("precision", "differs from job.precision"));
        }
        if let Some(p) = &self.poly {
            if p.coeffs.is_empty() || p.degree + 1 != p.coeffs.len() {
                return Err(CertError::at(
                    "poly.degree",
                    format!("degree {} does not match {} coefficients", p.degree, p.coeffs.len()),
                ));
            }
            if let Some(i) = p.coeffs.iter().position(|c| !c.is_finite()) {
                return Err(CertError::at(&format!("poly.coeffs[{i}]"), "not a finite number"));
            }
        }
        for (path, v) in [("eps_raw", self.eps_raw), ("eps_cert", self.eps_cert)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CertError::at(path, "must be a finite non-negative number"));
                }
            }
        }
        if self.verdict == Verdict::Proved {
            for (path, present) in [
                ("poly", self.poly.is_some()),
                ("eps_raw", self.eps_raw.is_some()),
                ("eps_cert", self.eps_cert.is_some()),
                ("positivity", self.positivity.is_some()),
                ("residual_check", self.residual_check.is_some()),
            ] {
                if !present {
                    return Err(CertError::at(path, "required for verdict proved"));
                }
            }
        }
        if self.verdict == Verdict::RefutedCandidate && self.witness.is_none() {
            return Err(CertError::at("witness", "required for verdict refuted-candidate"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(sig17::render(0.1), "1.0000000000000001e-1");
        assert_eq!(sig17::render(-1.0), "-1.0000000000000000e0");
        assert_eq!(sig17::render(f64::NAN), "null");
        for v in [0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.5e-17] {
            let back: f64 = serde_json::from_str(&sig17::render(v)).unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
