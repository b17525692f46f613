//! JSON specifications for inputs, formats and analyses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::errordist::ErrorMode;
use crate::minifloat::{FloatFormat, OverflowRule};

/// An input distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        a: f64,
        b: f64,
    },
    Normal {
        mu: f64,
        sigma: f64,
    },
    Constant {
        value: f64,
    },
    /// Piecewise-linear density through `(x, pdf)` points, ascending in `x`.
    /// It is normalized on construction.
    Custom {
        points: Vec<(f64, f64)>,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return invalid(format!("uniform needs finite a < b, got ({a}, {b})"));
                }
            }
            DistributionSpec::Normal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
                    return invalid(format!(
                        "normal needs finite mu and sigma > 0, got ({mu}, {sigma})"
                    ));
                }
            }
            DistributionSpec::Constant { value } => {
                if !value.is_finite() {
                    return invalid("constant must be finite");
                }
            }
            DistributionSpec::Custom { ref points } => {
                if points.len() < 2 {
                    return invalid("custom density needs at least two points");
                }
                for w in points.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return invalid("custom density points must be strictly ascending in x");
                    }
                }
                if points
                    .iter()
                    .any(|&(x, y)| !x.is_finite() || !y.is_finite() || y < 0.0)
                {
                    return invalid("custom density values must be finite and non-negative");
                }
                if points.iter().all(|&(_, y)| y == 0.0) {
                    return invalid("custom density has zero mass");
                }
            }
        }
        Ok(())
    }
}

/// A float format as written in specs: either `exponent_bits` or an explicit
/// `e_min`/`e_max` pair, plus `mantissa_bits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_min: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_max: Option<i32>,
    pub mantissa_bits: u32,
    #[serde(default, skip_serializing_if = "is_default_rule")]
    pub overflow: OverflowRule,
}

fn is_default_rule(r: &OverflowRule) -> bool {
    *r == OverflowRule::TopFloat
}

impl FormatSpec {
    pub fn half() -> FormatSpec {
        FormatSpec {
            exponent_bits: Some(5),
            e_min: None,
            e_max: None,
            mantissa_bits: 10,
            overflow: OverflowRule::TopFloat,
        }
    }

    pub fn to_format(&self) -> Result<FloatFormat> {
        let fmt = match (self.exponent_bits, self.e_min, self.e_max) {
            (Some(b), None, None) => FloatFormat::from_bits(b, self.mantissa_bits)?,
            (None, Some(lo), Some(hi)) => FloatFormat::new(self.mantissa_bits, lo, hi)?,
            _ => {
                return invalid("format needs either exponent_bits or both e_min and e_max");
            }
        };
        Ok(fmt.with_overflow(self.overflow))
    }

    pub fn from_format(fmt: &FloatFormat) -> FormatSpec {
        FormatSpec {
            exponent_bits: None,
            e_min: Some(fmt.e_min()),
            e_max: Some(fmt.e_max()),
            mantissa_bits: fmt.precision(),
            overflow: fmt.overflow_rule(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_mc_n")]
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            enabled: true,
            n: default_mc_n(),
            seed: None,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_mc_n() -> u64 {
    1_000_000
}

fn default_confidence() -> Vec<f64> {
    vec![0.9999]
}

/// Everything needed to run one analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub term: String,
    pub inputs: BTreeMap<String, DistributionSpec>,
    pub format: FormatSpec,
    #[serde(default = "default_mode")]
    pub error_mode: ErrorMode,
    #[serde(default)]
    pub quantize_inputs: bool,
    #[serde(default = "default_confidence")]
    pub confidence: Vec<f64>,
    #[serde(default)]
    pub mc: McSpec,
    /// Recorded reference values, carried through to benchmark tables.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reference: BTreeMap<String, serde_json::Value>,
}

fn default_mode() -> ErrorMode {
    ErrorMode::Exact
}

impl AnalysisSpec {
    pub fn from_json(text: &str) -> Result<AnalysisSpec> {
        let spec: AnalysisSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in &self.inputs {
            d.validate()
                .map_err(|e| Error::InvalidArgument(format!("input `{name}`: {e}")))?;
        }
        self.format.to_format()?;
        for &c in &self.confidence {
            if !(c > 0.0 && c <= 1.0) {
                return invalid(format!("confidence level {c} outside (0, 1]"));
            }
        }
        if self.mc.enabled && self.mc.n == 0 {
            return invalid("mc.n must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AnalysisSpec {
        let mut inputs = BTreeMap::new();
        inputs.insert("x0".into(), DistributionSpec::Uniform { a: 10.0, b: 15.5 });
        inputs.insert(
            "x1".into(),
            DistributionSpec::Normal {
                mu: 1.0,
                sigma: 0.25,
            },
        );
        inputs.insert(
            "x2".into(),
            DistributionSpec::Custom {
                points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)],
            },
        );
        AnalysisSpec {
            name: Some("demo".into()),
            term: "x0/(x1+x2)".into(),
            inputs,
            format: FormatSpec {
                exponent_bits: None,
                e_min: Some(-2),
                e_max: Some(3),
                mantissa_bits: 3,
                overflow: OverflowRule::Binade,
            },
            error_mode: ErrorMode::TypicalFiniteP,
            quantize_inputs: true,
            confidence: vec![0.99, 0.9999],
            mc: McSpec {
                enabled: true,
                n: 1000,
                seed: Some(7),
            },
            reference: BTreeMap::new(),
        }
    }

    #[test]
    fn round_trip() {
        let s = sample();
        let text = s.to_json().unwrap();
        let back = AnalysisSpec::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn defaults_and_tags() {
        let s = AnalysisSpec::from_json(
            r#"{"term":"x0","inputs":{"x0":{"kind":"uniform","a":0,"b":1}},
                "format":{"exponent_bits":5,"mantissa_bits":10}}"#,
        )
        .unwrap();
        assert_eq!(s.error_mode, ErrorMode::Exact);
        assert_eq!(s.confidence, vec![0.9999]);
        assert!(s.mc.enabled && s.mc.seed.is_none());
        assert_eq!(s.format.to_format().unwrap(), FloatFormat::half());
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = [
            r#"{"kind":"uniform","a":1,"b":1}"#,
            r#"{"kind":"normal","mu":0,"sigma":0}"#,
            r#"{"kind":"custom","points":[[1,1],[0,1]]}"#,
        ];
        for b in bad {
            let d: DistributionSpec = serde_json::from_str(b).unwrap();
            assert!(d.validate().is_err(), "{b}");
        }
        let f = FormatSpec {
            exponent_bits: Some(3),
            e_min: Some(-2),
            e_max: None,
            mantissa_bits: 3,
            overflow: OverflowRule::TopFloat,
        };
        assert!(f.to_format().is_err());
    }
}
