use std::collections::BTreeMap;

use crate::config::PipelineConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterThresholds {
    pub per_class: BTreeMap<String, f64>,
    pub default: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        let cfg = PipelineConfig::default();
        Self {
            per_class: cfg.tau_conf,
            default: cfg.tau_conf_default,
        }
    }
}

impl FilterThresholds {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            per_class: cfg.tau_conf.clone(),
            default: cfg.tau_conf_default,
        }
    }

    /// Threshold for `class` and whether the default was used.
    pub fn threshold(&self, class: &str) -> (f64, bool) {
        match self.per_class.get(class) {
            Some(&t) => (t, false),
            None => (self.default, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    DropClass,
    DropConfidence,
}

impl FilterVerdict {
    pub fn drop_reason(self) -> Option<&'static str> {
        match self {
            FilterVerdict::Keep => None,
            FilterVerdict::DropClass => Some("class"),
            FilterVerdict::DropConfidence => Some("confidence"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterOutcome {
    pub verdict: FilterVerdict,
    /// The class had no threshold of its own.
    pub used_default: bool,
}

/// Drops labels whose predicted class differs from the annotated one, then
/// labels whose confidence does not exceed the class threshold.
pub fn filter_pseudo_label(
    predicted_class: &str,
    annotation_class: &str,
    confidence: f64,
    thresholds: &FilterThresholds,
) -> FilterOutcome {
    let (tau, used_default) = thresholds.threshold(annotation_class);
    let verdict = if predicted_class != annotation_class {
        FilterVerdict::DropClass
    } else if confidence > tau {
        FilterVerdict::Keep
    } else {
        FilterVerdict::DropConfidence
    };
    FilterOutcome { verdict, used_default }
}
