//! Pipeline configuration. Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidMode {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMetric {
    /// footprint ∩ hull over footprint ∪ hull
    Iou,
    /// footprint ∩ hull over hull area
    HullCoverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tau_static: f64,
    pub mask_conf_min: f64,
    pub centroid: CentroidMode,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub min_cluster_points: usize,
    pub min_views: usize,
    pub tau_iou: f64,
    pub extent_floor: f64,
    pub verify_metric: VerifyMetric,
    pub lambda_2d: f64,
    pub mu_fit: f64,
    pub refine_budget: usize,
    /// Per-class confidence thresholds; classes not listed use
    /// `tau_conf_default`.
    pub tau_conf: BTreeMap<String, f64>,
    pub tau_conf_default: f64,
    pub refine: RefineMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_static: 0.5,
            mask_conf_min: 0.6,
            centroid: CentroidMode::Mean,
            dbscan_eps: 0.5,
            dbscan_min_pts: 10,
            min_cluster_points: 10,
            min_views: 2,
            tau_iou: 0.6,
            extent_floor: 0.05,
            verify_metric: VerifyMetric::Iou,
            lambda_2d: 0.5,
            mu_fit: 1.0,
            refine_budget: 2000,
            tau_conf: BTreeMap::from([("Car".to_string(), 0.5), ("Pedestrian".to_string(), 0.4)]),
            tau_conf_default: 0.5,
            refine: RefineMode::On,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check(self.tau_static > 0.0, "tau_static must be positive")?;
        check((0.0..=1.0).contains(&self.mask_conf_min), "mask_conf_min must lie in [0, 1]")?;
        check(self.dbscan_eps > 0.0, "dbscan_eps must be positive")?;
        check(self.dbscan_min_pts >= 1, "dbscan_min_pts must be at least 1")?;
        check((0.0..=1.0).contains(&self.tau_iou), "tau_iou must lie in [0, 1]")?;
        check(self.extent_floor > 0.0, "extent_floor must be positive")?;
        check(self.lambda_2d >= 0.0 && self.lambda_2d.is_finite(), "lambda_2d must be non-negative")?;
        check(self.mu_fit >= 0.0 && self.mu_fit.is_finite(), "mu_fit must be non-negative")?;
        check((0.0..=1.0).contains(&self.tau_conf_default), "tau_conf_default must lie in [0, 1]")?;
        for (class, t) in &self.tau_conf {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Config(format!("tau_conf[{class}] must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::parse(format!("config {}", e.path()), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn refine_enabled(&self) -> bool {
        self.refine == RefineMode::On
    }
}
