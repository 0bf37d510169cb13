//! JSON documents written and read by the command-line tool.

use serde::{Deserialize, Serialize};

use crate::boundaries::RansacParams;
use crate::error::{Error, Result};
use crate::raster::Point;
use crate::resample::Interpolation;
use crate::sector::{AnnulusSector, Keypoints};

pub const SCHEMA_VERSION: u32 = 1;

/// Settings echoed into every parameter file so results can be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub ransac_threshold: f64,
    pub ransac_iters: usize,
    pub interp: Interpolation,
    pub closing: bool,
}

impl ConfigEcho {
    pub fn new(ransac: &RansacParams, interp: Interpolation, closing: bool) -> Self {
        Self {
            seed: ransac.seed,
            ransac_threshold: ransac.inlier_threshold,
            ransac_iters: ransac.iterations,
            interp,
            closing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorParamsFile {
    pub schema_version: u32,
    pub image_id: String,
    pub origin: Point,
    pub theta_deg: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub axis_col: f64,
    pub cropped_top: bool,
    /// `(height, width)` of the source image.
    pub source_dims: (usize, usize),
    pub keypoints: Keypoints,
    pub config: ConfigEcho,
}

impl SectorParamsFile {
    pub fn new(image_id: impl Into<String>, sector: &AnnulusSector, config: ConfigEcho) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            image_id: image_id.into(),
            origin: sector.origin,
            theta_deg: sector.theta.to_degrees(),
            r_inner: sector.r_inner,
            r_outer: sector.r_outer,
            axis_col: sector.axis_col,
            cropped_top: sector.cropped_top,
            source_dims: sector.source_dims,
            keypoints: sector.keypoints,
            config,
        }
    }

    pub fn sector(&self) -> AnnulusSector {
        AnnulusSector {
            origin: self.origin,
            theta: self.theta_deg.to_radians(),
            r_inner: self.r_inner,
            r_outer: self.r_outer,
            axis_col: self.axis_col,
            keypoints: self.keypoints,
            source_dims: self.source_dims,
            cropped_top: self.cropped_top,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| Error::MalformedFile(format!("sector parameters: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::MalformedFile(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter files always serialise")
    }
}

/// Ground-truth or predicted annotation of one image, as consumed by
/// `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub keypoints: Keypoints,
    pub theta_deg: f64,
}

impl From<&SectorParamsFile> for AnnotationRecord {
    fn from(p: &SectorParamsFile) -> Self {
        Self {
            image_id: p.image_id.clone(),
            keypoints: p.keypoints,
            theta_deg: p.theta_deg,
        }
    }
}

impl AnnotationRecord {
    pub fn from_sector(image_id: impl Into<String>, sector: &AnnulusSector) -> Self {
        Self {
            image_id: image_id.into(),
            keypoints: sector.keypoints,
            theta_deg: sector.theta.to_degrees(),
        }
    }
}

/// Read either a JSON array of annotations or a single parameter file.
pub fn read_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    if let Ok(list) = serde_json::from_str::<Vec<AnnotationRecord>>(text) {
        return Ok(list);
    }
    if let Ok(list) = serde_json::from_str::<Vec<SectorParamsFile>>(text) {
        return Ok(list.iter().map(AnnotationRecord::from).collect());
    }
    SectorParamsFile::from_json(text).map(|p| vec![AnnotationRecord::from(&p)])
}
