//! Structure-from-motion reconstruction model.
//!
//! Pose convention follows the upstream producer (`reconstruction.json`):
//! `rotation` is a world→camera axis-angle vector, `translation` lives in the
//! camera frame, and the camera centre is `-Rᵀ t`. Camera axes are x-right,
//! y-down, z-forward.

mod parse;
pub mod ply;

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub use parse::{parse_reconstruction, to_json, ParseOptions, ParseReport};

/// Camera model entry. Only the projection type and image size are
/// interpreted; remaining numeric parameters are carried through.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub projection_type: String,
    pub width: Option<u64>,
    pub height: Option<u64>,
    pub params: BTreeMap<String, f64>,
}

impl Camera {
    pub fn equirectangular(width: u64, height: u64) -> Self {
        Self {
            projection_type: "spherical".into(),
            width: Some(width),
            height: Some(height),
            params: BTreeMap::new(),
        }
    }
}

/// One localized image.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub id: String,
    pub camera: String,
    /// World→camera axis-angle, radians.
    pub rotation: Vector3<f64>,
    /// Camera-frame translation.
    pub translation: Vector3<f64>,
}

impl Shot {
    pub fn new(
        id: impl Into<String>,
        camera: impl Into<String>,
        rotation: Vector3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::SchemaError(format!("shots.{id}.translation")));
        }
        axis_angle_to_matrix(&rotation)?;
        Ok(Self {
            id,
            camera: camera.into(),
            rotation,
            translation,
        })
    }

    /// Build a shot from its world position and world→camera rotation.
    pub fn from_position(
        id: impl Into<String>,
        camera: impl Into<String>,
        rotation: Vector3<f64>,
        position: Vector3<f64>,
    ) -> Result<Self> {
        let r = axis_angle_to_matrix(&rotation)?;
        Self::new(id, camera, rotation, -(r * position))
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        // Validated at construction.
        rodrigues(&self.rotation)
    }

    /// Camera centre in world coordinates.
    pub fn position(&self) -> Vector3<f64> {
        shot_position(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoint {
    pub id: String,
    pub position: Vector3<f64>,
    pub color: [u8; 3],
}

/// Parsed reconstruction. Shots and cameras are keyed by id; points keep
/// document order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reconstruction {
    pub cameras: BTreeMap<String, Camera>,
    pub shots: BTreeMap<String, Shot>,
    pub points: Vec<SparsePoint>,
}

impl Reconstruction {
    /// Check cross-references: every shot's camera must exist.
    pub fn validate(&self) -> Result<()> {
        for shot in self.shots.values() {
            if !self.cameras.contains_key(&shot.camera) {
                return Err(Error::SchemaError(format!("shots.{}.camera", shot.id)));
            }
        }
        Ok(())
    }
}

/// Rodrigues' formula. Angles below 1e-12 return the identity.
pub fn axis_angle_to_matrix(r: &Vector3<f64>) -> Result<Matrix3<f64>> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidRotation(format!("[{}, {}, {}]", r.x, r.y, r.z)));
    }
    Ok(rodrigues(r))
}

fn rodrigues(r: &Vector3<f64>) -> Matrix3<f64> {
    let theta = r.norm();
    if theta < 1e-12 {
        return Matrix3::identity();
    }
    let k = r / theta;
    let skew = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + skew * theta.sin() + skew * skew * (1.0 - theta.cos())
}

/// Camera centre `p = -Rᵀ t`.
pub fn shot_position(shot: &Shot) -> Vector3<f64> {
    -(shot.rotation_matrix().transpose() * shot.translation)
}
