//! Canvas placement and the pixel → metre mapping.
//!
//! The canvas is a rectangle lying in the plane `z = center.z` of the robot
//! base frame, rotated by `yaw` about the plane normal. Image pixel `(u, v)`
//! maps to canvas-local `((u - W/2)·s, (H/2 - v)·s)` with the aspect
//! preserving scale `s = min(width/W, height/H)`, so the image is centred and
//! never cropped, and image "up" is canvas +y before rotation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::strokes::StrokeSet;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CanvasError {
    #[error("point ({:.4}, {:.4}, {:.4}) is outside the workspace", .0[0], .0[1], .0[2])]
    OutOfWorkspace(Point3),
    #[error("canvas or image has zero area")]
    DegenerateCanvas,
}

/// Axis-aligned reachable volume plus the paint cup location.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub min: Point3,
    pub max: Point3,
    pub cup: Point3,
}

impl Default for Workspace {
    /// The 2.53 m × 2.57 m floor area in front of the arm, 1.2 m tall.
    fn default() -> Self {
        Workspace {
            min: [0.0, -1.285, 0.0],
            max: [2.53, 1.285, 1.2],
            cup: [0.45, -0.45, 0.1],
        }
    }
}

impl Workspace {
    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn check(&self, p: Point3) -> Result<(), CanvasError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(CanvasError::OutOfWorkspace(p))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasPose {
    pub center: Point3,
    /// Rotation about the canvas normal, radians.
    pub yaw: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for CanvasPose {
    fn default() -> Self {
        CanvasPose { center: [0.9, 0.0, 0.05], yaw: 0.0, width: 0.5, height: 0.4 }
    }
}

impl CanvasPose {
    /// World positions of the four canvas corners.
    pub fn corners(&self) -> [Point3; 4] {
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)].map(|(x, y)| self.local_to_world(x, y))
    }

    pub fn local_to_world(&self, x: f64, y: f64) -> Point3 {
        let (s, c) = self.yaw.sin_cos();
        [self.center[0] + c * x - s * y, self.center[1] + s * x + c * y, self.center[2]]
    }

    pub fn world_to_local(&self, p: Point3) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Pose source standing in for canvas detection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseConfig {
    pub pose: CanvasPose,
    /// Uniform position noise, ± metres on x and y.
    pub position_noise: f64,
    /// Uniform yaw noise, ± radians.
    pub yaw_noise: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        PoseConfig { pose: CanvasPose::default(), position_noise: 0.0, yaw_noise: 0.0 }
    }
}

pub fn pose_provider(config: &PoseConfig, workspace: &Workspace, noise_seed: u64) -> Result<CanvasPose, CanvasError> {
    let mut pose = config.pose;
    if pose.width <= 0.0 || pose.height <= 0.0 {
        return Err(CanvasError::DegenerateCanvas);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    if config.position_noise > 0.0 {
        let d = config.position_noise;
        pose.center[0] += rng.random_range(-d..=d);
        pose.center[1] += rng.random_range(-d..=d);
    }
    if config.yaw_noise > 0.0 {
        pose.yaw += rng.random_range(-config.yaw_noise..=config.yaw_noise);
    }
    for corner in pose.corners() {
        workspace.check(corner)?;
    }
    Ok(pose)
}

/// Affine map between image pixels and world metres for one canvas pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanvasTransform {
    pub pose: CanvasPose,
    pub image_width: usize,
    pub image_height: usize,
    /// Metres per pixel.
    pub scale: f64,
}

impl CanvasTransform {
    pub fn new(pose: CanvasPose, image_width: usize, image_height: usize) -> Result<Self, CanvasError> {
        if image_width == 0 || image_height == 0 || pose.width <= 0.0 || pose.height <= 0.0 {
            return Err(CanvasError::DegenerateCanvas);
        }
        let scale = (pose.width / image_width as f64).min(pose.height / image_height as f64);
        Ok(CanvasTransform { pose, image_width, image_height, scale })
    }

    pub fn to_world(&self, u: f64, v: f64) -> Point3 {
        let x = (u - self.image_width as f64 / 2.0) * self.scale;
        let y = (self.image_height as f64 / 2.0 - v) * self.scale;
        self.pose.local_to_world(x, y)
    }

    /// Inverse of [`to_world`](Self::to_world) for points on the canvas plane.
    pub fn to_pixel(&self, p: Point3) -> (f64, f64) {
        let (x, y) = self.pose.world_to_local(p);
        (x / self.scale + self.image_width as f64 / 2.0, self.image_height as f64 / 2.0 - y / self.scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStrokeSet {
    pub strokes: Vec<Vec<Point3>>,
    pub transform: CanvasTransform,
}

pub fn pixels_to_canvas(
    strokes: &StrokeSet,
    image_dims: (usize, usize),
    pose: &CanvasPose,
) -> Result<MetricStrokeSet, CanvasError> {
    let transform = CanvasTransform::new(*pose, image_dims.0, image_dims.1)?;
    let strokes = strokes
        .strokes
        .iter()
        .map(|s| s.iter().map(|p| transform.to_world(p.x as f64, p.y as f64)).collect())
        .collect();
    Ok(MetricStrokeSet { strokes, transform })
}
