//! Topic to painted raster in one call, plus artifact export.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canvas::{pixels_to_canvas, pose_provider, CanvasError, CanvasPose, CanvasTransform, MetricStrokeSet, PoseConfig, Workspace};
use crate::motion::{
    build_program, coverage, simulate_execution, time_parameterize, Coverage, MotionError, MotionLimits, PaintProgram,
    Trajectory, DEFAULT_Z_HOVER,
};
use crate::raster::{BinaryImage, Pixel};
use crate::strokes::{order_strokes, simplify, skeletonize, trace_strokes, StrokeError, StrokeSet};
use crate::topic::{
    keyword_topic, render_topic, select_topic, GlyphRaster, StrokeFont, Topic, TopicError, TranslationClient,
    TrendClient,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error(transparent)]
    Canvas(#[from] CanvasError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("writing artifacts: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub image_width: usize,
    pub image_height: usize,
    pub canvas: PoseConfig,
    pub workspace: Workspace,
    pub limits: MotionLimits,
    pub strokes_per_dip: usize,
    pub z_hover: f64,
    pub brush_radius_px: f64,
    /// Polyline simplification tolerance in pixels; 0 only drops collinear points.
    pub simplify_epsilon_px: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            image_width: 1024,
            image_height: 768,
            canvas: PoseConfig::default(),
            workspace: Workspace::default(),
            limits: MotionLimits::default(),
            strokes_per_dip: 1,
            z_hover: DEFAULT_Z_HOVER,
            brush_radius_px: 3.0,
            simplify_epsilon_px: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub topic: Topic,
    pub raster: GlyphRaster,
    pub skeleton: BinaryImage,
    /// Ordered and simplified, as painted.
    pub strokes: StrokeSet,
    pub pose: CanvasPose,
    pub metric: MetricStrokeSet,
    pub program: PaintProgram,
    pub trajectory: Trajectory,
    pub painted: BinaryImage,
    pub coverage: Coverage,
}

/// Reads `query` as a `YYYY-MM-DD` trend date when it parses as one, else as a
/// source-language keyword.
pub fn resolve_topic(
    query: &str,
    trends: &dyn TrendClient,
    translator: &dyn TranslationClient,
) -> Result<Topic, TopicError> {
    match chrono::NaiveDate::parse_from_str(query.trim(), "%Y-%m-%d") {
        Ok(date) => select_topic(date, trends, translator),
        Err(_) => keyword_topic(query, translator),
    }
}

pub fn run_pipeline(
    topic: &Topic,
    config: &PipelineConfig,
    font: &StrokeFont,
    noise_seed: u64,
) -> Result<PipelineOutput, PipelineError> {
    let (w, h) = (config.image_width, config.image_height);
    let raster = render_topic(topic, w, h, font)?;
    let skeleton = skeletonize(&raster.image);
    let traced = trace_strokes(&skeleton)?;
    let pose = pose_provider(&config.canvas, &config.workspace, noise_seed)?;

    // Order from wherever the paint cup sits over the image.
    let cup_px = CanvasTransform::new(pose, w, h)?.to_pixel(config.workspace.cup);
    let start = Pixel::new(cup_px.0.round() as i32, cup_px.1.round() as i32);
    let ordered = order_strokes(&traced, start);
    let strokes = StrokeSet {
        strokes: ordered.strokes.iter().map(|s| simplify(s, config.simplify_epsilon_px)).collect(),
    };

    let metric = pixels_to_canvas(&strokes, (w, h), &pose)?;
    let program = build_program(&metric, &config.workspace, config.strokes_per_dip, config.z_hover)?;
    let trajectory = time_parameterize(&program, config.limits)?;
    let painted = simulate_execution(&trajectory, &pose, config.brush_radius_px, (w, h));
    let coverage = coverage(&skeleton, &painted, config.brush_radius_px);
    Ok(PipelineOutput {
        topic: topic.clone(),
        raster,
        skeleton,
        strokes,
        pose,
        metric,
        program,
        trajectory,
        painted,
        coverage,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub keyword_source: String,
    pub keyword_glyphs: String,
    pub strokes: usize,
    pub dips: usize,
    pub waypoints: usize,
    pub duration_s: f64,
    pub coverage: Coverage,
    pub painted_sha256: String,
}

impl PipelineOutput {
    /// Digest of the simulated painting, used as the artwork reference.
    pub fn painted_digest(&self) -> [u8; 32] {
        Sha256::digest(self.painted.to_pbm()).into()
    }

    pub fn summary(&self) -> PipelineSummary {
        PipelineSummary {
            keyword_source: self.topic.keyword_source.clone(),
            keyword_glyphs: self.topic.keyword_glyphs.clone(),
            strokes: self.strokes.len(),
            dips: self.program.dips(),
            waypoints: self.trajectory.waypoints.len(),
            duration_s: self.trajectory.duration(),
            coverage: self.coverage,
            painted_sha256: hex::encode(self.painted_digest()),
        }
    }

    /// Writes raster, skeleton, strokes, trajectory and painting into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        let (w, h) = (self.raster.image.width(), self.raster.image.height());
        fs::write(dir.join("raster.png"), self.raster.image.to_png()?)?;
        fs::write(dir.join("skeleton.png"), self.skeleton.to_png()?)?;
        fs::write(dir.join("strokes.svg"), self.strokes.to_svg(w, h))?;
        fs::write(dir.join("strokes.txt"), self.strokes.to_text())?;
        fs::write(dir.join("trajectory.tsv"), self.trajectory.to_tsv())?;
        fs::write(dir.join("painted.png"), self.painted.to_png()?)?;
        fs::write(dir.join("painted.pbm"), self.painted.to_pbm())?;
        let summary = toml::to_string(&self.summary()).expect("summary serializes");
        fs::write(dir.join("summary.toml"), summary)?;
        Ok(())
    }
}
