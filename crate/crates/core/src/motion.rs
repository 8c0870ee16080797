//! Paint programs, their timing, and a simulated executor.
//!
//! A program is the dip → hover → lower → stroke → raise cycle repeated over
//! the strokes. Timing treats every straight segment as a rest-to-rest move
//! with a trapezoidal speed profile (triangular when the segment is too short
//! to reach cruise speed), so speed and acceleration limits hold along the
//! whole path, corners included.

use serde::{Deserialize, Serialize};

use crate::canvas::{CanvasError, CanvasPose, CanvasTransform, MetricStrokeSet, Point3, Workspace};
use crate::raster::{BinaryImage, Pixel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error(transparent)]
    Canvas(#[from] CanvasError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PaintCommand {
    /// Above the cup, down into it, back up.
    DipAt(Point3),
    HoverTo(Point3),
    /// Bring the brush onto the canvas.
    Lower(Point3),
    StrokeThrough(Vec<Point3>),
    /// Lift straight up to the given hover point.
    Raise(Point3),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PaintProgram {
    pub commands: Vec<PaintCommand>,
    pub z_hover: f64,
}

impl PaintProgram {
    pub fn dips(&self) -> usize {
        self.commands.iter().filter(|c| matches!(c, PaintCommand::DipAt(_))).count()
    }

    pub fn strokes(&self) -> impl Iterator<Item = &[Point3]> {
        self.commands.iter().filter_map(|c| match c {
            PaintCommand::StrokeThrough(p) => Some(p.as_slice()),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionLimits {
    /// End-effector speed limit, m/s.
    pub v_max: f64,
    /// End-effector acceleration limit, m/s².
    pub a_max: f64,
    /// Maximum spacing between trajectory samples, s.
    pub sample_dt: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        MotionLimits { v_max: 0.25, a_max: 0.5, sample_dt: 0.05 }
    }
}

pub const DEFAULT_Z_HOVER: f64 = 0.02;

fn lifted(p: Point3, dz: f64) -> Point3 {
    [p[0], p[1], p[2] + dz]
}

pub fn build_program(
    strokes: &MetricStrokeSet,
    ws: &Workspace,
    strokes_per_dip: usize,
    z_hover: f64,
) -> Result<PaintProgram, MotionError> {
    if strokes_per_dip == 0 {
        return Err(MotionError::InvalidParameter("strokes_per_dip must be at least 1"));
    }
    if z_hover < 0.0 {
        return Err(MotionError::InvalidParameter("z_hover must be non-negative"));
    }
    ws.check(ws.cup)?;
    ws.check(lifted(ws.cup, z_hover))?;
    let mut commands = Vec::new();
    for (i, stroke) in strokes.strokes.iter().filter(|s| !s.is_empty()).enumerate() {
        for &p in stroke {
            ws.check(p)?;
        }
        let (first, last) = (stroke[0], *stroke.last().expect("non-empty"));
        let (above_first, above_last) = (lifted(first, z_hover), lifted(last, z_hover));
        ws.check(above_first)?;
        ws.check(above_last)?;
        if i % strokes_per_dip == 0 {
            commands.push(PaintCommand::DipAt(ws.cup));
        }
        commands.push(PaintCommand::HoverTo(above_first));
        commands.push(PaintCommand::Lower(first));
        commands.push(PaintCommand::StrokeThrough(stroke.clone()));
        commands.push(PaintCommand::Raise(above_last));
    }
    Ok(PaintProgram { commands, z_hover })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub position: Point3,
    /// Brush on the canvas at this sample.
    pub pen_down: bool,
    /// Exact endpoint of a straight segment rather than an interior sample.
    pub knot: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub limits: MotionLimits,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        match (self.waypoints.first(), self.waypoints.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Pen-down polylines, read back from the knots of each pen-down run.
    pub fn pen_down_polylines(&self) -> Vec<Vec<Point3>> {
        let mut out: Vec<Vec<Point3>> = Vec::new();
        let mut in_run = false;
        for w in &self.waypoints {
            if w.pen_down {
                if !in_run {
                    out.push(Vec::new());
                    in_run = true;
                }
                if w.knot {
                    out.last_mut().expect("run started").push(w.position);
                }
            } else {
                in_run = false;
            }
        }
        out
    }

    /// Newline-delimited `t x y z pen` records.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("t\tx\ty\tz\tpen\n");
        for w in &self.waypoints {
            out.push_str(&format!(
                "{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
                w.t, w.position[0], w.position[1], w.position[2], u8::from(w.pen_down)
            ));
        }
        out
    }
}

/// Duration of a rest-to-rest move of length `len`.
pub fn segment_duration(len: f64, v_max: f64, a_max: f64) -> f64 {
    if len <= 0.0 {
        0.0
    } else if len >= v_max * v_max / a_max {
        len / v_max + v_max / a_max
    } else {
        2.0 * (len / a_max).sqrt()
    }
}

/// Distance covered `tau` seconds into a rest-to-rest move.
fn travelled(len: f64, v_max: f64, a_max: f64, tau: f64) -> f64 {
    let total = segment_duration(len, v_max, a_max);
    let ramp = if len >= v_max * v_max / a_max { v_max / a_max } else { total / 2.0 };
    if tau <= ramp {
        0.5 * a_max * tau * tau
    } else if tau >= total - ramp {
        let rest = total - tau;
        len - 0.5 * a_max * rest * rest
    } else {
        0.5 * a_max * ramp * ramp + v_max * (tau - ramp)
    }
}

fn dist(a: Point3, b: Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Below this a segment counts as zero length.
const MIN_SEGMENT: f64 = 1e-12;

/// Straight moves of a program in order, each tagged with its pen state.
pub fn program_segments(program: &PaintProgram) -> Vec<(Point3, Point3, bool)> {
    let mut out = Vec::new();
    let mut at: Option<Point3> = None;
    let mut go = |to: Point3, pen: bool, out: &mut Vec<(Point3, Point3, bool)>| {
        if let Some(from) = at {
            out.push((from, to, pen));
        }
        at = Some(to);
    };
    for cmd in &program.commands {
        match cmd {
            PaintCommand::DipAt(cup) => {
                let above = lifted(*cup, program.z_hover);
                go(above, false, &mut out);
                go(*cup, false, &mut out);
                go(above, false, &mut out);
            }
            PaintCommand::HoverTo(p) | PaintCommand::Lower(p) | PaintCommand::Raise(p) => go(*p, false, &mut out),
            PaintCommand::StrokeThrough(points) => {
                for &p in points {
                    go(p, true, &mut out);
                }
            }
        }
    }
    out
}

pub fn time_parameterize(program: &PaintProgram, limits: MotionLimits) -> Result<Trajectory, MotionError> {
    if !(limits.v_max > 0.0 && limits.a_max > 0.0 && limits.sample_dt > 0.0) {
        return Err(MotionError::InvalidParameter("v_max, a_max and sample_dt must be positive"));
    }
    let segments = program_segments(program);
    let mut waypoints: Vec<Waypoint> = Vec::new();
    let start = match program.commands.first() {
        Some(PaintCommand::DipAt(cup)) => lifted(*cup, program.z_hover),
        Some(PaintCommand::HoverTo(p) | PaintCommand::Lower(p) | PaintCommand::Raise(p)) => *p,
        Some(PaintCommand::StrokeThrough(p)) => match p.first() {
            Some(p) => *p,
            None => return Ok(Trajectory { waypoints, limits }),
        },
        None => return Ok(Trajectory { waypoints, limits }),
    };
    waypoints.push(Waypoint { t: 0.0, position: start, pen_down: false, knot: true });

    // The point where the brush is lowered onto the canvas is already a
    // pen-down sample; the brush touches before the stroke begins to move.
    let mut t = 0.0;
    for (idx, &(from, to, pen)) in segments.iter().enumerate() {
        let next_is_stroke = segments.get(idx + 1).is_some_and(|s| s.2);
        let len = dist(from, to);
        let lowering_end = !pen && next_is_stroke;
        if len < MIN_SEGMENT {
            if lowering_end || pen {
                if let Some(last) = waypoints.last_mut() {
                    last.pen_down = true;
                }
            }
            continue;
        }
        let total = segment_duration(len, limits.v_max, limits.a_max);
        let n = (total / limits.sample_dt).ceil().max(1.0) as usize;
        for k in 1..=n {
            let knot = k == n;
            let tau = if knot { total } else { total * k as f64 / n as f64 };
            let s = if knot { len } else { travelled(len, limits.v_max, limits.a_max, tau) };
            let f = s / len;
            let position = if knot {
                to
            } else {
                [from[0] + f * (to[0] - from[0]), from[1] + f * (to[1] - from[1]), from[2] + f * (to[2] - from[2])]
            };
            waypoints.push(Waypoint {
                t: t + tau,
                position,
                pen_down: pen || (knot && lowering_end),
                knot,
            });
        }
        t += total;
        waypoints.last_mut().expect("pushed").t = t;
    }
    Ok(Trajectory { waypoints, limits })
}

/// Closed-form total time of a program: the sum of its segment durations.
pub fn closed_form_duration(program: &PaintProgram, limits: &MotionLimits) -> f64 {
    program_segments(program)
        .iter()
        .map(|&(a, b, _)| {
            let len = dist(a, b);
            if len < MIN_SEGMENT {
                0.0
            } else {
                segment_duration(len, limits.v_max, limits.a_max)
            }
        })
        .sum()
}

/// Largest finite-difference speed and acceleration over the samples.
///
/// Speed is chord length over the interval; acceleration is the change of
/// mean velocity between neighbouring intervals over the distance between
/// their midpoints.
pub fn finite_difference_peaks(traj: &Trajectory) -> (f64, f64) {
    let w = &traj.waypoints;
    let vel = |i: usize| {
        let dt = w[i + 1].t - w[i].t;
        let d = [0, 1, 2].map(|k| (w[i + 1].position[k] - w[i].position[k]) / dt);
        (d, dt)
    };
    let mut v_peak: f64 = 0.0;
    let mut a_peak: f64 = 0.0;
    for i in 0..w.len().saturating_sub(1) {
        let (v, _) = vel(i);
        v_peak = v_peak.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    }
    for i in 0..w.len().saturating_sub(2) {
        let ((v1, dt1), (v2, dt2)) = (vel(i), vel(i + 1));
        let span = (dt1 + dt2) / 2.0;
        let dv = ((v2[0] - v1[0]).powi(2) + (v2[1] - v1[1]).powi(2) + (v2[2] - v1[2]).powi(2)).sqrt();
        a_peak = a_peak.max(dv / span);
    }
    (v_peak, a_peak)
}

/// Integer line from `a` to `b`, both ends included.
pub fn bresenham(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let (dx, dy) = ((b.x - a.x).abs(), -(b.y - a.y).abs());
    let (sx, sy) = (if a.x < b.x { 1 } else { -1 }, if a.y < b.y { 1 } else { -1 });
    let (mut x, mut y, mut err) = (a.x, a.y, dx + dy);
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push(Pixel::new(x, y));
        if x == b.x && y == b.y {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Every pixel within `radius` of an ink pixel.
pub fn dilate(img: &BinaryImage, radius: f64) -> BinaryImage {
    let r = radius.max(0.0);
    let reach = r.floor() as i32;
    let offsets: Vec<(i32, i32)> = (-reach..=reach)
        .flat_map(|dy| (-reach..=reach).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
        .collect();
    let mut out = BinaryImage::new(img.width(), img.height());
    for p in img.ink() {
        for &(dx, dy) in &offsets {
            out.set(p.x + dx, p.y + dy, true);
        }
    }
    out
}

/// Paints every pen-down stretch of the trajectory back onto the image grid
/// with a round brush.
pub fn simulate_execution(
    traj: &Trajectory,
    pose: &CanvasPose,
    brush_radius_px: f64,
    image_dims: (usize, usize),
) -> BinaryImage {
    let mut path = BinaryImage::new(image_dims.0, image_dims.1);
    let Ok(transform) = CanvasTransform::new(*pose, image_dims.0, image_dims.1) else {
        return path;
    };
    let to_px = |p: Point3| {
        let (u, v) = transform.to_pixel(p);
        Pixel::new(u.round() as i32, v.round() as i32)
    };
    let mut prev: Option<Pixel> = None;
    // Pen-down motion is straight between knots, so the knots carry the path.
    for w in &traj.waypoints {
        if !w.pen_down {
            prev = None;
            continue;
        }
        if !w.knot {
            continue;
        }
        let here = to_px(w.position);
        for p in bresenham(prev.unwrap_or(here), here) {
            path.set(p.x, p.y, true);
        }
        prev = Some(here);
    }
    dilate(&path, brush_radius_px)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Share of skeleton pixels that were painted.
    pub covered: f64,
    /// Share of painted pixels farther than the brush radius from the skeleton.
    pub spurious: f64,
}

pub fn coverage(skeleton: &BinaryImage, painted: &BinaryImage, brush_radius_px: f64) -> Coverage {
    let total = skeleton.count();
    let hit = skeleton.ink().filter(|p| painted.at(*p)).count();
    let band = dilate(skeleton, brush_radius_px);
    let painted_total = painted.count();
    let stray = painted.ink().filter(|p| !band.at(*p)).count();
    Coverage {
        covered: if total == 0 { 1.0 } else { hit as f64 / total as f64 },
        spurious: if painted_total == 0 { 0.0 } else { stray as f64 / painted_total as f64 },
    }
}
