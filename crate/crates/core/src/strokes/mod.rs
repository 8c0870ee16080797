//! Skeleton strokes: thinning, tracing, ordering and simplification.

mod thinning;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryImage, Pixel};

pub use crate::raster::binarize;
pub use thinning::skeletonize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrokeError {
    #[error("skeleton is not thin: 2x2 ink block at ({x}, {y})")]
    NotThin { x: i32, y: i32 },
}

/// Ordered polylines over skeleton pixels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrokeSet {
    pub strokes: Vec<Vec<Pixel>>,
}

impl StrokeSet {
    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    /// Draws every stroke pixel onto a blank image.
    pub fn rasterize(&self, width: usize, height: usize) -> BinaryImage {
        let mut img = BinaryImage::new(width, height);
        for p in self.strokes.iter().flatten() {
            img.set(p.x, p.y, true);
        }
        img
    }

    /// Pen-up distance from `start` through the strokes in order.
    pub fn travel(&self, start: Pixel) -> f64 {
        let mut at = start;
        let mut total = 0.0;
        for s in &self.strokes {
            if let (Some(first), Some(last)) = (s.first(), s.last()) {
                total += at.dist(*first);
                at = *last;
            }
        }
        total
    }

    /// One stroke per line as space separated `x,y` pairs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.strokes {
            let line: Vec<String> = s.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Option<StrokeSet> {
        let strokes = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|pair| {
                        let (x, y) = pair.split_once(',')?;
                        Some(Pixel::new(x.parse().ok()?, y.parse().ok()?))
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(StrokeSet { strokes })
    }

    /// SVG preview with one coloured polyline per stroke over pixel centres.
    pub fn to_svg(&self, width: usize, height: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" height="{height}">"#
        );
        let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let stroke_width = (width.max(height) as f64 / 256.0).max(1.0);
        for (i, s) in self.strokes.iter().enumerate() {
            let hue = (i * 137) % 360;
            let pts: Vec<String> = s
                .iter()
                .map(|p| format!("{:.1},{:.1}", p.x as f64 + 0.5, p.y as f64 + 0.5))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="hsl({hue},70%,45%)" stroke-width="{stroke_width}" stroke-linecap="round" stroke-linejoin="round"/>"#,
                pts.join(" ")
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Neighbours in the tracing graph. Diagonal links are dropped when the two
/// pixels also connect through a shared edge neighbour, so an L-corner is a
/// path rather than a triangle.
fn graph_neighbors(sk: &BinaryImage, p: Pixel) -> Vec<Pixel> {
    let mut out = Vec::with_capacity(8);
    for dy in -1..=1 {
        for dx in -1..=1 {
            if (dx, dy) == (0, 0) || !sk.get(p.x + dx, p.y + dy) {
                continue;
            }
            if dx != 0 && dy != 0 && (sk.get(p.x + dx, p.y) || sk.get(p.x, p.y + dy)) {
                continue;
            }
            out.push(Pixel::new(p.x + dx, p.y + dy));
        }
    }
    out
}

fn edge(a: Pixel, b: Pixel) -> (Pixel, Pixel) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Splits a thin skeleton into strokes.
///
/// Junctions (degree ≥ 3) and ends (degree 1) bound the strokes; each
/// stroke runs between two of them and a junction pixel is repeated in every
/// stroke that touches it. Loops with no junction become closed polylines
/// whose first pixel is repeated at the end, and isolated pixels become
/// one-point strokes. Output order follows raster order of the start pixels.
pub fn trace_strokes(skeleton: &BinaryImage) -> Result<StrokeSet, StrokeError> {
    for y in 0..skeleton.height().saturating_sub(1) as i32 {
        for x in 0..skeleton.width().saturating_sub(1) as i32 {
            if skeleton.get(x, y) && skeleton.get(x + 1, y) && skeleton.get(x, y + 1) && skeleton.get(x + 1, y + 1) {
                return Err(StrokeError::NotThin { x, y });
            }
        }
    }
    let pixels: Vec<Pixel> = skeleton.ink().collect();
    let degree = |p: Pixel| graph_neighbors(skeleton, p).len();
    let mut used: BTreeSet<(Pixel, Pixel)> = BTreeSet::new();
    let mut strokes = Vec::new();

    let walk = |start: Pixel, next: Pixel, used: &mut BTreeSet<(Pixel, Pixel)>| -> Vec<Pixel> {
        let mut path = vec![start, next];
        used.insert(edge(start, next));
        let (mut prev, mut cur) = (start, next);
        while cur != start && degree(cur) == 2 {
            let Some(n) = graph_neighbors(skeleton, cur)
                .into_iter()
                .find(|&n| n != prev && !used.contains(&edge(cur, n)))
            else {
                break;
            };
            used.insert(edge(cur, n));
            path.push(n);
            (prev, cur) = (cur, n);
        }
        path
    };

    for &p in &pixels {
        match degree(p) {
            0 => strokes.push(vec![p]),
            2 => {}
            _ => {
                for n in graph_neighbors(skeleton, p) {
                    if !used.contains(&edge(p, n)) {
                        strokes.push(walk(p, n, &mut used));
                    }
                }
            }
        }
    }
    for &p in &pixels {
        for n in graph_neighbors(skeleton, p) {
            if !used.contains(&edge(p, n)) {
                strokes.push(walk(p, n, &mut used));
            }
        }
    }
    Ok(StrokeSet { strokes })
}

/// Greedy nearest-endpoint ordering from `start`, reversing strokes so the
/// closer end is drawn first. If that ever travels further than the input
/// order, the input order is kept.
pub fn order_strokes(set: &StrokeSet, start: Pixel) -> StrokeSet {
    let mut remaining: Vec<&Vec<Pixel>> = set.strokes.iter().filter(|s| !s.is_empty()).collect();
    let empties = set.strokes.iter().filter(|s| s.is_empty()).cloned();
    let mut out = Vec::with_capacity(set.strokes.len());
    let mut at = start;
    while !remaining.is_empty() {
        let mut best = (f64::INFINITY, 0, false);
        for (i, s) in remaining.iter().enumerate() {
            let d_head = at.dist(s[0]);
            let d_tail = at.dist(*s.last().expect("non-empty"));
            if d_head < best.0 {
                best = (d_head, i, false);
            }
            if d_tail < best.0 {
                best = (d_tail, i, true);
            }
        }
        let mut s = remaining.remove(best.1).clone();
        if best.2 {
            s.reverse();
        }
        at = *s.last().expect("non-empty");
        out.push(s);
    }
    out.extend(empties);
    let greedy = StrokeSet { strokes: out };
    if greedy.travel(start) <= set.travel(start) {
        greedy
    } else {
        set.clone()
    }
}

/// Ramer-Douglas-Peucker: indices of the retained points, endpoints always
/// included. Every dropped point lies within `epsilon` of the retained chain.
pub fn simplify_indices(points: &[(f64, f64)], epsilon: f64) -> Vec<usize> {
    if points.len() <= 2 {
        return (0..points.len()).collect();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        let mut worst = (0.0, 0);
        for i in lo + 1..hi {
            let d = segment_distance(points[i], points[lo], points[hi]);
            if d > worst.0 {
                worst = (d, i);
            }
        }
        if worst.0 > epsilon {
            keep[worst.1] = true;
            stack.push((lo, worst.1));
            stack.push((worst.1, hi));
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

pub fn simplify(polyline: &[Pixel], epsilon: f64) -> Vec<Pixel> {
    let pts: Vec<(f64, f64)> = polyline.iter().map(|p| (p.x as f64, p.y as f64)).collect();
    simplify_indices(&pts, epsilon).into_iter().map(|i| polyline[i]).collect()
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    ((a.0 + t * dx - p.0).powi(2) + (a.1 + t * dy - p.1).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(x: i32, y: i32) -> Pixel {
        Pixel::new(x, y)
    }

    #[test]
    fn plus_sign_gives_four_strokes_at_the_junction() {
        let img = BinaryImage::from_ascii(
            "..#..
             ..#..
             #####
             ..#..
             ..#..",
        );
        let set = trace_strokes(&img).unwrap();
        assert_eq!(set.len(), 4);
        for s in &set.strokes {
            assert_eq!(s.len(), 3);
            assert!(s.first() == Some(&px(2, 2)) || s.last() == Some(&px(2, 2)));
        }
        assert_eq!(set.rasterize(5, 5), img);
    }

    #[test]
    fn bar_is_one_stroke_end_to_end() {
        let img = BinaryImage::from_ascii("######");
        let set = trace_strokes(&img).unwrap();
        assert_eq!(set.strokes, vec![(0..6).map(|x| px(x, 0)).collect::<Vec<_>>()]);
    }

    #[test]
    fn empty_and_single_pixel() {
        assert!(trace_strokes(&BinaryImage::new(4, 4)).unwrap().is_empty());
        let dot = BinaryImage::from_ascii("...\n.#.\n...");
        assert_eq!(trace_strokes(&dot).unwrap().strokes, vec![vec![px(1, 1)]]);
    }

    #[test]
    fn ring_is_closed_polyline() {
        let img = BinaryImage::from_ascii(
            ".#.
             #.#
             .#.",
        );
        let set = trace_strokes(&img).unwrap();
        assert_eq!(set.len(), 1);
        let s = &set.strokes[0];
        assert_eq!(s.first(), s.last());
        assert_eq!(s.len(), 5);
        assert!(s.windows(2).all(|w| w[0].is_8_neighbor(w[1])));
    }

    #[test]
    fn corner_is_not_a_junction() {
        let img = BinaryImage::from_ascii(
            "###
             ..#
             ..#",
        );
        assert_eq!(trace_strokes(&img).unwrap().len(), 1);
    }

    #[test]
    fn thick_input_rejected() {
        let img = BinaryImage::from_ascii("##\n##");
        assert_eq!(trace_strokes(&img), Err(StrokeError::NotThin { x: 0, y: 0 }));
    }

    #[test]
    fn ordering_cases() {
        let one = StrokeSet { strokes: vec![vec![px(5, 5), px(6, 6)]] };
        assert_eq!(order_strokes(&one, px(0, 0)), one);
        let far = vec![px(50, 50), px(51, 50)];
        let near = vec![px(2, 0), px(1, 0)];
        let set = StrokeSet { strokes: vec![far.clone(), near] };
        let ordered = order_strokes(&set, px(0, 0));
        assert_eq!(ordered.strokes, vec![vec![px(1, 0), px(2, 0)], far]);
    }

    #[test]
    fn rdp_basics() {
        let line: Vec<Pixel> = (0..10).map(|x| px(x, 0)).collect();
        assert_eq!(simplify(&line, 0.5), vec![px(0, 0), px(9, 0)]);
        let zig = vec![px(0, 0), px(1, 1), px(2, 0), px(3, 1)];
        assert_eq!(simplify(&zig, 0.0), zig);
    }
}
