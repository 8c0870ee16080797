//! Topic selection and glyph rendering.
//!
//! A trend source names the day's most searched keyword, a translator turns
//! it into a glyph string, and [`render_topic`] draws that string with a
//! stroke font as black ink on white, centred and scaled as large as the
//! border margin allows.

mod font;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::raster::BinaryImage;

pub use font::{Polyline, StrokeFont};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopicError {
    #[error("no trend data for {0}")]
    NoTrendData(NaiveDate),
    #[error("no translation for {0:?}")]
    TranslationUnavailable(String),
    #[error("empty keyword")]
    EmptyKeyword,
    #[error("nothing to render: glyph string is empty")]
    EmptyGlyphs,
    #[error("glyph {0:?} is not in the font")]
    UnrenderableGlyph(char),
    #[error("raster {width}x{height} is below the 64x64 minimum")]
    CanvasTooSmall { width: usize, height: usize },
    #[error("font: {0}")]
    Font(String),
    #[error("fixture: {0}")]
    Fixture(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub keyword_source: String,
    pub keyword_glyphs: String,
    /// Trend date; `None` when the keyword was given directly.
    pub date: Option<NaiveDate>,
}

pub trait TrendClient {
    /// Highest-ranked keyword for `date`, if the source has data for it.
    fn fetch_top_keyword(&self, date: NaiveDate) -> Option<String>;
}

pub trait TranslationClient {
    fn translate(&self, text: &str) -> Option<String>;
}

const BUILTIN_TRENDS: &str = include_str!("../../fixtures/trends.tsv");
const BUILTIN_TRANSLATIONS: &str = include_str!("../../fixtures/translations.tsv");

fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(n, l)| (n + 1, l.split('\t').collect()))
}

/// Trend fixture: `date<TAB>rank<TAB>keyword` rows, rank 1 is the top entry.
#[derive(Clone, Debug, Default)]
pub struct FixtureTrends {
    by_date: BTreeMap<NaiveDate, Vec<(u32, String)>>,
}

impl FixtureTrends {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TRENDS).expect("bundled trends parse")
    }

    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopicError::Fixture(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TopicError> {
        let mut by_date: BTreeMap<NaiveDate, Vec<(u32, String)>> = BTreeMap::new();
        for (n, fields) in tsv_rows(text) {
            let bad = || TopicError::Fixture(format!("trends line {n}"));
            let [date, rank, keyword] = fields[..] else { return Err(bad()) };
            let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| bad())?;
            let rank = rank.parse().map_err(|_| bad())?;
            by_date.entry(date).or_default().push((rank, keyword.to_string()));
        }
        Ok(FixtureTrends { by_date })
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.by_date.keys().copied()
    }
}

impl TrendClient for FixtureTrends {
    fn fetch_top_keyword(&self, date: NaiveDate) -> Option<String> {
        self.by_date
            .get(&date)?
            .iter()
            .min_by_key(|(rank, _)| *rank)
            .map(|(_, k)| k.clone())
    }
}

/// Translation fixture: `source<TAB>glyphs` rows.
#[derive(Clone, Debug, Default)]
pub struct FixtureTranslations {
    table: BTreeMap<String, String>,
}

impl FixtureTranslations {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TRANSLATIONS).expect("bundled translations parse")
    }

    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopicError::Fixture(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TopicError> {
        let mut table = BTreeMap::new();
        for (n, fields) in tsv_rows(text) {
            let [source, glyphs] = fields[..] else {
                return Err(TopicError::Fixture(format!("translations line {n}")));
            };
            table.insert(source.to_string(), glyphs.to_string());
        }
        Ok(FixtureTranslations { table })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl TranslationClient for FixtureTranslations {
    fn translate(&self, text: &str) -> Option<String> {
        self.table.get(text).cloned()
    }
}

pub fn select_topic(
    date: NaiveDate,
    trends: &dyn TrendClient,
    translator: &dyn TranslationClient,
) -> Result<Topic, TopicError> {
    let keyword = trends.fetch_top_keyword(date).ok_or(TopicError::NoTrendData(date))?;
    let mut topic = keyword_topic(&keyword, translator)?;
    topic.date = Some(date);
    Ok(topic)
}

/// Topic for a keyword chosen directly rather than from the trend source.
pub fn keyword_topic(keyword: &str, translator: &dyn TranslationClient) -> Result<Topic, TopicError> {
    let keyword = keyword.trim();
    if keyword.is_empty() {
        return Err(TopicError::EmptyKeyword);
    }
    let glyphs = translator
        .translate(keyword)
        .filter(|g| !g.is_empty())
        .ok_or_else(|| TopicError::TranslationUnavailable(keyword.to_string()))?;
    Ok(Topic { keyword_source: keyword.to_string(), keyword_glyphs: glyphs, date: None })
}

/// Rendered glyph image plus the layout parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphRaster {
    pub image: BinaryImage,
    /// Ink-free border width in pixels, `(horizontal, vertical)`.
    pub margin: (usize, usize),
    /// Pixels per em unit.
    pub scale: f64,
}

pub const MIN_RASTER_DIM: usize = 64;

/// Border that must stay ink-free: at least 5% of the dimension.
pub fn margin_for(dim: usize) -> usize {
    (dim * 5).div_ceil(100) + 1
}

pub fn render_topic(topic: &Topic, width: usize, height: usize, font: &StrokeFont) -> Result<GlyphRaster, TopicError> {
    render_glyphs(&topic.keyword_glyphs, width, height, font)
}

pub fn render_glyphs(glyphs: &str, width: usize, height: usize, font: &StrokeFont) -> Result<GlyphRaster, TopicError> {
    if width < MIN_RASTER_DIM || height < MIN_RASTER_DIM {
        return Err(TopicError::CanvasTooSmall { width, height });
    }
    let chars: Vec<char> = glyphs.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err(TopicError::EmptyGlyphs);
    }
    let mut strokes: Vec<Polyline> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        let glyph = font.glyph(c).ok_or(TopicError::UnrenderableGlyph(c))?;
        let dx = i as f64 * font.advance;
        strokes.extend(glyph.iter().map(|s| s.iter().map(|&(x, y)| (x + dx, y)).collect::<Polyline>()));
    }

    let r = font.weight / 2.0;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in strokes.iter().flatten() {
        x0 = x0.min(x - r);
        y0 = y0.min(y - r);
        x1 = x1.max(x + r);
        y1 = y1.max(y + r);
    }
    let (mx, my) = (margin_for(width), margin_for(height));
    let scale = ((width - 2 * mx) as f64 / (x1 - x0)).min((height - 2 * my) as f64 / (y1 - y0));
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let to_px = |(x, y): (f64, f64)| ((x - cx) * scale + width as f64 / 2.0, (y - cy) * scale + height as f64 / 2.0);

    let mut image = BinaryImage::new(width, height);
    let radius = r * scale;
    for stroke in &strokes {
        let pts: Vec<(f64, f64)> = stroke.iter().copied().map(to_px).collect();
        if pts.len() == 1 {
            stamp_capsule(&mut image, pts[0], pts[0], radius);
        }
        for w in pts.windows(2) {
            stamp_capsule(&mut image, w[0], w[1], radius);
        }
    }
    Ok(GlyphRaster { image, margin: (mx, my), scale })
}

/// Inks every pixel whose centre lies within `radius` of segment `a`–`b`.
fn stamp_capsule(image: &mut BinaryImage, a: (f64, f64), b: (f64, f64), radius: f64) {
    let lo_x = (a.0.min(b.0) - radius).floor().max(0.0) as i32;
    let hi_x = (a.0.max(b.0) + radius).ceil().min(image.width() as f64) as i32;
    let lo_y = (a.1.min(b.1) - radius).floor().max(0.0) as i32;
    let hi_y = (a.1.max(b.1) + radius).ceil().min(image.height() as f64) as i32;
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = if len2 == 0.0 { 0.0 } else { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) };
            let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
            if qx * qx + qy * qy <= radius * radius {
                image.set(x, y, true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn top_keyword_is_rank_one() {
        let t = select_topic(date("2021-03-08"), &FixtureTrends::builtin(), &FixtureTranslations::builtin()).unwrap();
        assert_eq!(t.keyword_source, "Women's History Month");
        assert_eq!(t.keyword_glyphs, "女性史月間");
        assert_eq!(t.date, Some(date("2021-03-08")));
    }

    #[test]
    fn selection_errors() {
        let (tr, tl) = (FixtureTrends::builtin(), FixtureTranslations::builtin());
        assert_eq!(
            select_topic(date("1999-01-01"), &tr, &tl),
            Err(TopicError::NoTrendData(date("1999-01-01")))
        );
        assert_eq!(
            select_topic(date("2021-09-01"), &tr, &tl),
            Err(TopicError::TranslationUnavailable("Unicorn".into()))
        );
        assert_eq!(keyword_topic("  ", &tl), Err(TopicError::EmptyKeyword));
    }

    #[test]
    fn render_preconditions() {
        let font = StrokeFont::builtin();
        assert_eq!(
            render_glyphs("木", 63, 100, &font),
            Err(TopicError::CanvasTooSmall { width: 63, height: 100 })
        );
        assert_eq!(render_glyphs("", 100, 100, &font), Err(TopicError::EmptyGlyphs));
        assert_eq!(render_glyphs("木X", 100, 100, &font), Err(TopicError::UnrenderableGlyph('X')));
    }

    #[test]
    fn single_glyph_is_centred() {
        let font = StrokeFont::builtin();
        for c in font.chars() {
            for (w, h) in [(128, 128), (300, 200), (97, 151)] {
                let r = render_glyphs(&c.to_string(), w, h, &font).unwrap();
                let (lo, hi) = r.image.bbox().unwrap();
                let cx = (lo.x + hi.x + 1) as f64 / 2.0;
                let cy = (lo.y + hi.y + 1) as f64 / 2.0;
                assert!((cx - w as f64 / 2.0).abs() <= 1.0, "{c} {w}x{h} cx {cx}");
                assert!((cy - h as f64 / 2.0).abs() <= 1.0, "{c} {w}x{h} cy {cy}");
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let font = StrokeFont::builtin();
        let a = render_glyphs("女性史月間", 400, 300, &font).unwrap();
        let b = render_glyphs("女性史月間", 400, 300, &font).unwrap();
        assert_eq!(a, b);
    }
}
