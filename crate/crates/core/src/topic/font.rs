//! Centerline stroke fonts.
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! em 1000
//! weight 90
//! advance 1050
//! glyph 木
//! 100,330 900,330
//! 500,80 500,920
//! ```
//!
//! `weight` is the stroke width and `advance` the horizontal pen advance,
//! both in em units. Each line after a `glyph` header is one polyline of
//! `x,y` points with y pointing down.

use std::collections::BTreeMap;
use std::path::Path;

use super::TopicError;

const BUILTIN: &str = include_str!("../../assets/kanji.strokefont");

pub type Polyline = Vec<(f64, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct StrokeFont {
    pub em: f64,
    pub weight: f64,
    pub advance: f64,
    glyphs: BTreeMap<char, Vec<Polyline>>,
}

impl StrokeFont {
    /// The font bundled with the crate.
    pub fn builtin() -> StrokeFont {
        StrokeFont::parse(BUILTIN).expect("bundled font parses")
    }

    pub fn load(path: &Path) -> Result<StrokeFont, TopicError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopicError::Font(format!("{}: {e}", path.display())))?;
        StrokeFont::parse(&text)
    }

    pub fn parse(text: &str) -> Result<StrokeFont, TopicError> {
        let mut font = StrokeFont { em: 1000.0, weight: 90.0, advance: 1050.0, glyphs: BTreeMap::new() };
        let mut current: Option<char> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| TopicError::Font(format!("line {}: {what}", n + 1));
            let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let number = || rest.trim().parse::<f64>().ok().filter(|v| *v > 0.0);
            match head {
                "em" => font.em = number().ok_or_else(|| bad("bad em"))?,
                "weight" => font.weight = number().ok_or_else(|| bad("bad weight"))?,
                "advance" => font.advance = number().ok_or_else(|| bad("bad advance"))?,
                "glyph" => {
                    let mut chars = rest.trim().chars();
                    let c = chars.next().ok_or_else(|| bad("glyph without character"))?;
                    if chars.next().is_some() {
                        return Err(bad("glyph header takes one character"));
                    }
                    if font.glyphs.insert(c, Vec::new()).is_some() {
                        return Err(bad("duplicate glyph"));
                    }
                    current = Some(c);
                }
                _ => {
                    let c = current.ok_or_else(|| bad("stroke outside a glyph"))?;
                    let stroke = line
                        .split_whitespace()
                        .map(|pair| {
                            let (x, y) = pair.split_once(',')?;
                            Some((x.parse().ok()?, y.parse().ok()?))
                        })
                        .collect::<Option<Polyline>>()
                        .ok_or_else(|| bad("bad point"))?;
                    font.glyphs.get_mut(&c).expect("current glyph exists").push(stroke);
                }
            }
        }
        if let Some((c, _)) = font.glyphs.iter().find(|(_, s)| s.is_empty()) {
            return Err(TopicError::Font(format!("glyph {c} has no strokes")));
        }
        Ok(font)
    }

    pub fn glyph(&self, c: char) -> Option<&[Polyline]> {
        self.glyphs.get(&c).map(Vec::as_slice)
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.glyphs.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_the_glyph_corpus() {
        let font = StrokeFont::builtin();
        assert!(font.chars().count() >= 20);
        for c in "女性史月間母の日山花火".chars() {
            assert!(font.glyph(c).is_some(), "{c}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = StrokeFont::parse("glyph a\n1,2 x,3\n").unwrap_err();
        assert_eq!(err, TopicError::Font("line 2: bad point".into()));
        assert!(StrokeFont::parse("1,2 3,4").is_err());
        assert!(StrokeFont::parse("glyph a\nglyph b\n0,0 1,1").is_err());
    }
}
