//! Bitmaps shared by the rendering, thinning and execution stages.

use std::io;

use serde::{Deserialize, Serialize};

/// Integer pixel coordinate; `x` grows right, `y` grows down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }

    pub fn is_8_neighbor(self, other: Pixel) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }

    pub fn dist(self, other: Pixel) -> f64 {
        let (dx, dy) = ((self.x - other.x) as f64, (self.y - other.y) as f64);
        (dx * dx + dy * dy).sqrt()
    }
}

/// 8-bit grayscale image, 0 = black.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayImage { width, height, data: vec![fill; width * height] }
    }
}

/// Binary image; `true` is ink.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{}", self.width, self.height)?;
        if self.width * self.height <= 4096 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.bits[y * self.width + x] { '#' } else { '.' })
                    .collect();
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage { width, height, bits: vec![false; width * height] }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        BinaryImage { width, height, bits: vec![true; width * height] }
    }

    /// Parses rows of `#` (ink) and `.` (paper). Whitespace is ignored.
    pub fn from_ascii(text: &str) -> Self {
        let rows: Vec<Vec<bool>> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.chars().map(|c| c == '#').collect())
            .collect();
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut img = BinaryImage::new(width, rows.len());
        for (y, row) in rows.iter().enumerate() {
            for (x, &b) in row.iter().enumerate() {
                img.bits[y * width + x] = b;
            }
        }
        img
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.bits[y * self.width + x] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Out-of-bounds reads are paper.
    pub fn get(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.bits[y as usize * self.width + x as usize]
    }

    pub fn at(&self, p: Pixel) -> bool {
        self.get(p.x, p.y)
    }

    /// Out-of-bounds writes are dropped.
    pub fn set(&mut self, x: i32, y: i32, ink: bool) {
        if self.in_bounds(x, y) {
            self.bits[y as usize * self.width + x as usize] = ink;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Ink pixels in raster order.
    pub fn ink(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(move |(i, _)| Pixel {
            x: (i % self.width) as i32,
            y: (i / self.width) as i32,
        })
    }

    /// Inclusive ink bounding box `(min, max)`.
    pub fn bbox(&self) -> Option<(Pixel, Pixel)> {
        self.ink().fold(None, |acc, p| match acc {
            None => Some((p, p)),
            Some((lo, hi)) => Some((
                Pixel::new(lo.x.min(p.x), lo.y.min(p.y)),
                Pixel::new(hi.x.max(p.x), hi.y.max(p.y)),
            )),
        })
    }

    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    /// Number of 8-connected ink components.
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as i32, (i / self.width) as i32);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if self.get(nx, ny) {
                            let j = ny as usize * self.width + nx as usize;
                            if !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        count
    }

    /// True when some 2×2 window is all ink.
    pub fn has_2x2_block(&self) -> bool {
        (0..self.height.saturating_sub(1)).any(|y| {
            (0..self.width.saturating_sub(1)).any(|x| {
                let (x, y) = (x as i32, y as i32);
                self.get(x, y) && self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1)
            })
        })
    }

    /// Grayscale view: ink black, paper white.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        }
    }

    /// Raw portable bitmap (`P4`), 1 = ink.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        out.extend(self.packed_rows(true));
        out
    }

    /// 1-bit grayscale PNG.
    pub fn to_png(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc.write_header().map_err(io::Error::other)?;
        writer
            .write_image_data(&self.packed_rows(false))
            .map_err(io::Error::other)?;
        writer.finish().map_err(io::Error::other)?;
        Ok(out)
    }

    fn packed_rows(&self, ink_is_one: bool) -> Vec<u8> {
        let stride = self.width.div_ceil(8);
        let mut out = vec![0u8; stride * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.bits[y * self.width + x] == ink_is_one {
                    out[y * stride + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        out
    }
}

/// Ink iff intensity is strictly below `threshold`.
pub fn binarize(image: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: image.width,
        height: image.height,
        bits: image.data.iter().map(|&v| v < threshold).collect(),
    }
}
