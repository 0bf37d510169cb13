//! Raster types, codecs and grayscale conversion.
//!
//! Coordinates are `(row, col)` with the origin at the top-left pixel centre;
//! rows grow downward and columns grow rightward.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued pixel coordinate. May be subpixel and may lie outside the
/// image (the sector origin usually sits above row 0).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub row: f64,
    pub col: f64,
}

impl Point {
    pub const fn new(row: f64, col: f64) -> Self {
        Self { row, col }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.row - other.row).hypot(self.col - other.col)
    }

    /// Reflection about the vertical line `col = axis_col`.
    pub fn mirror_col(&self, axis_col: f64) -> Point {
        Point::new(self.row, 2.0 * axis_col - self.col)
    }

    pub fn is_finite(&self) -> bool {
        self.row.is_finite() && self.col.is_finite()
    }
}

/// Interleaved 8-bit raster access shared by the gray and colour images.
pub trait Raster {
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    fn channels(&self) -> usize;
    fn data(&self) -> &[u8];

    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height < 2 || width < 2 {
        return Err(Error::TooSmall { height, width });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    /// `pixels` holds `height * width` interleaved RGB triples.
    pub fn from_raw(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(height, width)?;
        if pixels.len() != height * width * 3 {
            return Err(Error::MalformedFile(format!(
                "expected {} bytes for {height}x{width} RGB, got {}",
                height * width * 3,
                pixels.len()
            )));
        }
        Ok(Self { height, width, pixels })
    }

    /// Replicates a gray image across three channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        let pixels = gray.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            height: gray.height,
            width: gray.width,
            pixels,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }
}

impl Raster for RgbImage {
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn channels(&self) -> usize {
        3
    }
    fn data(&self) -> &[u8] {
        &self.pixels
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn from_raw(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(height, width)?;
        if pixels.len() != height * width {
            return Err(Error::MalformedFile(format!(
                "expected {} bytes for {height}x{width} gray, got {}",
                height * width,
                pixels.len()
            )));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self> {
        Self::from_raw(height, width, vec![value; height * width])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn put(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    /// Left-right mirror image.
    pub fn flip_horizontal(&self) -> GrayImage {
        let mut out = self.clone();
        for row in 0..self.height {
            for col in 0..self.width {
                out.put(row, col, self.get(row, self.width - 1 - col));
            }
        }
        out
    }
}

impl Raster for GrayImage {
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn channels(&self) -> usize {
        1
    }
    fn data(&self) -> &[u8] {
        &self.pixels
    }
}

/// Either kind of 8-bit raster, for operations that preserve the channel
/// count of their input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl AnyImage {
    /// Builds a gray or RGB image from interleaved data with 1 or 3 channels.
    pub fn from_raw(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        match channels {
            1 => GrayImage::from_raw(height, width, pixels).map(AnyImage::Gray),
            3 => RgbImage::from_raw(height, width, pixels).map(AnyImage::Rgb),
            n => Err(Error::MalformedFile(format!("unsupported channel count {n}"))),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            AnyImage::Gray(g) => g.clone(),
            AnyImage::Rgb(c) => to_grayscale(c),
        }
    }
}

impl Raster for AnyImage {
    fn height(&self) -> usize {
        match self {
            AnyImage::Gray(g) => g.height(),
            AnyImage::Rgb(c) => c.height(),
        }
    }
    fn width(&self) -> usize {
        match self {
            AnyImage::Gray(g) => g.width(),
            AnyImage::Rgb(c) => c.width(),
        }
    }
    fn channels(&self) -> usize {
        match self {
            AnyImage::Gray(_) => 1,
            AnyImage::Rgb(_) => 3,
        }
    }
    fn data(&self) -> &[u8] {
        match self {
            AnyImage::Gray(g) => g.data(),
            AnyImage::Rgb(c) => c.data(),
        }
    }
}

/// Decodes a PNG, JPEG or BMP byte stream. Gray sources are replicated
/// across the three channels.
pub fn decode(bytes: &[u8]) -> Result<RgbImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    let decoded = reader.decode().map_err(|e| Error::MalformedFile(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::from_raw(h as usize, w as usize, rgb.into_raw())
}

pub fn decode_file(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

/// Like [`decode`], but keeps single-channel sources single-channel.
pub fn decode_any(bytes: &[u8]) -> Result<AnyImage> {
    let decoded = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::MalformedFile(e.to_string()))?
        .decode()
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    if decoded.color().has_color() {
        let rgb = decoded.to_rgb8();
        let (w, h) = rgb.dimensions();
        RgbImage::from_raw(h as usize, w as usize, rgb.into_raw()).map(AnyImage::Rgb)
    } else {
        let gray = decoded.to_luma8();
        let (w, h) = gray.dimensions();
        GrayImage::from_raw(h as usize, w as usize, gray.into_raw()).map(AnyImage::Gray)
    }
}

pub fn decode_any_file(path: impl AsRef<Path>) -> Result<AnyImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_any(&bytes)
}

/// Luma with BT.601 weights, rounded half-up. Integer arithmetic keeps the
/// result exact: `(299 R + 587 G + 114 B + 500) / 1000`.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let luma = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500;
            (luma / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        height: img.height,
        width: img.width,
        pixels,
    }
}

fn color_type(channels: usize) -> image::ExtendedColorType {
    match channels {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        n => unreachable!("unsupported channel count {n}"),
    }
}

/// Lossless PNG encoding into memory.
pub fn encode_png_bytes<R: Raster + ?Sized>(img: &R) -> Vec<u8> {
    let mut out = Vec::new();
    image::write_buffer_with_format(
        &mut Cursor::new(&mut out),
        img.data(),
        img.width() as u32,
        img.height() as u32,
        color_type(img.channels()),
        ImageFormat::Png,
    )
    .expect("in-memory PNG encoding cannot fail for a valid raster");
    out
}

/// Writes a lossless PNG to `path`.
pub fn encode<R: Raster + ?Sized>(img: &R, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_png_bytes(img)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
