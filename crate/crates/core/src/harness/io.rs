//! PNG, PFM and JSON file I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::image::{Rgb, RgbImage, ScalarImage};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("png encoding failed: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed pfm: {0}")]
    Pfm(String),
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB PNG with an sRGB chunk; values are clamped to [0, 1].
pub fn write_png(path: &Path, image: &RgbImage) -> Result<(), IoError> {
    let mut encoder = png::Encoder::new(
        BufWriter::new(create(path)?),
        image.width as u32,
        image.height as u32,
    );
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    let mut writer = encoder.write_header()?;
    let data: Vec<u8> = image
        .pixels
        .iter()
        .flat_map(|p| [to_byte(p.x), to_byte(p.y), to_byte(p.z)])
        .collect();
    writer.write_image_data(&data)?;
    writer.finish()?;
    Ok(())
}

pub fn read_png(path: &Path) -> Result<RgbImage, IoError> {
    let mut decoder = png::Decoder::new(BufReader::new(open(path)?));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| IoError::Pfm("png output size overflows".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => 3,
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let pixels = (0..w * h)
        .map(|k| {
            let row = k / w;
            let px = &buf[row * info.line_size + (k % w) * channels..];
            let v = |c: usize| px[c] as f64 / 255.0;
            if channels < 3 {
                Rgb::repeat(v(0))
            } else {
                Rgb::new(v(0), v(1), v(2))
            }
        })
        .collect();
    Ok(RgbImage::from_pixels(w, h, pixels))
}

/// Single-channel little-endian PFM (negative scale), rows stored bottom-up.
pub fn write_pfm(path: &Path, image: &ScalarImage) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(32 + 4 * image.pixels.len());
    write!(out, "Pf\n{} {}\n-1.0\n", image.width, image.height).expect("write to vec");
    for j in (0..image.height).rev() {
        for i in 0..image.width {
            out.extend_from_slice(&(*image.get(i, j) as f32).to_le_bytes());
        }
    }
    let mut f = BufWriter::new(create(path)?);
    f.write_all(&out).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_pfm(path: &Path) -> Result<ScalarImage, IoError> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::Pfm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(IoError::Pfm(format!("unsupported magic {}", fields[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| IoError::Pfm(format!("bad size {s}")));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let scale: f64 = fields[3]
        .parse()
        .map_err(|_| IoError::Pfm(format!("bad scale {}", fields[3])))?;
    let data = &bytes[pos..];
    if data.len() < 4 * w * h {
        return Err(IoError::Pfm("truncated data".into()));
    }
    let mut img = ScalarImage::filled(w, h, 0.0);
    for (k, chunk) in data.chunks_exact(4).take(w * h).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if scale < 0.0 {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        img.set(k % w, h - 1 - k / w, v as f64);
    }
    Ok(img)
}

/// Pretty JSON with sorted object keys and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let s = to_json_string(value)?;
    std::fs::write(path, s).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}
