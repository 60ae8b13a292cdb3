//! HDR image I/O (PFM), error metrics, and an LDR preview tonemap.
//!
//! PFM is the interchange format: color "PF" header, negative scale marker
//! for little-endian samples, rows stored bottom-up. Writes round-trip
//! bit-exactly through reads at f32 precision, which is what the fixed-seed
//! reproducibility check compares.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::color::rgb;
use crate::film::Image;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: malformed PFM at byte {offset}: {msg}")]
    Malformed { path: String, offset: usize, msg: String },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Write a linear image as little-endian color PFM.
pub fn write_pfm(image: &Image, path: &Path) -> Result<(), IoError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "PF\n{} {}\n-1.0\n", image.width, image.height)?;
    // Bottom row first.
    for y in (0..image.height).rev() {
        for x in 0..image.width {
            let p = image.pixel(x, y);
            for c in [p.r, p.g, p.b] {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<Image, IoError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_pfm(&bytes, &path.display().to_string())
}

fn parse_pfm(bytes: &[u8], path: &str) -> Result<Image, IoError> {
    let fail = |offset: usize, msg: &str| IoError::Malformed {
        path: path.to_string(),
        offset,
        msg: msg.to_string(),
    };
    let mut pos = 0usize;
    // A header token is a whitespace-free run; exactly one whitespace byte
    // follows the scale line before sample data begins.
    let token = |pos: &mut usize| -> Result<(usize, String), IoError> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(fail(start, "unexpected end of header"));
        }
        Ok((start, String::from_utf8_lossy(&bytes[start..*pos]).into_owned()))
    };

    let (off, magic) = token(&mut pos)?;
    if magic != "PF" {
        if magic == "Pf" {
            return Err(fail(off, "grayscale PFM is not supported, expected color \"PF\""));
        }
        return Err(fail(off, &format!("expected \"PF\" magic, found {magic:?}")));
    }
    let (off_w, w_tok) = token(&mut pos)?;
    let width: u32 = w_tok.parse().map_err(|_| fail(off_w, &format!("bad width {w_tok:?}")))?;
    let (off_h, h_tok) = token(&mut pos)?;
    let height: u32 = h_tok.parse().map_err(|_| fail(off_h, &format!("bad height {h_tok:?}")))?;
    if width == 0 || height == 0 {
        return Err(fail(off_w, "zero image dimension"));
    }
    let (off_s, s_tok) = token(&mut pos)?;
    let scale: f64 = s_tok.parse().map_err(|_| fail(off_s, &format!("bad scale {s_tok:?}")))?;
    if scale == 0.0 {
        return Err(fail(off_s, "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(fail(pos, "expected single whitespace after scale"));
    }
    pos += 1;

    let n_samples = width as usize * height as usize * 3;
    let need = n_samples * 4;
    if bytes.len() - pos < need {
        return Err(fail(
            bytes.len(),
            &format!("truncated sample data: need {need} bytes, have {}", bytes.len() - pos),
        ));
    }
    let magnitude = scale.abs();
    let mut image = Image::new(width, height);
    for y_file in 0..height {
        let y = height - 1 - y_file;
        for x in 0..width {
            let mut ch = [0.0f64; 3];
            for c in ch.iter_mut() {
                let raw: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(raw)
                } else {
                    f32::from_be_bytes(raw)
                };
                // Unit scale (the only kind we write) must not perturb bits.
                *c = if magnitude == 1.0 { v as f64 } else { v as f64 * magnitude };
                pos += 4;
            }
            image.data[(y * width + x) as usize] = rgb(ch[0], ch[1], ch[2]);
        }
    }
    Ok(image)
}

/// Root mean square error over all pixels and channels of two linear images.
pub fn rmse(a: &Image, b: &Image) -> Result<f64, IoError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(IoError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let mut sum = 0.0;
    for (pa, pb) in a.data.iter().zip(&b.data) {
        let d = *pa - *pb;
        sum += d.r * d.r + d.g * d.g + d.b * d.b;
    }
    Ok((sum / (a.data.len() as f64 * 3.0)).sqrt())
}

fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Reinhard `c/(1+c)` per channel followed by sRGB encoding. Preview only;
/// metrics always run on the linear data.
pub fn tonemap_png(image: &Image, path: &Path) -> Result<(), IoError> {
    let mut out = image::RgbImage::new(image.width, image.height);
    for y in 0..image.height {
        for x in 0..image.width {
            let p = image.pixel(x, y);
            let mut px = [0u8; 3];
            for (i, c) in [p.r, p.g, p.b].into_iter().enumerate() {
                let c = c.max(0.0);
                let ldr = srgb_encode(c / (1.0 + c));
                px[i] = (ldr * 255.0 + 0.5).clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x, y, image::Rgb(px));
        }
    }
    out.save(path).map_err(|e| io::Error::other(e.to_string()))?;
    Ok(())
}

/// A rendered image plus the settings that produced it.
#[derive(Debug, Clone)]
pub struct ImageFile {
    pub image: Image,
    pub integrator: String,
    pub iterations: u64,
    pub wall_seconds: f64,
    pub seed: u64,
}
