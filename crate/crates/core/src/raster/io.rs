//! PNG and binary PPM (P6) reading and writing.
//!
//! Samples are normalized to `[0, 1]` by the format's maximum value on load
//! and quantized to 8 bits with round-half-up on save.

use std::fs;
use std::path::Path;

use ::image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::{Plane, RgbImage};
use crate::scalar::Scalar;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Loads a PNG (8 or 16 bit, any color type) or binary PPM file.
pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<RgbImage<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes, path)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{} is neither PNG nor binary PPM",
            path.display()
        )))
    }
}

/// Writes an 8-bit PNG or PPM, chosen by the file extension.
pub fn save_image<T: Scalar>(img: &RgbImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let (h, w) = img.dims();
    let mut buf = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            for v in img.pixel(r, c) {
                buf.push(quantize(v));
            }
        }
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    match ext.as_str() {
        "png" => {
            ::image::save_buffer_with_format(
                path,
                &buf,
                w as u32,
                h as u32,
                ::image::ColorType::Rgb8,
                ImageFormat::Png,
            )
            .map_err(|e| match e {
                ::image::ImageError::IoError(source) => io_err(source),
                other => Error::Decode {
                    path: path.to_path_buf(),
                    reason: other.to_string(),
                },
            })
        }
        "ppm" => {
            let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
            out.extend_from_slice(&buf);
            fs::write(path, out).map_err(io_err)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "cannot write extension `{other}` (use .png or .ppm)"
        ))),
    }
}

/// Clamps to `[0, 1]` and rounds half up to the nearest 8-bit level.
pub(crate) fn quantize<T: Scalar>(v: T) -> u8 {
    let v = v.as_f64().clamp(0.0, 1.0);
    (v * 255.0 + 0.5).floor() as u8
}

fn decode_png<T: Scalar>(bytes: &[u8], path: &Path) -> Result<RgbImage<T>> {
    let decoded = ::image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| {
        Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "zero-sized image".into(),
        });
    }
    let wide = matches!(
        decoded,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if wide {
        let raw = decoded.to_rgb16().into_raw();
        planes_from_interleaved(h, w, &raw, 65535.0)
    } else {
        let raw = decoded.to_rgb8().into_raw();
        planes_from_interleaved(h, w, &raw, 255.0)
    }
}

fn planes_from_interleaved<T: Scalar, S: Copy + Into<f64>>(
    h: usize,
    w: usize,
    raw: &[S],
    max: f64,
) -> Result<RgbImage<T>> {
    let mut chans: [Vec<T>; 3] = std::array::from_fn(|_| Vec::with_capacity(h * w));
    for px in raw.chunks_exact(3) {
        for (chan, &s) in chans.iter_mut().zip(px) {
            chan.push(T::lit(s.into() / max));
        }
    }
    let [r, g, b] = chans;
    RgbImage::new(Plane::new(h, w, r)?, Plane::new(h, w, g)?, Plane::new(h, w, b)?)
}

fn decode_ppm<T: Scalar>(bytes: &[u8], path: &Path) -> Result<RgbImage<T>> {
    let bad = |reason: &str| Error::Decode {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        // whitespace and `#` comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed PPM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed PPM header"))?;
    }
    // exactly one whitespace byte precedes the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("malformed PPM header"));
    }
    pos += 1;
    let [w, h, maxval] = header;
    if w == 0 || h == 0 {
        return Err(bad("zero-sized image"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("PPM maxval out of range"));
    }
    let n = w * h * 3;
    let body = &bytes[pos..];
    if maxval < 256 {
        if body.len() < n {
            return Err(bad("truncated PPM raster"));
        }
        planes_from_interleaved(h, w, &body[..n], maxval as f64)
    } else {
        if body.len() < 2 * n {
            return Err(bad("truncated PPM raster"));
        }
        let samples: Vec<u16> = body[..2 * n]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect();
        planes_from_interleaved(h, w, &samples, maxval as f64)
    }
}
