//! Minimal PGM/PPM reader and writer (`P2`, `P3`, `P5`, `P6`, maxval 255).

use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// 8-bit grayscale or RGB image. Pixels are stored channel-major: the whole
/// first channel in row-major order, then the second, and so on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortableImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    PlainGray,
    PlainRgb,
    RawGray,
    RawRgb,
}

impl Format {
    fn channels(self) -> usize {
        match self {
            Format::PlainGray | Format::RawGray => 1,
            Format::PlainRgb | Format::RawRgb => 3,
        }
    }
}

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(start) {
                None => parse_err(start, format!("truncated data: expected {what}")),
                Some(_) => parse_err(start, format!("expected {what}")),
            };
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map_or_else(|| parse_err(start, format!("{what} out of range")), Ok)
    }
}

impl PortableImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image dimensions must be positive".into(),
            ));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{} pixel values for a {width}x{height}x{channels} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            maxval: 255,
            pixels,
        })
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 2 {
            return parse_err(0, "truncated data: missing magic");
        }
        let format = match &bytes[..2] {
            b"P2" => Format::PlainGray,
            b"P3" => Format::PlainRgb,
            b"P5" => Format::RawGray,
            b"P6" => Format::RawRgb,
            other => {
                return parse_err(
                    0,
                    format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
                )
            }
        };
        let mut cur = Cursor { bytes, pos: 2 };
        let width = cur.number("width")? as usize;
        let height = cur.number("height")? as usize;
        if width == 0 || height == 0 {
            return parse_err(cur.pos, "image dimensions must be positive");
        }
        cur.skip_space();
        let max_at = cur.pos;
        let maxval = cur.number("maxval")?;
        if maxval != 255 {
            return parse_err(
                max_at,
                format!("maxval {maxval} is not supported (need 255)"),
            );
        }

        let channels = format.channels();
        let count = width * height * channels;
        let mut interleaved = Vec::with_capacity(count);
        match format {
            Format::PlainGray | Format::PlainRgb => {
                for _ in 0..count {
                    cur.skip_space();
                    let at = cur.pos;
                    let v = cur.number("pixel value")?;
                    if v > 255 {
                        return parse_err(at, format!("pixel value {v} exceeds maxval"));
                    }
                    interleaved.push(v as u8);
                }
            }
            Format::RawGray | Format::RawRgb => {
                // exactly one whitespace byte separates the header from the raster
                match bytes.get(cur.pos) {
                    Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                    _ => return parse_err(cur.pos, "truncated data: missing raster"),
                }
                let end = cur.pos + count;
                if end > bytes.len() {
                    return parse_err(
                        bytes.len(),
                        format!("truncated data: expected {count} raster bytes"),
                    );
                }
                interleaved.extend_from_slice(&bytes[cur.pos..end]);
            }
        }

        let plane = width * height;
        let mut pixels = vec![0u8; count];
        for (p, px) in interleaved.chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                pixels[c * plane + p] = v;
            }
        }
        Self::new(width, height, channels, pixels)
    }

    /// Binary encoding (`P5` or `P6`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        let plane = self.width * self.height;
        out.reserve(self.pixels.len());
        for p in 0..plane {
            for c in 0..self.channels {
                out.push(self.pixels[c * plane + p]);
            }
        }
        out
    }

    /// Channel `c` as a `height x width` matrix of values in `[0, 255]`.
    pub fn channel(&self, c: usize) -> Result<DenseMatrix> {
        if c >= self.channels {
            return Err(Error::InvalidArgument(format!(
                "channel {c} out of range for a {}-channel image",
                self.channels
            )));
        }
        let plane = self.width * self.height;
        let data = self.pixels[c * plane..(c + 1) * plane]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        DenseMatrix::from_vec(self.height, self.width, data)
    }

    /// Builds an image from 1 or 3 equally sized channels, rounding and
    /// clamping to `[0, 255]`.
    pub fn from_channels(channels: &[DenseMatrix]) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidArgument("no channels given".into()))?;
        let (height, width) = first.shape();
        if channels.iter().any(|c| c.shape() != (height, width)) {
            return Err(Error::Dimension("channels differ in shape".into()));
        }
        let pixels = channels
            .iter()
            .flat_map(|c| {
                c.as_slice()
                    .iter()
                    .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            })
            .collect();
        Self::new(width, height, channels.len(), pixels)
    }
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PortableImage> {
    PortableImage::parse(&std::fs::read(path)?)
}

pub fn write_pnm(path: impl AsRef<Path>, image: &PortableImage) -> Result<()> {
    std::fs::write(path, image.to_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_single_pixel() {
        let img = PortableImage::parse(b"P2\n1 1\n255\n128\n").unwrap();
        assert_eq!((img.width, img.height, img.channels), (1, 1, 1));
        assert_eq!(img.pixels, vec![128]);
    }

    #[test]
    fn comments_and_odd_whitespace() {
        let img = PortableImage::parse(b"P3 # rgb\n2 1 # size\n255\n1 2 3\t4\n5   6").unwrap();
        // channel-major
        assert_eq!(img.pixels, vec![1, 4, 2, 5, 3, 6]);
    }

    #[test]
    fn raw_round_trip() {
        let img = PortableImage::new(3, 2, 1, vec![0, 10, 20, 30, 40, 255]).unwrap();
        assert_eq!(PortableImage::parse(&img.to_bytes()).unwrap(), img);
        let rgb = PortableImage::new(2, 2, 3, (0..12).map(|v| v * 20).collect()).unwrap();
        assert_eq!(PortableImage::parse(&rgb.to_bytes()).unwrap(), rgb);
    }

    #[test]
    fn errors_carry_offsets() {
        let msg = PortableImage::parse(b"P7\n1 1\n255\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("unsupported magic"), "{msg}");
        match PortableImage::parse(b"P2\n1 1\n65535\n0\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
        let msg = PortableImage::parse(b"P5\n2 2\n255\n\x01\x02")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("truncated"), "{msg}");
        let msg = PortableImage::parse(b"P2\n2 1\n255\n7")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("truncated"), "{msg}");
    }

    #[test]
    fn channel_conversion() {
        let img = PortableImage::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let g = img.channel(1).unwrap();
        assert_eq!(g.as_slice(), &[3.0, 4.0]);
        let back = PortableImage::from_channels(&[
            img.channel(0).unwrap(),
            g,
            img.channel(2).unwrap().scale(100.0),
        ])
        .unwrap();
        assert_eq!(back.pixels, vec![1, 2, 3, 4, 255, 255]);
    }
}
