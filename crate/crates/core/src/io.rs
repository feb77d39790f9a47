//! Bit-exact 16-bit PGM (P5) and PNG codecs.
//!
//! PGM samples are two bytes, big-endian, as the netpbm format requires for
//! maxval > 255. PNG is 16-bit grayscale without alpha. Anything 8-bit is
//! rejected instead of promoted.

use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage16};

/// Upper bound on decoded pixel count (2^28, i.e. 16384 × 16384).
pub const MAX_PIXELS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm16,
    Png16,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(Self::Pgm16),
            "png" => Some(Self::Png16),
            _ => None,
        }
    }

    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"P5") {
            Some(Self::Pgm16)
        } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
            Some(Self::Png16)
        } else {
            None
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Pgm16 => "pgm",
            Self::Png16 => "png",
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pgm16 => "pgm16",
            Self::Png16 => "png16",
        })
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm16" | "pgm" => Ok(Self::Pgm16),
            "png16" | "png" => Ok(Self::Png16),
            other => Err(Error::InvalidParams(format!("unknown image format {other:?}"))),
        }
    }
}

pub fn read_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<GrayImage16> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, format)
}

/// Reads an image, picking the codec from the file contents.
pub fn read_image_auto(path: impl AsRef<Path>) -> Result<GrayImage16> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_auto(&bytes)
}

pub fn write_image(image: &GrayImage16, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(image, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Masks are stored as 0 / 65535 intensities.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    write_image(&mask.to_gray16(), path, format)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    read_image_auto(path).map(|img| BinaryMask::from_gray16(&img))
}

pub fn decode(bytes: &[u8], format: ImageFormat) -> Result<GrayImage16> {
    match format {
        ImageFormat::Pgm16 => decode_pgm(bytes),
        ImageFormat::Png16 => decode_png(bytes),
    }
}

pub fn decode_auto(bytes: &[u8]) -> Result<GrayImage16> {
    let format = ImageFormat::sniff(bytes)
        .ok_or_else(|| Error::Unsupported("not a binary PGM (P5) or PNG file".into()))?;
    decode(bytes, format)
}

pub fn encode(image: &GrayImage16, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm16 => Ok(encode_pgm(image)),
        ImageFormat::Png16 => encode_png(image),
    }
}

fn checked_pixels(format: &'static str, width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::Malformed { format, reason: format!("zero dimension {width}x{height}") });
    }
    match width.checked_mul(height) {
        Some(n) if n <= MAX_PIXELS => Ok(n),
        _ => Err(Error::InvalidImage(format!(
            "dimension overflow: {width}x{height} exceeds {MAX_PIXELS} pixels"
        ))),
    }
}

// ---------------------------------------------------------------------------
// PGM

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn malformed_pgm(reason: impl Into<String>) -> Error {
    Error::Malformed { format: "PGM", reason: reason.into() }
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(malformed_pgm("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(malformed_pgm("header ended early")),
            }
        }
        if pos == 2 {
            return Err(malformed_pgm("no whitespace after magic"));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed_pgm(format!("header field {} is not a number", i + 1)));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::InvalidImage(format!("dimension overflow in PGM header field {text}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed_pgm("expected single whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(malformed_pgm(format!("maxval {maxval} outside 1..=65535")));
    }
    if maxval < 256 {
        return Err(Error::UnsupportedBitDepth(format!("8-bit PGM (maxval {maxval})")));
    }
    let width = usize::try_from(width).map_err(|_| Error::InvalidImage("dimension overflow".into()))?;
    let height = usize::try_from(height).map_err(|_| Error::InvalidImage("dimension overflow".into()))?;
    Ok(PgmHeader { width, height, maxval: maxval as u32, data_offset: pos })
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage16> {
    let header = parse_pgm_header(bytes)?;
    let n = checked_pixels("PGM", header.width, header.height)?;
    let payload = &bytes[header.data_offset..];
    let expected = n * 2;
    if payload.len() < expected {
        return Err(Error::Truncated { format: "PGM", expected, found: payload.len() });
    }
    let mut pixels = Vec::with_capacity(n);
    for chunk in payload[..expected].chunks_exact(2) {
        let v = u16::from_be_bytes([chunk[0], chunk[1]]);
        if u32::from(v) > header.maxval {
            return Err(malformed_pgm(format!("sample {v} exceeds maxval {}", header.maxval)));
        }
        pixels.push(v);
    }
    GrayImage16::new(header.width, header.height, pixels)
}

fn encode_pgm(image: &GrayImage16) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for &p in image.pixels() {
        out.extend_from_slice(&p.to_be_bytes());
    }
    out
}

// ---------------------------------------------------------------------------
// PNG

fn png_error(e: impl fmt::Display) -> Error {
    Error::Malformed { format: "PNG", reason: e.to_string() }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage16> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let (color, depth, width, height) = {
        let info = reader.info();
        (info.color_type, info.bit_depth, info.width as usize, info.height as usize)
    };
    if depth != png::BitDepth::Sixteen {
        return Err(Error::UnsupportedBitDepth(format!("{}-bit PNG", depth as u8)));
    }
    if color != png::ColorType::Grayscale {
        return Err(Error::Unsupported(format!("PNG color type {color:?}; expected 16-bit grayscale")));
    }
    let n = checked_pixels("PNG", width, height)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::InvalidImage("dimension overflow".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::Truncated { format: "PNG", expected: n * 2, found: 0 }
        }
        other => png_error(other),
    })?;
    let data = &buf[..frame.buffer_size()];
    if data.len() < n * 2 {
        return Err(Error::Truncated { format: "PNG", expected: n * 2, found: data.len() });
    }
    let pixels = data[..n * 2]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    GrayImage16::new(width, height, pixels)
}

fn encode_png(image: &GrayImage16) -> Result<Vec<u8>> {
    let width = u32::try_from(image.width()).map_err(|_| Error::InvalidImage("width exceeds PNG limit".into()))?;
    let height = u32::try_from(image.height()).map_err(|_| Error::InvalidImage("height exceeds PNG limit".into()))?;
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Sixteen);
        encoder.set_compression(png::Compression::Fast);
        let mut writer = encoder.write_header().map_err(png_error)?;
        let data: Vec<u8> = image.pixels().iter().flat_map(|p| p.to_be_bytes()).collect();
        writer.write_image_data(&data).map_err(png_error)?;
        writer.finish().map_err(png_error)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm_bytes(header: &str, samples: &[u16]) -> Vec<u8> {
        let mut out = header.as_bytes().to_vec();
        for s in samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
        out
    }

    #[test]
    fn decodes_big_endian_pgm() {
        let bytes = pgm_bytes("P5\n2 2\n65535\n", &[100, 200, 300, 400]);
        let img = decode(&bytes, ImageFormat::Pgm16).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[100, 200, 300, 400]);
    }

    #[test]
    fn pgm_header_comments() {
        let bytes = pgm_bytes("P5 # made by hand\n2 # w\n1\n# maxval next\n4095\n", &[7, 4095]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[7, 4095]);
    }

    #[test]
    fn rejects_8bit_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        let err = decode_pgm(&bytes).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBitDepth(_)));
        assert!(err.to_string().contains("unsupported bit depth"));
    }

    #[test]
    fn rejects_truncated_and_malformed_pgm() {
        let bytes = pgm_bytes("P5\n2 2\n65535\n", &[1, 2, 3]);
        assert!(matches!(decode_pgm(&bytes), Err(Error::Truncated { expected: 8, found: 6, .. })));
        assert!(matches!(decode_pgm(b"P2\n1 1\n65535\n1"), Err(Error::Malformed { .. })));
        assert!(matches!(decode_pgm(b"P5\n1 x\n65535\n"), Err(Error::Malformed { .. })));
        let over = pgm_bytes("P5\n1 1\n1000\n", &[1001]);
        assert!(matches!(decode_pgm(&over), Err(Error::Malformed { .. })));
    }

    #[test]
    fn rejects_dimension_overflow() {
        let bytes = b"P5\n99999999999999999999999 2\n65535\n";
        assert!(matches!(decode_pgm(bytes), Err(Error::InvalidImage(_))));
        let bytes = b"P5\n100000 100000\n65535\n";
        assert!(matches!(decode_pgm(bytes), Err(Error::InvalidImage(_))));
    }

    #[test]
    fn rejects_8bit_png() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2]).unwrap();
        }
        let err = decode(&out, ImageFormat::Png16).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBitDepth(_)), "{err}");
    }

    #[test]
    fn rejects_truncated_png() {
        let img = GrayImage16::from_fn(16, 16, |x, y| (x * 977 + y * 131) as u16).unwrap();
        let bytes = encode(&img, ImageFormat::Png16).unwrap();
        assert!(decode(&bytes[..bytes.len() / 2], ImageFormat::Png16).is_err());
    }

    #[test]
    fn mask_written_as_full_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let m = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        write_mask(&m, &path, ImageFormat::Pgm16).unwrap();
        let back = read_image(&path, ImageFormat::Pgm16).unwrap();
        assert_eq!(back.pixels(), &[65535, 0, 0, 65535]);
    }

    #[test]
    fn empty_path_is_io_error() {
        let img = GrayImage16::filled(1, 1, 5).unwrap();
        assert!(matches!(write_image(&img, "", ImageFormat::Pgm16), Err(Error::Io { .. })));
    }

    #[test]
    fn sniffing() {
        assert_eq!(ImageFormat::sniff(b"P5\n"), Some(ImageFormat::Pgm16));
        assert_eq!(ImageFormat::sniff(b"\x89PNG\r\n"), Some(ImageFormat::Png16));
        assert_eq!(ImageFormat::sniff(b"GIF89a"), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roundtrip_both_formats(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = GrayImage16::from_fn(w, h, |x, y| {
                let v = seed ^ ((x as u64) << 32 | y as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                (v.rotate_left(17) >> 48) as u16
            }).unwrap();
            for format in [ImageFormat::Pgm16, ImageFormat::Png16] {
                let bytes = encode(&img, format).unwrap();
                prop_assert_eq!(&decode(&bytes, format).unwrap(), &img);
                prop_assert_eq!(&decode_auto(&bytes).unwrap(), &img);
            }
        }
    }
}
