//! Binary key/value container for encoded images, and raster decoding.
//!
//! Layout (all integers little-endian, no padding, no checksum):
//!
//! ```text
//! offset 0   magic      "MKSQ1\0"          6 bytes
//! offset 6   count      u64                8 bytes
//! then `count` times:
//!            key_len    u32
//!            key        UTF-8 bytes
//!            value_len  u32
//!            value      raw bytes
//! ```

use std::collections::HashSet;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::color::RgbColor;

pub const MAGIC: &[u8; 6] = b"MKSQ1\0";
pub const HEADER_LEN: usize = 14;
/// Fixed per-entry overhead: the two length prefixes.
pub const ENTRY_OVERHEAD: usize = 8;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic at offset 0: expected \"MKSQ1\\0\"")]
    BadMagic,
    #[error("truncated container: record starting at offset {offset} is incomplete ({what})")]
    Truncated { offset: u64, what: &'static str },
    #[error(
        "length overflow at offset {offset}: {what} of {len} exceeds the {available} bytes left"
    )]
    LengthOverflow {
        offset: u64,
        what: &'static str,
        len: u64,
        available: u64,
    },
    #[error("key at offset {offset} is not valid UTF-8")]
    InvalidKey { offset: u64 },
    #[error("empty key at offset {offset}")]
    EmptyKey { offset: u64 },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("{what} of {len} bytes does not fit a u32 length prefix")]
    TooLarge { what: &'static str, len: usize },
    #[error("{0} trailing bytes after the last entry")]
    TrailingBytes(u64),
    #[error("container declared {declared} entries but {written} were written")]
    CountMismatch { declared: u64, written: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("cannot decode {format} image: {message}")]
    Corrupt { format: ImageKind, message: String },
    #[error("unsupported image encoding (leading bytes {0:02x?}); expected PNG or binary PPM")]
    Unsupported(Vec<u8>),
}

/// One container entry: a file name and the encoded image bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceEntry {
    pub key: String,
    pub value: Vec<u8>,
}

impl SequenceEntry {
    pub fn new(key: impl Into<String>, value: impl Into<Vec<u8>>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
        }
    }
}

/// Size in bytes of the packed form of `entries`.
pub fn packed_len(entries: &[SequenceEntry]) -> usize {
    HEADER_LEN
        + entries
            .iter()
            .map(|e| ENTRY_OVERHEAD + e.key.len() + e.value.len())
            .sum::<usize>()
}

/// Serializes entries into a container, preserving their order.
pub fn pack(entries: &[SequenceEntry]) -> Result<Vec<u8>, ContainerError> {
    let mut out = Vec::with_capacity(packed_len(entries));
    let mut writer = SequenceWriter::new(&mut out, entries.len() as u64)?;
    for entry in entries {
        writer.append(&entry.key, &entry.value)?;
    }
    writer.finish()?;
    Ok(out)
}

/// Parses a whole container held in memory.
pub fn unpack(bytes: &[u8]) -> Result<Vec<SequenceEntry>, ContainerError> {
    let mut reader = SequenceReader::new(bytes)?;
    // Every entry needs at least its two length prefixes.
    let available = (bytes.len() - HEADER_LEN) as u64;
    if reader.remaining().saturating_mul(ENTRY_OVERHEAD as u64) > available {
        return Err(ContainerError::LengthOverflow {
            offset: 6,
            what: "entry count",
            len: reader.remaining(),
            available,
        });
    }
    let mut entries = Vec::with_capacity(reader.remaining() as usize);
    for entry in reader.by_ref() {
        entries.push(entry?);
    }
    let consumed = reader.offset();
    if consumed < bytes.len() as u64 {
        return Err(ContainerError::TrailingBytes(bytes.len() as u64 - consumed));
    }
    Ok(entries)
}

/// Streaming writer. The entry count is part of the header, so it has to be
/// known up front; [`SequenceWriter::finish`] checks it was honored.
pub struct SequenceWriter<W: Write> {
    inner: W,
    declared: u64,
    written: u64,
    keys: HashSet<String>,
}

impl<W: Write> SequenceWriter<W> {
    pub fn new(mut inner: W, count: u64) -> Result<Self, ContainerError> {
        inner.write_all(MAGIC)?;
        inner.write_all(&count.to_le_bytes())?;
        Ok(Self {
            inner,
            declared: count,
            written: 0,
            keys: HashSet::new(),
        })
    }

    pub fn append(&mut self, key: &str, value: &[u8]) -> Result<(), ContainerError> {
        if key.is_empty() {
            return Err(ContainerError::EmptyKey {
                offset: self.written,
            });
        }
        if !self.keys.insert(key.to_owned()) {
            return Err(ContainerError::DuplicateKey(key.to_owned()));
        }
        if self.written == self.declared {
            return Err(ContainerError::CountMismatch {
                declared: self.declared,
                written: self.written + 1,
            });
        }
        let key_len = u32::try_from(key.len()).map_err(|_| ContainerError::TooLarge {
            what: "key",
            len: key.len(),
        })?;
        let value_len = u32::try_from(value.len()).map_err(|_| ContainerError::TooLarge {
            what: "value",
            len: value.len(),
        })?;
        self.inner.write_all(&key_len.to_le_bytes())?;
        self.inner.write_all(key.as_bytes())?;
        self.inner.write_all(&value_len.to_le_bytes())?;
        self.inner.write_all(value)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, ContainerError> {
        if self.written != self.declared {
            return Err(ContainerError::CountMismatch {
                declared: self.declared,
                written: self.written,
            });
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Streaming reader yielding entries in stored order.
pub struct SequenceReader<R: Read> {
    inner: R,
    remaining: u64,
    offset: u64,
    keys: HashSet<String>,
    failed: bool,
}

impl<R: Read> SequenceReader<R> {
    pub fn new(mut inner: R) -> Result<Self, ContainerError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_up_to(&mut inner, &mut header)?;
        if got < MAGIC.len() || &header[..6] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if got < HEADER_LEN {
            return Err(ContainerError::Truncated {
                offset: 6,
                what: "entry count",
            });
        }
        let count = u64::from_le_bytes(header[6..].try_into().expect("8 bytes"));
        Ok(Self {
            inner,
            remaining: count,
            offset: HEADER_LEN as u64,
            keys: HashSet::new(),
            failed: false,
        })
    }

    /// Entries not yet read.
    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Bytes consumed so far.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn read_entry(&mut self) -> Result<SequenceEntry, ContainerError> {
        let start = self.offset;
        let truncated = |what| ContainerError::Truncated {
            offset: start,
            what,
        };

        let key_len = self.read_u32().map_err(|_| truncated("key length"))?;
        let key_bytes = self
            .read_exact_vec(key_len as usize)
            .map_err(|_| truncated("key"))?;
        let key = String::from_utf8(key_bytes)
            .map_err(|_| ContainerError::InvalidKey { offset: start })?;
        if key.is_empty() {
            return Err(ContainerError::EmptyKey { offset: start });
        }
        let value_len = self.read_u32().map_err(|_| truncated("value length"))?;
        let value = self
            .read_exact_vec(value_len as usize)
            .map_err(|_| truncated("value"))?;
        if !self.keys.insert(key.clone()) {
            return Err(ContainerError::DuplicateKey(key));
        }
        Ok(SequenceEntry { key, value })
    }

    fn read_u32(&mut self) -> io::Result<u32> {
        let mut buf = [0u8; 4];
        self.inner.read_exact(&mut buf)?;
        self.offset += 4;
        Ok(u32::from_le_bytes(buf))
    }

    // Grows the buffer as bytes arrive so a corrupt length cannot force a
    // huge allocation up front.
    fn read_exact_vec(&mut self, len: usize) -> io::Result<Vec<u8>> {
        let mut buf = Vec::with_capacity(len.min(1 << 20));
        let got = (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        self.offset += got as u64;
        if got < len {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        Ok(buf)
    }
}

impl<R: Read> Iterator for SequenceReader<R> {
    type Item = Result<SequenceEntry, ContainerError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        let entry = self.read_entry();
        match entry {
            Ok(_) => self.remaining -= 1,
            Err(_) => self.failed = true,
        }
        Some(entry)
    }
}

fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Decoded image: row-major sRGB triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<RgbColor>,
}

impl Raster {
    /// Returns `None` unless both dimensions are at least 1 and
    /// `pixels.len() == width * height`.
    pub fn new(width: u32, height: u32, pixels: Vec<RgbColor>) -> Option<Self> {
        (width >= 1 && height >= 1 && pixels.len() == width as usize * height as usize).then_some(
            Self {
                width,
                height,
                pixels,
            },
        )
    }

    pub fn filled(width: u32, height: u32, color: RgbColor) -> Option<Self> {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[RgbColor] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> RgbColor {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn into_pixels(self) -> Vec<RgbColor> {
        self.pixels
    }

    /// Binary PPM (P6, maxval 255) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len() * 3);
        out.extend_from_slice(header.as_bytes());
        for p in &self.pixels {
            out.extend_from_slice(&[p.r, p.g, p.b]);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageKind {
    Png,
    Ppm,
}

impl std::fmt::Display for ImageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ImageKind::Png => "PNG",
            ImageKind::Ppm => "PPM",
        })
    }
}

impl ImageKind {
    /// Guesses the encoding from a file name extension.
    pub fn from_name(name: &str) -> Option<Self> {
        let ext = name.rsplit_once('.')?.1.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(ImageKind::Png),
            "ppm" | "pnm" => Some(ImageKind::Ppm),
            _ => None,
        }
    }

    /// Guesses the encoding from the payload's leading bytes.
    pub fn sniff(payload: &[u8]) -> Option<Self> {
        if payload.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(ImageKind::Png)
        } else if payload.starts_with(b"P6") {
            Some(ImageKind::Ppm)
        } else {
            None
        }
    }

    fn as_image_format(self) -> image::ImageFormat {
        match self {
            ImageKind::Png => image::ImageFormat::Png,
            ImageKind::Ppm => image::ImageFormat::Pnm,
        }
    }
}

/// Decodes an encoded image to sRGB triples, discarding any alpha channel.
///
/// With no hint the format is sniffed from the payload.
pub fn decode_image(payload: &[u8], hint: Option<ImageKind>) -> Result<Raster, DecodeError> {
    let kind = match hint.or_else(|| ImageKind::sniff(payload)) {
        Some(kind) => kind,
        None => {
            return Err(DecodeError::Unsupported(
                payload.iter().take(8).copied().collect(),
            ))
        }
    };
    let corrupt = |message: String| DecodeError::Corrupt {
        format: kind,
        message,
    };
    let img = image::load_from_memory_with_format(payload, kind.as_image_format())
        .map_err(|e| corrupt(e.to_string()))?;
    let rgb = img.into_rgb8();
    let (width, height) = rgb.dimensions();
    let pixels = rgb
        .into_raw()
        .chunks_exact(3)
        .map(|c| RgbColor::new(c[0], c[1], c[2]))
        .collect();
    Raster::new(width, height, pixels).ok_or_else(|| corrupt("image has no pixels".into()))
}
