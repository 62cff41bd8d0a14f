//! File interchange.
//!
//! Raw tensor layout (all integers little-endian):
//!
//! ```text
//! b"SUAT" | rank: u32 | dims: rank x u32 | payload
//! ```
//!
//! The payload is row-major, `f32` for images and fields, `u16` for masks.
//! Images are rank 2 `[H, W]`, fields rank 3 `[2, H, W]` (channel 0 is `dx`,
//! channel 1 is `dy`), masks rank 2 `[H, W]`.
//!
//! Tensor archives hold named tensors:
//!
//! ```text
//! b"SUAA" | count: u32 | count x (name_len: u32 | name: utf-8 | raw tensor)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::grid::{Image, SegMask, VectorField};

pub const RAW_MAGIC: &[u8; 4] = b"SUAT";
pub const ARCHIVE_MAGIC: &[u8; 4] = b"SUAA";
const PNG_SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Raw,
}

impl ImageFormat {
    /// Picks the format from a file extension: `.png` or anything else as raw.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    F32,
    U16,
}

impl ElementKind {
    fn size(self) -> usize {
        match self {
            ElementKind::F32 => 4,
            ElementKind::U16 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawPayload {
    F32(Vec<f32>),
    U16(Vec<u16>),
}

impl RawPayload {
    fn len(&self) -> usize {
        match self {
            RawPayload::F32(v) => v.len(),
            RawPayload::U16(v) => v.len(),
        }
    }
}

/// A dense tensor in the raw interchange format.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub dims: Vec<usize>,
    pub payload: RawPayload,
}

impl RawTensor {
    pub fn new(dims: Vec<usize>, payload: RawPayload) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != payload.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {expected} elements, payload has {}",
                payload.len()
            )));
        }
        Ok(Self { dims, payload })
    }

    pub fn from_array_f32(a: &ArrayD<f32>) -> Self {
        Self {
            dims: a.shape().to_vec(),
            payload: RawPayload::F32(a.iter().copied().collect()),
        }
    }

    pub fn to_array_f32(&self) -> Result<ArrayD<f32>> {
        match &self.payload {
            RawPayload::F32(v) => ArrayD::from_shape_vec(IxDyn(&self.dims), v.clone())
                .map_err(|e| Error::Format(e.to_string())),
            RawPayload::U16(_) => Err(Error::Format("expected f32 payload, found u16".into())),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(RAW_MAGIC)?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        match &self.payload {
            RawPayload::F32(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            RawPayload::U16(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.payload.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads one tensor from a stream, consuming exactly its bytes.
    pub fn read_from(r: &mut impl Read, kind: ElementKind) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic)?;
        if &magic != RAW_MAGIC {
            return Err(Error::Format("missing SUAT magic".into()));
        }
        let rank = read_u32(r)? as usize;
        if rank == 0 || rank > 8 {
            return Err(Error::Format(format!("implausible rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(r)? as usize);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&c| c <= (1 << 31))
            .ok_or_else(|| Error::Format(format!("tensor dims {dims:?} too large")))?;
        let mut bytes = vec![0u8; count * kind.size()];
        read_exact(r, &mut bytes)?;
        let payload = match kind {
            ElementKind::F32 => RawPayload::F32(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
            ElementKind::U16 => RawPayload::U16(
                bytes
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect(),
            ),
        };
        Ok(Self { dims, payload })
    }

    /// Parses a complete file image; trailing bytes are rejected.
    pub fn from_bytes(bytes: &[u8], kind: ElementKind) -> Result<Self> {
        let mut cursor = bytes;
        let t = Self::read_from(&mut cursor, kind)?;
        if !cursor.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after payload", cursor.len())));
        }
        Ok(t)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated tensor: {e}")))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn image_to_raw(img: &Image) -> RawTensor {
    RawTensor {
        dims: vec![img.height(), img.width()],
        payload: RawPayload::F32(img.values().collect()),
    }
}

pub fn image_from_raw(t: &RawTensor) -> Result<Image> {
    match (&t.dims[..], &t.payload) {
        ([h, w], RawPayload::F32(v)) => Image::from_vec(*h, *w, v.clone()),
        _ => Err(Error::Format(format!("expected rank-2 f32 image, got dims {:?}", t.dims))),
    }
}

pub fn field_to_raw(f: &VectorField) -> RawTensor {
    let (h, w) = f.dims();
    let payload = f.dx.iter().chain(f.dy.iter()).copied().collect();
    RawTensor {
        dims: vec![2, h, w],
        payload: RawPayload::F32(payload),
    }
}

pub fn field_from_raw(t: &RawTensor) -> Result<VectorField> {
    match (&t.dims[..], &t.payload) {
        ([2, h, w], RawPayload::F32(v)) => {
            let n = h * w;
            let dx = Array2::from_shape_vec((*h, *w), v[..n].to_vec())
                .map_err(|e| Error::Format(e.to_string()))?;
            let dy = Array2::from_shape_vec((*h, *w), v[n..].to_vec())
                .map_err(|e| Error::Format(e.to_string()))?;
            VectorField::new(dx, dy)
        }
        _ => Err(Error::Format(format!("expected [2, H, W] f32 field, got dims {:?}", t.dims))),
    }
}

pub fn mask_to_raw(m: &SegMask) -> RawTensor {
    let (h, w) = m.dims();
    RawTensor {
        dims: vec![h, w],
        payload: RawPayload::U16(m.labels().iter().copied().collect()),
    }
}

/// The class count is not stored in the file; the caller supplies it.
pub fn mask_from_raw(t: &RawTensor, classes: usize) -> Result<SegMask> {
    match (&t.dims[..], &t.payload) {
        ([h, w], RawPayload::U16(v)) => {
            let labels = Array2::from_shape_vec((*h, *w), v.clone())
                .map_err(|e| Error::Format(e.to_string()))?;
            SegMask::new(labels, classes)
        }
        _ => Err(Error::Format(format!("expected rank-2 u16 mask, got dims {:?}", t.dims))),
    }
}

/// Loads an 8-bit grayscale PNG or a raw f32 image, detected by content.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes)
    } else if bytes.starts_with(RAW_MAGIC) {
        image_from_raw(&RawTensor::from_bytes(&bytes, ElementKind::F32)?)
    } else {
        Err(Error::Format(format!("{} is neither PNG nor SUAT", path.display())))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(format!("PNG decode: {e}")))?;
    match decoded {
        image::DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            let values = gray.into_raw().into_iter().map(|b| f32::from(b) / 255.0).collect();
            Image::from_vec(h as usize, w as usize, values)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "PNG color type {:?}; only 8-bit grayscale is accepted",
            other.color()
        ))),
    }
}

/// Quantizes `[0, 1]` to 8 bits; out-of-range values are clamped.
pub fn quantize_u8(v: f32) -> u8 {
    if v.is_finite() {
        (v.clamp(0.0, 1.0) * 255.0).round() as u8
    } else {
        0
    }
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let (h, w) = img.dims();
    let buf: Vec<u8> = img.values().map(quantize_u8).collect();
    let gray = image::GrayImage::from_raw(w as u32, h as u32, buf)
        .ok_or_else(|| Error::Shape("PNG buffer size".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    gray.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Format(format!("PNG encode: {e}")))?;
    Ok(out.into_inner())
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = match format {
        ImageFormat::Png => encode_png(img)?,
        ImageFormat::Raw => image_to_raw(img).to_bytes(),
    };
    write_file(path.as_ref(), &bytes)
}

pub fn save_field(field: &VectorField, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &field_to_raw(field).to_bytes())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<VectorField> {
    let bytes = read_file(path.as_ref())?;
    field_from_raw(&RawTensor::from_bytes(&bytes, ElementKind::F32)?)
}

pub fn save_mask(mask: &SegMask, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &mask_to_raw(mask).to_bytes())
}

pub fn load_mask(path: impl AsRef<Path>, classes: usize) -> Result<SegMask> {
    let bytes = read_file(path.as_ref())?;
    mask_from_raw(&RawTensor::from_bytes(&bytes, ElementKind::U16)?, classes)
}

/// Writes an ordered list of named f32 tensors.
pub fn write_archive(records: &[(String, RawTensor)], w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(ARCHIVE_MAGIC)?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (name, tensor) in records {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        tensor.write_to(w)?;
    }
    Ok(())
}

pub fn read_archive(bytes: &[u8]) -> Result<Vec<(String, RawTensor)>> {
    let mut r = bytes;
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != ARCHIVE_MAGIC {
        return Err(Error::Format("missing SUAA magic".into()));
    }
    let count = read_u32(&mut r)? as usize;
    let mut records = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        if len > r.len() {
            return Err(Error::Format("truncated record name".into()));
        }
        let (name, rest) = r.split_at(len);
        let name = String::from_utf8(name.to_vec())
            .map_err(|_| Error::Format("record name is not utf-8".into()))?;
        r = rest;
        records.push((name, RawTensor::read_from(&mut r, ElementKind::F32)?));
    }
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes after archive".into()));
    }
    Ok(records)
}

pub fn save_archive(records: &[(String, RawTensor)], path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_archive(records, &mut bytes).expect("writing to a Vec cannot fail");
    write_file(path.as_ref(), &bytes)
}

pub fn load_archive(path: impl AsRef<Path>) -> Result<Vec<(String, RawTensor)>> {
    read_archive(&read_file(path.as_ref())?)
}
