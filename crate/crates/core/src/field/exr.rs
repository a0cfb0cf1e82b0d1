//! Minimal OpenEXR 2 codec: single-part scanline files, channels A/B/G/R,
//! 32-bit float samples, no compression.

use std::path::Path;

use super::{FieldError, FieldTexture};

const MAGIC: [u8; 4] = [0x76, 0x2f, 0x31, 0x01];
const VERSION: u32 = 2;
const FLAG_TILED: u32 = 0x200;
const FLAG_DEEP: u32 = 0x800;
const FLAG_MULTIPART: u32 = 0x1000;
const PIXEL_FLOAT: i32 = 2;
const COMPRESSION_NONE: u8 = 0;
/// Channels in on-disk (alphabetical) order.
const CHANNELS: [&str; 4] = ["A", "B", "G", "R"];

fn format(msg: impl Into<String>) -> FieldError {
    FieldError::Format(msg.into())
}

fn attribute(out: &mut Vec<u8>, name: &str, kind: &str, value: &[u8]) {
    out.extend_from_slice(name.as_bytes());
    out.push(0);
    out.extend_from_slice(kind.as_bytes());
    out.push(0);
    out.extend_from_slice(&(value.len() as i32).to_le_bytes());
    out.extend_from_slice(value);
}

fn box2i(w: usize, h: usize) -> Vec<u8> {
    [0i32, 0, w as i32 - 1, h as i32 - 1].iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Serializes a texture. Row `j` of the texture is scanline `y = j`.
pub fn encode_exr(tex: &FieldTexture) -> Result<Vec<u8>, FieldError> {
    let (w, h) = (tex.width, tex.height);
    if w == 0 || h == 0 || w > i32::MAX as usize || h > i32::MAX as usize {
        return Err(FieldError::InvalidArgument(format!("cannot encode a {w}x{h} texture")));
    }
    if !tex.is_finite() {
        return Err(FieldError::NonFinite);
    }

    let mut out = Vec::with_capacity(512 + w * h * 16 + h * 16);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let mut chlist = Vec::new();
    for name in CHANNELS {
        chlist.extend_from_slice(name.as_bytes());
        chlist.push(0);
        chlist.extend_from_slice(&PIXEL_FLOAT.to_le_bytes());
        chlist.extend_from_slice(&[0, 0, 0, 0]);
        chlist.extend_from_slice(&1i32.to_le_bytes());
        chlist.extend_from_slice(&1i32.to_le_bytes());
    }
    chlist.push(0);
    attribute(&mut out, "channels", "chlist", &chlist);
    attribute(&mut out, "compression", "compression", &[COMPRESSION_NONE]);
    attribute(&mut out, "dataWindow", "box2i", &box2i(w, h));
    attribute(&mut out, "displayWindow", "box2i", &box2i(w, h));
    attribute(&mut out, "lineOrder", "lineOrder", &[0]);
    attribute(&mut out, "pixelAspectRatio", "float", &1.0f32.to_le_bytes());
    attribute(&mut out, "screenWindowCenter", "v2f", &[0u8; 8]);
    attribute(&mut out, "screenWindowWidth", "float", &1.0f32.to_le_bytes());
    out.push(0);

    let chunk_size = 8 + 16 * w;
    let table_end = out.len() + 8 * h;
    for y in 0..h {
        out.extend_from_slice(&((table_end + y * chunk_size) as u64).to_le_bytes());
    }
    for y in 0..h {
        out.extend_from_slice(&(y as i32).to_le_bytes());
        out.extend_from_slice(&((16 * w) as i32).to_le_bytes());
        let row = y * w..(y + 1) * w;
        for plane in [&tex.a, &tex.b, &tex.g, &tex.r] {
            for v in &plane[row.clone()] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FieldError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| format("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn i32(&mut self) -> Result<i32, FieldError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FieldError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn cstr(&mut self) -> Result<&'a str, FieldError> {
        let rest = &self.buf[self.pos..];
        let len = rest.iter().position(|&b| b == 0).ok_or_else(|| format("unterminated string"))?;
        let s = std::str::from_utf8(&rest[..len]).map_err(|_| format("non-UTF-8 name"))?;
        self.pos += len + 1;
        Ok(s)
    }
}

#[derive(Debug)]
struct Channel {
    name: String,
    pixel_type: i32,
    sampling: (i32, i32),
}

fn parse_chlist(v: &[u8]) -> Result<Vec<Channel>, FieldError> {
    let mut r = Reader { buf: v, pos: 0 };
    let mut out = Vec::new();
    loop {
        let name = r.cstr()?;
        if name.is_empty() {
            return Ok(out);
        }
        let pixel_type = r.i32()?;
        r.take(4)?;
        let sampling = (r.i32()?, r.i32()?);
        out.push(Channel { name: name.to_owned(), pixel_type, sampling });
    }
}

/// Parses the subset of OpenEXR produced by [`encode_exr`].
pub fn decode_exr(bytes: &[u8]) -> Result<FieldTexture, FieldError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(format("not an OpenEXR file"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version & 0xff != VERSION {
        return Err(format(format!("unsupported version {}", version & 0xff)));
    }
    if version & FLAG_TILED != 0 {
        return Err(format("tiled images are not supported"));
    }
    if version & (FLAG_DEEP | FLAG_MULTIPART) != 0 {
        return Err(format("multi-part and deep images are not supported"));
    }

    let mut channels = None;
    let mut compression = None;
    let mut window = None;
    let mut line_order = 0u8;
    loop {
        let name = r.cstr()?;
        if name.is_empty() {
            break;
        }
        let _kind = r.cstr()?;
        let size = r.i32()?;
        let value = r.take(usize::try_from(size).map_err(|_| format("negative attribute size"))?)?;
        match name {
            "channels" => channels = Some(parse_chlist(value)?),
            "compression" => compression = value.first().copied(),
            "dataWindow" => {
                if value.len() != 16 {
                    return Err(format("bad dataWindow"));
                }
                let v: Vec<i32> = value.chunks(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect();
                window = Some((v[0], v[1], v[2], v[3]));
            }
            "lineOrder" => line_order = value.first().copied().unwrap_or(0),
            _ => {}
        }
    }

    let channels = channels.ok_or_else(|| format("missing channels attribute"))?;
    match compression {
        Some(COMPRESSION_NONE) => {}
        Some(c) => return Err(format(format!("unsupported compression {c}"))),
        None => return Err(format("missing compression attribute")),
    }
    if line_order > 1 {
        return Err(format("random line order is not supported"));
    }
    for name in CHANNELS {
        if !channels.iter().any(|c| c.name == name) {
            return Err(format(format!("missing channel {name}")));
        }
    }
    if let Some(c) = channels.iter().find(|c| c.pixel_type != PIXEL_FLOAT) {
        return Err(format(format!("channel {} has pixel type {}, expected FLOAT", c.name, c.pixel_type)));
    }
    if channels.len() != CHANNELS.len() {
        return Err(format("unexpected extra channels"));
    }
    if channels.iter().any(|c| c.sampling != (1, 1)) {
        return Err(format("subsampled channels are not supported"));
    }
    let mut sorted: Vec<&str> = channels.iter().map(|c| c.name.as_str()).collect();
    sorted.sort_unstable();
    if sorted != CHANNELS {
        return Err(format("channel list is not A, B, G, R"));
    }

    let (x0, y0, x1, y1) = window.ok_or_else(|| format("missing dataWindow"))?;
    if x1 < x0 || y1 < y0 {
        return Err(format("empty dataWindow"));
    }
    let w = (x1 as i64 - x0 as i64 + 1) as usize;
    let h = (y1 as i64 - y0 as i64 + 1) as usize;
    if w.checked_mul(h).and_then(|n| n.checked_mul(16)).is_none_or(|n| n > bytes.len()) {
        return Err(format("dataWindow larger than file"));
    }

    let offsets = (0..h).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    let mut tex = FieldTexture::zeros(w, h);
    let mut seen = vec![false; h];
    for off in offsets {
        let mut c = Reader { buf: bytes, pos: usize::try_from(off).map_err(|_| format("bad offset"))? };
        let y = c.i32()? as i64 - y0 as i64;
        let size = c.i32()?;
        if !(0..h as i64).contains(&y) || size as i64 != 16 * w as i64 {
            return Err(format("bad scanline chunk"));
        }
        let y = y as usize;
        if std::mem::replace(&mut seen[y], true) {
            return Err(format("duplicate scanline"));
        }
        let data = c.take(16 * w)?;
        let planes = [&mut tex.a, &mut tex.b, &mut tex.g, &mut tex.r];
        for (k, plane) in planes.into_iter().enumerate() {
            let src = &data[k * 4 * w..(k + 1) * 4 * w];
            for (dst, bytes) in plane[y * w..(y + 1) * w].iter_mut().zip(src.chunks_exact(4)) {
                *dst = f32::from_le_bytes(bytes.try_into().unwrap());
            }
        }
    }
    Ok(tex)
}

pub fn write_exr(tex: &FieldTexture, path: impl AsRef<Path>) -> Result<(), FieldError> {
    std::fs::write(path, encode_exr(tex)?)?;
    Ok(())
}

pub fn read_exr(path: impl AsRef<Path>) -> Result<FieldTexture, FieldError> {
    decode_exr(&std::fs::read(path)?)
}
