use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{format_err, Result};

/// Decoded portable float map, rows stored top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

fn next_token<R: BufRead>(reader: &mut R) -> Result<String> {
    let mut token = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        if reader.read(&mut byte)? == 0 {
            break;
        }
        let b = byte[0];
        if b.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(b);
    }
    if token.is_empty() {
        return Err(format_err("PFM", "truncated header"));
    }
    String::from_utf8(token).map_err(|_| format_err("PFM", "non-ASCII header"))
}

pub fn read<R: Read>(reader: R) -> Result<PfmImage> {
    let mut reader = BufReader::new(reader);
    let channels = match next_token(&mut reader)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(format_err("PFM", format!("unknown magic {other:?}"))),
    };
    let width: usize = next_token(&mut reader)?
        .parse()
        .map_err(|_| format_err("PFM", "bad width"))?;
    let height: usize = next_token(&mut reader)?
        .parse()
        .map_err(|_| format_err("PFM", "bad height"))?;
    let scale: f32 = next_token(&mut reader)?
        .parse()
        .map_err(|_| format_err("PFM", "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err("PFM", "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;

    let count = width * height * channels;
    let mut raw = vec![0u8; count * 4];
    reader
        .read_exact(&mut raw)
        .map_err(|_| format_err("PFM", "truncated pixel data"))?;

    let mut data = vec![0f32; count];
    let row_len = width * channels;
    // scanlines are stored bottom to top
    for (file_row, chunk) in raw.chunks_exact(row_len * 4).enumerate() {
        let y = height - 1 - file_row;
        for (i, bytes) in chunk.chunks_exact(4).enumerate() {
            let bytes = [bytes[0], bytes[1], bytes[2], bytes[3]];
            data[y * row_len + i] = if little_endian {
                f32::from_le_bytes(bytes)
            } else {
                f32::from_be_bytes(bytes)
            };
        }
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

/// Writes a little-endian PFM.
pub fn write<W: Write>(mut writer: W, image: &PfmImage) -> Result<()> {
    let magic = match image.channels {
        3 => "PF",
        1 => "Pf",
        n => return Err(format_err("PFM", format!("unsupported channel count {n}"))),
    };
    if image.data.len() != image.width * image.height * image.channels {
        return Err(format_err("PFM", "data length does not match dimensions"));
    }
    write!(writer, "{magic}\n{} {}\n-1.0\n", image.width, image.height)?;
    let row_len = image.width * image.channels;
    let mut buf = Vec::with_capacity(image.data.len() * 4);
    for y in (0..image.height).rev() {
        for v in &image.data[y * row_len..(y + 1) * row_len] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    writer.write_all(&buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<PfmImage> {
    read(std::fs::File::open(path)?)
}

pub fn save(path: impl AsRef<Path>, image: &PfmImage) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(file, image)
}
