use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{format_err, Result};
use crate::frame::LdrFrame;

fn next_token<R: BufRead>(reader: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        if reader.read(&mut byte)? == 0 {
            break;
        }
        let b = byte[0];
        if in_comment {
            in_comment = b != b'\n';
            continue;
        }
        if b == b'#' && token.is_empty() {
            in_comment = true;
            continue;
        }
        if b.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(b);
    }
    if token.is_empty() {
        return Err(format_err("PPM", "truncated header"));
    }
    String::from_utf8(token).map_err(|_| format_err("PPM", "non-ASCII header"))
}

/// Reads a binary (P6) 8-bit pixmap.
pub fn read<R: Read>(reader: R) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let mut reader = BufReader::new(reader);
    let magic = next_token(&mut reader)?;
    if magic != "P6" {
        return Err(format_err("PPM", format!("unsupported magic {magic:?}")));
    }
    let mut dims = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        dims[i] = next_token(&mut reader)?
            .parse()
            .map_err(|_| format_err("PPM", format!("bad {name}")))?;
    }
    let [width, height, maxval] = dims;
    if maxval != 255 {
        return Err(format_err("PPM", format!("only maxval 255 is supported, got {maxval}")));
    }
    let mut raw = vec![0u8; width * height * 3];
    reader
        .read_exact(&mut raw)
        .map_err(|_| format_err("PPM", "truncated pixel data"))?;
    let pixels = raw.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    Ok((width, height, pixels))
}

pub fn write<W: Write>(mut writer: W, width: usize, height: usize, pixels: &[[u8; 3]]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(format_err("PPM", "pixel count does not match dimensions"));
    }
    write!(writer, "P6\n{width} {height}\n255\n")?;
    let raw: Vec<u8> = pixels.iter().flatten().copied().collect();
    writer.write_all(&raw)?;
    Ok(())
}

/// Sidecar path holding the `t=<seconds>` line of a frame dump.
pub fn sidecar_path(ppm: &Path) -> PathBuf {
    ppm.with_extension("txt")
}

/// Writes `frame` as `path` (PPM) plus the exposure sidecar next to it.
pub fn save_frame(path: impl AsRef<Path>, frame: &LdrFrame) -> Result<()> {
    let path = path.as_ref();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(file, frame.width(), frame.height(), frame.pixels())?;
    std::fs::write(sidecar_path(path), format!("t={}\n", frame.exposure()))?;
    Ok(())
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<LdrFrame> {
    let path = path.as_ref();
    let (width, height, pixels) = read(std::fs::File::open(path)?)?;
    let sidecar = std::fs::read_to_string(sidecar_path(path))?;
    let t = sidecar
        .lines()
        .find_map(|l| l.trim().strip_prefix("t="))
        .ok_or_else(|| format_err("frame sidecar", "missing t=<seconds> line"))?
        .trim()
        .parse::<f64>()
        .map_err(|_| format_err("frame sidecar", "bad exposure time"))?;
    LdrFrame::new(width, height, t, pixels)
}

/// Loads every `*.ppm` frame in `dir`, sorted by file name.
pub fn load_frame_dir(dir: impl AsRef<Path>) -> Result<Vec<LdrFrame>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
        .collect();
    paths.sort();
    paths.iter().map(load_frame).collect()
}
