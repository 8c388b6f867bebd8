use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use super::{Raster, RasterError, Result};

/// Reads an 8-bit grayscale or RGB PNG. Samples become `byte / 255`.
pub fn load_png(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(BufReader::new(file), &path.display().to_string())
}

/// Decodes PNG bytes already in memory.
pub fn decode_png(bytes: &[u8]) -> Result<Raster> {
    decode(Cursor::new(bytes), "<memory>")
}

fn decode<R: std::io::BufRead + std::io::Seek>(reader: R, name: &str) -> Result<Raster> {
    let codec = |message: String| RasterError::Codec {
        path: name.to_string(),
        message,
    };
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| codec(e.to_string()))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(codec(format!("unsupported bit depth {:?}", info.bit_depth)));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(codec(format!("unsupported color type {other:?}"))),
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| codec("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| codec(e.to_string()))?;
    let row = width * channels;
    let mut bytes = Vec::with_capacity(row * height);
    for line in buf[..frame.buffer_size()].chunks(frame.line_size).take(height) {
        bytes.extend_from_slice(&line[..row]);
    }
    Raster::from_bytes(width, height, channels, &bytes)
}

/// Encodes to 8-bit PNG bytes (grayscale or RGB matching the raster).
pub fn encode_png(img: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(if img.channels() == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| RasterError::Encode(e.to_string()))?;
        writer
            .write_image_data(&img.to_bytes())
            .map_err(|e| RasterError::Encode(e.to_string()))?;
    }
    Ok(out)
}

pub fn save_png(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Binary PPM (P6) dump. Grayscale rasters are replicated into RGB.
pub fn save_ppm(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| RasterError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height()).map_err(io_err)?;
    let bytes = img.to_bytes();
    if img.channels() == 3 {
        w.write_all(&bytes).map_err(io_err)?;
    } else {
        let rgb: Vec<u8> = bytes.iter().flat_map(|&b| [b, b, b]).collect();
        w.write_all(&rgb).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
