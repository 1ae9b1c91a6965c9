//! Binary PGM (P5) images and frame-directory manifests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::synth::{FrameStream, Image, Mask, Seeds};

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII PGM header".into()))?);
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected P5 magic, found {:?}", fields[0])));
    }
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad {what} {s:?}")));
    let (w, h, maxval) = (parse(fields[1], "width")?, parse(fields[2], "height")?, parse(fields[3], "maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = w * h;
    if bytes.len() < pos + need {
        return Err(Error::Format(format!("raster has {} bytes, expected {need}", bytes.len().saturating_sub(pos))));
    }
    Image::new(w, h, bytes[pos..pos + need].to_vec())
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_pgm(path, &mask.to_image())
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    Ok(Mask::from_image(&read_pgm(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    /// `[pixel index, label]` pairs.
    pub seeds: Vec<(usize, u8)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamManifest {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frames: Vec<FrameEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFrame {
    pub image: Image,
    pub seeds: Seeds,
    pub truth: Option<Mask>,
}

/// Writes `frame_0000.pgm`, `truth_0000.pgm`, ... and the manifest into `dir`.
pub fn write_stream(dir: &Path, stream: &FrameStream) -> Result<StreamManifest> {
    fs::create_dir_all(dir)?;
    let mut frames = Vec::with_capacity(stream.len());
    for k in 0..stream.len() {
        let f = stream.frame(k)?;
        let image = format!("frame_{k:04}.pgm");
        let truth = format!("truth_{k:04}.pgm");
        write_pgm(&dir.join(&image), &f.image)?;
        write_mask(&dir.join(&truth), &f.truth)?;
        frames.push(FrameEntry {
            image,
            truth: Some(truth),
            seeds: f.seeds.positions.iter().copied().zip(f.seeds.labels.iter().copied()).collect(),
        });
    }
    let manifest = StreamManifest {
        width: stream.spec.width,
        height: stream.spec.height,
        fps: stream.fps,
        frames,
    };
    fs::write(dir.join(MANIFEST_NAME), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn read_stream(dir: &Path) -> Result<(StreamManifest, Vec<LoadedFrame>)> {
    let manifest: StreamManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        let image = read_pgm(&dir.join(&entry.image))?;
        if (image.width, image.height) != (manifest.width, manifest.height) {
            return Err(Error::ShapeMismatch(format!(
                "{} is {}x{}, manifest says {}x{}",
                entry.image, image.width, image.height, manifest.width, manifest.height
            )));
        }
        let truth = entry.truth.as_ref().map(|t| read_mask(&dir.join(t))).transpose()?;
        let seeds = Seeds {
            positions: entry.seeds.iter().map(|s| s.0).collect(),
            labels: entry.seeds.iter().map(|s| s.1).collect(),
        };
        frames.push(LoadedFrame { image, seeds, truth });
    }
    Ok((manifest, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::synth::{synth_stream, Motion, SynthSpec};

    #[test]
    fn roundtrip_with_comments() {
        let img = Image::new(3, 2, vec![0, 10, 20, 30, 255, 128]).unwrap();
        assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        let mut raw = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        raw.extend_from_slice(&img.data);
        assert_eq!(decode_pgm(&raw).unwrap(), img);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn stream_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let s = synth_stream(&SynthSpec::disk(8, 8, 2), 3, Motion { dx: 0.3, dy: 0.0, dtheta: 0.0 }, 60.0, 4).unwrap();
        let m = write_stream(dir.path(), &s).unwrap();
        let (back, frames) = read_stream(dir.path()).unwrap();
        assert_eq!(back, m);
        for (k, f) in frames.iter().enumerate() {
            let want = s.frame(k).unwrap();
            assert_eq!(f.image, want.image);
            assert_eq!(f.seeds, want.seeds);
            assert_eq!(f.truth.as_ref(), Some(&want.truth));
        }
    }
}
