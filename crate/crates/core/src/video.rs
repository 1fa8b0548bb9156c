//! Grayscale frame sequences, their observation matrices, and foreground
//! masks. Frames are stored row-major with values in `[0, 1]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::{DenseMatrix, LowRankFactorization};

/// Default binarization threshold, `25 / 255`.
pub const DEFAULT_THRESHOLD: f64 = 25.0 / 255.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameFormat {
    /// Directory of binary PGM (P5) files, one per frame.
    PgmDir,
    /// Frame-major 8-bit planes with a `<file>.meta` key=value sidecar.
    RawPlanar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cleanup {
    None,
    /// 3x3 majority filter with replicated edges.
    Median3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    frames: Vec<Vec<f64>>,
    source_ids: Vec<String>,
}

impl FrameSequence {
    /// Checks that there are at least two frames, all `width x height` with
    /// finite values.
    pub fn new(width: usize, height: usize, frames: Vec<Vec<f64>>, source_ids: Vec<String>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("frames have zero area".into()));
        }
        if frames.len() < 2 {
            return Err(Error::Empty(format!("need at least 2 frames, got {}", frames.len())));
        }
        if source_ids.len() != frames.len() {
            return Err(Error::InvalidConfig("one source id per frame is required".into()));
        }
        for (frame, id) in frames.iter().zip(&source_ids) {
            if frame.len() != width * height {
                return Err(Error::FrameSize {
                    id: id.clone(),
                    width,
                    height,
                    found_width: frame.len(),
                    found_height: 1,
                });
            }
            if frame.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("frame {id} has non-finite pixels")));
            }
        }
        Ok(FrameSequence {
            width,
            height,
            frames,
            source_ids,
        })
    }

    /// Frames named by their index.
    pub fn indexed(width: usize, height: usize, frames: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..frames.len()).map(|i| i.to_string()).collect();
        Self::new(width, height, frames, ids)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    pub fn source_ids(&self) -> &[String] {
        &self.source_ids
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskSequence {
    width: usize,
    height: usize,
    masks: Vec<Vec<bool>>,
}

impl MaskSequence {
    pub fn new(width: usize, height: usize, masks: Vec<Vec<bool>>) -> Result<Self> {
        if let Some((k, m)) = masks.iter().enumerate().find(|(_, m)| m.len() != width * height) {
            return Err(Error::FrameSize {
                id: k.to_string(),
                width,
                height,
                found_width: m.len(),
                found_height: 1,
            });
        }
        Ok(MaskSequence { width, height, masks })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn mask(&self, k: usize) -> &[bool] {
        &self.masks[k]
    }

    /// `true` where both masks are `true`, frame by frame.
    pub fn is_subset_of(&self, other: &MaskSequence) -> bool {
        self.masks
            .iter()
            .zip(&other.masks)
            .all(|(a, b)| a.iter().zip(b).all(|(&x, &y)| !x || y))
    }

    /// Masks as 0/1 frames.
    pub fn to_frames(&self) -> Result<FrameSequence> {
        let frames = self
            .masks
            .iter()
            .map(|m| m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .collect();
        FrameSequence::indexed(self.width, self.height, frames)
    }
}

/// `n1 x n2` matrix with frame `j`, vectorized row-major, as column `j`.
pub fn to_observation_matrix(seq: &FrameSequence) -> DenseMatrix {
    let n2 = seq.len();
    DenseMatrix::from_fn(seq.width * seq.height, n2, |i, j| seq.frames[j][i])
}

/// Inverse of [`to_observation_matrix`]; frames are named by index.
pub fn from_observation_matrix(m: &DenseMatrix, width: usize, height: usize) -> Result<FrameSequence> {
    if m.rows() != width * height {
        return Err(Error::DimensionMismatch {
            expected: (width * height, m.cols()),
            found: m.shape(),
        });
    }
    let frames = (0..m.cols()).map(|j| m.column(j)).collect();
    FrameSequence::indexed(width, height, frames)
}

/// Background frames `B` reshaped to `width x height`.
pub fn background_frames(b: &LowRankFactorization, width: usize, height: usize) -> Result<FrameSequence> {
    if b.rows() != width * height {
        return Err(Error::DimensionMismatch {
            expected: (width * height, b.cols()),
            found: (b.rows(), b.cols()),
        });
    }
    let frames = (0..b.cols()).map(|j| b.column(j)).collect();
    FrameSequence::indexed(width, height, frames)
}

/// Foreground masks `|V - B| >= threshold`, optionally cleaned per frame.
/// Columns of `B` are formed one at a time.
pub fn extract_foreground(
    v: &DenseMatrix,
    b: &LowRankFactorization,
    width: usize,
    height: usize,
    threshold: f64,
    cleanup: Cleanup,
) -> Result<MaskSequence> {
    if (b.rows(), b.cols()) != v.shape() {
        return Err(Error::DimensionMismatch {
            expected: v.shape(),
            found: (b.rows(), b.cols()),
        });
    }
    if v.rows() != width * height {
        return Err(Error::DimensionMismatch {
            expected: (width * height, v.cols()),
            found: v.shape(),
        });
    }
    let masks = (0..v.cols())
        .map(|j| {
            let bj = b.column(j);
            let raw: Vec<bool> = bj
                .iter()
                .enumerate()
                .map(|(i, &x)| (v.get(i, j) - x).abs() >= threshold)
                .collect();
            match cleanup {
                Cleanup::None => raw,
                Cleanup::Median3 => median3(&raw, width, height),
            }
        })
        .collect();
    MaskSequence::new(width, height, masks)
}

/// Binary 3x3 median: a pixel is set when at least 5 of its 9 neighbors
/// (edges replicated) are set.
pub fn median3(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, width as isize - 1) as usize;
        let y = y.clamp(0, height as isize - 1) as usize;
        mask[y * width + x]
    };
    let mut out = vec![false; mask.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut count = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    count += at(x + dx, y + dy) as usize;
                }
            }
            out[y as usize * width + x as usize] = count >= 5;
        }
    }
    out
}

/// 8-bit quantization used by every writer.
pub fn to_byte(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes one P5 image.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a P5 image with maxval 255. Header fields may be separated by
/// any whitespace and `#` comments.
pub fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let fail = |msg: &str| Error::format(path, msg);
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(b"P6") | Some(b"P3") => {
            return Err(fail(
                "color image; convert to grayscale first (luma = 0.299 R + 0.587 G + 0.114 B)",
            ))
        }
        _ => return Err(fail("not a binary PGM (missing P5 magic)")),
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let begin = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[begin..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail("malformed header"))?;
    }
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(fail("malformed header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(fail("only 8-bit PGM with maxval 255 is supported"));
    }
    let payload = &bytes[pos..];
    if payload.len() < width * height {
        return Err(fail("truncated pixel data"));
    }
    Ok((width, height, payload[..width * height].to_vec()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a sequence. `path` is a directory for [`FrameFormat::PgmDir`]
/// (files read in lexicographic order) and the data file for
/// [`FrameFormat::RawPlanar`].
pub fn ingest(path: &Path, format: FrameFormat) -> Result<FrameSequence> {
    match format {
        FrameFormat::PgmDir => ingest_pgm_dir(path),
        FrameFormat::RawPlanar => ingest_raw_planar(path),
    }
}

fn ingest_pgm_dir(dir: &Path) -> Result<FrameSequence> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        match p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => files.push(p),
            Some("ppm") | Some("png") | Some("jpg") | Some("jpeg") => {
                return Err(Error::format(
                    &p,
                    "only grayscale P5 PGM frames are read; convert first (luma = 0.299 R + 0.587 G + 0.114 B)",
                ))
            }
            _ => {}
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no .pgm frames in {}", dir.display())));
    }
    let mut size = None;
    let mut frames = Vec::with_capacity(files.len());
    let mut ids = Vec::with_capacity(files.len());
    for p in &files {
        let (w, h, pixels) = decode_pgm(p, &read(p)?)?;
        let id = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (width, height) = *size.get_or_insert((w, h));
        if (w, h) != (width, height) {
            return Err(Error::FrameSize {
                id,
                width,
                height,
                found_width: w,
                found_height: h,
            });
        }
        frames.push(pixels.iter().map(|&b| b as f64 / 255.0).collect());
        ids.push(id);
    }
    let (width, height) = size.expect("at least one frame");
    FrameSequence::new(width, height, frames, ids)
}

/// Sidecar path of a raw-planar file: `<file>.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn ingest_raw_planar(path: &Path) -> Result<FrameSequence> {
    let meta_path = sidecar_path(path);
    let meta = String::from_utf8(read(&meta_path)?).map_err(|_| Error::format(&meta_path, "sidecar is not UTF-8"))?;
    let (mut width, mut height, mut count, mut channels) = (None, None, None, 1usize);
    for (n, line) in meta.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(&meta_path, format!("line {}: expected key=value", n + 1)))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::format(&meta_path, format!("line {}: not a count", n + 1)))?;
        match key.trim() {
            "width" => width = Some(value),
            "height" => height = Some(value),
            "frameCount" | "frame_count" | "frames" => count = Some(value),
            "channels" => channels = value,
            other => return Err(Error::format(&meta_path, format!("unknown key {other}"))),
        }
    }
    let missing = |k: &str| Error::format(&meta_path, format!("missing {k}"));
    let width = width.ok_or_else(|| missing("width"))?;
    let height = height.ok_or_else(|| missing("height"))?;
    let count = count.ok_or_else(|| missing("frameCount"))?;
    if channels != 1 {
        return Err(Error::format(
            &meta_path,
            "color planes are not supported; convert to grayscale first (luma = 0.299 R + 0.587 G + 0.114 B)",
        ));
    }
    let bytes = read(path)?;
    let n = width * height;
    if bytes.len() != n * count {
        return Err(Error::format(
            path,
            format!("expected {} bytes for {count} frames of {width}x{height}, found {}", n * count, bytes.len()),
        ));
    }
    let frames = bytes.chunks(n.max(1)).map(|c| c.iter().map(|&b| b as f64 / 255.0).collect()).collect();
    FrameSequence::indexed(width, height, frames)
}

/// Writes every frame as 8-bit data: `{:06}.pgm` files in directory `path`,
/// or a planar file `path` with its sidecar.
pub fn emit_frames(seq: &FrameSequence, path: &Path, format: FrameFormat) -> Result<()> {
    let planes: Vec<Vec<u8>> = seq.frames.iter().map(|f| f.iter().map(|&x| to_byte(x)).collect()).collect();
    emit_planes(&planes, seq.width, seq.height, path, format)
}

/// Writes masks as 0/255 images.
pub fn emit_masks(masks: &MaskSequence, path: &Path, format: FrameFormat) -> Result<()> {
    let planes: Vec<Vec<u8>> = masks
        .masks
        .iter()
        .map(|m| m.iter().map(|&b| if b { 255 } else { 0 }).collect())
        .collect();
    emit_planes(&planes, masks.width, masks.height, path, format)
}

fn emit_planes(planes: &[Vec<u8>], width: usize, height: usize, path: &Path, format: FrameFormat) -> Result<()> {
    match format {
        FrameFormat::PgmDir => {
            fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
            for (k, plane) in planes.iter().enumerate() {
                write(&path.join(format!("{k:06}.pgm")), &encode_pgm(width, height, plane))?;
            }
        }
        FrameFormat::RawPlanar => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            write(path, &planes.concat())?;
            let meta = format!("width={width}\nheight={height}\nframeCount={}\n", planes.len());
            write(&sidecar_path(path), meta.as_bytes())?;
        }
    }
    Ok(())
}

/// Reads a directory of 0/255 PGM masks; any nonzero pixel is foreground.
pub fn ingest_masks(dir: &Path) -> Result<MaskSequence> {
    let seq = ingest_pgm_dir(dir)?;
    let masks = seq.frames.iter().map(|f| f.iter().map(|&x| x > 0.0).collect()).collect();
    MaskSequence::new(seq.width, seq.height, masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_bytes_for_masks() {
        let full = MaskSequence::new(2, 2, vec![vec![true; 4]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_masks(&full, dir.path(), FrameFormat::PgmDir).unwrap();
        let bytes = fs::read(dir.path().join("000000.pgm")).unwrap();
        assert_eq!(bytes, b"P5\n2 2\n255\n\xff\xff\xff\xff");

        let empty = MaskSequence::new(2, 2, vec![vec![false; 4]]).unwrap();
        assert_eq!(
            encode_pgm(2, 2, &[0; 4]),
            b"P5\n2 2\n255\n\x00\x00\x00\x00".to_vec()
        );
        emit_masks(&empty, dir.path(), FrameFormat::PgmDir).unwrap();
        assert_eq!(fs::read(dir.path().join("000000.pgm")).unwrap()[11..], [0u8; 4]);
    }

    #[test]
    fn decode_tolerates_comments() {
        let bytes = b"P5 # comment\n3  1\n# another\n255\n\x01\x02\x03";
        let (w, h, px) = decode_pgm(Path::new("x.pgm"), bytes).unwrap();
        assert_eq!((w, h, px), (3, 1, vec![1, 2, 3]));
        assert!(decode_pgm(Path::new("x.pgm"), b"P6\n1 1\n255\n\x00\x00\x00").is_err());
        assert!(decode_pgm(Path::new("x.pgm"), b"P5\n1 1\n65535\n\x00\x00").is_err());
    }

    #[test]
    fn observation_matrix_shape() {
        let seq = FrameSequence::indexed(2, 2, vec![vec![0.0, 0.1, 0.2, 0.3], vec![1.0; 4]]).unwrap();
        let m = to_observation_matrix(&seq);
        assert_eq!(m.shape(), (4, 2));
        assert_eq!(m.get(2, 0), 0.2);
        assert_eq!(from_observation_matrix(&m, 2, 2).unwrap(), seq);
    }

    #[test]
    fn single_pixel_foreground() {
        let mut v = DenseMatrix::from_fn(9, 2, |_, _| 0.5);
        let b = LowRankFactorization::from_dense(&v, 1e-12);
        v.set(4, 1, 1.0);
        let masks = extract_foreground(&v, &b, 3, 3, 0.1, Cleanup::None).unwrap();
        assert!(masks.mask(0).iter().all(|&x| !x));
        let on: Vec<usize> = (0..9).filter(|&i| masks.mask(1)[i]).collect();
        assert_eq!(on, vec![4]);
        // an isolated pixel is removed by the majority filter
        let cleaned = extract_foreground(&v, &b, 3, 3, 0.1, Cleanup::Median3).unwrap();
        assert!(cleaned.mask(1).iter().all(|&x| !x));
    }

    #[test]
    fn too_few_frames() {
        assert!(matches!(FrameSequence::indexed(1, 1, vec![vec![0.0]]), Err(Error::Empty(_))));
    }
}
