//! Sequences and the OTB directory format: `img/` with one image per frame
//! (sorted by file name) and `groundtruth_rect.txt` with one `x,y,w,h` line
//! per frame in 1-based pixel coordinates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::image::GrayImage;
use crate::trackers::BoundingBox;

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const IMAGE_DIR: &str = "img";

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceSource {
    Directory(PathBuf),
    Synthetic(String),
}

#[derive(Clone, Debug)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<GrayImage>,
    pub ground_truth: Vec<BoundingBox>,
    pub source: SequenceSource,
}

impl Sequence {
    pub fn new(
        name: impl Into<String>,
        frames: Vec<GrayImage>,
        ground_truth: Vec<BoundingBox>,
        source: SequenceSource,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::arg(format!("a sequence needs at least 2 frames, got {}", frames.len())));
        }
        if frames.len() != ground_truth.len() {
            return Err(Error::arg(format!(
                "{} frames but {} ground-truth boxes",
                frames.len(),
                ground_truth.len()
            )));
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        if frames.iter().any(|f| f.width() != w || f.height() != h) {
            return Err(Error::arg("all frames of a sequence must have the same size"));
        }
        Ok(Self {
            name: name.into(),
            frames,
            ground_truth,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "jpg" | "jpeg" | "bmp" | "pgm" | "ppm" | "pnm")
    )
}

/// Parses one ground-truth line: comma, tab or whitespace separated, 1-based.
pub fn parse_ground_truth_line(line: &str) -> Option<BoundingBox> {
    let vals: Vec<f64> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    if vals.len() != 4 {
        return None;
    }
    BoundingBox::new(vals[0] - 1.0, vals[1] - 1.0, vals[2], vals[3]).ok()
}

pub fn load_otb_sequence(dir: &Path) -> Result<Sequence> {
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::ingest(&gt_path, e.to_string()))?;
    let mut ground_truth = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let b = parse_ground_truth_line(line)
            .ok_or_else(|| Error::ingest(&gt_path, format!("line {}: cannot parse box '{}'", n + 1, line.trim())))?;
        ground_truth.push(b);
    }

    let img_dir = dir.join(IMAGE_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&img_dir)
        .map_err(|e| Error::ingest(&img_dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_image(p))
        .collect();
    paths.sort();
    if paths.len() != ground_truth.len() {
        return Err(Error::ingest(
            dir,
            format!("{} images but {} ground-truth lines", paths.len(), ground_truth.len()),
        ));
    }
    let frames = paths.iter().map(|p| GrayImage::load(p)).collect::<Result<Vec<_>>>()?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    Sequence::new(name, frames, ground_truth, SequenceSource::Directory(dir.to_path_buf()))
        .map_err(|e| Error::ingest(dir, e.to_string()))
}

/// Ground-truth file contents; values use the shortest exact decimal form.
pub fn format_ground_truth(boxes: &[BoundingBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        let _ = writeln!(out, "{},{},{},{}", b.x + 1.0, b.y + 1.0, b.width, b.height);
    }
    out
}

/// Writes `seq` as an OTB directory with 8-bit PNG frames `0001.png, …`.
pub fn write_otb_sequence(seq: &Sequence, dir: &Path) -> Result<()> {
    let img_dir = dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let digits = seq.len().to_string().len().max(4);
    for (i, frame) in seq.frames.iter().enumerate() {
        frame.save_png(&img_dir.join(format!("{:0digits$}.png", i + 1)))?;
    }
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    fs::write(&gt_path, format_ground_truth(&seq.ground_truth)).map_err(|e| Error::io(&gt_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_origin_and_separators() {
        let b = parse_ground_truth_line("1,1,10,10").unwrap();
        assert_eq!((b.x, b.y, b.width, b.height), (0.0, 0.0, 10.0, 10.0));
        assert_eq!(parse_ground_truth_line("5\t6\t7\t8"), parse_ground_truth_line("5,6,7,8"));
        assert_eq!(parse_ground_truth_line("5 6  7 8"), parse_ground_truth_line("5,6,7,8"));
        assert!(parse_ground_truth_line("1,2,3").is_none());
        assert!(parse_ground_truth_line("1,2,0,4").is_none());
    }

    #[test]
    fn sequence_invariants() {
        let f = GrayImage::filled(8, 8, 0.0).unwrap();
        let b = BoundingBox::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let src = SequenceSource::Synthetic("t".into());
        assert!(Sequence::new("a", vec![f.clone()], vec![b], src.clone()).is_err());
        assert!(Sequence::new("a", vec![f.clone(), f.clone()], vec![b], src.clone()).is_err());
        assert!(Sequence::new("a", vec![f.clone(), f], vec![b, b], src).is_ok());
    }
}
