//! Keyframe reduction: a thumbnail-difference heuristic, or passthrough of a
//! keyframe listing produced by an external SLAM run.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::blur::FrameRecord;
use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyframePolicy {
    /// Mean absolute thumbnail difference (grey levels) a frame must exceed.
    pub similarity_threshold: f64,
    /// Minimum index distance from the last selected frame.
    pub min_gap: usize,
    pub thumb_width: usize,
    pub thumb_height: usize,
}

impl Default for KeyframePolicy {
    fn default() -> Self {
        Self {
            similarity_threshold: 8.0,
            min_gap: 5,
            thumb_width: 64,
            thumb_height: 32,
        }
    }
}

impl KeyframePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_gap < 1 {
            return Err(Error::Config("min_gap must be >= 1".into()));
        }
        if self.thumb_width < 8 || self.thumb_height < 4 {
            return Err(Error::Config("thumbnails must be at least 8x4".into()));
        }
        if !(0.0..=255.0).contains(&self.similarity_threshold) {
            return Err(Error::Config(
                "similarity_threshold must be within [0, 255]".into(),
            ));
        }
        Ok(())
    }

    pub fn thumbnail(&self, img: &GrayImage) -> Result<GrayImage> {
        imaging::resize_area(img, self.thumb_width, self.thumb_height)
    }
}

/// Mean absolute difference between two equally sized rasters.
pub fn mean_abs_diff(a: &GrayImage, b: &GrayImage) -> f64 {
    debug_assert_eq!((a.width(), a.height()), (b.width(), b.height()));
    let n = a.as_slice().len() as f64;
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / n
}

/// Sequential selector. Only the last selected thumbnail is retained.
#[derive(Debug)]
pub struct KeyframeSelector {
    policy: KeyframePolicy,
    last: Option<(usize, GrayImage)>,
}

impl KeyframeSelector {
    pub fn new(policy: KeyframePolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self { policy, last: None })
    }

    pub fn policy(&self) -> &KeyframePolicy {
        &self.policy
    }

    /// Offer the next frame (by index and thumbnail); returns whether it is
    /// selected. The first frame offered is always selected.
    pub fn offer(&mut self, index: usize, thumb: GrayImage) -> bool {
        let selected = match &self.last {
            None => true,
            Some((last_index, last_thumb)) => {
                index >= last_index + self.policy.min_gap
                    && mean_abs_diff(&thumb, last_thumb) > self.policy.similarity_threshold
            }
        };
        if selected {
            self.last = Some((index, thumb));
        }
        selected
    }
}

/// Select keyframes from an ordered frame sequence. Frames must carry
/// rasters; the output preserves order and always starts with frame 0.
pub fn select_keyframes(frames: &[FrameRecord], policy: &KeyframePolicy) -> Result<Vec<FrameRecord>> {
    if frames.is_empty() {
        return Err(Error::InvalidImage("no frames to select from".into()));
    }
    let mut selector = KeyframeSelector::new(*policy)?;
    let mut out = Vec::new();
    for frame in frames {
        let img = frame
            .image
            .as_ref()
            .ok_or_else(|| Error::InvalidImage(format!("frame {} carries no raster", frame.index)))?;
        if selector.offer(frame.index, policy.thumbnail(img)?) {
            out.push(frame.clone());
        }
    }
    Ok(out)
}

/// One entry of a keyframe listing file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ListingEntry {
    Index(usize),
    Filename(String),
}

/// Parsed listing: entries with their 1-based source line numbers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeyframeListing {
    pub entries: Vec<(usize, ListingEntry)>,
}

impl KeyframeListing {
    /// UTF-8 text, one frame index or filename per line. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    return None;
                }
                let entry = match line.parse::<usize>() {
                    Ok(idx) => ListingEntry::Index(idx),
                    Err(_) => ListingEntry::Filename(line.to_string()),
                };
                Some((i + 1, entry))
            })
            .collect();
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Resolve a listing against a frame sequence.
///
/// Numeric entries are frame indices, anything else a frame filename.
/// Resolved indices must be strictly ascending and present.
pub fn ingest_external_keyframes(
    listing: &KeyframeListing,
    frames: &[FrameRecord],
) -> Result<Vec<FrameRecord>> {
    if listing.is_empty() {
        log::warn!("keyframe listing is empty; selection is empty");
        return Ok(Vec::new());
    }
    let by_index: HashMap<usize, usize> = frames.iter().enumerate().map(|(pos, f)| (f.index, pos)).collect();
    let by_name: HashMap<&str, usize> = frames
        .iter()
        .enumerate()
        .map(|(pos, f)| (f.name.as_str(), pos))
        .collect();

    let mut out = Vec::with_capacity(listing.entries.len());
    let mut last: Option<usize> = None;
    for (line, entry) in &listing.entries {
        let pos = match entry {
            ListingEntry::Index(idx) => by_index.get(idx).copied().ok_or_else(|| Error::BadListing {
                line: *line,
                reason: format!("frame index {idx} out of range ({} frames)", frames.len()),
            })?,
            ListingEntry::Filename(name) => {
                by_name
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::BadListing {
                        line: *line,
                        reason: format!("unknown frame `{name}`"),
                    })?
            }
        };
        let index = frames[pos].index;
        if last.is_some_and(|l| index <= l) {
            return Err(Error::BadListing {
                line: *line,
                reason: format!("frame index {index} is not ascending"),
            });
        }
        last = Some(index);
        out.push(frames[pos].clone());
    }
    Ok(out)
}
