//! End-to-end commands behind the `triage` binary.
//!
//! Each command streams its input where it can, never deletes source
//! frames, and refuses to overwrite existing outputs unless forced. Data
//! files contain no timestamps, so identical inputs give identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::blur::{read_scores, FrameRecord, ScoreRow, ScoreWriter, ThresholdStream, Thresholded};
use crate::error::Error;
use crate::imaging::{self, GrayImage};
use crate::keyframe::{ingest_external_keyframes, KeyframeListing, KeyframePolicy, KeyframeSelector};
use crate::sfm::{self, ParseOptions, Reconstruction};
use crate::tour::{self, TourOptions};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    InvalidInput = 2,
    DecodeFailure = 3,
    Inconsistent = 4,
    Refused = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CommandError {
    pub status: ExitStatus,
    pub message: String,
}

impl CommandError {
    pub fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_) => ExitStatus::Failure,
            Error::Decode { .. } => ExitStatus::DecodeFailure,
            _ => ExitStatus::InvalidInput,
        };
        Self::new(status, e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

/// Frame file names in natural order, packed into one buffer so a long
/// capture costs a few bytes per frame rather than an allocation each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameNames {
    buf: String,
    ends: Vec<u32>,
}

impl FrameNames {
    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        let start = if i == 0 { 0 } else { self.ends[i - 1] as usize };
        &self.buf[start..self.ends[i] as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

/// Image file names in `dir`, in natural (numeric-aware) order.
pub fn list_frames(dir: &Path) -> CmdResult<FrameNames> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CommandError::new(ExitStatus::InvalidInput, format!("{}: {e}", dir.display())))?;
    let mut buf = String::new();
    let mut spans: Vec<(u32, u32)> = Vec::new();
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name();
        let Some(name) = name.to_str() else {
            log::warn!("skipping non UTF-8 file name in {}", dir.display());
            continue;
        };
        let is_image = Path::new(name)
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)));
        if is_image {
            let start = buf.len();
            buf.push_str(name);
            let end = u32::try_from(buf.len()).map_err(|_| {
                CommandError::new(
                    ExitStatus::InvalidInput,
                    format!("too many frames in {}", dir.display()),
                )
            })?;
            spans.push((start as u32, end));
        }
    }
    let name = |&(a, b): &(u32, u32)| &buf[a as usize..b as usize];
    spans.sort_unstable_by(|x, y| natord::compare(name(x), name(y)).then_with(|| name(x).cmp(name(y))));
    let mut names = FrameNames {
        buf: String::with_capacity(buf.len()),
        ends: Vec::with_capacity(spans.len()),
    };
    for span in &spans {
        names.buf.push_str(name(span));
        names.ends.push(names.buf.len() as u32);
    }
    Ok(names)
}

fn frames_or_empty(dir: &Path) -> CmdResult<FrameNames> {
    let names = list_frames(dir)?;
    if names.is_empty() {
        return Err(CommandError::new(
            ExitStatus::InvalidInput,
            format!("no PNG/JPEG frames in {}", dir.display()),
        ));
    }
    Ok(names)
}

fn refuse_existing(path: &Path, force: bool) -> CmdResult<()> {
    if !force && path.exists() {
        return Err(CommandError::new(
            ExitStatus::Refused,
            format!("{} exists; pass --force to overwrite", path.display()),
        ));
    }
    Ok(())
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Write-then-rename so readers never observe a half-written file.
fn write_output(path: &Path, force: bool, contents: &[u8]) -> CmdResult<()> {
    refuse_existing(path, force)?;
    let tmp = partial_path(path);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Frames decoded in parallel per chunk; order is restored on merge. One
/// full frame per worker is resident at a time.
fn chunk_size() -> usize {
    rayon::current_num_threads().max(1)
}

/// Index ranges of `len` frames, one decode batch each.
fn chunks(len: usize) -> impl Iterator<Item = Range<usize>> {
    let size = chunk_size();
    (0..len)
        .step_by(size)
        .map(move |start| start..(start + size).min(len))
}

fn decode_all<T: Send>(
    dir: &Path,
    names: &FrameNames,
    range: Range<usize>,
    f: impl Fn(GrayImage) -> crate::error::Result<T> + Sync,
) -> Vec<crate::error::Result<T>> {
    range
        .into_par_iter()
        .map(|i| imaging::load_gray(&dir.join(names.get(i))).and_then(&f))
        .collect()
}

fn decode_failures(failed: &[String]) -> CommandError {
    CommandError::new(
        ExitStatus::DecodeFailure,
        format!("undecodable frames: {}", failed.join(", ")),
    )
}

#[derive(Debug, Clone)]
pub struct ScoreArgs {
    pub frames_dir: PathBuf,
    pub out: PathBuf,
    pub k: usize,
    pub downscale: usize,
    pub lenient: bool,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub scored: usize,
    pub skipped: Vec<String>,
}

fn score_row(t: Thresholded<(usize, String)>) -> ScoreRow {
    ScoreRow {
        frame_index: t.item.0,
        filename: t.item.1,
        variance: t.variance,
        threshold: t.threshold,
        keep: t.keep,
    }
}

/// Score every frame in a directory and write the score CSV.
///
/// `frame_index` is the position in natural filename order. Rows are
/// streamed through a `2k + 1` window, so memory does not grow with the
/// frame count beyond the file-name list.
pub fn cmd_score(args: &ScoreArgs) -> CmdResult<ScoreSummary> {
    if args.downscale < 1 {
        return Err(CommandError::new(
            ExitStatus::InvalidInput,
            "downscale must be >= 1",
        ));
    }
    let names = frames_or_empty(&args.frames_dir)?;
    refuse_existing(&args.out, args.force)?;

    let tmp = partial_path(&args.out);
    let mut writer = ScoreWriter::new(BufWriter::new(File::create(&tmp)?));
    let mut stream = ThresholdStream::new(args.k);
    let mut failed = Vec::new();
    let mut scored = 0;

    let result = (|| -> CmdResult<()> {
        for range in chunks(names.len()) {
            let base = range.start;
            let scores = decode_all(&args.frames_dir, &names, range, |img| {
                Ok(match args.downscale {
                    1 => imaging::variance_of_laplacian(&img),
                    f => imaging::variance_of_laplacian(&imaging::downscale(&img, f)?),
                })
            });
            for (offset, score) in scores.into_iter().enumerate() {
                let name = names.get(base + offset);
                match score {
                    Ok(v) => {
                        scored += 1;
                        if let Some(t) = stream.push((base + offset, name.to_owned()), v)? {
                            writer.write(&score_row(t))?;
                        }
                    }
                    Err(e @ Error::Decode { .. }) => {
                        log::warn!("{e}");
                        failed.push(name.to_owned());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if !failed.is_empty() && !args.lenient {
            return Err(decode_failures(&failed));
        }
        if scored == 0 {
            return Err(CommandError::new(
                ExitStatus::InvalidInput,
                "no frame could be decoded",
            ));
        }
        for t in std::mem::replace(&mut stream, ThresholdStream::new(0)).finish()? {
            writer.write(&score_row(t))?;
        }
        Ok(())
    })();

    match result.and_then(|_| Ok(writer.finish()?)) {
        Ok(()) => {
            fs::rename(&tmp, &args.out)?;
            log::info!("scored {scored} frames into {}", args.out.display());
            Ok(ScoreSummary {
                scored,
                skipped: failed,
            })
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterArgs {
    pub scores: PathBuf,
    pub frames_dir: PathBuf,
    pub k: usize,
    pub out_dir: PathBuf,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub k: usize,
    pub total: usize,
    pub kept: usize,
    pub discarded: usize,
}

pub const KEPT_DIR: &str = "kept";
pub const DISCARDED_FILE: &str = "discarded.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VERDICTS_FILE: &str = "scores.csv";

fn link_or_copy(src: &Path, dst: &Path) -> std::io::Result<()> {
    if fs::hard_link(src, dst).is_err() {
        fs::copy(src, dst)?;
    }
    Ok(())
}

/// Re-threshold a score file with window `k` and partition the frames.
///
/// Kept frames are linked (or copied) into `out_dir/kept`; discarded ones
/// are only listed. Sources are never modified.
pub fn cmd_filter(args: &FilterArgs) -> CmdResult<FilterSummary> {
    let open = || -> CmdResult<File> {
        File::open(&args.scores).map_err(|e| {
            CommandError::new(
                ExitStatus::InvalidInput,
                format!("{}: {e}", args.scores.display()),
            )
        })
    };

    // Pass 1: every row must parse and name an existing frame.
    let mut total = 0;
    let mut missing = Vec::new();
    for row in read_scores(open()?) {
        let row = row?;
        total += 1;
        if !args.frames_dir.join(&row.filename).is_file() {
            missing.push(row.filename);
        }
    }
    if total == 0 {
        return Err(CommandError::new(
            ExitStatus::InvalidInput,
            "score file has no rows",
        ));
    }
    if !missing.is_empty() {
        return Err(CommandError::new(
            ExitStatus::Inconsistent,
            format!("frames listed in scores but missing: {}", missing.join(", ")),
        ));
    }

    let kept_dir = args.out_dir.join(KEPT_DIR);
    let outputs = [
        kept_dir.clone(),
        args.out_dir.join(DISCARDED_FILE),
        args.out_dir.join(SUMMARY_FILE),
        args.out_dir.join(VERDICTS_FILE),
    ];
    for p in &outputs {
        refuse_existing(p, args.force)?;
    }
    if kept_dir.exists() {
        fs::remove_dir_all(&kept_dir)?;
    }
    fs::create_dir_all(&kept_dir)?;

    // Pass 2: stream through the threshold window.
    let mut discarded_out = BufWriter::new(File::create(partial_path(&outputs[1]))?);
    let mut verdicts = ScoreWriter::new(BufWriter::new(File::create(partial_path(&outputs[3]))?));
    let mut summary = FilterSummary {
        k: args.k,
        total,
        kept: 0,
        discarded: 0,
    };
    let mut handle = |t: Thresholded<(usize, String)>| -> CmdResult<()> {
        if t.keep {
            summary.kept += 1;
            link_or_copy(&args.frames_dir.join(&t.item.1), &kept_dir.join(&t.item.1))?;
        } else {
            summary.discarded += 1;
            writeln!(discarded_out, "{}", t.item.1)?;
        }
        verdicts.write(&score_row(t))?;
        Ok(())
    };
    let mut stream = ThresholdStream::new(args.k);
    for row in read_scores(open()?) {
        let row = row?;
        if let Some(t) = stream.push((row.frame_index, row.filename), row.variance)? {
            handle(t)?;
        }
    }
    for t in stream.finish()? {
        handle(t)?;
    }
    discarded_out.flush()?;
    drop(discarded_out);
    verdicts.finish()?;
    fs::rename(partial_path(&outputs[1]), &outputs[1])?;
    fs::rename(partial_path(&outputs[3]), &outputs[3])?;

    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_output(&outputs[2], true, json.as_bytes())?;
    log::info!(
        "k={}: kept {} of {}, discarded {}",
        summary.k,
        summary.kept,
        summary.total,
        summary.discarded
    );
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct KeyframeArgs {
    pub frames_dir: PathBuf,
    pub out: PathBuf,
    pub policy: KeyframePolicy,
    /// External keyframe listing; when set, it is validated and copied.
    pub listing: Option<PathBuf>,
    pub lenient: bool,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyframeSummary {
    pub frames: usize,
    pub selected: usize,
}

/// Write a keyframe listing (one file name per line).
pub fn cmd_keyframes(args: &KeyframeArgs) -> CmdResult<KeyframeSummary> {
    let names = frames_or_empty(&args.frames_dir)?;
    refuse_existing(&args.out, args.force)?;

    if let Some(listing_path) = &args.listing {
        let bytes = fs::read(listing_path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| {
            CommandError::new(
                ExitStatus::InvalidInput,
                format!("{}: {e}", listing_path.display()),
            )
        })?;
        let frames: Vec<FrameRecord> = names
            .iter()
            .enumerate()
            .map(|(i, n)| FrameRecord {
                index: i,
                name: n.to_owned(),
                timestamp: None,
                image: None,
                blur_score: None,
            })
            .collect();
        let selected = ingest_external_keyframes(&KeyframeListing::parse(text), &frames)?;
        write_output(&args.out, args.force, &bytes)?;
        return Ok(KeyframeSummary {
            frames: names.len(),
            selected: selected.len(),
        });
    }

    let mut selector = KeyframeSelector::new(args.policy)?;
    let mut listing = String::new();
    let mut selected = 0;
    let mut failed = Vec::new();
    for range in chunks(names.len()) {
        let base = range.start;
        let thumbs = decode_all(&args.frames_dir, &names, range, |img| args.policy.thumbnail(&img));
        for (offset, thumb) in thumbs.into_iter().enumerate() {
            let name = names.get(base + offset);
            match thumb {
                Ok(t) => {
                    if selector.offer(base + offset, t) {
                        selected += 1;
                        listing.push_str(name);
                        listing.push('\n');
                    }
                }
                Err(e @ Error::Decode { .. }) => {
                    log::warn!("{e}");
                    failed.push(name.to_owned());
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if !failed.is_empty() && !args.lenient {
        return Err(decode_failures(&failed));
    }
    write_output(&args.out, args.force, listing.as_bytes())?;
    log::info!("selected {selected} keyframes of {}", names.len());
    Ok(KeyframeSummary {
        frames: names.len(),
        selected,
    })
}

pub fn load_reconstruction(path: &Path, lenient: bool) -> CmdResult<Reconstruction> {
    let text = fs::read_to_string(path)
        .map_err(|e| CommandError::new(ExitStatus::InvalidInput, format!("{}: {e}", path.display())))?;
    let (rec, report) = sfm::parse_reconstruction(&text, &ParseOptions { lenient })?;
    if report.unknown_fields > 0 {
        log::info!("ignored {} unknown fields", report.unknown_fields);
    }
    for path in &report.dropped {
        log::warn!("dropped invalid entry at `{path}`");
    }
    Ok(rec)
}

#[derive(Debug, Clone)]
pub struct TourArgs {
    pub reconstruction: PathBuf,
    pub panos_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub options: TourOptions,
    pub lenient: bool,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TourSummary {
    pub nodes: usize,
    pub edges: usize,
    pub missing_images: Vec<String>,
}

/// Build the navigation graph and write `tour.json`.
pub fn cmd_tour(args: &TourArgs) -> CmdResult<TourSummary> {
    refuse_existing(&args.out, args.force)?;
    let rec = load_reconstruction(&args.reconstruction, args.lenient)?;
    let mut graph = tour::build_graph(&rec, &args.options)?;
    let mut missing = Vec::new();
    if let Some(dir) = &args.panos_dir {
        for node in &mut graph.nodes {
            if !dir.join(&node.image).is_file() {
                log::warn!("panorama {} not found in {}", node.image, dir.display());
                node.missing_image = true;
                missing.push(node.id.clone());
            }
        }
    }
    write_output(&args.out, args.force, tour::emit_tour(&graph).as_bytes())?;
    Ok(TourSummary {
        nodes: graph.nodes.len(),
        edges: graph.edges.len(),
        missing_images: missing,
    })
}

#[derive(Debug, Clone)]
pub struct ExportArgs {
    pub reconstruction: PathBuf,
    pub out: PathBuf,
    pub include_shots: bool,
    pub lenient: bool,
    pub force: bool,
}

/// Export points (and camera centres) as ASCII PLY. Returns the vertex count.
pub fn cmd_export_ply(args: &ExportArgs) -> CmdResult<usize> {
    refuse_existing(&args.out, args.force)?;
    let rec = load_reconstruction(&args.reconstruction, args.lenient)?;
    let mut buf = Vec::new();
    sfm::ply::export_ply(&rec, args.include_shots, &mut buf)?;
    write_output(&args.out, args.force, &buf)?;
    Ok(sfm::ply::vertices(&rec, args.include_shots).len())
}
