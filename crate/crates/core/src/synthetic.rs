//! Deterministic synthetic inputs for examples, benchmarks and tests.
//!
//! Frames are crops of a large random-block texture, panned one step per
//! frame to imitate camera motion. Selected frames are Gaussian-blurred, and
//! the corpus records which ones, so filter output can be checked against
//! ground truth.

use std::collections::BTreeSet;
use std::path::Path;

use image::{GrayImage as LumaImage, Luma};
use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur, GrayImage};
use crate::sfm::{Camera, Reconstruction, Shot, SparsePoint};

/// Random grey blocks of `cell` pixels over a smooth horizontal gradient.
pub fn textured_image(width: usize, height: usize, cell: usize, seed: u64) -> GrayImage {
    let cell = cell.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = width.div_ceil(cell);
    let rows = height.div_ceil(cell);
    let blocks: Vec<f64> = (0..cols * rows).map(|_| rng.gen_range(0.0..160.0)).collect();
    GrayImage::from_fn(width, height, |x, y| {
        blocks[(y / cell) * cols + x / cell] + 80.0 * x as f64 / width as f64
    })
    .expect("texture within range")
}

/// A frame sequence with ground-truth blurred indices.
#[derive(Debug, Clone)]
pub struct BlurCorpus {
    pub frames: Vec<GrayImage>,
    pub blurred: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusConfig {
    pub frames: usize,
    pub blurred: usize,
    pub sigma: f64,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            frames: 100,
            blurred: 20,
            sigma: 4.0,
            width: 128,
            height: 64,
            seed: 7,
        }
    }
}

pub fn blur_corpus(cfg: &CorpusConfig) -> BlurCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let pan = 2;
    let texture = textured_image(cfg.width + pan * cfg.frames, cfg.height, 4, cfg.seed);
    let blurred: BTreeSet<usize> = sample(&mut rng, cfg.frames, cfg.blurred.min(cfg.frames))
        .into_iter()
        .collect();
    let frames = (0..cfg.frames)
        .map(|i| {
            let crop = GrayImage::from_fn(cfg.width, cfg.height, |x, y| texture.get(x + pan * i, y))
                .expect("crop within range");
            if blurred.contains(&i) {
                gaussian_blur(&crop, cfg.sigma)
            } else {
                crop
            }
        })
        .collect();
    BlurCorpus { frames, blurred }
}

/// Save as an 8-bit greyscale PNG (samples rounded).
pub fn write_png(img: &GrayImage, path: &Path) -> Result<()> {
    let out = LumaImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        Luma([img.get(x as usize, y as usize).round() as u8])
    });
    out.save(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A reconstruction with randomly posed shots and coloured points.
///
/// Shots are scattered in a `extent`-sized box with small random tilts;
/// the model has `cameras` spherical camera entries used round-robin.
pub fn random_reconstruction(
    cameras: usize,
    shots: usize,
    points: usize,
    extent: f64,
    seed: u64,
) -> Reconstruction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Reconstruction::default();
    for c in 0..cameras.max(1) {
        let mut cam = Camera::equirectangular(5760, 2880);
        cam.params.insert("focal".into(), 0.5 + 0.1 * c as f64);
        rec.cameras.insert(format!("spherical_{c}"), cam);
    }
    let cam_ids: Vec<String> = rec.cameras.keys().cloned().collect();
    for s in 0..shots {
        let id = format!("pano_{s:04}.jpg");
        let rotation = Vector3::new(
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.gen_range(-0.2..0.2),
        );
        let position = Vector3::new(
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
            rng.gen_range(0.0..extent / 4.0),
        );
        let shot = Shot::from_position(id.clone(), cam_ids[s % cam_ids.len()].clone(), rotation, position)
            .expect("finite pose");
        rec.shots.insert(id, shot);
    }
    for p in 0..points {
        rec.points.push(SparsePoint {
            id: p.to_string(),
            position: Vector3::new(
                rng.gen_range(-extent..extent),
                rng.gen_range(-extent..extent),
                rng.gen_range(-extent..extent),
            ),
            color: [rng.gen(), rng.gen(), rng.gen()],
        });
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::variance_of_laplacian;

    #[test]
    fn corpus_is_deterministic() {
        let cfg = CorpusConfig {
            frames: 10,
            blurred: 3,
            ..Default::default()
        };
        let a = blur_corpus(&cfg);
        let b = blur_corpus(&cfg);
        assert_eq!(a.blurred, b.blurred);
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.blurred.len(), 3);
    }

    #[test]
    fn blurred_frames_score_lower() {
        let corpus = blur_corpus(&CorpusConfig {
            frames: 12,
            blurred: 4,
            ..Default::default()
        });
        let sharp_min = (0..12)
            .filter(|i| !corpus.blurred.contains(i))
            .map(|i| variance_of_laplacian(&corpus.frames[i]))
            .fold(f64::INFINITY, f64::min);
        for &i in &corpus.blurred {
            assert!(variance_of_laplacian(&corpus.frames[i]) < sharp_min);
        }
    }

    #[test]
    fn random_reconstruction_is_valid() {
        let rec = random_reconstruction(2, 5, 100, 10.0, 1);
        assert_eq!(
            (rec.cameras.len(), rec.shots.len(), rec.points.len()),
            (2, 5, 100)
        );
        rec.validate().unwrap();
    }
}
