//! Seeded synthetic scenes: a smooth static background, optional global
//! brightness drift, a moving rectangular block and Gaussian pixel noise.

use std::f64::consts::PI;

use bgsub_core::video::{FrameSequence, MaskSequence};
use bgsub_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{parse_key_values, ConfigError};

/// Peak offset of the brightness drift relative to the mean background.
pub const DRIFT_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    /// 1: static image; 2: static image plus a global brightness drift.
    pub background_rank: usize,
    pub block_width: usize,
    pub block_height: usize,
    pub block_intensity: f64,
    /// Pixels per frame along x and y.
    pub block_velocity: (f64, f64),
    /// Top-left corner of the block in frame 0.
    pub block_origin: (usize, usize),
    pub noise_sigma: f64,
}

impl SyntheticSpec {
    /// 32x32x60 instance used for accuracy checks.
    pub fn accuracy_default() -> Self {
        SyntheticSpec {
            width: 32,
            height: 32,
            frame_count: 60,
            background_rank: 2,
            block_width: 7,
            block_height: 7,
            block_intensity: 0.25,
            block_velocity: (2.0, 1.0),
            block_origin: (0, 0),
            noise_sigma: 0.01,
        }
    }

    /// 64x64x200 instance used for recovery and timing; the block covers
    /// 5% of a frame.
    pub fn timing_default() -> Self {
        SyntheticSpec {
            width: 64,
            height: 64,
            frame_count: 200,
            background_rank: 2,
            block_width: 15,
            block_height: 14,
            block_intensity: 0.35,
            block_velocity: (3.0, 1.0),
            block_origin: (0, 0),
            noise_sigma: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.width == 0 || self.height == 0 {
            return bad("frame size must be positive".into());
        }
        if self.frame_count < 2 {
            return bad("need at least 2 frames".into());
        }
        if !(1..=2).contains(&self.background_rank) {
            return bad("background_rank must be 1 or 2".into());
        }
        if self.block_width > self.width || self.block_height > self.height {
            return bad(format!(
                "block {}x{} does not fit a {}x{} frame",
                self.block_width, self.block_height, self.width, self.height
            ));
        }
        if !(0.0..=1.0).contains(&self.block_intensity) {
            return bad("block_intensity must lie in [0, 1]".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and nonnegative".into());
        }
        if !(self.block_velocity.0.is_finite() && self.block_velocity.1.is_finite()) {
            return bad("block_velocity must be finite".into());
        }
        Ok(())
    }

    /// Reads `key=value` lines; unspecified keys keep the
    /// [`timing_default`](Self::timing_default) values.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut spec = Self::timing_default();
        for (key, value) in parse_key_values(text)? {
            spec.set(&key, &value)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        use crate::config::{parse_pair, parse_value};
        match key {
            "width" => self.width = parse_value(key, value)?,
            "height" => self.height = parse_value(key, value)?,
            "frame_count" | "frames" => self.frame_count = parse_value(key, value)?,
            "background_rank" => self.background_rank = parse_value(key, value)?,
            "block_width" => self.block_width = parse_value(key, value)?,
            "block_height" => self.block_height = parse_value(key, value)?,
            "block_size" => {
                let n = parse_value(key, value)?;
                self.block_width = n;
                self.block_height = n;
            }
            "block_intensity" => self.block_intensity = parse_value(key, value)?,
            "block_velocity" => self.block_velocity = parse_pair(key, value)?,
            "block_origin" => self.block_origin = parse_pair(key, value)?,
            "noise_sigma" => self.noise_sigma = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Top-left corner of the block in frame `t`, wrapped into the frame.
    pub fn block_position(&self, t: usize) -> (usize, usize) {
        let wrap = |origin: usize, v: f64, n: usize| {
            let p = (origin as f64 + v * t as f64).floor() as i64;
            p.rem_euclid(n as i64) as usize
        };
        (
            wrap(self.block_origin.0, self.block_velocity.0, self.width),
            wrap(self.block_origin.1, self.block_velocity.1, self.height),
        )
    }

    fn in_block(&self, t: usize, x: usize, y: usize) -> bool {
        let (bx, by) = self.block_position(t);
        (x + self.width - bx) % self.width < self.block_width && (y + self.height - by) % self.height < self.block_height
    }
}

/// Generated frames, ground-truth masks and the noise-free background.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub frames: FrameSequence,
    pub truth: MaskSequence,
    /// `n1 x n2`, one background frame per column.
    pub background: DenseMatrix,
}

/// Smooth image in `[0.5, 0.7]` from a few random low-frequency waves.
fn smooth_image(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0..=3) as f64,
                rng.random_range(0..=3) as f64,
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64 / width as f64, (i / width) as f64 / height as f64);
            waves
                .iter()
                .map(|&(fx, fy, phase, amp)| amp * (2.0 * PI * (fx * x + fy * y) + phase).cos())
                .sum()
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    raw.iter().map(|r| 0.5 + 0.2 * (r - lo) / span).collect()
}

/// Same spec and seed give identical scenes.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticScene, ConfigError> {
    spec.validate()?;
    let (w, h, n2) = (spec.width, spec.height, spec.frame_count);
    let n1 = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = smooth_image(w, h, &mut rng);
    let mean = base.iter().sum::<f64>() / n1 as f64;
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let mut background = DenseMatrix::zeros(n1, n2);
    let mut frames = Vec::with_capacity(n2);
    let mut masks = Vec::with_capacity(n2);
    for t in 0..n2 {
        let offset = if spec.background_rank == 2 {
            // linear ramp from -10% to +10% of the mean brightness
            DRIFT_FRACTION * mean * (2.0 * t as f64 / (n2 - 1) as f64 - 1.0)
        } else {
            0.0
        };
        let mut frame = Vec::with_capacity(n1);
        let mut mask = Vec::with_capacity(n1);
        for (i, &b) in base.iter().enumerate() {
            let bg = b + offset;
            background.set(i, t, bg);
            let covered = spec.in_block(t, i % w, i / w);
            let clean = if covered { spec.block_intensity } else { bg };
            let noisy = if spec.noise_sigma > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            };
            frame.push(noisy.clamp(0.0, 1.0));
            mask.push(covered);
        }
        frames.push(frame);
        masks.push(mask);
    }
    let frames = FrameSequence::indexed(w, h, frames).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let truth = MaskSequence::new(w, h, masks).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(SyntheticScene {
        frames,
        truth,
        background,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bgsub_core::video::to_observation_matrix;
    use bgsub_core::LowRankFactorization;

    fn plain(width: usize, height: usize) -> SyntheticSpec {
        SyntheticSpec {
            width,
            height,
            frame_count: 5,
            background_rank: 1,
            block_width: 0,
            block_height: 0,
            block_intensity: 0.0,
            block_velocity: (0.0, 0.0),
            block_origin: (0, 0),
            noise_sigma: 0.0,
        }
    }

    #[test]
    fn static_scene_is_rank_one() {
        let scene = generate(&plain(8, 6), 3).unwrap();
        let v = to_observation_matrix(&scene.frames);
        assert_eq!(LowRankFactorization::from_dense(&v, 1e-10).rank(), 1);
    }

    #[test]
    fn drift_scene_is_rank_two() {
        let spec = SyntheticSpec {
            background_rank: 2,
            ..plain(8, 6)
        };
        let scene = generate(&spec, 3).unwrap();
        assert_eq!(LowRankFactorization::from_dense(&scene.background, 1e-10).rank(), 2);
    }

    #[test]
    fn block_kinematics() {
        let spec = SyntheticSpec {
            block_width: 4,
            block_height: 4,
            block_velocity: (1.0, 0.0),
            block_origin: (2, 5),
            frame_count: 14,
            ..plain(16, 16)
        };
        assert_eq!(spec.block_position(3), (5, 5));
        let scene = generate(&spec, 1).unwrap();
        let mask = scene.truth.mask(3);
        assert!(mask[5 * 16 + 5]);
        assert!(!mask[5 * 16 + 4]);
        assert_eq!(mask.iter().filter(|&&b| b).count(), 16);
        // wraps around the right edge
        assert_eq!(spec.block_position(13), (15, 5));
        assert!(scene.truth.mask(13)[5 * 16]);
    }

    #[test]
    fn same_seed_same_scene() {
        let spec = SyntheticSpec::accuracy_default();
        let a = generate(&spec, 42).unwrap();
        let b = generate(&spec, 42).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.truth, b.truth);
        assert_ne!(generate(&spec, 43).unwrap().frames, a.frames);
    }

    #[test]
    fn oversized_block_rejected() {
        let spec = SyntheticSpec {
            block_width: 9,
            ..plain(8, 8)
        };
        assert!(generate(&spec, 0).is_err());
    }

    #[test]
    fn parse_spec_file() {
        let spec = SyntheticSpec::parse("width=16\nheight = 8\n# comment\nblock_velocity=1,0\nblock_size=3\n").unwrap();
        assert_eq!((spec.width, spec.height, spec.block_width, spec.block_velocity), (16, 8, 3, (1.0, 0.0)));
        assert!(SyntheticSpec::parse("colour=1").is_err());
    }
}
