//! Mask quality metrics: averaged F-measure, PSNR, global SSIM and D-score,
//! plus the exact Euclidean distance transform the D-score needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::MaskSequence;

/// PSNR reported for frames without a single wrong pixel.
pub const PSNR_CAP_DB: f64 = 100.0;
/// SSIM stabilizers for 8-bit data, `(0.01 * 255)^2` and `(0.03 * 255)^2`.
pub const SSIM_C1: f64 = 6.5025;
pub const SSIM_C2: f64 = 58.5225;
/// Distance floor for mistakes lying on a reference pixel.
pub const D_SCORE_MIN_DISTANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn errors(&self) -> usize {
        self.fp + self.fn_
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub f_measure: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub d_score: f64,
    pub confusion: ConfusionCounts,
}

/// Sequence metrics; each aggregate is the mean of the per-frame values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f_measure: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub d_score: f64,
    pub per_frame: Vec<FrameMetrics>,
}

/// Pixel counts with foreground as the positive class.
pub fn confusion(detected: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if detected.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: (truth.len(), 1),
            found: (detected.len(), 1),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&d, &t) in detected.iter().zip(truth) {
        match (d, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// `num / den`, with `0 / 0` counted as perfect agreement.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, each averaged over the
/// foreground and background classes.
pub fn frame_f_measure(c: &ConfusionCounts) -> f64 {
    let recall = 0.5 * (ratio(c.tp, c.tp + c.fn_) + ratio(c.tn, c.tn + c.fp));
    let precision = 0.5 * (ratio(c.tp, c.tp + c.fp) + ratio(c.tn, c.tn + c.fn_));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `10 log10(n / errors)`, capped at [`PSNR_CAP_DB`].
pub fn frame_psnr(c: &ConfusionCounts) -> f64 {
    if c.errors() == 0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (c.total() as f64 / c.errors() as f64).log10()).min(PSNR_CAP_DB)
}

/// Global SSIM of two masks scaled to 0/255, with population statistics.
pub fn frame_ssim(detected: &[bool], truth: &[bool]) -> f64 {
    let n = detected.len() as f64;
    let value = |b: bool| if b { 255.0 } else { 0.0 };
    let mean = |m: &[bool]| m.iter().map(|&b| value(b)).sum::<f64>() / n;
    let (mf, mg) = (mean(detected), mean(truth));
    let (mut vf, mut vg, mut cov) = (0.0, 0.0, 0.0);
    for (&f, &g) in detected.iter().zip(truth) {
        let (df, dg) = (value(f) - mf, value(g) - mg);
        vf += df * df;
        vg += dg * dg;
        cov += df * dg;
    }
    let (vf, vg, cov) = (vf / n, vg / n, cov / n);
    (2.0 * mf * mg + SSIM_C1) * (2.0 * cov + SSIM_C2) / ((mf * mf + mg * mg + SSIM_C1) * (vf + vg + SSIM_C2))
}

/// Euclidean distance from each pixel to the nearest `true` pixel, by the
/// separable lower-envelope algorithm of Felzenszwalb and Huttenlocher.
/// Every distance is infinite when no pixel is set.
pub fn distance_transform(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(mask.len(), width * height, "mask size");
    if !mask.iter().any(|&b| b) {
        return vec![f64::INFINITY; mask.len()];
    }
    // Large finite stand-in for infinity keeps the envelope arithmetic exact.
    let far = ((width * width + height * height) as f64 + 1.0) * 4.0;
    let mut sq: Vec<f64> = mask.iter().map(|&b| if b { 0.0 } else { far }).collect();

    let mut buf = EnvelopeBuffers::new(width.max(height));
    let mut line = vec![0.0; height];
    for x in 0..width {
        for y in 0..height {
            line[y] = sq[y * width + x];
        }
        buf.transform(&line);
        for y in 0..height {
            sq[y * width + x] = buf.out[y];
        }
    }
    for y in 0..height {
        buf.transform(&sq[y * width..(y + 1) * width]);
        sq[y * width..(y + 1) * width].copy_from_slice(&buf.out[..width]);
    }
    sq.iter().map(|&d| if d >= far { f64::INFINITY } else { d.sqrt() }).collect()
}

struct EnvelopeBuffers {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
    out: Vec<f64>,
}

impl EnvelopeBuffers {
    fn new(n: usize) -> Self {
        EnvelopeBuffers {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
            out: vec![0.0; n],
        }
    }

    /// `out[q] = min_p (q - p)^2 + f[p]`.
    fn transform(&mut self, f: &[f64]) {
        let n = f.len();
        let v = &mut self.vertices;
        let z = &mut self.bounds;
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        let meet = |q: usize, p: usize| {
            let (qf, pf) = (q as f64, p as f64);
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
        };
        for q in 1..n {
            let mut s = meet(q, v[k]);
            while s <= z[k] {
                k -= 1;
                s = meet(q, v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        k = 0;
        for q in 0..n {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let d = q as f64 - v[k] as f64;
            self.out[q] = d * d + f[v[k]];
        }
    }
}

/// Contribution of one mistake at distance `dt` from the reference.
pub fn d_score_weight(dt: f64) -> f64 {
    let dt = dt.max(D_SCORE_MIN_DISTANCE);
    (-((2.0 * dt).log2() - 2.5).powi(2)).exp()
}

/// Mean weight over misclassified pixels, 0 when there are none.
pub fn frame_d_score(detected: &[bool], truth: &[bool], width: usize, height: usize) -> f64 {
    let mistakes: Vec<usize> = (0..truth.len()).filter(|&i| detected[i] != truth[i]).collect();
    if mistakes.is_empty() {
        return 0.0;
    }
    let dt = distance_transform(truth, width, height);
    mistakes.iter().map(|&i| d_score_weight(dt[i])).sum::<f64>() / mistakes.len() as f64
}

fn check_aligned(detected: &MaskSequence, truth: &MaskSequence) -> Result<()> {
    if (detected.width(), detected.height()) != (truth.width(), truth.height()) {
        return Err(Error::DimensionMismatch {
            expected: (truth.width(), truth.height()),
            found: (detected.width(), detected.height()),
        });
    }
    if detected.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: (truth.len(), 1),
            found: (detected.len(), 1),
        });
    }
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn f_measure(detected: &MaskSequence, truth: &MaskSequence) -> Result<f64> {
    check_aligned(detected, truth)?;
    let per = (0..truth.len())
        .map(|k| confusion(detected.mask(k), truth.mask(k)).map(|c| frame_f_measure(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(per.into_iter()))
}

pub fn psnr(detected: &MaskSequence, truth: &MaskSequence) -> Result<f64> {
    check_aligned(detected, truth)?;
    let per = (0..truth.len())
        .map(|k| confusion(detected.mask(k), truth.mask(k)).map(|c| frame_psnr(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(per.into_iter()))
}

pub fn ssim(detected: &MaskSequence, truth: &MaskSequence) -> Result<f64> {
    check_aligned(detected, truth)?;
    Ok(mean((0..truth.len()).map(|k| frame_ssim(detected.mask(k), truth.mask(k)))))
}

pub fn d_score(detected: &MaskSequence, truth: &MaskSequence) -> Result<f64> {
    check_aligned(detected, truth)?;
    let (w, h) = (truth.width(), truth.height());
    Ok(mean((0..truth.len()).map(|k| frame_d_score(detected.mask(k), truth.mask(k), w, h))))
}

/// All four metrics with per-frame breakdowns.
pub fn evaluate(detected: &MaskSequence, truth: &MaskSequence) -> Result<MetricsReport> {
    check_aligned(detected, truth)?;
    let (w, h) = (truth.width(), truth.height());
    let per_frame = (0..truth.len())
        .map(|k| {
            let (f, g) = (detected.mask(k), truth.mask(k));
            let c = confusion(f, g)?;
            Ok(FrameMetrics {
                f_measure: frame_f_measure(&c),
                psnr_db: frame_psnr(&c),
                ssim: frame_ssim(f, g),
                d_score: frame_d_score(f, g, w, h),
                confusion: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        f_measure: mean(per_frame.iter().map(|m| m.f_measure)),
        psnr_db: mean(per_frame.iter().map(|m| m.psnr_db)),
        ssim: mean(per_frame.iter().map(|m| m.ssim)),
        d_score: mean(per_frame.iter().map(|m| m.d_score)),
        per_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_hand_case() {
        let c = confusion(&[true, false, false, false], &[true, true, false, false]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 0, tn: 2, fn_: 1 });
        let c = confusion(&[true; 4], &[false; 4]).unwrap();
        assert_eq!(c.fp, 4);
        assert!(confusion(&[true; 3], &[true; 4]).is_err());
    }

    #[test]
    fn f_measure_complement_is_zero() {
        let c = confusion(&[true, false], &[false, true]).unwrap();
        assert_eq!(frame_f_measure(&c), 0.0);
    }

    #[test]
    fn psnr_examples() {
        let c = confusion(&[true, false, false, false], &[false; 4]).unwrap();
        assert!((frame_psnr(&c) - 6.0206).abs() < 1e-4);
        let c = confusion(&[true; 4], &[false; 4]).unwrap();
        assert_eq!(frame_psnr(&c), 0.0);
        let c = confusion(&[true; 4], &[true; 4]).unwrap();
        assert_eq!(frame_psnr(&c), PSNR_CAP_DB);
    }

    #[test]
    fn distance_neighbors() {
        let mut m = vec![false; 9];
        m[4] = true;
        let dt = distance_transform(&m, 3, 3);
        assert_eq!(dt[1], 1.0);
        assert_eq!(dt[0], 2f64.sqrt());
        assert!(distance_transform(&[false; 4], 2, 2).iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn d_score_peak_and_tail() {
        assert!((d_score_weight(2f64.powf(1.5)) - 1.0).abs() < 1e-12);
        assert!((d_score_weight(64.0) - (-20.25f64).exp()).abs() < 1e-20);
        assert!((d_score_weight(0.0) - (-6.25f64).exp()).abs() < 1e-15);
    }
}
