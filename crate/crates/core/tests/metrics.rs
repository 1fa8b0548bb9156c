mod common;

use bgsub_core::metrics::{
    confusion, d_score, d_score_weight, distance_transform, f_measure, frame_d_score, psnr, ssim, PSNR_CAP_DB,
};
use bgsub_core::{evaluate, oracle, MaskSequence};
use common::{random_mask, rng};
use proptest::prelude::*;

fn seq(width: usize, height: usize, frames: Vec<Vec<bool>>) -> MaskSequence {
    MaskSequence::new(width, height, frames).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn hand_computed_confusion_and_f_measure() {
    let f = vec![true, false, false, false];
    let g = vec![true, true, false, false];
    let c = confusion(&f, &g).unwrap();
    assert_eq!((c.tp, c.fn_, c.tn, c.fp), (1, 1, 2, 0));
    let want = 2.0 * (0.75 * 5.0 / 6.0) / (0.75 + 5.0 / 6.0);
    let got = f_measure(&seq(2, 2, vec![f.clone(), f]), &seq(2, 2, vec![g.clone(), g])).unwrap();
    assert!(close(got, want, 1e-12));
    assert!(close(got, 0.7895, 5e-5));
}

#[test]
fn f_measure_extremes() {
    let f = vec![true, false, true, false];
    let comp: Vec<bool> = f.iter().map(|x| !x).collect();
    assert_eq!(f_measure(&seq(2, 2, vec![f.clone(); 2]), &seq(2, 2, vec![f.clone(); 2])).unwrap(), 1.0);
    assert_eq!(f_measure(&seq(2, 2, vec![f; 2]), &seq(2, 2, vec![comp; 2])).unwrap(), 0.0);
}

#[test]
fn psnr_fixtures() {
    let g = vec![false; 4];
    let one = vec![true, false, false, false];
    let all = vec![true; 4];
    let frame = |f: &Vec<bool>| psnr(&seq(2, 2, vec![f.clone(); 2]), &seq(2, 2, vec![g.clone(); 2])).unwrap();
    assert!(close(frame(&one), 6.0206, 5e-5));
    assert_eq!(frame(&g), PSNR_CAP_DB);
    assert!(close(frame(&all), 0.0, 1e-12));
}

#[test]
fn ssim_fixtures() {
    let zero = seq(2, 2, vec![vec![false; 4]; 2]);
    let full = seq(2, 2, vec![vec![true; 4]; 2]);
    assert_eq!(ssim(&full, &full).unwrap(), 1.0);
    let got = ssim(&zero, &full).unwrap();
    assert!(close(got, 6.5025 / 65031.5025, 1e-15));
    assert!(close(got, 1.0e-4, 1e-6));
}

#[test]
fn distance_transform_fixtures() {
    let mut g = vec![false; 9];
    g[4] = true;
    let dt = distance_transform(&g, 3, 3);
    assert_eq!(dt[1], 1.0);
    assert!(close(dt[0], 2f64.sqrt(), 1e-15));
    assert!(distance_transform(&[false; 4], 2, 2).iter().all(|d| d.is_infinite()));
}

#[test]
fn d_score_fixtures() {
    assert!(close(d_score_weight(2f64.powf(1.5)), 1.0, 1e-12));
    assert!(close(d_score_weight(64.0), (-20.25f64).exp(), 1e-20));
    // DT floor: a missed ground-truth pixel counts as DT = 0.5
    assert!(close(d_score_weight(0.0), (-6.25f64).exp(), 1e-15));

    let g = vec![true, false, false, false];
    assert_eq!(frame_d_score(&g, &g, 2, 2), 0.0);
    assert_eq!(d_score(&seq(2, 2, vec![g.clone(); 2]), &seq(2, 2, vec![g; 2])).unwrap(), 0.0);
    // no ground truth anywhere: every mistake is infinitely far
    assert_eq!(frame_d_score(&[true, false], &[false, false], 2, 1), 0.0);
}

#[test]
fn d_score_is_unimodal_in_distance() {
    let samples = [0.5, 1.0, 2.0, 2f64.powf(1.5), 4.0, 8.0, 64.0];
    let w: Vec<f64> = samples.iter().map(|&d| d_score_weight(d)).collect();
    let peak = 3;
    assert!(w[..=peak].windows(2).all(|p| p[0] < p[1]), "{w:?}");
    assert!(w[peak..].windows(2).all(|p| p[0] > p[1]), "{w:?}");
}

#[test]
fn metrics_match_the_naive_reference() {
    for s in 0..20 {
        let mut r = rng(7000 + s);
        let (w, h) = (16, 16);
        let frames = |r: &mut _, density| (0..5).map(|_| random_mask(r, w * h, density)).collect::<Vec<_>>();
        let f = frames(&mut r, 0.2);
        let g = frames(&mut r, 0.15);
        let report = evaluate(&seq(w, h, f.clone()), &seq(w, h, g.clone())).unwrap();
        let mean = |m: &dyn Fn(&[bool], &[bool]) -> f64| f.iter().zip(&g).map(|(a, b)| m(a, b)).sum::<f64>() / 5.0;
        assert!(close(report.f_measure, mean(&oracle::f_measure), 1e-9), "seed {s}");
        assert!(close(report.psnr_db, mean(&oracle::psnr), 1e-9), "seed {s}");
        assert!(close(report.ssim, mean(&oracle::ssim), 1e-9), "seed {s}");
        assert!(close(report.d_score, mean(&|a, b| oracle::d_score(a, b, w, h)), 1e-9), "seed {s}");
    }
}

fn pair() -> impl Strategy<Value = (usize, usize, Vec<Vec<bool>>, Vec<Vec<bool>>)> {
    (1usize..8, 1usize..8, 1usize..4).prop_flat_map(|(w, h, n)| {
        let frames = proptest::collection::vec(proptest::collection::vec(any::<bool>(), w * h), n);
        (Just(w), Just(h), frames.clone(), frames)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_bounded_and_perfect_on_identity((w, h, f, g) in pair()) {
        let (f, g) = (seq(w, h, f), seq(w, h, g));
        let report = evaluate(&f, &g).unwrap();
        prop_assert!((0.0..=1.0).contains(&report.f_measure));
        prop_assert!((-1.0..=1.0).contains(&report.ssim));
        prop_assert!(report.d_score >= 0.0);
        prop_assert!(report.psnr_db <= PSNR_CAP_DB);
        let n = report.per_frame.len() as f64;
        let mean = |x: &dyn Fn(&bgsub_core::FrameMetrics) -> f64| report.per_frame.iter().map(x).sum::<f64>() / n;
        prop_assert!(close(report.f_measure, mean(&|m| m.f_measure), 1e-12));
        prop_assert!(close(report.psnr_db, mean(&|m| m.psnr_db), 1e-12));
        prop_assert!(close(report.ssim, mean(&|m| m.ssim), 1e-12));
        prop_assert!(close(report.d_score, mean(&|m| m.d_score), 1e-12));
        for m in &report.per_frame {
            prop_assert_eq!(m.confusion.total(), w * h);
        }

        let same = evaluate(&f, &f).unwrap();
        prop_assert_eq!(same.f_measure, 1.0);
        prop_assert_eq!(same.psnr_db, PSNR_CAP_DB);
        prop_assert_eq!(same.d_score, 0.0);
    }
}
