//! Contrast metrics (histogram flatness, histogram spread, variability of
//! local luminosity), segmentation overlap error and CDR error.
//!
//! Histograms use `bins` equal-width bins over `[0, 1]`; values outside the
//! range fall into the end bins.

use crate::error::{Error, Result};
use crate::raster::{Channel, PixelMask, Plane, RgbImage};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricOptions {
    pub bins: usize,
    /// The luminosity grid is `blocks x blocks`.
    pub blocks: usize,
    pub channel: Channel,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            bins: 256,
            blocks: 8,
            channel: Channel::Green,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub hfm: f64,
    pub hs: f64,
    pub vll: f64,
    pub channel: Channel,
    pub bins: usize,
    pub blocks: usize,
}

/// All three contrast metrics of one channel of `img`.
pub fn evaluate<T: Scalar>(img: &RgbImage<T>, options: &MetricOptions) -> Result<MetricsReport> {
    let plane = img.channel(options.channel);
    Ok(MetricsReport {
        hfm: hfm(&plane, options.bins)?.as_f64(),
        hs: hs(&plane, options.bins)?.as_f64(),
        vll: vll(&plane, options.blocks)?.as_f64(),
        channel: options.channel,
        bins: options.bins,
        blocks: options.blocks,
    })
}

/// Pixel counts per bin.
pub fn histogram<T: Scalar>(plane: &Plane<T>, bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    let scale = T::from_count(bins);
    for &v in plane.data() {
        let idx = (v * scale).floor().to_isize().unwrap_or(0).clamp(0, bins as isize - 1);
        counts[idx as usize] += 1;
    }
    counts
}

/// Geometric over arithmetic mean of the bin counts; 0 if any bin is empty.
pub fn hfm<T: Scalar>(plane: &Plane<T>, bins: usize) -> Result<T> {
    if bins < 2 {
        return Err(Error::invalid("bins", format!("need at least 2, got {bins}")));
    }
    Ok(flatness(&histogram(plane, bins)))
}

fn flatness<T: Scalar>(counts: &[usize]) -> T {
    if counts.contains(&0) {
        return T::zero();
    }
    let n = T::from_count(counts.len());
    let log_mean = counts.iter().map(|&c| T::from_count(c).ln()).sum::<T>() / n;
    let mean = T::from_count(counts.iter().sum()) / n;
    (log_mean.exp() / mean).min(T::one())
}

/// Interquartile distance of the histogram over the representable range:
/// the distance between the bin centres where the cumulative mass first
/// reaches 1/4 and 3/4.
pub fn hs<T: Scalar>(plane: &Plane<T>, bins: usize) -> Result<T> {
    if bins < 4 {
        return Err(Error::invalid("bins", format!("need at least 4, got {bins}")));
    }
    let counts = histogram(plane, bins);
    let total = plane.len();
    let quantile_bin = |num: usize| {
        let mut cum = 0;
        for (i, &c) in counts.iter().enumerate() {
            cum += c;
            if 4 * cum >= num * total {
                return i;
            }
        }
        bins - 1
    };
    let (q1, q3) = (quantile_bin(1), quantile_bin(3));
    // difference of centres (i + 1/2)/bins
    Ok(T::from_count(q3 - q1) / T::from_count(bins))
}

/// `(1/N) sqrt(sum_ij (mu_ij - m)^2 / m^2)` over an `N x N` grid of block
/// means `mu_ij`, `m` the plane mean. Blocks are `h / N` by `w / N`; the
/// last row and column of blocks absorb any remainder.
pub fn vll<T: Scalar>(plane: &Plane<T>, blocks: usize) -> Result<T> {
    if blocks == 0 {
        return Err(Error::invalid("blocks", "must be >= 1"));
    }
    plane.require_min(blocks, blocks)?;
    let mean = plane.mean();
    if mean.abs() <= T::zero() {
        return Err(Error::Degenerate("zero-mean plane has no relative luminosity".into()));
    }
    let (h, w) = plane.dims();
    let (bh, bw) = (h / blocks, w / blocks);
    let edges = |size: usize, step: usize, i: usize| {
        let end = if i + 1 == blocks { size } else { (i + 1) * step };
        (i * step, end)
    };
    // Sums are taken relative to the first pixel so that equal block means
    // cancel exactly instead of leaving rounding residue.
    let pivot = plane.data()[0];
    let shifted_mean = plane.data().iter().map(|&v| v - pivot).sum::<T>() / T::from_count(plane.len());
    let mut acc = T::zero();
    for i in 0..blocks {
        let (r0, r1) = edges(h, bh, i);
        for j in 0..blocks {
            let (c0, c1) = edges(w, bw, j);
            let sum: T = (r0..r1)
                .map(|r| plane.row(r)[c0..c1].iter().map(|&v| v - pivot).sum::<T>())
                .sum();
            let dev = sum / T::from_count((r1 - r0) * (c1 - c0)) - shifted_mean;
            acc = acc + dev * dev;
        }
    }
    Ok((acc / (mean * mean)).sqrt() / T::from_count(blocks))
}

/// `1 - |S and G| / |S or G|`.
pub fn overlap_error(seg: &PixelMask, truth: &PixelMask) -> Result<f64> {
    if seg.dims() != truth.dims() {
        return Err(Error::dims(seg.dims(), truth.dims()));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&s, &g) in seg.data().iter().zip(truth.data()) {
        inter += (s && g) as usize;
        union += (s || g) as usize;
    }
    if union == 0 {
        return Err(Error::Degenerate("both masks are empty".into()));
    }
    Ok(1.0 - inter as f64 / union as f64)
}

/// Mean absolute difference.
pub fn cdr_error(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", truth.len()),
            actual: format!("{} values", predicted.len()),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Degenerate("no CDR pairs".into()));
    }
    Ok(predicted.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f64]) -> Plane<f64> {
        Plane::new(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn histogram_edges() {
        let p = row(&[0.0, 0.2499, 0.25, 0.99, 1.0, -0.3, 1.7]);
        assert_eq!(histogram(&p, 4), vec![3, 1, 0, 3]);
    }

    #[test]
    fn hfm_cases() {
        let equal = row(&[0.1, 0.3, 0.6, 0.9]);
        assert!((hfm(&equal, 4).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(hfm(&row(&[0.1, 0.3, 0.6]), 4).unwrap(), 0.0);
        assert!(hfm(&equal, 1).is_err());
    }

    #[test]
    fn hs_cases() {
        assert_eq!(hs(&Plane::filled(3, 3, 0.4).unwrap(), 256).unwrap(), 0.0);
        let two_point = row(&[0.0, 0.0, 1.0, 1.0]);
        assert!((hs(&two_point, 16).unwrap() - (1.0 - 1.0 / 16.0)).abs() < 1e-12);
        assert!(hs(&two_point, 3).is_err());
    }

    #[test]
    fn vll_cases() {
        let c = Plane::filled(16, 16, 0.3).unwrap();
        assert_eq!(vll(&c, 4).unwrap(), 0.0);
        let ramp = Plane::from_fn(9, 9, |r, c| 0.1 + (r + c) as f64 / 20.0).unwrap();
        assert!(vll(&ramp, 1).unwrap().abs() < 1e-15);
        assert!(vll(&Plane::filled(4, 4, 0.0).unwrap(), 2).is_err());
        assert!(vll(&c, 17).is_err());
        assert!(vll(&c, 0).is_err());
    }

    #[test]
    fn overlap_and_cdr_errors() {
        let a = PixelMask::from_fn(4, 4, |r, _| r < 2);
        let b = PixelMask::from_fn(4, 4, |r, _| r >= 2);
        assert_eq!(overlap_error(&a, &a).unwrap(), 0.0);
        assert_eq!(overlap_error(&a, &b).unwrap(), 1.0);
        let empty = PixelMask::from_fn(4, 4, |_, _| false);
        assert!(overlap_error(&empty, &empty).is_err());
        assert!(overlap_error(&a, &PixelMask::from_fn(2, 2, |_, _| true)).is_err());
        assert!((cdr_error(&[0.5], &[0.6]).unwrap() - 0.1).abs() < 1e-12);
        assert!(cdr_error(&[0.5], &[0.6, 0.1]).is_err());
        assert!(cdr_error(&[], &[]).is_err());
    }

    #[test]
    fn report_uses_selected_channel() {
        let img = RgbImage::from_fn(16, 16, |r, c| [0.9, 0.1 + 0.05 * ((r + c) % 4) as f64, 0.02]).unwrap();
        let green = evaluate(&img, &MetricOptions::default()).unwrap();
        let red = evaluate(&img, &MetricOptions { channel: Channel::Red, ..MetricOptions::default() }).unwrap();
        assert_eq!(red.hs, 0.0);
        assert!(green.hs > 0.0);
        assert_eq!(green.channel, Channel::Green);
    }
}
