//! Lens-light and transmission estimation, and restoration of the clear image.
//!
//! The capture model is `I_c = D_c t + L_c (1 - t)`. Dividing by the
//! lens-light and taking the channel minimum gives
//! `I_min = (1 - t) + D_min t`, and the windowed minimum of that is close to
//! `1 - t` wherever the clear image has a dark channel near zero. The
//! windowed minimum is filtered by structure transfer (guided by the
//! gradients of `I_min`) and then by edge-preserving smoothing; one minus the
//! result is the transmission.

use crate::error::{Error, Result};
use crate::fgs::{
    edge_preserving_smooth, structure_transfer, EdgeSmoothParams, StructureTransferParams, VectorField,
};
use crate::gif::{guided_filter, GifParams};
use crate::raster::{min_of_channels, Plane, RgbImage};
use crate::scalar::Scalar;

/// Smallest image the lens-light search accepts.
pub const MIN_LIGHT_SIDE: usize = 32;
const LIGHT_FLOOR: f64 = 0.05;

/// Per-channel additive light scattered by the lens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LensLight<T> {
    pub lr: T,
    pub lg: T,
    pub lb: T,
}

impl<T: Scalar> LensLight<T> {
    pub fn new(lr: T, lg: T, lb: T) -> Result<Self> {
        for (name, v) in [("lr", lr), ("lg", lg), ("lb", lb)] {
            if !(v > T::zero() && v <= T::one()) {
                return Err(Error::invalid(name, format!("lens-light must lie in (0, 1], got {v}")));
            }
        }
        Ok(LensLight { lr, lg, lb })
    }

    pub fn channels(&self) -> [T; 3] {
        [self.lr, self.lg, self.lb]
    }
}

/// Per-pixel transmission bounded below by `t_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionMap<T> {
    t: Plane<T>,
    t_min: T,
}

impl<T: Scalar> TransmissionMap<T> {
    /// Clamps `t` into `[t_min, 1]`.
    pub fn new(t: Plane<T>, t_min: T) -> Result<Self> {
        if !(t_min > T::zero() && t_min < T::one()) {
            return Err(Error::invalid("t_min", format!("must lie in (0, 1), got {t_min}")));
        }
        Ok(TransmissionMap {
            t: t.clamp(t_min, T::one()),
            t_min,
        })
    }

    pub fn plane(&self) -> &Plane<T> {
        &self.t
    }

    pub fn t_min(&self) -> T {
        self.t_min
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecloudParams<T> {
    /// Side of the square dark-channel window; odd.
    pub kappa: usize,
    pub structure: StructureTransferParams<T>,
    pub edge: EdgeSmoothParams<T>,
    /// Lower bound on the transmission.
    pub t_min: T,
    /// Attenuation; the restored image is scaled by `1 / alpha`.
    pub alpha: T,
}

impl<T: Scalar> Default for DecloudParams<T> {
    fn default() -> Self {
        DecloudParams {
            kappa: 15,
            structure: StructureTransferParams::default(),
            edge: EdgeSmoothParams::default(),
            t_min: T::lit(0.1),
            alpha: T::one(),
        }
    }
}

impl<T: Scalar> DecloudParams<T> {
    pub fn validate(&self) -> Result<()> {
        validate_kappa(self.kappa)?;
        self.structure.validate()?;
        self.edge.validate()?;
        validate_t_min(self.t_min)?;
        if !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

fn validate_kappa(kappa: usize) -> Result<()> {
    if kappa == 0 || kappa % 2 == 0 {
        return Err(Error::invalid("kappa", format!("window size must be odd and >= 1, got {kappa}")));
    }
    Ok(())
}

fn validate_t_min<T: Scalar>(t_min: T) -> Result<()> {
    if !(t_min > T::zero() && t_min < T::one()) {
        return Err(Error::invalid("t_min", format!("must lie in (0, 1), got {t_min}")));
    }
    Ok(())
}

/// Quadtree search for the brightest flat region.
///
/// The current region is split into four quadrants, each scored by the mean
/// minus the standard deviation of the channel minimum; the search descends
/// into the best one (the first in reading order on ties) until the region
/// covers less than 1/256 of the image. The lens-light is the per-channel
/// mean of the final region, floored at 0.05.
pub fn estimate_lens_light<T: Scalar>(img: &RgbImage<T>) -> Result<LensLight<T>> {
    let (h, w) = img.dims();
    if h < MIN_LIGHT_SIDE || w < MIN_LIGHT_SIDE {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            min_height: MIN_LIGHT_SIDE,
            min_width: MIN_LIGHT_SIDE,
        });
    }
    let minc = min_of_channels(img);
    let total = h * w;
    let (mut r0, mut c0, mut rh, mut rw) = (0, 0, h, w);
    while rh * rw * 256 >= total && rh >= 2 && rw >= 2 {
        let (h1, w1) = (rh / 2, rw / 2);
        let quadrants = [
            (r0, c0, h1, w1),
            (r0, c0 + w1, h1, rw - w1),
            (r0 + h1, c0, rh - h1, w1),
            (r0 + h1, c0 + w1, rh - h1, rw - w1),
        ];
        let mut best = quadrants[0];
        let mut best_score = T::neg_infinity();
        for q in quadrants {
            let score = region_score(&minc, q);
            if score > best_score {
                best_score = score;
                best = q;
            }
        }
        (r0, c0, rh, rw) = best;
    }
    let floor = T::lit(LIGHT_FLOOR);
    let channels = img.planes().map(|p| {
        region_mean(p, (r0, c0, rh, rw)).max(floor).min(T::one())
    });
    LensLight::new(channels[0], channels[1], channels[2])
}

fn region_mean<T: Scalar>(plane: &Plane<T>, (r0, c0, h, w): (usize, usize, usize, usize)) -> T {
    let mut sum = T::zero();
    for r in r0..r0 + h {
        sum = sum + plane.row(r)[c0..c0 + w].iter().copied().sum::<T>();
    }
    sum / T::from_count(h * w)
}

fn region_score<T: Scalar>(plane: &Plane<T>, region: (usize, usize, usize, usize)) -> T {
    let (r0, c0, h, w) = region;
    let mean = region_mean(plane, region);
    let mut var = T::zero();
    for r in r0..r0 + h {
        for &v in &plane.row(r)[c0..c0 + w] {
            var = var + (v - mean) * (v - mean);
        }
    }
    mean - (var / T::from_count(h * w)).sqrt()
}

/// `min_c I_c / L_c`, clamped to `[0, 1]`.
pub fn normalized_min_channel<T: Scalar>(img: &RgbImage<T>, light: &LensLight<T>) -> Plane<T> {
    let [lr, lg, lb] = light.channels();
    let data = img
        .red()
        .data()
        .iter()
        .zip(img.green().data())
        .zip(img.blue().data())
        .map(|((&r, &g), &b)| (r / lr).min(g / lg).min(b / lb).max(T::zero()).min(T::one()))
        .collect();
    Plane::new(img.height(), img.width(), data).expect("finite ratios of finite values")
}

/// Minimum over the `kappa x kappa` window centred on each pixel, truncated at
/// the borders.
///
/// Rows then columns, each with the van Herk/Gil-Werman running minimum: a
/// constant number of comparisons per pixel regardless of `kappa`.
pub fn sliding_min<T: Scalar>(plane: &Plane<T>, kappa: usize) -> Result<Plane<T>> {
    validate_kappa(kappa)?;
    let (h, w) = plane.dims();
    let mut rows = vec![T::zero(); h * w];
    let mut line = Vec::new();
    let mut out_line = Vec::new();
    for r in 0..h {
        line.clear();
        line.extend_from_slice(plane.row(r));
        running_min(&line, kappa, &mut out_line);
        rows[r * w..(r + 1) * w].copy_from_slice(&out_line);
    }
    let mut out = vec![T::zero(); h * w];
    for c in 0..w {
        line.clear();
        line.extend((0..h).map(|r| rows[r * w + c]));
        running_min(&line, kappa, &mut out_line);
        for (r, &v) in out_line.iter().enumerate() {
            out[r * w + c] = v;
        }
    }
    Ok(Plane::from_raw(h, w, out))
}

/// 1D centred running minimum of odd width `k`; out-of-range samples count
/// as `+inf` so border windows are effectively truncated.
fn running_min<T: Scalar>(x: &[T], k: usize, out: &mut Vec<T>) {
    let n = x.len();
    let r = k / 2;
    // padded index j maps to x[j - r]
    let len = n + 2 * r;
    let at = |j: usize| if j >= r && j - r < n { x[j - r] } else { T::infinity() };
    let mut prefix = vec![T::infinity(); len];
    let mut suffix = vec![T::infinity(); len];
    for j in 0..len {
        prefix[j] = if j % k == 0 { at(j) } else { prefix[j - 1].min(at(j)) };
    }
    for j in (0..len).rev() {
        suffix[j] = if j % k == k - 1 || j == len - 1 {
            at(j)
        } else {
            suffix[j + 1].min(at(j))
        };
    }
    out.clear();
    // window [i, i + k - 1] in padded coordinates is centred on x[i]
    out.extend((0..n).map(|i| suffix[i].min(prefix[i + k - 1])));
}

/// Forward differences of the normalized minimum channel.
pub fn guidance_field<T: Scalar>(min_channel: &Plane<T>) -> Result<VectorField<T>> {
    min_channel.require_min(2, 2)?;
    Ok(VectorField::forward_gradient(min_channel))
}

/// Intermediate planes of one transmission estimate.
#[derive(Clone, Debug)]
pub struct TransmissionStages<T> {
    pub min_channel: Plane<T>,
    pub dark_channel: Plane<T>,
    pub base_layer: Plane<T>,
    pub smoothed: Plane<T>,
    pub transmission: TransmissionMap<T>,
}

pub fn estimate_transmission<T: Scalar>(
    img: &RgbImage<T>,
    light: &LensLight<T>,
    params: &DecloudParams<T>,
) -> Result<TransmissionMap<T>> {
    Ok(transmission_stages(img, light, params)?.transmission)
}

/// [`estimate_transmission`] keeping every intermediate plane.
pub fn transmission_stages<T: Scalar>(
    img: &RgbImage<T>,
    light: &LensLight<T>,
    params: &DecloudParams<T>,
) -> Result<TransmissionStages<T>> {
    params.validate()?;
    img.red().require_min(2, 2)?;
    let min_channel = normalized_min_channel(img, light);
    let dark_channel = sliding_min(&min_channel, params.kappa)?;
    let field = guidance_field(&min_channel)?;
    let base_layer = structure_transfer(&dark_channel, &field, &params.structure)?;
    let smoothed = edge_preserving_smooth(&base_layer, &field, &params.edge)?;
    let transmission = TransmissionMap::new(smoothed.map(|phi| T::one() - phi), params.t_min)?;
    Ok(TransmissionStages {
        min_channel,
        dark_channel,
        base_layer,
        smoothed,
        transmission,
    })
}

/// Inverts the capture model: `D_c = (I_c - L_c) / t + L_c`, scaled by
/// `1 / alpha` and clamped to `[0, 1]`.
pub fn restore<T: Scalar>(
    img: &RgbImage<T>,
    light: &LensLight<T>,
    tmap: &TransmissionMap<T>,
    alpha: T,
) -> Result<RgbImage<T>> {
    if img.dims() != tmap.plane().dims() {
        return Err(Error::dims(img.dims(), tmap.plane().dims()));
    }
    if !(alpha > T::zero()) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    let lights = light.channels();
    let t = tmap.plane();
    let scale = T::one() / alpha;
    Ok(img.map_channels(|c, plane| {
        let l = lights[c];
        plane
            .zip_map(t, |i, t| ((i - l) / t + l) * scale)
            .expect("dimensions checked")
            .clamp(T::zero(), T::one())
    }))
}

/// Everything one declouding run produces.
#[derive(Clone, Debug)]
pub struct Declouded<T> {
    pub restored: RgbImage<T>,
    pub transmission: TransmissionMap<T>,
    pub light: LensLight<T>,
}

pub fn decloud<T: Scalar>(img: &RgbImage<T>, params: &DecloudParams<T>) -> Result<Declouded<T>> {
    params.validate()?;
    let light = estimate_lens_light(img)?;
    let transmission = estimate_transmission(img, &light, params)?;
    let restored = restore(img, &light, &transmission, params.alpha)?;
    Ok(Declouded {
        restored,
        transmission,
        light,
    })
}

/// Baseline pipeline: the dark channel is refined by the guided image filter
/// (guided by the normalized minimum channel) instead of the two global
/// filters.
pub fn decloud_guided<T: Scalar>(
    img: &RgbImage<T>,
    kappa: usize,
    gif: &GifParams<T>,
    t_min: T,
    alpha: T,
) -> Result<Declouded<T>> {
    validate_kappa(kappa)?;
    validate_t_min(t_min)?;
    let light = estimate_lens_light(img)?;
    let min_channel = normalized_min_channel(img, &light);
    let dark_channel = sliding_min(&min_channel, kappa)?;
    let refined = guided_filter(&dark_channel, &min_channel, gif)?;
    let transmission = TransmissionMap::new(refined.map(|phi| T::one() - phi), t_min)?;
    let restored = restore(img, &light, &transmission, alpha)?;
    Ok(Declouded {
        restored,
        transmission,
        light,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_min(p: &Plane<f64>, k: usize) -> Plane<f64> {
        let r = (k / 2) as isize;
        let (h, w) = p.dims();
        Plane::from_fn(h, w, |y, x| {
            let mut m = f64::INFINITY;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (yy, xx) = (y as isize + dy, x as isize + dx);
                    if yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w {
                        m = m.min(p[(yy as usize, xx as usize)]);
                    }
                }
            }
            m
        })
        .unwrap()
    }

    #[test]
    fn sliding_min_constant_and_point() {
        let c = Plane::filled(6, 9, 0.3).unwrap();
        assert_eq!(sliding_min(&c, 5).unwrap(), c);
        let p = Plane::from_fn(7, 7, |r, c| if (r, c) == (3, 3) { 0.0 } else { 1.0 }).unwrap();
        let out = sliding_min(&p, 3).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                let inside = (2..=4).contains(&r) && (2..=4).contains(&c);
                assert_eq!(out[(r, c)], if inside { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn sliding_min_matches_window_scan_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (h, w, k) in [(9, 9, 5), (4, 11, 7), (13, 3, 1), (5, 5, 15), (16, 10, 3)] {
            let p = Plane::from_fn(h, w, |_, _| rng.gen()).unwrap();
            assert_eq!(sliding_min(&p, k).unwrap(), brute_min(&p, k), "{h}x{w} k={k}");
        }
        assert!(sliding_min(&Plane::filled(3, 3, 0.0).unwrap(), 4).is_err());
        assert!(sliding_min(&Plane::filled(3, 3, 0.0).unwrap(), 0).is_err());
    }

    #[test]
    fn normalized_min_channel_cases() {
        let light = LensLight::new(0.8f64, 0.6, 0.9).unwrap();
        let img = RgbImage::from_fn(1, 2, |_, c| if c == 0 { [0.8, 0.6, 0.9] } else { [0.4, 0.6, 0.9] }).unwrap();
        let out = normalized_min_channel(&img, &light);
        assert!((out[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((out[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn guidance_field_of_ramp_and_constant() {
        let w = 8;
        let ramp = Plane::from_fn(5, w, |_, c| c as f64 / w as f64).unwrap();
        let f = guidance_field(&ramp).unwrap();
        for r in 0..5 {
            for c in 0..w {
                let expected = if c + 1 < w { 1.0 / w as f64 } else { 0.0 };
                assert!((f.vh()[(r, c)] - expected).abs() < 1e-15);
                assert_eq!(f.vv()[(r, c)], 0.0);
            }
        }
        let flat = guidance_field(&Plane::filled(4, 4, 0.2).unwrap()).unwrap();
        assert_eq!(flat, VectorField::zeros(4, 4).unwrap());
        assert!(guidance_field(&Plane::filled(1, 4, 0.2).unwrap()).is_err());
    }

    #[test]
    fn guidance_field_matches_difference_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = Plane::<f64>::from_fn(6, 7, |_, _| rng.gen()).unwrap();
        let f = guidance_field(&p).unwrap();
        for r in 0..6 {
            for c in 0..7 {
                let h = if c < 6 { p[(r, c + 1)] - p[(r, c)] } else { 0.0 };
                let v = if r < 5 { p[(r + 1, c)] - p[(r, c)] } else { 0.0 };
                assert_eq!(f.vh()[(r, c)], h);
                assert_eq!(f.vv()[(r, c)], v);
            }
        }
    }

    #[test]
    fn lens_light_of_constant_image() {
        let img = RgbImage::from_fn(40, 48, |_, _| [0.8f64, 0.7, 0.6]).unwrap();
        let l = estimate_lens_light(&img).unwrap();
        assert!((l.lr - 0.8).abs() < 1e-12 && (l.lg - 0.7).abs() < 1e-12 && (l.lb - 0.6).abs() < 1e-12);
        let black = RgbImage::from_fn(32, 32, |_, _| [0.0; 3]).unwrap();
        assert_eq!(estimate_lens_light(&black).unwrap().channels(), [0.05; 3]);
        let small = RgbImage::from_fn(31, 64, |_, _| [0.5; 3]).unwrap();
        assert!(matches!(estimate_lens_light(&small), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn restore_cases() {
        let img = RgbImage::from_fn(2, 2, |_, _| [0.6f64, 0.3, 0.8]).unwrap();
        let light = LensLight::new(0.8, 0.3, 0.5).unwrap();
        let ones = TransmissionMap::new(Plane::filled(2, 2, 1.0).unwrap(), 0.1).unwrap();
        assert_eq!(restore(&img, &light, &ones, 1.0).unwrap(), img);
        let half = TransmissionMap::new(Plane::filled(2, 2, 0.5).unwrap(), 0.1).unwrap();
        let out = restore(&img, &light, &half, 1.0).unwrap();
        assert!((out.red()[(0, 0)] - 0.4).abs() < 1e-12);
        // I = L leaves the channel unchanged at any transmission
        assert!((out.green()[(1, 1)] - 0.3).abs() < 1e-12);
        // 0.8 -> (0.8 - 0.5)/0.5 + 0.5 = 1.1, clamped
        assert_eq!(out.blue()[(0, 1)], 1.0);
        let scaled = restore(&img, &light, &ones, 2.0).unwrap();
        assert!((scaled.red()[(0, 0)] - 0.3).abs() < 1e-12);
        let wrong = TransmissionMap::new(Plane::filled(3, 2, 1.0).unwrap(), 0.1).unwrap();
        assert!(restore(&img, &light, &wrong, 1.0).is_err());
    }

    #[test]
    fn transmission_map_is_clamped() {
        let t = TransmissionMap::new(Plane::from_fn(1, 3, |_, c| [-0.5, 0.5, 1.5][c]).unwrap(), 0.1).unwrap();
        assert_eq!(t.plane().data(), &[0.1, 0.5, 1.0]);
        assert!(TransmissionMap::new(Plane::filled(1, 1, 0.5).unwrap(), 0.0).is_err());
        assert!(TransmissionMap::new(Plane::filled(1, 1, 0.5).unwrap(), 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DecloudParams::<f64>::default().validate().is_ok());
        for bad in [
            DecloudParams { kappa: 4, ..DecloudParams::default() },
            DecloudParams { t_min: 0.0, ..DecloudParams::default() },
            DecloudParams { alpha: 0.0, ..DecloudParams::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(LensLight::new(0.0, 0.5, 0.5).is_err());
        assert!(LensLight::new(0.5, 1.2, 0.5).is_err());
    }
}
