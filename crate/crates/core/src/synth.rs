//! Deterministic synthetic fundus scenes and the clouding model, for tests,
//! demos and the bundled corpus.
//!
//! A scene is an orange-red background with slow illumination drift, a
//! bright optic disc containing a brighter cup, and dark vessels radiating
//! from the disc. The blue channel stays low outside the disc so the dark
//! channel is close to zero over most of the image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decloud::LensLight;
use crate::error::{Error, Result};
use crate::raster::{Plane, RgbImage};
use crate::scalar::Scalar;

/// A clean synthetic fundus and its ground truth.
#[derive(Clone, Debug)]
pub struct Scene<T> {
    pub clean: RgbImage<T>,
    /// Disc centre as `(row, col)`.
    pub disc_center: (f64, f64),
    pub disc_radius: f64,
    /// Vertical cup-to-disc ratio.
    pub cdr: f64,
}

struct Vessel {
    angle: f64,
    width: f64,
    wobble: f64,
    phase: f64,
    freq: f64,
}

/// Builds the scene for `seed`; the same seed always gives the same image.
pub fn fundus<T: Scalar>(height: usize, width: usize, seed: u64) -> Result<Scene<T>> {
    if height < 16 || width < 16 {
        return Err(Error::TooSmall {
            height,
            width,
            min_height: 16,
            min_width: 16,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (height as f64, width as f64);
    let side = h.min(w);
    let disc_radius = side * rng.gen_range(0.08..0.12);
    let disc_center = (
        h * rng.gen_range(0.35..0.65),
        w * rng.gen_range(0.25..0.75),
    );
    let cdr = rng.gen_range(0.3..0.8);
    let cup_radius = disc_radius * cdr;
    let tint = [rng.gen_range(0.55..0.7), rng.gen_range(0.22..0.32), rng.gen_range(0.02..0.05)];
    let drift = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.6..1.4));
    let vessels: Vec<Vessel> = (0..rng.gen_range(6..10))
        .map(|_| Vessel {
            angle: rng.gen_range(0.0..std::f64::consts::TAU),
            width: side * rng.gen_range(0.006..0.016),
            wobble: rng.gen_range(0.05..0.25),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            freq: rng.gen_range(2.0..6.0),
        })
        .collect();
    let noise: Vec<f64> = (0..height * width).map(|_| rng.gen_range(-0.01..0.01)).collect();

    let img = RgbImage::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
        let (dy, dx) = (y - disc_center.0, x - disc_center.1);
        let dist = (dy * dy + dx * dx).sqrt();
        // illumination falls off away from the centre and drifts slowly
        let (cy, cx) = ((y / h) - 0.5, (x / w) - 0.5);
        let shade = 1.0 - 0.35 * (cy * cy + cx * cx) + 0.05 * (drift.1 * (cx * 3.0 + drift.0)).sin();
        let mut px = [tint[0] * shade, tint[1] * shade, tint[2] * shade];

        // soft-edged disc and cup
        let disc = smoothstep(disc_radius + 1.5, disc_radius - 1.5, dist);
        let cup = smoothstep(cup_radius + 1.5, cup_radius - 1.5, dist);
        let disc_color = [0.93, 0.78, 0.42];
        let cup_color = [0.99, 0.92, 0.62];
        for k in 0..3 {
            px[k] = px[k] * (1.0 - disc) + disc_color[k] * disc;
            px[k] = px[k] * (1.0 - cup) + cup_color[k] * cup;
        }

        // vessels leave the disc rim and wind outwards
        let theta = dy.atan2(dx);
        let mut shadow: f64 = 0.0;
        if dist > cup_radius {
            for v in &vessels {
                let reach = (dist - cup_radius) / side;
                let path = v.angle + v.wobble * (v.freq * reach + v.phase).sin();
                let delta = wrap_angle(theta - path) * dist;
                let width = v.width * (1.0 - 0.6 * reach.min(1.0));
                let core = (-(delta * delta) / (2.0 * width * width)).exp();
                shadow = shadow.max(core);
            }
        }
        let absorb = [0.3, 0.55, 0.3];
        for k in 0..3 {
            px[k] *= 1.0 - absorb[k] * shadow;
        }

        let n = noise[r * width + c];
        px.map(|v| T::lit((v + n * (1.0 - 0.8 * disc)).clamp(0.0, 1.0)))
    })?;
    Ok(Scene {
        clean: img,
        disc_center,
        disc_radius,
        cdr,
    })
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    (a + PI).rem_euclid(TAU) - PI
}

/// Applies the clouding model `I_c = D_c t + L_c (1 - t)`.
pub fn cloud<T: Scalar>(clean: &RgbImage<T>, light: &LensLight<T>, t: &Plane<T>) -> Result<RgbImage<T>> {
    if clean.dims() != t.dims() {
        return Err(Error::dims(clean.dims(), t.dims()));
    }
    let lights = light.channels();
    Ok(clean.map_channels(|k, plane| {
        plane
            .zip_map(t, |d, t| d * t + lights[k] * (T::one() - t))
            .expect("dimensions checked")
    }))
}

/// Smoothly varying transmission in `[lo, hi]`: a few low-frequency waves
/// plus a radial falloff, as a cataract veils the periphery more.
pub fn transmission<T: Scalar>(height: usize, width: usize, lo: f64, hi: f64, seed: u64) -> Result<Plane<T>> {
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(Error::invalid("range", format!("need 0 < lo <= hi <= 1, got [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7d5c_91e3);
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let (h, w) = (height as f64, width as f64);
    Plane::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 / h, c as f64 / w);
        let wave: f64 = waves.iter().map(|&(fy, fx, p)| (fy * y * 3.0 + fx * x * 3.0 + p).sin()).sum::<f64>() / 3.0;
        let radial = ((y - 0.5).powi(2) + (x - 0.5).powi(2)).sqrt() / std::f64::consts::FRAC_1_SQRT_2;
        let s = (0.5 + 0.3 * wave - 0.3 * radial).clamp(0.0, 1.0);
        T::lit(lo + (hi - lo) * s)
    })
}

/// PSNR in dB for signals in `[0, 1]`, over all three channels.
pub fn psnr<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    let mut se = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        for (&x, &y) in pa.data().iter().zip(pb.data()) {
            let d = x.as_f64() - y.as_f64();
            se += d * d;
        }
    }
    let mse = se / (3 * a.red().len()) as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::min_of_channels;

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        let a = fundus::<f64>(48, 64, 3).unwrap();
        let b = fundus::<f64>(48, 64, 3).unwrap();
        assert_eq!(a.clean, b.clean);
        assert_ne!(a.clean, fundus::<f64>(48, 64, 4).unwrap().clean);
        for p in a.clean.planes() {
            assert!(p.min_value() >= 0.0 && p.max_value() <= 1.0);
        }
        assert!(a.cdr > 0.0 && a.cdr < 1.0);
        assert!(fundus::<f64>(8, 64, 1).is_err());
    }

    #[test]
    fn dark_channel_is_low_away_from_the_disc() {
        let s = fundus::<f64>(96, 96, 11).unwrap();
        let minc = min_of_channels(&s.clean);
        let mut far = Vec::new();
        for r in 0..96 {
            for c in 0..96 {
                let (dy, dx) = (r as f64 + 0.5 - s.disc_center.0, c as f64 + 0.5 - s.disc_center.1);
                if (dy * dy + dx * dx).sqrt() > s.disc_radius + 3.0 {
                    far.push(minc[(r, c)]);
                }
            }
        }
        assert!(far.iter().all(|&v| v < 0.08));
    }

    #[test]
    fn clouding_endpoints() {
        let s = fundus::<f64>(20, 20, 1).unwrap();
        let light = LensLight::new(0.9, 0.8, 0.7).unwrap();
        let clear = cloud(&s.clean, &light, &Plane::filled(20, 20, 1.0).unwrap()).unwrap();
        assert_eq!(clear, s.clean);
        let veiled = cloud(&s.clean, &light, &Plane::filled(20, 20, 0.0).unwrap()).unwrap();
        assert!(veiled.red().data().iter().all(|&v| (v - 0.9).abs() < 1e-15));
        assert!(cloud(&s.clean, &light, &Plane::filled(2, 20, 0.5).unwrap()).is_err());
    }

    #[test]
    fn transmission_stays_in_range() {
        let t = transmission::<f64>(30, 40, 0.4, 0.9, 2).unwrap();
        assert!(t.min_value() >= 0.4 && t.max_value() <= 0.9);
        assert!(t.max_value() - t.min_value() > 0.05);
        assert!(transmission::<f64>(4, 4, 0.0, 0.5, 0).is_err());
    }

    #[test]
    fn psnr_cases() {
        let a = RgbImage::gray(Plane::filled(2, 2, 0.5).unwrap());
        let b = RgbImage::gray(Plane::filled(2, 2, 0.6).unwrap());
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }
}
