//! Corpus generation and reference-set building.

use std::fs;
use std::path::Path;

use sgrif::decloud::LensLight;
use sgrif::raster::{load_image, save_image, RgbImage};
use sgrif::sdc::{build_feature, ReferenceSet};
use sgrif::synth::{cloud, fundus, transmission};
use sgrif::Rgb64;

use crate::corpus::{list_images, read_cdr_table};
use crate::error::CliError;
use crate::report::num;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub count: usize,
    pub size: usize,
    pub seed: u64,
    /// Transmission range of the veil.
    pub t_range: (f64, f64),
    pub light: [f64; 3],
    /// Write square crops around the optic disc instead of whole images.
    pub crop: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            count: 3,
            size: 256,
            seed: 0,
            t_range: (0.4, 0.8),
            light: [0.9, 0.88, 0.85],
            crop: false,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `count` clouded scenes to `out`, their clean versions to
/// `out/clean/` and the disc CDRs to `out/cdrs.csv`.
pub fn synth_corpus(out: &Path, opts: &SynthOptions) -> Result<(), CliError> {
    let clean_dir = out.join("clean");
    fs::create_dir_all(&clean_dir).map_err(io_err(&clean_dir))?;
    let light = LensLight::new(opts.light[0], opts.light[1], opts.light[2])?;
    let mut table = String::from("id,cdr\n");
    for k in 0..opts.count {
        let seed = opts.seed.wrapping_add(k as u64);
        let id = format!("fundus_{k:03}");
        let scene = fundus::<f64>(opts.size, opts.size, seed)?;
        let t = transmission(opts.size, opts.size, opts.t_range.0, opts.t_range.1, seed)?;
        let mut clouded = cloud(&scene.clean, &light, &t)?;
        let mut clean = scene.clean;
        if opts.crop {
            let (r0, c0, side) = disc_window(opts.size, scene.disc_center, scene.disc_radius);
            clouded = crop(&clouded, r0, c0, side);
            clean = crop(&clean, r0, c0, side);
        }
        save_image(&clouded, out.join(format!("{id}.png")))?;
        save_image(&clean, clean_dir.join(format!("{id}.png")))?;
        table.push_str(&format!("{id},{}\n", num(scene.cdr)));
    }
    let path = out.join("cdrs.csv");
    fs::write(&path, table).map_err(io_err(&path))
}

/// Square window of side `3 r` (at least 32) centred on the disc, shifted to
/// stay inside the image.
fn disc_window(size: usize, center: (f64, f64), radius: f64) -> (usize, usize, usize) {
    let side = ((3.0 * radius).round() as usize).max(32).min(size);
    let start = |c: f64| ((c - side as f64 / 2.0).round().max(0.0) as usize).min(size - side);
    (start(center.0), start(center.1), side)
}

fn crop(img: &Rgb64, r0: usize, c0: usize, side: usize) -> Rgb64 {
    RgbImage::from_fn(side, side, |r, c| img.pixel(r0 + r, c0 + c)).expect("crop inside image")
}

/// Builds a reference set from every image in `input` that has an entry in
/// the `truth` table, and saves it to `out`.
pub fn build_references(input: &Path, truth: &Path, side: usize, out: &Path) -> Result<usize, CliError> {
    let table = read_cdr_table(truth)?;
    let (mut ids, mut features, mut cdrs) = (Vec::new(), Vec::new(), Vec::new());
    for entry in list_images(input)? {
        let Some(&cdr) = table.get(&entry.id) else {
            log::warn!("{}: no CDR in {}, skipped", entry.id, truth.display());
            continue;
        };
        let img: Rgb64 = load_image(&entry.path)?;
        features.push(build_feature(&img, side)?);
        ids.push(entry.id);
        cdrs.push(cdr);
    }
    let n = ids.len();
    ReferenceSet::new(ids, features, cdrs)?.save(out)?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_window_stays_inside() {
        assert_eq!(disc_window(100, (5.0, 95.0), 10.0), (0, 68, 32));
        assert_eq!(disc_window(100, (50.0, 50.0), 20.0), (20, 20, 60));
        assert_eq!(disc_window(20, (10.0, 10.0), 3.0), (0, 0, 20));
    }
}
