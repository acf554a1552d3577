//! Raster data model shared by the filters, metrics and file I/O.

mod io;
mod mask;
mod plane;
mod rgb;

pub use io::{load_image, save_image};
pub use mask::PixelMask;
pub use plane::Plane;
pub use rgb::{min_of_channels, Channel, RgbImage};
