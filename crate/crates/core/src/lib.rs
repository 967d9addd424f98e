//! Camera rigs, lens reprojection and dataset manifests for large-volume
//! immersive light fields captured with outward-facing fisheye cameras.
//!
//! - [`lens`]: projection math for fisheye, equirectangular and rectilinear lenses
//! - [`image_io`]: HDR color + depth images, OpenEXR/PNG encoding, tone mapping
//! - [`reproject`]: lens-swap reprojection with supersampling, image metrics
//! - [`rig`]: cuboid and icosphere rigs, spacing and hull-volume statistics
//! - [`config`]: the `lightfield.json` manifest and instant-ngp conversion
//! - [`oracle`]: an analytic ray-traced scene for ground-truth checks

pub mod config;
pub mod image_io;
pub mod lens;
pub mod oracle;
pub mod reproject;
pub mod rig;

pub use config::{emit_config, parse_config, split_train_eval, LightfieldConfig};
pub use image_io::{PlenImage, ToneMapParams};
pub use lens::{CameraPose, LensModel, PixelCoord, Resolution, Vec3};
pub use reproject::{compare_images, reproject, ReprojectParams};
pub use rig::{RigLayout, RigSpec};
