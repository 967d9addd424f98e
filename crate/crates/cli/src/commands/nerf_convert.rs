use lfkit_core::config::{scene_defaults, to_nerf_transforms, NerfError};
use lfkit_core::lens::Vec3;

use crate::args::NerfConvertArgs;
use crate::error::CliError;
use crate::io::{read_config, write_atomic};

pub fn run(args: &NerfConvertArgs) -> Result<(), CliError> {
    let cfg = read_config(&args.dataset_config)?;
    let (mut scale, mut offset) = match &args.scene {
        Some(scene) => scene_defaults(scene, &cfg).map_err(|e| match e {
            NerfError::UnknownScene(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        })?,
        None => (1.0, Vec3::zeros()),
    };
    if let Some(s) = args.scale {
        scale = s;
    }
    if let Some(o) = args.offset {
        offset = Vec3::from(o);
    }
    let transforms = to_nerf_transforms(&cfg, scale, offset).map_err(|e| CliError::Validation(e.to_string()))?;
    write_atomic(&args.output_transforms, &transforms.to_json())?;
    eprintln!(
        "wrote {} frames to {}",
        transforms.frames.len(),
        args.output_transforms.display()
    );
    Ok(())
}
