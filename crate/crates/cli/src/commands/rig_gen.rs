use lfkit_core::config::{emit_config, LightfieldConfig};
use lfkit_core::lens::{LensModel, Resolution, Vec3};
use lfkit_core::rig::{RigShape, RigSpec, PRESETS};

use crate::args::RigGenArgs;
use crate::error::CliError;
use crate::io::write_atomic;

/// `lone-monk-cuboid` → `lone_monk`.
fn preset_scene(preset: &str) -> String {
    let base = preset.rsplit_once('-').map_or(preset, |(b, _)| b);
    base.replace('-', "_")
}

pub fn spec_from_args(args: &RigGenArgs) -> Result<(RigSpec, String), CliError> {
    let (mut spec, scene) = if let Some(name) = &args.preset {
        let spec = RigSpec::preset(name).map_err(|_| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })?;
        (spec, preset_scene(name))
    } else if let (Some(size), Some(counts)) = (args.cuboid, args.counts) {
        (
            RigSpec::dataset_camera(RigShape::Cuboid { size, counts }),
            "scene".to_string(),
        )
    } else if let Some(diameter) = args.sphere {
        let shape = RigShape::Sphere {
            diameter,
            subdivisions: args.subdiv,
        };
        (RigSpec::dataset_camera(shape), "scene".to_string())
    } else {
        return Err(CliError::Usage(
            "one of --preset, --cuboid or --sphere is required".into(),
        ));
    };
    if let Some(c) = args.center {
        spec.center = Vec3::from(c);
    }
    if let Some(deg) = args.fisheye {
        spec.lens = LensModel::fisheye_degrees(deg);
    }
    if let Some((w, h)) = args.resolution {
        spec.resolution = Resolution::new(w, h);
    }
    let scene = args.scene_name.clone().unwrap_or(scene);
    Ok((spec, scene))
}

pub fn run(args: &RigGenArgs) -> Result<(), CliError> {
    let (spec, scene) = spec_from_args(args)?;
    let layout = spec.generate().map_err(|e| CliError::Validation(e.to_string()))?;
    let cfg = LightfieldConfig::from_layout(&scene, &layout);
    write_atomic(&args.output, &emit_config(&cfg))?;
    eprintln!("wrote {} cameras to {}", layout.len(), args.output.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_names_from_presets() {
        assert_eq!(preset_scene("lone-monk-cuboid"), "lone_monk");
        assert_eq!(preset_scene("barbershop-sphere"), "barbershop");
        assert_eq!(preset_scene("zen-garden-cuboid"), "zen_garden");
    }
}
