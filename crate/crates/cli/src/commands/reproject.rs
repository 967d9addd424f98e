use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use lfkit_core::config::{emit_config, CameraEntry, LightfieldConfig};
use lfkit_core::image_io::{read_exr, tonemap, write_exr_to, write_png_to, PlenImage, ToneMapParams};
use lfkit_core::lens::LensModel;
use lfkit_core::reproject::{output_resolution, reproject, ReprojectParams};
use rayon::prelude::*;

use crate::args::ReprojectArgs;
use crate::error::CliError;
use crate::io::{config_dir, read_config, with_pool, write_atomic};

struct Job {
    params: ReprojectParams,
    tone: Option<ToneMapParams>,
    input_dir: PathBuf,
    output_dir: PathBuf,
}

impl Job {
    fn extension(&self) -> &'static str {
        if self.tone.is_some() {
            "png"
        } else {
            "exr"
        }
    }
}

pub fn dst_lens(args: &ReprojectArgs) -> LensModel {
    if let Some((focal, sensor)) = args.rectilinear {
        LensModel::rectilinear_square(focal, sensor)
    } else if let Some(deg) = args.fisheye {
        LensModel::fisheye_degrees(deg)
    } else {
        LensModel::full_panorama()
    }
}

/// `image` with its extension swapped, always using `/` separators.
pub fn output_path(image: &str, extension: &str) -> String {
    let path = Path::new(image).with_extension(extension);
    let parts: Vec<String> = path
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    parts.join("/")
}

fn load_source(cam: &CameraEntry, input_dir: &Path) -> Result<PlenImage, CliError> {
    let mut img = read_exr(input_dir.join(&cam.image))?;
    if img.resolution() != cam.resolution() {
        return Err(CliError::Validation(format!(
            "image is {}x{} but the config says {}x{}",
            img.width(),
            img.height(),
            cam.resolution[0],
            cam.resolution[1]
        )));
    }
    if let (None, Some(depth_path)) = (&img.depth, &cam.depth) {
        let depth_img = read_exr(input_dir.join(depth_path))?;
        if depth_img.resolution() != img.resolution() {
            return Err(CliError::Validation(format!(
                "depth image `{depth_path}` size differs from the color image"
            )));
        }
        let depth = depth_img
            .depth
            .ok_or_else(|| CliError::Validation(format!("`{depth_path}` has no Z/depth channel")))?;
        img = img.with_depth(depth)?;
    }
    Ok(img)
}

fn process(cam: &CameraEntry, job: &Job) -> Result<CameraEntry, CliError> {
    let src = load_source(cam, &job.input_dir)?;
    let out = reproject(&src, &cam.lens, &job.params).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut bytes = Vec::new();
    match &job.tone {
        Some(tone) => write_png_to(&tonemap(&out, tone), &mut bytes)?,
        None => write_exr_to(&out, Cursor::new(&mut bytes))?,
    }
    let rel = output_path(&cam.image, job.extension());
    write_atomic(&job.output_dir.join(&rel), &bytes)?;

    let res = output_resolution(cam.resolution(), job.params.scale);
    Ok(CameraEntry {
        lens: job.params.dst_lens,
        resolution: [res.width, res.height],
        image: rel,
        depth: None,
        ..cam.clone()
    })
}

pub fn run(args: &ReprojectArgs) -> Result<(), CliError> {
    let params = ReprojectParams::new(dst_lens(args))
        .with_scale(args.scale)
        .with_samples(args.samples)
        .with_filter(args.filter);
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let tone = if args.png {
        let t = ToneMapParams::new(args.exposure.unwrap_or(0.0), args.reinhard).map_err(CliError::Usage)?;
        Some(t)
    } else {
        None
    };

    let cfg = read_config(&args.input_cfg)?;
    let job = Job {
        params,
        tone,
        input_dir: args.input_dir.clone().unwrap_or_else(|| config_dir(&args.input_cfg)),
        output_dir: args.output_dir.clone(),
    };

    let done = AtomicUsize::new(0);
    let total = cfg.cameras.len();
    let results: Vec<Result<CameraEntry, CliError>> = with_pool(args.parallel, || {
        cfg.cameras
            .par_iter()
            .with_max_len(1)
            .map(|cam| {
                let r = process(cam, &job).map_err(|e| e.context(format!("camera `{}`", cam.name)));
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!("[{n}/{total}] {}", cam.name);
                r
            })
            .collect()
    })?;

    let mut cameras = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(c) => cameras.push(c),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        for e in &failures {
            eprintln!("error: {e}");
        }
        let code = if failures.iter().any(|e| matches!(e, CliError::Io(_))) {
            CliError::Io(format!("{} of {total} cameras failed", failures.len()))
        } else {
            CliError::Validation(format!("{} of {total} cameras failed", failures.len()))
        };
        return Err(code);
    }

    let out_cfg = LightfieldConfig { cameras, ..cfg };
    write_atomic(&args.output_cfg, &emit_config(&out_cfg))
}
