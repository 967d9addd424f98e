use std::io::Cursor;
use std::sync::atomic::{AtomicUsize, Ordering};

use lfkit_core::image_io::write_exr_to;
use lfkit_core::oracle::{render_oracle, OracleScene};
use rayon::prelude::*;

use crate::args::OracleRenderArgs;
use crate::error::CliError;
use crate::io::{read_config, with_pool, write_atomic};

pub fn run(args: &OracleRenderArgs) -> Result<(), CliError> {
    let cfg = read_config(&args.config)?;
    let mut scene = OracleScene::default();
    if args.no_wall {
        scene.wall = None;
    }
    let interpretation = cfg.depth_interpretation();
    let done = AtomicUsize::new(0);
    let total = cfg.cameras.len();
    let results: Vec<Result<(), CliError>> = with_pool(args.parallel, || {
        cfg.cameras
            .par_iter()
            .with_max_len(1)
            .map(|cam| {
                let img = render_oracle(
                    &scene,
                    &cam.pose(),
                    &cam.lens,
                    cam.resolution(),
                    args.samples,
                    interpretation,
                );
                let mut bytes = Vec::new();
                write_exr_to(&img, Cursor::new(&mut bytes))?;
                write_atomic(&args.output_dir.join(&cam.image), &bytes)
                    .map_err(|e| e.context(format!("camera `{}`", cam.name)))?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!("[{n}/{total}] {}", cam.name);
                Ok(())
            })
            .collect()
    })?;
    let failures: Vec<CliError> = results.into_iter().filter_map(Result::err).collect();
    for e in &failures {
        eprintln!("error: {e}");
    }
    match failures.into_iter().next() {
        Some(first) => Err(first),
        None => Ok(()),
    }
}
