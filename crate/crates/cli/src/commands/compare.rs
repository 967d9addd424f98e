use lfkit_core::image_io::{read_exr, PlenImage};
use lfkit_core::reproject::{central_region_mask, compare_images, ImageMetrics};

use crate::args::CompareArgs;
use crate::error::CliError;

fn expose(img: &mut PlenImage, stops: f64) {
    let k = 2f64.powf(stops);
    for px in &mut img.rgb {
        *px = px.map(|c| (c as f64 * k) as f32);
    }
}

pub fn metrics(args: &CompareArgs) -> Result<ImageMetrics, CliError> {
    let mut a = read_exr(&args.a)?;
    let mut b = read_exr(&args.b)?;
    if args.exposure != 0.0 {
        expose(&mut a, args.exposure);
        expose(&mut b, args.exposure);
    }
    let mask = args.central.map(|f| central_region_mask(a.resolution(), f));
    compare_images(&a, &b, mask.as_deref()).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    let m = metrics(args)?;
    // serde_json writes the infinite PSNR of identical images as null
    let json = serde_json::to_string_pretty(&m).expect("metrics serialize");
    println!("{json}");
    Ok(())
}
