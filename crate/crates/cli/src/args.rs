use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use lfkit_core::reproject::ColorFilter;

#[derive(Debug, Parser)]
#[command(name = "lfkit", version, about = "Light field rig and lens reprojection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproject every camera image of a dataset to a new lens.
    Reproject(ReprojectArgs),
    /// Generate a cuboid or spherical rig configuration.
    RigGen(RigGenArgs),
    /// Convert a rectilinear dataset config to instant-ngp transforms.
    NerfConvert(NerfConvertArgs),
    /// Render the analytic test scene for every camera of a config.
    OracleRender(OracleRenderArgs),
    /// Compare two EXR images and print metrics as JSON.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("lens").required(true).args(["rectilinear", "fisheye", "equirect"])))]
pub struct ReprojectArgs {
    /// Number of images processed concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub parallel: u32,
    /// Rectilinear lens: focal length and square sensor size in millimeters.
    #[arg(long, value_name = "F,S", value_parser = parse_rectilinear)]
    pub rectilinear: Option<(f64, f64)>,
    /// Equidistant fisheye lens with the given field of view in degrees.
    #[arg(long, value_name = "DEG", value_parser = parse_positive)]
    pub fisheye: Option<f64>,
    /// Full 360°×180° equirectangular panorama.
    #[arg(long)]
    pub equirect: bool,
    /// Output size relative to the input.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub scale: f64,
    /// Supersampling: an S×S grid of rays per output pixel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub samples: u32,
    /// Write tone-mapped 8-bit PNG (no depth) instead of EXR.
    #[arg(long)]
    pub png: bool,
    /// Exposure adjustment in stops, applied before tone mapping.
    #[arg(long, requires = "png", allow_negative_numbers = true)]
    pub exposure: Option<f64>,
    /// Extended Reinhard white point (luminance mapped to 1.0).
    #[arg(long, value_name = "W", requires = "png", value_parser = parse_positive)]
    pub reinhard: Option<f64>,
    #[arg(long, default_value = "bilinear")]
    pub filter: ColorFilter,
    /// Directory the config's image paths are relative to [default: the
    /// config's directory].
    #[arg(long)]
    pub input_dir: Option<PathBuf>,
    #[arg(long)]
    pub input_cfg: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub output_cfg: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("shape").required(true).args(["preset", "cuboid", "sphere"])))]
pub struct RigGenArgs {
    /// One of the built-in dataset rigs, e.g. `lone-monk-cuboid`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Cuboid dimensions in meters.
    #[arg(long, value_name = "LX,LY,LZ", value_parser = parse_vec3, requires = "counts")]
    pub cuboid: Option<[f64; 3]>,
    /// Cameras per cuboid axis, endpoints included.
    #[arg(long, value_name = "NX,NY,NZ", value_parser = parse_counts, requires = "cuboid")]
    pub counts: Option<[u32; 3]>,
    /// Sphere diameter in meters.
    #[arg(long, value_name = "D", value_parser = parse_positive)]
    pub sphere: Option<f64>,
    /// Icosphere subdivision level for `--sphere`.
    #[arg(long, default_value_t = 3, requires = "sphere")]
    pub subdiv: u32,
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_vec3, allow_hyphen_values = true)]
    pub center: Option<[f64; 3]>,
    /// Fisheye field of view in degrees.
    #[arg(long, value_name = "DEG", value_parser = parse_positive)]
    pub fisheye: Option<f64>,
    /// Image size, `N` or `WxH`.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<(u32, u32)>,
    #[arg(long)]
    pub scene_name: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct NerfConvertArgs {
    /// Scene whose default scale and offset are used.
    #[arg(long)]
    pub scene: Option<String>,
    #[arg(long)]
    pub dataset_config: PathBuf,
    #[arg(long)]
    pub output_transforms: PathBuf,
    #[arg(long, value_parser = parse_positive)]
    pub scale: Option<f64>,
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_vec3, allow_hyphen_values = true)]
    pub offset: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct OracleRenderArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub samples: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub parallel: u32,
    /// Leave out the bright HDR wall.
    #[arg(long)]
    pub no_wall: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Restrict to the centered box covering this fraction of each axis.
    #[arg(long, value_parser = parse_fraction)]
    pub central: Option<f64>,
    /// Exposure in stops applied to both images before comparing.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub exposure: f64,
}

fn parse_list<T: std::str::FromStr, const N: usize>(s: &str) -> Result<[T; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated values, got `{s}`"));
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| format!("`{p}` is not a valid number"))?);
    }
    out.try_into().map_err(|_| "length checked above".to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = parse_positive(s)?;
    if v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn parse_rectilinear(s: &str) -> Result<(f64, f64), String> {
    let [f, sensor] = parse_list::<f64, 2>(s)?;
    if f > 0.0 && sensor > 0.0 && f.is_finite() && sensor.is_finite() {
        Ok((f, sensor))
    } else {
        Err(format!("focal and sensor must be positive, got `{s}`"))
    }
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list::<f64, 3>(s)?;
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(format!("values must be finite, got `{s}`"))
    }
}

fn parse_counts(s: &str) -> Result<[u32; 3], String> {
    parse_list::<u32, 3>(s)
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w, h),
        None => (s, s),
    };
    let w: u32 = w.trim().parse().map_err(|_| format!("bad resolution `{s}`"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad resolution `{s}`"))?;
    if w == 0 || h == 0 {
        return Err(format!("resolution must be at least 1x1, got `{s}`"));
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("lfkit").chain(args.iter().copied()))
    }

    const IO: [&str; 6] = [
        "--input-cfg",
        "in.json",
        "--output-dir",
        "out",
        "--output-cfg",
        "out.json",
    ];

    #[test]
    fn full_flag_set_parses() {
        let mut args = vec![
            "reproject",
            "--parallel",
            "4",
            "--rectilinear",
            "18,36",
            "--scale",
            "0.125",
        ];
        args.extend(["--samples", "8", "--png", "--exposure", "-1", "--reinhard", "5"]);
        args.extend(IO);
        let Command::Reproject(r) = parse(&args).unwrap().command else {
            panic!()
        };
        assert_eq!(r.parallel, 4);
        assert_eq!(r.rectilinear, Some((18.0, 36.0)));
        assert_eq!(r.exposure, Some(-1.0));
        assert_eq!(r.reinhard, Some(5.0));
        assert_eq!(r.filter, ColorFilter::Bilinear);
    }

    #[test]
    fn lens_flags_are_exclusive_and_required() {
        let mut both = vec!["reproject", "--rectilinear", "18,36", "--equirect"];
        both.extend(IO);
        assert!(parse(&both).is_err());
        let mut none = vec!["reproject"];
        none.extend(IO);
        assert!(parse(&none).is_err());
    }

    #[test]
    fn tone_flags_need_png() {
        let mut args = vec!["reproject", "--fisheye", "180", "--exposure", "-1"];
        args.extend(IO);
        assert!(parse(&args).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        for bad in [
            ["--scale", "0"],
            ["--samples", "0"],
            ["--parallel", "0"],
            ["--rectilinear", "18"],
            ["--filter", "cubic"],
        ] {
            let mut args = vec!["reproject", "--fisheye", "180"];
            args.extend(bad);
            args.extend(IO);
            assert!(parse(&args).is_err(), "{bad:?}");
        }
        assert!(parse(&["reproject", "--fisheye", "180", "--bogus"]).is_err());
    }

    #[test]
    fn rig_gen_shapes() {
        let Command::RigGen(r) = parse(&[
            "rig-gen", "--cuboid", "1,3,1", "--counts", "10,30,10", "--output", "o.json",
        ])
        .unwrap()
        .command
        else {
            panic!()
        };
        assert_eq!(r.cuboid, Some([1.0, 3.0, 1.0]));
        assert_eq!(r.counts, Some([10, 30, 10]));
        assert!(parse(&["rig-gen", "--cuboid", "1,3,1", "--output", "o.json"]).is_err());
        assert!(parse(&["rig-gen", "--preset", "x", "--sphere", "1", "--output", "o.json"]).is_err());
        let Command::RigGen(r) = parse(&[
            "rig-gen",
            "--sphere",
            "1.45",
            "--center",
            "-1,0,2",
            "--resolution",
            "64x32",
            "--output",
            "o",
        ])
        .unwrap()
        .command
        else {
            panic!()
        };
        assert_eq!(r.center, Some([-1.0, 0.0, 2.0]));
        assert_eq!(r.resolution, Some((64, 32)));
        assert_eq!(r.subdiv, 3);
    }

    #[test]
    fn list_parsers() {
        assert_eq!(parse_vec3(" 1, -2.5 ,3"), Ok([1.0, -2.5, 3.0]));
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,2,nan").is_err());
        assert_eq!(parse_resolution("256"), Ok((256, 256)));
        assert!(parse_resolution("0x4").is_err());
        assert!(parse_fraction("1.5").is_err());
    }
}
