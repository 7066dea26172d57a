use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use opnav_core::ephemeris::{synthetic_table, EphemerisTable};
use opnav_core::geometry::PointingAngles;
use opnav_core::harness::campaign::{report_text, write_outputs};
use opnav_core::harness::{run_campaign, synthetic_sky, CampaignOptions, Config};
use opnav_core::nalgebra::{Vector2, Vector3};
use opnav_core::pipeline::process_image;
use opnav_core::renderer::{render, ExtraSource, Image, PlanetSpec, SceneSpec};
use opnav_core::star_catalog::{load_catalog, write_catalog, OnboardCatalog, StarCatalog};

#[derive(Parser)]
#[command(
    name = "opnav",
    version,
    about = "Star identification, attitude and beacon detection for deep-space images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic star catalog in the raw text format.
    SynthSky {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build the onboard pair database and k-vector from a raw catalog.
    BuildCatalog {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5.5)]
        mlim: f64,
        #[arg(long, default_value_t = 35.0)]
        gamma_max_deg: f64,
    },
    /// Render a scene file to a PGM image and a ground-truth sidecar.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the onboard pipeline on an image.
    Process {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Planet table for beacon detection.
        #[arg(long, requires = "sc_position")]
        ephemeris: Option<PathBuf>,
        /// Onboard spacecraft position estimate, `x,y,z` in km.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        sc_position: Option<Vector3<f64>>,
        /// Position uncertainty used for the beacon gate (km).
        #[arg(long, default_value_t = 1e4)]
        sigma_r: f64,
    },
    /// Monte Carlo campaign over random poses.
    Montecarlo {
        #[arg(long)]
        n: usize,
        /// Comma-separated position uncertainties in km.
        #[arg(long, value_delimiter = ',', default_value = "1e4,1e5,1e6,1e7")]
        sigma_r: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Raw star catalog; a synthetic sky is generated when omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Count only scenarios with a planet in frame towards `n`.
        #[arg(long)]
        present_only: bool,
    },
    /// Print every configuration key with its default value.
    PrintConfig,
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{s:?}: {e}"))?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("{s:?}: expected x,y,z")),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn sky(config: &Config, catalog: Option<&Path>) -> Result<StarCatalog> {
    match catalog {
        Some(p) => load_catalog(p).with_context(|| format!("catalog {}", p.display())),
        None => Ok(synthetic_sky(
            config.sky_seed,
            config.sky_stars_below_6,
            config.render_mag_limit,
        )),
    }
}

/// Scene file: `key = value` lines.
///
/// ```text
/// catalog = stars.txt          # optional, synthetic sky otherwise
/// ephemeris = planets.txt      # or `synthetic`; omit for no planets
/// alpha_deg = 30
/// delta_deg = 5
/// phi_deg = 0
/// sc_position_km = 1e8,2e8,0
/// seed = 7
/// extra = 512.3,400.8,2.5      # x_px,y_px,magnitude; repeatable
/// ```
struct SceneFile {
    catalog: Option<PathBuf>,
    ephemeris: Option<String>,
    angles: [f64; 3],
    sc_position: Vector3<f64>,
    seed: u64,
    extra: Vec<ExtraSource>,
}

fn parse_scene(path: &Path) -> Result<SceneFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("scene {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut scene = SceneFile {
        catalog: None,
        ephemeris: None,
        angles: [0.0; 3],
        sc_position: Vector3::zeros(),
        seed: 0,
        extra: Vec::new(),
    };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ctx = || format!("{}:{}", path.display(), n + 1);
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}: expected key = value", ctx());
        };
        let value = value.trim();
        let num = |v: &str| v.parse::<f64>().with_context(ctx);
        match key.trim() {
            "catalog" => scene.catalog = Some(base.join(value)),
            "ephemeris" if value == "synthetic" => scene.ephemeris = Some(value.to_string()),
            "ephemeris" => scene.ephemeris = Some(base.join(value).to_string_lossy().into_owned()),
            "alpha_deg" => scene.angles[0] = num(value)?,
            "delta_deg" => scene.angles[1] = num(value)?,
            "phi_deg" => scene.angles[2] = num(value)?,
            "sc_position_km" => scene.sc_position = parse_vec3(value).map_err(anyhow::Error::msg).with_context(ctx)?,
            "seed" => scene.seed = value.parse().with_context(ctx)?,
            "extra" => {
                let v = parse_vec3(value).map_err(anyhow::Error::msg).with_context(ctx)?;
                scene.extra.push(ExtraSource {
                    id: format!("extra{}", scene.extra.len()),
                    pixel: Vector2::new(v.x, v.y),
                    magnitude: v.z,
                });
            }
            other => bail!("{}: unknown key {other:?}", ctx()),
        }
    }
    Ok(scene)
}

fn cmd_render(scene_path: &Path, out: &Path, truth_path: &Path, config: &Config) -> Result<()> {
    let scene = parse_scene(scene_path)?;
    let stars = sky(config, scene.catalog.as_deref())?;
    let ephemeris = match scene.ephemeris.as_deref() {
        None => EphemerisTable::default(),
        Some("synthetic") => synthetic_table(config.ephemeris_days, "scene", &scene.sc_position),
        Some(p) => EphemerisTable::load(p).with_context(|| format!("ephemeris {p}"))?,
    };
    let spec = SceneSpec {
        camera: config.camera.clone(),
        attitude: PointingAngles::new(
            scene.angles[0].to_radians(),
            scene.angles[1].to_radians(),
            scene.angles[2].to_radians(),
        ),
        sc_position_km: scene.sc_position,
        planets: ephemeris
            .entries
            .iter()
            .map(|e| PlanetSpec {
                name: e.name.clone(),
                position_km: e.position_km,
                magnitude: e.magnitude,
            })
            .collect(),
        extra_sources: scene.extra,
        stars: &stars,
        render_mag_limit: config.render_mag_limit,
        photometry: config.photometry.clone(),
        noise: config.noise.clone(),
        seed: scene.seed,
    };
    let (image, truth) = render(&spec);
    image
        .save_pgm(out)
        .with_context(|| format!("writing {}", out.display()))?;
    std::fs::write(truth_path, truth.to_text()).with_context(|| format!("writing {}", truth_path.display()))?;
    let visible = truth.objects.iter().filter(|o| o.visible).count();
    println!(
        "rendered {} objects ({visible} visible) to {}",
        truth.objects.len(),
        out.display()
    );
    Ok(())
}

fn cmd_process(
    image_path: &Path,
    db_path: &Path,
    config: &Config,
    ephemeris: Option<&Path>,
    sc_position: Option<Vector3<f64>>,
    sigma_r: f64,
) -> Result<()> {
    let image = Image::load_pgm(image_path).with_context(|| format!("image {}", image_path.display()))?;
    let db = OnboardCatalog::load(db_path).with_context(|| format!("database {}", db_path.display()))?;
    let table = match ephemeris {
        Some(p) => EphemerisTable::load(p).with_context(|| format!("ephemeris {}", p.display()))?,
        None => EphemerisTable::default(),
    };
    let pipeline = config.pipeline(sigma_r, 0);
    let out = process_image(&image, &db, &table, &sc_position.unwrap_or_default(), &pipeline);
    let est = match &out.attitude {
        Ok(est) => est,
        Err(e) => bail!("{e}"),
    };
    let id = &est.identification;
    println!("threshold,{:.6}", id.threshold);
    println!("iterations,{}", id.result.iterations_used);
    println!("centroids,{}", id.centroids.len());
    for (k, star) in est.inlier_stars() {
        let c = &id.centroids[k];
        println!("match,{k},{star},{:.4},{:.4}", c.x, c.y);
    }
    for &s in &est.spikes {
        let c = &id.centroids[s];
        println!("spike,{s},{:.4},{:.4}", c.x, c.y);
    }
    let q = est.solution.quaternion.as_array();
    println!("quaternion,{:.12},{:.12},{:.12},{:.12}", q[0], q[1], q[2], q[3]);
    for b in &out.beacons {
        match &b.prediction {
            None => println!("beacon,{},behind-camera", b.name),
            Some(p) => {
                let e = p.ellipse;
                let status = match (b.expected_in_frame, b.detected_px) {
                    (false, _) => "outside-frame".to_string(),
                    (true, Some(d)) => format!("detected,{:.4},{:.4}", d.x, d.y),
                    (true, None) => "not-detected".to_string(),
                };
                println!(
                    "beacon,{},{:.4},{:.4},{:.4},{:.4},{:.6},{status}",
                    b.name, p.expected_px.x, p.expected_px.y, e.a, e.b, e.psi
                );
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthSky { out, config } => {
            let config = load_config(config.as_deref())?;
            let s = sky(&config, None)?;
            write_catalog(&s, &out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} stars to {}", s.len(), out.display());
        }
        Command::BuildCatalog {
            input,
            out,
            mlim,
            gamma_max_deg,
        } => {
            let raw = load_catalog(&input).with_context(|| format!("catalog {}", input.display()))?;
            let db = OnboardCatalog::build(&raw, mlim, gamma_max_deg.to_radians())?;
            db.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{} stars, {} pairs written to {}",
                db.stars.len(),
                db.pairs.len(),
                out.display()
            );
        }
        Command::Render {
            scene,
            out,
            truth,
            config,
        } => cmd_render(&scene, &out, &truth, &load_config(config.as_deref())?)?,
        Command::Process {
            image,
            db,
            config,
            ephemeris,
            sc_position,
            sigma_r,
        } => cmd_process(
            &image,
            &db,
            &load_config(config.as_deref())?,
            ephemeris.as_deref(),
            sc_position,
            sigma_r,
        )?,
        Command::Montecarlo {
            n,
            sigma_r,
            seed,
            out,
            config,
            catalog,
            present_only,
        } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let config = load_config(config.as_deref())?;
            let stars = sky(&config, catalog.as_deref())?;
            let onboard = OnboardCatalog::build(&stars, config.m_lim, config.gamma_max())?;
            let options = CampaignOptions {
                n,
                sigma_r_km: sigma_r,
                master_seed: seed,
                present_only,
            };
            let campaign = run_campaign(&config, &onboard, &stars, &options);
            write_outputs(&campaign, &config, &out).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report_text(&campaign));
        }
        Command::PrintConfig => print!("{}", Config::default().to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already quote their source, so skip repeats.
            let mut parts: Vec<String> = Vec::new();
            for cause in e.chain() {
                let msg = cause.to_string();
                if !parts.last().is_some_and(|p| p.ends_with(&msg)) {
                    parts.push(msg);
                }
            }
            eprintln!("error: {}", parts.join(": "));
            ExitCode::FAILURE
        }
    }
}
