//! Monte Carlo campaign: every scenario is rendered and its attitude solved
//! once; beacon detection is then repeated for each position uncertainty
//! with the same underlying position error draw.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::classify::{classify_outcome, Label, ScenarioOutcome};
use super::config::Config;
use super::scenario::{sample_scenarios, ScenarioSpec};
use crate::pipeline::{detect_beacons, estimate_attitude};
use crate::renderer::{render, GroundTruth, Image, PlanetSpec, SceneSpec};
use crate::star_catalog::{OnboardCatalog, StarCatalog};

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOptions {
    pub n: usize,
    pub sigma_r_km: Vec<f64>,
    pub master_seed: u64,
    /// Count only scenarios with a planet in frame towards `n`.
    pub present_only: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    /// One entry per sigma_r, in option order.
    pub outcomes: Vec<ScenarioOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub sigma_r_km: f64,
    pub scenarios: usize,
    pub planet_present: usize,
    pub no_attitude: usize,
    pub wrong_attitude: usize,
    /// Planet-present scenarios with an attitude solution.
    pub converged: usize,
    /// Planet-present scenarios with a correct attitude.
    pub correct: usize,
    /// Converged scenarios with a wrong or missing beacon (wrong attitudes included).
    pub beacon_failures: usize,
    /// Correct-attitude scenarios with a wrong or missing beacon.
    pub beacon_failures_correct_attitude: usize,
    /// RMS attitude error over all correct-attitude scenarios.
    pub sigma_err_rot_arcsec: f64,
    /// Detections within tolerance contributing to the error statistics.
    pub detections: usize,
    pub mu_err: Vector2<f64>,
    pub p_err: Matrix2<f64>,
    pub label_counts: BTreeMap<Label, usize>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl SigmaReport {
    pub fn pct_wrong_attitude(&self) -> f64 {
        pct(self.wrong_attitude, self.planet_present)
    }

    pub fn pct_no_attitude(&self) -> f64 {
        pct(self.no_attitude, self.planet_present)
    }

    pub fn pct_attitude_success(&self) -> f64 {
        pct(self.correct, self.planet_present)
    }

    pub fn pct_wrong_beacon(&self) -> f64 {
        pct(self.beacon_failures, self.converged)
    }

    pub fn pct_wrong_beacon_correct_attitude(&self) -> f64 {
        pct(self.beacon_failures_correct_attitude, self.converged)
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub options: CampaignOptions,
    /// Scenarios drawn from the master sequence, including skipped ones.
    pub candidates_sampled: u64,
    pub runs: Vec<ScenarioRun>,
    pub reports: Vec<SigmaReport>,
}

/// Scene description for a sampled scenario.
pub fn scene_for<'a>(spec: &ScenarioSpec, config: &Config, sky: &'a StarCatalog) -> SceneSpec<'a> {
    SceneSpec {
        camera: config.camera.clone(),
        attitude: spec.attitude,
        sc_position_km: spec.sc_position_km,
        planets: spec
            .ephemeris
            .entries
            .iter()
            .map(|e| PlanetSpec {
                name: e.name.clone(),
                position_km: e.position_km,
                magnitude: e.magnitude,
            })
            .collect(),
        extra_sources: vec![],
        stars: sky,
        render_mag_limit: config.render_mag_limit,
        photometry: config.photometry.clone(),
        noise: config.noise.clone(),
        seed: spec.render_seed,
    }
}

pub fn render_scenario(spec: &ScenarioSpec, config: &Config, sky: &StarCatalog) -> (Image, GroundTruth) {
    render(&scene_for(spec, config, sky))
}

/// Renders, solves and classifies one scenario for every sigma_r.
pub fn run_scenario(
    spec: &ScenarioSpec,
    config: &Config,
    onboard: &OnboardCatalog,
    sky: &StarCatalog,
    sigma_r_km: &[f64],
) -> Vec<ScenarioOutcome> {
    let (image, truth) = render_scenario(spec, config, sky);
    let estimate = estimate_attitude(&image, onboard, &config.pipeline(0.0, spec.ransac_seed)).ok();
    sigma_r_km
        .iter()
        .map(|&sigma| {
            let pipeline = config.pipeline(sigma, spec.ransac_seed);
            let beacons = estimate
                .as_ref()
                .map(|e| detect_beacons(e, &spec.ephemeris, &spec.estimated_position(sigma), &pipeline))
                .unwrap_or_default();
            classify_outcome(&truth, estimate.as_ref(), &beacons, config)
        })
        .collect()
}

pub fn run_campaign(
    config: &Config,
    onboard: &OnboardCatalog,
    sky: &StarCatalog,
    options: &CampaignOptions,
) -> Campaign {
    let specs = sample_scenarios(options.n, options.master_seed, config, options.present_only);
    let candidates_sampled = specs.last().map_or(0, |s| s.index + 1);
    let runs: Vec<ScenarioRun> = specs
        .into_par_iter()
        .map(|spec| {
            let outcomes = run_scenario(&spec, config, onboard, sky, &options.sigma_r_km);
            ScenarioRun { spec, outcomes }
        })
        .collect();
    let reports = options
        .sigma_r_km
        .iter()
        .enumerate()
        .map(|(k, &sigma)| summarize(sigma, runs.iter().map(|r| (&r.spec, &r.outcomes[k]))))
        .collect();
    Campaign {
        options: options.clone(),
        candidates_sampled,
        runs,
        reports,
    }
}

fn summarize<'a>(sigma_r_km: f64, rows: impl Iterator<Item = (&'a ScenarioSpec, &'a ScenarioOutcome)>) -> SigmaReport {
    let mut r = SigmaReport {
        sigma_r_km,
        scenarios: 0,
        planet_present: 0,
        no_attitude: 0,
        wrong_attitude: 0,
        converged: 0,
        correct: 0,
        beacon_failures: 0,
        beacon_failures_correct_attitude: 0,
        sigma_err_rot_arcsec: 0.0,
        detections: 0,
        mu_err: Vector2::zeros(),
        p_err: Matrix2::zeros(),
        label_counts: Label::ALL.iter().map(|&l| (l, 0)).collect(),
    };
    let mut rot_sq = 0.0;
    let mut rot_n = 0usize;
    let mut errors: Vec<Vector2<f64>> = Vec::new();
    for (spec, o) in rows {
        r.scenarios += 1;
        *r.label_counts.entry(o.label).or_default() += 1;
        if o.attitude_correct() {
            if let Some(e) = o.attitude_error_arcsec {
                rot_sq += e * e;
                rot_n += 1;
            }
            errors.extend(
                o.planets
                    .iter()
                    .filter(|p| p.label == Label::Detected)
                    .filter_map(|p| p.error_px),
            );
        }
        if !spec.planet_present {
            continue;
        }
        r.planet_present += 1;
        match o.label {
            Label::AttitudeNone => r.no_attitude += 1,
            Label::AttitudeWrong => {
                r.wrong_attitude += 1;
                r.converged += 1;
                r.beacon_failures += 1;
            }
            _ => {
                r.converged += 1;
                r.correct += 1;
                if o.beacon_failure {
                    r.beacon_failures += 1;
                    r.beacon_failures_correct_attitude += 1;
                }
            }
        }
    }
    if rot_n > 0 {
        r.sigma_err_rot_arcsec = (rot_sq / rot_n as f64).sqrt();
    }
    r.detections = errors.len();
    if !errors.is_empty() {
        let n = errors.len() as f64;
        r.mu_err = errors.iter().sum::<Vector2<f64>>() / n;
        if errors.len() > 1 {
            r.p_err = errors
                .iter()
                .map(|e| (e - r.mu_err) * (e - r.mu_err).transpose())
                .sum::<Matrix2<f64>>()
                / (n - 1.0);
        }
    }
    r
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub const CSV_HEADER: &str =
    "sigma_r_km,scenario,planet_present,label,beacon_failure,att_error_arcsec,pointing_error_arcsec,\
iterations,n_centroids,n_matches,n_inliers,planet,planet_label,visible,peak_dn,true_x,true_y,\
a_px,b_px,psi_rad,expected_x,expected_y,detected_x,detected_y,err_x,err_y";

/// One row per (sigma_r, scenario, relevant planet); scenarios without a
/// relevant planet get a single row with empty planet columns.
pub fn scenarios_csv(campaign: &Campaign, config: &Config) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (k, &sigma) in campaign.options.sigma_r_km.iter().enumerate() {
        for run in &campaign.runs {
            let o = &run.outcomes[k];
            let prefix = format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                sigma,
                run.spec.index,
                u8::from(run.spec.planet_present),
                o.label.as_str(),
                u8::from(o.beacon_failure),
                opt(o.attitude_error_arcsec),
                opt(o.pointing_error_arcsec),
                o.iterations,
                o.n_centroids,
                o.n_matches,
                o.n_inliers
            );
            let relevant: Vec<_> = o.planets.iter().filter(|p| p.is_relevant(config)).collect();
            if relevant.is_empty() {
                let _ = writeln!(out, "{prefix}{}", ",".repeat(15));
            }
            for p in relevant {
                let _ = writeln!(
                    out,
                    "{prefix},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    p.name,
                    p.label.as_str(),
                    u8::from(p.visible),
                    p.peak_dn,
                    opt(p.true_px.map(|v| v.x)),
                    opt(p.true_px.map(|v| v.y)),
                    opt(p.ellipse.map(|e| e.a)),
                    opt(p.ellipse.map(|e| e.b)),
                    opt(p.ellipse.map(|e| e.psi)),
                    opt(p.expected_px.map(|v| v.x)),
                    opt(p.expected_px.map(|v| v.y)),
                    opt(p.detected_px.map(|v| v.x)),
                    opt(p.detected_px.map(|v| v.y)),
                    opt(p.error_px.map(|v| v.x)),
                    opt(p.error_px.map(|v| v.y)),
                );
            }
        }
    }
    out
}

/// 2-D histogram of the projection errors of successful detections.
pub fn pdf_errors_csv(campaign: &Campaign, config: &Config) -> String {
    let bins = config.histogram_bins;
    let hw = config.histogram_half_width_px;
    let width = 2.0 * hw / bins as f64;
    let mut out = String::from("sigma_r_km,err_x_center,err_y_center,count\n");
    for (k, &sigma) in campaign.options.sigma_r_km.iter().enumerate() {
        let mut counts = vec![0usize; bins * bins];
        for run in &campaign.runs {
            let o = &run.outcomes[k];
            if !o.attitude_correct() {
                continue;
            }
            for e in o
                .planets
                .iter()
                .filter(|p| p.label == Label::Detected)
                .filter_map(|p| p.error_px)
            {
                let ix = ((e.x + hw) / width).floor();
                let iy = ((e.y + hw) / width).floor();
                if ix >= 0.0 && iy >= 0.0 && (ix as usize) < bins && (iy as usize) < bins {
                    counts[iy as usize * bins + ix as usize] += 1;
                }
            }
        }
        for iy in 0..bins {
            for ix in 0..bins {
                let cx = -hw + (ix as f64 + 0.5) * width;
                let cy = -hw + (iy as f64 + 0.5) * width;
                let _ = writeln!(out, "{sigma},{cx:.6},{cy:.6},{}", counts[iy * bins + ix]);
            }
        }
    }
    out
}

pub fn report_text(campaign: &Campaign) -> String {
    let mut out = String::new();
    let o = &campaign.options;
    let present = campaign.runs.iter().filter(|r| r.spec.planet_present).count();
    let _ = writeln!(out, "master seed: {}", o.master_seed);
    let _ = writeln!(
        out,
        "scenarios: {} run, {} sampled, {} with a planet in frame ({:.1}% of sampled)",
        campaign.runs.len(),
        campaign.candidates_sampled,
        present,
        if o.present_only {
            pct(present, campaign.candidates_sampled as usize)
        } else {
            pct(present, campaign.runs.len())
        }
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>10} {:>12} {:>16} {:>16} {:>18} {:>22}",
        "sigma_r", "ErrRot_rms", "wrong_att_%", "no_att_%", "wrong_beacon_%", "wrong_beacon_ok_att_%"
    );
    for r in &campaign.reports {
        let _ = writeln!(
            out,
            "{:>10.0e} {:>12.2} {:>9.2} ({:>4}) {:>9.2} ({:>4}) {:>11.2} ({:>4}) {:>15.2} ({:>4})",
            r.sigma_r_km,
            r.sigma_err_rot_arcsec,
            r.pct_wrong_attitude(),
            r.wrong_attitude,
            r.pct_no_attitude(),
            r.no_attitude,
            r.pct_wrong_beacon(),
            r.beacon_failures,
            r.pct_wrong_beacon_correct_attitude(),
            r.beacon_failures_correct_attitude
        );
    }
    let _ = writeln!(
        out,
        "\npercentages of attitude outcomes are over planet-present scenarios;"
    );
    let _ = writeln!(
        out,
        "beacon percentages are over planet-present scenarios with an attitude solution.\n"
    );
    for r in &campaign.reports {
        let p = &r.p_err;
        let _ = writeln!(
            out,
            "sigma_r {:.0e} km: detections {}, mu_err [{:.4}; {:.4}] px, P_err [{:.4} {:.4}; {:.4} {:.4}] px^2, det {:.3e} px^4",
            r.sigma_r_km,
            r.detections,
            r.mu_err.x,
            r.mu_err.y,
            p[(0, 0)],
            p[(0, 1)],
            p[(1, 0)],
            p[(1, 1)],
            p.determinant()
        );
    }
    let _ = writeln!(out);
    for r in &campaign.reports {
        let counts: Vec<String> = r
            .label_counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(l, n)| format!("{}={}", l.as_str(), n))
            .collect();
        let _ = writeln!(out, "sigma_r {:.0e} km labels: {}", r.sigma_r_km, counts.join(" "));
    }
    out
}

/// Writes `scenarios.csv`, `report.txt` and `pdf_errors.csv` into `dir`.
pub fn write_outputs(campaign: &Campaign, config: &Config, dir: impl AsRef<Path>) -> std::io::Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scenarios.csv"), scenarios_csv(campaign, config))?;
    fs::write(dir.join("report.txt"), report_text(campaign))?;
    fs::write(dir.join("pdf_errors.csv"), pdf_errors_csv(campaign, config))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sky::synthetic_sky;
    use crate::renderer::NoiseModel;

    fn setup(config: &Config) -> (StarCatalog, OnboardCatalog) {
        let sky = synthetic_sky(config.sky_seed, config.sky_stars_below_6, config.render_mag_limit);
        let onboard = OnboardCatalog::build(&sky, config.m_lim, config.gamma_max()).unwrap();
        (sky, onboard)
    }

    fn options(n: usize, sigma: &[f64], present_only: bool) -> CampaignOptions {
        CampaignOptions {
            n,
            sigma_r_km: sigma.to_vec(),
            master_seed: 11,
            present_only,
        }
    }

    #[test]
    fn counts_partition_and_rerun_is_identical() {
        let config = Config::default();
        let (sky, onboard) = setup(&config);
        let opts = options(40, &[1e4, 1e7], false);
        let a = run_campaign(&config, &onboard, &sky, &opts);
        for r in &a.reports {
            assert_eq!(r.label_counts.values().sum::<usize>(), r.scenarios);
            assert_eq!(r.scenarios, 40);
            assert_eq!(r.planet_present, r.no_attitude + r.converged);
            assert_eq!(r.converged, r.correct + r.wrong_attitude);
            assert!(r.beacon_failures_correct_attitude <= r.beacon_failures);
        }
        let b = run_campaign(&config, &onboard, &sky, &opts);
        assert_eq!(scenarios_csv(&a, &config), scenarios_csv(&b, &config));
        assert_eq!(report_text(&a), report_text(&b));
        let rows = scenarios_csv(&a, &config).lines().count();
        assert!(rows > 80);
    }

    #[test]
    fn failures_grow_with_position_uncertainty() {
        let config = Config::default();
        let (sky, onboard) = setup(&config);
        let c = run_campaign(&config, &onboard, &sky, &options(60, &[1e4, 1e7], true));
        let (lo, hi) = (&c.reports[0], &c.reports[1]);
        assert_eq!(lo.planet_present, 60);
        // attitude is shared across sigma_r
        assert_eq!(lo.correct, hi.correct);
        assert_eq!(lo.sigma_err_rot_arcsec, hi.sigma_err_rot_arcsec);
        assert!(
            hi.beacon_failures > lo.beacon_failures,
            "{} vs {}",
            hi.beacon_failures,
            lo.beacon_failures
        );
    }

    #[test]
    fn exact_knowledge_and_noiseless_images_never_miss() {
        let config = Config {
            sigma_qv: 0.0,
            noise: NoiseModel::none(),
            ..Config::default()
        };
        let (sky, onboard) = setup(&config);
        let c = run_campaign(&config, &onboard, &sky, &options(40, &[0.0], true));
        let r = &c.reports[0];
        assert_eq!(r.wrong_attitude, 0);
        // A spot cut by the image border has a biased centroid, so only
        // planets clear of the edge are held to a perfect record.
        let margin = crate::renderer::PSF_TRUNCATION_SIGMA * config.camera.defocus_sigma_px;
        let (w, h) = (config.camera.width as f64, config.camera.height as f64);
        let clear = |p: &Vector2<f64>| p.x > margin && p.y > margin && p.x < w - 1.0 - margin && p.y < h - 1.0 - margin;
        for run in &c.runs {
            for p in &run.outcomes[0].planets {
                if p.true_px.is_some_and(|t| clear(&t)) {
                    assert!(!p.is_beacon_failure(&config), "{p:?}");
                }
            }
        }
        assert!(r.detections > 0);
    }

    #[test]
    fn histogram_covers_all_bins() {
        let config = Config::default();
        let (sky, onboard) = setup(&config);
        let c = run_campaign(&config, &onboard, &sky, &options(5, &[1e4, 1e5], true));
        let csv = pdf_errors_csv(&c, &config);
        assert_eq!(csv.lines().count(), 1 + 2 * 41 * 41);
        let total: usize = csv
            .lines()
            .skip(1)
            .take(41 * 41)
            .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert!(total <= c.reports[0].detections);
        assert!(total > 0);
    }
}
