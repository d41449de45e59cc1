use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde_json::json;
use shrinkerlab::analytic::CatalogPiece;
use shrinkerlab::certificate::{certify_catalog, certify_instability, estimate_rn};
use shrinkerlab::coordinate::check_coordinate_fields;
use shrinkerlab::curvature::CurvatureSource;
use shrinkerlab::cutoff::{build_cutoff, cutoff_energy, cutoff_energy_plane, SingularSetProxy};
use shrinkerlab::frankel::{frankel_verdict, FrankelOptions, FrankelVerdict};
use shrinkerlab::functional::gaussian_area;
use shrinkerlab::growth::{check_h2_bound, check_volume_growth, growth_profile, growth_profile_analytic};
use shrinkerlab::io::{parse_shrnk, write_shrnk};
use shrinkerlab::quadrature::sphere_area;
use shrinkerlab::report::Report;
use shrinkerlab::residual::shrinker_residual;
use shrinkerlab::{build_mesh, DiscreteHypersurface, GeneralizedCylinder, QuadratureRule};

use crate::config::{Command, RunConfig, Shape};
use crate::{Artifact, Failure, Outcome};

const SAMPLE_POINTS: usize = 1000;

pub fn dispatch(config: &RunConfig) -> Result<Outcome, Failure> {
    match config.command {
        Command::Catalog => catalog(config),
        Command::Residual => residual(config),
        Command::Area => area(config),
        Command::Growth => growth(config),
        Command::Cutoff => cutoff(config),
        Command::Certify => certify(config),
        Command::RnSweep => rn_sweep(config),
        Command::Frankel => frankel(config),
    }
}

fn read_mesh(path: &Path) -> Result<DiscreteHypersurface, Failure> {
    let file = File::open(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    parse_shrnk(BufReader::new(file)).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// The surface for mesh-based commands: --mesh when given, else a catalog mesh when --h is
/// given. `None` selects the analytic path.
fn surface(config: &RunConfig, radius: f64) -> Result<Option<DiscreteHypersurface>, Failure> {
    if let Some(path) = &config.mesh {
        return Ok(Some(read_mesh(path)?));
    }
    match config.h {
        Some(h) => Ok(Some(build_mesh(&config.shape()?, radius, h)?)),
        None => Ok(None),
    }
}

/// Seeded sample of points of the shape inside B_R.
fn sample_points(config: &RunConfig, shape: &GeneralizedCylinder, radius: f64) -> Result<Vec<DVector<f64>>, Failure> {
    let mut rng = config.rng();
    (0..SAMPLE_POINTS)
        .map(|_| {
            shape
                .sample(&mut rng, radius)
                .ok_or_else(|| Failure::config(format!("the ball of radius {radius} contains no point of the shape")))
        })
        .collect()
}

/// F of the complete shrinker S^k_{√2k} × R^{n−k}: (4π)^{−k/2}|S^k|(2k)^{k/2}e^{−k/2}.
fn closed_form_area(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    (4.0 * std::f64::consts::PI).powf(-k / 2.0) * sphere_area(k as usize, 1.0) * (2.0 * k).powf(k / 2.0) * (-k / 2.0).exp()
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn catalog(config: &RunConfig) -> Result<Outcome, Failure> {
    let shape = config.shape()?;
    let radius = config.radius_or(4.0);
    let points = sample_points(config, &shape, radius)?;
    let fields = check_coordinate_fields(&shape, &points)?;
    let inputs = json!({ "n": shape.n(), "k": shape.k(), "ambient": shape.ambient_dim(), "R": radius, "points": points.len() });
    let report = Report::new("check_coordinate_fields", &inputs, &fields)
        .checked(fields.max_sum_defect.max(fields.max_eigen_defect), config.tol_or(1e-10));
    let mut data = json!({ "shape": { "n": shape.n(), "k": shape.k(), "radius": shape.radius(), "ambient": shape.ambient_dim() } });
    if let Some(path) = &config.emit_mesh {
        let mesh = build_mesh(&shape, radius, config.h.unwrap_or(0.1))?;
        write_shrnk(&mesh, std::io::BufWriter::new(File::create(path)?))?;
        data["mesh"] = json!({
            "path": path,
            "vertices": mesh.vertex_count(),
            "simplices": mesh.simplex_count(),
            "boundary_facets": mesh.boundary_facet_count(),
        });
    }
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(data) })
}

fn residual(config: &RunConfig) -> Result<Outcome, Failure> {
    let radius = config.radius_or(4.0);
    let report = match surface(config, radius)? {
        Some(mesh) => {
            let analytic = mesh.analytic_source().is_some();
            let stats = shrinker_residual(&mesh, CurvatureSource::Auto)?;
            let inputs = json!({ "vertices": mesh.vertex_count(), "analytic_curvature": analytic });
            let tol = config.tol_or(if analytic { 1e-10 } else { 5e-2 });
            Report::new("shrinker_residual", inputs, stats).checked(stats.max, tol)
        }
        None => {
            let shape = config.shape()?;
            let points = sample_points(config, &shape, radius)?;
            let residuals = points
                .iter()
                .map(|x| Ok(shape.differential_data(x)?.shrinker_residual()))
                .collect::<Result<Vec<f64>, shrinkerlab::Error>>()?;
            let worst = max(residuals.iter().copied());
            let inputs = json!({ "n": shape.n(), "k": shape.k(), "R": radius, "points": points.len(), "seed": config.seed });
            Report::new("shrinker_residual", inputs, json!({ "max": worst })).checked(worst, config.tol_or(1e-12))
        }
    };
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(json!({})) })
}

fn area(config: &RunConfig) -> Result<Outcome, Failure> {
    let radius = config.radius_or(12.0);
    let (value, method) = match surface(config, radius)? {
        Some(mesh) => (gaussian_area(&mesh.with_quadrature(QuadratureRule::ThreePoint)), "mesh"),
        None => (CatalogPiece::new(config.shape()?, radius)?.gaussian_area(), "analytic"),
    };
    let inputs = json!({ "n": config.n, "R": radius, "h": config.h, "method": method });
    let report = if config.mesh.is_some() {
        Report::new("gaussian_area", inputs, json!({ "F": value }))
    } else {
        let exact = closed_form_area(config.k()?);
        Report::new("gaussian_area", inputs, json!({ "F": value, "closed_form": exact }))
            .checked((value - exact).abs(), config.tol_or(1e-4))
    };
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(json!({ "F": value })) })
}

fn growth(config: &RunConfig) -> Result<Outcome, Failure> {
    let rmax = config.rmax.or(config.big_r).unwrap_or(10.0);
    let step = config.step.unwrap_or(0.25);
    let r1 = config.r1.unwrap_or(2.0);
    let floor = (4.0 + 2.0 * config.n as f64).sqrt();
    if r1 < floor {
        return Err(Failure::config(format!("r1 = {r1} is below sqrt(4 + 2n) = {floor}")));
    }
    if r1 >= rmax {
        return Err(Failure::config(format!("r1 = {r1} must be below rmax = {rmax}")));
    }
    let mut radii: Vec<f64> = (1..).map(|j| step * j as f64).take_while(|r| *r <= rmax * (1.0 + 1e-12)).collect();
    radii.push(r1);
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let profile = match surface(config, rmax)? {
        Some(mesh) => growth_profile(&mesh, &radii, CurvatureSource::Auto)?,
        None => growth_profile_analytic(&CatalogPiece::new(config.shape()?, rmax)?, &radii)?,
    };
    let tol = config.tol_or(1e-6);
    let checks = radii
        .iter()
        .filter(|&&r2| r2 > r1)
        .map(|&r2| check_volume_growth(&profile, r1, r2, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = max(checks.iter().map(|c| -c.slack));
    let inputs = json!({ "n": profile.n, "r1": r1, "rmax": rmax, "step": step });
    let evg = Report::new("check_volume_growth", &inputs, &checks).checked(worst, tol);
    let h2 = check_h2_bound(&profile, tol);
    let h2_worst = max((0..radii.len()).filter(|&i| profile.regular[i]).map(|i| {
        let v = profile.volume[i];
        let excess = profile.h2[i] - profile.n as f64 / 2.0 * v;
        if v > 0.0 { excess / v } else { excess }
    }));
    let h2_report = Report::new("check_H2_bound", &inputs, &h2).checked(h2_worst, tol);
    Ok(Outcome { reports: vec![evg, h2_report], artifact: Artifact::Csv(profile.to_csv()) })
}

/// A point of minimal norm on the shape, used as the default singular-set proxy.
fn nearest_point(shape: &GeneralizedCylinder) -> DVector<f64> {
    let mut direction = vec![0.0; shape.k() + 1];
    if shape.k() > 0 {
        direction[0] = 1.0;
    }
    shape.point(&direction, &vec![0.0; shape.n() - shape.k()])
}

fn cutoff(config: &RunConfig) -> Result<Outcome, Failure> {
    let radius = config.radius_or(4.0);
    let rho = config.rho.unwrap_or(1.0 / (6.0 * radius));
    let shape = config.shape()?;
    let proxy = SingularSetProxy::new(vec![nearest_point(&shape)], rho, radius)?;
    let energy = match surface(config, radius)? {
        Some(mesh) => cutoff_energy(&mesh, &build_cutoff(&mesh, &proxy)?)?,
        None if config.shape == Shape::Plane && !config.rotate => cutoff_energy_plane(config.n, radius, &proxy)?,
        None => return Err(Failure::config("the analytic cutoff path supports unrotated planes only; pass --h")),
    };
    let inputs = json!({ "n": config.n, "R": radius, "rho": rho, "points": 1 });
    let mut report = Report::new("cutoff_energy", inputs, energy);
    if let Some(eps) = config.tol {
        report = report.checked(energy.dirichlet.max(energy.deficiency), eps);
    }
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(json!({})) })
}

fn certify(config: &RunConfig) -> Result<Outcome, Failure> {
    let r1 = config.r1.unwrap_or((4.0 + 2.0 * config.n as f64).sqrt());
    let r2 = config
        .r2
        .or(config.big_r)
        .ok_or_else(|| Failure::config("certify needs --r2 (or --R)"))?;
    let radius = config.radius_or(r2);
    let cert = match surface(config, radius)? {
        Some(mesh) => {
            let rho = config.rho.unwrap_or(1.0 / (6.0 * radius));
            let proxy = SingularSetProxy::empty(rho, radius)?;
            certify_instability(&mesh, r1, r2, &proxy, config.tol_or(1e-3))?
        }
        None => certify_catalog(&CatalogPiece::new(config.shape()?, radius)?, r1, r2)?,
    };
    let inputs = json!({ "n": config.n, "k": config.k()?, "r1": r1, "r2": r2, "R": radius });
    let report = Report::new("certify_instability", inputs, &cert).with_pass(cert.fires);
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(json!({})) })
}

fn rn_sweep(config: &RunConfig) -> Result<Outcome, Failure> {
    let step = config.step.unwrap_or(0.25);
    let estimate = estimate_rn(config.n, step, config.cap)?;
    let inputs = json!({ "n": config.n, "step": step, "cap": config.cap });
    let stars: Vec<_> = estimate.rows.iter().map(|r| json!({ "k": r.k, "Rstar": r.r_star })).collect();
    let report = Report::new("estimate_Rn", inputs, json!({ "Rn_hat": estimate.rn_hat, "rows": stars }));
    Ok(Outcome { reports: vec![report], artifact: Artifact::Csv(estimate.to_csv()) })
}

fn verdict_summary(v: &FrankelVerdict) -> serde_json::Value {
    match v {
        FrankelVerdict::Intersect { witnesses } => json!({ "verdict": "Intersect", "witnesses": witnesses.len() }),
        FrankelVerdict::DisjointEvidence { .. } => {
            json!({ "verdict": "DisjointEvidence", "certificate_fires": v.certificate_fires() })
        }
    }
}

fn frankel(config: &RunConfig) -> Result<Outcome, Failure> {
    let radius = config.radius_or(4.0);
    let opts = FrankelOptions { core_radius: config.core_radius, ..FrankelOptions::default() };
    match (&config.mesh, &config.other) {
        (Some(a), Some(b)) => {
            let (a, b) = (read_mesh(a)?, read_mesh(b)?);
            let verdict = frankel_verdict(&a, &b, radius, &opts)?;
            let pass = verdict.intersects() || verdict.certificate_fires();
            let report = Report::new("frankel_verdict", json!({ "R": radius }), verdict_summary(&verdict)).with_pass(pass);
            let data = serde_json::to_value(&verdict).expect("verdict serializes");
            Ok(Outcome { reports: vec![report], artifact: Artifact::Json(data) })
        }
        (None, None) => catalog_sweep(config, radius, &opts),
        _ => Err(Failure::config("frankel needs both --mesh and --other, or neither for the catalog sweep")),
    }
}

/// Every ordered pair of distinct shrinker curves: the circle S¹_{√2} and lines through
/// the origin at 8 angles.
fn catalog_sweep(config: &RunConfig, radius: f64, opts: &FrankelOptions) -> Result<Outcome, Failure> {
    if config.n != 1 {
        return Err(Failure::config("the catalog sweep runs for --n 1 only"));
    }
    let h = config.h.unwrap_or(0.05);
    let mut curves = Vec::new();
    let mut names = Vec::new();
    for j in 0..8 {
        let t = std::f64::consts::PI * j as f64 / 8.0;
        let q = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        curves.push(build_mesh(&GeneralizedCylinder::shrinker(1, 0)?.rotated(&q)?, radius, h)?);
        names.push(format!("line {j}pi/8"));
    }
    curves.push(build_mesh(&GeneralizedCylinder::shrinker(1, 1)?, radius, h)?);
    names.push("circle sqrt2".to_string());
    let pairs: Vec<(usize, usize)> =
        (0..curves.len()).flat_map(|i| (0..curves.len()).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let verdicts = pairs
        .par_iter()
        .map(|&(i, j)| frankel_verdict(&curves[i], &curves[j], radius, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<_> = pairs
        .iter()
        .zip(&verdicts)
        .map(|(&(i, j), v)| json!({ "a": names[i], "b": names[j], "result": verdict_summary(v) }))
        .collect();
    let pass = verdicts.iter().all(|v| v.intersects());
    let report = Report::new("frankel_catalog_sweep", json!({ "R": radius, "h": h, "pairs": pairs.len() }), &rows)
        .with_pass(pass);
    Ok(Outcome { reports: vec![report], artifact: Artifact::Json(json!({})) })
}
