use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::emit::{Cell, Report, Table};
use crate::enumerate::{Ball, BallSpec};
use crate::equidist::{calibrate_orientation, run_experiment, Application, ExperimentConfig};
use crate::error::{invalid, Error, Result};
use crate::exact_arith::ExactScalar;
use crate::linalg::{Matrix, PlacedMatrix, Radius, RealMatrix};
use crate::volume::{
    fit_asymptotics, padic_sl2_ball_volume, skew_ball_ratio_limit, skew_ball_volume, stab_ball_volume_sl2r,
    stab_ratio_closed_form, sym2_translator, ClassFit, FitOptions, GroupDescriptor, LadderOptions, Orientation,
    SkewBallQuery, VolumeValue,
};

fn to_json<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

pub fn enumerate(cfg: &RunConfig) -> Result<Report> {
    let norm = cfg.norm()?;
    let t = cfg.radius("t")?;
    let mut spec = match cfg.str("lattice") {
        "sl2z" => BallSpec::sl2z(t.clone(), norm),
        "sl2zp" => BallSpec::sl2_zinvp(cfg.prime("p")?, t.clone(), cfg.radius("t_p")?, norm),
        _ => BallSpec::slnz(cfg.uint("n")? as usize, t.clone(), norm),
    };
    let n = spec.lattice.dim();
    if let Some(w) = cfg.window(n)? {
        spec = spec.with_window(w);
    }
    spec = spec.with_capacity(cfg.capacity);
    let ball = Ball::new(spec)?;
    let predicted = ball.spec().predicted_count();
    let mut json = json!({
        "lattice": cfg.str("lattice"),
        "norm": norm.to_string(),
        "t": t.to_string(),
        "predicted_count": predicted,
    });
    if cfg.str("lattice") == "sl2zp" {
        json["t_p"] = json!(cfg.str("t_p"));
    }
    let mut header = vec!["level".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("m{}{}", i + 1, j + 1));
        }
    }
    let mut table = Table { header, rows: Vec::new() };
    if cfg.bool("list")? {
        let elements = ball.collect();
        json["count"] = json!(elements.len());
        for g in elements {
            let mut row = vec![Cell::from(g.level as u64)];
            row.extend(g.matrix.entries().map(Cell::from));
            table.push(row);
        }
    } else {
        let count = ball.count();
        json["count"] = json!(count);
        table = Table::new(&["t", "count"]);
        table.push(vec![Cell::from(t.to_string()), Cell::from(count)]);
    }
    Ok(Report { json, table })
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Matrix<f64> {
    loop {
        let (a, b, c): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if a.abs() > 0.25 {
            return Matrix::from_rows(vec![vec![a, b], vec![c, (1.0 + b * c) / a]]).expect("2x2");
        }
    }
}

pub fn volume(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.prime("p")?;
    let n_max = cfg.uint("n_max")? as i64;
    match cfg.str("group") {
        "sym2_unipotent" => {
            let group = GroupDescriptor::Sym2Unipotent { p };
            let mut table = Table::new(&["n", "t", "volume", "skew_volume", "ratio"]);
            let mut values = BTreeMap::new();
            for n in 1..=n_max {
                let t = Radius::new(ExactScalar::prime_power(p, n))?;
                let plain = skew_ball_volume(&SkewBallQuery::plain(group.clone(), t.clone()))?;
                let skew = skew_ball_volume(&SkewBallQuery {
                    group: group.clone(),
                    translator: sym2_translator(p),
                    t: t.clone(),
                    orientation: Orientation::Right,
                })?;
                let ratio = skew.ratio(&plain)?;
                values.insert(ratio.to_string(), ());
                table.push(vec![
                    Cell::from(n),
                    Cell::from(t.to_string()),
                    Cell::from(plain.to_string()),
                    Cell::from(skew.to_string()),
                    Cell::from(ratio.to_string()),
                ]);
            }
            let opts = LadderOptions { t0: p.get() as f64, steps: 16, ..LadderOptions::default() };
            let limit = skew_ball_ratio_limit(&group, &sym2_translator(p), Orientation::Right, &opts)?;
            let json = json!({
                "group": "sym2_unipotent",
                "p": p.get(),
                "distinct_ratios": values.keys().collect::<Vec<_>>(),
                "ratio_limit": to_json(&limit)?,
            });
            Ok(Report { json, table })
        }
        "padic_sl2" => {
            let mut table = Table::new(&["j", "t", "volume"]);
            for j in 0..=n_max {
                let vol = VolumeValue::exact(padic_sl2_ball_volume(p, j)?, p, 0);
                let t = ExactScalar::prime_power(p, j);
                table.push(vec![Cell::from(j), Cell::from(t.to_string()), Cell::from(vol.to_string())]);
            }
            Ok(Report { json: json!({"group": "padic_sl2", "p": p.get()}), table })
        }
        _ => {
            let v = cfg.symbolic("v")?;
            if v.len() != 2 {
                return Err(Error::Config(vec!["v: stab2 needs two coordinates".into()]));
            }
            let vf = [v[0].to_f64(), v[1].to_f64()];
            let norm = cfg.norm()?;
            let mut table = Table::new(&["t", "volume"]);
            for t in cfg.radii("t")? {
                table.push(vec![Cell::from(t.to_string()), Cell::from(stab_ball_volume_sl2r(vf, t.to_f64()))]);
            }
            let orientation = cfg.orientation()?;
            let group = GroupDescriptor::Stab2 { v: vf, norm };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut samples = Vec::new();
            for _ in 0..cfg.uint("samples")? {
                let g = random_sl2(&mut rng);
                let placed = PlacedMatrix::new(2, Some(RealMatrix::Float(g.clone())), BTreeMap::new())?;
                let limit = skew_ball_ratio_limit(&group, &placed, orientation, &LadderOptions::default())?;
                let closed = stab_ratio_closed_form(vf, &g, orientation)?;
                let gv = [g[(0, 0)] * vf[0] + g[(0, 1)] * vf[1], g[(1, 0)] * vf[0] + g[(1, 1)] * vf[1]];
                samples.push(json!({
                    "g": [[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]],
                    "limit": to_json(&limit)?,
                    "closed_form": closed,
                    "limit_times_gv": limit.classes[0].limit * gv[0].hypot(gv[1]),
                }));
            }
            let json = json!({
                "group": "stab2",
                "v": v.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "norm": norm.to_string(),
                "orientation": orientation.to_string(),
                "translators": samples,
            });
            Ok(Report { json, table })
        }
    }
}

pub fn orbit(cfg: &RunConfig) -> Result<Report> {
    let p = if cfg.has("p") { Some(cfg.prime("p")?) } else { None };
    let need_p = || p.ok_or_else(|| invalid("application needs p"));
    let application = match cfg.str("application") {
        "ledrappier" => Application::Ledrappier,
        "window" => Application::Windowed { p: need_p()? },
        "padic_product" => Application::PadicProduct { p: need_p()? },
        _ => Application::Wedge { n: cfg.uint("n")? as usize, k: cfg.uint("k")? as usize },
    };
    let mut exp = ExperimentConfig::new(application, cfg.symbolic("v")?, cfg.radii("t")?);
    if cfg.has("v_p") {
        exp.v_padic = Some(cfg.rationals("v_p")?);
    }
    exp.real_norm = cfg.norm()?;
    exp.window = match application {
        Application::Wedge { n, .. } => cfg.window(n)?,
        _ => cfg.window(2)?,
    };
    exp.tests = cfg.tests()?;
    exp.wedge_exponent = cfg.float("wedge_exponent")?;
    exp.cf_depth = cfg.uint("cf_depth")? as usize;
    exp.capacity = cfg.capacity;
    let report = run_experiment(&exp)?;
    let mut json = to_json(&report)?;
    if cfg.bool("calibrate")? {
        let cal = calibrate_orientation(&exp.v_real, &cfg.radius("calibrate_t")?, exp.real_norm, cfg.capacity)?;
        json["calibration"] = to_json(&cal)?;
    }
    let mut table = Table::new(&["t", "test_id", "count", "empirical", "target", "error"]);
    for r in &report.rows {
        table.push(vec![
            Cell::from(r.t),
            Cell::from(r.test_id.as_str()),
            Cell::from(r.count),
            Cell::from(r.empirical_ratio),
            Cell::from(r.target),
            Cell::from(r.error),
        ]);
    }
    Ok(Report { json, table })
}

fn read_csv(path: &std::path::Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Report> {
    let (header, rows) = read_csv(std::path::Path::new(cfg.str("input")))?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(vec![format!("input has no column {name:?}")]))
    };
    let (ti, vi) = (col(cfg.str("t_column"))?, col(cfg.str("column"))?);
    let mut samples = Vec::with_capacity(rows.len());
    for row in &rows {
        let t: Radius = row[ti].parse()?;
        let v: VolumeValue = row[vi].parse()?;
        samples.push((t.to_f64(), v.to_f64()));
    }
    let opts = FitOptions {
        prime: Some(cfg.prime("p")?),
        moduli: cfg.uints("moduli")?.into_iter().map(|m| m as u32).collect(),
        tolerance: cfg.float("tolerance")?,
        min_samples: cfg.uint("min_samples")? as usize,
    };
    let profile = fit_asymptotics(&samples, &opts)?;
    let mut table = Table::new(&["modulus", "residue", "c", "d", "d_rational", "e", "residual", "samples"]);
    for (k, class) in profile.classes.iter().enumerate() {
        let mut row = vec![Cell::from(profile.modulus as u64), Cell::from(k as u64)];
        match class {
            ClassFit::Empty => row.extend(std::iter::repeat_n(Cell::from(""), 6)),
            ClassFit::Fitted { c, d, d_rational, e, residual, samples } => row.extend([
                Cell::from(*c),
                Cell::from(*d),
                Cell::from(d_rational.clone().unwrap_or_default()),
                Cell::from(*e as u64),
                Cell::from(*residual),
                Cell::from(*samples as u64),
            ]),
        }
        table.push(row);
    }
    Ok(Report { json: to_json(&profile)?, table })
}

pub fn report(cfg: &RunConfig) -> Result<Report> {
    let mut header: Option<Vec<String>> = None;
    let mut table = Table::default();
    let mut sources = Vec::new();
    for path in cfg.paths("inputs") {
        let (h, rows) = read_csv(&path)?;
        match &header {
            None => {
                table.header = std::iter::once("source".to_string()).chain(h.iter().cloned()).collect();
                header = Some(h);
            }
            Some(first) if *first != h => {
                return Err(invalid(format!("{} has a different header", path.display())));
            }
            _ => {}
        }
        let name = path.display().to_string();
        sources.push(json!({"path": name, "rows": rows.len()}));
        for row in rows {
            table.push(std::iter::once(Cell::from(name.as_str())).chain(row.into_iter().map(Cell::from)).collect());
        }
    }
    Ok(Report { json: json!({"inputs": sources, "rows": table.rows.len()}), table })
}

