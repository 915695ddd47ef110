use serde::Serialize;

use super::{
    check_hypotheses, normalizer, predicted_limit, slope_fit, Application, OrbitVector, TestFunction,
};
use crate::enumerate::{Ball, BallSpec, CongruenceWindow, GroupElement, StripBall, StripQuery};
use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Prime, SymbolicReal};
use crate::linalg::{Matrix, NormKind, Radius};
use crate::volume::{stab_ratio_closed_form, Orientation};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub application: Application,
    pub v_real: Vec<SymbolicReal>,
    pub v_padic: Option<Vec<ExactScalar>>,
    pub ladder: Vec<Radius>,
    pub real_norm: NormKind,
    pub window: Option<CongruenceWindow>,
    pub tests: Vec<(String, TestFunction)>,
    pub wedge_exponent: f64,
    /// Continued-fraction depth of the irrationality heuristic.
    pub cf_depth: usize,
    pub capacity: u64,
}

impl ExperimentConfig {
    pub fn new(application: Application, v_real: Vec<SymbolicReal>, ladder: Vec<Radius>) -> Self {
        ExperimentConfig {
            application,
            v_real,
            v_padic: None,
            ladder,
            real_norm: NormKind::Frobenius,
            window: None,
            tests: Vec::new(),
            wedge_exponent: 1.0,
            cf_depth: 40,
            capacity: crate::enumerate::DEFAULT_CAPACITY,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub t: f64,
    pub test_id: String,
    pub count: u64,
    /// `count / normalizer(T)`.
    pub normalized: f64,
    pub predicted: f64,
    pub empirical_ratio: f64,
    /// Constant-free target for `empirical_ratio`.
    pub target: f64,
    /// `|empirical_ratio / target - 1|`.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeRecord {
    pub label: String,
    pub exponent: f64,
    pub std_err: f64,
    pub points: usize,
}

/// Spread of `normalized / predicted` across test sets at one radius.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantRecord {
    pub t: f64,
    pub mean: f64,
    pub cv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionReport {
    pub application: String,
    pub normalizer: String,
    pub hypothesis_flags: Vec<String>,
    pub window_scale: Option<ExactScalar>,
    pub ball_counts: Vec<(f64, u64)>,
    pub rows: Vec<ReportRow>,
    pub slopes: Vec<SlopeRecord>,
    pub constants: Vec<ConstantRecord>,
    pub notes: Vec<String>,
}

impl DistributionReport {
    pub fn rows_at(&self, t: f64) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.t == t)
    }

    pub fn max_error_at(&self, t: f64) -> f64 {
        self.rows_at(t).map(|r| r.error).fold(0.0, f64::max)
    }
}

/// Exact membership bounds for each radius of a ladder.
struct LadderBounds {
    norm: NormKind,
    /// `[radius][level]` limits on `|M|^2` (Frobenius) or `max |M_ij|`.
    limits: Vec<Vec<i128>>,
}

impl LadderBounds {
    fn new(ladder: &[Radius], p: Option<Prime>, padic_follows: bool, norm: NormKind) -> Result<Self> {
        let mut limits = Vec::with_capacity(ladder.len());
        for t in ladder {
            let max_level = match p {
                Some(p) if padic_follows => t.floor_log(p).unwrap_or(0),
                _ => 0,
            };
            let mut row = Vec::new();
            for m in 0..=max_level {
                let scale = match p {
                    Some(p) => ExactScalar::prime_power(p, m as i64),
                    None => ExactScalar::one(),
                };
                let r = t.scaled(&scale)?;
                row.push(match norm {
                    NormKind::Frobenius => r.floor_squared_i128()?,
                    NormKind::MaxEntry => r.floor_i64()? as i128,
                });
            }
            limits.push(row);
        }
        Ok(LadderBounds { norm, limits })
    }

    fn first_index(&self, g: &GroupElement) -> Option<usize> {
        let size = match self.norm {
            NormKind::Frobenius => g.matrix.frobenius_sq(),
            NormKind::MaxEntry => g.matrix.max_abs() as i128,
        };
        self.limits
            .iter()
            .position(|row| row.get(g.level as usize).is_some_and(|&lim| size <= lim))
    }
}

/// Enumerate, evaluate every test set, and compare with predictions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<DistributionReport> {
    let app = cfg.application;
    let mut ladder = cfg.ladder.clone();
    ladder.sort_by(|a, b| a.squared().cmp(b.squared()));
    ladder.dedup();
    let t_max = ladder.last().cloned().ok_or_else(|| invalid("empty radius ladder"))?;
    if cfg.v_real.len() != app.vector_dim() {
        return Err(invalid(format!("{app} acts on vectors of length {}", app.vector_dim())));
    }
    let prediction = predicted_limit(&app, &cfg.tests, cfg.window.as_ref(), cfg.wedge_exponent)?;
    let hypothesis_flags = check_hypotheses(&app, &cfg.v_real, cfg.v_padic.as_deref(), cfg.cf_depth);

    let p = app.prime();
    let mut v = OrbitVector::real(&cfg.v_real);
    if let Application::Wedge { k, .. } = app {
        v = v.with_wedge(k);
    }
    if let Application::PadicProduct { p } = app {
        let vp = cfg.v_padic.as_ref().ok_or_else(|| invalid("the p-adic application needs v_padic"))?;
        v = v.with_padic(p, vp)?;
    }

    let nt = cfg.tests.len();
    let windowed = matches!(app, Application::Windowed { .. });
    // Columns: tests, ball total, then windowed tests and windowed total.
    let width = if windowed { 2 * (nt + 1) } else { nt + 1 };
    let bounds = LadderBounds::new(&ladder, p, matches!(app, Application::PadicProduct { .. }), cfg.real_norm)?;
    let len = ladder.len() * width;
    let window = cfg.window.clone();
    let fold = |mut acc: Vec<u64>, g: &GroupElement| {
        let Some(i) = bounds.first_index(g) else { return acc };
        let row = &mut acc[i * width..(i + 1) * width];
        let w = v.act(g, p);
        let in_window = windowed && window.as_ref().is_some_and(|win| win.contains(g));
        for (j, (_, f)) in cfg.tests.iter().enumerate() {
            if f.contains(&w) {
                row[j] += 1;
                if in_window {
                    row[nt + 1 + j] += 1;
                }
            }
        }
        row[nt] += 1;
        if in_window {
            row[2 * nt + 1] += 1;
        }
        acc
    };
    let reduce = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    let mut counts = match app {
        Application::Ledrappier => {
            let ball = Ball::new(BallSpec::sl2z(t_max.clone(), cfg.real_norm).with_capacity(cfg.capacity))?;
            ball.par_fold(|| vec![0u64; len], fold, reduce)
        }
        Application::Windowed { p } => {
            let spec = BallSpec::sl2_zinvp(p, t_max.clone(), Radius::from_int(1)?, cfg.real_norm)
                .with_capacity(cfg.capacity);
            Ball::new(spec)?.par_fold(|| vec![0u64; len], fold, reduce)
        }
        Application::Wedge { n, .. } => {
            let ball = Ball::new(BallSpec::slnz(n, t_max.clone(), cfg.real_norm).with_capacity(cfg.capacity))?;
            ball.par_fold(|| vec![0u64; len], fold, reduce)
        }
        Application::PadicProduct { p } => {
            let mut real_reach = 0.0f64;
            let mut padic_reach = i64::MIN;
            for (id, f) in &cfg.tests {
                match f.reach() {
                    (Some(r), Some(s)) => {
                        real_reach = real_reach.max(r);
                        padic_reach = padic_reach.max(s);
                    }
                    _ => return Err(invalid(format!("test set {id:?} must bound both places"))),
                }
            }
            if cfg.tests.is_empty() {
                return Err(invalid("the p-adic application needs at least one product test set"));
            }
            let vp = cfg.v_padic.clone().expect("checked above");
            let query = StripQuery {
                p,
                t_inf: t_max.clone(),
                t_p: t_max.clone(),
                real_norm: cfg.real_norm,
                v_real: [cfg.v_real[0].to_f64(), cfg.v_real[1].to_f64()],
                real_reach,
                v_padic: [vp[0].clone(), vp[1].clone()],
                padic_reach,
                capacity: cfg.capacity,
            };
            StripBall::new(query)?.par_fold(|| vec![0u64; len], fold, reduce)
        }
    };
    for i in 1..ladder.len() {
        for j in 0..width {
            counts[i * width + j] += counts[(i - 1) * width + j];
        }
    }

    let mut rows = Vec::new();
    let mut constants = Vec::new();
    let mut ball_counts = Vec::new();
    let mut notes = Vec::new();
    let window_scale = prediction.window_scale.as_ref().map(ExactScalar::to_f64);
    let offset = if windowed { nt + 1 } else { 0 };
    for (i, t) in ladder.iter().enumerate() {
        let tf = t.to_f64();
        let norm_t = normalizer(&app, tf, None);
        let row = &counts[i * width..(i + 1) * width];
        if !matches!(app, Application::PadicProduct { .. }) {
            ball_counts.push((tf, row[nt]));
        }
        let base = row[offset] as f64 / norm_t;
        let mut ks = Vec::new();
        for (j, (id, _)) in cfg.tests.iter().enumerate() {
            let count = row[offset + j];
            let normalized = count as f64 / norm_t;
            let predicted = prediction.predicted[j].1 * window_scale.unwrap_or(1.0);
            let target = prediction.ratios[j].1;
            let empirical_ratio = if base > 0.0 { normalized / base } else { f64::NAN };
            rows.push(ReportRow {
                t: tf,
                test_id: id.clone(),
                count,
                normalized,
                predicted,
                empirical_ratio,
                target,
                error: (empirical_ratio / target - 1.0).abs(),
            });
            if predicted > 0.0 && count > 0 {
                ks.push(normalized / predicted);
            }
            if windowed {
                let full = row[j];
                let ratio = if full > 0 { count as f64 / full as f64 } else { f64::NAN };
                let target = window_scale.expect("window checked");
                rows.push(ReportRow {
                    t: tf,
                    test_id: format!("{id}/full"),
                    count: full,
                    normalized: full as f64 / norm_t,
                    predicted: prediction.predicted[j].1,
                    empirical_ratio: ratio,
                    target,
                    error: (ratio / target - 1.0).abs(),
                });
            }
        }
        if !ks.is_empty() {
            let mean = ks.iter().sum::<f64>() / ks.len() as f64;
            let var = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / ks.len() as f64;
            constants.push(ConstantRecord { t: tf, mean, cv: var.sqrt() / mean });
        }
    }

    let mut slopes = Vec::new();
    let mut try_slope = |label: String, pts: Vec<(f64, f64)>| match slope_fit(&pts) {
        Ok((exponent, std_err)) => slopes.push(SlopeRecord { label, exponent, std_err, points: pts.len() }),
        Err(e) => notes.push(format!("{label}: {e}")),
    };
    if !ball_counts.is_empty() {
        try_slope("ball vs T".into(), ball_counts.iter().map(|&(t, c)| (t, c as f64)).collect());
    }
    for (j, (id, _)) in cfg.tests.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ladder
            .iter()
            .enumerate()
            .map(|(i, t)| (normalizer(&app, t.to_f64(), None), counts[i * width + offset + j] as f64))
            .collect();
        if pts.iter().all(|&(_, c)| c > 0.0) {
            try_slope(format!("{id} vs normalizer"), pts);
        }
    }

    Ok(DistributionReport {
        application: app.to_string(),
        normalizer: prediction.normalizer,
        hypothesis_flags,
        window_scale: prediction.window_scale,
        ball_counts,
        rows,
        slopes,
        constants,
        notes,
    })
}

/// Which translate orientation matches observed orbit densities.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub winner: Orientation,
    /// Standard deviation of `log(empirical / candidate)` per orientation.
    pub spread_right: f64,
    pub spread_right_inverse: f64,
    pub sectors: usize,
}

fn rot(theta: f64) -> Matrix<f64> {
    let (s, c) = theta.sin_cos();
    Matrix::from_rows(vec![vec![c, -s], vec![s, c]]).expect("2x2")
}

/// Compare `SL(2, Z)` orbit densities near `w = g v` with the volume-ratio
/// limits of both orientations, over a grid of translators `g`.
pub fn calibrate_orientation(v: &[SymbolicReal], t: &Radius, norm: NormKind, capacity: u64) -> Result<Calibration> {
    if v.len() != 2 {
        return Err(invalid("calibration uses planar vectors"));
    }
    let vf = [v[0].to_f64(), v[1].to_f64()];
    let vn = vf[0].hypot(vf[1]);
    let phi = vf[1].atan2(vf[0]);
    let mut sectors = Vec::new();
    let mut translators = Vec::new();
    for radius in [1.2, 2.0, 3.2] {
        for j in 0..6 {
            let theta = j as f64 * std::f64::consts::PI / 3.0;
            let lambda = radius / vn;
            let g = rot(theta).matmul(&Matrix::diagonal(&[lambda, 1.0 / lambda]))?.matmul(&rot(-phi))?;
            translators.push(g);
            sectors.push(TestFunction::sector(0.85 * radius, 1.15 * radius, theta - 0.25, theta + 0.25));
        }
    }
    let ov = OrbitVector::real(v);
    let ball = Ball::new(BallSpec::sl2z(t.clone(), norm).with_capacity(capacity))?;
    let counts = ball.par_fold(
        || vec![0u64; sectors.len()],
        |mut acc, g| {
            let w = ov.act(g, None);
            for (c, f) in acc.iter_mut().zip(&sectors) {
                if f.contains(&w) {
                    *c += 1;
                }
            }
            acc
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    if counts.contains(&0) {
        return Err(invalid("calibration sectors are empty; raise the radius"));
    }
    let spread = |o: Orientation| -> Result<f64> {
        let mut logs = Vec::new();
        for ((f, g), &c) in sectors.iter().zip(&translators).zip(&counts) {
            let TestFunction::RealAnnulusSector { r1, r2, theta1, theta2 } = f else { unreachable!() };
            let area = (theta2 - theta1) * (r2 * r2 - r1 * r1) / 2.0;
            let density = stab_ratio_closed_form(vf, g, o)?;
            logs.push((c as f64 / area / density).ln());
        }
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        Ok((logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt())
    };
    let (a, b) = (spread(Orientation::Right)?, spread(Orientation::RightInverse)?);
    Ok(Calibration {
        winner: if b <= a { Orientation::RightInverse } else { Orientation::Right },
        spread_right: a,
        spread_right_inverse: b,
        sectors: sectors.len(),
    })
}
