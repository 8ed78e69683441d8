//! One function per subcommand. Each solves, attaches its checks to the
//! bundle and writes the requested formats.

use ep_transonic::model::{flux_partner, g_of_n, n_star_closed_form, shock_map_s, sonic_slope_k};
use ep_transonic::numerics::linspace;
use ep_transonic::portrait::{phase_portrait, Portrait, TrajectoryClass};
use ep_transonic::shock::{stability_probe_shock, ShockFitReport, ShockProblem, ShockSolution};
use ep_transonic::smooth::{
    assemble_smooth_solution, build_with_method, smooth_scaling_scan, Direction, Method, SmoothCase, SmoothSeed,
    SmoothSolution,
};
use ep_transonic::stability::{find_growth_rate, linearized_coeffs, verify_mode, GrowthReport, ModeSearch};
use ep_transonic::{DopingProfile, Error, FlowParams, Options, SonicRoot};
use serde::Serialize;

use crate::config::{Format, RunConfig, SweepKind};
use crate::error::CliError;
use crate::report::{branch_rows, num, Bundle, Check, BRANCH_HEADER};
use crate::svg::portrait_svg;

/// Thresholds shared by the command checks and `validate`.
const JUNCTION_TOL: f64 = 1e-6;
const K_TOL: f64 = 1e-4;
const POISSON_TOL: f64 = 1e-6;
const FIRST_INTEGRAL_TOL: f64 = 1e-7;
const FLUX_TOL: f64 = 1e-10;
const ENTROPY_MARGIN: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 1e-12;

fn constant_doping(cfg: &RunConfig, what: &str) -> Result<f64, CliError> {
    cfg.doping_profile()
        .as_constant()
        .ok_or_else(|| CliError::config(format!("{what} needs constant doping (set [doping] b0)")))
}

fn prefixed(prefix: &str, checks: Vec<Check>) -> Vec<Check> {
    checks
        .into_iter()
        .map(|mut c| {
            c.name = format!("{prefix}.{}", c.name);
            c
        })
        .collect()
}

// ---------------------------------------------------------------- portrait

#[derive(Serialize)]
struct PortraitReport<'a> {
    census: Census,
    portrait: &'a Portrait,
}

#[derive(Serialize)]
struct Census {
    single_regime: usize,
    singular: usize,
    smooth_crossing: usize,
}

fn portrait_checks(portrait: &Portrait) -> Vec<Check> {
    let j = portrait.params.current();
    let alpha = portrait.params.alpha();
    let s = &portrait.spec;
    let mut checks = Vec::new();
    let (stay, singular, crossing) = portrait.census();
    checks.push(Check::holds(
        "classified",
        stay + singular + crossing == portrait.trajectories.len(),
        format!("{stay} single-regime, {singular} singular, {crossing} smooth"),
    ));
    if !(portrait.b0 < j && s.n_min < j && j < s.n_max) {
        return checks;
    }
    checks.push(Check::holds("two_smooth_crossings", crossing == 2, format!("{crossing} trajectories cross n = J smoothly")));
    let mut dirs = Vec::new();
    let mut worst = 0.0_f64;
    for t in portrait.smooth_crossings() {
        if let TrajectoryClass::SmoothCrossing { direction, e_at_sonic, slope } = t.class {
            worst = worst.max(if slope.is_finite() { (e_at_sonic - alpha).abs() } else { f64::INFINITY });
            dirs.push(direction);
        }
    }
    checks.push(Check::below("crossing_at_alpha", worst, 1e-9));
    checks.push(Check::holds(
        "both_directions",
        dirs.contains(&Direction::SupToSub) && dirs.contains(&Direction::SubToSup),
        format!("{dirs:?}"),
    ));
    checks
}

pub fn portrait(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    constant_doping(cfg, "portrait")?;
    let portrait = phase_portrait(&cfg.flow_params(), &cfg.doping_profile(), &cfg.portrait, &cfg.options())?;
    for c in portrait_checks(&portrait) {
        out.check(c);
    }
    if out.wants(Format::Csv) {
        let mut rows = Vec::new();
        for (i, t) in portrait.trajectories.iter().enumerate() {
            let origin = match t.origin {
                ep_transonic::portrait::Origin::Seed { .. } => "seed",
                ep_transonic::portrait::Origin::Separatrix { .. } => "separatrix",
            };
            let class = match t.class {
                TrajectoryClass::StaysSupersonic => "stays_supersonic",
                TrajectoryClass::StaysSubsonic => "stays_subsonic",
                TrajectoryClass::Singular { .. } => "singular",
                TrajectoryClass::SmoothCrossing { .. } => "smooth_crossing",
            };
            for &(n, e) in &t.points {
                rows.push(vec![i.to_string(), origin.into(), class.into(), num(n), num(e)]);
            }
        }
        out.write_csv("portrait.csv", &["trajectory", "origin", "class", "n", "E"], &rows)?;
    }
    if out.wants(Format::Json) {
        let (single_regime, singular, smooth_crossing) = portrait.census();
        let report = PortraitReport { census: Census { single_regime, singular, smooth_crossing }, portrait: &portrait };
        out.write_json("portrait.json", &report)?;
    }
    if out.wants(Format::Svg) {
        out.write_text("portrait.svg", &portrait_svg(&portrait))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- smooth

fn smooth_seed(cfg: &RunConfig) -> SmoothSeed {
    match cfg.smooth.n_r {
        Some(n_r) => SmoothSeed::BoundaryPair { n_l: cfg.smooth.n0, n_r },
        None => SmoothSeed::InitialData { n0: cfg.smooth.n0, e0: cfg.smooth.e0 },
    }
}

fn smooth_checks(p: &FlowParams, s: &SmoothSolution) -> Result<Vec<Check>, CliError> {
    let c = &s.crossing;
    let b0 = s.trajectory.b0();
    let mut checks = vec![
        Check::below("sonic_field", (c.e_at - p.alpha()).abs(), JUNCTION_TOL),
        Check::below("sonic_density", (c.n_at - p.current()).abs(), JUNCTION_TOL),
        Check::below("n_slope_match", (c.n_slope_left - c.n_slope_right).abs(), JUNCTION_TOL),
        Check::below("e_slope_match", (c.e_slope_left - c.e_slope_right).abs(), JUNCTION_TOL),
        Check::below("sonic_k", (c.k_numeric - c.k_used).abs(), K_TOL),
        Check::below("poisson", s.branch.poisson_residual(0)?, POISSON_TOL),
    ];
    if p.alpha() == 0.0 {
        let worst = s
            .branch
            .samples(None)?
            .iter()
            .map(|q| (q.e * q.e - g_of_n(q.n, p, b0)).abs())
            .fold(0.0, f64::max);
        checks.push(Check::below("first_integral", worst, FIRST_INTEGRAL_TOL));
    }
    checks.push(Check::advisory(
        "initial_field_inequality",
        s.admissible_inequality,
        format!("E0 = {} against min(alpha, alpha J / n0)", s.e0),
    ));
    if let SmoothSeed::BoundaryPair { n_r, .. } = s.seed {
        checks.push(Check::below_or_warn("boundary_density", (s.n_at_end - n_r).abs(), JUNCTION_TOL));
    }
    Ok(checks)
}

#[derive(Serialize)]
struct SmoothReport<'a> {
    seed: SmoothSeed,
    e0: f64,
    admissible_inequality: bool,
    n_at_end: f64,
    length: f64,
    sonic_k: f64,
    closed_form: bool,
    crossing: &'a ep_transonic::smooth::SonicCrossing,
}

pub fn smooth(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let p = cfg.flow_params();
    constant_doping(cfg, "smooth")?;
    let s = assemble_smooth_solution(&p, &cfg.doping_profile(), smooth_seed(cfg), &cfg.options())?;
    for c in smooth_checks(&p, &s)? {
        out.check(c);
    }
    if out.wants(Format::Csv) {
        out.write_csv("smooth.csv", &BRANCH_HEADER, &branch_rows(&s.branch.samples(Some(cfg.run.samples))?))?;
    }
    if out.wants(Format::Json) {
        let report = SmoothReport {
            seed: s.seed,
            e0: s.e0,
            admissible_inequality: s.admissible_inequality,
            n_at_end: s.n_at_end,
            length: s.length,
            sonic_k: s.trajectory.k(),
            closed_form: s.trajectory.is_closed_form(),
            crossing: &s.crossing,
        };
        out.write_json("smooth.json", &report)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- shock

fn shock_problem(cfg: &RunConfig, opts: &Options) -> Result<ShockProblem, CliError> {
    let prob = ShockProblem::new(&cfg.flow_params(), &cfg.doping_profile(), cfg.shock.n_l, cfg.shock.e_l, opts)?;
    Ok(prob.with_jump_offset(cfg.shock.jump_offset))
}

/// `n_r` from the config, or `𝔐(x_target)`.
fn boundary_density(cfg: &RunConfig, prob: &ShockProblem) -> Result<(f64, &'static str), CliError> {
    match cfg.shock.n_r {
        Some(n_r) => Ok((n_r, "config")),
        None => Ok((prob.boundary_map(cfg.shock.x_target(prob.params().length()))?, "x_target")),
    }
}

fn jump_checks(sol: &ShockSolution) -> Result<Vec<Check>, CliError> {
    let p = sol.supersonic.params();
    let rh = sol.rh_residuals();
    let (m_minus, m_plus) = sol.jump.entropy_margins(p);
    let (sup_max, sub_min) = sol.regime_extrema(400)?;
    let j = p.current();
    Ok(vec![
        Check::below("rh_flux", rh.flux, FLUX_TOL),
        Check::holds("rh_field", rh.field == 0.0, format!("field defect {:e}", rh.field)),
        Check::holds(
            "entropy",
            m_minus > ENTROPY_MARGIN && m_plus > ENTROPY_MARGIN,
            format!("margins J - n- = {m_minus:e}, n+ - J = {m_plus:e}"),
        ),
        Check::holds(
            "regimes",
            sup_max < j && sub_min > j,
            format!("max n before shock {sup_max}, min n after {sub_min}"),
        ),
        Check::below("poisson", sol.poisson_residual(400)?, POISSON_TOL),
    ])
}

fn fit_checks(fit: &ShockFitReport, opts: &Options, j: f64) -> Result<Vec<Check>, CliError> {
    let mut checks = jump_checks(&fit.solution)?;
    checks.push(Check::below("fit_residual", fit.residual, (1e3 * opts.fit_tol * j).max(1e-8)));
    let detail = format!("{} samples, E > 0 at every shock: {}", fit.table.len(), fit.e_positive);
    checks.push(if fit.e_positive {
        Check::holds("map_monotone", fit.monotone_ok, detail)
    } else {
        Check::advisory("map_monotone", fit.monotone_ok, detail)
    });
    for w in &fit.warnings {
        checks.push(Check::warn("fit_note", w.clone()));
    }
    Ok(checks)
}

#[derive(Serialize)]
struct ShockReport<'a> {
    x_s: f64,
    n_r: f64,
    n_r_source: &'static str,
    bracket: (f64, f64),
    residual: f64,
    jump: ep_transonic::JumpRecord,
    rh_residuals: ep_transonic::RhResiduals,
    n_end: f64,
    e_at_shock: f64,
    e_positive: bool,
    monotone_ok: bool,
    history: &'a [ep_transonic::shock::BracketStep],
    table: &'a [ep_transonic::shock::MapSample],
    warnings: &'a [String],
}

fn map_rows(table: &[ep_transonic::shock::MapSample]) -> Vec<Vec<String>> {
    table
        .iter()
        .map(|s| {
            vec![
                num(s.x_s),
                num(s.n_minus),
                num(s.e_at_shock),
                s.n_end.map(num).unwrap_or_default(),
                s.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

/// Default bracket `[0.1 L, 0.9 L]`, kept clear of the supersonic reach
/// where the subsonic side falls back to the sonic line.
fn fit_bracket(cfg: &RunConfig, prob: &ShockProblem) -> (f64, f64) {
    let (lo, hi) = cfg.shock.bracket(prob.params().length());
    if cfg.shock.bracket.is_some() {
        (lo, hi)
    } else {
        (lo, hi.min(0.65 * prob.reach()))
    }
}

fn fitted(cfg: &RunConfig, prob: &ShockProblem) -> Result<(ShockFitReport, &'static str, (f64, f64)), CliError> {
    let (n_r, source) = boundary_density(cfg, prob)?;
    let bracket = fit_bracket(cfg, prob);
    Ok((prob.fit(n_r, bracket)?, source, bracket))
}

pub fn shock(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let opts = cfg.options();
    let prob = shock_problem(cfg, &opts)?;
    let (fit, source, bracket) = fitted(cfg, &prob)?;
    for c in fit_checks(&fit, &opts, prob.params().current())? {
        out.check(c);
    }
    let table = if cfg.shock.table_size == fit.table.len() {
        fit.table.clone()
    } else {
        prob.map_table(bracket.0, bracket.1, cfg.shock.table_size)
    };
    if out.wants(Format::Csv) {
        out.write_csv("shock.csv", &BRANCH_HEADER, &branch_rows(&fit.solution.samples(cfg.run.samples)?))?;
        out.write_csv("boundary_map.csv", &["x_s", "n_minus", "E", "M", "error"], &map_rows(&table))?;
    }
    if out.wants(Format::Json) {
        let report = ShockReport {
            x_s: fit.x_s,
            n_r: fit.n_r,
            n_r_source: source,
            bracket,
            residual: fit.residual,
            jump: fit.solution.jump,
            rh_residuals: fit.solution.rh_residuals(),
            n_end: fit.solution.n_end,
            e_at_shock: fit.e_at_shock,
            e_positive: fit.e_positive,
            monotone_ok: fit.monotone_ok,
            history: &fit.history,
            table: &table,
            warnings: &fit.warnings,
        };
        out.write_json("shock.json", &report)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- sweep

pub fn sweep(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    match cfg.sweep.kind {
        SweepKind::Shock => shock_sweep(cfg, out),
        SweepKind::Smooth => smooth_sweep(cfg, out),
    }
}

fn shock_sweep(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let opts = cfg.options();
    let p = cfg.flow_params();
    let prob = shock_problem(cfg, &opts)?;
    let (n_r, _) = boundary_density(cfg, &prob)?;
    let delta = DopingProfile::constant(cfg.sweep.delta_b)?;
    let window = cfg.sweep.window.unwrap_or(0.1 * p.length());
    let s = &cfg.shock;
    let report = stability_probe_shock(
        &p,
        &cfg.doping_profile(),
        &delta,
        s.n_l,
        s.e_l,
        n_r,
        &cfg.sweep.eps_list,
        fit_bracket(cfg, &prob),
        window,
        &opts,
    )?;
    for row in &report.rows {
        out.check(Check::holds(
            &format!("unique_fit[eps={:e}]", row.eps),
            row.unique,
            format!("x_s = {} in [{}, {}]", row.x_s, row.bracket.0, row.bracket.1),
        ));
        if row.eps == 0.0 {
            out.check(Check::holds("zero_eps_row", row.displacement == 0.0, format!("displacement {:e}", row.displacement)));
        }
    }
    if report.rows.iter().filter(|r| r.eps > 0.0).count() >= 2 {
        out.check(Check::below_or_warn("ratio_spread", report.ratio_spread, cfg.sweep.spread_limit));
    }
    if out.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.eps),
                    num(r.x_s),
                    num(r.displacement),
                    num(r.ratio),
                    num(r.sup_c1),
                    num(r.sub_c1),
                    num(r.sup_ratio),
                    num(r.residual),
                    r.unique.to_string(),
                ]
            })
            .collect();
        let header = ["eps", "x_s", "displacement", "ratio", "sup_c1", "sub_c1", "sup_ratio", "residual", "unique"];
        out.write_csv("sweep.csv", &header, &rows)?;
    }
    if out.wants(Format::Json) {
        out.write_json("sweep.json", &report)?;
    }
    Ok(())
}

fn smooth_sweep(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let b0 = constant_doping(cfg, "smooth sweep")?;
    let base = SmoothCase { b0, n0: cfg.smooth.n0 };
    let [db, dn] = cfg.sweep.direction;
    let reports = smooth_scaling_scan(&cfg.flow_params(), base, (db, dn), &cfg.sweep.deltas, &cfg.options())?;
    let ratios: Vec<f64> = reports.iter().filter(|r| r.delta0 > 0.0).map(|r| r.ratio).collect();
    for r in reports.iter().filter(|r| r.delta0 == 0.0) {
        out.check(Check::holds("zero_delta_row", r.n_c1 + r.e_c2 == 0.0, format!("distance {:e}", r.n_c1 + r.e_c2)));
    }
    if ratios.len() >= 2 {
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = ratios.iter().copied().fold(f64::MAX, f64::min);
        let spread = if min > 0.0 { max / min } else { f64::INFINITY };
        out.check(Check::below_or_warn("ratio_spread", spread, cfg.sweep.spread_limit));
    }
    if out.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    num(r.delta0),
                    num(r.case2.b0),
                    num(r.case2.n0),
                    num(r.n_c1),
                    num(r.e_c2),
                    num(r.ratio),
                    num(r.x0_1),
                    num(r.x0_2),
                ]
            })
            .collect();
        out.write_csv("sweep.csv", &["delta0", "b0", "n0", "n_c1", "e_c2", "ratio", "x0_base", "x0_perturbed"], &rows)?;
    }
    if out.wants(Format::Json) {
        out.write_json("sweep.json", &reports)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- modes

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum ModesReport<'a> {
    Ok {
        x_s: f64,
        growth: &'a GrowthReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        verification: Option<ep_transonic::stability::ModeVerification>,
    },
    PreconditionFailed {
        x_s: f64,
        hypothesis: &'static str,
        e_at_shock: f64,
        message: String,
    },
}

/// Shock state for the mode search: fitted when `n_r` is given, otherwise
/// placed at `x_target`.
fn base_shock(cfg: &RunConfig, prob: &ShockProblem) -> Result<ShockSolution, CliError> {
    if cfg.shock.n_r.is_some() {
        Ok(fitted(cfg, prob)?.0.solution)
    } else {
        Ok(prob.solution_at(cfg.shock.x_target(prob.params().length()))?)
    }
}

fn mode_checks(cfg: &RunConfig, growth: &GrowthReport, sol: &ShockSolution) -> Result<(Vec<Check>, Option<ep_transonic::stability::ModeVerification>), CliError> {
    let opts = cfg.options();
    let mut checks = vec![Check::advisory(
        "hypothesis_margin",
        growth.certified,
        format!("E(x0) = {} against -{}", growth.e_at_shock, opts.hypothesis_delta),
    )];
    let signs = format!("U_x(x0; 0) = {:e}, U_x(x0; nu_max) = {:e}", growth.signs.slope_at_zero, growth.signs.slope_at_nu_max);
    checks.push(if growth.certified {
        Check::holds("sign_structure", growth.signs.holds(), signs)
    } else {
        Check::advisory("sign_structure", growth.signs.holds(), signs)
    });
    let mode = match &growth.search {
        ModeSearch::Found(m) => m,
        ModeSearch::NoModeFound { stations_scanned, .. } => {
            checks.push(Check::warn("mode_found", format!("no root at any of {stations_scanned} matching stations")));
            return Ok((checks, None));
        }
    };
    checks.push(Check::holds(
        "growth_rate_interval",
        mode.nu > 0.0 && mode.nu < mode.nu_max,
        format!("nu = {:e} in (0, {})", mode.nu, mode.nu_max),
    ));
    checks.push(Check::below("station_residual", mode.residual_at_station / mode.max_abs_u, 1e-8));
    let coeffs = linearized_coeffs(&sol.subsonic, sol.subsonic.params())?;
    let v = verify_mode(&coeffs, mode, &opts)?;
    checks.push(Check::below("pde_residual", v.relative_interior, 1e-6));
    Ok((checks, Some(v)))
}

pub fn modes(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let opts = cfg.options();
    let prob = shock_problem(cfg, &opts)?;
    let sol = base_shock(cfg, &prob)?;
    let coeffs = linearized_coeffs(&sol.subsonic, &cfg.flow_params())?;
    let growth = match find_growth_rate(&coeffs, cfg.modes.gamma, &opts) {
        Ok(g) => g,
        Err(err @ Error::PreconditionFailed(_)) => {
            let report = ModesReport::PreconditionFailed {
                x_s: sol.x_s(),
                hypothesis: "E(x0) < 0 at the shock",
                e_at_shock: sol.jump.e_value,
                message: err.to_string(),
            };
            out.write_json("modes.json", &report)?;
            return Err(err.into());
        }
        Err(err) => return Err(err.into()),
    };
    let (checks, verification) = mode_checks(cfg, &growth, &sol)?;
    for c in checks {
        out.check(c);
    }
    if out.wants(Format::Csv) {
        if let ModeSearch::Found(m) = &growth.search {
            let rows: Vec<Vec<String>> = m.samples.iter().map(|s| vec![num(s.x), num(s.u), num(s.u_x)]).collect();
            out.write_csv("modes.csv", &["x", "U", "U_x"], &rows)?;
        }
    }
    if out.wants(Format::Json) {
        out.write_json("modes.json", &ModesReport::Ok { x_s: sol.x_s(), growth: &growth, verification })?;
    }
    Ok(())
}

// ---------------------------------------------------------------- validate

fn model_checks(p: &FlowParams, b: Option<f64>) -> Result<Vec<Check>, CliError> {
    let j = p.current();
    let mut round_trip = 0.0_f64;
    for n in linspace(0.01 * j, 0.999 * j, 200) {
        round_trip = round_trip.max((flux_partner(shock_map_s(n, p)?, p)? - n).abs() / j);
    }
    let mut checks = vec![Check::below("jump_round_trip", round_trip, ROUND_TRIP_TOL)];
    if let Some(b0) = b.filter(|&b0| b0 < j) {
        let mut worst = 0.0_f64;
        for root in [SonicRoot::Plus, SonicRoot::Minus] {
            let k = sonic_slope_k(p, b0, root)?;
            worst = worst.max((k * k - p.alpha() / j * k - 2.0 * (j - b0) / (j * j)).abs());
        }
        checks.push(Check::below("sonic_slope_roots", worst, 1e-12));
        if p.alpha() == 0.0 {
            checks.push(Check::below("g_vanishes_at_sonic", g_of_n(j, p, b0).abs(), 1e-12));
        }
    }
    Ok(checks)
}

/// Closed-form and integrated constructions of the `α = 0` trajectory.
fn pipeline_checks(p: &FlowParams, b0: f64, opts: &Options) -> Result<Vec<Check>, CliError> {
    let p0 = p.with_alpha(0.0)?;
    let j = p.current();
    let lo = n_star_closed_form(&p0, b0)? + 0.05 * j;
    let hi = 2.0 * j;
    let closed = build_with_method(&p0, b0, Direction::SupToSub, lo, hi, Method::ClosedForm, opts)?;
    let integ = build_with_method(&p0, b0, Direction::SupToSub, lo, hi, Method::Integrated, opts)?;
    let mut worst = 0.0_f64;
    for n in linspace(lo, hi, 2048) {
        worst = worst.max((closed.e_tilde(n)? - integ.e_tilde(n)?).abs());
    }
    Ok(vec![Check::below("alpha0_agreement", worst, 1e-7)])
}

fn section(out: &mut Bundle, prefix: &str, result: Result<Vec<Check>, CliError>) {
    let checks = match result {
        Ok(c) => c,
        Err(CliError::Solver(Error::DomainTooShort { x_needed, length, .. })) => {
            vec![Check::warn("reached", format!("sonic point needs x = {x_needed} beyond L = {length}"))]
        }
        Err(e) => vec![Check::failed("solve", e)],
    };
    for c in prefixed(prefix, checks) {
        out.check(c);
    }
}

pub fn validate(cfg: &RunConfig, out: &mut Bundle) -> Result<(), CliError> {
    let p = cfg.flow_params();
    let d = cfg.doping_profile();
    let opts = cfg.options();
    let b = d.as_constant();
    section(out, "model", model_checks(&p, b));
    if let Some(b0) = b.filter(|&b0| b0 < p.current()) {
        section(out, "pipeline", pipeline_checks(&p, b0, &opts));
        section(
            out,
            "smooth",
            assemble_smooth_solution(&p, &d, smooth_seed(cfg), &opts)
                .map_err(CliError::from)
                .and_then(|s| smooth_checks(&p, &s)),
        );
        section(
            out,
            "portrait",
            phase_portrait(&p, &d, &cfg.portrait, &opts).map(|pt| portrait_checks(&pt)).map_err(CliError::from),
        );
    }
    let prob = match shock_problem(cfg, &opts) {
        Ok(prob) => prob,
        Err(e) => {
            section(out, "shock", Err(e));
            return Ok(());
        }
    };
    section(out, "shock", fitted(cfg, &prob).and_then(|(fit, _, _)| fit_checks(&fit, &opts, p.current())));
    let modes = base_shock(cfg, &prob).and_then(|sol| {
        if sol.jump.e_value >= 0.0 {
            return Ok(None);
        }
        let coeffs = linearized_coeffs(&sol.subsonic, &p)?;
        let growth = find_growth_rate(&coeffs, cfg.modes.gamma, &opts)?;
        Ok(Some(mode_checks(cfg, &growth, &sol)?.0))
    });
    match modes {
        Ok(None) => {}
        Ok(Some(c)) => section(out, "modes", Ok(c)),
        Err(e) => section(out, "modes", Err(e)),
    }
    Ok(())
}
