//! One function per subcommand. Each returns a [`Report`]; exact-identity checks
//! carry the offending instance so a failure can be replayed.

use isolab::{carnot, cayley, coarse, curlfit, gridtv, profiles, spectral, tfchains, wulff};
use isolab::cayley::GroupGraph;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::params::*;
use crate::report::Report;
use crate::CliError;

type Out = Result<Report, CliError>;

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn family(name: &str, q: u32) -> Result<GroupGraph, CliError> {
    match name {
        "z1" => Ok(GroupGraph::zd_axis(1)),
        "z2" => Ok(GroupGraph::zd_axis(2)),
        "z3" => Ok(GroupGraph::zd_axis(3)),
        "heisenberg" => Ok(GroupGraph::heisenberg()),
        "lamplighter" => Ok(GroupGraph::new(cayley::Family::Lamplighter { q, toggles: cayley::default_toggles(q) })?),
        other => Err(schema(format!("unknown family {other:?}"))),
    }
}

fn normalization(name: &str) -> Result<profiles::Normalization, CliError> {
    match name {
        "vertex" => Ok(profiles::Normalization::Vertex),
        "edge" => Ok(profiles::Normalization::DirectedEdge),
        other => Err(schema(format!("unknown normalization {other:?}"))),
    }
}

pub fn profile(p: ProfileParams) -> Out {
    let graph = family(&p.family, p.q)?;
    let norm = normalization(&p.normalization)?;
    let table = profiles::exact_profile(&graph, p.rmax, norm, profiles::Budget::default())?;
    let mut rep = Report::new(&["r", "value", "minorant", "ratio"]);
    for r in 1..=table.r_max() {
        rep.row(vec![json!(r), json!(table.value(r)), json!(table.minorant_at(r)), json!(table.ratio(r))]);
    }
    let lip = profiles::check_lipschitz(&table, graph.degree());
    let trim = profiles::check_trim_subadd(&table, graph.degree());
    rep.check("lipschitz", lip.passed(), Some(to_json(&table.values)));
    rep.check("trim_subadditive", trim.passed(), Some(to_json(&table.values)));
    rep.summary = json!({ "degree": graph.degree(), "window_truncated": table.window_truncated });
    Ok(rep)
}

pub fn wulff(p: WulffParams) -> Out {
    let mut rep = Report::new(&["rho", "size", "perimeter", "ratio", "target"]);
    let (rows, target) = match p.fiber_m {
        Some(m) => (wulff::fiber_lift_ratio(p.d, m, &p.rho, p.max_points)?, wulff::fiber_lift_constant(p.d, m)),
        None => {
            let a = wulff::Anisotropy::axis(p.d);
            (wulff::wulff_ratio_scan(&a, &p.rho, p.max_points)?, wulff::continuum_constant(&a)?.value())
        }
    };
    for r in &rows {
        rep.row(vec![json!(r.rho), json!(r.size), json!(r.perimeter), json!(r.ratio), json!(target)]);
    }
    rep.summary = json!({ "target": target });
    Ok(rep)
}

pub fn gamma(p: GammaParams) -> Out {
    let set = match p.shape.as_str() {
        "disk" => gridtv::ContinuumSet::Disk { center: [0.0, 0.0], radius: 1.0 },
        "square" => gridtv::ContinuumSet::AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
        other => return Err(schema(format!("unknown shape {other:?}"))),
    };
    let phi = match p.anisotropy.as_str() {
        "axis" => gridtv::Integrand::axis(2, &[1.0, 1.0]),
        "stencil3" => gridtv::Integrand { bonds: vec![vec![1, 0], vec![0, 1], vec![1, 1]], alpha: vec![1.0; 3] },
        other => return Err(schema(format!("unknown anisotropy {other:?}"))),
    };
    let fit = gridtv::rate_fit(&set, &phi, &p.k)?;
    let mut rep = Report::new(&["k", "h", "energy_in", "energy_out", "tv", "err_in", "err_out"]);
    for r in &fit.rows {
        rep.row(vec![json!(r.k), json!(r.h), json!(r.energy_in), json!(r.energy_out), json!(r.tv), json!(r.err_in), json!(r.err_out)]);
    }
    rep.summary = json!({ "fit": fit.fit, "sampler_gap_constant": fit.sampler_gap_constant, "liminf_constant": fit.liminf_constant });
    Ok(rep)
}

pub fn curlfit(p: CurlfitParams, seed: u64) -> Out {
    let grid = curlfit::GridComplex::new(p.n.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = Report::new(&["sample", "residual_l1", "curl_l1", "c_up", "bound", "within"]);
    let (mut bound_ok, mut homotopy_ok) = (true, true);
    let (mut bad_bound, mut bad_homotopy) = (None, None);
    for i in 0..p.samples {
        let c = curlfit::random_cochain(&grid, 1, &mut rng, p.max_abs, 4);
        let fit = curlfit::curl_fit(&grid, &c)?;
        let dc = grid.d1(&c)?;
        let lhs = c.sub(&grid.d0(&grid.h1(&c)?)?)?;
        let identity = lhs == grid.h2_up(&dc)? && grid.d1(&grid.d0(&grid.h1(&c)?)?)?.is_zero();
        let within = fit.within_bound();
        if !within && bad_bound.is_none() {
            bad_bound = Some(to_json(&c.to_json()?));
        }
        if !identity && bad_homotopy.is_none() {
            bad_homotopy = Some(to_json(&c.to_json()?));
        }
        bound_ok &= within;
        homotopy_ok &= identity;
        rep.row(vec![
            json!(i),
            json!(fit.residual_l1.to_string()),
            json!(fit.curl_l1.to_string()),
            json!(fit.c_up),
            json!(fit.bound().to_string()),
            json!(within),
        ]);
    }
    rep.check("operator_bound", bound_ok, bad_bound);
    rep.check("homotopy_identity", homotopy_ok, bad_homotopy);
    rep.summary = json!({ "c_up": grid.c_up(), "n": p.n });
    Ok(rep)
}

pub fn heis(p: HeisParams, seed: u64) -> Out {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cocycle = carnot::Cocycle::heisenberg();
    let mut rep = Report::new(&["stack", "columns", "boundary_term", "delta_term", "shear_term", "total", "direct"]);
    let mut bad = None;
    for i in 0..p.random_stacks {
        let stack = carnot::random_heis_stack(&mut rng, p.side, p.max_height);
        let dec = carnot::heis_decompose(&stack)?;
        let direct = carnot::direct_boundary(&stack, &cocycle)?;
        if dec.total != direct && bad.is_none() {
            bad = Some(to_json(&stack));
        }
        rep.row(vec![
            json!(i),
            json!(stack.columns.len()),
            json!(dec.boundary_term),
            json!(dec.delta_term),
            json!(dec.shear_term),
            json!(dec.total),
            json!(direct),
        ]);
    }
    let exact = bad.is_none();
    rep.check("decomposition_equals_lift", exact, bad);
    rep.summary = json!({ "stacks": p.random_stacks, "all_identities_exact": exact });
    Ok(rep)
}

pub fn step2(p: Step2Params, seed: u64) -> Out {
    let omega: Vec<Vec<Vec<i64>>> = match &p.omega {
        Some(s) => serde_json::from_str(s).map_err(|e| schema(format!("omega: {e}")))?,
        None => vec![
            vec![vec![0, 0], vec![1, 0], vec![0, 2]],
            vec![vec![0, 0], vec![0, 0], vec![-1, 1]],
            vec![vec![0, 0], vec![0, 0], vec![0, 0]],
        ],
    };
    let cocycle = carnot::Cocycle::new(omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = Report::new(&["stack", "columns", "lower", "direct", "upper", "exact"]);
    let mut bad = None;
    for i in 0..p.random_stacks {
        let stack = carnot::random_box_stack(&mut rng, cocycle.d(), cocycle.m(), p.side, p.max_height);
        let b = carnot::step2_bounds(&stack, &cocycle)?;
        let ok = b.sandwich() && b.exact.is_none_or(|e| e == b.direct);
        if !ok && bad.is_none() {
            bad = Some(json!({ "stack": stack, "omega": cocycle }));
        }
        rep.row(vec![json!(i), json!(stack.columns.len()), json!(b.lower), json!(b.direct), json!(b.upper), json!(b.exact)]);
    }
    rep.check("sandwich", bad.is_none(), bad);
    rep.check("constant_curl", carnot::constant_curl_check(&cocycle, &vec![4; cocycle.d()])?, None);
    Ok(rep)
}

pub fn tf(p: TfParams) -> Out {
    let graph = GroupGraph::zd_axis(2);
    let vertex = profiles::exact_profile(&graph, p.rmax, profiles::Normalization::Vertex, profiles::Budget::default())?;
    let edge = profiles::exact_profile(&graph, p.rmax, profiles::Normalization::DirectedEdge, profiles::Budget::default())?;
    let fam = tfchains::z2_square_family(p.rmax);
    let c0 = tfchains::nnm_constant(&graph, &fam, &edge)?;
    let run = tfchains::interleave_from_nnm(&graph, &fam, p.theta, &vertex, 1, p.rmax)?;
    let report = tfchains::verify_tf(&graph, &run.chain, &vertex)?;
    // the decoupled chain runs past the window; clause (i) is only checked inside it
    let wide = tfchains::z2_square_family(16 * p.rmax.max(1));
    let decoupled = tfchains::decoupled_chain(&graph, &wide, profiles::Normalization::Vertex, 1, wide.len())?;
    let decoupled_report = tfchains::verify_tf(&graph, &decoupled.chain, &vertex)?;
    let mut rep = Report::new(&["step", "size", "vertex_boundary", "edge_boundary", "increment"]);
    for (i, r) in run.chain.records.iter().enumerate() {
        rep.row(vec![json!(i), json!(r.size), json!(r.vertex_boundary), json!(r.edge_boundary), json!(r.increment)]);
    }
    let delta = graph.degree() as f64;
    let a_bound = c0 * delta + (c0 * delta * delta + 1.0) * p.theta;
    rep.check("records_consistent", report.consistent(), Some(to_json(&report.record_mismatches)));
    rep.check("decoupled_b_equals_one", decoupled_report.b_observed == Some(1.0), Some(json!(decoupled.levels)));
    rep.summary = json!({
        "report": report,
        "c0": c0,
        "a_bound": a_bound,
        "levels": run.levels,
        "decoupled_levels": decoupled.levels,
        "decoupled_report": decoupled_report,
    });
    Ok(rep)
}

pub fn lamplighter(p: LamplighterParams) -> Out {
    let toggles = cayley::default_toggles(p.q);
    let rows = tfchains::lamplighter_checkpoints(p.kmin, p.kmax, p.q, toggles.len() as u64);
    let mut rep = Report::new(&["k", "lamps", "size", "boundary", "delta", "delta_sqrt_n"]);
    for r in &rows {
        rep.row(vec![json!(r.k), json!(r.lamps), json!(r.size.to_string()), json!(r.boundary.to_string()), json!(r.delta), json!(r.delta_sqrt_n)]);
    }
    let mut bad = None;
    for n in 1..=p.brute {
        let u: Vec<i64> = (0..n as i64).collect();
        for m in 0..=n as u64 {
            let s = tfchains::lamplighter_split(&u, m, p.q, &toggles)?;
            if s.matches() == Some(false) && bad.is_none() {
                bad = Some(json!({ "u": u, "m": m, "q": p.q, "formula": s.formula.to_string(), "brute": s.brute }));
            }
        }
    }
    rep.check("split_formula", bad.is_none(), bad);
    rep.summary = json!({
        "toggles": toggles,
        "first_non_decrease": tfchains::first_non_decrease(&rows),
        "max_delta_sqrt_n": rows.iter().map(|r| r.delta_sqrt_n).fold(0.0, f64::max),
    });
    Ok(rep)
}

pub fn semidirect(p: SemidirectParams) -> Out {
    let a: cayley::IntMatrix = serde_json::from_str(&p.a).map_err(|e| schema(format!("a: {e}")))?;
    let body = match p.body.as_str() {
        "cube" => tfchains::Body::Cube,
        "ball" => tfchains::Body::Ball,
        "diamond" => tfchains::Body::Diamond,
        other => return Err(schema(format!("unknown body {other:?}"))),
    };
    let report = tfchains::log_height_chain(&a, body, p.alpha, p.rmin, p.rmax)?;
    let growth = tfchains::cofactor_growth(&a, 8, report.lambda * (1.0 + 1e-9))?;
    let mut rep = Report::new(&["r", "t", "base", "size", "boundary", "vertical", "folner_ratio", "increment", "increment_ratio"]);
    for r in &report.rows {
        rep.row(vec![
            json!(r.r),
            json!(r.t),
            json!(r.base),
            json!(r.size),
            json!(r.boundary),
            json!(r.vertical),
            json!(r.folner_ratio),
            json!(r.increment),
            json!(r.increment_ratio),
        ]);
    }
    rep.check("zero_vertical_drift", report.vertical_exact, Some(json!({ "a": a, "body": body })));
    rep.check("nested", report.nested, Some(json!({ "a": a, "alpha": p.alpha })));
    rep.summary = json!({
        "lambda": report.lambda,
        "alpha_log_lambda": report.alpha_log_lambda,
        "non_folner_regime": report.non_folner_regime,
        "c1": report.c1, "c2": report.c2, "c3": report.c3,
        "b_theory": report.b_theory,
        "b_observed": report.b_observed,
        "c_lambda": growth.c_lambda,
    });
    Ok(rep)
}

pub fn balloon(p: BalloonParams) -> Out {
    let g = tfchains::BalloonGraph::new(p.sizes.clone())?;
    let mut rep = Report::new(&["r", "lower", "upper", "minorant_upper", "ratio_lower"]);
    for r in 1..=g.vertex_count() {
        let b = tfchains::balloon_profile(&g, r)?;
        rep.row(vec![json!(r), json!(b.lower), json!(b.upper), json!(b.minorant_upper), json!(b.ratio_lower())]);
    }
    rep.summary = json!({ "bridges": g.bridges(), "vertices": g.vertex_count() });
    Ok(rep)
}

pub fn spectral(p: SpectralParams) -> Out {
    let graph = GroupGraph::zd_axis(p.d);
    let cheeger = spectral::cheeger_fk_check(&graph, p.max_size)?;
    let fk = spectral::fk_box_check(p.d, &p.sides, 1600)?;
    let mut rep = Report::new(&["side", "volume", "lambda1", "closed_form", "fk_bound"]);
    for r in &fk {
        rep.row(vec![json!(r.side), json!(r.volume), json!(r.lambda1), json!(r.closed_form), json!(r.bound)]);
    }
    rep.check("cheeger", cheeger.holds(), Some(to_json(&cheeger.violations)));
    rep.check("faber_krahn_boxes", fk.iter().all(|r| r.lambda1 >= r.bound), None);
    rep.summary = json!({ "cheeger_sets": cheeger.sets, "tightest": cheeger.tightest });
    Ok(rep)
}

pub fn mixing(p: MixingParams) -> Out {
    let distance = match p.distance.as_str() {
        "tv" => spectral::Distance::Tv,
        "linf" => spectral::Distance::Linf,
        other => return Err(schema(format!("unknown distance {other:?}"))),
    };
    let table = spectral::torus_mixing(p.d, &p.m, p.eps, distance)?;
    let mut rep = Report::new(&["m", "t_mix", "model", "ratio", "ratio_m2", "relaxation_bound"]);
    for r in &table.rows {
        rep.row(vec![json!(r.m), json!(r.t_mix), json!(r.model), json!(r.ratio), json!(r.ratio_m2), json!(r.relaxation_bound)]);
    }
    rep.check("relaxation_bound", table.relaxation_holds, None);
    rep.summary = json!({ "slope": table.slope, "drift": table.drift, "drift_m2": table.drift_m2 });
    Ok(rep)
}

pub fn embed(p: EmbedParams) -> Out {
    let spec = coarse::integer_dyadic_spec(p.levels)?;
    let n = p.points.max(2);
    let mut ts: Vec<usize> = (0..n).map(|i| (p.tmax as f64).powf(i as f64 / (n - 1) as f64).round() as usize).collect();
    ts.dedup();
    let scan = coarse::compression_scan(&spec, &ts)?;
    let mut rep = Report::new(&["t", "distance", "lower", "upper"]);
    for r in &scan.rows {
        rep.row(vec![json!(r.t), json!(r.value), json!(r.lower), json!(r.upper)]);
    }
    let bad = scan.rows.iter().find(|r| !r.within()).map(to_json);
    rep.check("bounds", scan.bounds_hold, bad);
    rep.summary = json!({
        "shift": scan.shift, "c_low": scan.c_low, "c_up": scan.c_up,
        "reference_low": scan.reference_low, "reference_up": scan.reference_up, "vacuous": scan.vacuous,
    });
    Ok(rep)
}

pub fn tempered(p: TemperedParams) -> Out {
    let rows = coarse::cube_tempered_constants(p.d, p.kmax)?;
    let mut rep = Report::new(&["k", "product", "size", "ratio", "ratio_value"]);
    let cap = (1u64 << p.d) as f64;
    for r in &rows {
        rep.row(vec![json!(r.k), json!(r.product), json!(r.size), json!(r.ratio.to_string()), json!(r.ratio.to_f64())]);
    }
    let bad = rows.iter().find(|r| r.ratio.to_f64().unwrap_or(f64::INFINITY) >= cap).map(to_json);
    rep.check("below_2_pow_d", bad.is_none(), bad);
    Ok(rep)
}
