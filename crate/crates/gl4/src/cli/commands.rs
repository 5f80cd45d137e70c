use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::fermi::{closest_point, gamma, map_s, FermiCoords, Point4};
use crate::fermi_check::fermi_report;
use crate::jacobi::{
    jacobi_refinement, linspace, manufactured_field, manufactured_lh, mode_exponents, solve_reduced_system,
    BoundaryData, Chart, JacobiFamily, ModeBranch, NormalField,
};
use crate::residual::{
    omega_winding, reduction_scaling_check, LoopSpec, OmegaQuadrature, ReductionConfig, TrigPerturbation,
};
use crate::saddle::{solve_saddle, SaddleOptions};
use crate::vortex::solve_profile;
use crate::{Gl4Error, Result};

use super::output::{csv_table, heatmap_svg, to_json, write_atomic, write_json};
use super::*;

pub(super) fn dispatch(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Vortex(a) => vortex(a),
        Command::Saddle(a) => saddle(a),
        Command::Fermi(FermiCommand::Check(a)) => fermi_check(a),
        Command::Fermi(FermiCommand::Probe(a)) => fermi_probe(a),
        Command::Jacobi(JacobiCommand::Verify(a)) => jacobi_verify(a),
        Command::Jacobi(JacobiCommand::Modes(a)) => jacobi_modes(a),
        Command::Jacobi(JacobiCommand::Solve(a)) => jacobi_solve(a),
        Command::Reduce(a) => reduce(a),
        Command::Omega(a) => omega(a),
    }
}

fn vortex(a: &VortexArgs) -> Result<String> {
    let p = solve_profile(a.lambda, a.rmax, a.nodes)?;
    write_atomic(&a.out, p.to_csv().as_bytes())?;
    Ok(format!("vortex: λ={} nodes={} → {}", a.lambda, p.nodes, a.out.display()))
}

fn saddle(a: &SaddleArgs) -> Result<String> {
    let opts = SaddleOptions { tol: a.tol, flow_iters: a.flow_iters, newton_max: a.newton_max, ..Default::default() };
    let s = solve_saddle(a.lambda, a.length, a.n, opts)?;
    let summary = s.summary();
    let written = match a.format {
        Format::Csv => {
            write_atomic(&a.out, s.to_csv().as_bytes())?;
            a.out.display().to_string()
        }
        Format::Svg => {
            let csv = a.out.with_extension("csv");
            let svg = heatmap_svg("f(r1, r2)", s.n + 1, &s.f)?;
            write_atomic(&a.out, svg.as_bytes())?;
            write_atomic(&csv, s.to_csv().as_bytes())?;
            format!("{} and {}", a.out.display(), csv.display())
        }
        Format::Json => write_json(&a.out, &summary).map(|_| a.out.display().to_string())?,
    };
    if let Some(p) = &a.summary {
        write_json(p, &summary)?;
    }
    Ok(format!(
        "saddle: λ={} L={} n={} energy={:.10e} residual={:.3e} → {written}",
        a.lambda,
        a.length,
        a.n,
        summary.energy,
        summary.residuals.max()
    ))
}

fn fermi_check(a: &FermiCheckArgs) -> Result<String> {
    check_decreasing("eps", &a.eps.0)?;
    if a.samples == 0 {
        return Err(Gl4Error::invalid("samples must be positive"));
    }
    let rep = fermi_report(&a.eps.0, a.samples, a.dense_samples, a.seed);
    write_json(&a.out, &rep)?;
    let failures: usize = rep.per_epsilon.iter().map(|e| e.failures).sum();
    Ok(format!("fermi check: {} ε values, seed {}, {failures} failures → {}", rep.per_epsilon.len(), a.seed, a.out.display()))
}

#[derive(Serialize)]
struct ProbeReport {
    point: [f64; 4],
    epsilon: f64,
    distance: f64,
    degenerate: bool,
    closest: Vec<ProbeClosest>,
    coords: FermiCoords,
}

#[derive(Serialize)]
struct ProbeClosest {
    s: f64,
    theta: f64,
    cartesian: [f64; 4],
}

fn fermi_probe(a: &FermiProbeArgs) -> Result<String> {
    let v = &a.point.0;
    if v.len() != 4 {
        return Err(Gl4Error::invalid(format!("point: expected ρ1,θ1,ρ2,θ2, got {} numbers", v.len())));
    }
    if v[0] < 0.0 || v[2] < 0.0 {
        return Err(Gl4Error::invalid("point: moduli must be non-negative"));
    }
    let p = Point4::new(v[0], v[1], v[2], v[3]);
    let c = closest_point(&p, a.eps)?;
    let coords = map_s(&p, a.eps)?;
    let rep = ProbeReport {
        point: [v[0], v[1], v[2], v[3]],
        epsilon: a.eps,
        distance: c.distance,
        degenerate: c.degenerate,
        closest: c.params.iter().map(|&(s, theta)| ProbeClosest { s, theta, cartesian: gamma(s, theta, a.eps) }).collect(),
        coords,
    };
    let text = to_json(&rep)?;
    if let Some(out) = &a.out {
        write_atomic(out, text.as_bytes())?;
    }
    Ok(text.trim_end().to_string())
}

fn jacobi_verify(a: &JacobiVerifyArgs) -> Result<String> {
    if a.nodes.0.len() < 2 {
        return Err(Gl4Error::invalid("nodes: need at least two grid sizes"));
    }
    let fams = JacobiFamily::representatives();
    let tables = fams
        .iter()
        .map(|f| jacobi_refinement(f, a.smin, &a.nodes.0, a.ntheta))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Gl4Error::Io(format!("{}: {e}", a.out.display())))?;
    let mut worst = f64::NEG_INFINITY;
    let mut best = f64::INFINITY;
    for t in &tables {
        let rows: Vec<Vec<f64>> = t.rows.iter().map(|r| vec![r.h, r.residual_sup]).collect();
        write_atomic(&a.out.join(format!("{}.csv", t.family)), csv_table("h,residual_sup", &rows)?.as_bytes())?;
        worst = worst.max(t.slope);
        best = best.min(t.slope);
    }
    Ok(format!("jacobi verify: {} families, slopes in [{best:.3}, {worst:.3}] → {}", tables.len(), a.out.display()))
}

fn jacobi_modes(a: &JacobiModesArgs) -> Result<String> {
    let mut rows = Vec::new();
    for k in 0..=a.kmax {
        for (bi, b) in [ModeBranch::One, ModeBranch::Two].into_iter().enumerate() {
            let e = mode_exponents(k, b)?;
            rows.push(vec![
                k as f64,
                (bi + 1) as f64,
                e.plus_growth,
                e.plus_decay,
                e.minus_growth,
                e.minus_decay,
                e.expected_plus,
                e.expected_minus,
            ]);
        }
    }
    let header = "k,branch,plus_growth,plus_decay,minus_growth,minus_decay,expected_plus,expected_minus";
    write_atomic(&a.out, csv_table(header, &rows)?.as_bytes())?;
    Ok(format!("jacobi modes: k ≤ {} → {}", a.kmax, a.out.display()))
}

fn jacobi_solve(a: &JacobiSolveArgs) -> Result<String> {
    if !(a.smin > 0.0 && a.smin < 0.5 * FRAC_PI_2) {
        return Err(Gl4Error::invalid("smin must lie in (0, π/4)"));
    }
    let x = linspace(a.smin, FRAC_PI_2 - a.smin, a.nodes);
    let exact = NormalField::sample(Chart::S, x.clone(), a.ntheta, manufactured_field);
    let rhs = NormalField::sample(Chart::S, x, a.ntheta, manufactured_lh);
    let sol = solve_reduced_system(&rhs, &BoundaryData::from_field(&exact), a.kmax)?;
    let err = sol.scaled_add(1.0, &exact, -1.0).sup();
    write_atomic(&a.out, sol.to_csv().as_bytes())?;
    Ok(format!("jacobi solve: nodes={} kmax={} max error {err:.3e} → {}", a.nodes, a.kmax, a.out.display()))
}

fn reduce(a: &ReduceArgs) -> Result<String> {
    check_decreasing("eps", &a.eps.0)?;
    let profile = solve_profile(a.lambda, a.rmax, a.nodes)?;
    let pert = TrigPerturbation::standard().scaled(a.amp);
    let cfg = ReductionConfig { delta: a.delta, q: a.q, norm_spacing: a.spacing, skip_norm: a.skip_norm, ..Default::default() };
    let rep = reduction_scaling_check(&pert, &profile, &a.eps.0, &cfg)?;
    if rep.epsilon.is_empty() || rep.projections.iter().any(|p| p.is_empty()) {
        return Err(Gl4Error::invalid("empty report"));
    }
    write_json(&a.out, &rep)?;
    if let Some(csv) = &a.csv {
        let rows: Vec<Vec<f64>> = (0..rep.epsilon.len())
            .map(|i| {
                let p = &rep.projections[i][0];
                vec![rep.epsilon[i], rep.f_norm[i].unwrap_or(f64::NAN), p.value[0], p.value[1], rep.mismatch[i]]
            })
            .collect();
        write_atomic(csv, csv_table("eps,Fnorm,proj1,proj2,mismatch", &rows)?.as_bytes())?;
    }
    let fs = rep.slopes.f_norm.map_or("skipped".to_string(), |v| format!("{v:.3}"));
    Ok(format!(
        "reduce: λ={} slopes mismatch={:.3} mismatch_lh={:.3} F_norm={fs} overlap={:.3} → {}",
        a.lambda,
        rep.slopes.mismatch,
        rep.slopes.mismatch_lh,
        rep.slopes.overlap,
        a.out.display()
    ))
}

fn key_values(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Gl4Error::invalid(format!("loop: expected key=value, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Gl4Error::invalid(format!("loop: bad number for `{}`", k.trim())))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// `circle:s=..,theta=..,r=..[,a=..,b=..]` or `points:x1 x2 x3 x4;...`
pub fn parse_loop(spec: &str) -> Result<LoopSpec> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| Gl4Error::invalid("loop: expected `circle:...` or `points:...`"))?;
    match kind.trim() {
        "circle" => {
            let mut s = None;
            let mut theta = 0.0;
            let mut radius = None;
            let mut offset = [0.0, 0.0];
            for (k, v) in key_values(body)? {
                match k.as_str() {
                    "s" => s = Some(v),
                    "theta" => theta = v,
                    "r" => radius = Some(v),
                    "a" => offset[0] = v,
                    "b" => offset[1] = v,
                    _ => return Err(Gl4Error::invalid(format!("loop: unknown circle key `{k}`"))),
                }
            }
            let s = s.ok_or_else(|| Gl4Error::invalid("loop: circle needs s"))?;
            let radius = radius.ok_or_else(|| Gl4Error::invalid("loop: circle needs r"))?;
            Ok(LoopSpec::NormalCircle { s, theta, radius, offset })
        }
        "points" => {
            let pts = body
                .split(';')
                .map(|p| {
                    let v: Vec<f64> = p
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Gl4Error::invalid(format!("loop: bad point `{p}`")))?;
                    <[f64; 4]>::try_from(v).map_err(|_| Gl4Error::invalid(format!("loop: point `{p}` needs 4 coordinates")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LoopSpec::Points(pts))
        }
        k => Err(Gl4Error::invalid(format!("loop: unknown kind `{k}`"))),
    }
}

fn omega(a: &OmegaArgs) -> Result<String> {
    let spec = parse_loop(&a.loop_spec)?;
    let q = OmegaQuadrature { rho_cut: a.rho_cut, n_u: a.n_u, n_theta: a.n_theta, n_loop: a.n_loop };
    let r = omega_winding(&spec, &q)?;
    if let Some(out) = &a.out {
        write_json(out, &r)?;
    }
    let warn = r.warning.as_deref().map_or(String::new(), |w| format!(" (warning: {w})"));
    Ok(format!(
        "omega: ∮ω = {:.10} winding = {:.8} tail bound = {:.3e} min distance = {:.4}{warn}",
        r.value, r.winding, r.tail_bound, r.min_distance
    ))
}
