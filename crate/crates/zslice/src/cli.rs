//! Command-line front end.
//!
//! Four subcommands: `lambda-map` (dispersion grid with region labels),
//! `propagator` (one or all of the three propagator methods at a point),
//! `invariants` (named property suites with measured residuals), and
//! `oracle` (lattice path-integral three-way comparison over seeded
//! boundary configurations).
//!
//! Grids and per-configuration tables default to CSV; structured records
//! default to JSON; `--format` overrides either way. Flags override the
//! optional `--config` JSON file. Output bytes depend only on the inputs
//! and the seed: wall-clock time is reported on stderr, never in output
//! files. Exit codes: 0 success, 1 numerical failure, 2 invalid input.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{lambda_of, MassParam, MomentumTriple, Region};
use crate::field_ops::{
    build_h_modes, build_hprime_for_modes, build_phi_grid, build_phi_pi_fock, build_pi_grid,
    check_evolution_commutators, SiteGrid,
};
use crate::linalg::{commutator, corner_projector, dagger, identity, max_abs, norm2_vec, project, CVec};
use crate::mode_algebra::{
    commutator_coeff, conjugate_symbol, hprime_coeff, realize_p1_mode, realize_p2_pair,
    build_hprime_modes, ModeAssignment, ModeOpSymbol, ModeRealization,
};
use crate::propagator::{
    propagator_4d, propagator_tform, propagator_zform, Method, PropagatorValue, QuadratureSpec,
    SpacetimePoint,
};
use crate::rng::DetRng;
use crate::transfer_oracle::{amplitude_direct, amplitude_sliced, build_action, Axis, BoundaryData, LatticeSpec4D};
use crate::zevolution::{
    evolve_pair, expectation, fixture_4x4, heisenberg_transport, left_right_eigen_check,
    EvolutionContext, StatePair,
};
use crate::Error;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "zslice", version, about = "z-sliced scalar-field numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a (k_x, k_t) grid of lambda values with region labels
    LambdaMap(CommonArgs),
    /// Evaluate the propagator at a spacetime point by one or all methods
    Propagator(CommonArgs),
    /// Run a named invariant suite and report residuals
    Invariants(CommonArgs),
    /// Compare direct, t-sliced and z-sliced lattice amplitudes
    Oracle(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Mass m > 0
    #[arg(long)]
    m: Option<f64>,
    /// i-epsilon regulator
    #[arg(long)]
    eps: Option<f64>,
    /// Momentum bound per axis (propagator) or grid half-width (lambda-map)
    #[arg(long)]
    cutoff: Option<f64>,
    /// Nodes per axis; for method=all the 4D integral uses 2/3 of this
    #[arg(long)]
    nodes: Option<usize>,
    /// Spacetime point "x,y,z,t"
    #[arg(long)]
    point: Option<String>,
    /// Propagator method: zform | tform | fourd | all
    #[arg(long)]
    method: Option<String>,
    /// Lattice extents "TxXxYxZ", e.g. 3x2x2x3
    #[arg(long)]
    lattice: Option<String>,
    /// Lattice regulator delta > 0
    #[arg(long)]
    delta: Option<f64>,
    /// 64-bit seed for random boundary configurations
    #[arg(long)]
    seed: Option<u64>,
    /// Invariant suite: algebra | fieldops | evolution | oracle | all
    #[arg(long)]
    suite: Option<String>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json (per-command default when omitted)
    #[arg(long)]
    format: Option<String>,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

/// The same knobs as the flags, readable from a JSON document.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<f64>,
    eps: Option<f64>,
    cutoff: Option<f64>,
    nodes: Option<usize>,
    point: Option<String>,
    method: Option<String>,
    lattice: Option<String>,
    delta: Option<f64>,
    seed: Option<u64>,
    suite: Option<String>,
    out: Option<PathBuf>,
    format: Option<String>,
}

/// Flags merged over the config file.
struct RunConfig {
    m: f64,
    eps: f64,
    cutoff: Option<f64>,
    nodes: Option<usize>,
    point: [f64; 4],
    method: String,
    lattice: (usize, usize, usize, usize),
    delta: f64,
    seed: u64,
    suite: String,
    out: Option<PathBuf>,
    format: Option<String>,
}

fn parse_point(s: &str) -> Result<[f64; 4], Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Domain(format!("point must be \"x,y,z,t\", got {s:?}")));
    }
    let mut out = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Domain(format!("bad point coordinate {p:?}")))?;
    }
    Ok(out)
}

fn parse_lattice(s: &str) -> Result<(usize, usize, usize, usize), Error> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 4 {
        return Err(Error::Domain(format!("lattice must be \"TxXxYxZ\", got {s:?}")));
    }
    let mut dims = [0usize; 4];
    for (i, p) in parts.iter().enumerate() {
        dims[i] = p
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Domain(format!("bad lattice extent {p:?}")))?;
    }
    Ok((dims[0], dims[1], dims[2], dims[3]))
}

fn resolve(args: &CommonArgs) -> Result<RunConfig, Error> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Domain(format!("bad config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let point_str = args.point.clone().or(file.point);
    let lattice_str = args.lattice.clone().or(file.lattice);
    Ok(RunConfig {
        m: args.m.or(file.m).unwrap_or(1.0),
        eps: args.eps.or(file.eps).unwrap_or(0.1),
        cutoff: args.cutoff.or(file.cutoff),
        nodes: args.nodes.or(file.nodes),
        point: match point_str {
            Some(s) => parse_point(&s)?,
            None => [0.0; 4],
        },
        method: args.method.clone().or(file.method).unwrap_or_else(|| "all".into()),
        lattice: match lattice_str {
            Some(s) => parse_lattice(&s)?,
            None => (3, 2, 2, 3),
        },
        delta: args.delta.or(file.delta).unwrap_or(0.1),
        seed: args.seed.or(file.seed).unwrap_or(42),
        suite: args.suite.clone().or(file.suite).unwrap_or_else(|| "all".into()),
        out: args.out.clone().or(file.out),
        format: args.format.clone().or(file.format),
    })
}

/// A rendered output: a column table or a structured record.
enum Output {
    Table { columns: Vec<String>, rows: Vec<Vec<String>> },
    Record(serde_json::Value),
}

impl Output {
    fn render(&self, format: &str) -> Result<String, Error> {
        match (self, format) {
            (Output::Table { columns, rows }, "csv") => {
                let mut s = columns.join(",");
                s.push('\n');
                for r in rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
                Ok(s)
            }
            (Output::Table { columns, rows }, "json") => {
                let v = serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "columns": columns,
                    "rows": rows,
                });
                Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
            }
            (Output::Record(v), "json") => {
                Ok(format!("{}\n", serde_json::to_string_pretty(v).unwrap()))
            }
            (Output::Record(v), "csv") => {
                // flatten one level of the record's arrays of objects
                let mut s = String::from("key,value\n");
                flatten_json("", v, &mut s);
                Ok(s)
            }
            (_, other) => Err(Error::Domain(format!("unknown format {other:?}"))),
        }
    }
}

fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, val, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten_json(&format!("{prefix}[{i}]"), val, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push(',');
            out.push_str(&other.to_string().replace(',', ";"));
            out.push('\n');
        }
    }
}

fn region_name(r: Region) -> &'static str {
    match r {
        Region::P1 => "P1",
        Region::P2 => "P2",
        Region::Boundary => "boundary",
    }
}

fn cmd_lambda_map(cfg: &RunConfig) -> Result<Output, Error> {
    let m = MassParam::new(cfg.m, cfg.eps)?;
    let half = cfg.cutoff.unwrap_or(3.0);
    let n = cfg.nodes.unwrap_or(61);
    if n < 2 {
        return Err(Error::Domain(format!("lambda-map needs at least 2 nodes, got {n}")));
    }
    let axis: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut rows = Vec::with_capacity(n * n);
    for &kx in &axis {
        for &kt in &axis {
            let kp = MomentumTriple::new(kx, 0.0, kt)?;
            let dv = lambda_of(kp, m);
            rows.push(vec![
                format!("{kx}"),
                "0".to_string(),
                format!("{kt}"),
                format!("{}", dv.lambda.re),
                format!("{}", dv.lambda.im),
                region_name(dv.region).to_string(),
                "exact".to_string(),
            ]);
        }
    }
    Ok(Output::Table {
        columns: ["kx", "ky", "kt", "re_lambda", "im_lambda", "region", "tag"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    })
}

#[derive(Serialize)]
struct MethodOutput {
    method: &'static str,
    value_re: f64,
    value_im: f64,
    error_estimate: f64,
}

fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn cmd_propagator(cfg: &RunConfig) -> Result<Output, Error> {
    let m = MassParam::new(cfg.m, cfg.eps)?;
    let [x, y, z, t] = cfg.point;
    let p = SpacetimePoint::new(x, y, z, t)?;
    let cutoff = cfg.cutoff.unwrap_or(6.0);
    let nodes3 = cfg.nodes.unwrap_or(48);
    let nodes4 = match cfg.nodes {
        Some(n) => (n * 2 / 3).max(16),
        None => 32,
    };
    let mut outputs: Vec<(Method, PropagatorValue)> = Vec::new();
    let run = |method: Method| -> Result<PropagatorValue, Error> {
        match method {
            Method::ZForm => propagator_zform(p, m, &QuadratureSpec::new(cutoff, nodes3)?),
            Method::TForm => propagator_tform(p, m, &QuadratureSpec::new(cutoff, nodes3)?),
            Method::FourD => propagator_4d(p, m, &QuadratureSpec::new(cutoff, nodes4)?),
        }
    };
    match cfg.method.as_str() {
        "zform" => outputs.push((Method::ZForm, run(Method::ZForm)?)),
        "tform" => outputs.push((Method::TForm, run(Method::TForm)?)),
        "fourd" => outputs.push((Method::FourD, run(Method::FourD)?)),
        "all" => {
            for method in [Method::ZForm, Method::TForm, Method::FourD] {
                outputs.push((method, run(method)?));
            }
        }
        other => return Err(Error::Domain(format!("unknown method {other:?}"))),
    }
    let method_outputs: Vec<MethodOutput> = outputs
        .iter()
        .map(|(method, v)| MethodOutput {
            method: method.as_str(),
            value_re: v.value.re,
            value_im: v.value.im,
            error_estimate: v.error_estimate,
        })
        .collect();
    let mut record = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "propagator",
        "crate_version": env!("CARGO_PKG_VERSION"),
        "inputs": {
            "m": cfg.m,
            "eps": cfg.eps,
            "cutoff": cutoff,
            "nodes_3d": nodes3,
            "nodes_4d": nodes4,
            "point": [x, y, z, t],
            "method": cfg.method,
        },
        "outputs": method_outputs,
    });
    if cfg.method == "all" {
        let find = |m: Method| outputs.iter().find(|(k, _)| *k == m).unwrap().1.value;
        record["pairwise_relative_deviation"] = serde_json::json!({
            "zform_tform": relative_deviation(find(Method::ZForm), find(Method::TForm)),
            "zform_fourd": relative_deviation(find(Method::ZForm), find(Method::FourD)),
            "tform_fourd": relative_deviation(find(Method::TForm), find(Method::FourD)),
        });
    }
    Ok(Output::Record(record))
}

/// One measured property with its pass threshold.
#[derive(Serialize, Clone)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    /// "<=" for residual bounds, ">" for quantities that must be visibly
    /// nonzero (e.g. the left/right overlap defect)
    pub requirement: &'static str,
    pub passed: bool,
}

fn check_le(name: &str, residual: f64, threshold: f64) -> Check {
    Check {
        name: name.to_string(),
        residual,
        threshold,
        requirement: "<=",
        passed: residual.is_finite() && residual <= threshold,
    }
}

fn check_gt(name: &str, residual: f64, threshold: f64) -> Check {
    Check {
        name: name.to_string(),
        residual,
        threshold,
        requirement: ">",
        passed: residual.is_finite() && residual > threshold,
    }
}

/// Structure constants and matrix realizations of the ladder algebra.
pub fn algebra_suite() -> Result<Vec<Check>, Error> {
    let m = MassParam::bare(1.0)?;
    let k1 = MomentumTriple::new(0.0, 0.0, 2.0)?; // P1, lambda = sqrt(3)
    let k2 = MomentumTriple::new(1.0, 0.0, 1.0)?; // P2, lambda = i
    let mut checks = Vec::new();

    let c1 = commutator_coeff(ModeOpSymbol::a(k1), ModeOpSymbol::abar(k1), m);
    checks.push(check_le("p1_commutator_coeff", (c1 - 1.0).norm(), 1e-12));
    let c2 = commutator_coeff(ModeOpSymbol::a(k2), ModeOpSymbol::abar(k2), m);
    checks.push(check_le(
        "p2_commutator_coeff",
        (c2 - Complex64::new(0.0, -1.0)).norm(),
        1e-12,
    ));
    let anti = commutator_coeff(ModeOpSymbol::abar(k1), ModeOpSymbol::a(k1), m) + c1;
    checks.push(check_le("commutator_antisymmetry", anti.norm(), 1e-12));

    let conj_p1 = conjugate_symbol(ModeOpSymbol::a(k1), m) == ModeOpSymbol::abar(k1);
    checks.push(check_le("p1_conjugation_rule", if conj_p1 { 0.0 } else { 1.0 }, 0.5));
    let conj_p2 = conjugate_symbol(ModeOpSymbol::a(k2), m) == ModeOpSymbol::a(k2.negated());
    checks.push(check_le("p2_conjugation_rule", if conj_p2 { 0.0 } else { 1.0 }, 0.5));
    let invol = conjugate_symbol(conjugate_symbol(ModeOpSymbol::abar(k2), m), m)
        == ModeOpSymbol::abar(k2);
    checks.push(check_le("conjugation_involution", if invol { 0.0 } else { 1.0 }, 0.5));

    let h1 = hprime_coeff(k1, m)?;
    checks.push(check_le(
        "p1_hprime_coeff",
        (h1 + Complex64::new(3f64.sqrt(), 0.0)).norm(),
        1e-12,
    ));
    let h2 = hprime_coeff(k2, m)?;
    checks.push(check_le("p2_hprime_coeff", (h2 - 1.0).norm(), 1e-12));

    // P1 matrix realization: [H', A] = lambda A off corner
    let dim = 8;
    let lambda1 = lambda_of(k1, m).lambda;
    let r1 = realize_p1_mode(dim)?;
    let a1 = match &r1 {
        ModeRealization::P1 { a, .. } => a.clone(),
        _ => unreachable!(),
    };
    let hp1 = build_hprime_modes(&[ModeAssignment { mode: k1, realization: r1 }], m)?;
    let p1 = corner_projector(&hp1.osc_dims, 2);
    let res1 = commutator(&hp1.matrix, &a1) - a1.mapv(|v| v * lambda1);
    checks.push(check_le("p1_hprime_ladder", max_abs(&project(&p1, &res1)), 1e-10));
    checks.push(check_le(
        "p1_zero_point",
        (hp1.e0 + lambda1 / 2.0).norm(),
        1e-12,
    ));

    // P2 pair realization
    let dim2 = 6;
    let r2 = realize_p2_pair(k2, m, dim2)?;
    let (a_k, a_mk, abar_k) = match &r2 {
        ModeRealization::P2Pair { a_k, a_mk, abar_k, .. } => {
            (a_k.clone(), a_mk.clone(), abar_k.clone())
        }
        _ => unreachable!(),
    };
    let p2 = corner_projector(&r2.osc_dims(), 2);
    let comm = commutator(&a_k, &abar_k)
        + identity(r2.total_dim()).mapv(|v| v * Complex64::new(0.0, 1.0));
    checks.push(check_le("p2_pair_commutator", max_abs(&project(&p2, &comm)), 1e-10));
    checks.push(check_le(
        "p2_conjugate_pairing",
        max_abs(&(dagger(&a_k) - &a_mk)),
        1e-15,
    ));
    Ok(checks)
}

/// Canonical and evolution commutators of the field realizations.
pub fn fieldops_suite() -> Result<Vec<Check>, Error> {
    let mut checks = Vec::new();
    // Fock realization, dim 16
    let dim = 16;
    let (phi_f, pi_f) = build_phi_pi_fock(1.0, dim)?;
    let p = corner_projector(&[dim], 2);
    let canon = commutator(&pi_f, &phi_f)
        + identity(dim).mapv(|v| v * Complex64::new(0.0, 1.0));
    checks.push(check_le("fock_canonical_commutator", max_abs(&project(&p, &canon)), 1e-12));

    // grid realization on band-limited packets
    let g = SiteGrid::new(64, 12.0)?;
    let phi_g = build_phi_grid(&g);
    let pi_g = build_pi_grid(&g);
    let comm = commutator(&pi_g, &phi_g);
    let sigma = 1.2;
    let mut worst = 0.0f64;
    for x0 in [0.0, 1.0, -2.0] {
        for k0 in [0.0, 1.0] {
            let v: CVec = ndarray::Array1::from_iter((0..64).map(|j| {
                let xv = g.point(j);
                Complex64::from_polar((-(xv - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k0 * xv)
            }));
            let residual = comm.dot(&v) + v.mapv(|c| c * Complex64::new(0.0, 1.0));
            worst = worst.max(norm2_vec(&residual) / norm2_vec(&v));
        }
    }
    checks.push(check_le("grid_canonical_commutator", worst, 1e-8));

    // evolution commutators with their opposite signs, single P1 mode
    let m = MassParam::bare(1.0)?;
    let mode = MomentumTriple::new(0.0, 0.0, 2.0)?;
    let lambda = lambda_of(mode, m).lambda.re;
    let (phi, pi) = build_phi_pi_fock(lambda, dim)?;
    let h = build_h_modes(&[lambda], dim)?;
    let hp = build_hprime_for_modes(&[mode], m, dim)?;
    let r = check_evolution_commutators(&h, &hp.matrix, &phi, &pi, &p)?;
    checks.push(check_le("t_evolution_commutator", r.t_form, 1e-10));
    checks.push(check_le("z_evolution_commutator", r.z_form, 1e-10));
    let wrong = commutator(&h, &phi).mapv(|v| v * Complex64::new(0.0, 1.0)) + &pi;
    checks.push(check_gt("sign_flip_is_real", max_abs(&project(&p, &wrong)), 0.1));
    Ok(checks)
}

/// Non-hermitian evolution: pseudo-hermiticity, left/right pairs,
/// Schroedinger-Heisenberg consistency, and the normality claim.
pub fn evolution_suite() -> Result<Vec<Check>, Error> {
    use ndarray_linalg::Eig;
    let mut checks = Vec::new();
    let ctx = EvolutionContext::new(fixture_4x4(21)?)?;
    let mut phi = ndarray::Array2::<Complex64>::zeros((4, 4));
    for j in 0..4 {
        phi[[j, j]] = Complex64::new(j as f64 - 1.5, 0.0);
    }
    let moved = heisenberg_transport(&phi, 1.3, &ctx)?;
    let (evs, _) = moved.eig()?;
    let mut drift = 0.0f64;
    let mut re: Vec<f64> = evs.iter().map(|e| e.re).collect();
    re.sort_by(f64::total_cmp);
    for (j, e) in re.iter().enumerate() {
        drift = drift.max((e - (j as f64 - 1.5)).abs());
    }
    for e in evs.iter() {
        drift = drift.max(e.im.abs());
    }
    checks.push(check_le("transported_spectrum_real", drift, 1e-8));

    let mut rng = DetRng::new(12);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut op = ndarray::Array2::<Complex64>::zeros((4, 4));
        for i in 0..4 {
            for j in i..4 {
                let v = Complex64::new(rng.next_sym(), if i == j { 0.0 } else { rng.next_sym() });
                op[[i, j]] = v;
                op[[j, i]] = v.conj();
            }
        }
        let v: CVec = ndarray::Array1::from_iter(
            (0..4).map(|_| Complex64::new(rng.next_sym(), rng.next_sym())),
        );
        let z = 0.9;
        let pair = evolve_pair(&StatePair::at_origin(v.clone()), z, &ctx)?;
        let s = expectation(&pair, &op)?;
        let hmat = heisenberg_transport(&op, z, &ctx)?;
        let hval = v.mapv(|c| c.conj()).dot(&hmat.dot(&v));
        worst = worst.max((s - hval).norm());
    }
    checks.push(check_le("schroedinger_heisenberg", worst, 1e-10));

    let mut phi_d = ndarray::Array2::<Complex64>::zeros((4, 4));
    for j in 0..4 {
        phi_d[[j, j]] = Complex64::new(j as f64, 0.0);
    }
    let report = left_right_eigen_check(&phi_d, 1.0, &ctx)?;
    checks.push(check_le(
        "left_right_eigen_residual",
        report.right_residual.max(report.left_residual),
        1e-9,
    ));
    checks.push(check_gt("left_right_overlap_defect", report.overlap_defect, 1e-3));

    // hermitian fixture: unitary limit
    let h = ndarray::array![
        [Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.3)],
        [Complex64::new(0.2, -0.3), Complex64::new(-0.5, 0.0)],
    ];
    let hctx = EvolutionContext::new(h)?;
    let v: CVec = ndarray::array![Complex64::new(0.6, 0.1), Complex64::new(-0.3, 0.7)];
    let n0 = norm2_vec(&v);
    let mut pair = StatePair::at_origin(v);
    let mut herm_res = 0.0f64;
    for _ in 0..5 {
        pair = evolve_pair(&pair, 0.3, &hctx)?;
        herm_res = herm_res.max((norm2_vec(&pair.right) - n0).abs());
        herm_res = herm_res.max(norm2_vec(&(&pair.left - &pair.right)));
    }
    checks.push(check_le("hermitian_norm_conservation", herm_res, 1e-12));

    // normality of the P2-pair H', off the truncation corner
    let m = MassParam::bare(1.0)?;
    let k2 = MomentumTriple::new(1.0, 0.0, 1.0)?;
    let hp = build_hprime_for_modes(&[k2], m, 8)?;
    let p = corner_projector(&hp.osc_dims, 2);
    let noncomm = commutator(&hp.matrix, &dagger(&hp.matrix));
    checks.push(check_le(
        "p2_hprime_normality_offcorner",
        max_abs(&project(&p, &noncomm)),
        1e-8,
    ));
    Ok(checks)
}

/// One lattice configuration of the three-way amplitude comparison.
pub struct OracleRow {
    pub index: usize,
    pub direct: Complex64,
    pub t_sliced: Complex64,
    pub z_sliced: Complex64,
    pub max_deviation: f64,
}

/// Direct, T-sliced and Z-sliced amplitudes for `count` seeded random
/// boundary configurations.
pub fn run_oracle_configs(
    l: &LatticeSpec4D,
    seed: u64,
    count: usize,
) -> Result<Vec<OracleRow>, Error> {
    let form = build_action(l);
    let n_plane = l.plane_sites(Axis::T);
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = DetRng::new(seed.wrapping_add(i as u64));
        let initial: Vec<f64> = (0..n_plane).map(|_| rng.next_sym()).collect();
        let final_: Vec<f64> = (0..n_plane).map(|_| rng.next_sym()).collect();
        let b = BoundaryData::new(initial, final_, Axis::T)?;
        let direct = amplitude_direct(&form, &b)?;
        let t_sliced = amplitude_sliced(&form, &b, Axis::T)?;
        let z_sliced = amplitude_sliced(&form, &b, Axis::Z)?;
        let scale = direct.norm();
        let max_deviation = ((direct - t_sliced).norm() / scale)
            .max((direct - z_sliced).norm() / scale)
            .max((t_sliced - z_sliced).norm() / scale);
        rows.push(OracleRow { index: i, direct, t_sliced, z_sliced, max_deviation });
    }
    Ok(rows)
}

/// Three-way lattice agreement over seeded boundaries, as checks.
pub fn oracle_suite(l: &LatticeSpec4D, seed: u64) -> Result<Vec<Check>, Error> {
    let rows = run_oracle_configs(l, seed, 20)?;
    let worst = rows.iter().fold(0.0f64, |acc, r| acc.max(r.max_deviation));
    Ok(vec![check_le("lattice_three_way_agreement", worst, 1e-8)])
}

fn cmd_invariants(cfg: &RunConfig) -> Result<(Output, bool), Error> {
    let (t, x, y, z) = cfg.lattice;
    let lattice = LatticeSpec4D::new(t, x, y, z, 1.0, cfg.m, cfg.delta)?;
    let mut groups: Vec<(&str, Vec<Check>)> = Vec::new();
    match cfg.suite.as_str() {
        "algebra" => groups.push(("algebra", algebra_suite()?)),
        "fieldops" => groups.push(("fieldops", fieldops_suite()?)),
        "evolution" => groups.push(("evolution", evolution_suite()?)),
        "oracle" => groups.push(("oracle", oracle_suite(&lattice, cfg.seed)?)),
        "all" => {
            groups.push(("algebra", algebra_suite()?));
            groups.push(("fieldops", fieldops_suite()?));
            groups.push(("evolution", evolution_suite()?));
            groups.push(("oracle", oracle_suite(&lattice, cfg.seed)?));
        }
        other => return Err(Error::Domain(format!("unknown suite {other:?}"))),
    }
    let all_passed = groups.iter().all(|(_, cs)| cs.iter().all(|c| c.passed));
    let record = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "invariants",
        "crate_version": env!("CARGO_PKG_VERSION"),
        "inputs": {
            "suite": cfg.suite,
            "seed": cfg.seed,
            "rng": "splitmix64",
            "lattice": format!("{t}x{x}x{y}x{z}"),
            "delta": cfg.delta,
        },
        "suites": groups
            .iter()
            .map(|(name, cs)| serde_json::json!({ "suite": name, "checks": cs }))
            .collect::<Vec<_>>(),
        "all_passed": all_passed,
    });
    Ok((Output::Record(record), all_passed))
}

fn cmd_oracle(cfg: &RunConfig) -> Result<Output, Error> {
    let (t, x, y, z) = cfg.lattice;
    let lattice = LatticeSpec4D::new(t, x, y, z, 1.0, cfg.m, cfg.delta)?;
    let rows = run_oracle_configs(&lattice, cfg.seed, 20)?;
    let table_rows = rows
        .iter()
        .map(|r| {
            vec![
                format!("{}", r.index),
                format!("{}", cfg.seed.wrapping_add(r.index as u64)),
                format!("{}", r.direct.re),
                format!("{}", r.direct.im),
                format!("{}", r.t_sliced.re),
                format!("{}", r.t_sliced.im),
                format!("{}", r.z_sliced.re),
                format!("{}", r.z_sliced.im),
                format!("{}", r.max_deviation),
                "splitmix64".to_string(),
            ]
        })
        .collect();
    Ok(Output::Table {
        columns: [
            "index",
            "seed",
            "direct_re",
            "direct_im",
            "t_sliced_re",
            "t_sliced_im",
            "z_sliced_re",
            "z_sliced_im",
            "max_relative_deviation",
            "rng",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows: table_rows,
    })
}

fn write_output(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Domain(format!("cannot write stdout: {e}")))
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Conditioning(_) | Error::Backend(_) => 1,
        _ => 2,
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = std::time::Instant::now();
    let result: Result<(Output, CommonArgs, &'static str, i32), Error> = (|| {
        match &cli.command {
            Command::LambdaMap(args) => {
                let cfg = resolve(args)?;
                Ok((cmd_lambda_map(&cfg)?, args.clone(), "csv", 0))
            }
            Command::Propagator(args) => {
                let cfg = resolve(args)?;
                Ok((cmd_propagator(&cfg)?, args.clone(), "json", 0))
            }
            Command::Invariants(args) => {
                let cfg = resolve(args)?;
                let (out, passed) = cmd_invariants(&cfg)?;
                Ok((out, args.clone(), "json", if passed { 0 } else { 1 }))
            }
            Command::Oracle(args) => {
                let cfg = resolve(args)?;
                Ok((cmd_oracle(&cfg)?, args.clone(), "csv", 0))
            }
        }
    })();
    let code = match result {
        Ok((output, args, default_format, code)) => {
            let cfg = match resolve(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_code_for(&e);
                }
            };
            let format = cfg.format.unwrap_or_else(|| default_format.to_string());
            match output.render(&format).and_then(|text| write_output(&text, &cfg.out)) {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    // timing goes to stderr only, keeping output files byte-deterministic
    eprintln!("wall_time_ms={}", started.elapsed().as_millis());
    code
}
