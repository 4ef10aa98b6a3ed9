//! Command dispatch and report emission: canonical JSON for machines, a
//! short text summary for people, optional SVG figures.

use num::Zero;
use serde_json::{json, Map, Value};

use crate::envelope::{
    convex_envelope, crease_search, form_below_pl, ma_measure_zero_check, BoundaryData,
    CreaseKind, CreaseReport, EnvelopeResult,
};
use crate::error::{Error, Result};
use crate::futaki::{build_context, extremal_field, theta_function, FutakiContext};
use crate::pl::{AffineForm, PLFunction};
use crate::poly::RootEnclosure;
use crate::polytope::{
    polytope_from_divisor, restrict_to_chamber, weyl_extension_convexity, ChamberPolytope,
    ExtensionOutcome, Polytope,
};
use crate::problem::{PolytopeBlock, ProblemFile};
use crate::rat::{covec_mat, format_rat, QVec, Rat};
use crate::root_datum::RootDatum;
use crate::stability::{
    barycenter_criterion, check_fano, default_direction_net, polystable_degeneration,
    soliton_field, witness_scan, DegenerationData, FiberClass, StabilityReport, Verdict,
};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    CheckConvexity,
    Futaki,
    Extremal,
    Stability,
    Degenerate,
    Envelope,
    Soliton,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::CheckConvexity => "check-convexity",
            CommandKind::Futaki => "futaki",
            CommandKind::Extremal => "extremal",
            CommandKind::Stability => "stability",
            CommandKind::Degenerate => "degenerate",
            CommandKind::Envelope => "envelope",
            CommandKind::Soliton => "soliton",
        }
    }
}

/// Command-line overrides layered over the problem file options.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub net_denominator: Option<i64>,
    pub tolerance: Option<f64>,
    pub no_shift: bool,
    pub want_svg: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub json: Value,
    pub text: String,
    pub exit_code: i32,
    pub svg: Option<String>,
}

fn rv(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

fn vecv(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rv).collect())
}

fn vecs(v: &[Rat]) -> String {
    let inner: Vec<String> = v.iter().map(format_rat).collect();
    format!("({})", inner.join(", "))
}

fn plv(u: &PLFunction) -> Value {
    Value::Array(
        u.pieces
            .iter()
            .map(|f| json!({ "covector": vecv(&f.covector), "constant": rv(&f.constant) }))
            .collect(),
    )
}

fn enclosure_v(e: &RootEnclosure) -> Value {
    match e {
        RootEnclosure::Exact(r) => json!({ "exact": format_rat(r) }),
        RootEnclosure::Interval(a, b) => json!({ "enclosure": [format_rat(a), format_rat(b)] }),
    }
}

fn verdict_v(v: &Verdict) -> Value {
    match v {
        Verdict::KStable => json!({ "type": "k_stable" }),
        Verdict::StrictlySemistable(w) => {
            json!({ "type": "strictly_semistable", "witness_weight": vecv(w) })
        }
        Verdict::Unstable(u) => json!({ "type": "unstable", "witness": plv(u) }),
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::KStable => "K-stable".to_string(),
        Verdict::StrictlySemistable(w) => {
            format!("strictly K-semistable, witness weight {}", vecs(w))
        }
        Verdict::Unstable(_) => "K-unstable".to_string(),
    }
}

/// Builds the chamber decomposition from whichever polytope block the
/// problem file carries.
pub fn build_chamber(pf: &ProblemFile) -> Result<(RootDatum, ChamberPolytope)> {
    let rd = pf.root_datum.clone();
    let cp = match &pf.polytope {
        PolytopeBlock::Halfspaces(hs) => {
            let p = Polytope::from_halfspaces(rd.rank, hs)?;
            restrict_to_chamber(&p, &rd)?
        }
        PolytopeBlock::Chamber(hs) => match weyl_extension_convexity(hs, &rd)? {
            ExtensionOutcome::Convex(cp) => cp,
            ExtensionOutcome::NotConvex { witness } => {
                return Err(Error::NotExtendable { witness })
            }
        },
        PolytopeBlock::Divisor { rays, strict_colours } => {
            polytope_from_divisor(&rd, rays, *strict_colours)?
        }
    };
    Ok((rd, cp))
}

fn build_ctx(pf: &ProblemFile, ov: &Overrides) -> Result<FutakiContext> {
    let (rd, cp) = build_chamber(pf)?;
    let allow_shift = pf.options.shift && !ov.no_shift;
    let ctx = build_context(rd, cp, allow_shift)?;
    if let Some(expected) = pf.options.fano {
        let actual = check_fano(&ctx).normalized;
        if actual != expected {
            return Err(Error::InvalidData(format!(
                "problem file expects anticanonical normalization {expected}, found {actual}"
            )));
        }
    }
    Ok(ctx)
}

fn context_v(ctx: &FutakiContext) -> Value {
    let fano = check_fano(ctx);
    json!({
        "volume": rv(&ctx.volume),
        "mean_scalar": rv(&ctx.mean_scalar),
        "density_degree": ctx.rd.restricted_roots.len(),
        "anticanonically_normalized": fano.normalized,
        "shift": ctx.shift.as_ref().map(|s| vecv(s)),
        "flagged_facets": ctx.flagged_facets.clone(),
        "plus_vertices": Value::Array(
            ctx.cp.plus.vertices.iter().map(|v| vecv(v)).collect(),
        ),
    })
}

fn run_check_convexity(pf: &ProblemFile) -> Result<RunOutput> {
    let mode = match &pf.polytope {
        PolytopeBlock::Halfspaces(_) => "halfspaces",
        PolytopeBlock::Chamber(_) => "chamber_halfspaces",
        PolytopeBlock::Divisor { .. } => "divisor",
    };
    if let PolytopeBlock::Chamber(hs) = &pf.polytope {
        if let ExtensionOutcome::NotConvex { witness } =
            weyl_extension_convexity(hs, &pf.root_datum)?
        {
            let json = json!({
                "command": "check-convexity",
                "mode": mode,
                "convex": false,
                "witness": vecv(&witness),
            });
            let text = format!(
                "reflected chamber data is not convex; witness point {}\n",
                vecs(&witness)
            );
            return Ok(RunOutput { json, text, exit_code: 3, svg: None });
        }
    }
    let (rd, cp) = build_chamber(pf)?;
    let json = json!({
        "command": "check-convexity",
        "mode": mode,
        "convex": true,
        "base_vertices": Value::Array(cp.base.vertices.iter().map(|v| vecv(v)).collect()),
        "plus_vertices": Value::Array(cp.plus.vertices.iter().map(|v| vecv(v)).collect()),
        "outer_facets": cp.outer_facets,
        "wall_facets": cp.wall_facets,
        "reflection_group_order": rd.weyl_group()?.len(),
    });
    let text = format!(
        "invariant convex polytope with {} vertices; dominant part has {} vertices, {} outer and {} wall facets\n",
        cp.base.vertices.len(),
        cp.plus.vertices.len(),
        cp.outer_facets.len(),
        cp.wall_facets.len()
    );
    Ok(RunOutput { json, text, exit_code: 0, svg: None })
}

fn run_futaki(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let fano = check_fano(&ctx);
    let mut evals = vec![];
    let weights = ctx.rd.fundamental_weights()?;
    let mut directions: Vec<(String, QVec)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| (format!("fundamental_weight_{i}"), w.clone()))
        .collect();
    for (i, z) in ctx.rd.central_subspace().iter().enumerate() {
        directions.push((format!("central_{i}"), z.clone()));
    }
    for (label, v) in directions {
        let u = PLFunction::linear(ctx.rd.covector_of(&v));
        let l = crate::futaki::futaki_l(&ctx, &u)?;
        let l_x = crate::futaki::relative_futaki(&ctx, &u)?;
        evals.push(json!({
            "direction": label,
            "vector": vecv(&v),
            "l": rv(&l),
            "l_relative": rv(&l_x),
        }));
    }
    let json = json!({
        "command": "futaki",
        "context": context_v(&ctx),
        "fano_facets": Value::Array(
            fano.facets
                .iter()
                .map(|f| {
                    json!({
                        "facet": f.facet,
                        "offset": rv(&f.offset),
                        "expected": rv(&f.expected),
                        "matches": f.matches,
                    })
                })
                .collect(),
        ),
        "linear_evaluations": Value::Array(evals),
    });
    let text = format!(
        "volume {}, mean scalar {}, anticanonical normalization: {}\n",
        format_rat(&ctx.volume),
        format_rat(&ctx.mean_scalar),
        if fano.normalized { "yes" } else { "no" }
    );
    Ok(RunOutput { json, text, exit_code: 0, svg: None })
}

fn run_extremal(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let ex = extremal_field(&ctx)?;
    let theta = theta_function(&ctx);
    let json = json!({
        "command": "extremal",
        "context": context_v(&ctx),
        "field": vecv(&ex.field),
        "constant": rv(&ex.constant),
        "potential": {
            "covector": vecv(&ex.potential.covector),
            "constant": rv(&ex.potential.constant),
        },
        "is_zero": ex.is_zero(),
        "theta": {
            "constant": rv(&theta.constant),
            "linear": vecv(&theta.linear),
            "poles": Value::Array(
                theta
                    .poles
                    .iter()
                    .map(|(n, d)| json!({ "numerator": rv(n), "denominator": vecv(d) }))
                    .collect(),
            ),
            "strip": theta.strip.as_ref().map(|(axis, w)| {
                json!({ "axis": vecv(axis), "half_width": rv(w) })
            }),
        },
    });
    let text = if ex.is_zero() {
        "extremal field vanishes\n".to_string()
    } else {
        format!("extremal field {} with constant {}\n", vecs(&ex.field), format_rat(&ex.constant))
    };
    Ok(RunOutput { json, text, exit_code: 0, svg: None })
}

fn stability_report_v(report: &StabilityReport) -> Value {
    json!({
        "verdict": verdict_v(&report.verdict),
        "barycenter": vecv(&report.barycenter),
        "cone_coefficients": vecv(&report.cone_coeffs),
        "central_component": vecv(&report.central_component),
        "flags": report.theorem_flags.clone(),
    })
}

fn degeneration_v(data: &DegenerationData) -> Value {
    json!({
        "fiber_plus_vertices": Value::Array(
            data.fiber.plus.vertices.iter().map(|v| vecv(v)).collect(),
        ),
        "barycenter": vecv(&data.barycenter),
        "root_sum": vecv(&data.root_sum),
        "barycenter_check": data.barycenter_check,
        "classification": match data.classification {
            FiberClass::HorosphericalKStable => "horospherical_k_stable",
            FiberClass::Inconsistent => "inconsistent",
        },
        "diagnostics": data.diagnostics.clone(),
    })
}

fn run_stability(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let mut report = barycenter_criterion(&ctx)?;
    let mut notes: Vec<String> = vec![];
    if matches!(report.verdict, Verdict::StrictlySemistable(_)) {
        match polystable_degeneration(&ctx) {
            Ok(data) => report.degeneration = Some(data),
            Err(e) => notes.push(format!("degeneration unavailable: {e}")),
        }
    }
    let den = ov.net_denominator.unwrap_or(pf.options.net_denominator);
    let scan_v = if ctx.rd.rank <= 3 {
        let net = default_direction_net(&ctx.rd, den)?;
        let scan = witness_scan(&ctx, &net)?;
        let entries: Vec<Value> = scan
            .entries
            .iter()
            .map(|e| {
                json!({
                    "direction": vecv(&e.direction),
                    "roots": Value::Array(
                        e.roots
                            .iter()
                            .map(|r| {
                                json!({
                                    "offset": enclosure_v(&r.offset),
                                    "kind": match r.kind {
                                        crate::stability::OffsetKind::AffineEnd => "affine_end",
                                        crate::stability::OffsetKind::Interior => "interior",
                                        crate::stability::OffsetKind::Saturation => "saturation",
                                    },
                                    "exact": r.exact,
                                })
                            })
                            .collect(),
                    ),
                    "interior_positive": e.interior_positive,
                    "minimum_sample": e.minimum_sample.as_ref().map(rv),
                    "degenerate": e.degenerate,
                })
            })
            .collect();
        Some(json!({
            "net_denominator": den,
            "directions": scan.entries.len(),
            "entries": Value::Array(entries),
            "minimum": scan.minimum.as_ref().map(rv),
            "interior_strictly_positive": scan.interior_strictly_positive,
        }))
    } else {
        notes.push(format!("direction scan skipped at rank {}", ctx.rd.rank));
        None
    };
    let exit_code = report.verdict.exit_code();
    let mut obj = Map::new();
    obj.insert("command".into(), json!("stability"));
    obj.insert("context".into(), context_v(&ctx));
    obj.insert("report".into(), stability_report_v(&report));
    if let Some(data) = &report.degeneration {
        obj.insert("degeneration".into(), degeneration_v(data));
    }
    if let Some(s) = scan_v {
        obj.insert("scan".into(), s);
    }
    obj.insert("notes".into(), json!(notes));
    let mut text = format!(
        "verdict: {}\nbarycenter: {}\ncone coefficients: {}\n",
        verdict_text(&report.verdict),
        vecs(&report.barycenter),
        vecs(&report.cone_coeffs),
    );
    for f in &report.theorem_flags {
        text.push_str(&format!("flag: {f}\n"));
    }
    Ok(RunOutput { json: Value::Object(obj), text, exit_code, svg: None })
}

fn run_degenerate(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let data = polystable_degeneration(&ctx)?;
    let json = json!({
        "command": "degenerate",
        "context": context_v(&ctx),
        "fiber": degeneration_v(&data),
    });
    let text = format!(
        "horospherical central fiber on the same dominant polytope; barycenter {} vs root sum {}: {}\n",
        vecs(&data.barycenter),
        vecs(&data.root_sum),
        if data.barycenter_check { "matched" } else { "MISMATCH" }
    );
    Ok(RunOutput { json, text, exit_code: 0, svg: None })
}

fn symmetrized_linear(ctx: &FutakiContext, cov: &QVec) -> Result<PLFunction> {
    let mut pieces = std::collections::BTreeSet::new();
    for w in ctx.rd.weyl_group()? {
        pieces.insert(AffineForm::new(covec_mat(cov, &w), Rat::zero()));
    }
    Ok(PLFunction::max_of(ctx.rd.rank, pieces.into_iter().collect()))
}

fn crease_v(report: &CreaseReport) -> Value {
    json!({
        "support": {
            "covector": vecv(&report.support.covector),
            "constant": rv(&report.support.constant),
        },
        "contact_vertices": Value::Array(
            report.contact_vertices.iter().map(|v| vecv(v)).collect(),
        ),
        "candidates": Value::Array(
            report
                .candidates
                .iter()
                .map(|c| {
                    json!({
                        "kind": match c.kind {
                            CreaseKind::Wall(i) => json!({ "wall": i }),
                            CreaseKind::Interior => json!("interior"),
                        },
                        "covector": vecv(&c.covector),
                        "offset": rv(&c.offset),
                        "witness": plv(&c.witness),
                        "parallel_root": c.parallel_root,
                        "functional": rv(&c.functional),
                        "theta_negative": c.theta_negative,
                    })
                })
                .collect(),
        ),
        "diagnostics": report.diagnostics.clone(),
    })
}

fn envelope_v(er: &EnvelopeResult, reproduces: bool) -> Value {
    let (ma_zero, offending) = ma_measure_zero_check(er);
    json!({
        "pieces": er.function.pieces.len(),
        "cells": er.contact_complex.len(),
        "reproduces_input": reproduces,
        "ma_zero": ma_zero,
        "positive_masses": Value::Array(
            offending
                .iter()
                .map(|(v, m)| json!({ "vertex": vecv(v), "mass": rv(m) }))
                .collect(),
        ),
        "error_bound": er.error_bound.as_ref().map(rv),
    })
}

fn run_envelope(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let report = barycenter_criterion(&ctx)?;
    let weight = match &report.verdict {
        Verdict::StrictlySemistable(w) => w.clone(),
        other => {
            return Err(Error::PreconditionNotMet(format!(
                "envelope analysis needs a strictly semistable input; verdict is {}",
                verdict_text(other)
            )))
        }
    };
    let u0 = PLFunction::linear(ctx.rd.covector_of(&weight));
    let crease = crease_search(&ctx, &u0)?;
    let u_sym = symmetrized_linear(&ctx, &ctx.rd.covector_of(&weight))?;
    let bd = BoundaryData::from_pl(&ctx.cp.base, &u_sym)?;
    let er = convex_envelope(&bd)?;
    let reproduces = u_sym.pieces.iter().all(|f| form_below_pl(&ctx.cp.base, &er.function, f))
        && er.function.pieces.iter().all(|f| form_below_pl(&ctx.cp.base, &u_sym, f));
    let json = json!({
        "command": "envelope",
        "kernel_element": plv(&u0),
        "crease": crease_v(&crease),
        "envelope": envelope_v(&er, reproduces),
    });
    let mut text = format!(
        "kernel element from witness weight {}; {} crease candidate(s)\n",
        vecs(&weight),
        crease.candidates.len()
    );
    for c in &crease.candidates {
        let kind = match c.kind {
            CreaseKind::Wall(i) => format!("wall {i}"),
            CreaseKind::Interior => "interior".to_string(),
        };
        text.push_str(&format!(
            "  {kind}: covector {}, offset {}, functional {}, theta negative: {}\n",
            vecs(&c.covector),
            format_rat(&c.offset),
            format_rat(&c.functional),
            c.theta_negative
        ));
    }
    let svg_out = if ov.want_svg {
        Some(svg::crease_figure(&ctx, &er, &crease))
    } else {
        None
    };
    Ok(RunOutput { json, text, exit_code: 0, svg: svg_out })
}

fn run_soliton(pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    let ctx = build_ctx(pf, ov)?;
    let tol = ov.tolerance.unwrap_or(pf.options.tolerance);
    let out = soliton_field(&ctx, tol, 200)?;
    let json = json!({
        "command": "soliton",
        "context": context_v(&ctx),
        "central_basis": Value::Array(
            ctx.rd.central_subspace().iter().map(|z| vecv(z)).collect(),
        ),
        "field": out.field.clone(),
        "coefficients": out.coefficients.clone(),
        "residual": out.residual,
        "iterations": out.iterations,
        "tolerance": tol,
    });
    let text = format!(
        "soliton field {:?} after {} Newton steps, residual {:.3e}\n",
        out.field, out.iterations, out.residual
    );
    Ok(RunOutput { json, text, exit_code: 0, svg: None })
}

/// Executes a command against a parsed problem file.
pub fn run(kind: CommandKind, pf: &ProblemFile, ov: &Overrides) -> Result<RunOutput> {
    match kind {
        CommandKind::CheckConvexity => run_check_convexity(pf),
        CommandKind::Futaki => run_futaki(pf, ov),
        CommandKind::Extremal => run_extremal(pf, ov),
        CommandKind::Stability => run_stability(pf, ov),
        CommandKind::Degenerate => run_degenerate(pf, ov),
        CommandKind::Envelope => run_envelope(pf, ov),
        CommandKind::Soliton => run_soliton(pf, ov),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DegenerateRoot(_) => "degenerate_root",
        Error::ClosureOverflow(_) => "closure_overflow",
        Error::InvalidData(_) => "invalid_data",
        Error::Unbounded => "unbounded",
        Error::EmptyPolytope => "empty_polytope",
        Error::LowerDimensional => "lower_dimensional",
        Error::NotWeylInvariant => "not_weyl_invariant",
        Error::NotExtendable { .. } => "not_extendable",
        Error::ArityMismatch { .. } => "arity_mismatch",
        Error::BadFacet(_) => "bad_facet",
        Error::ZeroMass => "zero_mass",
        Error::NotDominant => "not_dominant",
        Error::SingularMoment => "singular_moment",
        Error::ZeroOffsetFacet(_) => "zero_offset_facet",
        Error::PreconditionNotMet(_) => "precondition_not_met",
        Error::NotAKernelElement(_) => "not_a_kernel_element",
        Error::RankUnsupported(_) => "rank_unsupported",
        Error::NonConvexEdgeData(_) => "non_convex_edge_data",
        Error::NoCentralSupport => "no_central_support",
        Error::ZeroNorm => "zero_norm",
        Error::NoConvergence(_) => "no_convergence",
        Error::Schema(_) => "schema",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// Structured diagnostics for a failed run; pairs with exit code 4.
pub fn error_json(e: &Error) -> Value {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(error_kind(e)));
    obj.insert("message".into(), json!(e.to_string()));
    if let Error::Schema(errs) = e {
        obj.insert(
            "schema_errors".into(),
            Value::Array(
                errs.iter()
                    .map(|s| json!({ "pointer": s.pointer, "message": s.message }))
                    .collect(),
            ),
        );
    }
    json!({ "error": Value::Object(obj) })
}
