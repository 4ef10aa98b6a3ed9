//! Convex envelopes of boundary data on polygons, Alexandrov measure
//! checks, dominance and extension tests for chamber functions, and the
//! crease extraction that turns kernel elements into simple witnesses.

use std::collections::{BTreeSet, VecDeque};

use num::{Integer, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::futaki::{theta_function, FutakiContext};
use crate::lp::{self, LpStatus};
use crate::pl::{AffineForm, PLFunction};
use crate::poly::{count_roots, sturm_chain};
use crate::polytope::Polytope;
use crate::rat::{
    dot, format_rat, int_to_rat_vec, kernel_basis, primitive_integer, rat, rat_i, solve, vec_add,
    vec_neg, vec_scale, vec_sub, zeros, Int, QVec, Rat,
};
use crate::root_datum::RootDatum;
use crate::stability::fano_futaki_relative;

/// Values prescribed along the boundary of a polygon, ordered by a
/// counterclockwise traversal. `resolution` is `None` for exact piecewise
/// linear sources and the largest sample spacing for dense samplings.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub polygon: Polytope,
    pub samples: Vec<(QVec, Rat)>,
    pub resolution: Option<Rat>,
}

impl BoundaryData {
    pub fn new(
        polygon: Polytope,
        samples: Vec<(QVec, Rat)>,
        resolution: Option<Rat>,
    ) -> Result<BoundaryData> {
        if polygon.dim != 2 {
            return Err(Error::RankUnsupported(polygon.dim));
        }
        if samples.len() < 3 {
            return Err(Error::InvalidData("need at least three boundary samples".into()));
        }
        for (p, _) in &samples {
            let on = polygon.contains(p) && polygon.halfspaces.iter().any(|h| h.active_at(p));
            if !on {
                return Err(Error::InvalidData("sample point is not on the boundary".into()));
            }
        }
        let mut dedup: Vec<(QVec, Rat)> = vec![];
        for s in samples {
            if dedup.iter().all(|(p, _)| *p != s.0) {
                dedup.push(s);
            }
        }
        Ok(BoundaryData { polygon, samples: dedup, resolution })
    }

    /// Exact boundary restriction of a piecewise linear function: polygon
    /// vertices plus every point where the active piece changes.
    pub fn from_pl(polygon: &Polytope, u: &PLFunction) -> Result<BoundaryData> {
        let ccw = polygon.ccw_vertices();
        let m = ccw.len();
        let mut samples = vec![];
        for k in 0..m {
            let a = &ccw[k];
            let b = &ccw[(k + 1) % m];
            samples.push((a.clone(), u.eval(a)));
            let edge = vec_sub(b, a);
            let mut crossings: BTreeSet<Rat> = BTreeSet::new();
            for (i, fi) in u.pieces.iter().enumerate() {
                for fj in u.pieces.iter().skip(i + 1) {
                    let coef = dot(&vec_sub(&fi.covector, &fj.covector), &edge);
                    if coef.is_zero() {
                        continue;
                    }
                    let base = fi.eval(a) - fj.eval(a);
                    let t = -base / coef;
                    if t.is_positive() && t < Rat::one() {
                        let pt = vec_add(a, &vec_scale(&edge, &t));
                        if fi.eval(&pt) == u.eval(&pt) {
                            crossings.insert(t);
                        }
                    }
                }
            }
            for t in crossings {
                let pt = vec_add(a, &vec_scale(&edge, &t));
                samples.push((pt.clone(), u.eval(&pt)));
            }
        }
        BoundaryData::new(polygon.clone(), samples, None)
    }

    /// Uniform sampling of an arbitrary boundary function, `per_edge`
    /// points per polygon edge.
    pub fn sample_boundary<F: Fn(&QVec) -> Rat>(
        polygon: &Polytope,
        f: F,
        per_edge: usize,
    ) -> Result<BoundaryData> {
        assert!(per_edge >= 1);
        let ccw = polygon.ccw_vertices();
        let m = ccw.len();
        let mut samples = vec![];
        let mut h = Rat::zero();
        for k in 0..m {
            let a = &ccw[k];
            let b = &ccw[(k + 1) % m];
            let edge = vec_sub(b, a);
            let step = edge
                .iter()
                .map(|c| c.abs())
                .max()
                .unwrap()
                / rat_i(per_edge as i64);
            if step > h {
                h = step;
            }
            for j in 0..per_edge {
                let t = rat(j as i64, per_edge as i64);
                let pt = vec_add(a, &vec_scale(&edge, &t));
                samples.push((pt.clone(), f(&pt)));
            }
        }
        BoundaryData::new(polygon.clone(), samples, Some(h))
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub function: PLFunction,
    /// Maximal linearity regions of the envelope inside the polygon.
    pub contact_complex: Vec<Polytope>,
    /// Interior complex vertices with their subgradient-polygon areas.
    pub ma_vertex_masses: Vec<(QVec, Rat)>,
    /// One-sided error certificate `h * Lip` for sampled sources.
    pub error_bound: Option<Rat>,
}

fn cross2(o: &QVec, a: &QVec, b: &QVec) -> Rat {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Counterclockwise hull of a planar point set; collinear sets reduce to
/// their endpoints and singletons pass through.
pub fn convex_hull_2d(points: &[QVec]) -> Vec<QVec> {
    let mut pts: Vec<QVec> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<QVec> = vec![];
    for p in &pts {
        while lower.len() >= 2
            && !cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive()
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<QVec> = vec![];
    for p in pts.iter().rev() {
        while upper.len() >= 2
            && !cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive()
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_area(ccw: &[QVec]) -> Rat {
    if ccw.len() < 3 {
        return Rat::zero();
    }
    let mut twice = Rat::zero();
    for i in 0..ccw.len() {
        let a = &ccw[i];
        let b = &ccw[(i + 1) % ccw.len()];
        twice += &a[0] * &b[1] - &a[1] * &b[0];
    }
    twice / rat_i(2)
}

fn interior_masses(p: &Polytope, u: &PLFunction, verts: BTreeSet<QVec>) -> Vec<(QVec, Rat)> {
    let mut masses = vec![];
    for v in verts {
        let on_boundary = p.halfspaces.iter().any(|h| h.active_at(&v));
        if on_boundary {
            continue;
        }
        let value = u.eval(&v);
        let grads: Vec<QVec> = u
            .pieces
            .iter()
            .filter(|f| f.eval(&v) == value)
            .map(|f| f.covector.clone())
            .collect();
        let hull = convex_hull_2d(&grads);
        masses.push((v, polygon_area(&hull)));
    }
    masses
}

/// Contact complex and interior Alexandrov masses of a max-of-affine
/// function on a polygon.
pub fn analyze_function(p: &Polytope, u: &PLFunction) -> EnvelopeResult {
    let cells = u.cells(p);
    let mut verts: BTreeSet<QVec> = BTreeSet::new();
    for (cell, _) in &cells {
        for v in &cell.vertices {
            verts.insert(v.clone());
        }
    }
    let masses = interior_masses(p, u, verts);
    EnvelopeResult {
        function: u.clone(),
        contact_complex: cells.into_iter().map(|(c, _)| c).collect(),
        ma_vertex_masses: masses,
        error_bound: None,
    }
}

/// Lifted samples rescaled to integer coordinates, so that the hull
/// orientation predicates run over plain integers. Positive per-column
/// scalings keep every sign test unchanged.
fn lift_to_integers(pts: &[(QVec, Rat)]) -> Vec<(Vec<Int>, Int)> {
    let mut den_xy = Int::one();
    let mut den_v = Int::one();
    for (q, v) in pts {
        for c in q {
            den_xy = den_xy.lcm(c.denom());
        }
        den_v = den_v.lcm(v.denom());
    }
    pts.iter()
        .map(|(q, v)| {
            (
                q.iter().map(|c| (c * Rat::from(den_xy.clone())).to_integer()).collect(),
                (v * Rat::from(den_v.clone())).to_integer(),
            )
        })
        .collect()
}

fn cross2_int(o: &[Int], a: &[Int], b: &[Int]) -> Int {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

fn orient_lift_int(pts: &[(Vec<Int>, Int)], a: usize, b: usize, c: usize, d: usize) -> Int {
    let row = |i: usize| {
        [
            &pts[i].0[0] - &pts[a].0[0],
            &pts[i].0[1] - &pts[a].0[1],
            &pts[i].1 - &pts[a].1,
        ]
    };
    let (rb, rc, rd) = (row(b), row(c), row(d));
    &rb[0] * (&rc[1] * &rd[2] - &rc[2] * &rd[1]) - &rb[1] * (&rc[0] * &rd[2] - &rc[2] * &rd[0])
        + &rb[2] * (&rc[0] * &rd[1] - &rc[1] * &rd[0])
}

fn plane_through(pts: &[(QVec, Rat)], i: usize, j: usize, k: usize) -> AffineForm {
    let m = vec![
        vec![pts[i].0[0].clone(), pts[i].0[1].clone(), Rat::one()],
        vec![pts[j].0[0].clone(), pts[j].0[1].clone(), Rat::one()],
        vec![pts[k].0[0].clone(), pts[k].0[1].clone(), Rat::one()],
    ];
    let rhs = vec![pts[i].1.clone(), pts[j].1.clone(), pts[k].1.clone()];
    let w = solve(&m, &rhs).expect("hull face is affinely degenerate");
    AffineForm::new(vec![w[0].clone(), w[1].clone()], w[2].clone())
}

/// Directed sample pairs that are guaranteed edges of the lower hull of
/// the lifted samples: along every edge of the base hull, consecutive
/// pairs of the one-dimensional lower hull of the lifted profile. Samples
/// bumped above that profile are skipped, so the seeds stay valid for
/// non-convex boundary data.
fn hull_edge_seeds(pts: &[(QVec, Rat)]) -> VecDeque<(usize, usize)> {
    let base: Vec<QVec> = pts.iter().map(|(q, _)| q.clone()).collect();
    let hull = convex_hull_2d(&base);
    let mut seeds = VecDeque::new();
    if hull.len() < 3 {
        return seeds;
    }
    for e in 0..hull.len() {
        let a = &hull[e];
        let b = &hull[(e + 1) % hull.len()];
        let dir = vec_sub(b, a);
        let span = dot(&dir, &dir);
        let mut run: Vec<(Rat, usize)> = vec![];
        for (i, (q, _)) in pts.iter().enumerate() {
            if !cross2(a, b, q).is_zero() {
                continue;
            }
            let t = dot(&dir, &vec_sub(q, a));
            if !t.is_negative() && t <= span {
                run.push((t, i));
            }
        }
        run.sort();
        let mut chain: Vec<(Rat, usize)> = vec![];
        for (t, i) in run {
            let v = &pts[i].1;
            while chain.len() >= 2 {
                let (t1, i1) = &chain[chain.len() - 2];
                let (t2, i2) = &chain[chain.len() - 1];
                let turn = (t2 - t1) * (v - &pts[*i1].1) - (&pts[*i2].1 - &pts[*i1].1) * (&t - t1);
                if turn.is_positive() {
                    break;
                }
                chain.pop();
            }
            chain.push((t, i));
        }
        for w in chain.windows(2) {
            seeds.push_back((w[0].1, w[1].1));
        }
    }
    seeds
}

/// The largest convex function lying below the boundary data: the lower
/// convex hull of the lifted samples, returned with its contact complex.
pub fn convex_envelope(bd: &BoundaryData) -> Result<EnvelopeResult> {
    let p = &bd.polygon;
    if p.dim != 2 {
        return Err(Error::RankUnsupported(p.dim));
    }
    if bd.resolution.is_none() {
        check_edge_convexity(bd)?;
    }
    let pts = &bd.samples;
    let n = pts.len();
    let ipts = lift_to_integers(pts);
    let mut forms: BTreeSet<AffineForm> = BTreeSet::new();
    let mut processed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue = hull_edge_seeds(pts);
    while let Some((a, b)) = queue.pop_front() {
        if !processed.insert((a, b)) {
            continue;
        }
        let mut best: Option<usize> = None;
        for d in 0..n {
            if d == a || d == b || !cross2_int(&ipts[a].0, &ipts[b].0, &ipts[d].0).is_positive() {
                continue;
            }
            best = Some(match best {
                Some(c) if !orient_lift_int(&ipts, a, b, c, d).is_negative() => c,
                _ => d,
            });
        }
        let c = match best {
            Some(c) => c,
            None => continue,
        };
        forms.insert(plane_through(pts, a, b, c));
        processed.insert((b, c));
        processed.insert((c, a));
        for e in [(c, b), (a, c)] {
            if !processed.contains(&e) {
                queue.push_back(e);
            }
        }
    }
    if forms.is_empty() {
        return Err(Error::InvalidData("boundary samples do not span the plane".into()));
    }
    // Each lower-hull face projects onto the convex hull of its contact
    // samples, which gives the contact complex without a cell search.
    let mut cells = vec![];
    for f in &forms {
        let mut active: Vec<QVec> = vec![];
        for (q, v) in pts {
            let gap = v - f.eval(q);
            assert!(
                !gap.is_negative(),
                "lower hull produced a non-supporting plane"
            );
            if gap.is_zero() {
                active.push(q.clone());
            }
        }
        cells.push(Polytope::from_vertices(2, &active)?);
    }
    let function = PLFunction::max_of(2, forms.into_iter().collect());
    let mut verts: BTreeSet<QVec> = BTreeSet::new();
    for c in &cells {
        for v in &c.vertices {
            verts.insert(v.clone());
        }
    }
    let masses = interior_masses(p, &function, verts);
    let error_bound = bd.resolution.as_ref().map(|h| {
        let mut lip = Rat::zero();
        for w in bd.samples.windows(2) {
            let dp = vec_sub(&w[1].0, &w[0].0);
            let den = dp.iter().map(|c| c.abs()).max().unwrap();
            if den.is_zero() {
                continue;
            }
            let slope = (&w[1].1 - &w[0].1).abs() / den;
            if slope > lip {
                lip = slope;
            }
        }
        h * lip
    });
    Ok(EnvelopeResult {
        function,
        contact_complex: cells,
        ma_vertex_masses: masses,
        error_bound,
    })
}

fn check_edge_convexity(bd: &BoundaryData) -> Result<()> {
    let p = &bd.polygon;
    for (fi, h) in p.halfspaces.iter().enumerate() {
        let fverts = p.facet_vertices(fi)?;
        let dir = vec_sub(&fverts[1], &fverts[0]);
        let mut on_edge: Vec<(Rat, Rat)> = bd
            .samples
            .iter()
            .filter(|(q, _)| h.active_at(q))
            .map(|(q, v)| (dot(&dir, q), v.clone()))
            .collect();
        on_edge.sort_by(|a, b| a.0.cmp(&b.0));
        for w in on_edge.windows(3) {
            let (t0, v0) = &w[0];
            let (t1, v1) = &w[1];
            let (t2, v2) = &w[2];
            if (v1 - v0) * (t2 - t1) > (v2 - v1) * (t1 - t0) {
                return Err(Error::NonConvexEdgeData(fi));
            }
        }
    }
    Ok(())
}

/// True iff every interior vertex carries zero Monge-Ampere mass; returns
/// the offenders otherwise.
pub fn ma_measure_zero_check(er: &EnvelopeResult) -> (bool, Vec<(QVec, Rat)>) {
    let offending: Vec<(QVec, Rat)> = er
        .ma_vertex_masses
        .iter()
        .filter(|(_, m)| m.is_positive())
        .cloned()
        .collect();
    (offending.is_empty(), offending)
}

/// True iff every gradient active on the chamber polytope pairs
/// nonnegatively with the spherical simple roots.
pub fn is_w_dominate(rd: &RootDatum, u: &PLFunction, p: &Polytope) -> bool {
    u.cells(p)
        .iter()
        .all(|(_, f)| rd.covector_is_dominant(&f.covector))
}

/// Whether an affine form stays below a max-of-affine function on all of
/// `p`, by exact linear programming.
pub fn form_below_pl(p: &Polytope, u: &PLFunction, form: &AffineForm) -> bool {
    let dim = p.dim;
    let mut constraints: Vec<(QVec, Rat)> = vec![];
    for h in &p.halfspaces {
        let mut row = h.normal_rat();
        row.push(Rat::zero());
        constraints.push((row, h.offset.clone()));
    }
    for f in &u.pieces {
        let mut row = vec_sub(&f.covector, &form.covector);
        row.push(Rat::one());
        constraints.push((row, &form.constant - &f.constant));
    }
    let mut obj = zeros(dim);
    obj.push(Rat::one());
    let out = lp::maximize(&constraints, &obj);
    assert_eq!(out.status, LpStatus::Optimal);
    !out.objective.is_positive()
}

/// Whether the reflected copies of the active pieces stay below `u` on the
/// chamber, i.e. whether `max_w u(w y)` restricts back to `u` and so gives
/// the invariant convex extension.
pub fn w_extension_extends(rd: &RootDatum, u: &PLFunction, plus: &Polytope) -> Result<bool> {
    let active: BTreeSet<AffineForm> =
        u.cells(plus).into_iter().map(|(_, f)| f).collect();
    let canonical = PLFunction::max_of(u.nvars, active.iter().cloned().collect());
    let identity = crate::rat::identity(rd.rank);
    for w in rd.weyl_group()? {
        if w == identity {
            continue;
        }
        for f in &active {
            let composed =
                AffineForm::new(crate::rat::covec_mat(&f.covector, &w), f.constant.clone());
            if !form_below_pl(plus, &canonical, &composed) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CreaseKind {
    /// Contact along the reflection wall of the indexed simple root.
    Wall(usize),
    /// Contact edge crossing the interior of the chamber.
    Interior,
}

#[derive(Debug, Clone)]
pub struct CreaseCandidate {
    pub kind: CreaseKind,
    pub covector: QVec,
    pub offset: Rat,
    pub witness: PLFunction,
    pub parallel_root: Option<usize>,
    /// Corrected simplified functional of the witness.
    pub functional: Rat,
    /// Whether the full crease chord lies in the negative locus of the
    /// curvature comparison function.
    pub theta_negative: bool,
}

#[derive(Debug, Clone)]
pub struct CreaseReport {
    /// Central affine support subtracted during normalization.
    pub support: AffineForm,
    pub contact_vertices: Vec<QVec>,
    pub candidates: Vec<CreaseCandidate>,
    pub diagnostics: Vec<String>,
}

fn chord_theta_negative(
    ctx: &FutakiContext,
    negativity: &crate::poly::Polynomial,
    base_pt: &QVec,
    dir: &QVec,
) -> bool {
    let (t0, t1) = match ctx.cp.plus.clip_line(base_pt, dir) {
        Some(r) => r,
        None => return false,
    };
    if t0 == t1 {
        return false;
    }
    let a = vec_add(base_pt, &vec_scale(dir, &t0));
    let span = vec_scale(dir, &(&t1 - &t0));
    let q = negativity.restrict_to_line(&a, &span);
    if q.is_zero() {
        return false;
    }
    let half = rat(1, 2);
    if !q.eval(&half).is_negative() {
        return false;
    }
    let chain = sturm_chain(&q.squarefree());
    let mut inside = count_roots(&chain, &Rat::zero(), &Rat::one());
    if q.eval(&Rat::one()).is_zero() && inside > 0 {
        inside -= 1;
    }
    inside == 0
}

fn wall_support(ctx: &FutakiContext, u0: &PLFunction) -> Result<AffineForm> {
    let rd = &ctx.rd;
    let base = &ctx.cp.base;
    let sigma = rd.simple_roots.first().ok_or(Error::NoCentralSupport)?;
    let wall_cov = rd.covector_of(sigma);
    let zdir = kernel_basis(&[wall_cov], rd.rank)
        .into_iter()
        .next()
        .ok_or(Error::NoCentralSupport)?;
    let origin = zeros(rd.rank);
    let (t0, t1) = base.clip_line(&origin, &zdir).ok_or(Error::NoCentralSupport)?;
    if t0 == t1 {
        return Err(Error::NoCentralSupport);
    }
    let tmid = (&t0 + &t1) / rat_i(2);
    let z_o = vec_scale(&zdir, &tmid);
    if base.halfspaces.iter().any(|h| h.active_at(&z_o)) {
        return Err(Error::NoCentralSupport);
    }
    let central = rd.central_covector_basis();
    let c0 = match central.first() {
        Some(c) => c.clone(),
        None => return Ok(AffineForm::new(zeros(rd.rank), u0.eval(&z_o))),
    };
    let mut knots: Vec<(Rat, Rat)> = vec![];
    for (cell, form) in u0.cells(&ctx.cp.plus) {
        if let Some((lo, hi)) = cell.clip_line(&origin, &zdir) {
            if lo < hi {
                for t in [lo, hi] {
                    let pt = vec_scale(&zdir, &t);
                    knots.push((t, form.eval(&pt)));
                }
            }
        }
    }
    knots.sort_by(|a, b| a.0.cmp(&b.0));
    knots.dedup();
    if knots.len() < 2 {
        return Ok(AffineForm::new(zeros(rd.rank), u0.eval(&z_o)));
    }
    let slope_between = |i: usize, j: usize| -> Rat {
        (&knots[j].1 - &knots[i].1) / (&knots[j].0 - &knots[i].0)
    };
    let mut slope_t = None;
    for i in 0..knots.len() - 1 {
        if knots[i].0 < tmid && tmid < knots[i + 1].0 {
            slope_t = Some(slope_between(i, i + 1));
            break;
        }
        if tmid == knots[i].0 && i > 0 {
            slope_t = Some((slope_between(i - 1, i) + slope_between(i, i + 1)) / rat_i(2));
            break;
        }
    }
    let slope_t = slope_t.unwrap_or_else(Rat::zero);
    let s = slope_t / dot(&c0, &zdir);
    let cov = vec_scale(&c0, &s);
    let k = u0.eval(&z_o) - dot(&cov, &z_o);
    Ok(AffineForm::new(cov, k))
}

/// Extracts candidate crease witnesses from a kernel element of the
/// corrected functional: normalizes by a central support on the first
/// wall, takes the contact set, and emits one simple test function per
/// contact edge meeting the interior.
pub fn crease_search(ctx: &FutakiContext, u0: &PLFunction) -> Result<CreaseReport> {
    let rd = &ctx.rd;
    if rd.rank != 2 {
        return Err(Error::RankUnsupported(rd.rank));
    }
    let value = fano_futaki_relative(ctx, u0)?;
    if !value.is_zero() {
        return Err(Error::NotAKernelElement(format!(
            "functional value {}",
            format_rat(&value)
        )));
    }
    if !is_w_dominate(rd, u0, &ctx.cp.plus) {
        return Err(Error::PreconditionNotMet(
            "kernel candidate has gradients outside the dominant cone".into(),
        ));
    }
    let support = wall_support(ctx, u0)?;
    let v = PLFunction::max_of(
        u0.nvars,
        u0.pieces
            .iter()
            .map(|f| {
                AffineForm::new(
                    vec_sub(&f.covector, &support.covector),
                    &f.constant - &support.constant,
                )
            })
            .collect(),
    );
    let mut diagnostics = vec![];
    let mut contact: BTreeSet<QVec> = BTreeSet::new();
    for (cell, _) in v.cells(&ctx.cp.plus) {
        for vert in &cell.vertices {
            let val = v.eval(vert);
            if val.is_zero() {
                contact.insert(vert.clone());
            } else if val.is_negative() {
                diagnostics
                    .push("normalized function dips below its central support".to_string());
            }
        }
    }
    let hull = convex_hull_2d(&contact.iter().cloned().collect::<Vec<_>>());
    let theta = theta_function(ctx);
    let mut candidates: Vec<CreaseCandidate> = vec![];
    let push_wall = |i: usize, candidates: &mut Vec<CreaseCandidate>| -> Result<()> {
        let cov = rd.covector_of(&rd.simple_roots[i]);
        if candidates
            .iter()
            .any(|c| c.kind == CreaseKind::Wall(i))
        {
            return Ok(());
        }
        let witness = PLFunction::max_of(
            2,
            vec![
                AffineForm::new(cov.clone(), Rat::zero()),
                AffineForm::new(vec_neg(&cov), Rat::zero()),
            ],
        );
        let functional = fano_futaki_relative(ctx, &witness)?;
        let zdir = kernel_basis(std::slice::from_ref(&cov), 2).into_iter().next().unwrap();
        let theta_negative =
            chord_theta_negative(ctx, &theta.negativity, &zeros(2), &zdir);
        candidates.push(CreaseCandidate {
            kind: CreaseKind::Wall(i),
            covector: cov,
            offset: Rat::zero(),
            witness,
            parallel_root: None,
            functional,
            theta_negative,
        });
        Ok(())
    };
    let edges: Vec<(QVec, QVec)> = match hull.len() {
        0 => vec![],
        1 => vec![(hull[0].clone(), hull[0].clone())],
        2 => vec![(hull[0].clone(), hull[1].clone())],
        m => (0..m).map(|k| (hull[k].clone(), hull[(k + 1) % m].clone())).collect(),
    };
    for (a, b) in &edges {
        let mid = vec_scale(&vec_add(a, b), &rat(1, 2));
        if ctx.cp.base.halfspaces.iter().any(|h| h.active_at(&mid)) {
            continue;
        }
        let on_wall = (0..rd.simple_roots.len()).find(|&i| {
            rd.pairing(&rd.simple_roots[i], a).is_zero()
                && rd.pairing(&rd.simple_roots[i], b).is_zero()
        });
        if let Some(i) = on_wall {
            push_wall(i, &mut candidates)?;
            continue;
        }
        if a == b {
            diagnostics.push("contact set is a single interior point off the walls".to_string());
            continue;
        }
        let dir = vec_sub(b, a);
        let mut nc = vec![-dir[1].clone(), dir[0].clone()];
        if let Some(prim) = primitive_integer(&nc) {
            nc = int_to_rat_vec(&prim);
        }
        if !rd.covector_is_dominant(&nc) && rd.covector_is_dominant(&vec_neg(&nc)) {
            nc = vec_neg(&nc);
        }
        let offset = dot(&nc, a);
        if candidates
            .iter()
            .any(|c| c.kind == CreaseKind::Interior && c.covector == nc && c.offset == offset)
        {
            continue;
        }
        let witness = PLFunction::simple(&nc, &offset);
        let functional = fano_futaki_relative(ctx, &witness)?;
        let parallel_root = rd
            .restricted_roots
            .iter()
            .position(|al| (&dir[0] * &al[1] - &dir[1] * &al[0]).is_zero());
        let theta_negative = chord_theta_negative(ctx, &theta.negativity, a, &dir);
        candidates.push(CreaseCandidate {
            kind: CreaseKind::Interior,
            covector: nc,
            offset,
            witness,
            parallel_root,
            functional,
            theta_negative,
        });
    }
    diagnostics.sort();
    diagnostics.dedup();
    Ok(CreaseReport {
        support,
        contact_vertices: contact.into_iter().collect(),
        candidates,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::futaki::build_context;
    use crate::polytope::restrict_to_chamber;
    use crate::rat::rat_i;
    use crate::root_datum::fixtures;
    use rand::{Rng, SeedableRng};

    fn qv(x: i64, y: i64) -> QVec {
        vec![rat_i(x), rat_i(y)]
    }

    fn square() -> Polytope {
        Polytope::from_vertices(2, &[qv(-1, -1), qv(1, -1), qv(1, 1), qv(-1, 1)]).unwrap()
    }

    fn abs_x() -> PLFunction {
        PLFunction::max_of(
            2,
            vec![
                AffineForm::new(qv(1, 0), Rat::zero()),
                AffineForm::new(qv(-1, 0), Rat::zero()),
            ],
        )
    }

    fn grid() -> Vec<QVec> {
        let mut pts = vec![];
        for i in -4..=4i64 {
            for j in -4..=4i64 {
                pts.push(vec![rat(i, 4), rat(j, 4)]);
            }
        }
        pts
    }

    #[test]
    fn envelope_of_affine_data_is_the_affine() {
        let u = PLFunction::max_of(2, vec![AffineForm::new(qv(2, 3), rat_i(1))]);
        let bd = BoundaryData::from_pl(&square(), &u).unwrap();
        let er = convex_envelope(&bd).unwrap();
        for p in grid() {
            assert_eq!(er.function.eval(&p), u.eval(&p));
        }
        assert_eq!(er.contact_complex.len(), 1);
        assert!(er.ma_vertex_masses.is_empty());
        assert!(ma_measure_zero_check(&er).0);
        assert!(er.error_bound.is_none());
    }

    #[test]
    fn envelope_of_abs_boundary_data() {
        let u = abs_x();
        let bd = BoundaryData::from_pl(&square(), &u).unwrap();
        assert!(bd.samples.iter().any(|(p, _)| p == &qv(0, 1)));
        let er = convex_envelope(&bd).unwrap();
        for p in grid() {
            assert_eq!(er.function.eval(&p), u.eval(&p));
        }
        assert_eq!(er.contact_complex.len(), 2);
        let (ok, offending) = ma_measure_zero_check(&er);
        assert!(ok && offending.is_empty());
        for cell in &er.contact_complex {
            for v in &cell.vertices {
                assert!(square().halfspaces.iter().any(|h| h.active_at(v)));
            }
        }
    }

    #[test]
    fn envelope_of_sampled_paraboloid() {
        let bd = BoundaryData::sample_boundary(
            &square(),
            |p| &p[0] * &p[0] + &p[1] * &p[1],
            64,
        )
        .unwrap();
        let er = convex_envelope(&bd).unwrap();
        assert_eq!(er.function.eval(&qv(0, 0)), Rat::one());
        assert!(ma_measure_zero_check(&er).0);
        assert!(er.error_bound.clone().unwrap().is_positive());
        assert!(er.error_bound.unwrap() < rat_i(1));
        for cell in &er.contact_complex {
            for v in &cell.vertices {
                assert!(square().halfspaces.iter().any(|h| h.active_at(v)));
            }
        }
    }

    #[test]
    fn envelope_is_idempotent() {
        let bd = BoundaryData::from_pl(&square(), &abs_x()).unwrap();
        let e1 = convex_envelope(&bd).unwrap();
        let bd2 = BoundaryData::from_pl(&square(), &e1.function).unwrap();
        let e2 = convex_envelope(&bd2).unwrap();
        for f in &e1.function.pieces {
            assert!(form_below_pl(&square(), &e2.function, f));
        }
        for f in &e2.function.pieces {
            assert!(form_below_pl(&square(), &e1.function, f));
        }
    }

    #[test]
    fn envelope_majorizes_every_affine_minorant() {
        let bd = BoundaryData::sample_boundary(
            &square(),
            |p| &p[0] * &p[0] + &p[1] * &p[1],
            16,
        )
        .unwrap();
        let er = convex_envelope(&bd).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let cov = vec![rat(rng.gen_range(-8..=8), 4), rat(rng.gen_range(-8..=8), 4)];
            let mut form = AffineForm::new(cov, rat(rng.gen_range(-4..=4), 2));
            let worst = bd
                .samples
                .iter()
                .map(|(p, v)| form.eval(p) - v)
                .max()
                .unwrap();
            if worst.is_positive() {
                form.constant -= worst;
            }
            assert!(bd.samples.iter().all(|(p, v)| form.eval(p) <= *v));
            assert!(form_below_pl(&square(), &er.function, &form));
        }
    }

    #[test]
    fn envelope_is_monotone_in_the_data() {
        let bd1 = BoundaryData::sample_boundary(&square(), |p| abs_x().eval(p), 8).unwrap();
        let e1 = convex_envelope(&bd1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let samples2: Vec<(QVec, Rat)> = bd1
            .samples
            .iter()
            .map(|(p, v)| (p.clone(), v + rat(rng.gen_range(0..=6), 8)))
            .collect();
        let bd2 = BoundaryData::new(square(), samples2, bd1.resolution.clone()).unwrap();
        let e2 = convex_envelope(&bd2).unwrap();
        for f in &e1.function.pieces {
            assert!(form_below_pl(&square(), &e2.function, f));
        }
    }

    #[test]
    fn non_convex_edge_data_is_rejected() {
        let u = abs_x();
        let bd = BoundaryData::from_pl(&square(), &u).unwrap();
        let samples: Vec<(QVec, Rat)> = bd
            .samples
            .iter()
            .map(|(p, v)| {
                if p == &qv(0, 1) {
                    (p.clone(), rat_i(3))
                } else {
                    (p.clone(), v.clone())
                }
            })
            .collect();
        let bad = BoundaryData::new(square(), samples, None).unwrap();
        match convex_envelope(&bad) {
            Err(Error::NonConvexEdgeData(_)) => {}
            other => panic!("expected edge rejection, got {other:?}"),
        }
    }

    #[test]
    fn forced_apex_carries_mass() {
        let cone = PLFunction::max_of(
            2,
            vec![
                AffineForm::new(qv(1, 0), Rat::zero()),
                AffineForm::new(qv(-1, 0), Rat::zero()),
                AffineForm::new(qv(0, 1), Rat::zero()),
                AffineForm::new(qv(0, -1), Rat::zero()),
            ],
        );
        let er = analyze_function(&square(), &cone);
        let (ok, offending) = ma_measure_zero_check(&er);
        assert!(!ok);
        assert_eq!(offending.len(), 1);
        assert_eq!(offending[0].0, qv(0, 0));
        assert_eq!(offending[0].1, rat_i(2));
    }

    fn one_root_ctx(a: Rat) -> FutakiContext {
        let rd = fixtures::one_root();
        let p = Polytope::from_halfspaces(
            2,
            &[
                (qv(1, 0), a.clone()),
                (qv(-1, 0), a),
                (qv(0, 1), rat_i(1)),
                (qv(0, -1), rat_i(1)),
            ],
        )
        .unwrap();
        let cp = restrict_to_chamber(&p, &rd).unwrap();
        build_context(rd, cp, true).unwrap()
    }

    #[test]
    fn dominance_examples() {
        let ctx = one_root_ctx(rat_i(2));
        let rd = &ctx.rd;
        let plus = &ctx.cp.plus;
        let hinge = PLFunction::simple(&qv(1, 0), &Rat::zero());
        assert!(is_w_dominate(rd, &hinge, plus));
        assert!(w_extension_extends(rd, &hinge, plus).unwrap());
        let downhill = PLFunction::linear(qv(-1, 0));
        assert!(!is_w_dominate(rd, &downhill, plus));
        assert!(!w_extension_extends(rd, &downhill, plus).unwrap());
    }

    #[test]
    fn dominance_matches_extension_on_random_functions() {
        let ctx = one_root_ctx(rat_i(2));
        let rd = &ctx.rd;
        let plus = &ctx.cp.plus;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..12 {
            let pieces: Vec<AffineForm> = (0..3)
                .map(|_| {
                    AffineForm::new(
                        vec![rat_i(rng.gen_range(-2..=2)), rat_i(rng.gen_range(-2..=2))],
                        rat(rng.gen_range(-2..=2), 2),
                    )
                })
                .collect();
            let u = PLFunction::max_of(2, pieces);
            assert_eq!(
                is_w_dominate(rd, &u, plus),
                w_extension_extends(rd, &u, plus).unwrap()
            );
        }
    }

    #[test]
    fn crease_on_the_wall_for_the_semistable_model() {
        let ctx = one_root_ctx(rat(4, 3));
        let u0 = PLFunction::linear(qv(1, 0));
        let report = crease_search(&ctx, &u0).unwrap();
        assert!(is_zero_form(&report.support));
        assert!(report.diagnostics.is_empty());
        let wall: Vec<&CreaseCandidate> = report
            .candidates
            .iter()
            .filter(|c| c.kind == CreaseKind::Wall(0))
            .collect();
        assert_eq!(wall.len(), 1);
        assert_eq!(wall[0].functional, rat_i(0));
        assert_eq!(wall[0].covector, qv(1, 0));
    }

    fn is_zero_form(f: &AffineForm) -> bool {
        f.constant.is_zero() && f.covector.iter().all(|c| c.is_zero())
    }

    #[test]
    fn crease_rejects_non_kernel_input() {
        let rd = fixtures::toric(2);
        let cp = restrict_to_chamber(&square(), &rd).unwrap();
        let ctx = build_context(rd, cp, true).unwrap();
        match crease_search(&ctx, &abs_x()) {
            Err(Error::NotAKernelElement(_)) => {}
            other => panic!("expected kernel rejection, got {other:?}"),
        }
        // A genuine kernel element on a wall-free datum has no support point.
        match crease_search(&ctx, &PLFunction::linear(qv(0, 1))) {
            Err(Error::NoCentralSupport) => {}
            other => panic!("expected missing wall, got {other:?}"),
        }
    }

    #[test]
    fn crease_recovers_engineered_interior_offset() {
        // 3t^4 - 4t^3 takes the same value at 13/10 and 13/30, so the
        // hinge with threshold x = 13/30 is an exact kernel element.
        let ctx = one_root_ctx(rat(13, 10));
        let u0 = PLFunction::max_of(
            2,
            vec![
                AffineForm::new(zeros(2), Rat::zero()),
                AffineForm::new(vec![rat(1, 2), rat_i(0)], rat(-13, 60)),
                AffineForm::new(vec![rat(-1, 2), rat_i(0)], rat(-13, 60)),
            ],
        );
        let report = crease_search(&ctx, &u0).unwrap();
        let interior: Vec<&CreaseCandidate> = report
            .candidates
            .iter()
            .filter(|c| c.kind == CreaseKind::Interior)
            .collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].covector, qv(1, 0));
        assert_eq!(interior[0].offset, rat(13, 30));
        assert_eq!(interior[0].functional, rat_i(0));
        assert!(interior[0].parallel_root.is_none());
        assert!(!interior[0].theta_negative);
        let wall: Vec<&CreaseCandidate> = report
            .candidates
            .iter()
            .filter(|c| c.kind == CreaseKind::Wall(0))
            .collect();
        assert_eq!(wall.len(), 1);
        assert_eq!(wall[0].functional, rat(-1, 40));
    }

    #[test]
    fn crease_annotates_theta_negative_strips() {
        // Shrink the polytope into the pole-dominated strip so the whole
        // interior crease chord sits where the comparison function is
        // negative.
        let ctx = one_root_ctx(rat(13, 10));
        let theta = theta_function(&ctx);
        // Negative exactly on 0 < x < 2/\bar S.
        let cut = rat(2, 1) * rat(2197, 12337);
        let inside = vec![&cut / rat_i(2), Rat::zero()];
        assert!(theta.negativity.eval(&inside).is_negative());
        assert!(chord_theta_negative(
            &ctx,
            &theta.negativity,
            &vec![&cut / rat_i(2), Rat::zero()],
            &vec![Rat::zero(), Rat::one()],
        ));
        assert!(!chord_theta_negative(
            &ctx,
            &theta.negativity,
            &vec![rat(13, 30), Rat::zero()],
            &vec![Rat::zero(), Rat::one()],
        ));
    }

    #[test]
    fn hull_helper_handles_degenerate_sets() {
        let pts = vec![qv(0, 0), qv(2, 0), qv(1, 0)];
        assert_eq!(convex_hull_2d(&pts), vec![qv(0, 0), qv(2, 0)]);
        let tri = vec![qv(0, 0), qv(2, 0), qv(0, 2), qv(1, 0)];
        let hull = convex_hull_2d(&tri);
        assert_eq!(hull.len(), 3);
        assert_eq!(polygon_area(&hull), rat_i(2));
        assert_eq!(convex_hull_2d(&[qv(5, 5)]), vec![qv(5, 5)]);
    }
}
