//! Stability verdicts: offset normalization check, the simplified
//! functional and its extremal correction, the barycenter criterion with
//! witnesses, certified offset scans, the rank-two polystable degeneration,
//! the optimal-degeneration objective, and the soliton field solve.

use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::futaki::FutakiContext;
use crate::integrate::{integrate, slice_moments, triangulate, weighted_barycenter, PiecewisePoly1};
use crate::pl::{integrate_pl, PLFunction};
use crate::poly::{isolate_roots, simplest_in_interval, Polynomial, RootEnclosure, UniPoly};
use crate::polytope::{restrict_to_chamber, ChamberPolytope};
use crate::rat::{
    dot, is_zero_vec, rat_to_f64, vec_add, vec_neg, vec_scale, vec_sub, zeros, QVec, Rat,
};
use crate::root_datum::RootDatum;

#[derive(Debug, Clone)]
pub struct FacetCheck {
    pub facet: usize,
    pub offset: Rat,
    pub expected: Rat,
    pub matches: bool,
}

#[derive(Debug, Clone)]
pub struct FanoReport {
    pub normalized: bool,
    pub facets: Vec<FacetCheck>,
}

/// Verifies the anticanonical offset normalization `lambda_A = 1 + u_A . w`
/// on every outer facet, `w` the paired dominant weight vector.
pub fn check_fano(ctx: &FutakiContext) -> FanoReport {
    let mut facets = vec![];
    let mut normalized = true;
    for &a in &ctx.cp.outer_facets {
        let h = &ctx.cp.plus.halfspaces[a];
        let expected = Rat::one() + dot(&h.normal_rat(), &ctx.rd.two_rho);
        let matches = h.offset == expected;
        normalized &= matches;
        facets.push(FacetCheck { facet: a, offset: h.offset.clone(), expected, matches });
    }
    FanoReport { normalized, facets }
}

/// The simplified functional `(1/V) \int <grad u, y - w> pi dy`, evaluated
/// cell by cell.
pub fn fano_futaki(ctx: &FutakiContext, u: &PLFunction) -> Result<Rat> {
    let mut total = Rat::zero();
    for (cell, form) in u.cells(&ctx.cp.plus) {
        let ell = Polynomial::linear(
            &form.covector,
            &-dot(&form.covector, &ctx.rd.two_rho),
        );
        total += integrate(&cell, &ell.mul(&ctx.pi))?;
    }
    Ok(total / &ctx.volume)
}

/// The simplified functional corrected by the extremal potential.
pub fn fano_futaki_relative(ctx: &FutakiContext, u: &PLFunction) -> Result<Rat> {
    let theta = ctx.theta_polynomial();
    if theta.is_zero() {
        return fano_futaki(ctx, u);
    }
    let corr = integrate_pl(&ctx.cp.plus, u, &theta.mul(&ctx.pi))? / &ctx.volume;
    Ok(fano_futaki(ctx, u)? - corr)
}

#[derive(Debug, Clone)]
pub enum Verdict {
    KStable,
    StrictlySemistable(QVec),
    Unstable(PLFunction),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::KStable => 0,
            Verdict::StrictlySemistable(_) => 2,
            Verdict::Unstable(_) => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub barycenter: QVec,
    /// Coefficients of `b - sum of positive spherical roots` over the
    /// spherical simple roots.
    pub cone_coeffs: QVec,
    /// Central part of the same difference, in ambient coordinates.
    pub central_component: QVec,
    pub theorem_flags: Vec<String>,
    pub degeneration: Option<DegenerationData>,
}

fn from_coords(basis: &[QVec], coords: &QVec, dim: usize) -> QVec {
    let mut out = zeros(dim);
    for (b, c) in basis.iter().zip(coords) {
        out = vec_add(&out, &vec_scale(b, c));
    }
    out
}

/// The density-weighted barycenter criterion. The verdict is decided by the
/// decomposition of `b - w` (`w` the paired dominant weight vector); the
/// reported cone coefficients decompose `b - sum of positive roots`, and a
/// flag records when the two differ.
pub fn barycenter_criterion(ctx: &FutakiContext) -> Result<StabilityReport> {
    let rd = &ctx.rd;
    let b = weighted_barycenter(&ctx.cp.plus, &ctx.pi)?;
    let e = vec_sub(&b, &rd.two_rho);
    let (coeffs_e, central_e) = rd.decompose(&e)?;
    let root_sum = rd.sum_positive_roots()?;
    let d = vec_sub(&b, &root_sum);
    let (cone_coeffs, central_d) = rd.decompose(&d)?;
    let central_basis = rd.central_subspace();
    let central_component = from_coords(&central_basis, &central_d, rd.rank);

    let mut theorem_flags = vec![];
    if root_sum != rd.two_rho {
        theorem_flags.push(
            "positive root sum differs from the paired weight vector; the verdict follows the weight vector"
                .to_string(),
        );
    }
    if !check_fano(ctx).normalized {
        theorem_flags.push(
            "offsets are not anticanonically normalized; the criterion is a model heuristic here"
                .to_string(),
        );
    }

    let verdict = if !is_zero_vec(&central_e) {
        let central_vec = from_coords(&central_basis, &central_e, rd.rank);
        let witness = PLFunction::linear(rd.covector_of(&vec_neg(&central_vec)));
        Verdict::Unstable(witness)
    } else {
        let weights = rd.fundamental_weights()?;
        if let Some(i) = coeffs_e.iter().position(|c| c.is_negative()) {
            Verdict::Unstable(PLFunction::linear(rd.covector_of(&weights[i])))
        } else if let Some(i) = coeffs_e.iter().position(|c| c.is_zero()) {
            if rd.rank == 2 && central_basis.is_empty() && rd.is_irreducible() {
                theorem_flags.push(
                    "strict semistability for irreducible rank-two data without central directions contradicts the expected classification"
                        .to_string(),
                );
            }
            Verdict::StrictlySemistable(weights[i].clone())
        } else {
            Verdict::KStable
        }
    };

    Ok(StabilityReport {
        verdict,
        barycenter: b,
        cone_coeffs,
        central_component,
        theorem_flags,
        degeneration: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OffsetKind {
    AffineEnd,
    Interior,
    Saturation,
}

#[derive(Debug, Clone)]
pub struct ScanRoot {
    pub offset: RootEnclosure,
    pub kind: OffsetKind,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub direction: QVec,
    pub roots: Vec<ScanRoot>,
    /// True when the scan value is strictly positive strictly between the
    /// first and last breakpoints.
    pub interior_positive: bool,
    pub minimum_sample: Option<Rat>,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub entries: Vec<ScanEntry>,
    pub minimum: Option<Rat>,
    pub interior_strictly_positive: bool,
}

fn enclosure_width_bound() -> Rat {
    Rat::new(BigInt::one(), BigInt::from(2u64).pow(64))
}

fn scale_pieces(f: PiecewisePoly1, c: &Rat) -> PiecewisePoly1 {
    let pieces = f.pieces.iter().map(|p| p.scale(c)).collect();
    PiecewisePoly1 { breakpoints: f.breakpoints, pieces }
}

fn combine_scan(
    main: PiecewisePoly1,
    f1: &PiecewisePoly1,
    f2: &PiecewisePoly1,
) -> PiecewisePoly1 {
    assert_eq!(main.breakpoints, f1.breakpoints);
    assert_eq!(main.breakpoints, f2.breakpoints);
    let x = UniPoly::new(vec![Rat::zero(), Rat::one()]);
    let pieces = main
        .pieces
        .iter()
        .zip(f1.pieces.iter().zip(&f2.pieces))
        .map(|(m, (p1, p2))| m.sub(&p1.sub(&x.mul(p2))))
        .collect();
    PiecewisePoly1 { breakpoints: main.breakpoints, pieces }
}

/// Shrinks an isolating interval with a sign change of `sq` until it avoids
/// the listed points; returns an exact root if bisection lands on one.
fn refine_enclosure(sq: &UniPoly, mut lo: Rat, mut hi: Rat, avoid: &[Rat]) -> RootEnclosure {
    loop {
        if !avoid.iter().any(|p| *p > lo && *p < hi) {
            return RootEnclosure::Interval(lo, hi);
        }
        let mid = (&lo + &hi) / crate::rat::rat_i(2);
        let vm = sq.eval(&mid);
        if vm.is_zero() {
            return RootEnclosure::Exact(mid);
        }
        if (sq.eval(&lo).is_positive() && vm.is_negative())
            || (sq.eval(&lo).is_negative() && vm.is_positive())
        {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn scan_direction(ctx: &FutakiContext, lam: &QVec) -> Result<ScanEntry> {
    let rd = &ctx.rd;
    let plus = &ctx.cp.plus;
    let cov = rd.covector_of(lam);
    let shifted = Polynomial::linear(&cov, &-rd.pairing(lam, &rd.two_rho));
    let f_main = slice_moments(plus, &cov, &shifted.mul(&ctx.pi))?;
    let theta = ctx.theta_polynomial();
    let inv = Rat::one() / &ctx.volume;
    let f = if theta.is_zero() {
        scale_pieces(f_main, &inv)
    } else {
        let tp = theta.mul(&ctx.pi);
        let f1 = slice_moments(plus, &cov, &Polynomial::linear(&cov, &Rat::zero()).mul(&tp))?;
        let f2 = slice_moments(plus, &cov, &tp)?;
        scale_pieces(combine_scan(f_main, &f1, &f2), &inv)
    };

    let n = f.breakpoints.len();
    let mut roots = vec![];
    for (k, bp) in f.breakpoints.iter().enumerate() {
        if f.eval(bp).is_zero() {
            let kind = if k == 0 {
                OffsetKind::AffineEnd
            } else if k == n - 1 {
                OffsetKind::Saturation
            } else {
                OffsetKind::Interior
            };
            roots.push(ScanRoot { offset: RootEnclosure::Exact(bp.clone()), kind, exact: true });
        }
    }

    let eps = enclosure_width_bound();
    let mut interior_positive = true;
    let mut minimum_sample: Option<Rat> = None;
    let mut degenerate = false;
    for k in 0..n - 1 {
        let piece = &f.pieces[k];
        let (a, b) = (&f.breakpoints[k], &f.breakpoints[k + 1]);
        if piece.is_zero() {
            degenerate = true;
            interior_positive = false;
            minimum_sample = Some(match minimum_sample {
                Some(m) if m <= Rat::zero() => m,
                _ => Rat::zero(),
            });
            continue;
        }
        let mut piece_has_root = false;
        for enc in isolate_roots(piece, &eps) {
            let refined = match enc {
                RootEnclosure::Exact(r) => RootEnclosure::Exact(r),
                RootEnclosure::Interval(lo, hi) => {
                    if hi <= *a || lo >= *b {
                        continue;
                    }
                    if piece.eval(a).is_zero() && lo < *a && hi > *a {
                        continue;
                    }
                    if piece.eval(b).is_zero() && lo < *b && hi > *b {
                        continue;
                    }
                    let sq = piece.squarefree();
                    match refine_enclosure(&sq, lo, hi, &[a.clone(), b.clone()]) {
                        RootEnclosure::Exact(r) => RootEnclosure::Exact(r),
                        RootEnclosure::Interval(lo2, hi2) => {
                            if hi2 <= *a || lo2 >= *b {
                                continue;
                            }
                            let cand = simplest_in_interval(&lo2, &hi2);
                            if piece.eval(&cand).is_zero() {
                                RootEnclosure::Exact(cand)
                            } else {
                                RootEnclosure::Interval(lo2, hi2)
                            }
                        }
                    }
                }
            };
            if let RootEnclosure::Exact(r) = &refined {
                if !(r > a && r < b) {
                    continue;
                }
            }
            let exact = matches!(refined, RootEnclosure::Exact(_));
            piece_has_root = true;
            roots.push(ScanRoot { offset: refined, kind: OffsetKind::Interior, exact });
        }
        if piece_has_root {
            interior_positive = false;
        }
        let mid = (a + b) / crate::rat::rat_i(2);
        let v = piece.eval(&mid);
        if !v.is_positive() && !piece_has_root {
            interior_positive = false;
        }
        minimum_sample = Some(match minimum_sample {
            Some(m) if m <= v => m,
            _ => v,
        });
    }

    Ok(ScanEntry { direction: lam.clone(), roots, interior_positive, minimum_sample, degenerate })
}

/// Scans simple test functions `max(<lam, y> - offset, 0)` over each
/// direction, certifying every offset where the corrected simplified
/// functional vanishes.
pub fn witness_scan(ctx: &FutakiContext, directions: &[QVec]) -> Result<ScanOutcome> {
    if ctx.rd.rank > 3 {
        return Err(Error::RankUnsupported(ctx.rd.rank));
    }
    let mut entries = vec![];
    let mut minimum: Option<Rat> = None;
    let mut interior_strictly_positive = true;
    for lam in directions {
        if is_zero_vec(lam) || !ctx.rd.is_dominant(lam) {
            continue;
        }
        let entry = scan_direction(ctx, lam)?;
        interior_strictly_positive &= entry.interior_positive;
        if let Some(m) = &entry.minimum_sample {
            minimum = Some(match minimum {
                Some(cur) if cur <= *m => cur,
                _ => m.clone(),
            });
        }
        entries.push(entry);
    }
    Ok(ScanOutcome { entries, minimum, interior_strictly_positive })
}

fn farey_fractions(denominator: i64) -> Vec<Rat> {
    let mut out = std::collections::BTreeSet::new();
    for q in 2..=denominator {
        for p in 1..q {
            out.insert(Rat::new(BigInt::from(p), BigInt::from(q)));
        }
    }
    out.into_iter().collect()
}

/// The standard scan net: fundamental weights, signed central directions,
/// dominant positive roots, and pairwise convex combinations over a Farey
/// grid, all primitive and deduplicated.
pub fn default_direction_net(rd: &RootDatum, denominator: i64) -> Result<Vec<QVec>> {
    let mut rays: Vec<QVec> = vec![];
    for w in rd.fundamental_weights()? {
        if !is_zero_vec(&w) {
            rays.push(w);
        }
    }
    for z in rd.central_subspace() {
        rays.push(vec_neg(&z));
        rays.push(z);
    }
    let mut candidates = rays.clone();
    for alpha in rd.positive_roots()? {
        candidates.push(alpha);
    }
    let fractions = farey_fractions(denominator);
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            for t in &fractions {
                let s = Rat::one() - t;
                candidates.push(vec_add(&vec_scale(&rays[i], &s), &vec_scale(&rays[j], t)));
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in candidates {
        if is_zero_vec(&c) || !rd.is_dominant(&c) {
            continue;
        }
        if let Some(prim) = crate::rat::primitive_integer(&c) {
            seen.insert(crate::rat::int_to_rat_vec(&prim));
        }
    }
    Ok(seen.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiberClass {
    HorosphericalKStable,
    Inconsistent,
}

#[derive(Debug, Clone)]
pub struct DegenerationData {
    pub fiber_datum: RootDatum,
    pub fiber: ChamberPolytope,
    pub barycenter: QVec,
    pub root_sum: QVec,
    pub barycenter_check: bool,
    pub classification: FiberClass,
    pub diagnostics: Vec<String>,
}

/// The rank-two polystable central fiber: the same chamber polytope with a
/// trivial reflection group, verified against the barycenter identity.
pub fn polystable_degeneration(ctx: &FutakiContext) -> Result<DegenerationData> {
    if ctx.rd.rank != 2 {
        return Err(Error::PreconditionNotMet("rank 2 required".into()));
    }
    if ctx.rd.central_subspace().len() != 1 {
        return Err(Error::PreconditionNotMet(
            "one-dimensional central subspace required".into(),
        ));
    }
    let report = barycenter_criterion(ctx)?;
    if !matches!(report.verdict, Verdict::StrictlySemistable(_)) {
        return Err(Error::PreconditionNotMet(
            "verdict is not strictly semistable".into(),
        ));
    }
    let fiber_datum = RootDatum {
        rank: ctx.rd.rank,
        gram: ctx.rd.gram.clone(),
        restricted_roots: ctx.rd.restricted_roots.clone(),
        two_rho: ctx.rd.two_rho.clone(),
        simple_roots: vec![],
        colours: vec![],
    };
    let fiber = restrict_to_chamber(&ctx.cp.plus, &fiber_datum)?;
    let barycenter = weighted_barycenter(&ctx.cp.plus, &ctx.pi)?;
    let root_sum = ctx.rd.sum_positive_roots()?;
    let barycenter_check = barycenter == root_sum;
    let mut diagnostics = vec![];
    let classification = if barycenter_check {
        FiberClass::HorosphericalKStable
    } else {
        diagnostics.push(format!(
            "barycenter {:?} differs from the positive root sum {:?}",
            barycenter
                .iter()
                .map(crate::rat::format_rat)
                .collect::<Vec<_>>(),
            root_sum.iter().map(crate::rat::format_rat).collect::<Vec<_>>(),
        ));
        FiberClass::Inconsistent
    };
    Ok(DegenerationData {
        fiber_datum,
        fiber,
        barycenter,
        root_sum,
        barycenter_check,
        classification,
        diagnostics,
    })
}

/// Returns the corrected simplified functional value and the squared
/// density norm of `u`; errors when `u` is a combination of constants and
/// central affine functions (zero norm after projection).
pub fn optimal_objective(ctx: &FutakiContext, u: &PLFunction) -> Result<(Rat, Rat)> {
    let plus = &ctx.cp.plus;
    let rd = &ctx.rd;
    let mut norm2 = Rat::zero();
    for (cell, form) in u.cells(plus) {
        let p = form.to_polynomial();
        norm2 += integrate(&cell, &p.mul(&p).mul(&ctx.pi))?;
    }
    let mut funcs: Vec<Polynomial> = vec![Polynomial::one(rd.rank)];
    for z in rd.central_subspace() {
        funcs.push(Polynomial::linear(&rd.covector_of(&z), &Rat::zero()));
    }
    let k = funcs.len();
    let mut gram: Vec<QVec> = vec![];
    let mut moments: QVec = vec![];
    for i in 0..k {
        let mut row = zeros(k);
        for j in 0..k {
            row[j] = integrate(plus, &funcs[i].mul(&funcs[j]).mul(&ctx.pi))?;
        }
        gram.push(row);
        moments.push(integrate_pl(plus, u, &funcs[i].mul(&ctx.pi))?);
    }
    let coeffs = crate::rat::solve(&gram, &moments).ok_or(Error::SingularMoment)?;
    let residual2 = &norm2 - dot(&coeffs, &moments);
    if residual2.is_zero() {
        return Err(Error::ZeroNorm);
    }
    Ok((fano_futaki_relative(ctx, u)?, norm2))
}

fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = pk;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

#[derive(Debug, Clone)]
pub struct SolitonOutcome {
    pub field: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Line-searched objective after the start and each accepted step.
    pub objective_trace: Vec<f64>,
}

struct QuadRule {
    /// Per point: pairing of each central basis vector with `y - w`, and
    /// the combined positive weight.
    points: Vec<(Vec<f64>, f64)>,
}

fn build_quadrature(ctx: &FutakiContext, basis: &[QVec]) -> QuadRule {
    let dim = ctx.rd.rank;
    let gl = gauss_legendre_01(32);
    let covs: Vec<Vec<f64>> = basis
        .iter()
        .map(|z| ctx.rd.covector_of(z).iter().map(rat_to_f64).collect())
        .collect();
    let w_ref: Vec<f64> = ctx.rd.two_rho.iter().map(rat_to_f64).collect();
    let mut points = vec![];
    for simplex in triangulate(&ctx.cp.plus) {
        let v0: Vec<f64> = simplex[0].iter().map(rat_to_f64).collect();
        let edges: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| rat_to_f64(&(a - b))).collect())
            .collect();
        let m: Vec<QVec> = (0..dim)
            .map(|i| (0..dim).map(|j| &simplex[j + 1][i] - &simplex[0][i]).collect())
            .collect();
        let det = rat_to_f64(&crate::rat::det(&m)).abs();
        if det == 0.0 {
            continue;
        }
        let mut idx = vec![0usize; dim];
        loop {
            let mut jac = 1.0f64;
            let mut remaining = 1.0f64;
            let mut bary = vec![0.0f64; dim];
            let mut wq = det;
            for (d, &i) in idx.iter().enumerate() {
                let (node, weight) = gl[i];
                let s = node * remaining;
                jac *= remaining;
                remaining -= s;
                bary[d] = s;
                wq *= weight;
            }
            wq *= jac;
            let mut y = v0.clone();
            for (d, e) in edges.iter().enumerate() {
                for i in 0..dim {
                    y[i] += bary[d] * e[i];
                }
            }
            let density = ctx.pi.eval_f64(&y);
            let diff: Vec<f64> = y.iter().zip(&w_ref).map(|(a, b)| a - b).collect();
            let pairings: Vec<f64> = covs
                .iter()
                .map(|c| c.iter().zip(&diff).map(|(a, b)| a * b).sum())
                .collect();
            points.push((pairings, wq * density));
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < gl.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == dim {
                    break;
                }
            }
            if d == dim {
                break;
            }
        }
    }
    QuadRule { points }
}

impl QuadRule {
    fn objective(&self, c: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|(a, w)| w * (c.iter().zip(a).map(|(x, y)| x * y).sum::<f64>()).exp())
            .sum()
    }

    fn grad_hess(&self, c: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
        let d = c.len();
        let mut g = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; d];
        let mut mass = 0.0;
        for (a, w) in &self.points {
            let e = w * (c.iter().zip(a).map(|(x, y)| x * y).sum::<f64>()).exp();
            mass += e;
            for i in 0..d {
                g[i] += e * a[i];
                for j in 0..d {
                    h[i][j] += e * a[i] * a[j];
                }
            }
        }
        (g, h, mass)
    }
}

fn solve_f64(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in r + 1..n {
            s -= m[r][k] * x[k];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

/// Damped Newton solve for the central field whose twisted barycenter
/// matches the paired weight vector. Floating point by design; every other
/// operation in the crate is exact.
pub fn soliton_field(
    ctx: &FutakiContext,
    tolerance: f64,
    max_iterations: usize,
) -> Result<SolitonOutcome> {
    let basis = ctx.rd.central_subspace();
    if basis.is_empty() {
        return Err(Error::PreconditionNotMet(
            "central subspace is zero".into(),
        ));
    }
    let rule = build_quadrature(ctx, &basis);
    let d = basis.len();
    let mut c = vec![0.0; d];
    let mut value = rule.objective(&c);
    let mut trace = vec![value];
    let mut residual = f64::INFINITY;
    for it in 0..max_iterations {
        let (g, h, mass) = rule.grad_hess(&c);
        residual = g.iter().fold(0.0f64, |m, x| m.max(x.abs())) / mass;
        if residual < tolerance {
            let mut field = vec![0.0; ctx.rd.rank];
            for (j, z) in basis.iter().enumerate() {
                for i in 0..ctx.rd.rank {
                    field[i] += c[j] * rat_to_f64(&z[i]);
                }
            }
            return Ok(SolitonOutcome {
                field,
                coefficients: c,
                residual,
                iterations: it,
                objective_trace: trace,
            });
        }
        let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
        let step = solve_f64(h, neg_g).ok_or(Error::NoConvergence(residual))?;
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let tv = rule.objective(&trial);
            if tv.is_finite() && tv < value {
                c = trial;
                value = tv;
                trace.push(value);
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if !accepted {
            return Err(Error::NoConvergence(residual));
        }
    }
    Err(Error::NoConvergence(residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::futaki::build_context;
    use crate::polytope::Polytope;
    use crate::rat::{rat, rat_i};
    use crate::root_datum::fixtures;

    fn qv(x: i64, y: i64) -> QVec {
        vec![rat_i(x), rat_i(y)]
    }

    fn box_poly(x0: Rat, x1: Rat, y0: Rat, y1: Rat) -> Polytope {
        Polytope::from_halfspaces(
            2,
            &[
                (qv(1, 0), x1),
                (qv(-1, 0), -x0),
                (qv(0, 1), y1),
                (qv(0, -1), -y0),
            ],
        )
        .unwrap()
    }

    fn ctx_of(rd: RootDatum, p: &Polytope) -> FutakiContext {
        let cp = restrict_to_chamber(p, &rd).unwrap();
        build_context(rd, cp, true).unwrap()
    }

    fn toric_square_ctx() -> FutakiContext {
        ctx_of(fixtures::toric(2), &box_poly(rat_i(-1), rat_i(1), rat_i(-1), rat_i(1)))
    }

    fn strict_ss_ctx() -> FutakiContext {
        ctx_of(fixtures::one_root(), &box_poly(rat(-4, 3), rat(4, 3), rat_i(-1), rat_i(1)))
    }

    fn kstable_ctx() -> FutakiContext {
        ctx_of(fixtures::one_root(), &box_poly(rat_i(-2), rat_i(2), rat_i(-1), rat_i(1)))
    }

    #[test]
    fn fano_normalization_check() {
        assert!(check_fano(&toric_square_ctx()).normalized);
        assert!(check_fano(&kstable_ctx()).normalized);
        let wide = ctx_of(fixtures::one_root(), &box_poly(rat_i(-3), rat_i(3), rat_i(-1), rat_i(1)));
        let report = check_fano(&wide);
        assert!(!report.normalized);
        let bad: Vec<&FacetCheck> = report.facets.iter().filter(|f| !f.matches).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].offset, rat_i(3));
        assert_eq!(bad[0].expected, rat_i(2));
    }

    #[test]
    fn simplified_functional_examples() {
        let ss = strict_ss_ctx();
        let one = PLFunction::constant(2, Rat::one());
        assert_eq!(fano_futaki(&ss, &one).unwrap(), rat_i(0));
        assert_eq!(fano_futaki(&ss, &PLFunction::linear(qv(1, 0))).unwrap(), rat_i(0));
        assert_eq!(fano_futaki(&ss, &PLFunction::linear(qv(0, 1))).unwrap(), rat_i(0));
        let ks = kstable_ctx();
        assert_eq!(fano_futaki(&ks, &PLFunction::linear(qv(1, 0))).unwrap(), rat(1, 2));
    }

    #[test]
    fn simplified_equals_pairing_with_barycenter() {
        for ctx in [toric_square_ctx(), strict_ss_ctx(), kstable_ctx()] {
            let b = weighted_barycenter(&ctx.cp.plus, &ctx.pi).unwrap();
            let e = vec_sub(&b, &ctx.rd.two_rho);
            for lam in [qv(1, 0), qv(0, 1), qv(2, 3), qv(1, 1)] {
                if !ctx.rd.is_dominant(&lam) {
                    continue;
                }
                let u = PLFunction::linear(ctx.rd.covector_of(&lam));
                assert_eq!(fano_futaki(&ctx, &u).unwrap(), ctx.rd.pairing(&lam, &e));
            }
        }
    }

    #[test]
    fn general_matches_simplified_on_normalized_offsets() {
        let ks = kstable_ctx();
        assert!(check_fano(&ks).normalized);
        for u in [
            PLFunction::simple(&qv(1, 0), &rat(1, 2)),
            PLFunction::simple(&qv(1, 1), &Rat::one()),
            PLFunction::linear(qv(1, 0)),
        ] {
            assert_eq!(
                crate::futaki::futaki_l(&ks, &u).unwrap(),
                fano_futaki(&ks, &u).unwrap()
            );
        }
    }

    #[test]
    fn criterion_toric_square() {
        let report = barycenter_criterion(&toric_square_ctx()).unwrap();
        assert!(matches!(report.verdict, Verdict::KStable));
        assert_eq!(report.barycenter, qv(0, 0));
        assert!(report.cone_coeffs.is_empty());
        assert!(is_zero_vec(&report.central_component));
        assert!(report.theorem_flags.is_empty());
    }

    #[test]
    fn criterion_strictly_semistable_model() {
        let report = barycenter_criterion(&strict_ss_ctx()).unwrap();
        assert_eq!(report.barycenter, qv(1, 0));
        match &report.verdict {
            Verdict::StrictlySemistable(w) => {
                assert_eq!(w, &vec![rat(1, 2), rat_i(0)]);
                let u = PLFunction::linear(strict_ss_ctx().rd.covector_of(w));
                assert_eq!(fano_futaki(&strict_ss_ctx(), &u).unwrap(), rat_i(0));
            }
            v => panic!("unexpected verdict {v:?}"),
        }
        assert_eq!(report.cone_coeffs, vec![rat_i(0)]);
        // The polytope is a general polarization, not the anticanonical
        // one, so the criterion is stamped as a model heuristic.
        assert!(report
            .theorem_flags
            .iter()
            .any(|f| f.contains("not anticanonically normalized")));
    }

    #[test]
    fn criterion_kstable_model() {
        let report = barycenter_criterion(&kstable_ctx()).unwrap();
        assert_eq!(report.barycenter, vec![rat(3, 2), rat_i(0)]);
        assert!(matches!(report.verdict, Verdict::KStable));
        assert_eq!(report.cone_coeffs, vec![rat(1, 2)]);
        assert!(report.theorem_flags.is_empty());
    }

    #[test]
    fn criterion_unstable_central() {
        let rd = fixtures::toric(2);
        let p = Polytope::from_vertices(
            2,
            &[qv(-1, -1), qv(2, -1), qv(0, 1), qv(-1, 1)],
        )
        .unwrap();
        let ctx = ctx_of(rd, &p);
        let report = barycenter_criterion(&ctx).unwrap();
        assert_eq!(report.barycenter, vec![rat(1, 12), rat(-1, 6)]);
        match &report.verdict {
            Verdict::Unstable(u) => {
                assert!(fano_futaki(&ctx, u).unwrap().is_negative());
            }
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn scan_strict_ss_direction() {
        let ctx = strict_ss_ctx();
        let out = witness_scan(&ctx, &[qv(1, 0)]).unwrap();
        assert_eq!(out.entries.len(), 1);
        let entry = &out.entries[0];
        assert!(entry.interior_positive);
        assert!(!entry.degenerate);
        let kinds: Vec<(&OffsetKind, Rat)> = entry
            .roots
            .iter()
            .map(|r| (&r.kind, r.offset.midpoint()))
            .collect();
        assert_eq!(kinds.len(), 2);
        assert_eq!(kinds[0], (&OffsetKind::AffineEnd, rat_i(0)));
        assert_eq!(kinds[1], (&OffsetKind::Saturation, rat(4, 3)));
        assert!(entry.roots.iter().all(|r| r.exact));
    }

    #[test]
    fn scan_kstable_is_positive_inside() {
        let ctx = kstable_ctx();
        let net = default_direction_net(&ctx.rd, 4).unwrap();
        assert!(net.contains(&qv(1, 0)));
        let out = witness_scan(&ctx, &net).unwrap();
        assert!(out.interior_strictly_positive);
        assert!(out.minimum.unwrap().is_positive());
        for entry in &out.entries {
            for root in &entry.roots {
                assert_ne!(root.kind, OffsetKind::Interior);
            }
        }
    }

    #[test]
    fn scan_toric_square_zeroes_only_at_regime_ends() {
        let ctx = toric_square_ctx();
        let out = witness_scan(&ctx, &[qv(1, 0)]).unwrap();
        let entry = &out.entries[0];
        assert!(entry.interior_positive);
        assert_eq!(entry.roots.len(), 2);
        assert_eq!(entry.roots[0].kind, OffsetKind::AffineEnd);
        assert_eq!(entry.roots[0].offset, RootEnclosure::Exact(rat_i(-1)));
        assert_eq!(entry.roots[1].kind, OffsetKind::Saturation);
        assert_eq!(entry.roots[1].offset, RootEnclosure::Exact(rat_i(1)));
    }

    #[test]
    fn scan_finds_interior_root_of_unstable_toric() {
        // Quadrilateral leaning left of the origin: hinges pointing along
        // (-1,0) change sign at an irrational offset, the real root of
        // t^3 + 3t^2 - 3 inside (-3/2, -1).
        let rd = fixtures::toric(2);
        let p = Polytope::from_vertices(
            2,
            &[qv(-1, -1), qv(2, -1), qv(0, 1), qv(-1, 1)],
        )
        .unwrap();
        let ctx = ctx_of(rd, &p);
        // Scan the uncorrected functional by zeroing the potential.
        let mut bare = ctx;
        bare.extremal = crate::futaki::ExtremalField {
            field: zeros(2),
            constant: Rat::zero(),
            potential: crate::pl::AffineForm::new(zeros(2), Rat::zero()),
        };
        let out = witness_scan(&bare, &[vec![rat_i(-1), rat_i(0)]]).unwrap();
        let entry = &out.entries[0];
        assert!(!entry.interior_positive);
        let interior: Vec<&ScanRoot> = entry
            .roots
            .iter()
            .filter(|r| r.kind == OffsetKind::Interior)
            .collect();
        assert_eq!(interior.len(), 1);
        assert!(!interior[0].exact);
        let m = interior[0].offset.midpoint();
        assert!(m > rat(-3, 2) && m < rat_i(-1));
        let resid = (&m * &m * &m + rat_i(3) * &m * &m - rat_i(3)).abs();
        assert!(resid < rat(1, 1 << 40));
        // Saturation at the far end is always a zero.
        assert!(entry
            .roots
            .iter()
            .any(|r| r.kind == OffsetKind::Saturation
                && r.offset == RootEnclosure::Exact(rat_i(1))));
        assert_eq!(entry.roots.len(), 2);
    }

    #[test]
    fn net_respects_dominance() {
        let rd = fixtures::a2();
        let net = default_direction_net(&rd, 4).unwrap();
        assert!(net.contains(&qv(2, 1)));
        assert!(net.contains(&qv(1, 2)));
        assert!(net.contains(&qv(1, 1)));
        assert!(!net.contains(&qv(1, 0)));
        assert!(net.iter().all(|v| rd.is_dominant(v)));
        let toric = fixtures::toric(2);
        let tnet = default_direction_net(&toric, 3).unwrap();
        assert!(tnet.contains(&qv(1, 0)));
        assert!(tnet.contains(&vec![rat_i(-1), rat_i(0)]));
        assert!(tnet.contains(&qv(1, 2)));
    }

    #[test]
    fn degeneration_of_strictly_semistable_model() {
        let ctx = strict_ss_ctx();
        let data = polystable_degeneration(&ctx).unwrap();
        assert!(data.barycenter_check);
        assert_eq!(data.classification, FiberClass::HorosphericalKStable);
        assert_eq!(data.barycenter, qv(1, 0));
        assert_eq!(data.root_sum, qv(1, 0));
        assert!(data.fiber_datum.simple_roots.is_empty());
        assert_eq!(data.fiber_datum.weyl_group().unwrap().len(), 1);
        assert!(data.fiber.wall_facets.is_empty());
        assert_eq!(data.fiber.plus.vertices, ctx.cp.plus.vertices);
        // The fiber is itself K-stable for its trivial reflection group.
        let fiber_cp = restrict_to_chamber(&ctx.cp.plus, &data.fiber_datum).unwrap();
        let fiber_ctx = build_context(data.fiber_datum, fiber_cp, true).unwrap();
        let fiber_report = barycenter_criterion(&fiber_ctx).unwrap();
        assert!(matches!(fiber_report.verdict, Verdict::KStable));
        assert_eq!(fiber_ctx.volume, ctx.volume);
        assert_eq!(fiber_ctx.mean_scalar, ctx.mean_scalar);
    }

    #[test]
    fn degeneration_requires_strict_semistability() {
        let err = polystable_degeneration(&kstable_ctx()).unwrap_err();
        assert!(matches!(err, Error::PreconditionNotMet(_)));
    }

    #[test]
    fn objective_values_and_scaling() {
        let ctx = strict_ss_ctx();
        let u = PLFunction::linear(qv(1, 0));
        let (l, n2) = optimal_objective(&ctx, &u).unwrap();
        assert_eq!(l, rat_i(0));
        assert_eq!(n2, rat(2048, 1215));
        let doubled = u.scale(&rat_i(2));
        let (l2, n22) = optimal_objective(&ctx, &doubled).unwrap();
        assert_eq!(l2, &l * rat_i(2));
        assert_eq!(n22, &n2 * rat_i(4));
        let c = PLFunction::constant(2, rat_i(5));
        assert!(matches!(optimal_objective(&ctx, &c), Err(Error::ZeroNorm)));
        let central = PLFunction::linear(qv(0, 1));
        assert!(matches!(
            optimal_objective(&ctx, &central),
            Err(Error::ZeroNorm)
        ));
        let hinge = PLFunction::simple(&qv(1, 0), &rat(1, 2));
        assert!(optimal_objective(&ctx, &hinge).is_ok());
    }

    #[test]
    fn soliton_vanishes_under_symmetry() {
        let ctx = strict_ss_ctx();
        let out = soliton_field(&ctx, 1e-12, 100).unwrap();
        assert!(out.residual < 1e-12);
        assert!(out.field[1].abs() < 1e-10);
        let toric = toric_square_ctx();
        let out2 = soliton_field(&toric, 1e-12, 100).unwrap();
        assert!(out2.field.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn soliton_matches_scalar_oracle() {
        let mut rd = fixtures::toric(2);
        rd.two_rho = vec![rat(1, 3), rat_i(0)];
        let p = box_poly(rat_i(0), rat_i(1), rat_i(-1), rat_i(1));
        let cp = restrict_to_chamber(&p, &rd).unwrap();
        let ctx = build_context(rd, cp, false).unwrap();
        let out = soliton_field(&ctx, 1e-12, 100).unwrap();
        assert!(out.field[1].abs() < 1e-10);
        // Oracle: bisection on g(v) = int_0^1 (x - 1/3) e^{v x} dx.
        let g = |v: f64| {
            let n = 20000;
            let mut s = 0.0;
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                s += (x - 1.0 / 3.0) * (v * x).exp();
            }
            s / n as f64
        };
        let (mut lo, mut hi) = (-8.0f64, 0.0f64);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!(
            (out.field[0] - oracle).abs() < 1e-6,
            "field {} vs oracle {}",
            out.field[0],
            oracle
        );
    }

    #[test]
    fn quadrature_is_accurate() {
        // Exactness sanity: quadrature reproduces an exact moment closely.
        let ctx = strict_ss_ctx();
        let basis = ctx.rd.central_subspace();
        let rule = build_quadrature(&ctx, &basis);
        let mass: f64 = rule.points.iter().map(|(_, w)| w).sum();
        let exact = rat_to_f64(&ctx.volume);
        assert!((mass - exact).abs() < 1e-10);
    }
}
