//! The reduced curvature functional on a moment chamber: weight density,
//! mean curvature, the linear functional on convex piecewise linear test
//! functions, the extremal field, and the pole structure of the curvature
//! candidate.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::integrate::{facet_chart, integrate, integrate_facet};
use crate::lp::{maximize, LpStatus};
use crate::pl::{integrate_pl, integrate_pl_facet, AffineForm, PLFunction};
use crate::poly::Polynomial;
use crate::polytope::{ChamberPolytope, Polytope};
use crate::rat::{dot, is_zero_vec, rat_i, vec_add, vec_scale, zeros, QVec, Rat};
use crate::root_datum::RootDatum;

/// The weight density `pi(y)`, a product of one linear factor per entry of
/// the restricted root multiset. Nonnegative on the dominant chamber.
pub fn build_pi(rd: &RootDatum) -> Polynomial {
    rd.density_polynomial()
}

/// The pairing of the fixed dominant weight vector with the density
/// gradient, expanded by the product rule.
pub fn gradient_term(rd: &RootDatum) -> Polynomial {
    let n = rd.rank;
    let mut total = Polynomial::zero(n);
    for (i, alpha) in rd.restricted_roots.iter().enumerate() {
        let weight = rd.pairing(&rd.two_rho, alpha);
        let mut prod = Polynomial::monomial(n, vec![0; n], weight);
        for (j, beta) in rd.restricted_roots.iter().enumerate() {
            if j != i {
                prod = prod.mul(&Polynomial::linear(&rd.covector_of(beta), &Rat::zero()));
            }
        }
        total = total.add(&prod);
    }
    total
}

#[derive(Debug, Clone)]
pub struct ExtremalField {
    /// Central vector generating the field.
    pub field: QVec,
    /// Constant of the normalized potential.
    pub constant: Rat,
    /// The potential as an affine form (gradient covector plus constant).
    pub potential: AffineForm,
}

impl ExtremalField {
    pub fn is_zero(&self) -> bool {
        is_zero_vec(&self.field) && self.constant.is_zero()
    }
}

#[derive(Debug)]
pub struct FutakiContext {
    pub rd: RootDatum,
    pub cp: ChamberPolytope,
    pub pi: Polynomial,
    pub grad_term: Polynomial,
    pub volume: Rat,
    pub mean_scalar: Rat,
    pub extremal: ExtremalField,
    /// Central translation applied to normalize facet offsets, if any.
    pub shift: Option<QVec>,
    /// Outer facets with zero offset but nonvanishing density; these block
    /// the offset-weighted boundary route.
    pub flagged_facets: Vec<usize>,
}

fn facet_density_vanishes(p: &Polytope, facet: usize, q: &Polynomial) -> Result<bool> {
    if p.dim == 1 {
        let vs = p.facet_vertices(facet)?;
        return Ok(q.eval(&vs[0]).is_zero());
    }
    let chart = facet_chart(p, facet)?;
    Ok(chart.pull_back(q).is_zero())
}

/// Attempts a central translation making every outer offset positive;
/// returns the translation with a positive margin, if one exists.
fn offset_shift(rd: &RootDatum, cp: &ChamberPolytope) -> Option<QVec> {
    let basis = rd.shift_space();
    if basis.is_empty() {
        return None;
    }
    let k = basis.len();
    let mut constraints: Vec<(QVec, Rat)> = vec![];
    let mut bound = Rat::one();
    for &a in &cp.outer_facets {
        let h = &cp.plus.halfspaces[a];
        let u = h.normal_rat();
        // margin t <= lambda_A + u_A . s, s = sum c_j b_j.
        let mut row = zeros(k + 1);
        for (j, b) in basis.iter().enumerate() {
            row[j] = -dot(&u, b);
        }
        row[k] = Rat::one();
        constraints.push((row, h.offset.clone()));
        bound += h.offset.abs();
    }
    for j in 0..k {
        let mut lo = zeros(k + 1);
        lo[j] = Rat::one();
        constraints.push((lo.clone(), bound.clone()));
        lo[j] = -Rat::one();
        constraints.push((lo, bound.clone()));
    }
    let mut objective = zeros(k + 1);
    objective[k] = Rat::one();
    let out = maximize(&constraints, &objective);
    if out.status != LpStatus::Optimal || !out.objective.is_positive() {
        return None;
    }
    let mut s = zeros(rd.rank);
    for (j, b) in basis.iter().enumerate() {
        s = vec_add(&s, &vec_scale(b, &out.x[j]));
    }
    if is_zero_vec(&s) {
        return None;
    }
    Some(s)
}

pub fn build_context(rd: RootDatum, mut cp: ChamberPolytope, allow_shift: bool) -> Result<FutakiContext> {
    let pi = build_pi(&rd);
    for alpha in &rd.restricted_roots {
        let c = rd.covector_of(alpha);
        for v in &cp.plus.vertices {
            if dot(&c, v).is_negative() {
                return Err(Error::InvalidData(
                    "density factor changes sign on the chamber polytope".into(),
                ));
            }
        }
    }
    for &w in &cp.wall_facets {
        if !facet_density_vanishes(&cp.plus, w, &pi)? {
            return Err(Error::InvalidData(
                "density does not vanish on a reflection wall facet".into(),
            ));
        }
    }
    let needs_shift = cp.outer_facets.iter().any(|&a| {
        !cp.plus.halfspaces[a].offset.is_positive()
            && !facet_density_vanishes(&cp.plus, a, &pi).unwrap_or(true)
    });
    let mut shift = None;
    if needs_shift && allow_shift {
        if let Some(s) = offset_shift(&rd, &cp) {
            cp.base = cp.base.translate(&s);
            cp.plus = cp.plus.translate(&s);
            shift = Some(s);
        }
    }
    let mut flagged = vec![];
    for &a in &cp.outer_facets {
        if cp.plus.halfspaces[a].offset.is_zero() && !facet_density_vanishes(&cp.plus, a, &pi)? {
            flagged.push(a);
        }
    }
    let volume = integrate(&cp.plus, &pi)?;
    if !volume.is_positive() {
        return Err(Error::ZeroMass);
    }
    let grad_term = gradient_term(&rd);
    let mut boundary = Rat::zero();
    for &a in &cp.outer_facets {
        boundary += integrate_facet(&cp.plus, a, &pi)?;
    }
    let mean_scalar = (&boundary + integrate(&cp.plus, &grad_term)?) / &volume;
    let extremal = solve_extremal(&rd, &cp.plus, &pi, &grad_term, &volume, &mean_scalar, &cp.outer_facets)?;
    Ok(FutakiContext {
        rd,
        cp,
        pi,
        grad_term,
        volume,
        mean_scalar,
        extremal,
        shift,
        flagged_facets: flagged,
    })
}

impl FutakiContext {
    /// Leading two coefficients of the normalized section-count expansion:
    /// the volume at order `k^n` and half the curvature mass at `k^(n-1)`.
    pub fn hilbert_coefficients(&self) -> (Rat, Rat) {
        (
            self.volume.clone(),
            &self.mean_scalar * &self.volume / rat_i(2),
        )
    }

    pub fn theta_polynomial(&self) -> Polynomial {
        Polynomial::linear(&self.extremal.potential.covector, &self.extremal.potential.constant)
    }
}

fn affine_functional_times_volume(
    plus: &Polytope,
    outer: &[usize],
    pi: &Polynomial,
    grad: &Polynomial,
    mean_scalar: &Rat,
    ell: &Polynomial,
) -> Result<Rat> {
    let mut boundary = Rat::zero();
    for &a in outer {
        boundary += integrate_facet(plus, a, &ell.mul(pi))?;
    }
    let interior = integrate(plus, &ell.mul(pi))?;
    let gradient = integrate(plus, &ell.mul(grad))?;
    Ok(boundary - mean_scalar * interior + gradient)
}

fn solve_extremal(
    rd: &RootDatum,
    plus: &Polytope,
    pi: &Polynomial,
    grad: &Polynomial,
    volume: &Rat,
    mean_scalar: &Rat,
    outer: &[usize],
) -> Result<ExtremalField> {
    let basis = rd.central_subspace();
    let d = basis.len();
    let forms: Vec<Polynomial> = basis
        .iter()
        .map(|z| Polynomial::linear(&rd.covector_of(z), &Rat::zero()))
        .collect();
    let mut rows: Vec<QVec> = vec![];
    let mut rhs: QVec = vec![];
    for i in 0..d {
        let mut row = zeros(d + 1);
        for (j, fj) in forms.iter().enumerate() {
            row[j] = integrate(plus, &forms[i].mul(fj).mul(pi))?;
        }
        row[d] = integrate(plus, &forms[i].mul(pi))?;
        rows.push(row);
        rhs.push(affine_functional_times_volume(plus, outer, pi, grad, mean_scalar, &forms[i])?);
    }
    let mut last = zeros(d + 1);
    for (j, fj) in forms.iter().enumerate() {
        last[j] = integrate(plus, &fj.mul(pi))?;
    }
    last[d] = volume.clone();
    rows.push(last);
    let unit = Polynomial::one(rd.rank);
    rhs.push(affine_functional_times_volume(plus, outer, pi, grad, mean_scalar, &unit)?);
    let solution = crate::rat::solve(&rows, &rhs).ok_or(Error::SingularMoment)?;
    let mut field = zeros(rd.rank);
    for j in 0..d {
        field = vec_add(&field, &vec_scale(&basis[j], &solution[j]));
    }
    let constant = solution[d].clone();
    let potential = AffineForm::new(rd.covector_of(&field), constant.clone());
    Ok(ExtremalField { field, constant, potential })
}

/// Recomputes the extremal data of a context from scratch.
pub fn extremal_field(ctx: &FutakiContext) -> Result<ExtremalField> {
    solve_extremal(
        &ctx.rd,
        &ctx.cp.plus,
        &ctx.pi,
        &ctx.grad_term,
        &ctx.volume,
        &ctx.mean_scalar,
        &ctx.cp.outer_facets,
    )
}

#[derive(Debug, Clone)]
pub struct FutakiTerms {
    pub boundary: Rat,
    pub interior: Rat,
    pub gradient: Rat,
    pub value: Rat,
}

pub fn futaki_l_terms(ctx: &FutakiContext, u: &PLFunction) -> Result<FutakiTerms> {
    if !u.is_dominant(&ctx.rd) {
        return Err(Error::NotDominant);
    }
    let mut boundary = Rat::zero();
    for &a in &ctx.cp.outer_facets {
        boundary += integrate_pl_facet(&ctx.cp.plus, a, u, &ctx.pi)?;
    }
    let interior = integrate_pl(&ctx.cp.plus, u, &ctx.pi)?;
    let gradient = integrate_pl(&ctx.cp.plus, u, &ctx.grad_term)?;
    let value = (&boundary - &ctx.mean_scalar * &interior + &gradient) / &ctx.volume;
    Ok(FutakiTerms { boundary, interior, gradient, value })
}

/// `L(u)`: the normalized curvature pairing against a convex dominant
/// piecewise linear function.
pub fn futaki_l(ctx: &FutakiContext, u: &PLFunction) -> Result<Rat> {
    Ok(futaki_l_terms(ctx, u)?.value)
}

#[derive(Debug, Clone)]
pub struct RelativeTerms {
    pub flux: Rat,
    pub weighted_interior: Rat,
    pub gradient: Rat,
    pub value: Rat,
}

/// `L_X(u) = L(u) - (1/V) \int u theta_X pi dy`, evaluated through the
/// offset-weighted boundary route and cross-checked against the direct one.
pub fn relative_futaki_terms(ctx: &FutakiContext, u: &PLFunction) -> Result<RelativeTerms> {
    if !u.is_dominant(&ctx.rd) {
        return Err(Error::NotDominant);
    }
    if let Some(&a) = ctx.flagged_facets.first() {
        return Err(Error::ZeroOffsetFacet(a));
    }
    let plus = &ctx.cp.plus;
    let mut flux = Rat::zero();
    for &a in &ctx.cp.outer_facets {
        let h = &plus.halfspaces[a];
        if h.offset.is_zero() {
            continue;
        }
        let ray = Polynomial::linear(&h.normal_rat(), &Rat::zero());
        let f = integrate_pl_facet(plus, a, u, &ctx.pi.mul(&ray))?;
        flux += f / &h.offset;
    }
    let theta = ctx.theta_polynomial();
    let weighted = theta.add(&Polynomial::monomial(
        ctx.rd.rank,
        vec![0; ctx.rd.rank],
        ctx.mean_scalar.clone(),
    ));
    let weighted_interior = integrate_pl(plus, u, &weighted.mul(&ctx.pi))?;
    let gradient = integrate_pl(plus, u, &ctx.grad_term)?;
    let value = (&flux - &weighted_interior + &gradient) / &ctx.volume;
    let direct = futaki_l(ctx, u)?
        - integrate_pl(plus, u, &theta.mul(&ctx.pi))? / &ctx.volume;
    assert_eq!(value, direct, "boundary route disagrees with direct route");
    Ok(RelativeTerms { flux, weighted_interior, gradient, value })
}

pub fn relative_futaki(ctx: &FutakiContext, u: &PLFunction) -> Result<Rat> {
    Ok(relative_futaki_terms(ctx, u)?.value)
}

#[derive(Debug, Clone)]
pub struct ThetaData {
    /// Constant part: mean curvature plus the potential constant.
    pub constant: Rat,
    /// Gradient covector of the potential part.
    pub linear: QVec,
    /// One `(numerator, denominator covector)` pole per restricted root.
    pub poles: Vec<(Rat, QVec)>,
    /// Polynomial with the same sign as the curvature candidate on the
    /// chamber polytope interior.
    pub negativity: Polynomial,
    /// For rank two with all poles on a common axis and vanishing
    /// potential: the half width of the negativity strip about the wall.
    pub strip: Option<(QVec, Rat)>,
}

/// The curvature candidate `Theta = S + theta_X - sum numer / <alpha, y>`
/// as exact data, with its negativity region certificate.
pub fn theta_function(ctx: &FutakiContext) -> ThetaData {
    let rd = &ctx.rd;
    let constant = &ctx.mean_scalar + &ctx.extremal.constant;
    let linear = ctx.extremal.potential.covector.clone();
    let poles: Vec<(Rat, QVec)> = rd
        .restricted_roots
        .iter()
        .map(|alpha| (rd.pairing(&rd.two_rho, alpha), rd.covector_of(alpha)))
        .collect();
    let affine = Polynomial::linear(&linear, &constant);
    let mut negativity = affine;
    for (_, cov) in &poles {
        negativity = negativity.mul(&Polynomial::linear(cov, &Rat::zero()));
    }
    negativity = negativity.sub(&gradient_term(rd));
    let strip = strip_bound(ctx, &poles);
    ThetaData { constant, linear, poles, negativity, strip }
}

fn strip_bound(ctx: &FutakiContext, poles: &[(Rat, QVec)]) -> Option<(QVec, Rat)> {
    if ctx.rd.rank != 2 || poles.is_empty() || !ctx.extremal.is_zero() {
        return None;
    }
    if !ctx.mean_scalar.is_positive() {
        return None;
    }
    let lead = crate::rat::primitive_integer(&poles[0].1)?;
    let axis: QVec = lead.iter().map(|c| Rat::from(c.clone())).collect();
    let mut total = Rat::zero();
    for (numer, cov) in poles {
        // cov = k * axis with k > 0, else the poles are not collinear.
        let k = (0..2).find_map(|i| {
            if axis[i].is_zero() {
                None
            } else {
                Some(&cov[i] / &axis[i])
            }
        })?;
        if !k.is_positive() || vec_sub_check(cov, &axis, &k) {
            return None;
        }
        total += numer / k;
    }
    Some((axis, total / &ctx.mean_scalar))
}

fn vec_sub_check(cov: &QVec, axis: &QVec, k: &Rat) -> bool {
    cov.iter().zip(axis).any(|(c, a)| c != &(a * k))
}

/// Extends a dominant function over the full reflection orbit by taking
/// the maximum over the group.
pub fn weyl_symmetrize(rd: &RootDatum, u: &PLFunction) -> Result<PLFunction> {
    let group = rd.weyl_group()?;
    let origin = zeros(rd.rank);
    let mut pieces = vec![];
    for w in &group {
        pieces.extend(u.compose_affine(w, &origin).pieces);
    }
    Ok(PLFunction::max_of(rd.rank, pieces))
}

/// Evaluates the functional over the whole invariant polytope, chamber by
/// chamber, dividing by the group order. For invariant `u` this equals
/// `futaki_l` of the restriction; exposed as a consistency oracle.
pub fn futaki_l_full(ctx: &FutakiContext, u: &PLFunction) -> Result<Rat> {
    let rd = &ctx.rd;
    let group = rd.weyl_group()?;
    let x0 = ctx.cp.plus.interior_point();
    let n = rd.rank;
    let mut boundary = Rat::zero();
    let mut interior = Rat::zero();
    let mut gradient = Rat::zero();
    for w in &group {
        let verts: Vec<QVec> =
            ctx.cp.plus.vertices.iter().map(|v| crate::rat::mat_vec(w, v)).collect();
        let chamber = Polytope::from_vertices(n, &verts)?;
        let probe = crate::rat::mat_vec(w, &x0);
        let mut signs = vec![];
        for alpha in &rd.restricted_roots {
            let c = rd.covector_of(alpha);
            let s = dot(&c, &probe);
            assert!(!s.is_zero(), "chamber probe on a root hyperplane");
            signs.push(if s.is_positive() { Rat::one() } else { -Rat::one() });
        }
        let mut density = Polynomial::one(n);
        for (alpha, s) in rd.restricted_roots.iter().zip(&signs) {
            density = density.mul(&Polynomial::linear(&vec_scale(&rd.covector_of(alpha), s), &Rat::zero()));
        }
        let mut grad = Polynomial::zero(n);
        for (i, alpha) in rd.restricted_roots.iter().enumerate() {
            let mut prod =
                Polynomial::monomial(n, vec![0; n], rd.pairing(&rd.two_rho, alpha));
            for (j, beta) in rd.restricted_roots.iter().enumerate() {
                if j != i {
                    prod = prod.mul(&Polynomial::linear(
                        &vec_scale(&rd.covector_of(beta), &signs[j]),
                        &Rat::zero(),
                    ));
                }
            }
            grad = grad.add(&prod);
        }
        for a in 0..chamber.halfspaces.len() {
            if facet_density_vanishes(&chamber, a, &density)? {
                continue;
            }
            boundary += integrate_pl_facet(&chamber, a, u, &density)?;
        }
        interior += integrate_pl(&chamber, u, &density)?;
        gradient += integrate_pl(&chamber, u, &grad)?;
    }
    let order = rat_i(group.len() as i64);
    Ok((boundary - &ctx.mean_scalar * interior + gradient) / (&ctx.volume * order))
}
