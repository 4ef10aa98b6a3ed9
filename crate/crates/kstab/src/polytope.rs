//! Rational convex polytopes: halfspace/vertex representations, facet data,
//! chamber restriction, Weyl-orbit extension, and the divisor construction.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{self, LpStatus};
use crate::rat::{
    affine_rank, dot, int_to_rat_vec, mat_vec, primitive_integer, rat_i, vec_add, vec_scale,
    vec_sub, zeros, Int, QMat, QVec, Rat,
};
use crate::root_datum::RootDatum;

/// One facet inequality `normal . y <= offset` with a primitive integer
/// outer normal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Int>,
    pub offset: Rat,
}

impl Halfspace {
    pub fn normal_rat(&self) -> QVec {
        int_to_rat_vec(&self.normal)
    }

    pub fn holds_at(&self, y: &QVec) -> bool {
        !(dot(&self.normal_rat(), y) - &self.offset).is_positive()
    }

    pub fn active_at(&self, y: &QVec) -> bool {
        dot(&self.normal_rat(), y) == self.offset
    }
}

/// A bounded full-dimensional rational polytope with consistent H- and
/// V-representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytope {
    pub halfspaces: Vec<Halfspace>,
    pub vertices: Vec<QVec>,
    pub dim: usize,
}

/// Scales a rational covector inequality to a primitive integer normal.
/// Returns None for the zero covector.
fn primitive_halfspace(cov: &QVec, off: &Rat) -> Option<Halfspace> {
    let normal = primitive_integer(cov)?;
    let j = cov.iter().position(|c| !c.is_zero()).unwrap();
    let scale = &cov[j] / Rat::from(normal[j].clone());
    debug_assert!(scale.is_positive());
    Some(Halfspace { normal, offset: off / &scale })
}

impl Polytope {
    /// Builds the polytope of `{y : cov . y <= off}` constraints.
    pub fn from_halfspaces(dim: usize, system: &[(QVec, Rat)]) -> Result<Polytope> {
        let mut tight: BTreeMap<Vec<Int>, Rat> = BTreeMap::new();
        for (cov, off) in system {
            assert_eq!(cov.len(), dim);
            match primitive_halfspace(cov, off) {
                Some(h) => {
                    let entry = tight.entry(h.normal).or_insert_with(|| h.offset.clone());
                    if h.offset < *entry {
                        *entry = h.offset;
                    }
                }
                None => {
                    if off.is_negative() {
                        return Err(Error::EmptyPolytope);
                    }
                }
            }
        }
        let hs: Vec<Halfspace> = tight
            .into_iter()
            .map(|(normal, offset)| Halfspace { normal, offset })
            .collect();
        let cons: Vec<(QVec, Rat)> =
            hs.iter().map(|h| (h.normal_rat(), h.offset.clone())).collect();
        if !lp::feasible(&cons) {
            return Err(Error::EmptyPolytope);
        }
        for i in 0..dim {
            for sign in [Rat::one(), -Rat::one()] {
                let mut obj = zeros(dim);
                obj[i] = sign;
                if lp::maximize(&cons, &obj).status == LpStatus::Unbounded {
                    return Err(Error::Unbounded);
                }
            }
        }
        let vertices = enumerate_vertices(dim, &hs)?;
        if affine_rank(&vertices) != dim + 1 {
            return Err(Error::LowerDimensional);
        }
        // Keep only halfspaces supporting a genuine facet.
        let kept: Vec<Halfspace> = hs
            .into_iter()
            .filter(|h| {
                let incident: Vec<QVec> = vertices
                    .iter()
                    .filter(|v| h.active_at(v))
                    .cloned()
                    .collect();
                affine_rank(&incident) == dim
            })
            .collect();
        Ok(Polytope { halfspaces: kept, vertices, dim })
    }

    /// Convex hull of a point set, by exhaustive hyperplane search.
    pub fn from_vertices(dim: usize, points: &[QVec]) -> Result<Polytope> {
        let pts: Vec<QVec> = points
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if affine_rank(&pts) != dim + 1 {
            return Err(Error::LowerDimensional);
        }
        let mut system: Vec<(QVec, Rat)> = vec![];
        enumerate_subsets(pts.len(), dim, &mut |idx| {
            let chosen: Vec<&QVec> = idx.iter().map(|&i| &pts[i]).collect();
            if let Some((normal, offset)) = affine_span_hyperplane(dim, &chosen) {
                let mut pos = false;
                let mut neg = false;
                for p in &pts {
                    let s = dot(&normal, p) - &offset;
                    if s.is_positive() {
                        pos = true;
                    } else if s.is_negative() {
                        neg = true;
                    }
                }
                if !pos {
                    system.push((normal.clone(), offset.clone()));
                }
                if !neg {
                    system.push((crate::rat::vec_neg(&normal), -offset));
                }
            }
        });
        Polytope::from_halfspaces(dim, &system)
    }

    pub fn contains(&self, y: &QVec) -> bool {
        self.halfspaces.iter().all(|h| h.holds_at(y))
    }

    /// `P intersect {cov . y >= t}`.
    pub fn intersect_halfspace(&self, cov: &QVec, t: &Rat) -> Result<Polytope> {
        let mut system: Vec<(QVec, Rat)> = self
            .halfspaces
            .iter()
            .map(|h| (h.normal_rat(), h.offset.clone()))
            .collect();
        system.push((crate::rat::vec_neg(cov), -t.clone()));
        Polytope::from_halfspaces(self.dim, &system)
    }

    pub fn facet_vertices(&self, facet: usize) -> Result<Vec<QVec>> {
        let h = self.halfspaces.get(facet).ok_or(Error::BadFacet(facet))?;
        Ok(self.vertices.iter().filter(|v| h.active_at(v)).cloned().collect())
    }

    pub fn facet_barycenter(&self, facet: usize) -> Result<QVec> {
        let vs = self.facet_vertices(facet)?;
        let mut s = zeros(self.dim);
        for v in &vs {
            s = vec_add(&s, v);
        }
        Ok(vec_scale(&s, &(Rat::one() / rat_i(vs.len() as i64))))
    }

    /// A point in the interior: the vertex average.
    pub fn interior_point(&self) -> QVec {
        let mut s = zeros(self.dim);
        for v in &self.vertices {
            s = vec_add(&s, v);
        }
        vec_scale(&s, &(Rat::one() / rat_i(self.vertices.len() as i64)))
    }

    pub fn translate(&self, shift: &QVec) -> Polytope {
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| Halfspace {
                normal: h.normal.clone(),
                offset: &h.offset + dot(&h.normal_rat(), shift),
            })
            .collect();
        let vertices = self.vertices.iter().map(|v| vec_add(v, shift)).collect();
        Polytope { halfspaces, vertices, dim: self.dim }
    }

    /// Parameter range of `{base + t dir}` inside the polytope, if any.
    pub fn clip_line(&self, base: &QVec, dir: &QVec) -> Option<(Rat, Rat)> {
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for h in &self.halfspaces {
            let n = h.normal_rat();
            let c = dot(&n, dir);
            let v = dot(&n, base);
            if c.is_zero() {
                if v > h.offset {
                    return None;
                }
                continue;
            }
            let t = (&h.offset - &v) / &c;
            if c.is_positive() {
                hi = Some(match hi {
                    Some(cur) if cur <= t => cur,
                    _ => t,
                });
            } else {
                lo = Some(match lo {
                    Some(cur) if cur >= t => cur,
                    _ => t,
                });
            }
        }
        match (lo, hi) {
            (Some(a), Some(b)) if a <= b => Some((a, b)),
            _ => None,
        }
    }

    pub fn bounding_box(&self) -> Vec<(Rat, Rat)> {
        (0..self.dim)
            .map(|i| {
                let mut lo = self.vertices[0][i].clone();
                let mut hi = lo.clone();
                for v in &self.vertices {
                    if v[i] < lo {
                        lo = v[i].clone();
                    }
                    if v[i] > hi {
                        hi = v[i].clone();
                    }
                }
                (lo, hi)
            })
            .collect()
    }

    /// Vertices of a polygon in counterclockwise order.
    pub fn ccw_vertices(&self) -> Vec<QVec> {
        assert_eq!(self.dim, 2);
        let c = self.interior_point();
        let mut vs = self.vertices.clone();
        vs.sort_by(|a, b| {
            let da = vec_sub(a, &c);
            let db = vec_sub(b, &c);
            let ha = angular_half(&da);
            let hb = angular_half(&db);
            ha.cmp(&hb).then_with(|| {
                let cross = &da[0] * &db[1] - &da[1] * &db[0];
                if cross.is_positive() {
                    std::cmp::Ordering::Less
                } else if cross.is_negative() {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
        });
        vs
    }
}

fn angular_half(d: &QVec) -> u8 {
    if d[1].is_positive() || (d[1].is_zero() && d[0].is_positive()) {
        0
    } else {
        1
    }
}

fn enumerate_subsets(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        n: usize,
        k: usize,
        start: usize,
        picked: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if picked.len() == k {
            f(picked);
            return;
        }
        for i in start..n {
            picked.push(i);
            rec(n, k, i + 1, picked, f);
            picked.pop();
        }
    }
    let mut picked = Vec::with_capacity(k);
    rec(n, k, 0, &mut picked, f);
}

/// The hyperplane through `dim` affinely independent points, as
/// `(normal, offset)`; None when the points are affinely dependent.
fn affine_span_hyperplane(dim: usize, pts: &[&QVec]) -> Option<(QVec, Rat)> {
    let rows: QMat = pts[1..].iter().map(|p| vec_sub(p, pts[0])).collect();
    let kernel = crate::rat::kernel_basis(&rows, dim);
    if kernel.len() != 1 {
        return None;
    }
    let normal = kernel.into_iter().next().unwrap();
    let offset = dot(&normal, pts[0]);
    Some((normal, offset))
}

fn enumerate_vertices(dim: usize, hs: &[Halfspace]) -> Result<Vec<QVec>> {
    let mut out: BTreeSet<QVec> = BTreeSet::new();
    enumerate_subsets(hs.len(), dim, &mut |idx| {
        let rows: QMat = idx.iter().map(|&i| hs[i].normal_rat()).collect();
        let rhs: QVec = idx.iter().map(|&i| hs[i].offset.clone()).collect();
        if let Some(p) = crate::rat::solve(&rows, &rhs) {
            if hs.iter().all(|h| h.holds_at(&p)) {
                out.insert(p);
            }
        }
    });
    if out.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    Ok(out.into_iter().collect())
}

/// A Weyl-invariant polytope together with its dominant part and the
/// outer/wall classification of the dominant part's facets.
#[derive(Debug, Clone)]
pub struct ChamberPolytope {
    pub base: Polytope,
    pub plus: Polytope,
    pub outer_facets: Vec<usize>,
    pub wall_facets: Vec<usize>,
}

fn classify_facets(plus: &Polytope, rd: &RootDatum) -> Result<(Vec<usize>, Vec<usize>)> {
    let walls = rd.wall_covectors()?;
    let mut outer = vec![];
    let mut wall = vec![];
    for (i, h) in plus.halfspaces.iter().enumerate() {
        let on_wall = h.offset.is_zero()
            && walls.iter().any(|w| {
                *w == h.normal || w.iter().zip(&h.normal).all(|(a, b)| *a == -b)
            });
        if on_wall {
            wall.push(i);
        } else {
            outer.push(i);
        }
    }
    Ok((outer, wall))
}

/// Cuts a Weyl-invariant polytope to the dominant chamber.
pub fn restrict_to_chamber(p: &Polytope, rd: &RootDatum) -> Result<ChamberPolytope> {
    let group = rd.weyl_group()?;
    let vertex_set: BTreeSet<QVec> = p.vertices.iter().cloned().collect();
    for w in &group {
        for v in &p.vertices {
            if !vertex_set.contains(&mat_vec(w, v)) {
                return Err(Error::NotWeylInvariant);
            }
        }
    }
    let mut system: Vec<(QVec, Rat)> = p
        .halfspaces
        .iter()
        .map(|h| (h.normal_rat(), h.offset.clone()))
        .collect();
    for w in rd.wall_covectors()? {
        system.push((crate::rat::vec_neg(&int_to_rat_vec(&w)), Rat::zero()));
    }
    let plus = Polytope::from_halfspaces(p.dim, &system)?;
    let (outer_facets, wall_facets) = classify_facets(&plus, rd)?;
    Ok(ChamberPolytope { base: p.clone(), plus, outer_facets, wall_facets })
}

/// Outcome of extending a chamber polytope over the Weyl orbit.
#[derive(Debug, Clone)]
pub enum ExtensionOutcome {
    Convex(ChamberPolytope),
    NotConvex { witness: QVec },
}

/// Tests whether the Weyl orbit of `P_+` unions to a convex polytope.
pub fn weyl_extension_convexity(
    plus_system: &[(QVec, Rat)],
    rd: &RootDatum,
) -> Result<ExtensionOutcome> {
    let mut system = plus_system.to_vec();
    for w in rd.wall_covectors()? {
        system.push((crate::rat::vec_neg(&int_to_rat_vec(&w)), Rat::zero()));
    }
    let plus = Polytope::from_halfspaces(rd.rank, &system)?;
    let group = rd.weyl_group()?;
    let mut orbit: Vec<QVec> = vec![];
    for w in &group {
        for v in &plus.vertices {
            orbit.push(mat_vec(w, v));
        }
    }
    let hull = Polytope::from_vertices(rd.rank, &orbit)?;
    let restricted = restrict_to_chamber(&hull, rd)?;
    if restricted.plus.vertices == plus.vertices {
        let (outer_facets, wall_facets) = classify_facets(&plus, rd)?;
        Ok(ExtensionOutcome::Convex(ChamberPolytope {
            base: hull,
            plus,
            outer_facets,
            wall_facets,
        }))
    } else {
        let witness = restricted
            .plus
            .vertices
            .iter()
            .find(|v| !plus.contains(v))
            .cloned()
            .expect("hull chamber differs yet all its vertices lie in the input");
        Ok(ExtensionOutcome::NotConvex { witness })
    }
}

/// Builds the dominant-chamber polytope from invariant-divisor rays and
/// colour inequalities, then extends over the Weyl orbit.
pub fn polytope_from_divisor(
    rd: &RootDatum,
    rays: &[(Vec<Int>, Rat)],
    strict_colours: bool,
) -> Result<ChamberPolytope> {
    let walls = rd.wall_covectors()?;
    for (i, (u, _)) in rays.iter().enumerate() {
        let ur = int_to_rat_vec(u);
        if rd.simple_roots.iter().any(|s| dot(&ur, s).is_positive()) {
            return Err(Error::InvalidData(format!(
                "ray {i} is not in the anti-dominant cone"
            )));
        }
    }
    let positive: Vec<QVec> = rd.positive_roots()?;
    for (i, colour) in rd.colours.iter().enumerate() {
        let v = rd.vector_of(&colour.image)?;
        let (_, central) = rd.decompose(&v)?;
        let in_span = central.iter().all(|c| c.is_zero());
        match colour.kind {
            crate::root_datum::ColourType::TwoA | crate::root_datum::ColourType::B => {
                let on_wall = walls.iter().any(|w| {
                    primitive_halfspace(&colour.image, &Rat::zero())
                        .map(|h| h.normal == *w)
                        .unwrap_or(false)
                });
                if !in_span || !on_wall {
                    return Err(Error::InvalidData(format!(
                        "colour {i} does not cut along a dominance wall"
                    )));
                }
                let target = match colour.kind {
                    crate::root_datum::ColourType::TwoA => vec_scale(&v, &rat_i(2)),
                    _ => v.clone(),
                };
                let coroot = vec_scale(&target, &(rat_i(2) / rd.norm2(&target)));
                let matches_root = positive.iter().any(|a| {
                    *a == coroot || *a == vec_scale(&coroot, &(Rat::one() / rat_i(2)))
                });
                if !matches_root {
                    return Err(Error::InvalidData(format!(
                        "colour {i} image does not match any root covector scale"
                    )));
                }
            }
            crate::root_datum::ColourType::External => {
                if in_span {
                    return Err(Error::InvalidData(format!(
                        "colour {i} tagged external but lies in the root span"
                    )));
                }
                // The extension argument needs the dual vector in the
                // anti-dominant cone (membership in the dual chamber cone is
                // impossible off the root span).
                if strict_colours && !rd.in_antidominant(&v) {
                    return Err(Error::InvalidData(format!(
                        "colour {i} violates the extension cone condition"
                    )));
                }
            }
        }
    }
    let mut system: Vec<(QVec, Rat)> = rays
        .iter()
        .map(|(u, c)| (crate::rat::vec_neg(&int_to_rat_vec(u)), c.clone()))
        .collect();
    for colour in &rd.colours {
        system.push((crate::rat::vec_neg(&colour.image), Rat::zero()));
    }
    match weyl_extension_convexity(&system, rd)? {
        ExtensionOutcome::Convex(cp) => Ok(cp),
        ExtensionOutcome::NotConvex { witness } => Err(Error::NotExtendable { witness }),
    }
}
