//! Exact integration of sparse polynomials over polytopes and facets, the
//! lattice facet measure, weighted barycenters, and sliced moment curves.

use num::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::poly::{interpolate, Polynomial, UniPoly};
use crate::polytope::Polytope;
use crate::rat::{
    dot, int_to_rat_vec, integer_kernel_basis, invert, mat_vec, rat_i, rat_to_f64, vec_scale,
    vec_sub, zeros, Int, QMat, QVec, Rat,
};

fn factorial(n: u64) -> Int {
    let mut f = Int::one();
    for k in 2..=n {
        f *= Int::from(k);
    }
    f
}

/// Exact integral of a monomial-expanded polynomial over the simplex with
/// the given vertices (`dim + 1` points).
fn integrate_simplex(simplex: &[QVec], q: &Polynomial) -> Rat {
    let dim = simplex.len() - 1;
    let m: QMat = (0..dim)
        .map(|i| (0..dim).map(|j| &simplex[j + 1][i] - &simplex[0][i]).collect())
        .collect();
    let jac = crate::rat::det(&m).abs();
    if jac.is_zero() {
        return Rat::zero();
    }
    let composed = q.compose_affine(&m, &simplex[0]);
    let mut total = Rat::zero();
    for (exps, coeff) in &composed.terms {
        let s: u64 = exps.iter().map(|&e| e as u64).sum();
        let mut num = Int::one();
        for &e in exps {
            num *= factorial(e as u64);
        }
        let den = factorial(s + dim as u64);
        total += coeff * Rat::new(num, den);
    }
    total * jac
}

/// A facet parametrized over a unimodular basis of its lattice directions,
/// so that Lebesgue measure in chart coordinates is the lattice measure.
pub struct FacetChart {
    pub base: QVec,
    pub cols: Vec<Vec<Int>>,
    pub polytope: Polytope,
}

impl FacetChart {
    pub fn from_chart(&self, t: &QVec) -> QVec {
        let mut y = self.base.clone();
        for (col, tj) in self.cols.iter().zip(t) {
            for i in 0..y.len() {
                y[i] += Rat::from(col[i].clone()) * tj;
            }
        }
        y
    }

    pub fn to_chart(&self, y: &QVec) -> QVec {
        let k = self.cols.len();
        let diff = vec_sub(y, &self.base);
        let gram: QMat = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| dot(&int_to_rat_vec(&self.cols[a]), &int_to_rat_vec(&self.cols[b])))
                    .collect()
            })
            .collect();
        let rhs: QVec =
            (0..k).map(|a| dot(&int_to_rat_vec(&self.cols[a]), &diff)).collect();
        let inv = invert(&gram).expect("chart basis is independent");
        mat_vec(&inv, &rhs)
    }

    /// The chart map `t -> base + M t` as a rational matrix.
    pub fn ambient_matrix(&self) -> QMat {
        let dim = self.base.len();
        (0..dim)
            .map(|i| self.cols.iter().map(|c| Rat::from(c[i].clone())).collect())
            .collect()
    }

    /// Pulls a polynomial on the ambient space back to chart coordinates.
    pub fn pull_back(&self, q: &Polynomial) -> Polynomial {
        q.compose_affine(&self.ambient_matrix(), &self.base)
    }
}

pub fn facet_chart(p: &Polytope, facet: usize) -> Result<FacetChart> {
    let h = p.halfspaces.get(facet).ok_or(Error::BadFacet(facet))?;
    let verts = p.facet_vertices(facet)?;
    if p.dim < 2 {
        return Err(Error::BadFacet(facet));
    }
    let cols = integer_kernel_basis(&h.normal);
    let mut base = zeros(p.dim);
    for v in &verts {
        base = crate::rat::vec_add(&base, v);
    }
    base = vec_scale(&base, &(Rat::one() / rat_i(verts.len() as i64)));
    let chart = FacetChart { base, cols, polytope: Polytope { halfspaces: vec![], vertices: vec![], dim: 0 } };
    let tpoints: Vec<QVec> = verts.iter().map(|v| chart.to_chart(v)).collect();
    let polytope = Polytope::from_vertices(p.dim - 1, &tpoints)?;
    Ok(FacetChart { base: chart.base, cols: chart.cols, polytope })
}

/// Fan triangulation from the lexicographically least vertex, recursing
/// through unimodular facet charts.
pub fn triangulate(p: &Polytope) -> Vec<Vec<QVec>> {
    if p.dim == 1 {
        return vec![p.vertices.clone()];
    }
    let apex = p.vertices[0].clone();
    let mut out = vec![];
    for (i, h) in p.halfspaces.iter().enumerate() {
        if h.active_at(&apex) {
            continue;
        }
        let chart = facet_chart(p, i).expect("facet of a full-dimensional polytope");
        for s in triangulate(&chart.polytope) {
            let mut simplex = vec![apex.clone()];
            simplex.extend(s.iter().map(|t| chart.from_chart(t)));
            out.push(simplex);
        }
    }
    out
}

/// Exact `\int_P q dy` in the lattice-basis Lebesgue measure.
pub fn integrate(p: &Polytope, q: &Polynomial) -> Result<Rat> {
    if q.nvars != p.dim {
        return Err(Error::ArityMismatch { expected: p.dim, got: q.nvars });
    }
    let mut total = Rat::zero();
    for s in triangulate(p) {
        total += integrate_simplex(&s, q);
    }
    Ok(total)
}

/// Exact facet integral against the induced lattice measure.
pub fn integrate_facet(p: &Polytope, facet: usize, q: &Polynomial) -> Result<Rat> {
    if q.nvars != p.dim {
        return Err(Error::ArityMismatch { expected: p.dim, got: q.nvars });
    }
    if p.dim == 1 {
        let vs = p.facet_vertices(facet)?;
        return Ok(q.eval(&vs[0]));
    }
    let chart = facet_chart(p, facet)?;
    integrate(&chart.polytope, &chart.pull_back(q))
}

/// The flux-form facet integral `\int_F q(y) (u_A . y) dsigma` against the
/// lattice measure, with the facet's primitive outer normal `u_A`.
pub fn facet_flux(p: &Polytope, facet: usize, q: &Polynomial) -> Result<Rat> {
    let h = p.halfspaces.get(facet).ok_or(Error::BadFacet(facet))?;
    let ell = Polynomial::linear(&int_to_rat_vec(&h.normal), &Rat::zero());
    integrate_facet(p, facet, &q.mul(&ell))
}

/// `(\int y q dy) / (\int q dy)`, exact component-wise.
pub fn weighted_barycenter(p: &Polytope, q: &Polynomial) -> Result<QVec> {
    let mass = integrate(p, q)?;
    if !mass.is_positive() {
        return Err(Error::ZeroMass);
    }
    let mut b = zeros(p.dim);
    for i in 0..p.dim {
        let mut e = vec![0u32; p.dim];
        e[i] = 1;
        let yi = Polynomial::monomial(p.dim, e, Rat::one());
        b[i] = integrate(p, &q.mul(&yi))? / &mass;
    }
    Ok(b)
}

/// A continuous piecewise polynomial of one variable on `[first, last]`,
/// constant off the ends (total mass on the left, zero on the right).
#[derive(Debug, Clone)]
pub struct PiecewisePoly1 {
    pub breakpoints: Vec<Rat>,
    pub pieces: Vec<UniPoly>,
}

impl PiecewisePoly1 {
    pub fn eval(&self, x: &Rat) -> Rat {
        let n = self.breakpoints.len();
        if *x <= self.breakpoints[0] {
            return self.pieces[0].eval(&self.breakpoints[0]);
        }
        if *x >= self.breakpoints[n - 1] {
            return self.pieces[n - 2].eval(&self.breakpoints[n - 1]);
        }
        for k in 0..n - 1 {
            if *x <= self.breakpoints[k + 1] {
                return self.pieces[k].eval(x);
            }
        }
        unreachable!()
    }

    pub fn derivative(&self) -> PiecewisePoly1 {
        PiecewisePoly1 {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.derivative()).collect(),
        }
    }
}

/// The moment curve `lambda -> \int_{P \cap {Lam . y >= lambda}} q dy` as an
/// exact piecewise polynomial with breakpoints at vertex values.
pub fn slice_moments(p: &Polytope, lam: &QVec, q: &Polynomial) -> Result<PiecewisePoly1> {
    if crate::rat::is_zero_vec(lam) {
        return Err(Error::InvalidData("slice direction is zero".into()));
    }
    let mut breakpoints: Vec<Rat> = p.vertices.iter().map(|v| dot(lam, v)).collect();
    breakpoints.sort();
    breakpoints.dedup();
    if breakpoints.len() < 2 {
        return Err(Error::LowerDimensional);
    }
    let degree = p.dim + q.degree() as usize;
    let total = integrate(p, q)?;
    let mut pieces = vec![];
    for k in 0..breakpoints.len() - 1 {
        let a = &breakpoints[k];
        let b = &breakpoints[k + 1];
        let step = (b - a) / rat_i(degree as i64 + 2);
        let mut samples = vec![];
        for j in 1..=(degree + 1) {
            let x = a + &step * rat_i(j as i64);
            let sliced = p.intersect_halfspace(lam, &x)?;
            samples.push((x.clone(), integrate(&sliced, q)?));
        }
        pieces.push(interpolate(&samples));
    }
    let out = PiecewisePoly1 { breakpoints, pieces };
    // Saturation and exact continuity across breakpoints.
    let n = out.breakpoints.len();
    assert_eq!(out.pieces[0].eval(&out.breakpoints[0]), total);
    assert!(out.pieces[n - 2].eval(&out.breakpoints[n - 1]).is_zero());
    for k in 0..n - 2 {
        assert_eq!(
            out.pieces[k].eval(&out.breakpoints[k + 1]),
            out.pieces[k + 1].eval(&out.breakpoints[k + 1]),
        );
    }
    Ok(out)
}

/// Monte-Carlo estimate of `\int_P q` by rejection sampling in the bounding
/// box; returns `(estimate, standard_error)`. Test oracle only.
pub fn monte_carlo(p: &Polytope, q: &Polynomial, n: usize, seed: u64) -> (f64, f64) {
    assert!(n >= 1000);
    let boxes = p.bounding_box();
    let lows: Vec<f64> = boxes.iter().map(|(l, _)| rat_to_f64(l)).collect();
    let spans: Vec<f64> =
        boxes.iter().map(|(l, h)| rat_to_f64(h) - rat_to_f64(l)).collect();
    let volume: f64 = spans.iter().product();
    let normals: Vec<(Vec<f64>, f64)> = p
        .halfspaces
        .iter()
        .map(|h| {
            (
                h.normal.iter().map(|c| c.to_f64().unwrap()).collect(),
                rat_to_f64(&h.offset),
            )
        })
        .collect();
    let terms: Vec<(Vec<u32>, f64)> =
        q.terms.iter().map(|(e, c)| (e.clone(), rat_to_f64(c))).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut point = vec![0.0; p.dim];
    for _ in 0..n {
        for i in 0..p.dim {
            point[i] = lows[i] + spans[i] * rng.gen::<f64>();
        }
        let inside = normals
            .iter()
            .all(|(nr, off)| nr.iter().zip(&point).map(|(a, b)| a * b).sum::<f64>() <= *off);
        let mut value = 0.0;
        if inside {
            for (exps, coeff) in &terms {
                let mut t = *coeff;
                for (i, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        t *= point[i];
                    }
                }
                value += t;
            }
        }
        sum += value;
        sum_sq += value * value;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let stderr = volume * (var / n as f64).sqrt();
    (volume * mean, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn qv(x: i64, y: i64) -> QVec {
        vec![rat_i(x), rat_i(y)]
    }

    fn rect(x0: Rat, x1: Rat, y0: Rat, y1: Rat) -> Polytope {
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

    fn square() -> Polytope {
        rect(rat_i(-1), rat_i(1), rat_i(-1), rat_i(1))
    }

    fn x_squared() -> Polynomial {
        Polynomial::monomial(2, vec![2, 0], Rat::one())
    }

    #[test]
    fn unit_measures() {
        assert_eq!(integrate(&square(), &Polynomial::one(2)).unwrap(), rat_i(4));
        let tri = Polytope::from_vertices(2, &[qv(0, 0), qv(1, 0), qv(0, 1)]).unwrap();
        assert_eq!(integrate(&tri, &Polynomial::one(2)).unwrap(), rat(1, 2));
    }

    #[test]
    fn moment_on_rectangle() {
        let p = rect(rat_i(0), rat_i(2), rat_i(-1), rat_i(1));
        assert_eq!(integrate(&p, &x_squared()).unwrap(), rat(16, 3));
    }

    #[test]
    fn arity_checked() {
        let q = Polynomial::one(3);
        assert!(matches!(
            integrate(&square(), &q),
            Err(Error::ArityMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn facet_lattice_measure() {
        let p = square();
        let right = p
            .halfspaces
            .iter()
            .position(|h| h.normal == vec![Int::from(1), Int::from(0)])
            .unwrap();
        assert_eq!(integrate_facet(&p, right, &Polynomial::one(2)).unwrap(), rat_i(2));
        let ysq = Polynomial::monomial(2, vec![0, 2], Rat::one());
        assert_eq!(integrate_facet(&p, right, &ysq).unwrap(), rat(2, 3));
    }

    #[test]
    fn slanted_facet_has_unit_lattice_length() {
        // Edge from (0,0) to (1,2): one lattice step, so length 1.
        let p = Polytope::from_vertices(2, &[qv(0, 0), qv(1, 2), qv(1, 0)]).unwrap();
        let slanted = p
            .halfspaces
            .iter()
            .position(|h| h.normal == vec![Int::from(-2), Int::from(1)])
            .unwrap();
        assert_eq!(
            integrate_facet(&p, slanted, &Polynomial::one(2)).unwrap(),
            Rat::one()
        );
    }

    #[test]
    fn flux_matches_offset_times_lattice_integral() {
        let p = rect(rat(1, 3), rat_i(2), rat_i(-1), rat(1, 2));
        let q = x_squared();
        for facet in 0..p.halfspaces.len() {
            let lhs = facet_flux(&p, facet, &q).unwrap();
            let rhs = &p.halfspaces[facet].offset
                * integrate_facet(&p, facet, &q).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn barycenters() {
        let tri = Polytope::from_vertices(2, &[qv(0, 0), qv(1, 0), qv(0, 1)]).unwrap();
        assert_eq!(
            weighted_barycenter(&tri, &Polynomial::one(2)).unwrap(),
            vec![rat(1, 3), rat(1, 3)]
        );
        assert_eq!(
            weighted_barycenter(&square(), &Polynomial::one(2)).unwrap(),
            vec![rat_i(0), rat_i(0)]
        );
        let model = rect(rat_i(0), rat(4, 3), rat_i(-1), rat_i(1));
        assert_eq!(
            weighted_barycenter(&model, &x_squared()).unwrap(),
            vec![rat_i(1), rat_i(0)]
        );
    }

    #[test]
    fn zero_mass_rejected() {
        let p = square();
        let q = Polynomial::zero(2);
        assert!(matches!(weighted_barycenter(&p, &q), Err(Error::ZeroMass)));
    }

    #[test]
    fn slice_of_square_is_linear() {
        let f = slice_moments(&square(), &qv(1, 0), &Polynomial::one(2)).unwrap();
        assert_eq!(f.breakpoints, vec![rat_i(-1), rat_i(1)]);
        assert_eq!(f.pieces.len(), 1);
        // f(lambda) = 2(1 - lambda).
        assert_eq!(f.eval(&rat_i(0)), rat_i(2));
        assert_eq!(f.eval(&rat(1, 2)), rat_i(1));
        assert_eq!(f.eval(&rat_i(-5)), rat_i(4));
        assert_eq!(f.eval(&rat_i(5)), rat_i(0));
    }

    #[test]
    fn slice_derivative_matches_model() {
        // f(l) = int over [l, 4/3] x [-1, 1] of (x - 1) x^2.
        let p = rect(rat_i(0), rat(4, 3), rat_i(-1), rat_i(1));
        let q = Polynomial::linear(&qv(1, 0), &rat_i(-1)).mul(&x_squared());
        let f = slice_moments(&p, &qv(1, 0), &q).unwrap();
        assert!(f.eval(&rat_i(0)).is_zero());
        assert!(f.eval(&rat(4, 3)).is_zero());
        let fp = f.derivative();
        // f'(l) = -2 (l - 1) l^2.
        for l in [rat(1, 7), rat(1, 2), rat(9, 8)] {
            let expect = rat_i(-2) * (&l - Rat::one()) * &l * &l;
            assert_eq!(fp.eval(&l), expect);
        }
    }

    #[test]
    fn split_additivity() {
        let p = square();
        let q = x_squared().mul(&Polynomial::linear(&qv(0, 1), &rat(1, 5)));
        let whole = integrate(&p, &q).unwrap();
        for t in [rat(-1, 3), rat_i(0), rat(1, 2)] {
            let upper = p.intersect_halfspace(&qv(1, 1), &t).unwrap();
            let lower = p
                .intersect_halfspace(&vec![rat_i(-1), rat_i(-1)], &-t.clone())
                .unwrap();
            let sum = integrate(&upper, &q).unwrap() + integrate(&lower, &q).unwrap();
            assert_eq!(sum, whole);
        }
    }

    #[test]
    fn unimodular_equivariance() {
        // T(x, y) = (x + y, y) preserves the lattice measure.
        let p = square();
        let image = Polytope::from_vertices(
            2,
            &p.vertices
                .iter()
                .map(|v| vec![&v[0] + &v[1], v[1].clone()])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let q = x_squared();
        // q(T(x,y)) = (x + y)^2.
        let qt = Polynomial::linear(&qv(1, 1), &Rat::zero()).pow(2);
        assert_eq!(
            integrate(&image, &q).unwrap(),
            integrate(&p, &qt).unwrap()
        );
    }

    #[test]
    fn dilation_scaling() {
        // Homogeneous q of degree 2 scales as k^(2 + 2) under y -> k y.
        let q = x_squared();
        let p = square();
        let k = rat_i(3);
        let scaled = Polytope::from_vertices(
            2,
            &p.vertices.iter().map(|v| vec_scale(v, &k)).collect::<Vec<_>>(),
        )
        .unwrap();
        let expect = integrate(&p, &q).unwrap() * &k * &k * &k * &k;
        assert_eq!(integrate(&scaled, &q).unwrap(), expect);
    }

    #[test]
    fn triangulation_covers_volume() {
        let hex = Polytope::from_vertices(
            2,
            &[qv(3, 3), qv(0, 3), qv(3, 0), qv(-3, 0), qv(0, -3), qv(-3, -3)],
        )
        .unwrap();
        let simplices = triangulate(&hex);
        let total: Rat = simplices
            .iter()
            .map(|s| integrate_simplex(s, &Polynomial::one(2)))
            .sum();
        assert_eq!(total, rat_i(27));
        assert_eq!(integrate(&hex, &Polynomial::one(2)).unwrap(), rat_i(27));
    }

    #[test]
    fn monte_carlo_brackets_exact_value() {
        let q = x_squared();
        let (est, err) = monte_carlo(&square(), &q, 100_000, 7);
        let exact = rat_to_f64(&integrate(&square(), &q).unwrap());
        assert!((est - exact).abs() <= 3.0 * err.max(1e-9));
    }
}
