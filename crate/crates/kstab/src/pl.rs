//! Piecewise linear functions given as maxima of finitely many affine
//! forms, with the cell decompositions needed to integrate them exactly.

use crate::error::Error;
use crate::poly::Polynomial;
use crate::polytope::Polytope;
use crate::rat::{covec_mat, dot, is_zero_vec, vec_sub, QMat, QVec, Rat};
use crate::root_datum::RootDatum;
use num::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AffineForm {
    pub covector: QVec,
    pub constant: Rat,
}

impl AffineForm {
    pub fn new(covector: QVec, constant: Rat) -> Self {
        AffineForm { covector, constant }
    }

    pub fn eval(&self, y: &QVec) -> Rat {
        dot(&self.covector, y) + &self.constant
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::linear(&self.covector, &self.constant)
    }
}

/// `u(y) = max_i (c_i . y + k_i)`; convex by construction.
#[derive(Debug, Clone)]
pub struct PLFunction {
    pub nvars: usize,
    pub pieces: Vec<AffineForm>,
}

impl PLFunction {
    pub fn max_of(nvars: usize, mut pieces: Vec<AffineForm>) -> Self {
        assert!(!pieces.is_empty());
        assert!(pieces.iter().all(|f| f.covector.len() == nvars));
        pieces.sort();
        pieces.dedup();
        PLFunction { nvars, pieces }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        PLFunction::max_of(nvars, vec![AffineForm::new(crate::rat::zeros(nvars), c)])
    }

    pub fn linear(covector: QVec) -> Self {
        let n = covector.len();
        PLFunction::max_of(n, vec![AffineForm::new(covector, Rat::zero())])
    }

    /// `max(lam . y - offset, 0)`.
    pub fn simple(lam: &QVec, offset: &Rat) -> Self {
        PLFunction::max_of(
            lam.len(),
            vec![
                AffineForm::new(lam.clone(), -offset.clone()),
                AffineForm::new(crate::rat::zeros(lam.len()), Rat::zero()),
            ],
        )
    }

    pub fn eval(&self, y: &QVec) -> Rat {
        self.pieces.iter().map(|f| f.eval(y)).max().unwrap()
    }

    pub fn is_affine(&self) -> bool {
        self.pieces.len() == 1
    }

    /// Substitutes `y = M x + t`; the gradient covectors transform by `M`
    /// on the right.
    pub fn compose_affine(&self, m: &QMat, t: &QVec) -> PLFunction {
        let nvars = if m.is_empty() { 0 } else { m[0].len() };
        let pieces = self
            .pieces
            .iter()
            .map(|f| {
                AffineForm::new(covec_mat(&f.covector, m), dot(&f.covector, t) + &f.constant)
            })
            .collect();
        PLFunction::max_of(nvars, pieces)
    }

    pub fn scale(&self, c: &Rat) -> PLFunction {
        assert!(!c.is_negative());
        let pieces = self
            .pieces
            .iter()
            .map(|f| AffineForm::new(crate::rat::vec_scale(&f.covector, c), &f.constant * c))
            .collect();
        PLFunction::max_of(self.nvars, pieces)
    }

    /// Every piece gradient pairs nonnegatively with every spherical root.
    pub fn is_dominant(&self, rd: &RootDatum) -> bool {
        self.pieces.iter().all(|f| rd.covector_is_dominant(&f.covector))
    }

    /// Every piece gradient annihilates every spherical root.
    pub fn is_central(&self, rd: &RootDatum) -> bool {
        self.pieces.iter().all(|f| rd.covector_is_central(&f.covector))
    }

    /// Splits `p` into the full-dimensional regions where each piece is the
    /// maximum; lower-dimensional overlaps are dropped.
    pub fn cells(&self, p: &Polytope) -> Vec<(Polytope, AffineForm)> {
        assert_eq!(self.nvars, p.dim);
        let mut out = vec![];
        for (i, fi) in self.pieces.iter().enumerate() {
            let mut system: Vec<(QVec, Rat)> = p
                .halfspaces
                .iter()
                .map(|h| (h.normal_rat(), h.offset.clone()))
                .collect();
            for (j, fj) in self.pieces.iter().enumerate() {
                if j == i {
                    continue;
                }
                let cov = vec_sub(&fj.covector, &fi.covector);
                let off = &fi.constant - &fj.constant;
                if is_zero_vec(&cov) {
                    if off.is_negative() {
                        system.clear();
                        system.push((crate::rat::zeros(p.dim), -Rat::from(num::BigInt::from(1))));
                        break;
                    }
                    continue;
                }
                system.push((cov, off));
            }
            match Polytope::from_halfspaces(p.dim, &system) {
                Ok(cell) => out.push((cell, fi.clone())),
                Err(Error::EmptyPolytope) | Err(Error::LowerDimensional) => {}
                Err(e) => panic!("cell decomposition failed: {e}"),
            }
        }
        assert!(!out.is_empty());
        out
    }
}

/// `\int_P u q dy` for piecewise linear `u`, by exact cell decomposition.
pub fn integrate_pl(p: &Polytope, u: &PLFunction, q: &Polynomial) -> crate::error::Result<Rat> {
    let mut total = Rat::zero();
    for (cell, form) in u.cells(p) {
        total += crate::integrate::integrate(&cell, &form.to_polynomial().mul(q))?;
    }
    Ok(total)
}

/// `\int_F u q dsigma` against the lattice facet measure.
pub fn integrate_pl_facet(
    p: &Polytope,
    facet: usize,
    u: &PLFunction,
    q: &Polynomial,
) -> crate::error::Result<Rat> {
    if p.dim == 1 {
        let vs = p.facet_vertices(facet)?;
        return Ok(u.eval(&vs[0]) * q.eval(&vs[0]));
    }
    let chart = crate::integrate::facet_chart(p, facet)?;
    let ambient = chart.ambient_matrix();
    let u_chart = u.compose_affine(&ambient, &chart.base);
    let q_chart = chart.pull_back(q);
    integrate_pl(&chart.polytope, &u_chart, &q_chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::rat::{rat, rat_i};
    use crate::root_datum::fixtures;

    fn square() -> Polytope {
        Polytope::from_vertices(
            2,
            &[
                vec![rat_i(-1), rat_i(-1)],
                vec![rat_i(-1), rat_i(1)],
                vec![rat_i(1), rat_i(-1)],
                vec![rat_i(1), rat_i(1)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn max_evaluation() {
        let u = PLFunction::simple(&vec![rat_i(1), rat_i(0)], &Rat::zero());
        assert_eq!(u.eval(&vec![rat(1, 2), rat_i(5)]), rat(1, 2));
        assert_eq!(u.eval(&vec![rat_i(-3), rat_i(0)]), rat_i(0));
    }

    #[test]
    fn cells_of_hinge_on_square() {
        let u = PLFunction::simple(&vec![rat_i(1), rat_i(0)], &Rat::zero());
        let cells = u.cells(&square());
        assert_eq!(cells.len(), 2);
        let mut volumes: Vec<Rat> = cells
            .iter()
            .map(|(c, _)| integrate(c, &Polynomial::one(2)).unwrap())
            .collect();
        volumes.sort();
        assert_eq!(volumes, vec![rat_i(2), rat_i(2)]);
        assert_eq!(integrate_pl(&square(), &u, &Polynomial::one(2)).unwrap(), rat_i(1));
    }

    #[test]
    fn affine_needs_single_cell() {
        let u = PLFunction::linear(vec![rat_i(2), rat_i(-1)]);
        assert!(u.is_affine());
        let cells = u.cells(&square());
        assert_eq!(cells.len(), 1);
        assert_eq!(integrate_pl(&square(), &u, &Polynomial::one(2)).unwrap(), rat_i(0));
    }

    #[test]
    fn duplicate_and_dominated_constant_pieces() {
        let u = PLFunction::max_of(
            2,
            vec![
                AffineForm::new(vec![rat_i(1), rat_i(0)], rat_i(0)),
                AffineForm::new(vec![rat_i(1), rat_i(0)], rat_i(0)),
                AffineForm::new(vec![rat_i(1), rat_i(0)], rat_i(-1)),
            ],
        );
        assert_eq!(u.pieces.len(), 2);
        let cells = u.cells(&square());
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].1.constant, rat_i(0));
    }

    #[test]
    fn substitution_agrees_pointwise() {
        let u = PLFunction::simple(&vec![rat_i(1), rat_i(2)], &rat(1, 3));
        let m = vec![vec![rat_i(1), rat_i(1)], vec![rat_i(0), rat_i(1)]];
        let t = vec![rat(1, 2), rat_i(-1)];
        let composed = u.compose_affine(&m, &t);
        for x in [vec![rat_i(0), rat_i(0)], vec![rat(3, 7), rat_i(2)], vec![rat_i(-1), rat(5, 2)]] {
            let y = crate::rat::vec_add(&crate::rat::mat_vec(&m, &x), &t);
            assert_eq!(composed.eval(&x), u.eval(&y));
        }
    }

    #[test]
    fn dominance_and_centrality() {
        let rd = fixtures::one_root();
        assert!(PLFunction::linear(vec![rat_i(1), rat_i(0)]).is_dominant(&rd));
        assert!(!PLFunction::linear(vec![rat_i(-1), rat_i(0)]).is_dominant(&rd));
        let central = PLFunction::linear(vec![rat_i(0), rat_i(3)]);
        assert!(central.is_central(&rd));
        assert!(central.is_dominant(&rd));
        let mixed = PLFunction::simple(&vec![rat_i(1), rat_i(1)], &Rat::zero());
        assert!(mixed.is_dominant(&rd));
        assert!(!mixed.is_central(&rd));
    }

    #[test]
    fn hinge_volume_matches_shifted_hinge() {
        // Translating the kink keeps cells valid: u = max(x - 1/2, 0).
        let u = PLFunction::simple(&vec![rat_i(1), rat_i(0)], &rat(1, 2));
        let v = integrate_pl(&square(), &u, &Polynomial::one(2)).unwrap();
        assert_eq!(v, rat(1, 4));
    }
}
