//! Restricted root data: reflections, the little Weyl group, chambers,
//! fundamental weights, and the central subspace.

use std::collections::BTreeSet;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rat::{
    identity, invert, kernel_basis, mat_mul, mat_vec, primitive_integer, row_rank, zeros, Int,
    QMat, QVec, Rat,
};

/// Bound on the little Weyl group closure; exceeding it is an input error.
pub const WEYL_BOUND: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColourType {
    TwoA,
    B,
    External,
}

/// A colour image: a covector constraint `image . y >= 0` with its type tag.
#[derive(Debug, Clone)]
pub struct Colour {
    pub image: QVec,
    pub kind: ColourType,
}

/// The spherical combinatorial skeleton on a fixed lattice basis.
#[derive(Debug, Clone)]
pub struct RootDatum {
    pub rank: usize,
    /// The invariant inner product; all pairings of vectors go through it.
    pub gram: QMat,
    /// Restricted positive roots as a multiset (multiplicity by repetition).
    pub restricted_roots: Vec<QVec>,
    pub two_rho: QVec,
    /// Simple roots of the spherical root system, generating the reflections.
    pub simple_roots: Vec<QVec>,
    pub colours: Vec<Colour>,
}

impl RootDatum {
    /// `<a, b>` under the invariant inner product.
    pub fn pairing(&self, a: &QVec, b: &QVec) -> Rat {
        let gb = mat_vec(&self.gram, b);
        crate::rat::dot(a, &gb)
    }

    pub fn norm2(&self, a: &QVec) -> Rat {
        self.pairing(a, a)
    }

    /// The functional `y -> <v, y>` as a plain covector.
    pub fn covector_of(&self, v: &QVec) -> QVec {
        mat_vec(&self.gram, v)
    }

    /// The vector representing a plain covector under the inner product.
    pub fn vector_of(&self, c: &QVec) -> Result<QVec> {
        let inv = invert(&self.gram)
            .ok_or_else(|| Error::InvalidData("gram matrix is singular".into()))?;
        Ok(mat_vec(&inv, c))
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank;
        if r == 0 {
            return Err(Error::InvalidData("rank must be positive".into()));
        }
        if self.gram.len() != r || self.gram.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidData("gram matrix shape mismatch".into()));
        }
        for i in 0..r {
            for j in 0..i {
                if self.gram[i][j] != self.gram[j][i] {
                    return Err(Error::InvalidData("gram matrix not symmetric".into()));
                }
            }
        }
        for k in 1..=r {
            let minor: QMat =
                (0..k).map(|i| self.gram[i][..k].to_vec()).collect();
            if !crate::rat::det(&minor).is_positive() {
                return Err(Error::InvalidData(
                    "gram matrix not positive definite".into(),
                ));
            }
        }
        for v in self
            .restricted_roots
            .iter()
            .chain(self.simple_roots.iter())
            .chain(std::iter::once(&self.two_rho))
        {
            if v.len() != r {
                return Err(Error::InvalidData("vector length mismatch".into()));
            }
        }
        for c in &self.colours {
            if c.image.len() != r {
                return Err(Error::InvalidData("colour covector length mismatch".into()));
            }
        }
        for (i, s) in self.simple_roots.iter().enumerate() {
            if !self.norm2(s).is_positive() {
                return Err(Error::DegenerateRoot(i));
            }
        }
        if row_rank(&self.simple_roots) != self.simple_roots.len() {
            return Err(Error::InvalidData(
                "spherical simple roots are linearly dependent".into(),
            ));
        }
        // The product of the root functionals must be reflection-invariant
        // up to sign, so that its absolute value extends invariantly.
        let pi = self.density_polynomial();
        for (i, g) in self.weyl_generators()?.iter().enumerate() {
            let composed = pi.compose_affine(g, &zeros(r));
            if composed != pi && composed != pi.neg() {
                return Err(Error::InvalidData(format!(
                    "root density is not invariant under reflection {i}"
                )));
            }
        }
        Ok(())
    }

    /// The density `pi(y)` as the product of `<alpha, y>` over restricted
    /// roots; valid on the dominant chamber.
    pub fn density_polynomial(&self) -> Polynomial {
        let mut p = Polynomial::one(self.rank);
        for a in &self.restricted_roots {
            p = p.mul(&Polynomial::linear(&self.covector_of(a), &Rat::zero()));
        }
        p
    }

    /// Reflection matrices for each simple root.
    pub fn weyl_generators(&self) -> Result<Vec<QMat>> {
        let mut gens = vec![];
        for (i, s) in self.simple_roots.iter().enumerate() {
            let n2 = self.norm2(s);
            if !n2.is_positive() {
                return Err(Error::DegenerateRoot(i));
            }
            let cov = self.covector_of(s);
            let mut m = identity(self.rank);
            let factor = crate::rat::rat_i(2) / n2;
            for r in 0..self.rank {
                for c in 0..self.rank {
                    let sub = &factor * &s[r] * &cov[c];
                    m[r][c] -= sub;
                }
            }
            gens.push(m);
        }
        Ok(gens)
    }

    /// All elements of the little Weyl group, identity first.
    pub fn weyl_group(&self) -> Result<Vec<QMat>> {
        let gens = self.weyl_generators()?;
        let id = identity(self.rank);
        let mut seen: BTreeSet<QMat> = BTreeSet::new();
        seen.insert(id.clone());
        let mut order = vec![id];
        let mut frontier = order.clone();
        while !frontier.is_empty() {
            let mut next = vec![];
            for w in &frontier {
                for g in &gens {
                    let m = mat_mul(g, w);
                    if seen.insert(m.clone()) {
                        if seen.len() > WEYL_BOUND {
                            return Err(Error::ClosureOverflow(WEYL_BOUND));
                        }
                        order.push(m.clone());
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        Ok(order)
    }

    /// Basis of the fixed subspace of the Weyl action.
    pub fn central_subspace(&self) -> Vec<QVec> {
        let rows: QMat =
            self.simple_roots.iter().map(|s| self.covector_of(s)).collect();
        kernel_basis(&rows, self.rank)
    }

    /// Covectors vanishing on every simple root; these are the gradients of
    /// central affine functions.
    pub fn central_covector_basis(&self) -> Vec<QVec> {
        kernel_basis(&self.simple_roots, self.rank)
    }

    /// Fundamental weights: `<sigma_i, w_j> = delta_ij |sigma_i|^2 / 2`,
    /// orthogonal to the central subspace.
    pub fn fundamental_weights(&self) -> Result<Vec<QVec>> {
        let central = self.central_subspace();
        let mut rows: QMat = vec![];
        for s in &self.simple_roots {
            rows.push(self.covector_of(s));
        }
        for z in &central {
            rows.push(self.covector_of(z));
        }
        let mut out = vec![];
        for j in 0..self.simple_roots.len() {
            let mut rhs = zeros(self.rank);
            rhs[j] = self.norm2(&self.simple_roots[j]) / crate::rat::rat_i(2);
            let w = crate::rat::solve(&rows, &rhs).ok_or(Error::SingularMoment)?;
            out.push(w);
        }
        Ok(out)
    }

    /// Whether `v` lies in the dominant chamber.
    pub fn is_dominant(&self, v: &QVec) -> bool {
        self.simple_roots.iter().all(|s| !self.pairing(s, v).is_negative())
    }

    pub fn in_antidominant(&self, v: &QVec) -> bool {
        self.simple_roots.iter().all(|s| !self.pairing(s, v).is_positive())
    }

    /// Whether a covector has dominant gradient (its dual vector is in V+).
    pub fn covector_is_dominant(&self, c: &QVec) -> bool {
        self.simple_roots.iter().all(|s| !crate::rat::dot(c, s).is_negative())
    }

    /// Whether a covector is central (vanishes on the reflection walls'
    /// orthogonal complement, i.e. pairs to zero with every simple root).
    pub fn covector_is_central(&self, c: &QVec) -> bool {
        self.simple_roots.iter().all(|s| crate::rat::dot(c, s).is_zero())
    }

    /// Writes `v = sum c_i sigma_i + (central part)`; returns the simple-root
    /// coefficients and the coordinates over the central basis.
    pub fn decompose(&self, v: &QVec) -> Result<(QVec, QVec)> {
        let central = self.central_subspace();
        let k = self.simple_roots.len();
        let cols: Vec<&QVec> = self.simple_roots.iter().chain(central.iter()).collect();
        let m: QMat = (0..self.rank)
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect();
        let coords = crate::rat::solve(&m, v)
            .ok_or_else(|| Error::InvalidData("chamber basis is singular".into()))?;
        Ok((coords[..k].to_vec(), coords[k..].to_vec()))
    }

    /// The full positive system: the Weyl orbit of the simple roots, kept on
    /// the nonnegative side.
    pub fn positive_roots(&self) -> Result<Vec<QVec>> {
        if self.simple_roots.is_empty() {
            return Ok(vec![]);
        }
        let group = self.weyl_group()?;
        let mut orbit: BTreeSet<QVec> = BTreeSet::new();
        for w in &group {
            for s in &self.simple_roots {
                orbit.insert(mat_vec(w, s));
            }
        }
        let mut pos = vec![];
        for v in orbit {
            let (coeffs, central) = self.decompose(&v)?;
            debug_assert!(central.iter().all(|c| c.is_zero()));
            if coeffs.iter().all(|c| !c.is_negative()) {
                pos.push(v);
            }
        }
        Ok(pos)
    }

    pub fn sum_positive_roots(&self) -> Result<QVec> {
        let mut s = zeros(self.rank);
        for a in self.positive_roots()? {
            s = crate::rat::vec_add(&s, &a);
        }
        Ok(s)
    }

    /// Whether the spherical root system is irreducible (connected pairing
    /// graph on the simple roots).
    pub fn is_irreducible(&self) -> bool {
        let n = self.simple_roots.len();
        if n == 0 {
            return false;
        }
        let mut reached = vec![false; n];
        let mut stack = vec![0usize];
        reached[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !reached[j]
                    && !self
                        .pairing(&self.simple_roots[i], &self.simple_roots[j])
                        .is_zero()
                {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        reached.into_iter().all(|b| b)
    }

    /// Primitive integer covectors of the chamber walls `<sigma_i, y> = 0`.
    pub fn wall_covectors(&self) -> Result<Vec<Vec<Int>>> {
        self.simple_roots
            .iter()
            .enumerate()
            .map(|(i, s)| {
                primitive_integer(&self.covector_of(s)).ok_or(Error::DegenerateRoot(i))
            })
            .collect()
    }

    /// Basis of translations that preserve the chamber structure and the
    /// density: central vectors orthogonal to every restricted root.
    pub fn shift_space(&self) -> Vec<QVec> {
        let rows: QMat = self
            .simple_roots
            .iter()
            .chain(self.restricted_roots.iter())
            .map(|v| self.covector_of(v))
            .collect();
        kernel_basis(&rows, self.rank)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::{a1a1, a2, one_root, toric};
    use super::*;
    use crate::rat::{rat, rat_i};

    #[test]
    fn reflection_in_axis() {
        let rd = one_root();
        let gens = rd.weyl_generators().unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(
            gens[0],
            vec![vec![rat_i(-1), rat_i(0)], vec![rat_i(0), rat_i(1)]]
        );
    }

    #[test]
    fn group_orders() {
        assert_eq!(toric(2).weyl_group().unwrap().len(), 1);
        assert_eq!(one_root().weyl_group().unwrap().len(), 2);
        assert_eq!(a1a1().weyl_group().unwrap().len(), 4);
        assert_eq!(a2().weyl_group().unwrap().len(), 6);
    }

    #[test]
    fn generators_preserve_gram() {
        for rd in [one_root(), a1a1(), a2()] {
            for g in rd.weyl_generators().unwrap() {
                assert_eq!(mat_mul(&g, &g), identity(2));
                let gt = crate::rat::mat_transpose(&g);
                assert_eq!(mat_mul(&gt, &mat_mul(&rd.gram, &g)), rd.gram);
            }
        }
    }

    #[test]
    fn fundamental_weight_axis() {
        let rd = one_root();
        let w = rd.fundamental_weights().unwrap();
        assert_eq!(w, vec![vec![rat(1, 2), rat_i(0)]]);
        let w = a1a1().fundamental_weights().unwrap();
        assert_eq!(w[0], vec![rat(1, 2), rat_i(0)]);
        assert_eq!(w[1], vec![rat_i(0), rat(1, 2)]);
    }

    #[test]
    fn fundamental_weight_pairing_table() {
        let rd = a2();
        let ws = rd.fundamental_weights().unwrap();
        for (i, s) in rd.simple_roots.iter().enumerate() {
            for (j, w) in ws.iter().enumerate() {
                let expect = if i == j {
                    rd.norm2(s) / rat_i(2)
                } else {
                    Rat::zero()
                };
                assert_eq!(rd.pairing(s, w), expect);
            }
        }
    }

    #[test]
    fn central_subspace_dims() {
        assert_eq!(toric(2).central_subspace().len(), 2);
        let c = one_root().central_subspace();
        assert_eq!(c, vec![vec![rat_i(0), rat_i(1)]]);
        assert!(a2().central_subspace().is_empty());
    }

    #[test]
    fn dominance() {
        let rd = one_root();
        assert!(rd.is_dominant(&zeros(2)));
        assert!(!rd.is_dominant(&vec![rat_i(-1), rat_i(5)]));
        assert!(rd.is_dominant(&vec![rat_i(2), rat_i(-7)]));
    }

    #[test]
    fn dominance_matches_weight_cone() {
        // v dominant iff v = sum a_i w_i + central with a_i >= 0.
        let rd = a2();
        let ws = rd.fundamental_weights().unwrap();
        let mut rng = 1u64;
        for _ in 0..100 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = rat_i((rng >> 33) as i64 % 7 - 3);
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
            let b = rat_i((rng >> 33) as i64 % 7 - 3);
            let v = crate::rat::vec_add(
                &crate::rat::vec_scale(&ws[0], &a),
                &crate::rat::vec_scale(&ws[1], &b),
            );
            assert_eq!(
                rd.is_dominant(&v),
                !a.is_negative() && !b.is_negative()
            );
        }
    }

    #[test]
    fn a2_positive_roots() {
        let rd = a2();
        let pos = rd.positive_roots().unwrap();
        assert_eq!(pos.len(), 3);
        assert!(pos.contains(&vec![rat_i(1), rat_i(1)]));
        assert_eq!(rd.sum_positive_roots().unwrap(), vec![rat_i(2), rat_i(2)]);
    }

    #[test]
    fn irreducibility() {
        assert!(a2().is_irreducible());
        assert!(!a1a1().is_irreducible());
        assert!(!toric(2).is_irreducible());
    }

    #[test]
    fn validation_accepts_catalog_shapes() {
        for rd in [toric(2), one_root(), a1a1(), a2()] {
            rd.validate().unwrap();
        }
    }

    #[test]
    fn validation_rejects_non_invariant_density() {
        let mut rd = one_root();
        rd.restricted_roots = vec![vec![rat_i(1), rat_i(1)]];
        assert!(matches!(rd.validate(), Err(Error::InvalidData(_))));
    }

    #[test]
    fn validation_rejects_indefinite_gram() {
        let mut rd = toric(2);
        rd.gram = vec![vec![rat_i(1), rat_i(2)], vec![rat_i(2), rat_i(1)]];
        assert!(rd.validate().is_err());
    }

    #[test]
    fn shift_space_avoids_roots() {
        // One doubled root along x: shifts move along y only.
        let rd = one_root();
        assert_eq!(rd.shift_space(), vec![vec![rat_i(0), rat_i(1)]]);
        // Toric with no restricted roots: shifts are unconstrained.
        assert_eq!(toric(2).shift_space().len(), 2);
        // Toric with a restricted root: that direction is frozen.
        let mut rd = toric(2);
        rd.restricted_roots = vec![vec![rat_i(1), rat_i(0)]];
        rd.two_rho = vec![rat(1, 3), rat_i(0)];
        assert_eq!(rd.shift_space(), vec![vec![rat_i(0), rat_i(1)]]);
    }

    #[test]
    fn weyl_orbit_of_chamber_covers_plane() {
        let rd = a2();
        let group = rd.weyl_group().unwrap();
        let mut rng = 7u64;
        for _ in 0..50 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = rat_i((rng >> 33) as i64 % 19 - 9);
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
            let y = rat_i((rng >> 33) as i64 % 19 - 9);
            let v = vec![x, y];
            assert!(group.iter().any(|w| rd.is_dominant(&mat_vec(w, &v))));
        }
    }
}
