//! Sparse multivariate and dense univariate polynomials over the rationals,
//! with Sturm-sequence real root isolation.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use crate::rat::{rat_i, QMat, QVec, Rat};

/// Sparse multivariate polynomial keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, Rat>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Polynomial::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Polynomial::constant(nvars, Rat::one())
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, coeff: Rat) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Polynomial::zero(nvars);
        if !coeff.is_zero() {
            p.terms.insert(exps, coeff);
        }
        p
    }

    /// The affine form `coeffs . y + constant`.
    pub fn linear(coeffs: &QVec, constant: &Rat) -> Self {
        let n = coeffs.len();
        let mut p = Polynomial::constant(n, constant.clone());
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0; n];
                e[i] = 1;
                p.terms.insert(e, c.clone());
            }
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn insert(&mut self, exps: Vec<u32>, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            // Re-borrow to remove: find the key we just zeroed.
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -&*c;
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = &*c * k;
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, point: &QVec) -> Rat {
        assert_eq!(point.len(), self.nvars);
        let mut total = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= &point[i];
                }
            }
            total += t;
        }
        total
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut t = crate::rat::rat_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                t *= point[i].powi(k as i32);
            }
            total += t;
        }
        total
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.insert(e2, c * rat_i(e[var] as i64));
        }
        out
    }

    /// Substitutes `y = M z + t`, where `M` has one column per new variable.
    pub fn compose_affine(&self, m: &QMat, t: &QVec) -> Polynomial {
        let new_vars = if m.is_empty() { 0 } else { m[0].len() };
        assert_eq!(m.len(), self.nvars);
        assert_eq!(t.len(), self.nvars);
        // Linear form for each original variable in the new variables.
        let forms: Vec<Polynomial> =
            (0..self.nvars).map(|i| Polynomial::linear(&m[i], &t[i])).collect();
        let mut out = Polynomial::zero(new_vars);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(new_vars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&forms[i].pow(k));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Restriction to one variable: `y = a + s * d`.
    pub fn restrict_to_line(&self, a: &QVec, d: &QVec) -> UniPoly {
        let m: QMat = d.iter().map(|di| vec![di.clone()]).collect();
        let p = self.compose_affine(&m, a);
        p.to_unipoly()
    }

    pub fn to_unipoly(&self) -> UniPoly {
        assert!(self.nvars <= 1);
        let deg = self.degree() as usize;
        let mut coeffs = vec![Rat::zero(); deg + 1];
        for (e, c) in &self.terms {
            let k = if e.is_empty() { 0 } else { e[0] as usize };
            coeffs[k] = c.clone();
        }
        UniPoly::new(coeffs)
    }
}

/// Dense univariate polynomial; `coeffs[i]` multiplies `t^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    pub coeffs: QVec,
}

impl UniPoly {
    pub fn new(mut coeffs: QVec) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> Self {
        UniPoly::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() { None } else { Some(self.coeffs.len() - 1) }
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Rat::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        UniPoly::new(out)
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        let out: QVec = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * rat_i(i as i64))
            .collect();
        UniPoly::new(out)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> UniPoly {
        let mut out = vec![Rat::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] = c / rat_i((i + 1) as i64);
        }
        UniPoly::new(out)
    }

    /// Euclidean remainder of `self` by `d` (nonzero).
    pub fn rem(&self, d: &UniPoly) -> UniPoly {
        assert!(!d.is_zero());
        let mut r = self.clone();
        let dd = d.degree().unwrap();
        let lead = d.leading();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let f = &r.leading() / &lead;
            let shift = rd - dd;
            let mut sub = vec![Rat::zero(); r.coeffs.len()];
            for (i, c) in d.coeffs.iter().enumerate() {
                sub[i + shift] = c * &f;
            }
            let mut next: QVec = r
                .coeffs
                .iter()
                .zip(sub.iter())
                .map(|(a, b)| a - b)
                .collect();
            next[rd] = Rat::zero();
            r = UniPoly::new(next);
        }
        r
    }

    /// Monic-ish normalization: scales so the leading coefficient is +-1.
    fn normalized(&self) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.leading();
        self.scale(&l.abs().recip())
    }

    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).normalized();
            a = b;
            b = r;
        }
        a.normalized()
    }

    /// The squarefree part `self / gcd(self, self')`, up to positive scale.
    pub fn squarefree(&self) -> UniPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            return self.clone();
        }
        self.div_exact(&g)
    }

    fn div_exact(&self, d: &UniPoly) -> UniPoly {
        let mut r = self.clone();
        let dd = d.degree().unwrap();
        let lead = d.leading();
        let qd = self.degree().unwrap() - dd;
        let mut q = vec![Rat::zero(); qd + 1];
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let f = &r.leading() / &lead;
            let shift = rd - dd;
            q[shift] = f.clone();
            let mut next = r.coeffs.clone();
            for (i, c) in d.coeffs.iter().enumerate() {
                let sub = c * &f;
                next[i + shift] -= sub;
            }
            next[rd] = Rat::zero();
            r = UniPoly::new(next);
        }
        debug_assert!(r.is_zero(), "division was not exact");
        UniPoly::new(q)
    }
}

/// Sturm chain of a squarefree polynomial.
pub fn sturm_chain(p: &UniPoly) -> Vec<UniPoly> {
    let mut chain = vec![p.normalized(), p.derivative().normalized()];
    while !chain.last().unwrap().is_zero() {
        let n = chain.len();
        let r = chain[n - 2].rem(&chain[n - 1]);
        chain.push(r.scale(&-Rat::one()).normalized());
    }
    chain.pop();
    chain
}

fn sign_variations(chain: &[UniPoly], x: &Rat) -> usize {
    let mut last = 0i8;
    let mut flips = 0;
    for p in chain {
        let v = p.eval(x);
        let s = if v.is_zero() { 0 } else if v.is_positive() { 1 } else { -1 };
        if s != 0 {
            if last != 0 && s != last {
                flips += 1;
            }
            last = s;
        }
    }
    flips
}

/// Number of roots of the (squarefree) chain polynomial in `(a, b]`.
pub fn count_roots(chain: &[UniPoly], a: &Rat, b: &Rat) -> usize {
    sign_variations(chain, a) - sign_variations(chain, b)
}

/// An isolated real root: either exact or an open enclosure with
/// `p(lo) * p(hi) < 0` and width below the requested threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootEnclosure {
    Exact(Rat),
    Interval(Rat, Rat),
}

impl RootEnclosure {
    pub fn midpoint(&self) -> Rat {
        match self {
            RootEnclosure::Exact(r) => r.clone(),
            RootEnclosure::Interval(a, b) => (a + b) / rat_i(2),
        }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        match self {
            RootEnclosure::Exact(r) => r == x,
            RootEnclosure::Interval(a, b) => a < x && x < b,
        }
    }
}

/// Cauchy bound: every real root lies in `[-B, B]`.
fn root_bound(p: &UniPoly) -> Rat {
    let lead = p.leading().abs();
    let mut m = Rat::zero();
    for c in p.coeffs.iter().take(p.coeffs.len().saturating_sub(1)) {
        let q = c.abs() / &lead;
        if q > m {
            m = q;
        }
    }
    m + Rat::one()
}

/// Isolates all distinct real roots of `p` to width below `eps`,
/// in increasing order.
pub fn isolate_roots(p: &UniPoly, eps: &Rat) -> Vec<RootEnclosure> {
    let sf = p.squarefree();
    if sf.degree().unwrap_or(0) == 0 {
        return vec![];
    }
    let chain = sturm_chain(&sf);
    let b = root_bound(&sf) + Rat::one();
    let a = -b.clone();
    let mut out = vec![];
    subdivide(&sf, &chain, &a, &b, eps, &mut out);
    out
}

fn subdivide(
    p: &UniPoly,
    chain: &[UniPoly],
    a: &Rat,
    b: &Rat,
    eps: &Rat,
    out: &mut Vec<RootEnclosure>,
) {
    let n = count_roots(chain, a, b);
    if n == 0 {
        return;
    }
    if n == 1 && (b - a) < *eps && p.eval(a).is_positive() != p.eval(b).is_positive() {
        out.push(RootEnclosure::Interval(a.clone(), b.clone()));
        return;
    }
    let mid = (a + b) / rat_i(2);
    if p.eval(&mid).is_zero() {
        // Separate the exact root, then recurse on punctured halves.
        let mut delta = (b - a) / rat_i(4);
        loop {
            let lo = &mid - &delta;
            let hi = &mid + &delta;
            if !p.eval(&lo).is_zero()
                && !p.eval(&hi).is_zero()
                && count_roots(chain, &lo, &hi) == 1
            {
                subdivide(p, chain, a, &lo, eps, out);
                out.push(RootEnclosure::Exact(mid));
                subdivide(p, chain, &hi, b, eps, out);
                return;
            }
            delta /= rat_i(2);
        }
    } else {
        subdivide(p, chain, a, &mid, eps, out);
        subdivide(p, chain, &mid, b, eps, out);
    }
}

/// The rational with smallest denominator in `[lo, hi]` (ties broken toward
/// the smaller absolute value).
pub fn simplest_in_interval(lo: &Rat, hi: &Rat) -> Rat {
    assert!(lo <= hi);
    if lo.is_positive() {
        simplest_positive(lo, hi)
    } else if hi.is_negative() {
        -simplest_positive(&-hi.clone(), &-lo.clone())
    } else {
        Rat::zero()
    }
}

fn simplest_positive(lo: &Rat, hi: &Rat) -> Rat {
    let fl = lo.floor();
    if &fl == lo {
        return lo.clone();
    }
    let next = &fl + Rat::one();
    if next <= *hi {
        return next;
    }
    let rlo = (hi - &fl).recip();
    let rhi = (lo - &fl).recip();
    fl + simplest_positive(&rlo, &rhi).recip()
}

/// Exact Lagrange interpolation through distinct-abscissa points.
pub fn interpolate(points: &[(Rat, Rat)]) -> UniPoly {
    let mut out = UniPoly::zero();
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut basis = UniPoly::constant(Rat::one());
        let mut denom = Rat::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            basis = basis.mul(&UniPoly::new(vec![-xj.clone(), Rat::one()]));
            denom *= xi - xj;
        }
        out = out.add(&basis.scale(&(yi / &denom)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_i};
    use num::BigInt;

    fn up(cs: &[i64]) -> UniPoly {
        UniPoly::new(cs.iter().map(|&c| rat_i(c)).collect())
    }

    #[test]
    fn multivar_arithmetic() {
        // (x + y)^2 = x^2 + 2xy + y^2
        let s = Polynomial::linear(&vec![rat_i(1), rat_i(1)], &Rat::zero());
        let sq = s.mul(&s);
        assert_eq!(sq.terms.len(), 3);
        assert_eq!(sq.eval(&vec![rat_i(2), rat_i(3)]), rat_i(25));
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.partial(0).eval(&vec![rat_i(2), rat_i(3)]), rat_i(10));
    }

    #[test]
    fn affine_substitution() {
        // p(x, y) = x * y, substitute x = s + 1, y = 2s: p = 2s^2 + 2s.
        let p = Polynomial::monomial(2, vec![1, 1], Rat::one());
        let m = vec![vec![rat_i(1)], vec![rat_i(2)]];
        let q = p.compose_affine(&m, &vec![rat_i(1), rat_i(0)]);
        let u = q.to_unipoly();
        assert_eq!(u, up(&[0, 2, 2]));
    }

    #[test]
    fn remainder_and_gcd() {
        // gcd(x^2 - 1, x^2 - 2x + 1) = x - 1 up to scale.
        let a = up(&[-1, 0, 1]);
        let b = up(&[1, -2, 1]);
        let g = a.gcd(&b);
        assert_eq!(g.degree(), Some(1));
        assert!(g.eval(&rat_i(1)).is_zero());
    }

    #[test]
    fn squarefree_strips_multiplicity() {
        // (x - 2)^3 -> linear in x - 2.
        let c = up(&[-2, 1]);
        let p = c.mul(&c).mul(&c);
        let s = p.squarefree();
        assert_eq!(s.degree(), Some(1));
        assert!(s.eval(&rat_i(2)).is_zero());
    }

    #[test]
    fn sturm_counts_quadratic() {
        let p = up(&[-2, 0, 1]); // x^2 - 2
        let chain = sturm_chain(&p);
        assert_eq!(count_roots(&chain, &rat_i(-3), &rat_i(3)), 2);
        assert_eq!(count_roots(&chain, &rat_i(0), &rat_i(3)), 1);
        assert_eq!(count_roots(&chain, &rat_i(2), &rat_i(3)), 0);
    }

    #[test]
    fn isolates_mixed_roots() {
        // x (x^2 - 2): exact root 0 and irrational +-sqrt(2).
        let p = up(&[0, -2, 0, 1]);
        let eps = Rat::new(BigInt::from(1), BigInt::from(1u64) << 32);
        let roots = isolate_roots(&p, &eps);
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[1], RootEnclosure::Exact(rat_i(0)));
        match &roots[2] {
            RootEnclosure::Interval(a, b) => {
                assert!((b - a) < eps);
                assert!(p.eval(a).is_negative() && p.eval(b).is_positive());
            }
            _ => panic!("sqrt(2) reported as exact"),
        }
    }

    #[test]
    fn isolates_rational_root_not_at_midpoint() {
        // 3x - 1 has root 1/3, never a bisection midpoint of dyadic splits.
        let p = up(&[-1, 3]);
        let eps = Rat::new(BigInt::from(1), BigInt::from(1u64) << 40);
        let roots = isolate_roots(&p, &eps);
        assert_eq!(roots.len(), 1);
        assert!(roots[0].contains(&rat(1, 3)));
        // The simplest rational in the enclosure recovers it exactly.
        if let RootEnclosure::Interval(a, b) = &roots[0] {
            assert_eq!(simplest_in_interval(a, b), rat(1, 3));
        }
    }

    #[test]
    fn simplest_rational_examples() {
        assert_eq!(simplest_in_interval(&rat(2, 7), &rat(1, 3)), rat(1, 3));
        assert_eq!(simplest_in_interval(&rat(-1, 2), &rat(1, 5)), rat_i(0));
        assert_eq!(simplest_in_interval(&rat(5, 2), &rat(7, 2)), rat_i(3));
        assert_eq!(simplest_in_interval(&rat(-22, 7), &rat(-3, 1)), rat_i(-3));
        assert_eq!(simplest_in_interval(&rat(13, 10), &rat(7, 5)), rat(4, 3));
    }

    #[test]
    fn interpolation_roundtrip() {
        let p = up(&[1, -3, 0, 2]);
        let pts: Vec<(Rat, Rat)> =
            (0..4).map(|i| (rat_i(i), p.eval(&rat_i(i)))).collect();
        assert_eq!(interpolate(&pts), p);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = up(&[4, 0, -6, 1]);
        assert_eq!(p.antiderivative().derivative(), p);
    }
}
