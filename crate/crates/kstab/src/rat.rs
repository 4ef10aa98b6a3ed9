//! Exact rational scalars, vectors and matrices.
//!
//! All geometry in this crate is carried out over `BigRational`. Vectors are
//! plain `Vec<Rat>`; matrices are row-major `Vec<Vec<Rat>>`.

use num::{BigInt, BigRational, One, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;
pub type QVec = Vec<Rat>;
pub type QMat = Vec<Vec<Rat>>;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rat_i(n: i64) -> Rat {
    Rat::from(Int::from(n))
}

/// Parses "p/q" or "p" with an optional sign.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::InvalidData(format!("cannot parse rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: Int = num.parse().map_err(|_| bad())?;
    let d: Int = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(n, d))
}

/// Canonical form: reduced, "p" when the denominator is one, else "p/q".
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let f = |i: &Int| {
        let (sign, digits) = i.to_u64_digits();
        let mut v = 0.0f64;
        for d in digits.iter().rev() {
            v = v * 18446744073709551616.0 + *d as f64;
        }
        if sign == num::bigint::Sign::Minus {
            -v
        } else {
            v
        }
    };
    f(r.numer()) / f(r.denom())
}

pub fn zeros(n: usize) -> QVec {
    vec![Rat::zero(); n]
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    let mut s = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

pub fn vec_add(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[Rat], c: &Rat) -> QVec {
    a.iter().map(|x| c * x).collect()
}

pub fn vec_neg(a: &[Rat]) -> QVec {
    a.iter().map(|x| -x).collect()
}

pub fn identity(n: usize) -> QMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect()
}

pub fn mat_vec(m: &QMat, v: &[Rat]) -> QVec {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Row covector times matrix: (c M)_j = sum_i c_i M_ij.
pub fn covec_mat(c: &[Rat], m: &QMat) -> QVec {
    let cols = m[0].len();
    (0..cols)
        .map(|j| {
            let mut s = Rat::zero();
            for (ci, row) in c.iter().zip(m) {
                s += ci * &row[j];
            }
            s
        })
        .collect()
}

pub fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let n = a.len();
    let p = b[0].len();
    let m = b.len();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut s = Rat::zero();
                    for k in 0..m {
                        s += &a[i][k] * &b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_transpose(m: &QMat) -> QMat {
    let rows = m.len();
    let cols = m[0].len();
    (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect()
}

pub fn det(m: &QMat) -> Rat {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Rat::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => return Rat::zero(),
        };
        if pivot != col {
            a.swap(pivot, col);
            d = -d;
        }
        d *= a[col][col].clone();
        let inv = a[col][col].recip();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    d
}

/// Solves M x = b for square M; `None` when M is singular.
pub fn solve(m: &QMat, b: &[Rat]) -> Option<QVec> {
    let n = m.len();
    let mut a: Vec<QVec> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot, col);
        let inv = a[col][col].recip();
        for c in col..=n {
            a[col][c] = &a[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let sub = &f * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

pub fn invert(m: &QMat) -> Option<QMat> {
    let n = m.len();
    let cols: Vec<QVec> = (0..n)
        .map(|j| {
            let e: QVec = (0..n).map(|i| if i == j { Rat::one() } else { Rat::zero() }).collect();
            solve(m, &e)
        })
        .collect::<Option<Vec<_>>>()?;
    Some(mat_transpose(&cols))
}

/// Rank of the row span.
pub fn row_rank(rows: &[QVec]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut a: Vec<QVec> = rows.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let pivot = match (rank..a.len()).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => continue,
        };
        a.swap(pivot, rank);
        let inv = a[rank][col].recip();
        for r in 0..a.len() {
            if r != rank && !a[r][col].is_zero() {
                let f = &a[r][col] * &inv;
                for c in col..cols {
                    let sub = &f * &a[rank][c];
                    a[r][c] -= sub;
                }
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Maximal number of affinely independent points in the set, i.e. one
/// more than the dimension of the affine hull.
pub fn affine_rank(points: &[QVec]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let diffs: Vec<QVec> = points[1..].iter().map(|p| vec_sub(p, &points[0])).collect();
    row_rank(&diffs) + 1
}

/// Basis of the kernel of the linear map given by `rows` (as row covectors).
pub fn kernel_basis(rows: &[QVec], dim: usize) -> Vec<QVec> {
    let mut a: Vec<QVec> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..dim {
        let pivot = match (rank..a.len()).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => continue,
        };
        a.swap(pivot, rank);
        let inv = a[rank][col].recip();
        for c in 0..dim {
            a[rank][c] = &a[rank][c] * &inv;
        }
        for r in 0..a.len() {
            if r != rank && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..dim {
                    let sub = &f * &a[rank][c];
                    a[r][c] -= sub;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = zeros(dim);
            v[f] = Rat::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

fn gcd_int(a: &Int, b: &Int) -> Int {
    num::integer::gcd(a.clone(), b.clone())
}

/// Scales a nonzero rational covector to a primitive integer one, keeping direction.
pub fn primitive_integer(v: &[Rat]) -> Option<Vec<Int>> {
    if is_zero_vec(v) {
        return None;
    }
    let mut lcm = Int::one();
    for x in v {
        lcm = num::integer::lcm(lcm, x.denom().clone());
    }
    let ints: Vec<Int> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = Int::zero();
    for i in &ints {
        g = gcd_int(&g, i);
    }
    Some(ints.iter().map(|i| i / &g).collect())
}

pub fn int_to_rat_vec(v: &[Int]) -> QVec {
    v.iter().map(|i| Rat::from(i.clone())).collect()
}

/// Unimodular basis of the integer kernel of a primitive integer covector.
///
/// Returns `dim - 1` integer columns spanning `{w : u . w = 0}` over the
/// integers, obtained from column operations that reduce `u` to a unit vector.
pub fn integer_kernel_basis(u: &[Int]) -> Vec<Vec<Int>> {
    use num::integer::Integer;
    let n = u.len();
    // Columns of a unimodular matrix, transformed alongside u so that
    // u . cols[j] = w[j] at every step.
    let mut cols: Vec<Vec<Int>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { Int::one() } else { Int::zero() }).collect())
        .collect();
    let mut w: Vec<Int> = u.to_vec();
    for i in 1..n {
        if w[i].is_zero() {
            continue;
        }
        let (a, b) = (w[0].clone(), w[i].clone());
        let eg = a.extended_gcd(&b);
        let (g, s, t) = (eg.gcd, eg.x, eg.y);
        let (qa, qb) = (&a / &g, &b / &g);
        let c0 = cols[0].clone();
        let ci = cols[i].clone();
        for r in 0..n {
            cols[0][r] = &s * &c0[r] + &t * &ci[r];
            cols[i][r] = -&qb * &c0[r] + &qa * &ci[r];
        }
        w[0] = g;
        w[i] = Int::zero();
    }
    debug_assert!(w[1..].iter().all(|x| x.is_zero()));
    cols.into_iter().skip(1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        for s in ["3", "-7/2", "0", "22/7"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(format_rat(&parse_rat("4/2").unwrap()), "2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn solve_and_det() {
        let m = vec![vec![rat_i(2), rat_i(1)], vec![rat_i(1), rat_i(3)]];
        assert_eq!(det(&m), rat_i(5));
        let x = solve(&m, &[rat_i(3), rat_i(4)]).unwrap();
        assert_eq!(x, vec![rat_i(1), rat_i(1)]);
        let inv = invert(&m).unwrap();
        assert_eq!(mat_mul(&m, &inv), identity(2));
    }

    #[test]
    fn kernel_of_row() {
        let k = kernel_basis(&[vec![rat_i(2), rat_i(-1)]], 2);
        assert_eq!(k.len(), 1);
        assert!(dot(&[rat_i(2), rat_i(-1)], &k[0]).is_zero());
    }

    #[test]
    fn integer_kernel_is_unimodular() {
        let u = vec![Int::from(2), Int::from(-1)];
        let k = integer_kernel_basis(&u);
        assert_eq!(k.len(), 1);
        assert!((&u[0] * &k[0][0] + &u[1] * &k[0][1]).is_zero());
        // Direction (1, 2): one lattice step along the line 2x = y.
        assert_eq!(num::integer::gcd(k[0][0].clone(), k[0][1].clone()), Int::one());

        let u = vec![Int::from(3), Int::from(5), Int::from(7)];
        let k = integer_kernel_basis(&u);
        assert_eq!(k.len(), 2);
        for col in &k {
            let p: Int = u.iter().zip(col).map(|(a, b)| a * b).sum();
            assert!(p.is_zero());
        }
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![rat(4, 6), rat(-2, 3)];
        assert_eq!(primitive_integer(&v).unwrap(), vec![Int::from(1), Int::from(-1)]);
        assert!(primitive_integer(&[Rat::zero()]).is_none());
    }
}
