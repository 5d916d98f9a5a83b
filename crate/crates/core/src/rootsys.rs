//! su(N) root-system combinatorics in exact rational arithmetic.
//!
//! Weights are stored by their coordinates `v_i` in the overcomplete basis
//! `e_1, …, e_N` of fundamental-representation weights, normalised so that
//! the coordinates sum to zero (possible because `Σ e_i = 0`). The inner
//! product is `e_i · e_j = δ_ij − 1/N`.

use num_rational::Rational64;

use crate::error::{Error, Result};

pub type Rational = Rational64;

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// A weight of su(N) in the `e`-basis with zero coordinate sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    n: usize,
    coeffs: Vec<Rational>,
}

impl WeightVector {
    /// Builds a weight from arbitrary coordinates, projecting onto the
    /// zero-sum representative. The projection does not change the weight
    /// because `Σ e_i = 0`.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        let n = coeffs.len();
        if n < 2 {
            return Err(Error::Domain(format!("su(N) weights need N >= 2, got {n}")));
        }
        let mean = coeffs.iter().copied().sum::<Rational>() / r(n as i64);
        let coeffs = coeffs.into_iter().map(|c| c - mean).collect();
        Ok(Self { n, coeffs })
    }

    pub fn from_integers(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| r(c)).collect())
    }

    /// The fundamental weight `e_i` (1-based).
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::Domain(format!("basis index {i} outside 1..={n}")));
        }
        let mut c = vec![r(0); n];
        c[i - 1] = r(1);
        Self::new(c)
    }

    /// `Σ_{i∈S} e_i` for a 1-based index subset.
    pub fn from_subset(n: usize, subset: &[usize]) -> Result<Self> {
        let mut c = vec![r(0); n];
        for &i in subset {
            if i == 0 || i > n {
                return Err(Error::Domain(format!("subset index {i} outside 1..={n}")));
            }
            c[i - 1] += r(1);
        }
        Self::new(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self, other)?;
        Ok(Self {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self, other)?;
        Ok(Self {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, k: Rational) -> Self {
        Self { n: self.n, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| *c.numer() as f64 / *c.denom() as f64).collect()
    }
}

fn check_dim(v: &WeightVector, w: &WeightVector) -> Result<()> {
    if v.n != w.n {
        return Err(Error::Dimension { left: v.n, right: w.n });
    }
    Ok(())
}

/// `v · w = Σ_ij v_i w_j (δ_ij − 1/N)`.
pub fn weight_dot(v: &WeightVector, w: &WeightVector) -> Result<Rational> {
    check_dim(v, w)?;
    let n = r(v.n as i64);
    let diag: Rational = v.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a * b).sum();
    let sv: Rational = v.coeffs.iter().copied().sum();
    let sw: Rational = w.coeffs.iter().copied().sum();
    Ok(diag - sv * sw / n)
}

fn check_rank(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("su(N) requires N >= 2, got {n}")));
    }
    Ok(())
}

/// Positive roots `e_k − e_l`, `1 ≤ k < l ≤ N`, lexicographic in `(k, l)`.
pub fn positive_roots(n: usize) -> Result<Vec<WeightVector>> {
    Ok(positive_root_pairs(n)?
        .into_iter()
        .map(|(k, l)| {
            let mut c = vec![r(0); n];
            c[k - 1] = r(1);
            c[l - 1] = r(-1);
            WeightVector { n, coeffs: c }
        })
        .collect())
}

/// The 1-based index pairs `(k, l)` labelling [`positive_roots`].
pub fn positive_root_pairs(n: usize) -> Result<Vec<(usize, usize)>> {
    check_rank(n)?;
    Ok((1..=n).flat_map(|k| (k + 1..=n).map(move |l| (k, l))).collect())
}

/// Weyl vector `ρ`, coordinates `(N − 2i + 1)/2`.
pub fn weyl_vector(n: usize) -> Result<WeightVector> {
    check_rank(n)?;
    let coeffs = (1..=n).map(|i| Rational::new(n as i64 - 2 * i as i64 + 1, 2)).collect();
    Ok(WeightVector { n, coeffs })
}

/// All `k`-element subsets of `{1, …, N}` in lexicographic order; these
/// index the Weyl orbit of the fundamental weight `λ_k`.
pub fn weyl_orbit_subsets(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    check_rank(n)?;
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("orbit weight index k = {k} outside 1..={}", n - 1)));
    }
    Ok(subsets(n, k))
}

/// Lexicographic `k`-subsets of `{1..n}`, any `0 ≤ k ≤ n`.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (1..=k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - (k - 1 - i) {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// For an orbit element `n ↔ S`, the positive roots `α_{k,l}` with
/// `(n·α)² = 1`, each tagged with its exact exponent. Roots with exponent
/// zero are omitted.
pub fn orbit_root_exponents(n: usize, subset: &[usize]) -> Result<Vec<((usize, usize), Rational)>> {
    let w = WeightVector::from_subset(n, subset)?;
    let pairs = positive_root_pairs(n)?;
    let roots = positive_roots(n)?;
    let mut out = Vec::new();
    for (pair, alpha) in pairs.into_iter().zip(&roots) {
        let d = weight_dot(&w, alpha)?;
        let sq = d * d;
        if sq != r(0) {
            out.push((pair, sq));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> WeightVector {
        WeightVector::basis(n, i).unwrap()
    }

    #[test]
    fn dot_products_of_basis_weights() {
        assert_eq!(weight_dot(&e(4, 1), &e(4, 1)).unwrap(), Rational::new(3, 4));
        assert_eq!(weight_dot(&e(4, 1), &e(4, 2)).unwrap(), Rational::new(-1, 4));
        let all = WeightVector::from_integers(&[1, 1, 1, 1, 1]).unwrap();
        let w = WeightVector::from_integers(&[3, -1, 4, 1, -5]).unwrap();
        assert_eq!(weight_dot(&all, &w).unwrap(), r(0));
    }

    #[test]
    fn mismatched_rank_is_rejected() {
        assert!(matches!(
            weight_dot(&e(3, 1), &e(4, 1)),
            Err(Error::Dimension { left: 3, right: 4 })
        ));
    }

    #[test]
    fn root_counts_and_norms() {
        assert_eq!(positive_roots(2).unwrap(), vec![e(2, 1).sub(&e(2, 2)).unwrap()]);
        assert_eq!(positive_roots(4).unwrap().len(), 6);
        let roots = positive_roots(3).unwrap();
        // α_{1,3} is the second root in lexicographic order
        assert_eq!(weight_dot(&roots[1], &roots[1]).unwrap(), r(2));
        assert!(positive_roots(1).is_err());
    }

    #[test]
    fn weyl_vector_coordinates() {
        let rho = weyl_vector(4).unwrap();
        let expected: Vec<Rational> =
            [3, 1, -1, -3].iter().map(|&x| Rational::new(x, 2)).collect();
        assert_eq!(rho.coeffs(), expected.as_slice());
        assert_eq!(weyl_vector(2).unwrap().coeffs(), &[Rational::new(1, 2), Rational::new(-1, 2)]);
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(weyl_orbit_subsets(4, 2).unwrap().len(), 6);
        assert_eq!(weyl_orbit_subsets(5, 3).unwrap().len(), 10);
        assert_eq!(weyl_orbit_subsets(4, 2).unwrap()[0], vec![1, 2]);
        assert_eq!(weyl_orbit_subsets(4, 2).unwrap()[5], vec![3, 4]);
        assert!(weyl_orbit_subsets(4, 0).is_err());
        assert!(weyl_orbit_subsets(4, 4).is_err());
    }

    #[test]
    fn orbit_root_pairing_example() {
        let n = WeightVector::from_subset(3, &[1, 2]).unwrap();
        let alpha = e(3, 1).sub(&e(3, 3)).unwrap();
        assert_eq!(weight_dot(&n, &alpha).unwrap(), r(1));
    }

    #[test]
    fn sigma_dot_root_is_coordinate_difference() {
        let sigma = WeightVector::new(vec![Rational::new(1, 3), Rational::new(-5, 7), Rational::new(8, 21)])
            .unwrap();
        for ((k, l), alpha) in positive_root_pairs(3).unwrap().into_iter().zip(positive_roots(3).unwrap()) {
            let d = weight_dot(&sigma, &alpha).unwrap();
            assert_eq!(d, sigma.coeffs()[k - 1] - sigma.coeffs()[l - 1]);
        }
    }
}
