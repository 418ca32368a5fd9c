//! Banded LU factorization with partial pivoting (LAPACK GB layout), used
//! as the direct solver for the condensed face-trace system. The structured
//! meshes give a small bandwidth under the y-then-x face ordering, so a band
//! factorization is a direct sparse solve with deterministic fill.

use crate::{Error, Result};
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// upper bandwidth including pivoting fill: ku + kl
    kut: usize,
    stride: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> BandMatrix {
        let kut = ku + kl;
        let stride = kut + kl + 1;
        BandMatrix {
            n,
            kl,
            ku,
            kut,
            stride,
            data: vec![0.0; n * stride],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j + self.kl && j <= i + self.kut, "({i},{j}) outside band");
        j * self.stride + (i + self.kut - j)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i <= j + self.kl && j <= i + self.ku,
            "entry ({i},{j}) outside declared band kl={} ku={}",
            self.kl,
            self.ku
        );
        let id = self.idx(i, j);
        self.data[id] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let id = self.idx(i, j);
        self.data[id] = v;
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let i_max = (j + self.kl).min(n.saturating_sub(1));
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=i_max {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem);
            }
            ipiv[j] = p;
            let c_max = (j + self.kut).min(n - 1);
            if p != j {
                for c in j..=c_max {
                    let a = self.get(j, c);
                    let b = self.get(p, c);
                    self.set(j, c, b);
                    self.set(p, c, a);
                }
            }
            let piv = self.get(j, j);
            for i in (j + 1)..=i_max {
                let l = self.get(i, j) / piv;
                self.set(i, j, l);
                if l != 0.0 {
                    for c in (j + 1)..=c_max {
                        let u = self.get(j, c);
                        if u != 0.0 {
                            let v = self.get(i, c) - l * u;
                            self.set(i, c, v);
                        }
                    }
                }
            }
        }
        Ok(BandLu { mat: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    mat: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.mat.n;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.clone();
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap_rows(j, p);
            }
            let i_max = (j + self.mat.kl).min(n.saturating_sub(1));
            let xj = x[j];
            if xj != 0.0 {
                for i in (j + 1)..=i_max {
                    x[i] -= self.mat.get(i, j) * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let c_max = (j + self.mat.kut).min(n - 1);
            let mut s = x[j];
            for c in (j + 1)..=c_max {
                s -= self.mat.get(j, c) * x[c];
            }
            x[j] = s / self.mat.get(j, j);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_band(n: usize, kl: usize, ku: usize, rng: &mut StdRng) -> (BandMatrix, DMatrix<f64>) {
        let mut b = BandMatrix::new(n, kl, ku);
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i <= j + kl && j <= i + ku {
                    let v: f64 = rng.random::<f64>() - 0.5;
                    let v = if i == j { v + 3.0 } else { v };
                    b.add(i, j, v);
                    d[(i, j)] = v;
                }
            }
        }
        (b, d)
    }

    #[test]
    fn matches_dense_lu() {
        let mut rng = StdRng::seed_from_u64(42);
        for &(n, kl, ku) in &[(1usize, 0usize, 0usize), (5, 1, 2), (40, 7, 3), (120, 11, 11)] {
            let (b, d) = random_band(n, kl, ku, &mut rng);
            let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let x_band = b.factor().unwrap().solve(&rhs);
            let x_dense = d.lu().solve(&rhs).unwrap();
            for i in 0..n {
                assert!(
                    (x_band[i] - x_dense[i]).abs() < 1e-10 * (1.0 + x_dense[i].abs()),
                    "n={n} i={i}: {} vs {}",
                    x_band[i],
                    x_dense[i]
                );
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0,1],[1,0]] requires a row interchange
        let mut b = BandMatrix::new(2, 1, 1);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        let lu = b.factor().unwrap();
        let x = lu.solve(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((x[0] - 3.0).abs() < 1e-15);
        assert!((x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_detected() {
        let mut b = BandMatrix::new(2, 1, 1);
        b.add(0, 0, 1.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 1, 1.0);
        assert!(matches!(b.factor(), Err(Error::SingularSystem)));
    }
}
