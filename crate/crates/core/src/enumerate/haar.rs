//! Haar-distributed random orthogonal matrices.
//!
//! A d×d standard Gaussian matrix `G` is factored as `G = L·Q` with Householder
//! reflections applied from the right (the transpose of a QR factorization).
//! Flipping signs so that `L` has a positive diagonal, `U = S·Q` with
//! `S = diag(sign(L_kk))` is Haar distributed on O(d).
//!
//! The rotation is kept in factored form. Applying it to a handful of row
//! vectors costs O(rows·d²) and never materializes `U`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
struct Reflector {
    start: usize,
    v: Vec<f64>,
    tau: f64,
}

#[derive(Debug, Clone)]
pub struct HaarRotation {
    dim: usize,
    reflectors: Vec<Reflector>,
    signs: Vec<f64>,
}

impl HaarRotation {
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1, "rotation dimension must be positive");
        let mut a: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut reflectors = Vec::with_capacity(dim.saturating_sub(1));
        let mut signs = Vec::with_capacity(dim);
        for k in 0..dim {
            let row = &a[k * dim + k..(k + 1) * dim];
            if k + 1 == dim {
                signs.push(sign(row[0]));
                break;
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                signs.push(1.0);
                continue;
            }
            let alpha = -sign(row[0]) * norm;
            let mut v = row.to_vec();
            v[0] -= alpha;
            let tau = 2.0 / v.iter().map(|x| x * x).sum::<f64>();
            for r in k + 1..dim {
                let tail = &mut a[r * dim + k..(r + 1) * dim];
                let w = tau * dot(tail, &v);
                axpy(tail, -w, &v);
            }
            signs.push(sign(alpha));
            reflectors.push(Reflector { start: k, v, tau });
        }
        HaarRotation {
            dim,
            reflectors,
            signs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Replace every row `x` of `rows` with `x·U`.
    pub fn rotate_rows_in_place(&self, rows: &mut Array2<f64>) {
        assert_eq!(rows.ncols(), self.dim);
        for mut row in rows.rows_mut() {
            let x = row.as_slice_mut().expect("rows are contiguous");
            for (xi, s) in x.iter_mut().zip(&self.signs) {
                *xi *= s;
            }
            for h in self.reflectors.iter().rev() {
                let tail = &mut x[h.start..];
                let w = h.tau * dot(tail, &h.v);
                axpy(tail, -w, &h.v);
            }
        }
    }

    /// The explicit d×d matrix `U`.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut u = Array2::eye(self.dim);
        self.rotate_rows_in_place(&mut u);
        u
    }
}

/// Draw a Haar-random d×d orthogonal matrix.
pub fn haar_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array2<f64> {
    HaarRotation::sample(dim, rng).to_matrix()
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

// Four partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let split = n - n % 4;
    for (x, y) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = a[split..].iter().zip(&b[split..]).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn max_orthogonality_error(u: &Array2<f64>) -> f64 {
        let g = u.t().dot(u);
        let eye = Array2::<f64>::eye(u.nrows());
        (&g - &eye).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn orthogonal_at_several_sizes() {
        for d in [1, 2, 3, 7, 40] {
            let mut rng = stream(11, Domain::Rotation, d as u64);
            let u = haar_rotation(d, &mut rng);
            assert!(max_orthogonality_error(&u) < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn factored_application_matches_matrix() {
        let mut rng = stream(5, Domain::Rotation, 0);
        let h = HaarRotation::sample(9, &mut rng);
        let u = h.to_matrix();
        let x = Array2::from_shape_fn((3, 9), |(i, j)| ((i * 9 + j) as f64).sin());
        let mut y = x.clone();
        h.rotate_rows_in_place(&mut y);
        let z = x.dot(&u);
        for (a, b) in y.iter().zip(z.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_rotations_take_both_signs() {
        let mut plus = 0;
        let mut minus = 0;
        for seed in 0..400 {
            let mut rng = stream(seed, Domain::Rotation, 0);
            let u = haar_rotation(1, &mut rng);
            match u[[0, 0]] {
                x if x == 1.0 => plus += 1,
                x if x == -1.0 => minus += 1,
                x => panic!("not ±1: {x}"),
            }
        }
        // Binomial(400, 1/2): 4σ = 40
        assert!((plus as i32 - 200).abs() < 40 && (minus as i32 - 200).abs() < 40);
    }

    #[test]
    fn first_column_is_centered_at_d3() {
        let draws = 10_000;
        let mut mean = [0.0; 3];
        for r in 0..draws {
            let mut rng = stream(2024, Domain::Rotation, r);
            let u = haar_rotation(3, &mut rng);
            for (k, m) in mean.iter_mut().enumerate() {
                *m += u[[k, 0]] / draws as f64;
            }
        }
        let tol = 4.0 / (draws as f64).sqrt();
        assert!(mean.iter().all(|m| m.abs() < tol), "{mean:?}");
    }
}
