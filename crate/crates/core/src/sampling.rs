//! Seeded random building blocks: complex Gaussians, Haar-like unitaries,
//! similarity transforms with bounded condition number and upper-triangular
//! matrices with a prescribed Jordan structure at zero.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::ComplexMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Uniform phase, modulus uniform in `[rmin, rmax]`.
pub fn annulus_point<R: Rng + ?Sized>(rng: &mut R, rmin: f64, rmax: f64) -> Complex64 {
    let r = if rmax > rmin {
        rng.random_range(rmin..=rmax)
    } else {
        rmin
    };
    unit_phase(rng) * r
}

/// Uniform point of the closed unit disc.
pub fn disc_point<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r: f64 = rng.random::<f64>().sqrt();
    unit_phase(rng) * r
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    ComplexMatrix::wrap(m)
}

/// Unitary factor of the QR decomposition of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal folded back in.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n).into_dmatrix();
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    ComplexMatrix::wrap(q)
}

/// A similarity `S` and its exact inverse, `S = U diag(s) V*` with singular
/// values spread log-uniformly over `[1, cond_bound]`.
pub fn similarity<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    cond_bound: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let log_c = cond_bound.max(1.0).ln();
    let mut sv: Vec<f64> = (0..n)
        .map(|_| (rng.random::<f64>() * log_c).exp())
        .collect();
    if n >= 2 {
        sv[0] = 1.0;
        sv[n - 1] = cond_bound.max(1.0);
    }
    let d = ComplexMatrix::from_diagonal(
        &sv.iter()
            .map(|&s| Complex64::new(s, 0.0))
            .collect::<Vec<_>>(),
    );
    let dinv = ComplexMatrix::from_diagonal(
        &sv.iter()
            .map(|&s| Complex64::new(1.0 / s, 0.0))
            .collect::<Vec<_>>(),
    );
    let s = &(&u * &d) * &v.adjoint();
    let sinv = &(&v * &dinv) * &u.adjoint();
    (s, sinv)
}

/// Random partition of `total` into parts of size at most `max_part`.
pub fn partition<R: Rng + ?Sized>(rng: &mut R, total: usize, max_part: usize) -> Vec<usize> {
    let mut parts = Vec::new();
    let mut left = total;
    while left > 0 {
        let k = rng.random_range(1..=left.min(max_part.max(1)));
        parts.push(k);
        left -= k;
    }
    parts
}

/// Nilpotent Jordan blocks of the given sizes, block-diagonal.
pub fn jordan_nilpotent(blocks: &[usize]) -> ComplexMatrix {
    let n: usize = blocks.iter().sum();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut off = 0;
    for &b in blocks {
        for i in 0..b.saturating_sub(1) {
            m[(off + i, off + i + 1)] = Complex64::new(1.0, 0.0);
        }
        off += b;
    }
    ComplexMatrix::wrap(m)
}

/// Upper-triangular matrix with the given diagonal and small Gaussian
/// entries above it.
pub fn upper_with_diagonal<R: Rng + ?Sized>(
    rng: &mut R,
    diag: &[Complex64],
    coupling: f64,
) -> ComplexMatrix {
    let n = diag.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        for j in i + 1..n {
            m[(i, j)] = complex_normal(rng) * coupling;
        }
    }
    ComplexMatrix::wrap(m)
}

/// Block-diagonal `(T, J)` with `T` upper triangular carrying eigenvalues of
/// modulus in `[0.5, 2]` and `J` nilpotent with the given Jordan blocks.
/// The Drazin index of the result is the largest block size (0 if none).
pub fn regular_plus_nilpotent<R: Rng + ?Sized>(
    rng: &mut R,
    regular: usize,
    blocks: &[usize],
) -> ComplexMatrix {
    let diag: Vec<Complex64> = (0..regular).map(|_| annulus_point(rng, 0.5, 2.0)).collect();
    let mut parts = Vec::new();
    if regular > 0 {
        parts.push(upper_with_diagonal(rng, &diag, 0.3));
    }
    if !blocks.is_empty() {
        parts.push(jordan_nilpotent(blocks));
    }
    ComplexMatrix::block_diag(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_from_seed(3);
        let q = random_unitary(&mut rng, 5);
        assert!((&q.adjoint() * &q).dist(&ComplexMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn similarity_condition_is_bounded() {
        let mut rng = rng_from_seed(11);
        for n in 1..6 {
            let (s, sinv) = similarity(&mut rng, n, 50.0);
            assert!((&s * &sinv).dist(&ComplexMatrix::identity(n)) < 1e-12);
            let sv = matcore::singular_values(&s).unwrap();
            assert!(sv[0] / sv[n - 1] <= 50.0 * (1.0 + 1e-10));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = gaussian_matrix(&mut rng_from_seed(9), 4);
        let b = gaussian_matrix(&mut rng_from_seed(9), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn partition_sums() {
        let mut rng = rng_from_seed(1);
        for total in 0..12 {
            let p = partition(&mut rng, total, 5);
            assert_eq!(p.iter().sum::<usize>(), total);
            assert!(p.iter().all(|&k| (1..=5).contains(&k)));
        }
    }
}
