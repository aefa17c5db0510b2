//! Roots of monic complex quadratics and cubics.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Roots of `z^2 + b z + c`, computed without cancellation.
pub fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    let plus = b + disc;
    let minus = b - disc;
    let big = if plus.norm() >= minus.norm() {
        plus
    } else {
        minus
    };
    if big == ZERO {
        return [ZERO, ZERO];
    }
    let q = -big / 2.0;
    [q, c / q]
}

/// Principal cube root.
pub fn cbrt(z: Complex64) -> Complex64 {
    if z == ZERO {
        ZERO
    } else {
        Complex64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
    }
}

fn eval(a2: Complex64, a1: Complex64, a0: Complex64, z: Complex64) -> Complex64 {
    ((z + a2) * z + a1) * z + a0
}

/// One or two Newton steps toward the root nearest `z`, keeping a step only
/// when it lowers the residual.
pub fn polish(a2: Complex64, a1: Complex64, a0: Complex64, mut z: Complex64) -> Complex64 {
    let mut res = eval(a2, a1, a0, z).norm();
    for _ in 0..3 {
        let d = (3.0 * z + 2.0 * a2) * z + a1;
        if d == ZERO || res == 0.0 {
            break;
        }
        let cand = z - eval(a2, a1, a0, z) / d;
        let cres = eval(a2, a1, a0, cand).norm();
        if !(cres < res) {
            break;
        }
        z = cand;
        res = cres;
    }
    z
}

/// The three roots (with multiplicity) of `z^3 + a2 z^2 + a1 z + a0`.
///
/// A vanishing constant term is factored out exactly so that zero roots
/// come back as exact zeros.
pub fn cubic_roots(a2: Complex64, a1: Complex64, a0: Complex64) -> [Complex64; 3] {
    if a0 == ZERO {
        let [r1, r2] = quadratic_roots(a2, a1);
        return [ZERO, r1, r2];
    }
    let d0 = a2 * a2 - 3.0 * a1;
    let d1 = 2.0 * a2 * a2 * a2 - 9.0 * a2 * a1 + 27.0 * a0;
    let s = (d1 * d1 - 4.0 * d0 * d0 * d0).sqrt();
    let w = if (d1 + s).norm() >= (d1 - s).norm() {
        d1 + s
    } else {
        d1 - s
    };
    let cr = cbrt(w / 2.0);
    if cr == ZERO {
        let r = -a2 / 3.0;
        return [r, r, r];
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = [ZERO; 3];
    let mut xi = Complex64::new(1.0, 0.0);
    for slot in out.iter_mut() {
        let ck = xi * cr;
        let z = -(a2 + ck + d0 / ck) / 3.0;
        *slot = polish(a2, a1, a0, z);
        xi *= omega;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn factored_examples() {
        // (z - 2)(z^2 + 1)
        let r = sorted(cubic_roots(c(-2.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)).to_vec());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((r[2] - c(2.0, 0.0)).norm() < 1e-14);

        // z (z - 1)^2
        let r = sorted(cubic_roots(c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).to_vec());
        assert_eq!(r[0], c(0.0, 0.0));
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-8);
        assert!((r[2] - c(1.0, 0.0)).norm() < 1e-8);

        // z^3 - z^2
        let r = sorted(cubic_roots(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).to_vec());
        assert_eq!(r, vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);

        // (z - 1)^3
        let r = cubic_roots(c(-3.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0));
        for z in r {
            assert!((z - c(1.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn quadratic_examples() {
        let [a, b] = quadratic_roots(c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!((a, b), (c(0.0, 0.0), c(0.0, 0.0)));
        let r = sorted(quadratic_roots(c(-3.0, 0.0), c(2.0, 0.0)).to_vec());
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-15 && (r[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn symmetric_functions_match_coefficients(
            a2 in (-2.0..2.0f64, -2.0..2.0f64),
            a1 in (-2.0..2.0f64, -2.0..2.0f64),
            a0 in (-2.0..2.0f64, -2.0..2.0f64),
        ) {
            let (a2, a1, a0) = (c(a2.0, a2.1), c(a1.0, a1.1), c(a0.0, a0.1));
            let [x, y, z] = cubic_roots(a2, a1, a0);
            prop_assert!((x + y + z + a2).norm() < 1e-10);
            prop_assert!((x * y + x * z + y * z - a1).norm() < 1e-10);
            prop_assert!((x * y * z + a0).norm() < 1e-10);
        }
    }
}
