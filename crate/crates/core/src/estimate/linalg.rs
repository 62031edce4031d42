//! Dense symmetric solves for the `k × k` normal equations (`k` is small).

use ndarray::{Array1, Array2};

use crate::scalar::Real;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors as columns)`.
pub(crate) fn symmetric_eigen<T: Real>(a: &Array2<T>) -> (Array1<T>, Array2<T>) {
    let k = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<T>::eye(k);
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..k)
            .flat_map(|p| ((p + 1)..k).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum();
        let scale: T = a.iter().map(|&x| x * x).sum();
        if off <= T::epsilon() * T::epsilon() * scale {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[(p, r)], a[(q, r)]);
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                for r in 0..k {
                    let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

/// Solution of `A x = b` for symmetric positive semidefinite `A`, with the
/// spectral condition number. `None` if the reciprocal condition is below `rcond_min`.
pub(crate) struct SpdSolution<T> {
    pub x: Option<Array1<T>>,
    pub rcond: T,
}

pub(crate) fn solve_psd<T: Real>(a: &Array2<T>, b: &Array1<T>, rcond_min: T) -> SpdSolution<T> {
    let (vals, vecs) = symmetric_eigen(a);
    let max = vals.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let min = vals.iter().fold(T::infinity(), |m, &v| m.min(v));
    let rcond = if max > T::zero() { (min / max).max(T::zero()) } else { T::zero() };
    if !(rcond >= rcond_min) {
        return SpdSolution { x: None, rcond };
    }
    // x = V Λ⁻¹ Vᵀ b
    let proj = vecs.t().dot(b);
    let scaled: Array1<T> = proj.iter().zip(vals.iter()).map(|(&p, &l)| p / l).collect();
    SpdSolution { x: Some(vecs.dot(&scaled)), rcond }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigenvalues_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let (mut vals, _) = symmetric_eigen(&array![[2.0f64, 1.0], [1.0, 2.0]]);
        vals.as_slice_mut().unwrap().sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_matrix() {
        let a = array![[4.0f64, 1.0, -2.0], [1.0, 3.0, 0.5], [-2.0, 0.5, 5.0]];
        let (vals, v) = symmetric_eigen(&a);
        let back = v.dot(&Array2::from_diag(&vals)).dot(&v.t());
        assert!((&back - &a).iter().all(|d: &f64| d.abs() < 1e-12));
    }

    #[test]
    fn solves_and_flags_singular() {
        let a = array![[4.0f64, 1.0], [1.0, 3.0]];
        let sol = solve_psd(&a, &array![1.0, 2.0], 1e-12);
        let x = sol.x.unwrap();
        // Cramer's rule: det = 11
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14 && (x[1] - 7.0 / 11.0).abs() < 1e-14);

        let singular = array![[1.0, 2.0], [2.0, 4.0]];
        let sol = solve_psd(&singular, &array![1.0, 2.0], 1e-12);
        assert!(sol.x.is_none() && sol.rcond < 1e-12);
        assert!(solve_psd(&Array2::<f64>::zeros((2, 2)), &array![0.0, 0.0], 1e-12).x.is_none());
    }
}
