//! Thomas algorithm, in linear and logarithmic storage.
//!
//! Row `i` of the system reads `a[i]*x[i-1] + b[i]*x[i] + c[i]*x[i+1] = d[i]`;
//! `a[0]` and `c[n-1]` are ignored.

/// `ln(exp(a) + exp(b))`, exact when either side is `-inf`.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Solves in place, overwriting `d` with the solution. `scratch` must have
/// the same length as `d`.
pub fn solve(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    scratch[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let den = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / den;
        d[i] = (d[i] - a[i] * d[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        d[i] -= scratch[i] * d[i + 1];
    }
}

/// Log-space solve for an M-matrix with nonnegative right-hand side.
///
/// Requires `a <= 0`, `c <= 0` and `b > |a| + |c|` row-wise. `ld` holds
/// `ln d` on entry (`-inf` for zero) and `ln x` on exit. Every update is a
/// sum of nonnegative terms, so no cancellation occurs and values far below
/// the `f64` range are carried exactly.
pub fn solve_log(a: &[f64], b: &[f64], c: &[f64], ld: &mut [f64], scratch: &mut [f64]) {
    let n = ld.len();
    if n == 0 {
        return;
    }
    debug_assert!(a.iter().chain(c.iter()).all(|&x| x <= 0.0));
    scratch[0] = c[0] / b[0];
    ld[0] -= b[0].ln();
    for i in 1..n {
        let den = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / den;
        let carry = if a[i] == 0.0 { f64::NEG_INFINITY } else { (-a[i]).ln() + ld[i - 1] };
        ld[i] = logaddexp(ld[i], carry) - den.ln();
    }
    for i in (0..n - 1).rev() {
        if scratch[i] != 0.0 {
            ld[i] = logaddexp(ld[i], (-scratch[i]).ln() + ld[i + 1]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matvec(a: &[f64], b: &[f64], c: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += c[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn logaddexp_handles_zero_mass() {
        assert_eq!(logaddexp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(logaddexp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((logaddexp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((logaddexp(-800.0, -800.0) - (-800.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_exact_zero_in_log_space() {
        let n = 5;
        let a = vec![-1.0; n];
        let c = vec![-1.0; n];
        let b = vec![3.0; n];
        let mut ld = vec![f64::NEG_INFINITY; n];
        let mut s = vec![0.0; n];
        solve_log(&a, &b, &c, &mut ld, &mut s);
        assert!(ld.iter().all(|&v| v == f64::NEG_INFINITY));
    }

    proptest! {
        #[test]
        fn linear_solve_residual(v in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.1f64..1.0, -5.0f64..5.0), 1..40)) {
            let a: Vec<f64> = v.iter().map(|t| -t.0).collect();
            let c: Vec<f64> = v.iter().map(|t| -t.1).collect();
            let b: Vec<f64> = v.iter().map(|t| t.0 + t.1 + t.2).collect();
            let rhs: Vec<f64> = v.iter().map(|t| t.3).collect();
            let mut x = rhs.clone();
            let mut s = vec![0.0; x.len()];
            solve(&a, &b, &c, &mut x, &mut s);
            let back = matvec(&a, &b, &c, &x);
            for (l, r) in back.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-10);
            }
        }

        #[test]
        fn log_solve_matches_linear(v in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0, 0.1f64..1.0, 0.0f64..5.0), 1..40), shift in -600.0f64..600.0) {
            let a: Vec<f64> = v.iter().map(|t| -t.0).collect();
            let c: Vec<f64> = v.iter().map(|t| -t.1).collect();
            let b: Vec<f64> = v.iter().map(|t| t.0 + t.1 + t.2).collect();
            let rhs: Vec<f64> = v.iter().map(|t| t.3).collect();
            let mut x = rhs.clone();
            let mut s = vec![0.0; x.len()];
            solve(&a, &b, &c, &mut x, &mut s);
            // scaling by exp(shift) must shift ln x by exactly `shift`
            let mut ld: Vec<f64> = rhs.iter().map(|&d| d.ln() + shift).collect();
            solve_log(&a, &b, &c, &mut ld, &mut s);
            for (lx, x) in ld.iter().zip(&x) {
                if *x == 0.0 {
                    prop_assert_eq!(*lx, f64::NEG_INFINITY);
                } else {
                    prop_assert!(((lx - shift) - x.ln()).abs() < 1e-9, "{} vs {}", lx - shift, x.ln());
                }
            }
        }
    }
}
