//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of |Kronrod - Gauss| over the final partition.
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece { a, b, value: kronrod * h, error: ((kronrod - gauss) * h).abs() }
}

/// Integrates `f` over `[a, b]`, bisecting the piece with the largest error
/// estimate until the total estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Result<Integral> {
    integrate_split(f, a, b, 1, abs_tol, max_intervals)
}

/// As [`integrate`], starting from `splits` equal pieces so that narrow
/// peaks cannot hide between the nodes of a single rule.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    splits: usize,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidParameter(format!("bad integration interval [{a}, {b}]")));
    }
    let splits = splits.max(1);
    let h = (b - a) / splits as f64;
    let mut pieces: Vec<Piece> = (0..splits)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == splits { b } else { lo + h };
            gk15(&f, lo, hi)
        })
        .collect();
    loop {
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= abs_tol {
            break;
        }
        if pieces.len() >= max_intervals {
            return Err(Error::NoConvergence { iterations: pieces.len(), residual: error });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("partition is never empty");
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
    }
    Ok(Integral {
        value: pieces.iter().map(|p| p.value).sum(),
        error: pieces.iter().map(|p| p.error).sum(),
        intervals: pieces.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_polynomials_are_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 10).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn test_peaked_integrand() {
        // Gamma(21, 3) density integrates to one; its mass beyond 60 is negligible
        let ln_norm = 21.0 * 3f64.ln() - (1..=20).map(|i| f64::from(i).ln()).sum::<f64>();
        let f = |t: f64| if t > 0.0 { (ln_norm + 20.0 * t.ln() - 3.0 * t).exp() } else { 0.0 };
        let r = integrate(f, 0.0, 60.0, 1e-12, 1000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn test_rejects_bad_interval() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-12, 10).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-12, 10).is_err());
    }

    #[test]
    fn test_reports_non_convergence() {
        let r = integrate(|x| if x < 0.123_456_7 { 0.0 } else { 1.0 }, 0.0, 1.0, 1e-300, 4);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
