//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

#![allow(clippy::excessive_precision)]

use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T, const N: usize> {
    pub value: [T; N],
    /// Sum of the per-interval Gauss/Kronrod discrepancies, componentwise max.
    pub error: T,
    pub converged: bool,
}

fn gk15<T: Scalar, const N: usize, F: Fn(T) -> [T; N]>(f: &F, a: T, b: T) -> ([T; N], T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = [T::zero(); N];
    let mut gauss = [T::zero(); N];
    for k in 0..N {
        kron[k] = fc[k] * T::lit(WGK[7]);
        gauss[k] = fc[k] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            let s = f1[k] + f2[k];
            kron[k] = kron[k] + T::lit(WGK[j]) * s;
            if j % 2 == 1 {
                gauss[k] = gauss[k] + T::lit(WG[j / 2]) * s;
            }
        }
    }
    let mut err = T::zero();
    for k in 0..N {
        kron[k] = kron[k] * radius;
        gauss[k] = gauss[k] * radius;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total estimate drops below
/// `max(abs_tol, rel_tol * |I|)` (componentwise max of `|I|`) or
/// `max_intervals` is reached.
pub fn integrate<T, const N: usize, F>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Quadrature<T, N>
where
    T: Scalar,
    F: Fn(T) -> [T; N],
{
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let mut total = [T::zero(); N];
        let mut err = T::zero();
        for (_, _, v, e) in &intervals {
            for k in 0..N {
                total[k] = total[k] + v[k];
            }
            err = err + *e;
        }
        let scale = total.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let target = abs_tol.max(rel_tol * scale);
        if err <= target || intervals.len() >= max_intervals {
            return Quadrature {
                value: total,
                error: err,
                converged: err <= target,
            };
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| {
                x.1 .3
                    .partial_cmp(&y.1 .3)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}
