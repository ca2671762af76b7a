//! Sign-split fixed-point binary expansion of real vectors, and the
//! extended-index bit vectors whose plain inner product realizes one term of
//! the digit-convolution series.
//!
//! A vector `w` expands as `w_i = sign_i * sum_k 2^{u-k} d_{ik}` with one
//! shared top exponent `u = floor(log2 max |w_i|)` and digits split into
//! positive and negative plane sets, so the counting oracle only ever sees
//! AND-able 0/1 data. Truncation at `K` digits loses at most `2^{u-K+1}` per
//! component.

use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Pos, Sign::Neg];

    pub fn factor(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }
}

/// Exact `floor(log2 max |values|)` via the IEEE exponent field; 0 for an
/// all-zero (or empty) vector by convention.
pub fn global_exponent<'a>(values: impl IntoIterator<Item = &'a f64>) -> i32 {
    let mut max_abs = 0f64;
    for &v in values {
        max_abs = max_abs.max(v.abs());
    }
    exponent_of(max_abs)
}

fn exponent_of(v: f64) -> i32 {
    if v == 0.0 {
        return 0;
    }
    let biased = ((v.abs().to_bits() >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // Subnormals: fall back to log2, well below anything the digit
        // budget can reach anyway.
        v.abs().log2().floor() as i32
    } else {
        biased - 1023
    }
}

/// Sign-split digit planes of one real vector.
#[derive(Clone, Debug)]
pub struct FixedPointExpansion {
    exponent: i32,
    digits: u32,
    len: usize,
    pos: Vec<BitVector>,
    neg: Vec<BitVector>,
}

impl FixedPointExpansion {
    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Digit plane `k` for one sign; `None` beyond the stored digits (which
    /// reads as all zeros).
    pub fn plane(&self, sign: Sign, k: u32) -> Option<&BitVector> {
        let planes = match sign {
            Sign::Pos => &self.pos,
            Sign::Neg => &self.neg,
        };
        planes.get(k as usize)
    }

    pub fn plane_is_zero(&self, sign: Sign, k: u32) -> bool {
        self.plane(sign, k).map_or(true, BitVector::is_zero)
    }

    /// Inverse of the expansion, up to the truncation bound.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for k in 0..self.digits {
            let weight = 2f64.powi(self.exponent - k as i32);
            for i in 0..self.len {
                if self.pos[k as usize].get(i) {
                    out[i] += weight;
                }
                if self.neg[k as usize].get(i) {
                    out[i] -= weight;
                }
            }
        }
        out
    }
}

/// Expands with the vector's own top exponent.
pub fn expand(values: &[f64], digits: u32) -> Result<FixedPointExpansion> {
    expand_with_exponent(values, digits, global_exponent(values))
}

/// Expands against a caller-supplied top exponent (shared digit grid across
/// several vectors). Every `|value|` must stay below `2^{exponent+1}`.
pub fn expand_with_exponent(
    values: &[f64],
    digits: u32,
    exponent: i32,
) -> Result<FixedPointExpansion> {
    if digits == 0 {
        return Err(Error::Usage("digit count must be at least 1".into()));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("value {v} at position {i}")));
        }
    }
    let mut pos = vec![BitVector::zeros(values.len()); digits as usize];
    let mut neg = vec![BitVector::zeros(values.len()); digits as usize];
    let scale = 2f64.powi(-exponent);
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let planes = if v > 0.0 { &mut pos } else { &mut neg };
        // Exact power-of-two scaling, then greedy most-significant-first
        // digit extraction; each step stays exact in f64.
        let mut frac = v.abs() * scale;
        if !(frac < 2.0) {
            return Err(Error::Usage(format!(
                "value {v} exceeds the digit grid of exponent {exponent}"
            )));
        }
        for plane in planes.iter_mut().take(digits as usize) {
            if frac >= 1.0 {
                plane.set(i, true);
                frac -= 1.0;
            }
            frac *= 2.0;
        }
    }
    Ok(FixedPointExpansion {
        exponent,
        digits,
        len: values.len(),
        pos,
        neg,
    })
}

/// Alice's extended vector for convolution order `r`: block `k` of length `N`
/// holds her digit plane `k` (missing planes read 0).
pub fn extended_x_vector(x: &FixedPointExpansion, r: u32, sign: Sign) -> BitVector {
    let n = x.len();
    let mut out = BitVector::zeros(n * (r as usize + 1));
    for k in 0..=r {
        if let Some(plane) = x.plane(sign, k) {
            for i in 0..n {
                if plane.get(i) {
                    out.set(k as usize * n + i, true);
                }
            }
        }
    }
    out
}

/// Bob's extended vector for order `r`: block `k` holds his plane `r - k`, so
/// the plain inner product of the pair is the digit convolution
/// `sum_k sum_i x_i^{(k)} y_i^{(r-k)}`.
pub fn extended_y_vector(y: &FixedPointExpansion, r: u32, sign: Sign) -> BitVector {
    let n = y.len();
    let mut out = BitVector::zeros(n * (r as usize + 1));
    for k in 0..=r {
        if let Some(plane) = y.plane(sign, r - k) {
            for i in 0..n {
                if plane.get(i) {
                    out.set(k as usize * n + i, true);
                }
            }
        }
    }
    out
}

/// Both extended vectors for one sign pair `(sx, sy)`.
pub fn build_convolution_vectors(
    x: &FixedPointExpansion,
    y: &FixedPointExpansion,
    r: u32,
    signs: (Sign, Sign),
) -> (BitVector, BitVector) {
    (
        extended_x_vector(x, r, signs.0),
        extended_y_vector(y, r, signs.1),
    )
}

/// Bitmask of non-empty blocks in Alice's extended vector (bit `k` set when
/// her digit plane `k` has any ones). Party-local knowledge.
pub fn live_blocks_x(x: &FixedPointExpansion, r: u32, sign: Sign) -> u64 {
    let mut mask = 0u64;
    for k in 0..=r.min(63) {
        if !x.plane_is_zero(sign, k) {
            mask |= 1 << k;
        }
    }
    mask
}

/// Bitmask of non-empty blocks in Bob's extended vector (bit `k` set when his
/// plane `r - k` has any ones).
pub fn live_blocks_y(y: &FixedPointExpansion, r: u32, sign: Sign) -> u64 {
    let mut mask = 0u64;
    for k in 0..=r.min(63) {
        if !y.plane_is_zero(sign, r - k) {
            mask |= 1 << k;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn expands_two_and_a_half() {
        let e = expand(&[2.5], 3).unwrap();
        assert_eq!(e.exponent(), 1);
        let d: Vec<bool> = (0..3).map(|k| e.plane(Sign::Pos, k).unwrap().get(0)).collect();
        assert_eq!(d, vec![true, false, true]);
        assert!(e.plane(Sign::Neg, 0).unwrap().is_zero());

        let e = expand(&[-2.5], 3).unwrap();
        assert_eq!(e.exponent(), 1);
        let d: Vec<bool> = (0..3).map(|k| e.plane(Sign::Neg, k).unwrap().get(0)).collect();
        assert_eq!(d, vec![true, false, true]);
        assert!(e.plane(Sign::Pos, 0).unwrap().is_zero());
    }

    #[test]
    fn zero_vector_convention() {
        let e = expand(&[0.0, 0.0], 4).unwrap();
        assert_eq!(e.exponent(), 0);
        assert_eq!(e.reconstruct(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_top_plane_is_exact_power() {
        let e = expand(&[4.0, -4.0, 0.0], 5).unwrap();
        assert_eq!(e.exponent(), 2);
        assert_eq!(e.reconstruct(), vec![4.0, -4.0, 0.0]);
    }

    #[test]
    fn roundtrip_error_obeys_truncation_bound() {
        let mut rng = stream(31, &[0]);
        for k in [20u32, 30] {
            let values: Vec<f64> = (0..64)
                .map(|_| (rng.gen::<f64>() - 0.5) * 13.7)
                .collect();
            let e = expand(&values, k).unwrap();
            let back = e.reconstruct();
            let bound = 2f64.powi(e.exponent() - k as i32 + 1);
            for (v, b) in values.iter().zip(&back) {
                assert!((v - b).abs() <= bound, "err {} bound {bound}", (v - b).abs());
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(expand(&[f64::NAN], 3).is_err());
        assert!(expand(&[1.0], 0).is_err());
        assert!(expand_with_exponent(&[8.0], 3, 1).is_err());
    }

    #[test]
    fn order_zero_convolution_is_plane_zero_product() {
        let x = expand(&[1.0, 0.0, 1.0, 1.0], 4).unwrap();
        let y = expand(&[1.0, 1.0, 0.0, 1.0], 4).unwrap();
        let (a, b) = build_convolution_vectors(&x, &y, 0, (Sign::Pos, Sign::Pos));
        assert_eq!(a.len(), 4);
        assert_eq!(a.and_count(&b), 2);
    }

    #[test]
    fn all_ones_convolution_counts_matching_digit_pairs() {
        // x row = y = 1.0 everywhere: only plane 0 is set, so the extended
        // inner product is N at r = 0 and 0 for every higher order.
        let ones = vec![1.0; 8];
        let x = expand(&ones, 6).unwrap();
        let y = expand(&ones, 6).unwrap();
        for r in 0..6u32 {
            let (a, b) = build_convolution_vectors(&x, &y, r, (Sign::Pos, Sign::Pos));
            let expect = if r == 0 { 8 } else { 0 };
            assert_eq!(a.and_count(&b), expect, "order {r}");
        }
    }

    /// Brute-force double sum over digit pairs, straight from the definition.
    fn brute_convolution(
        x: &FixedPointExpansion,
        y: &FixedPointExpansion,
        r: u32,
        signs: (Sign, Sign),
    ) -> u64 {
        let mut total = 0u64;
        for k in 0..=r {
            for i in 0..x.len() {
                let xv = x.plane(signs.0, k).map_or(false, |p| p.get(i));
                let yv = y
                    .plane(signs.1, r - k)
                    .map_or(false, |p| p.get(i));
                if xv && yv {
                    total += 1;
                }
            }
        }
        total
    }

    #[test]
    fn convolution_identity_exhaustive() {
        let mut rng = stream(77, &[3]);
        for trial in 0..20 {
            let n = 1 + (trial % 32);
            let k = 4 + (trial % 3) as u32;
            let xs: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 7.0).collect();
            let ys: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 3.0).collect();
            let x = expand(&xs, k).unwrap();
            let y = expand(&ys, k).unwrap();
            for r in 0..=6u32 {
                for sx in Sign::BOTH {
                    for sy in Sign::BOTH {
                        let (a, b) = build_convolution_vectors(&x, &y, r, (sx, sy));
                        assert_eq!(
                            a.and_count(&b),
                            brute_convolution(&x, &y, r, (sx, sy)),
                            "n={n} r={r} {sx:?}{sy:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn signed_assembly_reproduces_the_inner_product() {
        // Combining the four sign pairs with (+,+), (-,-) positive and
        // (+,-), (-,+) negative, scaled 2^{u+v-r}, recovers sum_i x_i y_i
        // within 2^{u+v-K+2} * N on random data.
        let mut rng = stream(13, &[8]);
        let n = 24;
        let k = 18u32;
        let xs: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 9.0).collect();
        let ys: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 5.0).collect();
        let x = expand(&xs, k).unwrap();
        let y = expand(&ys, k).unwrap();
        let mut assembled = 0.0;
        for r in 0..(2 * k) {
            let weight = 2f64.powi(x.exponent() + y.exponent() - r as i32);
            for sx in Sign::BOTH {
                for sy in Sign::BOTH {
                    let (a, b) = build_convolution_vectors(&x, &y, r, (sx, sy));
                    let c = a.and_count(&b) as f64;
                    assembled += sx.factor() * sy.factor() * weight * c;
                }
            }
        }
        let direct: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let bound = 2f64.powi(x.exponent() + y.exponent() - k as i32 + 2) * n as f64;
        assert!(
            (assembled - direct).abs() <= bound,
            "err {} bound {bound}",
            (assembled - direct).abs()
        );
    }

    #[test]
    fn live_masks_match_vectors() {
        let x = expand(&[1.0, 1.0], 4).unwrap(); // only plane 0 set
        assert_eq!(live_blocks_x(&x, 3, Sign::Pos), 0b0001);
        assert_eq!(live_blocks_x(&x, 3, Sign::Neg), 0);
        let y = expand(&[1.0, 0.0], 4).unwrap();
        // Bob's block k carries plane r - k; plane 0 lands at block r.
        assert_eq!(live_blocks_y(&y, 3, Sign::Pos), 0b1000);
    }

    #[test]
    fn padding_positions_read_zero() {
        let x = expand(&[1.5, -0.75], 5).unwrap();
        let v = extended_x_vector(&x, 2, Sign::Pos);
        assert_eq!(v.len(), 6);
        for i in v.len()..16 {
            assert!(!v.get(i));
        }
    }

    #[test]
    fn roundtrip_with_enough_digits_is_tight() {
        let values = [0.3125, -1.75, 0.0078125, -3.0];
        let e = expand(&values, 30).unwrap();
        let back = e.reconstruct();
        let bound = 2f64.powi(e.exponent() - 29);
        for (v, b) in values.iter().zip(&back) {
            assert!((v - b).abs() < bound);
        }
        // Dyadic values with short expansions come back exactly.
        assert_abs_diff_eq!(back[0], 0.3125, epsilon = 0.0);
        assert_abs_diff_eq!(back[1], -1.75, epsilon = 0.0);
    }
}
