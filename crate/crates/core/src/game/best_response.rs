//! Closed-form best responses.

use crate::channel::Protocol;
use crate::error::{Error, Result};
use crate::metrics::LinkCoefficients;
use crate::scalar::Scalar;

/// Relative width of the band around `C = 0` in which the AF best response
/// is taken to be exactly one half.
pub const AF_EQUAL_SPLIT_TOL: f64 = 1e-12;

fn check_finite<T: Scalar>(c: &LinkCoefficients<T>, w: T) -> Result<()> {
    if [c.x, c.y, c.z, w].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "non-finite coefficients for link {}: X = {}, Y = {}, Z = {}, W = {}",
            c.link, c.x, c.y, c.z, w
        )))
    }
}

/// `(C, D)` of the AF rate derivative numerator:
/// `C = (X + Y)(W + 1) - Z`, `D = (X + Y + 1)(W + 1)`.
pub fn c_d_of<T: Scalar>(c: &LinkCoefficients<T>, w: T) -> (T, T) {
    let w1 = w + T::one();
    ((c.x + c.y) * w1 - c.z, (c.x + c.y + T::one()) * w1)
}

/// `kappa(rho) = C rho^2 - 2 D rho + D`. Its sign is the sign of the AF
/// rate's derivative in the link's own ratio.
pub fn kappa<T: Scalar>(rho: T, c: T, d: T) -> T {
    c * rho * rho - T::lit(2.0) * d * rho + d
}

/// Rate-maximising ratio of an AF link facing second-hop INR `w`.
///
/// This is the root of `kappa` inside `(0, 1)`, written in the form
/// `sqrt(D) / (sqrt(D) + sqrt(D - C))` with `D - C = Z + W + 1`, which is
/// valid for either sign of `C`.
pub fn best_response_af<T: Scalar>(c: &LinkCoefficients<T>, w: T) -> Result<T> {
    check_finite(c, w)?;
    let (cc, d) = c_d_of(c, w);
    if cc.abs() <= T::lit(AF_EQUAL_SPLIT_TOL) * c.z.max(T::one()) {
        return Ok(T::lit(0.5));
    }
    let sd = d.sqrt();
    Ok(sd / (sd + (c.z + w + T::one()).sqrt()))
}

/// Rate-maximising ratio of a DF link facing second-hop INR `w`: the point
/// where both hop SINRs are equal.
///
/// That point is the smaller root of
/// `l(rho) = YZ rho^2 - (X(W+1) + YZ + Z) rho + X(W+1)`. It is evaluated as
/// `2 X(W+1) / (b + sqrt(disc))`, which avoids cancellation when `YZ` is small
/// and reduces to `X(W+1) / (X(W+1) + Z)` when `Y = 0`.
///
/// Above one half the complement `s = 1 - rho` is computed instead, as the
/// positive root of `YZ s^2 + (X(W+1) - YZ + Z) s - Z`, so that the first-hop
/// factor `1 - rho` keeps full relative precision when it is tiny.
pub fn best_response_df<T: Scalar>(c: &LinkCoefficients<T>, w: T) -> Result<T> {
    check_finite(c, w)?;
    let rho = df_equal_hops(c, w);
    if !rho.is_finite() {
        return Err(Error::Numeric(format!("DF best response of link {} is not finite", c.link)));
    }
    Ok(rho)
}

/// [`best_response_df`] without the input checks.
pub(crate) fn df_equal_hops<T: Scalar>(c: &LinkCoefficients<T>, w: T) -> T {
    let two = T::lit(2.0);
    let xw = c.x * (w + T::one());
    let yz = c.y * c.z;
    let b = xw + yz + c.z;
    let skew = xw - yz + c.z;
    let disc = skew * skew + T::lit(4.0) * c.y * c.z * c.z;
    let root = disc.sqrt();
    let mut rho = two * xw / (b + root);
    if rho > T::lit(0.5) {
        let s = if skew > T::zero() { two * c.z / (skew + root) } else { (root - skew) / (two * yz) };
        rho = T::one() - s;
    }
    rho
}

/// Best response of link `coeffs.link` to the profile `rho`, dispatched on
/// its relaying protocol. Only the other links' entries of `rho` are read.
pub fn best_response<T: Scalar>(coeffs: &LinkCoefficients<T>, protocol: Protocol, rho: &[T]) -> Result<T> {
    let w = coeffs.w_of(rho);
    match protocol {
        Protocol::Af => best_response_af(coeffs, w),
        Protocol::Df => best_response_df(coeffs, w),
    }
}

/// The vector best-response map `B(rho)`.
///
/// `rho` may be any non-negative vector; see [`LinkCoefficients::w_of`].
pub fn best_response_map<T: Scalar>(
    coeffs: &[LinkCoefficients<T>],
    protocols: &[Protocol],
    rho: &[T],
) -> Result<Vec<T>> {
    coeffs
        .iter()
        .zip(protocols)
        .map(|(c, p)| best_response(c, *p, rho))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixture_two_link_with;
    use crate::metrics::{coefficients, sinr_df};
    use approx::assert_relative_eq;

    fn coeff(x: f64, y: f64, z: f64) -> LinkCoefficients<f64> {
        LinkCoefficients { link: 0, x, y, z, w_weights: vec![0.0] }
    }

    /// Ascending scan; the first maximum wins.
    fn grid_argmax(f: impl Fn(f64) -> f64, step: f64) -> f64 {
        let k = (1.0 / step).round() as usize;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=k {
            let r = i as f64 / k as f64;
            let v = f(r);
            if v > best.1 {
                best = (r, v);
            }
        }
        best.0
    }

    #[test]
    fn af_equal_split_branch() {
        // (X + Y)(W + 1) = Z.
        assert_eq!(best_response_af(&coeff(1.0, 1.0, 2.0), 0.0).unwrap(), 0.5);
    }

    #[test]
    fn af_closed_form_value() {
        let k = coeff(3.0, 0.0, 1.0);
        let br = best_response_af(&k, 0.0).unwrap();
        assert_relative_eq!(br, 2.0 / (2.0 + 2f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(br, 0.585786437626905, max_relative = 1e-12);
        let grid = grid_argmax(|r| k.utility(Protocol::Af, r, 0.0), 1e-5);
        assert!((grid - br).abs() <= 1e-5);
    }

    #[test]
    fn af_fixture_against_grid() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Af, Protocol::Af]);
        let k = coefficients(&s, &c).unwrap();
        let rho = [0.0, 0.7];
        let w = k[0].w_of(&rho);
        let br = best_response_af(&k[0], w).unwrap();
        let grid = grid_argmax(|r| k[0].utility(Protocol::Af, r, w), 1e-4);
        assert!((grid - br).abs() <= 1e-4, "closed form {br} vs grid {grid}");
    }

    #[test]
    fn kappa_identities() {
        let k = coeff(4.0, 2.5, 3.0);
        for w in [0.0, 0.3, 7.0] {
            let (c, d) = c_d_of(&k, w);
            assert_eq!(kappa(0.0, c, d), d);
            assert_relative_eq!(kappa(1.0, c, d), c - d, max_relative = 1e-15);
            assert_relative_eq!(c - d, -(k.z + w + 1.0), max_relative = 1e-15);
            let br = best_response_af(&k, w).unwrap();
            assert!(kappa(br, c, d).abs() <= 1e-9 * d);
        }
    }

    #[test]
    fn df_linear_case() {
        assert_eq!(best_response_df(&coeff(3.0, 0.0, 3.0), 0.0).unwrap(), 0.5);
        let k = coeff(2.0, 0.0, 5.0);
        assert_relative_eq!(best_response_df(&k, 1.0).unwrap(), 4.0 / 9.0, max_relative = 1e-15);
    }

    #[test]
    fn df_closed_form_value() {
        let k = coeff(2.0, 1.0, 2.0);
        let br = best_response_df(&k, 0.0).unwrap();
        assert_relative_eq!(br, (6.0 - 20f64.sqrt()) / 4.0, max_relative = 1e-14);
        assert_relative_eq!(br, 0.381966011250105, max_relative = 1e-12);
        let d = sinr_df(&k, br, 0.0);
        assert!((d.first_hop - d.second_hop).abs() <= 1e-12);
    }

    #[test]
    fn df_matches_textbook_root_formula() {
        for (x, y, z, w) in [(2.0, 1.0, 2.0, 0.0), (40.0, 3.0, 100.0, 2.0), (0.5, 8.0, 0.1, 0.3)] {
            let k = coeff(x, y, z);
            let textbook = ((x * w + x + y * z + z) - ((x * w + x - y * z + z).powi(2) + 4.0 * y * z * z).sqrt())
                / (2.0 * y * z);
            assert_relative_eq!(best_response_df(&k, w).unwrap(), textbook, max_relative = 1e-10);
        }
    }

    #[test]
    fn df_fixture_equality() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Df, Protocol::Df]);
        let k = coefficients(&s, &c).unwrap();
        let rho = [0.0, 0.3];
        let w = k[0].w_of(&rho);
        let br = best_response_df(&k[0], w).unwrap();
        let d = sinr_df(&k[0], br, w);
        assert!((d.first_hop - d.second_hop).abs() <= 1e-9 * d.first_hop);
    }

    #[test]
    fn df_near_one_keeps_hop_equality() {
        let k = coeff(1.1233110437339159e7, 1.4664939717182392e3, 6.146681680377206e5);
        let w = 3.4743527833724986e6;
        let br = best_response_df(&k, w).unwrap();
        assert_eq!(br, 0.9999999842501407);
        let d = sinr_df(&k, br, w);
        assert!((d.first_hop - d.second_hop).abs() / d.first_hop.max(1.0) <= 1e-9);
    }

    #[test]
    fn df_complement_branch_with_negative_skew() {
        // YZ dominates: skew < 0 while the root stays above one half.
        for (x, y, z, w) in [(50.0, 40.0, 2.0, 0.0), (100.0, 150.0, 1.0, 0.0), (400.0, 200.0, 4.0, 0.5)] {
            let k = coeff(x, y, z);
            let br = best_response_df(&k, w).unwrap();
            let textbook = ((x * w + x + y * z + z) - ((x * w + x - y * z + z).powi(2) + 4.0 * y * z * z).sqrt())
                / (2.0 * y * z);
            assert!(br > 0.5 && x * (w + 1.0) - y * z + z < 0.0);
            assert_relative_eq!(br, textbook, max_relative = 1e-10);
        }
    }

    #[test]
    fn non_finite_inputs_fail() {
        let k = coeff(f64::INFINITY, 1.0, 1.0);
        assert!(matches!(best_response_af(&k, 0.0), Err(Error::Numeric(_))));
        assert!(matches!(best_response_df(&k, 0.0), Err(Error::Numeric(_))));
        assert!(best_response_af(&coeff(1.0, 1.0, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn dispatch_identity() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Df, Protocol::Af]);
        let k = coefficients(&s, &c).unwrap();
        let rho = [0.25, 0.6];
        let b = best_response_map(&k, s.protocols(), &rho).unwrap();
        assert_eq!(b[0], best_response_df(&k[0], k[0].w_of(&rho)).unwrap());
        assert_eq!(b[1], best_response_af(&k[1], k[1].w_of(&rho)).unwrap());
    }

    #[test]
    fn f32_agrees_with_f64() {
        let k64 = coeff(12.0, 3.0, 40.0);
        let k32 = LinkCoefficients { link: 0, x: 12.0f32, y: 3.0, z: 40.0, w_weights: vec![0.0] };
        for w in [0.0, 1.5, 20.0] {
            let a = best_response_af(&k32, w as f32).unwrap() as f64;
            let d = best_response_df(&k32, w as f32).unwrap() as f64;
            assert!((a - best_response_af(&k64, w).unwrap()).abs() < 1e-6);
            assert!((d - best_response_df(&k64, w).unwrap()).abs() < 1e-6);
        }
    }
}
