//! Reconstruction quality metrics.

use osga::Element;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsnrScale {
    /// Pixel values in [0,1]; peak value 1.
    Unit,
    /// 8-bit convention; peak value 255.
    Byte,
}

/// Improvement in signal-to-noise ratio of a reconstruction x over the
/// degraded observation y, both measured against the clean signal x0:
/// 20·log10(‖y−x0‖ / ‖x−x0‖). Positive means x is closer to x0 than y was.
pub fn metric_isnr(x: &Element, y: &Element, x0: &Element) -> f64 {
    let recon = (x - x0).norm();
    let degraded = (y - x0).norm();
    if recon == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (degraded / recon).log10()
}

/// Peak signal-to-noise ratio 20·log10(peak·√count / ‖x−x0‖), +∞ for an
/// exact reconstruction.
pub fn metric_psnr(x: &Element, x0: &Element, scale: PsnrScale) -> f64 {
    let err = (x - x0).norm();
    if err == 0.0 {
        return f64::INFINITY;
    }
    let peak = match scale {
        PsnrScale::Unit => 1.0,
        PsnrScale::Byte => 255.0,
    };
    let count = x.len() as f64;
    20.0 * (peak * count.sqrt() / err).log10()
}

/// Mean squared error (1/count)·‖x−x0‖².
pub fn metric_mse(x: &Element, x0: &Element) -> f64 {
    let d = x - x0;
    d.dot(&d) / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use osga::Shape;

    #[test]
    fn isnr_is_zero_when_nothing_changed() {
        let x0 = Element::from_vec(vec![1.0, 2.0, 3.0]);
        let y = Element::from_vec(vec![1.5, 2.0, 2.5]);
        assert_eq!(metric_isnr(&y, &y, &x0), 0.0);
    }

    #[test]
    fn halving_the_error_adds_six_db() {
        let x0 = Element::from_vec(vec![0.0, 0.0]);
        let y = Element::from_vec(vec![2.0, 0.0]);
        let x = Element::from_vec(vec![1.0, 0.0]);
        let gain = metric_isnr(&x, &y, &x0);
        assert!((gain - 20.0 * 2.0_f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn psnr_hand_value_and_infinity_marker() {
        // ||X - X0||_F = sqrt(mn)/10 gives exactly 20 dB at unit scale.
        let (rows, cols) = (4, 9);
        let x0 = Element::zeros(Shape::matrix(rows, cols));
        let x = Element::filled(Shape::matrix(rows, cols), 0.1);
        assert!((metric_psnr(&x, &x0, PsnrScale::Unit) - 20.0).abs() < 1e-12);
        assert!(metric_psnr(&x0, &x0, PsnrScale::Unit).is_infinite());
        // The byte convention adds 20*log10(255).
        let byte = metric_psnr(&x, &x0, PsnrScale::Byte);
        assert!((byte - 20.0 - 20.0 * 255.0_f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn psnr_increases_as_error_shrinks() {
        let x0 = Element::zeros(Shape::matrix(3, 3));
        let far = Element::filled(Shape::matrix(3, 3), 0.5);
        let near = Element::filled(Shape::matrix(3, 3), 0.1);
        assert!(metric_psnr(&near, &x0, PsnrScale::Unit) > metric_psnr(&far, &x0, PsnrScale::Unit));
    }

    #[test]
    fn mse_hand_values() {
        let x0 = Element::from_vec(vec![0.0, 0.0]);
        assert_eq!(metric_mse(&x0, &x0), 0.0);
        let x = Element::from_vec(vec![1.0, 1.0]);
        assert_eq!(metric_mse(&x, &x0), 1.0);

        let a = Element::from_vec(vec![0.5, -1.5, 2.0]);
        let b = Element::from_vec(vec![1.0, 0.5, -1.0]);
        let direct: f64 =
            a.data().iter().zip(b.data()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / 3.0;
        assert!((metric_mse(&a, &b) - direct).abs() < 1e-15);
    }
}
