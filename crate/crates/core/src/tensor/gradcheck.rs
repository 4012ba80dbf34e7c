use super::Matrix;

/// Outcome of a finite-difference gradient comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose one-sided slopes disagree, i.e. lying within `h`
    /// of a non-differentiable point.
    pub skipped: usize,
}

const ABS_FLOOR: f64 = 1e-6;
const KINK_TOL: f64 = 1e-3;

/// Compares the analytic gradient returned by `f` with central differences
/// of step `h` on every coordinate of every input.
pub fn grad_check<F>(f: F, inputs: &[Matrix], h: f64) -> GradCheckReport
where
    F: Fn(&[Matrix]) -> (f64, Vec<Matrix>),
{
    let (f0, analytic) = f(inputs);
    assert_eq!(analytic.len(), inputs.len(), "one gradient per input");
    let mut work = inputs.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for k in 0..inputs.len() {
        for i in 0..inputs[k].len() {
            let orig = inputs[k].data()[i];
            work[k].data_mut()[i] = orig + h;
            let fp = f(&work).0;
            work[k].data_mut()[i] = orig - h;
            let fm = f(&work).0;
            work[k].data_mut()[i] = orig;
            let central = (fp - fm) / (2.0 * h);
            let forward = (fp - f0) / h;
            let backward = (f0 - fm) / h;
            if (forward - backward).abs() > KINK_TOL * central.abs().max(1.0) {
                report.skipped += 1;
                continue;
            }
            let a = analytic[k].data()[i];
            let err = (a - central).abs() / a.abs().max(central.abs()).max(ABS_FLOOR);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_exact() {
        let x = Matrix::new(1, 3, vec![0.5, -2.0, 3.0]).unwrap();
        let w = [1.5, -0.25, 2.0];
        let r = grad_check(
            |xs| {
                let v = xs[0].data().iter().zip(w).map(|(a, b)| a * b).sum();
                (v, vec![Matrix::new(1, 3, w.to_vec()).unwrap()])
            },
            &[x],
            1e-5,
        );
        assert_eq!(r.checked, 3);
        assert!(r.max_rel_error < 1e-9);
    }

    #[test]
    fn relu_kink_excluded() {
        let x = Matrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let r = grad_check(
            |xs| {
                let d = xs[0].data();
                let v = d.iter().map(|v| v.max(0.0)).sum();
                let g = d.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
                (v, vec![Matrix::new(1, 2, g).unwrap()])
            },
            &[x],
            1e-5,
        );
        assert_eq!((r.checked, r.skipped), (1, 1));
        assert!(r.max_rel_error < 1e-9);
    }
}
