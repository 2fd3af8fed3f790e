use std::ops::Range;

use num_complex::Complex64;

use crate::neural::{Tape, Var};

/// Early-iteration weights `w_t = t / sum_{i<T} i` for `t = 1..T-1`.
pub fn loss_weights(t_max: usize) -> Vec<f64> {
    let total: usize = (1..t_max).sum();
    (1..t_max).map(|t| t as f64 / total as f64).collect()
}

fn band_error(xhat: &[Complex64], x0: &[Complex64], band: &Range<usize>) -> f64 {
    band.clone().map(|i| (x0[i] - xhat[i]).norm_sqr()).sum()
}

/// `eta L_final + (1 - eta) L_early` over band `band`.
///
/// `trajectory[t - 1]` is the estimate after iteration `t`; `L_final` uses
/// the last entry and `L_early` the preceding ones.
pub fn loss_total(trajectory: &[Vec<Complex64>], x0: &[Complex64], band: Range<usize>, eta: f64) -> f64 {
    let Some((last, early)) = trajectory.split_last() else {
        return 0.0;
    };
    let l_final = band_error(last, x0, &band);
    let l_early: f64 =
        loss_weights(trajectory.len()).iter().zip(early).map(|(w, x)| w * band_error(x, x0, &band)).sum();
    eta * l_final + (1.0 - eta) * l_early
}

/// Same loss recorded on a tape; `mask` is the band indicator.
pub fn loss_on_tape(tape: &mut Tape, trajectory: &[Var], x0: &[Complex64], mask: &[f64], eta: f64) -> Var {
    let target = tape.complex_constant(x0);
    let m = tape.constant(mask.to_vec());
    let err = |tape: &mut Tape, x: Var| {
        let d = tape.sub(x, target);
        let md = tape.cmul_real(d, m);
        tape.sum_sq(md)
    };
    let (last, early) = trajectory.split_last().expect("non-empty trajectory");
    let lf = err(tape, *last);
    let mut total = tape.affine(lf, eta, 0.0);
    for (w, x) in loss_weights(trajectory.len()).iter().zip(early) {
        let e = err(tape, *x);
        let e = tape.affine(e, (1.0 - eta) * w, 0.0);
        total = tape.add(total, e);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn weights() {
        assert!(loss_weights(1).is_empty());
        assert_eq!(loss_weights(2), vec![1.0]);
        let w = loss_weights(3);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15 && (w[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((loss_weights(5).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_iteration_has_no_early_term() {
        let x0 = vec![c(1.0), c(2.0), c(9.0)];
        let traj = vec![vec![c(0.0), c(2.0), c(0.0)]];
        assert_eq!(loss_total(&traj, &x0, 0..2, 0.75), 0.75);
        assert_eq!(loss_total(&[x0.clone(), x0.clone()], &x0, 0..3, 0.75), 0.0);
    }

    #[test]
    fn tape_loss_matches_plain_loss() {
        let x0 = vec![c(1.0), Complex64::new(0.5, -1.0), c(3.0), c(-2.0)];
        let traj = vec![
            vec![c(0.0), c(2.0), c(1.0), c(4.0)],
            vec![c(0.5), c(1.0), c(2.0), c(0.0)],
            vec![c(0.9), Complex64::new(0.4, -0.9), c(0.0), c(7.0)],
        ];
        let mut tape = Tape::new();
        let vars: Vec<Var> = traj.iter().map(|x| tape.complex_constant(x)).collect();
        let l = loss_on_tape(&mut tape, &vars, &x0, &[1.0, 1.0, 1.0, 0.0], 0.75);
        let plain = loss_total(&traj, &x0, 0..3, 0.75);
        assert!((tape.scalar_value(l) - plain).abs() < 1e-12);
    }
}
