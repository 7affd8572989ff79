//! Dormand–Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, h_init: 1e-3, h_min: 1e-14, h_max: f64::INFINITY }
    }
}

/// Why an integration stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Stop {
    Finished,
    /// The observer asked to stop; carries its reason.
    Halted(String),
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `y' = f(t, y)` from `t0` to `t_end`. The observer sees every
/// accepted step and may halt the run by returning `Some(reason)`.
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions, mut observe: O) -> Result<Stop>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    O: FnMut(f64, &[f64]) -> Option<String>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.h_init.min(t_end - t0).max(opts.h_min);
    if let Some(r) = observe(t, &y) {
        return Ok(Stop::Halted(r));
    }
    let mut k: Vec<Vec<f64>> = vec![f(t, &y)?];
    while t < t_end {
        h = h.min(t_end - t).min(opts.h_max);
        k.truncate(1);
        let mut stage = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                stage[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k.push(f(t + C[s] * h, &stage)?);
        }
        let y5: Vec<f64> = (0..n).map(|i| y[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| {
                let e = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let err = err.sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
            // first-same-as-last
            let last = k.pop().expect("seven stages");
            k = vec![last];
            if let Some(r) = observe(t, &y) {
                return Ok(Stop::Halted(r));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < opts.h_min {
            return Err(Error::Stiff { time: t, step: h });
        }
    }
    Ok(Stop::Finished)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut last = (0.0, vec![]);
        dopri5(|_, y| Ok(vec![-y[0], y[0]]), 0.0, &[1.0, 0.0], 5.0, &OdeOptions::default(), |t, y| {
            last = (t, y.to_vec());
            None
        })
        .unwrap();
        assert_eq!(last.0, 5.0);
        assert!((last.1[0] - (-5.0f64).exp()).abs() < 1e-8);
        assert!((last.1[1] - (1.0 - (-5.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn observer_halts() {
        let stop = dopri5(|_, _| Ok(vec![1.0]), 0.0, &[0.0], 10.0, &OdeOptions::default(), |_, y| (y[0] > 2.0).then(|| "big".to_string())).unwrap();
        assert_eq!(stop, Stop::Halted("big".into()));
    }
}
