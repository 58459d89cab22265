//! Central finite-difference verification of tape gradients.

mod suite;

pub use suite::{run_suite, BLOCK_STEP, LOSS_STEP};

use serde::Serialize;

use crate::autodiff::{Tape, Var};
use crate::nn::{Bound, ParamSet};
use crate::tensor::{Tensor, TensorError, TensorResult};

/// Coordinates whose analytic and numeric gradients differ by less than
/// this are treated as agreeing regardless of their relative error.
pub const ABSOLUTE_FLOOR: f64 = 1e-8;

/// How many times the step may be divided by ten for one coordinate.
pub const MAX_REFINEMENTS: u32 = 3;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub name: String,
    pub max_rel_error: f64,
    /// Coordinate holding the worst relative error.
    pub worst_index: usize,
    /// Analytic and numeric derivative at `worst_index`.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub coordinates: usize,
    /// Coordinates whose difference used a step below the requested one.
    pub refined: usize,
    /// Coordinates still straddling a kink at the smallest step.
    pub straddling: usize,
    pub step: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Value and branch signature of one evaluation.
type Probe = (f64, u64);

fn probe_scalar(op: &'static str, tape: &Tape, y: Var<'_>) -> TensorResult<Probe> {
    let shape = y.shape();
    if shape.len() != 1 {
        return Err(TensorError::NotScalar { op, shape });
    }
    Ok((y.item()?, tape.branch_signature()))
}

/// Central difference for one coordinate, starting at `step` and dividing it
/// by ten while either side lands on a different smooth piece than the base
/// point. Returns the derivative and how many divisions were needed
/// (`MAX_REFINEMENTS + 1` when every step straddled a kink).
fn central_difference(
    mut eval_at: impl FnMut(f64) -> TensorResult<Probe>,
    base_signature: u64,
    step: f64,
) -> TensorResult<(f64, u32)> {
    let mut h = step;
    let mut last = 0.0;
    for k in 0..=MAX_REFINEMENTS {
        let (plus, sp) = eval_at(h)?;
        let (minus, sm) = eval_at(-h)?;
        last = (plus - minus) / (2.0 * h);
        if sp == base_signature && sm == base_signature {
            return Ok((last, k));
        }
        h /= 10.0;
    }
    Ok((last, MAX_REFINEMENTS + 1))
}

#[derive(Default)]
struct Tally {
    max_rel_error: f64,
    worst_index: usize,
    worst: (f64, f64),
    coordinates: usize,
    refined: usize,
    straddling: usize,
}

impl Tally {
    fn add(&mut self, analytic: f64, numeric: f64, refinements: u32) {
        let err = relative_error(analytic, numeric);
        if err > self.max_rel_error {
            self.max_rel_error = err;
            self.worst_index = self.coordinates;
            self.worst = (analytic, numeric);
        }
        if refinements > 0 {
            self.refined += 1;
        }
        if refinements > MAX_REFINEMENTS {
            self.straddling += 1;
        }
        self.coordinates += 1;
    }

    fn report(self, name: &str, step: f64, tol: f64) -> GradCheckReport {
        GradCheckReport {
            name: name.to_string(),
            max_rel_error: self.max_rel_error,
            worst_index: self.worst_index,
            worst_analytic: self.worst.0,
            worst_numeric: self.worst.1,
            coordinates: self.coordinates,
            refined: self.refined,
            straddling: self.straddling,
            step,
            tol,
            passed: self.max_rel_error < tol,
        }
    }
}

fn check_step(step: f64) {
    assert!(
        step > 0.0 && step <= 1e-2,
        "finite-difference step must lie in (0, 1e-2]"
    );
}

/// Compares the tape gradient of `f` at `point` with the central difference
/// `(f(x+h) − f(x−h)) / 2h` on every coordinate.
///
/// `f` receives a fresh tape and the point recorded on it as a trainable
/// leaf, and must return a scalar. A coordinate whose perturbation crosses a
/// ReLU, clamp or max kink is retried with a step ten times smaller.
pub fn grad_check<F>(name: &str, f: F, point: &Tensor, step: f64, tol: f64) -> TensorResult<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> TensorResult<Var<'t>>,
{
    check_step(step);
    let analytic = {
        let tape = Tape::new();
        let x = tape.param(point.clone());
        let y = f(&tape, x)?;
        let grads = tape.backward(y)?;
        grads.get_or_zeros(x)
    };

    let eval = |p: Tensor| -> TensorResult<Probe> {
        let tape = Tape::new();
        let x = tape.constant(p);
        let y = f(&tape, x)?;
        probe_scalar("grad_check", &tape, y)
    };
    let (_, base) = eval(point.clone())?;

    let mut tally = Tally::default();
    for i in 0..point.len() {
        let (numeric, k) = central_difference(
            |h| {
                let mut p = point.clone();
                p.data_mut()[i] += h;
                eval(p)
            },
            base,
            step,
        )?;
        tally.add(analytic.data()[i], numeric, k);
    }
    Ok(tally.report(name, step, tol))
}

/// [`grad_check`] over every scalar of one or more parameter sets.
///
/// `f` receives the sets bound on a fresh tape, in the order given: as
/// trainable leaves for the analytic pass, as constants for the numeric one.
pub fn grad_check_params<F>(name: &str, sets: &[&ParamSet], f: F, step: f64, tol: f64) -> TensorResult<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &[Bound<'t>]) -> TensorResult<Var<'t>>,
{
    check_step(step);
    let analytic: Vec<f64> = {
        let tape = Tape::new();
        let bound: Vec<_> = sets.iter().map(|s| s.bind(&tape)).collect();
        let y = f(&tape, &bound)?;
        let grads = tape.backward(y)?;
        bound
            .iter()
            .flat_map(|b| b.grads(&grads))
            .flat_map(Tensor::into_data)
            .collect()
    };

    let eval = |owned: &[ParamSet]| -> TensorResult<Probe> {
        let tape = Tape::new();
        let bound: Vec<_> = owned.iter().map(|s| s.bind_frozen(&tape)).collect();
        let y = f(&tape, &bound)?;
        probe_scalar("grad_check_params", &tape, y)
    };

    let mut owned: Vec<ParamSet> = sets.iter().map(|s| (*s).clone()).collect();
    let (_, base) = eval(&owned)?;
    let mut tally = Tally::default();
    for si in 0..owned.len() {
        for ti in 0..owned[si].len() {
            for k in 0..owned[si].tensors()[ti].len() {
                let original = owned[si].tensors()[ti].data()[k];
                let (numeric, refinements) = central_difference(
                    |h| {
                        owned[si].tensors_mut()[ti].data_mut()[k] = original + h;
                        let r = eval(&owned);
                        owned[si].tensors_mut()[ti].data_mut()[k] = original;
                        r
                    },
                    base,
                    step,
                )?;
                tally.add(analytic[tally.coordinates], numeric, refinements);
            }
        }
    }
    Ok(tally.report(name, step, tol))
}

/// `|a − b| / max(|a|, |b|)`, or zero when the two agree to within
/// [`ABSOLUTE_FLOOR`].
pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff < ABSOLUTE_FLOOR {
        return 0.0;
    }
    diff / a.abs().max(b.abs())
}
