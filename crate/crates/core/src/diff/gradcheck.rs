use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Bindings, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::oracles::finite_diff_entries;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub step: f64,
    pub tol: f64,
    /// Check at most this many entries per parameter (sampled with `seed`).
    pub max_entries: Option<usize>,
    pub seed: u64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tol: 1e-4,
            max_entries: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    /// `max |analytic − numeric| / max(max |analytic|, max |numeric|)` over
    /// the checked entries of this parameter.
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub checked: usize,
    pub total: usize,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub loss: f64,
    pub tol: f64,
    pub params: Vec<ParamCheck>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.passed)
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params.iter().max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }
}

/// Compares tape gradients of the scalar built by `build` against central
/// differences, parameter by parameter.
pub fn gradcheck<F>(store: &ParamStore, build: F, opts: &GradcheckOptions) -> Result<GradcheckReport>
where
    F: Fn(&mut Tape, &Bindings) -> Result<Var>,
{
    if !(opts.step > 0.0) {
        return Err(Error::DegenerateStep);
    }
    let mut tape = Tape::new();
    let bindings = tape.bind(store, true);
    let loss_var = build(&mut tape, &bindings)?;
    let loss = tape.scalar(loss_var);
    tape.backward(loss_var)?;
    let analytic = tape.gradients(&bindings);

    let eval = |s: &ParamStore| -> Result<f64> {
        let mut t = Tape::new();
        let b = t.bind(s, false);
        let l = build(&mut t, &b)?;
        Ok(t.scalar(l))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut params = Vec::with_capacity(store.len());
    for (name, value) in store.iter() {
        let total = value.len();
        let entries: Vec<usize> = match opts.max_entries {
            Some(m) if m < total => {
                let mut e = sample(&mut rng, total, m).into_vec();
                e.sort_unstable();
                e
            }
            _ => (0..total).collect(),
        };
        let numeric = finite_diff_entries(eval, store, name, opts.step, &entries)?;
        let grad: &Array2<f64> = analytic.get(name)?;
        let flat: Vec<f64> = grad.iter().copied().collect();
        let mut max_abs_err = 0.0f64;
        let mut scale = 0.0f64;
        for (&i, &n) in entries.iter().zip(&numeric) {
            let a = flat[i];
            max_abs_err = max_abs_err.max((a - n).abs());
            scale = scale.max(a.abs()).max(n.abs());
        }
        let max_rel_err = if max_abs_err == 0.0 { 0.0 } else { max_abs_err / scale };
        params.push(ParamCheck {
            name: name.to_string(),
            max_rel_err,
            max_abs_err,
            checked: entries.len(),
            total,
            passed: max_rel_err < opts.tol,
        });
    }
    Ok(GradcheckReport {
        loss,
        tol: opts.tol,
        params,
    })
}
