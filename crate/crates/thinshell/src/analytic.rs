//! Analytic scalar functions of chart coordinates, in the three forms
//! the library consumes: parsed expressions, native closures (catalog
//! surfaces), and seeded trigonometric polynomials (random test data).

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::jet::{Jet, JetError, JetPoint};

pub type ClosureFn = dyn Fn(&JetPoint) -> Result<Jet, JetError> + Send + Sync;

/// A scalar function of the chart coordinates, evaluable on jets.
#[derive(Clone)]
pub enum AnalyticFn {
    Expr(Expr),
    Closure(Arc<ClosureFn>),
    Trig(TrigPoly),
}

impl fmt::Debug for AnalyticFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticFn::Expr(e) => write!(f, "Expr({e})"),
            AnalyticFn::Closure(_) => write!(f, "Closure(..)"),
            AnalyticFn::Trig(t) => write!(f, "Trig({t:?})"),
        }
    }
}

impl AnalyticFn {
    pub fn closure(
        f: impl Fn(&JetPoint) -> Result<Jet, JetError> + Send + Sync + 'static,
    ) -> AnalyticFn {
        AnalyticFn::Closure(Arc::new(f))
    }

    pub fn eval(&self, point: &JetPoint) -> Result<Jet, JetError> {
        match self {
            AnalyticFn::Expr(e) => e.eval_jet(point.jets()).map_err(|err| err.source),
            AnalyticFn::Closure(f) => f(point),
            AnalyticFn::Trig(t) => Ok(t.eval_jet(point)),
        }
    }
}

impl From<Expr> for AnalyticFn {
    fn from(e: Expr) -> Self {
        AnalyticFn::Expr(e)
    }
}

/// One sinusoidal term `amplitude * sin(Σ freq_k u_k + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub freqs: Vec<i32>,
    pub phase: f64,
}

/// A finite sum of sinusoidal terms, optionally plus a linear part.
/// Smooth, bounded, and cheap — the workhorse for seeded random fields
/// and perturbed surfaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    /// Seeded random polynomial in `nvars` variables with `nterms`
    /// sinusoidal terms, integer frequencies in `[-max_freq, max_freq]`,
    /// and amplitudes bounded by `amp`.
    pub fn random(
        rng: &mut ChaCha8Rng,
        nvars: usize,
        nterms: usize,
        max_freq: i32,
        amp: f64,
    ) -> TrigPoly {
        let terms = (0..nterms)
            .map(|_| TrigTerm {
                amplitude: rng.random_range(-amp..amp),
                freqs: (0..nvars)
                    .map(|_| rng.random_range(-max_freq..=max_freq))
                    .collect(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        TrigPoly {
            constant: 0.0,
            linear: vec![0.0; nvars],
            terms,
        }
    }

    pub fn eval_jet(&self, point: &JetPoint) -> Jet {
        let space = point.space();
        let mut acc = Jet::constant(space, self.constant);
        for (i, &c) in self.linear.iter().enumerate() {
            if c != 0.0 {
                acc = &acc + &point.jets()[i].scale(c);
            }
        }
        for term in &self.terms {
            let mut arg = Jet::constant(space, term.phase);
            for (i, &f) in term.freqs.iter().enumerate() {
                if f != 0 {
                    arg = &arg + &point.jets()[i].scale(f as f64);
                }
            }
            acc = &acc + &arg.sin().scale(term.amplitude);
        }
        acc
    }

    pub fn eval_f64(&self, u: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (i, &c) in self.linear.iter().enumerate() {
            acc += c * u[i];
        }
        for term in &self.terms {
            let arg: f64 = term.phase
                + term
                    .freqs
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| f as f64 * u[i])
                    .sum::<f64>();
            acc += term.amplitude * arg.sin();
        }
        acc
    }
}

/// Deterministic ChaCha stream for a named purpose; sub-seeding keeps
/// independently seeded generators decorrelated.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
