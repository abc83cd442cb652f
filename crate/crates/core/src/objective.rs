//! The penalized consensus objective
//! `F(w0, w1..wN) = f0(w0) + Σₙ [ fₙ(wₙ) + λ p(w0 − wₙ) ]`
//! over the reliable workers, evaluated on full shards.

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;
use crate::vector::ModelVector;

#[derive(Debug, Clone)]
pub struct Objective {
    pub server: LossSpec,
    pub workers: Vec<LossSpec>,
    pub penalty: PenaltySpec,
}

impl Objective {
    pub fn new(server: LossSpec, workers: Vec<LossSpec>, penalty: PenaltySpec) -> Self {
        Objective {
            server,
            workers,
            penalty,
        }
    }

    pub fn dim(&self) -> usize {
        self.server.dim()
    }

    fn check(&self, w0: &ModelVector, ws: &[ModelVector]) -> Result<()> {
        if ws.len() != self.workers.len() {
            return Err(Error::Config(format!(
                "objective over {} workers given {} models",
                self.workers.len(),
                ws.len()
            )));
        }
        w0.ensure_dim(self.dim())?;
        Ok(())
    }

    pub fn value(&self, w0: &ModelVector, ws: &[ModelVector]) -> Result<f64> {
        self.check(w0, ws)?;
        let mut total = self.server.full_value(w0)?;
        for (loss, w) in self.workers.iter().zip(ws) {
            total += loss.full_value(w)?;
            total += self.penalty.weight * self.penalty.value(&w0.sub(w))?;
        }
        Ok(total)
    }

    /// Gradient blocks `(∂F/∂w0, [∂F/∂wₙ])`.
    pub fn grad(&self, w0: &ModelVector, ws: &[ModelVector]) -> Result<(ModelVector, Vec<ModelVector>)> {
        self.check(w0, ws)?;
        let mut g0 = self.server.full_grad(w0)?;
        let mut gs = Vec::with_capacity(ws.len());
        for (loss, w) in self.workers.iter().zip(ws) {
            let pg = self.penalty.weighted_grad(&w0.sub(w))?;
            g0.add_assign(&pg);
            let mut gn = loss.full_grad(w)?;
            gn.axpy(-1.0, &pg);
            gs.push(gn);
        }
        Ok((g0, gs))
    }

    /// Joint strong-convexity modulus of the smooth part.
    pub fn strong_convexity(&self) -> f64 {
        self.workers
            .iter()
            .map(LossSpec::strong_convexity)
            .fold(self.server.strong_convexity(), f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::QuadraticLoss;

    #[test]
    fn gradient_matches_finite_differences() {
        let server = LossSpec::Quadratic(QuadraticLoss::ridge(2, 0.3).unwrap());
        let w1 = LossSpec::Quadratic(
            QuadraticLoss::new(vec![2.0, 0.5, 0.5, 1.0], ModelVector::from_vec(vec![1.0, -1.0])).unwrap(),
        );
        let obj = Objective::new(server, vec![w1], PenaltySpec::huber(0.4, 0.7).unwrap());
        let w0 = ModelVector::from_vec(vec![0.2, 0.1]);
        let ws = vec![ModelVector::from_vec(vec![0.9, -0.6])];
        let (g0, gs) = obj.grad(&w0, &ws).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut p = w0.clone();
            p[i] += h;
            let mut m = w0.clone();
            m[i] -= h;
            let fd = (obj.value(&p, &ws).unwrap() - obj.value(&m, &ws).unwrap()) / (2.0 * h);
            assert!((fd - g0[i]).abs() < 1e-7);
            let mut p = ws.clone();
            p[0][i] += h;
            let mut m = ws.clone();
            m[0][i] -= h;
            let fd = (obj.value(&w0, &p).unwrap() - obj.value(&w0, &m).unwrap()) / (2.0 * h);
            assert!((fd - gs[0][i]).abs() < 1e-7);
        }
    }
}
